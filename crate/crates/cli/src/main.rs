use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gigareg::synth::CaseParams;
use gigareg_cli::{cmd_evaluate, cmd_register, cmd_synth, cmd_warp, RegisterOptions, SynthOptions, WarpOptions};

#[derive(Parser)]
#[command(name = "gigareg", version, about = "Whole-slide image registration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register every pair of a run manifest.
    Register {
        manifest: PathBuf,
        /// Pipeline config JSON; overrides the manifest's.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Pairs processed concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// External matcher command used instead of the classical detector.
        #[arg(long)]
        adapter: Option<String>,
        /// RANSAC seed of the initial alignment.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Warp a source image with saved registration artifacts.
    Warp {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        affine: PathBuf,
        #[arg(long)]
        field: PathBuf,
        /// Output pyramid directory.
        #[arg(long)]
        out: PathBuf,
        /// Longer side of the output's full-resolution level.
        #[arg(long)]
        level_side: usize,
    },
    /// Landmark errors of a registered manifest.
    Evaluate { manifest: PathBuf },
    /// Generate synthetic cases with ground truth.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 512)]
        size: usize,
        /// Rotation in degrees.
        #[arg(long, default_value_t = 0.0)]
        rot: f64,
        /// Peak deformation in pixels.
        #[arg(long, default_value_t = 10.0)]
        deform: f64,
        #[arg(long, default_value_t = 3)]
        blobs: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Register { manifest, config, jobs, adapter, seed } => {
            let status = cmd_register(&manifest, &RegisterOptions { config, jobs, adapter, seed })?;
            Ok(status.exit_code())
        }
        Command::Warp { source, affine, field, out, level_side } => {
            cmd_warp(&WarpOptions { source, affine, field, out, level_side })?;
            Ok(0)
        }
        Command::Evaluate { manifest } => Ok(cmd_evaluate(&manifest)?.exit_code()),
        Command::Synth { out, seed, size, rot, deform, blobs, count } => {
            let params = CaseParams {
                seed,
                size,
                rot_deg: rot,
                max_deform_px: deform,
                n_blobs: blobs,
                ..CaseParams::default()
            };
            cmd_synth(&SynthOptions { out, count, params })?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
