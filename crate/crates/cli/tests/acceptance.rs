#![allow(clippy::needless_range_loop, clippy::unwrap_used)]
//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. `ACCEPTANCE_ONLY=3,5` runs a subset.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use gigareg::evaluation::{aggregate, median};
use gigareg::features::external_match;
use gigareg::geometry::{AffineTransform, Point2};
use gigareg::imaging::pyramid::write_pyramid;
use gigareg::imaging::{ImagePlane, PyramidImage, RgbImage};
use gigareg::initial::{run_initial_alignment, Backend, InitialAlignmentConfig};
use gigareg::nonrigid::{diffusive_reg, folding_ratio, local_ncc, register_multilevel, ComposedTransform};
use gigareg::pipeline::{register_pair, warp_monolithic, Frames, WarpPlan};
use gigareg::synth::{generate, landmark_grid, CaseParams, SyntheticCase};
use gigareg::{DisplacementField, Error, NonrigidConfig, PipelineConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use common::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- helpers

fn angle_error(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Per-landmark distance between `map(target)` and the true source position.
fn landmark_errors(c: &SyntheticCase, map: impl Fn(Point2) -> Point2) -> Vec<f64> {
    c.landmarks_tgt
        .points
        .iter()
        .zip(&c.landmarks_src.points)
        .map(|(&t, &s)| map(t).distance(s))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Rotations covering the whole 30-degree grid over 20 cases.
fn grid_rotation(i: usize) -> f64 {
    ((7 * i) % 12) as f64 * 30.0
}

fn rigid_cases() -> Vec<SyntheticCase> {
    (0..20)
        .map(|i| {
            generate(&CaseParams {
                seed: 100 + i as u64,
                size: 512,
                rot_deg: grid_rotation(i),
                max_deform_px: 0.0,
                ..CaseParams::default()
            })
        })
        .collect()
}

struct AffineOutcome {
    rot_true: f64,
    rot_err: f64,
    reduction: f64,
}

fn affine_outcomes(cases: &[SyntheticCase], cfg: &InitialAlignmentConfig) -> Vec<AffineOutcome> {
    cases
        .iter()
        .map(|c| {
            let (a, _) = run_initial_alignment(&c.source, &c.target, cfg).unwrap();
            let before = median(&landmark_errors(c, |p| p));
            let after = median(&landmark_errors(c, |p| a.apply(p)));
            AffineOutcome {
                rot_true: c.params.rot_deg,
                rot_err: angle_error(a.rotation_deg(), c.true_affine.rotation_deg()),
                reduction: 1.0 - after / before,
            }
        })
        .collect()
}

// ---------------------------------------------------------------- criteria

fn gradients() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let (w, h) = (rng.gen_range(5..=24), rng.gen_range(5..=24));
        let a = random_plane(&mut rng, w, h);
        let b = random_plane(&mut rng, w, h);
        worst = worst.max(ncc_gradient_error(&a, &b, [3, 5, 7][i % 3]));
        let (fw, fh) = (rng.gen_range(2..=32), rng.gen_range(2..=32));
        let u = random_field(&mut rng, fw, fh, 3.0);
        worst = worst.max(reg_gradient_error(&u));
        let n = rng.gen_range(8..=16);
        let s = smooth_plane(&mut rng, n, n);
        let t = smooth_plane(&mut rng, n, n);
        let u = away_from_edges(&random_field(&mut rng, n, n, 0.8));
        worst = worst.max(objective_gradient_error(&s, &t, &u, rng.gen_range(0.0..2.0), 5));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < 1e-4 && secs < 60.0,
        format!("150 instances, worst relative error {worst:.2e} (< 1e-4), {secs:.1}s (< 60s)"),
    )
}

fn oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = [0.0f64; 5];
    for i in 0..20 {
        let (w, h) = (rng.gen_range(3..=16), rng.gen_range(3..=16));
        let a = random_plane(&mut rng, w, h);
        let b = random_plane(&mut rng, w, h);
        let win = [3, 5, 7][i % 3];
        worst[0] = worst[0].max((local_ncc(&a, &b, win).unwrap().cost - ncc_oracle(&a, &b, win)).abs());

        let u = random_field(&mut rng, w, h, 4.0);
        worst[1] = worst[1].max((diffusive_reg(&u).value - reg_oracle(&u)).abs());
        let u = random_field(&mut rng, w, h, [0.3, 1.0, 3.0][i % 3]);
        worst[2] = worst[2].max((folding_ratio(&u) - folding_oracle(&u)).abs());

        let n = rng.gen_range(3..=30);
        let tg: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..500.0), rng.gen_range(0.0..500.0))).collect();
        let sr: Vec<(f64, f64)> = tg
            .iter()
            .map(|&(x, y)| (1.05 * x + 0.2 * y - 9.0 + rng.gen_range(-1.0..1.0), -0.1 * x + 0.95 * y + 30.0 + rng.gen_range(-1.0..1.0)))
            .collect();
        let got = gigareg::features::estimate_affine_least_squares(&match_set(&tg, &sr)).unwrap();
        let want = ls_oracle(&tg, &sr).unwrap();
        for r in 0..2 {
            for c in 0..3 {
                let scale = if c == 2 { 500.0 } else { 1.0 };
                worst[3] = worst[3].max((got.m[r][c] - want[r][c]).abs() / scale);
            }
        }

        let pairs: Vec<Vec<f64>> = (0..rng.gen_range(1..=10))
            .map(|_| (0..rng.gen_range(1..=25)).map(|_| rng.gen_range(0.0..40.0)).collect())
            .collect();
        let g = aggregate(&pair_evaluations(&pairs)).unwrap().tre;
        let o = aggregate_oracle(&pairs);
        for (x, y) in [g.med_med, g.med_avg, g.avg_med, g.avg_avg].iter().zip(o) {
            worst[4] = worst[4].max((x - y).abs());
        }
    }
    let max = worst.iter().cloned().fold(0.0, f64::max);
    verdict(
        max < 1e-9,
        format!(
            "20 instances each; max |diff| ncc {:.1e}, reg {:.1e}, folding {:.1e}, lsq {:.1e}, aggregate {:.1e} (< 1e-9)",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

fn affine_recovery(cases: &[SyntheticCase]) -> (Verdict, Vec<AffineOutcome>) {
    let start = Instant::now();
    let out = affine_outcomes(cases, &InitialAlignmentConfig::default());
    let secs = start.elapsed().as_secs_f64();
    let ok = out.iter().filter(|o| o.rot_err <= 2.0 && o.reduction >= 0.9).count();
    let worst_rot = out.iter().map(|o| o.rot_err).fold(0.0, f64::max);
    let min_red = out.iter().map(|o| o.reduction).fold(1.0, f64::min);
    let v = verdict(
        ok >= 19 && secs < 600.0,
        format!(
            "{ok}/20 recovered (>= 19); worst rotation error {worst_rot:.3} deg, min reduction {:.1}%, {secs:.0}s (< 600s)",
            100.0 * min_red
        ),
    );
    (v, out)
}

fn angle_step(cases: &[SyntheticCase], fine: &[AffineOutcome]) -> Verdict {
    let cfg = InitialAlignmentConfig { angle_step: 180.0, ..Default::default() };
    let coarse = affine_outcomes(cases, &cfg);
    let near_90: Vec<&AffineOutcome> = coarse.iter().filter(|o| (60.0..=120.0).contains(&o.rot_true)).collect();
    let coarse_fail = near_90.iter().all(|o| o.rot_err > 10.0);
    let fine_ok = fine.iter().filter(|o| o.rot_err <= 2.0).count();
    let min_err = near_90.iter().map(|o| o.rot_err).fold(f64::INFINITY, f64::min);
    verdict(
        coarse_fail && fine_ok >= 19 && !near_90.is_empty(),
        format!(
            "step 180: {} cases at 60-120 deg all off by > 10 deg (min {min_err:.1}); step 30: {fine_ok}/20 within 2 deg",
            near_90.len()
        ),
    )
}

/// The nonrigid benchmark ladder at 512 px: regularization weights four
/// times the library defaults.
fn benchmark_ladder() -> NonrigidConfig {
    let mut cfg = NonrigidConfig::with_sides(&[128, 256, 512]);
    for l in &mut cfg.levels {
        l.theta *= 4.0;
    }
    cfg
}

fn nonrigid_recovery() -> Verdict {
    let start = Instant::now();
    let cfg = benchmark_ladder();
    let mut ok = 0;
    let mut max_fold: f64 = 0.0;
    let mut min_red: f64 = 1.0;
    for i in 0..20u64 {
        let c = generate(&CaseParams {
            seed: 500 + i,
            size: 512,
            rot_deg: ((i * 5) % 12) as f64 * 30.0,
            max_deform_px: 10.0,
            n_blobs: 3,
            ..CaseParams::default()
        });
        let r = register_multilevel(&c.source, &c.target, &c.true_affine, &cfg).unwrap();
        let before = mean(&landmark_errors(&c, |p| c.true_affine.apply(p)));
        let t = ComposedTransform::new(c.true_affine, Some(&r.field), (512, 512));
        let after = mean(&landmark_errors(&c, |p| t.map_point(p)));
        let red = 1.0 - after / before;
        ok += usize::from(red >= 0.8);
        min_red = min_red.min(red);
        max_fold = max_fold.max(r.folding_ratio);
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        ok >= 18 && max_fold < 1e-3 && secs < 900.0,
        format!(
            "{ok}/20 reduced >= 80% (>= 18), min {:.1}%; max folding {max_fold:.2e} (< 1e-3); {secs:.0}s (< 900s)",
            100.0 * min_red
        ),
    )
}

fn resolution_monotonicity() -> Verdict {
    const SIZE: usize = 2048;
    let full = NonrigidConfig::default();
    let coarse = NonrigidConfig { levels: full.levels[..1].to_vec(), ..full.clone() };
    let mut hi = Vec::new();
    let mut lo = Vec::new();
    for i in 0..10u64 {
        let c = generate(&CaseParams {
            seed: 900 + i,
            size: SIZE,
            rot_deg: (i % 4) as f64 * 90.0,
            max_deform_px: 20.0,
            n_blobs: 12,
            blob_sigma: Some(SIZE as f64 / 32.0),
            ..CaseParams::default()
        });
        for (cfg, out) in [(&coarse, &mut lo), (&full, &mut hi)] {
            let r = register_multilevel(&c.source, &c.target, &c.true_affine, cfg).unwrap();
            let t = ComposedTransform::new(c.true_affine, Some(&r.field), (SIZE, SIZE));
            out.push(median(&landmark_errors(&c, |p| t.map_point(p))));
        }
    }
    let (m_hi, m_lo) = (median(&hi), median(&lo));
    verdict(
        m_hi <= m_lo,
        format!("10 cases at {SIZE}^2: median error finest 2048 = {m_hi:.4} px, finest 512 = {m_lo:.4} px"),
    )
}

fn pipeline_identity() -> Verdict {
    let c = generate(&CaseParams { seed: 7, size: 640, max_deform_px: 0.0, ..CaseParams::default() });
    let img = PyramidImage::from_rgb(RgbImage::from_plane(&c.source));
    let cfg = PipelineConfig { desired_registration_side: 512, ..Default::default() };
    let r = register_pair(&img, &img, &cfg).unwrap();
    let t = r.transform();
    let frames: Frames = r.frames;
    let map = frames.level0_transform(&t);
    let d: Vec<f64> = landmark_grid(640).iter().map(|&p| map(p).distance(p)).collect();
    let med = median(&d);
    verdict(
        med < 0.2 && r.folding_ratio == 0.0,
        format!("median grid displacement {med:.2e} px (< 0.2), folding ratio {}", r.folding_ratio),
    )
}

fn tiled_warp() -> Verdict {
    const SIDE: usize = 4096;
    let dir = tempfile::tempdir().unwrap();
    let base = generate(&CaseParams { seed: 3, size: 512, max_deform_px: 0.0, ..CaseParams::default() });
    // 4096^2 RGB: the texture tiled and tinted per channel.
    let data: Vec<u8> = (0..SIDE * SIDE)
        .flat_map(|i| {
            let (x, y) = (i % SIDE, i / SIDE);
            let v = base.source.get(x % 512, y % 512);
            let q = |f: f64| (255.0 * f).round().clamp(0.0, 255.0) as u8;
            [q(v), q(1.0 - v), q(0.5 * v + 0.25 * ((x / 512 + y / 512) % 2) as f64)]
        })
        .collect();
    let img = RgbImage::new(SIDE, SIDE, data).unwrap();
    write_pyramid(dir.path(), &img, 1024, 1024, None).unwrap();
    drop(img);
    let src = PyramidImage::open(dir.path()).unwrap();

    let field = DisplacementField::from_fn(512, 512, |x, y| {
        let (x, y) = (x as f64, y as f64);
        (3.0 * (x / 40.0).sin() * (y / 55.0).cos(), -2.0 * (y / 35.0).cos())
    });
    let affine = gigareg::geometry::compose(
        &gigareg::geometry::rotation_about_center(7.0, 512, 512),
        &AffineTransform::translation(5.5, -3.25),
    );
    let plan = WarpPlan::new(&src, &field, &affine, SIDE).unwrap();
    let mono = warp_monolithic(&plan, &src).unwrap();
    let mut differing = 0usize;
    let mut tiles = 0usize;
    plan.for_each_tile(&src, 1024, |rect, ch| {
        tiles += 1;
        for c in 0..3 {
            for j in 0..rect.h {
                for i in 0..rect.w {
                    let a = ch[c][j * rect.w + i];
                    let b = mono[c].get(rect.x0 + i, rect.y0 + j);
                    differing += usize::from(a.to_bits() != b.to_bits());
                }
            }
        }
        Ok(())
    })
    .unwrap();
    let (w, h) = plan.out_dims;
    verdict(
        differing == 0 && (w, h) == (SIDE, SIDE),
        format!("{w}x{h} output, {tiles} tiles, {differing} samples differ bitwise from the monolithic warp"),
    )
}

fn determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_gigareg");
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |args: &[&str]| {
        let st = Command::new(bin).args(args).env("RUST_LOG", "warn").status().unwrap();
        st.code()
    };
    let synth = run(&[
        "synth", "--out", d.to_str().unwrap(), "--seed", "11", "--size", "384", "--rot", "60", "--deform", "6",
        "--count", "2",
    ]);
    let cfg = json!({
        "desired_registration_side": 384,
        "nonrigid": { "levels": [
            { "max_side": 96, "iterations": 40, "learning_rate": 2.0, "theta": 1.0 },
            { "max_side": 192, "iterations": 40, "learning_rate": 1.0, "theta": 2.0 },
            { "max_side": 384, "iterations": 40, "learning_rate": 0.5, "theta": 4.0 }
        ] }
    });
    fs::write(d.join("config.json"), cfg.to_string()).unwrap();
    let manifest = d.join("manifest.json");
    let conf = d.join("config.json");
    let args = |jobs: &'static str| {
        vec!["register".to_string(), manifest.display().to_string(), "--config".into(), conf.display().to_string(), "--jobs".into(), jobs.into()]
    };
    let first = run(&args("2").iter().map(String::as_str).collect::<Vec<_>>());
    fs::rename(d.join("results"), d.join("first")).unwrap();
    let second = run(&args("1").iter().map(String::as_str).collect::<Vec<_>>());

    let mut files = Vec::new();
    collect_files(&d.join("first"), Path::new(""), &mut files);
    files.sort();
    let same = files
        .iter()
        .filter(|f| fs::read(d.join("first").join(f)).ok() == fs::read(d.join("results").join(f)).ok())
        .count();
    let fields = files.iter().filter(|f| f.ends_with("field.bin")).count();
    verdict(
        synth == Some(0) && first == Some(0) && second == Some(0) && same == files.len() && fields == 2,
        format!(
            "exit codes {synth:?}/{first:?}/{second:?}; {same}/{} artifacts byte-identical ({fields} field binaries), --jobs 2 vs 1",
            files.len()
        ),
    )
}

fn collect_files(root: &Path, rel: &Path, out: &mut Vec<std::path::PathBuf>) {
    for e in fs::read_dir(root.join(rel)).unwrap() {
        let e = e.unwrap();
        let r = rel.join(e.file_name());
        if e.file_type().unwrap().is_dir() {
            collect_files(root, &r, out);
        } else {
            out.push(r);
        }
    }
}

const STUB: &str = r#"#!/bin/sh
cat > /dev/null
case "$1" in
  ok) echo '{"backend":"stub","matches":[{"sx":10,"sy":12,"tx":11,"ty":13,"conf":0.9},{"sx":50,"sy":40,"tx":51,"ty":41,"conf":0.8},{"sx":90,"sy":20,"tx":91,"ty":21,"conf":0.7},{"sx":30,"sy":100,"tx":31,"ty":101,"conf":0.6}]}' ;;
  bad) echo 'this is not json' ;;
  *) echo 'boom' >&2; exit 3 ;;
esac
"#;

fn adapter_contract() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("stub.sh");
    fs::write(&script, STUB).unwrap();
    let cmd = |mode: &str| format!("sh {} {mode}", script.display());
    let p = ImagePlane::from_fn(128, 128, |x, y| ((x * 3 + y * 5) % 17) as f64 / 16.0);

    let ok = external_match(&cmd("ok"), &p, &p, 64);
    let ok_pass = matches!(&ok, Ok(ms) if ms.len() == 4 && ms.backend_id == "stub");
    let bad = external_match(&cmd("bad"), &p, &p, 64);
    let bad_pass = matches!(bad, Err(Error::AdapterFailure(_)));
    let exit = external_match(&cmd("exit"), &p, &p, 64);
    let exit_pass = matches!(exit, Err(Error::AdapterFailure(_)));

    // A failing adapter falls back to the classical matcher per candidate.
    let c = generate(&CaseParams { seed: 4, size: 256, rot_deg: 90.0, max_deform_px: 0.0, ..CaseParams::default() });
    let cfg = InitialAlignmentConfig { backend: Backend::Adapter(cmd("exit")), angle_step: 90.0, ..Default::default() };
    let (a, rep) = run_initial_alignment(&c.source, &c.target, &cfg).unwrap();
    let recorded = !rep.adapter_fallbacks.is_empty()
        && rep.candidates.iter().all(|c| c.note.as_deref().is_some_and(|n| n.contains("adapter")));
    let recovered = angle_error(a.rotation_deg(), c.true_affine.rotation_deg()) < 2.0;
    verdict(
        ok_pass && bad_pass && exit_pass && recorded && recovered,
        format!(
            "success -> MatchSet: {ok_pass}; malformed -> AdapterFailure: {bad_pass}; exit 3 -> AdapterFailure: {exit_pass}; \
             fallback recorded on {} candidates: {recorded}; classical result recovers rotation: {recovered}",
            rep.adapter_fallbacks.len()
        ),
    )
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let wanted = |n: usize| only.as_ref().is_none_or(|o| o.contains(&n));
    // `cargo test -- --list` and similar discovery calls expect no work.
    if std::env::args().any(|a| a == "--list") {
        return;
    }

    let mut failed = 0;
    let mut report = |n: usize, name: &str, start: Instant, v: Verdict| {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} [{tag}] {name}: {} ({:.0}s)", v.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!v.pass);
    };

    if wanted(1) {
        let t = Instant::now();
        report(1, "gradient suite", t, gradients());
    }
    if wanted(2) {
        let t = Instant::now();
        report(2, "oracle equivalence", t, oracles());
    }
    if wanted(3) || wanted(4) {
        let cases = rigid_cases();
        let t = Instant::now();
        let (v, fine) = affine_recovery(&cases);
        if wanted(3) {
            report(3, "affine recovery", t, v);
        }
        if wanted(4) {
            let t = Instant::now();
            report(4, "angle-step sensitivity", t, angle_step(&cases, &fine));
        }
    }
    if wanted(5) {
        let t = Instant::now();
        report(5, "nonrigid recovery", t, nonrigid_recovery());
    }
    if wanted(6) {
        let t = Instant::now();
        report(6, "resolution monotonicity", t, resolution_monotonicity());
    }
    if wanted(7) {
        let t = Instant::now();
        report(7, "pipeline identity", t, pipeline_identity());
    }
    if wanted(8) {
        let t = Instant::now();
        report(8, "tiled vs monolithic warp", t, tiled_warp());
    }
    if wanted(9) {
        let t = Instant::now();
        report(9, "determinism", t, determinism());
    }
    if wanted(10) {
        let t = Instant::now();
        report(10, "adapter contract", t, adapter_contract());
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
