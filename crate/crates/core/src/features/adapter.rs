//! Subprocess protocol for external matchers: one JSON request on stdin,
//! one JSON reply on stdout.

use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::detect::Keypoint;
use super::matching::{Match, MatchSet};
use crate::error::{Error, Result};
use crate::imaging::{io::write_gray_png, ImagePlane};

pub const PROTOCOL_VERSION: u32 = 1;
pub const ADAPTER_TIMEOUT: Duration = Duration::from_secs(120);
/// Directory for the temporary images handed to the adapter.
pub const TMP_ENV: &str = "GIGAREG_TMP";

#[derive(Serialize)]
struct Request<'a> {
    protocol: u32,
    src_path: &'a str,
    tgt_path: &'a str,
    max_keypoints: usize,
}

#[derive(Deserialize)]
struct Reply {
    backend: String,
    matches: Vec<ReplyMatch>,
}

#[derive(Deserialize)]
struct ReplyMatch {
    sx: f64,
    sy: f64,
    tx: f64,
    ty: f64,
    conf: f64,
}

fn fail(msg: impl Into<String>) -> Error {
    Error::AdapterFailure(msg.into())
}

pub fn external_match(adapter_cmd: &str, src: &ImagePlane, tgt: &ImagePlane, max_keypoints: usize) -> Result<MatchSet> {
    external_match_with_timeout(adapter_cmd, src, tgt, max_keypoints, ADAPTER_TIMEOUT)
}

pub fn external_match_with_timeout(
    adapter_cmd: &str,
    src: &ImagePlane,
    tgt: &ImagePlane,
    max_keypoints: usize,
    timeout: Duration,
) -> Result<MatchSet> {
    let tmp = match std::env::var_os(TMP_ENV) {
        Some(dir) => tempfile::Builder::new().prefix("gigareg-").tempdir_in(dir),
        None => tempfile::Builder::new().prefix("gigareg-").tempdir(),
    }
    .map_err(|e| fail(format!("cannot create temp dir: {e}")))?;
    let src_path = tmp.path().join("src.png");
    let tgt_path = tmp.path().join("tgt.png");
    write_gray_png(&src_path, src)?;
    write_gray_png(&tgt_path, tgt)?;

    let request = serde_json::to_string(&Request {
        protocol: PROTOCOL_VERSION,
        src_path: &path_str(&src_path)?,
        tgt_path: &path_str(&tgt_path)?,
        max_keypoints,
    })
    .map_err(|e| fail(e.to_string()))?;

    let stdout = run(adapter_cmd, &request, timeout)?;
    parse_reply(&stdout, src.dims(), tgt.dims())
}

fn path_str(p: &Path) -> Result<String> {
    p.to_str()
        .map(str::to_owned)
        .ok_or_else(|| fail("temp path is not valid UTF-8"))
}

fn run(cmd: &str, request: &str, timeout: Duration) -> Result<String> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| fail(format!("cannot launch `{cmd}`: {e}")))?;

    let mut stdout = child.stdout.take().expect("piped");
    let mut stderr = child.stderr.take().expect("piped");
    let out_reader = std::thread::spawn(move || {
        let mut s = Vec::new();
        stdout.read_to_end(&mut s).map(|_| s)
    });
    let err_reader = std::thread::spawn(move || {
        let mut s = Vec::new();
        let _ = stderr.read_to_end(&mut s);
        s
    });
    if let Some(mut stdin) = child.stdin.take() {
        // An adapter may exit without reading its request; that is judged by
        // its exit status, not by the broken pipe.
        let _ = stdin.write_all(request.as_bytes());
    }

    let start = Instant::now();
    let status = loop {
        match child.try_wait().map_err(|e| fail(e.to_string()))? {
            Some(status) => break status,
            None if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(fail(format!("adapter timed out after {} s", timeout.as_secs_f64())));
            }
            None => std::thread::sleep(Duration::from_millis(10)),
        }
    };
    let out = out_reader
        .join()
        .map_err(|_| fail("stdout reader panicked"))?
        .map_err(|e| fail(format!("reading adapter stdout: {e}")))?;
    let err = err_reader.join().unwrap_or_default();
    if !status.success() {
        let tail = String::from_utf8_lossy(&err);
        return Err(fail(format!("adapter exited with {status}: {}", tail.trim())));
    }
    String::from_utf8(out).map_err(|_| fail("adapter reply is not UTF-8"))
}

fn parse_reply(stdout: &str, src_dims: (usize, usize), tgt_dims: (usize, usize)) -> Result<MatchSet> {
    let reply: Reply = serde_json::from_str(stdout.trim()).map_err(|e| fail(format!("malformed reply: {e}")))?;
    let inside = |x: f64, y: f64, (w, h): (usize, usize)| {
        x.is_finite() && y.is_finite() && x >= -0.5 && y >= -0.5 && x <= w as f64 - 0.5 && y <= h as f64 - 0.5
    };
    let mut matches = Vec::with_capacity(reply.matches.len());
    for (k, m) in reply.matches.iter().enumerate() {
        if !m.conf.is_finite() || !(0.0..=1.0).contains(&m.conf) {
            return Err(fail(format!("match {k}: confidence {} outside [0, 1]", m.conf)));
        }
        if !inside(m.sx, m.sy, src_dims) || !inside(m.tx, m.ty, tgt_dims) {
            return Err(fail(format!("match {k}: coordinates outside the image")));
        }
        let kp = |x, y| Keypoint { x, y, scale: 0.0, score: m.conf };
        matches.push(Match {
            source: kp(m.sx, m.sy),
            target: kp(m.tx, m.ty),
            confidence: m.conf,
        });
    }
    Ok(MatchSet {
        matches,
        descriptor_dim: 0,
        backend_id: reply.backend,
    })
}
