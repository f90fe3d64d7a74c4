//! Shared fixtures for the benchmarks.

use gigareg::synth::{generate, CaseParams, SyntheticCase};

/// A deterministic textured case of `size x size` pixels.
pub fn case(size: usize) -> SyntheticCase {
    generate(&CaseParams {
        seed: 7,
        size,
        rot_deg: 30.0,
        ..CaseParams::default()
    })
}
