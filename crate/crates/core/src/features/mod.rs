//! Keypoints, descriptors, matching and robust affine consensus.

use crate::imaging::ImagePlane;

pub mod adapter;
mod detect;
mod estimate;
mod matching;

pub use adapter::external_match;
pub use detect::{detect_and_describe, Descriptor, Keypoint, DESCRIPTOR_DIM, MIN_PLANE_SIDE};
pub use estimate::{
    estimate_affine_least_squares, fit_affine, mean_error, reprojection_error, robust_affine, DEFAULT_INLIER_TOL,
    DEFAULT_ITERATIONS, DEFAULT_SEED,
};
pub use matching::{match_descriptors, Match, MatchSet, DEFAULT_RATIO};

pub const CLASSICAL_BACKEND_ID: &str = "classical-dog";

/// Classical backend: detect on both planes and pair by mutual nearest
/// neighbour with the ratio test.
pub fn classical_match(src: &ImagePlane, tgt: &ImagePlane, max_keypoints: usize, ratio: f64) -> MatchSet {
    let a = detect_and_describe(src, max_keypoints);
    let b = detect_and_describe(tgt, max_keypoints);
    match_features(&a, &b, ratio)
}

/// Pairs precomputed feature lists (`a` from the source, `b` from the target).
pub fn match_features(a: &[(Keypoint, Descriptor)], b: &[(Keypoint, Descriptor)], ratio: f64) -> MatchSet {
    let da: Vec<Descriptor> = a.iter().map(|f| f.1.clone()).collect();
    let db: Vec<Descriptor> = b.iter().map(|f| f.1.clone()).collect();
    let matches = match_descriptors(&da, &db, ratio)
        .into_iter()
        .map(|(i, j, confidence)| Match { source: a[i].0, target: b[j].0, confidence })
        .collect();
    MatchSet { matches, descriptor_dim: DESCRIPTOR_DIM, backend_id: CLASSICAL_BACKEND_ID.into() }
}
