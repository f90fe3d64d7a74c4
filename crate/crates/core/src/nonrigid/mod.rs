//! Deformable registration: local NCC similarity plus diffusive
//! regularization over a dense displacement field, optimized level by level.

mod bspline;
mod field;
mod folding;
mod ncc;
mod objective;
mod optimize;
mod regularizer;
mod transform;
mod warp;

pub use bspline::{upsample_field, BSplineGrid, FieldUpsampler};
pub use field::{DisplacementField, FIELD_MAGIC};
pub use folding::{folding_ratio, jacobian_determinant};
pub use ncc::{local_ncc, local_ncc_cost, NccResult, NCC_EPS};
pub use objective::{objective, ObjectiveValue};
pub use optimize::{
    level_dims, optimize_level, register_multilevel, LevelConfig, LevelOutcome, NonrigidConfig,
    RegistrationResult,
};
pub use regularizer::{diffusive_reg, RegResult};
pub use transform::ComposedTransform;
pub use warp::{warp, warp_affine};
