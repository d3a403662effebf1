//! Equivariant minimal hypersurfaces asymptotic to Lawson cones, their Jacobi spectra,
//! the layer-gap Liouville equation and multi-layer Allen-Cahn ansatz diagnostics.
//!
//! Everything numerical is generic over [`Real`]; the `*64` and `*32` aliases below fix
//! the scalar for the common data types.

// `!(a > b)` comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allencahn;
pub mod error;
pub mod export;
pub mod geometry;
pub mod heteroclinic;
pub mod jacobi;
pub mod linalg;
pub mod ode;
pub mod quad;
pub mod scalar;
pub mod toda;

pub use error::{LabError, Result};
pub use geometry::{ConeParams, Side, StartAxis};
pub use scalar::Real;

pub type HeteroclinicProfile64 = heteroclinic::HeteroclinicProfile<f64>;
pub type HeteroclinicProfile32 = heteroclinic::HeteroclinicProfile<f32>;
pub type ProfileCurve64 = geometry::ProfileCurve<f64>;
pub type ProfileCurve32 = geometry::ProfileCurve<f32>;
pub type SturmLiouvilleProblem64<'a> = jacobi::SturmLiouvilleProblem<'a, f64>;
pub type SturmLiouvilleProblem32<'a> = jacobi::SturmLiouvilleProblem<'a, f32>;
pub type LiouvilleSolution64 = toda::LiouvilleSolution<f64>;
pub type LiouvilleSolution32 = toda::LiouvilleSolution<f32>;
pub type TodaPair64 = toda::TodaPair<f64>;
pub type TodaPair32 = toda::TodaPair<f32>;
pub type ReducedField2D64 = allencahn::ReducedField2D<f64>;
pub type ReducedField2D32 = allencahn::ReducedField2D<f32>;
pub type LayerAnsatz64 = allencahn::LayerAnsatz<f64>;
pub type LayerAnsatz32 = allencahn::LayerAnsatz<f32>;
