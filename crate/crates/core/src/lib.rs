//! Numerical laboratory for the Keller-Segel system with logarithmic
//! sensitivity,
//!
//! ```text
//! u_t = Δu − χ ∇·((u/v) ∇v),    v_t = Δv − v + u/(1 + εu)    in Ω × (0, T),
//! ```
//!
//! with zero-flux boundaries on boxes in one to three dimensions.
//!
//! The crate is organized as
//!
//! * [`params`]: exponent algebra of the `∫ uᵖ v^q` entropy functional;
//! * [`grid`]: cell-centered meshes, Neumann operators, quadrature, snapshot I/O;
//! * [`simulator`]: conservative, positivity-checked explicit time stepping;
//! * [`diagnostics`]: functionals, weak-form residuals and a priori bound checks;
//! * [`oracles`]: analytic and Monte-Carlo verifiers for the standalone lemmas.
//!
//! Numerical code is generic over [`Real`]; the aliases below fix `f64`.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod oracles;
pub mod params;
pub mod real;
pub mod simulator;

pub use error::{Error, Result};
pub use real::Real;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Grid64 = grid::Grid<f64>;
pub type Field64 = grid::Field<f64>;
pub type FaceField64 = grid::FaceField<f64>;
pub type ModelParams64 = params::ModelParams<f64>;
pub type SimState64 = simulator::SimState<f64>;
pub type StepReport64 = simulator::StepReport<f64>;
pub type Trajectory64 = simulator::Trajectory<f64>;
pub type DiagnosticsRecord64 = diagnostics::DiagnosticsRecord<f64>;

pub type Grid32 = grid::Grid<f32>;
pub type Field32 = grid::Field<f32>;
pub type SimState32 = simulator::SimState<f32>;
