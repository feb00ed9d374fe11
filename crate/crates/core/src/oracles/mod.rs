//! Independent verifiers for standalone identities and inequalities.

mod identities;
mod ode;
mod poincare;

pub use identities::{check_power_identities, check_square_completion, PowerIdentityReport, SquareCompletionReport};
pub use ode::{coth_bound, verify_ode_comparison, OdeComparison, OdeReport, ODE_STEPS, ODE_TOLERANCE};
pub use poincare::{
    log_poincare_ratio, mean_poincare_ratio, mean_ratio, BSelector, EnsembleSpec, GridDescriptor, LogPoincareReport,
    MeanPoincareReport, RieszCheck, RieszReport,
};
