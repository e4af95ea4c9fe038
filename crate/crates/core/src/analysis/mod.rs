//! Post-processing of trajectories: sampled diagnostics, power-law fits,
//! regularity checks and weak-form residuals.

mod checks;
mod diagnostics;
mod fit;
mod weak;

pub use checks::{
    boundedness_check, check_gradv_bound, epsilon_continuation, gap_series, mass_drift, Boundedness,
    EpsilonContinuation, GapSeries, GradvBound,
};
pub use diagnostics::{DiagnosticsRow, DiagnosticsSpec};
pub use fit::{fit_power_law, BoundFit};
pub use weak::{weak_residual, TestFunction, WeakResidual};
