//! Consensus predictions, certificates and convergence experiments run on
//! computed trajectories.

mod certificates;
mod consensus;
mod convergence;
mod drazin;
mod quadrature;
mod report;

pub use certificates::{
    certificate_from_extrema, conserved_quantity, krasovskii_functional, limiting_residual,
    razumikhin_certificate, windowed_extrema, Violation, WindowExtrema, DEFAULT_RAZUMIKHIN_SLACK,
};
pub use consensus::{predict_alpha, predicted_consensus_linear, predicted_consensus_nonlinear};
pub use convergence::{
    convergence_check, semistability_sweep, sweep_history, Convergence, SweepReport, SweepRun,
    SweepSetup,
};
pub use drazin::{coro1b_conditions, drazin_diag, Coro1bCertificate, SampleConditions, CONDITION_TOL};
pub use report::{verify, VerificationReport, VerificationSettings};
