//! Integration and verification of consensus dynamics with bounded,
//! continuous, possibly non-differentiable time-varying delays.
//!
//! The crate integrates `x' = f(x(t)) + sum_k g_k(x(t - tau_k(t)))` from an
//! initial history, builds the constant-delay limiting system, predicts the
//! consensus value from the history, and checks windowed-extremum and
//! first-integral certificates on every run.

pub mod analysis;
pub mod delays;
pub mod error;
pub mod history;
pub mod integrator;
pub mod matrix;
pub mod network;
pub mod scenario;
pub mod systems;

pub use delays::{DelayKind, DelayProfile};
pub use error::{Error, Result};
pub use history::{DenseTrajectory, HistoryFunction, HistoryKind};
pub use integrator::{integrate, integrate_with_stats, IntegrationConfig};
pub use matrix::Matrix;
pub use network::{build_system_matrices, ConsensusNetwork, Link, SystemMatrices};
pub use systems::{limiting_of, LimitingSystem, SystemKind, SystemRhs};
