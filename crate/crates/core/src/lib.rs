//! Drift-preserving integrators for stochastic Hamiltonian and Poisson
//! systems with additive noise, with the Monte Carlo experiments that check
//! their energy and Casimir trace formulas and convergence orders.

pub mod cli;
pub mod error;
pub mod harness;
pub mod integrators;
pub mod models;
pub mod state;
pub mod stochastic;

pub use error::{Error, Result};
pub use harness::{ConvergenceMode, ConvergenceReport, Harness, Observable, TraceReport, WeakReference};
pub use integrators::{SchemeId, SolverSettings, SplitVariant, StepDiagnostics};
pub use models::{CasimirForm, Hamiltonian, ModelKind, NoiseModel, SystemModel};
pub use state::State;
pub use stochastic::BrownianPath;
