//! Simulation and verification of the unforced Duhem hysteretic oscillator
//!
//! ```text
//! ẋ = v
//! ż = v + f1(z) g1(v) + f2(z) g2(v)
//! v̇ = −h1(x) − h2(z) − c(x, z, v)
//! ```
//!
//! including the Bouc-Wen specialization. The library integrates
//! trajectories, evaluates the energy function
//! `V = ∫h1 + ∫h2 + v²/2` and its derivative, computes the equilibrium curve
//! and predicted rest points, and checks that trajectories settle on a rest
//! point no more energetic than the initial state.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod boucwen;
pub mod cli;
pub mod config;
pub mod equilibria;
pub mod error;
pub mod families;
pub mod integrator;
pub mod io;
pub mod lyapunov;
pub mod model;
pub mod numeric;

pub use analysis::{verify_boucwen, verify_theorem_main, verify_trajectory, ConvergenceReport, ConvergenceTolerances};
pub use boucwen::BoucWenParams;
pub use error::{DuhemError, Result};
pub use integrator::{integrate, sweep, IntegratorConfig, Method, Trajectory};
pub use model::{
    DampingFunction, DuhemFunctions, DuhemSystem, ScalarFunction, State, ValidationGrid, ValidationReport,
};
