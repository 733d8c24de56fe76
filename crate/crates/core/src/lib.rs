//! Layered quantum search with a state-dependent reinforcement term.
//!
//! Each layer applies `U_l = exp(−iH_l)` with
//! `H_l = A_l(I − |ψ_i⟩⟨ψ_i|) + B_l(I − |ψ_f⟩⟨ψ_f|) − r ρ_l + V_l`,
//! optionally followed by a noise channel. The feedback `−r ρ_l` uses the
//! exact simulated state, which makes the layer map nonlinear.

pub mod config;
pub mod engine;
pub mod error;
pub mod harness;
pub mod noise;
pub mod optimize;
pub mod par;
pub mod problem;
pub mod spectral;
pub mod twolevel;

pub use config::Tolerances;
pub use error::{Error, Result};
