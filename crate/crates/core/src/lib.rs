//! Simulation library for a pair of coupled oscillators with one coupling
//! parametrically modulated at the normal-mode difference frequency.
//!
//! The crate covers the full reduction chain: direct integration of the
//! oscillator equations ([`classical`]), the slowly varying envelope and
//! truncated Floquet-component systems ([`floquet`]), the effective
//! two-mode non-Hermitian Hamiltonian and its PT structure ([`pt`]), and
//! second-moment propagation of the quantized two-mode system from vacuum
//! ([`quantum`]). [`analysis`] extracts growth rates from trajectories and
//! runs the gain-versus-ω₀ sweep; [`checks`] bundles the cross-module
//! consistency suite exposed by the CLI.

pub mod analysis;
pub mod checks;
pub mod classical;
pub mod error;
pub mod floquet;
pub mod model;
pub mod ode;
pub mod pt;
pub mod quantum;

pub use error::{QaserError, Result};
pub use model::{ModelParams, NormalModes, PTParams};
pub use ode::{TimeGrid, TimeSeries};
