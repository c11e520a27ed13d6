//! Dynamical decoupling toolkit.
//!
//! Synthesizes pulse schedules that cancel interaction-picture moments of a
//! system-bath coupling up to a chosen order K, verifies the cancellation
//! algebraically, and measures the resulting error scaling on small exact
//! models. An order-K schedule over the single-qubit Pauli group uses 3K
//! interior pulses; the switching-function moments
//!
//! ```text
//! M_{alpha,m} = integral_0^1 y_alpha(tau) tau^m dtau,   m = 0..K-1
//! ```
//!
//! vanish simultaneously for all three axes, which removes every term of the
//! first Magnus order through K-th order in time. See the `schedule` module
//! for the moment algebra, `seqgen` for the numerical synthesis, `dynamics`
//! for exact propagation against qubit and classical dephasing baths, and
//! `analysis` for sweep, comparison, jitter, and certification drivers.

pub mod analysis;
pub mod dynamics;
pub mod linalg;
pub mod ode;
pub mod pauli;
pub mod schedule;
pub mod seqgen;

pub use pauli::{DecouplingGroup, Pauli, PauliString, SignCharacterTable};
pub use schedule::{MomentVector, PulseSchedule, SwitchingProfile};
pub use seqgen::{OptimizationResult, OptimizerConfig};
