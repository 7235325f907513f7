//! Measurement-based quantum diffusion on few-qubit systems.
//!
//! The forward process is a sequence of weak single-qubit Pauli measurements
//! applied to pure states. Averaged over outcomes it is a Pauli-diagonal
//! depolarizing channel, and along a single trajectory it is a nonlinear
//! stochastic evolution of the Pauli expectation vector `z`.
//!
//! Three reversal routes are provided:
//!
//! * [`reverse_learn`]: a learned control Hamiltonian conditioned on the
//!   decoded trajectory, trained with an infidelity loss and evaluated with a
//!   Wasserstein-1 distance between pure-state ensembles.
//! * [`shadows`]: classical-shadow reconstruction of the source state from
//!   weak-measurement records.
//! * [`petz`]: local twirled Petz recovery maps stacked in reverse order.
//!
//! [`blochfp`] holds the classical Fokker-Planck picture on Bloch spheres used
//! to cross-check the channel weights.

pub mod blochfp;
pub mod decoder;
pub mod ensembles;
pub mod error;
pub mod forward;
pub mod linalg;
pub mod pauli;
pub mod petz;
pub mod reverse_learn;
pub mod rng;
pub mod shadows;
pub mod states;

pub use error::{Error, Result};
pub use forward::{Axis, MeasurementRecord, MeasurementStep, ScheduleMode, SchedulePolicy};
pub use linalg::{CMat, CVec, C64};
pub use pauli::{Pauli, PauliString, PauliVector, Phase};
pub use states::{BlochProduct, DensityMatrix, PureState};
