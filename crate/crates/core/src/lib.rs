//! Counterdiabatic preparation of Dicke states of a collective spin.
//!
//! The crate builds the spin operators of `N` two-level atoms, ramps a linear
//! Hamiltonian into a quadratic one whose ground state is a chosen Dicke
//! state, and suppresses diabatic losses with compensating Hamiltonians:
//! the exact counterdiabatic term or a least-squares combination of the
//! polynomial operators `L1..L4`. It also propagates the driven dynamics,
//! samples Bloch-sphere fields, and compiles `L1..L4` into sequences of
//! quadratic pulses.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`, which is what the experiment runner uses.

// `!(x > 0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blochfield;
pub mod calibration;
pub mod counterdiabatic;
mod error;
pub mod linalg;
pub mod propagator;
mod scalar;
pub mod schedule;
pub mod seqcompile;
pub mod spinops;

pub use error::{Error, Result};
pub use scalar::Real;

pub use linalg::{CMatrix, CVector};
pub use spinops::Projection;

pub type SpinOperatorSet = spinops::SpinOperatorSet<f64>;
pub type StateVector = spinops::StateVector<f64>;
pub type CompensatorBasis = spinops::CompensatorBasis<f64>;
pub type DriveSchedule = schedule::DriveSchedule<f64>;
pub type HamiltonianAssembly = schedule::HamiltonianAssembly<f64>;
pub type EigenSystem = counterdiabatic::EigenSystem<f64>;
pub type CompensationSolution = counterdiabatic::CompensationSolution<f64>;
pub type AlphaTable = counterdiabatic::AlphaTable<f64>;

pub type SpinOperatorSet32 = spinops::SpinOperatorSet<f32>;
pub type StateVector32 = spinops::StateVector<f32>;
pub type CompensationMode = propagator::CompensationMode<f64>;
pub type Trajectory = propagator::Trajectory<f64>;
pub type Trajectory32 = propagator::Trajectory<f32>;
pub type PulseSequence = seqcompile::PulseSequence<f64>;
