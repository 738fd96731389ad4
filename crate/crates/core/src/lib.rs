//! Two-qubit nonlocality tests built from weighted Bloch-vector designs.
//!
//! The crate covers the whole algorithmic side of the minimal-cost tests of
//! entanglement, EPR-steering and Bell nonlocality for a pair of qubits:
//!
//! * [`qcore`]: fixed-size complex matrices, Pauli algebra, Jacobi eigenvalues.
//! * [`designs`]: sharp POVMs as weighted vector sets, 1-/2-design checks,
//!   trine, tetrahedron and projective constructors, complexity cost `W`.
//! * [`states`]: singlet and Werner states, noise channels, fidelity.
//! * [`born`]: joint outcome tables from the Born rule and the singlet closed form.
//! * [`correlators`]: the vector correlation `<A.B>` and the three inequalities.
//! * [`adversaries`]: separable / LHS / LHV optimisers that saturate the bounds.
//! * [`sampler`]: seeded multinomial counts and channel-efficiency calibration.
//! * [`harness`]: theta sweeps, Werner scans and the noise budget study.
//!
//! The crate is `no_std` and needs only `alloc`.
//!
//! # Conventions
//!
//! Two-qubit operators use the Kronecker index `row = 2 * i_alice + i_bob`.
//! Planar designs live in the x-z plane of the Bloch sphere and Bloch angles
//! are measured from `+z` towards `+x`, so angle `a` is the unit vector
//! `(sin a, 0, cos a)`.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod math;

pub mod adversaries;
pub mod born;
pub mod correlators;
pub mod designs;
pub mod harness;
pub mod qcore;
pub mod sampler;
pub mod states;

pub use error::{Error, Result};

pub use born::{joint_probabilities, singlet_closed_form, ProbabilityTable};
pub use correlators::{CorrelationEstimate, InequalityVerdict, TestKind};
pub use designs::{SettingStructure, WeightedVectorSet};
pub use harness::{Mode, Pipeline, SweepConfig, SweepRow};
pub use qcore::{BlochVector, CMatrix, Matrix2, Matrix4};
pub use sampler::JointCounts;
pub use states::{NoiseSpec, TwoQubitState};
