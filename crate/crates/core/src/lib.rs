//! Quantum Fisher information and Cramér-Rao sensitivity limits for open
//! quantum systems whose emitted radiation is monitored continuously.
//!
//! The quantum limit follows from the two-sided master equation
//! [`liouvillian::build_generalized`]: its leading eigenvalue gives the
//! long-time information rate ([`qfi::qfi_rate`]) and its finite-time
//! solution gives the total information ([`qfi::finite_time_qfi`]).
//! [`trajectories`] simulates photon-counting and homodyne records and
//! estimates the classical Fisher information those records carry.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod algebra;
pub mod cli;
pub mod error;
pub mod liouvillian;
pub mod model;
pub mod qfi;
pub mod trajectories;

pub use error::{Error, Result};
