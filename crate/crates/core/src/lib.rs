//! Dense nonnegative least squares solvers built on an incrementally
//! updated QR factorization.
//!
//! The crate provides:
//!
//! * [`dense`] — column-major matrices, file formats, and the mutable
//!   QR workspace with column appends (Householder), removals (Givens),
//!   and the sign-flip shortcut for paired-column systems;
//! * [`deviation_max`] — the block column-selection rule based on dual
//!   values, trailing norms, and pairwise cosines;
//! * [`active_set`] — the Lawson-Hanson solver, its blocked variant
//!   (LHDM), and the KKT optimality checker;
//! * [`recovery`] — sparse-recovery wrappers: the positivity trick for
//!   signed solutions, the l1-regularized NNLS reformulation, mutual
//!   coherence and exact-recovery diagnostics, and an OMP baseline.

#![forbid(unsafe_code)]

pub mod active_set;
pub mod dense;
pub mod deviation_max;
mod error;
pub mod recovery;

pub use active_set::{
    kkt_check, lh_solve, lhdm_solve, lhdm_solve_signed, step_length, KktReport, PositivityTrick,
    SolveReport, SolveStatus, SolverConfig,
};
pub use dense::{DenseMatrix, QrWorkspace};
pub use deviation_max::DmParams;
pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
