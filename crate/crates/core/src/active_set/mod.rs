//! Active-set solvers for nonnegative least squares.
//!
//! [`lh_solve`] is the classic single-pivot Lawson-Hanson algorithm;
//! [`lhdm_solve`] replaces the pivot rule with deviation-maximization
//! block selection and adds a feasibility loop that trims the block until
//! it yields a feasible descent direction. [`lhdm_solve_signed`] runs the
//! block solver over a paired-column system where the inner loop can be
//! replaced by sign flips.

mod engine;

use crate::dense::DenseMatrix;
use crate::deviation_max::DmParams;
use crate::error::Error;
use crate::Result;

pub use engine::{feasibility_shrink, step_length};

/// Solver thresholds and switches.
///
/// `None` tolerances are derived from the problem at solve time:
/// the dual tolerance defaults to `10 ε ‖A‖_F ‖b‖₂`, the singularity
/// tolerance to `max(m, n) ε ‖A‖_F`, and the outer iteration cap to
/// `10 n`.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub dm: DmParams,
    pub dual_tolerance: Option<f64>,
    pub feasibility_tolerance: f64,
    pub singularity_tolerance: Option<f64>,
    pub max_outer_iterations: Option<usize>,
    pub sign_flip_enabled: bool,
    /// Record the passive set after every mutation (appends, drops,
    /// removals, completions); costs memory, intended for analysis.
    pub record_trajectory: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dm: DmParams::default(),
            dual_tolerance: None,
            feasibility_tolerance: 0.0,
            singularity_tolerance: None,
            max_outer_iterations: None,
            sign_flip_enabled: true,
            record_trajectory: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.dm.validate()?;
        if let Some(t) = self.dual_tolerance {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "dual tolerance must be positive, got {t}"
                )));
            }
        }
        if !(self.feasibility_tolerance >= 0.0) || !self.feasibility_tolerance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "feasibility tolerance must be nonnegative, got {}",
                self.feasibility_tolerance
            )));
        }
        if let Some(t) = self.singularity_tolerance {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "singularity tolerance must be positive, got {t}"
                )));
            }
        }
        if let Some(0) = self.max_outer_iterations {
            return Err(Error::InvalidParameter(
                "outer iteration cap must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationCapReached,
}

/// Everything a solve leaves behind.
#[derive(Debug, Clone)]
pub struct SolveReport {
    /// The nonnegative minimizer.
    pub x_star: Vec<f64>,
    /// Dual vector `Aᵀ(b - A x)` at the solution.
    pub w_star: Vec<f64>,
    /// Final passive set, in insertion order.
    pub passive_star: Vec<usize>,
    /// Final active set, ascending.
    pub active_star: Vec<usize>,
    /// `‖A x - b‖₂` at the solution.
    pub residual_norm: f64,
    /// Squared residual after each completed outer iteration, starting
    /// from the initial point; strictly decreasing.
    pub objective_history: Vec<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Columns dropped by the block feasibility loop.
    pub feasibility_drops: usize,
    pub sign_flips: usize,
    pub givens_rotations: u64,
    pub householder_reflections: u64,
    pub status: SolveStatus,
    /// Passive-set snapshots, present when requested in the config.
    pub trajectory: Option<Vec<Vec<usize>>>,
}

impl SolveReport {
    /// Final squared residual.
    pub fn objective(&self) -> f64 {
        self.residual_norm * self.residual_norm
    }
}

/// A signed system folded into paired columns `[A, -A]`.
///
/// The pairing is structural metadata: solvers never detect it
/// numerically, and the sign-flip shortcut is only offered through this
/// wrapper.
#[derive(Debug, Clone)]
pub struct PositivityTrick {
    doubled: DenseMatrix,
    half: usize,
}

impl PositivityTrick {
    pub fn new(a: &DenseMatrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut data = Vec::with_capacity(m * 2 * n);
        data.extend_from_slice(a.data());
        data.extend(a.data().iter().map(|v| -v));
        PositivityTrick { doubled: DenseMatrix::from_raw_unchecked(m, 2 * n, data), half: n }
    }

    /// The doubled matrix `[A, -A]`.
    pub fn doubled(&self) -> &DenseMatrix {
        &self.doubled
    }

    /// Number of columns of the original matrix.
    pub fn half(&self) -> usize {
        self.half
    }

    /// The column of opposite sign.
    pub fn twin(&self, column: usize) -> usize {
        (column + self.half) % (2 * self.half)
    }

    /// Folds a nonnegative solution of the doubled system into the signed
    /// solution `x⁺ - x⁻`.
    pub fn fold(&self, x: &[f64]) -> Vec<f64> {
        (0..self.half).map(|i| x[i] - x[i + self.half]).collect()
    }
}

/// Lawson-Hanson: one column enters the passive set per outer iteration,
/// picked by the largest dual value.
pub fn lh_solve(a: &DenseMatrix, b: &[f64], cfg: &SolverConfig) -> Result<SolveReport> {
    engine::solve(a, b, cfg, engine::Selection::Single, None)
}

/// Lawson-Hanson with deviation maximization: a block of columns enters
/// per outer iteration, trimmed until the trial solution is positive on
/// the whole block.
pub fn lhdm_solve(a: &DenseMatrix, b: &[f64], cfg: &SolverConfig) -> Result<SolveReport> {
    engine::solve(a, b, cfg, engine::Selection::Block(cfg.dm), None)
}

/// Block solve over a paired-column system. When `sign_flip_enabled` is
/// set, an infeasible trial component whose twin column is active is
/// handled by swapping in the twin and negating one `R` column instead of
/// downdating with Givens rotations.
pub fn lhdm_solve_signed(
    trick: &PositivityTrick,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    engine::solve(
        trick.doubled(),
        b,
        cfg,
        engine::Selection::Block(cfg.dm),
        Some(trick.half()),
    )
}

/// Optimality report for a feasible point.
#[derive(Debug, Clone)]
pub struct KktReport {
    pub is_optimal: bool,
    /// Largest positive dual component, clamped at zero.
    pub max_dual_violation: f64,
    /// Largest `x_i |w_i|`.
    pub max_complementarity_violation: f64,
    /// The dual vector `Aᵀ(b - A x)`.
    pub dual: Vec<f64>,
}

/// Checks the optimality conditions for the nonnegative least-squares
/// problem at `x`: every dual component at most `tol` and every product
/// `x_i |w_i|` at most `tol`.
pub fn kkt_check(a: &DenseMatrix, b: &[f64], x: &[f64], tol: f64) -> Result<KktReport> {
    if x.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "x length {} does not match column count {}",
            x.len(),
            a.cols()
        )));
    }
    for (i, &xi) in x.iter().enumerate() {
        if xi < -tol {
            return Err(Error::InfeasiblePoint { index: i, value: xi });
        }
    }
    let ax = a.mul_vec(x)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    let dual = a.tr_mul_vec(&r)?;
    let mut max_dual = 0.0f64;
    let mut max_comp = 0.0f64;
    for (&wi, &xi) in dual.iter().zip(x) {
        max_dual = max_dual.max(wi);
        max_comp = max_comp.max(xi.max(0.0) * wi.abs());
    }
    Ok(KktReport {
        is_optimal: max_dual <= tol && max_comp <= tol,
        max_dual_violation: max_dual,
        max_complementarity_violation: max_comp,
        dual,
    })
}
