//! Sparse-recovery wrappers and diagnostics.
//!
//! Signed solutions come out of the nonnegative solver through the
//! positivity trick `x = x⁺ - x⁻` over `[A, -A]`; the l1-regularized
//! variant appends an all-ones row weighted against the residual. The
//! diagnostics cover mutual coherence, the exact recovery condition, and
//! the coherence uniqueness bound; orthogonal matching pursuit serves as
//! the greedy baseline.

use crate::active_set::{lhdm_solve, lhdm_solve_signed, PositivityTrick, SolveReport, SolveStatus, SolverConfig};
use crate::dense::{DenseMatrix, QrWorkspace};
use crate::deviation_max::cosine_matrix;
use crate::error::Error;
use crate::Result;

/// A signed solution recovered through a nonnegative solve.
#[derive(Debug, Clone)]
pub struct SignedSolveResult {
    /// `x⁺ - x⁻`, length of the original column count.
    pub x_signed: Vec<f64>,
    /// Indices with `|x_i|` above the support tolerance, ascending.
    pub support: Vec<usize>,
    /// The underlying solver report (on the doubled system for trick
    /// solves, on the support path for OMP).
    pub nnls_report: SolveReport,
}

/// Recovery certificates for a matrix and candidate support.
#[derive(Debug, Clone)]
pub struct RecoveryDiagnostics {
    pub coherence: f64,
    pub erc_value: f64,
    pub erc_holds: bool,
    /// `1 / (2s - 1)` for the given support size.
    pub coherence_uniqueness_bound: f64,
}

/// Outcome of the exact-recovery check alone.
#[derive(Debug, Clone, Copy)]
pub struct ErcReport {
    pub erc_value: f64,
    pub erc_holds: bool,
}

/// Reported support: entries within `1e-8 ‖x‖_∞` of zero are noise.
pub fn support_of(x: &[f64]) -> Vec<usize> {
    let scale = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-8 * scale;
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > tol)
        .map(|(i, _)| i)
        .collect()
}

/// Solves `min ‖Ax - b‖` over signed `x` by running the block solver on
/// the doubled system `[A, -A]` and folding the halves.
pub fn positivity_trick_solve(
    a: &DenseMatrix,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<SignedSolveResult> {
    let trick = PositivityTrick::new(a);
    let report = lhdm_solve_signed(&trick, b, cfg)?;
    let x_signed = trick.fold(&report.x_star);
    let support = support_of(&x_signed);
    Ok(SignedSolveResult { x_signed, support, nnls_report: report })
}

/// Assembles the l1-regularized system: an all-ones row over `[λA, -λA]`
/// with right-hand side `(0, λb)`. The result always admits a strictly
/// positive dual certificate (take the first unit vector), so uniqueness
/// of the nonnegative solution is attainable for any λ.
pub fn l1_nnls_assemble(
    a: &DenseMatrix,
    b: &[f64],
    lambda: f64,
) -> Result<(DenseMatrix, Vec<f64>)> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonpositiveLambda { lambda });
    }
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} does not match row count {}",
            b.len(),
            a.rows()
        )));
    }
    let (m, n) = (a.rows(), a.cols());
    let mut data = Vec::with_capacity((m + 1) * 2 * n);
    for sign in [1.0, -1.0] {
        for j in 0..n {
            data.push(1.0);
            data.extend(a.column(j).iter().map(|v| sign * lambda * v));
        }
    }
    let mut rhs = Vec::with_capacity(m + 1);
    rhs.push(0.0);
    rhs.extend(b.iter().map(|v| lambda * v));
    Ok((DenseMatrix::from_column_major(m + 1, 2 * n, data)?, rhs))
}

/// Solves the l1-regularized problem for a signed solution. The ones row
/// breaks the exact column pairing, so no sign flips apply here.
pub fn l1_nnls_solve(
    a: &DenseMatrix,
    b: &[f64],
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<SignedSolveResult> {
    let (aug, rhs) = l1_nnls_assemble(a, b, lambda)?;
    let report = lhdm_solve(&aug, &rhs, cfg)?;
    let n = a.cols();
    let x_signed: Vec<f64> =
        (0..n).map(|i| report.x_star[i] - report.x_star[i + n]).collect();
    let support = support_of(&x_signed);
    Ok(SignedSolveResult { x_signed, support, nnls_report: report })
}

/// Largest pairwise cosine magnitude between distinct columns.
pub fn mutual_coherence(a: &DenseMatrix) -> Result<f64> {
    Ok(cosine_matrix(a)?.max_off_diagonal())
}

/// Exact recovery condition for a support `S`: the l1 norms of the
/// least-squares coefficients of every off-support column against the
/// support columns all stay below one.
pub fn erc_check(a: &DenseMatrix, support: &[usize]) -> Result<ErcReport> {
    if support.is_empty() {
        return Err(Error::InvalidParameter("empty support".into()));
    }
    let mut seen = vec![false; a.cols()];
    for &j in support {
        if j >= a.cols() {
            return Err(Error::DimensionMismatch(format!(
                "support index {j} out of range for {} columns",
                a.cols()
            )));
        }
        if seen[j] {
            return Err(Error::InvalidParameter(format!("duplicate support index {j}")));
        }
        seen[j] = true;
    }
    let zero_rhs = vec![0.0; a.rows()];
    let mut ws = QrWorkspace::new(a, &zero_rhs)?;
    for &j in support {
        ws.append_column(j).map_err(|e| match e {
            Error::SingularUpdate { column } => Error::RankDeficientSupport { column },
            other => other,
        })?;
    }
    let mut erc_value = 0.0f64;
    for j in 0..a.cols() {
        if seen[j] {
            continue;
        }
        let coef = ws.least_squares_coefficients(j)?;
        erc_value = erc_value.max(coef.iter().map(|c| c.abs()).sum());
    }
    Ok(ErcReport { erc_value, erc_holds: erc_value < 1.0 })
}

/// Coherence-based uniqueness: `mu < 1 / (2s - 1)` certifies that an
/// s-sparse nonnegative solution is the unique one (for matrices with a
/// strictly positive dual certificate).
pub fn coherence_uniqueness(mu: f64, s: usize) -> bool {
    debug_assert!(s >= 1);
    mu < 1.0 / (2 * s - 1) as f64
}

/// Combined certificates for a support.
pub fn diagnose(a: &DenseMatrix, support: &[usize]) -> Result<RecoveryDiagnostics> {
    let coherence = mutual_coherence(a)?;
    let erc = erc_check(a, support)?;
    Ok(RecoveryDiagnostics {
        coherence,
        erc_value: erc.erc_value,
        erc_holds: erc.erc_holds,
        coherence_uniqueness_bound: 1.0 / (2 * support.len() - 1) as f64,
    })
}

/// Orthogonal matching pursuit: grows the support one most-correlated
/// column at a time and re-solves least squares on it, stopping at the
/// residual tolerance or the support cap.
pub fn omp_solve(
    a: &DenseMatrix,
    b: &[f64],
    max_support: usize,
    residual_tolerance: f64,
) -> Result<SignedSolveResult> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} does not match row count {}",
            b.len(),
            a.rows()
        )));
    }
    let norms = a.column_norms();
    for (j, &nj) in norms.iter().enumerate() {
        if nj <= f64::MIN_POSITIVE {
            return Err(Error::ZeroColumn { column: j });
        }
    }
    let n = a.cols();
    let mut ws = QrWorkspace::new(a, b)?;
    let mut support: Vec<usize> = Vec::new();
    let mut in_support = vec![false; n];
    let mut residual: Vec<f64> = b.to_vec();
    let mut residual_norm = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut history = vec![residual_norm * residual_norm];
    let mut coefficients: Vec<f64> = Vec::new();

    while residual_norm > residual_tolerance && support.len() < max_support.min(n) {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if in_support[j] {
                continue;
            }
            let corr =
                a.column(j).iter().zip(&residual).map(|(x, y)| x * y).sum::<f64>().abs()
                    / norms[j];
            if best.map_or(true, |(_, c)| corr > c) {
                best = Some((j, corr));
            }
        }
        let (j, corr) = match best {
            Some(pick) => pick,
            None => break,
        };
        if corr == 0.0 {
            break;
        }
        if ws.append_column(j).is_err() {
            // Numerically dependent on the chosen support; nothing left
            // to gain from greedy growth.
            break;
        }
        support.push(j);
        in_support[j] = true;
        coefficients = ws.solve_current()?;
        // Residual against the original columns.
        residual.copy_from_slice(b);
        for (t, &jt) in support.iter().enumerate() {
            for (r, &ajt) in residual.iter_mut().zip(a.column(jt)) {
                *r -= coefficients[t] * ajt;
            }
        }
        residual_norm = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
        history.push(residual_norm * residual_norm);
    }

    let mut x_signed = vec![0.0; n];
    for (t, &j) in support.iter().enumerate() {
        x_signed[j] = coefficients[t];
    }
    let w_star = a.tr_mul_vec(&residual)?;
    let status = if residual_norm <= residual_tolerance || support.len() == n {
        SolveStatus::Converged
    } else {
        SolveStatus::IterationCapReached
    };
    let outer_iterations = support.len();
    let passive_star = support.clone();
    let active_star: Vec<usize> = (0..n).filter(|&j| !in_support[j]).collect();
    let reported_support = support_of(&x_signed);
    Ok(SignedSolveResult {
        x_signed,
        support: reported_support,
        nnls_report: SolveReport {
            x_star: coefficients,
            w_star,
            passive_star,
            active_star,
            residual_norm,
            objective_history: history,
            outer_iterations,
            inner_iterations: 0,
            feasibility_drops: 0,
            sign_flips: 0,
            givens_rotations: 0,
            householder_reflections: ws.householder_reflections(),
            status,
            trajectory: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DenseMatrix {
        let data: Vec<f64> = (0..m * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        DenseMatrix::from_column_major(m, n, data).unwrap()
    }

    #[test]
    fn trick_recovers_signed_identity_solution() {
        let a = DenseMatrix::identity(2);
        let out = positivity_trick_solve(&a, &[1.0, -1.0], &SolverConfig::default()).unwrap();
        assert!((out.x_signed[0] - 1.0).abs() < 1e-12);
        assert!((out.x_signed[1] + 1.0).abs() < 1e-12);
        assert_eq!(out.support, vec![0, 1]);
    }

    #[test]
    fn trick_zero_rhs_gives_empty_support() {
        let a = DenseMatrix::from_column_major(1, 1, vec![1.0]).unwrap();
        let out = positivity_trick_solve(&a, &[0.0], &SolverConfig::default()).unwrap();
        assert_eq!(out.x_signed, vec![0.0]);
        assert!(out.support.is_empty());
    }

    #[test]
    fn trick_signs_are_exclusive_at_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..10 {
            let m = rng.gen_range(4..10);
            let n = rng.gen_range(3..8);
            let a = random_matrix(&mut rng, m, n);
            let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let out = positivity_trick_solve(&a, &b, &SolverConfig::default()).unwrap();
            let x2 = &out.nnls_report.x_star;
            let scale = x2.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            for i in 0..n {
                assert!(
                    x2[i] * x2[i + n] <= 1e-10 * scale * scale,
                    "both signs active at {i}: {} and {}",
                    x2[i],
                    x2[i + n]
                );
            }
        }
    }

    #[test]
    fn l1_assembly_golden() {
        let a = DenseMatrix::from_column_major(1, 1, vec![1.0]).unwrap();
        let (aug, rhs) = l1_nnls_assemble(&a, &[2.0], 3.0).unwrap();
        assert_eq!(aug.rows(), 2);
        assert_eq!(aug.cols(), 2);
        assert_eq!(aug.column(0), &[1.0, 3.0]);
        assert_eq!(aug.column(1), &[1.0, -3.0]);
        assert_eq!(rhs, vec![0.0, 6.0]);

        assert!(matches!(
            l1_nnls_assemble(&a, &[2.0], 0.0),
            Err(Error::NonpositiveLambda { .. })
        ));
    }

    #[test]
    fn l1_assembly_has_positive_dual_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_matrix(&mut rng, 4, 6);
        let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (aug, _) = l1_nnls_assemble(&a, &b, 10.0).unwrap();
        // h = e1 gives Aᵀh = the all-ones first row.
        let mut h = vec![0.0; aug.rows()];
        h[0] = 1.0;
        let w = aug.tr_mul_vec(&h).unwrap();
        assert!(w.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn coherence_examples() {
        assert_eq!(mutual_coherence(&DenseMatrix::identity(3)).unwrap(), 0.0);

        let dup = DenseMatrix::from_column_major(2, 2, vec![1.0, 2.0, 1.0, 2.0]).unwrap();
        assert!((mutual_coherence(&dup).unwrap() - 1.0).abs() < 1e-15);

        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let c = DenseMatrix::from_column_major(
            2,
            2,
            vec![1.0, 0.0, inv_sqrt2, inv_sqrt2],
        )
        .unwrap();
        assert!((mutual_coherence(&c).unwrap() - inv_sqrt2).abs() < 1e-15);
    }

    #[test]
    fn coherence_agrees_with_cosine_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let a = random_matrix(&mut rng, 6, 9);
        let mu = mutual_coherence(&a).unwrap();
        let theta = cosine_matrix(&a).unwrap();
        assert!((mu - theta.max_off_diagonal()).abs() < 1e-14);
    }

    #[test]
    fn erc_examples() {
        let id = DenseMatrix::identity(3);
        let report = erc_check(&id, &[0]).unwrap();
        assert_eq!(report.erc_value, 0.0);
        assert!(report.erc_holds);

        // A third column equal to the first: its coefficient is exactly 1.
        let a = DenseMatrix::from_column_major(
            3,
            3,
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0],
        )
        .unwrap();
        let report = erc_check(&a, &[0]).unwrap();
        assert!((report.erc_value - 1.0).abs() < 1e-12);
        assert!(!report.erc_holds);

        // A rank-deficient support is rejected.
        assert!(matches!(
            erc_check(&a, &[0, 2]),
            Err(Error::RankDeficientSupport { .. })
        ));
    }

    #[test]
    fn erc_matches_normal_equations_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_matrix(&mut rng, 8, 20);
        let support = [3, 11, 17];
        let report = erc_check(&a, &support).unwrap();

        // Oracle: explicit pseudoinverse through the normal equations.
        let s = support.len();
        let mut gram = vec![0.0; s * s];
        for (t, &jt) in support.iter().enumerate() {
            for (u, &ju) in support.iter().enumerate() {
                gram[u * s + t] = a
                    .column(jt)
                    .iter()
                    .zip(a.column(ju))
                    .map(|(x, y)| x * y)
                    .sum();
            }
        }
        let mut oracle = 0.0f64;
        for j in 0..a.cols() {
            if support.contains(&j) {
                continue;
            }
            let rhs: Vec<f64> = support
                .iter()
                .map(|&jt| a.column(jt).iter().zip(a.column(j)).map(|(x, y)| x * y).sum())
                .collect();
            let coef = solve_dense_3x3(&gram, &rhs);
            oracle = oracle.max(coef.iter().map(|c| c.abs()).sum());
        }
        assert!((report.erc_value - oracle).abs() < 1e-10);
    }

    fn solve_dense_3x3(g: &[f64], rhs: &[f64]) -> Vec<f64> {
        // Cramer's rule; the oracle support has size 3.
        let det = |m: &[f64; 9]| {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[3] * (m[1] * m[8] - m[2] * m[7])
                + m[6] * (m[1] * m[5] - m[2] * m[4])
        };
        let base: [f64; 9] = g.try_into().unwrap();
        let d = det(&base);
        (0..3)
            .map(|col| {
                let mut m = base;
                for row in 0..3 {
                    m[col * 3 + row] = rhs[row];
                }
                det(&m) / d
            })
            .collect()
    }

    #[test]
    fn uniqueness_bound_cases() {
        assert!(coherence_uniqueness(0.0, 5));
        assert!(coherence_uniqueness(0.999, 1));
        // Boundary is strict: 1/(2*3-1) = 0.2.
        assert!(!coherence_uniqueness(0.2, 3));
    }

    #[test]
    fn omp_identity_single_pick() {
        let a = DenseMatrix::identity(2);
        let out = omp_solve(&a, &[0.0, 5.0], 2, 1e-10).unwrap();
        assert_eq!(out.support, vec![1]);
        assert!((out.x_signed[1] - 5.0).abs() < 1e-12);
        assert_eq!(out.nnls_report.outer_iterations, 1);
    }

    #[test]
    fn omp_zero_rhs_empty_support() {
        let a = DenseMatrix::identity(2);
        let out = omp_solve(&a, &[0.0, 0.0], 2, 1e-10).unwrap();
        assert!(out.support.is_empty());
        assert_eq!(out.x_signed, vec![0.0, 0.0]);
    }

    #[test]
    fn omp_residual_orthogonal_to_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let a = random_matrix(&mut rng, 12, 20);
        let b: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let out = omp_solve(&a, &b, 6, 0.0).unwrap();
        let ax = a.mul_vec(&out.x_signed).unwrap();
        let r: Vec<f64> = b.iter().zip(&ax).map(|(x, y)| x - y).collect();
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        for &j in &out.support {
            let corr: f64 = a.column(j).iter().zip(&r).map(|(x, y)| x * y).sum();
            let nj: f64 = a.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(corr.abs() <= 1e-10 * nj * r_norm.max(1e-300));
        }
    }

    #[test]
    fn omp_recovers_two_sparse_under_low_coherence() {
        // Plenty of rows keeps random coherence below 1/3, which makes
        // two-step greedy recovery certain.
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let a = random_matrix(&mut rng, 256, 40);
        let mu = mutual_coherence(&a).unwrap();
        assert!(mu < 1.0 / 3.0, "coherence {mu} too large for the guarantee");
        let mut x = vec![0.0; 40];
        x[7] = 1.4;
        x[23] = -0.8;
        let b = a.mul_vec(&x).unwrap();
        let out = omp_solve(&a, &b, 2, 1e-10).unwrap();
        assert_eq!(out.support, vec![7, 23]);
        assert!((out.x_signed[7] - 1.4).abs() < 1e-10);
        assert!((out.x_signed[23] + 0.8).abs() < 1e-10);
    }

    /// Resamples off-support columns whose coefficient l1 norm crosses the
    /// margin until the recovery condition holds.
    fn perturb_until_erc(
        a: &mut DenseMatrix,
        support: &[usize],
        rng: &mut ChaCha8Rng,
    ) -> bool {
        let zero = vec![0.0; a.rows()];
        for _ in 0..50 {
            let mut ws = QrWorkspace::new(a, &zero).unwrap();
            if ws.append_columns(support).is_err() {
                return false;
            }
            let mut violators = Vec::new();
            for j in 0..a.cols() {
                if support.contains(&j) {
                    continue;
                }
                let coef = ws.least_squares_coefficients(j).unwrap();
                if coef.iter().map(|c| c.abs()).sum::<f64>() >= 0.98 {
                    violators.push(j);
                }
            }
            if violators.is_empty() {
                return true;
            }
            for j in violators {
                let fresh: Vec<f64> =
                    (0..a.rows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                a.set_column(j, &fresh).unwrap();
            }
        }
        false
    }

    #[test]
    fn planted_recovery_with_erc_certificate() {
        // Plant a 3-sparse signed solution on a wide matrix, perturbing
        // columns until the support passes the recovery check.
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut verified = 0;
        for _ in 0..8 {
            let mut a = random_matrix(&mut rng, 10, 30);
            let support = [2usize, 14, 27];
            if !perturb_until_erc(&mut a, &support, &mut rng) {
                continue;
            }
            assert!(erc_check(&a, &support).unwrap().erc_holds);
            let mut x = vec![0.0; 30];
            for (t, &j) in support.iter().enumerate() {
                x[j] = (1.0 + t as f64) * if t % 2 == 0 { 1.0 } else { -1.0 };
            }
            let b = a.mul_vec(&x).unwrap();
            verified += 1;
            let out = positivity_trick_solve(&a, &b, &SolverConfig::default()).unwrap();
            assert_eq!(out.support, support.to_vec());
            let dist: f64 = out
                .x_signed
                .iter()
                .zip(&x)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt();
            assert!(dist <= 1e-8, "distance {dist}");
        }
        assert!(verified >= 5, "too few instances passed the recovery check");
    }
}
