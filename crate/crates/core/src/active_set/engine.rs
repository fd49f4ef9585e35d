//! The shared active-set loop behind both solvers.

use crate::dense::{DenseMatrix, QrWorkspace};
use crate::deviation_max::{self, DmParams};
use crate::error::Error;
use crate::Result;

use super::{SolveReport, SolveStatus, SolverConfig};

/// How columns enter the passive set.
pub(crate) enum Selection {
    /// One column per outer iteration: the dual argmax.
    Single,
    /// A deviation-maximization block per outer iteration.
    Block(DmParams),
}

/// Step length `min { x_i / (x_i - y_i) : i passive, y_i <= tol }`,
/// clamped into `[0, 1]`. `x` and `y` are full-length vectors.
pub fn step_length(x: &[f64], y: &[f64], passive: &[usize], feas_tol: f64) -> Result<f64> {
    step_length_detail(x, y, passive, feas_tol).map(|(alpha, _)| alpha)
}

pub(crate) fn step_length_detail(
    x: &[f64],
    y: &[f64],
    passive: &[usize],
    feas_tol: f64,
) -> Result<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for &i in passive {
        if y[i] <= feas_tol {
            let denom = x[i] - y[i];
            let ratio = if denom > 0.0 { x[i] / denom } else { 0.0 };
            if best.map_or(true, |(a, _)| ratio < a) {
                best = Some((ratio, i));
            }
        }
    }
    match best {
        Some((alpha, i)) => Ok((alpha.min(1.0), i)),
        None => Err(Error::NoBlockingIndex),
    }
}

/// Trims the trailing block of the passive set until the trial solution is
/// positive on every surviving block component or a single block column is
/// left. Each drop removes the last passive column, which needs no
/// rotation work. Returns the trial solution in passive order and the
/// number of dropped columns; a lone survivor may still be nonpositive,
/// which the caller must handle.
pub fn feasibility_shrink(
    ws: &mut QrWorkspace,
    block_len: usize,
    feas_tol: f64,
) -> Result<(Vec<f64>, usize)> {
    if block_len == 0 || block_len > ws.passive_len() {
        return Err(Error::InvalidParameter(format!(
            "block length {block_len} invalid for passive set of size {}",
            ws.passive_len()
        )));
    }
    let start = ws.passive_len() - block_len;
    let mut y = ws.solve_current()?;
    let mut drops = 0usize;
    while ws.passive_len() - start > 1 {
        if y[start..].iter().all(|&v| v > feas_tol) {
            break;
        }
        let last = ws.passive()[ws.passive_len() - 1];
        ws.remove_columns(&[last])?;
        drops += 1;
        y = ws.solve_current()?;
    }
    Ok((y, drops))
}

fn scatter(y: &mut [f64], ws: &QrWorkspace, y_passive: &[f64]) {
    y.fill(0.0);
    for (t, &j) in ws.passive().iter().enumerate() {
        y[j] = y_passive[t];
    }
}

fn snapshot(trajectory: &mut Option<Vec<Vec<usize>>>, ws: &QrWorkspace) {
    if let Some(t) = trajectory {
        t.push(ws.passive().to_vec());
    }
}

pub(crate) fn solve(
    a: &DenseMatrix,
    b: &[f64],
    cfg: &SolverConfig,
    selection: Selection,
    twin_half: Option<usize>,
) -> Result<SolveReport> {
    cfg.validate()?;
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} does not match row count {m}",
            b.len()
        )));
    }
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dual_tol = cfg
        .dual_tolerance
        .unwrap_or(10.0 * f64::EPSILON * a.frobenius_norm() * norm_b);
    let feas_tol = cfg.feasibility_tolerance;
    let cap = cfg.max_outer_iterations.unwrap_or(10 * n);
    let mut trajectory: Option<Vec<Vec<usize>>> = cfg.record_trajectory.then(Vec::new);

    if norm_b == 0.0 {
        // x = 0 is optimal: the dual vector vanishes identically.
        return Ok(SolveReport {
            x_star: vec![0.0; n],
            w_star: vec![0.0; n],
            passive_star: Vec::new(),
            active_star: (0..n).collect(),
            residual_norm: 0.0,
            objective_history: vec![0.0],
            outer_iterations: 0,
            inner_iterations: 0,
            feasibility_drops: 0,
            sign_flips: 0,
            givens_rotations: 0,
            householder_reflections: 0,
            status: SolveStatus::Converged,
            trajectory,
        });
    }

    let mut ws = QrWorkspace::new(a, b)?;
    if let Some(tol) = cfg.singularity_tolerance {
        ws.set_singularity_tolerance(tol)?;
    }

    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut w = a.tr_mul_vec(b)?;
    let mut history = vec![norm_b * norm_b];
    let mut masked = vec![false; n];
    let mut outer = 0usize;
    let mut inner_total = 0usize;
    let mut drops_total = 0usize;
    let mut flips_total = 0usize;
    let mut status = SolveStatus::Converged;

    'outer: loop {
        if outer >= cap {
            status = SolveStatus::IterationCapReached;
            break;
        }
        masked.fill(false);

        // Selection, append, and the block feasibility loop. A numerically
        // dependent or stalled leader is masked for this outer iteration
        // and selection retried.
        'select: loop {
            let mut leader: Option<usize> = None;
            for j in 0..n {
                if ws.is_passive(j) || masked[j] {
                    continue;
                }
                if leader.map_or(true, |l| w[j] > w[l]) {
                    leader = Some(j);
                }
            }
            let leader = match leader {
                Some(l) if w[l] > dual_tol => l,
                _ => break 'outer,
            };

            let block: Vec<usize> = match &selection {
                Selection::Single => vec![leader],
                Selection::Block(params) => match ws.trailing_block() {
                    None => vec![leader],
                    Some((c, idx)) => {
                        let u2 = c.column_norms();
                        let mut u1 = vec![f64::NEG_INFINITY; idx.len()];
                        for (t, &j) in idx.iter().enumerate() {
                            if !masked[j] {
                                u1[t] = w[j];
                            }
                        }
                        let local = deviation_max::select_columns(&c, &u1, &u2, params);
                        debug_assert_eq!(idx[local[0]], leader);
                        local.into_iter().map(|t| idx[t]).collect()
                    }
                },
            };

            let mut appended: Vec<usize> = Vec::with_capacity(block.len());
            for &j in &block {
                match ws.append_column(j) {
                    Ok(()) => appended.push(j),
                    Err(Error::SingularUpdate { .. }) => {
                        if appended.is_empty() {
                            masked[j] = true;
                            continue 'select;
                        }
                        // A dependent follower is silently left out.
                    }
                    Err(e) => return Err(e),
                }
            }

            let (y_passive, drops) = feasibility_shrink(&mut ws, appended.len(), feas_tol)?;
            drops_total += drops;
            appended.truncate(appended.len() - drops);
            scatter(&mut y, &ws, &y_passive);

            if appended.len() == 1 && y[appended[0]] <= feas_tol {
                // The lone survivor cannot improve the objective: a
                // numerical stall. Undo (the column is last, no rotation
                // work) and pick another pivot this round.
                ws.remove_columns(&[appended[0]])?;
                masked[appended[0]] = true;
                continue 'select;
            }
            snapshot(&mut trajectory, &ws);
            break 'select;
        }

        // Inner loop: restore feasibility of the iterate.
        let mut inner_passes = 0usize;
        loop {
            let blocking: Vec<usize> =
                ws.passive().iter().copied().filter(|&i| y[i] <= feas_tol).collect();
            if blocking.is_empty() {
                break;
            }

            if let (Some(half), true) = (twin_half, cfg.sign_flip_enabled) {
                let twin = |k: usize| (k + half) % (2 * half);
                let all_flippable = blocking
                    .iter()
                    .all(|&k| y[k] < 0.0 && !ws.is_passive(twin(k)));
                if all_flippable {
                    // Swap each blocking column for its opposite-sign twin:
                    // one R column negation apiece, no rotation work, and
                    // the trial solution only changes sign at those
                    // components.
                    for &k in &blocking {
                        let t = twin(k);
                        let pos = ws.position_of(k).expect("blocking index is passive");
                        ws.sign_flip(pos, t)?;
                        y[t] = -y[k];
                        y[k] = 0.0;
                        flips_total += 1;
                    }
                    snapshot(&mut trajectory, &ws);
                    continue;
                }
            }

            inner_passes += 1;
            inner_total += 1;
            if inner_passes > m + n {
                // Unreachable on full-rank data; bail out rather than spin.
                status = SolveStatus::IterationCapReached;
                break 'outer;
            }
            let (alpha, blocking_idx) = step_length_detail(&x, &y, ws.passive(), feas_tol)?;
            for &i in ws.passive() {
                x[i] += alpha * (y[i] - x[i]);
            }
            x[blocking_idx] = 0.0;
            let dropped: Vec<usize> =
                ws.passive().iter().copied().filter(|&i| x[i] <= 0.0).collect();
            for &i in &dropped {
                x[i] = 0.0;
            }
            ws.remove_columns(&dropped)?;
            snapshot(&mut trajectory, &ws);
            let y_passive = ws.solve_current()?;
            scatter(&mut y, &ws, &y_passive);
        }

        x.copy_from_slice(&y);
        let ax = a.mul_vec(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
        history.push(r.iter().map(|v| v * v).sum());
        w = a.tr_mul_vec(&r)?;
        outer += 1;
    }

    // Report everything at the final iterate.
    let ax = a.mul_vec(&x)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    let w_star = a.tr_mul_vec(&r)?;
    let residual_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let passive_star = ws.passive().to_vec();
    let active_star: Vec<usize> = (0..n).filter(|&j| !ws.is_passive(j)).collect();

    Ok(SolveReport {
        x_star: x,
        w_star,
        passive_star,
        active_star,
        residual_norm,
        objective_history: history,
        outer_iterations: outer,
        inner_iterations: inner_total,
        feasibility_drops: drops_total,
        sign_flips: flips_total,
        givens_rotations: ws.givens_rotations(),
        householder_reflections: ws.householder_reflections(),
        status,
        trajectory,
    })
}
