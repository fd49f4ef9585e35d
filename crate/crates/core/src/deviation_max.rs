//! Block column selection by deviation maximization.
//!
//! A block is seeded with the dual-steepest column and grown greedily with
//! candidates that clear two value thresholds and stay pairwise far from
//! collinearity, measured by the cosine matrix of the trailing block.

use crate::dense::DenseMatrix;
use crate::error::Error;
use crate::Result;

/// Thresholds steering the block selection.
///
/// `tau1` filters on dual value, `tau2` on trailing column norm, `delta`
/// bounds the pairwise cosine magnitude inside the block, and `k_max`
/// caps the block size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmParams {
    pub tau1: f64,
    pub tau2: f64,
    pub delta: f64,
    pub k_max: usize,
}

impl Default for DmParams {
    fn default() -> Self {
        DmParams { tau1: 0.6, tau2: 0.15, delta: 0.9, k_max: 32 }
    }
}

impl DmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau1 > 0.0 && self.tau1 <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tau1 must lie in (0, 1], got {}",
                self.tau1
            )));
        }
        if !(self.tau2 > 0.0 && self.tau2 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tau2 must lie in (0, 1), got {}",
                self.tau2
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.k_max < 2 {
            return Err(Error::InvalidParameter(format!(
                "k_max must be at least 2, got {}",
                self.k_max
            )));
        }
        Ok(())
    }

    /// Same thresholds with `delta` tightened to [`delta_bound`], the value
    /// for which block nonsingularity is guaranteed a priori.
    pub fn strict(self) -> Self {
        DmParams { delta: delta_bound(self.tau2, self.k_max), ..self }
    }
}

/// The bound `tau2 / (k_max - 1)` under which every selected block is
/// provably well conditioned. The practical default is much looser.
pub fn delta_bound(tau2: f64, k_max: usize) -> f64 {
    debug_assert!(k_max >= 2);
    tau2 / (k_max - 1) as f64
}

/// Symmetric matrix of pairwise column cosines, with unit diagonal and
/// entries clamped to `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct CosineMatrix {
    order: usize,
    theta: Vec<f64>,
}

impl CosineMatrix {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.theta[j * self.order + i]
    }

    /// Largest off-diagonal magnitude; zero for a single column.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.order {
            for i in 0..j {
                best = best.max(self.get(i, j).abs());
            }
        }
        best
    }
}

/// Computes the cosine matrix of the columns of `c`.
pub fn cosine_matrix(c: &DenseMatrix) -> Result<CosineMatrix> {
    let k = c.cols();
    let norms = c.column_norms();
    for (j, &nj) in norms.iter().enumerate() {
        if nj <= f64::MIN_POSITIVE {
            return Err(Error::ZeroColumn { column: j });
        }
    }
    let mut theta = vec![0.0; k * k];
    for j in 0..k {
        theta[j * k + j] = 1.0;
        for i in 0..j {
            let mut t = dotcol(c, i, j) / (norms[i] * norms[j]);
            t = t.clamp(-1.0, 1.0);
            theta[j * k + i] = t;
            theta[i * k + j] = t;
        }
    }
    Ok(CosineMatrix { order: k, theta })
}

fn dotcol(c: &DenseMatrix, i: usize, j: usize) -> f64 {
    c.column(i).iter().zip(c.column(j)).map(|(x, y)| x * y).sum()
}

/// Selects a block of column positions from the trailing block `c`.
///
/// `u1` holds the dual values and `u2` the trailing column norms, both
/// indexed like the columns of `c`. The first returned position is the
/// lowest-index argmax of `u1`; every further position clears both value
/// thresholds and keeps all pairwise cosines below `delta` in magnitude.
/// At most `k_max` positions are returned, candidates visited in order of
/// descending `u1` with ties broken by lower index.
pub fn select_columns(c: &DenseMatrix, u1: &[f64], u2: &[f64], params: &DmParams) -> Vec<usize> {
    debug_assert_eq!(c.cols(), u1.len());
    debug_assert_eq!(c.cols(), u2.len());
    let leader = match argmax(u1) {
        Some(i) => i,
        None => return Vec::new(),
    };
    if u2[leader] <= 0.0 {
        // A spent leader cannot widen the block; the caller deals with it.
        return vec![leader];
    }
    let max1 = u1[leader];
    let max2 = u2.iter().cloned().fold(0.0f64, f64::max);
    let mut candidates: Vec<usize> = (0..u1.len())
        .filter(|&i| {
            i != leader
                && u2[i] > 0.0
                && u1[i] >= params.tau1 * max1
                && u2[i] >= params.tau2 * max2
        })
        .collect();
    candidates.sort_by(|&a, &b| {
        u1[b].partial_cmp(&u1[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    candidates.truncate(params.k_max);
    if candidates.is_empty() {
        return vec![leader];
    }

    // Cosines over the leader plus the surviving candidates.
    let mut pool = Vec::with_capacity(candidates.len() + 1);
    pool.push(leader);
    pool.extend_from_slice(&candidates);
    let sub = match c.select_columns(&pool) {
        Ok(s) => s,
        Err(_) => return vec![leader],
    };
    let theta = match cosine_matrix(&sub) {
        Ok(t) => t,
        Err(_) => return vec![leader],
    };

    let mut block_local = vec![0usize]; // positions within `pool`
    for t in 1..pool.len() {
        if block_local.len() >= params.k_max {
            break;
        }
        if block_local.iter().all(|&j| theta.get(t, j).abs() < params.delta) {
            block_local.push(t);
        }
    }
    block_local.into_iter().map(|t| pool[t]).collect()
}

fn argmax(u: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in u.iter().enumerate() {
        match best {
            None => best = Some(i),
            Some(b) if v > u[b] => best = Some(i),
            _ => {}
        }
    }
    best
}
