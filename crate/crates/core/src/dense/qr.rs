//! Incrementally updated partial QR factorization.
//!
//! The workspace holds a working copy of the problem matrix together with
//! the transformed right-hand side. Orthogonal transforms are logged and
//! applied lazily: a column outside the passive set is caught up only when
//! it is next needed, so the orthogonal factor is never materialized.
//!
//! With passive set `P` of size `k`, the working copy realizes
//!
//! ```text
//! Qᵀ A Π = [ R  B ]
//!          [ 0  C ]
//! ```
//!
//! where `R` is the `k`-order upper triangle stored in the passive columns,
//! and the trailing rows of the remaining columns form `B` over `C`. The
//! permutation is tracked by the ordered passive list; columns of `A` are
//! never physically moved.

use crate::dense::matrix::{dot, norm2};
use crate::dense::DenseMatrix;
use crate::error::Error;
use crate::Result;

/// Compact Householder reflector acting on rows `offset..m`.
///
/// Stored with the convention `v[0] = 1`; applying it maps a vector `x`
/// to `x - beta (vᵀx) v` on the affected rows.
#[derive(Debug, Clone)]
pub struct HouseholderReflector {
    pub offset: usize,
    pub beta: f64,
    pub v: Vec<f64>,
}

impl HouseholderReflector {
    /// Applies the reflector to the tail of a full-length column.
    pub fn apply(&self, column: &mut [f64]) {
        let tail = &mut column[self.offset..self.offset + self.v.len()];
        let t = self.beta * dot(&self.v, tail);
        if t != 0.0 {
            for (x, &vi) in tail.iter_mut().zip(&self.v) {
                *x -= t * vi;
            }
        }
    }

    fn flop_cost(&self) -> u64 {
        4 * self.v.len() as u64
    }
}

/// Plane rotation acting on adjacent rows `(i, i+1)`, with `c² + s² = 1`.
#[derive(Debug, Clone, Copy)]
pub struct GivensRotation {
    pub i: usize,
    pub c: f64,
    pub s: f64,
}

impl GivensRotation {
    /// Row index of the second rotated row.
    pub fn j(&self) -> usize {
        self.i + 1
    }

    /// Applies the rotation to a full-length column.
    pub fn apply(&self, column: &mut [f64]) {
        let a = column[self.i];
        let b = column[self.i + 1];
        column[self.i] = self.c * a + self.s * b;
        column[self.i + 1] = -self.s * a + self.c * b;
    }
}

/// One logged orthogonal transform.
#[derive(Debug, Clone)]
pub enum Transform {
    Reflect(HouseholderReflector),
    Rotate(GivensRotation),
}

impl Transform {
    fn apply(&self, column: &mut [f64]) {
        match self {
            Transform::Reflect(h) => h.apply(column),
            Transform::Rotate(g) => g.apply(column),
        }
    }

    fn flop_cost(&self) -> u64 {
        match self {
            Transform::Reflect(h) => h.flop_cost(),
            Transform::Rotate(_) => 6,
        }
    }
}

/// Mutable partial QR state over a fixed matrix and right-hand side.
#[derive(Debug, Clone)]
pub struct QrWorkspace {
    m: usize,
    n: usize,
    /// Working copy of the matrix, column-major, transformed lazily.
    data: Vec<f64>,
    /// Per column: how many of `transforms` have been applied to it.
    applied: Vec<usize>,
    transforms: Vec<Transform>,
    /// Right-hand side with every transform applied.
    rhs: Vec<f64>,
    /// Ordered passive set (original column indices, insertion order).
    passive: Vec<usize>,
    /// Original index -> position in `passive`.
    position: Vec<Option<usize>>,
    singularity_tol: f64,
    flops: u64,
    householder_count: u64,
    givens_count: u64,
}

impl QrWorkspace {
    /// Initializes the workspace over `a` and `b`: empty passive set,
    /// trailing block equal to `a`, right-hand side copied verbatim.
    pub fn new(a: &DenseMatrix, b: &[f64]) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "rhs length {} does not match row count {}",
                b.len(),
                a.rows()
            )));
        }
        let (m, n) = (a.rows(), a.cols());
        let tol = m.max(n) as f64 * f64::EPSILON * a.frobenius_norm();
        Ok(QrWorkspace {
            m,
            n,
            data: a.data().to_vec(),
            applied: vec![0; n],
            transforms: Vec::new(),
            rhs: b.to_vec(),
            passive: Vec::new(),
            position: vec![None; n],
            singularity_tol: tol,
            flops: 0,
            householder_count: 0,
            givens_count: 0,
        })
    }

    /// Overrides the diagonal singularity tolerance.
    pub fn set_singularity_tolerance(&mut self, tol: f64) -> Result<()> {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "singularity tolerance must be positive and finite, got {tol}"
            )));
        }
        self.singularity_tol = tol;
        Ok(())
    }

    pub fn singularity_tolerance(&self) -> f64 {
        self.singularity_tol
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    /// Ordered passive set.
    pub fn passive(&self) -> &[usize] {
        &self.passive
    }

    pub fn passive_len(&self) -> usize {
        self.passive.len()
    }

    pub fn is_passive(&self, column: usize) -> bool {
        self.position[column].is_some()
    }

    /// Position of `column` within the passive order, if passive.
    pub fn position_of(&self, column: usize) -> Option<usize> {
        self.position[column]
    }

    /// The permutation realized by the passive ordering: passive columns
    /// first (in insertion order), then the remaining columns in index
    /// order.
    pub fn column_map(&self) -> Vec<usize> {
        let mut map = self.passive.clone();
        map.extend((0..self.n).filter(|&j| self.position[j].is_none()));
        map
    }

    /// Right-hand side after all applied transforms.
    pub fn transformed_rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Norm of the trailing rows of the transformed right-hand side; this
    /// is the current least-squares residual norm on the passive set.
    pub fn residual_tail_norm(&self) -> f64 {
        norm2(&self.rhs[self.passive.len()..])
    }

    /// Log of every applied reflector and rotation, in order.
    pub fn transform_log(&self) -> &[Transform] {
        &self.transforms
    }

    pub fn flops(&self) -> u64 {
        self.flops
    }

    pub fn householder_reflections(&self) -> u64 {
        self.householder_count
    }

    pub fn givens_rotations(&self) -> u64 {
        self.givens_count
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.m..(j + 1) * self.m]
    }

    /// Applies pending transforms to column `j`.
    fn catch_up(&mut self, j: usize) {
        let from = self.applied[j];
        if from == self.transforms.len() {
            return;
        }
        let (start, end) = (j * self.m, (j + 1) * self.m);
        // Split borrows: transforms are read-only while the column mutates.
        let (data, transforms) = (&mut self.data[start..end], &self.transforms[from..]);
        let mut cost = 0;
        for t in transforms {
            t.apply(data);
            cost += t.flop_cost();
        }
        self.flops += cost;
        self.applied[j] = self.transforms.len();
    }

    /// Appends columns to the passive set in the given order, growing `R`
    /// by one Householder reflector per column.
    ///
    /// On `SingularUpdate` the offending column is left untouched but
    /// columns appended earlier in the same call remain passive.
    pub fn append_columns(&mut self, columns: &[usize]) -> Result<()> {
        for &j in columns {
            self.append_column(j)?;
        }
        Ok(())
    }

    /// Appends a single column to the passive set.
    pub fn append_column(&mut self, column: usize) -> Result<()> {
        if column >= self.n {
            return Err(Error::DimensionMismatch(format!(
                "column index {column} out of range for {} columns",
                self.n
            )));
        }
        if self.position[column].is_some() {
            return Err(Error::AlreadyPassive { column });
        }
        self.catch_up(column);
        let k = self.passive.len();
        let m = self.m;
        let tail: Vec<f64> = self.col(column)[k..m].to_vec();
        let nu = norm2(&tail);
        self.flops += 2 * tail.len() as u64;
        if nu <= self.singularity_tol {
            return Err(Error::SingularUpdate { column });
        }
        if tail[1..].iter().all(|&x| x == 0.0) {
            // Already triangular in this column; nothing to reflect.
            self.position[column] = Some(k);
            self.passive.push(column);
            self.applied[column] = self.transforms.len();
            return Ok(());
        }
        let alpha = tail[0];
        // r = -sign(alpha) * nu avoids cancellation in alpha - r.
        let r = if alpha >= 0.0 { -nu } else { nu };
        let denom = alpha - r;
        let mut v = Vec::with_capacity(m - k);
        v.push(1.0);
        v.extend(tail[1..].iter().map(|&x| x / denom));
        let beta = (r - alpha) / r;
        self.flops += 3 * (m - k) as u64;
        let reflector = HouseholderReflector { offset: k, beta, v };

        // The new column becomes (r, 0, ..., 0) below row k by construction.
        {
            let col = self.col_mut(column);
            col[k] = r;
            for x in &mut col[k + 1..] {
                *x = 0.0;
            }
        }
        reflector.apply(&mut self.rhs);
        self.flops += reflector.flop_cost();
        // Existing passive columns have no entries at or below `k`; the
        // reflector is a structural no-op for them.
        self.transforms.push(Transform::Reflect(reflector));
        self.householder_count += 1;
        self.position[column] = Some(k);
        self.passive.push(column);
        self.applied[column] = self.transforms.len();
        Ok(())
    }

    /// Removes passive columns and restores `R` to triangular form with a
    /// Givens sweep, annihilating subdiagonals in column-major order.
    pub fn remove_columns(&mut self, columns: &[usize]) -> Result<()> {
        if columns.is_empty() {
            return Ok(());
        }
        let mut removed_pos = Vec::with_capacity(columns.len());
        for &j in columns {
            if j >= self.n {
                return Err(Error::DimensionMismatch(format!(
                    "column index {j} out of range for {} columns",
                    self.n
                )));
            }
            match self.position[j] {
                Some(p) => removed_pos.push(p),
                None => return Err(Error::IndexNotPassive { column: j }),
            }
        }
        removed_pos.sort_unstable();
        removed_pos.dedup();

        // Removed columns leave the factorization now; they were fully
        // applied while passive, so stamping them here makes the upcoming
        // rotations reach them lazily.
        for &j in columns {
            self.position[j] = None;
            self.applied[j] = self.transforms.len();
        }

        let old_passive = std::mem::take(&mut self.passive);
        let mut retained: Vec<usize> = Vec::with_capacity(old_passive.len() - removed_pos.len());
        let mut removed_before = 0;
        for (old_pos, &col) in old_passive.iter().enumerate() {
            if removed_before < removed_pos.len() && removed_pos[removed_before] == old_pos {
                removed_before += 1;
                continue;
            }
            let new_pos = old_pos - removed_before;
            // Annihilate the subdiagonal entries of this column bottom-up;
            // earlier retained columns have no rows this deep, so the
            // rotation is non-trivial only from this column rightward.
            for target in (new_pos + 1..=old_pos).rev() {
                let x = self.col(col)[target - 1];
                let y = self.col(col)[target];
                let rot = plane_rotation(x, y, target - 1);
                {
                    let c = self.col_mut(col);
                    c[target - 1] = rot.c * x + rot.s * y;
                    c[target] = 0.0;
                }
                for (other_pos, &other) in old_passive.iter().enumerate().skip(old_pos + 1) {
                    if removed_pos.binary_search(&other_pos).is_ok() {
                        continue;
                    }
                    rot.apply(self.col_mut(other));
                    self.flops += 6;
                }
                rot.apply(&mut self.rhs);
                self.flops += 6;
                self.transforms.push(Transform::Rotate(rot));
                self.givens_count += 1;
            }
            retained.push(col);
        }
        for (new_pos, &col) in retained.iter().enumerate() {
            self.position[col] = Some(new_pos);
            self.applied[col] = self.transforms.len();
        }
        self.passive = retained;
        Ok(())
    }

    /// Replaces the passive column at `pos` by its structural twin: the
    /// `R` column is negated in place and no rotation work is done.
    ///
    /// Valid only when the workspace matrix pairs each column with its
    /// exact negation; the caller owns that structural knowledge.
    pub fn sign_flip(&mut self, pos: usize, twin: usize) -> Result<()> {
        if pos >= self.passive.len() {
            return Err(Error::InvalidParameter(format!(
                "passive position {pos} out of range for passive set of size {}",
                self.passive.len()
            )));
        }
        if twin >= self.n {
            return Err(Error::DimensionMismatch(format!(
                "twin index {twin} out of range for {} columns",
                self.n
            )));
        }
        if self.position[twin].is_some() {
            return Err(Error::TwinAlreadyPassive { column: twin });
        }
        let col = self.passive[pos];
        if col == twin {
            return Err(Error::InvalidParameter("a column cannot be its own twin".into()));
        }
        // The twin's transformed state is exactly the negation of the
        // passive column's: copy it over rather than catching up. Negation
        // is exact, so flipping twice restores the original bits.
        let src: Vec<f64> = self.col(col).to_vec();
        for (d, &s) in self.col_mut(twin).iter_mut().zip(&src) {
            *d = -s;
        }
        self.applied[twin] = self.transforms.len();
        self.applied[col] = self.transforms.len();
        self.position[twin] = Some(pos);
        self.position[col] = None;
        self.passive[pos] = twin;
        Ok(())
    }

    /// Solves `R y = b̃` on the current passive set by back substitution.
    /// The result is ordered like [`passive`](Self::passive).
    pub fn solve_current(&self) -> Result<Vec<f64>> {
        let k = self.passive.len();
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = self.rhs[i];
            for t in i + 1..k {
                acc -= self.col(self.passive[t])[i] * y[t];
            }
            let d = self.col(self.passive[i])[i];
            if d.abs() <= self.singularity_tol {
                return Err(Error::SingularDiagonal { index: i });
            }
            y[i] = acc / d;
        }
        Ok(y)
    }

    /// Least-squares coefficients of column `j` against the passive set:
    /// solves `R z = head(Qᵀ aⱼ)`. Used by the exact-recovery check.
    pub fn least_squares_coefficients(&mut self, j: usize) -> Result<Vec<f64>> {
        if j >= self.n {
            return Err(Error::DimensionMismatch(format!(
                "column index {j} out of range for {} columns",
                self.n
            )));
        }
        self.catch_up(j);
        let k = self.passive.len();
        let head: Vec<f64> = self.col(j)[..k].to_vec();
        let mut z = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = head[i];
            for t in i + 1..k {
                acc -= self.col(self.passive[t])[i] * z[t];
            }
            let d = self.col(self.passive[i])[i];
            if d.abs() <= self.singularity_tol {
                return Err(Error::SingularDiagonal { index: i });
            }
            z[i] = acc / d;
        }
        Ok(z)
    }

    /// The dense upper-triangular factor, or `None` while the passive set
    /// is empty. Intended for inspection and tests; solvers work in place.
    pub fn r_matrix(&self) -> Option<DenseMatrix> {
        let k = self.passive.len();
        if k == 0 {
            return None;
        }
        let mut data = vec![0.0; k * k];
        for (t, &col) in self.passive.iter().enumerate() {
            for i in 0..=t {
                data[t * k + i] = self.col(col)[i];
            }
        }
        Some(DenseMatrix::from_raw_unchecked(k, k, data))
    }

    /// Catches up all non-passive columns and returns their trailing rows
    /// as a dense block, together with the original column indices, in
    /// index order. Returns `None` when there are no trailing rows or no
    /// active columns.
    pub fn trailing_block(&mut self) -> Option<(DenseMatrix, Vec<usize>)> {
        let k = self.passive.len();
        if k >= self.m {
            return None;
        }
        let active: Vec<usize> = (0..self.n).filter(|&j| self.position[j].is_none()).collect();
        if active.is_empty() {
            return None;
        }
        let rows = self.m - k;
        let mut data = Vec::with_capacity(rows * active.len());
        for &j in &active {
            self.catch_up(j);
            data.extend_from_slice(&self.col(j)[k..]);
        }
        Some((DenseMatrix::from_raw_unchecked(rows, active.len(), data), active))
    }
}

/// Rotation on rows `(i, i+1)` annihilating `y` against `x`.
fn plane_rotation(x: f64, y: f64, i: usize) -> GivensRotation {
    let r = x.hypot(y);
    if r == 0.0 {
        GivensRotation { i, c: 1.0, s: 0.0 }
    } else {
        GivensRotation { i, c: x / r, s: y / r }
    }
}

/// Back substitution on an explicit upper-triangular matrix.
pub fn solve_upper_triangular(r: &DenseMatrix, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let k = r.cols();
    if r.rows() != k {
        return Err(Error::DimensionMismatch(format!(
            "triangular factor must be square, got {}x{}",
            r.rows(),
            k
        )));
    }
    if rhs.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "rhs length {} does not match order {k}",
            rhs.len()
        )));
    }
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = rhs[i];
        for t in i + 1..k {
            acc -= r.get(i, t) * y[t];
        }
        let d = r.get(i, i);
        if d.abs() <= tol {
            return Err(Error::SingularDiagonal { index: i });
        }
        y[i] = acc / d;
    }
    Ok(y)
}
