//! Small dense factorizations used by the stencil solvers.
//!
//! Matrices here are at most a few hundred rows. Rows and columns are
//! equilibrated before a partial-pivoting LU so that the pivot-ratio
//! condition estimate reflects genuine near-singularity rather than the
//! wildly different scales of shifted monomial columns on small stencils.

use nalgebra::Dyn;
use nalgebra::{DMatrix, DVector, LU};

/// Pivot ratios above this are treated as exact singularity.
pub const SINGULAR_CONDITION: f64 = 1.0 / f64::EPSILON;

/// Condition estimates above this are reported as ill-conditioned.
pub const ILL_CONDITIONED: f64 = 1e14;

#[derive(Debug, Clone)]
pub struct EquilibratedLu {
    lu: LU<f64, Dyn, Dyn>,
    row_scale: DVector<f64>,
    col_scale: DVector<f64>,
    condition: f64,
}

impl EquilibratedLu {
    /// Factor `a` after max-norm row then column equilibration. Returns
    /// `Err(condition)` when the matrix is singular to working precision (a
    /// zero row or column, a zero pivot, or a pivot ratio beyond
    /// [`SINGULAR_CONDITION`]).
    pub fn factor(a: &DMatrix<f64>) -> Result<Self, f64> {
        assert!(a.is_square(), "LU needs a square matrix");
        let (row_scale, col_scale) = max_norm_scales(a);
        if row_scale.iter().chain(&col_scale).any(|s| !s.is_finite()) {
            return Err(f64::INFINITY);
        }
        Self::factor_scaled(a, &row_scale, &col_scale)
    }

    /// Factor `diag(row_scale) a diag(col_scale)` and solve through it.
    pub fn factor_scaled(a: &DMatrix<f64>, row_scale: &[f64], col_scale: &[f64]) -> Result<Self, f64> {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.nrows();
        let scaled = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * row_scale[i] * col_scale[j]);
        if scaled.iter().any(|v| !v.is_finite()) {
            return Err(f64::INFINITY);
        }
        let lu = scaled.lu();
        let u = lu.u();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for i in 0..n {
            let p = u[(i, i)].abs();
            lo = lo.min(p);
            hi = hi.max(p);
        }
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !condition.is_finite() || condition >= SINGULAR_CONDITION {
            return Err(condition);
        }
        Ok(Self { lu, row_scale: DVector::from_column_slice(row_scale), col_scale: DVector::from_column_slice(col_scale), condition })
    }

    pub fn size(&self) -> usize {
        self.row_scale.len()
    }

    /// Pivot-ratio estimate of the condition number of the equilibrated matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Solve `A X = B` for every column of `b`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(b.nrows(), self.size());
        let rhs = DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * self.row_scale[i]);
        let y = self.lu.solve(&rhs).expect("factorization was checked to be nonsingular");
        DMatrix::from_fn(y.nrows(), y.ncols(), |i, j| y[(i, j)] * self.col_scale[i])
    }
}

/// Max-norm row scaling followed by max-norm column scaling of the
/// row-scaled matrix. A zero row or column gets an infinite scale.
pub fn max_norm_scales(a: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let (r, c) = a.shape();
    let row_scale: Vec<f64> = (0..r).map(|i| 1.0 / a.row(i).iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))).collect();
    let col_scale: Vec<f64> = (0..c).map(|j| 1.0 / (0..r).fold(0.0_f64, |acc, i| acc.max((a[(i, j)] * row_scale[i]).abs()))).collect();
    (row_scale, col_scale)
}

/// Minimum-norm least-squares solve of `A X = B` through the scaled matrix
/// `diag(row_scale) A diag(col_scale)`, discarding its singular values below
/// `rel_cutoff * sigma_max`. Returns the solution and the numerical rank used.
pub fn lstsq_scaled(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    row_scale: &[f64],
    col_scale: &[f64],
    rel_cutoff: f64,
) -> Option<(DMatrix<f64>, usize)> {
    let (r, c) = a.shape();
    let scaled = DMatrix::from_fn(r, c, |i, j| a[(i, j)] * row_scale[i] * col_scale[j]);
    if scaled.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return None;
    }
    let cutoff = rel_cutoff * smax;
    let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
    let rhs = DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * row_scale[i]);
    let y = svd.solve(&rhs, cutoff).ok()?;
    Some((DMatrix::from_fn(y.nrows(), y.ncols(), |i, j| y[(i, j)] * col_scale[i]), rank))
}

/// `sigma_min / sigma_max` of `diag(row_scale) A diag(col_scale)`.
pub fn relative_min_singular_value(a: &DMatrix<f64>, row_scale: &[f64], col_scale: &[f64]) -> f64 {
    let (r, c) = a.shape();
    let scaled = DMatrix::from_fn(r, c, |i, j| a[(i, j)] * row_scale[i] * col_scale[j]);
    if scaled.iter().any(|v| !v.is_finite()) {
        return 0.0;
    }
    let sv = scaled.singular_values();
    let smax = sv.max();
    if smax > 0.0 {
        sv.min() / smax
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_badly_scaled_system() {
        // Column scales 1 and 1e-18 would wreck a naive pivot-ratio estimate.
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1e-18, 1.0, 3e-18]);
        let lu = EquilibratedLu::factor(&a).unwrap();
        assert!(lu.condition() < 10.0);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let x = lu.solve(&b);
        let r = &a * &x - &b;
        assert!(r.norm() < 1e-14);
    }

    #[test]
    fn detects_repeated_rows() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0, 0.0, 1.0, 5.0]);
        assert!(EquilibratedLu::factor(&a).is_err());
    }

    #[test]
    fn lstsq_drops_null_direction() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[2.0, 2.0]);
        let (x, rank) = lstsq_scaled(&a, &b, &[1.0, 1.0], &[1.0, 1.0], 1e-12).unwrap();
        assert_eq!(rank, 1);
        assert_relative_eq!(x[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[(1, 0)], 1.0, epsilon = 1e-12);
        assert_eq!(relative_min_singular_value(&a, &[1.0, 1.0], &[1.0, 1.0]), 0.0);
    }
}
