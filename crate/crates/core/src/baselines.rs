//! Comparators and brute-force oracles: an adaptive trapezoid rule, a direct
//! saddle-system solve at a single degree, and reference cell integrals.

use nalgebra::DMatrix;

use crate::basis::enumerate_basis;
use crate::error::{Error, Result};
use crate::kernel::Cell;
use crate::local_interp::{saddle_matrix, OperatorSpec};
use crate::point::Point;
use crate::rules::integrate_cell;

/// Recursion limit of [`adaptive_trapezoid`].
pub const TRAPEZOID_MAX_DEPTH: usize = 60;

/// One accepted interval of the trapezoid partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidInterval {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
    /// `|S - T|` on the interval.
    pub estimate: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapezoidResult {
    pub value: f64,
    /// Endpoints of the accepted intervals (the trapezoid partition).
    pub partition_nodes: usize,
    /// Distinct points where `f` was evaluated, including the Simpson midpoints.
    pub evaluations: usize,
    /// Accepted intervals, left to right.
    pub intervals: Vec<TrapezoidInterval>,
}

/// Adaptive trapezoid rule on `[a, b]`. An interval `[alpha, beta]` is accepted
/// once `|S - T| <= eps (beta - alpha) / (b - a)`, with `S` Simpson's rule and
/// `T` the trapezoid rule on it; otherwise it is bisected.
pub fn adaptive_trapezoid(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> Result<TrapezoidResult> {
    if !(b > a) || !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("need a < b and eps > 0, got [{a}, {b}], eps={eps}")));
    }
    struct Acc {
        value: f64,
        intervals: Vec<TrapezoidInterval>,
        evaluations: usize,
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, flo: f64, fhi: f64, budget: f64, depth: usize, acc: &mut Acc) -> Result<()> {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        acc.evaluations += 1;
        let h = hi - lo;
        let trap = 0.5 * h * (flo + fhi);
        let simpson = h / 6.0 * (flo + 4.0 * fmid + fhi);
        if (simpson - trap).abs() <= budget * h {
            acc.value += trap;
            acc.intervals.push(TrapezoidInterval { lo, hi, value: trap, estimate: (simpson - trap).abs(), depth });
            return Ok(());
        }
        if depth >= TRAPEZOID_MAX_DEPTH {
            return Err(Error::MaxDepth(TRAPEZOID_MAX_DEPTH));
        }
        rec(f, lo, mid, flo, fmid, budget, depth + 1, acc)?;
        rec(f, mid, hi, fmid, fhi, budget, depth + 1, acc)
    }
    let mut acc = Acc { value: 0.0, intervals: Vec::new(), evaluations: 2 };
    rec(f, a, b, f(a), f(b), eps / (b - a), 0, &mut acc)?;
    Ok(TrapezoidResult {
        value: acc.value,
        partition_nodes: acc.intervals.len() + 1,
        evaluations: acc.evaluations,
        intervals: acc.intervals,
    })
}

/// Weights from a direct solve of the full saddle system at `degree`, with
/// no reuse of lower-degree factorizations.
pub fn oracle_full_solve(center: &Point, nodes: &[Point], op: &OperatorSpec, degree: usize) -> Result<DMatrix<f64>> {
    let basis = enumerate_basis(center.dim(), degree)?;
    let n = nodes.len();
    let q = basis.len();
    let s = saddle_matrix(center, nodes, &basis);
    let lphi = op.apply_kernel(center, nodes)?;
    let lpi = op.apply_monomials(center, &basis);
    let c = lphi.ncols();
    let mut rhs = DMatrix::zeros(n + q, c);
    rhs.view_mut((0, 0), (n, c)).copy_from(&lphi);
    rhs.view_mut((n, 0), (q, c)).copy_from(&lpi);
    let singular = || Error::SingularSystem { center: center.coords().to_vec(), n, degree, condition: f64::INFINITY };
    // Symmetric diagonal scaling by the stencil radius brings both blocks to
    // unit size without changing the solution.
    let h = nodes.iter().map(|x| x.dist(center)).fold(0.0, f64::max);
    if !(h > 0.0) {
        return Err(singular());
    }
    let mut scale = vec![h.powf(-1.5); n];
    scale.extend(basis.indices().iter().map(|a| h.powf(1.5 - a.degree() as f64)));
    let scaled = DMatrix::from_fn(n + q, n + q, |i, j| scale[i] * s[(i, j)] * scale[j]);
    let srhs = DMatrix::from_fn(n + q, c, |i, j| scale[i] * rhs[(i, j)]);
    let sol = scaled.full_piv_lu().solve(&srhs).ok_or_else(singular)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    Ok(DMatrix::from_fn(n, c, |i, j| scale[i] * sol[(i, j)]))
}

/// Reference integral of `f` over a cell by adaptive subdivision, to about
/// 1e-12 relative.
pub fn oracle_integral(f: &dyn Fn(&Point) -> f64, cell: &Cell) -> f64 {
    integrate_cell(f, cell, 1e-13, 0.0)
}
