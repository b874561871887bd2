//! The cubic polyharmonic spline `phi(r) = r^3` and the actions of the
//! stencil operators on it and on shifted monomials.

use crate::basis::{factorial, MultiIndex, MultiIndexBasis};
use crate::error::{Error, Result};
use crate::point::Point;

/// Cubic polyharmonic spline. Conditionally positive definite of order 2, C^2.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CubicPhs;

impl CubicPhs {
    pub const EXPONENT: i32 = 3;

    #[inline]
    pub fn phi(r: f64) -> f64 {
        r * r * r
    }
}

/// An integration cell: an interval in 1D or a triangle in 2D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Interval {
        a: f64,
        b: f64,
    },
    /// Vertices stored counterclockwise.
    Triangle([[f64; 2]; 3]),
}

impl Cell {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(b - a > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidCell(format!("interval [{a}, {b}] has no length")));
        }
        Ok(Cell::Interval { a, b })
    }

    /// Builds a triangle, reordering the vertices counterclockwise.
    pub fn triangle(p0: [f64; 2], p1: [f64; 2], p2: [f64; 2]) -> Result<Self> {
        let area2 = orient2(p0, p1, p2);
        let (lo_x, hi_x) = minmax([p0[0], p1[0], p2[0]]);
        let (lo_y, hi_y) = minmax([p0[1], p1[1], p2[1]]);
        let bbox = (hi_x - lo_x) * (hi_y - lo_y);
        if !(area2.abs() * 0.5 > 1e-15 * bbox) || !area2.is_finite() {
            return Err(Error::InvalidCell(format!("triangle {p0:?} {p1:?} {p2:?} is degenerate")));
        }
        Ok(if area2 > 0.0 { Cell::Triangle([p0, p1, p2]) } else { Cell::Triangle([p0, p2, p1]) })
    }

    pub fn dim(&self) -> usize {
        match self {
            Cell::Interval { .. } => 1,
            Cell::Triangle(_) => 2,
        }
    }

    pub fn measure(&self) -> f64 {
        match *self {
            Cell::Interval { a, b } => b - a,
            Cell::Triangle([p0, p1, p2]) => 0.5 * orient2(p0, p1, p2),
        }
    }

    /// Average of the vertices.
    pub fn barycenter(&self) -> Point {
        match *self {
            Cell::Interval { a, b } => Point::from1(0.5 * (a + b)),
            Cell::Triangle([p0, p1, p2]) => Point::from2((p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0),
        }
    }

    pub fn vertices(&self) -> Vec<Point> {
        match *self {
            Cell::Interval { a, b } => vec![Point::from1(a), Point::from1(b)],
            Cell::Triangle(v) => v.iter().map(|p| Point::from2(p[0], p[1])).collect(),
        }
    }

    /// Midpoint subdivision: two halves, or four similar triangles.
    pub fn subdivide(&self) -> Vec<Cell> {
        match *self {
            Cell::Interval { a, b } => {
                let c = 0.5 * (a + b);
                vec![Cell::Interval { a, b: c }, Cell::Interval { a: c, b }]
            }
            Cell::Triangle([p0, p1, p2]) => {
                let m = |u: [f64; 2], v: [f64; 2]| [0.5 * (u[0] + v[0]), 0.5 * (u[1] + v[1])];
                let (m01, m12, m20) = (m(p0, p1), m(p1, p2), m(p2, p0));
                vec![
                    Cell::Triangle([p0, m01, m20]),
                    Cell::Triangle([m01, p1, m12]),
                    Cell::Triangle([m20, m12, p2]),
                    Cell::Triangle([m01, m12, m20]),
                ]
            }
        }
    }
}

fn minmax(v: [f64; 3]) -> (f64, f64) {
    (v[0].min(v[1]).min(v[2]), v[0].max(v[1]).max(v[2]))
}

/// Twice the signed area of (a, b, c); positive when counterclockwise.
pub(crate) fn orient2(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// `||x - c||^3`.
pub fn kernel_eval(c: &Point, x: &Point) -> f64 {
    CubicPhs::phi(c.dist(x))
}

/// `d^alpha ||x - c||^3` at `x = x0` for `|alpha| = 1`; zero at `x0 = c`.
pub fn kernel_derivative(c: &Point, x0: &Point, alpha: &MultiIndex) -> Result<f64> {
    if alpha.degree() != 1 {
        return Err(Error::UnsupportedOrder(alpha.degree()));
    }
    let j = alpha.exponents().iter().position(|&a| a == 1).unwrap();
    let r = c.dist(x0);
    Ok(3.0 * r * (x0[j] - c[j]))
}

/// Integral of `||x - c||^3` over the cell, in closed form.
///
/// In 2D the triangle is split into the three signed triangles fanning out from
/// `c` to each edge; over each, polar coordinates about `c` reduce the integral
/// to `p^5 / 5 * int sec^5(t) dt`, with `p` the distance from `c` to the edge line.
pub fn kernel_moment(c: &Point, cell: &Cell) -> f64 {
    match *cell {
        Cell::Interval { a, b } => {
            let g = |t: f64| t * t * t * t.abs() * 0.25;
            g(b - c[0]) - g(a - c[0])
        }
        Cell::Triangle(v) => {
            let c = [c[0], c[1]];
            (0..3).map(|i| edge_fan_moment(c, v[i], v[(i + 1) % 3])).sum()
        }
    }
}

// Signed integral of r^3 over the triangle (c, a, b).
fn edge_fan_moment(c: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let e = [b[0] - a[0], b[1] - a[1]];
    let len = e[0].hypot(e[1]);
    let u = [e[0] / len, e[1] / len];
    let ca = [a[0] - c[0], a[1] - c[1]];
    let cb = [b[0] - c[0], b[1] - c[1]];
    let cross = ca[0] * cb[1] - ca[1] * cb[0];
    let p = (u[0] * ca[1] - u[1] * ca[0]).abs();
    if cross == 0.0 || p <= 1e-300 {
        return 0.0;
    }
    let sa = ca[0] * u[0] + ca[1] * u[1];
    let sb = cb[0] * u[0] + cb[1] * u[1];
    // Antiderivative in the along-edge coordinate s, rho = sqrt(p^2 + s^2).
    let g = |s: f64| {
        let rho = p.hypot(s);
        let p2 = p * p;
        p * (0.25 * rho * rho * rho * s + 0.375 * p2 * rho * s + 0.375 * p2 * p2 * (s / p).asinh()) / 5.0
    };
    cross.signum() * (g(sb) - g(sa))
}

/// Integral of `(x - center)^alpha` over the cell, exactly.
pub fn monomial_moment(center: &Point, alpha: &MultiIndex, cell: &Cell) -> f64 {
    match *cell {
        Cell::Interval { a, b } => {
            let k = alpha.exponents()[0] as i32;
            ((b - center[0]).powi(k + 1) - (a - center[0]).powi(k + 1)) / f64::from(k + 1)
        }
        Cell::Triangle(_) => {
            let t = TriangleMomentTable::new(center, cell, alpha.degree() as usize);
            t.moment(alpha)
        }
    }
}

/// Moments of every monomial in `basis` over `cell`.
pub fn monomial_moments(center: &Point, basis: &MultiIndexBasis, cell: &Cell) -> Vec<f64> {
    match cell {
        Cell::Interval { .. } => basis.indices().iter().map(|a| monomial_moment(center, a, cell)).collect(),
        Cell::Triangle(_) => {
            let t = TriangleMomentTable::new(center, cell, basis.max_degree());
            basis.indices().iter().map(|a| t.moment(a)).collect()
        }
    }
}

/// `d^op (x - x0)^beta` evaluated at `x = x0`: `beta!` if `op == beta`, else 0.
pub fn monomial_derivative_at_center(op: &MultiIndex, beta: &MultiIndex) -> f64 {
    if op == beta {
        beta.factorial()
    } else {
        0.0
    }
}

// Maps the triangle to the reference simplex {u, v >= 0, u + v <= 1} via
// x = v0 + u e1 + v e2. Each shifted coordinate is then affine in (u, v), its
// powers are bivariate polynomials, and int u^p v^q = p! q! / (p + q + 2)!.
struct TriangleMomentTable {
    // powers[j][k] = ((x - c)_j)^k as a dense (deg+1)x(deg+1) coefficient array.
    powers: [Vec<Vec<f64>>; 2],
    deg: usize,
    jac: f64,
    simplex: Vec<f64>,
}

impl TriangleMomentTable {
    fn new(center: &Point, cell: &Cell, deg: usize) -> Self {
        let Cell::Triangle([p0, p1, p2]) = *cell else { unreachable!("triangle table built for a non-triangle cell") };
        let w = deg + 1;
        let mut powers: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
        for (j, pw) in powers.iter_mut().enumerate() {
            let lin = [p0[j] - center[j], p1[j] - p0[j], p2[j] - p0[j]];
            let mut cur = vec![0.0; w * w];
            cur[0] = 1.0;
            pw.push(cur.clone());
            for _ in 0..deg {
                let mut next = vec![0.0; w * w];
                for p in 0..w {
                    for q in 0..w - p {
                        let c = cur[p * w + q];
                        if c == 0.0 {
                            continue;
                        }
                        next[p * w + q] += c * lin[0];
                        if p + 1 < w {
                            next[(p + 1) * w + q] += c * lin[1];
                        }
                        if q + 1 < w {
                            next[p * w + q + 1] += c * lin[2];
                        }
                    }
                }
                pw.push(next.clone());
                cur = next;
            }
        }
        let mut simplex = vec![0.0; w * w];
        for p in 0..w {
            for q in 0..w - p {
                simplex[p * w + q] = factorial(p as u32) * factorial(q as u32) / factorial((p + q + 2) as u32);
            }
        }
        Self { powers, deg, jac: orient2(p0, p1, p2).abs(), simplex }
    }

    fn moment(&self, alpha: &MultiIndex) -> f64 {
        let e = alpha.exponents();
        debug_assert!(alpha.degree() as usize <= self.deg);
        let w = self.deg + 1;
        let a = &self.powers[0][e[0] as usize];
        let b = &self.powers[1][e[1] as usize];
        let mut sum = 0.0;
        for p1 in 0..w {
            for q1 in 0..w - p1 {
                let ca = a[p1 * w + q1];
                if ca == 0.0 {
                    continue;
                }
                for p2 in 0..w - p1 {
                    for q2 in 0..w - p1 - q1 {
                        if p2 + q2 + p1 + q1 >= w {
                            continue;
                        }
                        let cb = b[p2 * w + q2];
                        if cb != 0.0 {
                            sum += ca * cb * self.simplex[(p1 + p2) * w + q1 + q2];
                        }
                    }
                }
            }
        }
        sum * self.jac
    }
}
