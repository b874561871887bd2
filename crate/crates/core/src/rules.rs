//! Gauss–Legendre rules and adaptive reference quadrature on intervals and
//! triangles. These are the high-accuracy oracles behind exact-integral
//! fixtures and per-cell error measurements.

use std::sync::OnceLock;

use crate::kernel::Cell;
use crate::point::Point;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

const GL_ORDER: usize = 20;

/// Refinement stops once successive estimates agree to this relative level;
/// below it the difference is rounding noise and subdividing cannot help.
const ROUNDOFF: f64 = 4.0 * f64::EPSILON;

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

fn gl_interval(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = gl20();
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    h * x.iter().zip(w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>()
}

/// Adaptive 20-point Gauss–Legendre on `[a, b]`: an interval is accepted when
/// its value agrees with the sum over its halves to `max(rel * |I|, abs)`.
pub fn adaptive_gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel: f64, abs: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (gl_interval(f, a, m), gl_interval(f, m, b));
        if (l + r - whole).abs() <= tol.max(ROUNDOFF * (l.abs() + r.abs())) || depth >= 40 {
            return l + r;
        }
        rec(f, a, m, l, 0.5 * tol, depth + 1) + rec(f, m, b, r, 0.5 * tol, depth + 1)
    }
    // A coarse pass sets the scale of the relative tolerance.
    let coarse: f64 = (0..16)
        .map(|i| {
            let h = (b - a) / 16.0;
            gl_interval(f, a + h * i as f64, a + h * (i + 1) as f64)
        })
        .sum();
    let tol = (rel * coarse.abs()).max(abs);
    let h = (b - a) / 16.0;
    (0..16)
        .map(|i| {
            let (lo, hi) = (a + h * i as f64, a + h * (i + 1) as f64);
            rec(f, lo, hi, gl_interval(f, lo, hi), tol / 16.0, 0)
        })
        .sum()
}

/// Conical-product rule on a triangle: the unit square is collapsed onto the
/// triangle with Jacobian `2 |T| s`, then a tensor Gauss–Legendre rule is applied.
fn conical_triangle(f: &dyn Fn(&Point) -> f64, v: [[f64; 2]; 3]) -> f64 {
    let (x, w) = gl20();
    let area2 = ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0])).abs();
    let mut sum = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        let s = 0.5 * (xi + 1.0);
        for (xj, wj) in x.iter().zip(w) {
            let t = 0.5 * (xj + 1.0);
            let px = v[0][0] + s * (v[1][0] - v[0][0]) + s * t * (v[2][0] - v[1][0]);
            let py = v[0][1] + s * (v[1][1] - v[0][1]) + s * t * (v[2][1] - v[1][1]);
            sum += 0.25 * wi * wj * s * f(&Point::from2(px, py));
        }
    }
    sum * area2
}

/// Adaptive triangle quadrature: a triangle is accepted when its rule value
/// agrees with the sum over its four midpoint children to `tol`.
pub fn adaptive_triangle(f: &dyn Fn(&Point) -> f64, cell: &Cell, rel: f64, abs: f64) -> f64 {
    fn rec(f: &dyn Fn(&Point) -> f64, c: &Cell, whole: f64, tol: f64, depth: u32) -> f64 {
        let kids = c.subdivide();
        let parts: Vec<f64> = kids
            .iter()
            .map(|k| match k {
                Cell::Triangle(v) => conical_triangle(f, *v),
                Cell::Interval { .. } => unreachable!(),
            })
            .collect();
        let sum: f64 = parts.iter().sum();
        let mass: f64 = parts.iter().map(|p| p.abs()).sum();
        if (sum - whole).abs() <= tol.max(ROUNDOFF * mass) || depth >= 14 {
            return sum;
        }
        kids.iter().zip(parts).map(|(k, p)| rec(f, k, p, 0.25 * tol, depth + 1)).sum()
    }
    let Cell::Triangle(v) = *cell else { panic!("adaptive_triangle needs a triangle") };
    let whole = conical_triangle(f, v);
    let tol = (rel * whole.abs()).max(abs);
    rec(f, cell, whole, tol, 0)
}

/// Reference integral of `f` over a cell, to roughly `rel` relative accuracy
/// (or `abs` absolute, whichever is looser).
pub fn integrate_cell(f: &dyn Fn(&Point) -> f64, cell: &Cell, rel: f64, abs: f64) -> f64 {
    match *cell {
        Cell::Interval { a, b } => adaptive_gauss(&|x| f(&Point::from1(x)), a, b, rel, abs),
        Cell::Triangle(_) => adaptive_triangle(f, cell, rel, abs),
    }
}
