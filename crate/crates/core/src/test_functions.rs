//! Sums of shifted bumps used as benchmark integrands:
//! `f1(x) = sum_i 1 / (1 + a ||x - y_i||^2)` and `f2(x) = sum_i exp(-a ||x - y_i||^2)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::Cell;
use crate::point::Point;
use crate::rules::{adaptive_gauss, integrate_cell};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionKind {
    /// Rational bumps `1 / (1 + a r^2)`.
    F1,
    /// Gaussian bumps `exp(-a r^2)`.
    F2,
}

impl std::str::FromStr for FunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(FunctionKind::F1),
            "f2" => Ok(FunctionKind::F2),
            other => Err(Error::InvalidArgument(format!("unknown function '{other}', expected f1 or f2"))),
        }
    }
}

impl std::fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FunctionKind::F1 => "f1",
            FunctionKind::F2 => "f2",
        })
    }
}

/// `erf(u) - erf(v)` without cancellation when both arguments sit in the same tail.
fn erf_diff(u: f64, v: f64) -> f64 {
    if u > 0.0 && v > 0.0 {
        libm::erfc(v) - libm::erfc(u)
    } else if u < 0.0 && v < 0.0 {
        libm::erfc(-u) - libm::erfc(-v)
    } else {
        libm::erf(u) - libm::erf(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    kind: FunctionKind,
    a: f64,
    shifts: Vec<Point>,
}

/// Relative accuracy requested from the reference quadratures.
const ORACLE_REL: f64 = 1e-13;

impl TestFunction {
    /// Explicit shifts, each strictly inside `(-1, 1)^d`.
    pub fn new(kind: FunctionKind, a: f64, shifts: Vec<Point>) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidArgument(format!("sharpness a must be positive, got {a}")));
        }
        let Some(first) = shifts.first() else {
            return Err(Error::InvalidArgument("need at least one shift".into()));
        };
        let d = first.dim();
        if shifts.iter().any(|y| y.dim() != d || y.coords().iter().any(|v| !(v.abs() < 1.0))) {
            return Err(Error::InvalidArgument("shifts must lie in the open cube (-1, 1)^d".into()));
        }
        Ok(Self { kind, a, shifts })
    }

    /// `2d` shifts drawn uniformly from `(-1, 1)^d`.
    pub fn random(kind: FunctionKind, a: f64, d: usize, seed: u64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidArgument(format!("test functions are defined for d = 1..3, got {d}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shifts = (0..2 * d)
            .map(|_| {
                let c: Vec<f64> = (0..d)
                    .map(|_| loop {
                        let v: f64 = rng.random_range(-1.0..1.0);
                        if v != -1.0 {
                            break v;
                        }
                    })
                    .collect();
                Point::new(&c)
            })
            .collect();
        Self::new(kind, a, shifts)
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn shifts(&self) -> &[Point] {
        &self.shifts
    }

    pub fn dim(&self) -> usize {
        self.shifts[0].dim()
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.shifts
            .iter()
            .map(|y| {
                let r2 = x.dist2(y);
                match self.kind {
                    FunctionKind::F1 => 1.0 / (1.0 + self.a * r2),
                    FunctionKind::F2 => (-self.a * r2).exp(),
                }
            })
            .sum()
    }

    pub fn gradient(&self, x: &Point) -> Vec<f64> {
        let d = x.dim();
        let mut g = vec![0.0; d];
        for y in &self.shifts {
            let r2 = x.dist2(y);
            let s = match self.kind {
                FunctionKind::F1 => -2.0 * self.a / (1.0 + self.a * r2).powi(2),
                FunctionKind::F2 => -2.0 * self.a * (-self.a * r2).exp(),
            };
            for (j, gj) in g.iter_mut().enumerate() {
                *gj += s * (x[j] - y[j]);
            }
        }
        g
    }

    // Integral of one 1-D factor over [lo, hi] for shift coordinate y.
    fn f2_factor(&self, y: f64, lo: f64, hi: f64) -> f64 {
        let s = self.a.sqrt();
        0.5 * (std::f64::consts::PI / self.a).sqrt() * erf_diff(s * (hi - y), s * (lo - y))
    }

    fn f1_interval(&self, y: f64, lo: f64, hi: f64) -> f64 {
        let s = self.a.sqrt();
        ((s * (hi - y)).atan() - (s * (lo - y)).atan()) / s
    }

    /// `int_{[-1,1]^d} f`, closed form except for `f1` in 2-D, which uses a
    /// nested quadrature of the analytic inner integral.
    pub fn exact_integral(&self) -> Result<f64> {
        match (self.kind, self.dim()) {
            (FunctionKind::F2, _) => {
                Ok(self.shifts.iter().map(|y| y.coords().iter().map(|&yj| self.f2_factor(yj, -1.0, 1.0)).product::<f64>()).sum())
            }
            (FunctionKind::F1, 1) => Ok(self.shifts.iter().map(|y| self.f1_interval(y[0], -1.0, 1.0)).sum()),
            (FunctionKind::F1, 2) => Ok(self.shifts.iter().map(|y| self.f1_square_term(y)).sum()),
            (_, d) => Err(Error::InvalidArgument(format!("no exact integral for f1 in {d}-D"))),
        }
    }

    fn f1_square_term(&self, y: &Point) -> f64 {
        let a = self.a;
        let inner = |t: f64| {
            // int_{-1}^{1} dx / (c + a (x - y0)^2), c = 1 + a (t - y1)^2.
            let c = 1.0 + a * (t - y[1]).powi(2);
            let k = (a / c).sqrt();
            ((k * (1.0 - y[0])).atan() + (k * (1.0 + y[0])).atan()) / (a * c).sqrt()
        };
        adaptive_gauss(&inner, -1.0, 1.0, 1e-15, 0.0)
    }

    /// `int_cell f`: closed form on intervals (and axis-aligned products for
    /// `f2`), reference quadrature on triangles.
    pub fn cell_integral(&self, cell: &Cell) -> f64 {
        match (*cell, self.kind) {
            (Cell::Interval { a, b }, FunctionKind::F2) => self.shifts.iter().map(|y| self.f2_factor(y[0], a, b)).sum(),
            (Cell::Interval { a, b }, FunctionKind::F1) => self.shifts.iter().map(|y| self.f1_interval(y[0], a, b)).sum(),
            (Cell::Triangle(_), _) => {
                // Absolute floor keeps cells far from every bump cheap.
                let floor = 1e-17 * cell.measure();
                integrate_cell(&|p| self.eval(p), cell, ORACLE_REL, floor)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pointwise_values() {
        let f = TestFunction::new(FunctionKind::F2, 1.0, vec![Point::from1(0.0)]).unwrap();
        assert_eq!(f.eval(&Point::from1(0.0)), 1.0);
        let f = TestFunction::new(FunctionKind::F1, 1000.0, vec![Point::from1(0.0)]).unwrap();
        assert_eq!(f.eval(&Point::from1(0.0)), 1.0);
        assert_relative_eq!(f.eval(&Point::from1(1.0)), 1.0 / 1001.0, max_relative = 1e-15);
        let g = TestFunction::new(FunctionKind::F2, 1.0, vec![Point::from1(0.0)]).unwrap();
        assert_relative_eq!(g.gradient(&Point::from1(1.0))[0], -2.0 * (-1.0f64).exp(), max_relative = 1e-15);
        assert_eq!(g.gradient(&Point::from1(0.0))[0], 0.0);
    }

    #[test]
    fn random_shifts_are_seeded_and_interior() {
        let a = TestFunction::random(FunctionKind::F2, 10.0, 2, 42).unwrap();
        let b = TestFunction::random(FunctionKind::F2, 10.0, 2, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.shifts().len(), 4);
        assert!(a.shifts().iter().all(|y| y.coords().iter().all(|v| v.abs() < 1.0)));
        assert_ne!(a, TestFunction::random(FunctionKind::F2, 10.0, 2, 43).unwrap());
    }

    #[test]
    fn closed_form_integrals() {
        let f = TestFunction::new(FunctionKind::F1, 1.0, vec![Point::from1(0.0)]).unwrap();
        assert_relative_eq!(f.exact_integral().unwrap(), std::f64::consts::FRAC_PI_2, max_relative = 1e-15);
        let f = TestFunction::new(FunctionKind::F2, 1e6, vec![Point::from1(0.3)]).unwrap();
        assert_relative_eq!(f.exact_integral().unwrap(), (std::f64::consts::PI / 1e6).sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn rejects_bad_shifts() {
        assert!(TestFunction::new(FunctionKind::F1, 1.0, vec![Point::from1(1.0)]).is_err());
        assert!(TestFunction::new(FunctionKind::F1, -1.0, vec![Point::from1(0.0)]).is_err());
        assert!(TestFunction::new(FunctionKind::F1, 1.0, vec![]).is_err());
        assert!("f3".parse::<FunctionKind>().is_err());
    }
}
