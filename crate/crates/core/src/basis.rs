//! Multi-indices, graded monomial bases, Vandermonde matrices and the
//! polynomial finite-difference vectors that span the kernel-coefficient
//! null space.
//!
//! Bases are ordered by total degree and, within a degree, lexicographically
//! with the largest first exponent first. This makes every lower-degree basis
//! a prefix of every higher-degree one, so the degree-`m` saddle matrix is the
//! leading block of the degree-`m + mu` matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::EquilibratedLu;
use crate::point::Point;

/// Largest total degree accepted anywhere (factorials stay exact in f64).
pub const MAX_DEGREE: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exponents: Vec<u32>,
    degree: u32,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidArgument("multi-index must have d >= 1".into()));
        }
        let degree = exponents.iter().sum();
        if degree > MAX_DEGREE {
            return Err(Error::DegreeTooLarge(degree));
        }
        Ok(Self { exponents, degree })
    }

    pub fn zero(dim: usize) -> Self {
        Self { exponents: vec![0; dim], degree: 0 }
    }

    /// The unit multi-index `e_j` in `dim` dimensions.
    pub fn unit(dim: usize, j: usize) -> Self {
        let mut exponents = vec![0; dim];
        exponents[j] = 1;
        Self { exponents, degree: 1 }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    /// `alpha! = prod_j alpha_j!`, exact for degree <= 12.
    pub fn factorial(&self) -> f64 {
        self.exponents.iter().map(|&a| factorial(a)).product()
    }

    /// `(x - center)^alpha`.
    pub fn eval_shifted(&self, center: &Point, x: &Point) -> f64 {
        self.exponents.iter().enumerate().map(|(j, &a)| (x[j] - center[j]).powi(a as i32)).product()
    }
}

pub(crate) fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Number of d-variate monomials of total degree <= m, `binomial(m + d, d)`.
pub fn count_monomials(d: usize, m: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let overflow = || Error::CountOverflow { dim: d, degree: m };
    // binomial(m + d, k) built up incrementally stays integral at every step.
    let k = d.min(m) as u128;
    let top = (m + d) as u128;
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc.checked_mul(top - k + i).ok_or_else(overflow)? / i;
    }
    usize::try_from(acc).map_err(|_| overflow())
}

/// Graded, lexicographically ordered monomial exponents up to degree `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexBasis {
    dim: usize,
    max_degree: usize,
    indices: Vec<MultiIndex>,
}

impl MultiIndexBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, l: usize) -> &MultiIndex {
        &self.indices[l]
    }

    /// Position of `alpha` in the basis, if present.
    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.indices.iter().position(|a| a == alpha)
    }

    /// The first `M_{d, m'}` entries, i.e. the degree-`m'` basis.
    pub fn truncate(&self, degree: usize) -> MultiIndexBasis {
        let degree = degree.min(self.max_degree);
        let len = self.indices.iter().take_while(|a| a.degree() as usize <= degree).count();
        MultiIndexBasis { dim: self.dim, max_degree: degree, indices: self.indices[..len].to_vec() }
    }
}

pub fn enumerate_basis(d: usize, m: usize) -> Result<MultiIndexBasis> {
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidArgument(format!("basis dimension must be 1, 2 or 3, got {d}")));
    }
    if m > MAX_DEGREE as usize {
        return Err(Error::DegreeTooLarge(m as u32));
    }
    let mut indices = Vec::with_capacity(count_monomials(d, m)?);
    let mut buf = vec![0u32; d];
    for g in 0..=m as u32 {
        push_degree(&mut buf, 0, g, &mut indices);
    }
    Ok(MultiIndexBasis { dim: d, max_degree: m, indices })
}

// Exponent vectors of total `remaining` in positions pos.., first exponent largest first.
fn push_degree(buf: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex { exponents: buf.to_vec(), degree: buf.iter().sum() });
        return;
    }
    for a in (0..=remaining).rev() {
        buf[pos] = a;
        push_degree(buf, pos + 1, remaining - a, out);
    }
}

/// Values of every basis monomial `(x - center)^alpha_l` at `x`.
pub fn eval_monomials(basis: &MultiIndexBasis, center: &Point, x: &Point) -> Vec<f64> {
    let powers = shifted_powers(basis, center, x);
    basis.indices.iter().map(|a| a.exponents.iter().enumerate().map(|(j, &e)| powers[j][e as usize]).product()).collect()
}

fn shifted_powers(basis: &MultiIndexBasis, center: &Point, x: &Point) -> Vec<Vec<f64>> {
    debug_assert_eq!(center.dim(), basis.dim);
    debug_assert_eq!(x.dim(), basis.dim);
    (0..basis.dim)
        .map(|j| {
            let t = x[j] - center[j];
            let mut p = Vec::with_capacity(basis.max_degree + 1);
            let mut v = 1.0;
            for _ in 0..=basis.max_degree {
                p.push(v);
                v *= t;
            }
            p
        })
        .collect()
}

/// `P[i][l] = (x_i - center)^alpha_l`, one row per node.
pub fn vandermonde(basis: &MultiIndexBasis, center: &Point, nodes: &[Point]) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(nodes.len(), basis.len());
    for (i, x) in nodes.iter().enumerate() {
        for (l, v) in eval_monomials(basis, center, x).into_iter().enumerate() {
            p[(i, l)] = v;
        }
    }
    p
}

// Square system with rows pi_1..pi_n evaluated at the n nodes.
fn square_system(nodes: &[Point], center: &Point, basis: &MultiIndexBasis) -> Result<EquilibratedLu> {
    let n = nodes.len();
    if basis.len() < n {
        return Err(Error::InvalidArgument(format!("basis has {} monomials, need at least {n}", basis.len())));
    }
    let p = vandermonde(basis, center, nodes);
    let a = DMatrix::from_fn(n, n, |r, i| p[(i, r)]);
    EquilibratedLu::factor(&a).map_err(|_| Error::SingularVandermonde { size: n })
}

/// Weights `d` with `d . f(nodes) = d^alpha_l q(center)`, `q` the polynomial
/// interpolant of `f` in the span of the first `n` basis monomials.
pub fn fd_nullspace_vector(nodes: &[Point], center: &Point, basis: &MultiIndexBasis, l: usize) -> Result<Vec<f64>> {
    let n = nodes.len();
    if l >= n {
        return Err(Error::InvalidArgument(format!("index {l} out of range for n={n}")));
    }
    let lu = square_system(nodes, center, basis)?;
    let mut rhs = DMatrix::zeros(n, 1);
    rhs[(l, 0)] = basis.get(l).factorial();
    Ok(lu.solve(&rhs).column(0).iter().copied().collect())
}

/// Columns `d_l` for `l = M_{d,m}, ..., n - 1` (zero-based), with `n = M_{d, m + mu}`.
pub fn fd_nullspace_matrix(nodes: &[Point], center: &Point, m: usize, mu: usize) -> Result<DMatrix<f64>> {
    let d = center.dim();
    let basis = enumerate_basis(d, m + mu)?;
    let n = nodes.len();
    if n != basis.len() {
        return Err(Error::InvalidArgument(format!("need exactly {} nodes, got {n}", basis.len())));
    }
    let lo = count_monomials(d, m)?;
    let lu = square_system(nodes, center, &basis)?;
    let mut rhs = DMatrix::zeros(n, n - lo);
    for (c, l) in (lo..n).enumerate() {
        rhs[(l, c)] = basis.get(l).factorial();
    }
    Ok(lu.solve(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e.to_vec()).unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(count_monomials(1, 1).unwrap(), 2);
        assert_eq!(count_monomials(2, 6).unwrap(), 28);
        assert_eq!(count_monomials(2, 4).unwrap(), 15);
        assert_eq!(count_monomials(3, 6).unwrap(), 84);
        assert_eq!(count_monomials(1, 0).unwrap(), 1);
        assert!(count_monomials(0, 3).is_err());
        assert!(matches!(count_monomials(200, 200), Err(Error::CountOverflow { .. })));
    }

    #[test]
    fn enumeration_order() {
        let b = enumerate_basis(1, 2).unwrap();
        let e: Vec<_> = b.indices().iter().map(|a| a.exponents().to_vec()).collect();
        assert_eq!(e, vec![vec![0], vec![1], vec![2]]);

        let b = enumerate_basis(2, 1).unwrap();
        let e: Vec<_> = b.indices().iter().map(|a| a.exponents().to_vec()).collect();
        assert_eq!(e, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);

        let b = enumerate_basis(2, 2).unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(b.get(3).exponents(), &[2, 0]);
        assert_eq!(b.get(4).exponents(), &[1, 1]);
        assert_eq!(b.get(5).exponents(), &[0, 2]);
    }

    #[test]
    fn enumeration_rejects_out_of_range() {
        assert!(enumerate_basis(4, 2).is_err());
        assert!(enumerate_basis(2, 13).is_err());
        assert!(MultiIndex::new(vec![7, 6]).is_err());
    }

    #[test]
    fn truncation_is_prefix() {
        for d in 1..=3 {
            let full = enumerate_basis(d, 7).unwrap();
            for m in 0..=7 {
                assert_eq!(full.truncate(m), enumerate_basis(d, m).unwrap());
            }
        }
    }

    #[test]
    fn factorials() {
        assert_eq!(mi(&[3, 2]).factorial(), 12.0);
        assert_eq!(mi(&[12]).factorial(), 479_001_600.0);
        assert_eq!(MultiIndex::zero(3).factorial(), 1.0);
    }

    #[test]
    fn monomial_values() {
        let b = enumerate_basis(1, 2).unwrap();
        assert_eq!(eval_monomials(&b, &Point::from1(0.0), &Point::from1(2.0)), vec![1.0, 2.0, 4.0]);
        let b = enumerate_basis(2, 1).unwrap();
        assert_eq!(eval_monomials(&b, &Point::from2(0.0, 0.0), &Point::from2(3.0, -1.0)), vec![1.0, 3.0, -1.0]);
        let b = enumerate_basis(2, 4).unwrap();
        let c = Point::from2(0.3, -0.7);
        let v = eval_monomials(&b, &c, &c);
        assert_eq!(v[0], 1.0);
        assert!(v[1..].iter().all(|x| *x == 0.0));
        let x = Point::from2(1.1, 0.4);
        for (l, a) in b.indices().iter().enumerate() {
            assert_relative_eq!(eval_monomials(&b, &c, &x)[l], a.eval_shifted(&c, &x), max_relative = 1e-15);
        }
    }

    #[test]
    fn vandermonde_first_column_is_ones() {
        let b = enumerate_basis(2, 3).unwrap();
        let nodes = [Point::from2(0.1, 0.2), Point::from2(-0.5, 0.9), Point::from2(0.0, 0.0)];
        let p = vandermonde(&b, &Point::from2(0.0, 0.0), &nodes);
        assert_eq!(p.shape(), (3, 10));
        assert!(p.column(0).iter().all(|v| *v == 1.0));
    }

    #[test]
    fn classic_three_point_differences() {
        let h = 0.125;
        let nodes = [Point::from1(-h), Point::from1(0.0), Point::from1(h)];
        let c = Point::from1(0.0);
        let b = enumerate_basis(1, 2).unwrap();
        let d2 = fd_nullspace_vector(&nodes, &c, &b, 2).unwrap();
        let expect2 = [1.0 / (h * h), -2.0 / (h * h), 1.0 / (h * h)];
        let d0 = fd_nullspace_vector(&nodes, &c, &b, 0).unwrap();
        let d1 = fd_nullspace_vector(&nodes, &c, &b, 1).unwrap();
        let expect1 = [-1.0 / (2.0 * h), 0.0, 1.0 / (2.0 * h)];
        for i in 0..3 {
            assert_relative_eq!(d2[i], expect2[i], epsilon = 1e-12, max_relative = 1e-12);
            assert_relative_eq!(d0[i], [0.0, 1.0, 0.0][i], epsilon = 1e-14);
            assert_relative_eq!(d1[i], expect1[i], epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn nullspace_matrix_annihilates_low_degree() {
        let h = 0.3;
        let nodes = [Point::from1(-h), Point::from1(0.0), Point::from1(h)];
        let c = Point::from1(0.0);
        let d = fd_nullspace_matrix(&nodes, &c, 1, 1).unwrap();
        assert_eq!(d.shape(), (3, 1));
        assert_relative_eq!(d[(0, 0)], 1.0 / (h * h), max_relative = 1e-12);
        assert_relative_eq!(d[(1, 0)], -2.0 / (h * h), max_relative = 1e-12);
        let p = vandermonde(&enumerate_basis(1, 1).unwrap(), &c, &nodes);
        assert!((p.transpose() * &d).norm() < 1e-12 * d.norm());
    }

    #[test]
    fn singular_vandermonde_is_reported() {
        // Three collinear points cannot determine {1, x, y}.
        let nodes = [Point::from2(0.0, 0.0), Point::from2(1.0, 1.0), Point::from2(2.0, 2.0)];
        let b = enumerate_basis(2, 1).unwrap();
        assert!(matches!(fd_nullspace_vector(&nodes, &Point::from2(0.0, 0.0), &b, 1), Err(Error::SingularVandermonde { size: 3 })));
    }
}
