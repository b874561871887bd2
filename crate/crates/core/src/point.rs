use std::fmt;
use std::ops::Index;

/// Maximum spatial dimension handled anywhere in the crate.
pub const MAX_DIM: usize = 3;

/// A point in R^d for d <= 3, stored inline so it is `Copy`.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl Point {
    /// Panics if `coords` is empty or longer than [`MAX_DIM`].
    pub fn new(coords: &[f64]) -> Self {
        assert!((1..=MAX_DIM).contains(&coords.len()), "point dimension must be 1..={MAX_DIM}, got {}", coords.len());
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Self { coords: c, dim: coords.len() }
    }

    pub fn from1(x: f64) -> Self {
        Self::new(&[x])
    }

    pub fn from2(x: f64, y: f64) -> Self {
        Self::new(&[x, y])
    }

    pub fn origin(dim: usize) -> Self {
        Self::new(&[0.0; MAX_DIM][..dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.coords().iter().zip(other.coords()).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }

    /// Component-wise `self - other`.
    pub fn sub(&self, other: &Point) -> Point {
        let mut c = [0.0; MAX_DIM];
        for (j, v) in c.iter_mut().enumerate().take(self.dim) {
            *v = self.coords[j] - other.coords[j];
        }
        Point { coords: c, dim: self.dim }
    }

    /// `self + s * dir`.
    pub fn offset(&self, dir: &[f64], s: f64) -> Point {
        debug_assert_eq!(dir.len(), self.dim);
        let mut c = self.coords;
        for (j, d) in dir.iter().enumerate() {
            c[j] += s * d;
        }
        Point { coords: c, dim: self.dim }
    }

    pub fn midpoint(&self, other: &Point) -> Point {
        let mut c = [0.0; MAX_DIM];
        for (j, v) in c.iter_mut().enumerate().take(self.dim) {
            *v = 0.5 * (self.coords[j] + other.coords[j]);
        }
        Point { coords: c, dim: self.dim }
    }

    pub fn norm(&self) -> f64 {
        self.coords().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn in_unit_cube(&self, tol: f64) -> bool {
        self.coords().iter().all(|v| v.abs() <= 1.0 + tol)
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.coords()[j]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}
