//! Local saddle systems, operator weights, degree extension and the error
//! estimate built from the difference of two weight sets.

use nalgebra::DMatrix;

use crate::basis::{count_monomials, enumerate_basis, vandermonde, MultiIndex, MultiIndexBasis};
use crate::error::{Error, Result};
use crate::kernel::{kernel_derivative, kernel_eval, kernel_moment, monomial_derivative_at_center, monomial_moments, Cell};
use crate::linalg::{lstsq_scaled, relative_min_singular_value, EquilibratedLu, ILL_CONDITIONED};
use crate::point::Point;

/// Relative singular-value cutoff below which the reduced extension matrix
/// is treated as rank deficient.
pub const EXTENSION_RCOND: f64 = 1e-12;

// Pivot ratios below this skip the singular-value check.
const EXTENSION_SCREEN: f64 = 1e10;

/// The linear functional applied at a stencil center.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    /// `d^alpha f(x0)` with `|alpha| = 1`.
    Derivative(MultiIndex),
    /// All first partial derivatives at the center.
    Gradient,
    /// Integral over a cell (interval or triangle).
    IntegralOver(Cell),
}

impl OperatorSpec {
    /// Number of output components.
    pub fn components(&self, dim: usize) -> usize {
        match self {
            OperatorSpec::Gradient => dim,
            _ => 1,
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        match self {
            OperatorSpec::Derivative(a) if a.dim() != dim => {
                Err(Error::InvalidArgument(format!("derivative multi-index has {} components, stencil is {dim}-D", a.dim())))
            }
            OperatorSpec::Derivative(a) if a.degree() != 1 => Err(Error::UnsupportedOrder(a.degree())),
            OperatorSpec::IntegralOver(c) if c.dim() != dim => {
                Err(Error::InvalidArgument(format!("{}-D cell on a {dim}-D stencil", c.dim())))
            }
            _ => Ok(()),
        }
    }

    fn derivative_indices(&self, dim: usize) -> Vec<MultiIndex> {
        match self {
            OperatorSpec::Derivative(a) => vec![a.clone()],
            OperatorSpec::Gradient => (0..dim).map(|j| MultiIndex::unit(dim, j)).collect(),
            OperatorSpec::IntegralOver(_) => Vec::new(),
        }
    }

    /// `L phi(|| . - x_j ||)` for every node, one column per component.
    pub fn apply_kernel(&self, center: &Point, nodes: &[Point]) -> Result<DMatrix<f64>> {
        let n = nodes.len();
        match self {
            OperatorSpec::IntegralOver(cell) => Ok(DMatrix::from_fn(n, 1, |i, _| kernel_moment(&nodes[i], cell))),
            _ => {
                let ops = self.derivative_indices(center.dim());
                let mut out = DMatrix::zeros(n, ops.len());
                for (c, a) in ops.iter().enumerate() {
                    for (i, x) in nodes.iter().enumerate() {
                        out[(i, c)] = kernel_derivative(x, center, a)?;
                    }
                }
                Ok(out)
            }
        }
    }

    /// `L (x - center)^alpha_l` for every basis monomial, one column per component.
    pub fn apply_monomials(&self, center: &Point, basis: &MultiIndexBasis) -> DMatrix<f64> {
        match self {
            OperatorSpec::IntegralOver(cell) => {
                let v = monomial_moments(center, basis, cell);
                DMatrix::from_column_slice(v.len(), 1, &v)
            }
            _ => {
                let ops = self.derivative_indices(center.dim());
                DMatrix::from_fn(basis.len(), ops.len(), |l, c| monomial_derivative_at_center(&ops[c], basis.get(l)))
            }
        }
    }
}

/// A center, its neighborhood, and the two polynomial degrees `m` and `m + mu`.
#[derive(Debug, Clone)]
pub struct Stencil {
    center: Point,
    nodes: Vec<Point>,
    m: usize,
    mu: usize,
}

impl Stencil {
    pub fn new(center: Point, nodes: Vec<Point>, m: usize, mu: usize) -> Result<Self> {
        let d = center.dim();
        if nodes.iter().any(|p| p.dim() != d) {
            return Err(Error::InvalidArgument("stencil nodes and center differ in dimension".into()));
        }
        if mu == 0 {
            return Err(Error::InvalidArgument("mu must be at least 1".into()));
        }
        // Degree m needs M_{d,m} nodes; the extension checks M_{d,m+mu} itself.
        let needed = count_monomials(d, m)?;
        if nodes.len() < needed {
            return Err(Error::InsufficientNodes { needed, available: nodes.len() });
        }
        Ok(Self { center, nodes, m, mu })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mu(&self) -> usize {
        self.mu
    }
}

/// `Phi[i][j] = ||x_i - x_j||^3`.
pub fn kernel_matrix(nodes: &[Point]) -> DMatrix<f64> {
    let n = nodes.len();
    let mut phi = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = kernel_eval(&nodes[i], &nodes[j]);
            phi[(i, j)] = v;
            phi[(j, i)] = v;
        }
    }
    phi
}

/// `[[Phi, P], [P^T, 0]]` for the given basis.
pub fn saddle_matrix(center: &Point, nodes: &[Point], basis: &MultiIndexBasis) -> DMatrix<f64> {
    let n = nodes.len();
    let q = basis.len();
    let mut s = DMatrix::zeros(n + q, n + q);
    s.view_mut((0, 0), (n, n)).copy_from(&kernel_matrix(nodes));
    let p = vandermonde(basis, center, nodes);
    s.view_mut((0, n), (n, q)).copy_from(&p);
    s.view_mut((n, 0), (q, n)).copy_from(&p.transpose());
    s
}

/// The factorized degree-`m` saddle system of a stencil, plus the
/// higher-degree Vandermonde columns needed for the extension.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    stencil: Stencil,
    matrix: DMatrix<f64>,
    lu: EquilibratedLu,
    basis: MultiIndexBasis,
    low_len: usize,
    p_high: DMatrix<f64>,
}

pub fn assemble_system(stencil: &Stencil) -> Result<SaddleSystem> {
    let d = stencil.dim();
    let basis = enumerate_basis(d, stencil.m + stencil.mu)?;
    let low = basis.truncate(stencil.m);
    let matrix = saddle_matrix(&stencil.center, &stencil.nodes, &low);
    let lu = EquilibratedLu::factor(&matrix).map_err(|condition| Error::SingularSystem {
        center: stencil.center.coords().to_vec(),
        n: stencil.n(),
        degree: stencil.m,
        condition,
    })?;
    if lu.condition() > ILL_CONDITIONED {
        log::warn!("ill-conditioned saddle system at {:?}: condition estimate {:e}", stencil.center, lu.condition());
    }
    let full_p = vandermonde(&basis, &stencil.center, &stencil.nodes);
    let p_high = full_p.columns(low.len(), basis.len() - low.len()).into_owned();
    Ok(SaddleSystem { stencil: stencil.clone(), matrix, lu, low_len: low.len(), basis, p_high })
}

impl SaddleSystem {
    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    /// The assembled (unfactorized) matrix `S_m`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn condition(&self) -> f64 {
        self.lu.condition()
    }

    pub fn is_ill_conditioned(&self) -> bool {
        self.lu.condition() > ILL_CONDITIONED
    }

    /// Degree-`m + mu` basis; the degree-`m` basis is its prefix.
    pub fn basis(&self) -> &MultiIndexBasis {
        &self.basis
    }

    /// Vandermonde columns of the degrees `m + 1 ..= m + mu`.
    pub fn p_high(&self) -> &DMatrix<f64> {
        &self.p_high
    }

    /// Kernel-coefficient blocks of the degree-`m` interpolants of the
    /// higher-degree monomials: the top `n` rows of `S_m^{-1} [P_high; 0]`.
    pub fn lambda(&self) -> DMatrix<f64> {
        let n = self.stencil.n();
        let q = self.p_high.ncols();
        let mut rhs = DMatrix::zeros(n + self.low_len, q);
        rhs.view_mut((0, 0), (n, q)).copy_from(&self.p_high);
        self.lu.solve(&rhs).rows(0, n).into_owned()
    }

    fn solve_top(&self, lphi: &DMatrix<f64>, lpi: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.stencil.n();
        let c = lphi.ncols();
        let mut rhs = DMatrix::zeros(n + self.low_len, c);
        rhs.view_mut((0, 0), (n, c)).copy_from(lphi);
        rhs.view_mut((n, 0), (self.low_len, c)).copy_from(&lpi.rows(0, self.low_len));
        self.lu.solve(&rhs).rows(0, n).into_owned()
    }
}

/// Degree-`m` weights, one column per operator component.
pub fn solve_weights(system: &SaddleSystem, op: &OperatorSpec) -> Result<DMatrix<f64>> {
    let st = &system.stencil;
    op.check(st.dim())?;
    let lphi = op.apply_kernel(&st.center, &st.nodes)?;
    let lpi = op.apply_monomials(&st.center, &system.basis.truncate(st.m));
    Ok(system.solve_top(&lphi, &lpi))
}

/// Weights from a direct solve of the full saddle system for `basis`,
/// factorized the same way as the degree-`m` system.
pub fn solve_full(center: &Point, nodes: &[Point], op: &OperatorSpec, basis: &MultiIndexBasis) -> Result<DMatrix<f64>> {
    op.check(center.dim())?;
    let n = nodes.len();
    let q = basis.len();
    let s = saddle_matrix(center, nodes, basis);
    let lu = EquilibratedLu::factor(&s).map_err(|condition| Error::SingularSystem {
        center: center.coords().to_vec(),
        n,
        degree: basis.max_degree(),
        condition,
    })?;
    let lphi = op.apply_kernel(center, nodes)?;
    let lpi = op.apply_monomials(center, basis);
    let c = lphi.ncols();
    let mut rhs = DMatrix::zeros(n + q, c);
    rhs.view_mut((0, 0), (n, c)).copy_from(&lphi);
    rhs.view_mut((n, 0), (q, c)).copy_from(&lpi);
    Ok(lu.solve(&rhs).rows(0, n).into_owned())
}

/// How to treat a numerically singular reduced matrix in [`extend_weights`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExtensionMode {
    /// Report [`Error::DegenerateExtension`].
    #[default]
    Strict,
    /// Fall back to the minimum-norm least-squares solution of the reduced system.
    LeastSquares,
}

/// Outcome of a degree extension.
#[derive(Debug, Clone)]
pub struct Extension {
    pub weights: DMatrix<f64>,
    /// `true` when the reduced matrix was rank deficient and the least-squares
    /// fallback was used.
    pub rank_deficient: bool,
}

/// Degree-`m + mu` weights from the degree-`m` ones by block elimination.
///
/// With `Lambda` the kernel blocks of `S_m^{-1} [P_high; 0]`, the full system
/// reduces to `(P_high^T Lambda) t = P_high^T w_m - L Pi_high` and
/// `w_{m+mu} = w_m - Lambda t`.
pub fn extend_weights(system: &SaddleSystem, w_m: &DMatrix<f64>, op: &OperatorSpec, mode: ExtensionMode) -> Result<Extension> {
    let st = &system.stencil;
    op.check(st.dim())?;
    if st.n() < system.basis.len() {
        return Err(Error::InsufficientNodes { needed: system.basis.len(), available: st.n() });
    }
    let lambda = system.lambda();
    let reduced = system.p_high.transpose() * &lambda;
    let lpi_high = op.apply_monomials(&st.center, &system.basis).rows(system.low_len, system.p_high.ncols()).into_owned();
    let defect = system.p_high.transpose() * w_m - lpi_high;
    let degenerate = || Error::DegenerateExtension { center: st.center.coords().to_vec() };
    // Entry (k, l) of the reduced matrix scales like h^(|alpha_k| + |alpha_l| - 3)
    // in the stencil radius h. Scaling by those powers, rather than by the
    // data, keeps columns that vanish up to roundoff small.
    let h = st.nodes.iter().map(|p| p.dist(&st.center)).fold(0.0, f64::max);
    let h = if h > 0.0 { h } else { 1.0 };
    let powers: Vec<f64> = system.basis.indices()[system.low_len..].iter().map(|a| h.powi(-(a.degree() as i32))).collect();
    let row_scale: Vec<f64> = powers.iter().map(|p| p * h.powi(3)).collect();
    let lu = EquilibratedLu::factor_scaled(&reduced, &row_scale, &powers).ok();
    let full_rank = match &lu {
        Some(lu) if lu.condition() <= EXTENSION_SCREEN => true,
        _ => relative_min_singular_value(&reduced, &row_scale, &powers) > EXTENSION_RCOND,
    };
    let (t, rank_deficient) = match lu {
        Some(lu) if full_rank => (lu.solve(&defect), false),
        _ => match mode {
            ExtensionMode::Strict => return Err(degenerate()),
            ExtensionMode::LeastSquares => {
                let (t, _) = lstsq_scaled(&reduced, &defect, &row_scale, &powers, EXTENSION_RCOND).ok_or_else(degenerate)?;
                (t, true)
            }
        },
    };
    Ok(Extension { weights: w_m - lambda * t, rank_deficient })
}

/// Degree-`m` and degree-`m + mu` weights on one stencil.
#[derive(Debug, Clone)]
pub struct WeightPair {
    pub w_m: DMatrix<f64>,
    pub w_mmu: DMatrix<f64>,
}

impl WeightPair {
    pub fn estimator_weights(&self) -> DMatrix<f64> {
        &self.w_m - &self.w_mmu
    }

    /// Degree-`m` approximation `w_m . f`, one entry per component.
    pub fn value(&self, f_values: &[f64]) -> Vec<f64> {
        apply(&self.w_m, f_values)
    }

    pub fn estimate(&self, f_values: &[f64]) -> f64 {
        error_estimate(self, f_values)
    }
}

fn apply(w: &DMatrix<f64>, f: &[f64]) -> Vec<f64> {
    assert_eq!(w.nrows(), f.len(), "weight and value counts differ");
    w.column_iter().map(|col| col.iter().zip(f).map(|(a, b)| a * b).sum()).collect()
}

/// `|| (w_m - w_{m+mu}) . f ||_2` over operator components.
pub fn error_estimate(pair: &WeightPair, f_values: &[f64]) -> f64 {
    apply(&pair.estimator_weights(), f_values).iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Everything the adaptive driver needs from one stencil.
#[derive(Debug, Clone)]
pub struct StencilWeights {
    pub pair: WeightPair,
    pub condition: f64,
    pub rank_deficient: bool,
}

/// Assemble, solve and extend in one call.
pub fn compute_weight_pair(stencil: &Stencil, op: &OperatorSpec, mode: ExtensionMode) -> Result<StencilWeights> {
    let system = assemble_system(stencil)?;
    let w_m = solve_weights(&system, op)?;
    let ext = extend_weights(&system, &w_m, op, mode)?;
    Ok(StencilWeights { pair: WeightPair { w_m, w_mmu: ext.weights }, condition: system.condition(), rank_deficient: ext.rank_deficient })
}
