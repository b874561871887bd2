//! Shared setup for the criterion benches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kadapt::local_interp::{assemble_system, solve_weights, SaddleSystem};
use kadapt::timing::random_stencil;
use kadapt::{enumerate_basis, MultiIndex, MultiIndexBasis, OperatorSpec, Result, Stencil};

/// A batch of stencils for one `(d, m, mu)` case, with the degree-`m`
/// systems already factored for the extension bench.
pub struct Case {
    pub label: String,
    pub op: OperatorSpec,
    pub low: MultiIndexBasis,
    pub high: MultiIndexBasis,
    pub stencils: Vec<Stencil>,
    pub prepared: Vec<(SaddleSystem, nalgebra::DMatrix<f64>)>,
}

impl Case {
    pub fn new(d: usize, m: usize, mu: usize, count: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stencils = (0..count).map(|_| random_stencil(&mut rng, d, m, mu, 0.1)).collect::<Result<Vec<_>>>()?;
        let op = OperatorSpec::Derivative(MultiIndex::unit(d, 0));
        let prepared = stencils
            .iter()
            .map(|st| {
                let sys = assemble_system(st)?;
                let w = solve_weights(&sys, &op)?;
                Ok((sys, w))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            label: format!("d{d}_m{m}_mu{mu}"),
            op,
            low: enumerate_basis(d, m)?,
            high: enumerate_basis(d, m + mu)?,
            stencils,
            prepared,
        })
    }
}
