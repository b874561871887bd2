//! Wall-clock comparison of the direct degree-`m + mu` solve against the
//! block extension from an existing degree-`m` factorization.

use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{count_monomials, enumerate_basis, vandermonde, MultiIndex};
use crate::error::{Error, Result};
use crate::linalg::relative_min_singular_value;
use crate::local_interp::{assemble_system, extend_weights, solve_full, solve_weights, ExtensionMode, OperatorSpec, Stencil};
use crate::point::Point;

/// Attempts per stencil before giving up on drawing a unisolvent one.
const MAX_DRAWS: usize = 100;

/// Smallest accepted `sigma_min / sigma_max` of the radius-scaled Vandermonde
/// at degrees `m` and `m + mu`. Below it the weights themselves are sensitive
/// at the 1e-9 level and any two solution routes drift apart.
pub const POISE_FLOOR: f64 = 1e-5;

/// A stencil of `M_{d, m+mu}` nodes shaped like the neighborhoods the
/// adaptive driver builds: the nearest points of a jittered unit lattice to a
/// random center, rescaled so the farthest node sits at distance `h`. Draws
/// are repeated until the degree-`m` system is regular, the extension is well
/// posed and both Vandermondes clear [`POISE_FLOOR`].
pub fn random_stencil(rng: &mut impl Rng, d: usize, m: usize, mu: usize, h: f64) -> Result<Stencil> {
    let n = count_monomials(d, m + mu)?;
    let op = OperatorSpec::Derivative(MultiIndex::unit(d, 0));
    // Half-width of a lattice block holding comfortably more than n points.
    let half = ((4 * n) as f64).powf(1.0 / d as f64).ceil() as i64 / 2 + 1;
    let side = (2 * half + 1) as usize;
    for _ in 0..MAX_DRAWS {
        let center: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
        let mut lattice: Vec<(f64, Vec<f64>)> = (0..side.pow(d as u32))
            .map(|mut idx| {
                let p: Vec<f64> = (0..d)
                    .map(|_| {
                        let k = (idx % side) as i64 - half;
                        idx /= side;
                        k as f64 + rng.random_range(-0.3..0.3)
                    })
                    .collect();
                let r2 = p.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                (r2, p)
            })
            .collect();
        lattice.sort_by(|a, b| a.0.total_cmp(&b.0));
        lattice.truncate(n);
        let scale = h / lattice[n - 1].0.sqrt();
        let nodes: Vec<Point> =
            lattice.iter().map(|(_, p)| Point::new(&p.iter().zip(&center).map(|(a, c)| (a - c) * scale).collect::<Vec<_>>())).collect();
        if !well_poised(&nodes, d, m)? || !well_poised(&nodes, d, m + mu)? {
            continue;
        }
        let st = Stencil::new(Point::origin(d), nodes, m, mu)?;
        let ok = assemble_system(&st).and_then(|sys| {
            let w = solve_weights(&sys, &op)?;
            extend_weights(&sys, &w, &op, ExtensionMode::Strict)
        });
        if ok.is_ok() {
            return Ok(st);
        }
    }
    Err(Error::InvalidArgument(format!("could not draw a unisolvent stencil for d={d}, m={m}, mu={mu}")))
}

fn well_poised(nodes: &[Point], d: usize, degree: usize) -> Result<bool> {
    let basis = enumerate_basis(d, degree)?;
    let h = nodes.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let cols: Vec<f64> = basis.indices().iter().map(|a| h.powi(-(a.degree() as i32))).collect();
    let v = vandermonde(&basis, &Point::origin(d), nodes);
    Ok(relative_min_singular_value(&v, &vec![1.0; nodes.len()], &cols) >= POISE_FLOOR)
}

/// Mean times in seconds for one `(d, m, mu)` case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRow {
    pub d: usize,
    pub m: usize,
    pub mu: usize,
    pub n: usize,
    pub reps: usize,
    /// Assemble, factor and solve the degree-`m` system.
    pub tau_m: f64,
    /// Assemble, factor and solve the degree-`m + mu` system.
    pub tau_full: f64,
    /// Extend degree-`m` weights to degree `m + mu`, given the factorization.
    pub tau_ext: f64,
}

impl TimingRow {
    pub fn ratio_full(&self) -> f64 {
        self.tau_full / self.tau_m
    }

    pub fn ratio_ext(&self) -> f64 {
        self.tau_ext / self.tau_m
    }
}

/// Time `reps` first-derivative weight computations on fresh random stencils.
/// Runs on the calling thread only.
pub fn time_case(d: usize, m: usize, mu: usize, reps: usize, seed: u64) -> Result<TimingRow> {
    if reps == 0 || mu == 0 || !(1..=3).contains(&d) {
        return Err(Error::InvalidArgument(format!("need reps, mu >= 1 and d in 1..=3 (d={d}, mu={mu}, reps={reps})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stencils = (0..reps).map(|_| random_stencil(&mut rng, d, m, mu, 0.1)).collect::<Result<Vec<_>>>()?;
    let op = OperatorSpec::Derivative(MultiIndex::unit(d, 0));
    let low = enumerate_basis(d, m)?;
    let high = enumerate_basis(d, m + mu)?;

    let t = Instant::now();
    for st in &stencils {
        black_box(solve_full(st.center(), st.nodes(), &op, &low)?);
    }
    let tau_m = t.elapsed().as_secs_f64() / reps as f64;

    let t = Instant::now();
    for st in &stencils {
        black_box(solve_full(st.center(), st.nodes(), &op, &high)?);
    }
    let tau_full = t.elapsed().as_secs_f64() / reps as f64;

    let prepared = stencils
        .iter()
        .map(|st| {
            let sys = assemble_system(st)?;
            let w = solve_weights(&sys, &op)?;
            Ok((sys, w))
        })
        .collect::<Result<Vec<_>>>()?;
    let t = Instant::now();
    for (sys, w) in &prepared {
        black_box(extend_weights(sys, w, &op, ExtensionMode::Strict)?);
    }
    let tau_ext = t.elapsed().as_secs_f64() / reps as f64;

    Ok(TimingRow { d, m, mu, n: count_monomials(d, m + mu)?, reps, tau_m, tau_full, tau_ext })
}
