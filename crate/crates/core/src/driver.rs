//! Level-by-level adaptive refinement driven by the local error estimate.
//!
//! At each level every evaluation point gets its `n` nearest nodes. Points
//! that are new, or whose neighborhood changed since the previous level, are
//! (re)solved in parallel; those whose estimate exceeds `eps` are refined
//! serially before the next level. The run stops when no neighborhood
//! changes, at the level limit, or once the node count passes the cap.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::basis::count_monomials;
use crate::error::{Error, Result};
use crate::geometry::{initial_grid, refine_differentiation_point, refine_quadrature_cell, NodeSet, TessCell, Tessellation};
use crate::kernel::Cell;
use crate::local_interp::{compute_weight_pair, ExtensionMode, OperatorSpec, Stencil};
use crate::point::Point;
use crate::test_functions::TestFunction;

/// Scalar field sampled at nodes; must be safe to call from several threads.
pub type Field<'a> = &'a (dyn Fn(&Point) -> f64 + Sync);

/// Default node cap, `floor(10^5.5)`.
pub const DEFAULT_NODE_CAP: usize = 316_227;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Integrals over the cells of a tessellation of `[-1, 1]^d`.
    Quadrature,
    /// Gradients at the nodes.
    Differentiation,
}

/// Which evaluation points are recomputed at each level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdatePolicy {
    /// New points and every point whose neighborhood changed.
    #[default]
    ChangedNeighborhoods,
    /// New points, and changed points whose last estimate exceeded `eps`.
    ViolatingOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub dim: usize,
    pub task: Task,
    pub m: usize,
    pub mu: usize,
    /// Stencil size; `None` means `M_{d, m + mu}`.
    pub n: Option<usize>,
    pub eps: f64,
    pub l_max: usize,
    pub n_cap: usize,
    /// Points per axis of the initial grid.
    pub grid_count: usize,
    pub policy: UpdatePolicy,
    pub extension: ExtensionMode,
}

impl AdaptiveConfig {
    pub fn new(dim: usize, task: Task, m: usize, eps: f64) -> Self {
        Self {
            dim,
            task,
            m,
            mu: 2,
            n: None,
            eps,
            l_max: 40,
            n_cap: DEFAULT_NODE_CAP,
            grid_count: 10,
            policy: UpdatePolicy::default(),
            extension: ExtensionMode::LeastSquares,
        }
    }

    pub fn stencil_size(&self) -> Result<usize> {
        let min = count_monomials(self.dim, self.m + self.mu)?;
        Ok(self.n.unwrap_or(min))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(1..=2).contains(&self.dim) {
            return bad(format!("adaptive runs support d = 1 or 2, got {}", self.dim));
        }
        if self.mu < 1 {
            return bad("mu must be at least 1".into());
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if self.grid_count < 2 {
            return bad("initial grid needs at least 2 points per axis".into());
        }
        let min = count_monomials(self.dim, self.m + self.mu)?;
        let n = self.stencil_size()?;
        if n < min {
            return bad(format!("stencil size {n} is below M(d, m + mu) = {min}"));
        }
        let n0 = self.grid_count.pow(self.dim as u32);
        if n > n0 {
            return Err(Error::InsufficientNodes { needed: n, available: n0 });
        }
        Ok(())
    }

    /// Spacing of the initial grid.
    pub fn h0(&self) -> f64 {
        2.0 / (self.grid_count - 1) as f64
    }
}

/// Exact values of the operators, used only to report actual errors.
pub trait ExactOperator: Sync {
    fn cell_integral(&self, cell: &Cell) -> f64;
    fn gradient(&self, x: &Point) -> Vec<f64>;
    /// Integral over `[-1, 1]^d`, if known.
    fn domain_integral(&self) -> Option<f64>;
}

impl ExactOperator for TestFunction {
    fn cell_integral(&self, cell: &Cell) -> f64 {
        TestFunction::cell_integral(self, cell)
    }

    fn gradient(&self, x: &Point) -> Vec<f64> {
        TestFunction::gradient(self, x)
    }

    fn domain_integral(&self) -> Option<f64> {
        self.exact_integral().ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// No neighborhood changed (every estimate at or below `eps`).
    Converged,
    /// Refinement was still requested at the last allowed level.
    LevelLimit,
    /// The node count passed the cap.
    NodeCap,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::LevelLimit => "level_limit",
            Termination::NodeCap => "node_cap",
        }
    }
}

/// State of one evaluation point at the end of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    /// Cell id (quadrature) or node id (differentiation).
    pub id: usize,
    pub center: Point,
    pub cell: Option<Cell>,
    /// Degree-`m` approximation, one entry per operator component.
    pub value: Vec<f64>,
    pub estimate: f64,
    /// `|| value - exact ||_2`, when an exact operator was supplied.
    pub actual: Option<f64>,
    /// Level at which `value` was last computed.
    pub level: usize,
    /// Neighborhood used for `value`, nearest first.
    pub neighbors: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelStats {
    pub level: usize,
    /// Node count at the start of the level.
    pub nodes: usize,
    pub evaluation_points: usize,
    pub recomputed: usize,
    /// Evaluation points refined at the end of the level.
    pub refined: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct AdaptiveReport {
    pub config: AdaptiveConfig,
    pub termination: Termination,
    pub levels: Vec<LevelStats>,
    /// Final evaluation points, ascending id.
    pub records: Vec<PointRecord>,
    pub nodes: Vec<Point>,
    /// Final cells with their ids (quadrature only).
    pub cells: Vec<(usize, TessCell)>,
    /// Sum of the per-cell values (quadrature only).
    pub global_value: Option<f64>,
    pub global_error: Option<f64>,
    pub ill_conditioned: usize,
    pub rank_deficient: usize,
}

impl AdaptiveReport {
    pub fn final_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Node count at each level, then the final count.
    pub fn nodes_per_level(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.levels.iter().map(|l| l.nodes).collect();
        if v.last() != Some(&self.nodes.len()) {
            v.push(self.nodes.len());
        }
        v
    }

    pub fn record(&self, id: usize) -> Option<&PointRecord> {
        self.records.binary_search_by_key(&id, |r| r.id).ok().map(|i| &self.records[i])
    }

    /// Median of `estimate / actual` over points with `actual > floor`.
    pub fn median_estimate_ratio(&self, floor: f64) -> Option<f64> {
        let mut r: Vec<f64> = self.records.iter().filter_map(|p| p.actual.filter(|a| *a > floor).map(|a| p.estimate / a)).collect();
        if r.is_empty() {
            return None;
        }
        r.sort_by(f64::total_cmp);
        let k = r.len();
        Some(if k % 2 == 1 { r[k / 2] } else { 0.5 * (r[k / 2 - 1] + r[k / 2]) })
    }
}

/// Degree-`m` approximations at the requested evaluation points.
pub fn evaluate_final(report: &AdaptiveReport, ids: &[usize]) -> Vec<Option<Vec<f64>>> {
    ids.iter().map(|&id| report.record(id).map(|r| r.value.clone())).collect()
}

struct Computed {
    value: Vec<f64>,
    estimate: f64,
    weights: Vec<Vec<f64>>,
    ill_conditioned: bool,
    rank_deficient: bool,
}

struct Run<'a> {
    f: Field<'a>,
    cfg: &'a AdaptiveConfig,
    n: usize,
    nodes: NodeSet,
    fvals: Vec<f64>,
    tess: Option<Tessellation>,
    records: HashMap<usize, PointRecord>,
    ill_conditioned: usize,
    rank_deficient: usize,
}

impl Run<'_> {
    fn eval_ids(&self) -> Vec<usize> {
        match &self.tess {
            Some(t) => t.active().collect(),
            None => (0..self.nodes.len()).collect(),
        }
    }

    fn center_of(&self, id: usize) -> (Point, Option<Cell>) {
        match &self.tess {
            Some(t) => {
                let c = t.get(id).cell;
                (c.barycenter(), Some(c))
            }
            None => (*self.nodes.point(id), None),
        }
    }

    fn sample_new_nodes(&mut self) {
        let f = self.f;
        let fresh: Vec<f64> = self.nodes.points()[self.fvals.len()..].par_iter().map(f).collect();
        self.fvals.extend(fresh);
    }

    fn compute(&self, center: &Point, cell: Option<Cell>, neighbors: &[usize]) -> Result<Computed> {
        let pts: Vec<Point> = neighbors.iter().map(|&i| *self.nodes.point(i)).collect();
        let op = match cell {
            Some(c) => OperatorSpec::IntegralOver(c),
            None => OperatorSpec::Gradient,
        };
        let st = Stencil::new(*center, pts, self.cfg.m, self.cfg.mu)?;
        let sw = compute_weight_pair(&st, &op, self.cfg.extension)?;
        let fv: Vec<f64> = neighbors.iter().map(|&i| self.fvals[i]).collect();
        Ok(Computed {
            value: sw.pair.value(&fv),
            estimate: sw.pair.estimate(&fv),
            weights: sw.pair.w_m.column_iter().map(|c| c.iter().copied().collect()).collect(),
            ill_conditioned: sw.condition > crate::linalg::ILL_CONDITIONED,
            rank_deficient: sw.rank_deficient,
        })
    }

    /// Recompute every point in `ids` whose neighborhood is new or changed
    /// (subject to the policy). Returns the ids recomputed.
    fn update(&mut self, level: usize, ids: &[usize], force_all: bool) -> Result<Vec<usize>> {
        self.nodes.rebuild_index();
        self.sample_new_nodes();
        let this = &*self;
        let hoods: Vec<(usize, Point, Option<Cell>, Vec<usize>)> = ids
            .par_iter()
            .map(|&id| {
                let (c, cell) = this.center_of(id);
                let nb = this.nodes.nearest_neighbors(&c, this.n)?;
                Ok((id, c, cell, nb))
            })
            .collect::<Result<_>>()?;
        let dirty: Vec<&(usize, Point, Option<Cell>, Vec<usize>)> = hoods
            .iter()
            .filter(|(id, _, _, nb)| {
                if force_all {
                    return true;
                }
                let Some(prev) = this.records.get(id) else {
                    return true;
                };
                let changed = sorted(&prev.neighbors) != sorted(nb);
                match this.cfg.policy {
                    UpdatePolicy::ChangedNeighborhoods => changed,
                    UpdatePolicy::ViolatingOnly => changed && prev.estimate > this.cfg.eps,
                }
            })
            .collect();
        let results: Vec<(usize, Computed)> =
            dirty.par_iter().map(|(id, c, cell, nb)| this.compute(c, *cell, nb).map(|r| (*id, r))).collect::<Result<_>>()?;
        let mut done = Vec::with_capacity(results.len());
        for ((id, r), (_, c, cell, nb)) in results.into_iter().zip(dirty) {
            self.ill_conditioned += usize::from(r.ill_conditioned);
            self.rank_deficient += usize::from(r.rank_deficient);
            self.records.insert(
                id,
                PointRecord {
                    id,
                    center: *c,
                    cell: *cell,
                    value: r.value,
                    estimate: r.estimate,
                    actual: None,
                    level,
                    neighbors: nb.clone(),
                    weights: r.weights,
                },
            );
            done.push(id);
        }
        Ok(done)
    }

    fn refine(&mut self, id: usize, level: usize) -> Result<()> {
        match self.tess.as_mut() {
            Some(t) => {
                refine_quadrature_cell(&mut self.nodes, t, id)?;
                self.records.remove(&id);
            }
            None => {
                let nb = self.records[&id].neighbors.clone();
                refine_differentiation_point(&mut self.nodes, id, &nb, level, self.cfg.h0())?;
            }
        }
        Ok(())
    }
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

/// Run the adaptive algorithm for `f` under `config`. With `exact`, actual
/// errors are attached to the final records.
pub fn run_adaptive(f: Field, config: &AdaptiveConfig, exact: Option<&dyn ExactOperator>) -> Result<AdaptiveReport> {
    config.validate()?;
    let nodes = initial_grid(config.dim, config.grid_count)?;
    let tess = match config.task {
        Task::Quadrature if config.dim == 1 => Some(Tessellation::intervals(&nodes)?),
        Task::Quadrature => Some(Tessellation::triangulate(&nodes)?),
        Task::Differentiation => None,
    };
    let mut run = Run {
        f,
        cfg: config,
        n: config.stencil_size()?,
        nodes,
        fvals: Vec::new(),
        tess,
        records: HashMap::new(),
        ill_conditioned: 0,
        rank_deficient: 0,
    };
    let mut levels = Vec::new();
    let mut level = 0;
    let termination = loop {
        let ids = run.eval_ids();
        let n_now = run.nodes.len();
        let recomputed = run.update(level, &ids, level == 0)?;
        let mut stats = LevelStats { level, nodes: n_now, evaluation_points: ids.len(), recomputed: recomputed.len(), refined: Vec::new() };
        if recomputed.is_empty() {
            levels.push(stats);
            break Termination::Converged;
        }
        let violators: Vec<usize> = recomputed.iter().copied().filter(|id| run.records[id].estimate > config.eps).collect();
        log::info!("level {level}: N={n_now}, points={}, recomputed={}, above tolerance={}", ids.len(), recomputed.len(), violators.len());
        if violators.is_empty() {
            levels.push(stats);
            break Termination::Converged;
        }
        if level >= config.l_max {
            levels.push(stats);
            break Termination::LevelLimit;
        }
        for &id in &violators {
            run.refine(id, level)?;
        }
        stats.refined = violators;
        levels.push(stats);
        level += 1;
        if run.nodes.len() > config.n_cap {
            // Bring every point up to date on the final node set, without refining.
            let ids = run.eval_ids();
            let recomputed = run.update(level, &ids, false)?;
            levels.push(LevelStats {
                level,
                nodes: run.nodes.len(),
                evaluation_points: ids.len(),
                recomputed: recomputed.len(),
                refined: Vec::new(),
            });
            break Termination::NodeCap;
        }
    };

    let ids = run.eval_ids();
    let mut records: Vec<PointRecord> = ids.iter().map(|id| run.records[id].clone()).collect();
    if let Some(ex) = exact {
        records.par_iter_mut().for_each(|r| {
            let err = match r.cell {
                Some(c) => (r.value[0] - ex.cell_integral(&c)).abs(),
                None => {
                    let g = ex.gradient(&r.center);
                    r.value.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
                }
            };
            r.actual = Some(err);
        });
    }
    let global_value = run.tess.as_ref().map(|_| records.iter().map(|r| r.value[0]).sum::<f64>());
    let global_error = match (global_value, exact.and_then(|e| e.domain_integral())) {
        (Some(v), Some(e)) => Some((v - e).abs()),
        _ => None,
    };
    let cells = match &run.tess {
        Some(t) => t.active().map(|k| (k, t.get(k).clone())).collect(),
        None => Vec::new(),
    };
    Ok(AdaptiveReport {
        config: config.clone(),
        termination,
        levels,
        records,
        nodes: run.nodes.points().to_vec(),
        cells,
        global_value,
        global_error,
        ill_conditioned: run.ill_conditioned,
        rank_deficient: run.rank_deficient,
    })
}

/// Non-adaptive quadrature on the uniform 1-D grid with `count` nodes:
/// per-interval `(cell, value, estimate)`.
pub fn uniform_quadrature_1d(f: Field, count: usize, m: usize, mu: usize) -> Result<Vec<(Cell, f64, f64)>> {
    let nodes = initial_grid(1, count)?;
    let tess = Tessellation::intervals(&nodes)?;
    let n = count_monomials(1, m + mu)?;
    let fvals: Vec<f64> = nodes.points().iter().map(f).collect();
    tess.active()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| {
            let cell = tess.get(k).cell;
            let c = cell.barycenter();
            let nb = nodes.nearest_neighbors(&c, n)?;
            let pts = nb.iter().map(|&i| *nodes.point(i)).collect();
            let st = Stencil::new(c, pts, m, mu)?;
            let sw = compute_weight_pair(&st, &OperatorSpec::IntegralOver(cell), ExtensionMode::LeastSquares)?;
            let fv: Vec<f64> = nb.iter().map(|&i| fvals[i]).collect();
            Ok((cell, sw.pair.value(&fv)[0], sw.pair.estimate(&fv)))
        })
        .collect()
}
