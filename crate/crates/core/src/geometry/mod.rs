//! Node sets, nearest-neighbor search, tessellations of `[-1, 1]^d` and the
//! node-insertion rules used by the adaptive driver.

mod delaunay;
mod kdtree;
mod refine;

use std::collections::HashMap;

pub use delaunay::delaunay;
pub use kdtree::KdTree;
pub use refine::{refine_differentiation_point, refine_quadrature_cell};

use crate::error::{Error, Result};
use crate::kernel::Cell;
use crate::point::Point;

/// Points closer than this are treated as the same node.
pub const DEDUP_TOL: f64 = 1e-12;

/// Distinct points in `[-1, 1]^d` with a nearest-neighbor index.
///
/// The k-d tree covers the points present at the last [`NodeSet::rebuild_index`];
/// later insertions are searched by brute force until the next rebuild.
#[derive(Debug, Clone)]
pub struct NodeSet {
    dim: usize,
    points: Vec<Point>,
    bins: HashMap<[i64; 3], Vec<usize>>,
    index: KdTree,
}

fn bin_key(p: &Point) -> [i64; 3] {
    let mut k = [0i64; 3];
    for (j, v) in p.coords().iter().enumerate() {
        k[j] = (v / DEDUP_TOL).floor() as i64;
    }
    k
}

impl NodeSet {
    pub fn new(dim: usize) -> Self {
        assert!((1..=3).contains(&dim), "node set dimension must be 1..=3");
        Self { dim, points: Vec::new(), bins: HashMap::new(), index: KdTree::build(&[]) }
    }

    pub fn from_points(dim: usize, points: &[Point]) -> Result<Self> {
        let mut s = Self::new(dim);
        for p in points {
            s.insert(*p)?;
        }
        s.rebuild_index();
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Index of an existing node within [`DEDUP_TOL`] of `p`.
    pub fn find(&self, p: &Point) -> Option<usize> {
        let key = bin_key(p);
        let mut probe = key;
        let offsets: &[i64] = &[-1, 0, 1];
        let mut found = None;
        let mut visit = |probe: &[i64; 3]| {
            if let Some(ids) = self.bins.get(probe) {
                for &i in ids {
                    if self.points[i].dist(p) <= DEDUP_TOL && found.is_none_or(|f: usize| i < f) {
                        found = Some(i);
                    }
                }
            }
        };
        match self.dim {
            1 => {
                for &a in offsets {
                    probe[0] = key[0] + a;
                    visit(&probe);
                }
            }
            2 => {
                for &a in offsets {
                    for &b in offsets {
                        probe[0] = key[0] + a;
                        probe[1] = key[1] + b;
                        visit(&probe);
                    }
                }
            }
            _ => {
                for &a in offsets {
                    for &b in offsets {
                        for &c in offsets {
                            probe = [key[0] + a, key[1] + b, key[2] + c];
                            visit(&probe);
                        }
                    }
                }
            }
        }
        found
    }

    /// Insert `p`, returning its index and whether it was new.
    pub fn insert(&mut self, p: Point) -> Result<(usize, bool)> {
        if p.dim() != self.dim {
            return Err(Error::InvalidArgument(format!("{}-D point inserted into a {}-D node set", p.dim(), self.dim)));
        }
        if !p.in_unit_cube(DEDUP_TOL) || p.coords().iter().any(|v| !v.is_finite()) {
            return Err(Error::OutsideDomain(p.coords().to_vec()));
        }
        if let Some(i) = self.find(&p) {
            return Ok((i, false));
        }
        let i = self.points.len();
        self.points.push(p);
        self.bins.entry(bin_key(&p)).or_default().push(i);
        Ok((i, true))
    }

    pub fn rebuild_index(&mut self) {
        self.index = KdTree::build(&self.points);
    }

    /// The `n` nearest nodes to `q`, nearest first; equal distances resolve
    /// to the lower index.
    pub fn nearest_neighbors(&self, q: &Point, n: usize) -> Result<Vec<usize>> {
        if n > self.points.len() {
            return Err(Error::InsufficientNodes { needed: n, available: self.points.len() });
        }
        let mut best = self.index.nearest(q, n);
        for i in self.index.len()..self.points.len() {
            kdtree::offer(&mut best, n, (q.dist2(&self.points[i]), i));
        }
        Ok(best.into_iter().map(|e| e.1).collect())
    }
}

/// Tensor grid of `count^d` equally spaced points on `[-1, 1]^d`, first
/// coordinate varying fastest.
pub fn initial_grid(d: usize, count: usize) -> Result<NodeSet> {
    if !(1..=2).contains(&d) {
        return Err(Error::InvalidArgument(format!("initial grids are 1-D or 2-D, got d={d}")));
    }
    if count < 2 {
        return Err(Error::InvalidArgument("need at least 2 points per axis".into()));
    }
    let h = 2.0 / (count - 1) as f64;
    let coord = |i: usize| if i == count - 1 { 1.0 } else { -1.0 + h * i as f64 };
    let pts: Vec<Point> = if d == 1 {
        (0..count).map(|i| Point::from1(coord(i))).collect()
    } else {
        (0..count * count).map(|k| Point::from2(coord(k % count), coord(k / count))).collect()
    };
    NodeSet::from_points(d, &pts)
}

/// One cell of a tessellation with its vertex node ids.
#[derive(Debug, Clone, PartialEq)]
pub struct TessCell {
    pub vertices: Vec<usize>,
    pub cell: Cell,
}

/// Intervals or triangles partitioning `[-1, 1]^d`. Cell ids are stable:
/// refined cells are retired, never reused.
#[derive(Debug, Clone)]
pub struct Tessellation {
    dim: usize,
    cells: Vec<TessCell>,
    alive: Vec<bool>,
}

impl Tessellation {
    /// Intervals between consecutive nodes of a 1-D node set.
    pub fn intervals(nodes: &NodeSet) -> Result<Self> {
        if nodes.dim() != 1 || nodes.len() < 2 {
            return Err(Error::InvalidArgument("interval partition needs >= 2 nodes in 1-D".into()));
        }
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&a, &b| nodes.point(a)[0].total_cmp(&nodes.point(b)[0]));
        let mut t = Self { dim: 1, cells: Vec::new(), alive: Vec::new() };
        for w in order.windows(2) {
            let cell = Cell::interval(nodes.point(w[0])[0], nodes.point(w[1])[0])?;
            t.push(vec![w[0], w[1]], cell);
        }
        Ok(t)
    }

    /// Delaunay triangulation of a 2-D node set.
    pub fn triangulate(nodes: &NodeSet) -> Result<Self> {
        if nodes.dim() != 2 {
            return Err(Error::InvalidArgument("triangulation needs a 2-D node set".into()));
        }
        let mut t = Self { dim: 2, cells: Vec::new(), alive: Vec::new() };
        for tri in delaunay(nodes.points())? {
            let p = |i: usize| [nodes.point(tri[i])[0], nodes.point(tri[i])[1]];
            let cell = Cell::triangle(p(0), p(1), p(2))?;
            t.push(tri.to_vec(), cell);
        }
        Ok(t)
    }

    pub(crate) fn push(&mut self, vertices: Vec<usize>, cell: Cell) -> usize {
        self.cells.push(TessCell { vertices, cell });
        self.alive.push(true);
        self.cells.len() - 1
    }

    pub(crate) fn retire(&mut self, k: usize) {
        self.alive[k] = false;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize) -> &TessCell {
        &self.cells[k]
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.alive[k]
    }

    /// Ids of cells currently in the partition, ascending.
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.cells.len()).filter(|&k| self.alive[k])
    }

    pub fn active_count(&self) -> usize {
        self.alive.iter().filter(|a| **a).count()
    }

    /// Total number of ids ever issued.
    pub fn capacity(&self) -> usize {
        self.cells.len()
    }

    pub fn total_measure(&self) -> f64 {
        self.active().map(|k| self.cells[k].cell.measure()).sum()
    }
}
