//! Node insertion around cells (quadrature) and points (differentiation).

use super::{delaunay, NodeSet, Tessellation};
use crate::error::{Error, Result};
use crate::kernel::{orient2, Cell};
use crate::point::Point;

/// Split cell `k`. In 1-D the interval is halved. In 2-D the barycenter and
/// the three edge midpoints are added and the cell is replaced by the
/// Delaunay triangulation of those seven points (six triangles). Neighboring
/// cells are left alone, so hanging nodes can appear.
///
/// Returns the ids of the new cells.
pub fn refine_quadrature_cell(nodes: &mut NodeSet, tess: &mut Tessellation, k: usize) -> Result<Vec<usize>> {
    if k >= tess.capacity() || !tess.is_active(k) {
        return Err(Error::InvalidArgument(format!("cell {k} is not in the tessellation")));
    }
    let tc = tess.get(k).clone();
    let new_cells = match tc.cell {
        Cell::Interval { a, b } => {
            let (mid, _) = nodes.insert(Point::from1(0.5 * (a + b)))?;
            vec![
                (vec![tc.vertices[0], mid], Cell::interval(a, 0.5 * (a + b))?),
                (vec![mid, tc.vertices[1]], Cell::interval(0.5 * (a + b), b)?),
            ]
        }
        Cell::Triangle(v) => split_triangle(nodes, &tc.vertices, v)?,
    };
    tess.retire(k);
    Ok(new_cells.into_iter().map(|(vs, c)| tess.push(vs, c)).collect())
}

type NewCell = (Vec<usize>, Cell);

fn split_triangle(nodes: &mut NodeSet, ids: &[usize], v: [[f64; 2]; 3]) -> Result<Vec<NewCell>> {
    let mid = |a: [f64; 2], b: [f64; 2]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let g = [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0];
    let local = [v[0], v[1], v[2], mid(v[0], v[1]), mid(v[1], v[2]), mid(v[2], v[0]), g];
    // Tessellation vertex ids follow the stored cell; the stored cell is
    // counterclockwise but may be a rotation of the id order.
    let mut gid = [0usize; 7];
    for (slot, p) in local.iter().enumerate().take(3) {
        gid[slot] = ids
            .iter()
            .copied()
            .find(|&i| nodes.point(i)[0] == p[0] && nodes.point(i)[1] == p[1])
            .map_or_else(|| nodes.insert(Point::from2(p[0], p[1])).map(|r| r.0), Ok)?;
    }
    for slot in 3..7 {
        gid[slot] = nodes.insert(Point::from2(local[slot][0], local[slot][1]))?.0;
    }
    let pts: Vec<Point> = local.iter().map(|p| Point::from2(p[0], p[1])).collect();
    let area = 0.5 * orient2(v[0], v[1], v[2]);
    let tris = delaunay(&pts)
        .ok()
        .filter(|t| {
            let sum: f64 = t.iter().map(|t| 0.5 * orient2(local[t[0]], local[t[1]], local[t[2]])).sum();
            t.len() == 6 && (sum - area).abs() <= 1e-12 * area
        })
        .unwrap_or_else(|| {
            // Fan through the barycenter: always a valid six-way split.
            vec![[0, 3, 6], [3, 1, 6], [1, 4, 6], [4, 2, 6], [2, 5, 6], [5, 0, 6]]
        });
    tris.iter()
        .map(|t| {
            let c = Cell::triangle(local[t[0]], local[t[1]], local[t[2]])?;
            Ok((t.iter().map(|&l| gid[l]).collect(), c))
        })
        .collect()
}

/// Add nodes around node `k` for differentiation refinement at level `level`.
///
/// 1-D: the midpoints toward the two nearest other nodes of `neighbors`
/// (the stencil of `k`, nearest first). 2-D: eight points at distance
/// `h0 / 2^(level + 1)` along the axes and diagonals. Candidates outside
/// `[-1, 1]^d` are dropped. Returns the ids of nodes that were actually new.
pub fn refine_differentiation_point(nodes: &mut NodeSet, k: usize, neighbors: &[usize], level: usize, h0: f64) -> Result<Vec<usize>> {
    let x = *nodes.point(k);
    let candidates: Vec<Point> = match x.dim() {
        1 => neighbors.iter().copied().filter(|&j| j != k).take(2).map(|j| x.midpoint(nodes.point(j))).collect(),
        2 => {
            let delta = h0 / f64::powi(2.0, level as i32 + 1);
            let s = std::f64::consts::FRAC_1_SQRT_2 * delta;
            let dirs = [[delta, 0.0], [-delta, 0.0], [0.0, delta], [0.0, -delta], [s, s], [-s, s], [s, -s], [-s, -s]];
            dirs.iter().map(|d| Point::from2(x[0] + d[0], x[1] + d[1])).collect()
        }
        d => return Err(Error::InvalidArgument(format!("differentiation refinement in {d}-D"))),
    };
    let mut added = Vec::new();
    for p in candidates {
        if !p.in_unit_cube(super::DEDUP_TOL) {
            continue;
        }
        let (i, new) = nodes.insert(p)?;
        if new {
            added.push(i);
        }
    }
    Ok(added)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::initial_grid;
    use approx::assert_relative_eq;

    #[test]
    fn interval_split() {
        let mut nodes = NodeSet::from_points(1, &[Point::from1(0.0), Point::from1(2.0 / 9.0)]).unwrap();
        let mut t = Tessellation::intervals(&nodes).unwrap();
        let new = refine_quadrature_cell(&mut nodes, &mut t, 0).unwrap();
        assert_eq!(new, vec![1, 2]);
        assert_eq!(nodes.len(), 3);
        assert_relative_eq!(nodes.point(2)[0], 1.0 / 9.0, max_relative = 1e-15);
        assert_eq!(t.get(1).cell, Cell::Interval { a: 0.0, b: 1.0 / 9.0 });
        assert!(!t.is_active(0));
    }

    #[test]
    fn triangle_split_partitions_the_cell() {
        let mut nodes = initial_grid(2, 10).unwrap();
        let mut t = Tessellation::triangulate(&nodes).unwrap();
        let k = t.active().nth(40).unwrap();
        let area = t.get(k).cell.measure();
        let n0 = nodes.len();
        let new = refine_quadrature_cell(&mut nodes, &mut t, k).unwrap();
        assert_eq!(new.len(), 6);
        assert_eq!(nodes.len(), n0 + 4);
        let sum: f64 = new.iter().map(|&c| t.get(c).cell.measure()).sum();
        assert_relative_eq!(sum, area, max_relative = 1e-12);
        for &c in &new {
            assert!(t.get(c).cell.measure() < area);
            for &v in &t.get(c).vertices {
                assert!(t.get(c).cell.vertices().iter().any(|p| p.dist(nodes.point(v)) < 1e-15));
            }
        }
        assert_relative_eq!(t.total_measure(), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn shared_edge_midpoint_inserted_once() {
        let mut nodes = initial_grid(2, 2).unwrap();
        let mut t = Tessellation::triangulate(&nodes).unwrap();
        let ids: Vec<usize> = t.active().collect();
        assert_eq!(ids.len(), 2);
        refine_quadrature_cell(&mut nodes, &mut t, ids[0]).unwrap();
        assert_eq!(nodes.len(), 8);
        refine_quadrature_cell(&mut nodes, &mut t, ids[1]).unwrap();
        // Second cell adds its barycenter and two new edge midpoints only.
        assert_eq!(nodes.len(), 11);
        assert_relative_eq!(t.total_measure(), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn differentiation_1d() {
        let h = 2.0 / 9.0;
        let mut nodes = NodeSet::from_points(1, &[Point::from1(-h), Point::from1(0.0), Point::from1(h), Point::from1(1.0)]).unwrap();
        let k = 1;
        let nb = nodes.nearest_neighbors(&Point::from1(0.0), 3).unwrap();
        let added = refine_differentiation_point(&mut nodes, k, &nb, 0, 2.0 / 9.0).unwrap();
        let mut xs: Vec<f64> = added.iter().map(|&i| nodes.point(i)[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_relative_eq!(xs[0], -1.0 / 9.0, max_relative = 1e-14);
        assert_relative_eq!(xs[1], 1.0 / 9.0, max_relative = 1e-14);
    }

    #[test]
    fn differentiation_2d_ring_and_corner() {
        let mut nodes = NodeSet::from_points(2, &[Point::from2(0.0, 0.0), Point::from2(1.0, 1.0)]).unwrap();
        let h0 = 2.0 / 9.0;
        let added = refine_differentiation_point(&mut nodes, 0, &[], 0, h0).unwrap();
        assert_eq!(added.len(), 8);
        for &i in &added {
            assert_relative_eq!(nodes.point(i).norm(), 1.0 / 9.0, max_relative = 1e-14);
        }
        let added = refine_differentiation_point(&mut nodes, 1, &[], 0, h0).unwrap();
        // Only the three candidates pointing into the square survive.
        assert_eq!(added.len(), 3);
        assert!(nodes.points().iter().all(|p| p.in_unit_cube(0.0)));
    }
}
