//! Planar Delaunay triangulation by Bowyer–Watson insertion.
//!
//! The convex hull is closed off with "ghost" triangles that share a single
//! vertex at infinity, which avoids the hull defects of a finite super
//! triangle. Predicates use floating-point determinants with forward error
//! bounds; results inside the bound count as "not inside", so cocircular
//! configurations resolve by insertion order.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::point::Point;

const GHOST: usize = usize::MAX;

/// Orientation `(b - a) x (c - a)` and its roundoff bound.
fn orient(a: &Point, b: &Point, c: &Point) -> (f64, f64) {
    let l = (b[0] - a[0]) * (c[1] - a[1]);
    let r = (b[1] - a[1]) * (c[0] - a[0]);
    let bound = (3.0 + 16.0 * f64::EPSILON) * f64::EPSILON * (l.abs() + r.abs());
    (l - r, bound)
}

/// Positive when `d` lies inside the circumcircle of the counterclockwise `(a, b, c)`.
fn incircle(a: &Point, b: &Point, c: &Point, d: &Point) -> (f64, f64) {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let alift = adx * adx + ady * ady;
    let blift = bdx * bdx + bdy * bdy;
    let clift = cdx * cdx + cdy * cdy;
    let (bc1, bc2) = (bdx * cdy, cdx * bdy);
    let (ca1, ca2) = (cdx * ady, adx * cdy);
    let (ab1, ab2) = (adx * bdy, bdx * ady);
    let det = alift * (bc1 - bc2) + blift * (ca1 - ca2) + clift * (ab1 - ab2);
    let permanent = (bc1.abs() + bc2.abs()) * alift + (ca1.abs() + ca2.abs()) * blift + (ab1.abs() + ab2.abs()) * clift;
    (det, (10.0 + 96.0 * f64::EPSILON) * f64::EPSILON * permanent)
}

fn in_circumdisk(pts: &[Point], t: &[usize; 3], p: &Point) -> bool {
    if t[2] == GHOST {
        // Ghost (u, v, inf): the open half-plane left of u -> v, plus the open
        // segment uv itself.
        let (u, v) = (&pts[t[0]], &pts[t[1]]);
        let (o, bound) = orient(u, v, p);
        if o > bound {
            return true;
        }
        if o < -bound {
            return false;
        }
        let e = [v[0] - u[0], v[1] - u[1]];
        let len2 = e[0] * e[0] + e[1] * e[1];
        let s = ((p[0] - u[0]) * e[0] + (p[1] - u[1]) * e[1]) / len2;
        let margin = 1e-12;
        return s > margin && s < 1.0 - margin;
    }
    let (det, bound) = incircle(&pts[t[0]], &pts[t[1]], &pts[t[2]], p);
    det > bound
}

// Rotate so that a ghost vertex, if present, comes last.
fn normalize(t: [usize; 3]) -> [usize; 3] {
    match t.iter().position(|&v| v == GHOST) {
        Some(0) => [t[1], t[2], t[0]],
        Some(1) => [t[2], t[0], t[1]],
        _ => t,
    }
}

/// Delaunay triangles of `points` (2D), counterclockwise, as point indices.
pub fn delaunay(points: &[Point]) -> Result<Vec<[usize; 3]>> {
    if points.len() < 3 || points.iter().any(|p| p.dim() != 2) {
        return Err(Error::DegenerateInput);
    }
    let third = (2..points.len())
        .find(|&k| {
            let (o, b) = orient(&points[0], &points[1], &points[k]);
            o.abs() > b && o.abs() > 1e-14 * points[0].dist2(&points[1])
        })
        .ok_or(Error::DegenerateInput)?;
    let (o, _) = orient(&points[0], &points[1], &points[third]);
    let (a, b, c) = if o > 0.0 { (0, 1, third) } else { (1, 0, third) };
    let mut tris: Vec<Option<[usize; 3]>> = vec![Some([a, b, c]), Some([b, a, GHOST]), Some([c, b, GHOST]), Some([a, c, GHOST])];
    let mut free: Vec<usize> = Vec::new();

    for (pi, p) in points.iter().enumerate() {
        if pi == a || pi == b || pi == c {
            continue;
        }
        let cavity: Vec<usize> =
            tris.iter().enumerate().filter_map(|(i, t)| t.filter(|t| in_circumdisk(points, t, p)).map(|_| i)).collect();
        if cavity.is_empty() {
            // Coincides with an existing vertex (within predicate tolerance).
            continue;
        }
        let mut edges: HashMap<(usize, usize), ()> = HashMap::new();
        for &i in &cavity {
            let t = tris[i].unwrap();
            for e in 0..3 {
                edges.insert((t[e], t[(e + 1) % 3]), ());
            }
        }
        let mut boundary = Vec::new();
        for &i in &cavity {
            let t = tris[i].unwrap();
            for e in 0..3 {
                let (u, v) = (t[e], t[(e + 1) % 3]);
                if !edges.contains_key(&(v, u)) {
                    boundary.push((u, v));
                }
            }
            tris[i] = None;
            free.push(i);
        }
        for (u, v) in boundary {
            let t = normalize([u, v, pi]);
            match free.pop() {
                Some(slot) => tris[slot] = Some(t),
                None => tris.push(Some(t)),
            }
        }
    }

    let mut out: Vec<[usize; 3]> = tris.into_iter().flatten().filter(|t| t[2] != GHOST).collect();
    out.sort_unstable();
    Ok(out)
}
