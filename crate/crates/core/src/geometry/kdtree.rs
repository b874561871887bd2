//! Static k-d tree for exact k-nearest-neighbor queries.
//!
//! Results are ordered by `(squared distance, index)`, so ties between
//! equidistant points always resolve to the lower index.

use crate::point::Point;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { lo: usize, hi: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Point>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn build(points: &[Point]) -> Self {
        let mut tree = KdTree { points: points.to_vec(), order: (0..points.len()).collect(), nodes: Vec::new() };
        if !points.is_empty() {
            tree.build_range(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build_range(&mut self, lo: usize, hi: usize) -> usize {
        let id = self.nodes.len();
        if hi - lo <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { lo, hi });
            return id;
        }
        let dim = self.points[0].dim();
        let axis = (0..dim).max_by(|&a, &b| self.spread(lo, hi, a).total_cmp(&self.spread(lo, hi, b))).unwrap();
        let mid = (lo + hi) / 2;
        let pts = &self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&i, &j| pts[i][axis].total_cmp(&pts[j][axis]));
        let value = self.points[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { lo: 0, hi: 0 });
        let left = self.build_range(lo, mid);
        let right = self.build_range(mid, hi);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    fn spread(&self, lo: usize, hi: usize, axis: usize) -> f64 {
        let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
        for &i in &self.order[lo..hi] {
            let v = self.points[i][axis];
            a = a.min(v);
            b = b.max(v);
        }
        b - a
    }

    /// Up to `k` nearest points as `(squared distance, index)`, ascending.
    pub fn nearest(&self, q: &Point, k: usize) -> Vec<(f64, usize)> {
        let mut best = Vec::with_capacity(k + 1);
        if k > 0 && !self.points.is_empty() {
            self.search(0, q, k, &mut best);
        }
        best
    }

    fn search(&self, id: usize, q: &Point, k: usize, best: &mut Vec<(f64, usize)>) {
        match self.nodes[id] {
            Node::Leaf { lo, hi } => {
                for &i in &self.order[lo..hi] {
                    offer(best, k, (q.dist2(&self.points[i]), i));
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, best);
                // Equal distances must still be visited so that index ties resolve.
                if best.len() < k || diff * diff <= best[best.len() - 1].0 {
                    self.search(far, q, k, best);
                }
            }
        }
    }
}

/// Insert a candidate into the sorted best list of capacity `k`.
pub(crate) fn offer(best: &mut Vec<(f64, usize)>, k: usize, cand: (f64, usize)) {
    let less = |a: &(f64, usize), b: &(f64, usize)| a.0 < b.0 || (a.0 == b.0 && a.1 < b.1);
    if best.len() == k && !less(&cand, &best[k - 1]) {
        return;
    }
    let pos = best.partition_point(|e| less(e, &cand));
    best.insert(pos, cand);
    best.truncate(k);
}
