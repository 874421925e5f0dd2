//! Exact nearest-neighbour queries for Monte Carlo quantization costs.
//!
//! Median splits on the widest coordinate, leaves of at most [`LEAF_SIZE`]
//! points. The layout depends only on the input order, so queries are
//! reproducible.

use crate::measures::Sample;

pub const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    /// Point coordinates permuted into leaf order.
    coords: Vec<f64>,
    /// Original index of each permuted point.
    index: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn build(sample: &Sample) -> Self {
        let dim = sample.dim();
        let n = sample.len();
        let mut index: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::new();
        build_rec(sample, &mut index, 0, n, &mut nodes);
        let coords = index.iter().flat_map(|&i| sample.point(i).iter().copied()).collect();
        Self {
            dim,
            coords,
            index,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// `(original index, squared distance)` of the point closest to `q`;
    /// ties go to the point met first in leaf order.
    pub fn nearest(&self, q: &[f64]) -> (usize, f64) {
        debug_assert_eq!(q.len(), self.dim);
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, q, &mut best);
        (self.index[best.0], best.1)
    }

    fn search(&self, node: usize, q: &[f64], best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for k in start..end {
                    let p = &self.coords[k * self.dim..(k + 1) * self.dim];
                    let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d2 < best.1 {
                        *best = (k, d2);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                if diff * diff < best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

fn build_rec(sample: &Sample, index: &mut [usize], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let dim = sample.dim();
    let axis = (0..dim)
        .max_by(|&a, &b| {
            spread(sample, &index[start..end], a).total_cmp(&spread(sample, &index[start..end], b))
        })
        .unwrap_or(0);
    let mid = start + (end - start) / 2;
    index[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        sample.point(a)[axis]
            .total_cmp(&sample.point(b)[axis])
            .then(a.cmp(&b))
    });
    let value = sample.point(index[mid])[axis];
    nodes.push(Node::Leaf { start: 0, end: 0 });
    // Left holds [start, mid), all <= value; right holds [mid, end), all >= value.
    let left = build_rec(sample, index, start, mid, nodes);
    let right = build_rec(sample, index, mid, end, nodes);
    nodes[id] = Node::Split {
        axis,
        value,
        left,
        right,
    };
    id
}

fn spread(sample: &Sample, rows: &[usize], axis: usize) -> f64 {
    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
        let v = sample.point(r)[axis];
        (lo.min(v), hi.max(v))
    });
    hi - lo
}
