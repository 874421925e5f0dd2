//! Optimal partial matching between two samples of equal size.
//!
//! Keep `m` points of each sample and pair them to minimise the mean of
//! `||X_i - Y_j||^p`. The relaxed problem (fractional keep-weights in
//! `[0,1]` summing to `m` on each side) has a totally unimodular constraint
//! matrix, so it is solved exactly as a min-cost flow
//!
//! ```text
//! source -(1, 0)-> x_i -(1, c_ij)-> y_j -(1, 0)-> sink,   flow value m
//! ```
//!
//! by successive shortest augmenting paths with node potentials.
//!
//! Large instances first run on a sparse candidate graph (nearest
//! neighbours on both sides). The final potentials are then checked against
//! every pair; any edge with negative reduced cost is added and the solve is
//! repeated, so the returned matching is optimal for the complete graph.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::measures::Sample;

/// Above this size costs are recomputed instead of cached.
pub const DENSE_COST_LIMIT: usize = 4096;
/// Candidate neighbours per point in the sparse graph.
pub const CANDIDATES: usize = 16;
/// Reduced costs below `-CERTIFICATE_TOL` invalidate the sparse solution.
const CERTIFICATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingProblem {
    pub x: Sample,
    pub y: Sample,
    pub p: f64,
    pub alpha: f64,
    m: usize,
}

/// Points kept out of `n` at level `alpha`: `n - floor(alpha n)`.
pub fn kept_count(n: usize, alpha: f64) -> usize {
    n - ((alpha * n as f64) + 1e-9).floor() as usize
}

impl MatchingProblem {
    pub fn new(x: Sample, y: Sample, p: f64, alpha: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha = {alpha} must lie in [0,1)")));
        }
        let m = kept_count(x.len(), alpha);
        Self::with_kept(x, y, p, alpha, m)
    }

    /// Explicit number of kept points; `alpha` is then only a label.
    pub fn with_kept(x: Sample, y: Sample, p: f64, alpha: f64, m: usize) -> Result<Self> {
        if x.len() != y.len() || x.dim() != y.dim() {
            return Err(Error::Dimension(format!(
                "samples differ: {}x{} vs {}x{}",
                x.len(),
                x.dim(),
                y.len(),
                y.dim()
            )));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::Domain(format!("p = {p} must be a finite real >= 1")));
        }
        if m == 0 || m > x.len() {
            return Err(Error::Degenerate(format!("cannot keep {m} of {} points", x.len())));
        }
        Ok(Self { x, y, p, alpha, m })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn kept(&self) -> usize {
        self.m
    }
}

/// `||a - b||^p` with the Euclidean norm.
#[inline]
pub fn pair_cost(a: &[f64], b: &[f64], p: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
    if p == 2.0 {
        d2
    } else if p == 1.0 {
        d2.sqrt()
    } else {
        d2.sqrt().powf(p)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlowStats {
    pub augmentations: usize,
    pub heap_pops: usize,
    /// Solves needed until the potentials certified the whole graph.
    pub certificate_rounds: usize,
    pub candidate_edges: usize,
    pub potentials_x: Vec<f64>,
    pub potentials_y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingResult {
    pub kept_x: Vec<usize>,
    pub kept_y: Vec<usize>,
    /// `(x index, y index)`, sorted by x index.
    pub pairing: Vec<(usize, usize)>,
    /// `(1/m) * sum ||X - Y||^p` over the pairs.
    pub cost: f64,
    pub stats: FlowStats,
}

enum Costs<'a> {
    Dense { n: usize, c: Vec<f64> },
    Lazy { x: &'a Sample, y: &'a Sample, p: f64 },
}

impl Costs<'_> {
    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Costs::Dense { n, c } => c[i * n + j],
            Costs::Lazy { x, y, p } => pair_cost(x.point(i), y.point(j), *p),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, u32);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

const NONE: u32 = u32::MAX;

struct Ssp<'a> {
    n: usize,
    costs: &'a Costs<'a>,
    adj: &'a [Vec<(u32, f64)>],
    px: Vec<f64>,
    py: Vec<f64>,
    pt: f64,
    mate_x: Vec<u32>,
    mate_y: Vec<u32>,
    pops: usize,
}

impl<'a> Ssp<'a> {
    fn new(n: usize, costs: &'a Costs<'a>, adj: &'a [Vec<(u32, f64)>]) -> Self {
        Self {
            n,
            costs,
            adj,
            px: vec![0.0; n],
            py: vec![0.0; n],
            pt: 0.0,
            mate_x: vec![NONE; n],
            mate_y: vec![NONE; n],
            pops: 0,
        }
    }

    /// One Dijkstra + augmentation. Returns false when no augmenting path
    /// exists in the candidate graph.
    fn augment(&mut self) -> bool {
        let n = self.n;
        let sink = (2 * n) as u32;
        let mut dist = vec![f64::INFINITY; 2 * n];
        let mut parent = vec![NONE; 2 * n];
        let mut done = vec![false; 2 * n];
        let mut heap = BinaryHeap::new();
        for i in 0..n {
            if self.mate_x[i] == NONE {
                let d = (-self.px[i]).max(0.0);
                dist[i] = d;
                heap.push(Reverse(Key(d, i as u32)));
            }
        }
        let mut sink_dist = f64::INFINITY;
        let mut sink_from = NONE;
        while let Some(Reverse(Key(d, node))) = heap.pop() {
            self.pops += 1;
            if node == sink {
                break;
            }
            let v = node as usize;
            if done[v] || d > dist[v] {
                continue;
            }
            done[v] = true;
            if v < n {
                let i = v;
                for &(j, c) in &self.adj[i] {
                    let j = j as usize;
                    if self.mate_x[i] == j as u32 || done[n + j] {
                        continue;
                    }
                    let nd = d + (c + self.px[i] - self.py[j]).max(0.0);
                    if nd < dist[n + j] {
                        dist[n + j] = nd;
                        parent[n + j] = i as u32;
                        heap.push(Reverse(Key(nd, (n + j) as u32)));
                    }
                }
            } else {
                let j = v - n;
                match self.mate_y[j] {
                    NONE => {
                        let nd = d + (self.py[j] - self.pt).max(0.0);
                        if nd < sink_dist {
                            sink_dist = nd;
                            sink_from = j as u32;
                            heap.push(Reverse(Key(nd, sink)));
                        }
                    }
                    i => {
                        let i = i as usize;
                        if !done[i] {
                            let c = self.costs.get(i, j);
                            let nd = d + (self.py[j] - c - self.px[i]).max(0.0);
                            if nd < dist[i] {
                                dist[i] = nd;
                                parent[i] = j as u32;
                                heap.push(Reverse(Key(nd, i as u32)));
                            }
                        }
                    }
                }
            }
        }
        if sink_from == NONE {
            return false;
        }
        for v in 0..n {
            self.px[v] += dist[v].min(sink_dist);
            self.py[v] += dist[n + v].min(sink_dist);
        }
        self.pt += sink_dist;

        let mut j = sink_from as usize;
        loop {
            let i = parent[n + j] as usize;
            let previous = parent[i];
            self.mate_x[i] = j as u32;
            self.mate_y[j] = i as u32;
            if previous == NONE {
                break;
            }
            j = previous as usize;
        }
        true
    }

    /// Pairs `(i, j)` outside the candidate graph with negative reduced cost.
    fn violations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.mate_x[i] == j as u32 {
                    continue;
                }
                let c = self.costs.get(i, j);
                if c + self.px[i] - self.py[j] < -CERTIFICATE_TOL * (1.0 + c) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

fn nearest(costs: &Costs, n: usize, k: usize, row: usize, by_row: bool) -> Vec<usize> {
    let mut scored: Vec<(f64, usize)> = (0..n)
        .map(|o| {
            let c = if by_row { costs.get(row, o) } else { costs.get(o, row) };
            (c, o)
        })
        .collect();
    if k < n {
        scored.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        scored.truncate(k);
    }
    scored.into_iter().map(|(_, o)| o).collect()
}

/// Exact `T_{p,alpha}(n)` with the kept sets and the pairing.
pub fn solve_partial_matching(problem: &MatchingProblem) -> Result<MatchingResult> {
    let n = problem.n();
    let m = problem.kept();
    let costs = if n <= DENSE_COST_LIMIT {
        let mut c = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                c.push(pair_cost(problem.x.point(i), problem.y.point(j), problem.p));
            }
        }
        Costs::Dense { n, c }
    } else {
        Costs::Lazy {
            x: &problem.x,
            y: &problem.y,
            p: problem.p,
        }
    };
    for i in 0..n {
        for j in 0..n {
            if !costs.get(i, j).is_finite() {
                return Err(Error::Input(format!("non-finite cost between x{i} and y{j}")));
            }
        }
    }

    let mut lists: Vec<Vec<usize>> = if CANDIDATES >= n {
        vec![(0..n).collect(); n]
    } else {
        let mut lists: Vec<Vec<usize>> = (0..n).map(|i| nearest(&costs, n, CANDIDATES, i, true)).collect();
        for j in 0..n {
            for i in nearest(&costs, n, CANDIDATES, j, false) {
                lists[i].push(j);
            }
        }
        lists
    };

    let mut stats = FlowStats::default();
    loop {
        stats.certificate_rounds += 1;
        for l in lists.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        let adj: Vec<Vec<(u32, f64)>> = lists
            .iter()
            .enumerate()
            .map(|(i, l)| l.iter().map(|&j| (j as u32, costs.get(i, j))).collect())
            .collect();
        stats.candidate_edges = adj.iter().map(Vec::len).sum();
        let mut ssp = Ssp::new(n, &costs, &adj);
        let mut complete = true;
        for _ in 0..m {
            if !ssp.augment() {
                complete = false;
                break;
            }
            stats.augmentations += 1;
        }
        stats.heap_pops += ssp.pops;
        let extra = if complete { ssp.violations() } else { Vec::new() };
        if complete && extra.is_empty() {
            let mut pairing: Vec<(usize, usize)> = (0..n)
                .filter(|&i| ssp.mate_x[i] != NONE)
                .map(|i| (i, ssp.mate_x[i] as usize))
                .collect();
            pairing.sort_unstable();
            let total: f64 = pairing.iter().map(|&(i, j)| costs.get(i, j)).sum();
            let mut kept_y: Vec<usize> = pairing.iter().map(|p| p.1).collect();
            kept_y.sort_unstable();
            stats.potentials_x = ssp.px;
            stats.potentials_y = ssp.py;
            return Ok(MatchingResult {
                kept_x: pairing.iter().map(|p| p.0).collect(),
                kept_y,
                pairing,
                cost: total / m as f64,
                stats,
            });
        }
        if !complete {
            // The candidate graph cannot carry m units; fall back to all pairs.
            lists = vec![(0..n).collect(); n];
        } else {
            for (i, j) in extra {
                lists[i].push(j);
            }
        }
    }
}

/// `T_p(n)`: classical assignment, every point kept.
pub fn untrimmed_matching(x: &Sample, y: &Sample, p: f64) -> Result<MatchingResult> {
    solve_partial_matching(&MatchingProblem::new(x.clone(), y.clone(), p, 0.0)?)
}

/// Exhaustive minimum over kept subsets and pairings, for testing.
pub fn brute_force_partial_matching(problem: &MatchingProblem) -> Result<f64> {
    let n = problem.n();
    if n > 8 {
        return Err(Error::Refused(format!("enumeration limited to n <= 8, got {n}")));
    }
    let m = problem.kept();
    let dist = |i: usize, j: usize| -> f64 {
        let a = problem.x.point(i);
        let b = problem.y.point(j);
        let s: f64 = a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum();
        s.sqrt().powf(problem.p)
    };
    let subsets: Vec<Vec<usize>> = (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize == m)
        .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
        .collect();

    fn best_perm(xs: &[usize], ys: &[usize], used: &mut [bool], k: usize, acc: f64, dist: &dyn Fn(usize, usize) -> f64, best: &mut f64) {
        if k == xs.len() {
            *best = best.min(acc);
            return;
        }
        for t in 0..ys.len() {
            if !used[t] {
                used[t] = true;
                best_perm(xs, ys, used, k + 1, acc + dist(xs[k], ys[t]), dist, best);
                used[t] = false;
            }
        }
    }

    let mut best = f64::INFINITY;
    for xs in &subsets {
        for ys in &subsets {
            let mut used = vec![false; m];
            best_perm(xs, ys, &mut used, 0, 0.0, &dist, &mut best);
        }
    }
    Ok(best / m as f64)
}
