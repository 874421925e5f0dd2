//! Slab construction of an incomplete transport map from `U([0,1]^d)` to a
//! trimming of the empirical measure.
//!
//! The cube is cut along the first coordinate into `N` slabs. Inside each
//! slab the next coordinate is treated the same way, with half the trimming
//! budget, until the last coordinate, where the points of a cell are matched
//! to the uniform law on `(0,1]` by the optimal 1-D trimmed solution. In two
//! dimensions this is one layer of `N = floor(sqrt n)` stripes, each solved at
//! level `alpha/2`.
//!
//! Slab `i` (1-based) holds the points with coordinate in `((i-1)/N, i/N]`;
//! a coordinate equal to 0 goes to the first slab. The map sends mass
//! `(slab volume) * (h_k - h_{k-1})` to each point, which respects the
//! trimming cap `1/(n(1-alpha))` as soon as every slab holds at least
//! `(m/N) * (1-alpha')/(1-alpha'/2)` of the `m` points of its parent, where
//! `alpha'` is the budget at that level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::{substream_seed, SOLVE_TOL};
use crate::measures::{separate_ties, Sample, TrimParams};
use crate::quantization::MC_CHUNK;
use crate::trim1d::solve_trim1d;
use crate::wasserstein1d::abs_pow_integral;

/// Optimal 1-D trimming of the points of one innermost cell along the last
/// coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafTrim {
    pub alpha: f64,
    /// Sample indices, sorted by the last coordinate.
    pub members: Vec<usize>,
    /// Sorted last coordinates (ties separated).
    pub values: Vec<f64>,
    /// Cumulative weights `h_0 = 0, ..., h_m = 1`; member `k` receives the
    /// interval `(h_k, h_{k+1}]`.
    pub h: Vec<f64>,
    /// `int_0^1 |t - phi(t)|^p dt` for the leaf's map `phi`.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlabNode {
    Split(SlabSplit),
    Leaf(LeafTrim),
    /// A slab without points; the map is undefined there.
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlabSplit {
    pub axis: usize,
    /// Trimming budget at this level; children get half of it.
    pub alpha: f64,
    pub slabs: usize,
    pub counts: Vec<usize>,
    /// `(m/N) * (1-alpha)/(1-alpha/2)`.
    pub required: f64,
    pub children: Vec<SlabNode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripePlan {
    pub dim: usize,
    pub n: usize,
    pub params: TrimParams,
    /// Number of first-level slabs.
    pub slabs: usize,
    /// First-level slab of every sample point.
    pub stripe_of: Vec<usize>,
    /// First-level slab counts.
    pub counts: Vec<usize>,
    /// `(1-alpha)/(1-alpha/2)`.
    pub capacity_factor: f64,
    pub feasible: bool,
    /// First capacity violation found, if any.
    pub diagnostic: Option<String>,
    pub root: SlabSplit,
    sample: Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StripeCostMethod {
    /// Closed form on each cell; `p = 2` only.
    Exact,
    /// Adaptive Gauss-Legendre on each cell; two dimensions only.
    Quadrature,
    MonteCarlo { draws: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripeCostReport {
    /// `int ||x - phi(x)||^p dx`.
    pub cost: f64,
    /// `d^{p-1} * (sum over slab levels of E[width^p] + sum over cells of
    /// volume * 1-D cost)`.
    pub upper_bound: f64,
    pub method: StripeCostMethod,
    pub mc_std_error: Option<f64>,
    pub feasible: bool,
}

/// Largest `k >= 1` with `k^r <= m` (1 when `m = 0`).
fn int_root(m: usize, r: usize) -> usize {
    let pow = |k: usize| (0..r).try_fold(1usize, |acc, _| acc.checked_mul(k));
    let mut k = (m as f64).powf(1.0 / r as f64).floor() as usize;
    while pow(k + 1).is_some_and(|v| v <= m) {
        k += 1;
    }
    while k > 1 && pow(k).is_none_or(|v| v > m) {
        k -= 1;
    }
    k.max(1)
}

#[inline]
fn slab_index(x: f64, slabs: usize) -> usize {
    ((x * slabs as f64).ceil() as usize).clamp(1, slabs) - 1
}

struct Builder<'a> {
    sample: &'a Sample,
    p: f64,
}

impl Builder<'_> {
    fn node(&self, rows: Vec<usize>, axis: usize, alpha: f64, diag: &mut Vec<String>) -> Result<SlabNode> {
        if rows.is_empty() {
            return Ok(SlabNode::Empty);
        }
        if axis + 1 == self.sample.dim() {
            return self.leaf(rows, axis, alpha).map(SlabNode::Leaf);
        }
        self.split(rows, axis, alpha, diag).map(SlabNode::Split)
    }

    fn leaf(&self, mut rows: Vec<usize>, axis: usize, alpha: f64) -> Result<LeafTrim> {
        let coord = |i: usize| self.sample.point(i)[axis];
        rows.sort_by(|&a, &b| coord(a).total_cmp(&coord(b)).then(a.cmp(&b)));
        let values = separate_ties(rows.iter().map(|&i| coord(i)).collect());
        let sol = solve_trim1d(&values, &TrimParams::new(alpha, self.p)?, SOLVE_TOL)?;
        Ok(LeafTrim {
            alpha,
            members: rows,
            values,
            h: sol.h_opt.with_boundary(),
            cost: sol.cost,
        })
    }

    fn split(&self, rows: Vec<usize>, axis: usize, alpha: f64, diag: &mut Vec<String>) -> Result<SlabSplit> {
        let m = rows.len();
        let slabs = int_root(m, self.sample.dim() - axis);
        let mut groups = vec![Vec::new(); slabs];
        for &i in &rows {
            groups[slab_index(self.sample.point(i)[axis], slabs)].push(i);
        }
        let counts: Vec<usize> = groups.iter().map(Vec::len).collect();
        let required = m as f64 / slabs as f64 * (1.0 - alpha) / (1.0 - alpha / 2.0);
        if let Some((i, &b)) = counts.iter().enumerate().find(|(_, &b)| (b as f64) < required - 1e-12) {
            diag.push(format!(
                "level {axis}: slab {} of {slabs} holds {b} points, needs at least {required:.4}",
                i + 1
            ));
        }
        let built: Vec<(SlabNode, Vec<String>)> = groups
            .into_par_iter()
            .map(|g| {
                let mut local = Vec::new();
                self.node(g, axis + 1, alpha / 2.0, &mut local).map(|node| (node, local))
            })
            .collect::<Result<_>>()?;
        let mut children = Vec::with_capacity(slabs);
        for (node, local) in built {
            diag.extend(local);
            children.push(node);
        }
        Ok(SlabSplit {
            axis,
            alpha,
            slabs,
            counts,
            required,
            children,
        })
    }
}

/// Slab plan in any dimension `d >= 2`, `alpha` in `(0,1)`.
pub fn build_slab_plan(sample: &Sample, params: &TrimParams) -> Result<StripePlan> {
    let d = sample.dim();
    if d < 2 {
        return Err(Error::Dimension("slab plans need d >= 2".into()));
    }
    if params.alpha <= 0.0 {
        return Err(Error::Domain("slab plans need alpha > 0".into()));
    }
    if sample.len() < 4 {
        return Err(Error::Precondition(format!("need n >= 4 points, got {}", sample.len())));
    }
    let n = sample.len();
    let builder = Builder { sample, p: params.p };
    let mut diag = Vec::new();
    let root = builder.split((0..n).collect(), 0, params.alpha, &mut diag)?;
    let stripe_of = (0..n).map(|i| slab_index(sample.point(i)[0], root.slabs)).collect();
    Ok(StripePlan {
        dim: d,
        n,
        params: *params,
        slabs: root.slabs,
        stripe_of,
        counts: root.counts.clone(),
        capacity_factor: (1.0 - params.alpha) / (1.0 - params.alpha / 2.0),
        feasible: diag.is_empty(),
        diagnostic: diag.into_iter().next(),
        root,
        sample: sample.clone(),
    })
}

/// Two-dimensional stripe plan: `N = floor(sqrt n)` stripes along the first
/// coordinate, each trimmed at `alpha/2` along the second.
pub fn build_stripe_plan(sample: &Sample, params: &TrimParams) -> Result<StripePlan> {
    if sample.dim() != 2 {
        return Err(Error::Dimension(format!("stripe plans are two-dimensional, got d = {}", sample.dim())));
    }
    build_slab_plan(sample, params)
}

/// One cell of the map: the box `lo < x <= hi` sent to sample point `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub target: usize,
}

impl StripePlan {
    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    /// 1-D solutions of the first-level stripes (`None` for empty ones).
    /// Only meaningful in two dimensions.
    pub fn stripe_trims(&self) -> Vec<Option<&LeafTrim>> {
        self.root
            .children
            .iter()
            .map(|c| match c {
                SlabNode::Leaf(l) => Some(l),
                _ => None,
            })
            .collect()
    }

    /// Cells with positive volume.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        let mut lo = vec![0.0; self.dim];
        let mut hi = vec![1.0; self.dim];
        collect_cells(&self.root, &mut lo, &mut hi, &mut out);
        out
    }

    /// Mass the map sends to every sample point.
    pub fn atom_masses(&self) -> Vec<f64> {
        let mut mass = vec![0.0; self.n];
        for c in self.cells() {
            mass[c.target] += c.lo.iter().zip(&c.hi).map(|(a, b)| b - a).product::<f64>();
        }
        mass
    }

    fn require_feasible(&self) -> Result<()> {
        if self.feasible {
            Ok(())
        } else {
            Err(Error::InfeasiblePlan(format!(
                "{}; fall back to untrimmed transport or resample",
                self.diagnostic.as_deref().unwrap_or("capacity condition fails")
            )))
        }
    }

    /// Bound from the slab widths and the 1-D costs.
    pub fn upper_bound(&self) -> Result<f64> {
        self.require_feasible()?;
        let p = self.params.p;
        let (widths, leaves) = bound_terms(&self.root, 1.0, p);
        Ok((self.dim as f64).powf(p - 1.0) * (widths + leaves))
    }

    /// The same bound formula when the capacity condition fails; `None` if
    /// some slab is empty. The map then overloads some points, so this is
    /// not a bound on a trimmed cost, only a diagnostic.
    pub fn bound_ignoring_capacity(&self) -> Option<f64> {
        if has_empty(&self.root) {
            return None;
        }
        let p = self.params.p;
        let (widths, leaves) = bound_terms(&self.root, 1.0, p);
        Some((self.dim as f64).powf(p - 1.0) * (widths + leaves))
    }

    /// Sample index of the cell containing `x`.
    fn locate(&self, x: &[f64]) -> usize {
        let mut split = &self.root;
        loop {
            match &split.children[slab_index(x[split.axis], split.slabs)] {
                SlabNode::Split(s) => split = s,
                SlabNode::Leaf(l) => {
                    let t = x[self.dim - 1];
                    let k = l.h.partition_point(|&v| v < t).clamp(1, l.members.len());
                    return l.members[k - 1];
                }
                SlabNode::Empty => unreachable!("feasible plans have no empty slabs"),
            }
        }
    }
}

fn collect_cells(split: &SlabSplit, lo: &mut Vec<f64>, hi: &mut Vec<f64>, out: &mut Vec<Cell>) {
    let a = split.axis;
    for (i, child) in split.children.iter().enumerate() {
        lo[a] = i as f64 / split.slabs as f64;
        hi[a] = (i + 1) as f64 / split.slabs as f64;
        match child {
            SlabNode::Split(s) => collect_cells(s, lo, hi, out),
            SlabNode::Leaf(l) => {
                let last = lo.len() - 1;
                for (k, &target) in l.members.iter().enumerate() {
                    if l.h[k + 1] > l.h[k] {
                        let mut clo = lo.clone();
                        let mut chi = hi.clone();
                        clo[last] = l.h[k];
                        chi[last] = l.h[k + 1];
                        out.push(Cell { lo: clo, hi: chi, target });
                    }
                }
            }
            SlabNode::Empty => {}
        }
    }
    lo[a] = 0.0;
    hi[a] = 1.0;
}

fn has_empty(split: &SlabSplit) -> bool {
    split.children.iter().any(|c| match c {
        SlabNode::Split(s) => has_empty(s),
        SlabNode::Leaf(_) => false,
        SlabNode::Empty => true,
    })
}

/// `(sum over splits of volume * N^{-p}, sum over leaves of volume * cost)`.
fn bound_terms(split: &SlabSplit, volume: f64, p: f64) -> (f64, f64) {
    let child_volume = volume / split.slabs as f64;
    let mut widths = volume * (split.slabs as f64).powf(-p);
    let mut leaves = 0.0;
    for child in &split.children {
        match child {
            SlabNode::Split(s) => {
                let (w, l) = bound_terms(s, child_volume, p);
                widths += w;
                leaves += l;
            }
            SlabNode::Leaf(l) => leaves += child_volume * l.cost,
            SlabNode::Empty => {}
        }
    }
    (widths, leaves)
}

const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gauss_box(f: &impl Fn(f64, f64) -> f64, lo: [f64; 2], hi: [f64; 2]) -> f64 {
    let (cx, hx) = (0.5 * (lo[0] + hi[0]), 0.5 * (hi[0] - lo[0]));
    let (cy, hy) = (0.5 * (lo[1] + hi[1]), 0.5 * (hi[1] - lo[1]));
    let mut s = 0.0;
    for (a, wa) in GL_NODES.iter().zip(&GL_WEIGHTS) {
        for (b, wb) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            let w = wa * wb;
            s += w * (f(cx + hx * a, cy + hy * b) + f(cx - hx * a, cy + hy * b) + f(cx + hx * a, cy - hy * b) + f(cx - hx * a, cy - hy * b));
        }
    }
    s * hx * hy
}

fn adaptive_box(f: &impl Fn(f64, f64) -> f64, lo: [f64; 2], hi: [f64; 2], whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let quads = [
        ([lo[0], lo[1]], [mid[0], mid[1]]),
        ([mid[0], lo[1]], [hi[0], mid[1]]),
        ([lo[0], mid[1]], [mid[0], hi[1]]),
        ([mid[0], mid[1]], [hi[0], hi[1]]),
    ];
    let parts: Vec<f64> = quads.iter().map(|&(a, b)| gauss_box(f, a, b)).collect();
    let refined: f64 = parts.iter().sum();
    if depth == 0 || (refined - whole).abs() <= tol {
        return refined;
    }
    quads
        .iter()
        .zip(parts)
        .map(|(&(a, b), part)| adaptive_box(f, a, b, part, tol / 4.0, depth - 1))
        .sum()
}

/// `int_box ||x - c||^p dx` in two dimensions. The box is first cut at `c` so
/// the kink of the integrand sits on sub-box corners.
fn box_quadrature(lo: &[f64], hi: &[f64], c: &[f64], p: f64) -> f64 {
    let f = |x: f64, y: f64| {
        let r2 = (x - c[0]) * (x - c[0]) + (y - c[1]) * (y - c[1]);
        if p == 2.0 {
            r2
        } else {
            r2.powf(0.5 * p)
        }
    };
    let cuts = |a: f64, b: f64, m: f64| if a < m && m < b { vec![a, m, b] } else { vec![a, b] };
    let xs = cuts(lo[0], hi[0], c[0]);
    let ys = cuts(lo[1], hi[1], c[1]);
    let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
    let mut total = 0.0;
    for wx in xs.windows(2) {
        for wy in ys.windows(2) {
            let (a, b) = ([wx[0], wy[0]], [wx[1], wy[1]]);
            let whole = gauss_box(&f, a, b);
            total += adaptive_box(&f, a, b, whole, 1e-13 * area.max(1e-300), 12);
        }
    }
    total
}

/// `int_box ||x - c||^2 dx`, any dimension.
fn box_square(lo: &[f64], hi: &[f64], c: &[f64]) -> f64 {
    let lengths: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
    (0..lo.len())
        .map(|k| {
            let others: f64 = lengths.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, l)| l).product();
            abs_pow_integral(lo[k], hi[k], c[k], 2.0) * others
        })
        .sum()
}

/// Transport cost of the plan's map, with the upper bound.
pub fn stripe_cost(plan: &StripePlan, method: StripeCostMethod) -> Result<StripeCostReport> {
    plan.require_feasible()?;
    let p = plan.params.p;
    let upper_bound = plan.upper_bound()?;
    let (cost, mc_std_error) = match method {
        StripeCostMethod::Exact => {
            if p != 2.0 {
                return Err(Error::Precondition(format!(
                    "closed-form cell integrals need p = 2, got {p}; use quadrature or Monte Carlo"
                )));
            }
            let cost = plan
                .cells()
                .iter()
                .map(|c| box_square(&c.lo, &c.hi, plan.sample.point(c.target)))
                .sum();
            (cost, None)
        }
        StripeCostMethod::Quadrature => {
            if plan.dim != 2 {
                return Err(Error::Precondition(format!(
                    "quadrature is implemented for d = 2, got {}; use Monte Carlo",
                    plan.dim
                )));
            }
            let cost = plan
                .cells()
                .iter()
                .map(|c| box_quadrature(&c.lo, &c.hi, plan.sample.point(c.target), p))
                .sum();
            (cost, None)
        }
        StripeCostMethod::MonteCarlo { draws, seed } => {
            if draws < 1000 {
                return Err(Error::Domain(format!("need at least 1000 Monte Carlo draws, got {draws}")));
            }
            let d = plan.dim;
            let chunks = draws.div_ceil(MC_CHUNK);
            let partial: Vec<(f64, f64)> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let k = MC_CHUNK.min(draws - c * MC_CHUNK);
                    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, &[c as u64]));
                    let mut u = vec![0.0; d];
                    let (mut s1, mut s2) = (0.0, 0.0);
                    for _ in 0..k {
                        u.iter_mut().for_each(|v| *v = rng.random::<f64>());
                        let x = plan.sample.point(plan.locate(&u));
                        let r2: f64 = u.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                        let v = if p == 2.0 { r2 } else { r2.powf(0.5 * p) };
                        s1 += v;
                        s2 += v * v;
                    }
                    (s1, s2)
                })
                .collect();
            let (s1, s2) = partial.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
            let m = draws as f64;
            let mean = s1 / m;
            let var = ((s2 / m - mean * mean) * m / (m - 1.0)).max(0.0);
            (mean, Some((var / m).sqrt()))
        }
    };
    Ok(StripeCostReport {
        cost,
        upper_bound,
        method,
        mc_std_error,
        feasible: true,
    })
}

/// Builds the slab plan of a sample in `d >= 3` and evaluates it; every
/// level halves the trimming budget.
pub fn stripe_cost_recursive(sample: &Sample, params: &TrimParams, method: StripeCostMethod) -> Result<StripeCostReport> {
    if sample.dim() < 3 {
        return Err(Error::Dimension(format!("recursive slabs need d >= 3, got {}", sample.dim())));
    }
    let plan = build_slab_plan(sample, params)?;
    stripe_cost(&plan, method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sample_uniform;

    fn params(alpha: f64, p: f64) -> TrimParams {
        TrimParams::new(alpha, p).unwrap()
    }

    #[test]
    fn integer_roots() {
        assert_eq!(int_root(4, 2), 2);
        assert_eq!(int_root(8, 2), 2);
        assert_eq!(int_root(9, 2), 3);
        assert_eq!(int_root(4096, 2), 64);
        assert_eq!(int_root(4095, 2), 63);
        assert_eq!(int_root(8, 3), 2);
        assert_eq!(int_root(26, 3), 2);
        assert_eq!(int_root(27, 3), 3);
        assert_eq!(int_root(1, 3), 1);
    }

    #[test]
    fn stripe_convention() {
        assert_eq!(slab_index(0.0, 4), 0);
        assert_eq!(slab_index(0.25, 4), 0);
        assert_eq!(slab_index(0.2500001, 4), 1);
        assert_eq!(slab_index(1.0, 4), 3);
    }

    #[test]
    fn quadrant_example() {
        let s = Sample::from_points(
            &[vec![0.2, 0.3], vec![0.3, 0.8], vec![0.7, 0.1], vec![0.9, 0.6]],
            None,
        )
        .unwrap();
        let plan = build_stripe_plan(&s, &params(0.25, 2.0)).unwrap();
        assert_eq!(plan.slabs, 2);
        assert_eq!(plan.counts, vec![2, 2]);
        assert!((plan.capacity_factor - 0.75 / 0.875).abs() < 1e-15);
        assert!(plan.feasible);
        assert_eq!(plan.stripe_of, vec![0, 0, 1, 1]);
        let ub = plan.upper_bound().unwrap();
        let exact = stripe_cost(&plan, StripeCostMethod::Exact).unwrap();
        assert!(exact.cost <= ub);
    }

    #[test]
    fn one_stripe_is_infeasible() {
        let s = Sample::from_points(
            &[vec![0.1, 0.3], vec![0.2, 0.8], vec![0.3, 0.1], vec![0.4, 0.6]],
            None,
        )
        .unwrap();
        let plan = build_stripe_plan(&s, &params(0.25, 2.0)).unwrap();
        assert!(!plan.feasible);
        assert!(plan.diagnostic.as_ref().unwrap().contains("slab 2"));
        assert!(matches!(stripe_cost(&plan, StripeCostMethod::Exact), Err(Error::InfeasiblePlan(_))));
        assert!(plan.upper_bound().is_err());
    }

    #[test]
    fn near_full_trimming_only_needs_nonempty_stripes() {
        // 9 points, N = 3, counts (1, 3, 5): required = 3 * (1-a)/(1-a/2) is
        // below 1 for a close to 1.
        let pts: Vec<Vec<f64>> = [0.1, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99]
            .iter()
            .enumerate()
            .map(|(i, &x)| vec![x, (i as f64 + 0.5) / 9.0])
            .collect();
        let s = Sample::from_points(&pts, None).unwrap();
        assert!(!build_stripe_plan(&s, &params(0.25, 1.0)).unwrap().feasible);
        assert!(build_stripe_plan(&s, &params(0.9, 1.0)).unwrap().feasible);
    }

    #[test]
    fn preconditions() {
        let s = sample_uniform(3, 2, 1);
        assert!(matches!(build_stripe_plan(&s, &params(0.25, 2.0)), Err(Error::Precondition(_))));
        let s = sample_uniform(10, 2, 1);
        assert!(build_stripe_plan(&s, &params(0.0, 2.0)).is_err());
        let s = sample_uniform(10, 3, 1);
        assert!(matches!(build_stripe_plan(&s, &params(0.2, 2.0)), Err(Error::Dimension(_))));
        let s = sample_uniform(10, 2, 1);
        assert!(matches!(
            stripe_cost_recursive(&s, &params(0.2, 2.0), StripeCostMethod::Exact),
            Err(Error::Dimension(_))
        ));
    }

    fn feasible_instances(n: usize, d: usize, alpha: f64, p: f64, count: usize) -> Vec<StripePlan> {
        (0..10_000u64)
            .filter_map(|seed| {
                let plan = build_slab_plan(&sample_uniform(n, d, seed), &params(alpha, p)).unwrap();
                plan.feasible.then_some(plan)
            })
            .take(count)
            .collect()
    }

    #[test]
    fn capacity_and_mass() {
        for (n, d) in [(16, 2), (30, 2), (27, 3)] {
            for plan in feasible_instances(n, d, 0.6, 2.0, 5) {
                let masses = plan.atom_masses();
                let cap = plan.params.cap(n);
                assert!(masses.iter().all(|&m| m <= cap + 1e-12), "{masses:?} cap {cap}");
                assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_below_bound_and_matches_monte_carlo() {
        let plans = feasible_instances(25, 2, 0.5, 2.0, 4);
        assert_eq!(plans.len(), 4);
        for (k, plan) in plans.iter().enumerate() {
            let exact = stripe_cost(plan, StripeCostMethod::Exact).unwrap();
            assert!(exact.cost <= exact.upper_bound);
            let quad = stripe_cost(plan, StripeCostMethod::Quadrature).unwrap();
            assert!((quad.cost - exact.cost).abs() < 1e-12);
            let mc = stripe_cost(
                plan,
                StripeCostMethod::MonteCarlo {
                    draws: 1_000_000,
                    seed: k as u64,
                },
            )
            .unwrap();
            let se = mc.mc_std_error.unwrap();
            assert!((mc.cost - exact.cost).abs() <= 3.0 * se, "{} vs {} (se {se})", mc.cost, exact.cost);
        }
    }

    #[test]
    fn quadrature_matches_monte_carlo_for_p_one() {
        for plan in feasible_instances(20, 2, 0.5, 1.0, 2) {
            let quad = stripe_cost(&plan, StripeCostMethod::Quadrature).unwrap();
            assert!(quad.cost <= quad.upper_bound);
            let mc = stripe_cost(&plan, StripeCostMethod::MonteCarlo { draws: 400_000, seed: 3 }).unwrap();
            assert!((mc.cost - quad.cost).abs() <= 3.0 * mc.mc_std_error.unwrap());
        }
    }

    #[test]
    fn box_integrals() {
        // int over the unit square of |x - c|^2 with c at the centre.
        assert!((box_square(&[0.0, 0.0], &[1.0, 1.0], &[0.5, 0.5]) - 1.0 / 6.0).abs() < 1e-15);
        assert!((box_quadrature(&[0.0, 0.0], &[1.0, 1.0], &[0.5, 0.5], 2.0) - 1.0 / 6.0).abs() < 1e-14);
        // Mean distance from a corner of the unit square: (sqrt2 + ln(1+sqrt2))/3.
        let corner = (2f64.sqrt() + (1.0 + 2f64.sqrt()).ln()) / 3.0;
        assert!((box_quadrature(&[0.0, 0.0], &[1.0, 1.0], &[0.0, 0.0], 1.0) - corner).abs() < 1e-10);
    }

    #[test]
    fn octant_centres() {
        let mut pts = Vec::new();
        for a in [0.25, 0.75] {
            for b in [0.25, 0.75] {
                for c in [0.25, 0.75] {
                    pts.push(vec![a, b, c]);
                }
            }
        }
        let s = Sample::from_points(&pts, None).unwrap();
        let r = stripe_cost_recursive(&s, &params(0.25, 2.0), StripeCostMethod::Exact).unwrap();
        assert!(r.feasible);
        assert!(r.upper_bound.is_finite());
        assert!(r.cost <= r.upper_bound);
        // Every cell is an octant mapped to its own centre.
        assert!((r.cost - 3.0 / 48.0).abs() < 1e-12, "{}", r.cost);
    }

    #[test]
    fn all_points_in_one_slab_is_infeasible_in_3d() {
        let pts: Vec<Vec<f64>> = (0..8).map(|i| vec![0.1, i as f64 / 8.0 + 0.05, 0.5]).collect();
        let s = Sample::from_points(&pts, None).unwrap();
        let err = stripe_cost_recursive(&s, &params(0.25, 2.0), StripeCostMethod::Exact).unwrap_err();
        assert!(matches!(err, Error::InfeasiblePlan(ref m) if m.contains("level 0")));
    }

    #[test]
    fn plan_is_deterministic_across_pools() {
        let s = sample_uniform(400, 2, 6);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| build_stripe_plan(&s, &params(0.9, 2.0)).unwrap());
        let b = four.install(|| build_stripe_plan(&s, &params(0.9, 2.0)).unwrap());
        assert_eq!(a, b);
    }
}
