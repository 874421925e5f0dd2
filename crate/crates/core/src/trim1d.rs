//! Optimal trimming of a sorted 1-D sample against `U(0,1)`.
//!
//! The trimmed cost is `V_n(p) + min_{h in C_(alpha,n)} sum_i g_i(h_i)` with
//! convex stage penalties `g_i` (see [`crate::wasserstein1d::Objective1D`])
//! and chain constraints `0 <= h_i - h_{i-1} <= 1/(n(1-alpha))`. The optimal
//! `h` is pinched between two explicit feasible vectors, the upper envelope
//! `h_bar` and the lower envelope `h_lower`, which lets the solver search a
//! narrow band per coordinate.
//!
//! [`solve_trim1d`] runs a forward dynamic program over a grid of candidate
//! values per coordinate. The first pass spreads the grid over the envelope
//! band; later passes use a lattice `h* + j*s` centred on the incumbent and
//! shared by all coordinates, so tight chain constraints stay representable,
//! and halve `s` whenever the optimum lands strictly inside the lattice box.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::measures::{validate_trim_vector, TrimParams, TrimVector};
use crate::wasserstein1d::{abs_pow_integral, objective_terms, w_p_empirical_to_uniform, Objective1D};

/// Slack on chain constraints inside the grid DP.
const CHAIN_EPS: f64 = 1e-13;

/// Upper and lower envelopes of the optimal trim vector.
///
/// Vectors indexed by `i = 0..=n` include the fixed boundary values.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelopes {
    /// `u_1..u_n` (stored at `0..n`).
    pub u: Vec<f64>,
    pub f_bar: Vec<f64>,
    pub h_bar: Vec<f64>,
    pub f_lower: Vec<f64>,
    pub h_lower: Vec<f64>,
}

impl Envelopes {
    pub fn n(&self) -> usize {
        self.h_bar.len() - 1
    }

    pub fn upper_vector(&self) -> TrimVector {
        TrimVector::new(self.h_bar[1..self.n()].to_vec())
    }

    pub fn lower_vector(&self) -> TrimVector {
        TrimVector::new(self.h_lower[1..self.n()].to_vec())
    }

    /// `(h_bar + h_lower) / 2`, a diagnostic only.
    pub fn midpoint_vector(&self) -> TrimVector {
        TrimVector::new(
            (1..self.n())
                .map(|i| 0.5 * (self.h_bar[i] + self.h_lower[i]))
                .collect(),
        )
    }

    /// Largest `h_bar_i - h_lower_i`.
    pub fn max_band_width(&self) -> f64 {
        self.h_bar
            .iter()
            .zip(&self.h_lower)
            .map(|(u, l)| u - l)
            .fold(0.0, f64::max)
    }

    pub fn mean_band_width(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        (1..n).map(|i| self.h_bar[i] - self.h_lower[i]).sum::<f64>() / (n - 1) as f64
    }
}

fn require_strict(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Precondition("empty sample".into()));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("sample must be strictly increasing".into()));
    }
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Precondition("points must lie in [0,1]".into()));
    }
    Ok(())
}

/// Midrank drift `s_j = (x_j + x_{j+1})/2 - j/(n(1-alpha))`, `j = 1..n-1`
/// (stored at `0..n-1`).
pub fn midrank_drift(x: &[f64], params: &TrimParams) -> Vec<f64> {
    let cap = params.cap(x.len());
    x.windows(2)
        .enumerate()
        .map(|(j, w)| 0.5 * (w[0] + w[1]) - (j + 1) as f64 * cap)
        .collect()
}

/// Envelopes in `O(n)`: a backward running max of the midrank drift for the
/// upper one and a forward running min for the lower one, both clamped to
/// `[-alpha/(1-alpha), 0]`.
pub fn compute_envelopes(x: &[f64], params: &TrimParams) -> Result<Envelopes> {
    require_strict(x)?;
    let n = x.len();
    let cap = params.cap(n);
    let floor = -params.drift_total();
    let s = midrank_drift(x, params);

    let mut u = vec![floor; n];
    let mut run = f64::NEG_INFINITY;
    for i in (0..n - 1).rev() {
        run = run.max(s[i]);
        u[i] = run.max(floor);
    }

    let mut f_bar = Vec::with_capacity(n + 1);
    f_bar.push(0.0);
    f_bar.extend(u.iter().map(|&v| v.min(0.0)));

    let mut f_lower = Vec::with_capacity(n + 1);
    f_lower.push(0.0);
    let mut run = f64::INFINITY;
    for &sj in &s {
        run = run.min(sj);
        f_lower.push(run.min(0.0).max(floor));
    }
    f_lower.push(floor);

    let to_h = |f: &[f64]| -> Vec<f64> {
        let mut h: Vec<f64> = f.iter().enumerate().map(|(i, v)| v + i as f64 * cap).collect();
        h[0] = 0.0;
        h[n] = 1.0;
        h
    };
    let h_bar = to_h(&f_bar);
    let h_lower = to_h(&f_lower);
    if h_bar.iter().zip(&h_lower).any(|(u, l)| *l > *u + CHAIN_EPS) {
        return Err(Error::Internal("lower envelope exceeds the upper one".into()));
    }
    Ok(Envelopes {
        u,
        f_bar,
        h_bar,
        f_lower,
        h_lower,
    })
}

/// Search region of the DP for each interior coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchBand {
    /// `[h_lower_i, h_bar_i]`.
    Envelope,
    /// Every value reachable by some feasible chain; ignores the envelopes.
    Polytope,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Objective tolerance; also scales the finest lattice step.
    pub tol: f64,
    pub points_per_stage: usize,
    pub max_rounds: usize,
    pub band: SearchBand,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            points_per_stage: 64,
            max_rounds: 40,
            band: SearchBand::Envelope,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolverStats {
    /// DP passes, including the initial band-spread one.
    pub rounds: usize,
    /// Times the lattice step was halved.
    pub refinements: usize,
    pub final_step: f64,
    /// False when `max_rounds` ran out first.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrimSolve1DResult {
    pub h_opt: TrimVector,
    /// `W_p^p(R_alpha(P_n), U(0,1))`.
    pub cost: f64,
    /// `V_n(p)`.
    pub lower_bound: f64,
    /// Cost of the upper envelope.
    pub upper_bound: f64,
    pub envelopes: Envelopes,
    pub stats: SolverStats,
}

/// `(V_n(p), V_n(p) + sum_i g_i(h_bar_i))`.
pub fn sandwich_bounds(x: &[f64], params: &TrimParams) -> Result<(f64, f64)> {
    let obj = objective_terms(x, params.p)?;
    let env = compute_envelopes(x, params)?;
    Ok(bounds_from(&obj, &env))
}

fn bounds_from(obj: &Objective1D, env: &Envelopes) -> (f64, f64) {
    let lower = obj.v_n();
    let correction: f64 = (1..env.n()).map(|i| obj.stage_cost(i - 1, env.h_bar[i])).sum();
    (lower, lower + correction)
}

pub fn solve_trim1d(x: &[f64], params: &TrimParams, tol: f64) -> Result<TrimSolve1DResult> {
    solve_trim1d_with(
        x,
        params,
        &SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
}

pub fn solve_trim1d_with(
    x: &[f64],
    params: &TrimParams,
    opts: &SolverOptions,
) -> Result<TrimSolve1DResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("tol = {} must be positive", opts.tol)));
    }
    if opts.points_per_stage < 2 {
        return Err(Error::Domain("need at least two grid points per stage".into()));
    }
    let obj = objective_terms(x, params.p)?;
    let env = compute_envelopes(x, params)?;
    let (lower_bound, upper_bound) = bounds_from(&obj, &env);
    let n = x.len();

    if n == 1 || params.alpha == 0.0 {
        let h_opt = TrimVector::uniform(n);
        let cost = if n == 1 {
            obj.v_n()
        } else {
            w_p_empirical_to_uniform(x, params.p)?
        };
        return Ok(TrimSolve1DResult {
            h_opt,
            cost,
            lower_bound,
            upper_bound,
            envelopes: env,
            stats: SolverStats {
                converged: true,
                ..SolverStats::default()
            },
        });
    }

    let cap = params.cap(n);
    let (lo, hi): (Vec<f64>, Vec<f64>) = match opts.band {
        SearchBand::Envelope => (env.h_lower[1..n].to_vec(), env.h_bar[1..n].to_vec()),
        SearchBand::Polytope => (1..n)
            .map(|i| {
                (
                    (1.0 - (n - i) as f64 * cap).max(0.0),
                    (i as f64 * cap).min(1.0),
                )
            })
            .unzip(),
    };
    if let Some(i) = (0..n - 1).find(|&i| lo[i] > hi[i] + CHAIN_EPS) {
        return Err(Error::Internal(format!(
            "empty search band at coordinate {}: [{}, {}]",
            i + 1,
            lo[i],
            hi[i]
        )));
    }

    let dp = ChainDp {
        obj: &obj,
        cap,
        lo: &lo,
        hi: &hi,
    };
    let m = opts.points_per_stage;
    let spread: Vec<Vec<f64>> = lo
        .iter()
        .zip(&hi)
        .map(|(&a, &b)| linspace(a, b.max(a), m))
        .collect();
    let mut stats = SolverStats {
        rounds: 1,
        ..SolverStats::default()
    };
    let (mut best_val, mut best_h) = dp
        .solve(&spread)
        .ok_or_else(|| Error::Internal("no feasible chain through the envelope grid".into()))?
        .into_parts();

    let radius = (m / 2).max(1) as i64;
    let widest = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    let mut step = widest / radius as f64;
    let min_step = 0.1 * opts.tol;
    stats.converged = step == 0.0;
    while !stats.converged && stats.rounds < opts.max_rounds {
        let grids: Vec<Vec<f64>> = best_h
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                (-radius..=radius)
                    .map(|j| c + j as f64 * step)
                    .filter(|v| *v >= lo[i] - CHAIN_EPS && *v <= hi[i] + CHAIN_EPS)
                    .collect()
            })
            .collect();
        stats.rounds += 1;
        let Some(sol) = dp.solve(&grids) else {
            return Err(Error::Internal("lattice lost the incumbent chain".into()));
        };
        let touched = sol.h.iter().enumerate().any(|(i, &v)| {
            let j = ((v - best_h[i]) / step).round() as i64;
            j.abs() == radius && {
                let beyond = v + j.signum() as f64 * step;
                beyond >= lo[i] - CHAIN_EPS && beyond <= hi[i] + CHAIN_EPS
            }
        });
        let improvement = best_val - sol.value;
        if sol.value <= best_val {
            best_val = sol.value;
            best_h = sol.h;
        }
        if !touched {
            step *= 0.5;
            stats.refinements += 1;
        }
        stats.converged = improvement < opts.tol && step < min_step;
    }
    stats.final_step = step;

    let h_opt = TrimVector::new(best_h);
    if !validate_trim_vector(&h_opt, params, n)? {
        return Err(Error::Internal("solver produced an infeasible trim vector".into()));
    }
    let cost = obj.cost(&h_opt)?;
    Ok(TrimSolve1DResult {
        h_opt,
        cost,
        lower_bound,
        upper_bound,
        envelopes: env,
        stats,
    })
}

fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    if b - a <= 0.0 {
        return vec![a];
    }
    let mut v: Vec<f64> = (0..m)
        .map(|k| a + (b - a) * k as f64 / (m - 1) as f64)
        .collect();
    v[m - 1] = b;
    v
}

struct DpSolution {
    value: f64,
    h: Vec<f64>,
}

impl DpSolution {
    fn into_parts(self) -> (f64, Vec<f64>) {
        (self.value, self.h)
    }
}

/// Forward DP over per-coordinate sorted grids with the transition
/// `h_{i-1} <= h_i <= h_{i-1} + cap`, using a sliding-window minimum.
struct ChainDp<'a> {
    obj: &'a Objective1D,
    cap: f64,
    lo: &'a [f64],
    hi: &'a [f64],
}

impl ChainDp<'_> {
    fn solve(&self, grids: &[Vec<f64>]) -> Option<DpSolution> {
        let k = grids.len();
        debug_assert_eq!(k, self.lo.len());
        debug_assert!(self.hi.len() == k);
        let mut back: Vec<Vec<u32>> = Vec::with_capacity(k);
        let mut prev_val: Vec<f64> = grids[0]
            .iter()
            .map(|&h| {
                if h >= -CHAIN_EPS && h <= self.cap + CHAIN_EPS {
                    self.obj.stage_cost(0, h)
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        back.push(Vec::new());
        let mut window: VecDeque<usize> = VecDeque::new();
        for i in 1..k {
            let prev = &grids[i - 1];
            let cur = &grids[i];
            let mut val = Vec::with_capacity(cur.len());
            let mut arg = Vec::with_capacity(cur.len());
            window.clear();
            let mut next = 0;
            for &h in cur {
                let (from, to) = (h - self.cap - CHAIN_EPS, h + CHAIN_EPS);
                while next < prev.len() && prev[next] <= to {
                    while window.back().is_some_and(|&b| prev_val[b] >= prev_val[next]) {
                        window.pop_back();
                    }
                    window.push_back(next);
                    next += 1;
                }
                while window.front().is_some_and(|&f| prev[f] < from) {
                    window.pop_front();
                }
                match window.front() {
                    Some(&j) if prev_val[j].is_finite() => {
                        val.push(prev_val[j] + self.obj.stage_cost(i, h));
                        arg.push(j as u32);
                    }
                    _ => {
                        val.push(f64::INFINITY);
                        arg.push(u32::MAX);
                    }
                }
            }
            prev_val = val;
            back.push(arg);
        }
        let last = &grids[k - 1];
        let (mut best, mut best_val) = (usize::MAX, f64::INFINITY);
        for (j, &h) in last.iter().enumerate() {
            let gap = 1.0 - h;
            if gap >= -CHAIN_EPS && gap <= self.cap + CHAIN_EPS && prev_val[j] < best_val {
                best = j;
                best_val = prev_val[j];
            }
        }
        if best == usize::MAX {
            return None;
        }
        let mut h = vec![0.0; k];
        let mut j = best;
        for i in (0..k).rev() {
            h[i] = grids[i][j];
            if i > 0 {
                j = back[i][j] as usize;
            }
        }
        Some(DpSolution { value: best_val, h })
    }
}

/// Exhaustive nested grid search over `C_(alpha,n)`, for testing.
///
/// Coordinate `i` ranges over `grid` evenly spaced values of the interval
/// left open by the previous choice and by reachability of `h_n = 1`, and the
/// cost is the quantile integral `sum_i int_{h_{i-1}}^{h_i} |x_i - t|^p dt`.
pub fn brute_force_trim1d(x: &[f64], params: &TrimParams, grid: usize) -> Result<f64> {
    require_strict(x)?;
    let n = x.len();
    if n > 6 {
        return Err(Error::Refused(format!("brute force limited to n <= 6, got {n}")));
    }
    if !(2..=2001).contains(&grid) {
        return Err(Error::Refused(format!("grid must be in 2..=2001, got {grid}")));
    }
    let cap = params.cap(n);
    let mut h = vec![0.0; n + 1];
    h[n] = 1.0;

    fn cell(x: &[f64], h: &[f64], i: usize, p: f64) -> f64 {
        // A_i = int_{h_{i-1}}^{h_i} |x_i - t|^p dt for the 1-based atom i
        abs_pow_integral(h[i - 1], h[i], x[i - 1], p)
    }

    fn rec(x: &[f64], h: &mut [f64], i: usize, acc: f64, cap: f64, p: f64, grid: usize, best: &mut f64) {
        let n = x.len();
        if i == n {
            let total = acc + cell(x, h, n, p);
            if total < *best {
                *best = total;
            }
            return;
        }
        let lo = h[i - 1].max(1.0 - (n - i) as f64 * cap).max(0.0);
        let hi = (h[i - 1] + cap).min(1.0);
        if lo > hi + 1e-15 {
            return;
        }
        let hi = hi.max(lo);
        let pts = if hi - lo <= 0.0 { 1 } else { grid };
        for k in 0..pts {
            h[i] = if pts == 1 {
                lo
            } else {
                lo + (hi - lo) * k as f64 / (pts - 1) as f64
            };
            let a = cell(x, h, i, p);
            rec(x, h, i + 1, acc + a, cap, p, grid, best);
        }
    }

    let mut best = f64::INFINITY;
    rec(x, &mut h, 1, 0.0, cap, params.p, grid, &mut best);
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Internal("no feasible grid chain".into()))
    }
}
