//! Seeded replication engine, log-log rate fits and report files.
//!
//! Every replication draws its own generator from
//! `substream_seed(master_seed, [n, rep])`, so a table depends only on the
//! configuration and never on how replications are scheduled.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{format_f64, Sample, TrimParams};
use crate::partial_matching::{brute_force_partial_matching, solve_partial_matching, MatchingProblem};
use crate::quantization::{quantization_cost_1d, quantization_cost_mc};
use crate::stripe::build_slab_plan;
use crate::trim1d::{brute_force_trim1d, solve_trim1d};
use crate::wasserstein1d::w_p_empirical_to_uniform;

/// Objective tolerance for the 1-D trimmed solves run by the harness.
pub const SOLVE_TOL: f64 = 1e-10;

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent seed for the stream keyed by `keys` under `seed`.
pub fn substream_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix64(seed), |acc, &k| mix64(acc ^ mix64(k.wrapping_add(0x5851_f42d_4c95_7f2d))))
}

/// `n` i.i.d. uniform points on `[0,1)^d`, drawn row by row.
pub fn sample_uniform(n: usize, d: usize, seed: u64) -> Sample {
    assert!(n >= 1 && d >= 1, "sample_uniform needs n >= 1 and d >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * d).map(|_| rng.random::<f64>()).collect();
    Sample::from_flat(d, coords, Some(seed)).expect("uniform draws lie in [0,1)")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistic {
    /// `W_p^p(R_alpha(P_n), U)` in one dimension.
    Trim1dCost,
    /// `W_p^p(P_n, U)` in one dimension.
    Untrimmed1dCost,
    /// `T_{p,alpha}(n)` between two independent samples.
    PartialMatch,
    /// `T_p(n)`, the classical assignment cost.
    UntrimmedMatch,
    /// Upper bound of the slab construction; infeasible plans are excluded.
    StripeBound,
    /// Random quantization cost.
    Quantization,
}

impl Statistic {
    pub const ALL: [Statistic; 6] = [
        Statistic::Trim1dCost,
        Statistic::Untrimmed1dCost,
        Statistic::PartialMatch,
        Statistic::UntrimmedMatch,
        Statistic::StripeBound,
        Statistic::Quantization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Trim1dCost => "trim1d_cost",
            Statistic::Untrimmed1dCost => "untrimmed_1d_cost",
            Statistic::PartialMatch => "partial_match",
            Statistic::UntrimmedMatch => "untrimmed_match",
            Statistic::StripeBound => "stripe_bound",
            Statistic::Quantization => "quantization",
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Statistic::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Statistic::ALL.iter().map(|s| s.name()).collect();
                Error::Input(format!("unknown statistic '{s}', expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub statistic: Statistic,
    pub d: usize,
    pub p: f64,
    pub alpha: f64,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
    pub workers: usize,
    /// Monte Carlo draws per quantization replication in `d >= 2`.
    pub mc_draws: usize,
}

impl ExperimentConfig {
    pub fn new(statistic: Statistic, d: usize, p: f64, alpha: f64, n_grid: Vec<usize>, reps: usize, master_seed: u64) -> Self {
        Self {
            statistic,
            d,
            p,
            alpha,
            n_grid,
            reps,
            master_seed,
            workers: 1,
            mc_draws: 100_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::Input("n_grid is empty".into()));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("n_grid must be strictly increasing".into()));
        }
        if self.n_grid[0] == 0 {
            return Err(Error::Input("sample sizes must be positive".into()));
        }
        if self.reps == 0 {
            return Err(Error::Input("reps must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Input("workers must be at least 1".into()));
        }
        if self.d == 0 {
            return Err(Error::Dimension("d must be at least 1".into()));
        }
        TrimParams::new(self.alpha, self.p)?;
        match self.statistic {
            Statistic::Trim1dCost | Statistic::Untrimmed1dCost if self.d != 1 => {
                Err(Error::Dimension(format!("{} requires d = 1, got {}", self.statistic, self.d)))
            }
            Statistic::StripeBound if self.d < 2 => {
                Err(Error::Dimension(format!("stripe_bound requires d >= 2, got {}", self.d)))
            }
            Statistic::StripeBound if self.alpha == 0.0 => {
                Err(Error::Domain("stripe_bound requires alpha > 0".into()))
            }
            Statistic::StripeBound if self.n_grid[0] < 4 => {
                Err(Error::Input("stripe_bound requires n >= 4".into()))
            }
            Statistic::Quantization if self.d >= 2 && self.mc_draws < 1000 => {
                Err(Error::Domain(format!("need at least 1000 Monte Carlo draws, got {}", self.mc_draws)))
            }
            _ => Ok(()),
        }
    }
}

/// One replication; `value` is `None` when it was excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub rep: usize,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSummary {
    pub n: usize,
    /// Mean over included replications (NaN if none).
    pub mean: f64,
    /// Standard error of the mean (NaN with fewer than two values).
    pub stderr: f64,
    pub n_included: usize,
    pub n_excluded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub statistic: Statistic,
    pub d: usize,
    pub p: f64,
    pub alpha: f64,
    pub rows: Vec<RateRow>,
    pub summaries: Vec<RateSummary>,
    /// Absent when fewer than three sizes have a positive mean.
    pub slope: Option<SlopeFit>,
}

impl RateTable {
    pub fn from_rows(statistic: Statistic, d: usize, p: f64, alpha: f64, rows: Vec<RateRow>) -> Self {
        let mut sizes: Vec<usize> = rows.iter().map(|r| r.n).collect();
        sizes.sort_unstable();
        sizes.dedup();
        let summaries: Vec<RateSummary> = sizes
            .iter()
            .map(|&n| {
                let all: Vec<&RateRow> = rows.iter().filter(|r| r.n == n).collect();
                let vals: Vec<f64> = all.iter().filter_map(|r| r.value).collect();
                let k = vals.len();
                let mean = if k == 0 { f64::NAN } else { vals.iter().sum::<f64>() / k as f64 };
                let stderr = if k < 2 {
                    f64::NAN
                } else {
                    let ss: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum();
                    (ss / (k - 1) as f64 / k as f64).sqrt()
                };
                RateSummary {
                    n,
                    mean,
                    stderr,
                    n_included: k,
                    n_excluded: all.len() - k,
                }
            })
            .collect();
        let pairs: Vec<(f64, f64)> = summaries
            .iter()
            .filter(|s| s.mean > 0.0)
            .map(|s| (s.n as f64, s.mean))
            .collect();
        let slope = if pairs.len() >= 3 { fit_loglog_slope(&pairs).ok() } else { None };
        Self {
            statistic,
            d,
            p,
            alpha,
            rows,
            summaries,
            slope,
        }
    }

    pub fn summary(&self, n: usize) -> Option<&RateSummary> {
        self.summaries.iter().find(|s| s.n == n)
    }

    /// Excluded replications over all replications at size `n`.
    pub fn exclusion_rate(&self, n: usize) -> Option<f64> {
        self.summary(n)
            .map(|s| s.n_excluded as f64 / (s.n_excluded + s.n_included) as f64)
    }

    fn prefix(&self) -> String {
        format!("{},{},{},{}", self.statistic, self.d, format_f64(self.p), format_f64(self.alpha))
    }

    pub fn rows_csv(&self) -> String {
        let mut out = String::from("statistic,d,p,alpha,n,rep,value,excluded\n");
        let prefix = self.prefix();
        for r in &self.rows {
            let (value, excluded) = match r.value {
                Some(v) => (format_f64(v), 0),
                None => (format_f64(f64::NAN), 1),
            };
            let _ = writeln!(out, "{prefix},{},{},{value},{excluded}", r.n, r.rep);
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("statistic,d,p,alpha,n,mean,stderr,n_included\n");
        let prefix = self.prefix();
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{prefix},{},{},{},{}",
                s.n,
                format_f64(s.mean),
                format_f64(s.stderr),
                s.n_included
            );
        }
        out
    }

    pub fn slope_csv(&self) -> String {
        let mut out = String::from("statistic,d,p,alpha,slope,slope_se\n");
        let (slope, se) = self.slope.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.slope_se));
        let _ = writeln!(out, "{},{},{}", self.prefix(), format_f64(slope), format_f64(se));
        out
    }

    /// Self-contained 800x600 log-log plot of the means with the fitted line.
    pub fn svg(&self) -> String {
        const W: f64 = 800.0;
        const H: f64 = 600.0;
        const LEFT: f64 = 90.0;
        const RIGHT: f64 = 30.0;
        const TOP: f64 = 50.0;
        const BOTTOM: f64 = 70.0;

        let pts: Vec<(f64, f64)> = self
            .summaries
            .iter()
            .filter(|s| s.mean > 0.0)
            .map(|s| ((s.n as f64).log10(), s.mean.log10()))
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        if pts.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |lo: f64, hi: f64| {
            let span = (hi - lo).max(0.2);
            (lo - 0.08 * span, hi + 0.08 * span)
        };
        (x0, x1) = pad(x0, x1);
        (y0, y1) = pad(y0, y1);
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let sy = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="600" viewBox="0 0 800 600">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="800" height="600" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - LEFT - RIGHT,
            H - TOP - BOTTOM
        );
        let title = match self.slope {
            Some(f) => format!(
                "{} (d={}, p={}, alpha={}): slope {:.4} +/- {:.4}",
                self.statistic, self.d, self.p, self.alpha, f.slope, f.slope_se
            ),
            None => format!("{} (d={}, p={}, alpha={})", self.statistic, self.d, self.p, self.alpha),
        };
        let _ = writeln!(
            s,
            r#"<text x="400" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>"#
        );
        for k in x0.ceil() as i64..=x1.floor() as i64 {
            let x = sx(k as f64);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">1e{k}</text>"#,
                H - BOTTOM,
                H - BOTTOM + 6.0,
                H - BOTTOM + 22.0
            );
        }
        for k in y0.ceil() as i64..=y1.floor() as i64 {
            let y = sy(k as f64);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="12">1e{k}</text>"#,
                LEFT - 6.0,
                LEFT - 10.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="400" y="585" text-anchor="middle" font-family="sans-serif" font-size="14">n</text>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="20" y="300" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 20 300)">mean</text>"#
        );
        if let Some(f) = self.slope {
            let (a, b) = (pts.first().map_or(x0, |p| p.0), pts.last().map_or(x1, |p| p.0));
            let line = |x: f64| (f.intercept + f.slope * x * std::f64::consts::LN_10) / std::f64::consts::LN_10;
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red" stroke-width="1.5"/>"#,
                sx(a),
                sy(line(a)),
                sx(b),
                sy(line(b))
            );
        }
        for &(x, y) in &pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="steelblue"/>"#, sx(x), sy(y));
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Ordinary least squares of `ln(mean)` on `ln(n)`.
pub fn fit_loglog_slope(pairs: &[(f64, f64)]) -> Result<SlopeFit> {
    if pairs.len() < 3 {
        return Err(Error::Input(format!("need at least 3 points, got {}", pairs.len())));
    }
    if let Some(&(n, m)) = pairs.iter().find(|&&(n, m)| !(n > 0.0 && m > 0.0)) {
        return Err(Error::Domain(format!("log-log fit needs positive values, got ({n}, {m})")));
    }
    let k = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all sizes are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    Ok(SlopeFit {
        slope,
        slope_se: (rss / (k - 2.0) / sxx).sqrt(),
        intercept,
    })
}

/// Value of one replication of `config.statistic` at size `n`, or `None`
/// if the replication is excluded.
pub fn replicate(config: &ExperimentConfig, n: usize, seed: u64) -> Result<Option<f64>> {
    let (d, p, alpha) = (config.d, config.p, config.alpha);
    let sorted = |s: &Sample| s.sorted_distinct().map(|s| s.values);
    let value = match config.statistic {
        Statistic::Trim1dCost => {
            let x = sorted(&sample_uniform(n, 1, seed))?;
            solve_trim1d(&x, &TrimParams::new(alpha, p)?, SOLVE_TOL)?.cost
        }
        Statistic::Untrimmed1dCost => w_p_empirical_to_uniform(&sorted(&sample_uniform(n, 1, seed))?, p)?,
        Statistic::PartialMatch | Statistic::UntrimmedMatch => {
            let x = sample_uniform(n, d, substream_seed(seed, &[0]));
            let y = sample_uniform(n, d, substream_seed(seed, &[1]));
            let a = if config.statistic == Statistic::PartialMatch { alpha } else { 0.0 };
            solve_partial_matching(&MatchingProblem::new(x, y, p, a)?)?.cost
        }
        Statistic::StripeBound => {
            let plan = build_slab_plan(&sample_uniform(n, d, seed), &TrimParams::new(alpha, p)?)?;
            if !plan.feasible {
                return Ok(None);
            }
            plan.upper_bound()?
        }
        Statistic::Quantization => {
            let s = sample_uniform(n, d, seed);
            if d == 1 {
                quantization_cost_1d(&sorted(&s)?, p)?.cost
            } else {
                quantization_cost_mc(&s, p, config.mc_draws, substream_seed(seed, &[2]))?.cost
            }
        }
    };
    if !(value.is_finite() && value >= 0.0) {
        return Err(Error::Internal(format!("{} produced {value} at n = {n}", config.statistic)));
    }
    Ok(Some(value))
}

/// Runs `reps` replications per size with a caller-supplied statistic
/// `f(n, rep, seed)` on a pool of `config.workers` threads.
pub fn run_experiment_with<F>(config: &ExperimentConfig, f: F) -> Result<RateTable>
where
    F: Fn(usize, usize, u64) -> Result<Option<f64>> + Sync,
{
    config.validate()?;
    let jobs: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.reps).map(move |rep| (n, rep)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let values: Vec<Result<Option<f64>>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, rep)| f(n, rep, substream_seed(config.master_seed, &[n as u64, rep as u64])))
            .collect()
    });
    let mut rows = Vec::with_capacity(jobs.len());
    for ((n, rep), v) in jobs.into_iter().zip(values) {
        rows.push(RateRow { n, rep, value: v? });
    }
    Ok(RateTable::from_rows(config.statistic, config.d, config.p, config.alpha, rows))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RateTable> {
    run_experiment_with(config, |n, _, seed| replicate(config, n, seed))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub rows: PathBuf,
    pub summary: PathBuf,
    pub slope: PathBuf,
    pub svg: PathBuf,
}

/// Writes `<statistic>_rows.csv`, `_summary.csv`, `_slope.csv` and
/// `_loglog.svg` into `dir`, creating it if needed.
pub fn emit_report(table: &RateTable, dir: impl AsRef<Path>) -> Result<ReportPaths> {
    if table.rows.is_empty() {
        return Err(Error::Input("rate table has no rows; nothing written".into()));
    }
    let dir = dir.as_ref();
    let name = table.statistic.name();
    let paths = ReportPaths {
        rows: dir.join(format!("{name}_rows.csv")),
        summary: dir.join(format!("{name}_summary.csv")),
        slope: dir.join(format!("{name}_slope.csv")),
        svg: dir.join(format!("{name}_loglog.svg")),
    };
    let contents = [
        (&paths.rows, table.rows_csv()),
        (&paths.summary, table.summary_csv()),
        (&paths.slope, table.slope_csv()),
        (&paths.svg, table.svg()),
    ];
    fs::create_dir_all(dir)?;
    for (path, text) in contents {
        fs::write(path, text)?;
    }
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Quick oracle comparisons on small random instances.
pub fn selftest(seed: u64) -> Result<Vec<SelftestOutcome>> {
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for k in 0..60u64 {
        let s = substream_seed(seed, &[1, k]);
        let n = 1 + (k as usize % 6);
        let d = 1 + (k as usize / 6) % 2;
        let x = sample_uniform(n, d, substream_seed(s, &[0]));
        let y = sample_uniform(n, d, substream_seed(s, &[1]));
        let alpha = [0.0, 0.25, 0.5][k as usize % 3];
        let prob = MatchingProblem::new(x, y, 1.0 + (k % 2) as f64, alpha)?;
        let diff = (solve_partial_matching(&prob)?.cost - brute_force_partial_matching(&prob)?).abs();
        worst = worst.max(diff);
    }
    out.push(SelftestOutcome {
        name: "partial matching vs enumeration",
        passed: worst <= 1e-12,
        detail: format!("60 instances, max |diff| = {worst:.3e}"),
    });

    let mut worst = 0.0f64;
    for k in 0..20u64 {
        let n = 1 + (k as usize % 3);
        let x = sample_uniform(n, 1, substream_seed(seed, &[2, k])).sorted_distinct()?.values;
        let params = TrimParams::new([0.1, 0.3, 0.6][k as usize % 3], 1.0 + (k % 2) as f64)?;
        let diff = (solve_trim1d(&x, &params, SOLVE_TOL)?.cost - brute_force_trim1d(&x, &params, 1001)?).abs();
        worst = worst.max(diff);
    }
    out.push(SelftestOutcome {
        name: "1-D trimmed solver vs grid search",
        passed: worst <= 1e-4,
        detail: format!("20 instances, max |diff| = {worst:.3e}"),
    });

    let mut inside = 0;
    for k in 0..50u64 {
        let x = sample_uniform(40, 1, substream_seed(seed, &[3, k])).sorted_distinct()?.values;
        let r = solve_trim1d(&x, &TrimParams::new(0.3, 2.0)?, SOLVE_TOL)?;
        let e = &r.envelopes;
        let ok = r
            .h_opt
            .h
            .iter()
            .enumerate()
            .all(|(i, &h)| e.h_lower[i + 1] - 1e-7 <= h && h <= e.h_bar[i + 1] + 1e-7);
        inside += ok as usize;
    }
    out.push(SelftestOutcome {
        name: "optimal trim vector inside envelopes",
        passed: inside == 50,
        detail: format!("{inside}/50 instances"),
    });

    let s = sample_uniform(25, 1, substream_seed(seed, &[4]));
    let exact = quantization_cost_1d(&s.sorted_distinct()?.values, 1.0)?.cost;
    let mc = quantization_cost_mc(&s, 1.0, 100_000, substream_seed(seed, &[5]))?;
    let se = mc.mc_std_error.unwrap_or(0.0);
    out.push(SelftestOutcome {
        name: "quantization Monte Carlo vs exact",
        passed: (mc.cost - exact).abs() <= 4.0 * se,
        detail: format!("exact {exact:.6e}, mc {:.6e} (se {se:.1e})", mc.cost),
    });

    Ok(out)
}
