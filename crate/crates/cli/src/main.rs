use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trimot::harness::{emit_report, run_experiment, sample_uniform, selftest, ExperimentConfig, Statistic, SOLVE_TOL};
use trimot::partial_matching::{solve_partial_matching, MatchingProblem};
use trimot::quantization::{quantization_constant, quantization_cost_1d, quantization_cost_mc};
use trimot::stripe::{build_slab_plan, stripe_cost, StripeCostMethod};
use trimot::trim1d::solve_trim1d;
use trimot::{Error, Sample, TrimParams};

/// Trimmed optimal transport between empirical measures and the uniform law
/// on the unit cube.
///
/// Costs are p-th powers of Euclidean distances, averaged over the unit cube
/// (a W_p^p value). Points read with --input-x/--input-y are CSV files with
/// one point per row and take precedence over --seed sampling.
#[derive(Parser, Debug)]
#[command(name = "trimot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal alpha-trimming of a 1-D sample against U(0,1): cost, bounds
    /// and envelope summary.
    Trim1d(Trim1dArgs),
    /// Optimal partial matching T_{p,alpha}(n) between two samples.
    Match(MatchArgs),
    /// Slab transport map (stripes in 2-D) and its cost upper bound.
    Stripe(StripeArgs),
    /// Random quantization cost of a sample and the limiting constant.
    Quantize(QuantizeArgs),
    /// Replicated experiment over a grid of sample sizes; writes CSV and SVG
    /// reports and fits the log-log slope.
    Rates(RatesArgs),
    /// Small oracle-equivalence checks; prints PASS/FAIL per check.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Transport exponent p (>= 1).
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Trimmed fraction alpha in [0,1).
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Seed for sampling uniform points.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads [default: available cores].
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct Trim1dArgs {
    /// Number of uniform points to sample (ignored with --input-x).
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// CSV file with one value in [0,1] per line.
    #[arg(long)]
    input_x: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct MatchArgs {
    /// Points per sample (ignored with input files).
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Dimension of sampled points.
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// CSV file with the first sample.
    #[arg(long, requires = "input_y")]
    input_x: Option<PathBuf>,
    /// CSV file with the second sample.
    #[arg(long, requires = "input_x")]
    input_y: Option<PathBuf>,
    /// Directory for pairing.csv (x_index,y_index,cost).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CostMethod {
    /// Closed form (stripe: p = 2 only; quantize: d = 1 only).
    Exact,
    /// Adaptive Gauss-Legendre cubature (stripe, d = 2).
    Quadrature,
    /// Monte Carlo with --mc-draws uniform draws.
    Mc,
}

#[derive(Args, Debug)]
struct StripeArgs {
    /// Points to sample (ignored with --input-x).
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Dimension (>= 2).
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// CSV file with the sample.
    #[arg(long)]
    input_x: Option<PathBuf>,
    /// How to evaluate the map's cost.
    #[arg(long, value_enum, default_value_t = CostMethod::Exact)]
    method: CostMethod,
    /// Monte Carlo draws.
    #[arg(long, default_value_t = 100_000)]
    mc_draws: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct QuantizeArgs {
    /// Points to sample (ignored with --input-x).
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Dimension.
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// CSV file with the sample.
    #[arg(long)]
    input_x: Option<PathBuf>,
    /// exact (d = 1) or mc [default: exact in 1-D, mc otherwise].
    #[arg(long, value_enum)]
    method: Option<CostMethod>,
    /// Monte Carlo draws.
    #[arg(long, default_value_t = 100_000)]
    mc_draws: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct RatesArgs {
    /// trim1d_cost, untrimmed_1d_cost, partial_match, untrimmed_match,
    /// stripe_bound or quantization.
    #[arg(long, value_parser = parse_statistic)]
    statistic: Statistic,
    /// Dimension.
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Strictly increasing sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    n_grid: Vec<usize>,
    /// Replications per sample size.
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Output directory for the CSV and SVG reports.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Monte Carlo draws per quantization replication (d >= 2).
    #[arg(long, default_value_t = 100_000)]
    mc_draws: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Seed for the random instances.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_statistic(s: &str) -> Result<Statistic, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn load_or_sample(input: &Option<PathBuf>, n: usize, d: usize, seed: u64) -> trimot::Result<Sample> {
    match input {
        Some(path) => Sample::read_csv_file(path),
        None => {
            if n == 0 || d == 0 {
                return Err(Error::Input("--n and --d must be positive".into()));
            }
            Ok(sample_uniform(n, d, seed))
        }
    }
}

fn with_pool<T>(workers: Option<usize>, f: impl FnOnce() -> trimot::Result<T> + Send) -> trimot::Result<T>
where
    T: Send,
{
    let workers = workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(Error::Input("--workers must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
        .install(f)
}

fn run_trim1d(a: &Trim1dArgs) -> trimot::Result<()> {
    let params = TrimParams::new(a.common.alpha, a.common.p)?;
    let sample = load_or_sample(&a.input_x, a.n, 1, a.common.seed)?;
    let x = sample.sorted_distinct()?.values;
    let r = solve_trim1d(&x, &params, SOLVE_TOL)?;
    println!("n {}", x.len());
    println!("p {}", params.p);
    println!("alpha {}", params.alpha);
    println!("cost {}", r.cost);
    println!("lower_bound {}", r.lower_bound);
    println!("upper_bound {}", r.upper_bound);
    println!("envelope_max_width {}", r.envelopes.max_band_width());
    println!("envelope_mean_width {}", r.envelopes.mean_band_width());
    println!("solver_rounds {}", r.stats.rounds);
    let weights: Vec<String> = r.h_opt.increments().iter().map(|w| format!("{w}")).collect();
    println!("weights {}", weights.join(","));
    Ok(())
}

fn run_match(a: &MatchArgs) -> trimot::Result<()> {
    let (x, y) = match (&a.input_x, &a.input_y) {
        (Some(px), Some(py)) => (Sample::read_csv_file(px)?, Sample::read_csv_file(py)?),
        _ => {
            let x = load_or_sample(&None, a.n, a.d, a.common.seed)?;
            let y = load_or_sample(&None, a.n, a.d, a.common.seed.wrapping_add(1))?;
            (x, y)
        }
    };
    let problem = MatchingProblem::new(x, y, a.common.p, a.common.alpha)?;
    let r = with_pool(a.common.workers, || solve_partial_matching(&problem))?;
    println!("n {}", problem.n());
    println!("kept {}", problem.kept());
    println!("cost {}", r.cost);
    let mut csv = String::from("x_index,y_index,cost\n");
    for &(i, j) in &r.pairing {
        let c = trimot::partial_matching::pair_cost(problem.x.point(i), problem.y.point(j), problem.p);
        csv.push_str(&format!("{i},{j},{}\n", trimot::measures::format_f64(c)));
    }
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join("pairing.csv");
            std::fs::write(&path, csv)?;
            println!("pairing {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn run_stripe(a: &StripeArgs) -> trimot::Result<()> {
    let params = TrimParams::new(a.common.alpha, a.common.p)?;
    let sample = load_or_sample(&a.input_x, a.n, a.d, a.common.seed)?;
    let plan = with_pool(a.common.workers, || build_slab_plan(&sample, &params))?;
    println!("n {}", plan.n);
    println!("d {}", plan.dim);
    println!("slabs {}", plan.slabs);
    let counts: Vec<String> = plan.counts.iter().map(usize::to_string).collect();
    println!("counts {}", counts.join(","));
    println!("capacity_factor {}", plan.capacity_factor);
    println!("required_per_slab {}", plan.root.required);
    println!("feasible {}", plan.feasible);
    if let Some(d) = &plan.diagnostic {
        println!("diagnostic {d}");
    }
    let method = match a.method {
        CostMethod::Exact => StripeCostMethod::Exact,
        CostMethod::Quadrature => StripeCostMethod::Quadrature,
        CostMethod::Mc => StripeCostMethod::MonteCarlo {
            draws: a.mc_draws,
            seed: a.common.seed,
        },
    };
    let report = with_pool(a.common.workers, || stripe_cost(&plan, method))?;
    println!("cost {}", report.cost);
    if let Some(se) = report.mc_std_error {
        println!("mc_std_error {se}");
    }
    println!("upper_bound {}", report.upper_bound);
    Ok(())
}

fn run_quantize(a: &QuantizeArgs) -> trimot::Result<()> {
    let sample = load_or_sample(&a.input_x, a.n, a.d, a.common.seed)?;
    let d = sample.dim();
    let method = a.method.unwrap_or(if d == 1 { CostMethod::Exact } else { CostMethod::Mc });
    let report = match method {
        CostMethod::Exact if d == 1 => quantization_cost_1d(&sample.sorted_distinct()?.values, a.common.p)?,
        CostMethod::Mc => with_pool(a.common.workers, || {
            quantization_cost_mc(&sample, a.common.p, a.mc_draws, a.common.seed)
        })?,
        _ => return Err(Error::Input("quantize supports --method exact (d = 1) or mc".into())),
    };
    let constant = quantization_constant(d, a.common.p)?;
    println!("n {}", sample.len());
    println!("d {d}");
    println!("cost {}", report.cost);
    if let Some(se) = report.mc_std_error {
        println!("mc_std_error {se}");
    }
    println!("scaled {}", report.scaled);
    println!("limit_constant {constant}");
    println!("scaled_over_constant {}", report.scaled / constant);
    Ok(())
}

fn run_rates(a: &RatesArgs) -> trimot::Result<()> {
    let mut cfg = ExperimentConfig::new(
        a.statistic,
        a.d,
        a.common.p,
        a.common.alpha,
        a.n_grid.clone(),
        a.reps,
        a.common.seed,
    );
    cfg.workers = a.common.workers.unwrap_or_else(default_workers);
    cfg.mc_draws = a.mc_draws;
    cfg.validate()?;
    let table = run_experiment(&cfg)?;
    println!("n,mean,stderr,n_included,n_excluded");
    for s in &table.summaries {
        println!("{},{},{},{},{}", s.n, s.mean, s.stderr, s.n_included, s.n_excluded);
    }
    match table.slope {
        Some(f) => println!("slope {} (se {})", f.slope, f.slope_se),
        None => println!("slope undefined (fewer than three sizes with a positive mean)"),
    }
    let paths = emit_report(&table, &a.out)?;
    for p in [paths.rows, paths.summary, paths.slope, paths.svg] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run_selftest(a: &SelftestArgs) -> trimot::Result<bool> {
    let mut all = true;
    for r in selftest(a.seed)? {
        println!("{} | {} | {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        all &= r.passed;
    }
    Ok(all)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        Error::InfeasiblePlan(_) | Error::Feasibility(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Trim1d(a) => run_trim1d(a),
        Command::Match(a) => run_match(a),
        Command::Stripe(a) => run_stripe(a),
        Command::Quantize(a) => run_quantize(a),
        Command::Rates(a) => run_rates(a),
        Command::Selftest(a) => match run_selftest(a) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
