//! Samples, trimming parameters, trim vectors and trimmed empirical measures.
//!
//! An `alpha`-trimming of an empirical measure `P_n = (1/n) sum delta_{x_i}`
//! reweights the atoms to `b_i` with `0 <= b_i <= 1/(n(1-alpha))` and
//! `sum b_i = 1`. In one dimension, with sorted atoms, the cumulative weights
//! `h_i = b_1 + ... + b_i` form a [`TrimVector`].

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Absolute tolerance used by every feasibility check.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// Gap inserted between tied coordinates before exact 1-D solves.
pub const TIE_GAP: f64 = 1e-15;

/// Formats a float with 17 significant digits, the precision used by all
/// machine-readable outputs.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `n` points in `[0,1]^d`, stored row-major in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    dim: usize,
    coords: Vec<f64>,
    seed: Option<u64>,
}

impl Sample {
    /// Builds a sample from row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>, seed: Option<u64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("sample dimension must be positive".into()));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::Dimension(format!(
                "{} coordinates cannot form a nonempty sample of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::Input(format!("coordinate {bad} outside [0,1]")));
        }
        Ok(Self { dim, coords, seed })
    }

    pub fn from_points(points: &[Vec<f64>], seed: Option<u64>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Dimension("points have differing dimensions".into()));
        }
        Self::from_flat(dim, points.concat(), seed)
    }

    pub fn from_1d(values: &[f64], seed: Option<u64>) -> Result<Self> {
        Self::from_flat(1, values.to_vec(), seed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    /// Values of coordinate `k` in storage order.
    pub fn coordinate(&self, k: usize) -> Vec<f64> {
        self.points().map(|p| p[k]).collect()
    }

    /// Sub-sample made of the given rows (in that order) and the coordinates
    /// `first_coord..dim`.
    pub fn project(&self, rows: &[usize], first_coord: usize) -> Result<Self> {
        if first_coord >= self.dim {
            return Err(Error::Dimension(format!(
                "cannot drop {first_coord} of {} coordinates",
                self.dim
            )));
        }
        let coords = rows
            .iter()
            .flat_map(|&r| self.point(r)[first_coord..].iter().copied())
            .collect();
        Self::from_flat(self.dim - first_coord, coords, self.seed)
    }

    /// Permutation sorting a one-dimensional sample (stable, so ties keep
    /// insertion order).
    pub fn sorted_order(&self) -> Result<Vec<usize>> {
        self.require_1d()?;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.coords[a].total_cmp(&self.coords[b]));
        Ok(order)
    }

    /// Sorted view of a one-dimensional sample with ties separated, ready for
    /// the exact 1-D solvers.
    pub fn sorted_distinct(&self) -> Result<Sorted1d> {
        let order = self.sorted_order()?;
        let values = order.iter().map(|&i| self.coords[i]).collect();
        Ok(Sorted1d {
            values: separate_ties(values),
            order,
        })
    }

    fn require_1d(&self) -> Result<()> {
        if self.dim != 1 {
            return Err(Error::Dimension(format!(
                "expected a 1-D sample, got dimension {}",
                self.dim
            )));
        }
        Ok(())
    }

    /// Writes the sample as CSV: a `# dim=..,n=..,seed=..` comment line
    /// followed by one comma-separated row per point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_default();
        writeln!(out, "# dim={},n={},seed={}", self.dim, self.len(), seed)?;
        let mut line = String::new();
        for p in self.points() {
            line.clear();
            for (k, c) in p.iter().enumerate() {
                if k > 0 {
                    line.push(',');
                }
                let _ = write!(line, "{}", format_f64(*c));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    /// Reads the CSV written by [`Sample::write_csv`]. The comment line is
    /// optional; without it the dimension is the column count.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut dim = None;
        let mut declared_n = None;
        let mut seed = None;
        let mut coords = Vec::new();
        let mut rows = 0usize;
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for field in meta.split(',') {
                    let Some((key, value)) = field.split_once('=') else {
                        continue;
                    };
                    let value = value.trim();
                    let parse_err =
                        |_| Error::Input(format!("line {}: bad header value {value:?}", lineno + 1));
                    match key.trim() {
                        "dim" => dim = Some(value.parse::<usize>().map_err(parse_err)?),
                        "n" => declared_n = Some(value.parse::<usize>().map_err(parse_err)?),
                        "seed" if !value.is_empty() => {
                            seed = Some(value.parse::<u64>().map_err(parse_err)?)
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|_| {
                        Error::Input(format!("line {}: cannot parse {f:?}", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            match dim {
                Some(d) if d != row.len() => {
                    return Err(Error::Dimension(format!(
                        "line {}: expected {d} columns, found {}",
                        lineno + 1,
                        row.len()
                    )))
                }
                None => dim = Some(row.len()),
                _ => {}
            }
            coords.extend(row);
            rows += 1;
        }
        if let Some(n) = declared_n {
            if n != rows {
                return Err(Error::Input(format!("header declares n={n}, found {rows} rows")));
            }
        }
        Self::from_flat(dim.unwrap_or(0), coords, seed)
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut file)?;
        file.flush()?;
        Ok(())
    }
}

/// Strictly increasing 1-D values together with the permutation mapping each
/// sorted position back to its index in the original sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sorted1d {
    pub values: Vec<f64>,
    pub order: Vec<usize>,
}

/// Separates equal neighbours of a sorted slice by multiples of [`TIE_GAP`].
/// Runs pressed against 1 are pushed downwards instead so every value stays
/// in `[0,1]`.
pub fn separate_ties(mut values: Vec<f64>) -> Vec<f64> {
    for i in 1..values.len() {
        if values[i] <= values[i - 1] {
            values[i] = values[i - 1] + TIE_GAP;
        }
    }
    if values.last().is_some_and(|&v| v > 1.0) {
        let n = values.len();
        values[n - 1] = 1.0;
        for i in (0..n - 1).rev() {
            if values[i] >= values[i + 1] {
                values[i] = values[i + 1] - TIE_GAP;
            }
        }
    }
    values
}

/// Trimming level and transport exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimParams {
    pub alpha: f64,
    pub p: f64,
}

impl TrimParams {
    pub fn new(alpha: f64, p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha = {alpha} must lie in [0,1)")));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::Domain(format!("p = {p} must be a finite real >= 1")));
        }
        Ok(Self { alpha, p })
    }

    /// Largest admissible atom weight, `1/(n(1-alpha))`.
    pub fn cap(&self, n: usize) -> f64 {
        1.0 / (n as f64 * (1.0 - self.alpha))
    }

    /// `alpha/(1-alpha)`, the total drop of `h_i - i*cap` along a feasible
    /// trim vector.
    pub fn drift_total(&self) -> f64 {
        self.alpha / (1.0 - self.alpha)
    }
}

/// Interior cumulative weights `h_1..h_{n-1}`; `h_0 = 0` and `h_n = 1` are
/// implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimVector {
    pub h: Vec<f64>,
}

impl TrimVector {
    pub fn new(h: Vec<f64>) -> Self {
        Self { h }
    }

    /// The untrimmed vector `h_i = i/n`, feasible for every `alpha`.
    pub fn uniform(n: usize) -> Self {
        Self {
            h: (1..n).map(|i| i as f64 / n as f64).collect(),
        }
    }

    /// Number of atoms this vector distributes mass over.
    pub fn atoms(&self) -> usize {
        self.h.len() + 1
    }

    /// `h_0, h_1, ..., h_n`.
    pub fn with_boundary(&self) -> Vec<f64> {
        let mut full = Vec::with_capacity(self.h.len() + 2);
        full.push(0.0);
        full.extend_from_slice(&self.h);
        full.push(1.0);
        full
    }

    /// Atom weights `b_i = h_i - h_{i-1}`.
    pub fn increments(&self) -> Vec<f64> {
        self.with_boundary().windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Checks membership of `h` in the chain polytope `C_{alpha,n}`.
pub fn validate_trim_vector(h: &TrimVector, params: &TrimParams, n: usize) -> Result<bool> {
    if n == 0 || h.h.len() != n - 1 {
        return Err(Error::Dimension(format!(
            "trim vector of length {} does not match n = {n}",
            h.h.len()
        )));
    }
    let cap = params.cap(n);
    Ok(h
        .increments()
        .iter()
        .all(|&b| b >= -FEASIBILITY_TOL && b <= cap + FEASIBILITY_TOL))
}

/// Atom weights on a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimmedMeasure {
    pub base: Sample,
    pub weights: Vec<f64>,
}

impl TrimmedMeasure {
    /// The untrimmed empirical measure.
    pub fn empirical(base: Sample) -> Self {
        let n = base.len();
        Self {
            base,
            weights: vec![1.0 / n as f64; n],
        }
    }
}

/// Turns a feasible trim vector on a sorted 1-D sample into its trimmed
/// measure. Weights follow the storage order of `sample`, which must already
/// be sorted.
pub fn trim_vector_to_measure(
    h: &TrimVector,
    sample: &Sample,
    params: &TrimParams,
) -> Result<TrimmedMeasure> {
    if sample.dim() != 1 {
        return Err(Error::Dimension("trim vectors live on 1-D samples".into()));
    }
    if sample.flat().windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("sample must be sorted".into()));
    }
    if !validate_trim_vector(h, params, sample.len())? {
        return Err(Error::Feasibility(format!(
            "h is not in C_(alpha={}, n={})",
            params.alpha,
            sample.len()
        )));
    }
    Ok(TrimmedMeasure {
        base: sample.clone(),
        weights: h.increments(),
    })
}

/// Whether `r` is an `alpha`-trimming of the empirical measure on its atoms.
pub fn is_trimming_of(r: &TrimmedMeasure, alpha: f64) -> bool {
    let n = r.weights.len();
    if n == 0 || !(0.0..1.0).contains(&alpha) {
        return false;
    }
    let cap = 1.0 / (n as f64 * (1.0 - alpha));
    let total: f64 = r.weights.iter().sum();
    r.weights
        .iter()
        .all(|&b| b >= -FEASIBILITY_TOL && b <= cap + FEASIBILITY_TOL)
        && (total - 1.0).abs() <= FEASIBILITY_TOL
}
