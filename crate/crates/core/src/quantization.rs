//! Full trimming: the random quantization cost
//! `int min_i ||x - X_i||^p dx` over the unit cube.
//!
//! Exact in one dimension (Voronoi cells are the midpoint intervals), Monte
//! Carlo with k-d tree nearest neighbours otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::substream_seed;
use crate::kdtree::KdTree;
use crate::measures::Sample;
use crate::wasserstein1d::{abs_pow, abs_pow_integral};

/// Draws per independent Monte Carlo substream. Fixed so that results do not
/// depend on how many threads evaluate the chunks.
pub const MC_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantizationMethod {
    Exact1d,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationReport {
    pub cost: f64,
    pub method: QuantizationMethod,
    pub mc_std_error: Option<f64>,
    /// `n^{p/d} * cost`.
    pub scaled: f64,
}

fn scaled(cost: f64, n: usize, d: usize, p: f64) -> f64 {
    (n as f64).powf(p / d as f64) * cost
}

/// Exact 1-D quantization cost of a sorted sample.
pub fn quantization_cost_1d(x: &[f64], p: f64) -> Result<QuantizationReport> {
    if x.is_empty() {
        return Err(Error::Precondition("empty sample".into()));
    }
    if x.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("sample must be sorted".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p = {p} must be >= 1")));
    }
    let n = x.len();
    let mut cost = 0.0;
    let mut left = 0.0;
    for i in 0..n {
        let right = if i + 1 < n { 0.5 * (x[i] + x[i + 1]) } else { 1.0 };
        cost += abs_pow_integral(left, right, x[i], p);
        left = right;
    }
    Ok(QuantizationReport {
        cost,
        method: QuantizationMethod::Exact1d,
        mc_std_error: None,
        scaled: scaled(cost, n, 1, p),
    })
}

/// Monte Carlo quantization cost from `n_mc` uniform draws.
///
/// Draws are split into chunks of [`MC_CHUNK`], each with its own substream
/// of `seed`; chunk sums are combined in chunk order, so the result is the
/// same for every thread count.
pub fn quantization_cost_mc(sample: &Sample, p: f64, n_mc: usize, seed: u64) -> Result<QuantizationReport> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p = {p} must be >= 1")));
    }
    if n_mc < 1000 {
        return Err(Error::Domain(format!("need at least 1000 Monte Carlo draws, got {n_mc}")));
    }
    let tree = KdTree::build(sample);
    let d = sample.dim();
    let chunks = n_mc.div_ceil(MC_CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let draws = MC_CHUNK.min(n_mc - c * MC_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, &[c as u64]));
            let mut q = vec![0.0; d];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..draws {
                q.iter_mut().for_each(|v| *v = rng.random::<f64>());
                let (_, d2) = tree.nearest(&q);
                let v = if p == 2.0 { d2 } else { abs_pow(d2.sqrt(), p) };
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let m = n_mc as f64;
    let mean = s1 / m;
    let var = ((s2 / m - mean * mean) * m / (m - 1.0)).max(0.0);
    Ok(QuantizationReport {
        cost: mean,
        method: QuantizationMethod::MonteCarlo,
        mc_std_error: Some((var / m).sqrt()),
        scaled: scaled(mean, sample.len(), d, p),
    })
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let d = d as f64;
    std::f64::consts::PI.powf(d / 2.0) / libm::tgamma(1.0 + d / 2.0)
}

/// Limit of `n^{p/d} E(cost)`: `Gamma(1 + p/d) * omega_d^{-p/d}`.
pub fn quantization_constant(d: usize, p: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("d must be >= 1".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p = {p} must be >= 1")));
    }
    let df = d as f64;
    Ok(libm::tgamma(1.0 + p / df) * unit_ball_volume(d).powf(-p / df))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sample_uniform;

    #[test]
    fn exact_examples() {
        assert!((quantization_cost_1d(&[0.5], 1.0).unwrap().cost - 0.25).abs() < 1e-15);
        let r = quantization_cost_1d(&[0.25, 0.75], 1.0).unwrap();
        assert!((r.cost - 0.125).abs() < 1e-15);
        assert!((r.scaled - 0.25).abs() < 1e-15);
        assert!(quantization_cost_1d(&[0.7, 0.2], 1.0).is_err());
    }

    #[test]
    fn constants() {
        assert!((quantization_constant(1, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((quantization_constant(2, 2.0).unwrap() - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!((quantization_constant(2, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn mc_agrees_with_exact_1d() {
        for seed in 0..5 {
            let s = sample_uniform(20, 1, seed);
            let mut x = s.coordinate(0);
            x.sort_by(f64::total_cmp);
            let exact = quantization_cost_1d(&x, 1.5).unwrap().cost;
            let mc = quantization_cost_mc(&s, 1.5, 50_000, seed + 100).unwrap();
            let se = mc.mc_std_error.unwrap();
            assert!((mc.cost - exact).abs() <= 3.0 * se + 1e-12, "{} vs {exact} (se {se})", mc.cost);
        }
    }

    #[test]
    fn grid_centres_and_single_point() {
        let k = 4;
        let mut pts = Vec::new();
        for a in 0..k {
            for b in 0..k {
                pts.push(vec![(a as f64 + 0.5) / k as f64, (b as f64 + 0.5) / k as f64]);
            }
        }
        let s = Sample::from_points(&pts, None).unwrap();
        let r = quantization_cost_mc(&s, 2.0, 100_000, 9).unwrap();
        let expect = 1.0 / (6.0 * (k * k) as f64);
        assert!((r.cost - expect).abs() <= 3.0 * r.mc_std_error.unwrap());

        let centre = Sample::from_points(&[vec![0.5, 0.5]], None).unwrap();
        let r = quantization_cost_mc(&centre, 2.0, 100_000, 10).unwrap();
        assert!((r.cost - 1.0 / 6.0).abs() <= 3.0 * r.mc_std_error.unwrap());
    }

    #[test]
    fn mc_is_deterministic_across_pools() {
        let s = sample_uniform(300, 2, 4);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| quantization_cost_mc(&s, 1.0, 20_000, 3).unwrap());
        let b = four.install(|| quantization_cost_mc(&s, 1.0, 20_000, 3).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn adding_points_never_increases_cost() {
        let s = sample_uniform(30, 1, 77);
        let mut x = s.coordinate(0);
        x.sort_by(f64::total_cmp);
        let mut prev = f64::INFINITY;
        for k in 1..=x.len() {
            let mut sub = x[..k].to_vec();
            sub.sort_by(f64::total_cmp);
            let c = quantization_cost_1d(&sub, 2.0).unwrap().cost;
            assert!(c <= prev + 1e-15);
            prev = c;
        }
    }
}
