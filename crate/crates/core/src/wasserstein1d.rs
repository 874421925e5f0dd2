//! One-dimensional Wasserstein machinery.
//!
//! In one dimension `W_p(P,Q)^p = int_0^1 |F^{-1}(t) - G^{-1}(t)|^p dt`, so
//! every distance here is an exact integral of a piecewise constant (or
//! piecewise linear, for the uniform law) integrand.
//!
//! For a sorted sample `x_1 < ... < x_n` and a trim vector `h`, the cost of
//! sending `U(0,1)` onto the trimmed measure splits as
//!
//! ```text
//! cost(h) = V_n(p) + 1/(p+1) * sum_i r_i^{p+1} f_p((h_i - m_i) / r_i)
//! ```
//!
//! with midpoints `m_i`, half spacings `r_i` and the `h`-free part
//! `V_n(p)` captured by [`Objective1D`].

use crate::error::{Error, Result};
use crate::measures::{TrimVector, FEASIBILITY_TOL};

/// `sign(t) * |t|^q`, the odd extension of `t^q`.
#[inline]
pub fn signed_pow(t: f64, q: f64) -> f64 {
    let a = t.abs();
    let mag = if q == 2.0 {
        a * a
    } else if q == 3.0 {
        a * a * a
    } else if q.fract() == 0.0 && q.abs() < 64.0 {
        a.powi(q as i32)
    } else {
        a.powf(q)
    };
    if t < 0.0 {
        -mag
    } else {
        mag
    }
}

#[inline]
pub(crate) fn abs_pow(t: f64, p: f64) -> f64 {
    signed_pow(t.abs(), p)
}

/// `f_p(y) = (1+|y|)^{p+1} + (1-|y|)^{(p+1)} - 2`, the (odd-extended) stage
/// penalty of the trimmed 1-D objective.
pub fn f_p(y: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("f_p needs p >= 1, got {p}")));
    }
    Ok(f_p_unchecked(y, p))
}

#[inline]
pub(crate) fn f_p_unchecked(y: f64, p: f64) -> f64 {
    let a = y.abs();
    signed_pow(1.0 + a, p + 1.0) + signed_pow(1.0 - a, p + 1.0) - 2.0
}

/// `int_a^b |c - t|^p dt` for `a <= b`.
#[inline]
pub(crate) fn abs_pow_integral(a: f64, b: f64, c: f64, p: f64) -> f64 {
    (signed_pow(b - c, p + 1.0) - signed_pow(a - c, p + 1.0)) / (p + 1.0)
}

/// A probability measure with finitely many atoms, kept sorted by location.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    locations: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Measure("measure has no atoms".into()));
        }
        if atoms.iter().any(|&(x, w)| !x.is_finite() || !(w >= 0.0)) {
            return Err(Error::Measure("atoms need finite locations and weights >= 0".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > FEASIBILITY_TOL {
            return Err(Error::Measure(format!("weights sum to {total}, not 1")));
        }
        let mut sorted = atoms.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self {
            locations: sorted.iter().map(|a| a.0).collect(),
            weights: sorted.iter().map(|a| a.1).collect(),
        })
    }

    /// Empirical measure of the given points.
    pub fn empirical(points: &[f64]) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        let atoms: Vec<(f64, f64)> = points.iter().map(|&x| (x, w)).collect();
        // Re-normalise the sum exactly to dodge rounding in 1/n.
        let mut m = Self::new(&atoms)?;
        let s: f64 = m.weights.iter().sum();
        m.weights.iter_mut().for_each(|w| *w /= s);
        Ok(m)
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut c: Vec<f64> = self
            .weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if let Some(last) = c.last_mut() {
            *last = 1.0;
        }
        c
    }
}

/// The laws `w_p_quantile` can compare.
#[derive(Debug, Clone, PartialEq)]
pub enum Law1d {
    Discrete(DiscreteMeasure),
    /// Lebesgue measure on `[0,1]`.
    Uniform,
}

/// Quantile function on a breakpoint-delimited piece of `(0,1)`.
enum Piece {
    Const(f64),
    Identity,
}

fn pieces(law: &Law1d) -> Vec<(f64, Piece)> {
    match law {
        Law1d::Uniform => vec![(1.0, Piece::Identity)],
        Law1d::Discrete(m) => m
            .cumulative()
            .into_iter()
            .zip(&m.locations)
            .map(|(c, &x)| (c, Piece::Const(x)))
            .collect(),
    }
}

/// `W_p(mu, nu)`, integrating `|F^{-1} - G^{-1}|^p` exactly over the merged
/// breakpoints of both quantile functions.
pub fn w_p_quantile(mu: &Law1d, nu: &Law1d, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p = {p} must be >= 1")));
    }
    let a = pieces(mu);
    let b = pieces(nu);
    let (mut i, mut j) = (0, 0);
    let mut t0 = 0.0;
    let mut total = 0.0;
    while i < a.len() && j < b.len() {
        let t1 = a[i].0.min(b[j].0);
        if t1 > t0 {
            total += match (&a[i].1, &b[j].1) {
                (Piece::Const(x), Piece::Const(y)) => (t1 - t0) * abs_pow(x - y, p),
                (Piece::Const(c), Piece::Identity) | (Piece::Identity, Piece::Const(c)) => {
                    abs_pow_integral(t0, t1, *c, p)
                }
                (Piece::Identity, Piece::Identity) => 0.0,
            };
            t0 = t1;
        }
        if a[i].0 <= t1 {
            i += 1;
        }
        if b[j].0 <= t1 {
            j += 1;
        }
    }
    Ok(total.max(0.0).powf(1.0 / p))
}

fn require_sorted(x: &[f64], strict: bool) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Precondition("empty sample".into()));
    }
    let ok = x
        .windows(2)
        .all(|w| if strict { w[1] > w[0] } else { w[1] >= w[0] });
    if !ok {
        let what = if strict { "strictly increasing" } else { "sorted" };
        return Err(Error::Precondition(format!("sample must be {what}")));
    }
    if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Precondition("points must lie in [0,1]".into()));
    }
    Ok(())
}

/// `W_p^p(P_n, U(0,1))` for a sorted sample, via
/// `1/(p+1) * sum_i [ (i/n - x_i)^{(p+1)} - ((i-1)/n - x_i)^{(p+1)} ]`.
pub fn w_p_empirical_to_uniform(x: &[f64], p: f64) -> Result<f64> {
    require_sorted(x, false)?;
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p = {p} must be >= 1")));
    }
    let n = x.len() as f64;
    let sum: f64 = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            signed_pow(hi - xi, p + 1.0) - signed_pow(lo - xi, p + 1.0)
        })
        .sum();
    Ok(sum / (p + 1.0))
}

/// The `h`-independent part of the trimmed 1-D cost and the data needed to
/// evaluate the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective1D {
    pub p: f64,
    /// `(x_1^{p+1} + (1-x_n)^{p+1}) / (p+1)`
    pub boundary_term: f64,
    /// `sum (x_{i+1}-x_i)^{p+1} / (2^p (p+1))`
    pub spacing_term: f64,
    pub midpoints: Vec<f64>,
    pub half_spacings: Vec<f64>,
}

impl Objective1D {
    /// `V_n(p)`, the lower bound of the trimmed cost.
    pub fn v_n(&self) -> f64 {
        self.boundary_term + self.spacing_term
    }

    /// Penalty of placing the `i`-th (0-based) interior breakpoint at `h`.
    #[inline]
    pub fn stage_cost(&self, i: usize, h: f64) -> f64 {
        let r = self.half_spacings[i];
        signed_pow(r, self.p + 1.0) * f_p_unchecked((h - self.midpoints[i]) / r, self.p)
            / (self.p + 1.0)
    }

    /// `W_p^p` between `U(0,1)` and the trimmed measure encoded by `h`.
    pub fn cost(&self, h: &TrimVector) -> Result<f64> {
        if h.h.len() != self.midpoints.len() {
            return Err(Error::Dimension(format!(
                "trim vector has {} entries, objective expects {}",
                h.h.len(),
                self.midpoints.len()
            )));
        }
        let extra: f64 = h.h.iter().enumerate().map(|(i, &hi)| self.stage_cost(i, hi)).sum();
        Ok(self.v_n() + extra)
    }
}

/// Splits the trimmed 1-D cost of a strictly increasing sample.
pub fn objective_terms(x: &[f64], p: f64) -> Result<Objective1D> {
    require_sorted(x, true)?;
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("p = {p} must be >= 1")));
    }
    let n = x.len();
    let q = p + 1.0;
    let boundary_term = (signed_pow(x[0], q) + signed_pow(1.0 - x[n - 1], q)) / q;
    let spacing_sum: f64 = x.windows(2).map(|w| signed_pow(w[1] - w[0], q)).sum();
    Ok(Objective1D {
        p,
        boundary_term,
        spacing_term: spacing_sum / (2f64.powf(p) * q),
        midpoints: x.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
        half_spacings: x.windows(2).map(|w| 0.5 * (w[1] - w[0])).collect(),
    })
}

/// Exact `E V_n(p)` for an i.i.d. `U(0,1)` sample of size `n`:
/// `Gamma(n+1) Gamma(p+2) / ((p+1) Gamma(n+p+2)) * (2 + (n-1)/2^p)`.
pub fn v_n_expectation(n: usize, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("p = {p} must be a finite real >= 1")));
    }
    let nf = n as f64;
    let log_ratio = libm::lgamma(nf + 1.0) + libm::lgamma(p + 2.0) - libm::lgamma(nf + p + 2.0);
    Ok(log_ratio.exp() / (p + 1.0) * (2.0 + (nf - 1.0) / 2f64.powf(p)))
}

/// `lim n^p E V_n(p) = Gamma(p+2) / (2^p (p+1))`.
pub fn v_n_scaled_limit(p: f64) -> f64 {
    libm::tgamma(p + 2.0) / (2f64.powf(p) * (p + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn f_p_examples() {
        assert!(close(f_p(0.5, 1.0).unwrap(), 0.5, 1e-15));
        assert!(close(f_p(2.0, 1.0).unwrap(), 6.0, 1e-15));
        assert!(close(f_p(1.5, 2.0).unwrap(), 13.5, 1e-13));
        for p in [1.0, 1.3, 2.0, 3.7] {
            assert_eq!(f_p(0.0, p).unwrap(), 0.0);
        }
        assert!(matches!(f_p(0.3, 0.9), Err(Error::Domain(_))));
    }

    #[test]
    fn f_p_known_closed_forms() {
        for k in 0..200 {
            let y = -5.0 + k as f64 * 0.05;
            let f1 = if y.abs() <= 1.0 { 2.0 * y * y } else { 2.0 * (2.0 * y.abs() - 1.0) };
            assert!(close(f_p(y, 1.0).unwrap(), f1, 1e-12));
            assert!(close(f_p(y, 2.0).unwrap(), 6.0 * y * y, 1e-11));
        }
    }

    #[test]
    fn quantile_examples() {
        let d = |pts: &[(f64, f64)]| Law1d::Discrete(DiscreteMeasure::new(pts).unwrap());
        let a = d(&[(0.25, 1.0)]);
        let b = d(&[(0.75, 1.0)]);
        assert!(close(w_p_quantile(&a, &b, 1.0).unwrap(), 0.5, 1e-15));
        assert_eq!(w_p_quantile(&a, &a, 2.0).unwrap(), 0.0);
        let p2 = d(&[(0.0, 0.5), (1.0, 0.5)]);
        let q2 = d(&[(0.5, 0.5), (0.5, 0.5)]);
        assert!(close(w_p_quantile(&p2, &q2, 1.0).unwrap(), 0.5, 1e-15));
        assert!(DiscreteMeasure::new(&[(0.1, 0.4), (0.2, 0.4)]).is_err());
        // U(0,1) against delta_{1/2}: int |t - 1/2| dt = 1/4.
        let half = d(&[(0.5, 1.0)]);
        assert!(close(w_p_quantile(&half, &Law1d::Uniform, 1.0).unwrap(), 0.25, 1e-15));
    }

    #[test]
    fn empirical_to_uniform_examples() {
        assert!(close(w_p_empirical_to_uniform(&[0.5], 1.0).unwrap(), 0.25, 1e-15));
        assert!(close(w_p_empirical_to_uniform(&[0.5], 2.0).unwrap(), 1.0 / 12.0, 1e-15));
        for n in [1usize, 2, 5, 40] {
            let x: Vec<f64> = (0..n).map(|i| (2 * i + 1) as f64 / (2 * n) as f64).collect();
            let w = w_p_empirical_to_uniform(&x, 1.0).unwrap();
            assert!(close(w, 1.0 / (4.0 * n as f64), 1e-14), "n={n}: {w}");
        }
        assert!(matches!(
            w_p_empirical_to_uniform(&[0.6, 0.2], 1.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn objective_examples() {
        let o = objective_terms(&[0.5], 1.0).unwrap();
        assert!(close(o.boundary_term, 0.25, 1e-15));
        assert_eq!(o.spacing_term, 0.0);
        assert!(o.midpoints.is_empty());

        let o = objective_terms(&[0.2, 0.8], 1.0).unwrap();
        assert!(close(o.boundary_term, 0.04, 1e-15));
        assert!(close(o.spacing_term, 0.09, 1e-15));
        assert!(close(o.midpoints[0], 0.5, 1e-15));
        assert!(close(o.half_spacings[0], 0.3, 1e-15));
        let at_mid = o.cost(&TrimVector::new(o.midpoints.clone())).unwrap();
        assert!(close(at_mid, o.v_n(), 1e-15));

        assert!(matches!(objective_terms(&[0.2, 0.2], 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn v_n_expectation_examples() {
        assert!(close(v_n_expectation(2, 1.0).unwrap(), 5.0 / 24.0, 1e-14));
        assert!(close(v_n_expectation(1, 1.0).unwrap(), 1.0 / 3.0, 1e-14));
        let big = 1_000_000usize;
        let scaled = big as f64 * v_n_expectation(big, 1.0).unwrap();
        assert!(close(scaled, 0.5, 1e-5));
        assert!(close(v_n_scaled_limit(1.0), 0.5, 1e-14));
        let scaled2 = (big as f64).powi(2) * v_n_expectation(big, 2.0).unwrap();
        assert!(close(scaled2, v_n_scaled_limit(2.0), 1e-4));
        assert!(v_n_expectation(0, 1.0).is_err());
    }

    /// Adaptive Simpson quadrature, used as an oracle independent of the
    /// closed forms above.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        if b <= a {
            return 0.0;
        }
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 40)
    }

    fn quadrature_cost(x: &[f64], h: &[f64], p: f64) -> f64 {
        let mut full = vec![0.0];
        full.extend_from_slice(h);
        full.push(1.0);
        x.iter()
            .enumerate()
            .map(|(i, &xi)| {
                let (a, b) = (full[i], full[i + 1]);
                let f = |t: f64| (xi - t).abs().powf(p);
                let split = xi.clamp(a, b);
                simpson(&f, a, split, 1e-14) + simpson(&f, split, b, 1e-14)
            })
            .sum()
    }

    fn sorted_points(raw: Vec<f64>) -> Vec<f64> {
        let mut x = raw;
        x.sort_by(f64::total_cmp);
        x.dedup();
        x
    }

    proptest! {
        #[test]
        fn f_p_even_convex_bounded(y in -10.0f64..10.0, z in -10.0f64..10.0, p in 1.0f64..4.0) {
            let f = |t: f64| f_p(t, p).unwrap();
            prop_assert!((f(y) - f(-y)).abs() <= 1e-12 * (1.0 + f(y).abs()));
            let mid = f(0.5 * (y + z));
            prop_assert!(mid <= 0.5 * (f(y) + f(z)) + 1e-9 * (1.0 + f(y).abs() + f(z).abs()));
            prop_assert!(f(y) <= 2f64.powf(p + 1.0) * (1.0 + (p + 1.0) * y.abs().powf(p)) + 1e-9);
            prop_assert!(f(y) >= -1e-12);
        }

        #[test]
        fn quantile_distance_is_a_metric(
            a in prop::collection::vec((0.0f64..1.0, 0.01f64..1.0), 1..5),
            b in prop::collection::vec((0.0f64..1.0, 0.01f64..1.0), 1..5),
            c in prop::collection::vec((0.0f64..1.0, 0.01f64..1.0), 1..5),
            p in 1.0f64..3.0,
        ) {
            let law = |atoms: &[(f64, f64)]| {
                let s: f64 = atoms.iter().map(|a| a.1).sum();
                let mut v: Vec<(f64, f64)> = atoms.iter().map(|&(x, w)| (x, w / s)).collect();
                let t: f64 = v.iter().map(|a| a.1).sum();
                v[0].1 += 1.0 - t;
                Law1d::Discrete(DiscreteMeasure::new(&v).unwrap())
            };
            let (a, b, c) = (law(&a), law(&b), law(&c));
            let ab = w_p_quantile(&a, &b, p).unwrap();
            let ba = w_p_quantile(&b, &a, p).unwrap();
            let bc = w_p_quantile(&b, &c, p).unwrap();
            let ac = w_p_quantile(&a, &c, p).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ac <= ab + bc + 1e-10);
        }

        #[test]
        fn closed_form_matches_grid_oracle(raw in prop::collection::vec(0.0f64..1.0, 1..8), p in 1.0f64..3.0) {
            let x = sorted_points(raw);
            let grid = 1_000_000usize;
            let w = 1.0 / grid as f64;
            let atoms: Vec<(f64, f64)> = (0..grid).map(|k| ((k as f64 + 0.5) * w, w)).collect();
            // Summing 10^6 weights drifts past the constructor's check.
            let uniform = DiscreteMeasure {
                locations: atoms.iter().map(|a| a.0).collect(),
                weights: atoms.iter().map(|a| a.1).collect(),
            };
            let empirical = Law1d::Discrete(DiscreteMeasure::empirical(&x).unwrap());
            let oracle = w_p_quantile(&empirical, &Law1d::Discrete(uniform), p).unwrap().powf(p);
            let exact = w_p_empirical_to_uniform(&x, p).unwrap();
            prop_assert!((oracle - exact).abs() <= 1e-5, "{} vs {}", oracle, exact);
            // The analytic uniform branch is exact.
            let analytic = w_p_quantile(&empirical, &Law1d::Uniform, p).unwrap().powf(p);
            prop_assert!((analytic - exact).abs() <= 1e-12);
        }

        #[test]
        fn decomposition_matches_quadrature(raw in prop::collection::vec(0.01f64..0.99, 1..7), mix in 0.0f64..1.0, alpha in 0.0f64..0.9, p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0])) {
            let x = sorted_points(raw);
            let n = x.len();
            let cap = 1.0 / (n as f64 * (1.0 - alpha));
            // A feasible h: blend of the uniform vector and the greedy
            // front-loaded vector.
            let h: Vec<f64> = (1..n)
                .map(|i| mix * (i as f64 * cap).min(1.0) + (1.0 - mix) * i as f64 / n as f64)
                .collect();
            let o = objective_terms(&x, p).unwrap();
            let direct = o.cost(&TrimVector::new(h.clone())).unwrap();
            let oracle = quadrature_cost(&x, &h, p);
            prop_assert!((direct - oracle).abs() <= 1e-10, "{} vs {}", direct, oracle);
        }
    }
}
