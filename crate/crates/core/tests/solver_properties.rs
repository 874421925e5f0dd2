use proptest::prelude::*;
use trimot::harness::{sample_uniform, SOLVE_TOL};
use trimot::partial_matching::{solve_partial_matching, MatchingProblem};
use trimot::quantization::{quantization_cost_1d, quantization_cost_mc};
use trimot::stripe::{build_stripe_plan, stripe_cost, StripeCostMethod};
use trimot::trim1d::solve_trim1d;
use trimot::{Sample, TrimParams};

fn scaled(s: &Sample, lambda: f64) -> Sample {
    Sample::from_flat(s.dim(), s.flat().iter().map(|v| v * lambda).collect(), None).unwrap()
}

fn matching_cost(x: &Sample, y: &Sample, p: f64, alpha: f64) -> f64 {
    solve_partial_matching(&MatchingProblem::new(x.clone(), y.clone(), p, alpha).unwrap())
        .unwrap()
        .cost
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matching_symmetric_and_scale_covariant(
        seed in any::<u64>(),
        n in 2usize..40,
        d in 1usize..4,
        p in prop::sample::select(vec![1.0, 1.5, 2.0]),
        alpha in 0.0f64..0.8,
        lambda in 0.05f64..1.0,
    ) {
        let x = sample_uniform(n, d, seed);
        let y = sample_uniform(n, d, seed ^ 0xabcdef);
        let c = matching_cost(&x, &y, p, alpha);
        prop_assert!(c >= 0.0);
        let swapped = matching_cost(&y, &x, p, alpha);
        prop_assert!((c - swapped).abs() <= 1e-12 * (1.0 + c));
        let s = matching_cost(&scaled(&x, lambda), &scaled(&y, lambda), p, alpha);
        prop_assert!((s - lambda.powf(p) * c).abs() <= 1e-10 * (1.0 + c));
    }

    #[test]
    fn matching_nonincreasing_in_alpha(seed in any::<u64>(), n in 2usize..60, d in 1usize..3) {
        let x = sample_uniform(n, d, seed);
        let y = sample_uniform(n, d, seed.wrapping_add(1));
        let mut prev = f64::INFINITY;
        for alpha in [0.0, 0.1, 0.2, 0.4, 0.6, 0.8] {
            let c = matching_cost(&x, &y, 1.0, alpha);
            prop_assert!(c <= prev + 1e-12, "alpha {}: {} > {}", alpha, c, prev);
            prev = c;
        }
    }

    #[test]
    fn near_full_trimming_approaches_quantization(seed in any::<u64>(), n in 1usize..12, p in prop::sample::select(vec![1.0, 2.0])) {
        let x = sample_uniform(n, 1, seed).sorted_distinct().unwrap().values;
        let quant = quantization_cost_1d(&x, p).unwrap().cost;
        let trimmed = solve_trim1d(&x, &TrimParams::new(0.999, p).unwrap(), SOLVE_TOL).unwrap().cost;
        prop_assert!(quant <= trimmed + 1e-12);
        prop_assert!(trimmed - quant <= 1e-3, "{} vs {}", trimmed, quant);
    }
}

#[test]
fn large_sparse_instance_keeps_invariants() {
    // Above the candidate-list threshold in several dimensions.
    for d in [1, 2, 4] {
        let x = sample_uniform(600, d, 10 + d as u64);
        let y = sample_uniform(600, d, 20 + d as u64);
        let r = solve_partial_matching(&MatchingProblem::new(x, y, 2.0, 0.3).unwrap()).unwrap();
        assert_eq!(r.pairing.len(), 420);
        assert_eq!(r.kept_x.len(), 420);
        assert_eq!(r.kept_y.len(), 420);
        assert!(r.stats.augmentations >= 420);
    }
}

#[test]
fn stripe_cost_sits_between_quantization_and_bound() {
    let params = TrimParams::new(0.7, 2.0).unwrap();
    let mut checked = 0;
    for seed in 0..200u64 {
        let s = sample_uniform(100, 2, seed);
        let plan = build_stripe_plan(&s, &params).unwrap();
        if !plan.feasible {
            continue;
        }
        let map = stripe_cost(&plan, StripeCostMethod::Exact).unwrap();
        let quant = quantization_cost_mc(&s, 2.0, 50_000, seed).unwrap();
        assert!(quant.cost <= map.cost + 3.0 * quant.mc_std_error.unwrap());
        assert!(map.cost <= map.upper_bound);
        checked += 1;
        if checked == 10 {
            break;
        }
    }
    assert_eq!(checked, 10);
}
