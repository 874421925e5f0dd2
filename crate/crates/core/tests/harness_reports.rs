use trimot::harness::{
    emit_report, fit_loglog_slope, run_experiment, run_experiment_with, ExperimentConfig, RateRow, RateTable,
    Statistic,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_table() -> RateTable {
    let rows = vec![
        RateRow { n: 10, rep: 0, value: Some(0.5) },
        RateRow { n: 10, rep: 1, value: Some(0.25) },
        RateRow { n: 20, rep: 0, value: None },
        RateRow { n: 20, rep: 1, value: Some(0.125) },
    ];
    RateTable::from_rows(Statistic::Trim1dCost, 1, 1.0, 0.25, rows)
}

#[test]
fn golden_csv() {
    let t = tiny_table();
    let prefix = "trim1d_cost,1,1.0000000000000000e0,2.5000000000000000e-1";
    assert_eq!(
        t.rows_csv(),
        format!(
            "statistic,d,p,alpha,n,rep,value,excluded\n\
             {prefix},10,0,5.0000000000000000e-1,0\n\
             {prefix},10,1,2.5000000000000000e-1,0\n\
             {prefix},20,0,NaN,1\n\
             {prefix},20,1,1.2500000000000000e-1,0\n"
        )
    );
    assert_eq!(
        t.summary_csv(),
        format!(
            "statistic,d,p,alpha,n,mean,stderr,n_included\n\
             {prefix},10,3.7500000000000000e-1,1.2500000000000000e-1,2\n\
             {prefix},20,1.2500000000000000e-1,NaN,1\n"
        )
    );
    assert_eq!(t.slope_csv(), format!("statistic,d,p,alpha,slope,slope_se\n{prefix},NaN,NaN\n"));
}

#[test]
fn svg_is_well_formed() {
    let rows = (0..4)
        .flat_map(|k| {
            let n = 10usize << k;
            (0..3).map(move |rep| RateRow { n, rep, value: Some((1.0 + rep as f64 * 0.01) / n as f64) })
        })
        .collect();
    let t = RateTable::from_rows(Statistic::Quantization, 2, 2.0, 0.0, rows);
    let svg = t.svg();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert_eq!(root.attribute("width"), Some("800"));
    assert_eq!(root.attribute("height"), Some("600"));
    assert_eq!(doc.descendants().filter(|n| n.has_tag_name("circle")).count(), 4);
    assert!(doc.descendants().any(|n| n.has_tag_name("line") && n.attribute("stroke") == Some("red")));
    assert!(!svg.contains("href"));
}

#[test]
fn empty_table_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports");
    let t = RateTable::from_rows(Statistic::PartialMatch, 2, 1.0, 0.1, Vec::new());
    assert!(emit_report(&t, &out).is_err());
    assert!(!out.exists());
}

#[test]
fn emitted_files_match_table() {
    let dir = tempfile::tempdir().unwrap();
    let t = tiny_table();
    let paths = emit_report(&t, dir.path()).unwrap();
    assert_eq!(std::fs::read_to_string(&paths.rows).unwrap(), t.rows_csv());
    assert_eq!(std::fs::read_to_string(&paths.summary).unwrap(), t.summary_csv());
    assert!(paths.svg.ends_with("trim1d_cost_loglog.svg"));
}

#[test]
fn synthetic_power_law_slope() {
    let cfg = ExperimentConfig::new(Statistic::Trim1dCost, 1, 1.0, 0.25, vec![10, 100, 1000, 10_000], 5, 3);
    let t = run_experiment_with(&cfg, |n, _, _| Ok(Some(2.5 / n as f64))).unwrap();
    let fit = t.slope.unwrap();
    assert!((fit.slope + 1.0).abs() < 1e-12);
    assert!(fit.slope_se < 1e-12);
}

#[test]
fn standard_errors_shrink_like_root_reps() {
    // Constant-variance synthetic values: uniform noise around 1.
    let mut ratios = Vec::new();
    let mut prev = None;
    for reps in [100, 400, 1600] {
        let cfg = ExperimentConfig::new(Statistic::Trim1dCost, 1, 1.0, 0.25, vec![10, 20, 40], reps, 8);
        let t = run_experiment_with(&cfg, |_, _, seed| {
            Ok(Some(1.0 + ChaCha8Rng::seed_from_u64(seed).random::<f64>()))
        })
        .unwrap();
        let se = t.summaries.iter().map(|s| s.stderr).sum::<f64>() / 3.0;
        let expected = (1.0 / 12.0 / reps as f64).sqrt();
        assert!((se / expected - 1.0).abs() < 0.15, "reps {reps}: {se} vs {expected}");
        if let Some(p) = prev {
            ratios.push(p / se);
        }
        prev = Some(se);
    }
    for r in ratios {
        assert!((r - 2.0).abs() < 0.3, "{r}");
    }
}

#[test]
fn exclusions_are_counted() {
    let cfg = ExperimentConfig::new(Statistic::StripeBound, 2, 2.0, 0.25, vec![16, 64, 256], 20, 4);
    let t = run_experiment(&cfg).unwrap();
    for s in &t.summaries {
        assert_eq!(s.n_included + s.n_excluded, 20);
        let excluded_rows = t.rows.iter().filter(|r| r.n == s.n && r.value.is_none()).count();
        assert_eq!(excluded_rows, s.n_excluded);
        assert_eq!(t.exclusion_rate(s.n).unwrap(), s.n_excluded as f64 / 20.0);
    }
    let csv = t.rows_csv();
    assert_eq!(csv.lines().filter(|l| l.ends_with(",1")).count(), t.rows.iter().filter(|r| r.value.is_none()).count());
}

#[test]
fn summaries_agree_with_rows() {
    let cfg = ExperimentConfig::new(Statistic::Quantization, 1, 1.0, 0.0, vec![8, 16, 32], 10, 2);
    let t = run_experiment(&cfg).unwrap();
    for s in &t.summaries {
        let vals: Vec<f64> = t.rows.iter().filter(|r| r.n == s.n).map(|r| r.value.unwrap()).collect();
        assert!(vals.iter().all(|v| v.is_finite() && *v >= 0.0));
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert_eq!(mean, s.mean);
    }
    let pairs: Vec<(f64, f64)> = t.summaries.iter().map(|s| (s.n as f64, s.mean)).collect();
    assert_eq!(fit_loglog_slope(&pairs).unwrap(), t.slope.unwrap());
}

#[test]
fn workers_do_not_change_output() {
    for (statistic, d, alpha) in [(Statistic::UntrimmedMatch, 3, 0.0), (Statistic::Untrimmed1dCost, 1, 0.0)] {
        let run = |workers| {
            let mut cfg = ExperimentConfig::new(statistic, d, 1.5, alpha, vec![5, 10, 20], 5, 77);
            cfg.workers = workers;
            let t = run_experiment(&cfg).unwrap();
            (t.rows_csv(), t.summary_csv(), t.slope_csv(), t.svg())
        };
        assert_eq!(run(1), run(4));
    }
}
