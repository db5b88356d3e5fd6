//! Monte Carlo checks against closed forms. Every test uses a fixed seed.

use std::f64::consts::LN_2;

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use gtlab::analysis::good_test_counts;
use gtlab::decode::{deletion_pipeline, subset_decode, Frontend, InnerDecoder, PipelineParams, SubsetParams};
use gtlab::design::{bernoulli_design, ncc_design, DesignSpec};
use gtlab::harness::{run_experiment, write_trials_csv, ExperimentConfig, SizeChoice, TestsChoice};
use gtlab::model::{generate_outcomes, sample_defectives, PriorSpec};
use gtlab::seed::rng_from_seed;
use gtlab::DecoderId;

fn chi_square_p(observed: &[f64], expected: &[f64]) -> f64 {
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    ChiSquared::new((observed.len() - 1) as f64).unwrap().sf(stat)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn bernoulli_density_within_four_sigma() {
    let (n, t, p) = (1000, 200, 0.05);
    let d = bernoulli_design(n, t, p, 99).unwrap();
    let entries = (n * t) as f64;
    let sigma = (p * (1.0 - p) / entries).sqrt();
    let density = d.nnz() as f64 / entries;
    assert!((density - p).abs() <= 4.0 * sigma, "density {density}");
}

#[test]
fn near_one_density_within_three_sigma() {
    let p = 0.999;
    let mut ones = 0usize;
    let mut entries = 0usize;
    for seed in 0..16_667u64 {
        let d = bernoulli_design(3, 2, p, seed).unwrap();
        ones += d.nnz();
        entries += 6;
    }
    let sigma = (p * (1.0 - p) / entries as f64).sqrt();
    let density = ones as f64 / entries as f64;
    assert!(entries >= 100_000);
    assert!((density - p).abs() <= 3.0 * sigma, "density {density}");
}

/// `P(D = d)` for the number of distinct values among `l` uniform draws
/// from `t`, via inclusion-exclusion surjection counts.
fn collision_law(t: usize, l: u32) -> Vec<f64> {
    let choose = |a: usize, b: usize| -> f64 { (0..b).map(|i| (a - i) as f64 / (i + 1) as f64).product() };
    (1..=t.min(l as usize))
        .map(|d| {
            let surj: f64 = (0..=d)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    sign * choose(d, j) * ((d - j) as f64).powi(l as i32)
                })
                .sum();
            choose(t, d) * surj / (t as f64).powi(l as i32)
        })
        .collect()
}

#[test]
fn ncc_distinct_tests_follow_collision_law() {
    let (t, l) = (4usize, 4u32);
    let law = collision_law(t, l);
    assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let samples = 10_000;
    let mut counts = vec![0.0; law.len()];
    let mut total = 0.0;
    for seed in 0..samples as u64 {
        let d = ncc_design(2, t, l as usize, seed).unwrap();
        let w = d.col(0).len();
        assert!(w >= 1 && w <= l as usize);
        assert!(d.col(1).len() <= l as usize);
        counts[w - 1] += 1.0;
        total += w as f64;
    }
    let mean = total / samples as f64;
    let expected_mean = t as f64 * (1.0 - (1.0 - 1.0 / t as f64).powi(l as i32));
    assert!((expected_mean - 2.734375).abs() < 1e-12);
    assert!((mean - expected_mean).abs() < 0.03, "mean distinct {mean}");
    let expected: Vec<f64> = law.iter().map(|q| q * samples as f64).collect();
    assert!(chi_square_p(&counts, &expected) > 0.01);
}

#[test]
fn positive_fraction_near_half() {
    let (n, t, k) = (100, 50, 10);
    let p = LN_2 / k as f64;
    let mut rng = rng_from_seed(5);
    let fractions: Vec<f64> = (0..10_000)
        .map(|_| {
            let d = bernoulli_design(n, t, p, rng.random()).unwrap();
            let s = sample_defectives(&PriorSpec::Combinatorial { k }, n, &mut rng).unwrap();
            generate_outcomes(&d, &s).unwrap().positives() as f64 / t as f64
        })
        .collect();
    let (mean, se) = mean_and_se(&fractions);
    let exact = 1.0 - (1.0 - p).powi(k as i32);
    assert!((mean - exact).abs() <= 3.0 * se, "mean {mean} vs {exact}");
    assert!((mean - 0.5).abs() < 0.02);
}

#[test]
fn combinatorial_prior_is_uniform() {
    let mut rng = rng_from_seed(8);
    let pairs: Vec<Vec<usize>> =
        (0..4).flat_map(|a| (a + 1..4).map(move |b| vec![a, b])).collect();
    let mut counts = vec![0.0; 6];
    let samples = 100_000;
    for _ in 0..samples {
        let s = sample_defectives(&PriorSpec::Combinatorial { k: 2 }, 4, &mut rng).unwrap();
        let idx = pairs.iter().position(|p| p == s.members()).unwrap();
        counts[idx] += 1.0;
    }
    assert!(chi_square_p(&counts, &[samples as f64 / 6.0; 6]) > 0.01);
}

#[test]
fn trim_prior_hits_k() {
    let mut rng = rng_from_seed(21);
    let prior = PriorSpec::IidThenTrim { k: 100 };
    let trials = 2000;
    let hits = (0..trials).filter(|_| sample_defectives(&prior, 10_000, &mut rng).unwrap().len() == 100).count();
    assert!(hits as f64 / trials as f64 >= 0.99, "{hits}/{trials}");
}

#[test]
fn good_test_mean_matches_closed_form() {
    let (n, t, k) = (200, 100, 10);
    let p = LN_2 / k as f64;
    let mut rng = rng_from_seed(13);
    let g: Vec<f64> = (0..10_000)
        .map(|_| {
            let d = bernoulli_design(n, t, p, rng.random()).unwrap();
            let s = sample_defectives(&PriorSpec::Combinatorial { k }, n, &mut rng).unwrap();
            good_test_counts(&d, &s)[0] as f64
        })
        .collect();
    let (mean, se) = mean_and_se(&g);
    let exact = t as f64 * p * (1.0 - p).powi(k as i32 - 1);
    assert!((mean - exact).abs() <= 3.0 * se, "mean {mean} vs {exact}");
}

#[test]
fn subset_with_true_base_stays_inside() {
    let (n, k) = (50, 5);
    let t = (k as f64 * (n as f64 / k as f64).log2() * 1.5).ceil() as usize;
    let mut rng = rng_from_seed(34);
    let mut inside = 0;
    for _ in 0..100 {
        let d = DesignSpec::bernoulli_default().build(n, k, t, rng.random()).unwrap();
        let s = sample_defectives(&PriorSpec::Combinatorial { k }, n, &mut rng).unwrap();
        let y = generate_outcomes(&d, &s).unwrap();
        let params = SubsetParams::new(0.2, Frontend::Provided(s.members().to_vec()));
        let out = subset_decode(&d, &y, k, &params).unwrap();
        inside += usize::from(out.estimate.iter().all(|&i| s.contains(i)));
    }
    assert_eq!(inside, 100, "estimate inside S in {inside}/100 trials");
}

#[test]
fn pipeline_with_dd_returns_subsets() {
    let (n, k, alpha) = (10_000, 100, 0.5);
    let t = ((1.0 - alpha) * k as f64 * (n as f64 / k as f64).log2() * 2.0).ceil() as usize;
    let params = PipelineParams::new(alpha, InnerDecoder::Dd);
    let mut rng = rng_from_seed(55);
    let mut inside = 0;
    for trial in 0..200u64 {
        let s = sample_defectives(&PriorSpec::Combinatorial { k }, n, &mut rng).unwrap();
        let out = deletion_pipeline(&DesignSpec::ncc_default(), &s, t, &params, trial).unwrap();
        if out.estimate.iter().all(|&i| s.contains(i)) {
            inside += 1;
        }
    }
    assert!(inside >= 180, "{inside}/200");
}

#[test]
fn outcomes_have_no_lag_one_correlation() {
    let cfg = ExperimentConfig {
        n: 500,
        size: SizeChoice::K(10),
        tests: TestsChoice::Tests(90),
        decoder: DecoderId::Dd,
        criterion: Some(gtlab::Criterion::Subset(0.2)),
        trials: 2000,
        master_seed: 77,
        workers: 4,
        ..Default::default()
    };
    let summary = run_experiment(&cfg).unwrap();
    let x: Vec<f64> = summary
        .records
        .iter()
        .map(|r| if r.outcome == gtlab::harness::TrialOutcome::Success { 1.0 } else { 0.0 })
        .collect();
    let m = x.iter().sum::<f64>() / x.len() as f64;
    assert!(m > 0.05 && m < 0.95, "degenerate success rate {m}");
    let var: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    let cov: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    let z = cov / var * (x.len() as f64).sqrt();
    let p = 2.0 * Normal::standard().sf(z.abs());
    assert!(p > 0.01, "lag-1 z = {z}");
}

#[test]
fn error_rate_recomputes_from_csv() {
    let cfg = ExperimentConfig {
        n: 300,
        size: SizeChoice::K(8),
        tests: TestsChoice::Tests(80),
        decoder: DecoderId::Comp,
        trials: 300,
        master_seed: 3,
        ..Default::default()
    };
    let summary = run_experiment(&cfg).unwrap();
    let mut buf = Vec::new();
    write_trials_csv(&cfg, &summary, &mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    let (mut failures, mut included) = (0usize, 0usize);
    for row in reader.records() {
        match &row.unwrap()[11] {
            "1" => included += 1,
            "0" => {
                included += 1;
                failures += 1;
            }
            other => assert_eq!(other, "refused"),
        }
    }
    assert_eq!(included, summary.included);
    assert_eq!(failures as f64 / included as f64, summary.p_error);
    assert!(summary.p_error > 0.0 && summary.p_error < 1.0);
}
