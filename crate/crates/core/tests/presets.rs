//! End-to-end checks on the benchmark datasets.

use ebransac_core::baselines::{exponential_mle, lms_fit, ransac_fit, ClosedForm, RansacConfig};
use ebransac_core::ebr::{fit, EbrConfig, InitSampler};
use ebransac_core::gibbs::{alternate_maximize, consensus_mask, SelectionVector};
use ebransac_core::models::{population_ebr_loss, ExponentialMixture, ExponentialModel, LinearRegressionModel};
use ebransac_core::synth::{generate, Preset, PresetSpec};
use ebransac_core::{DataPoint, Dataset};

fn mse(theta: &[f64]) -> f64 {
    ((theta[0] - 1.0).powi(2) + (theta[1] - 3.0).powi(2)) / 2.0
}

fn linreg_init() -> InitSampler {
    InitSampler::UniformBox {
        lower: vec![-5.0, -5.0],
        upper: vec![5.0, 10.0],
    }
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Sample mean within 4 standard errors of `mu`.
fn assert_mean(v: &[f64], mu: f64, sd: f64, what: &str) {
    let (m, _) = mean_var(v);
    let se = sd / (v.len() as f64).sqrt();
    assert!((m - mu).abs() <= 4.0 * se, "{what}: mean {m} vs {mu} (se {se})");
}

/// Sample variance within 4 standard errors of `var` (normal-theory error).
fn assert_var(v: &[f64], var: f64, what: &str) {
    let (_, s2) = mean_var(v);
    let se = var * (2.0 / (v.len() as f64 - 1.0)).sqrt();
    assert!((s2 - var).abs() <= 4.0 * se, "{what}: variance {s2} vs {var}");
}

fn split(spec: &PresetSpec) -> (Vec<DataPoint>, Vec<DataPoint>) {
    let g = generate(spec).unwrap();
    (g.inliers().cloned().collect(), g.outliers().cloned().collect())
}

#[test]
fn generator_moments_over_fifty_seeds() {
    for seed in 0..50 {
        let (inl, out) = split(&PresetSpec::linreg(seed));
        let xs: Vec<f64> = inl.iter().map(|p| p.x()).collect();
        let resid: Vec<f64> = inl.iter().map(|p| p.y() - p.x() - 3.0).collect();
        assert_mean(&xs, 0.0, 6.0 / 12f64.sqrt(), "linreg x");
        assert_mean(&resid, 0.0, 0.1, "linreg noise");
        assert_var(&resid, 0.01, "linreg noise");
        let ox: Vec<f64> = out.iter().map(|p| p.x()).collect();
        let oy: Vec<f64> = out.iter().map(|p| p.y()).collect();
        assert_mean(&ox, 1.0, 1.5, "linreg outlier x");
        assert_mean(&oy, 0.0, 1.5, "linreg outlier y");

        let (inl, out) = split(&PresetSpec::gaussian(seed));
        let xi: Vec<f64> = inl.iter().map(|p| p.x()).collect();
        let xo: Vec<f64> = out.iter().map(|p| p.x()).collect();
        assert_mean(&xi, -1.0, 0.2, "gaussian inliers");
        assert_var(&xi, 0.04, "gaussian inliers");
        assert_mean(&xo, 1.0, 0.1, "gaussian outliers");
        assert_var(&xo, 0.01, "gaussian outliers");

        let (inl, out) = split(&PresetSpec::exponential(seed));
        let xi: Vec<f64> = inl.iter().map(|p| p.x()).collect();
        let xo: Vec<f64> = out.iter().map(|p| p.x()).collect();
        assert_mean(&xi, 0.5, 0.5, "exponential inliers");
        assert_mean(&xo, 6.5, 1.0 / 12f64.sqrt(), "uniform outliers");
        assert!(xo.iter().all(|x| (6.0..=7.0).contains(x)));
    }
}

#[test]
fn exponential_ml_is_pulled_to_about_0_653() {
    for seed in 0..20 {
        let g = generate(&PresetSpec::exponential(seed)).unwrap();
        let lambda = exponential_mle(&g.dataset).unwrap();
        assert!((lambda - 0.653).abs() <= 0.05, "seed {seed}: {lambda}");
    }
}

#[test]
fn ebr_beats_lms_on_the_line_preset() {
    let data = generate(&PresetSpec::linreg(0)).unwrap().dataset;
    let (a, b) = lms_fit(&data).unwrap();
    let r = fit(&LinearRegressionModel, &data, &EbrConfig::new(5.0, linreg_init(), 1)).unwrap();
    assert!(mse(&r.theta) < mse(&[a, b]), "{:?} vs {:?}", r.theta, (a, b));
}

#[test]
fn ebr_rate_is_nearer_two_than_ml() {
    let data = generate(&PresetSpec::exponential(0)).unwrap().dataset;
    let init = InitSampler::UniformBox {
        lower: vec![0.05],
        upper: vec![5.0],
    };
    let r = fit(&ExponentialModel, &data, &EbrConfig::new(4.0, init, 1)).unwrap();
    let ml = exponential_mle(&data).unwrap();
    assert!((r.theta[0] - 2.0).abs() < (ml - 2.0).abs());
}

#[test]
fn ransac_on_the_line_preset() {
    let mut errs = Vec::new();
    for seed in 0..10 {
        let data = generate(&PresetSpec::linreg(seed)).unwrap().dataset;
        let cfg = RansacConfig {
            hypo_size: 2,
            iterations: 200,
            t_cons: 0.05,
            min_consensus: 50,
            local_opt: false,
            rng_seed: seed,
        };
        let r = ransac_fit(&LinearRegressionModel, &data, &cfg, &ClosedForm).unwrap();
        let (a, b) = lms_fit(&data).unwrap();
        assert!(mse(&r.theta) < mse(&[a, b]));
        errs.push(mse(&r.theta));
    }
    errs.sort_by(f64::total_cmp);
    // Median over seeds is about 1e-3, on par with EB-RANSAC.
    assert!(errs[5] < 0.01, "{errs:?}");
}

#[test]
fn local_optimization_never_scores_worse_without_outliers() {
    for seed in 0..10 {
        let g = generate(&PresetSpec::linreg(seed)).unwrap();
        let clean = Dataset::new(g.inliers().cloned().collect(), None).unwrap();
        let mut cfg = RansacConfig {
            hypo_size: 2,
            iterations: 50,
            t_cons: 1.0,
            min_consensus: 0,
            local_opt: false,
            rng_seed: seed,
        };
        let plain = ransac_fit(&LinearRegressionModel, &clean, &cfg, &ClosedForm).unwrap();
        cfg.local_opt = true;
        let lo = ransac_fit(&LinearRegressionModel, &clean, &cfg, &ClosedForm).unwrap();
        assert!(lo.score <= plain.score, "seed {seed}: {} > {}", lo.score, plain.score);
    }
}

#[test]
fn consensus_mask_at_the_true_line() {
    // (inliers kept, outliers excluded) for seeds 0..10 at beta = 5. Outliers
    // that fall within sqrt(5) of the line cannot be told apart from inliers.
    let recorded = [
        (100, 16),
        (100, 14),
        (100, 16),
        (100, 17),
        (100, 14),
        (100, 16),
        (100, 17),
        (100, 19),
        (100, 15),
        (100, 16),
    ];
    for (seed, &expected) in recorded.iter().enumerate() {
        let g = generate(&PresetSpec::linreg(seed as u64)).unwrap();
        let w = consensus_mask(&LinearRegressionModel, &[1.0, 3.0], &g.dataset, 5.0).unwrap();
        let kept = w.as_slice().iter().zip(&g.labels).filter(|(w, l)| **w && **l).count();
        let excluded = w.as_slice().iter().zip(&g.labels).filter(|(w, l)| !**w && !**l).count();
        assert_eq!((kept, excluded), expected, "seed {seed}");
        for (p, &sel) in g.dataset.points().iter().zip(w.as_slice()) {
            assert_eq!(sel, (p.y() - p.x() - 3.0).powi(2) < 5.0);
        }
    }
}

#[test]
fn alternation_from_two_inliers_lands_near_the_fit() {
    // The chain refits with hard weights, so outliers that sit close to the
    // line count fully. Seed 7 ends at about 3x the EB-RANSAC error; the
    // other nine stay within 2x.
    let mut within_two = 0;
    for seed in 0..10 {
        let g = generate(&PresetSpec::linreg(seed)).unwrap();
        let inliers: Vec<usize> = (0..g.labels.len()).filter(|&i| g.labels[i]).take(2).collect();
        let w0 = SelectionVector::from_indices(g.dataset.len(), &inliers).unwrap();
        let trace = alternate_maximize(&LinearRegressionModel, &g.dataset, 5.0, w0, &ClosedForm, 50).unwrap();
        assert!(trace.converged && trace.is_monotone(1e-12));
        let fitted = fit(
            &LinearRegressionModel,
            &g.dataset,
            &EbrConfig::new(5.0, linreg_init(), seed),
        )
        .unwrap();
        let ratio = mse(trace.final_theta().unwrap()) / mse(&fitted.theta);
        assert!(ratio < 3.0, "seed {seed}: ratio {ratio}");
        within_two += usize::from(ratio <= 2.0);
    }
    assert!(within_two >= 9, "{within_two}/10 within 2x");
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Composite trapezoid rule with `n` intervals.
fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h)).sum();
    h * (0.5 * f(a) + inner + 0.5 * f(b))
}

fn population_by_trapezoid(lambda: f64, beta: f64, r: f64) -> f64 {
    let sel = |x: f64| softplus(beta + lambda.ln() - lambda * x);
    let inlier = |x: f64| r * 2.0 * (-2.0 * x).exp() * sel(x);
    let n = 1_000_000;
    let total = trapezoid(inlier, 0.0, 6.0, n)
        + trapezoid(inlier, 6.0, 7.0, n)
        + trapezoid(inlier, 7.0, 60.0, n)
        + trapezoid(|x| (1.0 - r) * sel(x), 6.0, 7.0, n);
    -total + softplus(beta)
}

#[test]
fn population_loss_matches_trapezoid_oracle() {
    for &(lambda, beta, r) in &[
        (2.0, 5.0, 200.0 / 240.0),
        (0.65, 8.0, 200.0 / 240.0),
        (0.3, 6.5, 200.0 / 240.0),
        (4.0, 0.0, 1.0),
        (1.0, 6.5, 0.5),
    ] {
        let mix = ExponentialMixture::with_ratio(r);
        let fast = population_ebr_loss(lambda, beta, &mix).unwrap();
        let slow = population_by_trapezoid(lambda, beta, r);
        assert!((fast - slow).abs() <= 1e-8, "({lambda}, {beta}, {r}): {fast} vs {slow}");
    }
}

#[test]
fn preset_constants_are_documented_defaults() {
    let s = PresetSpec::linreg(0);
    assert_eq!((s.n_inliers, s.n_outliers), (100, 20));
    assert!(matches!(
        s.preset,
        Preset::Linreg {
            x_range: (-3.0, 3.0),
            noise_sd: 0.1,
            outlier_center: (1.0, 0.0),
            outlier_sd: 1.5,
            ..
        }
    ));
    let g = PresetSpec::gaussian(0);
    assert_eq!((g.n_inliers, g.n_outliers), (200, 40));
}
