use ndarray::{array, Array1, Array2};
use slowkill::bench::metrics::{misclass_rate, miss_rate, pred_error_regression};
use slowkill::bench::rip::{estimate_rip, estimate_rip_exhaustive, rip_ratio, rip_ratio_curve, CurveSpec, GramSampler};
use slowkill::bench::rng::{derive_seed, substream};
use slowkill::bench::synthetic::{gen_design_rows, generate, sigma_dense, sigma_matvec, CovKind, Model, Signal, SyntheticSpec};
use slowkill::bench::{run_experiment, ExperimentSpec, Method};
use rand::Rng;

fn sample_cov(x: &Array2<f64>) -> Array2<f64> {
    x.t().dot(x) / x.nrows() as f64
}

#[test]
fn design_second_moments_match_covariance() {
    for (cov, tau) in [(CovKind::Toeplitz, 0.9), (CovKind::EqualCorrelation, 0.9), (CovKind::Identity, 0.0)] {
        let x = gen_design_rows(10_000, 12, cov, tau, 77, "design").unwrap();
        let got = sample_cov(&x);
        let want = sigma_dense(cov, tau, 12);
        // standard error of a sample covariance is at most √(2/n) ≈ 0.014
        let worst = (&got - &want).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(worst < 0.06, "{cov:?}: max deviation {worst}");
        let means = x.mean_axis(ndarray::Axis(0)).unwrap();
        assert!(means.iter().all(|m| m.abs() < 0.06));
    }
}

#[test]
fn structured_matvec_equals_dense() {
    let v = Array1::from_shape_fn(37, |i| ((i * 7 % 11) as f64) - 5.0);
    for (cov, tau) in [(CovKind::Toeplitz, 0.7), (CovKind::EqualCorrelation, 0.3), (CovKind::Identity, 0.0)] {
        let dense = sigma_dense(cov, tau, 37).dot(&v);
        let fast = sigma_matvec(cov, tau, v.view());
        assert!((&dense - &fast).iter().all(|d| d.abs() < 1e-10));
    }
}

#[test]
fn generation_is_deterministic_and_seed_sensitive() {
    let spec = SyntheticSpec {
        n: 30,
        p: 50,
        s: 3,
        tau: 0.5,
        cov: CovKind::Toeplitz,
        model: Model::Regression { sigma: 1.0 },
        signal: Signal::Magnitude(1.0),
        seed: 5,
    };
    let a = generate(&spec).unwrap();
    let b = generate(&spec).unwrap();
    assert_eq!(a.x, b.x);
    assert_eq!(a.y, b.y);
    assert_eq!(a.support, vec![0, 10, 20]);
    let c = generate(&SyntheticSpec { seed: 6, ..spec.clone() }).unwrap();
    assert_ne!(a.x, c.x);
    // rows depend only on (seed, row index)
    let taller = generate(&SyntheticSpec { n: 40, ..spec }).unwrap();
    assert_eq!(taller.x.slice(ndarray::s![..30, ..]), a.x);
    assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
    let mut s1 = substream(9, "x", 3);
    let mut s2 = substream(9, "x", 3);
    assert_eq!(s1.random::<u64>(), s2.random::<u64>());
}

#[test]
fn classification_labels_follow_sign_of_signal() {
    let spec = SyntheticSpec {
        n: 200,
        p: 40,
        s: 2,
        tau: 0.0,
        cov: CovKind::Identity,
        model: Model::Classification,
        signal: Signal::Magnitude(1.0),
        seed: 3,
    };
    let d = generate(&spec).unwrap();
    let (xt, yt) = d.test.as_ref().unwrap();
    assert_eq!(misclass_rate(d.beta_star.view(), 0.0, d.x.view(), d.y.view()).unwrap(), 0.0);
    assert_eq!(misclass_rate(d.beta_star.view(), 0.0, xt.view(), yt.view()).unwrap(), 0.0);
    let flipped = d.beta_star.mapv(|v| -v);
    assert_eq!(misclass_rate(flipped.view(), 0.0, xt.view(), yt.view()).unwrap(), 100.0);
}

#[test]
fn metric_oracles() {
    assert_eq!(miss_rate(&[0, 5], &[0, 10, 20, 30]).unwrap(), 0.75);
    // 10·dᵀΣd with d = e0 − e1 under Toeplitz τ: 10·(2 − 2τ)
    let e = pred_error_regression(array![1.0, -1.0, 0.0].view(), Array1::zeros(3).view(), CovKind::Toeplitz, 0.9).unwrap();
    assert!((e - 2.0).abs() < 1e-12);
    let x = array![[1.0], [-1.0], [2.0], [-3.0]];
    let y = array![1.0, 1.0, 1.0, 0.0];
    assert_eq!(misclass_rate(array![1.0].view(), 0.0, x.view(), y.view()).unwrap(), 25.0);
    assert_eq!(misclass_rate(array![1.0].view(), 1.5, x.view(), y.view()).unwrap(), 0.0);
}

#[test]
fn sampled_rip_is_an_inner_bound_of_exhaustive() {
    let x = gen_design_rows(15, 10, CovKind::Toeplitz, 0.6, 1, "design").unwrap();
    for s in 1..=4 {
        let full = estimate_rip_exhaustive(x.view(), s).unwrap();
        let sampled = estimate_rip(x.view(), s, 30, 2).unwrap();
        assert!(sampled.rho_minus >= full.rho_minus - 1e-12);
        assert!(sampled.rho_plus <= full.rho_plus + 1e-12);
        assert!(full.rho_minus <= full.rho_plus);
    }
}

#[test]
fn more_samples_refine_monotonically() {
    let x = gen_design_rows(40, 60, CovKind::EqualCorrelation, 0.3, 4, "design").unwrap();
    let sampler = GramSampler::new(x.view());
    let mut prev = sampler.estimate(5, 10, 8).unwrap();
    for samples in [20, 80, 320] {
        let e = sampler.estimate(5, samples, 8).unwrap();
        assert!(e.rho_minus <= prev.rho_minus && e.rho_plus >= prev.rho_plus);
        prev = e;
    }
}

#[test]
fn orthonormal_design_has_ratio_four_theta() {
    let x = Array2::<f64>::eye(12);
    let e = estimate_rip_exhaustive(x.view(), 4).unwrap();
    assert_eq!(rip_ratio(1, e, e), 4.0);
    assert_eq!(rip_ratio(3, e, e), 12.0);
}

#[test]
fn small_curve_runs_both_modes() {
    let spec = CurveSpec {
        n: 30,
        p: 10,
        s: 1,
        tau: 0.5,
        cov: CovKind::Toeplitz,
        theta_grid: vec![1, 2],
        samples: 200,
        exhaustive: true,
        reps: 3,
        seed: 1,
    };
    let full = rip_ratio_curve(&spec).unwrap();
    let sampled = rip_ratio_curve(&CurveSpec { exhaustive: false, ..spec.clone() }).unwrap();
    assert_eq!(full.len(), 2);
    for (f, s) in full.iter().zip(&sampled) {
        assert_eq!((f.theta, f.q), (s.theta, s.q));
        // sampling can only overstate the ratio
        assert!(s.mean_ratio >= f.mean_ratio - 1e-12);
    }
    assert!(rip_ratio_curve(&CurveSpec { theta_grid: vec![6], ..spec }).is_err());
}

#[test]
fn experiment_is_reproducible() {
    let mut spec = ExperimentSpec::preset("table41-toeplitz").unwrap();
    spec.data.n = 60;
    spec.data.p = 150;
    spec.reps = 3;
    spec.seed = 11;
    let a = run_experiment(&spec).unwrap();
    let b = run_experiment(&spec).unwrap();
    assert_eq!(a.records.len(), 6);
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!((x.replicate, x.method, &x.support, x.error, x.miss_rate), (y.replicate, y.method, &y.support, y.error, y.miss_rate));
    }
    assert_eq!(a.summaries.len(), 2);
    assert_eq!(a.summaries[0].method, Method::SlowKill);
    let sk: Vec<f64> = a.records.iter().filter(|r| r.method == Method::SlowKill).map(|r| r.miss_rate).collect();
    let mean = sk.iter().sum::<f64>() / sk.len() as f64;
    assert!((a.summaries[0].miss_mean - mean).abs() < 1e-12);
}
