use ndarray::{array, Array1, Array2, Axis};
use slowkill::bench::synthetic::{gen_design_rows, CovKind};
use slowkill::schedules::ScheduleSpec;
use slowkill::solver::{
    fit, fit_from, fit_observed, fixed_point_residual, iht_baseline, polish, refit, residual_on, step, Phase,
    Problem, SolverConfig, SolverState,
};
use slowkill::thresholding::{quantile_threshold, ThresholdPolicy, TieMode};
use slowkill::Error;

fn sparse_problem(n: usize, p: usize, seed: u64) -> (Problem<f64>, Array1<f64>) {
    let x = gen_design_rows(n, p, CovKind::Toeplitz, 0.5, seed, "design").unwrap();
    let mut beta = Array1::zeros(p);
    for (k, &j) in [1usize, 8, 20, 33].iter().enumerate() {
        beta[j] = if k % 2 == 0 { 2.0 } else { -1.5 };
    }
    let noise = gen_design_rows(n, 1, CovKind::Identity, 0.0, seed, "noise").unwrap();
    let y = x.dot(&beta) + noise.column(0).mapv(|v| 0.05 * v);
    (Problem::regression(x, y).unwrap(), beta)
}

#[test]
fn identity_design_recovers_top_entries() {
    let y = array![0.1, 5.0, -0.2, -4.0, 0.3, 3.0, 0.0, 0.05];
    let problem = Problem::regression(Array2::eye(8), y.clone()).unwrap();
    let mut config = SolverConfig::slow_kill(3);
    config.schedule = ScheduleSpec::inverse(10, 3);
    config.eta0 = 0.5;
    let r = fit(&problem, &config).unwrap();
    assert_eq!(r.support, vec![1, 3, 5]);
    // with X = I the fixed point is y/(1 + η0) on the support
    for &j in &r.support {
        assert!((r.coefficients[[j, 0]] - y[j] / 1.5).abs() < 1e-8);
    }
    assert!(r.converged(config.polish_tol));
}

#[test]
fn iht_matches_slow_kill_on_orthogonal_design() {
    let y = array![1.0, -7.0, 2.5, 0.2, 6.0, -3.0, 0.7, 4.0, -0.1, 0.0];
    let problem = Problem::regression(Array2::eye(10), y).unwrap();
    let a = iht_baseline(&problem, 4, 100).unwrap();
    let mut config = SolverConfig::slow_kill(4);
    config.eta0 = 0.0;
    config.schedule = ScheduleSpec::inverse(20, 4);
    let b = fit(&problem, &config).unwrap();
    assert_eq!(a.support, vec![1, 4, 5, 7]);
    assert_eq!(a.support, b.support);
    assert!((&a.coefficients - &b.coefficients).iter().all(|v| v.abs() < 1e-10));
}

#[test]
fn first_step_from_zero_screens_by_marginal_correlation() {
    let (problem, _) = sparse_problem(60, 120, 5);
    let config = SolverConfig::slow_kill(4);
    let mut state = SolverState::new(&problem, None, 1.0, TieMode::LowestIndexWins).unwrap();
    let report = step(&mut state, &problem, &config).unwrap();
    assert_eq!(report.q, 60);
    let x = problem.design().view().to_owned();
    let corr = x.t().dot(&problem.response().column(0));
    let mut order: Vec<usize> = (0..120).collect();
    order.sort_by(|&a, &b| corr[b].abs().total_cmp(&corr[a].abs()));
    let mut want = order[..60].to_vec();
    want.sort_unstable();
    assert_eq!(state.support(), want);
}

#[test]
fn step_equals_direct_update() {
    let (problem, _) = sparse_problem(50, 80, 9);
    let config = SolverConfig::slow_kill(4);
    let mut state = SolverState::new(&problem, None, 50.0, TieMode::LowestIndexWins).unwrap();
    for _ in 0..5 {
        step(&mut state, &problem, &config).unwrap();
    }
    let before = state.beta.column(0).to_owned();
    let report = step(&mut state, &problem, &config).unwrap();
    let x = problem.design().view().to_owned();
    let grad = x.t().dot(&(x.dot(&before) - problem.response().column(0)));
    let z: Vec<f64> = (&before - &grad.mapv(|g| g / report.rho)).to_vec();
    let want = quantile_threshold(&z, report.q, report.eta_bar, &ThresholdPolicy::default()).unwrap();
    for (a, b) in state.beta.column(0).iter().zip(&want) {
        assert!((a - b).abs() < 1e-10 * b.abs().max(1.0));
    }
}

#[test]
fn objective_descends_on_accepted_steps() {
    let (problem, _) = sparse_problem(80, 200, 13);
    let mut config = SolverConfig::slow_kill(6);
    config.schedule = ScheduleSpec::constant(50, 6);
    config.eta0 = 1.0;
    let mut prev = f64::INFINITY;
    fit_observed(&problem, &config, None, |e| {
        if e.report.accepted {
            assert!(e.report.objective <= prev + 1e-9 * prev.abs().max(1.0));
        }
        prev = e.report.objective;
    })
    .unwrap();
}

#[test]
fn intercept_is_never_thresholded_or_shrunk() {
    let x = gen_design_rows(200, 30, CovKind::Identity, 0.0, 2, "design").unwrap();
    let eta = x.column(3).mapv(|v| 3.0 * v) + x.column(7).mapv(|v| -2.0 * v) + 1.5;
    let y = eta.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let problem = Problem::logistic(x, y, true).unwrap();
    let mut config = SolverConfig::slow_kill(2);
    config.eta0 = 1.0;
    config.schedule = ScheduleSpec::inverse(30, 2);
    let r = fit(&problem, &config).unwrap();
    assert_eq!(r.support, vec![3, 7]);
    assert_eq!(r.coefficients.nrows(), 30);
    let b = r.intercept.as_ref().unwrap()[0];
    assert!(b > 0.0, "intercept {b}");
    assert!(r.active.contains(&0));
    assert!(r.converged(config.polish_tol));
}

#[test]
fn squeezing_keeps_exactly_support_and_intercept() {
    let (problem, _) = sparse_problem(60, 300, 21);
    let config = SolverConfig::slow_kill(4);
    let mut squeezes = 0;
    let mut levels = Vec::new();
    fit_observed(&problem, &config, None, |e| {
        if e.squeezed {
            squeezes += 1;
            assert_eq!(e.phase, Phase::Cooling);
            assert_eq!(e.active, e.support);
            levels.push(e.report.q);
        }
        assert!(e.support.iter().all(|j| e.active.contains(j)));
    })
    .unwrap();
    // q_t runs from p/2 = 150 down to 4, crossing p/4, …, p/64
    assert!(squeezes >= 5, "{squeezes} squeezes");
    assert!(levels.windows(2).all(|w| w[1] < w[0]));

    let mut config = config;
    config.squeeze = false;
    fit_observed(&problem, &config, None, |e| assert_eq!(e.active.len(), 300)).unwrap();
}

#[test]
fn polish_solves_restricted_normal_equations() {
    let (problem, _) = sparse_problem(40, 60, 17);
    let block = vec![1, 8, 20, 33];
    let eta0 = 0.7;
    let out = polish(&problem, &block, None, eta0, 1e-12, 100).unwrap();
    let xs = problem.design().view().select(Axis(1), &block);
    let lhs = xs.t().dot(&xs) + Array2::<f64>::eye(4) * eta0;
    let resid = lhs.dot(&out.coefficients.column(0)) - xs.t().dot(&problem.response().column(0));
    assert!(resid.iter().all(|v| v.abs() < 1e-9), "{resid}");
    assert!(!out.singular);
}

#[test]
fn refit_is_least_squares_on_support() {
    let (problem, truth) = sparse_problem(100, 60, 4);
    let mut config = SolverConfig::slow_kill(4);
    config.refit = true;
    config.schedule = ScheduleSpec::inverse(30, 4);
    let r = fit(&problem, &config).unwrap();
    assert_eq!(r.support, vec![1, 8, 20, 33]);
    let xs = problem.design().view().select(Axis(1), &r.support);
    let g = xs.t().dot(&(xs.dot(&r.coefficients.select(Axis(0), &r.support).column(0)) - problem.response().column(0)));
    assert!(g.iter().all(|v| v.abs() < 1e-6), "{g}");
    for &j in &r.support {
        assert!((r.coefficients[[j, 0]] - truth[j]).abs() < 0.05);
    }
    // the shrunken fixed point is strictly smaller in norm than the refit
    let norm = |a: &Array2<f64>| a.iter().map(|v| v * v).sum::<f64>();
    assert!(norm(&r.fixed_point) < norm(&r.coefficients));
}

#[test]
fn warm_start_at_fixed_point_stays_put() {
    let (problem, _) = sparse_problem(60, 100, 8);
    let mut config = SolverConfig::slow_kill(4);
    config.schedule = ScheduleSpec::constant(5, 4);
    config.eta0 = 2.0;
    let first = fit(&problem, &config).unwrap();
    let second = fit_from(&problem, &config, first.fixed_point.view()).unwrap();
    assert_eq!(first.support, second.support);
    assert!((&first.fixed_point - &second.fixed_point).iter().all(|v| v.abs() < 1e-6));
    let res = fixed_point_residual(&problem, second.fixed_point.view(), second.rho, 4, second.eta_bar).unwrap();
    assert!(res < 1e-6, "{res}");
}

#[test]
fn reported_residual_reproduces() {
    let (problem, _) = sparse_problem(60, 150, 30);
    let r = fit(&problem, &SolverConfig::slow_kill(4)).unwrap();
    let again = residual_on(&problem, &r.active, r.active_fixed_point().view(), r.rho, r.q, r.eta_bar).unwrap();
    assert_eq!(again, r.fixed_point_residual);
    assert_eq!(r.objective_trace.len(), r.iterations);
    assert_eq!(r.q_trace[..100].first(), Some(&75));
    assert!(r.q_trace[100..].iter().all(|&q| q == 4));
}

#[test]
fn refit_on_block_larger_than_n_still_runs() {
    let (problem, _) = sparse_problem(10, 40, 3);
    let block: Vec<usize> = (0..15).collect();
    let out = refit(&problem, &block, None, 1e-8, 200).unwrap();
    let fitted = problem.design().view().select(Axis(1), &block).dot(&out.coefficients.column(0));
    let resid = &fitted - &problem.response().column(0);
    assert!(resid.iter().all(|v| v.abs() < 1e-4));
}

#[test]
fn configuration_errors() {
    let (problem, _) = sparse_problem(20, 40, 1);
    assert!(matches!(fit(&problem, &SolverConfig::slow_kill(0)), Err(Error::InvalidParameter(_))));
    assert!(matches!(fit(&problem, &SolverConfig::slow_kill(40)), Err(Error::InvalidParameter(_))));
    let mut c = SolverConfig::slow_kill(3);
    c.schedule.target_q = 4;
    assert!(fit(&problem, &c).is_err());
    let start = Array2::zeros((39, 1));
    assert!(matches!(fit_from(&problem, &SolverConfig::slow_kill(3), start.view()), Err(Error::DimensionMismatch(_))));
    let bad = Problem::regression(Array2::zeros((5, 3)), Array1::zeros(4));
    assert!(matches!(bad, Err(Error::DimensionMismatch(_))));
}
