use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rvsmanopt::linalg::{qf, spd_factorize};
use rvsmanopt::manifold::{GeneralizedStiefel, Manifold, Stiefel};
use rvsmanopt::simulation::{generate, make_truth, Scenario, ScenarioSpec, SnrNorm};
use rvsmanopt::solver::{
    euclid_grad_u, euclid_grad_v, fit_from, fit_problem, initialize, AdmmState, FactorTriple, Problem,
    SolverConfig,
};
use rvsmanopt::tuning::{adaptive_weights, bic};
use rvsmanopt::Mat;

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Problem without ridge so that `UᵀXᵀXU = nI` holds on the manifold.
fn noisy_problem(seed: u64, n: usize, p: usize, q: usize) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = gaussian(&mut rng, n, p);
    let y = &x * gaussian(&mut rng, p, q) * 0.3 + gaussian(&mut rng, n, q);
    Problem::with_ridge(x, y, 0.0).unwrap()
}

/// A state with feasible `U`, `V` and arbitrary splits, duals and `D`.
fn random_state(rng: &mut ChaCha8Rng, problem: &Problem, r: usize) -> AdmmState {
    let (p, q) = (problem.p(), problem.q());
    let metric = problem.metric();
    let u = metric.inv_sqrt() * qf(&gaussian(rng, p, r)).unwrap();
    let v = qf(&gaussian(rng, q, r)).unwrap();
    AdmmState {
        u,
        v,
        d: DVector::from_fn(r, |_, _| rng.random_range(0.5..3.0)),
        u_split: gaussian(rng, p, r) * 0.3,
        v_split: gaussian(rng, q, r) * 0.3,
        v_group: gaussian(rng, q, r) * 0.3,
        dual_u: gaussian(rng, p, r) * 0.1,
        dual_v: gaussian(rng, q, r) * 0.1,
        dual_g: gaussian(rng, q, r) * 0.1,
        active: vec![true; r],
        iteration: 0,
    }
}

fn scale_cols(m: &Mat, d: &DVector<f64>) -> Mat {
    let mut out = m.clone();
    for (j, &dj) in d.iter().enumerate() {
        out.column_mut(j).scale_mut(dj);
    }
    out
}

/// Smooth augmented Lagrangian with the manifold constraints substituted
/// into the quadratic term: `½‖Y‖² − tr(DUᵀXᵀYV) + (n/2)tr(D²) + ρ terms`.
fn substituted_lagrangian(problem: &Problem, s: &AdmmState, rho: [f64; 3], u: &Mat, v: &Mat) -> f64 {
    let n = problem.n() as f64;
    let cross = (scale_cols(u, &s.d).transpose() * problem.x().transpose() * problem.y() * v).trace();
    0.5 * problem.y().norm_squared() - cross + 0.5 * n * s.d.norm_squared()
        + 0.5 * rho[0] * (u - &s.u_split + &s.dual_u).norm_squared()
        + 0.5 * rho[1] * (v - &s.v_split + &s.dual_v).norm_squared()
        + 0.5 * rho[2] * (v - &s.v_group + &s.dual_g).norm_squared()
}

/// Smooth augmented Lagrangian with the data term evaluated directly.
fn direct_lagrangian(problem: &Problem, s: &AdmmState, rho: [f64; 3], u: &Mat, v: &Mat) -> f64 {
    let resid = problem.y() - problem.x() * scale_cols(u, &s.d) * v.transpose();
    0.5 * resid.norm_squared()
        + 0.5 * rho[0] * (u - &s.u_split + &s.dual_u).norm_squared()
        + 0.5 * rho[1] * (v - &s.v_split + &s.dual_v).norm_squared()
        + 0.5 * rho[2] * (v - &s.v_group + &s.dual_g).norm_squared()
}

fn elementwise_fd<F: Fn(&Mat) -> f64>(at: &Mat, f: F, h: f64) -> Mat {
    let mut out = Mat::zeros(at.nrows(), at.ncols());
    for i in 0..at.nrows() {
        for j in 0..at.ncols() {
            let mut plus = at.clone();
            plus[(i, j)] += h;
            let mut minus = at.clone();
            minus[(i, j)] -= h;
            out[(i, j)] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
    }
    out
}

fn rel(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn gradients_match_elementwise_finite_differences() {
    let problem = noisy_problem(1, 60, 10, 8);
    let config = SolverConfig {
        rho: [1.0, 0.7, 1.3],
        ..SolverConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let s = random_state(&mut rng, &problem, 3);
        let gu = euclid_grad_u(&s, &problem, &config);
        let fd_u = elementwise_fd(&s.u, |u| substituted_lagrangian(&problem, &s, config.rho, u, &s.v), 1e-4);
        assert!(rel(&fd_u, &gu) <= 1e-5, "U: {}", rel(&fd_u, &gu));
        let gv = euclid_grad_v(&s, &problem, &config);
        let fd_v = elementwise_fd(&s.v, |v| substituted_lagrangian(&problem, &s, config.rho, &s.u, v), 1e-4);
        assert!(rel(&fd_v, &gv) <= 1e-5, "V: {}", rel(&fd_v, &gv));
    }
}

/// Along tangent curves the formula gradients give the exact directional
/// derivative of the unsubstituted smooth Lagrangian.
#[test]
fn gradients_match_tangent_derivatives_of_direct_objective() {
    let problem = noisy_problem(2, 60, 10, 8);
    let config = SolverConfig::default();
    let gst = GeneralizedStiefel::new(problem.metric().clone());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let s = random_state(&mut rng, &problem, 3);
        let xi_u = gst.project(&s.u, &gaussian(&mut rng, 10, 3));
        let xi_v = Stiefel.project(&s.v, &gaussian(&mut rng, 8, 3));
        let h = 1e-5;
        let f_u = |t: f64| direct_lagrangian(&problem, &s, config.rho, &gst.retract(&s.u, &(&xi_u * t)).unwrap(), &s.v);
        let fd = (f_u(h) - f_u(-h)) / (2.0 * h);
        let analytic = euclid_grad_u(&s, &problem, &config).dot(&xi_u);
        assert!((fd - analytic).abs() <= 1e-5 * analytic.abs().max(1.0), "U: {fd} vs {analytic}");
        let f_v = |t: f64| direct_lagrangian(&problem, &s, config.rho, &s.u, &Stiefel.retract(&s.v, &(&xi_v * t)).unwrap());
        let fd = (f_v(h) - f_v(-h)) / (2.0 * h);
        let analytic = euclid_grad_v(&s, &problem, &config).dot(&xi_v);
        assert!((fd - analytic).abs() <= 1e-5 * analytic.abs().max(1.0), "V: {fd} vs {analytic}");
    }
}

fn case_one_small(seed: u64) -> (Problem, Scenario) {
    let scenario = Scenario::new(ScenarioSpec {
        n: 120,
        p: 24,
        q: 16,
        r: 3,
        rho_noise: 0.3,
        snr: 0.5,
        snr_norm: SnrNorm::Frobenius,
        seed,
    })
    .unwrap();
    let data = generate(&scenario).unwrap();
    (Problem::new(data.x, data.y).unwrap(), scenario)
}

#[test]
fn smooth_block_objectives_never_increase() {
    let (problem, _) = case_one_small(3);
    for &lambda in &[1e-6, 1e-4, 1e-3] {
        let config = SolverConfig {
            lambda1: lambda,
            lambda2: lambda,
            max_iter: 200,
            record_trace: true,
            ..SolverConfig::default()
        };
        let res = fit_problem(&problem, 3, &config).unwrap();
        for rec in &res.diagnostics.trace {
            assert!(rec.u_objective_after <= rec.u_objective_before, "{rec:?}");
            assert!(rec.v_objective_after <= rec.v_objective_before, "{rec:?}");
            assert!(rec.u_infeasibility <= 1e-8 && rec.v_infeasibility <= 1e-8);
        }
        assert!(res.diagnostics.max_u_infeasibility <= 1e-8);
        assert!(res.diagnostics.max_v_infeasibility <= 1e-8);
    }
}

#[test]
fn convergence_flag_is_truthful() {
    let (problem, _) = case_one_small(4);
    let config = SolverConfig {
        lambda1: 1e-9,
        lambda2: 1e-9,
        record_trace: true,
        ..SolverConfig::default()
    };
    let res = fit_problem(&problem, 3, &config).unwrap();
    assert!(res.converged, "{:?}", res.stop);
    let (p, q, r) = (problem.p() as f64, problem.q() as f64, 3.0);
    assert!(res.primal_residuals[0] <= 1e-4 * (p * r).sqrt());
    assert!(res.primal_residuals[1] <= 1e-4 * (q * r).sqrt());
    assert!(res.primal_residuals[2] <= 1e-4 * (q * r).sqrt());
    let trace = &res.diagnostics.trace;
    let last = trace[trace.len() - 1].objective;
    let prev = if trace.len() > 1 {
        trace[trace.len() - 2].objective
    } else {
        last
    };
    assert!((last - prev).abs() / prev.abs().max(1.0) <= config.objective_tol);
}

fn planted_noiseless(seed: u64) -> (Problem, FactorTriple) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, p, q) = (100, 18, 12);
    let x = gaussian(&mut rng, n, p);
    let truth = make_truth(p, q, 3).unwrap();
    let y = &x * truth.coefficient();
    (Problem::with_ridge(x, y, 0.0).unwrap(), truth)
}

#[test]
fn zero_penalty_is_consistent_on_exact_rank_data() {
    for seed in 0..3 {
        let (problem, truth) = planted_noiseless(seed);
        let res = fit_problem(&problem, 3, &SolverConfig::default()).unwrap();
        let target = problem.x() * truth.coefficient();
        let err = (problem.x() * res.factors.coefficient() - &target).norm() / target.norm();
        assert!(err <= 1e-5, "seed {seed}: {err}");
        assert_eq!(res.factors.rank(), 3);
    }
}

#[test]
fn fit_result_sse_and_bic_are_consistent() {
    let (problem, _) = case_one_small(5);
    let config = SolverConfig {
        lambda1: 1e-4,
        lambda2: 1e-4,
        max_iter: 100,
        ..SolverConfig::default()
    };
    let res = fit_problem(&problem, 3, &config).unwrap();
    let direct = problem.sse(&res.factors.coefficient());
    assert!((res.sse - direct).abs() <= 1e-8 * direct);
    assert_eq!(res.df, res.factors.nonzeros() as i64 - 1);
    assert_eq!(res.bic, bic(res.sse, res.df, problem.n(), problem.q()).value);
    assert!(res.factors.d.iter().all(|&d| d >= 0.0));
}

#[test]
fn nonzeros_of_u_do_not_grow_with_lambda1() {
    for seed in 0..3 {
        let (problem, _) = case_one_small(20 + seed);
        let init = initialize(&problem, 3).unwrap();
        let weights = adaptive_weights(&init.factors(), &Default::default()).unwrap();
        let mut previous = usize::MAX;
        for &lambda1 in &[1e-6, 1e-5, 1e-4, 1e-3, 1e-2] {
            let config = SolverConfig {
                lambda1,
                lambda2: 1e-5,
                max_iter: 200,
                ..SolverConfig::default()
            };
            let res = fit_from(&problem, &init, &weights, &config).unwrap();
            let count = res.factors.u.iter().filter(|&&x| x != 0.0).count();
            assert!(count <= previous, "seed {seed} lambda1 {lambda1}: {count} > {previous}");
            previous = count;
        }
    }
}

#[test]
fn retained_rank_matches_planted_rank_on_scaled_case() {
    let (problem, scenario) = case_one_small(6);
    let report = rvsmanopt::grid_search(
        &problem,
        3,
        &rvsmanopt::TuningGrid::default(),
        &SolverConfig::default(),
        rvsmanopt::Execution::Parallel,
    )
    .unwrap();
    assert_eq!(report.best_fit.factors.rank(), scenario.spec.r);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn iterates_stay_on_both_manifolds(seed in 0u64..10_000, log_lambda in -8.0..-2.0f64, r in 1usize..4) {
        let problem = noisy_problem(seed, 40, 7, 6);
        let lambda = 10f64.powf(log_lambda);
        let config = SolverConfig { lambda1: lambda, lambda2: lambda, max_iter: 60, ..SolverConfig::default() };
        match fit_problem(&problem, r, &config) {
            Ok(res) => {
                prop_assert!(res.diagnostics.max_u_infeasibility <= 1e-8);
                prop_assert!(res.diagnostics.max_v_infeasibility <= 1e-8);
                prop_assert!(res.factors.rank() <= r);
                prop_assert!(res.sse.is_finite() && res.sse >= 0.0);
            }
            Err(e) => prop_assert!(e.is_numerical(), "{e}"),
        }
    }

    #[test]
    fn fits_are_bitwise_deterministic(seed in 0u64..10_000) {
        let problem = noisy_problem(seed, 30, 6, 5);
        let config = SolverConfig { lambda1: 1e-4, lambda2: 1e-4, max_iter: 30, ..SolverConfig::default() };
        let a = fit_problem(&problem, 2, &config);
        let b = fit_problem(&problem, 2, &config);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn generalized_metric_uses_the_data_covariance() {
    let problem = noisy_problem(7, 50, 6, 4);
    let g = problem.x().transpose() * problem.x() / 50.0;
    let m = spd_factorize(&g, 0.0).unwrap();
    assert!((m.metric() - problem.metric().metric()).norm() < 1e-12);
}
