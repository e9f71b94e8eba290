//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them on success).
//!
//! Every tolerance and runtime budget is pinned here, not configured.

use std::path::Path;
use std::time::{Duration, Instant};

use shuffle_sgd::diagnostics::{
    check_descent_recursion, check_weight_bounds, gradient_check, INEQ_TOL,
};
use shuffle_sgd::exec;
use shuffle_sgd::optimizer::{run, run_streaming, TraceOptions};
use shuffle_sgd::problem::{
    interpolating, interpolating_scaled, Activation, BiasMlp, FiniteSumProblem, LeastSquares,
    MlpArchitecture,
};
use shuffle_sgd::schedule::{plan_for_target_gap, plan_schedule, ConstantsLedger, Schedule};
use shuffle_sgd::shuffling::{make_permutation, ShufflingScheme};
use shuffle_sgd::stats::fit_log_log;
use shuffle_sgd::WeightVector;

use shuffle_sgd_cli::commands::scaling::{cmd_scaling, resolve_for_scaling};
use shuffle_sgd_cli::commands::{cmd_run, grid::cmd_grid};
use shuffle_sgd_cli::config::ExperimentConfig;

fn report(criterion: &str, elapsed: Duration, budget: Duration, detail: &str) {
    println!(
        "acceptance {criterion}: PASS in {:.2?} (budget {:?}) :: {detail}",
        elapsed, budget
    );
    assert!(
        elapsed <= budget,
        "{criterion} exceeded its runtime budget: {elapsed:.2?} > {budget:?}"
    );
}

fn gaussian_point(dim: usize, scale: f64, seed: u64) -> WeightVector {
    // Deterministic pseudo-Gaussian draw (sum of 12 uniforms, recentered).
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    WeightVector::new(
        (0..dim)
            .map(|_| {
                let s: f64 = (0..12).map(|_| next()).sum();
                scale * (s - 6.0)
            })
            .collect(),
    )
}

/// Criterion 1: squared-loss networks with a final bias layer satisfy
/// `||grad f||^2 >= 2 f - 1e-9 (1 + ||grad f||^2)` everywhere sampled.
#[test]
fn acceptance_01_squared_loss_pl_suite() {
    let start = Instant::now();
    let architectures: [(usize, Vec<usize>, usize); 10] = [
        (10, vec![300, 100], 1),
        (8, vec![200, 100], 2),
        (5, vec![100, 50], 1),
        (6, vec![64, 32], 3),
        (4, vec![50], 1),
        (12, vec![30, 20, 10], 2),
        (3, vec![20], 1),
        (7, vec![10, 10], 2),
        (5, vec![5], 1),
        (4, vec![], 1), // affine model; the bias layer is still explicit
    ];
    let mut total_checks = 0usize;
    for (net_idx, (input_dim, hidden, output_dim)) in architectures.into_iter().enumerate() {
        let seed = net_idx as u64;
        let arch = MlpArchitecture {
            input_dim,
            hidden,
            output_dim,
            activation: Activation::Tanh,
        };
        let p = BiasMlp::with_teacher_data(arch, 4, seed, seed + 100).unwrap();
        let violations: usize = exec::map_sum(100, |draw| {
            let scale = [0.5, 1.0, 2.0][draw % 3];
            let w = gaussian_point(p.dim(), scale, seed * 1000 + draw as u64 + 1);
            let mut bad = 0;
            for i in 0..p.num_components() {
                let f = p.component(&w, i);
                let gsq: f64 = p.component_grad(&w, i).iter().map(|g| g * g).sum();
                if gsq < 2.0 * f - 1e-9 * (1.0 + gsq) {
                    bad += 1;
                }
            }
            bad as f64
        }) as usize;
        assert_eq!(violations, 0, "net {net_idx} has PL violations");
        total_checks += 100 * p.num_components();
    }
    report(
        "1 (squared-loss PL)",
        start.elapsed(),
        Duration::from_secs(60),
        &format!("10 nets x 100 draws x all components = {total_checks} checks, zero violations"),
    );
}

/// Criterion 2: analytic gradients match central differences: 1e-9 on the
/// quadratic families, 1e-5 on the networks, 50 pairs each.
#[test]
fn acceptance_02_gradient_oracle() {
    let start = Instant::now();
    let ls = LeastSquares::new(
        vec![
            vec![1.0, -2.0, 0.5],
            vec![0.3, 0.8, -1.1],
            vec![2.0, 0.1, 0.4],
        ],
        vec![0.5, -1.0, 2.0],
    )
    .unwrap();
    let interp = interpolating(20, 50, 1).unwrap();
    let mlp = BiasMlp::with_teacher_data(
        MlpArchitecture {
            input_dim: 6,
            hidden: vec![20, 10],
            output_dim: 2,
            activation: Activation::Tanh,
        },
        8,
        3,
        4,
    )
    .unwrap();

    let e_ls = gradient_check(&ls, 50, 1e-5, 11);
    let e_interp = gradient_check(&interp, 50, 1e-5, 12);
    let e_mlp = gradient_check(&mlp, 50, 1e-5, 13);
    assert!(e_ls <= 1e-9, "least squares rel err {e_ls:.3e}");
    assert!(e_interp <= 1e-9, "interpolating rel err {e_interp:.3e}");
    assert!(e_mlp <= 1e-5, "network rel err {e_mlp:.3e}");
    report(
        "2 (gradient oracle)",
        start.elapsed(),
        Duration::from_secs(30),
        &format!("max rel errs: quadratics {e_ls:.1e}/{e_interp:.1e}, network {e_mlp:.1e}"),
    );
}

/// Criterion 3: reshuffling is uniform over the 24 orders of n = 4
/// (chi-square p > 0.001 at 24000 epochs); single-shuffle repeats one order;
/// incremental order is the identity.
#[test]
fn acceptance_03_shuffling_statistics() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let start = Instant::now();

    let mut counts = std::collections::HashMap::new();
    let scheme = ShufflingScheme::RandomReshuffle { seed: 42 };
    for epoch in 1..=24_000 {
        let p = make_permutation(scheme, 4, epoch);
        *counts.entry(p.one_based()).or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 24, "all 24 orders must occur");
    let expected = 24_000.0 / 24.0;
    let stat: f64 = counts
        .values()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p_value = 1.0 - ChiSquared::new(23.0).unwrap().cdf(stat);
    assert!(
        p_value > 0.001,
        "chi-square stat {stat:.2}, p = {p_value:.5}"
    );

    let ss = ShufflingScheme::SingleShuffle { seed: 9 };
    let first = make_permutation(ss, 6, 1);
    for epoch in 2..=1000 {
        assert_eq!(make_permutation(ss, 6, epoch), first);
    }

    let ig = make_permutation(ShufflingScheme::IncrementalGradient, 5, 77);
    assert_eq!(ig.one_based(), vec![1, 2, 3, 4, 5]);

    report(
        "3 (shuffling statistics)",
        start.elapsed(),
        Duration::from_secs(10),
        &format!("chi-square {stat:.1} (df 23), p = {p_value:.4}"),
    );
}

/// Criterion 4: plan closed forms exact to 1e-12, the ceiling
/// `eta_t <= D sqrt(eps)/K` at every epoch, and the step recursion
/// `1/eta_t + C1 eta_t^2 <= 1/eta_{t-1}`, over 100 random admissible tuples.
/// Admissible means `lambda / eps^(3/2)` integral, i.e. the horizon is a
/// whole number of epochs.
#[test]
fn acceptance_04_schedule_exactness() {
    let start = Instant::now();
    let mut state = 0xace5u64;
    let mut uniform = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut checked = 0;
    while checked < 100 {
        let eps = 3e-3 * (0.15f64 / 3e-3).powf(uniform());
        let d_scale = 0.25 * (2.5f64 / 0.25).powf(uniform());
        let c1 = 0.5 * (30.0f64 / 0.5).powf(uniform());
        let eps32 = eps.powf(1.5);
        let x = c1 * d_scale.powi(3) * eps32;
        let t_max = ((30.0 / x) as usize).clamp(1, 3000);
        let t_draw = 1 + (uniform() * t_max as f64) as usize;
        let lambda = t_draw as f64 * eps32;

        let plan = match plan_schedule(eps, d_scale, lambda, c1, None) {
            Ok(plan) => plan,
            Err(_) => continue,
        };
        checked += 1;

        // Closed forms.
        let k_expect = 1.0 + c1 * d_scale.powi(3) * eps32;
        assert!((plan.k - k_expect).abs() <= 1e-12 * k_expect);
        let eta0_expect = d_scale * eps.sqrt() / (k_expect * (lambda * c1 * d_scale.powi(3)).exp());
        assert!(
            (plan.eta0 - eta0_expect).abs() <= 1e-12 * eta0_expect,
            "eta0 {} vs {}",
            plan.eta0,
            eta0_expect
        );
        assert_eq!(plan.epochs, t_draw, "T = ceil(lambda / eps^(3/2))");

        // Step ceiling at every epoch, and the step recursion.
        let ceiling = d_scale * eps.sqrt() / plan.k;
        for t in 1..=plan.epochs {
            assert!(
                plan.eta_at(t) <= ceiling * (1.0 + 1e-12),
                "eta_{t} breaks the ceiling"
            );
        }
        let (ok, worst) = plan.verify_eta_recursion();
        assert!(ok, "recursion margin {worst:.3e}");
    }
    report(
        "4 (schedule exactness)",
        start.elapsed(),
        Duration::from_secs(10),
        "100 admissible plans: closed forms to 1e-12, ceiling and recursion at every epoch",
    );
}

/// Criterion 5: on interpolating least squares (n=20, d=50, zero variance,
/// analytic constants), a geometric-schedule run passes the deviation bounds
/// and both distance recursions at 100% of in-regime epochs.
#[test]
fn acceptance_05_bound_soundness() {
    let start = Instant::now();
    let p = interpolating(20, 50, 1).unwrap();
    let t = p.ground_truth();
    let (l, mu, m, n_coef) = (
        t.smoothness.unwrap(),
        t.pl_mu.unwrap(),
        t.star_m.unwrap(),
        t.star_n.unwrap(),
    );
    let ledger = ConstantsLedger::for_corollary(l, mu, m, n_coef);
    let cap = t.eta_cap(20).unwrap();

    // lambda = 300 eps^(3/2) gives an integral 300-epoch horizon.
    let eps = 1e-2f64;
    let plan = plan_schedule(eps, 1.0, 300.0 * eps.powf(1.5), ledger.c1, Some(cap)).unwrap();
    assert_eq!(plan.epochs, 300);
    let trace = run(
        &p,
        &p.initial_point(),
        &Schedule::Exponential { plan },
        ShufflingScheme::RandomReshuffle { seed: 1 },
        300,
        TraceOptions::default(),
    )
    .unwrap();

    let mut in_regime = 0;
    for r in &trace.records {
        let wb = check_weight_bounds(r, l, 0.0, 20, INEQ_TOL);
        let rc = check_descent_recursion(r, &ledger, 0.0, 0.0, 20, INEQ_TOL);
        for outcome in [
            wb.dist_bound,
            wb.drift_head,
            wb.drift_full,
            rc.grad_form,
            rc.gap_form,
        ] {
            match outcome {
                shuffle_sgd::diagnostics::CheckOutcome::Pass { .. } => in_regime += 1,
                other => panic!("epoch {}: unexpected outcome {other:?}", r.epoch),
            }
        }
    }
    report(
        "5 (bound soundness)",
        start.elapsed(),
        Duration::from_secs(60),
        &format!("{in_regime} bound instances over 300 epochs, all pass at 1e-9 slack"),
    );
}

/// Criterion 6: the target-gap plan drives the min-so-far gap to
/// `eps_hat in {1e-2, 1e-3}` within the planned horizon for 5/5 seeds.
#[test]
fn acceptance_06_global_convergence() {
    let start = Instant::now();
    let p = interpolating_scaled(20, 50, 1, 20f64.sqrt()).unwrap();
    let t = p.ground_truth();
    let ledger = ConstantsLedger::for_corollary(
        t.smoothness.unwrap(),
        t.pl_mu.unwrap(),
        t.star_m.unwrap(),
        t.star_n.unwrap(),
    );
    let w0 = p.initial_point();
    let dist0 = w0.dist_sq(t.w_star.as_ref().unwrap());
    let mut detail = String::new();
    for eps_hat in [1e-2, 1e-3] {
        let (plan, _g) =
            plan_for_target_gap(&ledger, 0.0, 1.0, dist0, eps_hat, t.eta_cap(20)).unwrap();
        let budget = plan.epochs.min(1_000_000);
        let schedule = Schedule::Exponential { plan: plan.clone() };
        let mut reached_at = Vec::new();
        for seed in 1..=5u64 {
            let mut reached = None;
            run_streaming(
                &p,
                &w0,
                &schedule,
                ShufflingScheme::RandomReshuffle { seed },
                budget,
                TraceOptions::default(),
                |r| {
                    if r.objective_start <= eps_hat {
                        reached = Some(r.epoch);
                        true
                    } else {
                        false
                    }
                },
            )
            .unwrap();
            let epoch = reached.unwrap_or_else(|| {
                panic!("seed {seed} did not reach {eps_hat:.0e} within {budget} epochs")
            });
            assert!(epoch <= plan.epochs, "beyond the planned horizon");
            reached_at.push(epoch);
        }
        detail.push_str(&format!(
            "eps_hat {eps_hat:.0e}: reached at {:?} (plan T = {}); ",
            reached_at, plan.epochs
        ));
    }
    report(
        "6 (global convergence)",
        start.elapsed(),
        Duration::from_secs(300),
        &detail,
    );
}

/// Criterion 7: the scaling study fits slope <= 1.8 on the interpolating
/// problem, and the fit routine recovers 1.5 exactly on manufactured
/// power-law data.
#[test]
fn acceptance_07_complexity_exponent() {
    let start = Instant::now();

    // Fit correctness on exact power-law data.
    let manufactured: Vec<(f64, f64)> = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
        .iter()
        .map(|&e: &f64| (e, 12.0 * e.powf(-1.5)))
        .collect();
    let exact = fit_log_log(&manufactured).unwrap();
    assert!(
        (exact.slope - 1.5).abs() <= 1e-9,
        "manufactured slope {}",
        exact.slope
    );

    // The study itself, through the harness path.
    let cfg: ExperimentConfig = serde_json::from_str(
        r#"{
            "problem": {"kind": "interpolating", "n": 20, "d": 50, "seed": 1,
                        "wstar_norm": 4.47213595499958},
            "scheme": "rr",
            "seed": 1,
            "schedule": {"kind": "target_gap", "eps_hat": 1e-3}
        }"#,
    )
    .unwrap();
    let targets = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let (resolved, family) = resolve_for_scaling(&cfg, Path::new("."), &targets).unwrap();
    let result = cmd_scaling(&resolved, &family, &targets, 1_000_000).unwrap();
    assert!(
        result.points.iter().all(|pt| !pt.censored),
        "no point may be censored: {:?}",
        result.points
    );
    assert!(
        result.fit.slope <= 1.8,
        "fitted slope {} exceeds 1.8",
        result.fit.slope
    );
    let epochs: Vec<usize> = result.points.iter().filter_map(|pt| pt.epochs).collect();
    report(
        "7 (complexity exponent)",
        start.elapsed(),
        Duration::from_secs(600),
        &format!(
            "epochs {:?}, slope {:.3} (manufactured fit 1.5 ± 1e-9)",
            epochs, result.fit.slope
        ),
    );
}

/// Criterion 8: identical config + seed reproduces byte-identical artifacts.
#[test]
fn acceptance_08_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg: ExperimentConfig = serde_json::from_str(
        r#"{
            "problem": {"kind": "interpolating", "n": 10, "d": 25, "seed": 4},
            "scheme": "rr",
            "seed": 21,
            "schedule": {"kind": "constant", "eta": 0.35},
            "epochs": 60,
            "repeat": 2,
            "full_trace": true
        }"#,
    )
    .unwrap();
    let resolved_a = shuffle_sgd_cli::config::resolve(&cfg, dir.path()).unwrap();
    let resolved_b = shuffle_sgd_cli::config::resolve(&cfg, dir.path()).unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    cmd_run(&resolved_a, &out_a).unwrap();
    cmd_run(&resolved_b, &out_b).unwrap();
    let mut compared = 0;
    for name in [
        "run_seed21.csv",
        "run_seed22.csv",
        "run_seed21.json",
        "run_seed21.inner.csv",
        "run_seed22.inner.csv",
        "summary.csv",
    ] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        compared += 1;
    }
    report(
        "8 (determinism)",
        start.elapsed(),
        Duration::from_secs(60),
        &format!("{compared} artifacts byte-identical across reruns"),
    );
}

/// Criterion 9: with a single component every scheme reduces to gradient
/// descent with step `eta_t`; agreement to 1e-12 per epoch over 100 epochs.
#[test]
fn acceptance_09_single_component_equivalence() {
    let start = Instant::now();
    let ls = LeastSquares::new(vec![vec![1.0]], vec![0.0]).unwrap();
    let mlp = BiasMlp::with_teacher_data(
        MlpArchitecture {
            input_dim: 2,
            hidden: vec![6],
            output_dim: 1,
            activation: Activation::Tanh,
        },
        1,
        5,
        6,
    )
    .unwrap();
    let problems: [&dyn FiniteSumProblem; 2] = [&ls, &mlp];
    let schemes = [
        ShufflingScheme::IncrementalGradient,
        ShufflingScheme::SingleShuffle { seed: 3 },
        ShufflingScheme::RandomReshuffle { seed: 3 },
    ];
    let eta = 0.1;
    for problem in problems {
        let w0 = match problem.dim() {
            1 => WeightVector::new(vec![3.0]),
            d => {
                let mut w = problem.initial_point();
                w.sub_scaled(-0.5, &vec![1.0; d]); // offset from the teacher
                w
            }
        };
        // Straight-line gradient descent, the independent reference.
        let mut gd = Vec::with_capacity(100);
        let mut w = w0.clone();
        for _ in 0..100 {
            let g = problem.component_grad(&w, 0);
            w.sub_scaled(eta, &g);
            gd.push(w.clone());
        }
        for scheme in schemes {
            let trace = run(
                problem,
                &w0,
                &Schedule::Constant { eta },
                scheme,
                100,
                TraceOptions { full_trace: true },
            )
            .unwrap();
            for (rec, reference) in trace.records.iter().zip(&gd) {
                let end = rec.detail.as_ref().unwrap().iterates.last().unwrap();
                let dist = end.dist_sq(reference).sqrt();
                assert!(
                    dist <= 1e-12,
                    "scheme {scheme:?} diverges from GD at epoch {} by {dist:e}",
                    rec.epoch
                );
            }
        }
    }
    report(
        "9 (n=1 oracle equivalence)",
        start.elapsed(),
        Duration::from_secs(60),
        "3 schemes x 2 problems match straight-line GD for 100 epochs",
    );
}

/// Companion check from the grid-search contract: the winner on a stiff
/// quadratic lands at or below the stability region boundary.
#[test]
fn grid_search_winner_respects_the_stability_region() {
    let rows = vec![vec![6.0, 0.0], vec![0.0, 5.0], vec![4.0, 3.0]];
    let targets = vec![1.2, -0.5, 0.7];
    let p = LeastSquares::new(rows, targets).unwrap();
    let l = p.ground_truth().smoothness.unwrap(); // 36
    let cfg: ExperimentConfig = serde_json::from_str(
        r#"{
            "problem": {"kind": "least_squares",
                        "rows": [[6.0, 0.0], [0.0, 5.0], [4.0, 3.0]],
                        "targets": [1.2, -0.5, 0.7]},
            "scheme": "rr",
            "seed": 2,
            "schedule": {"kind": "constant", "eta": 0.01},
            "epochs": 100
        }"#,
    )
    .unwrap();
    let resolved = shuffle_sgd_cli::config::resolve(&cfg, Path::new(".")).unwrap();
    let result = cmd_grid(&resolved, &[0.0001, 0.001, 0.01, 0.1, 1.0], 100).unwrap();
    assert!(
        result.best_eta <= 1.0 / (2.0 * l) * 20.0,
        "winner {} far above the 1/(2L) region for L = {l}",
        result.best_eta
    );
    assert!(result
        .entries
        .iter()
        .any(|e| e.final_objective.is_none() || e.eta < 0.1));
}
