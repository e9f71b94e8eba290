//! Estimates assumption constants from problems and traces, and numerically
//! verifies the per-epoch bounds an admissible run must satisfy.
//!
//! Every inequality is checked with relative slack `tol * (1 + |rhs|)`
//! (default `1e-9`) to absorb floating-point accumulation; in exact
//! arithmetic the bounds hold with `tol = 0`. Tightening the tolerance can
//! only turn passes into failures.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exec;
use crate::optimizer::EpochRecord;
use crate::problem::{finite_diff_grad, sq_norm, FiniteSumProblem, WeightVector};
use crate::schedule::{C1Convention, ConstantsLedger};
use crate::seeding::{standard_normal, stream_rng};
use crate::trace::InnerEpoch;

/// Default relative slack for all inequality checks.
pub const INEQ_TOL: f64 = 1e-9;

/// Verdict of a single inequality instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckOutcome {
    Pass {
        margin: f64,
    },
    Fail {
        margin: f64,
    },
    /// Preconditions (step caps) not met; not counted as a failure.
    OutOfRegime,
    /// Required inputs (minimizer, constants, iterates) missing.
    Unavailable,
}

impl CheckOutcome {
    /// `lhs <= rhs` with relative slack `tol * (1 + |rhs|)`.
    pub fn compare(lhs: f64, rhs: f64, tol: f64) -> Self {
        let margin = (rhs - lhs) / (1.0 + rhs.abs());
        if lhs <= rhs + tol * (1.0 + rhs.abs()) {
            CheckOutcome::Pass { margin }
        } else {
            CheckOutcome::Fail { margin }
        }
    }

    pub fn margin(&self) -> Option<f64> {
        match self {
            CheckOutcome::Pass { margin } | CheckOutcome::Fail { margin } => Some(*margin),
            _ => None,
        }
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, CheckOutcome::Fail { .. })
    }
}

/// Aggregated verdicts for one inequality family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub pass: usize,
    pub fail: usize,
    pub out_of_regime: usize,
    pub unavailable: usize,
    /// Smallest signed margin seen (negative on any failure).
    pub worst_margin: Option<f64>,
}

impl CheckSummary {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            pass: 0,
            fail: 0,
            out_of_regime: 0,
            unavailable: 0,
            worst_margin: None,
        }
    }

    pub fn absorb(&mut self, outcome: CheckOutcome) {
        match outcome {
            CheckOutcome::Pass { .. } => self.pass += 1,
            CheckOutcome::Fail { .. } => self.fail += 1,
            CheckOutcome::OutOfRegime => self.out_of_regime += 1,
            CheckOutcome::Unavailable => self.unavailable += 1,
        }
        if let Some(m) = outcome.margin() {
            self.worst_margin = Some(self.worst_margin.map_or(m, |w| w.min(m)));
        }
    }

    pub fn all_in_regime_pass(&self) -> bool {
        self.fail == 0
    }
}

/// Lower estimate of the component smoothness constant `L`.
///
/// Each sample draws a point in a `radius` ball around the problem's start
/// point plus a component index, then probes the gradient variation both
/// along a random direction and along the local gradient direction (which is
/// the curvature-maximizing direction for quadratics). Degenerate pairs are
/// skipped. When analytic `L` is available it upper-bounds this estimate.
pub fn estimate_smoothness<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    sample_count: usize,
    radius: f64,
    seed: u64,
) -> f64 {
    assert!(sample_count >= 2, "need at least two samples");
    let d = problem.dim();
    let n = problem.num_components();
    let base = problem.initial_point();
    exec::map_max(sample_count, |k| {
        let mut rng = stream_rng(seed, k as u64);
        let mut w = base.clone();
        for j in 0..d {
            w.set(j, base[j] + radius * standard_normal(&mut rng));
        }
        let i = rng.gen_range(0..n);
        let g = problem.component_grad(&w, i);
        let delta = 1e-3 * (1.0 + w.sq_norm().sqrt());

        let mut best = f64::NEG_INFINITY;
        // Gradient-aligned probe.
        let gnorm = sq_norm(&g).sqrt();
        if gnorm > 1e-12 {
            best = best.max(ratio_along(problem, &w, i, &g, delta / gnorm));
        }
        // Random probe.
        let dir: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
        let dnorm = sq_norm(&dir).sqrt();
        if dnorm > 1e-12 {
            best = best.max(ratio_along(problem, &w, i, &dir, delta / dnorm));
        }
        best
    })
}

fn ratio_along<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    w: &WeightVector,
    i: usize,
    dir: &[f64],
    scale: f64,
) -> f64 {
    let mut w2 = w.clone();
    w2.sub_scaled(-scale, dir);
    let dist = w2.dist_sq(w).sqrt();
    if dist < 1e-12 {
        return f64::NEG_INFINITY;
    }
    let g1 = problem.component_grad(w, i);
    let g2 = problem.component_grad(&w2, i);
    let diff: f64 = g1
        .iter()
        .zip(&g2)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    diff / dist
}

/// Result of probing the average-PL ratio over a set of points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlEstimate {
    /// `min` over usable points of
    /// `[(1/n) Σ ||grad f||^2] / [2 (1/n) Σ (f - f_i*)]`; `None` when every
    /// point was skipped (the inequality is vacuous at minimizers).
    pub mu_hat: Option<f64>,
    /// Index (into the supplied points) attaining the minimum.
    pub worst_point: Option<usize>,
    pub skipped: usize,
}

/// Evaluates the average-PL ratio; points with mean excess loss below 1e-14
/// are skipped. Requires component lower bounds in the ground truth.
pub fn check_average_pl<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    points: &[WeightVector],
) -> Option<PlEstimate> {
    let minima = problem.ground_truth().component_minima.clone()?;
    let n = problem.num_components();
    let ratios = exec::map_collect(points.len(), |k| {
        let w = &points[k];
        let num = problem.mean_sq_grad_norm(w);
        let den = 2.0 * (exec::map_sum_seq(n, |i| problem.component(w, i) - minima[i]) / n as f64);
        (num, den)
    });
    let mut est = PlEstimate {
        mu_hat: None,
        worst_point: None,
        skipped: 0,
    };
    for (k, (num, den)) in ratios.into_iter().enumerate() {
        if den < 1e-14 {
            est.skipped += 1;
            continue;
        }
        let ratio = num / den;
        if est.mu_hat.is_none_or(|m| ratio < m) {
            est.mu_hat = Some(ratio);
            est.worst_point = Some(k);
        }
    }
    Some(est)
}

/// `(1/n) Σ ||grad f(w*; i)||^2`, an upper bound on the best variance over
/// the solution set.
pub fn sigma_star_sq<P: FiniteSumProblem + ?Sized>(problem: &P, w_star: &WeightVector) -> f64 {
    problem.mean_sq_grad_norm(w_star)
}

/// Max relative error between analytic and central-difference gradients over
/// seeded random `(w, i)` pairs.
pub fn gradient_check<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    trials: usize,
    h: f64,
    seed: u64,
) -> f64 {
    assert!(h > 0.0, "finite-difference step must be positive");
    let d = problem.dim();
    let n = problem.num_components();
    let base = problem.initial_point();
    exec::map_max(trials, |k| {
        let mut rng = stream_rng(seed, 0x67726164u64 ^ k as u64);
        let mut w = base.clone();
        for j in 0..d {
            w.set(j, base[j] + standard_normal(&mut rng));
        }
        let i = rng.gen_range(0..n);
        let analytic = problem.component_grad(&w, i);
        let fd = finite_diff_grad(problem, &w, i, h);
        let diff: f64 = analytic
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        diff / (1e-12 + sq_norm(&analytic).sqrt())
    })
}

/// Verdicts for the three per-epoch deviation bounds.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WeightBoundsCheck {
    /// `(1/n) Σ_{j<n} ||w_j - w*||^2 <= 4 ||w_0 - w*||^2 + 8 sigma*^2 eta^2`.
    pub dist_bound: CheckOutcome,
    /// `(1/n) Σ_{j<n} ||w_j - w_0||^2 <= (8L^2/3) eta^2 ||w_0 - w*||^2
    ///  + (16 L^2 sigma*^2 / 3) eta^4 + 2 sigma*^2 eta^2`.
    pub drift_head: CheckOutcome,
    /// Same with the end point included and the two `1/n` end-point terms
    /// added on the right.
    pub drift_full: CheckOutcome,
}

/// Checks the deviation bounds on one epoch record. Requires `eta <= 1/(2L)`
/// (otherwise marked out-of-regime) and minimizer-relative fields.
pub fn check_weight_bounds(
    record: &EpochRecord,
    l: f64,
    sigma_sq: f64,
    n: usize,
    tol: f64,
) -> WeightBoundsCheck {
    let (Some(dist0), Some(dist_head)) = (record.dist_sq_start, record.dist_head) else {
        return WeightBoundsCheck {
            dist_bound: CheckOutcome::Unavailable,
            drift_head: CheckOutcome::Unavailable,
            drift_full: CheckOutcome::Unavailable,
        };
    };
    let eta = record.eta;
    if eta > 1.0 / (2.0 * l) {
        return WeightBoundsCheck {
            dist_bound: CheckOutcome::OutOfRegime,
            drift_head: CheckOutcome::OutOfRegime,
            drift_full: CheckOutcome::OutOfRegime,
        };
    }
    let eta2 = eta * eta;
    let l2 = l * l;
    let nf = n as f64;

    let rhs_dist = 4.0 * dist0 + 8.0 * sigma_sq * eta2;
    let rhs_head = 8.0 * l2 / 3.0 * eta2 * dist0
        + 16.0 * l2 * sigma_sq / 3.0 * eta2 * eta2
        + 2.0 * sigma_sq * eta2;
    let rhs_full = rhs_head + 4.0 * l2 * eta2 / nf * dist0 + 8.0 * l2 * eta2 * eta2 / nf * sigma_sq;

    WeightBoundsCheck {
        dist_bound: CheckOutcome::compare(dist_head, rhs_dist, tol),
        drift_head: CheckOutcome::compare(record.dev_head, rhs_head, tol),
        drift_full: CheckOutcome::compare(record.dev_full, rhs_full, tol),
    }
}

/// Verdicts for the two per-epoch distance recursions.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RecursionCheck {
    /// `||w_n - w*||^2 <= (1 + B1 eta^3) ||w_0 - w*||^2
    ///  - (eta / 2M) (1/n) Σ ||grad f(w_{i-1}; pi(i))||^2 + B2 eta sigma*^2`.
    pub grad_form: CheckOutcome,
    /// `||w_n - w*||^2 <= (1 + C1 eta^3) ||w_0 - w*||^2 + C2 eta sigma*^2
    ///  - C3 eta (F(w_0) - F*)`.
    pub gap_form: CheckOutcome,
}

/// Checks both recursions on one record, gated on
/// `eta <= min{ n/(2M), 1/(2L) }`.
pub fn check_descent_recursion(
    record: &EpochRecord,
    ledger: &ConstantsLedger,
    sigma_sq: f64,
    f_star: f64,
    n: usize,
    tol: f64,
) -> RecursionCheck {
    let (Some(dist0), Some(dist_end)) = (record.dist_sq_start, record.dist_sq_end) else {
        return RecursionCheck {
            grad_form: CheckOutcome::Unavailable,
            gap_form: CheckOutcome::Unavailable,
        };
    };
    let eta = record.eta;
    if eta > ledger.eta_cap(n) {
        return RecursionCheck {
            grad_form: CheckOutcome::OutOfRegime,
            gap_form: CheckOutcome::OutOfRegime,
        };
    }
    let eta3 = eta * eta * eta;
    let rhs_grad = (1.0 + ledger.b1 * eta3) * dist0
        - eta / (2.0 * ledger.m) * record.avg_sq_grad_inner
        + ledger.b2 * eta * sigma_sq;
    let rhs_gap = (1.0 + ledger.c1 * eta3) * dist0 + ledger.c2 * eta * sigma_sq
        - ledger.c3 * eta * (record.objective_start - f_star);
    RecursionCheck {
        grad_form: CheckOutcome::compare(dist_end, rhs_grad, tol),
        gap_form: CheckOutcome::compare(dist_end, rhs_gap, tol),
    }
}

/// Residual report for the trajectory star-smooth-convex condition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryCheck {
    pub checked_steps: usize,
    /// Steps with `M <dg, dw> + N dev - ||dg||^2 >= -tol` at the given (M, N).
    pub satisfied_steps: usize,
    pub worst_margin: Option<f64>,
    /// Minimal `M` making all residuals nonnegative with `N = 0`; `None` if
    /// some step has a non-positive inner product with a positive gradient
    /// difference.
    pub min_m_with_n_zero: Option<f64>,
    /// Minimal `N` making all residuals nonnegative at `M = 2 L`.
    pub min_n_at_two_l: Option<f64>,
}

/// Evaluates the trajectory condition on recorded inner iterates.
///
/// For every epoch and inner step `i`, the residual is
/// `M <g_{i-1} - g*, w_{i-1} - w*> + N (1/n) Σ_i ||w_i - w_0||^2
///  - ||g_{i-1} - g*||^2` where gradients are taken on the visited
/// component. The deviation sum over `i = 1..n` equals the `j = 0..n` sum
/// recorded by the optimizer (the `j = 0` term is zero).
pub fn check_star_smooth_convex<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    inner: &[InnerEpoch],
    w_star: &WeightVector,
    m: f64,
    n_coef: f64,
    l_for_fit: f64,
    tol: f64,
) -> TrajectoryCheck {
    let n = problem.num_components();
    let mut check = TrajectoryCheck {
        checked_steps: 0,
        satisfied_steps: 0,
        worst_margin: None,
        min_m_with_n_zero: Some(0.0),
        min_n_at_two_l: Some(0.0),
    };
    let star_grads: Vec<Vec<f64>> = exec::map_collect(n, |i| problem.component_grad(w_star, i));

    for epoch in inner {
        if epoch.iterates.len() != n + 1 || epoch.visits.len() != n {
            continue;
        }
        let w0 = &epoch.iterates[0];
        let dev_full = epoch.iterates.iter().map(|w| w.dist_sq(w0)).sum::<f64>() / n as f64;
        for (step, visit) in epoch.visits.iter().enumerate() {
            let comp = visit - 1; // visits are 1-based
            let w_prev = &epoch.iterates[step];
            let g = problem.component_grad(w_prev, comp);
            let dg: Vec<f64> = g
                .iter()
                .zip(&star_grads[comp])
                .map(|(a, b)| a - b)
                .collect();
            let dg_sq = sq_norm(&dg);
            let inner_prod: f64 = dg
                .iter()
                .zip(w_prev.as_slice().iter().zip(w_star.as_slice()))
                .map(|(d, (a, b))| d * (a - b))
                .sum();

            check.checked_steps += 1;
            let outcome = CheckOutcome::compare(dg_sq, m * inner_prod + n_coef * dev_full, tol);
            if let CheckOutcome::Pass { .. } = outcome {
                check.satisfied_steps += 1;
            }
            if let Some(margin) = outcome.margin() {
                check.worst_margin =
                    Some(check.worst_margin.map_or(margin, |w: f64| w.min(margin)));
            }

            // Minimal M with N = 0.
            if dg_sq > tol {
                match check.min_m_with_n_zero {
                    Some(cur) if inner_prod > 0.0 => {
                        check.min_m_with_n_zero = Some(cur.max(dg_sq / inner_prod));
                    }
                    Some(_) => check.min_m_with_n_zero = None,
                    None => {}
                }
            }
            // Minimal N at M = 2 L.
            let excess = dg_sq - 2.0 * l_for_fit * inner_prod;
            if excess > tol {
                match check.min_n_at_two_l {
                    Some(cur) if dev_full > 0.0 => {
                        check.min_n_at_two_l = Some(cur.max(excess / dev_full));
                    }
                    Some(_) => check.min_n_at_two_l = None,
                    None => {}
                }
            }
        }
    }
    check
}

/// How the report resolved each constant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// Sampled lower estimate of `L`.
    pub l_hat: f64,
    /// Analytic `L` when the problem carries it.
    pub l_analytic: Option<f64>,
    pub mu_hat: Option<f64>,
    pub sigma_star_sq_hat: Option<f64>,
    pub m_hat_n_zero: Option<f64>,
    pub n_hat_at_two_l: Option<f64>,
    /// `F*` used by the gap recursion; `true` when it is only the best value
    /// observed (an upper bound), not an analytic optimum.
    pub f_star_used: Option<f64>,
    pub f_star_is_observed_bound: bool,
    /// Set when the activation breaks L-smoothness (relu).
    pub smoothness_caveat: bool,
    pub gradient_max_rel_err: f64,
    pub checks: Vec<CheckSummary>,
}

/// Knobs for [`diagnose`].
#[derive(Clone, Copy, Debug)]
pub struct DiagnosticsConfig {
    pub smoothness_samples: usize,
    pub smoothness_radius: f64,
    pub pl_points: usize,
    pub gradcheck_trials: usize,
    pub fd_step: f64,
    pub seed: u64,
    /// `gamma` for the ledger; defaults to `1/L^2`.
    pub gamma: Option<f64>,
    pub c1_convention: C1Convention,
    pub tol: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            smoothness_samples: 1000,
            smoothness_radius: 1.0,
            pl_points: 100,
            gradcheck_trials: 50,
            fd_step: 1e-5,
            seed: 0,
            gamma: None,
            c1_convention: C1Convention::default(),
            tol: INEQ_TOL,
        }
    }
}

/// Runs every estimator and checker that the available data permits.
pub fn diagnose<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    records: &[EpochRecord],
    inner: Option<&[InnerEpoch]>,
    cfg: &DiagnosticsConfig,
) -> DiagnosticsReport {
    let truth = problem.ground_truth();
    let n = problem.num_components();
    let d = problem.dim();

    let l_hat = estimate_smoothness(
        problem,
        cfg.smoothness_samples,
        cfg.smoothness_radius,
        cfg.seed,
    );
    let l_used = truth.smoothness.unwrap_or(l_hat);

    // Sampled points for the PL probes: around the start point.
    let base = problem.initial_point();
    let points: Vec<WeightVector> = (0..cfg.pl_points)
        .map(|k| {
            let mut rng = stream_rng(cfg.seed, 0x706c ^ ((k as u64) << 8));
            let mut w = base.clone();
            for j in 0..d {
                w.set(j, base[j] + standard_normal(&mut rng));
            }
            w
        })
        .collect();
    let pl = check_average_pl(problem, &points);
    let mu_hat = pl.as_ref().and_then(|p| p.mu_hat);

    let sigma_hat = truth
        .sigma_star_sq
        .or_else(|| truth.w_star.as_ref().map(|ws| sigma_star_sq(problem, ws)));

    let f_star_observed = records
        .iter()
        .map(|r| r.objective_start)
        .fold(f64::INFINITY, f64::min);
    let (f_star_used, f_star_is_bound) = match truth.f_star {
        Some(fs) => (Some(fs), false),
        None if records.is_empty() => (None, false),
        None => (Some(f_star_observed), true),
    };

    let mut checks = Vec::new();

    // Squared-loss PL form at sampled points, when all lower bounds are zero.
    if let Some(minima) = &truth.component_minima {
        if minima.iter().all(|m| *m == 0.0) {
            let mut summary = CheckSummary::new("squared_loss_pl");
            for w in &points {
                for i in 0..n {
                    let f = problem.component(w, i);
                    let gsq = sq_norm(&problem.component_grad(w, i));
                    summary.absorb(CheckOutcome::compare(2.0 * f, gsq, cfg.tol));
                }
            }
            checks.push(summary);
        }
    }

    // Deviation bounds and recursions over the trace.
    if let Some(sigma) = sigma_hat {
        let mut dist = CheckSummary::new("inner_dist_bound");
        let mut head = CheckSummary::new("inner_drift_head_bound");
        let mut full = CheckSummary::new("inner_drift_full_bound");
        for r in records {
            let wb = check_weight_bounds(r, l_used, sigma, n, cfg.tol);
            dist.absorb(wb.dist_bound);
            head.absorb(wb.drift_head);
            full.absorb(wb.drift_full);
        }
        checks.push(dist);
        checks.push(head);
        checks.push(full);

        let m_used = truth.star_m;
        let mu_used = truth.pl_mu.or(mu_hat);
        if let (Some(m), Some(mu), Some(fs)) = (m_used, mu_used, f_star_used) {
            let gamma = cfg.gamma.unwrap_or(1.0 / (l_used * l_used));
            let ledger = ConstantsLedger::compute(
                l_used,
                mu,
                m,
                truth.star_n.unwrap_or(0.0),
                gamma,
                cfg.c1_convention,
            );
            let mut grad_form = CheckSummary::new("distance_recursion_grad");
            let mut gap_form = CheckSummary::new("distance_recursion_gap");
            for r in records {
                let rc = check_descent_recursion(r, &ledger, sigma, fs, n, cfg.tol);
                grad_form.absorb(rc.grad_form);
                gap_form.absorb(rc.gap_form);
            }
            checks.push(grad_form);
            checks.push(gap_form);
        }
    }

    // Trajectory condition on inner iterates.
    let (m_hat, n_hat) = match (inner, truth.w_star.as_ref()) {
        (Some(inner), Some(ws)) if !inner.is_empty() => {
            let m_probe = truth.star_m.unwrap_or(2.0 * l_used);
            let n_probe = truth.star_n.unwrap_or(0.0);
            let tc =
                check_star_smooth_convex(problem, inner, ws, m_probe, n_probe, l_used, cfg.tol);
            let mut summary = CheckSummary::new("trajectory_smooth_convex");
            summary.pass = tc.satisfied_steps;
            summary.fail = tc.checked_steps - tc.satisfied_steps;
            summary.worst_margin = tc.worst_margin;
            checks.push(summary);
            (tc.min_m_with_n_zero, tc.min_n_at_two_l)
        }
        _ => {
            let mut summary = CheckSummary::new("trajectory_smooth_convex");
            summary.unavailable = 1;
            checks.push(summary);
            (None, None)
        }
    };

    DiagnosticsReport {
        l_hat,
        l_analytic: truth.smoothness,
        mu_hat,
        sigma_star_sq_hat: sigma_hat,
        m_hat_n_zero: m_hat,
        n_hat_at_two_l: n_hat,
        f_star_used,
        f_star_is_observed_bound: f_star_is_bound,
        smoothness_caveat: !problem.lipschitz_smooth(),
        gradient_max_rel_err: gradient_check(problem, cfg.gradcheck_trials, cfg.fd_step, cfg.seed),
        checks,
    }
}
