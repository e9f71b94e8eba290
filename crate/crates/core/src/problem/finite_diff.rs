//! Central-difference gradient oracle, independent of the analytic path.

use super::{FiniteSumProblem, WeightVector};
use crate::exec;

/// Central differences `(f(w + h e_k; i) - f(w - h e_k; i)) / (2h)` per
/// coordinate. Exact for quadratics up to rounding; `O(h^2)` otherwise.
pub fn finite_diff_grad<P: FiniteSumProblem + ?Sized>(
    problem: &P,
    w: &WeightVector,
    i: usize,
    h: f64,
) -> Vec<f64> {
    assert!(h > 0.0, "finite-difference step must be positive");
    assert_eq!(w.dim(), problem.dim(), "dimension mismatch");
    exec::map_collect(w.dim(), |k| {
        let mut plus = w.clone();
        plus.set(k, w[k] + h);
        let mut minus = w.clone();
        minus.set(k, w[k] - h);
        (problem.component(&plus, i) - problem.component(&minus, i)) / (2.0 * h)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::LeastSquares;

    #[test]
    fn quadratic_is_differenced_exactly() {
        // f(w) = (w - 2)^2 / 2 at w = 1: derivative -1 within rounding.
        let p = LeastSquares::new(vec![vec![1.0]], vec![2.0]).unwrap();
        let g = finite_diff_grad(&p, &WeightVector::new(vec![1.0]), 0, 1e-5);
        assert!((g[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn linear_component_is_exact_for_any_step() {
        // No curvature: the centered difference equals the slope exactly.
        struct Linear;
        impl FiniteSumProblem for Linear {
            fn num_components(&self) -> usize {
                1
            }
            fn dim(&self) -> usize {
                2
            }
            fn component(&self, w: &WeightVector, _i: usize) -> f64 {
                3.0 * w[0] - 0.25 * w[1]
            }
            fn component_grad(&self, _w: &WeightVector, _i: usize) -> Vec<f64> {
                vec![3.0, -0.25]
            }
            fn ground_truth(&self) -> &crate::problem::GroundTruth {
                static TRUTH: crate::problem::GroundTruth = crate::problem::GroundTruth {
                    w_star: None,
                    f_star: None,
                    component_minima: None,
                    smoothness: None,
                    sigma_star_sq: None,
                    pl_mu: None,
                    star_m: None,
                    star_n: None,
                };
                &TRUTH
            }
        }
        for h in [1e-7, 1e-3, 0.5, 10.0] {
            let g = finite_diff_grad(&Linear, &WeightVector::new(vec![0.4, -1.0]), 0, h);
            assert!((g[0] - 3.0).abs() < 1e-9, "h={h}: {g:?}");
            assert!((g[1] + 0.25).abs() < 1e-9, "h={h}: {g:?}");
        }
        // And the smoothness probe sees constant gradients.
        let l = crate::diagnostics::estimate_smoothness(&Linear, 20, 1.0, 1);
        assert!(l.abs() < 1e-12, "linear components have L = 0, got {l}");
    }

    #[test]
    fn matches_analytic_gradient_on_random_points() {
        let p = crate::problem::interpolating(4, 9, 17).unwrap();
        let mut rng = crate::seeding::stream_rng(3, 7);
        for i in 0..4 {
            let w = WeightVector::new(
                (0..9)
                    .map(|_| crate::seeding::standard_normal(&mut rng))
                    .collect(),
            );
            let fd = finite_diff_grad(&p, &w, i, 1e-5);
            let an = p.component_grad(&w, i);
            let err: f64 = fd
                .iter()
                .zip(&an)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-9, "|fd - analytic| = {err}");
        }
    }
}
