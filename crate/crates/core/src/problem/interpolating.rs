//! Synthetic interpolating regression instances.
//!
//! Draws orthonormal rows and a hidden minimizer inside their span, then sets
//! `b_i = a_i^T w_dag`, so all components vanish simultaneously at `w_dag` and
//! the best variance is exactly zero. Orthonormal rows pin the analytic
//! constants (`L = mu = M = 1`, `N = 0`) and keep desk-scale runs fast: each
//! epoch contracts every residual coordinate by `1 - eta_t/n` regardless of
//! the visiting order.

use rand::Rng;

use super::{LeastSquares, ProblemError, WeightVector};
use crate::seeding::{standard_normal, stream_rng, STREAM_PROBLEM_DATA};

/// Default norm of the hidden minimizer. With `n = 20` this puts the initial
/// objective from `w0 = 0` at `0.6^2 / 40 = 0.009`, small enough that a
/// 200-epoch run at `eta = 1/(2L)` lands below 1e-6.
pub const DEFAULT_WSTAR_NORM: f64 = 0.6;

/// `interpolating_scaled` with the default minimizer norm.
pub fn interpolating(n: usize, d: usize, seed: u64) -> Result<LeastSquares, ProblemError> {
    interpolating_scaled(n, d, seed, DEFAULT_WSTAR_NORM)
}

/// Over-parameterized least squares with a planted minimizer of the given
/// norm. Requires `d >= n`; deterministic in `seed`.
pub fn interpolating_scaled(
    n: usize,
    d: usize,
    seed: u64,
    wstar_norm: f64,
) -> Result<LeastSquares, ProblemError> {
    if n == 0 || d == 0 {
        return Err(ProblemError::Empty);
    }
    if d < n {
        return Err(ProblemError::NotOverParameterized { n, d });
    }
    if wstar_norm <= 0.0 || wstar_norm.is_nan() || wstar_norm.is_infinite() {
        return Err(ProblemError::NonFinite("wstar_norm"));
    }

    let mut rng = stream_rng(seed, STREAM_PROBLEM_DATA);
    let rows = orthonormal_rows(n, d, &mut rng);

    // w_dag = scale * normalized random combination of the rows, so the
    // targets have norm exactly `wstar_norm` and the iterates converge to
    // w_dag itself (no residual offset outside the span).
    let coeffs: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
    let coeff_norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut w_dag = vec![0.0; d];
    for (c, row) in coeffs.iter().zip(&rows) {
        let s = wstar_norm * c / coeff_norm;
        for (w, a) in w_dag.iter_mut().zip(row) {
            *w += s * a;
        }
    }

    let targets: Vec<f64> = rows
        .iter()
        .map(|row| row.iter().zip(&w_dag).map(|(a, w)| a * w).sum())
        .collect();

    LeastSquares::with_known_minimizer(rows, targets, WeightVector::new(w_dag))
}

/// Gram-Schmidt with one re-orthogonalization pass; `d >= n` keeps the rows
/// independent with probability one.
fn orthonormal_rows(n: usize, d: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    while rows.len() < n {
        let mut v: Vec<f64> = (0..d).map(|_| standard_normal(rng)).collect();
        for _ in 0..2 {
            for q in &rows {
                let dot: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vj, qj) in v.iter_mut().zip(q) {
                    *vj -= dot * qj;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            // Degenerate draw; redraw. Practically unreachable for d >= n.
            let _ = rng.gen::<f64>();
            continue;
        }
        for vj in &mut v {
            *vj /= norm;
        }
        rows.push(v);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::FiniteSumProblem;

    #[test]
    fn planted_minimizer_interpolates() {
        let p = interpolating(20, 50, 1).unwrap();
        let t = p.ground_truth();
        let w = t.w_star.as_ref().unwrap();
        assert!(p.objective(w) < 1e-28);
        assert_eq!(t.sigma_star_sq, Some(0.0));
        assert_eq!(t.f_star, Some(0.0));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = interpolating(8, 16, 42).unwrap();
        let b = interpolating(8, 16, 42).unwrap();
        for i in 0..8 {
            assert_eq!(a.row(i), b.row(i));
            assert_eq!(a.target(i).to_bits(), b.target(i).to_bits());
        }
        assert_eq!(
            a.ground_truth().w_star.as_ref().unwrap(),
            b.ground_truth().w_star.as_ref().unwrap()
        );
    }

    #[test]
    fn under_parameterized_is_rejected() {
        assert!(matches!(
            interpolating(2, 1, 0),
            Err(ProblemError::NotOverParameterized { n: 2, d: 1 })
        ));
    }

    #[test]
    fn rows_are_orthonormal() {
        let p = interpolating(10, 30, 3).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let dot: f64 = p.row(i).iter().zip(p.row(j)).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12, "gram[{i}][{j}] = {dot}");
            }
        }
        let t = p.ground_truth();
        assert!((t.smoothness.unwrap() - 1.0).abs() < 1e-12);
        assert!((t.pl_mu.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn minimizer_norm_is_the_requested_scale() {
        let p = interpolating_scaled(6, 40, 5, 4.5).unwrap();
        let w = p.ground_truth().w_star.as_ref().unwrap();
        assert!((w.sq_norm().sqrt() - 4.5).abs() < 1e-10);
    }
}
