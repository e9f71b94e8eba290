//! Linear least squares: `f(w; i) = (a_i^T w - b_i)^2 / 2`.
//!
//! Every analytic constant is available: `L = max_i ||a_i||^2`,
//! `mu = min_i ||a_i||^2` (each component satisfies PL with `||a_i||^2`),
//! `f_i* = 0`, and `M = L`, `N = 0` because smooth convex components satisfy
//! the star-smooth-convex condition with modulus `L`.

use nalgebra::{DMatrix, DVector};

use super::{sq_norm, FiniteSumProblem, GroundTruth, ProblemError, WeightVector};

#[derive(Clone, Debug)]
pub struct LeastSquares {
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
    truth: GroundTruth,
}

impl LeastSquares {
    pub fn new(rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self, ProblemError> {
        let truth = analytic_truth(&rows, &targets, None)?;
        Ok(Self {
            rows,
            targets,
            truth,
        })
    }

    /// Builds a consistent system with a known common minimizer, skipping the
    /// numeric solve. Residuals at `w_star` must vanish.
    pub(crate) fn with_known_minimizer(
        rows: Vec<Vec<f64>>,
        targets: Vec<f64>,
        w_star: WeightVector,
    ) -> Result<Self, ProblemError> {
        let truth = analytic_truth(&rows, &targets, Some(w_star))?;
        Ok(Self {
            rows,
            targets,
            truth,
        })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    fn residual(&self, w: &WeightVector, i: usize) -> f64 {
        assert!(
            i < self.rows.len(),
            "component index {i} out of range (n = {})",
            self.rows.len()
        );
        assert_eq!(w.dim(), self.rows[i].len(), "dimension mismatch");
        let dot: f64 = self.rows[i]
            .iter()
            .zip(w.as_slice())
            .map(|(a, x)| a * x)
            .sum();
        dot - self.targets[i]
    }
}

impl FiniteSumProblem for LeastSquares {
    fn num_components(&self) -> usize {
        self.rows.len()
    }

    fn dim(&self) -> usize {
        self.rows[0].len()
    }

    fn component(&self, w: &WeightVector, i: usize) -> f64 {
        let r = self.residual(w, i);
        0.5 * r * r
    }

    fn component_grad(&self, w: &WeightVector, i: usize) -> Vec<f64> {
        let r = self.residual(w, i);
        self.rows[i].iter().map(|a| a * r).collect()
    }

    fn ground_truth(&self) -> &GroundTruth {
        &self.truth
    }
}

fn validate(rows: &[Vec<f64>], targets: &[f64]) -> Result<(), ProblemError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(ProblemError::Empty);
    }
    if rows.len() != targets.len() {
        return Err(ProblemError::Shape(format!(
            "{} rows but {} targets",
            rows.len(),
            targets.len()
        )));
    }
    let d = rows[0].len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(ProblemError::Shape(format!(
                "row {i} has length {} (expected {d})",
                row.len()
            )));
        }
        if !row.iter().all(|v| v.is_finite()) {
            return Err(ProblemError::NonFinite("rows"));
        }
        if row.iter().all(|v| *v == 0.0) {
            return Err(ProblemError::ZeroRow(i));
        }
    }
    if !targets.iter().all(|v| v.is_finite()) {
        return Err(ProblemError::NonFinite("targets"));
    }
    Ok(())
}

fn analytic_truth(
    rows: &[Vec<f64>],
    targets: &[f64],
    known_minimizer: Option<WeightVector>,
) -> Result<GroundTruth, ProblemError> {
    validate(rows, targets)?;
    let n = rows.len();
    let d = rows[0].len();

    let norms_sq: Vec<f64> = rows.iter().map(|r| sq_norm(r)).collect();
    let l = norms_sq.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mu = norms_sq.iter().cloned().fold(f64::INFINITY, f64::min);

    let mut truth = GroundTruth {
        component_minima: Some(vec![0.0; n]),
        smoothness: Some(l),
        pl_mu: Some(mu),
        star_m: Some(l),
        star_n: Some(0.0),
        ..GroundTruth::default()
    };

    let w_star = match known_minimizer {
        Some(w) => {
            let worst = (0..n)
                .map(|i| {
                    let dot: f64 = rows[i].iter().zip(w.as_slice()).map(|(a, x)| a * x).sum();
                    (dot - targets[i]).abs()
                })
                .fold(0.0, f64::max);
            if worst > 1e-8 {
                return Err(ProblemError::Shape(format!(
                    "claimed minimizer leaves residual {worst:e}"
                )));
            }
            truth.f_star = Some(0.0);
            truth.sigma_star_sq = Some(0.0);
            Some(w)
        }
        None => {
            // Minimum-norm least-squares solution; handles rank deficiency
            // (e.g. repeated rows) through the SVD pseudo-inverse.
            let a = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
            let b = DVector::from_column_slice(targets);
            let svd = a.svd(true, true);
            match svd.solve(&b, 1e-12) {
                Ok(sol) => Some(WeightVector::new(sol.iter().cloned().collect())),
                Err(_) => None,
            }
        }
    };

    if let Some(w) = w_star {
        // Keep the minimizer only if it is verifiably stationary.
        let mut full = vec![0.0; d];
        let mut sigma = 0.0;
        for i in 0..n {
            let dot: f64 = rows[i].iter().zip(w.as_slice()).map(|(a, x)| a * x).sum();
            let r = dot - targets[i];
            sigma += norms_sq[i] * r * r;
            for (fj, aj) in full.iter_mut().zip(&rows[i]) {
                *fj += aj * r;
            }
        }
        let grad_sq = sq_norm(&full) / (n as f64 * n as f64);
        if grad_sq <= 1e-18 * d as f64 {
            if truth.f_star.is_none() {
                let f: f64 = (0..n)
                    .map(|i| {
                        let dot: f64 = rows[i].iter().zip(w.as_slice()).map(|(a, x)| a * x).sum();
                        0.5 * (dot - targets[i]).powi(2)
                    })
                    .sum::<f64>()
                    / n as f64;
                truth.f_star = Some(f);
            }
            if truth.sigma_star_sq.is_none() {
                truth.sigma_star_sq = Some(sigma / n as f64);
            }
            truth.w_star = Some(w);
        }
    }

    Ok(truth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_metadata() {
        // a = [1, 1], b = [0, 2]: L = 1, f_i* = 0, w* = 1, sigma*^2 = 1.
        let p = LeastSquares::new(vec![vec![1.0], vec![1.0]], vec![0.0, 2.0]).unwrap();
        let t = p.ground_truth();
        assert_eq!(t.smoothness, Some(1.0));
        assert_eq!(t.component_minima.as_ref().unwrap(), &vec![0.0, 0.0]);
        let w_star = t.w_star.as_ref().unwrap();
        assert!((w_star[0] - 1.0).abs() < 1e-12);
        assert!((t.sigma_star_sq.unwrap() - 1.0).abs() < 1e-12);
        assert!((t.f_star.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(t.pl_mu, Some(1.0));
        assert_eq!(t.star_m, Some(1.0));
        assert_eq!(t.star_n, Some(0.0));
    }

    #[test]
    fn consistent_system_has_zero_variance() {
        // b = A w for a hidden w: interpolation, sigma*^2 = 0.
        let rows = vec![vec![1.0, 0.0], vec![0.0, 2.0]];
        let targets = vec![3.0, -2.0];
        let p = LeastSquares::new(rows, targets).unwrap();
        let t = p.ground_truth();
        assert!(t.sigma_star_sq.unwrap() < 1e-20);
        assert!(t.f_star.unwrap() < 1e-20);
    }

    #[test]
    fn single_row_gradient() {
        // a = [1], b = 0: gradient at w = 3 is a (a^T w - b) = 3.
        let p = LeastSquares::new(vec![vec![1.0]], vec![0.0]).unwrap();
        assert_eq!(
            p.component_grad(&WeightVector::new(vec![3.0]), 0),
            vec![3.0]
        );
    }

    #[test]
    fn zero_row_rejected() {
        let err = LeastSquares::new(vec![vec![0.0, 0.0]], vec![1.0]).unwrap_err();
        assert!(matches!(err, ProblemError::ZeroRow(0)));
    }

    #[test]
    fn components_are_nonnegative() {
        let p = LeastSquares::new(vec![vec![1.0, -2.0], vec![0.5, 0.5]], vec![1.0, -4.0]).unwrap();
        let w = WeightVector::new(vec![-0.3, 2.2]);
        for i in 0..2 {
            assert!(p.component(&w, i) >= 0.0);
        }
    }
}
