//! Squared-loss multilayer network whose output layer carries an explicit
//! bias: `h(w; i) = W^T z(theta; x_i) + b`, `f(w; i) = ||h(w; i) - y_i||^2 / 2`.
//!
//! The flattened parameter vector is `[theta, W, b]` with the bias occupying
//! the final `output_dim` entries, so the last block of the gradient equals
//! the output residual `h - y` exactly. That identity is what makes every
//! instance satisfy `||grad f(w; i)||^2 >= 2 f(w; i)` at every `w`.
//!
//! Gradients are computed by hand-written reverse-mode accumulation; there is
//! no autodiff framework behind this.

use serde::{Deserialize, Serialize};

use super::{FiniteSumProblem, GroundTruth, ProblemError, WeightVector};
use crate::seeding::{standard_normal, stream_rng, STREAM_PROBLEM_DATA, STREAM_WEIGHT_INIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// Smooth; the default.
    Tanh,
    Sigmoid,
    /// Not L-smooth; flagged by diagnostics.
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Relu => x.max(0.0),
        }
    }

    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 - s)
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    /// Hidden layer widths; may be empty (affine model).
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
}

impl MlpArchitecture {
    /// Width feeding the output layer.
    fn feature_dim(&self) -> usize {
        self.hidden.last().copied().unwrap_or(self.input_dim)
    }

    pub fn param_count(&self) -> usize {
        let mut count = 0;
        let mut prev = self.input_dim;
        for &h in &self.hidden {
            count += h * prev + h;
            prev = h;
        }
        count + prev * self.output_dim + self.output_dim
    }

    fn validate(&self) -> Result<(), ProblemError> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(ProblemError::Shape(
                "all layer widths must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Seeded uniform init on `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` per layer.
    fn init_weights(&self, seed: u64) -> WeightVector {
        use rand::Rng;
        let mut rng = stream_rng(seed, STREAM_WEIGHT_INIT);
        let mut w = Vec::with_capacity(self.param_count());
        let mut prev = self.input_dim;
        let layer =
            |rng: &mut rand_chacha::ChaCha8Rng, w: &mut Vec<f64>, fan_in: usize, count: usize| {
                let bound = 1.0 / (fan_in as f64).sqrt();
                for _ in 0..count {
                    w.push(rng.gen_range(-bound..=bound));
                }
            };
        for &h in &self.hidden {
            layer(&mut rng, &mut w, prev, h * prev + h);
            prev = h;
        }
        layer(
            &mut rng,
            &mut w,
            prev,
            prev * self.output_dim + self.output_dim,
        );
        WeightVector::new(w)
    }
}

#[derive(Clone, Debug)]
pub struct BiasMlp {
    arch: MlpArchitecture,
    inputs: Vec<Vec<f64>>,
    labels: Vec<Vec<f64>>,
    init_seed: u64,
    truth: GroundTruth,
}

impl BiasMlp {
    pub fn new(
        arch: MlpArchitecture,
        inputs: Vec<Vec<f64>>,
        labels: Vec<Vec<f64>>,
        init_seed: u64,
    ) -> Result<Self, ProblemError> {
        arch.validate()?;
        if inputs.is_empty() {
            return Err(ProblemError::Empty);
        }
        if inputs.len() != labels.len() {
            return Err(ProblemError::Shape(format!(
                "{} inputs but {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        for (i, x) in inputs.iter().enumerate() {
            if x.len() != arch.input_dim {
                return Err(ProblemError::Shape(format!(
                    "input {i} has length {} (expected {})",
                    x.len(),
                    arch.input_dim
                )));
            }
        }
        for (i, y) in labels.iter().enumerate() {
            if y.len() != arch.output_dim {
                return Err(ProblemError::Shape(format!(
                    "label {i} has length {} (expected {})",
                    y.len(),
                    arch.output_dim
                )));
            }
        }
        if inputs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ProblemError::NonFinite("inputs"));
        }
        if labels.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ProblemError::NonFinite("labels"));
        }
        let truth = GroundTruth {
            component_minima: Some(vec![0.0; inputs.len()]),
            ..GroundTruth::default()
        };
        Ok(Self {
            arch,
            inputs,
            labels,
            init_seed,
            truth,
        })
    }

    /// Draws Gaussian inputs and labels them with a hidden teacher network of
    /// the same architecture, so a zero-loss parameter vector exists and is
    /// recorded as ground truth.
    pub fn with_teacher_data(
        arch: MlpArchitecture,
        samples: usize,
        data_seed: u64,
        init_seed: u64,
    ) -> Result<Self, ProblemError> {
        arch.validate()?;
        if samples == 0 {
            return Err(ProblemError::Empty);
        }
        let mut rng = stream_rng(data_seed, STREAM_PROBLEM_DATA);
        let inputs: Vec<Vec<f64>> = (0..samples)
            .map(|_| {
                (0..arch.input_dim)
                    .map(|_| standard_normal(&mut rng))
                    .collect()
            })
            .collect();
        let teacher = arch.init_weights(data_seed);
        let labels: Vec<Vec<f64>> = inputs
            .iter()
            .map(|x| forward(&arch, &teacher, x).output)
            .collect();
        let mut p = Self::new(arch, inputs, labels, init_seed)?;
        p.truth.w_star = Some(teacher);
        p.truth.f_star = Some(0.0);
        p.truth.sigma_star_sq = Some(0.0);
        Ok(p)
    }

    pub fn arch(&self) -> &MlpArchitecture {
        &self.arch
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i]
    }

    pub fn label(&self, i: usize) -> &[f64] {
        &self.labels[i]
    }

    fn check_call(&self, w: &WeightVector, i: usize) {
        assert!(
            i < self.inputs.len(),
            "component index {i} out of range (n = {})",
            self.inputs.len()
        );
        assert_eq!(w.dim(), self.arch.param_count(), "dimension mismatch");
    }
}

struct Forward {
    /// Pre-activations per hidden layer.
    pre: Vec<Vec<f64>>,
    /// Activations per hidden layer (input not stored).
    act: Vec<Vec<f64>>,
    output: Vec<f64>,
}

fn forward(arch: &MlpArchitecture, w: &WeightVector, x: &[f64]) -> Forward {
    let wv = w.as_slice();
    let mut offset = 0;
    let mut pre = Vec::with_capacity(arch.hidden.len());
    let mut act: Vec<Vec<f64>> = Vec::with_capacity(arch.hidden.len());
    let mut prev_dim = arch.input_dim;

    for &h in &arch.hidden {
        let weights = &wv[offset..offset + h * prev_dim];
        let biases = &wv[offset + h * prev_dim..offset + h * prev_dim + h];
        offset += h * prev_dim + h;
        let prev_act: &[f64] = if act.is_empty() {
            x
        } else {
            act.last().unwrap().as_slice()
        };
        let mut p = vec![0.0; h];
        for r in 0..h {
            let row = &weights[r * prev_dim..(r + 1) * prev_dim];
            p[r] = biases[r] + row.iter().zip(prev_act).map(|(a, z)| a * z).sum::<f64>();
        }
        let a: Vec<f64> = p.iter().map(|&v| arch.activation.apply(v)).collect();
        pre.push(p);
        act.push(a);
        prev_dim = h;
    }

    let z: &[f64] = if act.is_empty() {
        x
    } else {
        act.last().unwrap().as_slice()
    };
    let zdim = arch.feature_dim();
    let c = arch.output_dim;
    let w_out = &wv[offset..offset + zdim * c];
    let b = &wv[offset + zdim * c..offset + zdim * c + c];
    // h_j = b_j + sum_p W[p][j] z_p  (W stored row-major, zdim x c)
    let mut output = b.to_vec();
    for p in 0..zdim {
        let row = &w_out[p * c..(p + 1) * c];
        for j in 0..c {
            output[j] += row[j] * z[p];
        }
    }
    Forward { pre, act, output }
}

impl FiniteSumProblem for BiasMlp {
    fn num_components(&self) -> usize {
        self.inputs.len()
    }

    fn dim(&self) -> usize {
        self.arch.param_count()
    }

    fn component(&self, w: &WeightVector, i: usize) -> f64 {
        self.check_call(w, i);
        let out = forward(&self.arch, w, &self.inputs[i]).output;
        0.5 * out
            .iter()
            .zip(&self.labels[i])
            .map(|(h, y)| (h - y) * (h - y))
            .sum::<f64>()
    }

    fn component_grad(&self, w: &WeightVector, i: usize) -> Vec<f64> {
        self.check_call(w, i);
        let arch = &self.arch;
        let x = &self.inputs[i];
        let fwd = forward(arch, w, x);

        let c = arch.output_dim;
        let zdim = arch.feature_dim();
        let residual: Vec<f64> = fwd
            .output
            .iter()
            .zip(&self.labels[i])
            .map(|(h, y)| h - y)
            .collect();

        let mut grad = vec![0.0; self.dim()];
        let wv = w.as_slice();

        // Output layer offsets.
        let mut offset = 0;
        let mut prev_dim = arch.input_dim;
        for &h in &arch.hidden {
            offset += h * prev_dim + h;
            prev_dim = h;
        }
        let w_out = &wv[offset..offset + zdim * c];

        let z: &[f64] = if fwd.act.is_empty() {
            x
        } else {
            fwd.act.last().unwrap().as_slice()
        };
        // dL/dW[p][j] = z_p r_j ; dL/db_j = r_j (the identity block).
        for p in 0..zdim {
            for j in 0..c {
                grad[offset + p * c + j] = z[p] * residual[j];
            }
        }
        grad[offset + zdim * c..offset + zdim * c + c].copy_from_slice(&residual);

        // delta = W r, propagated back through the hidden stack.
        let mut delta = vec![0.0; zdim];
        for p in 0..zdim {
            let row = &w_out[p * c..(p + 1) * c];
            delta[p] = row.iter().zip(&residual).map(|(wj, rj)| wj * rj).sum();
        }

        for layer in (0..arch.hidden.len()).rev() {
            let h = arch.hidden[layer];
            let in_dim = if layer == 0 {
                arch.input_dim
            } else {
                arch.hidden[layer - 1]
            };
            let layer_offset: usize = {
                let mut o = 0;
                let mut prev = arch.input_dim;
                for &hh in &arch.hidden[..layer] {
                    o += hh * prev + hh;
                    prev = hh;
                }
                o
            };
            let prev_act: &[f64] = if layer == 0 { x } else { &fwd.act[layer - 1] };
            let d_pre: Vec<f64> = (0..h)
                .map(|r| delta[r] * arch.activation.derivative(fwd.pre[layer][r]))
                .collect();
            for r in 0..h {
                let row = layer_offset + r * in_dim;
                for col in 0..in_dim {
                    grad[row + col] = d_pre[r] * prev_act[col];
                }
                grad[layer_offset + h * in_dim + r] = d_pre[r];
            }
            if layer > 0 {
                let weights = &wv[layer_offset..layer_offset + h * in_dim];
                let mut next = vec![0.0; in_dim];
                for r in 0..h {
                    let row = &weights[r * in_dim..(r + 1) * in_dim];
                    for (nj, wj) in next.iter_mut().zip(row) {
                        *nj += d_pre[r] * wj;
                    }
                }
                delta = next;
            }
        }

        grad
    }

    fn ground_truth(&self) -> &GroundTruth {
        &self.truth
    }

    fn initial_point(&self) -> WeightVector {
        self.arch.init_weights(self.init_seed)
    }

    fn lipschitz_smooth(&self) -> bool {
        self.arch.activation != Activation::Relu
    }
}
