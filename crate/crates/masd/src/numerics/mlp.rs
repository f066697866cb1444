//! Dense feed-forward networks with exact reverse-mode gradients.
//!
//! The only architecture in this crate is a fixed-topology MLP, so gradients
//! are written out by hand rather than through a general autodiff graph.
//! All math is f64.

use super::matrix::Matrix;
use super::rng::RngStream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HiddenActivation {
    Tanh,
    Relu,
}

/// Output head behaviour. `SoftmaxLogits` passes raw logits through; the
/// softmax itself lives in the loss (see [`categorical_logprob`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Identity,
    Tanh,
    SoftmaxLogits,
}

/// Layer sizes plus activation choices; validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpSpec {
    layer_sizes: Vec<usize>,
    pub hidden_activation: HiddenActivation,
    pub output_activation: OutputActivation,
}

impl MlpSpec {
    pub fn new(
        layer_sizes: Vec<usize>,
        hidden_activation: HiddenActivation,
        output_activation: OutputActivation,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Shape("MlpSpec needs at least 2 layers".into()));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Shape("MlpSpec layer sizes must be >= 1".into()));
        }
        Ok(Self {
            layer_sizes,
            hidden_activation,
            output_activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }
}

/// Weights (in_dim x out_dim) and bias per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Activation record from a forward pass; inputs to each layer plus
/// pre/post activation values needed for the exact backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Layer inputs: element 0 is the network input, element i is the
    /// post-activation output of layer i-1.
    inputs: Vec<Matrix>,
    /// Post-activation output of the final layer.
    output: Matrix,
}

/// Parameter gradients plus the gradient w.r.t. the network input
/// (the input gradient is what chains critics into actors).
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    pub input: Matrix,
}

impl MlpGradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            weights: mlp
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: mlp.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            input: Matrix::zeros(0, 0),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(Matrix::is_finite)
            && self.biases.iter().flatten().all(|v| v.is_finite())
    }
}

/// Fan-in scaled uniform init: |w| <= sqrt(1/fan_in), biases zero.
pub fn mlp_init(spec: &MlpSpec, rng: &mut RngStream) -> Mlp {
    let sizes = spec.layer_sizes();
    let mut weights = Vec::with_capacity(sizes.len() - 1);
    let mut biases = Vec::with_capacity(sizes.len() - 1);
    for w in sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let bound = (1.0 / fan_in as f64).sqrt();
        let mut m = Matrix::zeros(fan_in, fan_out);
        for v in m.data_mut() {
            *v = rng.uniform(-bound, bound);
        }
        weights.push(m);
        biases.push(vec![0.0; fan_out]);
    }
    Mlp {
        spec: spec.clone(),
        weights,
        biases,
    }
}

impl Mlp {
    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn param_count(&self) -> usize {
        self.weights
            .iter()
            .map(|w| w.rows() * w.cols())
            .sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(Matrix::is_finite)
            && self.biases.iter().flatten().all(|v| v.is_finite())
    }

    /// Batched forward pass; rows are samples.
    pub fn forward(&self, input: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if input.cols() != self.spec.input_dim() {
            return Err(Error::Shape(format!(
                "mlp forward: input has {} cols, spec expects {}",
                input.cols(),
                self.spec.input_dim()
            )));
        }
        let n_layers = self.num_layers();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut current = input.clone();
        for l in 0..n_layers {
            inputs.push(current.clone());
            let mut pre = current.matmul(&self.weights[l]);
            pre.add_row_bias(&self.biases[l]);
            let is_last = l == n_layers - 1;
            if is_last {
                match self.spec.output_activation {
                    OutputActivation::Identity | OutputActivation::SoftmaxLogits => {}
                    OutputActivation::Tanh => pre.map_inplace(f64::tanh),
                }
            } else {
                match self.spec.hidden_activation {
                    HiddenActivation::Tanh => pre.map_inplace(f64::tanh),
                    HiddenActivation::Relu => pre.map_inplace(|v| v.max(0.0)),
                }
            }
            current = pre;
        }
        let cache = ForwardCache {
            inputs,
            output: current.clone(),
        };
        Ok((current, cache))
    }

    /// Convenience single-sample forward.
    pub fn forward_row(&self, input: &[f64]) -> Result<Vec<f64>> {
        let (out, _) = self.forward(&Matrix::row_vector(input.to_vec()))?;
        Ok(out.row(0).to_vec())
    }

    /// Exact reverse-mode gradients of a scalar loss whose gradient w.r.t.
    /// the network output is `upstream`.
    pub fn backward(&self, cache: &ForwardCache, upstream: &Matrix) -> Result<MlpGradients> {
        let n_layers = self.num_layers();
        if upstream.rows() != cache.output.rows() || upstream.cols() != cache.output.cols() {
            return Err(Error::Shape(format!(
                "mlp backward: upstream {}x{} vs output {}x{}",
                upstream.rows(),
                upstream.cols(),
                cache.output.rows(),
                cache.output.cols()
            )));
        }
        let mut d_weights = vec![Matrix::zeros(0, 0); n_layers];
        let mut d_biases = vec![Vec::new(); n_layers];

        // Gradient w.r.t. the post-activation output of the current layer.
        let mut delta = upstream.clone();
        for l in (0..n_layers).rev() {
            let is_last = l == n_layers - 1;
            // Convert to gradient w.r.t. the pre-activation.
            let post = if is_last { &cache.output } else { &cache.inputs[l + 1] };
            match (is_last, self.spec.output_activation, self.spec.hidden_activation) {
                (true, OutputActivation::Identity | OutputActivation::SoftmaxLogits, _) => {}
                (true, OutputActivation::Tanh, _) | (false, _, HiddenActivation::Tanh) => {
                    for (d, &y) in delta.data_mut().iter_mut().zip(post.data()) {
                        *d *= 1.0 - y * y;
                    }
                }
                (false, _, HiddenActivation::Relu) => {
                    for (d, &y) in delta.data_mut().iter_mut().zip(post.data()) {
                        if y <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
            }
            d_weights[l] = cache.inputs[l].matmul_tn(&delta);
            d_biases[l] = delta.column_sums();
            delta = delta.matmul_nt(&self.weights[l]);
        }
        Ok(MlpGradients {
            weights: d_weights,
            biases: d_biases,
            input: delta,
        })
    }

    /// Flat view of all parameters, layer by layer (weights then bias).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
        out
    }

    /// Inverse of [`Mlp::flatten`].
    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "flat parameter length {} != {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut off = 0;
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            let n = w.rows() * w.cols();
            w.data_mut().copy_from_slice(&flat[off..off + n]);
            off += n;
            let nb = b.len();
            b.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(())
    }
}

/// Adam with bias correction; moment buffers mirror the parameter layout.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m_weights: Vec<Matrix>,
    v_weights: Vec<Matrix>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(mlp: &Mlp, lr: f64) -> Self {
        Self {
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m_weights: mlp
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            v_weights: mlp
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            m_biases: mlp.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            v_biases: mlp.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Flat (m, v) buffers for checkpointing, matching `Mlp::flatten` order.
    pub fn flatten(&self) -> (Vec<f64>, Vec<f64>) {
        let mut m = Vec::new();
        let mut v = Vec::new();
        for i in 0..self.m_weights.len() {
            m.extend_from_slice(self.m_weights[i].data());
            m.extend_from_slice(&self.m_biases[i]);
            v.extend_from_slice(self.v_weights[i].data());
            v.extend_from_slice(&self.v_biases[i]);
        }
        (m, v)
    }

    pub fn load_flat(&mut self, m: &[f64], v: &[f64], step: u64) -> Result<()> {
        let total: usize = self
            .m_weights
            .iter()
            .map(|w| w.rows() * w.cols())
            .sum::<usize>()
            + self.m_biases.iter().map(Vec::len).sum::<usize>();
        if m.len() != total || v.len() != total {
            return Err(Error::Shape("adam state length mismatch".into()));
        }
        let mut off = 0;
        for i in 0..self.m_weights.len() {
            let n = self.m_weights[i].rows() * self.m_weights[i].cols();
            self.m_weights[i].data_mut().copy_from_slice(&m[off..off + n]);
            self.v_weights[i].data_mut().copy_from_slice(&v[off..off + n]);
            off += n;
            let nb = self.m_biases[i].len();
            self.m_biases[i].copy_from_slice(&m[off..off + nb]);
            self.v_biases[i].copy_from_slice(&v[off..off + nb]);
            off += nb;
        }
        self.step = step;
        Ok(())
    }
}

fn adam_update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr_t: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        params[i] -= lr_t * m[i] / (v[i].sqrt() + eps);
    }
}

/// One bias-corrected Adam step.
pub fn adam_step(params: &mut Mlp, grads: &MlpGradients, state: &mut AdamState) {
    state.step += 1;
    let t = state.step as f64;
    // Correction folded into the step size; epsilon applied on the corrected
    // denominator (the formulation from the original paper's section 2).
    let lr_t = state.lr * (1.0 - state.beta2.powf(t)).sqrt() / (1.0 - state.beta1.powf(t));
    // epsilon-hat for the folded form.
    let eps_t = state.epsilon * (1.0 - state.beta2.powf(t)).sqrt();
    for l in 0..params.weights.len() {
        adam_update_slice(
            params.weights[l].data_mut(),
            grads.weights[l].data(),
            state.m_weights[l].data_mut(),
            state.v_weights[l].data_mut(),
            lr_t,
            state.beta1,
            state.beta2,
            eps_t,
        );
        adam_update_slice(
            &mut params.biases[l],
            &grads.biases[l],
            &mut state.m_biases[l],
            &mut state.v_biases[l],
            lr_t,
            state.beta1,
            state.beta2,
            eps_t,
        );
    }
}

/// target <- (1 - tau) * target + tau * online, elementwise.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) {
    assert!((0.0..=1.0).contains(&tau), "tau out of [0,1]");
    for l in 0..target.weights.len() {
        for (t, &o) in target.weights[l]
            .data_mut()
            .iter_mut()
            .zip(online.weights[l].data())
        {
            *t = (1.0 - tau) * *t + tau * o;
        }
        for (t, &o) in target.biases[l].iter_mut().zip(&online.biases[l]) {
            *t = (1.0 - tau) * *t + tau * o;
        }
    }
}

/// Numerically stable log softmax(logits)[label].
pub fn categorical_logprob(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::Shape(format!(
            "label {label} out of range for {} logits",
            logits.len()
        )));
    }
    Ok(logits[label] - log_sum_exp(logits))
}

/// log sum_i exp(x_i) with max subtraction.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContinuousLoss {
    L1,
    L2,
}

/// Loss-equivalent log-density surrogates for continuous codes: the L1 form
/// is an unnormalized Laplacian log-density -sum|p - z|, the L2 form the
/// Gaussian analogue -sum (p - z)^2. Normalization constants are dropped;
/// only differences and gradients are ever used.
pub fn continuous_logprob(prediction: &[f64], z: &[f64], kind: ContinuousLoss) -> Result<f64> {
    if prediction.len() != z.len() {
        return Err(Error::Shape(format!(
            "continuous_logprob dims: {} vs {}",
            prediction.len(),
            z.len()
        )));
    }
    let lp = match kind {
        ContinuousLoss::L1 => -prediction
            .iter()
            .zip(z)
            .map(|(&p, &t)| (p - t).abs())
            .sum::<f64>(),
        ContinuousLoss::L2 => -prediction
            .iter()
            .zip(z)
            .map(|(&p, &t)| (p - t) * (p - t))
            .sum::<f64>(),
    };
    Ok(lp)
}
