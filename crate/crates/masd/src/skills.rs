//! Skill space, discriminators, pseudo reward, and the curriculum.
//!
//! One latent code is sampled per episode and shared by every agent. A
//! global discriminator infers the code from the concatenation of all
//! agents' features; N local discriminators infer it from each agent's
//! feature alone. Agents are rewarded for the global discriminator's
//! confidence and penalized for the locals' — the adversarial bottleneck
//! that pushes codes onto coordination-level structure.
//!
//! Discrete heads are sized for the maximum skill count from the start;
//! curriculum expansion only widens the slice of logits admitted into
//! the softmax, so networks are never re-architected mid-run.

use crate::numerics::{
    adam_step, categorical_logprob, continuous_logprob, log_sum_exp, mlp_init, AdamState,
    ContinuousLoss, HiddenActivation, Matrix, Mlp, MlpSpec, OutputActivation, RngStream,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Probability floor applied before taking logs of discriminator
/// posteriors; keeps early adversarial rewards finite.
pub const PROB_FLOOR: f64 = 1e-8;

/// ln(PROB_FLOOR), the lower clamp for discrete log-probabilities.
pub fn log_floor() -> f64 {
    PROB_FLOOR.ln()
}

/// The latent space: discrete categories under a curriculum, or a
/// continuous cube [-1, 1]^d.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkillSpace {
    Discrete { k_max: usize, active_k: usize },
    Continuous { dim: usize },
}

impl SkillSpace {
    pub fn discrete(k_max: usize, active_k: usize) -> Result<Self> {
        if k_max == 0 || active_k == 0 || active_k > k_max {
            return Err(Error::Config(format!(
                "skill space needs 1 <= active_k <= k_max, got active {active_k} of {k_max}"
            )));
        }
        Ok(SkillSpace::Discrete { k_max, active_k })
    }

    pub fn continuous(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("continuous skill dim must be >= 1".into()));
        }
        Ok(SkillSpace::Continuous { dim })
    }

    /// Width of the encoded code fed to actors, critics, and
    /// discriminator heads.
    pub fn encoded_dim(&self) -> usize {
        match self {
            SkillSpace::Discrete { k_max, .. } => *k_max,
            SkillSpace::Continuous { dim } => *dim,
        }
    }

    pub fn active_k(&self) -> usize {
        match self {
            SkillSpace::Discrete { active_k, .. } => *active_k,
            SkillSpace::Continuous { .. } => 0,
        }
    }

    pub fn k_max(&self) -> usize {
        match self {
            SkillSpace::Discrete { k_max, .. } => *k_max,
            SkillSpace::Continuous { .. } => 0,
        }
    }

    pub fn set_active_k(&mut self, k: usize) -> Result<()> {
        match self {
            SkillSpace::Discrete { k_max, active_k } => {
                if k == 0 || k > *k_max {
                    return Err(Error::Config(format!("active_k {k} out of 1..={k_max}")));
                }
                *active_k = k;
                Ok(())
            }
            SkillSpace::Continuous { .. } => {
                Err(Error::Config("active_k applies to discrete skills only".into()))
            }
        }
    }
}

/// One sampled code, shared by all agents for one episode.
#[derive(Debug, Clone, PartialEq)]
pub enum SkillCode {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl SkillCode {
    /// One-hot over k_max for discrete codes; the raw vector otherwise.
    pub fn encode(&self, space: &SkillSpace) -> Vec<f64> {
        match (self, space) {
            (SkillCode::Discrete(i), SkillSpace::Discrete { k_max, .. }) => {
                let mut v = vec![0.0; *k_max];
                v[*i] = 1.0;
                v
            }
            (SkillCode::Continuous(v), SkillSpace::Continuous { .. }) => v.clone(),
            _ => panic!("skill code does not match skill space"),
        }
    }
}

/// Uniform prior draw: uniform over the active categories, or i.i.d.
/// U[-1,1] per dimension.
pub fn sample_skill(space: &SkillSpace, rng: &mut RngStream) -> SkillCode {
    match space {
        SkillSpace::Discrete { active_k, .. } => SkillCode::Discrete(rng.index(*active_k)),
        SkillSpace::Continuous { dim } => {
            SkillCode::Continuous((0..*dim).map(|_| rng.uniform(-1.0, 1.0)).collect())
        }
    }
}

/// Loss attached to discriminator heads: cross entropy for discrete
/// codes, L1/L2 regression for continuous ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscLoss {
    Ce,
    L1,
    L2,
}

/// Global + per-agent local discriminators with their optimizer states.
#[derive(Debug, Clone)]
pub struct DiscriminatorSet {
    pub global: Mlp,
    pub locals: Vec<Mlp>,
    pub global_opt: AdamState,
    pub local_opts: Vec<AdamState>,
    pub loss_kind: DiscLoss,
    feature_dim: usize,
}

impl DiscriminatorSet {
    pub fn new(
        space: &SkillSpace,
        num_agents: usize,
        feature_dim: usize,
        hidden: &[usize],
        loss_kind: DiscLoss,
        lr: f64,
        rng: &mut RngStream,
    ) -> Result<Self> {
        Self::with_local_lr(space, num_agents, feature_dim, hidden, loss_kind, lr, lr, rng)
    }

    /// Separate learning rates for the global and local heads; locals
    /// faster than global sharpens the punishment of single-agent leaks.
    #[allow(clippy::too_many_arguments)]
    pub fn with_local_lr(
        space: &SkillSpace,
        num_agents: usize,
        feature_dim: usize,
        hidden: &[usize],
        loss_kind: DiscLoss,
        lr: f64,
        local_lr: f64,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let out_dim = space.encoded_dim();
        let out_act = match space {
            SkillSpace::Discrete { .. } => {
                if loss_kind != DiscLoss::Ce {
                    return Err(Error::Config(
                        "discrete skills require cross-entropy discriminator loss".into(),
                    ));
                }
                OutputActivation::SoftmaxLogits
            }
            SkillSpace::Continuous { .. } => {
                if loss_kind == DiscLoss::Ce {
                    return Err(Error::Config(
                        "continuous skills require L1 or L2 discriminator loss".into(),
                    ));
                }
                OutputActivation::Tanh
            }
        };
        let make_spec = |input: usize| -> Result<MlpSpec> {
            let mut sizes = vec![input];
            sizes.extend_from_slice(hidden);
            sizes.push(out_dim);
            MlpSpec::new(sizes, HiddenActivation::Tanh, out_act)
        };
        let global = mlp_init(&make_spec(num_agents * feature_dim)?, rng);
        let locals: Vec<Mlp> = (0..num_agents)
            .map(|_| mlp_init(&make_spec(feature_dim).unwrap(), rng))
            .collect();
        let global_opt = AdamState::new(&global, lr);
        let local_opts = locals.iter().map(|l| AdamState::new(l, local_lr)).collect();
        Ok(Self {
            global,
            locals,
            global_opt,
            local_opts,
            loss_kind,
            feature_dim,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.locals.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// log q(z | f(joint state)) under the global discriminator.
    pub fn global_logprob(
        &self,
        space: &SkillSpace,
        joint_features: &[f64],
        z: &SkillCode,
    ) -> Result<f64> {
        if joint_features.len() != self.global.input_dim() {
            return Err(Error::Shape(format!(
                "global discriminator expects {} features, got {}",
                self.global.input_dim(),
                joint_features.len()
            )));
        }
        let out = self.global.forward_row(joint_features)?;
        logprob_of(space, self.loss_kind, &out, z)
    }

    /// log q_i(z | f(x_i)) under agent i's local discriminator.
    pub fn local_logprob(
        &self,
        space: &SkillSpace,
        agent_index: usize,
        feature: &[f64],
        z: &SkillCode,
    ) -> Result<f64> {
        let local = self.locals.get(agent_index).ok_or_else(|| {
            Error::Shape(format!(
                "agent index {agent_index} out of range for {} locals",
                self.locals.len()
            ))
        })?;
        if feature.len() != local.input_dim() {
            return Err(Error::Shape(format!(
                "local discriminator expects {} features, got {}",
                local.input_dim(),
                feature.len()
            )));
        }
        let out = local.forward_row(feature)?;
        logprob_of(space, self.loss_kind, &out, z)
    }

    /// (global, locals[0..N]) log-probabilities for one joint feature.
    pub fn all_logprobs(
        &self,
        space: &SkillSpace,
        joint_features: &[f64],
        z: &SkillCode,
    ) -> Result<(f64, Vec<f64>)> {
        let global = self.global_logprob(space, joint_features, z)?;
        let mut locals = Vec::with_capacity(self.locals.len());
        for i in 0..self.locals.len() {
            let f = &joint_features[i * self.feature_dim..(i + 1) * self.feature_dim];
            locals.push(self.local_logprob(space, i, f, z)?);
        }
        Ok((global, locals))
    }
}

/// Skill log-probability of a single discriminator output row, with the
/// discrete path masked to the active categories and floored.
fn logprob_of(space: &SkillSpace, loss_kind: DiscLoss, output: &[f64], z: &SkillCode) -> Result<f64> {
    match (space, z) {
        (SkillSpace::Discrete { active_k, .. }, SkillCode::Discrete(label)) => {
            if *label >= *active_k {
                return Err(Error::Shape(format!(
                    "label {label} outside active {active_k} categories"
                )));
            }
            let lp = categorical_logprob(&output[..*active_k], *label)?;
            Ok(lp.max(log_floor()))
        }
        (SkillSpace::Continuous { .. }, SkillCode::Continuous(zv)) => {
            let kind = match loss_kind {
                DiscLoss::L1 => ContinuousLoss::L1,
                _ => ContinuousLoss::L2,
            };
            continuous_logprob(output, zv, kind)
        }
        _ => Err(Error::Shape("skill code does not match space".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Mean,
    Min,
}

/// Weight and aggregation of the local opacity term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoRewardConfig {
    pub beta: f64,
    pub aggregation: Aggregation,
}

impl Default for PseudoRewardConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            aggregation: Aggregation::Mean,
        }
    }
}

/// r_z = global - beta * aggregate(locals); beta = 1 with mean
/// aggregation is the canonical form, beta = 0 turns the bottleneck off.
pub fn pseudo_reward(config: &PseudoRewardConfig, global_lp: f64, local_lps: &[f64]) -> Result<f64> {
    if local_lps.is_empty() {
        return Err(Error::Shape("pseudo_reward needs at least one local".into()));
    }
    let agg = match config.aggregation {
        Aggregation::Mean => local_lps.iter().sum::<f64>() / local_lps.len() as f64,
        Aggregation::Min => local_lps.iter().cloned().fold(f64::INFINITY, f64::min),
    };
    Ok(global_lp - config.beta * agg)
}

/// One (features, z) batch drawn from the discriminator replay.
pub struct DiscBatch<'a> {
    /// Rows are joint feature vectors f(x) of all agents concatenated.
    pub joint_features: &'a Matrix,
    pub codes: &'a [SkillCode],
}

/// Per-discriminator losses from one update: [global, local_0, ...].
#[derive(Debug, Clone)]
pub struct DiscUpdateReport {
    pub losses: Vec<f64>,
    /// Mean log-probabilities of the true code before the update,
    /// [global, local_0, ...]; feeds metrics and the curriculum.
    pub mean_logprobs: Vec<f64>,
}

/// One Adam step per discriminator on a batch of (features, code) pairs.
/// Discrete codes use cross entropy over the active categories; inactive
/// logits receive zero gradient. Continuous codes use L1/L2 regression.
pub fn discriminator_update(
    disc: &mut DiscriminatorSet,
    space: &SkillSpace,
    batch: &DiscBatch,
) -> Result<DiscUpdateReport> {
    let b = batch.joint_features.rows();
    if b == 0 || batch.codes.len() != b {
        return Err(Error::Shape(format!(
            "discriminator batch: {} rows vs {} codes",
            b,
            batch.codes.len()
        )));
    }
    if batch.joint_features.cols() != disc.global.input_dim() {
        return Err(Error::Shape("discriminator batch width mismatch".into()));
    }
    let fdim = disc.feature_dim;
    let n = disc.locals.len();
    let mut losses = Vec::with_capacity(n + 1);
    let mut mean_lps = Vec::with_capacity(n + 1);

    let (loss, lp) = update_one(
        &mut disc.global,
        &mut disc.global_opt,
        space,
        disc.loss_kind,
        batch.joint_features,
        batch.codes,
    )?;
    losses.push(loss);
    mean_lps.push(lp);

    for i in 0..n {
        let cols = batch.joint_features.columns(i * fdim, fdim);
        let (loss, lp) = update_one(
            &mut disc.locals[i],
            &mut disc.local_opts[i],
            space,
            disc.loss_kind,
            &cols,
            batch.codes,
        )?;
        losses.push(loss);
        mean_lps.push(lp);
    }
    Ok(DiscUpdateReport {
        losses,
        mean_logprobs: mean_lps,
    })
}

fn update_one(
    mlp: &mut Mlp,
    opt: &mut AdamState,
    space: &SkillSpace,
    loss_kind: DiscLoss,
    inputs: &Matrix,
    codes: &[SkillCode],
) -> Result<(f64, f64)> {
    let b = inputs.rows();
    let (out, cache) = mlp.forward(inputs)?;
    let mut upstream = Matrix::zeros(out.rows(), out.cols());
    let mut loss = 0.0;
    let mut mean_lp = 0.0;
    match space {
        SkillSpace::Discrete { active_k, .. } => {
            let k = *active_k;
            for r in 0..b {
                let label = match &codes[r] {
                    SkillCode::Discrete(l) => *l,
                    _ => return Err(Error::Shape("discrete space, continuous code".into())),
                };
                if label >= k {
                    return Err(Error::Shape(format!(
                        "label {label} outside active {k} categories"
                    )));
                }
                let logits = &out.row(r)[..k];
                let lse = log_sum_exp(logits);
                let lp = logits[label] - lse;
                loss -= lp / b as f64;
                mean_lp += lp.max(log_floor()) / b as f64;
                // d(-logsoftmax[label])/dlogit_j = softmax_j - 1[j == label]
                for j in 0..k {
                    let soft = (logits[j] - lse).exp();
                    let grad = (soft - if j == label { 1.0 } else { 0.0 }) / b as f64;
                    upstream.set(r, j, grad);
                }
            }
        }
        SkillSpace::Continuous { .. } => {
            for r in 0..b {
                let target = match &codes[r] {
                    SkillCode::Continuous(v) => v,
                    _ => return Err(Error::Shape("continuous space, discrete code".into())),
                };
                let pred = out.row(r);
                if pred.len() != target.len() {
                    return Err(Error::Shape("continuous code dim mismatch".into()));
                }
                for j in 0..pred.len() {
                    let d = pred[j] - target[j];
                    match loss_kind {
                        DiscLoss::L1 => {
                            loss += d.abs() / b as f64;
                            upstream.set(r, j, d.signum() / b as f64);
                        }
                        DiscLoss::L2 => {
                            loss += d * d / b as f64;
                            upstream.set(r, j, 2.0 * d / b as f64);
                        }
                        DiscLoss::Ce => unreachable!("validated at construction"),
                    }
                }
                let kind = if loss_kind == DiscLoss::L1 {
                    ContinuousLoss::L1
                } else {
                    ContinuousLoss::L2
                };
                mean_lp += continuous_logprob(pred, target, kind)? / b as f64;
            }
        }
    }
    let grads = mlp.backward(&cache, &upstream)?;
    adam_step(mlp, &grads, opt);
    Ok((loss, mean_lp))
}

/// Curriculum expansion: grow the active category count by one when the
/// windowed mean global log-probability stays at or above the threshold
/// for `window` consecutive evaluations. Never shrinks.
#[derive(Debug, Clone, PartialEq)]
pub struct Curriculum {
    pub threshold: f64,
    pub window: usize,
    streak: usize,
}

impl Curriculum {
    pub fn new(threshold: f64, window: usize) -> Self {
        Self {
            threshold,
            window: window.max(1),
            streak: 0,
        }
    }

    pub fn streak(&self) -> usize {
        self.streak
    }

    pub fn set_streak(&mut self, streak: usize) {
        self.streak = streak;
    }

    /// Feeds one evaluation's mean global log-probability; returns true
    /// when the space expanded.
    pub fn observe(&mut self, space: &mut SkillSpace, mean_global_lp: f64) -> Result<bool> {
        let (k_max, active_k) = match space {
            SkillSpace::Discrete { k_max, active_k } => (*k_max, *active_k),
            SkillSpace::Continuous { .. } => {
                return Err(Error::Config("curriculum applies to discrete skills only".into()))
            }
        };
        if mean_global_lp >= self.threshold {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        if self.streak >= self.window && active_k < k_max {
            space.set_active_k(active_k + 1)?;
            self.streak = 0;
            return Ok(true);
        }
        Ok(false)
    }
}
