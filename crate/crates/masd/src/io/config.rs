//! Experiment configuration.
//!
//! Config files are TOML. `task` is the one mandatory key; every other
//! key starts from task-tuned defaults and can be overridden by the file
//! or by dotted `--set key=value` strings (themselves parsed as TOML).
//! Unknown keys are rejected with the offending name; range checks name
//! the violated key.

use crate::envs::{ParticleParams, Task};
use crate::maddpg::{TrainConfig, Trainer};
use crate::skills::{Aggregation, Curriculum, DiscLoss, PseudoRewardConfig, SkillSpace};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkillKind {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SkillConfig {
    pub kind: SkillKind,
    pub k_max: usize,
    pub initial_k: usize,
    /// Dimension of the continuous cube (continuous kind only).
    pub dim: usize,
    pub loss: DiscLoss,
}

impl Default for SkillConfig {
    fn default() -> Self {
        Self {
            kind: SkillKind::Discrete,
            k_max: 8,
            initial_k: 3,
            dim: 2,
            loss: DiscLoss::Ce,
        }
    }
}

impl SkillConfig {
    pub fn to_space(&self) -> Result<SkillSpace> {
        match self.kind {
            SkillKind::Discrete => SkillSpace::discrete(self.k_max, self.initial_k),
            SkillKind::Continuous => SkillSpace::continuous(self.dim),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub beta: f64,
    pub aggregation: Aggregation,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            aggregation: Aggregation::Mean,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumConfig {
    /// Expansion threshold on the mean global log-probability (nats).
    pub threshold: f64,
    /// Consecutive evaluations at or above threshold before expanding.
    pub window: usize,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            threshold: -0.18,
            window: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalProtocol {
    /// A fixed base init plus P disturbed copies.
    Perturbed,
    /// The fixed 4x4 grid of agent-0 start offsets.
    Grid16,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub checkpoint: Option<String>,
    pub protocol: EvalProtocol,
    /// Number of disturbed initial conditions on top of the fixed one.
    pub perturbations: usize,
    /// Disturbance amplitude as a fraction of world width.
    pub disturbance: f64,
    /// Seed for the base initial condition and its disturbances.
    pub init_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            checkpoint: None,
            protocol: EvalProtocol::Perturbed,
            perturbations: 0,
            disturbance: 0.1,
            init_seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FinetuneSection {
    pub checkpoint: Option<String>,
    /// Include the auxiliary distance reward.
    pub auxiliary: bool,
    /// Evaluation episodes per skill during selection.
    pub episodes_per_skill: usize,
    /// Trailing metric records averaged into the convergence reward.
    pub final_window: usize,
}

impl Default for FinetuneSection {
    fn default() -> Self {
        Self {
            checkpoint: None,
            auxiliary: true,
            episodes_per_skill: 4,
            final_window: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeSection {
    /// Trajectory CSVs to analyze.
    pub trajectories: Vec<String>,
    /// Optional display labels, parallel to `trajectories`.
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XorMode {
    /// The full actor-critic loop with the relaxed binary head.
    Maddpg,
    /// Tabular policies with exact expected-reward gradients.
    Tabular,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct XorSection {
    pub mode: XorMode,
    pub tabular_iterations: u64,
    pub tabular_policy_lr: f64,
    pub tabular_batch: usize,
}

impl Default for XorSection {
    fn default() -> Self {
        Self {
            mode: XorMode::Maddpg,
            tabular_iterations: 3000,
            tabular_policy_lr: 1.0,
            tabular_batch: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default)]
    pub skill: SkillConfig,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub curriculum: CurriculumConfig,
    #[serde(default)]
    pub particle: ParticleParams,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub finetune: FinetuneSection,
    #[serde(default)]
    pub xor: XorSection,
    #[serde(default)]
    pub analyze: AnalyzeSection,
    /// Seeds to run when the command line gives none.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Output directory; the command line and MASD_OUT take precedence.
    #[serde(default)]
    pub out_dir: Option<String>,
    /// Resume training from this checkpoint.
    #[serde(default)]
    pub resume_from: Option<String>,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

impl ExperimentConfig {
    /// Task-tuned defaults; config files override from here.
    pub fn default_for(task: Task) -> Self {
        let mut cfg = Self {
            task,
            skill: SkillConfig::default(),
            reward: RewardConfig::default(),
            train: TrainConfig::default(),
            curriculum: CurriculumConfig::default(),
            particle: ParticleParams::default(),
            eval: EvalConfig::default(),
            finetune: FinetuneSection::default(),
            xor: XorSection::default(),
            analyze: AnalyzeSection::default(),
            seeds: default_seeds(),
            out_dir: None,
            resume_from: None,
        };
        match task {
            Task::Xor => {
                cfg.skill.k_max = 2;
                cfg.skill.initial_k = 2;
                cfg.reward.beta = 1.5;
                cfg.reward.aggregation = Aggregation::Min;
                cfg.train.episodes = 12_000;
                cfg.train.batch_size = 128;
                cfg.train.disc_batch_size = 128;
                cfg.train.warmup_transitions = 300;
                cfg.train.updates_per_episode = 1;
                cfg.train.disc_lr = 1e-3;
                // Short replays keep both sides of the adversarial game on
                // recent data; stale replay stalls the co-adaptation.
                cfg.train.replay_capacity = 4_000;
                cfg.train.disc_replay_capacity = 1_500;
                cfg.train.eval_interval = 100;
                cfg.train.noise_decay_episodes = 0;
            }
            Task::Spread => {
                cfg.skill.k_max = 8;
                cfg.skill.initial_k = 3;
                cfg.reward.beta = 0.5;
                cfg.reward.aggregation = Aggregation::Mean;
                cfg.train.episodes = 1500;
                cfg.train.batch_size = 128;
                cfg.train.disc_batch_size = 128;
                cfg.train.updates_per_episode = 2;
                cfg.train.warmup_transitions = 1000;
                cfg.train.replay_capacity = 30_000;
                cfg.train.disc_replay_capacity = 30_000;
                cfg.train.eval_interval = 10;
                cfg.train.extrinsic_coeff = 0.0;
            }
            Task::Rendezvous => {
                cfg.skill.k_max = 6;
                cfg.skill.initial_k = 3;
                cfg.reward.beta = 1.0;
                cfg.reward.aggregation = Aggregation::Mean;
                cfg.train.episodes = 1200;
                cfg.train.batch_size = 128;
                cfg.train.disc_batch_size = 128;
                cfg.train.updates_per_episode = 2;
                cfg.train.warmup_transitions = 1000;
                cfg.train.replay_capacity = 30_000;
                cfg.train.disc_replay_capacity = 30_000;
                cfg.train.eval_interval = 10;
                // The weak centering signal rides on the pseudo reward.
                cfg.train.extrinsic_coeff = 1.0;
            }
            Task::Tag => {
                cfg.skill.k_max = 4;
                cfg.skill.initial_k = 2;
                cfg.reward.beta = 0.5;
                cfg.reward.aggregation = Aggregation::Mean;
                cfg.train.episodes = 800;
                cfg.train.batch_size = 128;
                cfg.train.disc_batch_size = 128;
                cfg.train.updates_per_episode = 2;
                cfg.train.warmup_transitions = 1000;
                cfg.train.replay_capacity = 30_000;
                cfg.train.disc_replay_capacity = 30_000;
                cfg.train.eval_interval = 10;
                cfg.train.extrinsic_coeff = 0.0;
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |key: &str, msg: &str| -> Result<()> {
            Err(Error::Config(format!("{key}: {msg}")))
        };
        if self.reward.beta < 0.0 {
            return fail("reward.beta", "must be >= 0");
        }
        match self.skill.kind {
            SkillKind::Discrete => {
                if self.skill.k_max == 0 || self.skill.k_max > 30 {
                    return fail("skill.k_max", "discrete skill count must be in 1..=30");
                }
                if self.skill.initial_k == 0 || self.skill.initial_k > self.skill.k_max {
                    return fail("skill.initial_k", "needs 1 <= initial_k <= k_max");
                }
                if self.skill.loss != DiscLoss::Ce {
                    return fail("skill.loss", "discrete skills use the ce loss");
                }
            }
            SkillKind::Continuous => {
                if self.skill.dim == 0 {
                    return fail("skill.dim", "must be >= 1");
                }
                if self.skill.loss == DiscLoss::Ce {
                    return fail("skill.loss", "continuous skills use l1 or l2");
                }
            }
        }
        if self.curriculum.window == 0 {
            return fail("curriculum.window", "must be >= 1");
        }
        self.train.validate()?;
        if self.train.checkpoint_interval > 0
            && self.train.checkpoint_interval % self.train.eval_interval != 0
        {
            return fail(
                "train.checkpoint_interval",
                "must be a multiple of train.eval_interval so resumed runs reproduce metrics",
            );
        }
        let p = &self.particle;
        if p.num_agents < 2 {
            return fail("particle.num_agents", "needs at least 2 agents");
        }
        if p.episode_len == 0 {
            return fail("particle.episode_len", "must be >= 1");
        }
        if p.dt <= 0.0 {
            return fail("particle.dt", "must be positive");
        }
        if !(0.0..=1.0).contains(&p.damping) {
            return fail("particle.damping", "must lie in [0, 1]");
        }
        if self.task == Task::Tag && p.prey_max_speed <= p.agent_max_speed {
            return fail(
                "particle.prey_max_speed",
                "prey must be strictly faster than predators",
            );
        }
        if self.eval.disturbance < 0.0 {
            return fail("eval.disturbance", "must be >= 0");
        }
        if let Some(f) = self.train.fixed_skill {
            if self.skill.kind == SkillKind::Discrete && f >= self.skill.k_max {
                return fail("train.fixed_skill", "outside the skill space");
            }
        }
        Ok(())
    }

    pub fn pseudo_reward_config(&self) -> PseudoRewardConfig {
        PseudoRewardConfig {
            beta: self.reward.beta,
            aggregation: self.reward.aggregation,
        }
    }

    /// Builds a trainer for one seed (the seed overrides `train.seed`).
    pub fn build_trainer(&self, seed: u64) -> Result<Trainer> {
        self.validate()?;
        let mut train = self.train.clone();
        train.seed = seed;
        Trainer::new(
            self.task,
            &self.particle,
            train,
            self.pseudo_reward_config(),
            self.skill.to_space()?,
            Curriculum::new(self.curriculum.threshold, self.curriculum.window),
            self.skill.loss,
        )
    }
}

/// Recursively overlays `over` onto `base`: tables merge, everything
/// else replaces.
fn deep_merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses one `--set key=value` string as a TOML fragment; bare strings
/// on the right-hand side are quoted on retry.
fn parse_override(s: &str) -> Result<toml::Value> {
    let direct: std::result::Result<toml::Value, _> = toml::from_str(s);
    if let Ok(v) = direct {
        return Ok(v);
    }
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{s}' is not key=value")))?;
    let quoted = format!("{} = {:?}", key.trim(), value.trim());
    toml::from_str(&quoted).map_err(|e| Error::Config(format!("override '{s}': {e}")))
}

/// Loads, overlays, and validates a config from TOML text.
pub fn config_from_str(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut user: toml::Value =
        toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
    for o in overrides {
        deep_merge(&mut user, parse_override(o)?);
    }
    let task_value = user
        .get("task")
        .ok_or_else(|| Error::Config("missing mandatory key 'task'".into()))?
        .clone();
    let task: Task = task_value
        .try_into()
        .map_err(|e| Error::Config(format!("task: {e}")))?;

    let mut merged = toml::Value::try_from(ExperimentConfig::default_for(task))
        .map_err(|e| Error::Config(format!("internal defaults: {e}")))?;
    deep_merge(&mut merged, user);
    let config: ExperimentConfig = merged
        .try_into()
        .map_err(|e| Error::Config(format!("{e}")))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    config_from_str(&text, overrides)
}
