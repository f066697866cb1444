//! The training loop: collect one episode under a sampled skill, store
//! transitions and discriminator samples, then interleave critic/actor/
//! discriminator updates with target soft updates and curriculum checks.
//!
//! The loop is single-threaded and deterministic: every stochastic choice
//! flows through one seeded stream, so a (config, seed) pair pins the
//! entire run, and a checkpoint (which includes both replays and the
//! stream position) resumes it bit-exactly.

use super::{
    act, actor_update, critic_update, encode_codes, ActionHead, DiscSample, MaddpgAgents, RlBatch,
    ReplayDisc, ReplayRl, TrainConfig, Transition,
};
use crate::analysis::exact_mi_xor;
use crate::envs::{make_env, Environment, ParticleParams, Task};
use crate::io::checkpoint::Checkpoint;
use crate::numerics::{Matrix, Mlp, RngStream};
use crate::skills::{
    discriminator_update, pseudo_reward, sample_skill, Curriculum, DiscBatch, DiscLoss,
    DiscriminatorSet, PseudoRewardConfig, SkillCode, SkillSpace,
};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// One metrics line, emitted every evaluation interval.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricsRecord {
    pub episode: u64,
    pub active_k: usize,
    pub mean_global_lp: f64,
    pub mean_local_lp: Vec<f64>,
    pub pseudo_reward_mean: f64,
    pub td_loss: f64,
    pub disc_losses: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mi_global: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mi_local: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrinsic_reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weak_signal_mean: Option<f64>,
}

impl MetricsRecord {
    pub fn is_finite(&self) -> bool {
        let mut ok = self.mean_global_lp.is_finite()
            && self.pseudo_reward_mean.is_finite()
            && self.td_loss.is_finite();
        ok &= self.mean_local_lp.iter().all(|v| v.is_finite());
        ok &= self.disc_losses.iter().all(|v| v.is_finite());
        if let Some(v) = self.mi_global {
            ok &= v.is_finite();
        }
        if let Some(vs) = &self.mi_local {
            ok &= vs.iter().all(|v| v.is_finite());
        }
        if let Some(v) = self.extrinsic_reward {
            ok &= v.is_finite();
        }
        if let Some(v) = self.weak_signal_mean {
            ok &= v.is_finite();
        }
        ok
    }
}

/// Sinks for the metrics stream and periodic checkpoints.
pub trait TrainHooks {
    fn on_metrics(&mut self, record: &MetricsRecord) -> Result<()>;
    fn on_checkpoint(&mut self, _trainer: &Trainer) -> Result<()> {
        Ok(())
    }
}

/// Collects metrics in memory; the default sink for tests.
#[derive(Debug, Default)]
pub struct VecHooks {
    pub records: Vec<MetricsRecord>,
}

impl TrainHooks for VecHooks {
    fn on_metrics(&mut self, record: &MetricsRecord) -> Result<()> {
        self.records.push(record.clone());
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
struct Window {
    td_sum: f64,
    td_n: u64,
    disc_loss_sum: Vec<f64>,
    disc_lp_sum: Vec<f64>,
    disc_n: u64,
    rz_sum: f64,
    rz_n: u64,
    ext_sum: f64,
    ext_n: u64,
}

impl Window {
    fn reset(&mut self) {
        *self = Window::default();
    }
}

pub struct Trainer {
    pub task: Task,
    pub config: TrainConfig,
    pub reward_cfg: PseudoRewardConfig,
    pub space: SkillSpace,
    pub curriculum: Curriculum,
    pub agents: MaddpgAgents,
    pub disc: DiscriminatorSet,
    pub replay: ReplayRl,
    pub disc_replay: ReplayDisc,
    pub rng: RngStream,
    pub episode: u64,
    pub(crate) env: Box<dyn Environment>,
    window: Window,
}

impl Trainer {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        task: Task,
        particle: &ParticleParams,
        config: TrainConfig,
        reward_cfg: PseudoRewardConfig,
        space: SkillSpace,
        curriculum: Curriculum,
        disc_loss: DiscLoss,
    ) -> Result<Self> {
        config.validate()?;
        let env = make_env(task, particle);
        let mut rng = RngStream::seed_from(config.seed);
        let head = match task {
            Task::Xor => ActionHead::RelaxedBinary,
            _ => ActionHead::Continuous,
        };
        let agents = MaddpgAgents::new(
            env.num_agents(),
            env.obs_dim(),
            env.action_dim(),
            space.encoded_dim(),
            head,
            &config,
            &mut rng,
        )?;
        let disc = DiscriminatorSet::with_local_lr(
            &space,
            env.num_agents(),
            env.feature_dim(),
            &config.hidden_disc,
            disc_loss,
            config.disc_lr,
            config.local_disc_lr.unwrap_or(config.disc_lr),
            &mut rng,
        )?;
        let replay = ReplayRl::new(config.replay_capacity);
        let disc_replay = ReplayDisc::new(config.disc_replay_capacity);
        Ok(Self {
            task,
            config,
            reward_cfg,
            space,
            curriculum,
            agents,
            disc,
            replay,
            disc_replay,
            rng,
            episode: 0,
            env,
            window: Window::default(),
        })
    }

    pub fn env(&self) -> &dyn Environment {
        self.env.as_ref()
    }

    pub fn num_agents(&self) -> usize {
        self.agents.num_agents()
    }

    fn episode_code(&mut self) -> Result<SkillCode> {
        if let Some(fixed) = self.config.fixed_skill {
            match &self.space {
                SkillSpace::Discrete { active_k, .. } => {
                    if fixed >= *active_k {
                        return Err(Error::Config(format!(
                            "fixed skill {fixed} outside active {active_k}"
                        )));
                    }
                    Ok(SkillCode::Discrete(fixed))
                }
                SkillSpace::Continuous { .. } => Err(Error::Config(
                    "fixed_skill applies to discrete skill spaces".into(),
                )),
            }
        } else {
            Ok(sample_skill(&self.space, &mut self.rng))
        }
    }

    /// Collects one episode under one skill; transitions and
    /// discriminator samples land in the replays.
    pub fn run_episode(&mut self) -> Result<()> {
        let code = self.episode_code()?;
        let z_enc = code.encode(&self.space);
        let sigma = self.config.noise_sigma(self.episode);
        let mut obs = self.env.reset(&mut self.rng);
        let n = self.agents.num_agents();
        loop {
            let mut executed = Vec::with_capacity(n);
            let mut stored = Vec::with_capacity(n);
            for i in 0..n {
                let sample = act(
                    &self.agents.actors[i],
                    self.agents.head,
                    &obs[i],
                    &z_enc,
                    sigma,
                    self.config.xor_temperature,
                    true,
                    &mut self.rng,
                )?;
                executed.push(sample.executed);
                stored.push(sample.stored);
            }
            let step = self.env.step(&executed, &mut self.rng)?;
            let features = self.env.joint_features(&step.observations);
            let rz = if self.config.use_pseudo_reward {
                let (global_lp, local_lps) = self.disc.all_logprobs(&self.space, &features, &code)?;
                pseudo_reward(&self.reward_cfg, global_lp, &local_lps)?
            } else {
                0.0
            };
            if !rz.is_finite() {
                return Err(Error::NonFinite(format!(
                    "pseudo reward {rz} at episode {}",
                    self.episode
                )));
            }
            let rewards: Vec<f64> = (0..n)
                .map(|i| rz + self.config.extrinsic_coeff * step.rewards[i])
                .collect();
            self.window.rz_sum += rz;
            self.window.rz_n += 1;
            self.window.ext_sum += step.rewards.iter().sum::<f64>() / n as f64;
            self.window.ext_n += 1;
            self.replay.push(Transition {
                obs,
                actions: stored,
                code: code.clone(),
                rewards,
                extrinsic: step.rewards.clone(),
                next_obs: step.observations.clone(),
                next_features: features.clone(),
                done: step.done,
            });
            self.disc_replay.push(DiscSample {
                features,
                code: code.clone(),
            });
            obs = step.observations;
            if step.done {
                break;
            }
        }
        Ok(())
    }

    fn assemble_batch(&self, indices: &[usize]) -> Result<RlBatch> {
        let n = self.agents.num_agents();
        let b = indices.len();
        let obs_dim = self.agents.obs_dim();
        let act_dim = self.agents.action_dim();
        let mut obs = vec![Matrix::zeros(b, obs_dim); n];
        let mut next_obs = vec![Matrix::zeros(b, obs_dim); n];
        let mut actions = vec![Matrix::zeros(b, act_dim); n];
        let mut rewards = Matrix::zeros(b, n);
        let mut done = vec![0.0; b];
        let mut codes: Vec<&SkillCode> = Vec::with_capacity(b);
        for (r, &idx) in indices.iter().enumerate() {
            let t = self.replay.get(idx);
            for i in 0..n {
                obs[i].row_mut(r).copy_from_slice(&t.obs[i]);
                next_obs[i].row_mut(r).copy_from_slice(&t.next_obs[i]);
                actions[i].row_mut(r).copy_from_slice(&t.actions[i]);
            }
            if self.config.recompute_reward && self.config.use_pseudo_reward {
                let (g, l) = self
                    .disc
                    .all_logprobs(&self.space, &t.next_features, &t.code)?;
                let rz = pseudo_reward(&self.reward_cfg, g, &l)?;
                for i in 0..n {
                    rewards.set(r, i, rz + self.config.extrinsic_coeff * t.extrinsic[i]);
                }
            } else {
                for i in 0..n {
                    rewards.set(r, i, t.rewards[i]);
                }
            }
            done[r] = f64::from(t.done);
            codes.push(&t.code);
        }
        let z_enc = encode_codes(&codes, &self.space);
        Ok(RlBatch {
            obs,
            actions,
            rewards,
            next_obs,
            z_enc,
            done,
        })
    }

    fn disc_batch(&self, indices: &[usize]) -> (Matrix, Vec<SkillCode>) {
        let width = self.disc.global.input_dim();
        let mut features = Matrix::zeros(indices.len(), width);
        let mut codes = Vec::with_capacity(indices.len());
        for (r, &idx) in indices.iter().enumerate() {
            let s = self.disc_replay.get(idx);
            features.row_mut(r).copy_from_slice(&s.features);
            codes.push(s.code.clone());
        }
        (features, codes)
    }

    /// One update round: critic + actor steps, the configured number of
    /// discriminator steps, then target soft updates.
    pub fn update_round(&mut self) -> Result<()> {
        let idx = self
            .replay
            .sample_indices(self.config.batch_size.min(self.replay.len()), &mut self.rng);
        let batch = self.assemble_batch(&idx)?;
        let td = critic_update(&mut self.agents, &batch, self.config.gamma)?;
        actor_update(&mut self.agents, &batch)?;
        if !td.is_finite() {
            return Err(Error::NonFinite(format!(
                "TD loss {td} at episode {}",
                self.episode
            )));
        }
        self.window.td_sum += td;
        self.window.td_n += 1;

        if self.config.use_pseudo_reward {
            for _ in 0..self.config.disc_updates_per_round {
                let didx = self.disc_replay.sample_indices(
                    self.config.disc_batch_size.min(self.disc_replay.len()),
                    &mut self.rng,
                );
                let (features, codes) = self.disc_batch(&didx);
                let report = discriminator_update(
                    &mut self.disc,
                    &self.space,
                    &DiscBatch {
                        joint_features: &features,
                        codes: &codes,
                    },
                )?;
                if report.losses.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!(
                        "discriminator loss at episode {}",
                        self.episode
                    )));
                }
                if self.window.disc_loss_sum.is_empty() {
                    self.window.disc_loss_sum = vec![0.0; report.losses.len()];
                    self.window.disc_lp_sum = vec![0.0; report.losses.len()];
                }
                for (acc, v) in self.window.disc_loss_sum.iter_mut().zip(&report.losses) {
                    *acc += v;
                }
                for (acc, v) in self
                    .window
                    .disc_lp_sum
                    .iter_mut()
                    .zip(&report.mean_logprobs)
                {
                    *acc += v;
                }
                self.window.disc_n += 1;
            }
        }
        self.agents.soft_update_targets(self.config.tau);
        Ok(())
    }

    /// Discriminator log-probabilities over a replay sample without
    /// updating; used when a metrics tick lands before any update ran.
    fn probe_logprobs(&mut self) -> Result<Vec<f64>> {
        let n = self.agents.num_agents();
        if self.disc_replay.is_empty() {
            let uniform = match &self.space {
                SkillSpace::Discrete { active_k, .. } => (1.0 / *active_k as f64).ln(),
                SkillSpace::Continuous { .. } => 0.0,
            };
            return Ok(vec![uniform; n + 1]);
        }
        let count = self.config.disc_batch_size.min(self.disc_replay.len());
        let idx = self.disc_replay.sample_indices(count, &mut self.rng);
        let mut sums = vec![0.0; n + 1];
        for &i in &idx {
            let s = self.disc_replay.get(i);
            let (g, locals) = self.disc.all_logprobs(&self.space, &s.features, &s.code)?;
            sums[0] += g / count as f64;
            for (k, l) in locals.iter().enumerate() {
                sums[k + 1] += l / count as f64;
            }
        }
        Ok(sums)
    }

    fn metrics_record(&mut self) -> Result<MetricsRecord> {
        let n = self.agents.num_agents();
        let (mean_lps, disc_losses) = if self.window.disc_n > 0 {
            let c = self.window.disc_n as f64;
            (
                self.window.disc_lp_sum.iter().map(|v| v / c).collect::<Vec<_>>(),
                self.window.disc_loss_sum.iter().map(|v| v / c).collect::<Vec<_>>(),
            )
        } else {
            (self.probe_logprobs()?, vec![0.0; n + 1])
        };
        let (mi_global, mi_local) = if self.task == Task::Xor {
            let mi = self.exact_xor_mi()?;
            (Some(mi.global_bits), Some(mi.local_bits.to_vec()))
        } else {
            (None, None)
        };
        let ext_mean = if self.window.ext_n > 0 {
            self.window.ext_sum / self.window.ext_n as f64
        } else {
            0.0
        };
        let record = MetricsRecord {
            episode: self.episode,
            active_k: self.space.active_k(),
            mean_global_lp: mean_lps[0],
            mean_local_lp: mean_lps[1..].to_vec(),
            pseudo_reward_mean: if self.window.rz_n > 0 {
                self.window.rz_sum / self.window.rz_n as f64
            } else {
                0.0
            },
            td_loss: if self.window.td_n > 0 {
                self.window.td_sum / self.window.td_n as f64
            } else {
                0.0
            },
            disc_losses,
            mi_global,
            mi_local,
            extrinsic_reward: self.task.is_particle().then_some(ext_mean),
            weak_signal_mean: (self.task == Task::Rendezvous).then_some(ext_mean),
        };
        if !record.is_finite() {
            return Err(Error::NonFinite(format!(
                "metrics at episode {}: {record:?}",
                self.episode
            )));
        }
        Ok(record)
    }

    /// Exact mutual information of the current relaxed policies on the
    /// bit-flip game (skill space must be the game's two categories).
    pub fn exact_xor_mi(&self) -> Result<crate::analysis::XorMi> {
        if self.task != Task::Xor {
            return Err(Error::Config("exact MI applies to the xor task".into()));
        }
        let space = &self.space;
        let f0 = super::xor_prob_fn(&self.agents.actors[0], space);
        let f1 = super::xor_prob_fn(&self.agents.actors[1], space);
        exact_mi_xor([&f0, &f1], space.active_k())
    }

    /// Runs the configured number of episodes, interleaving collection,
    /// update rounds, metrics, curriculum checks, and checkpoints.
    pub fn train(&mut self, hooks: &mut dyn TrainHooks) -> Result<()> {
        while self.episode < self.config.episodes {
            self.run_episode()?;
            self.episode += 1;
            if self.replay.len() >= self.config.warmup_transitions.max(1) {
                for _ in 0..self.config.updates_per_episode {
                    self.update_round()?;
                }
            }
            let at_interval = self.episode % self.config.eval_interval == 0;
            let last = self.episode == self.config.episodes;
            if at_interval || last {
                let record = self.metrics_record()?;
                // Curriculum reads the same windowed global log-probability
                // the metrics report.
                if self.config.use_pseudo_reward
                    && self.config.fixed_skill.is_none()
                    && matches!(self.space, SkillSpace::Discrete { .. })
                {
                    self.curriculum
                        .observe(&mut self.space, record.mean_global_lp)?;
                }
                hooks.on_metrics(&record)?;
                self.window.reset();
                if !self.agents.is_finite() || !self.disc.global.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "network parameters at episode {}",
                        self.episode
                    )));
                }
            }
            if self.config.checkpoint_interval > 0
                && self.episode % self.config.checkpoint_interval == 0
            {
                hooks.on_checkpoint(self)?;
            }
        }
        hooks.on_checkpoint(self)?;
        Ok(())
    }

    // ---- checkpoint packing ----

    fn code_cols(&self) -> usize {
        match &self.space {
            SkillSpace::Discrete { .. } => 1,
            SkillSpace::Continuous { dim } => *dim,
        }
    }

    fn encode_code_row(&self, code: &SkillCode) -> Vec<f64> {
        match code {
            SkillCode::Discrete(i) => vec![*i as f64],
            SkillCode::Continuous(v) => v.clone(),
        }
    }

    fn decode_code_row(&self, row: &[f64]) -> Result<SkillCode> {
        match &self.space {
            SkillSpace::Discrete { k_max, .. } => {
                let i = row[0] as usize;
                if row[0].fract() != 0.0 || i >= *k_max {
                    return Err(Error::Checkpoint(format!("bad skill index {}", row[0])));
                }
                Ok(SkillCode::Discrete(i))
            }
            SkillSpace::Continuous { .. } => Ok(SkillCode::Continuous(row.to_vec())),
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new();
        ck.push_meta("episode", self.episode as i64);
        ck.push_meta("active_k", self.space.active_k() as i64);
        ck.push_meta("curriculum_streak", self.curriculum.streak() as i64);
        ck.push_meta("rng_seed", self.rng.seed() as i64);
        let pos = self.rng.word_pos();
        ck.push_meta("rng_word_lo", (pos as u64) as i64);
        ck.push_meta("rng_word_hi", ((pos >> 64) as u64) as i64);
        ck.push_meta("num_agents", self.agents.num_agents() as i64);

        let flat_row = |v: Vec<f64>| Matrix::from_vec(1, v.len(), v).unwrap();
        let n = self.agents.num_agents();
        for i in 0..n {
            ck.push_array(&format!("actor{i}"), flat_row(self.agents.actors[i].flatten()));
            ck.push_array(
                &format!("actor{i}_target"),
                flat_row(self.agents.actor_targets[i].flatten()),
            );
            let (m, v) = self.agents.actor_opts[i].flatten();
            ck.push_array(&format!("actor{i}_m"), flat_row(m));
            ck.push_array(&format!("actor{i}_v"), flat_row(v));
            ck.push_meta(&format!("actor{i}_step"), self.agents.actor_opts[i].step as i64);

            ck.push_array(&format!("critic{i}"), flat_row(self.agents.critics[i].flatten()));
            ck.push_array(
                &format!("critic{i}_target"),
                flat_row(self.agents.critic_targets[i].flatten()),
            );
            let (m, v) = self.agents.critic_opts[i].flatten();
            ck.push_array(&format!("critic{i}_m"), flat_row(m));
            ck.push_array(&format!("critic{i}_v"), flat_row(v));
            ck.push_meta(
                &format!("critic{i}_step"),
                self.agents.critic_opts[i].step as i64,
            );
        }
        ck.push_array("disc_global", flat_row(self.disc.global.flatten()));
        let (m, v) = self.disc.global_opt.flatten();
        ck.push_array("disc_global_m", flat_row(m));
        ck.push_array("disc_global_v", flat_row(v));
        ck.push_meta("disc_global_step", self.disc.global_opt.step as i64);
        for i in 0..n {
            ck.push_array(&format!("disc_local{i}"), flat_row(self.disc.locals[i].flatten()));
            let (m, v) = self.disc.local_opts[i].flatten();
            ck.push_array(&format!("disc_local{i}_m"), flat_row(m));
            ck.push_array(&format!("disc_local{i}_v"), flat_row(v));
            ck.push_meta(&format!("disc_local{i}_step"), self.disc.local_opts[i].step as i64);
        }

        // Replay contents, so a resumed run continues bit-exactly.
        let obs_dim = self.agents.obs_dim();
        let act_dim = self.agents.action_dim();
        let len = self.replay.len();
        let ccols = self.code_cols();
        let mut rl_obs = Matrix::zeros(len, n * obs_dim);
        let mut rl_next_obs = Matrix::zeros(len, n * obs_dim);
        let mut rl_actions = Matrix::zeros(len, n * act_dim);
        let mut rl_rewards = Matrix::zeros(len, n);
        let mut rl_extrinsic = Matrix::zeros(len, n);
        let mut rl_features = Matrix::zeros(len, self.disc.global.input_dim());
        let mut rl_code = Matrix::zeros(len, ccols);
        let mut rl_done = Matrix::zeros(len, 1);
        for (r, t) in self.replay.iter().enumerate() {
            for i in 0..n {
                rl_obs.row_mut(r)[i * obs_dim..(i + 1) * obs_dim].copy_from_slice(&t.obs[i]);
                rl_next_obs.row_mut(r)[i * obs_dim..(i + 1) * obs_dim]
                    .copy_from_slice(&t.next_obs[i]);
                rl_actions.row_mut(r)[i * act_dim..(i + 1) * act_dim]
                    .copy_from_slice(&t.actions[i]);
                rl_rewards.set(r, i, t.rewards[i]);
                rl_extrinsic.set(r, i, t.extrinsic[i]);
            }
            rl_features.row_mut(r).copy_from_slice(&t.next_features);
            rl_code.row_mut(r).copy_from_slice(&self.encode_code_row(&t.code));
            rl_done.set(r, 0, f64::from(t.done));
        }
        ck.push_meta("replay_cursor", self.replay.cursor() as i64);
        ck.push_array("rl_obs", rl_obs);
        ck.push_array("rl_next_obs", rl_next_obs);
        ck.push_array("rl_actions", rl_actions);
        ck.push_array("rl_rewards", rl_rewards);
        ck.push_array("rl_extrinsic", rl_extrinsic);
        ck.push_array("rl_features", rl_features);
        ck.push_array("rl_code", rl_code);
        ck.push_array("rl_done", rl_done);

        let dlen = self.disc_replay.len();
        let mut d_features = Matrix::zeros(dlen, self.disc.global.input_dim());
        let mut d_code = Matrix::zeros(dlen, ccols);
        for (r, s) in self.disc_replay.iter().enumerate() {
            d_features.row_mut(r).copy_from_slice(&s.features);
            d_code.row_mut(r).copy_from_slice(&self.encode_code_row(&s.code));
        }
        ck.push_meta("disc_replay_cursor", self.disc_replay.cursor() as i64);
        ck.push_array("disc_features", d_features);
        ck.push_array("disc_code", d_code);
        ck
    }

    /// Restores full training state from a checkpoint produced by a
    /// trainer with the same configuration. Shapes are verified.
    pub fn restore(&mut self, ck: &Checkpoint) -> Result<()> {
        let n = self.agents.num_agents();
        if ck.meta("num_agents")? != n as i64 {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} agents, config builds {n}",
                ck.meta("num_agents")?
            )));
        }
        let active_k = ck.meta("active_k")? as usize;
        if matches!(self.space, SkillSpace::Discrete { .. }) {
            self.space.set_active_k(active_k)?;
        }
        self.curriculum.set_streak(ck.meta("curriculum_streak")? as usize);
        self.episode = ck.meta("episode")? as u64;
        let lo = ck.meta("rng_word_lo")? as u64 as u128;
        let hi = ck.meta("rng_word_hi")? as u64 as u128;
        self.rng = RngStream::restore(ck.meta("rng_seed")? as u64, (hi << 64) | lo);

        let load_net = |net: &mut Mlp, name: &str| -> Result<()> {
            let arr = ck.array(name)?;
            net.load_flat(arr.data()).map_err(|e| {
                Error::Checkpoint(format!("array {name} does not fit current config: {e}"))
            })
        };
        for i in 0..n {
            load_net(&mut self.agents.actors[i], &format!("actor{i}"))?;
            load_net(&mut self.agents.actor_targets[i], &format!("actor{i}_target"))?;
            self.agents.actor_opts[i]
                .load_flat(
                    ck.array(&format!("actor{i}_m"))?.data(),
                    ck.array(&format!("actor{i}_v"))?.data(),
                    ck.meta(&format!("actor{i}_step"))? as u64,
                )
                .map_err(|e| Error::Checkpoint(format!("actor{i} optimizer: {e}")))?;
            load_net(&mut self.agents.critics[i], &format!("critic{i}"))?;
            load_net(&mut self.agents.critic_targets[i], &format!("critic{i}_target"))?;
            self.agents.critic_opts[i]
                .load_flat(
                    ck.array(&format!("critic{i}_m"))?.data(),
                    ck.array(&format!("critic{i}_v"))?.data(),
                    ck.meta(&format!("critic{i}_step"))? as u64,
                )
                .map_err(|e| Error::Checkpoint(format!("critic{i} optimizer: {e}")))?;
        }
        load_net(&mut self.disc.global, "disc_global")?;
        self.disc
            .global_opt
            .load_flat(
                ck.array("disc_global_m")?.data(),
                ck.array("disc_global_v")?.data(),
                ck.meta("disc_global_step")? as u64,
            )
            .map_err(|e| Error::Checkpoint(format!("global discriminator optimizer: {e}")))?;
        for i in 0..n {
            load_net(&mut self.disc.locals[i], &format!("disc_local{i}"))?;
            self.disc.local_opts[i]
                .load_flat(
                    ck.array(&format!("disc_local{i}_m"))?.data(),
                    ck.array(&format!("disc_local{i}_v"))?.data(),
                    ck.meta(&format!("disc_local{i}_step"))? as u64,
                )
                .map_err(|e| Error::Checkpoint(format!("local discriminator {i} optimizer: {e}")))?;
        }

        let obs_dim = self.agents.obs_dim();
        let act_dim = self.agents.action_dim();
        let rl_obs = ck.array("rl_obs")?;
        let rl_next_obs = ck.array("rl_next_obs")?;
        let rl_actions = ck.array("rl_actions")?;
        let rl_rewards = ck.array("rl_rewards")?;
        let rl_extrinsic = ck.array("rl_extrinsic")?;
        let rl_features = ck.array("rl_features")?;
        let rl_code = ck.array("rl_code")?;
        let rl_done = ck.array("rl_done")?;
        let len = rl_obs.rows();
        if rl_obs.cols() != n * obs_dim
            || rl_actions.cols() != n * act_dim
            || rl_features.cols() != self.disc.global.input_dim()
            || rl_code.cols() != self.code_cols()
        {
            return Err(Error::Checkpoint(
                "replay arrays do not match current configuration".into(),
            ));
        }
        self.replay = ReplayRl::new(self.config.replay_capacity);
        for r in 0..len {
            let slice_per_agent = |m: &Matrix, width: usize| -> Vec<Vec<f64>> {
                (0..n)
                    .map(|i| m.row(r)[i * width..(i + 1) * width].to_vec())
                    .collect()
            };
            self.replay.push(Transition {
                obs: slice_per_agent(rl_obs, obs_dim),
                actions: slice_per_agent(rl_actions, act_dim),
                code: self.decode_code_row(rl_code.row(r))?,
                rewards: rl_rewards.row(r).to_vec(),
                extrinsic: rl_extrinsic.row(r).to_vec(),
                next_obs: slice_per_agent(rl_next_obs, obs_dim),
                next_features: rl_features.row(r).to_vec(),
                done: rl_done.at(r, 0) != 0.0,
            });
        }
        self.replay.set_cursor(ck.meta("replay_cursor")? as usize);

        let d_features = ck.array("disc_features")?;
        let d_code = ck.array("disc_code")?;
        self.disc_replay = ReplayDisc::new(self.config.disc_replay_capacity);
        for r in 0..d_features.rows() {
            self.disc_replay.push(DiscSample {
                features: d_features.row(r).to_vec(),
                code: self.decode_code_row(d_code.row(r))?,
            });
        }
        self.disc_replay
            .set_cursor(ck.meta("disc_replay_cursor")? as usize);
        self.window.reset();
        Ok(())
    }

    /// Loads only the learned networks (actors, critics, and their target
    /// copies) from a skill-discovery checkpoint, leaving optimizers,
    /// replays, counters, and the stream untouched. The finetuning entry
    /// point.
    pub fn load_networks(&mut self, ck: &Checkpoint) -> Result<()> {
        let n = self.agents.num_agents();
        if ck.meta("num_agents")? != n as i64 {
            return Err(Error::Checkpoint(format!(
                "checkpoint has {} agents, config builds {n}",
                ck.meta("num_agents")?
            )));
        }
        for i in 0..n {
            let arr = ck.array(&format!("actor{i}"))?;
            self.agents.actors[i].load_flat(arr.data()).map_err(|e| {
                Error::Checkpoint(format!("actor{i} does not fit current config: {e}"))
            })?;
            self.agents.actor_targets[i] = self.agents.actors[i].clone();
            let arr = ck.array(&format!("critic{i}"))?;
            self.agents.critics[i].load_flat(arr.data()).map_err(|e| {
                Error::Checkpoint(format!("critic{i} does not fit current config: {e}"))
            })?;
            self.agents.critic_targets[i] = self.agents.critics[i].clone();
        }
        if matches!(self.space, SkillSpace::Discrete { .. }) {
            self.space.set_active_k(ck.meta("active_k")? as usize)?;
        }
        Ok(())
    }
}
