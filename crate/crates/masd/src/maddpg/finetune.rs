//! Supervised finetuning on the tag task: pick the best pretrained skill
//! by evaluating every active code on the extrinsic reward, pin it, and
//! train on extrinsic reward alone (discriminators unused).
//!
//! The trainer handed in must be configured for supervised training
//! (`use_pseudo_reward = false`, `extrinsic_coeff = 1`). With no
//! checkpoint this reduces to plain multi-agent actor-critic training
//! from scratch under a constant code input, which is the random-init
//! baseline arm.

use super::trainer::{MetricsRecord, TrainHooks, Trainer};
use crate::io::checkpoint::Checkpoint;
use crate::Result;

#[derive(Debug, Clone)]
pub struct SkillSelection {
    pub skill: usize,
    /// Mean per-episode extrinsic return measured for each active skill.
    pub mean_returns: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FinetuneReport {
    pub selection: SkillSelection,
    pub records: Vec<MetricsRecord>,
    /// Mean per-episode extrinsic return over the trailing metric window.
    pub final_window_mean: f64,
}

/// Evaluates one skill for one episode with frozen, noise-free policies
/// on a derived stream; returns the mean per-agent extrinsic return.
fn eval_episode_return(trainer: &mut Trainer, skill: usize, label: u64) -> Result<f64> {
    let mut env_rng = trainer.rng.derive(label);
    let code = crate::skills::SkillCode::Discrete(skill);
    let z_enc = code.encode(&trainer.space);
    let n = trainer.agents.num_agents();
    let mut obs = trainer.env.reset(&mut env_rng);
    let mut total = 0.0;
    loop {
        let mut actions = Vec::with_capacity(n);
        for i in 0..n {
            let a = super::act(
                &trainer.agents.actors[i],
                trainer.agents.head,
                &obs[i],
                &z_enc,
                0.0,
                trainer.config.xor_temperature,
                false,
                &mut env_rng,
            )?;
            actions.push(a.executed);
        }
        let step = trainer.env.step(&actions, &mut env_rng)?;
        total += step.rewards.iter().sum::<f64>() / n as f64;
        obs = step.observations;
        if step.done {
            break;
        }
    }
    Ok(total)
}

/// Measures every active skill over `episodes_per_skill` shared initial
/// conditions and returns the argmax. Evaluation uses derived streams,
/// so the training stream is untouched and paired runs stay paired.
pub fn select_skill(trainer: &mut Trainer, episodes_per_skill: usize) -> Result<SkillSelection> {
    let k = trainer.space.active_k().max(1);
    let mut means = vec![0.0; k];
    for (s, mean) in means.iter_mut().enumerate() {
        let mut sum = 0.0;
        for e in 0..episodes_per_skill {
            // Same label per episode index across skills: every skill
            // faces the same initial conditions and prey randomness.
            sum += eval_episode_return(trainer, s, 0x5E1EC7 + e as u64)?;
        }
        *mean = sum / episodes_per_skill.max(1) as f64;
    }
    let skill = means
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(SkillSelection {
        skill,
        mean_returns: means,
    })
}

struct Tee<'a> {
    inner: &'a mut dyn TrainHooks,
    records: Vec<MetricsRecord>,
}

impl TrainHooks for Tee<'_> {
    fn on_metrics(&mut self, record: &MetricsRecord) -> Result<()> {
        self.records.push(record.clone());
        self.inner.on_metrics(record)
    }

    fn on_checkpoint(&mut self, trainer: &Trainer) -> Result<()> {
        self.inner.on_checkpoint(trainer)
    }
}

/// Full finetuning protocol. `pretrained` loads actor/critic networks
/// from a skill-discovery checkpoint; `None` trains from random
/// initialization. `final_window` counts trailing metric records in the
/// reported convergence reward.
pub fn finetune(
    trainer: &mut Trainer,
    pretrained: Option<&Checkpoint>,
    episodes_per_skill: usize,
    final_window: usize,
    hooks: &mut dyn TrainHooks,
) -> Result<FinetuneReport> {
    if let Some(ck) = pretrained {
        trainer.load_networks(ck)?;
    }
    let selection = select_skill(trainer, episodes_per_skill)?;
    trainer.config.fixed_skill = Some(selection.skill);
    let mut tee = Tee {
        inner: hooks,
        records: Vec::new(),
    };
    trainer.train(&mut tee)?;
    let steps = trainer.env.episode_len() as f64;
    let tail = tee.records.len().saturating_sub(final_window.max(1));
    let window = &tee.records[tail..];
    let final_window_mean = if window.is_empty() {
        0.0
    } else {
        window
            .iter()
            .map(|r| r.extrinsic_reward.unwrap_or(0.0) * steps)
            .sum::<f64>()
            / window.len() as f64
    };
    Ok(FinetuneReport {
        selection,
        records: tee.records,
        final_window_mean,
    })
}
