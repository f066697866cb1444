//! Noise-free policy rollouts for evaluation: trajectory recording on
//! the particle world and the relaxed-policy probability view of the
//! bit-flip game.

use super::{act, sigmoid, ActionHead, MaddpgAgents};
use crate::analysis::TrajectoryRecord;
use crate::envs::{Environment, JointObs, ParticleEnv};
use crate::numerics::{Mlp, RngStream};
use crate::skills::{SkillCode, SkillSpace};
use crate::Result;

/// Probability that a relaxed-binary actor plays 1, as a function of
/// (own bit, other bit, skill). This is the policy head the exact and
/// sampled mutual-information estimators consume.
pub fn xor_prob_fn<'a>(
    actor: &'a Mlp,
    space: &'a SkillSpace,
) -> impl Fn(u8, u8, usize) -> f64 + 'a {
    move |own, other, z| {
        let mut input = vec![f64::from(own), f64::from(other)];
        input.extend(SkillCode::Discrete(z).encode(space));
        let out = actor
            .forward_row(&input)
            .expect("actor width fixed at construction");
        sigmoid(out[0])
    }
}

/// Deterministic rollout of one skill from the environment's current
/// reset state. Returns the positions of every agent at every step
/// (including the initial one) and the mean per-agent extrinsic return.
#[allow(clippy::too_many_arguments)]
pub fn rollout_particle(
    agents: &MaddpgAgents,
    space: &SkillSpace,
    env: &mut ParticleEnv,
    initial_obs: JointObs,
    code: &SkillCode,
    rng: &mut RngStream,
    run_id: u64,
    init_id: usize,
    seed: u64,
) -> Result<(TrajectoryRecord, f64)> {
    let n = env.num_agents();
    let z_enc = code.encode(space);
    let mut positions: Vec<Vec<[f64; 2]>> = (0..n)
        .map(|i| vec![env.state().agent_pos[i]])
        .collect();
    let mut obs = initial_obs;
    let mut extrinsic_sum = 0.0;
    loop {
        let mut actions = Vec::with_capacity(n);
        for i in 0..n {
            let a = act(
                &agents.actors[i],
                ActionHead::Continuous,
                &obs[i],
                &z_enc,
                0.0,
                1.0,
                false,
                rng,
            )?;
            actions.push(a.executed);
        }
        let step = env.step(&actions, rng)?;
        for (i, path) in positions.iter_mut().enumerate() {
            path.push(env.state().agent_pos[i]);
        }
        extrinsic_sum += step.rewards.iter().sum::<f64>() / n as f64;
        obs = step.observations;
        if step.done {
            break;
        }
    }
    let skill = match code {
        SkillCode::Discrete(i) => *i,
        SkillCode::Continuous(_) => 0,
    };
    Ok((
        TrajectoryRecord {
            run_id,
            skill,
            init_id,
            seed,
            positions,
        },
        extrinsic_sum,
    ))
}
