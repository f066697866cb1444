//! Tabular fallback for the bit-flip game: the toy is small enough to
//! enumerate, so the policy can be a logit table over (own bit, other
//! bit, skill) and its gradient of the expected pseudo reward computed
//! exactly — no critics, no replay. Discriminators are still learned
//! networks trained on policy samples, keeping the adversarial structure.

use crate::analysis::{exact_mi_xor, XorMi};
use crate::numerics::{Matrix, RngStream};
use crate::skills::{
    discriminator_update, pseudo_reward, DiscBatch, DiscLoss, DiscriminatorSet,
    PseudoRewardConfig, SkillCode, SkillSpace,
};
use crate::Result;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// logits[agent][own][other][z]
type LogitTable = Vec<[[Vec<f64>; 2]; 2]>;

pub struct TabularXorReport {
    /// (iteration, exact MI) sampled along training.
    pub mi_history: Vec<(u64, XorMi)>,
    pub final_mi: XorMi,
}

/// Trains tabular policies on the bit-flip game by exact expected-reward
/// ascent against learned discriminators.
pub fn train_xor_tabular(
    iterations: u64,
    policy_lr: f64,
    reward_cfg: &PseudoRewardConfig,
    disc_lr: f64,
    disc_hidden: &[usize],
    batch: usize,
    eval_interval: u64,
    seed: u64,
) -> Result<TabularXorReport> {
    let k = 2usize;
    let space = SkillSpace::discrete(k, k)?;
    let mut rng = RngStream::seed_from(seed);
    let mut disc = DiscriminatorSet::new(&space, 2, 1, disc_hidden, DiscLoss::Ce, disc_lr, &mut rng)?;

    let mut logits: LogitTable = (0..2)
        .map(|_| {
            [
                [
                    (0..k).map(|_| rng.uniform(-0.1, 0.1)).collect(),
                    (0..k).map(|_| rng.uniform(-0.1, 0.1)).collect(),
                ],
                [
                    (0..k).map(|_| rng.uniform(-0.1, 0.1)).collect(),
                    (0..k).map(|_| rng.uniform(-0.1, 0.1)).collect(),
                ],
            ]
        })
        .collect();

    let prob = |logits: &LogitTable, agent: usize, own: usize, other: usize, z: usize| -> f64 {
        sigmoid(logits[agent][own][other][z])
    };

    let mut mi_history = Vec::new();
    for iter in 0..iterations {
        // Reward table r(x'1, x'2, z) under the current discriminators.
        let mut reward = [[[0.0f64; 2]; 2]; 2];
        for b1 in 0..2usize {
            for b2 in 0..2usize {
                for z in 0..k {
                    let code = SkillCode::Discrete(z);
                    let g = disc.global_logprob(&space, &[b1 as f64, b2 as f64], &code)?;
                    let l1 = disc.local_logprob(&space, 0, &[b1 as f64], &code)?;
                    let l2 = disc.local_logprob(&space, 1, &[b2 as f64], &code)?;
                    reward[b1][b2][z] = pseudo_reward(reward_cfg, g, &[l1, l2])?;
                }
            }
        }

        // Exact gradient of E[r] w.r.t. every logit.
        let mut grads: LogitTable = (0..2)
            .map(|_| {
                [
                    [vec![0.0; k], vec![0.0; k]],
                    [vec![0.0; k], vec![0.0; k]],
                ]
            })
            .collect();
        let p_zx = 1.0 / (k as f64 * 4.0);
        for z in 0..k {
            for x1 in 0..2usize {
                for x2 in 0..2usize {
                    let p1 = prob(&logits, 0, x1, x2, z);
                    let p2 = prob(&logits, 1, x2, x1, z);
                    // Agent 0: d/dlogit of sum over u of pi * r.
                    let mut diff0 = 0.0;
                    let mut diff1 = 0.0;
                    for u_other in 0..2usize {
                        let po = if u_other == 1 { p2 } else { 1.0 - p2 };
                        diff0 += po * (reward[x1 ^ 1][x2 ^ u_other][z] - reward[x1][x2 ^ u_other][z]);
                        let po1 = if u_other == 1 { p1 } else { 1.0 - p1 };
                        diff1 += po1 * (reward[x1 ^ u_other][x2 ^ 1][z] - reward[x1 ^ u_other][x2][z]);
                    }
                    grads[0][x1][x2][z] += p_zx * p1 * (1.0 - p1) * diff0;
                    grads[1][x2][x1][z] += p_zx * p2 * (1.0 - p2) * diff1;
                }
            }
        }
        for agent in 0..2 {
            for own in 0..2 {
                for other in 0..2 {
                    for z in 0..k {
                        logits[agent][own][other][z] += policy_lr * grads[agent][own][other][z];
                    }
                }
            }
        }

        // Discriminators train on a fresh on-policy sample.
        let mut rows = Vec::with_capacity(batch);
        let mut codes = Vec::with_capacity(batch);
        for _ in 0..batch {
            let z = rng.index(k);
            let x1 = usize::from(rng.bernoulli(0.5));
            let x2 = usize::from(rng.bernoulli(0.5));
            let u1 = usize::from(rng.bernoulli(prob(&logits, 0, x1, x2, z)));
            let u2 = usize::from(rng.bernoulli(prob(&logits, 1, x2, x1, z)));
            rows.push(vec![(x1 ^ u1) as f64, (x2 ^ u2) as f64]);
            codes.push(SkillCode::Discrete(z));
        }
        let features = Matrix::from_rows(&rows).expect("uniform rows");
        discriminator_update(
            &mut disc,
            &space,
            &DiscBatch {
                joint_features: &features,
                codes: &codes,
            },
        )?;

        if (iter + 1) % eval_interval == 0 || iter + 1 == iterations {
            let f0 = |own: u8, other: u8, z: usize| prob(&logits, 0, own as usize, other as usize, z);
            let f1 = |own: u8, other: u8, z: usize| prob(&logits, 1, own as usize, other as usize, z);
            let mi = exact_mi_xor([&f0, &f1], k)?;
            mi_history.push((iter + 1, mi));
        }
    }
    let final_mi = {
        let f0 = |own: u8, other: u8, z: usize| prob(&logits, 0, own as usize, other as usize, z);
        let f1 = |own: u8, other: u8, z: usize| prob(&logits, 1, own as usize, other as usize, z);
        exact_mi_xor([&f0, &f1], k)?
    };
    Ok(TabularXorReport {
        mi_history,
        final_mi,
    })
}
