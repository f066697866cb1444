//! One-step two-agent bit-flip game.
//!
//! Both agents' bits are mutually visible: agent i observes (own bit,
//! other bit), while the extracted feature is the own bit alone. The
//! joint feature (both bits) can therefore carry relational structure
//! (e.g. parity) that neither single-agent feature exposes.

use super::{Environment, JointObs, StepResult};
use crate::numerics::RngStream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XorState {
    pub bits: [u8; 2],
}

/// Transition rule: x' = x xor u, one step per episode.
pub fn xor_step(state: XorState, actions: [u8; 2]) -> Result<XorState> {
    if actions.iter().any(|&a| a > 1) {
        return Err(Error::Env(format!("non-binary action {actions:?}")));
    }
    Ok(XorState {
        bits: [state.bits[0] ^ actions[0], state.bits[1] ^ actions[1]],
    })
}

#[derive(Debug, Clone)]
pub struct XorEnv {
    state: XorState,
    stepped: bool,
}

impl XorEnv {
    pub fn new() -> Self {
        Self {
            state: XorState { bits: [0, 0] },
            stepped: false,
        }
    }

    pub fn state(&self) -> XorState {
        self.state
    }

    fn observations(&self) -> JointObs {
        let b = self.state.bits;
        vec![
            vec![b[0] as f64, b[1] as f64],
            vec![b[1] as f64, b[0] as f64],
        ]
    }
}

impl Default for XorEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for XorEnv {
    fn num_agents(&self) -> usize {
        2
    }

    fn obs_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn feature_dim(&self) -> usize {
        1
    }

    fn episode_len(&self) -> usize {
        1
    }

    fn reset(&mut self, rng: &mut RngStream) -> JointObs {
        self.state = XorState {
            bits: [
                if rng.bernoulli(0.5) { 1 } else { 0 },
                if rng.bernoulli(0.5) { 1 } else { 0 },
            ],
        };
        self.stepped = false;
        self.observations()
    }

    fn step(&mut self, actions: &[Vec<f64>], _rng: &mut RngStream) -> Result<StepResult> {
        if actions.len() != 2 || actions.iter().any(|a| a.len() != 1) {
            return Err(Error::Env("xor expects 2 scalar actions".into()));
        }
        let mut bits = [0u8; 2];
        for (i, a) in actions.iter().enumerate() {
            bits[i] = if a[0] == 1.0 {
                1
            } else if a[0] == 0.0 {
                0
            } else {
                return Err(Error::Env(format!("non-binary action {}", a[0])));
            };
        }
        self.state = xor_step(self.state, bits)?;
        self.stepped = true;
        Ok(StepResult {
            observations: self.observations(),
            rewards: vec![0.0, 0.0],
            done: true,
        })
    }

    fn extract_feature(&self, obs: &[f64]) -> Vec<f64> {
        vec![obs[0]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transition_rule_cases() {
        let s = |a, b| XorState { bits: [a, b] };
        assert_eq!(xor_step(s(0, 1), [1, 1]).unwrap(), s(1, 0));
        assert_eq!(xor_step(s(0, 0), [0, 0]).unwrap(), s(0, 0));
        assert_eq!(xor_step(s(1, 1), [1, 0]).unwrap(), s(0, 1));
        assert!(xor_step(s(0, 0), [2, 0]).is_err());
    }

    #[test]
    fn reset_uniform_over_joint_states() {
        let mut env = XorEnv::new();
        let mut rng = RngStream::seed_from(123);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            env.reset(&mut rng);
            let b = env.state().bits;
            counts[(b[0] * 2 + b[1]) as usize] += 1;
            assert!(b[0] <= 1 && b[1] <= 1);
        }
        for &c in &counts {
            let f = c as f64 / n as f64;
            assert!((f - 0.25).abs() < 0.01, "joint state frequency {f}");
        }
    }

    #[test]
    fn reset_reproducible() {
        let mut a = XorEnv::new();
        let mut b = XorEnv::new();
        let mut ra = RngStream::seed_from(7);
        let mut rb = RngStream::seed_from(7);
        for _ in 0..100 {
            a.reset(&mut ra);
            b.reset(&mut rb);
            assert_eq!(a.state(), b.state());
        }
    }

    #[test]
    fn observations_are_mutually_visible_and_feature_is_own_bit() {
        let mut env = XorEnv::new();
        let mut rng = RngStream::seed_from(5);
        env.reset(&mut rng);
        let obs = env.observations();
        let b = env.state().bits;
        assert_eq!(obs[0], vec![b[0] as f64, b[1] as f64]);
        assert_eq!(obs[1], vec![b[1] as f64, b[0] as f64]);
        assert_eq!(env.extract_feature(&obs[0]), vec![b[0] as f64]);
        assert_eq!(env.extract_feature(&obs[1]), vec![b[1] as f64]);
        assert_eq!(env.joint_features(&obs), vec![b[0] as f64, b[1] as f64]);
    }

    #[test]
    fn involution_in_actions() {
        let mut rng = RngStream::seed_from(9);
        for _ in 0..200 {
            let start = XorState {
                bits: [
                    if rng.bernoulli(0.5) { 1 } else { 0 },
                    if rng.bernoulli(0.5) { 1 } else { 0 },
                ],
            };
            let u = [
                if rng.bernoulli(0.5) { 1 } else { 0 },
                if rng.bernoulli(0.5) { 1 } else { 0 },
            ];
            let once = xor_step(start, u).unwrap();
            let twice = xor_step(once, u).unwrap();
            assert_eq!(twice, start);
        }
    }

    #[test]
    fn step_terminates_immediately() {
        let mut env = XorEnv::new();
        let mut rng = RngStream::seed_from(1);
        env.reset(&mut rng);
        let r = env
            .step(&[vec![1.0], vec![0.0]], &mut rng)
            .unwrap();
        assert!(r.done);
        assert_eq!(r.rewards, vec![0.0, 0.0]);
    }
}
