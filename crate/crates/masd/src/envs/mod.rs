//! Environments: the one-step bit-flip game and a 2D particle world
//! hosting the spread, rendezvous, and tag tasks, plus the per-agent
//! feature extractor used by all discriminators.
//!
//! Instances are independent state machines; many may step concurrently,
//! a single instance has one caller.

mod particle;
mod xor;

pub use particle::{InitSnapshot, ParticleEnv, ParticleParams, ParticleState, ParticleTask};
pub use xor::{XorEnv, XorState};

use crate::numerics::RngStream;
use crate::Result;
use serde::{Deserialize, Serialize};

/// Which task an experiment runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Xor,
    Spread,
    Rendezvous,
    Tag,
}

impl Task {
    pub fn is_particle(self) -> bool {
        !matches!(self, Task::Xor)
    }
}

/// Per-agent observation vectors for one time step.
pub type JointObs = Vec<Vec<f64>>;

#[derive(Debug, Clone)]
pub struct StepResult {
    pub observations: JointObs,
    /// Per-agent extrinsic reward (identically zero for spread; the weak
    /// centering signal for rendezvous; hit + auxiliary for tag).
    pub rewards: Vec<f64>,
    pub done: bool,
}

/// Common environment surface. Actions are per-agent `Vec<f64>`; the
/// bit-flip game expects exactly 0.0 or 1.0 components, the particle
/// world accepts forces in [-1, 1]^2.
pub trait Environment {
    fn num_agents(&self) -> usize;
    /// Per-agent observation dimension (uniform across agents).
    fn obs_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Dimension of the extracted per-agent feature f(x).
    fn feature_dim(&self) -> usize;
    /// Episode length T; `done` is raised exactly at step T.
    fn episode_len(&self) -> usize;
    fn reset(&mut self, rng: &mut RngStream) -> JointObs;
    fn step(&mut self, actions: &[Vec<f64>], rng: &mut RngStream) -> Result<StepResult>;
    /// Extracts the non-redundant per-agent state from a raw observation.
    fn extract_feature(&self, obs: &[f64]) -> Vec<f64>;

    /// Concatenated features of all agents, the discriminators' global view.
    fn joint_features(&self, obs: &JointObs) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_agents() * self.feature_dim());
        for o in obs {
            out.extend(self.extract_feature(o));
        }
        out
    }
}

/// Builds the environment for a task with the given particle parameters.
pub fn make_env(task: Task, params: &ParticleParams) -> Box<dyn Environment> {
    match task {
        Task::Xor => Box::new(XorEnv::new()),
        Task::Spread => Box::new(ParticleEnv::new(ParticleTask::Spread, params.clone())),
        Task::Rendezvous => Box::new(ParticleEnv::new(ParticleTask::Rendezvous, params.clone())),
        Task::Tag => Box::new(ParticleEnv::new(ParticleTask::Tag, params.clone())),
    }
}
