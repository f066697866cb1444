//! Unsupervised discovery of multi-agent coordination skills.
//!
//! Agents share a latent skill code per episode and are trained with a
//! pseudo reward that rewards making the skill decodable from the joint
//! state while adversarially hiding it from every individual agent's
//! state. The crate bundles the learning stack (deterministic MLP
//! numerics, particle and bit-flip environments, discriminators,
//! multi-agent actor-critic training) together with the measurement
//! tools (exact and sampled mutual information, trajectory statistics)
//! and the file formats (config, checkpoints, metrics, trajectory CSV,
//! SVG plots) used to run and verify experiments.

pub mod analysis;
pub mod cli;
pub mod envs;
pub mod io;
pub mod maddpg;
pub mod numerics;
pub mod skills;

use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("environment error: {0}")]
    Env(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
