//! Deterministic numeric kernels: matrices, MLPs with exact backprop,
//! Adam, and the log-probability primitives shared by every learned
//! component. Pure functions over explicit state; nothing here holds
//! global or shared mutable state.

mod matrix;
mod mlp;
mod rng;

pub use matrix::Matrix;
pub use mlp::{
    adam_step, categorical_logprob, continuous_logprob, log_sum_exp, mlp_init, soft_update,
    AdamState, ContinuousLoss, ForwardCache, HiddenActivation, Mlp, MlpGradients, MlpSpec,
    OutputActivation,
};
pub use rng::RngStream;
