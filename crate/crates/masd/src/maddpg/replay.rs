//! Ring-buffer replay memories with FIFO eviction and uniform sampling.

use crate::numerics::RngStream;
use crate::skills::SkillCode;

/// One environment transition as stored for off-policy training.
///
/// `actions` holds what the critics consume: the executed force for
/// particle tasks, the relaxed head probability for the bit-flip game.
/// `rewards` is the per-agent training reward (pseudo + weighted
/// extrinsic); `extrinsic` keeps the raw extrinsic component so rewards
/// can be recomposed when the pseudo part is recomputed at train time.
#[derive(Debug, Clone)]
pub struct Transition {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub code: SkillCode,
    pub rewards: Vec<f64>,
    pub extrinsic: Vec<f64>,
    pub next_obs: Vec<Vec<f64>>,
    /// Joint feature vector f of the next observation, the discriminator
    /// view of this transition.
    pub next_features: Vec<f64>,
    pub done: bool,
}

/// One discriminator sample: (f(x_{t+1}), z).
#[derive(Debug, Clone)]
pub struct DiscSample {
    pub features: Vec<f64>,
    pub code: SkillCode,
}

/// Fixed-capacity ring: the oldest entry is overwritten first.
#[derive(Debug, Clone)]
pub struct Replay<T> {
    items: Vec<T>,
    capacity: usize,
    next: usize,
}

pub type ReplayRl = Replay<Transition>;
pub type ReplayDisc = Replay<DiscSample>;

impl<T> Replay<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            next: 0,
        }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
            self.next = (self.next + 1) % self.capacity;
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Ring cursor, exposed for checkpointing.
    pub fn cursor(&self) -> usize {
        self.next
    }

    pub fn set_cursor(&mut self, cursor: usize) {
        self.next = cursor;
    }

    pub fn get(&self, idx: usize) -> &T {
        &self.items[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// Uniform sample of `n` indices (with replacement).
    pub fn sample_indices(&self, n: usize, rng: &mut RngStream) -> Vec<usize> {
        (0..n).map(|_| rng.index(self.items.len())).collect()
    }
}
