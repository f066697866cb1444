//! 2D particle world on the square [-1, 1]^2 with double-integrator
//! dynamics: v <- damping * v + accel * a * dt, p <- p + v * dt, with
//! per-entity speed caps and hard position clamping at the walls.
//!
//! Tasks:
//! - spread: 3 agents, 3 landmarks, extrinsic reward identically zero;
//! - rendezvous: 3 agents, weak centering signal -0.1 * max_i d_i^2;
//! - tag: 3 predators chasing a faster scripted prey, hit + auxiliary
//!   distance reward.
//!
//! Observations are agent-centric: own position, own velocity, landmark
//! offsets, other-agent offsets, and (tag) prey offset and velocity. The
//! extracted feature keeps only own position + velocity.

use super::{Environment, JointObs, StepResult};
use crate::numerics::RngStream;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

pub const WORLD_BOUND: f64 = 1.0;

/// Width of the world, the unit for init disturbances.
pub fn world_width() -> f64 {
    2.0 * WORLD_BOUND
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParticleTask {
    Spread,
    Rendezvous,
    Tag,
}

/// Physics and reward constants. Defaults follow common particle-world
/// practice; everything is adjustable through the experiment config.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ParticleParams {
    pub num_agents: usize,
    pub episode_len: usize,
    pub dt: f64,
    /// Velocity retention per step (fraction of velocity kept).
    pub damping: f64,
    pub agent_accel: f64,
    pub agent_max_speed: f64,
    pub prey_accel: f64,
    pub prey_max_speed: f64,
    pub agent_radius: f64,
    pub prey_radius: f64,
    /// Reward granted on predator-prey contact.
    pub hit_reward: f64,
    /// Auxiliary distance penalty coefficient.
    pub aux_coeff: f64,
    /// Grant the hit reward to all predators (true) or only to the ones
    /// in contact (false).
    pub shared_hit: bool,
    /// Include the auxiliary distance term in tag rewards.
    pub include_auxiliary: bool,
    /// Steps the scripted prey holds one random heading.
    pub prey_heading_hold: usize,
}

impl Default for ParticleParams {
    fn default() -> Self {
        Self {
            num_agents: 3,
            episode_len: 25,
            dt: 0.1,
            damping: 0.75,
            agent_accel: 5.0,
            agent_max_speed: 1.0,
            prey_accel: 5.0,
            prey_max_speed: 1.3,
            agent_radius: 0.075,
            prey_radius: 0.05,
            hit_reward: 10.0,
            aux_coeff: 0.1,
            shared_hit: true,
            include_auxiliary: true,
            prey_heading_hold: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub agent_pos: Vec<[f64; 2]>,
    pub agent_vel: Vec<[f64; 2]>,
    pub landmark_pos: Vec<[f64; 2]>,
    pub prey_pos: [f64; 2],
    pub prey_vel: [f64; 2],
    pub step: usize,
}

/// Initial condition: positions only, velocities are zero at reset.
#[derive(Debug, Clone, PartialEq)]
pub struct InitSnapshot {
    pub agent_pos: Vec<[f64; 2]>,
    pub landmark_pos: Vec<[f64; 2]>,
    pub prey_pos: Option<[f64; 2]>,
}

/// Weak rendezvous signal: -0.1 * max_i (distance of agent i from the
/// world center)^2. Always <= 0.
pub fn rendezvous_signal(state: &ParticleState) -> f64 {
    let max_sq = state
        .agent_pos
        .iter()
        .map(|p| p[0] * p[0] + p[1] * p[1])
        .fold(0.0, f64::max);
    -0.1 * max_sq
}

/// Per-predator tag reward on the current state.
pub fn tag_reward(state: &ParticleState, params: &ParticleParams, include_auxiliary: bool) -> Vec<f64> {
    let contact_dist = params.agent_radius + params.prey_radius;
    let dists: Vec<f64> = state
        .agent_pos
        .iter()
        .map(|p| dist(*p, state.prey_pos))
        .collect();
    let any_hit = dists.iter().any(|&d| d < contact_dist);
    state
        .agent_pos
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let mut r = 0.0;
            if params.shared_hit {
                if any_hit {
                    r += params.hit_reward;
                }
            } else if dists[i] < contact_dist {
                r += params.hit_reward;
            }
            if include_auxiliary {
                r -= params.aux_coeff * dists[i];
            }
            r
        })
        .collect()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

fn clamp_pos(p: &mut [f64; 2]) {
    p[0] = p[0].clamp(-WORLD_BOUND, WORLD_BOUND);
    p[1] = p[1].clamp(-WORLD_BOUND, WORLD_BOUND);
}

fn cap_speed(v: &mut [f64; 2], max_speed: f64) {
    let s = (v[0] * v[0] + v[1] * v[1]).sqrt();
    if s > max_speed {
        let k = max_speed / s;
        v[0] *= k;
        v[1] *= k;
    }
}

#[derive(Debug, Clone)]
struct PreyController {
    heading: [f64; 2],
    steps_left: usize,
}

#[derive(Debug, Clone)]
pub struct ParticleEnv {
    task: ParticleTask,
    params: ParticleParams,
    state: ParticleState,
    prey: PreyController,
}

impl ParticleEnv {
    pub fn new(task: ParticleTask, params: ParticleParams) -> Self {
        let n = params.num_agents;
        let n_landmarks = match task {
            ParticleTask::Spread => 3,
            ParticleTask::Rendezvous | ParticleTask::Tag => 0,
        };
        Self {
            task,
            params,
            state: ParticleState {
                agent_pos: vec![[0.0; 2]; n],
                agent_vel: vec![[0.0; 2]; n],
                landmark_pos: vec![[0.0; 2]; n_landmarks],
                prey_pos: [0.0; 2],
                prey_vel: [0.0; 2],
                step: 0,
            },
            prey: PreyController {
                heading: [0.0, 0.0],
                steps_left: 0,
            },
        }
    }

    pub fn task(&self) -> ParticleTask {
        self.task
    }

    pub fn params(&self) -> &ParticleParams {
        &self.params
    }

    pub fn state(&self) -> &ParticleState {
        &self.state
    }

    pub fn num_landmarks(&self) -> usize {
        self.state.landmark_pos.len()
    }

    pub fn has_prey(&self) -> bool {
        matches!(self.task, ParticleTask::Tag)
    }

    pub fn snapshot(&self) -> InitSnapshot {
        InitSnapshot {
            agent_pos: self.state.agent_pos.clone(),
            landmark_pos: self.state.landmark_pos.clone(),
            prey_pos: self.has_prey().then_some(self.state.prey_pos),
        }
    }

    fn zero_velocities(&mut self) {
        for v in &mut self.state.agent_vel {
            *v = [0.0, 0.0];
        }
        self.state.prey_vel = [0.0, 0.0];
        self.state.step = 0;
        self.prey = PreyController {
            heading: [0.0, 0.0],
            steps_left: 0,
        };
    }

    /// Restores an exact initial condition, optionally disturbing agent
    /// positions by U[-scale, +scale] x world width per coordinate.
    pub fn reset_from(
        &mut self,
        snapshot: &InitSnapshot,
        disturbance: Option<(&mut RngStream, f64)>,
    ) -> Result<JointObs> {
        if snapshot.agent_pos.len() != self.params.num_agents
            || snapshot.landmark_pos.len() != self.state.landmark_pos.len()
            || snapshot.prey_pos.is_some() != self.has_prey()
        {
            return Err(Error::Env(format!(
                "snapshot incompatible with task {:?}: {} agents / {} landmarks / prey {}",
                self.task,
                snapshot.agent_pos.len(),
                snapshot.landmark_pos.len(),
                snapshot.prey_pos.is_some()
            )));
        }
        self.state.agent_pos = snapshot.agent_pos.clone();
        self.state.landmark_pos = snapshot.landmark_pos.clone();
        if let Some(p) = snapshot.prey_pos {
            self.state.prey_pos = p;
        }
        if let Some((rng, scale)) = disturbance {
            let amp = scale * world_width();
            for p in &mut self.state.agent_pos {
                p[0] += rng.uniform(-amp, amp);
                p[1] += rng.uniform(-amp, amp);
                clamp_pos(p);
            }
        }
        self.zero_velocities();
        Ok(self.observations())
    }

    pub fn observations(&self) -> JointObs {
        let n = self.params.num_agents;
        let mut obs = Vec::with_capacity(n);
        for i in 0..n {
            let p = self.state.agent_pos[i];
            let mut o = Vec::with_capacity(self.obs_dim());
            o.extend_from_slice(&p);
            o.extend_from_slice(&self.state.agent_vel[i]);
            for lm in &self.state.landmark_pos {
                o.push(lm[0] - p[0]);
                o.push(lm[1] - p[1]);
            }
            for j in 0..n {
                if j != i {
                    let q = self.state.agent_pos[j];
                    o.push(q[0] - p[0]);
                    o.push(q[1] - p[1]);
                }
            }
            if self.has_prey() {
                o.push(self.state.prey_pos[0] - p[0]);
                o.push(self.state.prey_pos[1] - p[1]);
                o.extend_from_slice(&self.state.prey_vel);
            }
            obs.push(o);
        }
        obs
    }

    /// Scripted prey action: a random heading held for a fixed number of
    /// steps plus a flee component away from the nearest predator.
    pub fn prey_action(&mut self, rng: &mut RngStream) -> [f64; 2] {
        if self.prey.steps_left == 0 {
            let angle = rng.uniform(0.0, std::f64::consts::TAU);
            self.prey.heading = [angle.cos(), angle.sin()];
            self.prey.steps_left = self.params.prey_heading_hold;
        }
        self.prey.steps_left -= 1;
        let mut nearest = [0.0, 0.0];
        let mut best = f64::INFINITY;
        for p in &self.state.agent_pos {
            let d = dist(*p, self.state.prey_pos);
            if d < best {
                best = d;
                nearest = *p;
            }
        }
        let mut flee = [
            self.state.prey_pos[0] - nearest[0],
            self.state.prey_pos[1] - nearest[1],
        ];
        let norm = (flee[0] * flee[0] + flee[1] * flee[1]).sqrt();
        if norm > 1e-9 {
            flee[0] /= norm;
            flee[1] /= norm;
        }
        [
            (0.5 * self.prey.heading[0] + 0.8 * flee[0]).clamp(-1.0, 1.0),
            (0.5 * self.prey.heading[1] + 0.8 * flee[1]).clamp(-1.0, 1.0),
        ]
    }

    fn integrate(pos: &mut [f64; 2], vel: &mut [f64; 2], action: [f64; 2], accel: f64, max_speed: f64, params: &ParticleParams) {
        vel[0] = params.damping * vel[0] + accel * action[0] * params.dt;
        vel[1] = params.damping * vel[1] + accel * action[1] * params.dt;
        cap_speed(vel, max_speed);
        pos[0] += vel[0] * params.dt;
        pos[1] += vel[1] * params.dt;
        clamp_pos(pos);
    }

    /// Separates overlapping bodies by moving both apart equally (tag only).
    fn resolve_collisions(&mut self) {
        let n = self.params.num_agents;
        let r2 = 2.0 * self.params.agent_radius;
        for i in 0..n {
            for j in (i + 1)..n {
                let d = dist(self.state.agent_pos[i], self.state.agent_pos[j]);
                if d < r2 && d > 1e-9 {
                    let overlap = (r2 - d) / 2.0;
                    let dx = (self.state.agent_pos[j][0] - self.state.agent_pos[i][0]) / d;
                    let dy = (self.state.agent_pos[j][1] - self.state.agent_pos[i][1]) / d;
                    self.state.agent_pos[i][0] -= dx * overlap;
                    self.state.agent_pos[i][1] -= dy * overlap;
                    self.state.agent_pos[j][0] += dx * overlap;
                    self.state.agent_pos[j][1] += dy * overlap;
                    clamp_pos(&mut self.state.agent_pos[i]);
                    clamp_pos(&mut self.state.agent_pos[j]);
                }
            }
        }
    }
}

impl Environment for ParticleEnv {
    fn num_agents(&self) -> usize {
        self.params.num_agents
    }

    fn obs_dim(&self) -> usize {
        let n = self.params.num_agents;
        let base = 4 + 2 * self.num_landmarks() + 2 * (n - 1);
        if self.has_prey() {
            base + 4
        } else {
            base
        }
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn feature_dim(&self) -> usize {
        4
    }

    fn episode_len(&self) -> usize {
        self.params.episode_len
    }

    fn reset(&mut self, rng: &mut RngStream) -> JointObs {
        for p in &mut self.state.agent_pos {
            p[0] = rng.uniform(-0.9, 0.9);
            p[1] = rng.uniform(-0.9, 0.9);
        }
        for lm in &mut self.state.landmark_pos {
            lm[0] = rng.uniform(-0.9, 0.9);
            lm[1] = rng.uniform(-0.9, 0.9);
        }
        if self.has_prey() {
            self.state.prey_pos = [rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)];
        }
        self.zero_velocities();
        self.observations()
    }

    fn step(&mut self, actions: &[Vec<f64>], rng: &mut RngStream) -> Result<StepResult> {
        let n = self.params.num_agents;
        if actions.len() != n || actions.iter().any(|a| a.len() != 2) {
            return Err(Error::Env(format!(
                "expected {n} actions of dim 2, got {}",
                actions.len()
            )));
        }
        if actions.iter().flatten().any(|v| v.is_nan()) {
            return Err(Error::Env("NaN action".into()));
        }
        let p = self.params.clone();
        for i in 0..n {
            let a = [actions[i][0].clamp(-1.0, 1.0), actions[i][1].clamp(-1.0, 1.0)];
            let (pos, vel) = (&mut self.state.agent_pos[i], &mut self.state.agent_vel[i]);
            Self::integrate(pos, vel, a, p.agent_accel, p.agent_max_speed, &p);
        }
        if self.has_prey() {
            let a = self.prey_action(rng);
            let mut pos = self.state.prey_pos;
            let mut vel = self.state.prey_vel;
            Self::integrate(&mut pos, &mut vel, a, p.prey_accel, p.prey_max_speed, &p);
            self.state.prey_pos = pos;
            self.state.prey_vel = vel;
            self.resolve_collisions();
        }
        self.state.step += 1;
        let rewards = match self.task {
            ParticleTask::Spread => vec![0.0; n],
            ParticleTask::Rendezvous => vec![rendezvous_signal(&self.state); n],
            ParticleTask::Tag => tag_reward(&self.state, &p, p.include_auxiliary),
        };
        Ok(StepResult {
            observations: self.observations(),
            rewards,
            done: self.state.step >= p.episode_len,
        })
    }

    fn extract_feature(&self, obs: &[f64]) -> Vec<f64> {
        obs[0..4].to_vec()
    }
}
