//! Command implementations behind the `masd` binary.
//!
//! Grammar: `masd <subcommand> --config PATH [--set key=value]...
//! [--seeds a,b,c] [--out DIR]`, with `MASD_OUT` as the output-directory
//! fallback. Every command is a pure function of (config, seeds, input
//! files): rerunning reproduces its outputs bit-exactly. Seeds run as
//! independent workers; a failure in one seed is reported per seed and
//! the command exits nonzero.

use crate::analysis::{
    endpoint_std, skill_cluster_score, trajectory_angles, trajectory_lengths, TrajectoryRecord,
};
use crate::envs::{Environment, ParticleEnv, ParticleTask, Task};
use crate::io::checkpoint::Checkpoint;
use crate::io::config::{EvalProtocol, ExperimentConfig, XorMode};
use crate::io::metrics::{read_metrics, MetricsWriter};
use crate::io::svg::{curves_svg, scatter_svg, skill_palette, trajectory_fan_svg, write_svg, Curve};
use crate::io::trajectory::{read_trajectories, write_snapshot, write_trajectories};
use crate::maddpg::{
    finetune, rollout_particle, train_xor_tabular, MetricsRecord, TrainHooks, Trainer,
};
use crate::numerics::RngStream;
use crate::skills::{sample_skill, SkillCode, SkillSpace};
use crate::{Error, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Resolved invocation: which command, its config, seeds, output dir.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub config_path: PathBuf,
    pub overrides: Vec<String>,
    /// Seeds from the command line; falls back to the config's list.
    pub seeds: Option<Vec<u64>>,
    /// Output directory from the command line; falls back to the
    /// config, then `MASD_OUT`, then `out`.
    pub out: Option<PathBuf>,
}

impl Invocation {
    pub fn load(&self) -> Result<ExperimentConfig> {
        crate::io::config::load_config(&self.config_path, &self.overrides)
    }

    pub fn resolve_seeds(&self, config: &ExperimentConfig) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| config.seeds.clone())
    }

    pub fn resolve_out(&self, config: &ExperimentConfig) -> PathBuf {
        if let Some(o) = &self.out {
            return o.clone();
        }
        if let Some(o) = &config.out_dir {
            return PathBuf::from(o);
        }
        if let Ok(o) = std::env::var("MASD_OUT") {
            if !o.is_empty() {
                return PathBuf::from(o);
            }
        }
        PathBuf::from("out")
    }
}

/// Runs one closure per seed on independent threads (bounded by the
/// available parallelism). All failures are reported; the first is
/// returned.
pub fn for_each_seed<T: Send>(
    seeds: &[u64],
    f: impl Fn(u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let max = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut results: Vec<Option<Result<T>>> = Vec::with_capacity(seeds.len());
    for _ in seeds {
        results.push(None);
    }
    for chunk_start in (0..seeds.len()).step_by(max) {
        let chunk_end = (chunk_start + max).min(seeds.len());
        let slots = &mut results[chunk_start..chunk_end];
        let chunk = &seeds[chunk_start..chunk_end];
        let f = &f;
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for &seed in chunk {
                handles.push(scope.spawn(move || f(seed)));
            }
            for (slot, handle) in slots.iter_mut().zip(handles) {
                *slot = Some(handle.join().unwrap_or_else(|_| {
                    Err(Error::Data("seed worker panicked".into()))
                }));
            }
        });
    }
    let mut out = Vec::with_capacity(seeds.len());
    let mut first_err = None;
    for (seed, r) in seeds.iter().zip(results) {
        match r.expect("every slot filled") {
            Ok(v) => out.push(v),
            Err(e) => {
                eprintln!("seed {seed} failed: {e}");
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    match first_err {
        None => Ok(out),
        Some(e) => Err(e),
    }
}

struct FileHooks {
    writer: MetricsWriter,
    checkpoint_path: PathBuf,
}

impl TrainHooks for FileHooks {
    fn on_metrics(&mut self, record: &MetricsRecord) -> Result<()> {
        self.writer.append(record)
    }

    fn on_checkpoint(&mut self, trainer: &Trainer) -> Result<()> {
        trainer.to_checkpoint().save(&self.checkpoint_path)
    }
}

fn metrics_path(out: &Path, prefix: &str, seed: u64) -> PathBuf {
    out.join(format!("{prefix}_seed{seed}.jsonl"))
}

fn checkpoint_path(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("checkpoint_seed{seed}.bin"))
}

// ---- xor ----

#[derive(Debug, Clone, Serialize)]
pub struct XorSeedSummary {
    pub seed: u64,
    pub global_bits: f64,
    pub local_bits: Vec<f64>,
    pub mean_local_bits: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct XorSummary {
    pub beta: f64,
    pub seeds: Vec<XorSeedSummary>,
}

/// Trains the bit-flip game per seed, logging exact mutual information
/// along the way; emits the MI curves and a final per-seed table.
pub fn cmd_xor(inv: &Invocation) -> Result<XorSummary> {
    let config = inv.load()?;
    if config.task != Task::Xor {
        return Err(Error::Config("cmd xor needs task = \"xor\"".into()));
    }
    let seeds = inv.resolve_seeds(&config);
    let out = inv.resolve_out(&config);
    std::fs::create_dir_all(&out)?;

    let summaries = for_each_seed(&seeds, |seed| -> Result<XorSeedSummary> {
        let mpath = metrics_path(&out, "metrics", seed);
        match config.xor.mode {
            XorMode::Maddpg => {
                let mut trainer = config.build_trainer(seed)?;
                let mut hooks = FileHooks {
                    writer: MetricsWriter::create(&mpath)?,
                    checkpoint_path: checkpoint_path(&out, seed),
                };
                trainer.train(&mut hooks)?;
                let mi = trainer.exact_xor_mi()?;
                Ok(XorSeedSummary {
                    seed,
                    global_bits: mi.global_bits,
                    local_bits: mi.local_bits.to_vec(),
                    mean_local_bits: (mi.local_bits[0] + mi.local_bits[1]) / 2.0,
                })
            }
            XorMode::Tabular => {
                let report = train_xor_tabular(
                    config.xor.tabular_iterations,
                    config.xor.tabular_policy_lr,
                    &config.pseudo_reward_config(),
                    config.train.disc_lr,
                    &config.train.hidden_disc,
                    config.xor.tabular_batch,
                    config.train.eval_interval,
                    seed,
                )?;
                let mut writer = MetricsWriter::create(&mpath)?;
                for (iter, mi) in &report.mi_history {
                    writer.append(&MetricsRecord {
                        episode: *iter,
                        active_k: 2,
                        mean_global_lp: 0.0,
                        mean_local_lp: vec![0.0, 0.0],
                        pseudo_reward_mean: 0.0,
                        td_loss: 0.0,
                        disc_losses: vec![0.0, 0.0, 0.0],
                        mi_global: Some(mi.global_bits),
                        mi_local: Some(mi.local_bits.to_vec()),
                        extrinsic_reward: None,
                        weak_signal_mean: None,
                    })?;
                }
                let mi = report.final_mi;
                Ok(XorSeedSummary {
                    seed,
                    global_bits: mi.global_bits,
                    local_bits: mi.local_bits.to_vec(),
                    mean_local_bits: (mi.local_bits[0] + mi.local_bits[1]) / 2.0,
                })
            }
        }
    })?;

    // MI curves: thin per-seed traces, bold cross-seed means.
    let mut curves = Vec::new();
    let mut global_series: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut local_series: Vec<Vec<(f64, f64)>> = Vec::new();
    for &seed in &seeds {
        let records = read_metrics(&metrics_path(&out, "metrics", seed))?;
        let g: Vec<(f64, f64)> = records
            .iter()
            .filter_map(|r| r.mi_global.map(|v| (r.episode as f64, v)))
            .collect();
        let l: Vec<(f64, f64)> = records
            .iter()
            .filter_map(|r| {
                r.mi_local
                    .as_ref()
                    .map(|v| (r.episode as f64, v.iter().sum::<f64>() / v.len() as f64))
            })
            .collect();
        curves.push(Curve {
            label: format!("global seed {seed}"),
            points: g.clone(),
            color: "#2b6cb0".into(),
            emphasis: false,
        });
        curves.push(Curve {
            label: format!("local seed {seed}"),
            points: l.clone(),
            color: "#c05621".into(),
            emphasis: false,
        });
        global_series.push(g);
        local_series.push(l);
    }
    curves.push(Curve {
        label: "global MI (mean)".into(),
        points: mean_curve(&global_series),
        color: "#2b6cb0".into(),
        emphasis: true,
    });
    curves.push(Curve {
        label: "mean local MI (mean)".into(),
        points: mean_curve(&local_series),
        color: "#c05621".into(),
        emphasis: true,
    });
    write_svg(
        &out.join("mi_curves.svg"),
        &curves_svg(&curves, "mutual information", "episode", "bits"),
    )?;

    let summary = XorSummary {
        beta: config.reward.beta,
        seeds: summaries,
    };
    std::fs::write(
        out.join("xor_summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    println!("seed  global  local_1  local_2  mean_local");
    for s in &summary.seeds {
        println!(
            "{:>4}  {:>6.3}  {:>7.3}  {:>7.3}  {:>10.3}",
            s.seed, s.global_bits, s.local_bits[0], s.local_bits[1], s.mean_local_bits
        );
    }
    Ok(summary)
}

fn mean_curve(series: &[Vec<(f64, f64)>]) -> Vec<(f64, f64)> {
    let Some(first) = series.first() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (i, &(x, _)) in first.iter().enumerate() {
        let mut sum = 0.0;
        let mut n = 0;
        for s in series {
            if let Some(&(_, y)) = s.get(i) {
                sum += y;
                n += 1;
            }
        }
        if n > 0 {
            out.push((x, sum / n as f64));
        }
    }
    out
}

// ---- train ----

/// Skill-discovery training on a particle task, one run per seed, with
/// periodic checkpoints and optional resume.
pub fn cmd_train(inv: &Invocation) -> Result<()> {
    let config = inv.load()?;
    if !config.task.is_particle() {
        return Err(Error::Config("cmd train needs a particle task".into()));
    }
    let seeds = inv.resolve_seeds(&config);
    let out = inv.resolve_out(&config);
    std::fs::create_dir_all(&out)?;

    for_each_seed(&seeds, |seed| -> Result<()> {
        let mut trainer = config.build_trainer(seed)?;
        let mpath = metrics_path(&out, "metrics", seed);
        let writer = if let Some(resume) = &config.resume_from {
            let ck = Checkpoint::load(Path::new(resume))?;
            trainer.restore(&ck)?;
            MetricsWriter::append_to(&mpath)?
        } else {
            MetricsWriter::create(&mpath)?
        };
        let mut hooks = FileHooks {
            writer,
            checkpoint_path: checkpoint_path(&out, seed),
        };
        trainer.train(&mut hooks)
    })?;
    Ok(())
}

// ---- eval ----

#[derive(Debug, Clone, Serialize)]
pub struct EvalSummary {
    pub checkpoint: String,
    pub active_k: usize,
    pub initial_conditions: usize,
    pub episodes: usize,
    pub trajectories_csv: String,
}

/// Rolls out every active skill noise-free from a fixed initial
/// condition (plus disturbed or grid copies) and writes trajectories.
pub fn cmd_eval(inv: &Invocation) -> Result<EvalSummary> {
    let config = inv.load()?;
    if !config.task.is_particle() {
        return Err(Error::Config("cmd eval needs a particle task".into()));
    }
    let ck_path = config
        .eval
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::Config("eval.checkpoint: required for cmd eval".into()))?;
    let ck = Checkpoint::load(Path::new(ck_path))?;
    let mut trainer = config.build_trainer(0)?;
    trainer.restore(&ck)?;
    let train_seed = trainer.rng.seed();
    let active_k = trainer.space.active_k();
    let out = inv.resolve_out(&config);
    std::fs::create_dir_all(&out)?;

    let task = match config.task {
        Task::Spread => ParticleTask::Spread,
        Task::Rendezvous => ParticleTask::Rendezvous,
        Task::Tag => ParticleTask::Tag,
        Task::Xor => unreachable!("guarded above"),
    };
    let mut env = ParticleEnv::new(task, config.particle.clone());
    let mut base_rng = RngStream::seed_from(config.eval.init_seed);
    env.reset(&mut base_rng);
    let base = env.snapshot();
    write_snapshot(&out.join("eval_init.csv"), &base)?;

    // Initial conditions: id 0 is the exact base; the rest follow the
    // protocol (disturbed copies, or the 4x4 grid of agent-0 offsets).
    let mut inits: Vec<(usize, crate::envs::InitSnapshot)> = vec![(0, base.clone())];
    match config.eval.protocol {
        EvalProtocol::Perturbed => {
            for p in 1..=config.eval.perturbations {
                inits.push((p, base.clone()));
            }
        }
        EvalProtocol::Grid16 => {
            let offsets = [-0.6, -0.2, 0.2, 0.6];
            let mut id = 1;
            for &dx in &offsets {
                for &dy in &offsets {
                    let mut snap = base.clone();
                    snap.agent_pos[0][0] = (snap.agent_pos[0][0] + dx).clamp(-1.0, 1.0);
                    snap.agent_pos[0][1] = (snap.agent_pos[0][1] + dy).clamp(-1.0, 1.0);
                    inits.push((id, snap));
                    id += 1;
                }
            }
        }
    }

    let mut records = Vec::new();
    for (init_id, snap) in &inits {
        // One stream per initial condition: every skill sees the same
        // disturbance and the same prey randomness.
        let init_stream = RngStream::seed_from(config.eval.init_seed).derive(*init_id as u64 + 1);
        for skill in 0..active_k {
            let mut rng = init_stream.clone();
            let disturb = matches!(config.eval.protocol, EvalProtocol::Perturbed) && *init_id > 0;
            let obs = if disturb {
                env.reset_from(snap, Some((&mut rng, config.eval.disturbance)))?
            } else {
                env.reset_from(snap, None)?
            };
            let code = SkillCode::Discrete(skill);
            let (record, _) = rollout_particle(
                &trainer.agents,
                &trainer.space,
                &mut env,
                obs,
                &code,
                &mut rng,
                train_seed,
                *init_id,
                config.eval.init_seed,
            )?;
            records.push(record);
        }
    }

    let csv = out.join("trajectories.csv");
    write_trajectories(&csv, &records)?;
    let fan: Vec<TrajectoryRecord> = records.iter().filter(|r| r.init_id == 0).cloned().collect();
    write_svg(
        &out.join("skill_fan.svg"),
        &trajectory_fan_svg(&fan, config.skill.k_max, "skill trajectories, fixed init"),
    )?;
    let summary = EvalSummary {
        checkpoint: ck_path.clone(),
        active_k,
        initial_conditions: inits.len(),
        episodes: records.len(),
        trajectories_csv: csv.display().to_string(),
    };
    std::fs::write(
        out.join("eval_summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}

// ---- finetune ----

#[derive(Debug, Clone, Serialize)]
pub struct FinetuneArm {
    pub seed: u64,
    pub selected_skill: usize,
    pub final_window_return: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinetuneSummary {
    pub auxiliary: bool,
    pub pretrained: Vec<FinetuneArm>,
    pub random: Vec<FinetuneArm>,
    pub mean_final_pretrained: f64,
    pub mean_final_random: f64,
}

/// Paired finetuning comparison on tag: per seed, train once from the
/// pretrained checkpoint and once from random initialization, with
/// identical environment randomness.
pub fn cmd_finetune(inv: &Invocation) -> Result<FinetuneSummary> {
    let config = inv.load()?;
    if config.task != Task::Tag {
        return Err(Error::Config("cmd finetune needs task = \"tag\"".into()));
    }
    let ck_path = config
        .finetune
        .checkpoint
        .as_ref()
        .ok_or_else(|| Error::Config("finetune.checkpoint: required for cmd finetune".into()))?;
    let pretrained_ck = Checkpoint::load(Path::new(ck_path))?;
    let seeds = inv.resolve_seeds(&config);
    let out = inv.resolve_out(&config);
    std::fs::create_dir_all(&out)?;

    let mut supervised = config.clone();
    supervised.train.use_pseudo_reward = false;
    supervised.train.extrinsic_coeff = 1.0;
    supervised.particle.include_auxiliary = config.finetune.auxiliary;

    let arms = for_each_seed(&seeds, |seed| -> Result<(FinetuneArm, FinetuneArm)> {
        let run = |label: &str, ck: Option<&Checkpoint>| -> Result<FinetuneArm> {
            let mut trainer = supervised.build_trainer(seed)?;
            let mut hooks = FileHooks {
                writer: MetricsWriter::create(&metrics_path(
                    &out,
                    &format!("finetune_{label}"),
                    seed,
                ))?,
                checkpoint_path: out.join(format!("finetune_{label}_seed{seed}.bin")),
            };
            let report = finetune(
                &mut trainer,
                ck,
                supervised.finetune.episodes_per_skill,
                supervised.finetune.final_window,
                &mut hooks,
            )?;
            Ok(FinetuneArm {
                seed,
                selected_skill: report.selection.skill,
                final_window_return: report.final_window_mean,
            })
        };
        Ok((run("pretrained", Some(&pretrained_ck))?, run("random", None)?))
    })?;

    let pretrained: Vec<FinetuneArm> = arms.iter().map(|(p, _)| p.clone()).collect();
    let random: Vec<FinetuneArm> = arms.iter().map(|(_, r)| r.clone()).collect();
    let mean = |v: &[FinetuneArm]| -> f64 {
        if v.is_empty() {
            0.0
        } else {
            v.iter().map(|a| a.final_window_return).sum::<f64>() / v.len() as f64
        }
    };

    // Reward curves per arm (episode return scale).
    let steps = config.particle.episode_len as f64;
    let mut curves = Vec::new();
    for (label, color) in [("pretrained", "#2f855a"), ("random", "#9b2c2c")] {
        let mut series = Vec::new();
        for &seed in &seeds {
            let records = read_metrics(&metrics_path(&out, &format!("finetune_{label}"), seed))?;
            let pts: Vec<(f64, f64)> = records
                .iter()
                .filter_map(|r| {
                    r.extrinsic_reward
                        .map(|v| (r.episode as f64, v * steps))
                })
                .collect();
            curves.push(Curve {
                label: format!("{label} seed {seed}"),
                points: pts.clone(),
                color: color.into(),
                emphasis: false,
            });
            series.push(pts);
        }
        curves.push(Curve {
            label: format!("{label} (mean)"),
            points: mean_curve(&series),
            color: color.into(),
            emphasis: true,
        });
    }
    write_svg(
        &out.join("finetune_curves.svg"),
        &curves_svg(&curves, "tag finetuning", "episode", "episode return"),
    )?;

    let summary = FinetuneSummary {
        auxiliary: config.finetune.auxiliary,
        mean_final_pretrained: mean(&pretrained),
        mean_final_random: mean(&random),
        pretrained,
        random,
    };
    std::fs::write(
        out.join("finetune_summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    println!(
        "final-window return: pretrained {:.2} vs random {:.2} (auxiliary: {})",
        summary.mean_final_pretrained, summary.mean_final_random, summary.auxiliary
    );
    Ok(summary)
}

// ---- analyze ----

#[derive(Debug, Clone, Serialize)]
pub struct InputAnalysis {
    pub path: String,
    pub label: String,
    pub episodes: usize,
    pub degenerate_episodes: usize,
    pub cluster_score: Option<f64>,
    /// Per-skill standard deviation of agent 0's final position across
    /// initial conditions, ordered by skill index.
    pub endpoint_std_per_skill: Vec<(usize, f64)>,
    pub mean_endpoint_std: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeSummary {
    pub inputs: Vec<InputAnalysis>,
}

/// Computes the trajectory statistics (heading angles, path lengths,
/// endpoint spread, cluster score) for each input CSV and emits scatter
/// plots plus a JSON summary.
pub fn cmd_analyze(inv: &Invocation) -> Result<AnalyzeSummary> {
    let config = inv.load()?;
    if config.analyze.trajectories.is_empty() {
        return Err(Error::Config(
            "analyze.trajectories: need at least one CSV".into(),
        ));
    }
    let out = inv.resolve_out(&config);
    std::fs::create_dir_all(&out)?;

    let mut inputs = Vec::new();
    for (i, path) in config.analyze.trajectories.iter().enumerate() {
        let label = config
            .analyze
            .labels
            .get(i)
            .cloned()
            .unwrap_or_else(|| format!("input{i}"));
        let records = read_trajectories(Path::new(path))?;

        let mut points = Vec::new();
        let mut angle_scatter = Vec::new();
        let mut length_scatter = Vec::new();
        let mut degenerate = 0usize;
        for r in &records {
            let lengths = trajectory_lengths(r);
            match trajectory_angles(r) {
                Some(angles) => {
                    points.push((r.skill, vec![angles.0, angles.1, lengths.0, lengths.1]));
                    angle_scatter.push((r.skill, angles.0, angles.1));
                    length_scatter.push((r.skill, lengths.0, lengths.1));
                }
                None => degenerate += 1,
            }
        }
        let cluster_score = skill_cluster_score(&points).ok();

        // Endpoint spread per skill across initial conditions.
        let mut skills: Vec<usize> = records.iter().map(|r| r.skill).collect();
        skills.sort_unstable();
        skills.dedup();
        let mut endpoint_std_per_skill = Vec::new();
        for &s in &skills {
            let group: Vec<TrajectoryRecord> = records
                .iter()
                .filter(|r| r.skill == s)
                .cloned()
                .collect();
            if group.len() >= 2 {
                endpoint_std_per_skill.push((s, endpoint_std(&group)?));
            }
        }
        let mean_endpoint_std = if endpoint_std_per_skill.is_empty() {
            None
        } else {
            Some(
                endpoint_std_per_skill.iter().map(|(_, v)| v).sum::<f64>()
                    / endpoint_std_per_skill.len() as f64,
            )
        };

        let k_max = config.skill.k_max;
        write_svg(
            &out.join(format!("angles_{label}.svg")),
            &scatter_svg(
                &angle_scatter,
                k_max,
                &format!("two smallest heading angles, {label}"),
                "smallest angle (deg)",
                "second smallest angle (deg)",
            ),
        )?;
        write_svg(
            &out.join(format!("lengths_{label}.svg")),
            &scatter_svg(
                &length_scatter,
                k_max,
                &format!("two shortest path lengths, {label}"),
                "shortest length",
                "second shortest length",
            ),
        )?;
        let std_dots: Vec<(usize, f64, f64)> = endpoint_std_per_skill
            .iter()
            .map(|&(s, v)| (s, s as f64, v))
            .collect();
        write_svg(
            &out.join(format!("endpoint_std_{label}.svg")),
            &scatter_svg(
                &std_dots,
                k_max,
                &format!("endpoint spread per skill, {label}"),
                "skill",
                "endpoint std",
            ),
        )?;

        inputs.push(InputAnalysis {
            path: path.clone(),
            label,
            episodes: records.len(),
            degenerate_episodes: degenerate,
            cluster_score,
            endpoint_std_per_skill,
            mean_endpoint_std,
        });
    }
    let summary = AnalyzeSummary { inputs };
    std::fs::write(
        out.join("analysis.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    for a in &summary.inputs {
        println!(
            "{}: episodes {} (degenerate {}), cluster score {:?}, mean endpoint std {:?}",
            a.label, a.episodes, a.degenerate_episodes, a.cluster_score, a.mean_endpoint_std
        );
    }
    Ok(summary)
}

/// Demonstration rollouts with a random policy; lets the eval/analyze
/// pipeline be exercised without a trained checkpoint. Used by tests.
pub fn random_policy_trajectories(
    task: Task,
    config: &ExperimentConfig,
    skills: usize,
    inits: usize,
    seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    if !task.is_particle() {
        return Err(Error::Config("particle tasks only".into()));
    }
    let ptask = match task {
        Task::Spread => ParticleTask::Spread,
        Task::Rendezvous => ParticleTask::Rendezvous,
        Task::Tag => ParticleTask::Tag,
        Task::Xor => unreachable!(),
    };
    let mut env = ParticleEnv::new(ptask, config.particle.clone());
    let mut rng = RngStream::seed_from(seed);
    env.reset(&mut rng);
    let base = env.snapshot();
    let space = SkillSpace::discrete(skills.max(1), skills.max(1))?;
    let mut records = Vec::new();
    for init_id in 0..inits {
        for skill in 0..skills {
            let mut ep_rng = rng.derive((init_id * 100 + skill) as u64);
            env.reset_from(&base, Some((&mut ep_rng, 0.1)))?;
            let code = sample_skill(&space, &mut ep_rng);
            let _ = code;
            let mut positions: Vec<Vec<[f64; 2]>> = (0..env.num_agents())
                .map(|i| vec![env.state().agent_pos[i]])
                .collect();
            loop {
                let actions: Vec<Vec<f64>> = (0..env.num_agents())
                    .map(|_| vec![ep_rng.uniform(-1.0, 1.0), ep_rng.uniform(-1.0, 1.0)])
                    .collect();
                let step = env.step(&actions, &mut ep_rng)?;
                for (i, p) in positions.iter_mut().enumerate() {
                    p.push(env.state().agent_pos[i]);
                }
                if step.done {
                    break;
                }
            }
            records.push(TrajectoryRecord {
                run_id: seed,
                skill,
                init_id,
                seed,
                positions,
            });
        }
    }
    Ok(records)
}

/// Color legend helper kept public for the plots' tests.
pub fn palette_for(k: usize) -> Vec<String> {
    skill_palette(k)
}
