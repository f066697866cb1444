//! Training-loop contracts: determinism, per-episode bookkeeping,
//! checkpoint round trips, and resume equality.

use masd::envs::Task;
use masd::io::checkpoint::Checkpoint;
use masd::io::config::config_from_str;
use masd::maddpg::{Trainer, VecHooks};
use masd::skills::SkillCode;

fn tiny_xor(overrides: &[&str]) -> Trainer {
    let mut ov: Vec<String> = vec![
        "train.episodes=60".into(),
        "train.warmup_transitions=20".into(),
        "train.batch_size=16".into(),
        "train.disc_batch_size=16".into(),
        "train.eval_interval=10".into(),
        "train.hidden_actor=[16,16]".into(),
        "train.hidden_critic=[16,16]".into(),
        "train.hidden_disc=[16,16]".into(),
    ];
    ov.extend(overrides.iter().map(|s| s.to_string()));
    config_from_str("task = \"xor\"", &ov)
        .unwrap()
        .build_trainer(5)
        .unwrap()
}

fn tiny_spread(episodes: u64, seed: u64, extra: &[&str]) -> Trainer {
    let mut ov: Vec<String> = vec![
        format!("train.episodes={episodes}"),
        "particle.episode_len=6".into(),
        "train.warmup_transitions=30".into(),
        "train.batch_size=16".into(),
        "train.disc_batch_size=16".into(),
        "train.eval_interval=5".into(),
        "train.updates_per_episode=1".into(),
        "train.hidden_actor=[16,16]".into(),
        "train.hidden_critic=[16,16]".into(),
        "train.hidden_disc=[16,16]".into(),
        "skill.k_max=4".into(),
        "skill.initial_k=2".into(),
    ];
    ov.extend(extra.iter().map(|s| s.to_string()));
    config_from_str("task = \"spread\"", &ov)
        .unwrap()
        .build_trainer(seed)
        .unwrap()
}

#[test]
fn fixed_seed_training_is_bit_reproducible() {
    let run = || {
        let mut t = tiny_xor(&[]);
        let mut hooks = VecHooks::default();
        t.train(&mut hooks).unwrap();
        (hooks.records, t.agents.actors[0].flatten())
    };
    let (r1, p1) = run();
    let (r2, p2) = run();
    assert_eq!(r1, r2, "metrics streams must match bit-exactly");
    assert_eq!(p1, p2, "final parameters must match bit-exactly");
    assert!(!r1.is_empty());
}

#[test]
fn every_transition_in_an_episode_shares_one_code() {
    let mut t = tiny_spread(4, 9, &[]);
    for _ in 0..4 {
        t.run_episode().unwrap();
    }
    let steps = t.env().episode_len();
    let codes: Vec<SkillCode> = t.replay.iter().map(|tr| tr.code.clone()).collect();
    assert_eq!(codes.len(), 4 * steps);
    for ep in 0..4 {
        let first = &codes[ep * steps];
        for i in 0..steps {
            assert_eq!(&codes[ep * steps + i], first, "episode {ep} step {i}");
        }
    }
    // Episode boundaries: done raised exactly at the last step.
    let dones: Vec<bool> = t.replay.iter().map(|tr| tr.done).collect();
    for (i, d) in dones.iter().enumerate() {
        assert_eq!(*d, (i + 1) % steps == 0, "transition {i}");
    }
}

#[test]
fn disc_replay_gets_exactly_t_samples_per_episode() {
    let mut t = tiny_spread(3, 11, &[]);
    t.run_episode().unwrap();
    assert_eq!(t.disc_replay.len(), t.env().episode_len());
    t.run_episode().unwrap();
    assert_eq!(t.disc_replay.len(), 2 * t.env().episode_len());
}

#[test]
fn pseudo_rewards_finite_with_fresh_discriminators() {
    let mut t = tiny_spread(2, 13, &[]);
    t.run_episode().unwrap();
    for tr in t.replay.iter() {
        assert!(tr.rewards.iter().all(|r| r.is_finite()));
    }
}

#[test]
fn zero_update_rounds_leave_parameters_unchanged() {
    let mut t = tiny_spread(5, 15, &["train.updates_per_episode=0"]);
    let before: Vec<f64> = t.agents.actors[0].flatten();
    let disc_before = t.disc.global.flatten();
    let mut hooks = VecHooks::default();
    t.train(&mut hooks).unwrap();
    assert_eq!(t.agents.actors[0].flatten(), before);
    assert_eq!(t.disc.global.flatten(), disc_before);
}

#[test]
fn curriculum_active_k_is_monotone_in_metrics() {
    let mut t = tiny_spread(30, 17, &["curriculum.threshold=-10.0", "curriculum.window=2"]);
    let mut hooks = VecHooks::default();
    t.train(&mut hooks).unwrap();
    let ks: Vec<usize> = hooks.records.iter().map(|r| r.active_k).collect();
    assert!(ks.windows(2).all(|w| w[0] <= w[1]), "active_k must not shrink: {ks:?}");
    // Threshold of -10 nats is always met: the space must have expanded.
    assert!(*ks.last().unwrap() > 2);
    assert!(*ks.last().unwrap() <= 4);
}

#[test]
fn checkpoint_roundtrip_is_bit_identical() {
    let mut t = tiny_spread(6, 19, &[]);
    let mut hooks = VecHooks::default();
    t.train(&mut hooks).unwrap();
    let ck = t.to_checkpoint();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.bin");
    ck.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    assert_eq!(ck, loaded);

    // Restoring into a fresh trainer reproduces every array.
    let mut fresh = tiny_spread(6, 19, &[]);
    fresh.restore(&loaded).unwrap();
    assert_eq!(fresh.to_checkpoint(), ck);
}

#[test]
fn checkpoint_shape_mismatch_rejected() {
    let mut t = tiny_spread(3, 21, &[]);
    let mut hooks = VecHooks::default();
    t.train(&mut hooks).unwrap();
    let ck = t.to_checkpoint();
    // A trainer with a different skill-space width cannot absorb it.
    let mut narrow = tiny_spread(3, 21, &["skill.k_max=3"]);
    assert!(narrow.restore(&ck).is_err());
}

#[test]
fn resumed_training_matches_uninterrupted() {
    // One uninterrupted run of 20 episodes, checkpointing at 10.
    let mut full = tiny_spread(20, 23, &["train.checkpoint_interval=10"]);
    struct CkAt {
        at: u64,
        ck: Option<Checkpoint>,
        records: Vec<masd::maddpg::MetricsRecord>,
    }
    impl masd::maddpg::TrainHooks for CkAt {
        fn on_metrics(&mut self, r: &masd::maddpg::MetricsRecord) -> masd::Result<()> {
            self.records.push(r.clone());
            Ok(())
        }
        fn on_checkpoint(&mut self, t: &Trainer) -> masd::Result<()> {
            if t.episode == self.at && self.ck.is_none() {
                self.ck = Some(t.to_checkpoint());
            }
            Ok(())
        }
    }
    let mut hooks = CkAt {
        at: 10,
        ck: None,
        records: Vec::new(),
    };
    full.train(&mut hooks).unwrap();
    let ck = hooks.ck.expect("checkpoint captured at episode 10");
    let full_tail: Vec<_> = hooks
        .records
        .iter()
        .filter(|r| r.episode > 10)
        .cloned()
        .collect();

    // Resume from the captured checkpoint and run the remaining episodes.
    let mut resumed = tiny_spread(20, 23, &["train.checkpoint_interval=10"]);
    resumed.restore(&ck).unwrap();
    assert_eq!(resumed.episode, 10);
    let mut resumed_hooks = VecHooks::default();
    resumed.train(&mut resumed_hooks).unwrap();
    assert_eq!(resumed_hooks.records, full_tail, "post-resume metrics must match");
    assert_eq!(
        resumed.agents.actors[0].flatten(),
        full.agents.actors[0].flatten(),
        "post-resume parameters must match"
    );
}

#[test]
fn nan_in_parameters_aborts_with_diagnostic() {
    let mut t = tiny_spread(10, 25, &[]);
    t.agents.actors[0].weights[0].data_mut()[0] = f64::NAN;
    let mut hooks = VecHooks::default();
    let err = t.train(&mut hooks).unwrap_err();
    assert!(matches!(err, masd::Error::NonFinite(_)), "{err}");
}

#[test]
fn xor_reaches_nontrivial_mi_quickly() {
    // Smoke test that the learning loop actually learns: a short run
    // with beta = 0 should push global MI above the noise floor.
    let overrides = vec![
        "reward.beta=0.0".to_string(),
        "reward.aggregation=\"mean\"".to_string(),
        "train.episodes=2500".to_string(),
    ];
    let mut t = config_from_str("task = \"xor\"", &overrides)
        .unwrap()
        .build_trainer(3)
        .unwrap();
    let mut hooks = VecHooks::default();
    t.train(&mut hooks).unwrap();
    let mi = t.exact_xor_mi().unwrap();
    assert!(
        mi.global_bits > 0.2,
        "beta=0 run should correlate joint state with the code, got {}",
        mi.global_bits
    );
}
