//! Scratch probe: watch the bit-flip game's mutual information evolve
//! under different bottleneck settings. Development aid, not a test.

use masd::envs::Task;
use masd::io::config::config_from_str;
use masd::maddpg::{TrainHooks, MetricsRecord};

struct PrintHooks;

impl TrainHooks for PrintHooks {
    fn on_metrics(&mut self, r: &MetricsRecord) -> masd::Result<()> {
        println!(
            "ep {:5}  glob_lp {:7.3}  loc_lp {:7.3} {:7.3}  rz {:7.3}  td {:8.4}  MI g {:.3} l ({:.3}, {:.3})",
            r.episode,
            r.mean_global_lp,
            r.mean_local_lp[0],
            r.mean_local_lp[1],
            r.pseudo_reward_mean,
            r.td_loss,
            r.mi_global.unwrap_or(-1.0),
            r.mi_local.as_ref().map(|v| v[0]).unwrap_or(-1.0),
            r.mi_local.as_ref().map(|v| v[1]).unwrap_or(-1.0),
        );
        Ok(())
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let beta: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1.5);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let episodes: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(4000);
    let agg = if beta == 0.0 { "mean" } else { "min" };
    let mut overrides = vec![
        format!("reward.beta={beta}"),
        format!("reward.aggregation=\"{agg}\""),
        format!("train.episodes={episodes}"),
    ];
    overrides.extend(args.iter().skip(4).cloned());
    let cfg = config_from_str("task = \"xor\"", &overrides).unwrap();
    assert_eq!(cfg.task, Task::Xor);
    let mut trainer = cfg.build_trainer(seed).unwrap();
    let start = std::time::Instant::now();
    trainer.train(&mut PrintHooks).unwrap();
    let mi = trainer.exact_xor_mi().unwrap();
    println!(
        "FINAL seed {seed} beta {beta}: global {:.4} locals ({:.4}, {:.4})  [{:?}]",
        mi.global_bits, mi.local_bits[0], mi.local_bits[1], start.elapsed()
    );
}
