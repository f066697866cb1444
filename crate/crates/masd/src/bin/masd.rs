use clap::{Args, Parser, Subcommand};
use masd::cli::{cmd_analyze, cmd_eval, cmd_finetune, cmd_train, cmd_xor, Invocation};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "masd",
    about = "Multi-agent coordination-skill discovery: training, evaluation, and analysis"
)]
struct MasdCli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Dotted-key overrides, e.g. --set reward.beta=0.5 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Comma-separated seed list; defaults to the config's seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory; defaults to the config, then $MASD_OUT, then ./out.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the one-step bit-flip game and report exact mutual information.
    Xor(Common),
    /// Skill-discovery training on a particle task.
    Train(Common),
    /// Roll out every learned skill noise-free and write trajectories.
    Eval(Common),
    /// Paired supervised finetuning on tag (pretrained vs random init).
    Finetune(Common),
    /// Trajectory statistics and plots from recorded CSVs.
    Analyze(Common),
}

fn invocation(c: &Common) -> Invocation {
    Invocation {
        config_path: c.config.clone(),
        overrides: c.overrides.clone(),
        seeds: c.seeds.clone(),
        out: c.out.clone(),
    }
}

fn main() {
    let cli = MasdCli::parse();
    let result = match &cli.command {
        Command::Xor(c) => cmd_xor(&invocation(c)).map(|_| ()),
        Command::Train(c) => cmd_train(&invocation(c)),
        Command::Eval(c) => cmd_eval(&invocation(c)).map(|_| ()),
        Command::Finetune(c) => cmd_finetune(&invocation(c)).map(|_| ()),
        Command::Analyze(c) => cmd_analyze(&invocation(c)).map(|_| ()),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
