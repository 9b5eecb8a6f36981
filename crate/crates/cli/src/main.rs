use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use vqmorl::experiment::{
    read_config, run_eval, run_sweep, run_train, Backend, SweepParam, SweepSpec, TraceOptions, TrainConfig,
};

#[derive(Parser)]
#[command(name = "vqmorl", version, about = "Train and evaluate joint driving/base-station selection agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write metrics.csv and checkpoint.json.
    Train(Common),
    /// Run the greedy policy of a checkpoint and write eval.csv.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Also write per-step, traffic and network traces.
        #[arg(long)]
        trace: bool,
    },
    /// Train and evaluate over a parameter grid and write aggregate.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `n_background` or `desired_velocity`; overrides `[sweep]` in the config.
        #[arg(long)]
        param: Option<SweepParam>,
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        fixed_seed: bool,
    },
    /// Resolve a config and print it, or report the first invalid key.
    ValidateConfig {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    backend: Option<Backend>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Output directory. Falls back to $VQMORL_OUTPUT_ROOT, then the config.
    #[arg(long, env = "VQMORL_OUTPUT_ROOT")]
    out: Option<PathBuf>,
}

fn base_config(path: Option<&PathBuf>) -> Result<TrainConfig> {
    match path {
        Some(p) => read_config(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(TrainConfig::default()),
    }
}

impl Common {
    fn resolve(&self) -> Result<TrainConfig> {
        let mut cfg = base_config(self.config.as_ref())?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if let Some(e) = self.episodes {
            cfg.episodes = e;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        Ok(cfg.resolve()?)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(common) => {
            let cfg = common.resolve()?;
            let out = run_train(&cfg)?;
            let last = out.log.episodes.last();
            println!(
                "trained {} episodes ({}), last total reward {:.4}; outputs in {}",
                out.log.episodes.len(),
                cfg.backend,
                last.map_or(0.0, |m| m.sum_total),
                out.dir.display()
            );
        }
        Command::Eval { common, checkpoint, trace } => {
            let mut cfg = common.resolve()?;
            let episodes = common.episodes.unwrap_or(cfg.eval_episodes);
            cfg.eval_episodes = episodes;
            let log = run_eval(&cfg, &checkpoint, episodes, &TraceOptions { enabled: trace })?;
            let n = log.episodes.len().max(1) as f64;
            let mean = log.episodes.iter().map(|m| m.sum_total).sum::<f64>() / n;
            let coll = log.episodes.iter().filter(|m| m.collided).count();
            println!("evaluated {episodes} episodes: mean total reward {mean:.4}, {coll} collisions");
        }
        Command::Sweep { common, param, values, repetitions, fixed_seed } => {
            let mut cfg = common.resolve()?;
            let spec = match (cfg.sweep.take(), param, values) {
                (_, Some(param), Some(values)) => {
                    SweepSpec { param, values, repetitions: repetitions.unwrap_or(1), fixed_seed }
                }
                (Some(mut s), None, None) => {
                    if let Some(r) = repetitions {
                        s.repetitions = r;
                    }
                    s.fixed_seed |= fixed_seed;
                    s
                }
                (None, None, None) => bail!("no sweep given: pass --param and --values or add [sweep] to the config"),
                _ => bail!("--param and --values must be given together"),
            };
            let out = run_sweep(&cfg, &spec)?;
            for r in &out.rows {
                println!(
                    "{}={}: r_tran {:.4} ± {:.4}, r_tele {:.4} ± {:.4} ({} runs)",
                    r.param, r.value, r.mean_r_tran, r.std_r_tran, r.mean_r_tele, r.std_r_tele, r.runs
                );
            }
            if !out.failures.is_empty() {
                bail!("{} sweep run(s) failed; see {}", out.failures.len(), out.dir.join("failures.csv").display());
            }
        }
        Command::ValidateConfig { config } => {
            let cfg = base_config(config.as_ref())?.resolve()?;
            print!("{}", cfg.to_toml()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
