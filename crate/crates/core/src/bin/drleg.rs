//! Command-line front end: training runs, comparative experiments,
//! demonstration collection, behavior-cloning pretraining, checkpoint
//! evaluation, and metrics export.
//!
//! Exit codes: 0 on success, 1 on run failure, 2 on configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use drleg::envs::{make_env, DeterministicPolicy, MountainCarExpert, PendulumExpert, SparseReacherExpert};
use drleg::error::Error;
use drleg::harness::{
    bc_pretrain, compare, preset_config, train, Comparison, RunRecord, TrainConfig,
};
use drleg::numerics::Rng;
use drleg::replay::{collect_demos, DemoSet};
use drleg::sac::{CheckpointBundle, GaussianPolicy};

#[derive(Parser)]
#[command(name = "drleg", about = "SAC with demonstration-guided exploration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML config file; omitted fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override: environment name.
    #[arg(long)]
    env: Option<String>,
    /// Override: master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override: total environment steps.
    #[arg(long)]
    total_steps: Option<u64>,
    /// Override: guidance gate on/off.
    #[arg(long)]
    guidance: Option<bool>,
    /// Override: demonstration file path.
    #[arg(long)]
    demos: Option<PathBuf>,
}

impl ConfigArgs {
    fn build(&self) -> Result<TrainConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => TrainConfig::from_toml_file(path)?,
            None => TrainConfig::default(),
        };
        if let Some(env) = &self.env {
            cfg.env = env.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(steps) = self.total_steps {
            cfg.total_steps = steps;
        }
        if let Some(g) = self.guidance {
            cfg.guidance.enabled = g;
        }
        if let Some(demos) = &self.demos {
            cfg.demo_path = Some(demos.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one training configuration and write record + checkpoint.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory (defaults to $DRLEG_OUT_DIR or `runs`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a cross product of method presets and seeds.
    Compare {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated method presets: drleg, sac, sac_pretrain.
        #[arg(long, default_value = "drleg,sac")]
        methods: String,
        /// Comma-separated seeds.
        #[arg(long, default_value = "1,2,3")]
        seeds: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Roll a scripted expert and write a demonstration file.
    CollectDemos {
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Demonstration file to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write a CSV dump next to the binary file.
        #[arg(long, default_value_t = false)]
        csv: bool,
    },
    /// Behavior-clone a fresh policy on demonstrations and save it.
    BcPretrain {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        /// Checkpoint bundle path to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint bundle's policy.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 10)]
        episodes: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Convert a run or comparison JSON into CSV (or pretty JSON).
    Export {
        #[arg(long)]
        input: PathBuf,
        /// What the input file contains.
        #[arg(long, value_parser = ["run", "compare"])]
        kind: String,
        #[arg(long, value_parser = ["csv", "json"], default_value = "csv")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn out_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os("DRLEG_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn expert_for(env: &str) -> Result<Box<dyn DeterministicPolicy>, Error> {
    match env {
        "mountain_car" => Ok(Box::new(MountainCarExpert)),
        "pendulum" => Ok(Box::new(PendulumExpert)),
        "sparse_reacher" => Ok(Box::new(SparseReacherExpert)),
        other => Err(Error::Config(format!("no scripted expert for '{other}'"))),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Train { config, out } => {
            let cfg = config.build()?;
            let dir = out_dir(out);
            std::fs::create_dir_all(&dir)?;
            let output = train(&cfg)?;
            let stem = format!("{}_{}_seed{}", cfg.env, short_hash(&output.record.config_hash), cfg.seed);
            let record_path = dir.join(format!("{stem}.json"));
            output.record.save_json(&record_path)?;
            output.record.export_csv(&dir.join(format!("{stem}.csv")))?;
            output.checkpoint().save(&dir.join(format!("{stem}.ckpt.json")))?;
            let last = output.record.rows.last().expect("at least the initial row");
            println!(
                "run complete: {} steps, final R_pi = {:.3} ({} rows) -> {}",
                cfg.total_steps,
                last.r_pi,
                output.record.rows.len(),
                record_path.display()
            );
            Ok(())
        }
        Command::Compare {
            config,
            methods,
            seeds,
            out,
        } => {
            let base = config.build()?;
            let method_list: Vec<(String, TrainConfig)> = methods
                .split(',')
                .map(|m| {
                    let m = m.trim();
                    preset_config(m, &base).map(|c| (m.to_string(), c))
                })
                .collect::<Result<_, _>>()?;
            for (_, cfg) in &method_list {
                cfg.validate()?;
            }
            let seed_list: Vec<u64> = seeds
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<u64>()
                        .map_err(|e| Error::Config(format!("bad seed '{s}': {e}")))
                })
                .collect::<Result<_, _>>()?;
            let dir = out_dir(out);
            std::fs::create_dir_all(&dir)?;
            let cmp = compare(&method_list, &seed_list)?;
            cmp.save_json(&dir.join("comparison.json"))?;
            cmp.export_csv(&dir.join("comparison.csv"))?;
            print!("{}", cmp.final_table());
            if !cmp.is_complete() {
                for f in &cmp.failures {
                    eprintln!("run failed: {} seed {}: {}", f.label, f.seed, f.message);
                }
                return Err(Error::Usage("comparison had failed runs".to_string()));
            }
            Ok(())
        }
        Command::CollectDemos {
            env,
            pairs,
            seed,
            out,
            csv,
        } => {
            let mut e = make_env(&env)?;
            let expert = expert_for(&env)?;
            let mut rng = Rng::new(seed);
            let demos = collect_demos(e.as_mut(), expert.as_ref(), pairs, &mut rng)?;
            if let Some(parent) = out.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            demos.save(&out)?;
            if csv {
                demos.export_csv(&out.with_extension("csv"))?;
            }
            println!(
                "collected {} pairs over {} episodes, r_demo = {:.3} -> {}",
                demos.len(),
                demos.episode_ends.len(),
                demos.r_demo.unwrap_or(f64::NAN),
                out.display()
            );
            Ok(())
        }
        Command::BcPretrain {
            config,
            epochs,
            out,
        } => {
            let mut cfg = config.build()?;
            cfg.bc_pretrain_epochs = epochs.max(1);
            let demo_path = cfg
                .demo_path
                .clone()
                .ok_or_else(|| Error::Config("bc-pretrain requires --demos".to_string()))?;
            let demos = DemoSet::load(&demo_path)?;
            let env = make_env(&cfg.env)?;
            let spec = env.spec().clone();
            let mut rng = Rng::new(cfg.seed);
            let mut policy = GaussianPolicy::new(
                spec.obs_dim,
                spec.act_dim,
                &cfg.hidden,
                &spec.action_low,
                &spec.action_high,
                &mut rng,
            )?;
            policy.set_obs_scale(spec.obs_scale.clone())?;
            let loss = bc_pretrain(&mut policy, &demos, epochs, 1e-3, 64, &mut rng)?;
            let mut critics = drleg::sac::SoftCritics::new(
                spec.obs_dim,
                spec.act_dim,
                &cfg.hidden,
                cfg.alpha,
                cfg.gamma,
                cfg.rho,
                &mut rng,
            )?;
            critics.set_obs_scale(spec.obs_scale.clone())?;
            let learner = drleg::sac::LearnerState {
                opt_policy: drleg::numerics::Optimizer::adam(policy.trunk(), cfg.lr),
                opt_q1: drleg::numerics::Optimizer::adam(&critics.q1, cfg.lr),
                opt_q2: drleg::numerics::Optimizer::adam(&critics.q2, cfg.lr),
                opt_v: drleg::numerics::Optimizer::adam(&critics.v, cfg.lr),
                critics,
                policy,
            };
            let bundle = CheckpointBundle::capture(
                &cfg.hash(),
                &spec.action_low,
                &spec.action_high,
                &learner,
            );
            bundle.save(&out)?;
            println!("pretrained {} epochs, final loss {loss:.6} -> {}", epochs, out.display());
            Ok(())
        }
        Command::Eval {
            checkpoint,
            env,
            episodes,
            seed,
        } => {
            let bundle = CheckpointBundle::load(&checkpoint)?;
            let learner = bundle.restore_unchecked()?;
            let r = drleg::harness::evaluate_checkpointed_policy(&env, &learner.policy, episodes, seed)?;
            println!("mean return over {episodes} episodes (seed {seed}): {r}");
            Ok(())
        }
        Command::Export {
            input,
            kind,
            format,
            out,
        } => {
            match (kind.as_str(), format.as_str()) {
                ("run", "csv") => RunRecord::load_json(&input)?.export_csv(&out)?,
                ("run", "json") => RunRecord::load_json(&input)?.save_json(&out)?,
                ("compare", "csv") => Comparison::load_json(&input)?.export_csv(&out)?,
                ("compare", "json") => Comparison::load_json(&input)?.save_json(&out)?,
                _ => unreachable!("clap restricts the values"),
            }
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

/// Config errors exit 2, run failures exit 1.
fn classify(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Parse { .. } => 2,
        _ => 1,
    }
}

fn short_hash(hash: &str) -> &str {
    &hash[..hash.len().min(8)]
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(classify(&err))
        }
    }
}
