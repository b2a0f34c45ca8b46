//! `synroute`: data generation, training, planning, optimization and input
//! validation from the command line.
//!
//! Exit codes: 0 success, 1 other failure, 2 unparseable input, 3 the
//! random policy did not yield enough trees, 4 dimension or checkpoint
//! mismatch.

mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

impl Failure {
    pub fn other(msg: impl Into<String>) -> Self {
        Self {
            code: 1,
            msg: msg.into(),
        }
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Self {
            code: 2,
            msg: msg.into(),
        }
    }

    pub fn yield_(msg: impl Into<String>) -> Self {
        Self {
            code: 3,
            msg: msg.into(),
        }
    }

    pub fn mismatch(msg: impl Into<String>) -> Self {
        Self {
            code: 4,
            msg: msg.into(),
        }
    }
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::other(format!("{}: {e}", path.display())))
}

#[derive(Debug, Parser)]
#[command(
    name = "synroute",
    version,
    about = "Bottom-up synthesis planning over reaction templates"
)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct WorldArgs {
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long)]
    blocks: Option<PathBuf>,
    /// Dataset directory from `gen-data`; supplies templates and blocks.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Roll out the random policy and write a corpus with training shards.
    GenData {
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        blocks: Option<PathBuf>,
        /// Number of trees.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the four networks on a generated corpus.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Continue from an existing checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Plan routes to target molecules; one JSON line per target on stdout.
    Plan {
        #[command(flatten)]
        world: WorldArgs,
        #[arg(long, conflicts_with = "targets", required_unless_present = "targets")]
        target: Option<String>,
        /// File with one SMILES per line.
        #[arg(long)]
        targets: Option<PathBuf>,
        #[arg(long)]
        ckpt: PathBuf,
        /// First-reactant candidates per target.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Genetic search over fingerprints, decoded to synthesizable molecules.
    Optimize {
        #[command(flatten)]
        world: WorldArgs,
        /// `similarity:SMILES`, `descriptor:NAME:TARGET:WIDTH` or `external:COMMAND ARGS...`.
        #[arg(long)]
        oracle: Option<String>,
        #[arg(long)]
        ckpt: PathBuf,
        /// Initial pool, one SMILES per line; random fingerprints when absent.
        #[arg(long)]
        seeds: Option<PathBuf>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check templates and blocks and report compatibility.
    Validate {
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        blocks: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::other(e.to_string()))?;
    }
    let mut cfg = config::Config::load(cli.config.as_deref())?;
    let set_seed = |cfg: &mut config::Config, seed: Option<u64>| {
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.derive_seeds();
    };
    match cli.command {
        Command::GenData {
            templates,
            blocks,
            n,
            seed,
            out,
        } => {
            cfg.templates = templates.or(cfg.templates);
            cfg.blocks = blocks.or(cfg.blocks);
            if let Some(n) = n {
                cfg.datagen.n_target_trees = n;
            }
            set_seed(&mut cfg, seed);
            commands::gen_data(&cfg, &out)
        }
        Command::Train {
            data,
            out,
            resume,
            epochs,
            seed,
        } => {
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            set_seed(&mut cfg, seed);
            commands::train(&cfg, &data, &out, resume.as_deref())
        }
        Command::Plan {
            world,
            target,
            targets,
            ckpt,
            k,
            seed,
            out,
        } => {
            let data = commands::apply_world_args(&mut cfg, world);
            if let Some(k) = k {
                cfg.decode.k_rt1 = k;
            }
            set_seed(&mut cfg, seed);
            let targets = match (target, targets) {
                (Some(t), _) => commands::Targets::One(t),
                (None, Some(f)) => commands::Targets::File(f),
                (None, None) => return Err(Failure::parse("need --target or --targets")),
            };
            commands::plan(&cfg, data.as_deref(), &ckpt, &targets, out.as_deref())
        }
        Command::Optimize {
            world,
            oracle,
            ckpt,
            seeds,
            generations,
            seed,
            out,
        } => {
            let data = commands::apply_world_args(&mut cfg, world);
            if let Some(o) = oracle {
                cfg.oracle = Some(commands::parse_oracle(&o)?);
            }
            if let Some(g) = generations {
                cfg.ga.max_generations = g;
            }
            set_seed(&mut cfg, seed);
            commands::optimize(&cfg, data.as_deref(), &ckpt, seeds.as_deref(), &out)
        }
        Command::Validate { templates, blocks, out } => {
            cfg.templates = templates.or(cfg.templates);
            cfg.blocks = blocks.or(cfg.blocks);
            cfg.derive_seeds();
            commands::validate(&cfg, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
