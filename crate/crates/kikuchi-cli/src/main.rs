use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::{Precision, RunConfig, SampleModel};

/// Kikuchi spectral detection and recovery, circuit checks, resource estimates.
#[derive(Parser, Debug)]
#[command(name = "kikuchi", version)]
struct Cli {
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default from KIKUCHI_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ProblemArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, value_enum)]
    model: Option<SampleModel>,
    /// Tensor file written by `sample`.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw an instance and write it in the tensor text format.
    Sample(ProblemArgs),
    /// Run the detection test; exit 2 when inconclusive.
    Detect {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum)]
        precision: Option<Precision>,
        /// Observation count for the thresholds.
        #[arg(long)]
        detect_m: Option<f64>,
    },
    /// Weak recovery from the voting matrix, optionally boosted.
    Recover {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long, value_parser = ["top_eigvec", "gaussian_1rdm"])]
        strategy: Option<String>,
        #[arg(long)]
        boost: bool,
    },
    /// Recovery-correlation grid over (ρ, observation fraction).
    Fig2 {
        #[arg(long, value_parser = ["symmetric", "asymmetric"])]
        setting: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Per-trial JSON instead of the cell CSV.
        #[arg(long)]
        json: bool,
    },
    /// Resource estimate for one row, or the four-row table.
    Estimate {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        q_qsp: Option<u64>,
        #[arg(long)]
        table1: bool,
        #[arg(long)]
        markdown: bool,
    },
    /// Simulator checks of the circuit constructions.
    VerifyCircuits {
        #[arg(long, num_args = 1..)]
        dicke_l: Option<Vec<u32>>,
        #[arg(long, num_args = 1..)]
        shuffle_c: Option<Vec<usize>>,
        #[arg(long)]
        skip_block_encoding: bool,
    },
    /// Time Kikuchi matvecs against the FLOPs model.
    Bench {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        reps: Option<usize>,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn apply_problem(cfg: &mut RunConfig, a: ProblemArgs) {
    let p = &mut cfg.problem;
    set(&mut p.n, a.n);
    set(&mut p.k, a.k);
    set(&mut p.ell, a.ell);
    set(&mut p.rho, a.rho);
    set(&mut p.model, a.model);
    if a.m.is_some() {
        p.m = a.m;
    }
    if a.input.is_some() {
        p.input = a.input;
    }
}

enum Action {
    Sample,
    Detect,
    Recover,
    Fig2 { json: bool },
    Estimate { table1: bool, markdown: bool },
    VerifyCircuits,
    Bench,
}

fn resolve(cli: Cli) -> anyhow::Result<(RunConfig, Action)> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.seed, cli.seed);
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if cli.out.is_some() {
        cfg.out = cli.out;
    }
    let action = match cli.command {
        Command::Sample(a) => {
            apply_problem(&mut cfg, a);
            Action::Sample
        }
        Command::Detect { problem, precision, detect_m } => {
            apply_problem(&mut cfg, problem);
            set(&mut cfg.detect.precision, precision);
            if detect_m.is_some() {
                cfg.detect.m = detect_m;
            }
            Action::Detect
        }
        Command::Recover { problem, top, strategy, boost } => {
            apply_problem(&mut cfg, problem);
            set(&mut cfg.recover.top, top);
            if let Some(s) = strategy {
                cfg.recover.strategy = serde_json::from_value(serde_json::Value::String(s))?;
            }
            cfg.recover.boost |= boost;
            Action::Recover
        }
        Command::Fig2 { setting, trials, n, json } => {
            if let Some(s) = setting {
                cfg.fig2.setting = Some(serde_json::from_value(serde_json::Value::String(s))?);
            }
            if trials.is_some() {
                cfg.fig2.trials = trials;
            }
            if n.is_some() {
                cfg.fig2.n = n;
            }
            Action::Fig2 { json }
        }
        Command::Estimate { n, m, rho, q_qsp, table1, markdown } => {
            let e = &mut cfg.estimate;
            set(&mut e.n, n);
            set(&mut e.rho, rho);
            if m.is_some() {
                e.m = m;
            }
            if q_qsp.is_some() {
                e.q_qsp = q_qsp;
            }
            Action::Estimate { table1, markdown }
        }
        Command::VerifyCircuits { dicke_l, shuffle_c, skip_block_encoding } => {
            let c = &mut cfg.circuits;
            set(&mut c.dicke_l, dicke_l);
            set(&mut c.shuffle_c, shuffle_c);
            c.block_encoding &= !skip_block_encoding;
            Action::VerifyCircuits
        }
        Command::Bench { n, ell, m, reps } => {
            let b = &mut cfg.bench;
            set(&mut b.n, n);
            set(&mut b.ell, ell);
            set(&mut b.reps, reps);
            if m.is_some() {
                b.m = m;
            }
            Action::Bench
        }
    };
    cfg.resolve_threads()?;
    cfg.validate()?;
    Ok((cfg, action))
}

fn run(cli: Cli) -> anyhow::Result<commands::Status> {
    let (cfg, action) = resolve(cli)?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match action {
        Action::Sample => commands::sample(&cfg),
        Action::Detect => commands::detect(&cfg),
        Action::Recover => commands::recover(&cfg),
        Action::Fig2 { json } => commands::fig2(&cfg, json),
        Action::Estimate { table1, markdown } => commands::estimate(&cfg, table1, markdown),
        Action::VerifyCircuits => commands::verify_circuits(&cfg),
        Action::Bench => commands::bench(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(commands::Status::Ok) => ExitCode::SUCCESS,
        Ok(commands::Status::Inconclusive) => ExitCode::from(2),
        Ok(commands::Status::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
