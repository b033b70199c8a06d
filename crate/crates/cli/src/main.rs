use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use delayed_oco::delay_model::{realize_schedule, DelayRegime, DelayRegimeSpec};
use delayed_oco::harness::config::env_from_keys;
use delayed_oco::harness::{load_config, run_experiment, write_experiment, AlgoSpec, ExperimentConfig};
use delayed_oco::rng::derive_seed;
use delayed_oco::selftest;

#[derive(Parser)]
#[command(
    name = "delayed-oco",
    version,
    about = "Online convex optimization with delayed feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write traces, aggregates and metadata.
    Run(RunArgs),
    /// Print σ_max / d_max / d_tot over sampled schedules of a delay regime.
    ScheduleStats {
        #[arg(long)]
        delay: String,
        #[arg(long = "T")]
        horizon: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
    },
    /// Run the quick property checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Environment as `family[:source[:path]]`, e.g. `ridge`, `olr:nonstationary`, `olr:libsvm:mg_scale`.
    #[arg(long)]
    env: Option<String>,
    /// Delay regime, e.g. `uniform:0:5` or `heavy:0.1:uniform:0:5`.
    #[arg(long)]
    delay: Option<String>,
    /// Comma-separated algorithm names (registry names or `[algo.NAME]` sections).
    #[arg(long)]
    algos: Option<String>,
    /// Horizon (rounds per trial).
    #[arg(long = "T")]
    horizon: Option<usize>,
    /// Number of paired trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed; trial, environment and delay seeds derive from it.
    #[arg(long)]
    master_seed: Option<u64>,
    /// Output directory (default `results`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
}

fn env_from_flag(flag: &str) -> Result<delayed_oco::environments::EnvSpec> {
    let mut parts = flag.splitn(3, ':');
    let mut keys = BTreeMap::new();
    keys.insert("family".to_string(), parts.next().unwrap_or_default().to_string());
    if let Some(source) = parts.next() {
        keys.insert("source".to_string(), source.to_string());
    }
    if let Some(path) = parts.next() {
        keys.insert("path".to_string(), path.to_string());
    }
    Ok(env_from_keys(keys, &std::env::current_dir()?)?)
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path).with_context(|| format!("loading {}", path.display()))?,
        None => {
            let (Some(env), Some(delay), Some(_)) = (&args.env, &args.delay, &args.algos) else {
                bail!("without --config, --env, --delay and --algos are required");
            };
            ExperimentConfig {
                env: env_from_flag(env)?,
                delay: DelayRegime::parse(delay)?,
                algos: Vec::new(),
                horizon: 10_000,
                trials: 20,
                master_seed: 0,
                out: None,
                workers: 1,
                echo: Vec::new(),
            }
        }
    };
    if let Some(env) = &args.env {
        cfg.env = env_from_flag(env)?;
        cfg.echo.push(("override.env".into(), env.clone()));
    }
    if let Some(delay) = &args.delay {
        cfg.delay = DelayRegime::parse(delay)?;
        cfg.echo.push(("override.delay".into(), delay.clone()));
    }
    if let Some(list) = &args.algos {
        let mut algos = Vec::new();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match cfg.algos.iter().find(|a| a.name == name) {
                Some(a) => algos.push(a.clone()),
                None => algos.push(AlgoSpec::named(name)?),
            }
        }
        cfg.algos = algos;
        cfg.echo.push(("override.algos".into(), list.clone()));
    }
    if let Some(t) = args.horizon {
        cfg.horizon = t;
        cfg.echo.push(("override.T".into(), t.to_string()));
    }
    if let Some(n) = args.trials {
        cfg.trials = n;
        cfg.echo.push(("override.trials".into(), n.to_string()));
    }
    if let Some(s) = args.master_seed {
        cfg.master_seed = s;
        cfg.echo.push(("override.master_seed".into(), s.to_string()));
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = build_config(&args)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let start = Instant::now();
    let result = run_experiment(&cfg, false)?;
    write_experiment(&out, &cfg, &result)?;
    println!(
        "{} cells ({} algorithms × {} trials, T = {}) in {:.1?} → {}",
        result.traces.len(),
        cfg.algos.len(),
        cfg.trials,
        cfg.horizon,
        start.elapsed(),
        out.display()
    );
    println!("{:<16} {:>16} {:>16}", "algo", "mean regret(T)", "std");
    for algo in &cfg.algos {
        if let Some(row) = result.aggregate.iter().filter(|r| r.algo == algo.name).last() {
            println!("{:<16} {:>16.4} {:>16.4}", row.algo, row.mean, row.std);
        }
    }
    Ok(())
}

fn schedule_stats(delay: &str, horizon: usize, trials: usize, master_seed: u64) -> Result<()> {
    let regime = DelayRegime::parse(delay)?;
    println!("{:>6} {:>10} {:>10} {:>12}", "trial", "sigma_max", "d_max", "d_tot");
    let mut sums = [0.0f64; 3];
    for i in 0..trials {
        let seed = derive_seed(derive_seed(master_seed, "trial", i as u64), "delay", 0);
        let s = realize_schedule(
            &DelayRegimeSpec {
                kind: regime.clone(),
                seed,
            },
            horizon,
        )?
        .summary();
        println!("{i:>6} {:>10} {:>10} {:>12}", s.sigma_max, s.d_max, s.d_tot);
        sums[0] += s.sigma_max as f64;
        sums[1] += s.d_max as f64;
        sums[2] += s.d_tot as f64;
    }
    if trials > 0 {
        let n = trials as f64;
        println!(
            "{:>6} {:>10.1} {:>10.1} {:>12.1}",
            "mean",
            sums[0] / n,
            sums[1] / n,
            sums[2] / n
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::ScheduleStats {
            delay,
            horizon,
            trials,
            master_seed,
        } => schedule_stats(&delay, horizon, trials, master_seed),
        Command::Selftest { seed } => {
            let mut all_ok = true;
            for c in selftest::run_all(seed)? {
                let status = if c.passed() { "ok" } else { "FAIL" };
                println!("{status:<4} {:<24} {} cases, {} failures", c.name, c.cases, c.failures);
                all_ok &= c.passed();
            }
            if !all_ok {
                bail!("selftest failed");
            }
            Ok(())
        }
    }
}
