use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use quack::bench::{ablation_specs, preset, run_experiment, run_seed_baseline, write_outputs, ExperimentSpec};
use quack::optimizers::OptimizerState;
use quack::quack_loop::{run_quack, KoopmanMethod};
use quack::{QuackError, Result};

#[derive(Parser)]
#[command(name = "quack-bench", about = "Koopman-accelerated VQE training benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plain optimizer runs.
    Baseline(Common),
    /// Koopman-accelerated runs for a single method.
    Quack(Common),
    /// Baseline plus every configured method, with speedup report.
    Bench(Common),
    /// Sweep n_sim and benchmark each setting.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Inclusive n_sim range, e.g. 4..=10.
        #[arg(long, default_value = "4..=10")]
        n_sim: String,
    },
}

#[derive(Args)]
struct Common {
    /// Named scenario (qng-5q, overparam-<N>q, smooth-<N>q, nonsmooth-12q, shots-5q, ablate-nsim, convex).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Experiment description as JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// "N" for 0..N, "a..b", or a comma list.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// dmd, sw-dmd, mlp-dmd, mlp-sw-dmd or cnn-dmd; may repeat.
    #[arg(long)]
    method: Vec<KoopmanMethod>,
    /// Measurement shots per Pauli term (enables shot noise).
    #[arg(long)]
    shots: Option<u64>,
    /// Zero optimizer moments at every restart.
    #[arg(long)]
    reset_moments: bool,
    /// Keep every parameter vector in the run records.
    #[arg(long)]
    store_theta: bool,
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || QuackError::Config(format!("cannot parse seeds {text:?}"));
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    let seeds = if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if text.contains("..=") {
            (a..=b).collect()
        } else {
            (a..b).collect()
        }
    } else if text.contains(',') {
        text.split(',').map(num).collect::<Result<Vec<_>>>()?
    } else {
        (0..num(text)?).collect()
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn parse_range(text: &str) -> Result<Vec<usize>> {
    parse_seeds(text).map(|v| v.into_iter().map(|x| x as usize).collect())
}

impl Common {
    fn spec(&self, default_preset: &str) -> Result<ExperimentSpec> {
        let mut spec = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentSpec::from_json(&fs::read_to_string(path)?)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => preset(default_preset)?,
        };
        if let Some(s) = &self.seeds {
            spec.seeds = parse_seeds(s)?;
        }
        if !self.method.is_empty() {
            spec.methods = self.method.clone();
            spec.quack.method = self.method[0];
        }
        if self.shots.is_some() {
            spec.shots = self.shots;
        }
        spec.quack.reset_moments |= self.reset_moments;
        spec.quack.store_theta |= self.store_theta;
        spec.validate()?;
        Ok(spec)
    }
}

fn exit_for(failed: usize, total: usize) -> u8 {
    match failed {
        0 => 0,
        f if f < total => 1,
        _ => 2,
    }
}

fn baseline(c: &Common) -> Result<u8> {
    let spec = c.spec("convex")?;
    fs::create_dir_all(&c.out_dir)?;
    let results: Vec<_> = spec
        .seeds
        .par_iter()
        .map(|&seed| (seed, run_seed_baseline(&spec, seed, c.store_theta)))
        .collect();
    let mut failed = 0;
    for (seed, r) in results {
        match r {
            Ok(rec) => {
                rec.write_csv(fs::File::create(c.out_dir.join(format!("baseline_seed{seed}.csv")))?)?;
                println!(
                    "seed {seed}: initial {:.10} min {:.10} steps {}",
                    rec.initial_loss().unwrap_or(f64::NAN),
                    rec.min_loss().unwrap_or(f64::NAN),
                    rec.ledger().gradient_steps
                );
            }
            Err(e) => {
                failed += 1;
                eprintln!("seed {seed}: {e}");
            }
        }
    }
    Ok(exit_for(failed, spec.seeds.len()))
}

fn quack_runs(c: &Common) -> Result<u8> {
    let spec = c.spec("convex")?;
    fs::create_dir_all(&c.out_dir)?;
    let method = spec.quack.method;
    let results: Vec<_> = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            let run = || -> Result<_> {
                let mut oracle = spec.oracle(seed, 1)?;
                let p = oracle.param_count();
                let opt = OptimizerState::new(spec.optimizer, p)?;
                let theta0 = spec.initial_theta(seed, p);
                let cfg = quack::quack_loop::QuackConfig {
                    seed: spec.quack.seed ^ seed,
                    ..spec.quack.clone()
                };
                run_quack(oracle.as_mut(), opt, &theta0, &cfg)
            };
            (seed, run())
        })
        .collect();
    let mut failed = 0;
    for (seed, r) in results {
        match r {
            Ok(rec) => {
                let stem = format!("quack_{method}_seed{seed}");
                rec.write_csv(fs::File::create(c.out_dir.join(format!("{stem}.csv")))?)?;
                fs::write(c.out_dir.join(format!("{stem}.json")), rec.summary_json()?)?;
                println!(
                    "seed {seed}: {method} final {:.10} gradient steps {} forward evals {}",
                    rec.final_loss().unwrap_or(f64::NAN),
                    rec.ledger().gradient_steps,
                    rec.ledger().forward_evals
                );
                if rec.aborted.is_some() {
                    failed += 1;
                }
            }
            Err(e) => {
                failed += 1;
                eprintln!("seed {seed}: {e}");
            }
        }
    }
    Ok(exit_for(failed, spec.seeds.len()))
}

fn bench_one(spec: &ExperimentSpec, dir: &Path) -> Result<(usize, usize)> {
    let outcome = run_experiment(spec)?;
    write_outputs(&outcome, dir)?;
    for row in &outcome.report.rows {
        println!(
            "{} seed {} {}: s = {:.4} a = {:.4} bounds [{:.4}, {:.4}] {:?}",
            spec.name, row.seed, row.method, row.s, row.a, row.lower_bound, row.upper_bound, row.status
        );
    }
    for agg in &outcome.report.aggregates {
        println!(
            "{} {}: mean s = {:.4} +/- {:.4}, median {:.4} over {} seeds",
            spec.name, agg.method, agg.mean_s, agg.stderr_s, agg.median_s, agg.completed
        );
    }
    for (seed, e) in &outcome.failures {
        eprintln!("seed {seed}: {e}");
    }
    Ok((outcome.failures.len(), spec.seeds.len()))
}

fn bench(c: &Common) -> Result<u8> {
    let spec = c.spec("convex")?;
    let (failed, total) = bench_one(&spec, &c.out_dir)?;
    Ok(exit_for(failed, total))
}

fn ablate(c: &Common, n_sim: &str) -> Result<u8> {
    let spec = c.spec("ablate-nsim")?;
    let values = parse_range(n_sim)?;
    let (mut failed, mut total) = (0, 0);
    for s in ablation_specs(&spec, &values) {
        let dir = c.out_dir.join(&s.name);
        match s.validate().and_then(|_| bench_one(&s, &dir)) {
            Ok((f, t)) => {
                failed += f;
                total += t;
            }
            Err(e) => {
                eprintln!("{}: {e}", s.name);
                failed += s.seeds.len();
                total += s.seeds.len();
            }
        }
    }
    Ok(exit_for(failed, total))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Baseline(c) => baseline(c),
        Command::Quack(c) => quack_runs(c),
        Command::Bench(c) => bench(c),
        Command::Ablate { common, n_sim } => ablate(common, n_sim),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
