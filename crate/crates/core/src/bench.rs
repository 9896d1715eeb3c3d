//! Experiment runner and metrics: relative loss, loss targets, the hardware
//! cost model, speedup bounds, scenario presets and report files.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QuackError, Result};
use crate::gradients::{CostMethod, GradientBackend, ObjectiveOracle, QuadraticObjective, VqeObjective};
use crate::noise::{NoisyVqeObjective, ShotConfig};
use crate::optimizers::{OptimizerConfig, OptimizerKind, OptimizerState};
use crate::pauli::{hardware_efficient, ising_hamiltonian, load_hamiltonian, real_amplitudes, Ansatz, Hamiltonian};
use crate::quack_loop::{run_baseline, run_quack, KoopmanMethod, Phase, QuackConfig, RunRecord};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TARGET_FRACTION: f64 = 0.01;

/// `(l - l_min) / (l_init - l_min)`.
pub fn relative_loss(l: f64, l_init: f64, l_min: f64) -> Result<f64> {
    if !(l_init > l_min) {
        return Err(QuackError::DegenerateBaseline { l_init, l_min });
    }
    Ok((l - l_min) / (l_init - l_min))
}

fn baseline_range(baseline: &RunRecord) -> Result<(f64, f64)> {
    let l_init = baseline.initial_loss().unwrap_or(f64::NAN);
    let l_min = baseline.min_loss().unwrap_or(f64::NAN);
    if !(l_init > l_min) {
        return Err(QuackError::DegenerateBaseline { l_init, l_min });
    }
    Ok((l_init, l_min))
}

/// `l_min + fraction * (l_init - l_min)` from a baseline run's reference losses.
pub fn target_loss(baseline: &RunRecord, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(QuackError::Config(format!("target fraction {fraction} must lie in (0, 1)")));
    }
    let (l_init, l_min) = baseline_range(baseline)?;
    Ok(l_min + fraction * (l_init - l_min))
}

/// Circuit evaluations per gradient step: `2p + 1` for shift-rule (and exact,
/// charged the same way), `p^2 + p` for natural gradient.
pub fn f_cost(p: usize, method: CostMethod) -> Result<f64> {
    if p == 0 {
        return Err(QuackError::InvalidSize("parameter count must be positive".into()));
    }
    let p = p as f64;
    Ok(match method {
        CostMethod::ParameterShift | CostMethod::Exact => 2.0 * p + 1.0,
        CostMethod::NaturalGradient => p * p + p,
    })
}

/// [`f_cost`] for a textual method tag.
pub fn f_cost_named(p: usize, method: &str) -> Result<f64> {
    f_cost(p, method.parse()?)
}

/// `(a, a f (n_sim + n_dmd) / (f n_sim + n_dmd))`.
pub fn theoretical_bounds(a: f64, f: f64, n_sim: usize, n_dmd: usize) -> (f64, f64) {
    let (ns, nd) = (n_sim as f64, n_dmd as f64);
    (a, a * f * (ns + nd) / (f * ns + nd))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Ok,
    TargetNotReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub seed: u64,
    pub method: KoopmanMethod,
    pub status: RowStatus,
    pub t_b: u64,
    pub t_q1: u64,
    pub t_q2: u64,
    pub f: f64,
    pub a: f64,
    pub s: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// `T_Q1 / T_Q2 >= n_sim / n_dmd`, the condition for the upper bound.
    pub ratio_condition: bool,
}

impl SpeedupRow {
    pub fn within_bounds(&self) -> bool {
        let tol = 1e-12 * self.s.abs().max(1.0);
        self.s >= self.lower_bound - tol && self.s <= self.upper_bound + tol
    }
}

/// Speedup of a QuACK run over the baseline, each counted up to the first
/// step reaching the shared target.
pub fn speedup(
    baseline: Option<&crate::quack_loop::CostLedger>,
    quack: Option<&crate::quack_loop::CostLedger>,
    f: f64,
    n_sim: usize,
    n_dmd: usize,
) -> (RowStatus, [f64; 5], [u64; 3], bool) {
    let (Some(b), Some(q)) = (baseline, quack) else {
        let tb = baseline.map(|b| b.gradient_steps).unwrap_or(0);
        let (t1, t2) = quack.map(|q| (q.gradient_steps, q.forward_evals)).unwrap_or((0, 0));
        return (RowStatus::TargetNotReached, [f64::NAN; 5], [tb, t1, t2], false);
    };
    let tb = b.gradient_steps as f64;
    let t1 = q.gradient_steps as f64;
    let t2 = q.forward_evals as f64;
    let s = f * tb / (f * t1 + t2);
    let a = tb / (t1 + t2);
    let (lo, hi) = theoretical_bounds(a, f, n_sim, n_dmd);
    let cond = t1 * n_dmd as f64 >= t2 * n_sim as f64;
    (
        RowStatus::Ok,
        [s, a, lo, hi, f],
        [b.gradient_steps, q.gradient_steps, q.forward_evals],
        cond,
    )
}

fn make_row(
    seed: u64,
    method: KoopmanMethod,
    baseline: Option<&crate::quack_loop::CostLedger>,
    quack: Option<&crate::quack_loop::CostLedger>,
    f: f64,
    n_sim: usize,
    n_dmd: usize,
) -> SpeedupRow {
    let (status, [s, a, lo, hi, _], [t_b, t_q1, t_q2], cond) = speedup(baseline, quack, f, n_sim, n_dmd);
    SpeedupRow {
        seed,
        method,
        status,
        t_b,
        t_q1,
        t_q2,
        f,
        a,
        s,
        lower_bound: lo,
        upper_bound: hi,
        ratio_condition: cond,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: KoopmanMethod,
    pub completed: usize,
    pub mean_s: f64,
    pub stderr_s: f64,
    pub median_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub schema_version: u32,
    pub experiment: String,
    pub rows: Vec<SpeedupRow>,
    pub aggregates: Vec<Aggregate>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

impl SpeedupReport {
    pub fn new(experiment: &str, mut rows: Vec<SpeedupRow>) -> Self {
        rows.sort_by_key(|r| (r.seed, r.method));
        let mut methods: Vec<KoopmanMethod> = rows.iter().map(|r| r.method).collect();
        methods.sort();
        methods.dedup();
        let aggregates = methods
            .into_iter()
            .map(|m| {
                let s: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.method == m && r.status == RowStatus::Ok)
                    .map(|r| r.s)
                    .collect();
                let n = s.len();
                let mean = s.iter().sum::<f64>() / n as f64;
                let stderr = if n > 1 {
                    (s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt()
                } else {
                    f64::NAN
                };
                Aggregate {
                    method: m,
                    completed: n,
                    mean_s: mean,
                    stderr_s: stderr,
                    median_s: median(s),
                }
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            rows,
            aggregates,
        }
    }

    pub fn aggregate(&self, method: KoopmanMethod) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.method == method)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "seed", "method", "status", "t_b", "t_q1", "t_q2", "f", "a", "s", "lower_bound",
            "upper_bound", "ratio_condition",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.seed.to_string(),
                r.method.to_string(),
                match r.status {
                    RowStatus::Ok => "ok".into(),
                    RowStatus::TargetNotReached => "target-not-reached".into(),
                },
                r.t_b.to_string(),
                r.t_q1.to_string(),
                r.t_q2.to_string(),
                r.f.to_string(),
                r.a.to_string(),
                r.s.to_string(),
                r.lower_bound.to_string(),
                r.upper_bound.to_string(),
                r.ratio_condition.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// experiment specification

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaskSpec {
    /// Periodic transverse-field Ising chain.
    Ising { n_qubits: usize, field: f64 },
    /// Pauli-sum text file, one `coefficient LABEL` per line.
    PauliFile { path: String },
    /// `||x - x*||^2` with `x*` drawn from the seed.
    ConvexTest { dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnsatzSpec {
    RealAmplitudes { reps: usize },
    HardwareEfficient { depth: usize },
}

fn default_target_fraction() -> f64 {
    DEFAULT_TARGET_FRACTION
}

fn default_backend() -> GradientBackend {
    GradientBackend::Exact
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    pub name: String,
    pub task: TaskSpec,
    /// Ignored by the convex task.
    pub ansatz: AnsatzSpec,
    pub optimizer: OptimizerConfig,
    /// Simulation routine for noiseless gradients; cost accounting follows
    /// the optimizer (natural gradient) or the shift rule.
    #[serde(default = "default_backend")]
    pub backend: GradientBackend,
    pub quack: QuackConfig,
    /// Koopman methods compared by `bench`; empty means `quack.method`.
    #[serde(default)]
    pub methods: Vec<KoopmanMethod>,
    #[serde(default)]
    pub shots: Option<u64>,
    pub seeds: Vec<u64>,
    pub baseline_steps: usize,
    #[serde(default = "default_target_fraction")]
    pub target_fraction: f64,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn methods(&self) -> Vec<KoopmanMethod> {
        if self.methods.is_empty() {
            vec![self.quack.method]
        } else {
            self.methods.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(QuackError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.seeds.is_empty() {
            return Err(QuackError::Config("at least one seed is required".into()));
        }
        if self.baseline_steps == 0 {
            return Err(QuackError::Config("baseline_steps must be positive".into()));
        }
        if !(self.target_fraction > 0.0 && self.target_fraction < 1.0) {
            return Err(QuackError::Config("target_fraction must lie in (0, 1)".into()));
        }
        if self.shots == Some(0) {
            return Err(QuackError::Config("shots must be positive".into()));
        }
        if self.shots.is_some() && self.optimizer.kind == OptimizerKind::Qng {
            return Err(QuackError::Config("natural gradient is not available with shot noise".into()));
        }
        if matches!(self.task, TaskSpec::ConvexTest { dim: 0 }) {
            return Err(QuackError::Config("convex task needs a positive dimension".into()));
        }
        self.optimizer.validate()?;
        for m in self.methods() {
            QuackConfig {
                method: m,
                ..self.quack.clone()
            }
            .validate()?;
        }
        Ok(())
    }

    fn problem(&self) -> Result<Option<(Ansatz, Hamiltonian)>> {
        let h = match &self.task {
            TaskSpec::Ising { n_qubits, field } => ising_hamiltonian(*n_qubits, *field)?,
            TaskSpec::PauliFile { path } => load_hamiltonian(&fs::read_to_string(path)?)?,
            TaskSpec::ConvexTest { .. } => return Ok(None),
        };
        let n = h.n_qubits();
        let a = match self.ansatz {
            AnsatzSpec::RealAmplitudes { reps } => real_amplitudes(n, reps)?,
            AnsatzSpec::HardwareEfficient { depth } => hardware_efficient(n, depth)?,
        };
        Ok(Some((a, h)))
    }

    /// Fresh objective for one run; `run` keys the shot-noise streams.
    pub fn oracle(&self, seed: u64, run: u64) -> Result<Box<dyn ObjectiveOracle + Send>> {
        match self.problem()? {
            None => {
                let TaskSpec::ConvexTest { dim } = self.task else {
                    unreachable!("only the convex task has no circuit")
                };
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
                let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                Ok(Box::new(QuadraticObjective::new(x)))
            }
            Some((a, h)) => match self.shots {
                Some(n) => Ok(Box::new(NoisyVqeObjective::new(a, h, ShotConfig::new(n, seed)?, run)?)),
                None => {
                    let obj = VqeObjective::new(a, h, self.backend)?;
                    Ok(Box::new(if self.optimizer.kind == OptimizerKind::Qng {
                        obj.with_natural_gradient(self.optimizer.lambda)
                    } else {
                        obj
                    }))
                }
            },
        }
    }

    /// `theta_0 ~ U[0, 1)^p` from the seed.
    pub fn initial_theta(&self, seed: u64, p: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..p).map(|_| rng.random::<f64>()).collect()
    }

    fn cost_factor(&self, oracle: &dyn ObjectiveOracle) -> Result<f64> {
        f_cost(oracle.param_count(), oracle.cost_method())
    }
}

fn sized_preset(name: &str, prefix: &str) -> Option<usize> {
    name.strip_prefix(prefix)?.strip_suffix('q')?.parse().ok()
}

/// Named scenario presets.
///
/// `qng-5q`, `overparam-<N>q`, `smooth-<N>q`, `nonsmooth-12q`, `shots-5q`,
/// `ablate-nsim`, `convex`.
pub fn preset(name: &str) -> Result<ExperimentSpec> {
    let ising = |n| TaskSpec::Ising {
        n_qubits: n,
        field: 0.5,
    };
    let ra = AnsatzSpec::RealAmplitudes { reps: 1 };
    let base = |task, ansatz, optimizer, quack, seeds: std::ops::Range<u64>, steps| ExperimentSpec {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        task,
        ansatz,
        optimizer,
        backend: GradientBackend::Exact,
        quack,
        methods: Vec::new(),
        shots: None,
        seeds: seeds.collect(),
        baseline_steps: steps,
        target_fraction: DEFAULT_TARGET_FRACTION,
    };
    let spec = match name {
        "qng-5q" => base(
            ising(5),
            ra,
            OptimizerConfig::qng(0.001),
            QuackConfig::new(4, 100, 8, KoopmanMethod::Dmd),
            0..10,
            800,
        ),
        "nonsmooth-12q" | "ablate-nsim" => {
            let mut s = base(
                ising(12),
                ra,
                OptimizerConfig::adam(0.01),
                QuackConfig::new(5, 40, 12, KoopmanMethod::SwDmd).with_delay(2),
                0..1,
                300,
            );
            s.methods = vec![KoopmanMethod::Dmd, KoopmanMethod::SwDmd];
            s
        }
        "shots-5q" => {
            let mut s = base(
                ising(5),
                ra,
                OptimizerConfig::adam(0.01),
                QuackConfig::new(10, 20, 20, KoopmanMethod::SwDmd).with_delay(5),
                0..5,
                200,
            );
            s.shots = Some(1000);
            s.backend = GradientBackend::ParameterShift;
            s
        }
        "convex" => base(
            TaskSpec::ConvexTest { dim: 8 },
            ra,
            // 1 / L for L = 2
            OptimizerConfig::gd(0.5),
            QuackConfig::new(4, 20, 10, KoopmanMethod::Dmd),
            0..1,
            100,
        ),
        _ => {
            if let Some(n) = sized_preset(name, "overparam-") {
                base(
                    ising(n),
                    AnsatzSpec::HardwareEfficient { depth: 250 },
                    OptimizerConfig::gd(5e-6),
                    QuackConfig::new(4, 1000, 5 * n, KoopmanMethod::Dmd),
                    0..3,
                    5000 * n,
                )
            } else if let Some(n) = sized_preset(name, "smooth-") {
                base(
                    ising(n),
                    ra,
                    OptimizerConfig::gd(2e-3),
                    QuackConfig::new(3, 60, 96, KoopmanMethod::Dmd),
                    0..10,
                    1500,
                )
            } else {
                return Err(QuackError::Config(format!("unknown preset {name:?}")));
            }
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// Copies of `spec` with `n_sim` swept over `values`.
pub fn ablation_specs(spec: &ExperimentSpec, values: &[usize]) -> Vec<ExperimentSpec> {
    values
        .iter()
        .map(|&n| {
            let mut s = spec.clone();
            s.quack.n_sim = n;
            s.name = format!("{}-nsim{n}", spec.name);
            s
        })
        .collect()
}

// ---------------------------------------------------------------------------
// running

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub method: KoopmanMethod,
    pub record: RunRecord,
    pub row: SpeedupRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub baseline: RunRecord,
    pub target: f64,
    pub f: f64,
    pub runs: Vec<MethodRun>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub spec: ExperimentSpec,
    pub seeds: Vec<SeedOutcome>,
    pub failures: Vec<(u64, String)>,
    pub report: SpeedupReport,
}

impl ExperimentOutcome {
    /// 0 when every seed completed, 1 on partial failure, 2 when all failed.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else if self.seeds.is_empty() {
            2
        } else {
            1
        }
    }
}

/// Runs only the baseline for one seed.
pub fn run_seed_baseline(spec: &ExperimentSpec, seed: u64, store_theta: bool) -> Result<RunRecord> {
    let mut oracle = spec.oracle(seed, 0)?;
    let p = oracle.param_count();
    let opt = OptimizerState::new(spec.optimizer, p)?;
    let theta0 = spec.initial_theta(seed, p);
    let rec = run_baseline(oracle.as_mut(), opt, &theta0, spec.baseline_steps, None, store_theta)?;
    if let Some(msg) = &rec.aborted {
        return Err(QuackError::Numerical(format!("baseline aborted: {msg}")));
    }
    Ok(rec)
}

/// Baseline, target and every configured method for one seed.
pub fn run_seed(spec: &ExperimentSpec, seed: u64, methods: &[KoopmanMethod]) -> Result<SeedOutcome> {
    let store = spec.quack.store_theta;
    let baseline = run_seed_baseline(spec, seed, store)?;
    let target = target_loss(&baseline, spec.target_fraction)?;
    let b_ledger = baseline.ledger_at_target(target);
    let probe = spec.oracle(seed, 0)?;
    let f = spec.cost_factor(probe.as_ref())?;
    let p = probe.param_count();
    let theta0 = spec.initial_theta(seed, p);

    let runs = methods
        .par_iter()
        .enumerate()
        .map(|(mi, &method)| -> Result<MethodRun> {
            let mut oracle = spec.oracle(seed, mi as u64 + 1)?;
            let opt = OptimizerState::new(spec.optimizer, p)?;
            let cfg = QuackConfig {
                method,
                seed: spec.quack.seed ^ seed,
                stop_at_loss: Some(target),
                ..spec.quack.clone()
            };
            let record = run_quack(oracle.as_mut(), opt, &theta0, &cfg)?;
            let row = make_row(
                seed,
                method,
                b_ledger.as_ref(),
                record.ledger_at_target(target).as_ref(),
                f,
                cfg.n_sim,
                cfg.n_dmd,
            );
            Ok(MethodRun { method, record, row })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeedOutcome {
        seed,
        baseline,
        target,
        f,
        runs,
    })
}

/// Fans seeds out over the thread pool; results are assembled in seed order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let methods = spec.methods();
    let results: Vec<(u64, Result<SeedOutcome>)> = spec
        .seeds
        .par_iter()
        .map(|&seed| (seed, run_seed(spec, seed, &methods)))
        .collect();
    let mut seeds = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(o) => seeds.push(o),
            Err(e) => failures.push((seed, e.to_string())),
        }
    }
    let rows = seeds
        .iter()
        .flat_map(|s| s.runs.iter().map(|r| r.row.clone()))
        .collect();
    let report = SpeedupReport::new(&spec.name, rows);
    Ok(ExperimentOutcome {
        spec: spec.clone(),
        seeds,
        failures,
        report,
    })
}

/// `step, cost, relative_loss, phase` for plotting; cost charges `f` per
/// gradient step and 1 per predicted step.
pub fn write_plot_series<W: std::io::Write>(
    record: &RunRecord,
    f: f64,
    l_init: f64,
    l_min: f64,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "cost", "relative_loss", "phase"])?;
    let mut cost = 0.0;
    for (i, e) in record.history.iter().enumerate() {
        match e.phase {
            Phase::Gradient => cost += f,
            Phase::Predicted => cost += 1.0,
            _ => {}
        }
        w.write_record([
            i.to_string(),
            cost.to_string(),
            format!("{:e}", relative_loss(e.reference_loss, l_init, l_min)?),
            e.phase.name().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<fs::File> {
    Ok(fs::File::create(path)?)
}

/// Writes histories, run summaries, plot series and the speedup report.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("spec.json"), outcome.spec.to_json()?)?;
    for s in &outcome.seeds {
        let (l_init, l_min) = baseline_range(&s.baseline)?;
        s.baseline.write_csv(create(&dir.join(format!("baseline_seed{}.csv", s.seed)))?)?;
        write_plot_series(
            &s.baseline,
            s.f,
            l_init,
            l_min,
            create(&dir.join(format!("series_baseline_seed{}.csv", s.seed)))?,
        )?;
        for r in &s.runs {
            let stem = format!("{}_seed{}", r.method, s.seed);
            r.record.write_csv(create(&dir.join(format!("quack_{stem}.csv")))?)?;
            fs::write(dir.join(format!("quack_{stem}.json")), r.record.summary_json()?)?;
            write_plot_series(
                &r.record,
                s.f,
                l_init,
                l_min,
                create(&dir.join(format!("series_{stem}.csv")))?,
            )?;
        }
    }
    fs::write(
        dir.join("speedup.json"),
        serde_json::to_string_pretty(&outcome.report)?,
    )?;
    outcome.report.write_csv(create(&dir.join("speedup.csv"))?)?;
    if !outcome.failures.is_empty() {
        let text: String = outcome
            .failures
            .iter()
            .map(|(seed, e)| format!("seed {seed}: {e}\n"))
            .collect();
        fs::write(dir.join("failures.txt"), text)?;
    }
    Ok(())
}
