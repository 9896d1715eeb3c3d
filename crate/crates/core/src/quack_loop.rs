//! The accelerated optimization loop: gradient steps, a Koopman fit on the
//! recent trajectory, forward-only predicted steps, and a restart from the
//! best evaluated point.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{QuackError, Result};
use crate::gradients::{CostMethod, ObjectiveOracle};
use crate::koopman::{fit_sw_dmd, predict, Trajectory};
use crate::neural::{predict_neural, train_neural_dmd, EncoderKind, NeuralConfig};
use crate::optimizers::OptimizerState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KoopmanMethod {
    Dmd,
    SwDmd,
    MlpDmd,
    MlpSwDmd,
    CnnDmd,
}

impl KoopmanMethod {
    pub const ALL: [KoopmanMethod; 5] = [
        KoopmanMethod::Dmd,
        KoopmanMethod::SwDmd,
        KoopmanMethod::MlpDmd,
        KoopmanMethod::MlpSwDmd,
        KoopmanMethod::CnnDmd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KoopmanMethod::Dmd => "dmd",
            KoopmanMethod::SwDmd => "sw-dmd",
            KoopmanMethod::MlpDmd => "mlp-dmd",
            KoopmanMethod::MlpSwDmd => "mlp-sw-dmd",
            KoopmanMethod::CnnDmd => "cnn-dmd",
        }
    }

    /// Delay actually used for a configured window delay `d`.
    pub fn effective_delay(self, d: usize) -> usize {
        match self {
            KoopmanMethod::Dmd | KoopmanMethod::MlpDmd => 0,
            KoopmanMethod::SwDmd | KoopmanMethod::MlpSwDmd | KoopmanMethod::CnnDmd => d,
        }
    }

    pub fn encoder(self) -> Option<EncoderKind> {
        match self {
            KoopmanMethod::Dmd | KoopmanMethod::SwDmd => None,
            KoopmanMethod::MlpDmd | KoopmanMethod::MlpSwDmd => Some(EncoderKind::Mlp),
            KoopmanMethod::CnnDmd => Some(EncoderKind::Cnn),
        }
    }
}

impl std::fmt::Display for KoopmanMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for KoopmanMethod {
    type Err = QuackError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        KoopmanMethod::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| QuackError::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuackConfig {
    pub n_sim: usize,
    pub n_dmd: usize,
    pub n_iter: usize,
    pub method: KoopmanMethod,
    #[serde(default)]
    pub delay: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub neural: NeuralConfig,
    /// Zero the optimizer moments at every restart.
    #[serde(default)]
    pub reset_moments: bool,
    /// Keep every visited parameter vector in the record.
    #[serde(default)]
    pub store_theta: bool,
    #[serde(default)]
    pub rcond: Option<f64>,
    /// Stop as soon as the reference loss reaches this value.
    #[serde(default)]
    pub stop_at_loss: Option<f64>,
}

impl QuackConfig {
    pub fn new(n_sim: usize, n_dmd: usize, n_iter: usize, method: KoopmanMethod) -> Self {
        Self {
            n_sim,
            n_dmd,
            n_iter,
            method,
            delay: 0,
            seed: 0,
            neural: NeuralConfig::default(),
            reset_moments: false,
            store_theta: false,
            rcond: None,
            stop_at_loss: None,
        }
    }

    pub fn with_delay(mut self, d: usize) -> Self {
        self.delay = d;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sim == 0 || self.n_iter == 0 {
            return Err(QuackError::Config("n_sim and n_iter must be positive".into()));
        }
        let d = self.method.effective_delay(self.delay);
        if self.n_sim < d + 1 {
            return Err(QuackError::Config(format!(
                "n_sim = {} is too short for window delay {d} (need at least {})",
                self.n_sim,
                d + 1
            )));
        }
        if self.method.encoder().is_some() {
            self.neural.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Initial,
    Gradient,
    Predicted,
    SelectedRestart,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Initial => "initial",
            Phase::Gradient => "gradient",
            Phase::Predicted => "predicted",
            Phase::SelectedRestart => "selected-restart",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub phase: Phase,
    /// Loss as seen by the algorithm (sampled under shot noise).
    pub loss: f64,
    /// Noiseless loss at the same point.
    pub reference_loss: f64,
    pub iteration: usize,
}

/// Gradient steps and forward-only evaluations spent by a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub gradient_steps: u64,
    pub forward_evals: u64,
    pub cost_method: CostMethod,
    pub param_count: usize,
}

impl CostLedger {
    pub fn new(cost_method: CostMethod, param_count: usize) -> Self {
        Self {
            gradient_steps: 0,
            forward_evals: 0,
            cost_method,
            param_count,
        }
    }

    fn charge(&mut self, phase: Phase) {
        match phase {
            Phase::Gradient => self.gradient_steps += 1,
            Phase::Predicted => self.forward_evals += 1,
            Phase::Initial | Phase::SelectedRestart => {}
        }
    }

    /// `f * gradient_steps + forward_evals` for a gradient cost factor `f`.
    pub fn total_cost(&self, f: f64) -> f64 {
        f * self.gradient_steps as f64 + self.forward_evals as f64
    }
}

/// Outcome of one iteration's Koopman phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: usize,
    /// Loss after the gradient phase.
    pub loss_at_tm: f64,
    /// Loss at the restart point.
    pub selected_loss: f64,
    /// Offset of the restart point from the end of the gradient phase.
    pub t_opt: usize,
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub history: Vec<HistoryEntry>,
    /// Parameter vector per history entry, when requested.
    pub thetas: Option<Vec<Vec<f64>>>,
    pub iterations: Vec<IterationSummary>,
    pub final_theta: Vec<f64>,
    pub cost_method: CostMethod,
    pub param_count: usize,
    pub noisy: bool,
    pub aborted: Option<String>,
    pub config: Option<QuackConfig>,
}

impl RunRecord {
    fn new(oracle: &dyn ObjectiveOracle, store_theta: bool, config: Option<QuackConfig>) -> Self {
        Self {
            history: Vec::new(),
            thetas: store_theta.then(Vec::new),
            iterations: Vec::new(),
            final_theta: Vec::new(),
            cost_method: oracle.cost_method(),
            param_count: oracle.param_count(),
            noisy: oracle.is_noisy(),
            aborted: None,
            config,
        }
    }

    fn push(&mut self, phase: Phase, loss: f64, reference_loss: f64, iteration: usize, theta: &[f64]) {
        self.history.push(HistoryEntry {
            phase,
            loss,
            reference_loss,
            iteration,
        });
        if let Some(t) = &mut self.thetas {
            t.push(theta.to_vec());
        }
    }

    pub fn ledger(&self) -> CostLedger {
        let mut l = CostLedger::new(self.cost_method, self.param_count);
        for e in &self.history {
            l.charge(e.phase);
        }
        l
    }

    /// Index of the first entry whose reference loss is at or below `target`.
    pub fn first_hit(&self, target: f64) -> Option<usize> {
        self.history.iter().position(|e| e.reference_loss <= target)
    }

    /// Ledger frozen at the first entry reaching `target`.
    pub fn ledger_at_target(&self, target: f64) -> Option<CostLedger> {
        let hit = self.first_hit(target)?;
        let mut l = CostLedger::new(self.cost_method, self.param_count);
        for e in &self.history[..=hit] {
            l.charge(e.phase);
        }
        Some(l)
    }

    pub fn initial_loss(&self) -> Option<f64> {
        self.history.first().map(|e| e.reference_loss)
    }

    pub fn min_loss(&self) -> Option<f64> {
        self.history
            .iter()
            .map(|e| e.reference_loss)
            .filter(|x| x.is_finite())
            .reduce(f64::min)
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.history.last().map(|e| e.reference_loss)
    }

    pub fn t_opt(&self) -> Vec<usize> {
        self.iterations.iter().map(|i| i.t_opt).collect()
    }

    /// Losses of the gradient-phase entries, in order.
    pub fn gradient_losses(&self) -> Vec<f64> {
        self.history
            .iter()
            .filter(|e| e.phase == Phase::Gradient)
            .map(|e| e.loss)
            .collect()
    }

    /// Stored parameter vectors of the initial and gradient entries as a trajectory.
    pub fn trajectory(&self) -> Result<Trajectory> {
        let thetas = self
            .thetas
            .as_ref()
            .ok_or_else(|| QuackError::Config("run was recorded without parameter history".into()))?;
        let (cols, losses): (Vec<Vec<f64>>, Vec<Option<f64>>) = self
            .history
            .iter()
            .zip(thetas)
            .filter(|(e, _)| matches!(e.phase, Phase::Initial | Phase::Gradient))
            .map(|(e, t)| (t.clone(), Some(e.loss)))
            .unzip();
        Trajectory::from_columns(&cols)?.with_losses(losses)
    }

    /// Iterations where the restart point is worse than the end of the gradient phase.
    pub fn control_violations(&self) -> usize {
        self.iterations
            .iter()
            .filter(|i| !(i.selected_loss <= i.loss_at_tm))
            .count()
    }

    /// `step,phase,iteration,loss,reference_loss`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "phase", "iteration", "loss", "reference_loss"])?;
        for (i, e) in self.history.iter().enumerate() {
            w.write_record([
                i.to_string(),
                e.phase.name().to_string(),
                e.iteration.to_string(),
                format!("{:e}", e.loss),
                format!("{:e}", e.reference_loss),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Ledger, restart offsets and config echo.
    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            schema_version: u32,
            ledger: CostLedger,
            t_opt: Vec<usize>,
            iterations: &'a [IterationSummary],
            initial_loss: Option<f64>,
            final_loss: Option<f64>,
            min_loss: Option<f64>,
            noisy: bool,
            aborted: &'a Option<String>,
            config: &'a Option<QuackConfig>,
        }
        Ok(serde_json::to_string_pretty(&Summary {
            schema_version: 1,
            ledger: self.ledger(),
            t_opt: self.t_opt(),
            iterations: &self.iterations,
            initial_loss: self.initial_loss(),
            final_loss: self.final_loss(),
            min_loss: self.min_loss(),
            noisy: self.noisy,
            aborted: &self.aborted,
            config: &self.config,
        })?)
    }
}

/// Index of the smallest finite loss, first one on ties.
pub fn select_optimal(losses: &[f64]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, &l) in losses.iter().enumerate() {
        if l.is_finite() && best.is_none_or(|b| l < losses[b]) {
            best = Some(i);
        }
    }
    best.ok_or_else(|| QuackError::Numerical("no finite loss among candidates".into()))
}

fn evaluate(oracle: &mut dyn ObjectiveOracle, theta: &[f64]) -> Result<(f64, f64)> {
    if theta.iter().any(|x| !x.is_finite()) {
        return Ok((f64::NAN, f64::NAN));
    }
    let loss = oracle.loss(theta)?;
    let reference = if oracle.is_noisy() {
        oracle.reference_loss(theta)?
    } else {
        loss
    };
    Ok((loss, reference))
}

fn reached(stop_at: Option<f64>, reference: f64) -> bool {
    stop_at.is_some_and(|t| reference <= t)
}

/// Plain optimization: `max_steps` gradient steps from `theta0`.
///
/// A non-finite loss ends the run early with `aborted` set.
pub fn run_baseline(
    oracle: &mut dyn ObjectiveOracle,
    mut optimizer: OptimizerState,
    theta0: &[f64],
    max_steps: usize,
    stop_at_loss: Option<f64>,
    store_theta: bool,
) -> Result<RunRecord> {
    if max_steps == 0 {
        return Err(QuackError::Config("max_steps must be at least 1".into()));
    }
    if theta0.len() != oracle.param_count() {
        return Err(QuackError::dim("initial parameters", oracle.param_count(), theta0.len()));
    }
    let mut rec = RunRecord::new(oracle, store_theta, None);
    let mut theta = theta0.to_vec();
    let (l0, r0) = evaluate(oracle, &theta)?;
    rec.push(Phase::Initial, l0, r0, 0, &theta);
    if reached(stop_at_loss, r0) {
        rec.final_theta = theta;
        return Ok(rec);
    }
    for _ in 0..max_steps {
        let info = oracle.gradient(&theta)?;
        theta = optimizer.advance(&theta, &info)?;
        let (l, r) = evaluate(oracle, &theta)?;
        rec.push(Phase::Gradient, l, r, 0, &theta);
        if !l.is_finite() {
            rec.aborted = Some("non-finite loss".into());
            break;
        }
        if reached(stop_at_loss, r) {
            break;
        }
    }
    rec.final_theta = theta;
    Ok(rec)
}

fn forecast(
    snapshots: &[Vec<f64>],
    config: &QuackConfig,
    iteration: usize,
) -> Result<Vec<Vec<f64>>> {
    let traj = Trajectory::from_columns(snapshots)?;
    let d = config.method.effective_delay(config.delay);
    let window = traj.last_window(d)?;
    match config.method.encoder() {
        None => {
            let model = fit_sw_dmd(&traj, d, config.rcond)?;
            predict(&model, &window, config.n_dmd)
        }
        Some(kind) => {
            let mut nc = config.neural.clone();
            nc.seed = config.seed.wrapping_add(iteration as u64);
            let model = train_neural_dmd(&traj, kind, d, &nc)?;
            predict_neural(&model, &window, config.n_dmd)
        }
    }
}

/// Alternates `n_sim` gradient steps with `n_dmd` forecast steps, restarting
/// each iteration from the lowest-loss evaluated point.
///
/// A failed fit restarts from the end of the gradient phase and is noted in
/// the iteration summary. With `n_dmd = 0` the loss history equals
/// [`run_baseline`] for the same number of gradient steps.
pub fn run_quack(
    oracle: &mut dyn ObjectiveOracle,
    mut optimizer: OptimizerState,
    theta0: &[f64],
    config: &QuackConfig,
) -> Result<RunRecord> {
    config.validate()?;
    if theta0.len() != oracle.param_count() {
        return Err(QuackError::dim("initial parameters", oracle.param_count(), theta0.len()));
    }
    let mut rec = RunRecord::new(oracle, config.store_theta, Some(config.clone()));
    let mut theta = theta0.to_vec();
    let (l0, r0) = evaluate(oracle, &theta)?;
    rec.push(Phase::Initial, l0, r0, 0, &theta);
    let stop = config.stop_at_loss;
    if reached(stop, r0) {
        rec.final_theta = theta;
        return Ok(rec);
    }

    'outer: for it in 0..config.n_iter {
        let mut snapshots = vec![theta.clone()];
        let mut loss_tm = f64::NAN;
        for _ in 0..config.n_sim {
            let info = oracle.gradient(&theta)?;
            theta = optimizer.advance(&theta, &info)?;
            let (l, r) = evaluate(oracle, &theta)?;
            rec.push(Phase::Gradient, l, r, it, &theta);
            if !l.is_finite() {
                rec.aborted = Some(format!("non-finite loss in iteration {it}"));
                break 'outer;
            }
            loss_tm = l;
            snapshots.push(theta.clone());
            if reached(stop, r) {
                break 'outer;
            }
        }
        if config.n_dmd == 0 {
            continue;
        }

        let (predicted, fit_error) = match forecast(&snapshots, config, it) {
            Ok(p) => (p, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        };
        let mut candidates = vec![loss_tm];
        let mut hit = false;
        for p in &predicted {
            let (l, r) = evaluate(oracle, p)?;
            rec.push(Phase::Predicted, l, r, it, p);
            candidates.push(l);
            if reached(stop, r) {
                hit = true;
                break;
            }
        }
        let idx = select_optimal(&candidates)?;
        if idx > 0 {
            theta = predicted[idx - 1].clone();
        }
        let selected = candidates[idx];
        if !oracle.is_noisy() {
            assert!(
                selected <= loss_tm,
                "restart point is worse than the end of the gradient phase"
            );
        }
        rec.iterations.push(IterationSummary {
            iteration: it,
            loss_at_tm: loss_tm,
            selected_loss: selected,
            t_opt: idx,
            fit_error,
        });
        if hit {
            break;
        }
        let reference = if oracle.is_noisy() {
            oracle.reference_loss(&theta)?
        } else {
            selected
        };
        rec.push(Phase::SelectedRestart, selected, reference, it, &theta);
        if config.reset_moments {
            optimizer.reset_moments();
        }
    }
    rec.final_theta = theta;
    Ok(rec)
}
