//! Neural Koopman operators: a learned residual encoder in front of a linear `K`.
//!
//! The objective is the mean-squared error of `Y - K * encode(Phi)` where
//! `Phi` holds the delay-embedded windows and `Y` their successors. Gradients
//! come from a small reverse-mode tape over dense matrices.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QuackError, Result};
use crate::koopman::{build_delay_matrix, default_rcond, delay_targets, pinv, Trajectory};

pub const DEFAULT_TRAIN_STEPS: usize = 30_000;
pub const DEFAULT_WARMUP_STEPS: usize = 9_000;
pub const DEFAULT_PEAK_LR: f64 = 1e-3;
pub const DEFAULT_KERNEL_SIZE: usize = 3;
const INIT_SCALE: f64 = 0.1;

pub fn elu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

fn elu_grad(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        x.exp()
    }
}

// ---------------------------------------------------------------------------
// reverse-mode tape

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy)]
struct ConvShape {
    in_ch: usize,
    out_ch: usize,
    len: usize,
    kernel: usize,
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    /// `a + b * 1^T` with `b` a column.
    AddBias(usize, usize),
    Elu(usize),
    CausalConv(usize, usize, ConvShape),
    MeanSquare(usize),
}

/// Records matrix operations for one forward pass and replays them backwards.
#[derive(Debug, Default)]
pub struct Tape {
    values: Vec<DMatrix<f64>>,
    ops: Vec<Op>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: DMatrix<f64>, op: Op) -> Var {
        self.values.push(value);
        self.ops.push(op);
        Var(self.values.len() - 1)
    }

    pub fn leaf(&mut self, value: DMatrix<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &DMatrix<f64> {
        &self.values[v.0]
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let out = &self.values[a.0] * &self.values[b.0];
        self.push(out, Op::MatMul(a.0, b.0))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let out = &self.values[a.0] + &self.values[b.0];
        self.push(out, Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let out = &self.values[a.0] - &self.values[b.0];
        self.push(out, Op::Sub(a.0, b.0))
    }

    pub fn add_bias(&mut self, a: Var, bias: Var) -> Var {
        let b = &self.values[bias.0];
        assert_eq!(b.ncols(), 1, "bias must be a column");
        let mut out = self.values[a.0].clone();
        for mut col in out.column_iter_mut() {
            col += b.column(0);
        }
        self.push(out, Op::AddBias(a.0, bias.0))
    }

    pub fn elu(&mut self, a: Var) -> Var {
        let out = self.values[a.0].map(elu);
        self.push(out, Op::Elu(a.0))
    }

    /// Causal 1-D convolution over time. Each column of `input` is one sample
    /// laid out time-major (`row = t * in_ch + c`); `kernel` is
    /// `out_ch x (in_ch * k)` with entry `(o, c * k + j)` weighting lag `j`.
    pub fn causal_conv(&mut self, input: Var, kernel: Var, in_ch: usize, len: usize) -> Var {
        let w = &self.values[kernel.0];
        let x = &self.values[input.0];
        assert_eq!(x.nrows(), in_ch * len, "conv input rows");
        assert_eq!(w.ncols() % in_ch, 0, "conv kernel columns");
        let shape = ConvShape {
            in_ch,
            out_ch: w.nrows(),
            len,
            kernel: w.ncols() / in_ch,
        };
        let mut out = DMatrix::zeros(shape.out_ch * len, x.ncols());
        for n in 0..x.ncols() {
            for t in 0..len {
                for o in 0..shape.out_ch {
                    let mut acc = 0.0;
                    for j in 0..shape.kernel.min(t + 1) {
                        for c in 0..in_ch {
                            acc += w[(o, c * shape.kernel + j)] * x[((t - j) * in_ch + c, n)];
                        }
                    }
                    out[(t * shape.out_ch + o, n)] = acc;
                }
            }
        }
        self.push(out, Op::CausalConv(input.0, kernel.0, shape))
    }

    /// `sum(a^2) / len(a)` as a 1x1 matrix.
    pub fn mean_square(&mut self, a: Var) -> Var {
        let v = &self.values[a.0];
        let out = DMatrix::from_element(1, 1, v.norm_squared() / v.len() as f64);
        self.push(out, Op::MeanSquare(a.0))
    }

    /// Gradients of the scalar `out` with respect to every recorded value.
    pub fn backward(&self, out: Var) -> Vec<Option<DMatrix<f64>>> {
        assert_eq!(self.values[out.0].shape(), (1, 1), "backward needs a scalar");
        let mut grads: Vec<Option<DMatrix<f64>>> = vec![None; self.values.len()];
        grads[out.0] = Some(DMatrix::from_element(1, 1, 1.0));

        fn acc(grads: &mut [Option<DMatrix<f64>>], i: usize, g: DMatrix<f64>) {
            match &mut grads[i] {
                Some(existing) => *existing += g,
                slot => *slot = Some(g),
            }
        }

        for i in (0..=out.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            match self.ops[i] {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    acc(&mut grads, a, &g * self.values[b].transpose());
                    acc(&mut grads, b, self.values[a].transpose() * &g);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, a, g.clone());
                    acc(&mut grads, b, g.clone());
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, a, g.clone());
                    acc(&mut grads, b, -g.clone());
                }
                Op::AddBias(a, b) => {
                    let gb = DMatrix::from_iterator(g.nrows(), 1, g.row_iter().map(|r| r.sum()));
                    acc(&mut grads, a, g.clone());
                    acc(&mut grads, b, gb);
                }
                Op::Elu(a) => {
                    let ga = g.zip_map(&self.values[a], |gi, xi| gi * elu_grad(xi));
                    acc(&mut grads, a, ga);
                }
                Op::CausalConv(xi, wi, s) => {
                    let x = &self.values[xi];
                    let w = &self.values[wi];
                    let mut gx = DMatrix::zeros(x.nrows(), x.ncols());
                    let mut gw = DMatrix::zeros(w.nrows(), w.ncols());
                    for n in 0..x.ncols() {
                        for t in 0..s.len {
                            for o in 0..s.out_ch {
                                let gy = g[(t * s.out_ch + o, n)];
                                if gy == 0.0 {
                                    continue;
                                }
                                for j in 0..s.kernel.min(t + 1) {
                                    for c in 0..s.in_ch {
                                        let row = (t - j) * s.in_ch + c;
                                        gx[(row, n)] += w[(o, c * s.kernel + j)] * gy;
                                        gw[(o, c * s.kernel + j)] += x[(row, n)] * gy;
                                    }
                                }
                            }
                        }
                    }
                    acc(&mut grads, xi, gx);
                    acc(&mut grads, wi, gw);
                }
                Op::MeanSquare(a) => {
                    let v = &self.values[a];
                    let scale = 2.0 * g[(0, 0)] / v.len() as f64;
                    acc(&mut grads, a, v * scale);
                }
            }
            grads[i] = Some(g);
        }
        grads
    }
}

// ---------------------------------------------------------------------------
// encoders

/// Residual two-layer perceptron on the flattened window:
/// `x + W2 elu(W1 x + b1) + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpEncoder {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
}

impl MlpEncoder {
    pub fn zeros(dim: usize, hidden: usize) -> Self {
        Self {
            w1: DMatrix::zeros(hidden, dim),
            b1: DVector::zeros(hidden),
            w2: DMatrix::zeros(dim, hidden),
            b2: DVector::zeros(dim),
        }
    }

    pub fn random(dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut e = Self::zeros(dim, hidden);
        fill_uniform(e.w1.iter_mut(), dim, rng);
        fill_uniform(e.b1.iter_mut(), dim, rng);
        fill_uniform(e.w2.iter_mut(), hidden, rng);
        fill_uniform(e.b2.iter_mut(), hidden, rng);
        e
    }

    pub fn dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden(&self) -> usize {
        self.w1.nrows()
    }
}

/// Two causal convolutions over the window's time axis with parameters as
/// channels and a single bottleneck channel, plus a residual on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnEncoder {
    /// `1 x (p * k)`
    pub w1: DMatrix<f64>,
    /// `p x k`
    pub w2: DMatrix<f64>,
    pub channels: usize,
    pub kernel: usize,
}

impl CnnEncoder {
    pub fn zeros(channels: usize, kernel: usize) -> Self {
        Self {
            w1: DMatrix::zeros(1, channels * kernel),
            w2: DMatrix::zeros(channels, kernel),
            channels,
            kernel,
        }
    }

    pub fn random(channels: usize, kernel: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut e = Self::zeros(channels, kernel);
        fill_uniform(e.w1.iter_mut(), channels * kernel, rng);
        fill_uniform(e.w2.iter_mut(), kernel, rng);
        e
    }
}

fn fill_uniform<'a>(values: impl Iterator<Item = &'a mut f64>, fan_in: usize, rng: &mut ChaCha8Rng) {
    let bound = INIT_SCALE / (fan_in.max(1) as f64).sqrt();
    for x in values {
        *x = rng.random_range(-bound..bound);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    Mlp(MlpEncoder),
    Cnn(CnnEncoder),
}

impl Encoder {
    /// Trainable tensors in a fixed order; biases as column matrices.
    pub fn params(&self) -> Vec<DMatrix<f64>> {
        match self {
            Encoder::Mlp(e) => vec![
                e.w1.clone(),
                DMatrix::from_column_slice(e.b1.len(), 1, e.b1.as_slice()),
                e.w2.clone(),
                DMatrix::from_column_slice(e.b2.len(), 1, e.b2.as_slice()),
            ],
            Encoder::Cnn(e) => vec![e.w1.clone(), e.w2.clone()],
        }
    }

    /// Inverse of [`Encoder::params`].
    pub fn set_params(&mut self, params: &[DMatrix<f64>]) {
        match self {
            Encoder::Mlp(e) => {
                e.w1.copy_from(&params[0]);
                e.b1.copy_from(&params[1].column(0));
                e.w2.copy_from(&params[2]);
                e.b2.copy_from(&params[3].column(0));
            }
            Encoder::Cnn(e) => {
                e.w1.copy_from(&params[0]);
                e.w2.copy_from(&params[1]);
            }
        }
    }

    /// Records the encoder on `tape`; `params` are the leaves from [`Encoder::params`].
    fn record(&self, tape: &mut Tape, x: Var, params: &[Var], window_len: usize) -> Var {
        match self {
            Encoder::Mlp(_) => {
                let h = tape.matmul(params[0], x);
                let h = tape.add_bias(h, params[1]);
                let a = tape.elu(h);
                let y = tape.matmul(params[2], a);
                let y = tape.add_bias(y, params[3]);
                tape.add(x, y)
            }
            Encoder::Cnn(e) => {
                let z = tape.causal_conv(x, params[0], e.channels, window_len);
                let a = tape.elu(z);
                let y = tape.causal_conv(a, params[1], 1, window_len);
                tape.add(x, y)
            }
        }
    }

    fn input_dim_ok(&self, dim: usize, p: usize) -> bool {
        match self {
            Encoder::Mlp(e) => e.dim() == dim,
            Encoder::Cnn(e) => e.channels == p,
        }
    }
}

/// Applies the encoder to a batch of flattened windows (one per column).
pub fn encode(encoder: &Encoder, windows: &DMatrix<f64>, param_count: usize) -> Result<DMatrix<f64>> {
    if param_count == 0 || !windows.nrows().is_multiple_of(param_count) {
        return Err(QuackError::dim("window rows", param_count, windows.nrows()));
    }
    if !encoder.input_dim_ok(windows.nrows(), param_count) {
        return Err(QuackError::UnsupportedShape(format!(
            "encoder does not accept {}-dimensional windows",
            windows.nrows()
        )));
    }
    let mut tape = Tape::new();
    let x = tape.leaf(windows.clone());
    let params: Vec<Var> = encoder.params().into_iter().map(|m| tape.leaf(m)).collect();
    let out = encoder.record(&mut tape, x, &params, windows.nrows() / param_count);
    Ok(tape.value(out).clone())
}

/// Flattens a `p x (d+1)` window (oldest column first) into a feature column.
pub fn flatten_window(window: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(window.len(), 1, window.as_slice())
}

// ---------------------------------------------------------------------------
// training

/// Linear warmup from zero to `peak`, then cosine decay to zero at `total`.
pub fn lr_schedule(step: usize, total: usize, warmup: usize, peak: f64) -> Result<f64> {
    if warmup == 0 || warmup >= total {
        return Err(QuackError::Config(format!(
            "warmup {warmup} must be positive and below total {total}"
        )));
    }
    if step <= warmup {
        return Ok(peak * step as f64 / warmup as f64);
    }
    if step >= total {
        return Ok(0.0);
    }
    let frac = (step - warmup) as f64 / (total - warmup) as f64;
    Ok(peak * 0.5 * (1.0 + (PI * frac).cos()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    Mlp,
    Cnn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeuralConfig {
    pub steps: usize,
    pub warmup: usize,
    pub peak_lr: f64,
    pub seed: u64,
    /// MLP hidden width; `None` uses the feature dimension.
    pub hidden: Option<usize>,
    pub kernel_size: usize,
    /// Start the encoder's inner layers at zero instead of random.
    pub zero_init: bool,
    /// Train only `K`.
    pub freeze_encoder: bool,
}

impl Default for NeuralConfig {
    fn default() -> Self {
        Self {
            steps: DEFAULT_TRAIN_STEPS,
            warmup: DEFAULT_WARMUP_STEPS,
            peak_lr: DEFAULT_PEAK_LR,
            seed: 0,
            hidden: None,
            kernel_size: DEFAULT_KERNEL_SIZE,
            zero_init: false,
            freeze_encoder: false,
        }
    }
}

impl NeuralConfig {
    /// Shorter schedule keeping the default warmup ratio.
    pub fn with_steps(steps: usize) -> Self {
        Self {
            steps,
            warmup: (steps * 3 / 10).max(1),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(QuackError::Config("training needs at least one step".into()));
        }
        lr_schedule(0, self.steps, self.warmup, self.peak_lr)?;
        if !(self.peak_lr > 0.0) {
            return Err(QuackError::Config("peak learning rate must be positive".into()));
        }
        if self.kernel_size == 0 || self.hidden == Some(0) {
            return Err(QuackError::Config("layer sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Trained encoder plus its linear operator.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralKoopman {
    pub encoder: Encoder,
    /// `p x (d+1)p`
    pub k_matrix: DMatrix<f64>,
    pub delay: usize,
    pub param_count: usize,
    /// Objective value before each training step.
    pub training_log: Vec<f64>,
    /// Objective after the last step.
    pub final_objective: f64,
}

/// Gradients for `K` and for each encoder tensor.
type Gradients = (DMatrix<f64>, Vec<DMatrix<f64>>);

/// Mean-squared objective and its gradients with respect to `K` and the encoder params.
fn objective(
    encoder: &Encoder,
    k: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    y: &DMatrix<f64>,
    window_len: usize,
    with_grad: bool,
) -> (f64, Option<Gradients>) {
    let mut tape = Tape::new();
    let x = tape.leaf(phi.clone());
    let params: Vec<Var> = encoder.params().into_iter().map(|m| tape.leaf(m)).collect();
    let kv = tape.leaf(k.clone());
    let yv = tape.leaf(y.clone());
    let feat = encoder.record(&mut tape, x, &params, window_len);
    let pred = tape.matmul(kv, feat);
    let diff = tape.sub(yv, pred);
    let loss = tape.mean_square(diff);
    let value = tape.value(loss)[(0, 0)];
    if !with_grad {
        return (value, None);
    }
    let mut grads = tape.backward(loss);
    let gk = grads[kv.0].take().unwrap_or_else(|| DMatrix::zeros(k.nrows(), k.ncols()));
    let gp = params
        .iter()
        .map(|v| {
            let shape = tape.value(*v).shape();
            grads[v.0].take().unwrap_or_else(|| DMatrix::zeros(shape.0, shape.1))
        })
        .collect();
    (value, Some((gk, gp)))
}

/// Objective of `(encoder, k)` on delay features `phi` and targets `y`, with
/// its backprop gradients for `k` and each of [`Encoder::params`].
pub fn objective_gradients(
    encoder: &Encoder,
    k: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    y: &DMatrix<f64>,
    window_len: usize,
) -> (f64, DMatrix<f64>, Vec<DMatrix<f64>>) {
    let (v, g) = objective(encoder, k, phi, y, window_len, true);
    let (gk, gp) = g.expect("gradients requested");
    (v, gk, gp)
}

/// Objective without gradients; see [`objective_gradients`].
pub fn objective_value(encoder: &Encoder, k: &DMatrix<f64>, phi: &DMatrix<f64>, y: &DMatrix<f64>, window_len: usize) -> f64 {
    objective(encoder, k, phi, y, window_len, false).0
}

/// Mean-squared objective of a model on a trajectory.
pub fn neural_objective(model: &NeuralKoopman, traj: &Trajectory) -> Result<f64> {
    let phi = build_delay_matrix(traj, model.delay)?;
    let y = delay_targets(traj, model.delay)?;
    Ok(objective(&model.encoder, &model.k_matrix, &phi, &y, model.delay + 1, false).0)
}

struct Adam {
    m: Vec<DMatrix<f64>>,
    v: Vec<DMatrix<f64>>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(shapes: &[(usize, usize)]) -> Self {
        Self {
            m: shapes.iter().map(|&(r, c)| DMatrix::zeros(r, c)).collect(),
            v: shapes.iter().map(|&(r, c)| DMatrix::zeros(r, c)).collect(),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [&mut DMatrix<f64>], grads: &[DMatrix<f64>], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - Self::B1.powi(self.t);
        let bc2 = 1.0 - Self::B2.powi(self.t);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            for j in 0..g.len() {
                m[j] = Self::B1 * m[j] + (1.0 - Self::B1) * g[j];
                v[j] = Self::B2 * v[j] + (1.0 - Self::B2) * g[j] * g[j];
                p[j] -= lr * (m[j] / bc1) / ((v[j] / bc2).sqrt() + Self::EPS);
            }
        }
    }
}

/// Jointly fits `K` and the encoder by Adam under [`lr_schedule`].
///
/// `K` starts at the least-squares solution for the initial encoder, so a
/// frozen zero encoder reproduces the linear fit. The returned parameters are
/// the lowest-objective ones visited.
pub fn train_neural_dmd(
    traj: &Trajectory,
    kind: EncoderKind,
    delay: usize,
    config: &NeuralConfig,
) -> Result<NeuralKoopman> {
    config.validate()?;
    let phi = build_delay_matrix(traj, delay)?;
    let y = delay_targets(traj, delay)?;
    let p = traj.param_count();
    let dim = phi.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut encoder = match (kind, config.zero_init) {
        (EncoderKind::Mlp, zero) => {
            let h = config.hidden.unwrap_or(dim);
            Encoder::Mlp(if zero {
                MlpEncoder::zeros(dim, h)
            } else {
                MlpEncoder::random(dim, h, &mut rng)
            })
        }
        (EncoderKind::Cnn, zero) => Encoder::Cnn(if zero {
            CnnEncoder::zeros(p, config.kernel_size)
        } else {
            CnnEncoder::random(p, config.kernel_size, &mut rng)
        }),
    };
    let window_len = delay + 1;

    let feat0 = encode(&encoder, &phi, p)?;
    let mut k = &y * pinv(&feat0, default_rcond(feat0.nrows(), feat0.ncols()))?;

    let mut enc_params = encoder.params();
    let mut shapes = vec![k.shape()];
    shapes.extend(enc_params.iter().map(|m| m.shape()));
    let mut adam = Adam::new(&shapes);
    let mut log = Vec::with_capacity(config.steps);
    // parameters with the lowest objective seen so far
    let mut best: Option<(f64, DMatrix<f64>, Encoder)> = None;

    for step in 0..config.steps {
        let (loss, grads) = objective(&encoder, &k, &phi, &y, window_len, true);
        if !loss.is_finite() {
            return Err(QuackError::Numerical(format!(
                "neural objective became non-finite at step {step}"
            )));
        }
        log.push(loss);
        if best.as_ref().is_none_or(|b| loss < b.0) {
            best = Some((loss, k.clone(), encoder.clone()));
        }
        let (gk, gp) = grads.expect("gradient requested");
        let lr = lr_schedule(step, config.steps, config.warmup, config.peak_lr)?;
        if config.freeze_encoder {
            adam.step(&mut [&mut k], &[gk], lr);
        } else {
            let mut all: Vec<&mut DMatrix<f64>> = vec![&mut k];
            all.extend(enc_params.iter_mut());
            let mut g = vec![gk];
            g.extend(gp);
            adam.step(&mut all, &g, lr);
            encoder.set_params(&enc_params);
        }
    }
    let mut final_objective = objective(&encoder, &k, &phi, &y, window_len, false).0;
    if !final_objective.is_finite() {
        return Err(QuackError::Numerical("neural objective became non-finite".into()));
    }
    if let Some((loss, best_k, best_enc)) = best {
        if loss < final_objective {
            final_objective = loss;
            k = best_k;
            encoder = best_enc;
        }
    }
    Ok(NeuralKoopman {
        encoder,
        k_matrix: k,
        delay,
        param_count: p,
        training_log: log,
        final_objective,
    })
}

/// Iterates `theta_next = K * encode(window)`, shifting the window each step.
pub fn predict_neural(model: &NeuralKoopman, recent: &DMatrix<f64>, steps: usize) -> Result<Vec<Vec<f64>>> {
    let p = model.param_count;
    if recent.nrows() != p {
        return Err(QuackError::dim("window rows", p, recent.nrows()));
    }
    if recent.ncols() != model.delay + 1 {
        return Err(QuackError::dim("window columns", model.delay + 1, recent.ncols()));
    }
    let dim = recent.len();
    let mut phi = flatten_window(recent);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let feat = encode(&model.encoder, &phi, p)?;
        let next = &model.k_matrix * feat;
        phi.as_mut_slice().copy_within(p.., 0);
        phi.rows_mut(dim - p, p).copy_from(&next);
        out.push(next.iter().copied().collect());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// checkpoints

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tensor {
    shape: [usize; 2],
    /// column-major
    data: Vec<f64>,
}

impl From<&DMatrix<f64>> for Tensor {
    fn from(m: &DMatrix<f64>) -> Self {
        Tensor {
            shape: [m.nrows(), m.ncols()],
            data: m.as_slice().to_vec(),
        }
    }
}

impl Tensor {
    fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.shape[0] * self.shape[1] != self.data.len() {
            return Err(QuackError::InvalidSize(format!(
                "tensor shape {:?} does not match {} values",
                self.shape,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_column_slice(self.shape[0], self.shape[1], &self.data))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    encoder: EncoderKind,
    delay: usize,
    param_count: usize,
    kernel_size: usize,
    k_matrix: Tensor,
    encoder_params: Vec<Tensor>,
    training_log: Vec<f64>,
    final_objective: f64,
}

impl NeuralKoopman {
    pub fn to_json(&self) -> Result<String> {
        let (kind, kernel_size) = match &self.encoder {
            Encoder::Mlp(_) => (EncoderKind::Mlp, 0),
            Encoder::Cnn(e) => (EncoderKind::Cnn, e.kernel),
        };
        let ck = Checkpoint {
            format_version: 1,
            encoder: kind,
            delay: self.delay,
            param_count: self.param_count,
            kernel_size,
            k_matrix: (&self.k_matrix).into(),
            encoder_params: self.encoder.params().iter().map(Tensor::from).collect(),
            training_log: self.training_log.clone(),
            final_objective: self.final_objective,
        };
        Ok(serde_json::to_string(&ck)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        let p = ck.param_count;
        let dim = (ck.delay + 1) * p;
        let k = ck.k_matrix.to_matrix()?;
        if k.shape() != (p, dim) {
            return Err(QuackError::InvalidSize(format!("K has shape {:?}", k.shape())));
        }
        let params = ck
            .encoder_params
            .iter()
            .map(Tensor::to_matrix)
            .collect::<Result<Vec<_>>>()?;
        let mut encoder = match ck.encoder {
            EncoderKind::Mlp => {
                let hidden = params.first().map(|m| m.nrows()).unwrap_or(0);
                Encoder::Mlp(MlpEncoder::zeros(dim, hidden))
            }
            EncoderKind::Cnn => Encoder::Cnn(CnnEncoder::zeros(p, ck.kernel_size)),
        };
        let expected: Vec<_> = encoder.params().iter().map(|m| m.shape()).collect();
        let got: Vec<_> = params.iter().map(|m| m.shape()).collect();
        if expected != got {
            return Err(QuackError::InvalidSize(format!(
                "encoder parameter shapes {got:?}, expected {expected:?}"
            )));
        }
        encoder.set_params(&params);
        Ok(Self {
            encoder,
            k_matrix: k,
            delay: ck.delay,
            param_count: p,
            training_log: ck.training_log,
            final_objective: ck.final_objective,
        })
    }
}
