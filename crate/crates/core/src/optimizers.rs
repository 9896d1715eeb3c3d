//! Parameter-update rules: gradient descent, Adam and quantum natural gradient.

use serde::{Deserialize, Serialize};

use crate::error::{QuackError, Result};
use crate::gradients::{natural_gradient_direction, GradInfo, DEFAULT_FISHER_REGULARIZATION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Gd,
    Adam,
    Qng,
}

impl std::str::FromStr for OptimizerKind {
    type Err = QuackError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gd" | "sgd" => Ok(OptimizerKind::Gd),
            "adam" => Ok(OptimizerKind::Adam),
            "qng" => Ok(OptimizerKind::Qng),
            other => Err(QuackError::UnknownMethod(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_adam_eps")]
    pub eps: f64,
    /// Metric regularization for natural gradient.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_adam_eps() -> f64 {
    1e-8
}
fn default_lambda() -> f64 {
    DEFAULT_FISHER_REGULARIZATION
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Self {
        Self {
            kind,
            learning_rate,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_adam_eps(),
            lambda: default_lambda(),
        }
    }

    pub fn gd(learning_rate: f64) -> Self {
        Self::new(OptimizerKind::Gd, learning_rate)
    }

    pub fn adam(learning_rate: f64) -> Self {
        Self::new(OptimizerKind::Adam, learning_rate)
    }

    pub fn qng(learning_rate: f64) -> Self {
        Self::new(OptimizerKind::Qng, learning_rate)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(QuackError::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(QuackError::Config("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(QuackError::Config("regularization must be non-negative".into()));
        }
        Ok(())
    }
}

/// Optimizer hyperparameters plus the running Adam moments.
///
/// The state is a plain value: [`OptimizerState::step`] returns the next state
/// instead of mutating, so a caller can snapshot and restore it freely.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: OptimizerConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, param_count: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
        })
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    pub fn reset_moments(&mut self) {
        self.m.iter_mut().for_each(|x| *x = 0.0);
        self.v.iter_mut().for_each(|x| *x = 0.0);
        self.t = 0;
    }

    /// Returns `(theta', state')`.
    pub fn step(&self, theta: &[f64], info: &GradInfo) -> Result<(Vec<f64>, OptimizerState)> {
        let mut next = self.clone();
        let theta = next.advance(theta, info)?;
        Ok((theta, next))
    }

    /// In-place variant of [`OptimizerState::step`].
    pub fn advance(&mut self, theta: &[f64], info: &GradInfo) -> Result<Vec<f64>> {
        let p = self.m.len();
        if theta.len() != p {
            return Err(QuackError::dim("parameter vector", p, theta.len()));
        }
        if info.grad.len() != p {
            return Err(QuackError::dim("gradient", p, info.grad.len()));
        }
        if info.grad.iter().any(|g| !g.is_finite()) {
            return Err(QuackError::Numerical("non-finite gradient".into()));
        }
        let lr = self.config.learning_rate;
        let out = match self.config.kind {
            OptimizerKind::Gd => theta
                .iter()
                .zip(&info.grad)
                .map(|(x, g)| x - lr * g)
                .collect(),
            OptimizerKind::Adam => {
                let OptimizerConfig {
                    beta1, beta2, eps, ..
                } = self.config;
                self.t += 1;
                let bc1 = 1.0 - beta1.powi(self.t as i32);
                let bc2 = 1.0 - beta2.powi(self.t as i32);
                let mut out = Vec::with_capacity(p);
                for i in 0..p {
                    let g = info.grad[i];
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
                    let m_hat = self.m[i] / bc1;
                    let v_hat = self.v[i] / bc2;
                    out.push(theta[i] - lr * m_hat / (v_hat.sqrt() + eps));
                }
                out
            }
            OptimizerKind::Qng => {
                let metric = info.metric.as_ref().ok_or_else(|| {
                    QuackError::Config("natural-gradient step needs a metric".into())
                })?;
                let dir = natural_gradient_direction(metric, &info.grad, self.config.lambda)?;
                theta.iter().zip(dir).map(|(x, d)| x - lr * d).collect()
            }
        };
        Ok(out)
    }
}
