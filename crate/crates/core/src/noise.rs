//! Shot-noise estimates of Pauli expectations, VQE losses and shift-rule gradients.
//!
//! Each Pauli term is measured independently with its own shot budget. The
//! exact expectation is computed from the statevector and the number of `+1`
//! outcomes is drawn from the matching binomial distribution.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{QuackError, Result};
use crate::gradients::{vqe_loss, CostMethod, GradInfo, ObjectiveOracle};
use crate::pauli::{Ansatz, Gate, Hamiltonian, PauliTerm, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub n_shots: u64,
    pub seed: u64,
}

impl ShotConfig {
    pub fn new(n_shots: u64, seed: u64) -> Result<Self> {
        if n_shots == 0 {
            return Err(QuackError::Config("n_shots must be at least 1".into()));
        }
        Ok(Self { n_shots, seed })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for one `(seed, run, eval, term, shift)` key.
pub fn substream(seed: u64, run: u64, eval: u64, term: u64, shift: u64) -> ChaCha8Rng {
    let mut state = seed;
    let mut bytes = [0u8; 32];
    for (i, part) in [run, eval, term, shift].into_iter().enumerate() {
        state = splitmix64(state ^ splitmix64(part.wrapping_add(i as u64)));
        bytes[i * 8..(i + 1) * 8].copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

/// Hands out keyed substreams; every evaluation advances the counter so
/// repeated calls draw fresh, reproducible samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotSampler {
    pub config: ShotConfig,
    pub run: u64,
    evals: u64,
}

impl ShotSampler {
    pub fn new(config: ShotConfig, run: u64) -> Self {
        Self {
            config,
            run,
            evals: 0,
        }
    }

    pub fn evaluations(&self) -> u64 {
        self.evals
    }

    fn next_eval(&mut self) -> u64 {
        let e = self.evals;
        self.evals += 1;
        e
    }

    fn stream(&self, eval: u64, term: usize, shift: u64) -> ChaCha8Rng {
        substream(self.config.seed, self.run, eval, term as u64, shift)
    }
}

/// `coefficient * (2k/n - 1)` with `k ~ Binomial(n, (1 + <P>)/2)`.
pub fn sample_pauli_expectation(
    state: &StateVector,
    term: &PauliTerm,
    n_shots: u64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if n_shots == 0 {
        return Err(QuackError::Config("n_shots must be at least 1".into()));
    }
    let e = term.pauli_expectation(state)?;
    let prob = ((1.0 + e) / 2.0).clamp(0.0, 1.0);
    let k = Binomial::new(n_shots, prob)
        .map_err(|err| QuackError::Numerical(format!("binomial sampler: {err}")))?
        .sample(rng);
    Ok(term.coefficient() * (2.0 * k as f64 / n_shots as f64 - 1.0))
}

fn sampled_terms(
    state: &StateVector,
    h: &Hamiltonian,
    sampler: &ShotSampler,
    eval: u64,
    shift: u64,
) -> Result<Vec<f64>> {
    h.terms()
        .iter()
        .enumerate()
        .map(|(ti, term)| {
            let mut rng = sampler.stream(eval, ti, shift);
            sample_pauli_expectation(state, term, sampler.config.n_shots, &mut rng)
        })
        .collect()
}

/// Per-term sampled contributions to the loss at `theta`, in Hamiltonian order.
pub fn noisy_term_estimates(
    ansatz: &Ansatz,
    h: &Hamiltonian,
    theta: &[f64],
    sampler: &mut ShotSampler,
) -> Result<Vec<f64>> {
    if ansatz.n_qubits() != h.n_qubits() {
        return Err(QuackError::dim("Hamiltonian qubits", ansatz.n_qubits(), h.n_qubits()));
    }
    let state = ansatz.prepare(theta)?;
    let eval = sampler.next_eval();
    sampled_terms(&state, h, sampler, eval, 0)
}

/// Sum of independently sampled term estimates.
pub fn noisy_loss(ansatz: &Ansatz, h: &Hamiltonian, theta: &[f64], sampler: &mut ShotSampler) -> Result<f64> {
    Ok(noisy_term_estimates(ansatz, h, theta, sampler)?.iter().sum())
}

/// Shift rule with every shifted loss sampled on its own streams.
pub fn noisy_grad_parameter_shift(
    ansatz: &Ansatz,
    h: &Hamiltonian,
    theta: &[f64],
    sampler: &mut ShotSampler,
) -> Result<Vec<f64>> {
    if ansatz.n_qubits() != h.n_qubits() {
        return Err(QuackError::dim("Hamiltonian qubits", ansatz.n_qubits(), h.n_qubits()));
    }
    if theta.len() != ansatz.param_count() {
        return Err(QuackError::dim("parameter vector", ansatz.param_count(), theta.len()));
    }
    let eval = sampler.next_eval();
    let mut grad = vec![0.0; ansatz.param_count()];
    for (gi, gate) in ansatz.gates().iter().enumerate() {
        if let Gate::Rotation { param, .. } = *gate {
            // shift ids: 0 is reserved for unshifted losses
            let base = 2 * gi as u64 + 1;
            let plus = ansatz.prepare_shifted(theta, gi, FRAC_PI_2)?;
            let minus = ansatz.prepare_shifted(theta, gi, -FRAC_PI_2)?;
            let lp: f64 = sampled_terms(&plus, h, sampler, eval, base)?.iter().sum();
            let lm: f64 = sampled_terms(&minus, h, sampler, eval, base + 1)?.iter().sum();
            grad[param] += 0.5 * (lp - lm);
        }
    }
    Ok(grad)
}

/// VQE objective whose losses and gradients are shot-sampled.
///
/// The optimizer and the controlled restart see sampled values; the
/// noiseless value is available through `reference_loss` for reporting.
#[derive(Debug, Clone)]
pub struct NoisyVqeObjective {
    pub ansatz: Ansatz,
    pub hamiltonian: Hamiltonian,
    pub sampler: ShotSampler,
}

impl NoisyVqeObjective {
    pub fn new(ansatz: Ansatz, hamiltonian: Hamiltonian, shots: ShotConfig, run: u64) -> Result<Self> {
        if ansatz.n_qubits() != hamiltonian.n_qubits() {
            return Err(QuackError::dim(
                "Hamiltonian qubits",
                ansatz.n_qubits(),
                hamiltonian.n_qubits(),
            ));
        }
        ShotConfig::new(shots.n_shots, shots.seed)?;
        Ok(Self {
            ansatz,
            hamiltonian,
            sampler: ShotSampler::new(shots, run),
        })
    }
}

impl ObjectiveOracle for NoisyVqeObjective {
    fn param_count(&self) -> usize {
        self.ansatz.param_count()
    }

    fn loss(&mut self, theta: &[f64]) -> Result<f64> {
        noisy_loss(&self.ansatz, &self.hamiltonian, theta, &mut self.sampler)
    }

    fn gradient(&mut self, theta: &[f64]) -> Result<GradInfo> {
        noisy_grad_parameter_shift(&self.ansatz, &self.hamiltonian, theta, &mut self.sampler)
            .map(GradInfo::plain)
    }

    fn cost_method(&self) -> CostMethod {
        CostMethod::ParameterShift
    }

    fn is_noisy(&self) -> bool {
        true
    }

    fn reference_loss(&mut self, theta: &[f64]) -> Result<f64> {
        vqe_loss(&self.ansatz, &self.hamiltonian, theta)
    }
}
