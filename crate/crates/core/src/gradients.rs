//! Loss and gradient oracles for parameterized circuits.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QuackError, Result};
use crate::pauli::{
    apply_gate_raw, apply_generator, apply_rotation, expectation, inner, Ansatz, Gate,
    Hamiltonian, PauliLetter, PauliMasks, RotationAxis, StateVector,
};

/// Default Tikhonov shift added to the Fisher metric before solving.
pub const DEFAULT_FISHER_REGULARIZATION: f64 = 1e-8;
/// Default central-difference step.
pub const DEFAULT_FD_EPS: f64 = 1e-5;

/// How one gradient evaluation would be charged on hardware.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostMethod {
    ParameterShift,
    NaturalGradient,
    /// Simulator-only analytic gradient, charged as parameter shift.
    Exact,
}

impl std::str::FromStr for CostMethod {
    type Err = QuackError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parameter-shift" => Ok(CostMethod::ParameterShift),
            "natural-gradient" => Ok(CostMethod::NaturalGradient),
            "exact" => Ok(CostMethod::Exact),
            other => Err(QuackError::UnknownMethod(other.to_string())),
        }
    }
}

/// Real symmetric positive-semidefinite metric on parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix(pub DMatrix<f64>);

impl FisherMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn identity(p: usize) -> Self {
        FisherMatrix(DMatrix::identity(p, p))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// A gradient evaluation, optionally with the metric needed by natural gradient.
#[derive(Debug, Clone)]
pub struct GradInfo {
    pub grad: Vec<f64>,
    pub metric: Option<FisherMatrix>,
}

impl GradInfo {
    pub fn plain(grad: Vec<f64>) -> Self {
        Self { grad, metric: None }
    }
}

/// A differentiable objective over a flat parameter vector.
///
/// `loss` and `gradient` return what the optimizer sees (possibly sampled);
/// `reference_loss` returns the noiseless value when the oracle is
/// stochastic and is used only for reporting.
pub trait ObjectiveOracle {
    fn param_count(&self) -> usize;
    fn loss(&mut self, theta: &[f64]) -> Result<f64>;
    fn gradient(&mut self, theta: &[f64]) -> Result<GradInfo>;
    fn cost_method(&self) -> CostMethod;

    fn is_noisy(&self) -> bool {
        false
    }

    fn reference_loss(&mut self, theta: &[f64]) -> Result<f64> {
        self.loss(theta)
    }
}

/// Which simulator routine produces VQE gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientBackend {
    ParameterShift,
    Exact,
}

/// `<psi(theta)|H|psi(theta)>` with a selectable gradient routine.
#[derive(Debug, Clone)]
pub struct VqeObjective {
    pub ansatz: Ansatz,
    pub hamiltonian: Hamiltonian,
    pub backend: GradientBackend,
    /// `Some(lambda)` turns on natural-gradient metric evaluation.
    pub natural_gradient: Option<f64>,
}

impl VqeObjective {
    pub fn new(ansatz: Ansatz, hamiltonian: Hamiltonian, backend: GradientBackend) -> Result<Self> {
        if ansatz.n_qubits() != hamiltonian.n_qubits() {
            return Err(QuackError::dim(
                "Hamiltonian qubits",
                ansatz.n_qubits(),
                hamiltonian.n_qubits(),
            ));
        }
        Ok(Self {
            ansatz,
            hamiltonian,
            backend,
            natural_gradient: None,
        })
    }

    pub fn with_natural_gradient(mut self, lambda: f64) -> Self {
        self.natural_gradient = Some(lambda);
        self
    }
}

impl ObjectiveOracle for VqeObjective {
    fn param_count(&self) -> usize {
        self.ansatz.param_count()
    }

    fn loss(&mut self, theta: &[f64]) -> Result<f64> {
        vqe_loss(&self.ansatz, &self.hamiltonian, theta)
    }

    fn gradient(&mut self, theta: &[f64]) -> Result<GradInfo> {
        let grad = match self.backend {
            GradientBackend::ParameterShift => {
                grad_parameter_shift(&self.ansatz, &self.hamiltonian, theta)?
            }
            GradientBackend::Exact => grad_exact(&self.ansatz, &self.hamiltonian, theta)?,
        };
        let metric = match self.natural_gradient {
            Some(_) => Some(fisher_matrix(&self.ansatz, theta)?),
            None => None,
        };
        Ok(GradInfo { grad, metric })
    }

    fn cost_method(&self) -> CostMethod {
        if self.natural_gradient.is_some() {
            CostMethod::NaturalGradient
        } else {
            match self.backend {
                GradientBackend::ParameterShift => CostMethod::ParameterShift,
                GradientBackend::Exact => CostMethod::Exact,
            }
        }
    }
}

/// `L(x) = scale * ||x - x*||^2`, a classical convex test objective.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    pub minimizer: Vec<f64>,
    pub scale: f64,
}

impl QuadraticObjective {
    pub fn new(minimizer: Vec<f64>) -> Self {
        Self {
            minimizer,
            scale: 1.0,
        }
    }

    /// Lipschitz constant of the gradient.
    pub fn lipschitz(&self) -> f64 {
        2.0 * self.scale
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.minimizer.len() {
            return Err(QuackError::dim(
                "parameter vector",
                self.minimizer.len(),
                theta.len(),
            ));
        }
        Ok(())
    }
}

impl ObjectiveOracle for QuadraticObjective {
    fn param_count(&self) -> usize {
        self.minimizer.len()
    }

    fn loss(&mut self, theta: &[f64]) -> Result<f64> {
        self.check(theta)?;
        Ok(self.scale
            * theta
                .iter()
                .zip(&self.minimizer)
                .map(|(x, m)| (x - m) * (x - m))
                .sum::<f64>())
    }

    fn gradient(&mut self, theta: &[f64]) -> Result<GradInfo> {
        self.check(theta)?;
        Ok(GradInfo::plain(
            theta
                .iter()
                .zip(&self.minimizer)
                .map(|(x, m)| 2.0 * self.scale * (x - m))
                .collect(),
        ))
    }

    fn cost_method(&self) -> CostMethod {
        CostMethod::Exact
    }
}

pub fn vqe_loss(ansatz: &Ansatz, h: &Hamiltonian, theta: &[f64]) -> Result<f64> {
    let state = ansatz.prepare(theta)?;
    expectation(&state, h)
}

/// Shift rule applied to every rotation gate occurrence; for ansätze that
/// use each parameter once this is exactly
/// `(L(theta + pi/2 e_i) - L(theta - pi/2 e_i)) / 2`.
pub fn grad_parameter_shift(ansatz: &Ansatz, h: &Hamiltonian, theta: &[f64]) -> Result<Vec<f64>> {
    ansatz.check_theta(theta)?;
    check_qubits(ansatz, h)?;
    let mut grad = vec![0.0; ansatz.param_count()];
    for (gi, gate) in ansatz.gates().iter().enumerate() {
        if let Gate::Rotation { param, .. } = *gate {
            let plus = expectation(&ansatz.prepare_shifted(theta, gi, FRAC_PI_2)?, h)?;
            let minus = expectation(&ansatz.prepare_shifted(theta, gi, -FRAC_PI_2)?, h)?;
            grad[param] += 0.5 * (plus - minus);
        }
    }
    Ok(grad)
}

/// Analytic gradient by a single backward sweep (adjoint differentiation).
pub fn grad_exact(ansatz: &Ansatz, h: &Hamiltonian, theta: &[f64]) -> Result<Vec<f64>> {
    check_qubits(ansatz, h)?;
    let state = ansatz.prepare(theta)?;
    let mut lam = h.apply(&state)?;
    let mut psi = state.amplitudes().to_vec();
    let mut grad = vec![0.0; ansatz.param_count()];
    for gate in ansatz.gates().iter().rev() {
        match *gate {
            Gate::Rotation { axis, qubit, param } => {
                // dL/dtheta = 2 Re <lam| (-i/2) P |psi> = Im <lam|P|psi>
                grad[param] += generator_masks(axis, qubit)
                    .matrix_element(&lam, &psi)
                    .im;
                apply_rotation(&mut psi, axis, qubit, -theta[param]);
                apply_rotation(&mut lam, axis, qubit, -theta[param]);
            }
            Gate::Controlled { .. } => {
                // CX, CY and CZ are involutions
                apply_gate_raw(&mut psi, gate, theta, 0.0);
                apply_gate_raw(&mut lam, gate, theta, 0.0);
            }
        }
    }
    Ok(grad)
}

/// Central differences `(L(theta + eps e_i) - L(theta - eps e_i)) / (2 eps)`.
pub fn grad_finite_difference<F>(mut loss: F, theta: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(QuackError::Config(format!("finite-difference step {eps} must be positive")));
    }
    let mut x = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        x[i] = theta[i] + eps;
        let plus = loss(&x)?;
        x[i] = theta[i] - eps;
        let minus = loss(&x)?;
        x[i] = theta[i];
        grad.push((plus - minus) / (2.0 * eps));
    }
    Ok(grad)
}

/// Derivative states `d psi / d theta_j` for every parameter, plus `psi`.
pub fn derivative_states(
    ansatz: &Ansatz,
    theta: &[f64],
) -> Result<(StateVector, Vec<StateVector>)> {
    ansatz.check_theta(theta)?;
    let n = ansatz.n_qubits();
    let mut psi = StateVector::zero(n)?.amplitudes().to_vec();
    let mut derivs: Vec<Option<Vec<Complex64>>> = vec![None; ansatz.param_count()];
    let half = Complex64::new(0.0, -0.5);
    for gate in ansatz.gates() {
        apply_gate_raw(&mut psi, gate, theta, 0.0);
        for d in derivs.iter_mut().flatten() {
            apply_gate_raw(d, gate, theta, 0.0);
        }
        if let Gate::Rotation { axis, qubit, param } = *gate {
            let mut branch = psi.clone();
            apply_generator(&mut branch, axis, qubit);
            for b in branch.iter_mut() {
                *b *= half;
            }
            match &mut derivs[param] {
                Some(d) => {
                    for (x, y) in d.iter_mut().zip(&branch) {
                        *x += y;
                    }
                }
                slot @ None => *slot = Some(branch),
            }
        }
    }
    let derivs = derivs
        .into_iter()
        .map(|d| StateVector::from_raw(n, d.expect("validated ansatz uses every parameter")))
        .collect();
    Ok((StateVector::from_raw(n, psi), derivs))
}

/// `F_ij = Re[<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>]`.
pub fn fisher_matrix(ansatz: &Ansatz, theta: &[f64]) -> Result<FisherMatrix> {
    let (psi, derivs) = derivative_states(ansatz, theta)?;
    let p = derivs.len();
    let overlaps: Vec<Complex64> = derivs
        .iter()
        .map(|d| inner(d.amplitudes(), psi.amplitudes()))
        .collect();
    let mut f = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = inner(derivs[i].amplitudes(), derivs[j].amplitudes())
                - overlaps[i] * overlaps[j].conj();
            f[(i, j)] = v.re;
            f[(j, i)] = v.re;
        }
    }
    Ok(FisherMatrix(f))
}

/// Solves `(F + lambda I) x = g` through a symmetric eigendecomposition.
pub fn natural_gradient_direction(f: &FisherMatrix, g: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(QuackError::Config(format!("regularization {lambda} must be non-negative")));
    }
    let p = f.dim();
    if g.len() != p {
        return Err(QuackError::dim("gradient length", p, g.len()));
    }
    if g.iter().any(|x| !x.is_finite()) || f.0.iter().any(|x| !x.is_finite()) {
        return Err(QuackError::Numerical("non-finite natural-gradient input".into()));
    }
    let eig = SymmetricEigen::new(f.0.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = scale * p as f64 * f64::EPSILON;
    let gv = DVector::from_column_slice(g);
    let coeffs = eig.eigenvectors.transpose() * gv;
    let mut x = DVector::zeros(p);
    for k in 0..p {
        let mu = eig.eigenvalues[k] + lambda;
        if mu <= floor {
            if coeffs[k].abs() <= f64::EPSILON * scale.max(1.0) {
                continue;
            }
            return Err(QuackError::Numerical(format!(
                "singular metric: eigenvalue {mu:e} after regularization"
            )));
        }
        x += eig.eigenvectors.column(k) * (coeffs[k] / mu);
    }
    Ok(x.iter().copied().collect())
}

fn generator_masks(axis: RotationAxis, qubit: usize) -> PauliMasks {
    let bit = 1usize << qubit;
    match axis.generator() {
        PauliLetter::X => PauliMasks {
            x_mask: bit,
            z_mask: 0,
            n_y: 0,
        },
        PauliLetter::Y => PauliMasks {
            x_mask: bit,
            z_mask: bit,
            n_y: 1,
        },
        PauliLetter::Z => PauliMasks {
            x_mask: 0,
            z_mask: bit,
            n_y: 0,
        },
        PauliLetter::I => unreachable!("rotation generators are never identity"),
    }
}

fn check_qubits(ansatz: &Ansatz, h: &Hamiltonian) -> Result<()> {
    if ansatz.n_qubits() != h.n_qubits() {
        return Err(QuackError::dim("Hamiltonian qubits", ansatz.n_qubits(), h.n_qubits()));
    }
    Ok(())
}
