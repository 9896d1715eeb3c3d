//! Dense statevector simulation of parameterized circuits and Pauli-sum
//! Hamiltonians.
//!
//! Amplitude ordering: qubit 0 is the least significant bit of the basis-state
//! index. Pauli labels are written with character `i` acting on qubit `i`, so
//! `"ZZI"` on three qubits is `Z_0 Z_1`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QuackError, Result};

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 26;
/// Largest register accepted by [`exact_ground_energy`].
pub const MAX_GROUND_STATE_QUBITS: usize = 14;
const DENSE_GROUND_STATE_QUBITS: usize = 10;

const I_UNIT: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    pub fn as_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliLetter::I),
            'X' => Some(PauliLetter::X),
            'Y' => Some(PauliLetter::Y),
            'Z' => Some(PauliLetter::Z),
            _ => None,
        }
    }
}

/// A real coefficient times a tensor product of single-qubit Paulis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    coefficient: f64,
    letters: Vec<PauliLetter>,
}

/// Bit masks describing the action of a Pauli string on basis states:
/// `P|k> = i^n_y (-1)^popcount(k & z_mask) |k ^ x_mask>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct PauliMasks {
    pub x_mask: usize,
    pub z_mask: usize,
    pub n_y: u32,
}

impl PauliMasks {
    #[inline]
    pub fn phase(&self, k: usize) -> Complex64 {
        let sign = if (k & self.z_mask).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        match self.n_y % 4 {
            0 => Complex64::new(sign, 0.0),
            1 => Complex64::new(0.0, sign),
            2 => Complex64::new(-sign, 0.0),
            _ => Complex64::new(0.0, -sign),
        }
    }

    /// `<a|P|b>`.
    pub fn matrix_element(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, bk) in b.iter().enumerate() {
            acc += a[k ^ self.x_mask].conj() * self.phase(k) * bk;
        }
        acc
    }

    /// `out += scale * P|b>`.
    pub fn apply_add(&self, b: &[Complex64], scale: Complex64, out: &mut [Complex64]) {
        for (k, bk) in b.iter().enumerate() {
            out[k ^ self.x_mask] += scale * self.phase(k) * bk;
        }
    }
}

impl PauliTerm {
    pub fn new(coefficient: f64, letters: Vec<PauliLetter>) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(QuackError::Numerical(format!(
                "non-finite Pauli coefficient {coefficient}"
            )));
        }
        if letters.is_empty() {
            return Err(QuackError::InvalidSize("empty Pauli string".into()));
        }
        Ok(Self {
            coefficient,
            letters,
        })
    }

    /// Builds a term from a label such as `"XZI"`.
    pub fn from_label(coefficient: f64, label: &str) -> Result<Self> {
        let letters = label
            .chars()
            .map(|c| {
                PauliLetter::from_char(c)
                    .ok_or_else(|| QuackError::InvalidSize(format!("bad Pauli letter {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(coefficient, letters)
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn label(&self) -> String {
        self.letters.iter().map(|l| l.as_char()).collect()
    }

    pub(crate) fn masks(&self) -> PauliMasks {
        let mut m = PauliMasks {
            x_mask: 0,
            z_mask: 0,
            n_y: 0,
        };
        for (q, l) in self.letters.iter().enumerate() {
            match l {
                PauliLetter::I => {}
                PauliLetter::X => m.x_mask |= 1 << q,
                PauliLetter::Z => m.z_mask |= 1 << q,
                PauliLetter::Y => {
                    m.x_mask |= 1 << q;
                    m.z_mask |= 1 << q;
                    m.n_y += 1;
                }
            }
        }
        m
    }

    /// `<psi|P|psi>` without the coefficient.
    pub fn pauli_expectation(&self, state: &StateVector) -> Result<f64> {
        state.check_qubits(self.n_qubits())?;
        Ok(self.masks().matrix_element(&state.amps, &state.amps).re)
    }
}

/// Weighted sum of Pauli strings on a fixed register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl Hamiltonian {
    pub fn new(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(QuackError::InvalidSize("Hamiltonian needs at least one qubit".into()));
        }
        if n_qubits > MAX_QUBITS {
            return Err(QuackError::Capacity(format!(
                "{n_qubits} qubits exceeds simulator limit {MAX_QUBITS}"
            )));
        }
        if terms.is_empty() {
            return Err(QuackError::InvalidSize("Hamiltonian has no terms".into()));
        }
        for t in &terms {
            if t.n_qubits() != n_qubits {
                return Err(QuackError::dim("Pauli term width", n_qubits, t.n_qubits()));
            }
        }
        Ok(Self { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// `H|psi>` as a raw amplitude vector (not normalized).
    pub fn apply(&self, state: &StateVector) -> Result<Vec<Complex64>> {
        state.check_qubits(self.n_qubits)?;
        let mut out = vec![Complex64::new(0.0, 0.0); state.amps.len()];
        for t in &self.terms {
            t.masks()
                .apply_add(&state.amps, Complex64::new(t.coefficient, 0.0), &mut out);
        }
        Ok(out)
    }

    /// Dense `2^N x 2^N` matrix. Only intended for small registers.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > DENSE_GROUND_STATE_QUBITS + 2 {
            return Err(QuackError::Capacity(format!(
                "dense matrix for {} qubits",
                self.n_qubits
            )));
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for t in &self.terms {
            let masks = t.masks();
            for k in 0..dim {
                m[(k ^ masks.x_mask, k)] += t.coefficient * masks.phase(k);
            }
        }
        Ok(m)
    }

    fn has_y(&self) -> bool {
        self.terms
            .iter()
            .any(|t| t.letters.contains(&PauliLetter::Y))
    }

    /// Canonical text form: one `<coefficient> <letters>` line per term with
    /// 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.terms {
            s.push_str(&format!("{:.16e} {}\n", t.coefficient, t.label()));
        }
        s
    }

    /// Parses the line-oriented Pauli-sum format. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut width: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(QuackError::Parse {
                    line: line_no,
                    msg: format!("expected `<coefficient> <letters>`, found {line:?}"),
                });
            }
            let coefficient: f64 = parts[0].parse().map_err(|_| QuackError::Parse {
                line: line_no,
                msg: format!("bad coefficient {:?}", parts[0]),
            })?;
            if !coefficient.is_finite() {
                return Err(QuackError::Parse {
                    line: line_no,
                    msg: format!("non-finite coefficient {:?}", parts[0]),
                });
            }
            let letters = parts[1]
                .chars()
                .map(|c| {
                    PauliLetter::from_char(c).ok_or_else(|| QuackError::Parse {
                        line: line_no,
                        msg: format!("bad Pauli letter {c:?}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            match width {
                None => width = Some(letters.len()),
                Some(w) if w != letters.len() => {
                    return Err(QuackError::Parse {
                        line: line_no,
                        msg: format!("term width {} differs from {w}", letters.len()),
                    })
                }
                _ => {}
            }
            terms.push(PauliTerm {
                coefficient,
                letters,
            });
        }
        let Some(n) = width else {
            return Err(QuackError::Parse {
                line: text.lines().count(),
                msg: "no terms".into(),
            });
        };
        Hamiltonian::new(n, terms).map_err(|e| QuackError::Parse {
            line: 0,
            msg: e.to_string(),
        })
    }
}

impl FromStr for Hamiltonian {
    type Err = QuackError;

    fn from_str(s: &str) -> Result<Self> {
        Hamiltonian::from_text(s)
    }
}

impl fmt::Display for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Reads a Pauli-sum file.
pub fn load_hamiltonian(text: &str) -> Result<Hamiltonian> {
    Hamiltonian::from_text(text)
}

/// Transverse-field Ising chain with periodic boundary:
/// `-sum_i Z_i Z_{i+1 mod n} - h sum_i X_i`. Zero-coefficient terms are dropped.
pub fn ising_hamiltonian(n: usize, h: f64) -> Result<Hamiltonian> {
    if n < 2 {
        return Err(QuackError::InvalidSize(format!(
            "Ising chain needs at least 2 sites, got {n}"
        )));
    }
    let mut terms = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut letters = vec![PauliLetter::I; n];
        letters[i] = PauliLetter::Z;
        letters[(i + 1) % n] = PauliLetter::Z;
        terms.push(PauliTerm::new(-1.0, letters)?);
    }
    if h != 0.0 {
        for i in 0..n {
            let mut letters = vec![PauliLetter::I; n];
            letters[i] = PauliLetter::X;
            terms.push(PauliTerm::new(-h, letters)?);
        }
    }
    Hamiltonian::new(n, terms)
}

/// Minimum eigenvalue of `h`.
///
/// Registers up to 10 qubits are diagonalized densely; larger ones (up to
/// [`MAX_GROUND_STATE_QUBITS`]) use matrix-free Lanczos with full
/// reorthogonalization.
pub fn exact_ground_energy(h: &Hamiltonian) -> Result<f64> {
    let n = h.n_qubits();
    if n > MAX_GROUND_STATE_QUBITS {
        return Err(QuackError::Capacity(format!(
            "exact diagonalization limited to {MAX_GROUND_STATE_QUBITS} qubits, got {n}"
        )));
    }
    if n <= DENSE_GROUND_STATE_QUBITS {
        let dense = h.to_dense()?;
        let min = if h.has_y() {
            SymmetricEigen::new(dense).eigenvalues.min()
        } else {
            SymmetricEigen::new(dense.map(|c| c.re)).eigenvalues.min()
        };
        return Ok(min);
    }
    lanczos_ground_energy(h)
}

fn lanczos_ground_energy(h: &Hamiltonian) -> Result<f64> {
    let dim = 1usize << h.n_qubits();
    let max_iter = 300.min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2b_3c4d);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, 0.0))
        .collect();
    normalize(&mut v);
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last = f64::INFINITY;
    for it in 0..max_iter {
        let sv = StateVector {
            n_qubits: h.n_qubits(),
            amps: v.clone(),
        };
        let mut w = h.apply(&sv)?;
        let alpha = inner(&v, &w).re;
        alphas.push(alpha);
        basis.push(v.clone());
        for b in &basis {
            let c = inner(b, &w);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= c * bi;
            }
        }
        let beta = norm(&w);
        let tri = tridiagonal(&alphas, &betas);
        let ritz = SymmetricEigen::new(tri).eigenvalues.min();
        if beta < 1e-12 || ((ritz - last).abs() < 1e-13 && it > 10) {
            return Ok(ritz);
        }
        last = ritz;
        betas.push(beta);
        v = w.into_iter().map(|x| x / beta).collect();
    }
    Ok(last)
}

fn tridiagonal(alphas: &[f64], betas: &[f64]) -> DMatrix<f64> {
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t
}

pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(a: &mut [Complex64]) {
    let n = norm(a);
    for x in a.iter_mut() {
        *x /= n;
    }
}

/// Normalized pure state of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(QuackError::InvalidSize("state needs at least one qubit".into()));
        }
        if n_qubits > MAX_QUBITS {
            return Err(QuackError::Capacity(format!(
                "{n_qubits} qubits exceeds simulator limit {MAX_QUBITS}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps caller-supplied amplitudes; they must have length `2^n` and unit norm.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(QuackError::InvalidSize(format!("bad qubit count {n_qubits}")));
        }
        if amps.len() != 1 << n_qubits {
            return Err(QuackError::dim("amplitude count", 1 << n_qubits, amps.len()));
        }
        let nrm = norm(&amps);
        if (nrm - 1.0).abs() > 1e-10 {
            return Err(QuackError::Numerical(format!("state norm {nrm} is not 1")));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        other.check_qubits(self.n_qubits)?;
        Ok(inner(&self.amps, &other.amps))
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub(crate) fn from_raw(n_qubits: usize, amps: Vec<Complex64>) -> Self {
        Self { n_qubits, amps }
    }

    fn check_qubits(&self, n: usize) -> Result<()> {
        if self.n_qubits != n {
            return Err(QuackError::dim("qubit count", n, self.n_qubits));
        }
        Ok(())
    }

    pub(crate) fn apply_gate(&mut self, gate: &Gate, theta: &[f64]) {
        apply_gate_raw(&mut self.amps, gate, theta, 0.0);
    }
}

/// `<psi|H|psi>`; the imaginary residue is discarded.
pub fn expectation(state: &StateVector, h: &Hamiltonian) -> Result<f64> {
    state.check_qubits(h.n_qubits())?;
    let mut e = 0.0;
    for t in &h.terms {
        e += t.coefficient * t.masks().matrix_element(&state.amps, &state.amps).re;
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationAxis {
    X,
    Y,
    Z,
}

impl RotationAxis {
    pub fn generator(self) -> PauliLetter {
        match self {
            RotationAxis::X => PauliLetter::X,
            RotationAxis::Y => PauliLetter::Y,
            RotationAxis::Z => PauliLetter::Z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Entangler {
    Cx,
    Cy,
    Cz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    /// `exp(-i theta[param] P / 2)` on one qubit.
    Rotation {
        axis: RotationAxis,
        qubit: usize,
        param: usize,
    },
    /// Fixed two-qubit controlled Pauli.
    Controlled {
        kind: Entangler,
        control: usize,
        target: usize,
    },
}

/// Applies `gate` with its angle offset by `shift`.
pub(crate) fn apply_gate_raw(amps: &mut [Complex64], gate: &Gate, theta: &[f64], shift: f64) {
    match *gate {
        Gate::Rotation { axis, qubit, param } => {
            apply_rotation(amps, axis, qubit, theta[param] + shift)
        }
        Gate::Controlled {
            kind,
            control,
            target,
        } => apply_controlled(amps, kind, control, target),
    }
}

pub(crate) fn apply_rotation(amps: &mut [Complex64], axis: RotationAxis, qubit: usize, angle: f64) {
    let (s, c) = (angle / 2.0).sin_cos();
    let stride = 1usize << qubit;
    let dim = amps.len();
    match axis {
        RotationAxis::X => {
            let ms = Complex64::new(0.0, -s);
            for base in (0..dim).step_by(2 * stride) {
                for k in base..base + stride {
                    let a0 = amps[k];
                    let a1 = amps[k + stride];
                    amps[k] = a0 * c + a1 * ms;
                    amps[k + stride] = a0 * ms + a1 * c;
                }
            }
        }
        RotationAxis::Y => {
            for base in (0..dim).step_by(2 * stride) {
                for k in base..base + stride {
                    let a0 = amps[k];
                    let a1 = amps[k + stride];
                    amps[k] = a0 * c - a1 * s;
                    amps[k + stride] = a0 * s + a1 * c;
                }
            }
        }
        RotationAxis::Z => {
            let p0 = Complex64::new(c, -s);
            let p1 = Complex64::new(c, s);
            for base in (0..dim).step_by(2 * stride) {
                for k in base..base + stride {
                    amps[k] *= p0;
                    amps[k + stride] *= p1;
                }
            }
        }
    }
}

pub(crate) fn apply_controlled(
    amps: &mut [Complex64],
    kind: Entangler,
    control: usize,
    target: usize,
) {
    let cbit = 1usize << control;
    let tbit = 1usize << target;
    for k in 0..amps.len() {
        if k & cbit == 0 || k & tbit != 0 {
            continue;
        }
        let k1 = k | tbit;
        match kind {
            Entangler::Cx => amps.swap(k, k1),
            Entangler::Cy => {
                let a0 = amps[k];
                let a1 = amps[k1];
                amps[k] = -I_UNIT * a1;
                amps[k1] = I_UNIT * a0;
            }
            Entangler::Cz => amps[k1] = -amps[k1],
        }
    }
}

/// Multiplies by the single-qubit Pauli generator of a rotation, in place.
pub(crate) fn apply_generator(amps: &mut [Complex64], axis: RotationAxis, qubit: usize) {
    let stride = 1usize << qubit;
    for base in (0..amps.len()).step_by(2 * stride) {
        for k in base..base + stride {
            let a0 = amps[k];
            let a1 = amps[k + stride];
            match axis {
                RotationAxis::X => {
                    amps[k] = a1;
                    amps[k + stride] = a0;
                }
                RotationAxis::Y => {
                    amps[k] = -I_UNIT * a1;
                    amps[k + stride] = I_UNIT * a0;
                }
                RotationAxis::Z => amps[k + stride] = -a1,
            }
        }
    }
}

/// Ordered parameterized gate sequence acting on `|0...0>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    n_qubits: usize,
    gates: Vec<Gate>,
    param_count: usize,
}

impl Ansatz {
    pub fn new(n_qubits: usize, gates: Vec<Gate>, param_count: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(QuackError::InvalidSize(format!("bad qubit count {n_qubits}")));
        }
        if param_count == 0 {
            return Err(QuackError::InvalidSize("ansatz needs at least one parameter".into()));
        }
        let mut used = vec![false; param_count];
        for g in &gates {
            match *g {
                Gate::Rotation { qubit, param, .. } => {
                    if qubit >= n_qubits {
                        return Err(QuackError::InvalidSize(format!(
                            "rotation on qubit {qubit} of {n_qubits}"
                        )));
                    }
                    if param >= param_count {
                        return Err(QuackError::InvalidSize(format!(
                            "parameter index {param} out of {param_count}"
                        )));
                    }
                    used[param] = true;
                }
                Gate::Controlled {
                    control, target, ..
                } => {
                    if control >= n_qubits || target >= n_qubits || control == target {
                        return Err(QuackError::InvalidSize(format!(
                            "bad entangler qubits ({control}, {target}) on {n_qubits} qubits"
                        )));
                    }
                }
            }
        }
        if let Some(unused) = used.iter().position(|u| !u) {
            return Err(QuackError::InvalidSize(format!(
                "parameter {unused} is never used"
            )));
        }
        Ok(Self {
            n_qubits,
            gates,
            param_count,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub(crate) fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_count {
            return Err(QuackError::dim("parameter vector", self.param_count, theta.len()));
        }
        Ok(())
    }

    /// Applies every gate in order to `|0...0>`.
    pub fn prepare(&self, theta: &[f64]) -> Result<StateVector> {
        self.check_theta(theta)?;
        let mut state = StateVector::zero(self.n_qubits)?;
        for g in &self.gates {
            state.apply_gate(g, theta);
        }
        Ok(state)
    }

    /// Like [`Ansatz::prepare`] but with gate number `gate_index` rotated by an
    /// extra `shift`.
    pub(crate) fn prepare_shifted(
        &self,
        theta: &[f64],
        gate_index: usize,
        shift: f64,
    ) -> Result<StateVector> {
        self.check_theta(theta)?;
        let mut state = StateVector::zero(self.n_qubits)?;
        for (i, g) in self.gates.iter().enumerate() {
            let s = if i == gate_index { shift } else { 0.0 };
            apply_gate_raw(state.amps_mut(), g, theta, s);
        }
        Ok(state)
    }
}

/// See [`Ansatz::prepare`].
pub fn prepare(ansatz: &Ansatz, theta: &[f64]) -> Result<StateVector> {
    ansatz.prepare(theta)
}

/// RY layer, then `reps` times a circular CX layer followed by another RY
/// layer; `n (reps + 1)` parameters.
pub fn real_amplitudes(n: usize, reps: usize) -> Result<Ansatz> {
    if n == 0 {
        return Err(QuackError::InvalidSize("RealAmplitudes needs at least one qubit".into()));
    }
    if reps >= 1 && n < 2 {
        return Err(QuackError::InvalidSize(
            "circular entanglement needs at least two qubits".into(),
        ));
    }
    let mut gates = Vec::new();
    let mut param = 0;
    let mut ry_layer = |gates: &mut Vec<Gate>| {
        for q in 0..n {
            gates.push(Gate::Rotation {
                axis: RotationAxis::Y,
                qubit: q,
                param,
            });
            param += 1;
        }
    };
    ry_layer(&mut gates);
    for _ in 0..reps {
        // circular: closing link first, then the chain
        gates.push(Gate::Controlled {
            kind: Entangler::Cx,
            control: n - 1,
            target: 0,
        });
        for q in 0..n - 1 {
            gates.push(Gate::Controlled {
                kind: Entangler::Cx,
                control: q,
                target: q + 1,
            });
        }
        ry_layer(&mut gates);
    }
    Ansatz::new(n, gates, n * (reps + 1))
}

/// `depth` blocks of [RX layer, RY layer, CZ on odd links, CZ on even links];
/// `2 n depth` parameters.
pub fn hardware_efficient(n: usize, depth: usize) -> Result<Ansatz> {
    if n < 2 {
        return Err(QuackError::InvalidSize(format!(
            "hardware-efficient ansatz needs at least 2 qubits, got {n}"
        )));
    }
    if depth == 0 {
        return Err(QuackError::InvalidSize("depth must be positive".into()));
    }
    let mut gates = Vec::with_capacity(depth * (3 * n));
    let mut param = 0;
    for _ in 0..depth {
        for axis in [RotationAxis::X, RotationAxis::Y] {
            for q in 0..n {
                gates.push(Gate::Rotation {
                    axis,
                    qubit: q,
                    param,
                });
                param += 1;
            }
        }
        // links (1,2), (3,4), ... in one-based numbering, then (2,3), (4,5), ...
        for start in [0, 1] {
            let mut q = start;
            while q + 1 < n {
                gates.push(Gate::Controlled {
                    kind: Entangler::Cz,
                    control: q,
                    target: q + 1,
                });
                q += 2;
            }
        }
    }
    Ansatz::new(n, gates, 2 * n * depth)
}

/// Dense vector helper for tests and diagnostics.
pub fn to_dvector(state: &StateVector) -> DVector<Complex64> {
    DVector::from_column_slice(&state.amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn random_theta(p: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..p).map(|_| rng.random_range(-PI..PI)).collect()
    }

    #[test]
    fn real_amplitudes_zero_theta_is_ground_basis_state() {
        let a = real_amplitudes(2, 1).unwrap();
        let s = a.prepare(&[0.0; 4]).unwrap();
        assert!(close(s.amplitudes()[0].re, 1.0, 1e-15));
        for amp in &s.amplitudes()[1..] {
            assert!(amp.norm() < 1e-15);
        }
    }

    #[test]
    fn single_ry_pi_flips_qubit() {
        let a = Ansatz::new(
            1,
            vec![Gate::Rotation {
                axis: RotationAxis::Y,
                qubit: 0,
                param: 0,
            }],
            1,
        )
        .unwrap();
        let s = a.prepare(&[PI]).unwrap();
        assert!(close(s.amplitudes()[0].re, 0.0, 1e-15));
        assert!(close(s.amplitudes()[1].re, 1.0, 1e-15));
    }

    #[test]
    fn prepare_rejects_wrong_length() {
        let a = real_amplitudes(3, 1).unwrap();
        assert!(matches!(
            a.prepare(&[0.0; 5]),
            Err(QuackError::Dimension { .. })
        ));
    }

    #[test]
    fn ising_on_all_zero_state() {
        let h = ising_hamiltonian(5, 0.5).unwrap();
        let s = StateVector::zero(5).unwrap();
        assert!(close(expectation(&s, &h).unwrap(), -5.0, 1e-12));
    }

    #[test]
    fn plus_state_x_expectation() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let s = StateVector::from_amplitudes(
            1,
            vec![Complex64::new(r, 0.0), Complex64::new(r, 0.0)],
        )
        .unwrap();
        let h = Hamiltonian::from_text("1.0 X").unwrap();
        assert!(close(expectation(&s, &h).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn expectation_qubit_mismatch() {
        let h = ising_hamiltonian(3, 0.5).unwrap();
        let s = StateVector::zero(2).unwrap();
        assert!(expectation(&s, &h).is_err());
    }

    #[test]
    fn ising_three_sites_terms() {
        let h = ising_hamiltonian(3, 0.5).unwrap();
        let got: Vec<(f64, String)> = h
            .terms()
            .iter()
            .map(|t| (t.coefficient(), t.label()))
            .collect();
        let want = vec![
            (-1.0, "ZZI"),
            (-1.0, "IZZ"),
            (-1.0, "ZIZ"),
            (-0.5, "XII"),
            (-0.5, "IXI"),
            (-0.5, "IIX"),
        ];
        assert_eq!(got.len(), want.len());
        for ((gc, gl), (wc, wl)) in got.iter().zip(want) {
            assert_eq!(*gc, wc);
            assert_eq!(gl, wl);
        }
    }

    #[test]
    fn ising_two_sites_zero_field_prunes() {
        let h = ising_hamiltonian(2, 0.0).unwrap();
        assert_eq!(h.terms().len(), 2);
        assert!(h.terms().iter().all(|t| t.label() == "ZZ"));
        assert!(ising_hamiltonian(1, 0.5).is_err());
    }

    #[test]
    fn ansatz_param_counts() {
        assert_eq!(real_amplitudes(10, 1).unwrap().param_count(), 20);
        assert_eq!(real_amplitudes(12, 1).unwrap().param_count(), 24);
        let ra = real_amplitudes(2, 0).unwrap();
        assert_eq!(ra.param_count(), 2);
        assert!(ra
            .gates()
            .iter()
            .all(|g| matches!(g, Gate::Rotation { .. })));
        assert_eq!(hardware_efficient(2, 250).unwrap().param_count(), 1000);
        assert_eq!(hardware_efficient(5, 250).unwrap().param_count(), 2500);
        assert!(real_amplitudes(1, 1).is_err());
        assert!(hardware_efficient(1, 3).is_err());
        assert!(hardware_efficient(3, 0).is_err());
    }

    #[test]
    fn hardware_efficient_single_block_order() {
        let a = hardware_efficient(2, 1).unwrap();
        let g = a.gates();
        assert_eq!(g.len(), 5);
        assert!(matches!(g[0], Gate::Rotation { axis: RotationAxis::X, qubit: 0, param: 0 }));
        assert!(matches!(g[1], Gate::Rotation { axis: RotationAxis::X, qubit: 1, param: 1 }));
        assert!(matches!(g[2], Gate::Rotation { axis: RotationAxis::Y, qubit: 0, param: 2 }));
        assert!(matches!(g[3], Gate::Rotation { axis: RotationAxis::Y, qubit: 1, param: 3 }));
        assert!(matches!(
            g[4],
            Gate::Controlled { kind: Entangler::Cz, control: 0, target: 1 }
        ));
    }

    #[test]
    fn ansatz_rejects_unused_parameter() {
        let gates = vec![Gate::Rotation {
            axis: RotationAxis::Y,
            qubit: 0,
            param: 0,
        }];
        assert!(Ansatz::new(1, gates, 2).is_err());
    }

    #[test]
    fn load_hamiltonian_examples() {
        let h = load_hamiltonian("-1.0 ZZ\n-0.5 XI\n-0.5 IX").unwrap();
        assert_eq!(h.n_qubits(), 2);
        assert_eq!(h.terms().len(), 3);
        assert_eq!(h.terms()[1].label(), "XI");
        assert!(matches!(load_hamiltonian(""), Err(QuackError::Parse { .. })));
        assert!(matches!(
            load_hamiltonian("# only a comment\n"),
            Err(QuackError::Parse { .. })
        ));
    }

    #[test]
    fn load_hamiltonian_reports_line_numbers() {
        let err = load_hamiltonian("1.0 ZZ\n# c\n2.0 ZZZ\n").unwrap_err();
        assert!(matches!(err, QuackError::Parse { line: 3, .. }));
        let err = load_hamiltonian("1.0 ZZ\nabc ZZ\n").unwrap_err();
        assert!(matches!(err, QuackError::Parse { line: 2, .. }));
        let err = load_hamiltonian("inf ZZ\n").unwrap_err();
        assert!(matches!(err, QuackError::Parse { line: 1, .. }));
        let err = load_hamiltonian("1.0 ZQ\n").unwrap_err();
        assert!(matches!(err, QuackError::Parse { line: 1, .. }));
        let err = load_hamiltonian("1.0 ZZ extra\n").unwrap_err();
        assert!(matches!(err, QuackError::Parse { line: 1, .. }));
    }

    #[test]
    fn canonical_text_is_idempotent() {
        let src = "# LiH-like\n  -0.25  ZIXY \n0.1 IIII\n3e-3 YYZZ # trailing\n";
        let h = load_hamiltonian(src).unwrap();
        let canon = h.to_text();
        let again = load_hamiltonian(&canon).unwrap();
        assert_eq!(again, h);
        assert_eq!(again.to_text(), canon);
        assert!(canon.starts_with("-2.5000000000000000e-1 ZIXY"));
    }

    #[test]
    fn ground_energy_small_cases() {
        let z = load_hamiltonian("1.0 Z").unwrap();
        assert!(close(exact_ground_energy(&z).unwrap(), -1.0, 1e-12));
        let zz = load_hamiltonian("-1.0 ZZ").unwrap();
        assert!(close(exact_ground_energy(&zz).unwrap(), -1.0, 1e-12));
        let y = load_hamiltonian("0.5 Y").unwrap();
        assert!(close(exact_ground_energy(&y).unwrap(), -0.5, 1e-12));
    }

    #[test]
    fn ground_energy_ising_reference_values() {
        // Frozen from an independent numpy eigvalsh of the dense periodic chain.
        let reference = [
            (2, -2.23606797749979),
            (3, -3.2320508075688785),
            (4, -4.271558410139715),
            (5, -5.325343067060889),
            (6, -6.3846945636036825),
        ];
        for (n, e) in reference {
            let h = ising_hamiltonian(n, 0.5).unwrap();
            assert!(close(exact_ground_energy(&h).unwrap(), e, 1e-10), "n={n}");
        }
    }

    #[test]
    fn lanczos_matches_dense_on_ten_qubits() {
        let h = ising_hamiltonian(10, 0.7).unwrap();
        let dense = exact_ground_energy(&h).unwrap();
        let lz = lanczos_ground_energy(&h).unwrap();
        assert!(close(dense, lz, 1e-9), "{dense} vs {lz}");
    }

    #[test]
    fn ground_energy_capacity_limit() {
        let h = ising_hamiltonian(15, 0.5).unwrap();
        assert!(matches!(
            exact_ground_energy(&h),
            Err(QuackError::Capacity(_))
        ));
    }

    #[test]
    fn expectation_matches_dense_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..10 {
            let n = 1 + trial % 4;
            let dim = 1 << n;
            let mut amps: Vec<Complex64> = (0..dim)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            normalize(&mut amps);
            let s = StateVector::from_amplitudes(n, amps).unwrap();
            let letters = ['I', 'X', 'Y', 'Z'];
            let terms = (0..5)
                .map(|_| {
                    let label: String = (0..n).map(|_| letters[rng.random_range(0..4)]).collect();
                    PauliTerm::from_label(rng.random::<f64>() * 2.0 - 1.0, &label).unwrap()
                })
                .collect();
            let h = Hamiltonian::new(n, terms).unwrap();
            let v = to_dvector(&s);
            let dense = (v.adjoint() * h.to_dense().unwrap() * &v)[(0, 0)];
            assert!(close(expectation(&s, &h).unwrap(), dense.re, 1e-10));
            assert!(dense.im.abs() < 1e-10);
        }
    }

    #[test]
    fn rotations_are_four_pi_periodic() {
        let a = hardware_efficient(3, 2).unwrap();
        let theta = random_theta(a.param_count(), 3);
        let base = a.prepare(&theta).unwrap();
        for i in 0..a.param_count() {
            let mut t = theta.clone();
            t[i] += 4.0 * PI;
            let s = a.prepare(&t).unwrap();
            for (x, y) in s.amplitudes().iter().zip(base.amplitudes()) {
                assert!((x - y).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn controlled_y_matches_definition() {
        // control qubit 0 set, target qubit 1 clear: |01> (index 1) -> i|11>
        let mut amps = vec![Complex64::new(0.0, 0.0); 4];
        amps[1] = Complex64::new(1.0, 0.0);
        apply_controlled(&mut amps, Entangler::Cy, 0, 1);
        assert!((amps[3] - I_UNIT).norm() < 1e-15);
        apply_controlled(&mut amps, Entangler::Cy, 0, 1);
        assert!((amps[1] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
