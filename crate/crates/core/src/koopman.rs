//! Linear Koopman operators: DMD and sliding-window DMD.
//!
//! A trajectory of `T` parameter snapshots `theta(t_0) .. theta(t_{T-1})` is
//! delay-embedded with window `d + 1`; the operator `K` (shape `p x (d+1)p`)
//! maps each window to the snapshot that follows it and is fitted by least
//! squares through an SVD pseudoinverse. `d = 0` is plain DMD.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QuackError, Result};

/// Time-ordered parameter snapshots (one column per step) with optional losses.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    snapshots: DMatrix<f64>,
    losses: Vec<Option<f64>>,
}

impl Trajectory {
    pub fn new(snapshots: DMatrix<f64>, losses: Vec<Option<f64>>) -> Result<Self> {
        if snapshots.nrows() == 0 || snapshots.ncols() == 0 {
            return Err(QuackError::InvalidSize("trajectory must be non-empty".into()));
        }
        if losses.len() != snapshots.ncols() {
            return Err(QuackError::dim("loss count", snapshots.ncols(), losses.len()));
        }
        if snapshots.iter().any(|x| !x.is_finite()) {
            return Err(QuackError::Numerical("non-finite snapshot".into()));
        }
        Ok(Self { snapshots, losses })
    }

    /// Builds a trajectory from a list of parameter vectors without losses.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(QuackError::InvalidSize("trajectory must be non-empty".into()));
        };
        let p = first.len();
        if let Some(bad) = columns.iter().find(|c| c.len() != p) {
            return Err(QuackError::dim("snapshot length", p, bad.len()));
        }
        let m = DMatrix::from_fn(p, columns.len(), |r, c| columns[c][r]);
        Self::new(m, vec![None; columns.len()])
    }

    pub fn with_losses(mut self, losses: Vec<Option<f64>>) -> Result<Self> {
        if losses.len() != self.len() {
            return Err(QuackError::dim("loss count", self.len(), losses.len()));
        }
        self.losses = losses;
        Ok(self)
    }

    pub fn param_count(&self) -> usize {
        self.snapshots.nrows()
    }

    pub fn len(&self) -> usize {
        self.snapshots.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshots(&self) -> &DMatrix<f64> {
        &self.snapshots
    }

    pub fn losses(&self) -> &[Option<f64>] {
        &self.losses
    }

    pub fn snapshot(&self, t: usize) -> Vec<f64> {
        self.snapshots.column(t).iter().copied().collect()
    }

    /// The last `d + 1` snapshots as a `p x (d+1)` window, oldest first.
    pub fn last_window(&self, d: usize) -> Result<DMatrix<f64>> {
        if self.len() < d + 1 {
            return Err(QuackError::InsufficientData {
                required: d + 1,
                got: self.len(),
            });
        }
        Ok(self.snapshots.columns(self.len() - d - 1, d + 1).into_owned())
    }

    /// CSV with one row per time step: `theta_0, .., theta_{p-1}, loss`.
    /// Unevaluated losses are written as empty fields.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let p = self.param_count();
        let mut header: Vec<String> = (0..p).map(|i| format!("theta_{i}")).collect();
        header.push("loss".into());
        w.write_record(&header)?;
        for t in 0..self.len() {
            let mut row: Vec<String> = self
                .snapshots
                .column(t)
                .iter()
                .map(|x| format!("{x:e}"))
                .collect();
            row.push(self.losses[t].map(|l| format!("{l:e}")).unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let width = r.headers()?.len();
        if width < 2 {
            return Err(QuackError::Parse {
                line: 1,
                msg: "need at least one parameter column and a loss column".into(),
            });
        }
        let mut cols = Vec::new();
        let mut losses = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| QuackError::Parse {
                    line,
                    msg: format!("bad number {s:?}"),
                })
            };
            let theta = rec
                .iter()
                .take(width - 1)
                .map(parse)
                .collect::<Result<Vec<_>>>()?;
            let loss_field = rec.get(width - 1).unwrap_or("").trim();
            losses.push(if loss_field.is_empty() {
                None
            } else {
                Some(parse(loss_field)?)
            });
            cols.push(theta);
        }
        Self::from_columns(&cols)?.with_losses(losses)
    }
}

fn required_snapshots(d: usize) -> usize {
    d + 2
}

/// Delay-embedded data matrix: column `j` stacks
/// `theta(t_j); theta(t_{j+1}); ..; theta(t_{j+d})` for `j = 0..=m`,
/// with `m = T - d - 2` so every column has a successor.
pub fn build_delay_matrix(traj: &Trajectory, d: usize) -> Result<DMatrix<f64>> {
    let t = traj.len();
    if t < required_snapshots(d) {
        return Err(QuackError::InsufficientData {
            required: required_snapshots(d),
            got: t,
        });
    }
    let p = traj.param_count();
    let cols = t - d - 1;
    let s = traj.snapshots();
    Ok(DMatrix::from_fn((d + 1) * p, cols, |r, j| {
        s[(r % p, j + r / p)]
    }))
}

/// Targets `theta(t_{d+1}) .. theta(t_{m+d+1})` matching [`build_delay_matrix`].
pub fn delay_targets(traj: &Trajectory, d: usize) -> Result<DMatrix<f64>> {
    let t = traj.len();
    if t < required_snapshots(d) {
        return Err(QuackError::InsufficientData {
            required: required_snapshots(d),
            got: t,
        });
    }
    Ok(traj.snapshots().columns(d + 1, t - d - 1).into_owned())
}

/// Default singular-value cutoff relative to the largest singular value.
pub fn default_rcond(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

struct Svd {
    u: DMatrix<f64>,
    singular_values: nalgebra::DVector<f64>,
    v_t: DMatrix<f64>,
}

/// Thin SVD through faer. nalgebra's SVD silently returns inaccurate factors
/// on some rank-deficient inputs, so the result is also checked by recomposition.
fn verified_svd(a: &DMatrix<f64>) -> Result<Svd> {
    let m = faer::Mat::<f64>::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)]);
    let svd = m
        .thin_svd()
        .map_err(|e| QuackError::Numerical(format!("SVD did not converge: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = s.nrows();
    let out = Svd {
        u: DMatrix::from_fn(a.nrows(), k, |i, j| u[(i, j)]),
        singular_values: nalgebra::DVector::from_fn(k, |i, _| s[i]),
        v_t: DMatrix::from_fn(k, a.ncols(), |i, j| v[(j, i)]),
    };
    let recomposed = &out.u * DMatrix::from_diagonal(&out.singular_values) * &out.v_t;
    if (recomposed - a).norm() > 1e-10 * a.norm().max(f64::MIN_POSITIVE) {
        return Err(QuackError::Numerical("SVD failed to reproduce its input".into()));
    }
    Ok(out)
}

/// Thin SVD factors `(U, sigma, V^T)` with singular values at or below
/// `rcond * sigma_max` dropped.
fn truncated_svd(a: &DMatrix<f64>, rcond: f64) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    if !(rcond >= 0.0) {
        return Err(QuackError::Config(format!("rcond {rcond} must be non-negative")));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(QuackError::Numerical("non-finite matrix entry".into()));
    }
    let svd = verified_svd(a)?;
    let smax = svd.singular_values.iter().fold(0.0f64, |m, s| m.max(*s));
    let cutoff = rcond * smax;
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cutoff && svd.singular_values[i] > 0.0)
        .collect();
    let (u, vt) = (&svd.u, &svd.v_t);
    let u_k = DMatrix::from_fn(u.nrows(), keep.len(), |r, c| u[(r, keep[c])]);
    let vt_k = DMatrix::from_fn(keep.len(), vt.ncols(), |r, c| vt[(keep[r], c)]);
    let s_k = keep.iter().map(|&i| svd.singular_values[i]).collect();
    Ok((u_k, s_k, vt_k))
}

/// Moore-Penrose pseudoinverse by SVD; singular values `<= rcond * sigma_max`
/// are treated as zero.
pub fn pinv(a: &DMatrix<f64>, rcond: f64) -> Result<DMatrix<f64>> {
    let (u, s, vt) = truncated_svd(a, rcond)?;
    let mut v_scaled = vt.transpose();
    for (c, sv) in s.iter().enumerate() {
        v_scaled.column_mut(c).scale_mut(1.0 / sv);
    }
    Ok(v_scaled * u.transpose())
}

#[derive(Debug, Clone, PartialEq)]
enum Operator {
    Dense(DMatrix<f64>),
    /// `K = left * right`, kept factored so that rank-deficient fits on wide
    /// parameter vectors predict in `O(p r)` per step.
    Factored {
        left: DMatrix<f64>,
        right: DMatrix<f64>,
    },
}

/// Fitted linear Koopman operator `K` of shape `p x (d+1)p`.
#[derive(Debug, Clone, PartialEq)]
pub struct KoopmanModel {
    op: Operator,
    delay: usize,
    param_count: usize,
}

impl KoopmanModel {
    pub fn from_matrix(k: DMatrix<f64>, delay: usize) -> Result<Self> {
        let p = k.nrows();
        if p == 0 {
            return Err(QuackError::InvalidSize("empty Koopman matrix".into()));
        }
        if k.ncols() != (delay + 1) * p {
            return Err(QuackError::dim("Koopman matrix columns", (delay + 1) * p, k.ncols()));
        }
        if k.iter().any(|x| !x.is_finite()) {
            return Err(QuackError::Numerical("non-finite Koopman matrix".into()));
        }
        Ok(Self {
            op: Operator::Dense(k),
            delay,
            param_count: p,
        })
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Feature dimension `(d + 1) p`.
    pub fn input_dim(&self) -> usize {
        (self.delay + 1) * self.param_count
    }

    pub fn k_matrix(&self) -> DMatrix<f64> {
        match &self.op {
            Operator::Dense(k) => k.clone(),
            Operator::Factored { left, right } => left * right,
        }
    }

    /// Rank of the stored factorization (the full dimension for dense operators).
    pub fn rank(&self) -> usize {
        match &self.op {
            Operator::Dense(k) => k.nrows().min(k.ncols()),
            Operator::Factored { left, .. } => left.ncols(),
        }
    }

    /// `K * features` for a batch of feature columns.
    pub fn apply(&self, features: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.op {
            Operator::Dense(k) => k * features,
            Operator::Factored { left, right } => left * (right * features),
        }
    }

    fn apply_vec(&self, phi: &DVector<f64>) -> DVector<f64> {
        match &self.op {
            Operator::Dense(k) => k * phi,
            Operator::Factored { left, right } => left * (right * phi),
        }
    }

    /// `||Theta(t_{d+1}) - K Phi||_F` on a trajectory.
    pub fn residual(&self, traj: &Trajectory) -> Result<f64> {
        if traj.param_count() != self.param_count {
            return Err(QuackError::dim("parameter count", self.param_count, traj.param_count()));
        }
        let phi = build_delay_matrix(traj, self.delay)?;
        let y = delay_targets(traj, self.delay)?;
        Ok((y - self.apply(&phi)).norm())
    }

    /// Square `(d+1)p` companion form of the window update; equals `K` when `d = 0`.
    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let p = self.param_count;
        let dim = self.input_dim();
        let k = self.k_matrix();
        let mut t = DMatrix::zeros(dim, dim);
        for r in 0..dim - p {
            t[(r, r + p)] = 1.0;
        }
        t.rows_mut(dim - p, p).copy_from(&k);
        t
    }
}

/// Least-squares fit `K = Theta(t_{d+1}) Phi^+`.
pub fn fit_sw_dmd(traj: &Trajectory, d: usize, rcond: Option<f64>) -> Result<KoopmanModel> {
    let phi = build_delay_matrix(traj, d)?;
    let y = delay_targets(traj, d)?;
    let rcond = rcond.unwrap_or_else(|| default_rcond(phi.nrows(), phi.ncols()));
    let (u, s, vt) = truncated_svd(&phi, rcond)?;
    // K = Y V S^-1 U^T
    let mut left = y * vt.transpose();
    for (c, sv) in s.iter().enumerate() {
        left.column_mut(c).scale_mut(1.0 / sv);
    }
    Ok(KoopmanModel {
        op: Operator::Factored {
            left,
            right: u.transpose(),
        },
        delay: d,
        param_count: traj.param_count(),
    })
}

/// Plain DMD, the `d = 0` case of [`fit_sw_dmd`].
pub fn fit_dmd(traj: &Trajectory, rcond: Option<f64>) -> Result<KoopmanModel> {
    fit_sw_dmd(traj, 0, rcond)
}

/// Rolls the model forward from `recent` (`p x (d+1)`, oldest column first),
/// emitting `steps` predicted snapshots. Values are not clamped.
pub fn predict(model: &KoopmanModel, recent: &DMatrix<f64>, steps: usize) -> Result<Vec<Vec<f64>>> {
    let p = model.param_count;
    if recent.nrows() != p {
        return Err(QuackError::dim("window rows", p, recent.nrows()));
    }
    if recent.ncols() != model.delay + 1 {
        return Err(QuackError::dim("window columns", model.delay + 1, recent.ncols()));
    }
    let dim = model.input_dim();
    let mut phi = DVector::from_column_slice(recent.as_slice());
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let next = model.apply_vec(&phi);
        phi.as_mut_slice().copy_within(p.., 0);
        phi.rows_mut(dim - p, p).copy_from(&next);
        out.push(next.iter().copied().collect());
    }
    Ok(out)
}

/// Eigenvalue of largest modulus of a square (`d = 0`) operator and its
/// unit eigenvector.
pub fn dominant_mode(model: &KoopmanModel) -> Result<(Complex64, DVector<Complex64>)> {
    if model.delay != 0 {
        return Err(QuackError::UnsupportedShape(format!(
            "dominant mode needs a square operator, delay is {}",
            model.delay
        )));
    }
    let k = model.k_matrix();
    let eigs = eigenvalues(&k)?;
    let mut best = 0;
    for (i, e) in eigs.iter().enumerate() {
        if e.norm() > eigs[best].norm() {
            best = i;
        }
    }
    let lambda = eigs[best];
    Ok((lambda, eigenvector(&k, lambda)))
}

/// All eigenvalues of a real square matrix.
pub fn eigenvalues(k: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !k.is_square() {
        return Err(QuackError::UnsupportedShape(format!(
            "{}x{} matrix has no spectrum",
            k.nrows(),
            k.ncols()
        )));
    }
    let schur = k
        .clone()
        .try_schur(f64::EPSILON, 0)
        .ok_or_else(|| QuackError::Numerical("Schur decomposition did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Inverse iteration for the eigenvector of a known eigenvalue.
fn eigenvector(k: &DMatrix<f64>, lambda: Complex64) -> DVector<Complex64> {
    let n = k.nrows();
    let scale = k.norm().max(1.0);
    let shift = lambda + Complex64::new(scale * 1e-10, scale * 1e-10);
    let mut a: DMatrix<Complex64> = k.map(|x| Complex64::new(x, 0.0));
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let lu = a.lu();
    let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0 + 0.1 * i as f64, 0.0));
    for _ in 0..8 {
        match lu.solve(&v) {
            Some(next) if next.iter().all(|x| x.is_finite()) => {
                let nrm = next.norm();
                if nrm == 0.0 {
                    break;
                }
                v = next.unscale(nrm);
            }
            _ => break,
        }
    }
    // fix the global phase so the largest component is real positive
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bi, bm), (i, x)| if x.norm() > bm { (i, x.norm()) } else { (bi, bm) });
    let phase = v[imax] / v[imax].norm();
    v.map(|x| x / phase)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj_1d(values: &[f64]) -> Trajectory {
        Trajectory::from_columns(&values.iter().map(|v| vec![*v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn delay_matrix_unrolls_window() {
        let t = traj_1d(&[1.0, 2.0, 3.0, 4.0]);
        let phi = build_delay_matrix(&t, 1).unwrap();
        assert_eq!(phi, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]));
        let y = delay_targets(&t, 1).unwrap();
        assert_eq!(y, DMatrix::from_row_slice(1, 2, &[3.0, 4.0]));
    }

    #[test]
    fn delay_zero_drops_last_column() {
        let cols = vec![vec![1.0, 5.0], vec![2.0, 6.0], vec![3.0, 7.0]];
        let t = Trajectory::from_columns(&cols).unwrap();
        let phi = build_delay_matrix(&t, 0).unwrap();
        assert_eq!(phi, t.snapshots().columns(0, 2).into_owned());
    }

    #[test]
    fn delay_matrix_insufficient_data() {
        let t = traj_1d(&[1.0, 2.0]);
        assert!(matches!(
            build_delay_matrix(&t, 1),
            Err(QuackError::InsufficientData { required: 3, got: 2 })
        ));
    }

    #[test]
    fn fit_recovers_diagonal_system() {
        let a = DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 0.5]);
        let mut x = DVector::from_vec(vec![1.0, 1.0]);
        let mut cols = Vec::new();
        for _ in 0..4 {
            cols.push(x.iter().copied().collect::<Vec<_>>());
            x = &a * x;
        }
        let model = fit_sw_dmd(&Trajectory::from_columns(&cols).unwrap(), 0, None).unwrap();
        assert!((model.k_matrix() - a).norm() < 1e-10);
    }

    #[test]
    fn constant_trajectory_is_fixed_point() {
        let c = vec![0.3, -1.2, 2.5];
        let t = Trajectory::from_columns(&vec![c.clone(); 5]).unwrap();
        let model = fit_sw_dmd(&t, 0, None).unwrap();
        let kc = model.k_matrix() * DVector::from_column_slice(&c);
        assert!((kc - DVector::from_column_slice(&c)).norm() < 1e-12);
    }

    #[test]
    fn delay_improves_damped_oscillation_fit() {
        let series: Vec<f64> = (0..20)
            .map(|t| (0.93f64).powi(t) * (0.7 * t as f64).cos())
            .collect();
        let t = traj_1d(&series);
        let r0 = fit_sw_dmd(&t, 0, None).unwrap().residual(&t).unwrap();
        let r2 = fit_sw_dmd(&t, 2, None).unwrap().residual(&t).unwrap();
        assert!(r2 < r0, "d=2 residual {r2} vs d=0 residual {r0}");
        assert!(r2 < 1e-8);
    }

    #[test]
    fn pinv_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let p = pinv(&a, default_rcond(2, 2)).unwrap();
        assert!((p - DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0])).norm() < 1e-15);
        let b = DMatrix::from_row_slice(2, 2, &[4.0, 7.0, 2.0, 6.0]);
        let inv = b.clone().try_inverse().unwrap();
        assert!((pinv(&b, 0.0).unwrap() - inv).norm() < 1e-12);
        assert!(pinv(&b, -1.0).is_err());
    }

    #[test]
    fn predict_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 0.5]);
        let m = KoopmanModel::from_matrix(a, 0).unwrap();
        let out = predict(&m, &DMatrix::from_column_slice(2, 1, &[1.0, 1.0]), 2).unwrap();
        assert!((out[0][0] - 0.9).abs() < 1e-15 && (out[0][1] - 0.5).abs() < 1e-15);
        assert!((out[1][0] - 0.81).abs() < 1e-15 && (out[1][1] - 0.25).abs() < 1e-15);

        let id = KoopmanModel::from_matrix(DMatrix::identity(3, 3), 0).unwrap();
        let out = predict(&id, &DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]), 4).unwrap();
        assert!(out.iter().all(|v| v == &vec![1.0, 2.0, 3.0]));

        let copy_newer = KoopmanModel::from_matrix(DMatrix::from_row_slice(1, 2, &[0.0, 1.0]), 1)
            .unwrap();
        let out = predict(&copy_newer, &DMatrix::from_row_slice(1, 2, &[5.0, 7.0]), 3).unwrap();
        assert_eq!(out, vec![vec![7.0]; 3]);
        assert!(predict(&copy_newer, &DMatrix::from_row_slice(1, 1, &[5.0]), 1).is_err());
    }

    #[test]
    fn dominant_mode_examples() {
        let m = KoopmanModel::from_matrix(DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 0.5]), 0)
            .unwrap();
        let (w, v) = dominant_mode(&m).unwrap();
        assert!((w - Complex64::new(0.9, 0.0)).norm() < 1e-12);
        assert!((v[0] - Complex64::new(1.0, 0.0)).norm() < 1e-8);
        assert!(v[1].norm() < 1e-8);

        let rot = KoopmanModel::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]), 0)
            .unwrap();
        assert!((dominant_mode(&rot).unwrap().0.norm() - 1.0).abs() < 1e-12);

        let sw = KoopmanModel::from_matrix(DMatrix::zeros(1, 2), 1).unwrap();
        assert!(matches!(dominant_mode(&sw), Err(QuackError::UnsupportedShape(_))));
    }

    #[test]
    fn dominant_eigenvector_satisfies_eigen_equation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let k = DMatrix::from_fn(5, 5, |_, _| rng.random::<f64>() - 0.5);
            let m = KoopmanModel::from_matrix(k.clone(), 0).unwrap();
            let (w, v) = dominant_mode(&m).unwrap();
            let kc = k.map(|x| Complex64::new(x, 0.0));
            assert!((kc * &v - v.map(|x| x * w)).norm() < 1e-8);
        }
    }

    #[test]
    fn companion_matrix_matches_window_update() {
        let k = DMatrix::from_row_slice(1, 3, &[0.2, -0.1, 0.8]);
        let m = KoopmanModel::from_matrix(k, 2).unwrap();
        let t = m.transition_matrix();
        let phi = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let next = &t * &phi;
        assert_eq!(next.as_slice()[..2], [2.0, 3.0]);
        assert!((next[2] - (0.2 - 0.2 + 2.4)).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let t = Trajectory::from_columns(&[vec![0.1, 0.2], vec![0.3, 0.4], vec![0.5, 0.6]])
            .unwrap()
            .with_losses(vec![Some(-1.0), None, Some(-2.5)])
            .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("theta_0,theta_1,loss\n"));
        let back = Trajectory::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }
}
