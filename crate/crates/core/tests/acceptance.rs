//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line; the
//! test fails if any criterion fails.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use quack::bench::{preset, run_experiment, run_seed_baseline, theoretical_bounds, ExperimentOutcome, RowStatus};
use quack::gradients::{
    fisher_matrix, grad_exact, grad_finite_difference, grad_parameter_shift, vqe_loss, QuadraticObjective,
};
use quack::koopman::{dominant_mode, fit_dmd, fit_sw_dmd, predict, Trajectory};
use quack::neural::{
    objective_gradients, objective_value, train_neural_dmd, CnnEncoder, Encoder, EncoderKind, MlpEncoder,
    NeuralConfig,
};
use quack::noise::{sample_pauli_expectation, substream};
use quack::optimizers::{OptimizerConfig, OptimizerState};
use quack::pauli::{
    hardware_efficient, real_amplitudes, Ansatz, Gate, Hamiltonian, PauliTerm, RotationAxis, StateVector,
};
use quack::quack_loop::{run_baseline, run_quack, KoopmanMethod, Phase, QuackConfig, RunRecord};

struct Verdict {
    id: u32,
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, start: Instant, pass: bool, detail: String) -> Verdict {
    println!(
        "[{}] criterion {id:>2} {name}: {detail} ({:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    Verdict { id, pass, detail }
}

fn records(o: &ExperimentOutcome) -> Vec<&RunRecord> {
    o.seeds.iter().flat_map(|s| s.runs.iter().map(|r| &r.record)).collect()
}

fn all_reached(o: &ExperimentOutcome) -> bool {
    o.failures.is_empty() && o.report.rows.iter().all(|r| r.status == RowStatus::Ok)
}

fn qng(out: &mut Vec<Verdict>, noiseless: &mut Vec<ExperimentOutcome>) {
    let t = Instant::now();
    let spec = preset("qng-5q").unwrap();
    let o = run_experiment(&spec).unwrap();
    let agg = o.report.aggregate(KoopmanMethod::Dmd).unwrap();
    let bounded = o.report.rows.iter().all(|r| {
        let (_, hi) = theoretical_bounds(r.a, r.f, spec.quack.n_sim, spec.quack.n_dmd);
        r.s <= hi
    });
    let max_hi = o.report.rows.iter().map(|r| r.upper_bound).fold(f64::NAN, f64::max);
    let pass = all_reached(&o) && agg.completed == 10 && agg.mean_s >= 15.0 && bounded;
    out.push(report(
        1,
        "natural-gradient speedup",
        t,
        pass,
        format!(
            "mean s = {:.3} over {} seeds (need >= 15), every s within its upper bound: {bounded} (largest bound {max_hi:.3})",
            agg.mean_s, agg.completed
        ),
    ));
    noiseless.push(o);
}

fn bound_arithmetic(out: &mut Vec<Verdict>) {
    let t = Instant::now();
    let (_, hi) = theoretical_bounds(1.0, 110.0, 4, 100);
    out.push(report(
        2,
        "bound arithmetic",
        t,
        (hi - 21.185).abs() <= 0.005,
        format!("upper bound {hi:.5} (need 21.185 +/- 0.005)"),
    ));
}

fn overparam(out: &mut Vec<Verdict>, noiseless: &mut Vec<ExperimentOutcome>) {
    let t = Instant::now();
    let spec = preset("overparam-2q").unwrap();
    let o = run_experiment(&spec).unwrap();
    let agg = o.report.aggregate(KoopmanMethod::Dmd).unwrap();
    out.push(report(
        3,
        "overparameterized speedup",
        t,
        all_reached(&o) && agg.completed == 3 && agg.mean_s >= 100.0,
        format!("p = 1000, mean s = {:.2} over {} seeds (need >= 100)", agg.mean_s, agg.completed),
    ));
    noiseless.push(o);
}

fn smooth(out: &mut Vec<Verdict>, noiseless: &mut Vec<ExperimentOutcome>) {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [2, 4, 6] {
        let o = run_experiment(&preset(&format!("smooth-{n}q")).unwrap()).unwrap();
        let agg = o.report.aggregate(KoopmanMethod::Dmd).unwrap();
        pass &= all_reached(&o) && agg.completed == 10 && agg.median_s >= 5.0;
        parts.push(format!("N={n} median {:.2}", agg.median_s));
        noiseless.push(o);
    }
    out.push(report(4, "smooth regime", t, pass, format!("{} (need >= 5 each)", parts.join(", "))));
}

fn nonsmooth(out: &mut Vec<Verdict>, noiseless: &mut Vec<ExperimentOutcome>) {
    let t = Instant::now();
    let o = run_experiment(&preset("nonsmooth-12q").unwrap()).unwrap();
    let sw = o.report.aggregate(KoopmanMethod::SwDmd).unwrap().mean_s;
    let dmd = o.report.aggregate(KoopmanMethod::Dmd).unwrap().mean_s;
    out.push(report(
        5,
        "non-smooth regime",
        t,
        all_reached(&o) && sw >= 2.0 && sw >= dmd - 1.0,
        format!("sliding-window s = {sw:.3} (need >= 2), plain s = {dmd:.3}"),
    ));
    noiseless.push(o);
}

fn shots(out: &mut Vec<Verdict>) {
    let t = Instant::now();
    let o = run_experiment(&preset("shots-5q").unwrap()).unwrap();
    let agg = o.report.aggregate(KoopmanMethod::SwDmd).unwrap();
    out.push(report(
        6,
        "shot noise",
        t,
        all_reached(&o) && agg.completed == 5 && agg.median_s >= 1.5,
        format!("1000 shots, median s = {:.3} over {} seeds (need >= 1.5)", agg.median_s, agg.completed),
    ));
}

fn control(out: &mut Vec<Verdict>, noiseless: &[ExperimentOutcome]) {
    let t = Instant::now();
    let recs: Vec<&RunRecord> = noiseless.iter().flat_map(records).collect();
    let iterations: usize = recs.iter().map(|r| r.iterations.len()).sum();
    let violations: usize = recs.iter().map(|r| r.control_violations()).sum();
    let noisy = recs.iter().any(|r| r.noisy);
    out.push(report(
        7,
        "controlled restart",
        t,
        violations == 0 && iterations > 0 && !noisy,
        format!("{violations} violations across {iterations} iterations of {} runs", recs.len()),
    ));
}

fn convexity(out: &mut Vec<Verdict>) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = 8;
    let x_star: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x0: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
    let lr = 1.0 / QuadraticObjective::new(x_star.clone()).lipschitz();
    let opt = OptimizerConfig::gd(lr);
    let cfg = QuackConfig::new(4, 20, 10, KoopmanMethod::Dmd);
    let steps = cfg.n_sim * cfg.n_iter;

    let mut oracle = QuadraticObjective::new(x_star.clone());
    let baseline = run_baseline(&mut oracle, OptimizerState::new(opt, p).unwrap(), &x0, steps, None, false).unwrap();
    // closed form: every GD step scales the error by (1 - 2 lr)
    let d0: f64 = x0.iter().zip(&x_star).map(|(a, b)| (a - b).powi(2)).sum();
    let closed = |k: usize| (1.0 - 2.0 * lr).powi(2 * k as i32) * d0;
    let base_losses: Vec<f64> = baseline.history.iter().map(|e| e.reference_loss).collect();
    let closed_ok = base_losses.iter().enumerate().all(|(k, l)| (l - closed(k)).abs() <= 1e-12 * d0);

    let mut oracle = QuadraticObjective::new(x_star);
    let run = run_quack(&mut oracle, OptimizerState::new(opt, p).unwrap(), &x0, &cfg).unwrap();
    let mut k = 0;
    let mut exceeded = 0;
    for e in &run.history {
        if e.phase == Phase::Gradient {
            k += 1;
        }
        if matches!(e.phase, Phase::Gradient | Phase::SelectedRestart) && e.reference_loss > base_losses[k] {
            exceeded += 1;
        }
    }
    let rel = run.final_loss().unwrap() / d0;
    out.push(report(
        8,
        "convex test function",
        t,
        closed_ok && rel <= 1e-6 && exceeded == 0,
        format!(
            "step size {lr}, final relative loss {rel:.2e} (need <= 1e-6), {exceeded} points above the matched baseline, baseline matches closed form: {closed_ok}"
        ),
    ));
}

fn linear_identification(out: &mut Vec<Verdict>) {
    let t = Instant::now();
    let p = 6;
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let raw = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
        let radius = quack::koopman::eigenvalues(&raw)
            .unwrap()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        let a = raw * (0.9 / radius);
        let mut x = nalgebra::DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
        let mut cols = Vec::new();
        for _ in 0..p + 2 {
            cols.push(x.as_slice().to_vec());
            x = &a * x;
        }
        let k = fit_sw_dmd(&Trajectory::from_columns(&cols).unwrap(), 0, None).unwrap().k_matrix();
        worst = worst.max((k - &a).norm() / a.norm());
    }
    out.push(report(
        9,
        "linear system identification",
        t,
        worst <= 1e-8,
        format!("worst relative Frobenius error {worst:.2e} over 5 stable systems (need <= 1e-8)"),
    ));
}

fn random_hamiltonian(n: usize, rng: &mut ChaCha8Rng) -> Hamiltonian {
    let letters = ['I', 'X', 'Y', 'Z'];
    let terms = (0..rng.random_range(1..=6))
        .map(|_| {
            let label: String = (0..n).map(|_| letters[rng.random_range(0..4)]).collect();
            PauliTerm::from_label(rng.random_range(-1.0..1.0), &label).unwrap()
        })
        .collect();
    Hamiltonian::new(n, terms).unwrap()
}

fn random_ansatz(n: usize, rng: &mut ChaCha8Rng) -> Ansatz {
    if n == 1 {
        let rot = |axis, param| Gate::Rotation { axis, qubit: 0, param };
        let gates = vec![rot(RotationAxis::Y, 0), rot(RotationAxis::Z, 1), rot(RotationAxis::X, 0)];
        return Ansatz::new(1, gates, 2).unwrap();
    }
    if rng.random_bool(0.5) {
        real_amplitudes(n, rng.random_range(1..=2)).unwrap()
    } else {
        hardware_efficient(n, rng.random_range(1..=2)).unwrap()
    }
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm
}

fn gradient_oracles(out: &mut Vec<Verdict>) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut fd_err, mut an_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let n = rng.random_range(1..=6);
        let h = random_hamiltonian(n, &mut rng);
        let a = random_ansatz(n, &mut rng);
        let theta: Vec<f64> = (0..a.param_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let ps = grad_parameter_shift(&a, &h, &theta).unwrap();
        let ex = grad_exact(&a, &h, &theta).unwrap();
        let fd = grad_finite_difference(|x| vqe_loss(&a, &h, x), &theta, 1e-5).unwrap();
        for i in 0..theta.len() {
            fd_err = fd_err.max((ps[i] - fd[i]).abs());
            an_err = an_err.max((ps[i] - ex[i]).abs());
        }
    }

    let mut nn_err: f64 = 0.0;
    for (case, (p, d)) in [(2, 0), (4, 1), (2, 3), (8, 0)].into_iter().enumerate() {
        let dim = p * (d + 1);
        for cnn in [false, true] {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + case as u64);
            let encoder = if cnn {
                Encoder::Cnn(CnnEncoder::random(p, 3, &mut rng))
            } else {
                Encoder::Mlp(MlpEncoder::random(dim, dim, &mut rng))
            };
            let phi = DMatrix::from_fn(dim, 7, |_, _| rng.random_range(-1.0..1.0));
            let y = DMatrix::from_fn(p, 7, |_, _| rng.random_range(-1.0..1.0));
            let k = DMatrix::from_fn(p, dim, |_, _| rng.random_range(-1.0..1.0));
            let (_, gk, gp) = objective_gradients(&encoder, &k, &phi, &y, d + 1);
            let mut tensors = vec![k.clone()];
            tensors.extend(encoder.params());
            let analytic: Vec<f64> = std::iter::once(&gk).chain(&gp).flat_map(|m| m.iter().copied()).collect();
            let eval = |flat: &[f64]| {
                let mut off = 0;
                let ts: Vec<DMatrix<f64>> = tensors
                    .iter()
                    .map(|m| {
                        let v = DMatrix::from_column_slice(m.nrows(), m.ncols(), &flat[off..off + m.len()]);
                        off += m.len();
                        v
                    })
                    .collect();
                let mut e = encoder.clone();
                e.set_params(&ts[1..]);
                Ok(objective_value(&e, &ts[0], &phi, &y, d + 1))
            };
            let x0: Vec<f64> = tensors.iter().flat_map(|m| m.iter().copied()).collect();
            let fd = grad_finite_difference(eval, &x0, 1e-6).unwrap();
            nn_err = nn_err.max(rel_err(&fd, &analytic));
        }
    }
    out.push(report(
        10,
        "gradient oracles",
        t,
        fd_err <= 1e-6 && an_err <= 1e-10 && nn_err <= 1e-5,
        format!(
            "shift vs finite difference {fd_err:.1e} (<= 1e-6), shift vs analytic {an_err:.1e} (<= 1e-10), network backprop relative {nn_err:.1e} (<= 1e-5)"
        ),
    ));
}

fn fisher(out: &mut Vec<Verdict>) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut asym, mut min_eig): (f64, f64) = (0.0, f64::INFINITY);
    for _ in 0..20 {
        let n = rng.random_range(1..=5);
        let a = random_ansatz(n, &mut rng);
        let theta: Vec<f64> = (0..a.param_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let f = fisher_matrix(&a, &theta).unwrap().0;
        asym = asym.max((&f - f.transpose()).amax());
        let sym = (&f + f.transpose()) * 0.5;
        min_eig = min_eig.min(sym.symmetric_eigenvalues().min());
    }
    let ry = Ansatz::new(
        1,
        vec![Gate::Rotation {
            axis: RotationAxis::Y,
            qubit: 0,
            param: 0,
        }],
        1,
    )
    .unwrap();
    let single = fisher_matrix(&ry, &[0.7]).unwrap().0[(0, 0)];
    out.push(report(
        11,
        "metric tensor",
        t,
        asym <= 1e-9 && min_eig >= -1e-9 && (single - 0.25).abs() <= 1e-12,
        format!("asymmetry {asym:.1e}, smallest eigenvalue {min_eig:.2e}, single rotation {single:.15}"),
    ));
}

fn nonsmooth_trajectory() -> Trajectory {
    let spec = preset("nonsmooth-12q").unwrap();
    run_seed_baseline(&spec, spec.seeds[0], true).unwrap().trajectory().unwrap()
}

fn neural_reduction(out: &mut Vec<Verdict>, traj: &Trajectory) {
    let t = Instant::now();
    let cfg = NeuralConfig {
        zero_init: true,
        freeze_encoder: true,
        ..NeuralConfig::with_steps(20)
    };
    let model = train_neural_dmd(traj, EncoderKind::Mlp, 0, &cfg).unwrap();
    let linear = fit_dmd(traj, None).unwrap();
    let pairs = (traj.len() - 1) as f64;
    let lin = linear.residual(traj).unwrap().powi(2) / (traj.param_count() as f64 * pairs);
    let diff = (model.final_objective - lin).abs();
    out.push(report(
        12,
        "neural reduction to linear",
        t,
        diff <= 1e-6,
        format!(
            "network objective {:.6e}, linear {lin:.6e}, difference {diff:.1e} (need <= 1e-6)",
            model.final_objective
        ),
    ));
}

fn shot_scaling(out: &mut Vec<Verdict>) {
    let t = Instant::now();
    // <X> = sin(1.1) on RY(1.1)|0>
    let (c, s) = ((1.1f64 / 2.0).cos(), (1.1f64 / 2.0).sin());
    let state = StateVector::from_amplitudes(1, vec![Complex64::new(c, 0.0), Complex64::new(s, 0.0)]).unwrap();
    let term = PauliTerm::from_label(1.0, "X").unwrap();
    let exact = 1.1f64.sin();
    let reps = 2000;
    let scaled: Vec<f64> = [100u64, 10_000, 1_000_000]
        .iter()
        .map(|&n| {
            let ms: f64 = (0..reps)
                .map(|r| {
                    let mut rng = substream(13, n, r, 0, 0);
                    (sample_pauli_expectation(&state, &term, n, &mut rng).unwrap() - exact).powi(2)
                })
                .sum::<f64>()
                / reps as f64;
            ms.sqrt() * (n as f64).sqrt()
        })
        .collect();
    let spread = scaled.iter().cloned().fold(0.0, f64::max) / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    out.push(report(
        13,
        "shot-noise scaling",
        t,
        spread <= 1.5,
        format!("rms * sqrt(n) = {:.4?}, spread {spread:.3} (need <= 1.5)", scaled),
    ));
}

fn stability(out: &mut Vec<Verdict>, traj: &Trajectory) {
    let t = Instant::now();
    let model = fit_dmd(traj, None).unwrap();
    let (lambda, _) = dominant_mode(&model).unwrap();
    let start = traj.snapshot(traj.len() - 1);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n0 = norm(&start);
    let path = predict(&model, &DMatrix::from_column_slice(start.len(), 1, &start), 10_000).unwrap();
    let (pass, detail) = if lambda.norm() < 1.0 {
        let last = &path[path.len() - 1];
        let prev = &path[path.len() - 2];
        let step: Vec<f64> = last.iter().zip(prev).map(|(a, b)| a - b).collect();
        let settled = norm(&step) <= 1e-10 * n0.max(1.0);
        (settled, format!("1 - |lambda| = {:.3e}, final step size {:.2e}", 1.0 - lambda.norm(), norm(&step)))
    } else if lambda.norm() > 1.0 {
        // a NaN norm counts as blown up
        let hit = path.iter().position(|x| norm(x).is_nan() || norm(x) > 10.0 * n0);
        let growth = lambda.norm().powi(10_000);
        let detail = match hit {
            Some(k) => format!("|lambda| - 1 = {:.3e}, norm passes 10x at step {}", lambda.norm() - 1.0, k + 1),
            None => format!(
                "|lambda| - 1 = {:.3e}, |lambda|^10000 = {growth:.4}, norm stays below 10x for 10000 steps (final ratio {:.4})",
                lambda.norm() - 1.0,
                norm(&path[path.len() - 1]) / n0
            ),
        };
        (hit.is_some(), detail)
    } else {
        (false, "dominant eigenvalue on the unit circle".to_string())
    };
    out.push(report(14, "open-loop stability dichotomy", t, pass, detail));
}

#[test]
fn acceptance() {
    let mut out = Vec::new();
    let mut noiseless = Vec::new();
    qng(&mut out, &mut noiseless);
    bound_arithmetic(&mut out);
    overparam(&mut out, &mut noiseless);
    smooth(&mut out, &mut noiseless);
    nonsmooth(&mut out, &mut noiseless);
    shots(&mut out);
    control(&mut out, &noiseless);
    convexity(&mut out);
    linear_identification(&mut out);
    gradient_oracles(&mut out);
    fisher(&mut out);
    let traj = nonsmooth_trajectory();
    neural_reduction(&mut out, &traj);
    shot_scaling(&mut out);
    stability(&mut out, &traj);

    out.sort_by_key(|v| v.id);
    let failed: Vec<String> = out
        .iter()
        .filter(|v| !v.pass)
        .map(|v| format!("{}: {}", v.id, v.detail))
        .collect();
    println!("{} of {} criteria passed", out.len() - failed.len(), out.len());
    assert!(failed.is_empty(), "failed criteria: {failed:#?}");
}
