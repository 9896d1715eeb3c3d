//! Koopman-accelerated training against plain gradient descent on a 4-qubit chain.

use quack::bench::{f_cost, target_loss, theoretical_bounds};
use quack::gradients::{GradientBackend, ObjectiveOracle, VqeObjective};
use quack::optimizers::{OptimizerConfig, OptimizerState};
use quack::pauli::{ising_hamiltonian, real_amplitudes};
use quack::quack_loop::{run_baseline, run_quack, KoopmanMethod, QuackConfig};

fn main() -> quack::Result<()> {
    let ansatz = real_amplitudes(4, 1)?;
    let p = ansatz.param_count();
    let make = || VqeObjective::new(ansatz.clone(), ising_hamiltonian(4, 0.5).unwrap(), GradientBackend::Exact);
    let opt = OptimizerConfig::gd(2e-3);
    let theta0: Vec<f64> = (0..p).map(|i| 0.1 * i as f64).collect();

    let mut oracle = make()?;
    let baseline = run_baseline(&mut oracle, OptimizerState::new(opt, p)?, &theta0, 1500, None, false)?;
    let target = target_loss(&baseline, 0.01)?;

    let mut cfg = QuackConfig::new(3, 60, 96, KoopmanMethod::Dmd);
    cfg.stop_at_loss = Some(target);
    let mut oracle = make()?;
    let record = run_quack(&mut oracle, OptimizerState::new(opt, p)?, &theta0, &cfg)?;

    let f = f_cost(p, oracle.cost_method())?;
    let tb = baseline.ledger_at_target(target).unwrap().gradient_steps as f64;
    let q = record.ledger_at_target(target).expect("target reached");
    let (t1, t2) = (q.gradient_steps as f64, q.forward_evals as f64);
    let s = f * tb / (f * t1 + t2);
    let (lo, hi) = theoretical_bounds(tb / (t1 + t2), f, cfg.n_sim, cfg.n_dmd);
    println!("target loss {target:.6}");
    println!("baseline gradient steps {tb}, quack {t1} gradient + {t2} predicted");
    println!("speedup {s:.2} (bounds {lo:.2} .. {hi:.2})");
    println!("iterations used {}", record.iterations.len());
    Ok(())
}
