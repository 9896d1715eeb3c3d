//! Train MLP and CNN encoded Koopman models on a short optimizer trajectory.

use quack::gradients::{GradientBackend, VqeObjective};
use quack::koopman::fit_sw_dmd;
use quack::neural::{predict_neural, train_neural_dmd, EncoderKind, NeuralConfig};
use quack::optimizers::{OptimizerConfig, OptimizerState};
use quack::pauli::{ising_hamiltonian, real_amplitudes};
use quack::quack_loop::run_baseline;

fn main() -> quack::Result<()> {
    let ansatz = real_amplitudes(3, 1)?;
    let p = ansatz.param_count();
    let mut objective = VqeObjective::new(ansatz, ising_hamiltonian(3, 0.5)?, GradientBackend::Exact)?;
    let optimizer = OptimizerState::new(OptimizerConfig::adam(0.02), p)?;
    let record = run_baseline(&mut objective, optimizer, &vec![0.4; p], 12, None, true)?;
    let traj = record.trajectory()?;

    let d = 2;
    let linear = fit_sw_dmd(&traj, d, None)?;
    let n = (traj.len() - d - 1) as f64;
    println!("linear sw-dmd objective {:.3e}", linear.residual(&traj)?.powi(2) / (p as f64 * n));

    let config = NeuralConfig::with_steps(2000);
    for kind in [EncoderKind::Mlp, EncoderKind::Cnn] {
        let model = train_neural_dmd(&traj, kind, d, &config)?;
        let next = predict_neural(&model, &traj.last_window(d)?, 5)?;
        println!("{kind:?} objective {:.3e}, 5-step forecast {:.4?}", model.final_objective, next[4]);
    }
    Ok(())
}
