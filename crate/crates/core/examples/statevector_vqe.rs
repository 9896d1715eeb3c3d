//! Plain gradient descent on a small Ising chain, compared to the exact ground energy.

use quack::gradients::{GradientBackend, VqeObjective};
use quack::optimizers::{OptimizerConfig, OptimizerState};
use quack::pauli::{exact_ground_energy, ising_hamiltonian, real_amplitudes};
use quack::quack_loop::run_baseline;

fn main() -> quack::Result<()> {
    let h = ising_hamiltonian(4, 0.5)?;
    let ansatz = real_amplitudes(4, 2)?;
    let p = ansatz.param_count();
    let mut objective = VqeObjective::new(ansatz, h.clone(), GradientBackend::Exact)?;
    let optimizer = OptimizerState::new(OptimizerConfig::adam(0.02), p)?;
    let theta0 = vec![0.1; p];
    let record = run_baseline(&mut objective, optimizer, &theta0, 600, None, false)?;

    let e0 = exact_ground_energy(&h)?;
    println!("parameters      {p}");
    println!("initial energy  {:.6}", record.initial_loss().unwrap());
    println!("final energy    {:.6}", record.final_loss().unwrap());
    println!("ground energy   {e0:.6}");
    Ok(())
}
