//! Load a Hamiltonian from Pauli-sum text and find its ground energy two ways.

use quack::gradients::{GradientBackend, VqeObjective};
use quack::optimizers::{OptimizerConfig, OptimizerState};
use quack::pauli::{exact_ground_energy, hardware_efficient, load_hamiltonian};
use quack::quack_loop::run_baseline;

// H2-like two-qubit model
const TEXT: &str = "\
-1.0523 II
0.3979 ZI
-0.3979 IZ
-0.0113 ZZ
0.1809 XX
";

fn main() -> quack::Result<()> {
    let h = load_hamiltonian(TEXT)?;
    println!("{} terms on {} qubits", h.terms().len(), h.n_qubits());
    let ansatz = hardware_efficient(h.n_qubits(), 3)?;
    let p = ansatz.param_count();
    let mut objective = VqeObjective::new(ansatz, h.clone(), GradientBackend::ParameterShift)?;
    let opt = OptimizerState::new(OptimizerConfig::adam(0.05), p)?;
    let record = run_baseline(&mut objective, opt, &vec![0.2; p], 400, None, false)?;
    println!("variational {:.6}", record.final_loss().unwrap());
    println!("exact       {:.6}", exact_ground_energy(&h)?);
    Ok(())
}
