//! Shift-rule, analytic and finite-difference gradients side by side, plus the
//! natural-gradient direction.

use quack::gradients::{
    fisher_matrix, grad_exact, grad_finite_difference, grad_parameter_shift, natural_gradient_direction, vqe_loss,
};
use quack::pauli::{ising_hamiltonian, real_amplitudes};

fn main() -> quack::Result<()> {
    let h = ising_hamiltonian(3, 0.5)?;
    let ansatz = real_amplitudes(3, 1)?;
    let theta: Vec<f64> = (0..ansatz.param_count()).map(|i| 0.3 + 0.17 * i as f64).collect();

    let ps = grad_parameter_shift(&ansatz, &h, &theta)?;
    let exact = grad_exact(&ansatz, &h, &theta)?;
    let fd = grad_finite_difference(|t| vqe_loss(&ansatz, &h, t), &theta, 1e-6)?;
    println!("{:>4} {:>14} {:>14} {:>14}", "i", "shift", "analytic", "finite diff");
    for i in 0..theta.len() {
        println!("{i:>4} {:>14.10} {:>14.10} {:>14.10}", ps[i], exact[i], fd[i]);
    }

    let fisher = fisher_matrix(&ansatz, &theta)?;
    let ng = natural_gradient_direction(&fisher, &exact, 1e-8)?;
    println!("natural gradient direction: {:.4?}", ng);
    Ok(())
}
