//! Sampling error of a Pauli expectation, and a QuACK run on shot-noisy losses.

use quack::bench::{preset, run_experiment};
use quack::noise::{sample_pauli_expectation, substream};
use quack::pauli::{PauliTerm, StateVector};
use num_complex::Complex64;

fn main() -> quack::Result<()> {
    let amp = Complex64::new(0.5_f64.sqrt(), 0.0);
    let plus = StateVector::from_amplitudes(1, vec![amp, amp])?;
    let x = PauliTerm::from_label(1.0, "X")?;
    let z = PauliTerm::from_label(1.0, "Z")?;
    for n in [100u64, 10_000, 1_000_000] {
        let mut rng = substream(7, 0, n, 0, 0);
        let ez = sample_pauli_expectation(&plus, &z, n, &mut rng)?;
        let ex = sample_pauli_expectation(&plus, &x, n, &mut rng)?;
        println!("shots {n:>8}: <Z> ~ {ez:+.5} (exact 0), <X> ~ {ex:+.5} (exact 1)");
    }

    let mut spec = preset("shots-5q")?;
    spec.seeds = vec![0, 1];
    let outcome = run_experiment(&spec)?;
    for row in &outcome.report.rows {
        println!("seed {}: speedup {:.2}", row.seed, row.s);
    }
    Ok(())
}
