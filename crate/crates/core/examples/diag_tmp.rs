use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use quack::koopman::{build_delay_matrix, Trajectory};
fn main() {
    let mut r = ChaCha8Rng::seed_from_u64(16045350201951181769);
    let (p, len) = (3usize, 24usize);
    let cols: Vec<Vec<f64>> = (0..len).map(|t| (0..p).map(|i| ((t * (i + 1)) as f64 * 0.37).sin() + r.random_range(-0.1..0.1)).collect()).collect();
    let traj = Trajectory::from_columns(&cols).unwrap();
    for d in 0..4 {
        let a = build_delay_matrix(&traj, d).unwrap();
        for eps in [5.0, 1.0, 1e3, 1e4, 1e5, 1e6].map(|k| k * f64::EPSILON) {
            for (t, m) in [(false, a.clone()), (true, a.transpose())] {
                let line = match m.clone().try_svd(true, true, eps, 0) {
                    None => "none".to_string(),
                    Some(s) => { let rr = s.u.unwrap() * DMatrix::from_diagonal(&s.singular_values) * s.v_t.unwrap(); format!("{:.1e}", (rr - &m).norm() / m.norm()) }
                };
                print!("d{d} eps{eps:.0e} t{} {line} | ", t as u8);
            }
        }
        println!();
    }
}
