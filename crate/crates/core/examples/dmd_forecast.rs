//! Fit linear and sliding-window DMD to a damped oscillation and forecast ahead.

use quack::koopman::{dominant_mode, fit_dmd, fit_sw_dmd, predict, Trajectory};

fn main() -> quack::Result<()> {
    // two coordinates of a damped rotation, observed through the first one only
    let (r, w) = (0.97_f64, 0.3_f64);
    let cols: Vec<Vec<f64>> = (0..40)
        .map(|t| {
            let t = t as f64;
            vec![r.powf(t) * (w * t).cos() + 1.0]
        })
        .collect();
    let traj = Trajectory::from_columns(&cols)?;

    let dmd = fit_dmd(&traj, None)?;
    let sw = fit_sw_dmd(&traj, 3, None)?;
    println!("residual  d=0: {:.3e}  d=3: {:.3e}", dmd.residual(&traj)?, sw.residual(&traj)?);

    let future = predict(&sw, &traj.last_window(3)?, 20)?;
    for (k, x) in future.iter().enumerate().step_by(5) {
        let t = (40 + k) as f64;
        let truth = r.powf(t) * (w * t).cos() + 1.0;
        println!("step {:>3}  forecast {:.6}  truth {:.6}", 40 + k, x[0], truth);
    }

    let (lambda, _) = dominant_mode(&dmd)?;
    println!("dominant eigenvalue of the d=0 fit: {lambda:.4}");
    Ok(())
}
