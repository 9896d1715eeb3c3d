//! Run a preset through the experiment runner and write its report files.
//!
//! `cargo run --release --example speedup_report -- qng-5q /tmp/qng`

use std::path::PathBuf;

use quack::bench::{preset, run_experiment, write_outputs};

fn main() -> quack::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "smooth-2q".into());
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "speedup-report".into()));

    let spec = preset(&name)?;
    let outcome = run_experiment(&spec)?;
    write_outputs(&outcome, &dir)?;
    for agg in &outcome.report.aggregates {
        println!(
            "{name} {}: mean {:.2} median {:.2} over {} seeds",
            agg.method, agg.mean_s, agg.median_s, agg.completed
        );
    }
    println!("reports written to {}", dir.display());
    Ok(())
}
