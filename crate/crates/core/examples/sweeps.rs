//! The four station-count sweeps written as CSV files into a directory.
//!
//! `cargo run --release --example sweeps -- [out_dir]`

use std::fs::File;
use std::path::PathBuf;

use broadcast_backoff::experiments::{self, SweepSpec};
use broadcast_backoff::StationCount;

fn main() -> broadcast_backoff::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sweeps".into()));
    std::fs::create_dir_all(&dir)?;
    let network = SweepSpec::new(
        experiments::network_defaults(experiments::SWEEP_LAMBDA),
        experiments::DEFAULT_M_RANGE,
        StationCount::Peers,
    )?;
    let fair = SweepSpec::new(
        experiments::network_defaults(experiments::FAIR_SWEEP_LAMBDA),
        experiments::DEFAULT_M_RANGE,
        StationCount::Peers,
    )?;
    let tables = [
        ("tau_vs_m.csv", experiments::tau_vs_m(&network)?),
        ("lambda_max.csv", experiments::lambda_max_vs_m(&network)?),
        ("optimal_w.csv", experiments::optimal_w(&network)?),
        ("fair_vs_greedy.csv", experiments::fair_vs_greedy(&fair)?),
    ];
    for (name, table) in tables {
        let path = dir.join(name);
        table.write(File::create(&path)?)?;
        println!("{} ({} rows)", path.display(), table.rows.len());
    }
    Ok(())
}
