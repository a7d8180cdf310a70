//! Monte-Carlo of a single station beside its closed forms.
//!
//! `cargo run --release --example simulate_station -- [epochs] [seed]`

use broadcast_backoff::experiments::simulate_report;
use broadcast_backoff::oracle::DEFAULT_N_MAX;
use broadcast_backoff::sim::SimConfig;
use broadcast_backoff::{BusyProb, ChannelMode, SystemParams};

fn main() -> broadcast_backoff::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().map_or(1_000_000, |a| a.parse().expect("epoch count"));
    let seed = args.next().map_or(2026, |a| a.parse().expect("seed"));
    let cases = [
        (ChannelMode::Greedy, SystemParams::new(0.05, 1.0, 0.05, 4)?, BusyProb::new(0.3)?),
        (ChannelMode::Fair, SystemParams::new(0.04, 1.0, 0.05, 4)?, BusyProb::new(0.4)?),
    ];
    for (mode, params, busy) in cases {
        let cfg = SimConfig::new(mode, params, busy, epochs, seed).with_probes(&[0.1, 0.5, 1.0]);
        let (_, table) = simulate_report(&cfg, None, DEFAULT_N_MAX)?;
        println!("{}", table.to_csv_string());
    }
    Ok(())
}
