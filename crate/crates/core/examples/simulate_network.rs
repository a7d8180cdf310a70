//! Coupled stations sharing one channel, against the mean-field model.

use broadcast_backoff::network::{greedy_operating_point, success_throughput};
use broadcast_backoff::sim::{run_network, SimConfig};
use broadcast_backoff::{BusyProb, ChannelMode, SystemParams};

fn main() -> broadcast_backoff::Result<()> {
    let stations = 10;
    println!("greedy network of {stations} stations, W = 31");
    println!("  lambda    tau sim      tau model    S sim      S model");
    for lambda in [0.0005, 0.001, 0.002, 0.004] {
        let params = SystemParams::new(lambda, 1.0, 0.05, 31)?;
        let cfg = SimConfig::new(ChannelMode::Greedy, params, BusyProb::IDLE, 1_000_000, 7);
        let stats = run_network(&cfg, stations)?;
        let op = greedy_operating_point(&params, stations - 1)?;
        let elapsed = stats.mean_cycle.mean * stats.epochs as f64;
        let s_sim = stats.success_slots as f64 * params.slot / elapsed;
        let s_model = success_throughput(op.tau, stations, params.slot, params.mini_slot);
        println!(
            "  {lambda:<8}  {:.6e}  {:.6e}  {s_sim:.5}    {s_model:.5}",
            stats.transmit_fraction.mean, op.tau
        );
    }

    let params = SystemParams::new(0.002, 1.0, 0.05, 31)?;
    let cfg = SimConfig::new(ChannelMode::Fair, params, BusyProb::IDLE, 1_000_000, 7);
    let stats = run_network(&cfg, stations)?;
    println!(
        "\nfair network: {} full slots, {} collisions, {} successes",
        stats.full_slots, stats.collision_slots, stats.success_slots
    );
    Ok(())
}
