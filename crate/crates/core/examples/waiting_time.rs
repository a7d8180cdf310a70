//! Virtual waiting time of a greedy station: transform, mean and a
//! check against the stationary table.

use broadcast_backoff::{BusyProb, GreedySolution, SystemParams, WaitTransform};

fn main() -> broadcast_backoff::Result<()> {
    let params = SystemParams::new(0.05, 1.0, 0.05, 4)?;
    let station = GreedySolution::new(&params, BusyProb::new(0.3)?)?;
    let table = station.stationary_table(60)?;
    let wait = WaitTransform::new(station)?;

    println!("mean wait {:.10}", wait.mean_wait()?);
    println!("mean time between epochs {:.10}", wait.mean_cycle_length()?);
    println!("\n  s      psi(s)          table sum       f(s)       v(s)");
    for s in [0.0, 0.05, 0.1, 0.5, 1.0, 2.0, 5.0] {
        println!(
            "  {s:<5}  {:.12}  {:.12}  {:.6}   {:.6}",
            wait.psi(s)?,
            wait.psi_from_table(&table, s)?,
            wait.f(s)?,
            wait.v(s)?
        );
    }
    Ok(())
}
