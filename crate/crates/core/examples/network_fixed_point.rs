//! Mean-field coupling of a tagged station with M peers.

use broadcast_backoff::network::{fair_fixed_point, greedy_operating_point, lambda_max_fair};
use broadcast_backoff::SystemParams;

fn main() -> broadcast_backoff::Result<()> {
    let params = SystemParams::new(0.05, 1.0, 0.05, 31)?;
    println!("greedy network, lambda = {}", params.lambda);
    println!("   M   z            r            tau          ergodic");
    for m in [0, 1, 2, 5, 10, 20, 50, 100] {
        let op = greedy_operating_point(&params, m)?;
        println!("{m:>4}   {:.9}  {:.9}  {:.9}  {}", op.z, op.r.get(), op.tau, op.ergodic);
    }

    println!("\nfair network at half its maximum rate");
    for m in [1, 5, 20] {
        let limit = lambda_max_fair(1.0, 0.05, 31, m)?.value;
        let op = fair_fixed_point(&params.with_lambda(0.5 * limit)?, m)?;
        println!(
            "  M = {m:<3} lambda = {:.6}  r = {:.6}  taubar = {:.6}  roots seen = {}",
            0.5 * limit,
            op.r.get(),
            op.tau,
            op.multiplicity
        );
    }
    Ok(())
}
