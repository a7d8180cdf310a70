//! Fair station: the head-of-line packet only leaves in a full slot.
//!
//! Prints the stationary quantities and how the stable region shrinks
//! compared with a greedy station at the same busy probability.

use broadcast_backoff::{BusyProb, FairSolution, GreedySolution, SystemParams};

fn main() -> broadcast_backoff::Result<()> {
    let params = SystemParams::new(0.04, 1.0, 0.05, 4)?;
    let busy = BusyProb::new(0.4)?;
    let fair = FairSolution::new(&params, busy)?;
    println!("q(0,0)  closed form {:.12}", fair.q00()?);
    println!("        from Rbar'(1) {:.12}", fair.q00_from_derivative()?);
    println!("        normalisation {:.12}", fair.q00_from_normalisation()?);
    println!("taubar  {:.12}", fair.taubar()?);
    let table = fair.stationary_table(40)?;
    println!("mean queue {:.6}, total mass {:.12}", table.mean_queue(), table.total());

    println!("\n   r    fair limit   greedy limit");
    for r in [0.1, 0.2, 0.4, 0.6, 0.8, 0.95] {
        let b = BusyProb::new(r)?;
        let f = FairSolution::new(&params, b)?.lambda_threshold();
        let g = GreedySolution::new(&params, b)?.lambda_threshold();
        println!("  {r:<4}  {f:.6}     {g:.6}");
    }
    Ok(())
}
