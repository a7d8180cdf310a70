//! Solves the truncated (k, n) chain by brute force and compares it with the
//! closed-form tables of both station models.

use broadcast_backoff::oracle::{balance_residual, TruncatedChain};
use broadcast_backoff::{BusyProb, ChannelMode, FairSolution, GreedySolution, SystemParams};

fn main() -> broadcast_backoff::Result<()> {
    let cases = [
        (ChannelMode::Greedy, SystemParams::new(0.05, 1.0, 0.05, 4)?, BusyProb::new(0.3)?),
        (ChannelMode::Fair, SystemParams::new(0.04, 1.0, 0.05, 4)?, BusyProb::new(0.4)?),
    ];
    for (mode, params, busy) in cases {
        let chain = TruncatedChain::build_kernel(mode, &params, busy, 60)?;
        let oracle = chain.stationary(1e-13)?;
        let analytic = match mode {
            ChannelMode::Greedy => GreedySolution::new(&params, busy)?.stationary_table(60)?,
            ChannelMode::Fair => FairSolution::new(&params, busy)?.stationary_table(60)?,
        };
        println!("{mode}: {} states, leak {:.2e}, residual {:.2e}", chain.states(), oracle.leak, oracle.residual);
        println!("  p(0,0) oracle {:.15} analytic {:.15}", oracle.table.get(0, 0), analytic.get(0, 0));
        println!("  transmit probability oracle {:.15} analytic {:.15}", oracle.table.transmit_prob(), analytic.transmit_prob());
        println!("  max |oracle - analytic| = {:.2e} (extraction bound {:.2e})", oracle.table.max_abs_diff(&analytic), analytic.est_error);
        println!("  balance equations residual {:.2e}", balance_residual(mode, &params, busy, &oracle.table, 40));
    }
    Ok(())
}
