//! Maximum stable rates of both models and the best contention window.

use broadcast_backoff::network::{lambda_max_fair, lambda_max_greedy, optimal_window, saturated_success_throughput};

fn main() -> broadcast_backoff::Result<()> {
    let (slot, mini) = (1.0, 0.05);
    println!("   M   u           greedy max   fair max     offered load   W_opt  S(W_opt)  S(31)");
    for m in [1, 2, 5, 10, 20, 50, 100] {
        let g = lambda_max_greedy(slot, mini, 31, m)?;
        let f = lambda_max_fair(slot, mini, 31, m)?;
        let (w_opt, s_opt) = optimal_window(slot, mini, m);
        println!(
            "{m:>4}   {:.8}  {:.8}   {:.8}   {:.6}       {w_opt:>5}  {s_opt:.5}   {:.5}",
            g.u,
            g.value,
            f.value,
            (m + 1) as f64 * g.value,
            saturated_success_throughput(slot, mini, 31, m)
        );
    }
    Ok(())
}
