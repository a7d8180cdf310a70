//! Steady state of one greedy station facing an exogenous busy channel.
//!
//! `cargo run --example greedy_station -- [lambda] [r]`

use broadcast_backoff::{BusyProb, GreedySolution, SystemParams};

fn main() -> broadcast_backoff::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().expect("numeric argument"));
    let lambda = args.next().unwrap_or(0.05);
    let r = args.next().unwrap_or(0.3);
    let params = SystemParams::new(lambda, 1.0, 0.05, 4)?;
    let station = GreedySolution::new(&params, BusyProb::new(r)?)?;

    let (a, b) = station.constants_ab();
    println!("lambda = {lambda}, r = {r}, W = {}", params.window);
    println!("A = {a:.6}, B = {b:.6}, stable rate limit {:.6}", station.lambda_threshold());
    if !station.is_ergodic() {
        println!("lambda B = {:.4} >= 1: no stationary regime", lambda * b);
        return Ok(());
    }
    println!("p(0,0) = {:.12}", station.p00()?);
    let [closed, from_gf, from_derivatives] = station.tau_routes()?;
    println!("tau = {closed:.12} (closed form), {from_gf:.12} (F_0(1) - p00), {from_derivatives:.12} (derivatives)");

    println!("\nF_k(x):");
    for x in [0.25, 0.5, 0.75, 1.0] {
        let row: Vec<String> = (0..=params.window)
            .map(|k| station.fk_eval(k, x).map(|v| format!("{v:.6}")))
            .collect::<Result<_, _>>()?;
        println!("  x = {x:<4}  {}", row.join("  "));
    }

    let table = station.stationary_table(30)?;
    println!("\np(k, n) for n <= 5:");
    for k in 0..=params.window {
        let row: Vec<String> = table.row(k)[..=5].iter().map(|p| format!("{p:.3e}")).collect();
        println!("  k = {k}  {}", row.join("  "));
    }
    println!("mean queue {:.6}, mean counter {:.6}", table.mean_queue(), table.mean_backoff());
    Ok(())
}
