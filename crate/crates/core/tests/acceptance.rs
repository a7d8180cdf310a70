//! Acceptance criteria, one line each: identifier, verdict, measured
//! value against its tolerance, and wall time against its budget.
//!
//! Runs without the libtest harness so the lines are always printed.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use broadcast_backoff::network::{
    fixed_point_polynomial, greedy_drift_factorisation, lambda_max_fair, lambda_max_greedy, saturation_residual,
    solve_u_complement, solve_z, SIGN_SCAN_POINTS,
};
use broadcast_backoff::oracle::TruncatedChain;
use broadcast_backoff::roots::sign_changes;
use broadcast_backoff::sim::{run_station, SimConfig, SimStats};
use broadcast_backoff::validation::{
    fair_recurrence_residual, fair_reference, fair_system_residual, greedy_recurrence_residual, greedy_reference,
    greedy_system_residual,
};
use broadcast_backoff::{BusyProb, ChannelMode, FairSolution, GreedySolution, SystemParams, WaitTransform};

const SEED: u64 = 2026;

struct Verdict {
    passed: bool,
    summary: String,
}

fn verdict(passed: bool, summary: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        summary: summary.into(),
    }
}

type Outcome = Result<Verdict, Box<dyn std::error::Error>>;

/// 20 points strictly inside (0, 1).
fn sample_points() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 21.0).collect()
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    r.set_stream(stream);
    r
}

fn oracle_equivalence(mode: ChannelMode) -> Outcome {
    let (params, busy) = match mode {
        ChannelMode::Greedy => greedy_reference(),
        ChannelMode::Fair => fair_reference(),
    };
    let oracle = TruncatedChain::build_kernel(mode, &params, busy, 60)?.stationary(1e-12)?;
    let (table, p00, tau) = match mode {
        ChannelMode::Greedy => {
            let s = GreedySolution::new(&params, busy)?;
            (s.stationary_table(60)?, s.p00()?, s.tau()?)
        }
        ChannelMode::Fair => {
            let s = FairSolution::new(&params, busy)?;
            (s.stationary_table(60)?, s.q00()?, s.taubar()?)
        }
    };
    let worst = table
        .max_abs_diff(&oracle.table)
        .max((p00 - oracle.table.get(0, 0)).abs())
        .max((tau - oracle.table.transmit_prob()).abs());
    Ok(verdict(worst <= 1e-8, format!("max |analytic - oracle| = {worst:.2e} <= 1e-8")))
}

fn criterion_1() -> Outcome {
    oracle_equivalence(ChannelMode::Greedy)
}

fn criterion_2() -> Outcome {
    oracle_equivalence(ChannelMode::Fair)
}

fn criterion_3() -> Outcome {
    let (pg, rg) = greedy_reference();
    let (pf, rf) = fair_reference();
    let g = GreedySolution::new(&pg, rg)?;
    let f = FairSolution::new(&pf, rf)?;
    let p01 = g.stationary_table(10)?.get(0, 1);
    let q01 = f.stationary_table(10)?.get(0, 1);
    let mut worst = [0.0f64; 4];
    for x in sample_points() {
        worst[0] = worst[0].max(greedy_system_residual(&g, x)?);
        worst[1] = worst[1].max(fair_system_residual(&f, x)?);
        worst[2] = worst[2].max(greedy_recurrence_residual(&g, p01, x)?);
        worst[3] = worst[3].max(fair_recurrence_residual(&f, q01, x)?);
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    Ok(verdict(
        max <= 1e-10,
        format!(
            "greedy system {:.1e}, fair system {:.1e}, greedy recurrence {:.1e}, fair recurrence {:.1e} <= 1e-10",
            worst[0], worst[1], worst[2], worst[3]
        ),
    ))
}

fn criterion_4() -> Outcome {
    let mut r = rng(1);
    let mut disagreements = 0;
    for _ in 0..1000 {
        let slot = r.random_range(0.5..2.0);
        let params = SystemParams::new(
            r.random_range(0.0001..1.0) / slot,
            slot,
            slot * r.random_range(0.01..0.9),
            r.random_range(1..=64),
        )?;
        let busy = BusyProb::new(r.random_range(0.01..0.95))?;
        let g = GreedySolution::new(&params, busy)?;
        let f = FairSolution::new(&params, busy)?;
        let (_, b) = g.constants_ab();
        let by_sign = params.lambda * b - 1.0 < 0.0;
        if by_sign != g.ergodic_by_threshold() {
            disagreements += 1;
        }
        let by_derivative = f.derivatives_at_one().0 < 0.0;
        if by_derivative != f.ergodic_by_threshold() {
            disagreements += 1;
        }
    }
    // factorisation at the network fixed point; both sides scale like
    // z^-(M+1), and r = 1 - z^M must stay representable
    let mut worst: f64 = 0.0;
    let mut accepted = 0;
    while accepted < 1000 {
        let slot = r.random_range(0.5..2.0);
        let params = SystemParams::new(
            r.random_range(0.0001..0.5) / slot,
            slot,
            slot * r.random_range(0.001..0.9),
            r.random_range(1..=256),
        )?;
        let peers = r.random_range(0..=100);
        if solve_z(&params, peers)?.powi(peers as i32) < 1e-3 {
            continue;
        }
        let (direct, factored) = greedy_drift_factorisation(&params, peers)?;
        worst = worst.max((direct - factored).abs() / direct.abs().max(1.0));
        accepted += 1;
    }
    Ok(verdict(
        disagreements == 0 && worst <= 1e-10,
        format!("{disagreements} verdict disagreements in 2 x 1000 tuples; factorisation {worst:.2e} <= 1e-10"),
    ))
}

fn criterion_5() -> Outcome {
    let (pg, rg) = greedy_reference();
    let (pf, rf) = fair_reference();
    let mut light: f64 = 0.0;
    let mut previous = f64::INFINITY;
    let mut monotone = true;
    for e in 2..=12 {
        let lambda = 10f64.powi(-e);
        let p00 = GreedySolution::new(&pg.with_lambda(lambda)?, rg)?.p00()?;
        let q00 = FairSolution::new(&pf.with_lambda(lambda)?, rf)?.q00()?;
        let gap = (1.0 - p00).abs().max((1.0 - q00).abs());
        monotone &= gap < previous;
        previous = gap;
        light = gap;
    }
    let bare = SystemParams {
        mini_slot: 0.0,
        ..pg
    };
    let bare_p00 = GreedySolution::new(&bare, BusyProb::IDLE)?.p00()?;
    let mut threshold: f64 = 0.0;
    for r in [0.0, 1e-14] {
        let t = GreedySolution::new(&pg, BusyProb::new(r)?)?.lambda_threshold();
        let want = 1.0 / (pg.slot + pg.window as f64 * pg.mini_slot / 2.0);
        threshold = threshold.max((t - want).abs() / want);
    }
    Ok(verdict(
        monotone && light <= 1e-10 && bare_p00 == 1.0 && threshold <= 1e-12,
        format!(
            "1 - p00, 1 - q00 at lambda = 1e-12: {light:.1e} (monotone {monotone}); p00 at r = sigma = 0: {bare_p00}; threshold {threshold:.1e} <= 1e-12"
        ),
    ))
}

fn criterion_6() -> Outcome {
    let params = SystemParams::new(0.05, 1.0, 0.05, 31)?;
    // every small window, each power of two with its neighbours, and a
    // random spread over the rest
    let mut r = rng(4);
    let mut windows: Vec<u32> = (1..=64).collect();
    windows.extend((7..=10).flat_map(|k| [(1u32 << k) - 1, 1 << k, (1 << k) + 1]));
    windows.extend((0..32).map(|_| r.random_range(65..1024)));
    windows.retain(|&w| w <= 1024);
    windows.sort_unstable();
    windows.dedup();
    let per_m: Vec<(f64, usize)> = (0..=100u32)
        .into_par_iter()
        .map(|m| {
            let mut worst: f64 = 0.0;
            let mut bad = 0;
            let z = solve_z(&params, m).expect("bracketed");
            worst = worst.max(fixed_point_polynomial(&params, m, z).abs());
            if sign_changes(|z| fixed_point_polynomial(&params, m, z), 0.0, 1.0, SIGN_SCAN_POINTS) != 1 {
                bad += 1;
            }
            for &w in &windows {
                let v = solve_u_complement(w, m);
                worst = worst.max(saturation_residual(w, m, v).abs());
                if sign_changes(|v| saturation_residual(w, m, v), 0.0, 1.0, SIGN_SCAN_POINTS) != 1 {
                    bad += 1;
                }
            }
            (worst, bad)
        })
        .collect();
    let worst = per_m.iter().map(|p| p.0).fold(0.0, f64::max);
    let bad: usize = per_m.iter().map(|p| p.1).sum();
    Ok(verdict(
        worst <= 1e-12 && bad == 0,
        format!("max residual {worst:.2e} <= 1e-12 over M 0..=100 x {} windows; {bad} non-unique scans", windows.len()),
    ))
}

fn criterion_7() -> Outcome {
    let mut r = rng(2);
    let mut worst_forms: f64 = 0.0;
    let mut worst_routes: f64 = 0.0;
    let mut inversions = 0;
    for _ in 0..1000 {
        let slot = r.random_range(0.5..2.0);
        let mini = slot * r.random_range(0.001..0.99);
        let w = r.random_range(1..=1024);
        let m = r.random_range(1..=100);
        let g = lambda_max_greedy(slot, mini, w, m)?;
        let f = lambda_max_fair(slot, mini, w, m)?;
        worst_forms = worst_forms.max((g.value - g.alternate).abs() / g.value);
        worst_routes = worst_routes.max((f.value - f.alternate).abs() / f.value);
        if !(f.value < g.value) {
            inversions += 1;
        }
    }
    let load = (1..=100u32)
        .map(|m| lambda_max_greedy(1.0, 0.05, 31, m).map(|l| (m + 1) as f64 * l.value))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(verdict(
        worst_forms <= 1e-12 && worst_routes <= 1e-12 && inversions == 0 && load > 1.0,
        format!(
            "greedy forms {worst_forms:.1e}, fair routes {worst_routes:.1e} <= 1e-12; {inversions} tuples with fair >= greedy; max offered load {load:.4} > 1"
        ),
    ))
}

fn station_run(mode: ChannelMode, seed: u64, probes: &[f64]) -> Result<SimStats, broadcast_backoff::Error> {
    let (params, busy) = match mode {
        ChannelMode::Greedy => greedy_reference(),
        ChannelMode::Fair => fair_reference(),
    };
    run_station(&SimConfig::new(mode, params, busy, 10_000_000, seed).with_probes(probes))
}

fn criterion_8() -> Outcome {
    let mut lines = Vec::new();
    let mut passed = true;
    let mut slowest = Duration::ZERO;
    for mode in [ChannelMode::Greedy, ChannelMode::Fair] {
        let start = Instant::now();
        let stats = station_run(mode, SEED, &[])?;
        slowest = slowest.max(start.elapsed());
        let (params, busy) = match mode {
            ChannelMode::Greedy => greedy_reference(),
            ChannelMode::Fair => fair_reference(),
        };
        let (idle, tau, queue, cycle) = match mode {
            ChannelMode::Greedy => {
                let s = GreedySolution::new(&params, busy)?;
                let cycle = WaitTransform::new(s.clone())?.mean_cycle_length()?;
                (s.p00()?, s.tau()?, s.stationary_table(60)?.mean_queue(), cycle)
            }
            ChannelMode::Fair => {
                let s = FairSolution::new(&params, busy)?;
                (s.q00()?, s.taubar()?, s.stationary_table(60)?.mean_queue(), params.mean_channel_slot(busy))
            }
        };
        let z = [
            stats.idle_fraction.z_score(idle),
            stats.transmit_fraction.z_score(tau),
            stats.mean_queue.z_score(queue),
            stats.mean_cycle.z_score(cycle),
        ];
        passed &= z.iter().all(|&z| z <= 3.0);
        lines.push(format!("{mode} z = [{:.2}, {:.2}, {:.2}, {:.2}]", z[0], z[1], z[2], z[3]));
    }
    let (params, busy) = greedy_reference();
    let short = SimConfig::new(ChannelMode::Greedy, params, busy, 1_000_000, SEED).with_probes(&[0.5]);
    let identical = run_station(&short)? == run_station(&short)?;
    passed &= identical && slowest < Duration::from_secs(120);
    Ok(verdict(
        passed,
        format!(
            "{} (idle, tau, queue, cycle) <= 3; repeat identical {identical}; slowest run {:.1} s < 120 s",
            lines.join("; "),
            slowest.as_secs_f64()
        ),
    ))
}

fn criterion_9() -> Outcome {
    let (params, busy) = greedy_reference();
    let wait = WaitTransform::new(GreedySolution::new(&params, busy)?)?;
    let exact_one = wait.psi(0.0)? == 1.0;

    let mut r = rng(3);
    let grid: Vec<(SystemParams, BusyProb)> = (0..200)
        .map(|_| {
            let p = SystemParams::new(1.0, 1.0, r.random_range(0.01..0.5), r.random_range(1..=32)).expect("valid");
            let b = BusyProb::new(r.random_range(0.0..0.9)).expect("valid");
            let limit = GreedySolution::new(&p, b).expect("r < 1").lambda_threshold();
            (p.with_lambda(limit * r.random_range(0.01..0.95)).expect("positive"), b)
        })
        .collect();
    let smallest = grid
        .par_iter()
        .map(|(p, b)| WaitTransform::new(GreedySolution::new(p, *b)?)?.mean_wait())
        .collect::<Result<Vec<f64>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    let probes = [0.1, 0.5, 1.0];
    let stats = station_run(ChannelMode::Greedy, SEED + 1, &probes)?;
    let mut z_worst: f64 = 0.0;
    for (s, e) in &stats.wait_transform {
        z_worst = z_worst.max(e.z_score(wait.psi(*s)?));
    }

    let table = TruncatedChain::build_kernel(ChannelMode::Greedy, &params, busy, 120)?.stationary(1e-13)?.table;
    let mut table_gap: f64 = 0.0;
    for s in [0.01, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0] {
        table_gap = table_gap.max((wait.psi(s)? - wait.psi_from_table(&table, s)?).abs());
    }
    Ok(verdict(
        exact_one && smallest >= 0.0 && z_worst <= 3.0 && table_gap <= 1e-10,
        format!(
            "psi(0) == 1 {exact_one}; min mean wait on 200 points {smallest:.3e} >= 0; transform z {z_worst:.2} <= 3; table sum gap {table_gap:.1e} <= 1e-10"
        ),
    ))
}

fn criterion_10() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_broadcast-backoff");
    let mut lines = Vec::new();
    let mut passed = true;
    for command in ["tau-vs-m", "lambda-max", "optimal-w", "fair-vs-greedy"] {
        let mut outputs = Vec::new();
        let mut slowest = Duration::ZERO;
        for _ in 0..2 {
            let start = Instant::now();
            let out = Command::new(bin).args([command, "--m-min", "1", "--m-max", "100"]).output()?;
            slowest = slowest.max(start.elapsed());
            passed &= out.status.success();
            outputs.push(out.stdout);
        }
        let rows = outputs[0].split(|&b| b == b'\n').filter(|l| !l.is_empty() && l[0] != b'#').count() - 1;
        let same = outputs[0] == outputs[1];
        passed &= same && rows == 100 && slowest < Duration::from_secs(30);
        lines.push(format!("{command} {rows} rows {:.2} s identical {same}", slowest.as_secs_f64()));
    }
    Ok(verdict(passed, lines.join("; ")))
}

fn main() {
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 10] = [
        (1, "oracle equivalence, greedy", Duration::from_secs(5), criterion_1),
        (2, "oracle equivalence, fair", Duration::from_secs(5), criterion_2),
        (3, "generating-function system residuals", Duration::from_secs(1), criterion_3),
        (4, "ergodicity verdicts and factorisation", Duration::from_secs(5), criterion_4),
        (5, "limiting cases", Duration::from_secs(1), criterion_5),
        (6, "root solvers", Duration::from_secs(10), criterion_6),
        (7, "maximum-throughput formulas", Duration::from_secs(5), criterion_7),
        (8, "simulator against closed forms", Duration::from_secs(240), criterion_8),
        (9, "waiting time", Duration::from_secs(180), criterion_9),
        (10, "sweep commands", Duration::from_secs(240), criterion_10),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, summary) = match outcome {
            Ok(v) => (v.passed && elapsed < budget, v.summary),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}: {name}: {summary} [{:.2} s, budget {} s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
