//! Cross-checks between the closed forms, the truncated chain and the
//! simulator, each under a stable identifier.
//!
//! Identifiers are grouped by component: `PAR` parameters, `GF` the
//! slot generating functions, `GR` and `FA` the greedy and fair station,
//! `LIM` limiting cases, `NET` network fixed points, `WT` waiting time,
//! `OR` the truncated chain, `SIM` the simulator, `CLI` the experiment
//! front end. Every check is deterministic: random grids and simulations
//! use fixed seeds.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result, EXIT_BAD_INPUT, EXIT_NON_ERGODIC};
use crate::experiments::{self, SweepSpec};
use crate::fair::FairSolution;
use crate::greedy::GreedySolution;
use crate::kernel::{extract_coefficients, SlotGf};
use crate::network::{
    fair_fixed_point, fixed_point_polynomial, greedy_drift_factorisation, greedy_operating_point, lambda_max_fair,
    lambda_max_greedy, saturation_residual, solve_u_complement, solve_z, success_throughput, StationCount,
    SIGN_SCAN_POINTS,
};
use crate::oracle::{balance_residual, boundary_residual, TruncatedChain};
use crate::params::{BusyProb, ChannelMode, RunConfig, SystemParams};
use crate::roots::sign_changes;
use crate::sim::{self, run_network, run_station, SimConfig, SimStats};
use crate::table::StationaryTable;
use crate::wait::WaitTransform;

/// Seed of every random grid and simulation run by the suite.
pub const VALIDATION_SEED: u64 = 2026;

/// Greedy reference point: `(params, r)`.
pub fn greedy_reference() -> (SystemParams, BusyProb) {
    (
        SystemParams {
            lambda: 0.05,
            slot: 1.0,
            mini_slot: 0.05,
            window: 4,
            peers: None,
        },
        BusyProb::new(0.3).expect("valid"),
    )
}

/// Fair reference point: `(params, r)`.
pub fn fair_reference() -> (SystemParams, BusyProb) {
    (
        SystemParams {
            lambda: 0.04,
            slot: 1.0,
            mini_slot: 0.05,
            window: 4,
            peers: None,
        },
        BusyProb::new(0.4).expect("valid"),
    )
}

/// The 20 sample points `0.05, 0.10, ..., 0.95` plus `0.99`.
pub fn sample_points() -> Vec<f64> {
    let mut xs: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();
    xs.push(0.99);
    xs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

impl Level {
    /// Epochs of each single-station simulation.
    pub fn epochs(self) -> u64 {
        match self {
            Level::Fast => 1_000_000,
            Level::Full => 10_000_000,
        }
    }
}

impl FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Level::Fast),
            "full" => Ok(Level::Full),
            other => Err(Error::invalid("level", format!("expected `fast` or `full`, got `{other}`"))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Fast => "fast",
            Level::Full => "full",
        })
    }
}

/// Result of one check: `measured` is compared with `tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: &'static str,
    pub title: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Diagnostics are reported but never fail the suite.
    pub diagnostic: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match (self.diagnostic, self.passed) {
            (true, _) => "INFO",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        write!(
            f,
            "{tag} {:<7} {}: measured {:.3e}, tolerance {:.3e} ({:.2} s)",
            self.id, self.title, self.measured, self.tolerance, self.seconds
        )?;
        if !self.detail.is_empty() {
            write!(f, " [{}]", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub level: Level,
    pub outcomes: Vec<Outcome>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed || o.diagnostic)
    }

    pub fn failures(&self) -> Vec<&Outcome> {
        self.outcomes.iter().filter(|o| !o.passed && !o.diagnostic).collect()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# validation level: {}", self.level)?;
        for o in &self.outcomes {
            writeln!(f, "{o}")?;
        }
        let failed = self.failures().len();
        write!(f, "# {} checks, {} failed", self.outcomes.len(), failed)
    }
}

/// What a check measures: `(measured, tolerance, detail)`.
type Measure = Result<(f64, f64, String)>;

struct Check {
    id: &'static str,
    title: &'static str,
    diagnostic: bool,
    run: fn(Level) -> Measure,
}

const fn check(id: &'static str, title: &'static str, run: fn(Level) -> Measure) -> Check {
    Check {
        id,
        title,
        diagnostic: false,
        run,
    }
}

const fn info(id: &'static str, title: &'static str, run: fn(Level) -> Measure) -> Check {
    Check {
        id,
        title,
        diagnostic: true,
        run,
    }
}

fn catalogue() -> Vec<Check> {
    vec![
        check("PAR-1", "validate is idempotent", par_idempotent),
        check("PAR-2", "config round trip is bit-exact", par_round_trip),
        check("GF-1", "u(x) > 1 on [0,1)", gf_u_above_one),
        check("GF-2", "geometric sum identity", gf_geom_identity),
        check("GF-3", "coefficient extraction of a known polynomial", gf_extraction),
        check("GR-1", "greedy linear system residuals", gr_system),
        check("GR-2", "greedy pre-simplification recurrence", gr_recurrence),
        check("GR-3", "greedy normalisation", gr_normalisation),
        check("GR-4", "greedy boundary identity on the extracted table", gr_boundary),
        check("GR-5", "p(0,0) nonincreasing in lambda", gr_monotone),
        check("GR-6", "greedy ergodicity forms agree on 1000 tuples", gr_ergodicity),
        check("GR-7", "greedy tau routes agree", gr_tau_routes),
        check("GR-8", "R and Q have no common zero inside the disc", gr_common_roots),
        check("FA-1", "fair linear system residuals", fa_system),
        check("FA-2", "fair pre-simplification recurrence", fa_recurrence),
        check("FA-3", "a, b, u shared bit for bit between modes", fa_shared),
        check("FA-4", "fair q(0,0) routes agree", fa_q00_routes),
        check("FA-5", "fair ergodicity forms agree on 1000 tuples", fa_ergodicity),
        check("LIM-1", "lambda -> 0 empties both stations", lim_light_load),
        check("LIM-2", "r = sigma = 0 gives p(0,0) = 1", lim_zero_overhead),
        check("LIM-3", "single-station threshold at r = 0", lim_threshold),
        check("NET-1", "fair maximum below greedy maximum", net_fair_below),
        check("NET-2", "greedy drift factorisation", net_factorisation),
        check("NET-3", "root residuals and unique brackets", net_roots),
        check("NET-4", "maximum-throughput forms agree on 1000 tuples", net_forms),
        check("NET-5", "network offered load exceeds 1 for some M", net_offered_load),
        check("NET-6", "fair fixed point is found below the maximum", net_fair_fixed_point),
        check("WT-1", "transform equals the table sum", wt_table_sum),
        check("WT-2", "transform is completely monotone on a grid", wt_monotone),
        check("WT-3", "psi(0) = 1 and psi <= 1", wt_bounded),
        check("WT-4", "mean wait >= 0 on 200 ergodic points", wt_mean_nonnegative),
        check("WT-5", "mean wait matches the moment formula", wt_mean_formula),
        check("OR-1", "truncated chain balance residual", or_balance),
        check("OR-2", "truncated chain boundary identity", or_boundary),
        check("OR-3", "counter sub-kernel shared between modes", or_shared_rows),
        check("OR-4", "closed forms match the truncated chain", or_equivalence),
        check("SIM-1", "counter never runs with an empty queue", sim_invariant),
        check("SIM-2", "histogram goodness of fit", sim_histogram),
        check("SIM-3", "mean cycle length within 3 SE", sim_cycle),
        check("SIM-4", "random streams are independent", sim_streams),
        check("SIM-5", "greedy station statistics within 3 SE", sim_greedy),
        check("SIM-6", "fair station statistics within 3 SE", sim_fair),
        check("SIM-7", "fixed seed reproduces identical statistics", sim_deterministic),
        check("SIM-8", "wait transform within 3 SE", sim_wait_transform),
        check("SIM-9", "one-station network equals a station at r = 0", sim_lonely_network),
        info("SIM-10", "network transmit rate against the mean-field tau", sim_mean_field),
        check("CLI-1", "sweep tables carry a header and are reproducible", cli_tables),
        check("CLI-2", "error exit codes", cli_exit_codes),
    ]
}

/// Identifiers of every check, in report order.
pub fn check_ids() -> Vec<&'static str> {
    catalogue().iter().map(|c| c.id).collect()
}

fn execute(c: &Check, level: Level) -> Outcome {
    let start = Instant::now();
    let (measured, tolerance, passed, detail) = match (c.run)(level) {
        Ok((m, t, d)) => (m, t, m <= t, d),
        Err(e) => (f64::NAN, f64::NAN, false, format!("error: {e}")),
    };
    Outcome {
        id: c.id,
        title: c.title,
        measured,
        tolerance,
        passed,
        diagnostic: c.diagnostic,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every check. Independent checks run in parallel; the report keeps
/// catalogue order.
pub fn run(level: Level) -> Report {
    let checks = catalogue();
    let outcomes = checks.par_iter().map(|c| execute(c, level)).collect();
    Report { level, outcomes }
}

/// Runs the checks whose identifiers are listed.
pub fn run_selected(level: Level, ids: &[&str]) -> Result<Report> {
    let checks = catalogue();
    for id in ids {
        if !checks.iter().any(|c| c.id == *id) {
            return Err(Error::invalid("check", format!("unknown check `{id}`")));
        }
    }
    let outcomes = checks
        .par_iter()
        .filter(|c| ids.contains(&c.id))
        .map(|c| execute(c, level))
        .collect();
    Ok(Report { level, outcomes })
}

fn grid_rng(salt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
    rng.set_stream(1000 + salt);
    rng
}

fn slot_exponentials(params: &SystemParams, x: f64) -> (f64, f64) {
    (
        (-params.lambda * params.slot * (1.0 - x)).exp(),
        (-params.lambda * params.mini_slot * (1.0 - x)).exp(),
    )
}

// ----- residuals of the generating-function systems -----

/// Largest residual of the three lines of the greedy linear system at `x`,
/// with the inhomogeneous term written out in full.
pub fn greedy_system_residual(sol: &GreedySolution, x: f64) -> Result<f64> {
    let p = sol.params();
    let (r, w) = (sol.busy().get(), p.window);
    let p00 = sol.p00()?;
    let f: Vec<f64> = (0..=w).map(|k| sol.fk_eval(k, x)).collect::<Result<_>>()?;
    let (et, es) = slot_exponentials(p, x);
    let n = w as f64 + 1.0;
    let c = -et / (n * x) * f[0] + p00 / n * (1.0 + (1.0 / x - r) * et - (1.0 - r) * es);
    let (a, b) = (sol.gf().eval_a(x), sol.gf().eval_b(x));
    Ok(system_residual(a, b, f[0] - p00, &f, c))
}

/// Fair counterpart of [`greedy_system_residual`].
pub fn fair_system_residual(sol: &FairSolution, x: f64) -> Result<f64> {
    let p = sol.params();
    let (r, w) = (sol.busy().get(), p.window);
    let q00 = sol.q00()?;
    let g: Vec<f64> = (0..=w).map(|k| sol.gk_eval(k, x)).collect::<Result<_>>()?;
    let (et, es) = slot_exponentials(p, x);
    let n = w as f64 + 1.0;
    let d = -g[0] / n * (r * et / x + (1.0 - r) * es) + q00 / n * (1.0 + r * (1.0 / x - 1.0) * et);
    let (a, b) = (sol.gf().eval_a(x), sol.gf().eval_b(x));
    Ok(system_residual(a, b, g[0] - q00, &g, d))
}

fn system_residual(a: f64, b: f64, excess: f64, f: &[f64], c: f64) -> f64 {
    let w = f.len() - 1;
    let mut worst = (a * f[1] - excess - c).abs();
    for k in 1..w {
        worst = worst.max((a * f[k + 1] - b * f[k] - c).abs());
    }
    worst.max((b * f[w] + c).abs())
}

/// Largest residual over `k` of the greedy recurrence obtained by summing
/// the balance equations against `x^n`, before any simplification.
/// `p01` is `p(0,1)`, read from a table.
pub fn greedy_recurrence_residual(sol: &GreedySolution, p01: f64, x: f64) -> Result<f64> {
    let p = sol.params();
    let (r, w) = (sol.busy().get(), p.window);
    let p00 = sol.p00()?;
    let f: Vec<f64> = (0..=w).map(|k| sol.fk_eval(k, x)).collect::<Result<_>>()?;
    let (et, es) = slot_exponentials(p, x);
    let (et0, es0) = slot_exponentials(p, 0.0);
    let n = w as f64 + 1.0;
    let shared = (et * (f[0] - p00) - p01 * et0 * x) / (n * x)
        + p00 / n * (r * (et - et0) + (1.0 - r) * (es - es0));
    let mut worst: f64 = 0.0;
    for k in 0..=w as usize {
        // summing from n = 1 leaves F_0 - p(0,0) on the left at k = 0
        let lhs = if k == 0 { f[0] - p00 } else { f[k] };
        let mut rhs = shared;
        if k < w as usize {
            rhs += (1.0 - r) * es * f[k + 1];
        }
        if k > 0 {
            rhs += r * et * f[k];
        }
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Fair counterpart of [`greedy_recurrence_residual`]; `q01` is `q(0,1)`.
pub fn fair_recurrence_residual(sol: &FairSolution, q01: f64, x: f64) -> Result<f64> {
    let p = sol.params();
    let (r, w) = (sol.busy().get(), p.window);
    let q00 = sol.q00()?;
    let g: Vec<f64> = (0..=w).map(|k| sol.gk_eval(k, x)).collect::<Result<_>>()?;
    let (et, es) = slot_exponentials(p, x);
    let (et0, es0) = slot_exponentials(p, 0.0);
    let n = w as f64 + 1.0;
    let shared = r / (n * x) * (et * (g[0] - q00) - q01 * et0 * x)
        + (1.0 - r) / n * (es * g[0] - q00 * es0)
        + r * q00 * (et - et0) / n;
    let mut worst: f64 = 0.0;
    for k in 0..=w as usize {
        let mut rhs = shared;
        if k == 0 {
            rhs += q00;
        }
        if k < w as usize {
            rhs += (1.0 - r) * es * g[k + 1];
        }
        if k > 0 {
            rhs += r * et * g[k];
        }
        worst = worst.max((g[k] - rhs).abs());
    }
    Ok(worst)
}

fn max_over<F: Fn(f64) -> Result<f64>>(xs: &[f64], f: F) -> Result<f64> {
    xs.iter().try_fold(0.0f64, |acc, &x| Ok(acc.max(f(x)?)))
}

fn references_greedy() -> Result<GreedySolution> {
    let (p, r) = greedy_reference();
    GreedySolution::new(&p, r)
}

fn references_fair() -> Result<FairSolution> {
    let (p, r) = fair_reference();
    FairSolution::new(&p, r)
}

/// A second greedy and fair point with a wider window and heavier load.
fn alternates() -> Result<(GreedySolution, FairSolution)> {
    let p = SystemParams::new(0.02, 1.0, 0.1, 15)?;
    Ok((
        GreedySolution::new(&p, BusyProb::new(0.5)?)?,
        FairSolution::new(&p.with_lambda(0.01)?, BusyProb::new(0.6)?)?,
    ))
}

// ----- PAR -----

fn random_params(rng: &mut ChaCha8Rng) -> SystemParams {
    let slot = rng.random_range(0.5..2.0);
    SystemParams {
        lambda: rng.random_range(0.001..0.5),
        slot,
        mini_slot: slot * rng.random_range(0.01..0.9),
        window: rng.random_range(1..=64),
        peers: None,
    }
}

fn par_idempotent(_: Level) -> Measure {
    let mut rng = grid_rng(1);
    let mut failures = 0;
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let once = p.validate()?;
        if once.validate()? != once {
            failures += 1;
        }
    }
    Ok((failures as f64, 0.0, "1000 random tuples".into()))
}

fn par_round_trip(_: Level) -> Measure {
    let mut rng = grid_rng(2);
    let mut failures = 0;
    for _ in 0..1000 {
        // 15 significant digits
        let decimal = |rng: &mut ChaCha8Rng| -> f64 {
            let mantissa: u64 = rng.random_range(100_000_000_000_000..1_000_000_000_000_000);
            let exponent: i32 = rng.random_range(-20..0);
            format!("{mantissa}e{exponent}").parse().expect("decimal literal")
        };
        let cfg = RunConfig {
            lambda: Some(decimal(&mut rng)),
            slot: Some(decimal(&mut rng)),
            mini_slot: Some(decimal(&mut rng)),
            window: Some(rng.random_range(1..100_000)),
            peers: Some(rng.random_range(0..1000)),
            r: Some(decimal(&mut rng)),
            mode: Some(if rng.random_bool(0.5) { ChannelMode::Greedy } else { ChannelMode::Fair }),
            seed: Some(rng.random()),
            slots: Some(rng.random()),
            n_max: Some(rng.random_range(10..10_000)),
        };
        if RunConfig::parse(&cfg.to_string())? != cfg {
            failures += 1;
        }
    }
    Ok((failures as f64, 0.0, "1000 random configurations".into()))
}

// ----- GF -----

fn gf_u_above_one(_: Level) -> Measure {
    let mut rng = grid_rng(3);
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let p = random_params(&mut rng);
        let r = BusyProb::new(rng.random_range(0.001..0.999))?;
        let gf = SlotGf::new(&p, r);
        for i in 0..100 {
            let x = i as f64 / 100.0;
            worst = worst.min(gf.eval_u(x)? - 1.0);
        }
    }
    // measured: violations; a non-positive margin is a failure
    Ok((if worst > 0.0 { 0.0 } else { 1.0 }, 0.0, format!("smallest u - 1 = {worst:e}")))
}

fn gf_geom_identity(_: Level) -> Measure {
    let mut rng = grid_rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let p = random_params(&mut rng);
        let p = SystemParams { window: p.window.min(16), ..p };
        let gf = SlotGf::new(&p, BusyProb::new(rng.random_range(0.0..0.9))?);
        for i in 0..=18 {
            let x = i as f64 * 0.05;
            let u = gf.eval_u(x)?;
            let lhs = gf.u_geom_sum(x)? * (1.0 - u);
            let rhs = 1.0 - u.powi(p.window as i32 + 1);
            worst = worst.max((lhs - rhs).abs() / rhs.abs());
        }
    }
    Ok((worst, 1e-12, "x <= 0.9, W <= 16".into()))
}

fn gf_extraction(_: Level) -> Measure {
    let coefficients = [0.3, -0.2, 0.15, 0.0, 0.05, 0.01, -0.004, 0.002];
    let poly = |x: Complex64| {
        coefficients
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    };
    let series = extract_coefficients(poly, 20, 0.9)?;
    let worst = (0..=20)
        .map(|n| (series.values[n] - coefficients.get(n).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max);
    let tolerance = series.est_error.max(1e-14);
    Ok((worst, tolerance, "degree 7 polynomial, 21 coefficients".into()))
}

// ----- GR -----

fn gr_system(_: Level) -> Measure {
    let xs = sample_points();
    let (g2, _) = alternates()?;
    let worst = max_over(&xs, |x| greedy_system_residual(&references_greedy()?, x))?
        .max(max_over(&xs, |x| greedy_system_residual(&g2, x))?);
    Ok((worst, 1e-10, "20 points, 2 parameter sets".into()))
}

fn gr_recurrence(_: Level) -> Measure {
    let xs = sample_points();
    let mut worst: f64 = 0.0;
    let (g2, _) = alternates()?;
    for sol in [references_greedy()?, g2] {
        let p01 = sol.stationary_table(10)?.get(0, 1);
        worst = worst.max(max_over(&xs, |x| greedy_recurrence_residual(&sol, p01, x))?);
    }
    Ok((worst, 1e-10, "20 points, 2 parameter sets".into()))
}

fn gr_normalisation(_: Level) -> Measure {
    let mut worst: f64 = 0.0;
    let (g2, _) = alternates()?;
    for sol in [references_greedy()?, g2] {
        let total: f64 = (0..=sol.params().window).map(|k| sol.fk_eval(k, 1.0)).sum::<Result<f64>>()?;
        worst = worst.max((total - 1.0).abs());
    }
    Ok((worst, 1e-10, String::new()))
}

fn gr_boundary(_: Level) -> Measure {
    let (p, r) = greedy_reference();
    let table = references_greedy()?.stationary_table(60)?;
    Ok((boundary_residual(ChannelMode::Greedy, &p, r, &table), 1e-12, String::new()))
}

fn gr_monotone(_: Level) -> Measure {
    let (p, r) = greedy_reference();
    let limit = GreedySolution::new(&p, r)?.lambda_threshold();
    let mut previous = f64::INFINITY;
    let mut worst_rise: f64 = 0.0;
    for i in 1..200 {
        let lambda = limit * i as f64 / 200.0;
        let p00 = GreedySolution::new(&p.with_lambda(lambda)?, r)?.p00()?;
        worst_rise = worst_rise.max(p00 - previous);
        previous = p00;
    }
    Ok((worst_rise.max(0.0), 0.0, "199 rates up to the threshold".into()))
}

fn ergodicity_disagreements(mode: ChannelMode, salt: u64) -> Result<usize> {
    let mut rng = grid_rng(salt);
    let mut disagreements = 0;
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let p = p.with_lambda(rng.random_range(0.0001..1.0) / p.slot)?;
        let r = BusyProb::new(rng.random_range(0.01..0.95))?;
        let agree = match mode {
            ChannelMode::Greedy => {
                let s = GreedySolution::new(&p, r)?;
                s.is_ergodic() == s.ergodic_by_threshold()
            }
            ChannelMode::Fair => {
                let s = FairSolution::new(&p, r)?;
                s.is_ergodic() == s.ergodic_by_threshold()
            }
        };
        if !agree {
            disagreements += 1;
        }
    }
    Ok(disagreements)
}

fn gr_ergodicity(_: Level) -> Measure {
    Ok((ergodicity_disagreements(ChannelMode::Greedy, 5)? as f64, 0.0, "lambda B < 1 against the rate threshold".into()))
}

fn gr_tau_routes(_: Level) -> Measure {
    let mut worst: f64 = 0.0;
    let (g2, _) = alternates()?;
    for sol in [references_greedy()?, g2] {
        let [a, b, c] = sol.tau_routes()?;
        worst = worst.max((a - b).abs()).max((a - c).abs());
    }
    Ok((worst, 1e-12, String::new()))
}

fn gr_common_roots(_: Level) -> Measure {
    // x R and x Q on a polar grid; near x = 1 both vanish, so that
    // neighbourhood is excluded
    let mut smallest = f64::INFINITY;
    let (g2, _) = alternates()?;
    for sol in [references_greedy()?, g2] {
        for i in 1..=100 {
            let radius = 0.999 * i as f64 / 100.0;
            for j in 0..360 {
                let x = Complex64::from_polar(radius, std::f64::consts::TAU * j as f64 / 360.0);
                if (x - 1.0).norm() < 0.05 {
                    continue;
                }
                let (r, q) = sol.eval_rq_complex(x)?;
                smallest = smallest.min((x * r).norm().max((x * q).norm()));
            }
        }
    }
    Ok((if smallest > 1e-8 { 0.0 } else { 1.0 }, 0.0, format!("min max(|xR|, |xQ|) = {smallest:.3e}")))
}

// ----- FA -----

fn fa_system(_: Level) -> Measure {
    let xs = sample_points();
    let (_, f2) = alternates()?;
    let worst = max_over(&xs, |x| fair_system_residual(&references_fair()?, x))?
        .max(max_over(&xs, |x| fair_system_residual(&f2, x))?);
    Ok((worst, 1e-10, "20 points, 2 parameter sets".into()))
}

fn fa_recurrence(_: Level) -> Measure {
    let xs = sample_points();
    let mut worst: f64 = 0.0;
    let (_, f2) = alternates()?;
    for sol in [references_fair()?, f2] {
        let q01 = sol.stationary_table(10)?.get(0, 1);
        worst = worst.max(max_over(&xs, |x| fair_recurrence_residual(&sol, q01, x))?);
    }
    Ok((worst, 1e-10, "20 points, 2 parameter sets".into()))
}

fn fa_shared(_: Level) -> Measure {
    let (p, r) = greedy_reference();
    let g = GreedySolution::new(&p, r)?;
    let f = FairSolution::new(&p, r)?;
    let mut mismatches = 0;
    for x in sample_points() {
        let same = |a: f64, b: f64| a.to_bits() == b.to_bits();
        if !(same(g.gf().eval_a(x), f.gf().eval_a(x))
            && same(g.gf().eval_b(x), f.gf().eval_b(x))
            && same(g.gf().eval_u(x)?, f.gf().eval_u(x)?))
        {
            mismatches += 1;
        }
    }
    Ok((mismatches as f64, 0.0, String::new()))
}

fn fa_q00_routes(_: Level) -> Measure {
    let mut worst: f64 = 0.0;
    let (_, f2) = alternates()?;
    for sol in [references_fair()?, f2] {
        let q = sol.q00()?;
        worst = worst
            .max((q - sol.q00_from_derivative()?).abs())
            .max((q - sol.q00_from_normalisation()?).abs())
            .max((sol.taubar()? - (sol.g0_eval(1.0)? - q)).abs());
    }
    Ok((worst, 1e-12, "closed form, derivative, normalisation, taubar".into()))
}

fn fa_ergodicity(_: Level) -> Measure {
    Ok((ergodicity_disagreements(ChannelMode::Fair, 6)? as f64, 0.0, "Rbar'(1) < 0 against the rate threshold".into()))
}

// ----- LIM -----

fn lim_light_load(_: Level) -> Measure {
    let (pg, rg) = greedy_reference();
    let (pf, rf) = fair_reference();
    let lambda = 1e-12;
    let p00 = GreedySolution::new(&pg.with_lambda(lambda)?, rg)?.p00()?;
    let q00 = FairSolution::new(&pf.with_lambda(lambda)?, rf)?.q00()?;
    Ok(((1.0 - p00).abs().max((1.0 - q00).abs()), 1e-10, format!("lambda = {lambda:e}")))
}

fn lim_zero_overhead(_: Level) -> Measure {
    let p = SystemParams {
        mini_slot: 0.0,
        ..greedy_reference().0
    };
    let p00 = GreedySolution::new(&p, BusyProb::IDLE)?.p00()?;
    Ok(((1.0 - p00).abs(), 1e-15, String::new()))
}

fn lim_threshold(_: Level) -> Measure {
    let mut rng = grid_rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let expected = 1.0 / (p.slot + p.window as f64 * p.mini_slot / 2.0);
        let got = GreedySolution::new(&p, BusyProb::IDLE)?.lambda_threshold();
        worst = worst.max((got - expected).abs() / expected);
    }
    Ok((worst, 1e-12, "relative, 1000 tuples".into()))
}

// ----- NET -----

fn network_grid(salt: u64, count: usize) -> Vec<(f64, f64, u32, u32)> {
    let mut rng = grid_rng(salt);
    (0..count)
        .map(|_| {
            let slot = rng.random_range(0.5..2.0);
            (
                slot,
                slot * rng.random_range(0.001..0.99),
                rng.random_range(1..=1024),
                rng.random_range(1..=100),
            )
        })
        .collect()
}

fn net_fair_below(_: Level) -> Measure {
    let mut violations = 0;
    for (t, s, w, m) in network_grid(8, 1000) {
        if !(lambda_max_fair(t, s, w, m)?.value < lambda_max_greedy(t, s, w, m)?.value) {
            violations += 1;
        }
    }
    Ok((violations as f64, 0.0, "1000 tuples with sigma < T".into()))
}

fn net_factorisation(_: Level) -> Measure {
    let mut rng = grid_rng(9);
    let mut worst: f64 = 0.0;
    let (mut accepted, mut skipped) = (0, 0);
    while accepted < 1000 {
        let slot = rng.random_range(0.5..2.0);
        let params = SystemParams {
            lambda: rng.random_range(0.0001..0.5) / slot,
            slot,
            mini_slot: slot * rng.random_range(0.001..0.9),
            window: rng.random_range(1..=256),
            peers: None,
        };
        let peers = rng.random_range(0..=100);
        // 1 - r = z^M is carried through r, so tiny z^M loses digits
        // to cancellation before the identity is even evaluated
        if solve_z(&params, peers)?.powi(peers as i32) < 1e-3 {
            skipped += 1;
            continue;
        }
        let (direct, factored) = greedy_drift_factorisation(&params, peers)?;
        // both sides grow like z^-(M+1); compare on that scale
        worst = worst.max((direct - factored).abs() / direct.abs().max(1.0));
        accepted += 1;
    }
    Ok((worst, 1e-10, format!("relative to max(1, |1 - lambda B|), 1000 tuples, {skipped} with 1 - r < 1e-3 skipped")))
}

fn net_roots(level: Level) -> Measure {
    let windows: Vec<u32> = match level {
        Level::Fast => (1..=1024).step_by(37).chain([1024]).collect(),
        Level::Full => (1..=1024).step_by(7).chain([1024]).collect(),
    };
    let params = experiments::network_defaults(experiments::SWEEP_LAMBDA);
    let results: Vec<Result<(f64, usize)>> = (0..=100u32)
        .into_par_iter()
        .map(|m| {
            let mut worst: f64 = 0.0;
            let mut bad_scans = 0;
            let z = solve_z(&params, m)?;
            worst = worst.max(fixed_point_polynomial(&params, m, z).abs());
            let ends = (fixed_point_polynomial(&params, m, 0.0), fixed_point_polynomial(&params, m, 1.0));
            if !(ends.0 > 0.0 && ends.1 < 0.0) || sign_changes(|z| fixed_point_polynomial(&params, m, z), 0.0, 1.0, SIGN_SCAN_POINTS) != 1 {
                bad_scans += 1;
            }
            for &w in &windows {
                let v = solve_u_complement(w, m);
                worst = worst.max(saturation_residual(w, m, v).abs());
                let ends = (saturation_residual(w, m, 0.0), saturation_residual(w, m, 1.0));
                if !(ends.0 > 0.0 && ends.1 < 0.0) || sign_changes(|v| saturation_residual(w, m, v), 0.0, 1.0, SIGN_SCAN_POINTS) != 1 {
                    bad_scans += 1;
                }
            }
            Ok((worst, bad_scans))
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for r in results {
        let (w, b) = r?;
        worst = worst.max(w);
        bad += b;
    }
    let detail = format!("M in 0..=100, {} windows, {bad} failed bracket or uniqueness scans", windows.len());
    Ok((if bad == 0 { worst } else { f64::INFINITY }, 1e-12, detail))
}

fn net_forms(_: Level) -> Measure {
    let mut worst: f64 = 0.0;
    for (t, s, w, m) in network_grid(10, 1000) {
        for lm in [lambda_max_greedy(t, s, w, m)?, lambda_max_fair(t, s, w, m)?] {
            worst = worst.max((lm.value - lm.alternate).abs() / lm.value.abs());
        }
    }
    Ok((worst, 1e-12, "relative, 1000 tuples, both models".into()))
}

fn net_offered_load(_: Level) -> Measure {
    let best = (1..=100u32)
        .map(|m| lambda_max_greedy(1.0, 0.05, 31, m).map(|lm| (m + 1) as f64 * lm.value))
        .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)))?;
    // measured: 1 when no M exceeds unit load
    Ok((if best > 1.0 { 0.0 } else { 1.0 }, 0.0, format!("largest offered load {best}")))
}

fn net_fair_fixed_point(_: Level) -> Measure {
    let mut worst: f64 = 0.0;
    for m in [1u32, 2, 5, 10, 30, 100] {
        let limit = lambda_max_fair(1.0, 0.05, 31, m)?.value;
        let params = experiments::network_defaults(0.5 * limit);
        let op = fair_fixed_point(&params, m)?;
        let r = op.r.get();
        worst = worst.max((r - 1.0 + (1.0 - op.tau).powi(m as i32)).abs());
    }
    Ok((worst, 1e-12, "half the fair maximum, six peer counts".into()))
}

// ----- WT -----

fn reference_transform() -> Result<WaitTransform> {
    WaitTransform::new(references_greedy()?)
}

fn wt_table_sum(_: Level) -> Measure {
    let (p, r) = greedy_reference();
    let wt = reference_transform()?;
    let oracle = TruncatedChain::build_kernel(ChannelMode::Greedy, &p, r, 120)?.stationary(1e-13)?;
    let mut worst: f64 = 0.0;
    for s in [0.01, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0] {
        worst = worst.max((wt.psi(s)? - wt.psi_from_table(&oracle.table, s)?).abs());
    }
    Ok((worst, 1e-10, "10 values of s, truncated chain at n <= 120".into()))
}

fn wt_monotone(_: Level) -> Measure {
    let mut violations = 0;
    let (g2, _) = alternates()?;
    for sol in [references_greedy()?, g2] {
        let wt = WaitTransform::new(sol)?;
        let s: Vec<f64> = (0..=60).map(|i| 10f64.powf(-3.0 + i as f64 / 15.0)).collect();
        let psi: Vec<f64> = s.iter().map(|&s| wt.psi(s)).collect::<Result<_>>()?;
        let slopes: Vec<f64> = (0..60).map(|i| (psi[i + 1] - psi[i]) / (s[i + 1] - s[i])).collect();
        violations += slopes.iter().filter(|&&d| d > 1e-13).count();
        violations += slopes.windows(2).filter(|d| d[1] - d[0] < -1e-9).count();
    }
    Ok((violations as f64, 0.0, "decreasing and convex on 61 log-spaced points".into()))
}

fn wt_bounded(_: Level) -> Measure {
    let wt = reference_transform()?;
    let mut violations = usize::from(wt.psi(0.0)? != 1.0);
    for i in 0..=500 {
        let s = i as f64 * 0.02;
        let v = wt.psi(s)?;
        if !(v <= 1.0 && v >= 0.0) {
            violations += 1;
        }
    }
    Ok((violations as f64, 0.0, "s in [0, 10]".into()))
}

fn ergodic_wait_grid() -> Vec<(SystemParams, BusyProb)> {
    let mut rng = grid_rng(11);
    let mut out = Vec::new();
    while out.len() < 200 {
        let p = SystemParams {
            lambda: 0.0,
            slot: 1.0,
            mini_slot: rng.random_range(0.01..0.5),
            window: rng.random_range(1..=32),
            peers: None,
        };
        let r = BusyProb::new(rng.random_range(0.0..0.9)).expect("valid");
        let limit = GreedySolution::new(&p, r).expect("r < 1").lambda_threshold();
        out.push((p.with_lambda(limit * rng.random_range(0.01..0.95)).expect("positive"), r));
    }
    out
}

fn wt_mean_nonnegative(_: Level) -> Measure {
    let worst = ergodic_wait_grid()
        .par_iter()
        .map(|(p, r)| WaitTransform::new(GreedySolution::new(p, *r)?)?.mean_wait().map(|w| -w))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((worst.max(0.0), 0.0, format!("largest -E[wait] = {worst:e}")))
}

/// Mean virtual wait from first moments: each pending decrement costs
/// `sigma + r T / (1-r)`, each queued packet `T` plus `W/2` decrements.
pub fn mean_wait_from_moments(params: &SystemParams, r: f64, table_mean_k: f64, table_mean_n: f64) -> f64 {
    let decrement = params.mini_slot + r * params.slot / (1.0 - r);
    decrement * table_mean_k + (params.slot + params.window as f64 * decrement / 2.0) * table_mean_n
}

fn wt_mean_formula(_: Level) -> Measure {
    let mut worst: f64 = 0.0;
    let (g2, _) = alternates()?;
    for sol in [references_greedy()?, g2] {
        let table = sol.stationary_table(60)?;
        let expected = mean_wait_from_moments(sol.params(), sol.busy().get(), table.mean_backoff(), table.mean_queue());
        let got = WaitTransform::new(sol)?.mean_wait()?;
        worst = worst.max((got - expected).abs() / expected);
    }
    Ok((worst, 1e-7, "relative, against table moments".into()))
}

// ----- OR -----

fn oracle_pair() -> Result<[(ChannelMode, SystemParams, BusyProb, StationaryTable); 2]> {
    let (pg, rg) = greedy_reference();
    let (pf, rf) = fair_reference();
    let g = TruncatedChain::build_kernel(ChannelMode::Greedy, &pg, rg, 60)?.stationary(1e-12)?;
    let f = TruncatedChain::build_kernel(ChannelMode::Fair, &pf, rf, 60)?.stationary(1e-12)?;
    Ok([(ChannelMode::Greedy, pg, rg, g.table), (ChannelMode::Fair, pf, rf, f.table)])
}

fn or_balance(_: Level) -> Measure {
    let mut worst: f64 = 0.0;
    for (mode, p, r, table) in oracle_pair()? {
        worst = worst.max(balance_residual(mode, &p, r, &table, table.n_max() - 20));
    }
    Ok((worst, 1e-12, "n < n_max - 20, both modes".into()))
}

fn or_boundary(_: Level) -> Measure {
    let mut worst: f64 = 0.0;
    for (mode, p, r, table) in oracle_pair()? {
        worst = worst.max(boundary_residual(mode, &p, r, &table));
    }
    Ok((worst, 1e-12, "both modes".into()))
}

fn or_shared_rows(_: Level) -> Measure {
    let (p, r) = greedy_reference();
    let g = TruncatedChain::build_kernel(ChannelMode::Greedy, &p, r, 30)?;
    let f = TruncatedChain::build_kernel(ChannelMode::Fair, &p, r, 30)?;
    let width = 31;
    let mut mismatches = 0;
    // rows of states with a running counter, and of the empty state
    for state in std::iter::once(0).chain(width..g.states()) {
        if g.row(state) != f.row(state) {
            mismatches += 1;
        }
    }
    Ok((mismatches as f64, 0.0, "rows with k >= 1 and the empty state".into()))
}

fn or_equivalence(_: Level) -> Measure {
    let [(_, _, _, g_oracle), (_, _, _, f_oracle)] = oracle_pair()?;
    let g = references_greedy()?.stationary_table(60)?;
    let f = references_fair()?.stationary_table(60)?;
    let worst = g.max_abs_diff(&g_oracle).max(f.max_abs_diff(&f_oracle));
    Ok((worst, 1e-8, "full tables, n <= 60".into()))
}

// ----- SIM -----

fn station_run(mode: ChannelMode, level: Level, salt: u64, probes: &[f64]) -> Result<SimStats> {
    let (p, r) = match mode {
        ChannelMode::Greedy => greedy_reference(),
        ChannelMode::Fair => fair_reference(),
    };
    let cfg = SimConfig::new(mode, p, r, level.epochs(), VALIDATION_SEED + salt)
        .with_probes(probes)
        .with_histogram(30, 10);
    run_station(&cfg)
}

fn sim_invariant(_: Level) -> Measure {
    // the assertion fires inside every update; surviving runs prove it held
    let (p, r) = greedy_reference();
    let cfg = SimConfig::new(ChannelMode::Greedy, p, r, 200_000, VALIDATION_SEED).with_warmup(0);
    run_station(&cfg)?;
    run_station(&SimConfig { mode: ChannelMode::Fair, ..cfg.clone() })?;
    run_network(&cfg.clone(), 5)?;
    run_network(&SimConfig { mode: ChannelMode::Fair, ..cfg }, 5)?;
    Ok((0.0, 0.0, "asserted at every epoch of 4 runs".into()))
}

fn sim_histogram(level: Level) -> Measure {
    let stats = station_run(ChannelMode::Greedy, level, 0, &[])?;
    let table = references_greedy()?.stationary_table(60)?;
    let fit = stats.histogram.as_ref().expect("histogram requested").chi_square(&table);
    Ok((
        fit.statistic,
        fit.critical_001,
        format!("{} dof, every 10th epoch", fit.dof),
    ))
}

fn sim_cycle(level: Level) -> Measure {
    let stats = station_run(ChannelMode::Greedy, level, 0, &[])?;
    let expected = reference_transform()?.mean_cycle_length()?;
    Ok((stats.mean_cycle.z_score(expected), 3.0, "z score".into()))
}

fn sim_streams(_: Level) -> Measure {
    let streams = [sim::stream::SLOT, sim::stream::ARRIVALS, sim::stream::BACKOFF, sim::stream::PROBE];
    let draws: Vec<Vec<f64>> = streams
        .iter()
        .map(|&s| {
            let mut rng = sim::substream(VALIDATION_SEED, s);
            (0..100_000).map(|_| rng.random::<f64>()).collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..draws.len() {
        for j in i + 1..draws.len() {
            worst = worst.max(correlation(&draws[i], &draws[j]).abs());
        }
    }
    // 5 standard deviations of a sample correlation of 1e5 pairs
    Ok((worst, 5.0 / (1e5f64).sqrt(), "pairwise correlation of 1e5 uniforms".into()))
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn station_z_scores(mode: ChannelMode, level: Level) -> Measure {
    let stats = station_run(mode, level, 0, &[])?;
    let (p, r) = match mode {
        ChannelMode::Greedy => greedy_reference(),
        ChannelMode::Fair => fair_reference(),
    };
    let (idle, tau, table) = match mode {
        ChannelMode::Greedy => {
            let s = references_greedy()?;
            (s.p00()?, s.tau()?, s.stationary_table(60)?)
        }
        ChannelMode::Fair => {
            let s = references_fair()?;
            (s.q00()?, s.taubar()?, s.stationary_table(60)?)
        }
    };
    let cycle = match mode {
        ChannelMode::Greedy => crate::wait::mean_cycle_length(r.get(), tau, p.slot, p.mini_slot),
        ChannelMode::Fair => p.mean_channel_slot(r),
    };
    let z = [
        ("idle", stats.idle_fraction.z_score(idle)),
        ("tau", stats.transmit_fraction.z_score(tau)),
        ("queue", stats.mean_queue.z_score(table.mean_queue())),
        ("cycle", stats.mean_cycle.z_score(cycle)),
    ];
    let worst = z.iter().map(|t| t.1).fold(0.0, f64::max);
    let detail = z.iter().map(|(n, v)| format!("{n} {v:.2}")).collect::<Vec<_>>().join("; ");
    Ok((worst, 3.0, format!("z scores: {detail}")))
}

fn sim_greedy(level: Level) -> Measure {
    station_z_scores(ChannelMode::Greedy, level)
}

fn sim_fair(level: Level) -> Measure {
    station_z_scores(ChannelMode::Fair, level)
}

fn sim_deterministic(_: Level) -> Measure {
    let (p, r) = greedy_reference();
    let cfg = SimConfig::new(ChannelMode::Greedy, p, r, 100_000, VALIDATION_SEED)
        .with_warmup(1000)
        .with_probes(&[0.5])
        .with_histogram(20, 1);
    let mut differing = usize::from(run_station(&cfg)? != run_station(&cfg)?);
    differing += usize::from(run_network(&cfg, 4)? != run_network(&cfg, 4)?);
    Ok((differing as f64, 0.0, "station and network runs repeated".into()))
}

/// Arguments at which the simulated wait transform is compared.
pub const PROBE_POINTS: [f64; 3] = [0.1, 0.5, 1.0];

fn sim_wait_transform(level: Level) -> Measure {
    let stats = station_run(ChannelMode::Greedy, level, 1, &PROBE_POINTS)?;
    let wt = reference_transform()?;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (s, e) in &stats.wait_transform {
        let z = e.z_score(wt.psi(*s)?);
        parts.push(format!("s={s}: {z:.2}"));
        worst = worst.max(z);
    }
    let z = stats.virtual_wait.z_score(wt.mean_wait()?);
    parts.push(format!("mean: {z:.2}"));
    worst = worst.max(z);
    Ok((worst, 3.0, format!("z scores: {}", parts.join("; "))))
}

fn sim_lonely_network(level: Level) -> Measure {
    let (p, _) = greedy_reference();
    let cfg = SimConfig::new(ChannelMode::Greedy, p, BusyProb::IDLE, level.epochs() / 2, VALIDATION_SEED + 2);
    let alone = run_station(&cfg)?;
    let network = run_network(&SimConfig { seed: VALIDATION_SEED + 3, ..cfg }, 1)?;
    let pairs = [
        (&alone.idle_fraction, &network.idle_fraction),
        (&alone.transmit_fraction, &network.transmit_fraction),
        (&alone.mean_queue, &network.mean_queue),
        (&alone.mean_cycle, &network.mean_cycle),
    ];
    let worst = pairs
        .iter()
        .map(|(a, b)| (a.mean - b.mean).abs() / (a.std_err.powi(2) + b.std_err.powi(2)).sqrt())
        .fold(0.0, f64::max);
    Ok((worst, 3.0, "independent seeds, pooled standard error".into()))
}

fn sim_mean_field(level: Level) -> Measure {
    let stations = 10;
    let params = experiments::network_defaults(0.1 * lambda_max_greedy(1.0, 0.05, 31, stations - 1)?.value / stations as f64);
    let op = greedy_operating_point(&params, stations - 1)?;
    let cfg = SimConfig::new(ChannelMode::Greedy, params, BusyProb::IDLE, level.epochs(), VALIDATION_SEED + 4);
    let stats = run_network(&cfg, stations)?;
    let rel = (stats.transmit_fraction.mean - op.tau).abs() / op.tau;
    let total_time = stats.mean_cycle.mean * stats.epochs as f64;
    let s_sim = stats.success_slots as f64 * params.slot / total_time;
    let s_model = success_throughput(op.tau, stations, params.slot, params.mini_slot);
    Ok((
        rel,
        0.05,
        format!("10 stations: tau {} vs {}; success throughput {s_sim:.4e} vs {s_model:.4e}", stats.transmit_fraction.mean, op.tau),
    ))
}

// ----- CLI -----

fn cli_tables(_: Level) -> Measure {
    let spec = SweepSpec::new(experiments::network_defaults(experiments::SWEEP_LAMBDA), 1..=10, StationCount::Peers)?;
    let mut problems = 0;
    let tables = [
        experiments::tau_vs_m(&spec)?,
        experiments::lambda_max_vs_m(&spec)?,
        experiments::optimal_w(&spec)?,
        experiments::fair_vs_greedy(&spec)?,
    ];
    let again = [
        experiments::tau_vs_m(&spec)?,
        experiments::lambda_max_vs_m(&spec)?,
        experiments::optimal_w(&spec)?,
        experiments::fair_vs_greedy(&spec)?,
    ];
    for (a, b) in tables.iter().zip(&again) {
        if a.to_csv_string() != b.to_csv_string() {
            problems += 1;
        }
        for key in ["version", "command", "lambda", "T", "sigma", "W", "sweep", "convention"] {
            if !a.header.iter().any(|(k, _)| k == key) {
                problems += 1;
            }
        }
    }
    Ok((problems as f64, 0.0, "four sweeps, repeated".into()))
}

fn cli_exit_codes(_: Level) -> Measure {
    let cases = [
        (Error::NonErgodic(String::new()), EXIT_NON_ERGODIC),
        (Error::invalid("lambda", ""), EXIT_BAD_INPUT),
        (Error::Config { line: 1, reason: String::new() }, EXIT_BAD_INPUT),
        (Error::Domain(String::new()), EXIT_BAD_INPUT),
    ];
    let wrong = cases.iter().filter(|(e, code)| e.exit_code() != *code).count();
    Ok((wrong as f64, 0.0, String::new()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers_are_unique() {
        let mut ids = check_ids();
        let n = ids.len();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), n);
    }

    #[test]
    fn analytic_checks_pass() {
        let ids: Vec<&str> = check_ids().into_iter().filter(|id| !id.starts_with("SIM")).collect();
        let report = run_selected(Level::Fast, &ids).unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn unknown_id_is_rejected() {
        assert!(run_selected(Level::Fast, &["XYZ-1"]).is_err());
    }
}
