//! Parameter sweeps and reports that produce CSV tables.
//!
//! Rows are computed in parallel and collected in sweep order, and floats
//! are printed in shortest round-trip form, so a table is a pure function
//! of its inputs and re-runs are byte-identical.

use std::fmt::Display;
use std::io::Write;
use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fair::FairSolution;
use crate::greedy::GreedySolution;
use crate::network::{
    greedy_operating_point, is_unimodal, lambda_max_fair, lambda_max_greedy, optimal_window,
    saturated_success_throughput, saturation_residual, solve_u_complement, success_throughput, StationCount, MAX_WINDOW,
};
use crate::params::{BusyProb, ChannelMode, SystemParams};
use crate::sim::{run_network, run_station, SimConfig, SimStats};
use crate::wait::WaitTransform;

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Window used by the network sweeps unless overridden.
pub const DEFAULT_WINDOW: u32 = 31;
/// Per-station arrival rate of the `tau`, `lambda_max` and window sweeps.
pub const SWEEP_LAMBDA: f64 = 0.05;
/// Per-station arrival rate of the fair-versus-greedy sweep.
pub const FAIR_SWEEP_LAMBDA: f64 = 0.01;
pub const DEFAULT_M_RANGE: RangeInclusive<u32> = 1..=100;
pub const DEFAULT_SEED: u64 = 2026;
/// Measured epochs of a `simulate` run unless overridden.
pub const DEFAULT_SLOTS: u64 = 1_000_000;
/// Default transform arguments of the `wait` table.
pub const DEFAULT_S_GRID: [f64; 10] = [0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0];

/// Parameters of the network sweeps with the given arrival rate.
pub fn network_defaults(lambda: f64) -> SystemParams {
    SystemParams {
        lambda,
        slot: 1.0,
        mini_slot: 0.05,
        window: DEFAULT_WINDOW,
        peers: None,
    }
}

/// Single-station parameters used by `wait` and `simulate` when nothing is
/// overridden: `(params, r)` for each mode.
pub fn station_defaults(mode: ChannelMode) -> (SystemParams, f64) {
    let (lambda, r) = match mode {
        ChannelMode::Greedy => (0.05, 0.3),
        ChannelMode::Fair => (0.04, 0.4),
    };
    (
        SystemParams {
            lambda,
            slot: 1.0,
            mini_slot: 0.05,
            window: 4,
            peers: None,
        },
        r,
    )
}

/// A sweep over station counts at fixed station parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub params: SystemParams,
    /// Swept values, read according to `convention`.
    pub range: RangeInclusive<u32>,
    pub convention: StationCount,
}

impl SweepSpec {
    pub fn new(params: SystemParams, range: RangeInclusive<u32>, convention: StationCount) -> Result<Self> {
        if range.is_empty() {
            return Err(Error::invalid("M", "empty sweep range"));
        }
        Ok(SweepSpec {
            params: params.validate()?,
            range,
            convention,
        })
    }

    fn header(&self, command: &str) -> Vec<(String, String)> {
        let p = &self.params;
        vec![
            ("version".into(), VERSION.into()),
            ("command".into(), command.into()),
            ("lambda".into(), p.lambda.to_string()),
            ("T".into(), p.slot.to_string()),
            ("sigma".into(), p.mini_slot.to_string()),
            ("W".into(), p.window.to_string()),
            ("sweep".into(), format!("M = {}..={}", self.range.start(), self.range.end())),
            ("convention".into(), convention_note(self.convention)),
        ]
    }

    fn rows<T: Send>(&self, row: impl Fn(u32) -> T + Sync) -> Vec<T> {
        let values: Vec<u32> = self.range.clone().collect();
        values.into_par_iter().map(&row).collect()
    }
}

fn convention_note(c: StationCount) -> String {
    match c {
        StationCount::Peers => "peers (M peers of a tagged station, M+1 stations)".into(),
        StationCount::Total => "total (M stations in all, M-1 peers)".into(),
    }
}

/// A CSV table with a `#`-prefixed header block.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(header: Vec<(String, String)>, columns: &[&str]) -> Self {
        CsvTable {
            header,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn note(&mut self, key: &str, value: impl Display) {
        self.header.push((key.into(), value.to_string()));
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of a column parsed as `f64`; unparsable cells become NaN.
    pub fn numeric_column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column(name)?;
        Some(self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect())
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for (key, value) in &self.header {
            writeln!(out, "# {key}: {value}")?;
        }
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("tables are ASCII")
    }
}

fn status(e: &Error) -> String {
    format!("error: {}", e.to_string().replace(',', ";"))
}

/// Greedy network fixed point `(z, r, tau)` per station count.
pub fn tau_vs_m(spec: &SweepSpec) -> Result<CsvTable> {
    let mut table = CsvTable::new(spec.header("tau-vs-m"), &["M", "stations", "z", "r", "tau", "ergodic", "status"]);
    table.rows = spec.rows(|m| {
        let stations = spec.convention.stations(m);
        let point = spec
            .convention
            .peers(m)
            .and_then(|peers| greedy_operating_point(&spec.params, peers));
        match point {
            Ok(op) => vec![
                m.to_string(),
                stations.to_string(),
                op.z.to_string(),
                op.r.get().to_string(),
                op.tau.to_string(),
                op.ergodic.to_string(),
                "ok".into(),
            ],
            Err(e) => vec![m.to_string(), stations.to_string(), String::new(), String::new(), String::new(), String::new(), status(&e)],
        }
    });
    let taus = table.numeric_column("tau").unwrap_or_default();
    let monotone = taus.windows(2).all(|w| !(w[1] > w[0]));
    table.note("diagnostic", format!("tau nonincreasing over the sweep: {}", if monotone { "yes" } else { "no" }));
    Ok(table)
}

/// Greedy maximum per-station rate and offered network load.
pub fn lambda_max_vs_m(spec: &SweepSpec) -> Result<CsvTable> {
    let mut table = CsvTable::new(
        spec.header("lambda-max"),
        &["M", "stations", "u", "u_residual", "lambda_max", "network_offered_load"],
    );
    let rows: Result<Vec<Vec<String>>> = spec
        .rows(|m| {
            let peers = spec.convention.peers(m)?;
            let stations = peers + 1;
            let lm = lambda_max_greedy(spec.params.slot, spec.params.mini_slot, spec.params.window, peers)?;
            let residual = saturation_residual(spec.params.window, peers, 1.0 - lm.u);
            Ok(vec![
                m.to_string(),
                stations.to_string(),
                lm.u.to_string(),
                residual.to_string(),
                lm.value.to_string(),
                (stations as f64 * lm.value).to_string(),
            ])
        })
        .into_iter()
        .collect();
    table.rows = rows?;
    Ok(table)
}

/// Window maximising the collision-free throughput at saturation.
pub fn optimal_w(spec: &SweepSpec) -> Result<CsvTable> {
    let mut table = CsvTable::new(
        spec.header("optimal-w"),
        &["M", "stations", "W_opt", "S_opt", "S_at_W", "unimodal"],
    );
    table.note(
        "throughput",
        "S = n tau (1-tau)^(n-1) T / (r T + (1-r) sigma); n stations; r = 1-(1-tau)^n; tau = 1-u(W) (every station at its maximum stable rate)",
    );
    table.note(
        "search",
        format!("golden section over integer W in [1; {MAX_WINDOW}] then exhaustive scan of the final bracket; ties to the smaller W"),
    );
    table.note("S_at_W", format!("throughput at the configured W = {}", spec.params.window));
    let (t, s) = (spec.params.slot, spec.params.mini_slot);
    let rows: Result<Vec<Vec<String>>> = spec
        .rows(|m| {
            let peers = spec.convention.peers(m)?;
            let (w_opt, s_opt) = optimal_window(t, s, peers);
            let scan: Vec<f64> = (1..=MAX_WINDOW).map(|w| saturated_success_throughput(t, s, w, peers)).collect();
            Ok(vec![
                m.to_string(),
                (peers + 1).to_string(),
                w_opt.to_string(),
                s_opt.to_string(),
                saturated_success_throughput(t, s, spec.params.window, peers).to_string(),
                is_unimodal(&scan).to_string(),
            ])
        })
        .into_iter()
        .collect();
    table.rows = rows?;
    Ok(table)
}

/// Maximum per-station rate in both channel models, from the same `u`.
pub fn fair_vs_greedy(spec: &SweepSpec) -> Result<CsvTable> {
    let mut table = CsvTable::new(
        spec.header("fair-vs-greedy"),
        &["M", "stations", "u", "lambda_max_greedy", "lambda_max_fair", "ratio"],
    );
    let (t, s, w) = (spec.params.slot, spec.params.mini_slot, spec.params.window);
    let rows: Result<Vec<Vec<String>>> = spec
        .rows(|m| {
            let peers = spec.convention.peers(m)?;
            let g = lambda_max_greedy(t, s, w, peers)?;
            let f = lambda_max_fair(t, s, w, peers)?;
            Ok(vec![
                m.to_string(),
                (peers + 1).to_string(),
                g.u.to_string(),
                g.value.to_string(),
                f.value.to_string(),
                (f.value / g.value).to_string(),
            ])
        })
        .into_iter()
        .collect();
    table.rows = rows?;
    Ok(table)
}

/// Virtual waiting-time transform of a greedy station on an `s` grid.
pub fn wait_table(params: &SystemParams, busy: BusyProb, s_values: &[f64]) -> Result<CsvTable> {
    let transform = WaitTransform::new(GreedySolution::new(params, busy)?)?;
    let mut table = CsvTable::new(
        vec![
            ("version".into(), VERSION.into()),
            ("command".into(), "wait".into()),
            ("lambda".into(), params.lambda.to_string()),
            ("T".into(), params.slot.to_string()),
            ("sigma".into(), params.mini_slot.to_string()),
            ("W".into(), params.window.to_string()),
            ("r".into(), busy.get().to_string()),
        ],
        &["s", "f", "v", "psi"],
    );
    table.note("mean_wait", transform.mean_wait()?);
    table.note("mean_cycle_length", transform.mean_cycle_length()?);
    for &s in s_values {
        table.rows.push(vec![
            s.to_string(),
            transform.f(s)?.to_string(),
            transform.v(s)?.to_string(),
            transform.psi(s)?.to_string(),
        ]);
    }
    Ok(table)
}

fn stats_header(cfg: &SimConfig, stations: Option<u32>) -> Vec<(String, String)> {
    let p = &cfg.params;
    let mut header = vec![
        ("version".into(), VERSION.to_string()),
        ("command".into(), "simulate".into()),
        ("mode".into(), cfg.mode.to_string()),
        ("lambda".into(), p.lambda.to_string()),
        ("T".into(), p.slot.to_string()),
        ("sigma".into(), p.mini_slot.to_string()),
        ("W".into(), p.window.to_string()),
        ("seed".into(), cfg.seed.to_string()),
        ("epochs".into(), cfg.epochs.to_string()),
        ("warmup".into(), cfg.warmup.to_string()),
        ("batches".into(), cfg.batches.to_string()),
    ];
    match stations {
        None => header.push(("r".into(), cfg.busy.get().to_string())),
        Some(n) => {
            header.push(("stations".into(), n.to_string()));
            header.push(("residual_busy".into(), cfg.busy.get().to_string()));
        }
    }
    header
}

/// Analytic counterparts of the simulated metrics of a single station.
fn station_targets(cfg: &SimConfig, stats: &SimStats, n_max: usize) -> Result<Vec<(&'static str, f64)>> {
    let (p, busy) = (&cfg.params, cfg.busy);
    let mut out = Vec::new();
    match cfg.mode {
        ChannelMode::Greedy => {
            let sol = GreedySolution::new(p, busy)?;
            let table = sol.stationary_table(n_max)?;
            let transform = WaitTransform::new(sol.clone())?;
            out.push(("idle_fraction", sol.p00()?));
            out.push(("transmit_fraction", sol.tau()?));
            out.push(("mean_queue", table.mean_queue()));
            out.push(("mean_backoff", table.mean_backoff()));
            out.push(("mean_cycle", transform.mean_cycle_length()?));
            out.push(("virtual_wait", transform.mean_wait()?));
            for (s, _) in &stats.wait_transform {
                out.push(("wait_transform", transform.psi(*s)?));
            }
        }
        ChannelMode::Fair => {
            let sol = FairSolution::new(p, busy)?;
            let table = sol.stationary_table(n_max)?;
            out.push(("idle_fraction", sol.q00()?));
            out.push(("transmit_fraction", sol.taubar()?));
            out.push(("mean_queue", table.mean_queue()));
            out.push(("mean_backoff", table.mean_backoff()));
            out.push(("mean_cycle", p.mean_channel_slot(busy)));
        }
    }
    Ok(out)
}

/// Simulates a single station (or a network of `stations`) and tabulates
/// each estimate beside its analytic value, when one exists. Analytic
/// queue moments come from a table truncated at `n_max`.
pub fn simulate_report(cfg: &SimConfig, stations: Option<u32>, n_max: usize) -> Result<(SimStats, CsvTable)> {
    let stats = match stations {
        None => run_station(cfg)?,
        Some(n) => run_network(cfg, n)?,
    };
    let mut table = CsvTable::new(stats_header(cfg, stations), &["metric", "estimate", "std_err", "analytic", "z_score"]);
    let mut estimates: Vec<(String, &crate::sim::Estimate)> = vec![
        ("idle_fraction".into(), &stats.idle_fraction),
        ("transmit_fraction".into(), &stats.transmit_fraction),
        ("mean_queue".into(), &stats.mean_queue),
        ("mean_backoff".into(), &stats.mean_backoff),
        ("mean_cycle".into(), &stats.mean_cycle),
        ("packet_wait".into(), &stats.packet_wait),
    ];
    if cfg.mode == ChannelMode::Greedy && stations.is_none() {
        estimates.push(("virtual_wait".into(), &stats.virtual_wait));
        for (s, e) in &stats.wait_transform {
            estimates.push((format!("wait_transform(s={s})"), e));
        }
    }
    let mut targets: Vec<Option<f64>> = vec![None; estimates.len()];
    match stations {
        None => {
            // analytic values only exist in the stable regime
            if let Ok(list) = station_targets(cfg, &stats, n_max) {
                let mut transforms = list.iter().filter(|t| t.0 == "wait_transform").map(|t| t.1);
                for (i, (name, _)) in estimates.iter().enumerate() {
                    targets[i] = if name.starts_with("wait_transform") {
                        transforms.next()
                    } else {
                        list.iter().find(|t| t.0 == name).map(|t| t.1)
                    };
                }
            }
        }
        Some(n) => {
            if cfg.mode == ChannelMode::Greedy && n >= 1 && cfg.busy.get() == 0.0 {
                if let Ok(op) = greedy_operating_point(&cfg.params, n - 1) {
                    targets[1] = Some(op.tau);
                    table.note("mean_field_tau", op.tau);
                    table.note("mean_field_ergodic", op.ergodic);
                    let s_model = success_throughput(op.tau, n, cfg.params.slot, cfg.params.mini_slot);
                    let total_time = stats.mean_cycle.mean * stats.epochs as f64;
                    let s_sim = stats.success_slots as f64 * cfg.params.slot / total_time;
                    table.note("success_throughput_model", s_model);
                    table.note("success_throughput_simulated", s_sim);
                }
            }
        }
    }
    for ((name, e), target) in estimates.iter().zip(&targets) {
        let (analytic, z) = match target {
            Some(t) => (t.to_string(), e.z_score(*t).to_string()),
            None => (String::new(), String::new()),
        };
        table.rows.push(vec![name.clone(), e.mean.to_string(), e.std_err.to_string(), analytic, z]);
    }
    let counters = [
        ("full_slots", stats.full_slots),
        ("mini_slots", stats.mini_slots),
        ("transmissions", stats.transmissions),
        ("success_slots", stats.success_slots),
        ("collision_slots", stats.collision_slots),
    ];
    for (name, v) in counters {
        table.rows.push(vec![name.into(), v.to_string(), "0".into(), String::new(), String::new()]);
    }
    table.note("drift_warning", stats.drift_warning);
    Ok((stats, table))
}

/// Residual of the saturation equation at the solved root, for reporting.
pub fn saturation_root_residual(window: u32, peers: u32) -> f64 {
    saturation_residual(window, peers, solve_u_complement(window, peers))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(lambda: f64, range: RangeInclusive<u32>) -> SweepSpec {
        SweepSpec::new(network_defaults(lambda), range, StationCount::Peers).unwrap()
    }

    #[test]
    fn lonely_row_matches_single_station() {
        let t = tau_vs_m(&spec(SWEEP_LAMBDA, 0..=2)).unwrap();
        assert_eq!(t.rows[0][3], "0");
        let alone = GreedySolution::new(&network_defaults(SWEEP_LAMBDA), BusyProb::IDLE)
            .unwrap()
            .tau()
            .unwrap();
        assert_eq!(t.rows[0][4], alone.to_string());
    }

    #[test]
    fn tables_are_deterministic() {
        let s = spec(SWEEP_LAMBDA, 1..=20);
        assert_eq!(tau_vs_m(&s).unwrap().to_csv_string(), tau_vs_m(&s).unwrap().to_csv_string());
        assert_eq!(optimal_w(&s).unwrap().to_csv_string(), optimal_w(&s).unwrap().to_csv_string());
    }

    #[test]
    fn failed_rows_are_flagged() {
        let s = SweepSpec::new(network_defaults(SWEEP_LAMBDA), 0..=1, StationCount::Total).unwrap();
        let t = tau_vs_m(&s).unwrap();
        assert!(t.rows[0][6].starts_with("error"));
        assert_eq!(t.rows[1][6], "ok");
    }

    #[test]
    fn csv_layout() {
        let t = fair_vs_greedy(&spec(FAIR_SWEEP_LAMBDA, 1..=3)).unwrap();
        let text = t.to_csv_string();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# version: "));
        let columns = lines.iter().position(|l| !l.starts_with('#')).unwrap();
        assert_eq!(lines[columns], "M,stations,u,lambda_max_greedy,lambda_max_fair,ratio");
        assert_eq!(lines.len() - columns - 1, 3);
    }

    #[test]
    fn rejects_empty_range() {
        #[allow(clippy::reversed_empty_ranges)]
        let r = 5..=1;
        assert!(SweepSpec::new(network_defaults(0.05), r, StationCount::Peers).is_err());
    }
}
