use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use broadcast_backoff::error::{EXIT_BAD_INPUT, EXIT_VALIDATION};
use broadcast_backoff::experiments::{self, CsvTable, SweepSpec};
use broadcast_backoff::oracle::DEFAULT_N_MAX;
use broadcast_backoff::sim::{run_network_traced, SimConfig};
use broadcast_backoff::validation::{self, Level};
use broadcast_backoff::{BusyProb, ChannelMode, Error, RunConfig, StationCount, SystemParams};

/// Steady state, stability and waiting time of buffered broadcast back-off.
#[derive(Parser, Debug)]
#[command(name = "broadcast-backoff", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Configuration file of `key = value` lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// greedy or fair.
    #[arg(long, global = true)]
    mode: Option<ChannelMode>,
    /// How a station count M is read: `peers` (M+1 stations) or `total`.
    #[arg(long, global = true, default_value = "peers")]
    convention: StationCount,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long = "T", alias = "slot", global = true)]
    slot: Option<f64>,
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long = "W", alias = "window", global = true)]
    window: Option<u32>,
    #[arg(long = "M", alias = "peers", global = true)]
    peers: Option<u32>,
    /// Exogenous busy probability (residual busy probability for networks).
    #[arg(long, global = true)]
    r: Option<f64>,
    /// Measured epochs of a simulation.
    #[arg(long, global = true)]
    slots: Option<u64>,
    #[arg(long = "n-max", global = true)]
    n_max: Option<usize>,
}

#[derive(Args, Debug)]
struct Range {
    #[arg(long, default_value_t = *experiments::DEFAULT_M_RANGE.start())]
    m_min: u32,
    #[arg(long, default_value_t = *experiments::DEFAULT_M_RANGE.end())]
    m_max: u32,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Greedy network fixed point per station count.
    TauVsM(Range),
    /// Greedy maximum per-station rate and offered load.
    LambdaMax(Range),
    /// Window maximising the collision-free throughput.
    OptimalW(Range),
    /// Maximum rate of the fair and greedy models.
    FairVsGreedy(Range),
    /// Waiting-time transform of a greedy station.
    Wait {
        /// Comma-separated transform arguments.
        #[arg(long, value_delimiter = ',')]
        s: Vec<f64>,
    },
    /// Monte-Carlo run of a station, or of a network with --stations.
    Simulate {
        #[arg(long)]
        stations: Option<u32>,
        /// Comma-separated transform arguments to estimate.
        #[arg(long, value_delimiter = ',', default_values_t = validation::PROBE_POINTS)]
        probe: Vec<f64>,
        #[arg(long)]
        warmup: Option<u64>,
        /// Per-epoch state dump of a network run.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Cross-checks between closed forms, truncated chain and simulator.
    Validate {
        #[arg(long, default_value = "fast")]
        level: Level,
        /// Restrict to these check identifiers.
        #[arg(long = "check")]
        checks: Vec<String>,
    },
}

enum Failure {
    Model(Error),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Model(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(EXIT_VALIDATION as u8),
        Err(Failure::Model(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// File values, then flags, then the command's defaults for anything unset.
fn resolve(global: &Global, defaults: &SystemParams, default_r: Option<f64>) -> Result<RunConfig, Error> {
    let file = match &global.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config { line: 0, reason: format!("{}: {e}", path.display()) })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    let flags = RunConfig {
        lambda: global.lambda,
        slot: global.slot,
        mini_slot: global.sigma,
        window: global.window,
        peers: global.peers,
        r: global.r,
        mode: global.mode,
        seed: global.seed,
        slots: global.slots,
        n_max: global.n_max,
    };
    let mut cfg = file.overridden_by(&flags).with_defaults(defaults);
    if cfg.r.is_none() {
        cfg.r = default_r;
    }
    Ok(cfg)
}

fn output(global: &Global) -> Result<Box<dyn Write>, Error> {
    Ok(match &global.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(global: &Global, mut table: CsvTable, cfg: &RunConfig) -> Result<(), Failure> {
    if let Some(seed) = cfg.seed {
        table.header.push(("seed".into(), seed.to_string()));
    }
    let mut out = output(global)?;
    table.write(&mut out)?;
    out.flush()?;
    Ok(())
}

fn sweep(global: &Global, range: &Range, lambda: f64) -> Result<(SweepSpec, RunConfig), Failure> {
    let cfg = resolve(global, &experiments::network_defaults(lambda), None)?;
    if cfg.mode == Some(ChannelMode::Fair) {
        return Err(Error::invalid("mode", "this sweep models the greedy network; see fair-vs-greedy").into());
    }
    let params = SystemParams { peers: None, ..cfg.params()? };
    let spec = SweepSpec::new(params, range.m_min..=range.m_max, global.convention)?;
    Ok((spec, cfg))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::TauVsM(range) => {
            let (spec, cfg) = sweep(g, range, experiments::SWEEP_LAMBDA)?;
            emit(g, experiments::tau_vs_m(&spec)?, &cfg)
        }
        Command::LambdaMax(range) => {
            let (spec, cfg) = sweep(g, range, experiments::SWEEP_LAMBDA)?;
            emit(g, experiments::lambda_max_vs_m(&spec)?, &cfg)
        }
        Command::OptimalW(range) => {
            let (spec, cfg) = sweep(g, range, experiments::SWEEP_LAMBDA)?;
            emit(g, experiments::optimal_w(&spec)?, &cfg)
        }
        Command::FairVsGreedy(range) => {
            let cfg = resolve(g, &experiments::network_defaults(experiments::FAIR_SWEEP_LAMBDA), None)?;
            let params = SystemParams { peers: None, ..cfg.params()? };
            let spec = SweepSpec::new(params, range.m_min..=range.m_max, g.convention)?;
            emit(g, experiments::fair_vs_greedy(&spec)?, &cfg)
        }
        Command::Wait { s } => {
            let (defaults, r) = experiments::station_defaults(ChannelMode::Greedy);
            let cfg = resolve(g, &defaults, Some(r))?;
            if cfg.mode == Some(ChannelMode::Fair) {
                return Err(Error::invalid("mode", "the waiting-time transform is derived for greedy stations").into());
            }
            let grid = if s.is_empty() { experiments::DEFAULT_S_GRID.to_vec() } else { s.clone() };
            let busy = BusyProb::new(cfg.r.expect("defaulted"))?;
            emit(g, experiments::wait_table(&cfg.params()?, busy, &grid)?, &cfg)
        }
        Command::Simulate {
            stations,
            probe,
            warmup,
            trace,
        } => {
            let mode = g.mode.unwrap_or(ChannelMode::Greedy);
            let (defaults, r) = experiments::station_defaults(mode);
            let mut cfg = resolve(g, &defaults, None)?;
            let mode = cfg.mode.unwrap_or(ChannelMode::Greedy);
            cfg.mode = Some(mode);
            let seed = *cfg.seed.get_or_insert(experiments::DEFAULT_SEED);
            let epochs = cfg.slots.unwrap_or(experiments::DEFAULT_SLOTS);
            let stations = match (stations, cfg.peers) {
                (Some(n), _) => Some(*n),
                (None, Some(m)) => Some(g.convention.stations(m)),
                (None, None) => None,
            };
            // a network's own traffic makes the channel busy, so its
            // residual busy probability defaults to zero
            let busy = match (cfg.r, stations) {
                (Some(r), _) => BusyProb::new(r)?,
                (None, Some(_)) => BusyProb::IDLE,
                (None, None) => BusyProb::new(r)?,
            };
            let mut params = cfg.params()?;
            params.peers = None;
            let mut sim = SimConfig::new(mode, params, busy, epochs, seed).with_probes(probe);
            if let Some(w) = warmup {
                sim = sim.with_warmup(*w);
            }
            if let (Some(path), Some(n)) = (trace, stations) {
                let mut file = BufWriter::new(File::create(path)?);
                run_network_traced(&sim, n, &mut file)?;
                file.flush()?;
            } else if trace.is_some() {
                return Err(Error::invalid("trace", "traces are written for network runs (--stations)").into());
            }
            let n_max = cfg.n_max.unwrap_or(DEFAULT_N_MAX);
            let (stats, mut table) = experiments::simulate_report(&sim, stations, n_max)?;
            table.header.push(("n_max".into(), n_max.to_string()));
            if stats.drift_warning {
                eprintln!("warning: the queue drifts upward across batches; the run may be non-ergodic");
            }
            let mut out = output(g)?;
            table.write(&mut out)?;
            out.flush()?;
            Ok(())
        }
        Command::Validate { level, checks } => {
            let report = if checks.is_empty() {
                validation::run(*level)
            } else {
                let ids: Vec<&str> = checks.iter().map(String::as_str).collect();
                validation::run_selected(*level, &ids)?
            };
            let mut out = output(g)?;
            writeln!(out, "{report}")?;
            out.flush()?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Validation)
            }
        }
    }
}
