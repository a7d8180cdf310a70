//! Seeded Monte-Carlo of the embedded `(K, N)` chain.
//!
//! Every source of randomness has its own ChaCha stream derived from the
//! seed, so changing how often one kind of draw is made does not perturb
//! the others.

mod network;
mod station;
mod stats;

pub use network::{run_network, run_network_traced};
pub use station::{probe_wait, run_station, step_fair, step_greedy, StationState, Transition};
pub use stats::{Estimate, GoodnessOfFit, Histogram, SimStats};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::params::{BusyProb, ChannelMode, SystemParams};

pub const DEFAULT_WARMUP: u64 = 100_000;
pub const DEFAULT_BATCHES: usize = 32;

/// Histogram sampling: every `stride`-th epoch, queues up to `n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistogramSpec {
    pub n_max: usize,
    pub stride: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub mode: ChannelMode,
    pub params: SystemParams,
    /// Exogenous busy probability for a single station; residual busy
    /// probability on top of the stations' own traffic for a network.
    pub busy: BusyProb,
    pub epochs: u64,
    pub warmup: u64,
    pub batches: usize,
    pub seed: u64,
    /// Arguments `s` at which `E[exp(-s W)]` of the virtual wait is estimated.
    pub probes: Vec<f64>,
    pub histogram: Option<HistogramSpec>,
}

impl SimConfig {
    pub fn new(mode: ChannelMode, params: SystemParams, busy: BusyProb, epochs: u64, seed: u64) -> Self {
        SimConfig {
            mode,
            params,
            busy,
            epochs,
            warmup: DEFAULT_WARMUP,
            batches: DEFAULT_BATCHES,
            seed,
            probes: Vec::new(),
            histogram: None,
        }
    }

    pub fn with_warmup(mut self, warmup: u64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn with_batches(mut self, batches: usize) -> Self {
        self.batches = batches;
        self
    }

    pub fn with_probes(mut self, probes: &[f64]) -> Self {
        self.probes = probes.to_vec();
        self
    }

    pub fn with_histogram(mut self, n_max: usize, stride: u64) -> Self {
        self.histogram = Some(HistogramSpec { n_max, stride });
        self
    }

    fn check(&self) -> Result<u64> {
        if self.batches < 2 {
            return Err(Error::invalid("batches", "batch means need at least two batches"));
        }
        if self.epochs < self.batches as u64 {
            return Err(Error::invalid("slots", "fewer epochs than batches"));
        }
        // a silent source (lambda = 0) is a valid simulation input
        if !(self.params.lambda >= 0.0 && self.params.lambda.is_finite()) {
            return Err(Error::invalid("lambda", "must be finite and >= 0"));
        }
        SystemParams {
            lambda: 1.0,
            ..self.params
        }
        .validate()?;
        if self.probes.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::invalid("probes", "transform arguments must be finite and >= 0"));
        }
        Ok(self.epochs / self.batches as u64)
    }
}

/// Stream identifiers under one seed.
pub mod stream {
    pub const SLOT: u64 = 0;
    pub const ARRIVALS: u64 = 1;
    pub const BACKOFF: u64 = 2;
    pub const PROBE: u64 = 3;
    pub const OFFSETS: u64 = 4;
    /// Per-station streams in a network start here, four per station.
    pub const STATION_BASE: u64 = 16;
}

/// Generator for one [`stream`] of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    rng(seed, stream)
}

pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Poisson arrival counts for the two slot lengths.
#[derive(Debug, Clone)]
pub(crate) struct ArrivalSampler {
    slot: Option<Poisson<f64>>,
    mini: Option<Poisson<f64>>,
    slot_len: f64,
}

impl ArrivalSampler {
    pub(crate) fn new(params: &SystemParams) -> Result<Self> {
        let make = |mean: f64| -> Result<Option<Poisson<f64>>> {
            if mean == 0.0 {
                Ok(None)
            } else {
                Poisson::new(mean)
                    .map(Some)
                    .map_err(|e| Error::invalid("lambda", format!("Poisson mean {mean}: {e}")))
            }
        };
        Ok(ArrivalSampler {
            slot: make(params.lambda * params.slot)?,
            mini: make(params.lambda * params.mini_slot)?,
            slot_len: params.slot,
        })
    }

    /// Arrivals during a slot of length `len`, which must be `T` or `sigma`.
    pub(crate) fn sample<R: rand::Rng>(&self, len: f64, rng: &mut R) -> u64 {
        let dist = if len == self.slot_len { &self.slot } else { &self.mini };
        dist.as_ref().map_or(0, |d| d.sample(rng) as u64)
    }
}

/// Per-batch sums.
#[derive(Debug, Clone, Default)]
pub(crate) struct BatchAcc {
    pub samples: f64,
    pub idle: f64,
    pub transmit: f64,
    pub queue: f64,
    pub backoff: f64,
    pub epochs: f64,
    pub time: f64,
    pub packet_wait: f64,
    pub packets: f64,
    pub virtual_wait: f64,
    pub transform: Vec<f64>,
}

pub(crate) struct Collector {
    batches: Vec<BatchAcc>,
    batch_len: u64,
    probes: Vec<f64>,
}

impl Collector {
    pub(crate) fn new(count: usize, batch_len: u64, probes: &[f64]) -> Self {
        let acc = BatchAcc {
            transform: vec![0.0; probes.len()],
            ..BatchAcc::default()
        };
        Collector {
            batches: vec![acc; count],
            batch_len,
            probes: probes.to_vec(),
        }
    }

    pub(crate) fn batch(&mut self, epoch: u64) -> Option<&mut BatchAcc> {
        self.batches.get_mut((epoch / self.batch_len) as usize)
    }

    pub(crate) fn measured(&self) -> u64 {
        self.batch_len * self.batches.len() as u64
    }

    fn estimate(&self, value: impl Fn(&BatchAcc) -> f64, weight: impl Fn(&BatchAcc) -> f64) -> Estimate {
        Estimate::from_batches(
            self.batches
                .iter()
                .filter(|b| weight(b) > 0.0)
                .map(|b| value(b) / weight(b))
                .collect(),
        )
    }

    pub(crate) fn finish(&self, stats: &mut SimStats, virtual_wait: bool) {
        stats.idle_fraction = self.estimate(|b| b.idle, |b| b.samples);
        stats.transmit_fraction = self.estimate(|b| b.transmit, |b| b.samples);
        stats.mean_queue = self.estimate(|b| b.queue, |b| b.samples);
        stats.mean_backoff = self.estimate(|b| b.backoff, |b| b.samples);
        stats.mean_cycle = self.estimate(|b| b.time, |b| b.epochs);
        stats.packet_wait = self.estimate(|b| b.packet_wait, |b| b.packets);
        if virtual_wait {
            stats.virtual_wait = self.estimate(|b| b.virtual_wait, |b| b.samples);
            stats.wait_transform = self
                .probes
                .iter()
                .enumerate()
                .map(|(i, &s)| (s, self.estimate(|b| b.transform[i], |b| b.samples)))
                .collect();
        }
        stats.drift_warning = stats.mean_queue.trend_t() > DRIFT_T;
    }
}

/// Trend t statistic above which a run is flagged as drifting.
pub const DRIFT_T: f64 = 5.0;

pub(crate) fn empty_stats(cfg: &SimConfig, stations: u32) -> SimStats {
    SimStats {
        mode: cfg.mode,
        seeds: vec![cfg.seed],
        stations,
        epochs: 0,
        warmup: cfg.warmup,
        idle_fraction: Estimate::default(),
        transmit_fraction: Estimate::default(),
        mean_queue: Estimate::default(),
        mean_backoff: Estimate::default(),
        mean_cycle: Estimate::default(),
        packet_wait: Estimate::default(),
        virtual_wait: Estimate::default(),
        wait_transform: Vec::new(),
        full_slots: 0,
        mini_slots: 0,
        transmissions: 0,
        success_slots: 0,
        collision_slots: 0,
        histogram: cfg
            .histogram
            .map(|h| Histogram::new(cfg.params.window, h.n_max, h.stride)),
        drift_warning: false,
    }
}
