use std::collections::VecDeque;

use rand::Rng;

use super::{empty_stats, rng, stream, ArrivalSampler, Collector, SimConfig, SimStats};
use crate::error::{Error, Result};
use crate::params::{ChannelMode, SystemParams};

/// Back-off counter, queue length and elapsed time of one station.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StationState {
    pub k: u32,
    pub n: u64,
    pub clock: f64,
}

impl StationState {
    pub fn is_contending(&self) -> bool {
        self.k == 0 && self.n > 0
    }
}

/// What happened during one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub full: bool,
    pub transmitted: bool,
    pub length: f64,
    pub arrivals: u64,
}

/// Queue and counter update once the slot type and the station's role are
/// known. Shared by both modes and by the network simulator.
pub(crate) fn apply(state: &mut StationState, full: bool, transmit: bool, arrivals: u64, backoff: &mut impl FnMut() -> u32) {
    if transmit {
        state.n = state.n - 1 + arrivals;
        state.k = if state.n > 0 { backoff() } else { 0 };
    } else if state.k > 0 {
        if !full {
            state.k -= 1;
        }
        state.n += arrivals;
    } else if state.n > 0 {
        // fair mode: head of line met a mini-slot
        state.n += arrivals;
        state.k = backoff();
    } else if arrivals > 0 {
        state.n = arrivals;
        state.k = backoff();
    }
    assert!(state.k == 0 || state.n > 0, "counter {} running with an empty queue", state.k);
}

fn step(
    state: &mut StationState,
    params: &SystemParams,
    full: bool,
    transmit: bool,
    arrivals: impl FnOnce(f64) -> u64,
    mut backoff: impl FnMut() -> u32,
) -> Transition {
    let length = if full { params.slot } else { params.mini_slot };
    let count = arrivals(length);
    apply(state, full, transmit, count, &mut backoff);
    state.clock += length;
    Transition {
        full,
        transmitted: transmit,
        length,
        arrivals: count,
    }
}

/// One greedy epoch. A contending station forces a full slot; otherwise
/// `busy_draw` decides the slot type. `arrivals` receives the slot length.
pub fn step_greedy(
    state: &mut StationState,
    params: &SystemParams,
    busy_draw: bool,
    arrivals: impl FnOnce(f64) -> u64,
    backoff: impl FnMut() -> u32,
) -> Transition {
    let transmit = state.is_contending();
    step(state, params, transmit || busy_draw, transmit, arrivals, backoff)
}

/// One fair epoch. The slot type is `busy_draw` whatever the state; a
/// contending station transmits only in a full slot.
pub fn step_fair(
    state: &mut StationState,
    params: &SystemParams,
    busy_draw: bool,
    arrivals: impl FnOnce(f64) -> u64,
    backoff: impl FnMut() -> u32,
) -> Transition {
    let transmit = state.is_contending() && busy_draw;
    step(state, params, busy_draw, transmit, arrivals, backoff)
}

/// Samples the wait of a packet arriving at an epoch in state `(k, n)`:
/// the remaining `k` decrements, then for each queued packet a full slot
/// and a fresh back-off. A decrement takes a geometric number of full
/// slots followed by one mini-slot.
pub fn probe_wait<R: Rng>(k: u32, n: u64, params: &SystemParams, r: f64, rng: &mut R) -> f64 {
    let mut t = 0.0;
    let countdown = |c: u32, t: &mut f64, rng: &mut R| {
        for _ in 0..c {
            while rng.random_bool(r) {
                *t += params.slot;
            }
            *t += params.mini_slot;
        }
    };
    countdown(k, &mut t, rng);
    for _ in 0..n {
        t += params.slot;
        let u = rng.random_range(0..=params.window);
        countdown(u, &mut t, rng);
    }
    t
}

/// Single station against an exogenous Bernoulli(`r`) channel.
pub fn run_station(cfg: &SimConfig) -> Result<SimStats> {
    let batch_len = cfg.check()?;
    let r = cfg.busy.get();
    if r >= 1.0 && cfg.mode == ChannelMode::Greedy {
        return Err(Error::invalid("r", "a greedy station never finishes a back-off when r = 1"));
    }
    let params = cfg.params;
    let window = params.window;
    let sampler = ArrivalSampler::new(&params)?;
    let mut slot_rng = rng(cfg.seed, stream::SLOT);
    let mut arrival_rng = rng(cfg.seed, stream::ARRIVALS);
    let mut backoff_rng = rng(cfg.seed, stream::BACKOFF);
    let mut probe_rng = rng(cfg.seed, stream::PROBE);
    let mut offset_rng = rng(cfg.seed, stream::OFFSETS);
    let probe = cfg.mode == ChannelMode::Greedy;

    let mut stats = empty_stats(cfg, 1);
    let mut collector = Collector::new(cfg.batches, batch_len, &cfg.probes);
    let total = cfg.warmup + collector.measured();
    let mut state = StationState::default();
    let mut queue: VecDeque<f64> = VecDeque::new();
    let mut offsets: Vec<f64> = Vec::new();

    for epoch in 0..total {
        let measuring = epoch >= cfg.warmup;
        let measured_epoch = epoch.wrapping_sub(cfg.warmup);
        if measuring {
            let acc = collector.batch(measured_epoch).expect("epoch inside the measured range");
            acc.samples += 1.0;
            acc.epochs += 1.0;
            acc.queue += state.n as f64;
            acc.backoff += state.k as f64;
            if state.n == 0 {
                acc.idle += 1.0;
            } else if state.k == 0 {
                acc.transmit += 1.0;
            }
            if probe {
                let w = probe_wait(state.k, state.n, &params, r, &mut probe_rng);
                acc.virtual_wait += w;
                for (slot, &s) in acc.transform.iter_mut().zip(&cfg.probes) {
                    *slot += (-s * w).exp();
                }
            }
            if let Some(h) = stats.histogram.as_mut() {
                if measured_epoch % h.stride == 0 {
                    h.record(state.k, state.n);
                }
            }
        }

        let busy_draw = slot_rng.random_bool(r);
        let start = state.clock;
        let head_wait = if state.is_contending() {
            queue.front().map(|&t| start - t)
        } else {
            None
        };
        let arrivals = |len: f64| sampler.sample(len, &mut arrival_rng);
        let backoff = || backoff_rng.random_range(0..=window);
        let tr = match cfg.mode {
            ChannelMode::Greedy => step_greedy(&mut state, &params, busy_draw, arrivals, backoff),
            ChannelMode::Fair => step_fair(&mut state, &params, busy_draw, arrivals, backoff),
        };
        if tr.transmitted {
            queue.pop_front();
        }
        if tr.arrivals > 0 {
            offsets.clear();
            offsets.extend((0..tr.arrivals).map(|_| start + tr.length * offset_rng.random::<f64>()));
            offsets.sort_by(f64::total_cmp);
            queue.extend(offsets.iter().copied());
        }
        debug_assert_eq!(queue.len() as u64, state.n);

        if measuring {
            let acc = collector.batch(measured_epoch).expect("epoch inside the measured range");
            acc.time += tr.length;
            if tr.transmitted {
                acc.packets += 1.0;
                acc.packet_wait += head_wait.expect("transmitting station has a head-of-line packet");
            }
            if tr.full {
                stats.full_slots += 1;
            } else {
                stats.mini_slots += 1;
            }
            if tr.transmitted {
                stats.transmissions += 1;
                stats.success_slots += 1;
            }
        }
    }
    stats.epochs = collector.measured();
    collector.finish(&mut stats, probe);
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::BusyProb;

    fn params() -> SystemParams {
        SystemParams::new(0.05, 1.0, 0.05, 4).unwrap()
    }

    #[test]
    fn decrement_on_mini_slot() {
        let mut s = StationState { k: 3, n: 2, clock: 0.0 };
        let tr = step_greedy(&mut s, &params(), false, |_| 0, || unreachable!());
        assert_eq!((s.k, s.n), (2, 2));
        assert_eq!(tr.length, 0.05);
        assert!(!tr.full && !tr.transmitted);
    }

    #[test]
    fn freeze_on_full_slot() {
        let mut s = StationState { k: 3, n: 2, clock: 0.0 };
        step_fair(&mut s, &params(), true, |_| 1, || unreachable!());
        assert_eq!((s.k, s.n), (3, 3));
        assert_eq!(s.clock, 1.0);
    }

    #[test]
    fn transmission_empties_queue() {
        let mut s = StationState { k: 0, n: 1, clock: 0.0 };
        let tr = step_greedy(&mut s, &params(), false, |len| {
            assert_eq!(len, 1.0);
            0
        }, || unreachable!());
        assert_eq!((s.k, s.n), (0, 0));
        assert!(tr.full && tr.transmitted);
    }

    #[test]
    fn fair_head_backs_off_on_mini_slot() {
        let mut s = StationState { k: 0, n: 1, clock: 0.0 };
        let tr = step_fair(&mut s, &params(), false, |_| 0, || 3);
        assert_eq!((s.k, s.n), (3, 1));
        assert!(!tr.transmitted);
    }

    #[test]
    fn idle_station_starts_backoff_on_arrival() {
        let mut s = StationState::default();
        step_greedy(&mut s, &params(), true, |_| 2, || 4);
        assert_eq!((s.k, s.n), (4, 2));
        let mut s = StationState::default();
        step_greedy(&mut s, &params(), false, |_| 0, || unreachable!());
        assert_eq!((s.k, s.n), (0, 0));
    }

    #[test]
    fn no_arrivals_stay_idle() {
        let p = SystemParams {
            lambda: 0.0,
            ..params()
        };
        let cfg = SimConfig::new(ChannelMode::Greedy, p, BusyProb::new(0.3).unwrap(), 10_000, 7).with_warmup(0);
        let st = run_station(&cfg).unwrap();
        assert_eq!(st.idle_fraction.mean, 1.0);
        assert_eq!(st.transmit_fraction.mean, 0.0);
        assert_eq!(st.transmissions, 0);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let cfg = SimConfig::new(ChannelMode::Fair, SystemParams::new(0.04, 1.0, 0.05, 4).unwrap(), BusyProb::new(0.4).unwrap(), 50_000, 3)
            .with_warmup(1000)
            .with_probes(&[0.5]);
        assert_eq!(run_station(&cfg).unwrap(), run_station(&cfg).unwrap());
        let other = SimConfig { seed: 4, ..cfg.clone() };
        assert_ne!(run_station(&cfg).unwrap(), run_station(&other).unwrap());
    }

    #[test]
    fn probe_wait_is_zero_when_idle() {
        let mut r = crate::sim::rng(1, 0);
        assert_eq!(probe_wait(0, 0, &params(), 0.3, &mut r), 0.0);
        assert!(probe_wait(0, 1, &params(), 0.3, &mut r) >= 1.0);
    }
}
