use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::station::{apply, StationState};
use super::{empty_stats, rng, stream, ArrivalSampler, Collector, SimConfig, SimStats};
use crate::error::{Error, Result};
use crate::params::ChannelMode;

struct Node {
    state: StationState,
    queue: VecDeque<f64>,
    arrivals: ChaCha8Rng,
    backoff: ChaCha8Rng,
    offsets: ChaCha8Rng,
}

/// `stations` coupled stations sharing one channel.
///
/// The slot is full iff some station contends (counter at zero with a
/// packet) or the residual busy draw fires. Greedy contenders always
/// transmit. A fair contender transmits only if it perceives a full slot,
/// that is another station contends or the residual draw fires; a lone
/// contender sees an idle channel and backs off again while the others
/// freeze.
pub fn run_network(cfg: &SimConfig, stations: u32) -> Result<SimStats> {
    simulate(cfg, stations, None)
}

/// [`run_network`] that also writes one CSV line per epoch:
/// `epoch,slot,k0,n0,k1,n1,...`.
pub fn run_network_traced(cfg: &SimConfig, stations: u32, trace: &mut dyn Write) -> Result<SimStats> {
    simulate(cfg, stations, Some(trace))
}

fn simulate(cfg: &SimConfig, stations: u32, mut trace: Option<&mut dyn Write>) -> Result<SimStats> {
    let batch_len = cfg.check()?;
    let minimum = match cfg.mode {
        ChannelMode::Greedy => 1,
        ChannelMode::Fair => 2,
    };
    if stations < minimum {
        return Err(Error::invalid("M", format!("a {} network needs at least {minimum} stations", cfg.mode)));
    }
    let params = cfg.params;
    let window = params.window;
    let residual = cfg.busy.get();
    let sampler = ArrivalSampler::new(&params)?;
    let mut slot_rng = rng(cfg.seed, stream::SLOT);
    let mut nodes: Vec<Node> = (0..stations as u64)
        .map(|i| {
            let base = stream::STATION_BASE + 4 * i;
            Node {
                state: StationState::default(),
                queue: VecDeque::new(),
                arrivals: rng(cfg.seed, base),
                backoff: rng(cfg.seed, base + 1),
                offsets: rng(cfg.seed, base + 2),
            }
        })
        .collect();

    let mut stats = empty_stats(cfg, stations);
    let mut collector = Collector::new(cfg.batches, batch_len, &[]);
    let total = cfg.warmup + collector.measured();
    let mut offsets = Vec::new();

    if let Some(out) = trace.as_mut() {
        write!(out, "epoch,slot")?;
        for i in 0..stations {
            write!(out, ",k{i},n{i}")?;
        }
        writeln!(out)?;
    }

    for epoch in 0..total {
        let measuring = epoch >= cfg.warmup;
        let measured_epoch = epoch.wrapping_sub(cfg.warmup);
        let contenders = nodes.iter().filter(|n| n.state.is_contending()).count();
        if measuring {
            let acc = collector.batch(measured_epoch).expect("epoch inside the measured range");
            acc.epochs += 1.0;
            for node in &nodes {
                let s = node.state;
                acc.samples += 1.0;
                acc.queue += s.n as f64;
                acc.backoff += s.k as f64;
                if s.n == 0 {
                    acc.idle += 1.0;
                } else if s.k == 0 {
                    acc.transmit += 1.0;
                }
            }
            if let Some(h) = stats.histogram.as_mut() {
                if measured_epoch % h.stride == 0 {
                    h.record(nodes[0].state.k, nodes[0].state.n);
                }
            }
        }

        let residual_draw = residual > 0.0 && slot_rng.random_bool(residual);
        let full = residual_draw || contenders >= 1;
        // whether a contender perceives a full slot
        let contender_sees_full = match cfg.mode {
            ChannelMode::Greedy => true,
            ChannelMode::Fair => residual_draw || contenders >= 2,
        };
        let length = if full { params.slot } else { params.mini_slot };
        let mut transmitters = 0u64;

        for node in &mut nodes {
            let start = node.state.clock;
            let transmit = node.state.is_contending() && contender_sees_full;
            let count = sampler.sample(length, &mut node.arrivals);
            if transmit {
                let head = node.queue.pop_front().expect("contender holds a packet");
                transmitters += 1;
                if measuring {
                    let acc = collector.batch(measured_epoch).expect("epoch inside the measured range");
                    acc.packets += 1.0;
                    acc.packet_wait += start - head;
                }
            }
            let rng = &mut node.backoff;
            apply(&mut node.state, full, transmit, count, &mut || rng.random_range(0..=window));
            node.state.clock += length;
            if count > 0 {
                offsets.clear();
                offsets.extend((0..count).map(|_| start + length * node.offsets.random::<f64>()));
                offsets.sort_by(f64::total_cmp);
                node.queue.extend(offsets.iter().copied());
            }
        }

        if let Some(out) = trace.as_mut() {
            write!(out, "{epoch},{}", if full { "T" } else { "sigma" })?;
            for node in &nodes {
                write!(out, ",{},{}", node.state.k, node.state.n)?;
            }
            writeln!(out)?;
        }

        if measuring {
            let acc = collector.batch(measured_epoch).expect("epoch inside the measured range");
            acc.time += length;
            if full {
                stats.full_slots += 1;
            } else {
                stats.mini_slots += 1;
            }
            stats.transmissions += transmitters;
            match transmitters {
                0 => {}
                1 => stats.success_slots += 1,
                _ => stats.collision_slots += 1,
            }
        }
    }
    stats.epochs = collector.measured();
    collector.finish(&mut stats, false);
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{BusyProb, SystemParams};

    fn cfg(mode: ChannelMode, lambda: f64) -> SimConfig {
        SimConfig::new(mode, SystemParams::new(lambda, 1.0, 0.05, 31).unwrap(), BusyProb::IDLE, 64_000, 11)
            .with_warmup(1000)
    }

    #[test]
    fn slot_accounting() {
        let st = run_network(&cfg(ChannelMode::Greedy, 0.02), 5).unwrap();
        assert_eq!(st.full_slots + st.mini_slots, st.epochs);
        assert!(st.success_slots + st.collision_slots <= st.full_slots);
        assert!(st.transmissions >= st.success_slots + 2 * st.collision_slots);
        assert!(st.transmissions > 0);
    }

    #[test]
    fn fair_needs_two_stations() {
        assert!(run_network(&cfg(ChannelMode::Fair, 0.01), 1).is_err());
        let st = run_network(&cfg(ChannelMode::Fair, 0.01), 4).unwrap();
        assert_eq!(st.success_slots, 0);
        assert!(st.collision_slots > 0 && st.collision_slots < st.full_slots);
    }

    #[test]
    fn trace_has_one_line_per_epoch() {
        let c = cfg(ChannelMode::Greedy, 0.02).with_warmup(0).with_batches(2);
        let c = SimConfig { epochs: 10, ..c };
        let mut buf = Vec::new();
        let st = run_network_traced(&c, 3, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 11);
        assert!(text.starts_with("epoch,slot,k0,n0,k1,n1,k2,n2\n"));
        assert_eq!(st, run_network(&c, 3).unwrap());
    }
}
