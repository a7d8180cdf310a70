//! Parameter model shared by every module, plus the plain-text run
//! configuration format.
//!
//! A station is described by its Poisson arrival rate `lambda`, the
//! full-slot length `T`, the mini-slot length `sigma` and the back-off
//! window `W` (the counter is drawn uniformly on `{0, ..., W}`). Network
//! computations additionally need the number `M` of peer stations.
//!
//! The configuration format is one `key = value` pair per line; blank
//! lines and everything after `#` are ignored:
//!
//! ```text
//! # tagged station in a network of 10 peers
//! lambda = 0.05
//! T = 1
//! sigma = 0.05
//! W = 31
//! M = 10
//! mode = greedy
//! seed = 7
//! ```
//!
//! Recognised keys: `lambda`, `T`, `sigma`, `W`, `M`, `r`, `mode`, `seed`,
//! `slots`, `n_max`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Station and channel parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Poisson arrival rate per unit time.
    pub lambda: f64,
    /// Length of a full (transmission) slot.
    pub slot: f64,
    /// Length of a mini-slot.
    pub mini_slot: f64,
    /// Back-off window; the counter is uniform on `{0, ..., window}`.
    pub window: u32,
    /// Number of peer stations sharing the channel with the tagged one.
    pub peers: Option<u32>,
}

/// Whether full slots are at least as long as mini-slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `T >= sigma`.
    Physical,
    /// `T < sigma`: mathematically admissible, physically meaningless.
    Academic,
}

impl SystemParams {
    /// Builds and validates a parameter set without peer count.
    pub fn new(lambda: f64, slot: f64, mini_slot: f64, window: u32) -> Result<Self> {
        SystemParams {
            lambda,
            slot,
            mini_slot,
            window,
            peers: None,
        }
        .validate()
    }

    pub fn with_peers(mut self, peers: u32) -> Self {
        self.peers = Some(peers);
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        self.lambda = lambda;
        self.validate()
    }

    /// Returns `self` unchanged when every invariant holds.
    pub fn validate(self) -> Result<Self> {
        positive("lambda", self.lambda)?;
        positive("T", self.slot)?;
        positive("sigma", self.mini_slot)?;
        if self.window < 1 {
            return Err(Error::invalid("W", "the back-off window must be at least 1"));
        }
        Ok(self)
    }

    pub fn regime(&self) -> Regime {
        if self.slot < self.mini_slot {
            Regime::Academic
        } else {
            Regime::Physical
        }
    }

    /// Peer count, or an error naming the missing key.
    pub fn require_peers(&self) -> Result<u32> {
        self.peers
            .ok_or_else(|| Error::invalid("M", "a peer count is required for network computations"))
    }

    /// Mean length of a slot sampled from the exogenous channel: `rT + (1-r)sigma`.
    pub fn mean_channel_slot(&self, r: BusyProb) -> f64 {
        let r = r.get();
        r * self.slot + (1.0 - r) * self.mini_slot
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be a positive finite number, got {v}")))
    }
}

/// How a station behaves when its back-off counter is zero and a packet waits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelMode {
    /// The station forces a full slot and transmits.
    Greedy,
    /// The station transmits only if the sampled slot is full, otherwise it
    /// redraws its back-off.
    Fair,
}

impl fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelMode::Greedy => "greedy",
            ChannelMode::Fair => "fair",
        })
    }
}

impl FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "greedy" => Ok(ChannelMode::Greedy),
            "fair" => Ok(ChannelMode::Fair),
            other => Err(Error::invalid("mode", format!("expected `greedy` or `fair`, got `{other}`"))),
        }
    }
}

/// Probability that a sampled slot is a full slot.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BusyProb(f64);

impl BusyProb {
    pub const IDLE: BusyProb = BusyProb(0.0);

    pub fn new(r: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&r) {
            Ok(BusyProb(r))
        } else {
            Err(Error::invalid("r", format!("must lie in [0, 1], got {r}")))
        }
    }

    /// Busy probability seen by a tagged station whose `peers` each
    /// transmit with probability `tau`: `1 - (1 - tau)^M`.
    pub fn from_peers(tau: f64, peers: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::invalid("tau", format!("must lie in [0, 1], got {tau}")));
        }
        BusyProb::new(1.0 - (1.0 - tau).powi(peers as i32))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Contents of a configuration file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub lambda: Option<f64>,
    pub slot: Option<f64>,
    pub mini_slot: Option<f64>,
    pub window: Option<u32>,
    pub peers: Option<u32>,
    pub r: Option<f64>,
    pub mode: Option<ChannelMode>,
    pub seed: Option<u64>,
    pub slots: Option<u64>,
    pub n_max: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|reason| Error::Config { line: line_no, reason })?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("cannot parse `{value}` as a value for `{key}`"))
        }
        let dup = |present: bool| {
            if present {
                Err(format!("key `{key}` given twice"))
            } else {
                Ok(())
            }
        };
        match key {
            "lambda" => {
                dup(self.lambda.is_some())?;
                self.lambda = Some(num(key, value)?);
            }
            "T" => {
                dup(self.slot.is_some())?;
                self.slot = Some(num(key, value)?);
            }
            "sigma" => {
                dup(self.mini_slot.is_some())?;
                self.mini_slot = Some(num(key, value)?);
            }
            "W" => {
                dup(self.window.is_some())?;
                self.window = Some(num(key, value)?);
            }
            "M" => {
                dup(self.peers.is_some())?;
                self.peers = Some(num(key, value)?);
            }
            "r" => {
                dup(self.r.is_some())?;
                self.r = Some(num(key, value)?);
            }
            "mode" => {
                dup(self.mode.is_some())?;
                self.mode = Some(value.parse().map_err(|e: Error| e.to_string())?);
            }
            "seed" => {
                dup(self.seed.is_some())?;
                self.seed = Some(num(key, value)?);
            }
            "slots" => {
                dup(self.slots.is_some())?;
                self.slots = Some(num(key, value)?);
            }
            "n_max" => {
                dup(self.n_max.is_some())?;
                self.n_max = Some(num(key, value)?);
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Values present in `other` replace those in `self`.
    pub fn overridden_by(mut self, other: &RunConfig) -> RunConfig {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(lambda, slot, mini_slot, window, peers, r, mode, seed, slots, n_max);
        self
    }

    /// Fills unset station parameters from `defaults`.
    pub fn with_defaults(self, defaults: &SystemParams) -> RunConfig {
        let base = RunConfig {
            lambda: Some(defaults.lambda),
            slot: Some(defaults.slot),
            mini_slot: Some(defaults.mini_slot),
            window: Some(defaults.window),
            peers: defaults.peers,
            ..RunConfig::default()
        };
        base.overridden_by(&self)
    }

    pub fn params(&self) -> Result<SystemParams> {
        let missing = |name| Error::invalid(name, "missing from configuration");
        SystemParams {
            lambda: self.lambda.ok_or_else(|| missing("lambda"))?,
            slot: self.slot.ok_or_else(|| missing("T"))?,
            mini_slot: self.mini_slot.ok_or_else(|| missing("sigma"))?,
            window: self.window.ok_or_else(|| missing("W"))?,
            peers: self.peers,
        }
        .validate()
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        macro_rules! line {
            ($key:expr, $v:expr) => {
                if let Some(v) = &$v {
                    writeln!(f, "{} = {}", $key, v)?;
                }
            };
        }
        line!("lambda", self.lambda);
        line!("T", self.slot);
        line!("sigma", self.mini_slot);
        line!("W", self.window);
        line!("M", self.peers);
        line!("r", self.r);
        line!("mode", self.mode);
        line!("seed", self.seed);
        line!("slots", self.slots);
        line!("n_max", self.n_max);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accepts_network_defaults() {
        let p = SystemParams::new(0.05, 1.0, 0.05, 31).unwrap().with_peers(10);
        assert_eq!(p.validate().unwrap(), p);
        assert_eq!(p.regime(), Regime::Physical);
        SystemParams::new(0.01, 1.0, 0.05, 31).unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        assert!(SystemParams::new(0.05, 1.0, 0.05, 0).is_err());
        assert!(SystemParams::new(0.0, 1.0, 0.05, 4).is_err());
        assert!(SystemParams::new(0.05, -1.0, 0.05, 4).is_err());
        assert!(SystemParams::new(0.05, 1.0, 0.0, 4).is_err());
        assert!(SystemParams::new(f64::NAN, 1.0, 0.05, 4).is_err());
        assert!(RunConfig::parse("M = -3").is_err());
    }

    #[test]
    fn flags_academic_regime() {
        let p = SystemParams::new(0.05, 0.01, 0.05, 4).unwrap();
        assert_eq!(p.regime(), Regime::Academic);
    }

    #[test]
    fn busy_prob_bounds() {
        assert!(BusyProb::new(1.2).is_err());
        assert!(BusyProb::new(-0.1).is_err());
        let r = BusyProb::from_peers(0.1, 2).unwrap();
        assert!((r.get() - 0.19).abs() < 1e-15);
        assert_eq!(BusyProb::from_peers(0.3, 0).unwrap().get(), 0.0);
    }

    #[test]
    fn parses_config_with_comments() {
        let cfg = RunConfig::parse(
            "# header\nlambda = 0.05\nT=1 # slot\n\nsigma = 0.05\nW = 31\nM = 10\nmode = fair\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(cfg.mode, Some(ChannelMode::Fair));
        assert_eq!(cfg.seed, Some(9));
        let p = cfg.params().unwrap();
        assert_eq!(p.window, 31);
        assert_eq!(p.peers, Some(10));
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        match RunConfig::parse("lambda = 0.1\nbogus = 3\n") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(RunConfig::parse("lambda = 0.1\nlambda = 0.2").is_err());
        assert!(RunConfig::parse("lambda 0.1").is_err());
    }

    #[test]
    fn overrides_apply() {
        let file = RunConfig::parse("lambda = 0.05\nW = 31").unwrap();
        let flags = RunConfig {
            window: Some(8),
            ..Default::default()
        };
        let merged = file.overridden_by(&flags);
        assert_eq!(merged.window, Some(8));
        assert_eq!(merged.lambda, Some(0.05));
    }

    fn decimal(digits: u32) -> impl Strategy<Value = f64> {
        (1u64..10u64.pow(digits), -8i32..8).prop_map(|(m, e)| format!("{m}e{e}").parse().unwrap())
    }

    proptest! {
        #[test]
        fn validate_is_idempotent(l in 1e-6f64..10.0, t in 1e-3f64..10.0, s in 1e-3f64..10.0, w in 1u32..2048) {
            let p = SystemParams::new(l, t, s, w).unwrap();
            prop_assert_eq!(p.validate().unwrap(), p);
        }

        #[test]
        fn config_round_trips_bit_exactly(
            l in decimal(15), t in decimal(15), s in decimal(12), r in 0.0f64..1.0,
            w in 1u32..100_000, m in proptest::option::of(0u32..10_000),
            seed in any::<u64>(), greedy in any::<bool>(),
        ) {
            let cfg = RunConfig {
                lambda: Some(l), slot: Some(t), mini_slot: Some(s), window: Some(w), peers: m,
                r: Some(r), mode: Some(if greedy { ChannelMode::Greedy } else { ChannelMode::Fair }),
                seed: Some(seed), slots: Some(seed / 3), n_max: Some(60),
            };
            let back = RunConfig::parse(&cfg.to_string()).unwrap();
            prop_assert_eq!(back.lambda.unwrap().to_bits(), l.to_bits());
            prop_assert_eq!(back.slot.unwrap().to_bits(), t.to_bits());
            prop_assert_eq!(back.mini_slot.unwrap().to_bits(), s.to_bits());
            prop_assert_eq!(back.r.unwrap().to_bits(), r.to_bits());
            prop_assert_eq!(back, cfg);
        }
    }
}
