//! A tagged station among `M` identical peers.
//!
//! Each peer transmits with probability `tau`, so the tagged station sees a
//! busy slot with probability `r = 1 - (1 - tau)^M`. Closing the loop with
//! the single-station `tau(r)` gives a fixed point, which in greedy mode is
//! the unique root in `[0, 1]` of
//!
//! ```text
//! P(z) = lambda (T - sigma) z^(M+1) - z + (1 - lambda T),   z = (1 - r)^(1/M).
//! ```
//!
//! Saturating the ergodicity condition yields the maximum per-station
//! rate in terms of the root `u` of `2 u^(M+1) = W (1 - u)`, shared by both
//! channel modes.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fair::FairSolution;
use crate::greedy::GreedySolution;
use crate::params::{BusyProb, ChannelMode, SystemParams};
use crate::roots::{bisect, golden_max_int, sign_changes};

/// Number of grid points used to confirm that a bracketed root is unique.
pub const SIGN_SCAN_POINTS: usize = 10_000;
const ROOT_TOL: f64 = 1e-14;
const COUPLING_TOL: f64 = 1e-10;
const FORMS_TOL: f64 = 1e-12;

/// Whether a swept station count means peers of the tagged station or all
/// stations on the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StationCount {
    /// The sweep value is `M`; the channel carries `M + 1` stations.
    #[default]
    Peers,
    /// The sweep value is the total number of stations, `M + 1`.
    Total,
}

impl StationCount {
    pub fn peers(self, value: u32) -> Result<u32> {
        match self {
            StationCount::Peers => Ok(value),
            StationCount::Total => value
                .checked_sub(1)
                .ok_or_else(|| Error::invalid("M", "a network needs at least one station")),
        }
    }

    pub fn stations(self, value: u32) -> u32 {
        match self {
            StationCount::Peers => value + 1,
            StationCount::Total => value,
        }
    }
}

impl fmt::Display for StationCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StationCount::Peers => "peers",
            StationCount::Total => "total",
        })
    }
}

impl FromStr for StationCount {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "peers" | "M" => Ok(StationCount::Peers),
            "total" | "M+1" => Ok(StationCount::Total),
            other => Err(Error::invalid("convention", format!("expected `peers` or `total`, got `{other}`"))),
        }
    }
}

/// Fixed point of the tagged-station / peers coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkOperatingPoint {
    pub mode: ChannelMode,
    pub peers: u32,
    /// `(1 - r)^(1/M)`, equal to `1 - tau` at the fixed point.
    pub z: f64,
    /// Root of `2 u^(M+1) = W (1 - u)`.
    pub u: f64,
    pub r: BusyProb,
    pub tau: f64,
    pub ergodic: bool,
    pub lambda_max: f64,
    /// Sign changes of the fixed-point residual found by grid scan.
    pub multiplicity: usize,
}

fn slot_load(params: &SystemParams) -> Result<f64> {
    let load = params.lambda * params.slot;
    if load < 1.0 {
        Ok(load)
    } else {
        Err(Error::Domain(format!("network fixed point needs lambda T < 1, got {load}")))
    }
}

/// `P(z) = lambda (T - sigma) z^(M+1) - z + (1 - lambda T)`.
pub fn fixed_point_polynomial(params: &SystemParams, peers: u32, z: f64) -> f64 {
    let lambda = params.lambda;
    lambda * (params.slot - params.mini_slot) * z.powi(peers as i32 + 1) - z + (1.0 - lambda * params.slot)
}

/// Unique root of `P(z)` in `[0, 1]`.
pub fn solve_z(params: &SystemParams, peers: u32) -> Result<f64> {
    slot_load(params)?;
    let p = |z| fixed_point_polynomial(params, peers, z);
    let changes = sign_changes(p, 0.0, 1.0, SIGN_SCAN_POINTS);
    if changes != 1 {
        return Err(Error::Inconsistent(format!(
            "P(z) changes sign {changes} times on [0, 1], expected exactly once"
        )));
    }
    bisect(p, 0.0, 1.0, ROOT_TOL)
}

/// `(tau, r)` at `z`: `r = 1 - z^M` and `tau` from the single-station
/// formula at that `r`, checked against `r = 1 - (1 - tau)^M`.
pub fn consistency_tau_r(params: &SystemParams, peers: u32, z: f64) -> Result<(f64, BusyProb)> {
    let r = BusyProb::new(1.0 - z.powi(peers as i32))?;
    let tau = GreedySolution::new(params, r)?.tau()?;
    let implied = 1.0 - (1.0 - tau).powi(peers as i32);
    if (implied - r.get()).abs() > COUPLING_TOL {
        return Err(Error::Inconsistent(format!(
            "busy probability {} but peers at tau = {tau} imply {implied}",
            r.get()
        )));
    }
    Ok((tau, r))
}

/// `h(v) = 2 (1-v)^(M+1) - W v`, the saturation equation in `v = 1 - u`.
pub fn saturation_residual(window: u32, peers: u32, v: f64) -> f64 {
    2.0 * ((peers as f64 + 1.0) * (-v).ln_1p()).exp() - window as f64 * v
}

/// `1 - u` for the root `u` of `2 u^(M+1) = W (1 - u)`.
///
/// Bisecting on the complement keeps full relative precision when `u` is
/// close to one.
pub fn solve_u_complement(window: u32, peers: u32) -> f64 {
    bisect(|v| saturation_residual(window, peers, v), 0.0, 1.0, 0.0)
        .expect("h(0) = 2 > 0 and h(1) = -W < 0 always bracket the root")
}

/// Unique root on `[0, 1]` of `2 u^(M+1) = W (1 - u)`.
pub fn solve_u(window: u32, peers: u32) -> f64 {
    1.0 - solve_u_complement(window, peers)
}

/// Ergodicity of the greedy network: `2 z^(M+1) > W (1 - z)`.
pub fn network_ergodic_greedy(params: &SystemParams, peers: u32) -> Result<bool> {
    let z = solve_z(params, peers)?;
    Ok(2.0 * z.powi(peers as i32 + 1) > params.window as f64 * (1.0 - z))
}

/// `(1 - lambda B, (1 - lambda T)[1 - W (1-z) / (2 z^(M+1))])` at the fixed
/// point; the two coincide.
pub fn greedy_drift_factorisation(params: &SystemParams, peers: u32) -> Result<(f64, f64)> {
    let z = solve_z(params, peers)?;
    let r = BusyProb::new(1.0 - z.powi(peers as i32))?;
    let (_, b) = GreedySolution::new(params, r)?.constants_ab();
    let direct = 1.0 - params.lambda * b;
    let factored = (1.0 - params.lambda * params.slot)
        * (1.0 - params.window as f64 * (1.0 - z) / (2.0 * z.powi(peers as i32 + 1)));
    Ok((direct, factored))
}

/// Both printed forms of a maximum-throughput expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaMax {
    pub u: f64,
    pub value: f64,
    pub alternate: f64,
}

fn check_forms(what: &str, value: f64, alternate: f64) -> Result<()> {
    let rel = (value - alternate).abs() / value.abs().max(alternate.abs());
    if rel > FORMS_TOL {
        return Err(Error::Inconsistent(format!(
            "{what}: the two forms differ by {rel:e} relative ({value} vs {alternate})"
        )));
    }
    Ok(())
}

/// Greedy maximum rate
/// `(1-u) / (T (1 - u^(M+1)) + sigma u^(M+1)) = (1-u) / (T + W (sigma - T)(1-u) / 2)`.
pub fn lambda_max_greedy(slot: f64, mini_slot: f64, window: u32, peers: u32) -> Result<LambdaMax> {
    let v = solve_u_complement(window, peers);
    let u_pow = ((peers as f64 + 1.0) * (-v).ln_1p()).exp();
    let one_minus_pow = -((peers as f64 + 1.0) * (-v).ln_1p()).exp_m1();
    let value = v / (slot * one_minus_pow + mini_slot * u_pow);
    let alternate = v / (slot + window as f64 * (mini_slot - slot) * v / 2.0);
    check_forms("greedy maximum throughput", value, alternate)?;
    Ok(LambdaMax {
        u: 1.0 - v,
        value,
        alternate,
    })
}

/// Fair maximum rate `(1-u) / (T + W sigma (1-u) / (u (2+W) - W))`, also
/// computed as `(1-u) / (T + (1-r) sigma / r)` with `1 - r = u^M`.
pub fn lambda_max_fair(slot: f64, mini_slot: f64, window: u32, peers: u32) -> Result<LambdaMax> {
    if peers == 0 {
        return Err(Error::invalid("M", "a fair station needs at least one peer to ever see a full slot"));
    }
    let v = solve_u_complement(window, peers);
    let u = 1.0 - v;
    let w = window as f64;
    let gap = 2.0 * u - w * v;
    if !(gap > 0.0) {
        return Err(Error::Inconsistent(format!(
            "u (2 + W) - W = {gap} must be positive at the saturation root"
        )));
    }
    let value = v / (slot + w * mini_slot * v / gap);
    let log_u = (-v).ln_1p();
    let idle = (peers as f64 * log_u).exp();
    let busy = -(peers as f64 * log_u).exp_m1();
    let alternate = v / (slot + idle * mini_slot / busy);
    check_forms("fair maximum throughput", value, alternate)?;
    Ok(LambdaMax { u, value, alternate })
}

/// Operating point of a greedy network.
pub fn greedy_operating_point(params: &SystemParams, peers: u32) -> Result<NetworkOperatingPoint> {
    let z = solve_z(params, peers)?;
    let (tau, r) = consistency_tau_r(params, peers, z)?;
    let lm = lambda_max_greedy(params.slot, params.mini_slot, params.window, peers)?;
    Ok(NetworkOperatingPoint {
        mode: ChannelMode::Greedy,
        peers,
        z,
        u: lm.u,
        r,
        tau,
        ergodic: 2.0 * z.powi(peers as i32 + 1) > params.window as f64 * (1.0 - z),
        lambda_max: lm.value,
        multiplicity: 1,
    })
}

/// Residual `r - 1 + (1 - taubar(r))^M` of the fair fixed point.
pub fn fair_fixed_point_residual(params: &SystemParams, peers: u32, r: f64) -> f64 {
    let taubar = params.lambda * (params.slot + (1.0 - r) * params.mini_slot / r);
    r - 1.0 + (1.0 - taubar).powi(peers as i32)
}

/// Operating point of a fair network at arrival rate `lambda < lambdabar_max`.
///
/// Solves `r = 1 - (1 - lambda [rT + (1-r) sigma] / r)^M` on the range of
/// `r` where the implied `taubar` is a probability. The smallest root is
/// returned and `multiplicity` counts the sign changes seen on a grid.
pub fn fair_fixed_point(params: &SystemParams, peers: u32) -> Result<NetworkOperatingPoint> {
    let lm = lambda_max_fair(params.slot, params.mini_slot, params.window, peers)?;
    if params.lambda >= lm.value {
        return Err(Error::NonErgodic(format!(
            "lambda = {} is not below the fair maximum {}",
            params.lambda, lm.value
        )));
    }
    let load = slot_load(params)?;
    let lambda_sigma = params.lambda * params.mini_slot;
    // taubar(r_min) = 1
    let r_min = lambda_sigma / (1.0 - load + lambda_sigma);
    let residual = |r: f64| fair_fixed_point_residual(params, peers, r);
    let multiplicity = sign_changes(residual, r_min, 1.0, SIGN_SCAN_POINTS);
    if multiplicity == 0 {
        return Err(Error::NoSolution("fixed-point residual keeps one sign on (r_min, 1)".into()));
    }
    // smallest root: first sign change on the grid, then bisect inside it
    let step = (1.0 - r_min) / SIGN_SCAN_POINTS as f64;
    let mut lo = r_min;
    let mut f_lo = residual(lo);
    let mut hi = 1.0;
    for i in 1..=SIGN_SCAN_POINTS {
        let x = if i == SIGN_SCAN_POINTS { 1.0 } else { r_min + step * i as f64 };
        let f = residual(x);
        if f == 0.0 || f.signum() != f_lo.signum() {
            hi = x;
            break;
        }
        lo = x;
        f_lo = f;
    }
    let r = bisect(residual, lo, hi, ROOT_TOL)?;
    let busy = BusyProb::new(r)?;
    let station = FairSolution::new(params, busy)?;
    let tau = station.taubar()?;
    Ok(NetworkOperatingPoint {
        mode: ChannelMode::Fair,
        peers,
        z: (1.0 - r).powf(1.0 / peers as f64),
        u: lm.u,
        r: busy,
        tau,
        ergodic: station.is_ergodic(),
        lambda_max: lm.value,
        multiplicity,
    })
}

/// Collision-free throughput of `stations` stations each transmitting with
/// probability `tau`: successful slot time over mean slot time,
/// `n tau (1-tau)^(n-1) T / (r T + (1-r) sigma)` with `r = 1 - (1-tau)^n`.
pub fn success_throughput(tau: f64, stations: u32, slot: f64, mini_slot: f64) -> f64 {
    let n = stations as i32;
    let idle = (1.0 - tau).powi(n);
    let busy = 1.0 - idle;
    stations as f64 * tau * (1.0 - tau).powi(n - 1) * slot / (busy * slot + idle * mini_slot)
}

/// Success throughput with every station loaded at the greedy maximum rate
/// for window `W`, where each transmits with probability `1 - u`.
pub fn saturated_success_throughput(slot: f64, mini_slot: f64, window: u32, peers: u32) -> f64 {
    let tau = solve_u_complement(window, peers);
    success_throughput(tau, peers + 1, slot, mini_slot)
}

/// Largest window searched by [`optimal_window`].
pub const MAX_WINDOW: u32 = 4096;

/// Window in `[1, 4096]` maximising [`saturated_success_throughput`].
pub fn optimal_window(slot: f64, mini_slot: f64, peers: u32) -> (u32, f64) {
    golden_max_int(|w| saturated_success_throughput(slot, mini_slot, w, peers), 1, MAX_WINDOW)
}

/// True when the sequence rises (weakly) then falls (weakly).
pub fn is_unimodal(values: &[f64]) -> bool {
    let mut falling = false;
    for pair in values.windows(2) {
        if pair[1] > pair[0] {
            if falling {
                return false;
            }
        } else if pair[1] < pair[0] {
            falling = true;
        }
    }
    true
}
