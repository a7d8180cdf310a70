//! Closed-form steady state of a single station under the fair load rule:
//! slots are full with probability `r` whatever the station does, and a
//! head-of-line packet whose counter reached zero transmits only in a full
//! slot, otherwise it redraws its back-off.
//!
//! The generating functions mirror the greedy ones with
//! `G_0(x) = q(0,0) Qbar(x) / Rbar(x)` where
//!
//! ```text
//! Rbar(x) = r PT(x) / x + (1-r) Ps(x) - (W+1) u^W (1-u) / (1-u^(W+1))
//! Qbar(x) = 1 + r (1/x - 1) PT(x)     - (W+1) u^W (1-u) / (1-u^(W+1))
//! ```
//!
//! and again `Qbar - Rbar = b - a`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::greedy::check_open_unit;
use crate::kernel::{extract_many, Pieces, Scalar, SlotGf, DEFAULT_RADIUS};
use crate::params::{BusyProb, SystemParams};
use crate::table::StationaryTable;

/// Steady-state solution of one fair-load station.
#[derive(Debug, Clone, PartialEq)]
pub struct FairSolution {
    params: SystemParams,
    busy: BusyProb,
    gf: SlotGf,
    rbar1: f64,
    qbar1: f64,
}

impl FairSolution {
    pub fn new(params: &SystemParams, busy: BusyProb) -> Result<Self> {
        let r = busy.get();
        if r >= 1.0 {
            return Err(Error::invalid("r", "the fair model needs r < 1"));
        }
        let c = params.window as f64 / (2.0 * (1.0 - r));
        let ls = params.lambda * params.mean_channel_slot(busy);
        Ok(FairSolution {
            params: *params,
            busy,
            gf: SlotGf::new(params, busy),
            rbar1: -r + ls * (1.0 + c),
            qbar1: -r + ls * c,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn busy(&self) -> BusyProb {
        self.busy
    }

    pub fn gf(&self) -> &SlotGf {
        &self.gf
    }

    /// `(Rbar'(1), Qbar'(1))`.
    pub fn derivatives_at_one(&self) -> (f64, f64) {
        (self.rbar1, self.qbar1)
    }

    fn require_busy_channel(&self) -> Result<()> {
        if self.busy.get() > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid("r", "a fair station never transmits on a channel with r = 0"))
        }
    }

    /// Ergodic iff `Rbar'(1) < 0`; never ergodic at `r = 0`.
    pub fn is_ergodic(&self) -> bool {
        self.busy.get() > 0.0 && self.rbar1 < 0.0
    }

    /// `r (1-r) / ([1 - r + W/2] [rT + (1-r) sigma])`.
    pub fn lambda_threshold(&self) -> f64 {
        let r = self.busy.get();
        let w = self.params.window as f64;
        r * (1.0 - r) / ((1.0 - r + w / 2.0) * self.params.mean_channel_slot(self.busy))
    }

    pub fn ergodic_by_threshold(&self) -> bool {
        self.params.lambda < self.lambda_threshold()
    }

    fn require_ergodic(&self) -> Result<()> {
        self.require_busy_channel()?;
        if self.is_ergodic() {
            Ok(())
        } else {
            Err(Error::NonErgodic(format!(
                "fair station with Rbar'(1) = {} >= 0",
                self.rbar1
            )))
        }
    }

    /// `x Rbar(x)`, accurate near `x = 1`.
    pub(crate) fn scaled_r<S: Scalar>(&self, x: S, p: &Pieces<S>) -> S {
        let r = self.busy.get();
        S::real(r) * (p.em_slot + p.one_minus_x) + S::real(1.0 - r) * x * p.em_mini - x * p.tail_minus_one
    }

    pub fn eval_rbar(&self, x: f64) -> Result<f64> {
        self.require_busy_channel()?;
        check_open_unit(x)?;
        let p = self.gf.pieces(x)?;
        Ok(self.scaled_r(x, &p) / x)
    }

    pub fn eval_qbar(&self, x: f64) -> Result<f64> {
        self.require_busy_channel()?;
        check_open_unit(x)?;
        let p = self.gf.pieces(x)?;
        Ok(self.scaled_r(x, &p) / x + p.b_minus_a)
    }

    /// `q(0,0) = 1 - lambda [rT + (1-r) sigma] [1 + W/(2(1-r))] / r`.
    pub fn q00(&self) -> Result<f64> {
        self.require_ergodic()?;
        let r = self.busy.get();
        let c = self.params.window as f64 / (2.0 * (1.0 - r));
        Ok(1.0 - self.params.lambda * self.params.mean_channel_slot(self.busy) * (1.0 + c) / r)
    }

    /// `q(0,0) = -Rbar'(1) / r`.
    pub fn q00_from_derivative(&self) -> Result<f64> {
        self.require_ergodic()?;
        Ok(-self.rbar1 / self.busy.get())
    }

    /// `q(0,0)` from the normalisation condition written with `Qbar'(1)/Rbar'(1)`.
    pub fn q00_from_normalisation(&self) -> Result<f64> {
        self.require_ergodic()?;
        let c = self.params.window as f64 / (2.0 * (1.0 - self.busy.get()));
        let ratio = self.qbar1 / self.rbar1;
        Ok(1.0 / (c * (ratio - 1.0) + ratio))
    }

    /// `taubar = lambda [rT + (1-r) sigma] / r`.
    pub fn taubar(&self) -> Result<f64> {
        self.require_busy_channel()?;
        Ok(self.params.lambda * self.params.mean_channel_slot(self.busy) / self.busy.get())
    }

    pub(crate) fn excess_at<S: Scalar>(&self, q00: f64, x: S, p: &Pieces<S>) -> S {
        if x.is_one() {
            return S::real(q00 * (self.qbar1 - self.rbar1) / self.rbar1);
        }
        S::real(q00) * x * p.b_minus_a / self.scaled_r(x, p)
    }

    pub(crate) fn all_at<S: Scalar>(&self, q00: f64, x: S) -> Result<Vec<S>> {
        let p = self.gf.pieces(x)?;
        let excess = self.excess_at(q00, x, &p);
        let base = excess / p.a;
        let mut out = Vec::with_capacity(self.params.window as usize + 1);
        out.push(excess + S::real(q00));
        out.extend(self.gf.backoff_weights(p.u).into_iter().map(|w| base * w));
        Ok(out)
    }

    pub fn g0_eval(&self, x: f64) -> Result<f64> {
        let q00 = self.q00()?;
        check_open_unit(x)?;
        let p = self.gf.pieces(x)?;
        Ok(q00 + self.excess_at(q00, x, &p))
    }

    pub fn gk_eval(&self, k: u32, x: f64) -> Result<f64> {
        let q00 = self.q00()?;
        check_open_unit(x)?;
        if k == 0 {
            return self.g0_eval(x);
        }
        if k > self.params.window {
            return Err(Error::Domain(format!("back-off level {k} exceeds W = {}", self.params.window)));
        }
        let p = self.gf.pieces(x)?;
        Ok(self.excess_at(q00, x, &p) / p.a * self.gf.backoff_weight(k, p.u))
    }

    pub fn eval_rq_complex(&self, x: Complex64) -> Result<(Complex64, Complex64)> {
        self.require_busy_channel()?;
        if x.norm() == 0.0 {
            return Err(Error::Domain("Rbar and Qbar have a pole at x = 0".into()));
        }
        let p = self.gf.pieces(x)?;
        let r = self.scaled_r(x, &p) / x;
        Ok((r, r + p.b_minus_a))
    }

    /// `q(k, n)` for `n <= n_max`.
    pub fn stationary_table(&self, n_max: usize) -> Result<StationaryTable> {
        let q00 = self.q00()?;
        let count = self.params.window as usize + 1;
        let series = extract_many(
            count,
            |x: Complex64, out: &mut [Complex64]| match self.all_at(q00, x) {
                Ok(values) => out.copy_from_slice(&values),
                Err(_) => out.fill(Complex64::new(f64::NAN, f64::NAN)),
            },
            n_max,
            DEFAULT_RADIUS,
        )?;
        let est_error = series.iter().map(|s| s.est_error).fold(0.0, f64::max);
        Ok(StationaryTable::from_rows(series.into_iter().map(|s| s.values).collect(), est_error))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solution(lambda: f64, sigma: f64, w: u32, r: f64) -> FairSolution {
        let params = SystemParams::new(lambda, 1.0, sigma, w).unwrap();
        FairSolution::new(&params, BusyProb::new(r).unwrap()).unwrap()
    }

    #[test]
    fn vanish_at_one() {
        let s = solution(0.04, 0.05, 4, 0.4);
        assert_eq!(s.eval_rbar(1.0).unwrap(), 0.0);
        assert_eq!(s.eval_qbar(1.0).unwrap(), 0.0);
        assert!(s.eval_rbar(0.0).is_err());
    }

    #[test]
    fn q00_routes_agree() {
        let s = solution(0.04, 0.05, 4, 0.4);
        let a = s.q00().unwrap();
        assert!((a - s.q00_from_derivative().unwrap()).abs() < 1e-12);
        assert!((a - s.q00_from_normalisation().unwrap()).abs() < 1e-12);
        assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn light_load_limits() {
        let s = solution(1e-12, 0.05, 4, 0.4);
        assert!((s.q00().unwrap() - 1.0).abs() < 1e-10);
        assert!(s.taubar().unwrap() < 1e-10);
        for &x in &[0.2, 0.7, 1.0] {
            assert!((s.g0_eval(x).unwrap() - 1.0).abs() < 1e-10);
        }
        let s = solution(0.3, 1e-300, 4, 1.0 - 1e-15);
        assert!((s.taubar().unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn q00_vanishes_at_small_r_threshold() {
        // lambda / r -> 1 / (sigma (1 + W/2)) as r -> 0
        let (sigma, w) = (0.05, 4u32);
        let r = 1e-7;
        let lambda = r / (sigma * (1.0 + w as f64 / 2.0)) * (1.0 - 1e-3);
        let q = solution(lambda, sigma, w, r).q00().unwrap();
        assert!(q > 0.0 && q < 2e-3, "{q}");
    }

    #[test]
    fn threshold_value() {
        let s = solution(0.001, 0.05, 31, 0.5);
        assert!((s.lambda_threshold() - 0.25 / (16.0 * 0.525)).abs() < 1e-15);
    }

    #[test]
    fn zero_busy_probability_rejected() {
        let s = solution(0.01, 0.05, 4, 0.0);
        assert!(!s.is_ergodic());
        assert!(s.taubar().is_err());
        assert!(s.q00().is_err());
        assert!(s.eval_rbar(0.5).is_err());
    }

    #[test]
    fn normalisation_and_taubar() {
        let s = solution(0.04, 0.05, 4, 0.4);
        let g0 = s.g0_eval(1.0).unwrap();
        let q00 = s.q00().unwrap();
        assert!((g0 + 4.0 * (g0 - q00) / (2.0 * 0.6) - 1.0).abs() < 1e-12);
        assert!((s.taubar().unwrap() - (g0 - q00)).abs() < 1e-10);
        let sum: f64 = (0..=4).map(|k| s.gk_eval(k, 1.0).unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ergodicity_routes() {
        let s = solution(0.5, 0.05, 31, 0.5);
        assert!(!s.is_ergodic() && !s.ergodic_by_threshold());
        assert!(matches!(s.q00(), Err(Error::NonErgodic(_))));
        let s = solution(0.001, 0.05, 31, 0.5);
        assert!(s.is_ergodic() && s.ergodic_by_threshold());
    }
}
