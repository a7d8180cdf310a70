//! Closed-form steady state of a single station in greedy mode.
//!
//! The station's generating functions `F_k(x) = sum_n p(k,n) x^n` satisfy
//!
//! ```text
//! F_0(x) = p(0,0) Q(x) / R(x)
//! F_k(x) = (F_0(x) - p(0,0)) / a(x) * (u^(k-1) - u^W) / (1 - u^(W+1)),   1 <= k <= W
//! ```
//!
//! with `R(1) = Q(1) = 0`. The evaluation below never forms `Q / R`
//! directly: since `Q(x) - R(x) = b(x) - a(x)`, the excess
//! `F_0(x) - p(0,0) = p(0,0) (b - a) / R` is computed from
//! cancellation-free pieces and the ratio at `x = 1` comes from the
//! closed-form derivatives `R'(1)` and `Q'(1)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{extract_many, Pieces, Scalar, SlotGf, DEFAULT_RADIUS};
use crate::params::{BusyProb, SystemParams};
use crate::table::StationaryTable;

/// Steady-state solution of one greedy station facing busy probability `r`.
///
/// Construction always succeeds for `r < 1`; accessors that describe the
/// stationary regime return [`Error::NonErgodic`] when `lambda B >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedySolution {
    params: SystemParams,
    busy: BusyProb,
    gf: SlotGf,
    a_const: f64,
    b_const: f64,
    r1: f64,
    q1: f64,
    ergodic: bool,
}

impl GreedySolution {
    pub fn new(params: &SystemParams, busy: BusyProb) -> Result<Self> {
        let r = busy.get();
        if r >= 1.0 {
            return Err(Error::invalid("r", "the greedy model needs r < 1"));
        }
        let (lambda, t, sigma, w) = (params.lambda, params.slot, params.mini_slot, params.window as f64);
        let s = params.mean_channel_slot(busy);
        let overhead = w * s / (2.0 * (1.0 - r));
        let a_const = (1.0 - r) * (t - sigma) + overhead;
        let b_const = t + overhead;
        let r1 = -1.0 + lambda * t + lambda * overhead;
        let q1 = -1.0 + (1.0 - r) * lambda * (t - sigma) + lambda * overhead;
        Ok(GreedySolution {
            params: *params,
            busy,
            gf: SlotGf::new(params, busy),
            a_const,
            b_const,
            r1,
            q1,
            ergodic: lambda * b_const < 1.0,
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

    /// `(R'(1), Q'(1))`.
    pub fn derivatives_at_one(&self) -> (f64, f64) {
        (self.r1, self.q1)
    }

    /// `(A, B)`; `B - A = rT + (1-r) sigma`.
    pub fn constants_ab(&self) -> (f64, f64) {
        (self.a_const, self.b_const)
    }

    /// Ergodic iff `lambda B < 1`, i.e. `R'(1) < 0`.
    pub fn is_ergodic(&self) -> bool {
        self.ergodic
    }

    /// Largest stable arrival rate at this `r`:
    /// `1 / (T [1 + rW / (2(1-r))] + W sigma / 2)`.
    pub fn lambda_threshold(&self) -> f64 {
        let (t, sigma, w, r) = (self.params.slot, self.params.mini_slot, self.params.window as f64, self.busy.get());
        1.0 / (t * (1.0 + r * w / (2.0 * (1.0 - r))) + w * sigma / 2.0)
    }

    /// Ergodicity verdict read from the explicit rate threshold.
    pub fn ergodic_by_threshold(&self) -> bool {
        self.params.lambda < self.lambda_threshold()
    }

    fn require_ergodic(&self) -> Result<()> {
        if self.ergodic {
            Ok(())
        } else {
            Err(Error::NonErgodic(format!(
                "greedy station with lambda B = {} >= 1",
                self.params.lambda * self.b_const
            )))
        }
    }

    /// `x R(x) = PT(x) - x (W+1) u^W / sum u^i`, accurate near `x = 1`.
    pub(crate) fn scaled_r<S: Scalar>(&self, x: S, p: &Pieces<S>) -> S {
        (p.em_slot + p.one_minus_x) - x * p.tail_minus_one
    }

    /// `R(x)` for `x in (0, 1]`.
    pub fn eval_r(&self, x: f64) -> Result<f64> {
        check_open_unit(x)?;
        let p = self.gf.pieces(x)?;
        Ok(self.scaled_r(x, &p) / x)
    }

    /// `Q(x) = R(x) + b(x) - a(x)` for `x in (0, 1]`.
    pub fn eval_q(&self, x: f64) -> Result<f64> {
        check_open_unit(x)?;
        let p = self.gf.pieces(x)?;
        Ok(self.scaled_r(x, &p) / x + p.b_minus_a)
    }

    /// `p(0,0) = (1 - lambda B) / (1 - lambda A + lambda W (B - A) / (2(1-r)))`.
    pub fn p00(&self) -> Result<f64> {
        self.require_ergodic()?;
        let (lambda, w, r) = (self.params.lambda, self.params.window as f64, self.busy.get());
        let (a, b) = (self.a_const, self.b_const);
        Ok((1.0 - lambda * b) / (1.0 - lambda * a + lambda * w * (b - a) / (2.0 * (1.0 - r))))
    }

    /// `p(0,0)` solved from the normalisation
    /// `p00 [(1 + c) Q'(1)/R'(1) - c] = 1`, `c = W / (2(1-r))`.
    pub fn p00_from_normalisation(&self) -> Result<f64> {
        self.require_ergodic()?;
        let c = self.params.window as f64 / (2.0 * (1.0 - self.busy.get()));
        Ok(1.0 / ((1.0 + c) * self.q1 / self.r1 - c))
    }

    /// Probability of holding a packet with the counter at zero,
    /// `lambda s / (1 - lambda T + lambda s)` with `s = rT + (1-r) sigma`.
    ///
    /// Needs only `lambda T < 1`, not ergodicity.
    pub fn tau(&self) -> Result<f64> {
        let lambda = self.params.lambda;
        if lambda * self.params.slot >= 1.0 {
            return Err(Error::Domain(format!(
                "transmission probability needs lambda T < 1, got {}",
                lambda * self.params.slot
            )));
        }
        let ls = lambda * self.params.mean_channel_slot(self.busy);
        Ok(ls / (1.0 - lambda * self.params.slot + ls))
    }

    /// `tau` by three routes: the closed form, `F_0(1) - p(0,0)` and
    /// `p(0,0) (Q'(1)/R'(1) - 1)`.
    pub fn tau_routes(&self) -> Result<[f64; 3]> {
        let p00 = self.p00()?;
        Ok([self.tau()?, self.f0_eval(1.0)? - p00, p00 * (self.q1 / self.r1 - 1.0)])
    }

    /// `F_0(x) - p(0,0)` at any `|x| <= 1`; assumes ergodicity.
    pub(crate) fn excess_at<S: Scalar>(&self, p00: f64, x: S, p: &Pieces<S>) -> S {
        if x.is_one() {
            return S::real(p00 * (self.q1 - self.r1) / self.r1);
        }
        S::real(p00) * x * p.b_minus_a / self.scaled_r(x, p)
    }

    /// `(F_0(x), ..., F_W(x))` at any `|x| <= 1`; assumes ergodicity.
    pub(crate) fn all_at<S: Scalar>(&self, p00: f64, x: S) -> Result<Vec<S>> {
        let p = self.gf.pieces(x)?;
        let excess = self.excess_at(p00, x, &p);
        let base = excess / p.a;
        let mut out = Vec::with_capacity(self.params.window as usize + 1);
        out.push(excess + S::real(p00));
        out.extend(self.gf.backoff_weights(p.u).into_iter().map(|w| base * w));
        Ok(out)
    }

    /// `F_0(x)` for `x in (0, 1]`.
    pub fn f0_eval(&self, x: f64) -> Result<f64> {
        let p00 = self.p00()?;
        check_open_unit(x)?;
        let p = self.gf.pieces(x)?;
        Ok(p00 + self.excess_at(p00, x, &p))
    }

    /// `F_k(x)` for `1 <= k <= W`, `x in (0, 1]`.
    pub fn fk_eval(&self, k: u32, x: f64) -> Result<f64> {
        let p00 = self.p00()?;
        check_open_unit(x)?;
        if k == 0 {
            return self.f0_eval(x);
        }
        if k > self.params.window {
            return Err(Error::Domain(format!("back-off level {k} exceeds W = {}", self.params.window)));
        }
        let p = self.gf.pieces(x)?;
        Ok(self.excess_at(p00, x, &p) / p.a * self.gf.backoff_weight(k, p.u))
    }

    /// Complex evaluation of `R(x)` and `Q(x)` for `0 < |x| <= 1`.
    pub fn eval_rq_complex(&self, x: Complex64) -> Result<(Complex64, Complex64)> {
        if x.norm() == 0.0 {
            return Err(Error::Domain("R and Q have a pole at x = 0".into()));
        }
        let p = self.gf.pieces(x)?;
        let r = self.scaled_r(x, &p) / x;
        Ok((r, r + p.b_minus_a))
    }

    /// `p(k, n)` for `n <= n_max`, by coefficient extraction from `F_k`.
    pub fn stationary_table(&self, n_max: usize) -> Result<StationaryTable> {
        let p00 = self.p00()?;
        let count = self.params.window as usize + 1;
        let series = extract_many(
            count,
            |x: Complex64, out: &mut [Complex64]| match self.all_at(p00, x) {
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

pub(crate) fn check_open_unit(x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("generating functions are evaluated on (0, 1], got x = {x}")))
    }
}
