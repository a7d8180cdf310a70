//! Generating-function building blocks shared by the greedy and fair
//! station models.
//!
//! With `PT(x) = exp(-lambda T (1-x))` and `Ps(x) = exp(-lambda sigma (1-x))`
//! the per-slot arrival generating functions, the station equations are
//! written in terms of
//!
//! ```text
//! a(x) = (1-r) Ps(x),    b(x) = 1 - r PT(x),    u(x) = b(x) / a(x).
//! ```
//!
//! Everything here is evaluated so that it stays accurate as `x -> 1`,
//! where `u -> 1` and the textbook ratios `(1 - u^(W+1)) / (1 - u)` become
//! `0/0`: geometric ratios are explicit sums and every difference that
//! vanishes at `x = 1` is formed from `expm1` terms.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::params::{BusyProb, SystemParams};

/// Field over which the generating functions are evaluated: `f64` on the
/// real segment, `Complex64` on circles used for coefficient extraction.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn real(v: f64) -> Self;
    fn exp(self) -> Self;
    fn exp_m1(self) -> Self;
    fn modulus(self) -> f64;

    fn is_one(self) -> bool {
        self == Self::real(1.0)
    }
}

impl Scalar for f64 {
    fn real(v: f64) -> Self {
        v
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn exp_m1(self) -> Self {
        f64::exp_m1(self)
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn real(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn exp_m1(self) -> Self {
        // e^(a+ib) - 1 = expm1(a) cos b - 2 sin^2(b/2) + i e^a sin b
        let (a, b) = (self.re, self.im);
        let half = (0.5 * b).sin();
        Complex64::new(a.exp_m1() * b.cos() - 2.0 * half * half, a.exp() * b.sin())
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Slot-level generating functions for one station at busy probability `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotGf {
    lambda: f64,
    slot: f64,
    mini_slot: f64,
    window: u32,
    r: f64,
}

/// Intermediate quantities at one point `x`, all accurate near `x = 1`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Pieces<S> {
    pub one_minus_x: S,
    /// `PT(x) - 1`
    pub em_slot: S,
    /// `Ps(x) - 1`
    pub em_mini: S,
    pub a: S,
    /// `b(x) - a(x)`
    pub b_minus_a: S,
    pub u: S,
    /// `(W+1) u^W / geom - 1`
    pub tail_minus_one: S,
}

impl SlotGf {
    pub fn new(params: &SystemParams, r: BusyProb) -> Self {
        SlotGf {
            lambda: params.lambda,
            slot: params.slot,
            mini_slot: params.mini_slot,
            window: params.window,
            r: r.get(),
        }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn slot(&self) -> f64 {
        self.slot
    }

    pub fn mini_slot(&self) -> f64 {
        self.mini_slot
    }

    pub fn arrivals_slot<S: Scalar>(&self, x: S) -> S {
        (S::real(-self.lambda * self.slot) * (S::real(1.0) - x)).exp()
    }

    pub fn arrivals_mini<S: Scalar>(&self, x: S) -> S {
        (S::real(-self.lambda * self.mini_slot) * (S::real(1.0) - x)).exp()
    }

    /// `a(x) = (1-r) exp(-lambda sigma (1-x))`
    pub fn eval_a<S: Scalar>(&self, x: S) -> S {
        S::real(1.0 - self.r) * self.arrivals_mini(x)
    }

    /// `b(x) = 1 - r exp(-lambda T (1-x))`
    pub fn eval_b<S: Scalar>(&self, x: S) -> S {
        S::real(1.0) - S::real(self.r) * self.arrivals_slot(x)
    }

    /// `u(x) = b(x) / a(x)`
    pub fn eval_u<S: Scalar>(&self, x: S) -> Result<S> {
        if self.r >= 1.0 {
            return Err(Error::DivisionByZero("u(x) = b(x)/a(x) with r = 1"));
        }
        Ok(self.eval_b(x) / self.eval_a(x))
    }

    /// `sum_{i=0}^{W} u(x)^i` by direct summation.
    pub fn u_geom_sum<S: Scalar>(&self, x: S) -> Result<S> {
        let u = self.eval_u(x)?;
        let mut term = S::real(1.0);
        let mut sum = S::real(1.0);
        for _ in 0..self.window {
            term = term * u;
            sum = sum + term;
        }
        Ok(sum)
    }

    pub(crate) fn pieces<S: Scalar>(&self, x: S) -> Result<Pieces<S>> {
        if self.r >= 1.0 {
            return Err(Error::DivisionByZero("u(x) = b(x)/a(x) with r = 1"));
        }
        let one_minus_x = S::real(1.0) - x;
        let em_slot = (S::real(-self.lambda * self.slot) * one_minus_x).exp_m1();
        let em_mini = (S::real(-self.lambda * self.mini_slot) * one_minus_x).exp_m1();
        let a = S::real(1.0 - self.r) * (em_mini + S::real(1.0));
        // b - a = r (1 - PT) + (1-r)(1 - Ps)
        let b_minus_a = -(S::real(self.r) * em_slot + S::real(1.0 - self.r) * em_mini);
        let u_minus_one = b_minus_a / a;
        let u = u_minus_one + S::real(1.0);

        // geom = sum_{i=0}^{W} u^i, weighted = sum_{j=0}^{W-1} (j+1) u^j
        let mut power = S::real(1.0);
        let mut geom = S::real(1.0);
        let mut weighted = S::real(0.0);
        for j in 0..self.window {
            weighted = weighted + S::real((j + 1) as f64) * power;
            power = power * u;
            geom = geom + power;
        }
        Ok(Pieces {
            one_minus_x,
            em_slot,
            em_mini,
            a,
            b_minus_a,
            u,
            tail_minus_one: u_minus_one * weighted / geom,
        })
    }

    /// `(W+1) u^W (1-u) / (1-u^(W+1))`, the term shared by both station models.
    pub fn tail<S: Scalar>(&self, x: S) -> Result<S> {
        Ok(self.pieces(x)?.tail_minus_one + S::real(1.0))
    }

    /// Weights `(u^(k-1) - u^W) / (1 - u^(W+1))` for `k = 1..=W`, in order.
    ///
    /// Computed as `sum_{j=k-1}^{W-1} u^j / sum_{i=0}^{W} u^i`; at `x = 1`
    /// they reduce to `(W-k+1)/(W+1)`.
    pub fn backoff_weights<S: Scalar>(&self, u: S) -> Vec<S> {
        let w = self.window as usize;
        let mut powers = Vec::with_capacity(w + 1);
        let mut p = S::real(1.0);
        for _ in 0..=w {
            powers.push(p);
            p = p * u;
        }
        let geom = powers.iter().fold(S::real(0.0), |acc, &v| acc + v);
        let mut weights = vec![S::real(0.0); w];
        let mut suffix = S::real(0.0);
        for k in (1..=w).rev() {
            suffix = suffix + powers[k - 1];
            weights[k - 1] = suffix / geom;
        }
        weights
    }

    /// Weight of a single back-off level `k` (see [`SlotGf::backoff_weights`]).
    pub fn backoff_weight<S: Scalar>(&self, k: u32, u: S) -> S {
        debug_assert!(k >= 1 && k <= self.window);
        let mut p = S::real(1.0);
        let mut geom = S::real(0.0);
        let mut suffix = S::real(0.0);
        for j in 0..=self.window {
            geom = geom + p;
            if j + 1 >= k && j < self.window {
                suffix = suffix + p;
            }
            p = p * u;
        }
        suffix / geom
    }
}

/// Extraction radius used when none is specified.
pub const DEFAULT_RADIUS: f64 = 0.9;
/// Largest tolerated imaginary part of an extracted coefficient.
pub const IMAG_TOLERANCE: f64 = 1e-10;
const MIN_POINTS: usize = 256;

/// Power-series coefficients recovered from samples on a circle.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    pub values: Vec<f64>,
    pub radius: f64,
    pub est_error: f64,
    pub imag_residual: f64,
}

/// Coefficients `c_0..=c_{n_max}` of a function analytic on `|x| <= radius`.
///
/// The error estimate assumes `|c_n| <= 1`, which holds for the
/// generating functions of sub-probability sequences handled here.
pub fn extract_coefficients<G>(g: G, n_max: usize, radius: f64) -> Result<SeriesCoefficients>
where
    G: Fn(Complex64) -> Complex64,
{
    let mut out = extract_many(1, |x, buf| buf[0] = g(x), n_max, radius)?;
    Ok(out.pop().expect("one series requested"))
}

/// Like [`extract_coefficients`] for `count` functions sampled together;
/// `eval(x, out)` writes the `count` function values at `x` into `out`.
pub fn extract_many<G>(count: usize, eval: G, n_max: usize, radius: f64) -> Result<Vec<SeriesCoefficients>>
where
    G: Fn(Complex64, &mut [Complex64]),
{
    if !(radius > 0.0 && radius < 1.0) {
        return Err(Error::Domain(format!("extraction radius must lie in (0, 1), got {radius}")));
    }
    let points = MIN_POINTS.max(4 * n_max).next_power_of_two();
    let mut samples = vec![vec![Complex64::new(0.0, 0.0); points]; count];
    let mut scratch = vec![Complex64::new(0.0, 0.0); count];
    for j in 0..points {
        let theta = std::f64::consts::TAU * j as f64 / points as f64;
        let x = Complex64::from_polar(radius, theta);
        eval(x, &mut scratch);
        for (series, v) in samples.iter_mut().zip(&scratch) {
            series[j] = *v;
        }
    }

    let fft = FftPlanner::new().plan_fft_forward(points);
    let aliasing = radius.powi(points as i32) / (1.0 - radius.powi(points as i32));
    let amplification = radius.powi(-(n_max as i32));
    let mut result = Vec::with_capacity(count);
    for mut series in samples {
        let g_max = series.iter().map(|v| v.norm()).fold(0.0, f64::max);
        fft.process(&mut series);
        let mut values = Vec::with_capacity(n_max + 1);
        let mut imag_residual: f64 = 0.0;
        let mut scale = 1.0 / points as f64;
        for c in series.iter().take(n_max + 1) {
            let c = c * scale;
            values.push(c.re);
            imag_residual = imag_residual.max(c.im.abs());
            scale /= radius;
        }
        if !(imag_residual <= IMAG_TOLERANCE) {
            return Err(Error::Extraction {
                residual: imag_residual,
                tolerance: IMAG_TOLERANCE,
            });
        }
        let rounding = (points as f64).log2() * f64::EPSILON * g_max * amplification;
        result.push(SeriesCoefficients {
            values,
            radius,
            est_error: aliasing + rounding + imag_residual,
            imag_residual,
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(r: f64, w: u32) -> SlotGf {
        SlotGf::new(&SystemParams::new(0.05, 1.0, 0.05, w).unwrap(), BusyProb::new(r).unwrap())
    }

    #[test]
    fn boundary_values() {
        let g = gf(0.3, 4);
        assert!((g.eval_a(1.0) - 0.7).abs() < 1e-15);
        assert_eq!(g.eval_u(1.0).unwrap(), 1.0);
        assert_eq!(g.u_geom_sum(1.0).unwrap(), 5.0);
        assert_eq!(g.tail(1.0).unwrap(), 1.0);
        let u = g.eval_u(0.4).unwrap();
        assert!((gf(0.3, 1).u_geom_sum(0.4).unwrap() - (1.0 + u)).abs() < 1e-15);
    }

    #[test]
    fn u_needs_r_below_one() {
        assert!(matches!(gf(1.0, 4).eval_u(0.5), Err(Error::DivisionByZero(_))));
        assert!(gf(1.0, 4).u_geom_sum(0.5).is_err());
    }

    #[test]
    fn pieces_match_direct_forms_away_from_one() {
        let g = gf(0.3, 7);
        for &x in &[0.0, 0.2, 0.5, 0.8] {
            let p = g.pieces(x).unwrap();
            let u = g.eval_u(x).unwrap();
            assert!((p.u - u).abs() < 1e-14);
            assert!((p.b_minus_a - (g.eval_b(x) - g.eval_a(x))).abs() < 1e-15);
            let direct = 8.0 * u.powi(7) * (1.0 - u) / (1.0 - u.powi(8));
            assert!((p.tail_minus_one + 1.0 - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn tail_has_no_cancellation_near_one() {
        // tail(x) - 1 ~ tail'(1) (x - 1), tail'(1) = W u'(1) / 2
        let g = gf(0.3, 31);
        let s = 0.3 + 0.7 * 0.05;
        let slope = -0.05 * 31.0 * s / (2.0 * 0.7);
        for &h in &[1e-6, 1e-9, 1e-12] {
            let p = g.pieces(1.0 - h).unwrap();
            let rel = (p.tail_minus_one / (-h) - slope).abs() / slope.abs();
            assert!(rel < 1e-4, "h={h} rel={rel}");
        }
    }

    #[test]
    fn complex_expm1_matches_exp() {
        for &(a, b) in &[(0.3, -1.2), (-2.0, 0.7), (1e-9, 1e-9)] {
            let z = Complex64::new(a, b);
            let d = Scalar::exp_m1(z) - (Scalar::exp(z) - Complex64::new(1.0, 0.0));
            assert!(d.norm() < 1e-15);
        }
        let small = Scalar::exp_m1(Complex64::new(1e-12, -2e-12));
        assert!((small - Complex64::new(1e-12, -2e-12)).norm() < 1e-23);
    }

    #[test]
    fn weights_reduce_at_one() {
        let g = gf(0.2, 5);
        let w = g.backoff_weights(1.0);
        for (i, v) in w.iter().enumerate() {
            let k = i + 1;
            assert!((v - (5 - k + 1) as f64 / 6.0).abs() < 1e-15);
            assert!((g.backoff_weight(k as u32, 1.0) - v).abs() < 1e-15);
        }
        let u = 1.3f64;
        for k in 1..=5u32 {
            let direct = (u.powi(k as i32 - 1) - u.powi(5)) / (1.0 - u.powi(6));
            assert!((g.backoff_weights(u)[k as usize - 1] - direct).abs() < 1e-14);
            assert!((g.backoff_weight(k, u) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn extracts_constant_and_monomial() {
        let c = extract_coefficients(|_| Complex64::new(1.0, 0.0), 4, DEFAULT_RADIUS).unwrap();
        for (n, v) in c.values.iter().enumerate() {
            let want = if n == 0 { 1.0 } else { 0.0 };
            assert!((v - want).abs() <= c.est_error, "n={n} v={v}");
        }
        let c = extract_coefficients(|x| x, 2, DEFAULT_RADIUS).unwrap();
        assert!((c.values[0]).abs() <= c.est_error);
        assert!((c.values[1] - 1.0).abs() <= c.est_error);
        assert!((c.values[2]).abs() <= c.est_error);
    }

    #[test]
    fn extraction_rejects_bad_radius() {
        assert!(extract_coefficients(|x| x, 2, 1.0).is_err());
        assert!(extract_coefficients(|x| x, 2, 0.0).is_err());
    }

    #[test]
    fn extraction_flags_non_real_series() {
        let err = extract_coefficients(|x| x * Complex64::new(0.0, 1.0), 3, 0.5).unwrap_err();
        assert!(matches!(err, Error::Extraction { .. }));
    }
}
