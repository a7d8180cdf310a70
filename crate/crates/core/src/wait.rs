//! Virtual waiting time of a greedy station.
//!
//! A packet that arrives at an embedded epoch in state `(k, n)` waits for
//! the counter to run out and then for the `n` packets ahead of it, each
//! costing a full slot plus a fresh back-off. With
//!
//! ```text
//! f(s) = (1-r) e^(-s sigma) / (1 - r e^(-sT))         one counter decrement
//! v(s) = e^(-sT) (1 + f + ... + f^W) / (W+1)          one packet ahead
//! ```
//!
//! the conditional transform is `f(s)^k v(s)^n`, so the stationary one is
//! `psi(s) = sum_k f(s)^k F_k(v(s))`.

use crate::error::{Error, Result};
use crate::greedy::GreedySolution;
use crate::table::StationaryTable;

const DIFF_STEPS: [f64; 3] = [1e-3, 1e-4, 1e-5];
const DIFF_AGREEMENT: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct WaitTransform {
    solution: GreedySolution,
    p00: f64,
}

impl WaitTransform {
    /// Fails with [`Error::NonErgodic`] outside the stable region.
    pub fn new(solution: GreedySolution) -> Result<Self> {
        let p00 = solution.p00()?;
        Ok(WaitTransform { solution, p00 })
    }

    pub fn solution(&self) -> &GreedySolution {
        &self.solution
    }

    fn check_s(s: f64) -> Result<()> {
        if s >= 0.0 && s.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!("transform argument must be finite and >= 0, got {s}")))
        }
    }

    pub fn f(&self, s: f64) -> Result<f64> {
        Self::check_s(s)?;
        let p = self.solution.params();
        let r = self.solution.busy().get();
        Ok((1.0 - r) * (-s * p.mini_slot).exp() / (1.0 - r * (-s * p.slot).exp()))
    }

    pub fn v(&self, s: f64) -> Result<f64> {
        let f = self.f(s)?;
        let p = self.solution.params();
        let mut sum = 0.0;
        let mut term = 1.0;
        for _ in 0..=p.window {
            sum += term;
            term *= f;
        }
        Ok((-s * p.slot).exp() * sum / (p.window as f64 + 1.0))
    }

    /// Laplace-Stieltjes transform of the stationary virtual wait.
    pub fn psi(&self, s: f64) -> Result<f64> {
        Self::check_s(s)?;
        if s == 0.0 {
            return Ok(1.0);
        }
        let f = self.f(s)?;
        let v = self.v(s)?;
        let values = self.solution.all_at(self.p00, v)?;
        let mut power = 1.0;
        let mut total = 0.0;
        for fk in values {
            total += power * fk;
            power *= f;
        }
        Ok(total)
    }

    /// `sum_{k,n} p(k,n) f^k v^n` over a finite table.
    pub fn psi_from_table(&self, table: &StationaryTable, s: f64) -> Result<f64> {
        let f = self.f(s)?;
        let v = self.v(s)?;
        let mut total = 0.0;
        for k in 0..=table.window() {
            let fk = f.powi(k as i32);
            let mut vn = 1.0;
            for &p in table.row(k) {
                total += p * fk * vn;
                vn *= v;
            }
        }
        Ok(total)
    }

    fn one_sided_derivative(&self, h: f64) -> Result<f64> {
        let mut psi = [1.0; 5];
        for (i, slot) in psi.iter_mut().enumerate().skip(1) {
            *slot = self.psi(i as f64 * h)?;
        }
        Ok((-25.0 * psi[0] + 48.0 * psi[1] - 36.0 * psi[2] + 16.0 * psi[3] - 3.0 * psi[4]) / (12.0 * h))
    }

    fn richardson(&self, h: f64) -> Result<f64> {
        let coarse = self.one_sided_derivative(h)?;
        let fine = self.one_sided_derivative(0.5 * h)?;
        Ok((16.0 * fine - coarse) / 15.0)
    }

    /// Mean virtual wait `-psi'(0)`.
    pub fn mean_wait(&self) -> Result<f64> {
        let mut previous: Option<f64> = None;
        let mut estimate = 0.0;
        for h in DIFF_STEPS {
            estimate = -self.richardson(h)?;
            if let Some(prev) = previous {
                if (estimate - prev).abs() <= DIFF_AGREEMENT * prev.abs().max(1e-12) {
                    estimate = prev;
                    break;
                }
            }
            previous = Some(estimate);
        }
        if estimate < -1e-9 {
            return Err(Error::Inconsistent(format!("mean wait evaluated to {estimate}")));
        }
        Ok(estimate.max(0.0))
    }

    /// Mean time between embedded epochs,
    /// `[r + tau (1-r)] T + (1-r)(1-tau) sigma`.
    pub fn mean_cycle_length(&self) -> Result<f64> {
        let tau = self.solution.tau()?;
        Ok(mean_cycle_length(
            self.solution.busy().get(),
            tau,
            self.solution.params().slot,
            self.solution.params().mini_slot,
        ))
    }
}

/// `[r + tau (1-r)] T + (1-r)(1-tau) sigma`.
pub fn mean_cycle_length(r: f64, tau: f64, slot: f64, mini_slot: f64) -> f64 {
    (r + tau * (1.0 - r)) * slot + (1.0 - r) * (1.0 - tau) * mini_slot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{BusyProb, SystemParams};

    fn transform(lambda: f64) -> WaitTransform {
        let params = SystemParams::new(lambda, 1.0, 0.05, 4).unwrap();
        WaitTransform::new(GreedySolution::new(&params, BusyProb::new(0.3).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn values_at_zero() {
        let w = transform(0.05);
        assert_eq!(w.f(0.0).unwrap(), 1.0);
        assert_eq!(w.v(0.0).unwrap(), 1.0);
        assert_eq!(w.psi(0.0).unwrap(), 1.0);
        assert!(w.psi(-1.0).is_err());
    }

    #[test]
    fn large_s_limits() {
        let w = transform(0.05);
        assert!(w.f(800.0).unwrap() < 1e-15);
        assert!(w.v(800.0).unwrap() < 1e-300);
        let p00 = w.solution().p00().unwrap();
        assert!((w.psi(800.0).unwrap() - p00).abs() < 1e-12);
    }

    #[test]
    fn empty_system_never_waits() {
        let w = transform(1e-12);
        for s in [0.1, 1.0, 10.0] {
            assert!((w.psi(s).unwrap() - 1.0).abs() < 1e-9);
        }
        assert!(w.mean_wait().unwrap() < 1e-9);
    }

    #[test]
    fn mean_wait_matches_moment_formula() {
        let w = transform(0.05);
        let table = w.solution().stationary_table(60).unwrap();
        let (r, sigma, t, win) = (0.3, 0.05, 1.0, 4.0);
        let m = sigma + r * t / (1.0 - r);
        let expected = m * table.mean_backoff() + (t + win * m / 2.0) * table.mean_queue();
        let got = w.mean_wait().unwrap();
        assert!((got - expected).abs() < 1e-8, "{got} vs {expected}");
    }

    #[test]
    fn cycle_length_limits() {
        assert_eq!(mean_cycle_length(0.0, 0.0, 1.0, 0.05), 0.05);
        assert_eq!(mean_cycle_length(1.0, 0.3, 1.0, 0.05), 1.0);
    }
}
