//! Brute-force stationary distribution of the `(k, n)` chain with the queue
//! truncated at `n_max`. Arrivals that would push the queue past `n_max`
//! are lumped into `n_max`, so every row of the kernel is a probability
//! vector.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::params::{BusyProb, ChannelMode, SystemParams};
use crate::table::StationaryTable;

pub const DEFAULT_N_MAX: usize = 60;
/// Largest state space solved by dense LU; bigger chains use power iteration.
pub const DENSE_LIMIT: usize = 2500;
const POWER_ITERATION_CAP: usize = 2_000_000;
const AUTO_N_MAX_CAP: usize = 3840;

/// Poisson pmf truncated at `len - 1`, with the remaining mass in the last
/// cell.
fn lumped_poisson(mean: f64, len: usize) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(len);
    let mut term = (-mean).exp();
    let mut acc = 0.0;
    for j in 0..len - 1 {
        pmf.push(term);
        acc += term;
        term *= mean / (j + 1) as f64;
    }
    pmf.push((1.0 - acc).max(0.0));
    pmf
}

/// Arrival distributions for the two slot lengths, indexed by count.
struct Arrivals {
    slot: Vec<f64>,
    mini: Vec<f64>,
}

/// Sparse row-stochastic kernel over `(k, n)`, `k <= W`, `n <= n_max`.
#[derive(Debug, Clone)]
pub struct TruncatedChain {
    mode: ChannelMode,
    params: SystemParams,
    r: f64,
    n_max: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TruncatedChain {
    pub fn build_kernel(mode: ChannelMode, params: &SystemParams, busy: BusyProb, n_max: usize) -> Result<Self> {
        if n_max < 10 {
            return Err(Error::invalid("n_max", "the truncated chain needs n_max >= 10"));
        }
        let width = n_max + 1;
        let window = params.window;
        let states = (window as usize + 1) * width;
        let arrivals = Arrivals {
            slot: lumped_poisson(params.lambda * params.slot, width + 1),
            mini: lumped_poisson(params.lambda * params.mini_slot, width + 1),
        };
        let r = busy.get();
        let mut rows = Vec::with_capacity(states);
        let mut dense = vec![0.0; states];
        for k in 0..=window {
            for n in 0..=n_max {
                if k > 0 {
                    countdown(&mut dense, &arrivals, r, k, n, n_max);
                } else if n == 0 {
                    idle(&mut dense, &arrivals, r, window, n_max);
                } else {
                    match mode {
                        ChannelMode::Greedy => transmit(&mut dense, &arrivals.slot, 1.0, window, n, n_max),
                        ChannelMode::Fair => {
                            transmit(&mut dense, &arrivals.slot, r, window, n, n_max);
                            redraw(&mut dense, &arrivals.mini, 1.0 - r, window, n, n_max);
                        }
                    }
                }
                let row: Vec<(usize, f64)> = dense
                    .iter_mut()
                    .enumerate()
                    .filter(|(_, p)| **p != 0.0)
                    .map(|(j, p)| (j, std::mem::take(p)))
                    .collect();
                rows.push(row);
            }
        }
        Ok(TruncatedChain {
            mode,
            params: *params,
            r,
            n_max,
            rows,
        })
    }

    pub fn mode(&self) -> ChannelMode {
        self.mode
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, state: usize) -> &[(usize, f64)] {
        &self.rows[state]
    }

    fn index(&self, k: u32, n: usize) -> usize {
        k as usize * (self.n_max + 1) + n
    }

    /// `pi P`.
    pub fn apply(&self, pi: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; pi.len()];
        for (from, row) in self.rows.iter().enumerate() {
            let mass = pi[from];
            if mass == 0.0 {
                continue;
            }
            for &(to, p) in row {
                next[to] += mass * p;
            }
        }
        next
    }

    /// Largest `|pi P - pi|`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        self.apply(pi)
            .iter()
            .zip(pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn solve_dense(&self) -> Result<Vec<f64>> {
        let size = self.states();
        // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1
        let mut a = DMatrix::<f64>::zeros(size, size);
        for (from, row) in self.rows.iter().enumerate() {
            for &(to, p) in row {
                a[(to, from)] += p;
            }
        }
        for i in 0..size {
            a[(i, i)] -= 1.0;
        }
        for j in 0..size {
            a[(size - 1, j)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(size);
        rhs[size - 1] = 1.0;
        let pi = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Inconsistent("singular balance system".into()))?;
        Ok(pi.iter().copied().collect())
    }

    fn solve_power(&self, tol: f64) -> Result<Vec<f64>> {
        let mut pi = vec![0.0; self.states()];
        pi[0] = 1.0;
        let mut residual = f64::INFINITY;
        for _ in 0..POWER_ITERATION_CAP {
            let next = self.apply(&pi);
            residual = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            pi = next;
            if residual <= tol {
                return Ok(pi);
            }
        }
        Err(Error::NotConverged {
            iterations: POWER_ITERATION_CAP,
            residual,
        })
    }

    /// Stationary distribution, normalised, with its residual and leak.
    pub fn stationary(&self, tol: f64) -> Result<OracleSolution> {
        let mut pi = if self.states() <= DENSE_LIMIT {
            self.solve_dense()?
        } else {
            self.solve_power(tol)?
        };
        let total: f64 = pi.iter().sum();
        for p in &mut pi {
            *p /= total;
        }
        let residual = self.residual(&pi);
        if residual > tol {
            return Err(Error::NotConverged { iterations: 0, residual });
        }
        let window = self.params.window;
        let rows = (0..=window)
            .map(|k| pi[self.index(k, 0)..=self.index(k, self.n_max)].to_vec())
            .collect();
        let table = StationaryTable::from_rows(rows, residual);
        let leak = table.top_mass();
        Ok(OracleSolution {
            table,
            leak,
            residual,
            n_max: self.n_max,
        })
    }

    /// Solves at `n_max`, `2 n_max`, ... until `p(0,0)` moves by at most
    /// `stability`.
    pub fn stationary_auto(
        mode: ChannelMode,
        params: &SystemParams,
        busy: BusyProb,
        tol: f64,
        stability: f64,
    ) -> Result<OracleSolution> {
        let mut n_max = DEFAULT_N_MAX;
        let mut last = Self::build_kernel(mode, params, busy, n_max)?.stationary(tol)?;
        while n_max * 2 <= AUTO_N_MAX_CAP {
            n_max *= 2;
            let next = Self::build_kernel(mode, params, busy, n_max)?.stationary(tol)?;
            let moved = (next.table.get(0, 0) - last.table.get(0, 0)).abs();
            last = next;
            if moved <= stability {
                return Ok(last);
            }
        }
        Err(Error::NotConverged {
            iterations: n_max,
            residual: last.leak,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

/// Counter above zero: a full slot freezes it, a mini-slot decrements it.
/// Identical in both modes.
fn countdown(row: &mut [f64], arrivals: &Arrivals, r: f64, k: u32, n: usize, n_max: usize) {
    let width = n_max + 1;
    let frozen = k as usize * width;
    let decremented = (k as usize - 1) * width;
    for (j, p) in arrivals.slot.iter().enumerate() {
        row[frozen + (n + j).min(n_max)] += r * p;
    }
    for (j, p) in arrivals.mini.iter().enumerate() {
        row[decremented + (n + j).min(n_max)] += (1.0 - r) * p;
    }
}

/// Queue of `queue` packets after the slot, with the head's counter drawn
/// uniformly on `0..=W`. Shared by both modes.
fn uniform_counter(row: &mut [f64], weight: f64, window: u32, queue: usize, n_max: usize) {
    let share = weight / (window as f64 + 1.0);
    for k in 0..=window as usize {
        row[k * (n_max + 1) + queue.min(n_max)] += share;
    }
}

/// Empty station: arrivals during either slot type start a back-off.
fn idle(row: &mut [f64], arrivals: &Arrivals, r: f64, window: u32, n_max: usize) {
    for (weight, pmf) in [(r, &arrivals.slot), (1.0 - r, &arrivals.mini)] {
        row[0] += weight * pmf[0];
        for (j, p) in pmf.iter().enumerate().skip(1) {
            uniform_counter(row, weight * p, window, j, n_max);
        }
    }
}

/// Head-of-line transmission in a full slot.
fn transmit(row: &mut [f64], slot_pmf: &[f64], weight: f64, window: u32, n: usize, n_max: usize) {
    for (j, p) in slot_pmf.iter().enumerate() {
        let after = n - 1 + j;
        if after == 0 {
            row[0] += weight * p;
        } else {
            uniform_counter(row, weight * p, window, after, n_max);
        }
    }
}

/// Fair mode only: a head-of-line packet meeting a mini-slot backs off again.
fn redraw(row: &mut [f64], mini_pmf: &[f64], weight: f64, window: u32, n: usize, n_max: usize) {
    for (j, p) in mini_pmf.iter().enumerate() {
        uniform_counter(row, weight * p, window, n + j, n_max);
    }
}

/// Stationary solve of a truncated chain.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub table: StationaryTable,
    /// Mass in the top queue level.
    pub leak: f64,
    pub residual: f64,
    pub n_max: usize,
}

fn poisson_pmf(mean: f64, upto: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(upto + 1);
    let mut term = (-mean).exp();
    for j in 0..=upto {
        out.push(term);
        term *= mean / (j + 1) as f64;
    }
    out
}

/// Largest violation of the printed balance equations for `1 <= n <= n_limit`,
/// together with the two boundary conditions (`p(k,0) = 0` for `k >= 1` and
/// the `p(0,1)` relation), evaluated on a table.
///
/// Written directly from the balance equations rather than from the kernel,
/// so it checks the kernel construction as well as the solve.
pub fn balance_residual(
    mode: ChannelMode,
    params: &SystemParams,
    busy: BusyProb,
    table: &StationaryTable,
    n_limit: usize,
) -> f64 {
    let r = busy.get();
    let w = params.window;
    let share = 1.0 / (w as f64 + 1.0);
    let pt = poisson_pmf(params.lambda * params.slot, n_limit + 1);
    let ps = poisson_pmf(params.lambda * params.mini_slot, n_limit + 1);
    let p = |k: u32, n: usize| table.get(k, n);
    let q00 = p(0, 0);
    let mut worst: f64 = 0.0;
    for n in 1..=n_limit.min(table.n_max() - 1) {
        for k in 0..=w {
            let mut rhs = 0.0;
            if k < w {
                rhs += (1.0 - r) * (0..=n).map(|j| ps[j] * p(k + 1, n - j)).sum::<f64>();
            }
            if k > 0 {
                rhs += r * (0..=n).map(|j| pt[j] * p(k, n - j)).sum::<f64>();
            }
            let head: f64 = (0..=n).map(|j| pt[j] * p(0, n + 1 - j)).sum();
            match mode {
                ChannelMode::Greedy => {
                    rhs += share * head;
                    rhs += share * ((1.0 - r) * ps[n] + r * pt[n]) * q00;
                }
                ChannelMode::Fair => {
                    let back: f64 = (0..=n).map(|j| ps[j] * p(0, n - j)).sum();
                    rhs += share * (r * head + (1.0 - r) * back);
                    rhs += share * r * pt[n] * q00;
                }
            }
            worst = worst.max((p(k, n) - rhs).abs());
        }
    }
    for k in 1..=w {
        worst = worst.max(p(k, 0).abs());
    }
    worst.max(boundary_residual(mode, params, busy, table))
}

/// `|c e^(-lambda T) p(0,1) - p(0,0) [1 - r e^(-lambda T) - (1-r) e^(-lambda sigma)]|`
/// with `c = 1` (greedy) or `c = r` (fair).
pub fn boundary_residual(mode: ChannelMode, params: &SystemParams, busy: BusyProb, table: &StationaryTable) -> f64 {
    let r = busy.get();
    let et = (-params.lambda * params.slot).exp();
    let es = (-params.lambda * params.mini_slot).exp();
    let c = match mode {
        ChannelMode::Greedy => 1.0,
        ChannelMode::Fair => r,
    };
    (c * et * table.get(0, 1) - table.get(0, 0) * (1.0 - r * et - (1.0 - r) * es)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64, w: u32) -> SystemParams {
        SystemParams::new(lambda, 1.0, 0.05, w).unwrap()
    }

    #[test]
    fn rows_are_stochastic() {
        for mode in [ChannelMode::Greedy, ChannelMode::Fair] {
            let chain = TruncatedChain::build_kernel(mode, &params(0.3, 4), BusyProb::new(0.4).unwrap(), 12).unwrap();
            for s in 0..chain.states() {
                let sum: f64 = chain.row(s).iter().map(|e| e.1).sum();
                assert!((sum - 1.0).abs() < 1e-15, "row {s}: {sum}");
            }
        }
    }

    #[test]
    fn rejects_small_truncation() {
        assert!(TruncatedChain::build_kernel(ChannelMode::Greedy, &params(0.1, 4), BusyProb::IDLE, 9).is_err());
    }

    #[test]
    fn no_arrivals_means_idle() {
        let p = SystemParams {
            lambda: 0.0,
            ..params(0.1, 1)
        };
        let chain = TruncatedChain::build_kernel(ChannelMode::Greedy, &p, BusyProb::new(0.5).unwrap(), 10).unwrap();
        let sol = chain.stationary(1e-13).unwrap();
        assert!((sol.table.get(0, 0) - 1.0).abs() < 1e-14);
        assert!(sol.leak < 1e-14);
    }

    #[test]
    fn shared_counter_rows_match_between_modes() {
        let p = params(0.05, 4);
        let busy = BusyProb::new(0.3).unwrap();
        let g = TruncatedChain::build_kernel(ChannelMode::Greedy, &p, busy, 20).unwrap();
        let f = TruncatedChain::build_kernel(ChannelMode::Fair, &p, busy, 20).unwrap();
        for s in 21..g.states() {
            assert_eq!(g.row(s), f.row(s));
        }
        assert_eq!(g.row(0), f.row(0));
        assert_ne!(g.row(1), f.row(1));
    }

    #[test]
    fn power_iteration_agrees_with_lu() {
        let chain =
            TruncatedChain::build_kernel(ChannelMode::Fair, &params(0.04, 4), BusyProb::new(0.4).unwrap(), 20).unwrap();
        let lu = chain.solve_dense().unwrap();
        let pw = chain.solve_power(1e-15).unwrap();
        let diff = lu.iter().zip(&pw).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn balance_equations_hold() {
        let p = params(0.05, 4);
        let busy = BusyProb::new(0.3).unwrap();
        for mode in [ChannelMode::Greedy, ChannelMode::Fair] {
            let sol = TruncatedChain::build_kernel(mode, &p, busy, 60).unwrap().stationary(1e-13).unwrap();
            assert!(balance_residual(mode, &p, busy, &sol.table, 40) < 1e-13);
        }
    }
}
