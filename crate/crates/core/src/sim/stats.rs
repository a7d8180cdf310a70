use std::io::Write;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::params::ChannelMode;
use crate::table::StationaryTable;

/// Batch-means estimate: the mean of equally sized batch averages and its
/// standard error.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub batch_means: Vec<f64>,
}

impl Estimate {
    pub fn from_batches(batch_means: Vec<f64>) -> Self {
        let b = batch_means.len();
        if b == 0 {
            return Estimate::default();
        }
        let mean = batch_means.iter().sum::<f64>() / b as f64;
        let std_err = if b > 1 {
            let var = batch_means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
            (var / b as f64).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            std_err,
            batch_means,
        }
    }

    pub fn merge(&self, other: &Estimate) -> Estimate {
        let mut all = self.batch_means.clone();
        all.extend_from_slice(&other.batch_means);
        Estimate::from_batches(all)
    }

    /// `|mean - target|` in standard errors; infinite when the spread is
    /// zero and the target differs.
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = (self.mean - target).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_err
        }
    }

    pub fn within(&self, target: f64, standard_errors: f64) -> bool {
        self.z_score(target) <= standard_errors
    }

    /// t statistic of a least-squares trend through the batch means.
    pub fn trend_t(&self) -> f64 {
        let b = self.batch_means.len();
        if b < 3 {
            return 0.0;
        }
        let xs: Vec<f64> = (0..b).map(|i| i as f64).collect();
        let x_bar = (b - 1) as f64 / 2.0;
        let y_bar = self.mean;
        let sxx: f64 = xs.iter().map(|x| (x - x_bar).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&self.batch_means).map(|(x, y)| (x - x_bar) * (y - y_bar)).sum();
        let slope = sxy / sxx;
        let sse: f64 = xs
            .iter()
            .zip(&self.batch_means)
            .map(|(x, y)| (y - y_bar - slope * (x - x_bar)).powi(2))
            .sum();
        let se = (sse / (b - 2) as f64 / sxx).sqrt();
        if se == 0.0 {
            if slope == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            slope / se
        }
    }
}

/// Counts of sampled states `(k, n)`, `n <= n_max`, with larger queues in
/// `overflow`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub window: u32,
    pub n_max: usize,
    pub stride: u64,
    pub counts: Vec<u64>,
    pub overflow: u64,
    pub samples: u64,
}

impl Histogram {
    pub fn new(window: u32, n_max: usize, stride: u64) -> Self {
        Histogram {
            window,
            n_max,
            stride: stride.max(1),
            counts: vec![0; (window as usize + 1) * (n_max + 1)],
            overflow: 0,
            samples: 0,
        }
    }

    pub fn record(&mut self, k: u32, n: u64) {
        self.samples += 1;
        if n as usize > self.n_max {
            self.overflow += 1;
        } else {
            self.counts[k as usize * (self.n_max + 1) + n as usize] += 1;
        }
    }

    pub fn get(&self, k: u32, n: usize) -> u64 {
        self.counts[k as usize * (self.n_max + 1) + n]
    }

    pub fn merge(&self, other: &Histogram) -> Result<Histogram> {
        if (self.window, self.n_max, self.stride) != (other.window, other.n_max, other.stride) {
            return Err(Error::Inconsistent("histograms have different shapes".into()));
        }
        Ok(Histogram {
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect(),
            overflow: self.overflow + other.overflow,
            samples: self.samples + other.samples,
            ..self.clone()
        })
    }

    /// Pearson goodness of fit against `table`. Cells expecting fewer than
    /// five samples are pooled with the overflow cell.
    pub fn chi_square(&self, table: &StationaryTable) -> GoodnessOfFit {
        let total = self.samples as f64;
        let mut statistic = 0.0;
        let mut cells = 0usize;
        let mut pooled_observed = self.overflow as f64;
        let mut pooled_expected = 0.0;
        let mut covered = 0.0;
        for k in 0..=self.window.min(table.window()) {
            for n in 0..=self.n_max.min(table.n_max()) {
                let p = table.get(k, n).max(0.0);
                covered += p;
                let expected = total * p;
                let observed = self.get(k, n) as f64;
                if expected >= 5.0 {
                    statistic += (observed - expected).powi(2) / expected;
                    cells += 1;
                } else {
                    pooled_observed += observed;
                    pooled_expected += expected;
                }
            }
        }
        pooled_expected += total * (1.0 - covered).max(0.0);
        if pooled_expected > 0.0 {
            statistic += (pooled_observed - pooled_expected).powi(2) / pooled_expected;
            cells += 1;
        }
        let dof = cells.saturating_sub(1).max(1);
        let critical = ChiSquared::new(dof as f64)
            .map(|d| d.inverse_cdf(0.999))
            .unwrap_or(f64::INFINITY);
        GoodnessOfFit {
            statistic,
            dof,
            critical_001: critical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodnessOfFit {
    pub statistic: f64,
    pub dof: usize,
    /// Critical value at significance 0.1%.
    pub critical_001: f64,
}

impl GoodnessOfFit {
    pub fn passes(&self) -> bool {
        self.statistic < self.critical_001
    }
}

/// Monte-Carlo estimates from one or more runs.
///
/// For network runs the per-station quantities are averaged over stations.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub mode: ChannelMode,
    pub seeds: Vec<u64>,
    pub stations: u32,
    /// Measured epochs, after warm-up.
    pub epochs: u64,
    pub warmup: u64,
    pub idle_fraction: Estimate,
    pub transmit_fraction: Estimate,
    pub mean_queue: Estimate,
    pub mean_backoff: Estimate,
    /// Mean time between epochs.
    pub mean_cycle: Estimate,
    /// Arrival to start of transmission, per real packet.
    pub packet_wait: Estimate,
    /// Wait of a hypothetical packet arriving at an epoch (greedy station runs).
    pub virtual_wait: Estimate,
    /// `E[exp(-s * virtual wait)]` for each probed `s`.
    pub wait_transform: Vec<(f64, Estimate)>,
    pub full_slots: u64,
    pub mini_slots: u64,
    pub transmissions: u64,
    pub success_slots: u64,
    pub collision_slots: u64,
    pub histogram: Option<Histogram>,
    /// Set when the queue shows a significant upward trend across batches.
    pub drift_warning: bool,
}

impl SimStats {
    /// Pools two runs of the same experiment with different seeds.
    pub fn merge(&self, other: &SimStats) -> Result<SimStats> {
        if self.mode != other.mode || self.stations != other.stations {
            return Err(Error::Inconsistent("cannot merge runs of different experiments".into()));
        }
        let probes_a: Vec<f64> = self.wait_transform.iter().map(|p| p.0).collect();
        let probes_b: Vec<f64> = other.wait_transform.iter().map(|p| p.0).collect();
        if probes_a != probes_b {
            return Err(Error::Inconsistent("runs probed different transform arguments".into()));
        }
        let histogram = match (&self.histogram, &other.histogram) {
            (Some(a), Some(b)) => Some(a.merge(b)?),
            (None, None) => None,
            _ => return Err(Error::Inconsistent("only one run recorded a histogram".into())),
        };
        let mean_queue = self.mean_queue.merge(&other.mean_queue);
        Ok(SimStats {
            mode: self.mode,
            seeds: self.seeds.iter().chain(&other.seeds).copied().collect(),
            stations: self.stations,
            epochs: self.epochs + other.epochs,
            warmup: self.warmup + other.warmup,
            idle_fraction: self.idle_fraction.merge(&other.idle_fraction),
            transmit_fraction: self.transmit_fraction.merge(&other.transmit_fraction),
            mean_backoff: self.mean_backoff.merge(&other.mean_backoff),
            mean_cycle: self.mean_cycle.merge(&other.mean_cycle),
            packet_wait: self.packet_wait.merge(&other.packet_wait),
            virtual_wait: self.virtual_wait.merge(&other.virtual_wait),
            wait_transform: self
                .wait_transform
                .iter()
                .zip(&other.wait_transform)
                .map(|(a, b)| (a.0, a.1.merge(&b.1)))
                .collect(),
            full_slots: self.full_slots + other.full_slots,
            mini_slots: self.mini_slots + other.mini_slots,
            transmissions: self.transmissions + other.transmissions,
            success_slots: self.success_slots + other.success_slots,
            collision_slots: self.collision_slots + other.collision_slots,
            histogram,
            drift_warning: self.drift_warning || other.drift_warning,
            mean_queue,
        })
    }

    /// `metric,mean,std_err` rows, counters with a zero error column.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "metric,mean,std_err")?;
        let rows = [
            ("idle_fraction", &self.idle_fraction),
            ("transmit_fraction", &self.transmit_fraction),
            ("mean_queue", &self.mean_queue),
            ("mean_backoff", &self.mean_backoff),
            ("mean_cycle", &self.mean_cycle),
            ("packet_wait", &self.packet_wait),
            ("virtual_wait", &self.virtual_wait),
        ];
        for (name, e) in rows {
            writeln!(out, "{name},{},{}", e.mean, e.std_err)?;
        }
        for (s, e) in &self.wait_transform {
            writeln!(out, "wait_transform(s={s}),{},{}", e.mean, e.std_err)?;
        }
        let counters = [
            ("epochs", self.epochs),
            ("full_slots", self.full_slots),
            ("mini_slots", self.mini_slots),
            ("transmissions", self.transmissions),
            ("success_slots", self.success_slots),
            ("collision_slots", self.collision_slots),
            ("drift_warning", self.drift_warning as u64),
        ];
        for (name, v) in counters {
            writeln!(out, "{name},{v},0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_means() {
        let e = Estimate::from_batches(vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.std_err - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(e.within(2.5 + e.std_err, 1.0));
        assert!(e.trend_t() == f64::INFINITY);
        let merged = e.merge(&Estimate::from_batches(vec![5.0]));
        assert_eq!(merged.batch_means.len(), 5);
        assert_eq!(merged.mean, 3.0);
    }

    #[test]
    fn merge_is_associative() {
        let a = Estimate::from_batches(vec![1.0, 2.0]);
        let b = Estimate::from_batches(vec![0.5]);
        let c = Estimate::from_batches(vec![4.0, 1.5]);
        assert_eq!(a.merge(&b).merge(&c), a.merge(&b.merge(&c)));
    }

    #[test]
    fn perfect_fit_has_zero_statistic() {
        let mut t = StationaryTable::zeros(1, 10);
        t.set(0, 0, 0.5);
        t.set(1, 1, 0.5);
        let mut h = Histogram::new(1, 10, 1);
        for _ in 0..50 {
            h.record(0, 0);
            h.record(1, 1);
        }
        let fit = h.chi_square(&t);
        assert_eq!(fit.statistic, 0.0);
        assert!(fit.passes());
    }
}
