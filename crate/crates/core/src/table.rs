use std::io::Write;

use crate::error::Result;

/// Truncated joint distribution `p(k, n)` of back-off counter and queue
/// length, `k in 0..=W`, `n in 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryTable {
    window: u32,
    n_max: usize,
    probs: Vec<f64>,
    /// Bound on the per-entry error of the table (extraction or solve).
    pub est_error: f64,
}

impl StationaryTable {
    pub fn zeros(window: u32, n_max: usize) -> Self {
        StationaryTable {
            window,
            n_max,
            probs: vec![0.0; (window as usize + 1) * (n_max + 1)],
            est_error: 0.0,
        }
    }

    pub(crate) fn from_rows(rows: Vec<Vec<f64>>, est_error: f64) -> Self {
        let window = rows.len() as u32 - 1;
        let n_max = rows[0].len() - 1;
        let probs = rows.into_iter().flatten().collect();
        StationaryTable {
            window,
            n_max,
            probs,
            est_error,
        }
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn index(&self, k: u32, n: usize) -> usize {
        k as usize * (self.n_max + 1) + n
    }

    pub fn get(&self, k: u32, n: usize) -> f64 {
        self.probs[self.index(k, n)]
    }

    pub fn set(&mut self, k: u32, n: usize, p: f64) {
        let i = self.index(k, n);
        self.probs[i] = p;
    }

    pub fn row(&self, k: u32) -> &[f64] {
        let start = self.index(k, 0);
        &self.probs[start..start + self.n_max + 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `sum_{n >= 1} p(0, n)`: probability the station holds a packet with
    /// its counter at zero.
    pub fn transmit_prob(&self) -> f64 {
        self.row(0)[1..].iter().sum()
    }

    pub fn mean_queue(&self) -> f64 {
        (0..=self.window)
            .flat_map(|k| self.row(k).iter().enumerate())
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    pub fn mean_backoff(&self) -> f64 {
        (0..=self.window)
            .map(|k| k as f64 * self.row(k).iter().sum::<f64>())
            .sum()
    }

    /// Mass in the last queue column, a proxy for truncation loss.
    pub fn top_mass(&self) -> f64 {
        (0..=self.window).map(|k| self.get(k, self.n_max)).sum()
    }

    /// Largest entrywise difference over the common index range.
    pub fn max_abs_diff(&self, other: &StationaryTable) -> f64 {
        let window = self.window.min(other.window);
        let n_max = self.n_max.min(other.n_max);
        let mut worst: f64 = 0.0;
        for k in 0..=window {
            for n in 0..=n_max {
                worst = worst.max((self.get(k, n) - other.get(k, n)).abs());
            }
        }
        worst
    }

    /// Writes `k,n,probability` rows after a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,n,probability")?;
        for k in 0..=self.window {
            for (n, p) in self.row(k).iter().enumerate() {
                writeln!(out, "{k},{n},{p}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_and_csv() {
        let mut t = StationaryTable::zeros(2, 3);
        t.set(0, 0, 0.5);
        t.set(0, 2, 0.25);
        t.set(2, 1, 0.25);
        assert_eq!(t.total(), 1.0);
        assert_eq!(t.transmit_prob(), 0.25);
        assert_eq!(t.mean_queue(), 0.75);
        assert_eq!(t.mean_backoff(), 0.5);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,n,probability\n0,0,0.5\n"));
        assert_eq!(text.lines().count(), 1 + 3 * 4);
    }
}
