//! Bracketed root finding on analytically known sign changes.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]`; the endpoint signs must differ.
///
/// Stops when the bracket is narrower than `tol` or an exact zero is hit.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo.signum() != f_hi.signum()) || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    // 2^-200 of any bracket in [0, 1] is far below f64 resolution
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Number of strict sign changes of `f` on `points + 1` equispaced nodes
/// spanning `[lo, hi]`; exact zeros are skipped.
pub fn sign_changes<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points: usize) -> usize {
    let mut changes = 0;
    let mut last = 0.0f64;
    for i in 0..=points {
        let x = lo + (hi - lo) * i as f64 / points as f64;
        let v = f(x);
        if v == 0.0 || v.is_nan() {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            changes += 1;
        }
        last = v;
    }
    changes
}

/// Golden-section search for the maximiser of `f` over the integers in
/// `[lo, hi]`; ties go to the smaller argument.
pub fn golden_max_int<F: FnMut(u32) -> f64>(mut f: F, lo: u32, hi: u32) -> (u32, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut cache = std::collections::BTreeMap::new();
    let mut eval = |x: u32, f: &mut F| *cache.entry(x).or_insert_with(|| f(x));
    let (mut a, mut b) = (lo as f64, hi as f64);
    while b - a > 3.0 {
        let c = (b - (b - a) * INV_PHI).round() as u32;
        let d = (a + (b - a) * INV_PHI).round() as u32;
        if c >= d {
            break;
        }
        if eval(c, &mut f) >= eval(d, &mut f) {
            b = d as f64;
        } else {
            a = c as f64;
        }
    }
    let mut best = (a as u32, f64::NEG_INFINITY);
    for x in a as u32..=b as u32 {
        let v = eval(x, &mut f);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_unbracketed() {
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12), Err(Error::Bracket { .. })));
    }

    #[test]
    fn counts_sign_changes() {
        assert_eq!(sign_changes(|x| (x - 0.3) * (x - 0.7), 0.0, 1.0, 1000), 2);
        assert_eq!(sign_changes(|x| x - 0.5, 0.0, 1.0, 10), 1);
    }

    #[test]
    fn golden_finds_integer_peak() {
        let (x, v) = golden_max_int(|w| -((w as f64) - 37.4).powi(2), 1, 4096);
        assert_eq!(x, 37);
        assert!((v + 0.16).abs() < 1e-12);
        // plateau: smaller argument wins
        let (x, _) = golden_max_int(|w| -((w as f64 - 11.0).abs() - 1.0).max(0.0), 1, 20);
        assert_eq!(x, 10);
    }
}
