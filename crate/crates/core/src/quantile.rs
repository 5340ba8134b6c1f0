// SPDX-License-Identifier: MIT OR Apache-2.0

//! Empirical upper quantiles.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// 1-based rank `ceil((1 - alpha) * len)` clamped to `1..=len`.
///
/// A small slack absorbs binary rounding in `(1 - alpha) * len`, so that
/// e.g. `alpha = 0.1, len = 10` gives rank 9 rather than 10.
pub fn upper_rank(len: usize, alpha: f64) -> usize {
    let raw = (1.0 - alpha) * len as f64 - 1e-9;
    (libm::ceil(raw) as usize).clamp(1, len)
}

/// The `(1 - alpha)` order statistic of `values`.
pub fn upper_quantile(values: &[f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("quantile of an empty sample".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(alloc::format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[upper_rank(sorted.len(), alpha) - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks() {
        assert_eq!(upper_rank(10, 0.1), 9);
        assert_eq!(upper_rank(100, 0.05), 95);
        assert_eq!(upper_rank(100, 0.05 / 3.0), 99);
        assert_eq!(upper_rank(1, 0.05), 1);
    }

    #[test]
    fn quantile_values() {
        let xs: Vec<f64> = (1..=10).rev().map(f64::from).collect();
        assert_eq!(upper_quantile(&xs, 0.1).unwrap(), 9.0);
        assert_eq!(upper_quantile(&[4.2], 0.05).unwrap(), 4.2);
        assert!(upper_quantile(&[], 0.05).is_err());
        assert!(upper_quantile(&[1.0], 1.0).is_err());
    }

    #[test]
    fn quantile_monotone_in_alpha() {
        let xs: Vec<f64> = (0..37).map(|i| libm::sin(i as f64 * 1.7)).collect();
        let mut last = f64::INFINITY;
        for k in 1..20 {
            let q = upper_quantile(&xs, k as f64 * 0.04).unwrap();
            assert!(q <= last);
            last = q;
        }
    }
}
