// SPDX-License-Identifier: MIT OR Apache-2.0

//! Competing single change-point statistics: thresholded CUSUM sums, the
//! pointwise maximum of weighted CUSUMs and the linear and scan statistics
//! built from squared CUSUMs.
//!
//! All scans run over the same trimmed split set as the double CUSUM scan
//! (see [`candidate_splits`]), so the statistics are comparable.

use alloc::vec;
use alloc::vec::Vec;

use crate::cusum::{candidate_splits, check_window, Scanner};
use crate::error::{Error, Result};
use crate::math::{ln, sqrt};
use crate::panel::ScaledPanel;
use crate::quantile::upper_quantile;
use crate::special::chi2_quantile;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Competitor {
    Sbs,
    Jirak,
    EhLinear,
    EhScan,
    EhCombined,
}

impl Competitor {
    pub fn name(&self) -> &'static str {
        match self {
            Competitor::Sbs => "sbs",
            Competitor::Jirak => "jirak",
            Competitor::EhLinear => "eh_linear",
            Competitor::EhScan => "eh_scan",
            Competitor::EhCombined => "eh_combined",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompetitorResult {
    pub name: Competitor,
    pub stat: f64,
    /// Maximising split, when the statistic provides a location.
    pub b_hat: Option<usize>,
    pub rejected: bool,
    pub threshold_used: f64,
}

/// Scaling of the scan penalty `T_m`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScanPenalty {
    /// `2 / sqrt(2m) * {m log(ne/m) + log(nT/alpha)}`.
    #[default]
    PerCardinality,
    /// `2 / sqrt(2n) * {m log(ne/m) + log(nT/alpha)}`.
    PerDimension,
}

fn window_splits(scanner: &Scanner, start: usize, end: usize, trim: usize) -> Result<core::ops::Range<usize>> {
    check_window(scanner.n_times(), start, end)?;
    let range = candidate_splits(start, end, trim);
    if range.is_empty() {
        return Err(Error::WindowTooShort { start: start + 1, end, trim });
    }
    Ok(range)
}

// Strict comparison keeps the smallest maximiser.
fn argmax(range: core::ops::Range<usize>, mut f: impl FnMut(usize) -> f64) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, range.start);
    for b in range {
        let v = f(b);
        if v > best.0 {
            best = (v, b);
        }
    }
    best
}

/// `max_b sum_j |X^j_{s,b,e}| 1(|X^j_{s,b,e}| > pi)` and its maximiser.
pub fn sbs_statistic(
    panel: &ScaledPanel,
    start: usize,
    end: usize,
    pi: f64,
    trim: usize,
) -> Result<(f64, usize)> {
    if !(pi >= 0.0) {
        return Err(Error::Domain(alloc::format!("sparsity threshold must be non-negative, got {pi}")));
    }
    let scanner = Scanner::new(panel);
    let range = window_splits(&scanner, start, end, trim)?;
    Ok(argmax(range, |b| {
        (0..scanner.n_series())
            .map(|j| scanner.cusum(j, start, b, end).abs())
            .filter(|&x| x > pi)
            .sum()
    }))
}

/// `max_b max_j sqrt(b (T - b) / T) |X^j_{1,b,T}|` and its maximiser.
pub fn jirak_statistic(panel: &ScaledPanel, trim: usize) -> Result<(f64, usize)> {
    let scanner = Scanner::new(panel);
    let n_times = panel.n_times();
    let range = window_splits(&scanner, 0, n_times, trim)?;
    let t = n_times as f64;
    Ok(argmax(range, |b| {
        let w = sqrt(b as f64 * (t - b as f64) / t);
        (0..scanner.n_series())
            .map(|j| w * scanner.cusum(j, 0, b, n_times).abs())
            .fold(0.0, f64::max)
    }))
}

/// The linear and scan statistics on the whole panel.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EhStatistics {
    pub linear: f64,
    pub scan: f64,
    /// Either statistic exceeds one.
    pub reject: bool,
}

/// `(1 - alpha / 2)` quantile of the chi-square law with `n` degrees of freedom.
pub fn eh_linear_scale(n_series: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    chi2_quantile(1.0 - alpha / 2.0, n_series as f64)
}

/// The scan penalty `T_m`.
pub fn eh_scan_penalty(m: usize, n_series: usize, n_times: usize, alpha: f64, penalty: ScanPenalty) -> Result<f64> {
    check_alpha(alpha)?;
    if m == 0 || m > n_series {
        return Err(Error::Domain(alloc::format!("cardinality m = {m} must lie in 1..={n_series}")));
    }
    let (m, n, t) = (m as f64, n_series as f64, n_times as f64);
    let scale = match penalty {
        ScanPenalty::PerCardinality => 2.0 / sqrt(2.0 * m),
        ScanPenalty::PerDimension => 2.0 / sqrt(2.0 * n),
    };
    Ok(scale * (m * ln(n * core::f64::consts::E / m) + ln(n * t / alpha)))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(alloc::format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Linear statistic `max_b sum_j (X_j^2 - 1) / (H sqrt(2n))` and scan
/// statistic `max_b max_m sum_{j <= m} (X_(j)^2 - 1) / (T_m sqrt(2m))`.
pub fn eh_statistics(panel: &ScaledPanel, alpha: f64, trim: usize, penalty: ScanPenalty) -> Result<EhStatistics> {
    let n = panel.n_series();
    let n_times = panel.n_times();
    let h = eh_linear_scale(n, alpha)?;
    let linear_scale = 1.0 / (h * sqrt(2.0 * n as f64));
    let scan_scale = (1..=n)
        .map(|m| Ok(1.0 / (eh_scan_penalty(m, n, n_times, alpha, penalty)? * sqrt(2.0 * m as f64))))
        .collect::<Result<Vec<f64>>>()?;
    let scanner = Scanner::new(panel);
    let range = window_splits(&scanner, 0, n_times, trim)?;
    let mut sq = vec![0.0; n];
    let mut linear = f64::NEG_INFINITY;
    let mut scan = f64::NEG_INFINITY;
    for b in range {
        for (j, s) in sq.iter_mut().enumerate() {
            let x = scanner.cusum(j, 0, b, n_times);
            *s = x * x - 1.0;
        }
        let total: f64 = sq.iter().sum();
        linear = linear.max(linear_scale * total);
        sq.sort_unstable_by(|a, b| b.total_cmp(a));
        let mut head = 0.0;
        for (m, s) in sq.iter().enumerate() {
            head += s;
            scan = scan.max(scan_scale[m] * head);
        }
    }
    Ok(EhStatistics { linear, scan, reject: linear > 1.0 || scan > 1.0 })
}

/// `max_{b, j} |X^j_{1,b,T}|` over every split `b = 1..T-1`.
pub fn max_abs_cusum(panel: &ScaledPanel) -> f64 {
    let scanner = Scanner::new(panel);
    let n_times = panel.n_times();
    (1..n_times)
        .flat_map(|b| (0..scanner.n_series()).map(move |j| (j, b)))
        .map(|(j, b)| scanner.cusum(j, 0, b, n_times).abs())
        .fold(0.0, f64::max)
}

/// The `(1 - alpha)` order statistic of per-replicate `max |CUSUM|` values.
pub fn sbs_oracle_threshold(replicate_maxima: &[f64], alpha: f64) -> Result<f64> {
    upper_quantile(replicate_maxima, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::PanelData;

    fn panel(rows: &[Vec<f64>]) -> ScaledPanel {
        ScaledPanel::unit(PanelData::from_rows(rows).unwrap())
    }

    #[test]
    fn sbs_thresholds() {
        let p = panel(&[vec![0.0, 1.0, 3.0, -2.0, 0.5, 1.0, 2.0, 4.0], vec![1.0, 1.0, 0.0, 0.0, 2.0, 2.0, 2.0, 2.0]]);
        let (inf, _) = sbs_statistic(&p, 0, 8, f64::INFINITY, 0).unwrap();
        assert_eq!(inf, 0.0);
        let (zero, b) = sbs_statistic(&p, 0, 8, 0.0, 0).unwrap();
        let s = Scanner::new(&p);
        let want = (2..8)
            .map(|b| s.cusum(0, 0, b, 8).abs() + s.cusum(1, 0, b, 8).abs())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(zero, want);
        assert!((2..8).contains(&b));
        assert!(sbs_statistic(&p, 0, 8, -1.0, 0).is_err());
    }

    #[test]
    fn jirak_constant_is_zero() {
        let p = panel(&[vec![2.0; 12], vec![-1.0; 12]]);
        assert!(jirak_statistic(&p, 0).unwrap().0 < 1e-12);
    }

    #[test]
    fn penalty_value() {
        let got = eh_scan_penalty(1, 100, 100, 0.05, ScanPenalty::PerCardinality).unwrap();
        assert!((got - 25.18890117505369806510084).abs() < 1e-12);
        let other = eh_scan_penalty(1, 100, 100, 0.05, ScanPenalty::PerDimension).unwrap();
        assert!((other - got / 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_cusums_contribute_minus_n() {
        let p = panel(&[vec![1.0; 10], vec![3.0; 10], vec![0.0; 10]]);
        let eh = eh_statistics(&p, 0.05, 0, ScanPenalty::default()).unwrap();
        let h = eh_linear_scale(3, 0.05).unwrap();
        assert!((eh.linear + 3.0 / (h * sqrt(6.0))).abs() < 1e-14);
        assert!(!eh.reject);
    }

    #[test]
    fn oracle_threshold() {
        let maxima: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(sbs_oracle_threshold(&maxima, 0.1).unwrap(), 9.0);
        assert_eq!(sbs_oracle_threshold(&[3.5], 0.05).unwrap(), 3.5);
        let zero = panel(&[vec![0.0; 6]]);
        assert_eq!(max_abs_cusum(&zero), 0.0);
    }
}
