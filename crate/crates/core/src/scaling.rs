// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-series long-run variance estimation.
//!
//! Each series is first cleared of its mean shifts by a depth-limited
//! binary segmentation tree on the plain CUSUM; the residuals then feed a
//! flat-top lag-window estimator whose bandwidth is picked from the decay
//! of the sample autocovariances.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cusum::cusum_series;
use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::panel::PanelData;

/// Output of [`estimate_scales`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingEstimate {
    /// `sigma_j^2`, one per series.
    pub sigma2: Vec<f64>,
    /// Bandwidth anchors `tau_j >= 1`.
    pub tau: Vec<usize>,
    /// Mean-shift residuals, series-per-row.
    pub residuals: Vec<f64>,
    pub n_times: usize,
}

impl ScalingEstimate {
    /// `sigma_j`.
    pub fn scales(&self) -> Vec<f64> {
        self.sigma2.iter().map(|s| sqrt(*s)).collect()
    }

    /// Residuals divided by their series' scale.
    pub fn standardized_residuals(&self) -> Vec<f64> {
        let scales = self.scales();
        self.residuals
            .chunks_exact(self.n_times)
            .zip(&scales)
            .flat_map(|(row, s)| row.iter().map(move |v| v / s))
            .collect()
    }
}

/// Flat-top lag window: 1 on `|t| <= 1/2`, linear down to 0 at `|t| = 1`.
pub fn flat_top_weight(t: f64) -> f64 {
    let a = t.abs();
    if a <= 0.5 {
        1.0
    } else if a < 1.0 {
        2.0 * (1.0 - a)
    } else {
        0.0
    }
}

/// Removes piecewise means found by a binary segmentation tree of `depth` levels.
///
/// Each node splits at the maximiser of `|CUSUM|`; intervals shorter than
/// four points are not split further.
pub fn estimate_residuals(x: &[f64], depth: usize) -> Result<Vec<f64>> {
    if x.len() < 4 {
        return Err(Error::Dimension(format!(
            "residual estimation needs at least 4 points, got {}",
            x.len()
        )));
    }
    if depth == 0 {
        return Err(Error::Domain("tree depth must be at least 1".into()));
    }
    let mut residuals = x.to_vec();
    let mut stack = vec![(0usize, x.len(), 1usize)];
    while let Some((start, end, level)) = stack.pop() {
        if level > depth || end - start < 4 {
            let seg = &mut residuals[start..end];
            let mean = seg.iter().sum::<f64>() / seg.len() as f64;
            seg.iter_mut().for_each(|v| *v -= mean);
            continue;
        }
        let cusums = cusum_series(&x[start..end])?;
        let mut best = 0;
        for (i, c) in cusums.iter().enumerate() {
            if c.abs() > cusums[best].abs() {
                best = i;
            }
        }
        let split = start + best + 1;
        stack.push((split, end, level + 1));
        stack.push((start, split, level + 1));
    }
    Ok(residuals)
}

/// `c(k) = T^{-1} sum_t e_t e_{t+k}` for `k = 0..=max_lag`.
pub fn autocovariances(e: &[f64], max_lag: usize) -> Vec<f64> {
    let len = e.len();
    (0..=max_lag.min(len - 1))
        .map(|k| e[..len - k].iter().zip(&e[k..]).map(|(a, b)| a * b).sum::<f64>() / len as f64)
        .collect()
}

/// Largest bandwidth anchor searched: `max(1, floor(T / 4) - 3)`.
pub fn bandwidth_cap(n_times: usize) -> usize {
    (n_times / 4).saturating_sub(3).max(1)
}

/// Smallest `tau >= 1` with `|c(tau + k) / c(0)| < 1.4 sqrt(log10 T / T)`
/// for `k = 1, 2, 3`, or [`bandwidth_cap`] when no such `tau` exists.
///
/// `acov` must hold at least `bandwidth_cap(n_times) + 4` lags.
pub fn bandwidth(acov: &[f64], n_times: usize) -> usize {
    let t = n_times as f64;
    let bound = 1.4 * sqrt(libm::log10(t) / t);
    let cap = bandwidth_cap(n_times);
    (1..=cap)
        .find(|&tau| (1..=3).all(|k| (acov[tau + k] / acov[0]).abs() < bound))
        .unwrap_or(cap)
}

/// Flat-top kernel long-run variance of a residual series, floored at `c(0) / 2`.
///
/// Returns `(sigma2, tau)`.
pub fn long_run_variance(residuals: &[f64]) -> Result<(f64, usize)> {
    let len = residuals.len();
    if len < 8 {
        return Err(Error::Dimension(format!(
            "long-run variance needs at least 8 points, got {len}"
        )));
    }
    let cap = bandwidth_cap(len);
    let acov = autocovariances(residuals, (cap + 3).max(2 * cap));
    if acov[0] <= 0.0 || !acov[0].is_finite() {
        return Err(Error::Degenerate { series: None, reason: "residuals are identically zero".into() });
    }
    let tau = bandwidth(&acov, len);
    let window = 2 * tau;
    let kernel_sum: f64 = (1..=window)
        .map(|k| flat_top_weight(k as f64 / window as f64) * acov[k])
        .sum();
    let sigma2 = (acov[0] + 2.0 * kernel_sum).max(acov[0] / 2.0);
    Ok((sigma2, tau))
}

/// Residual extraction followed by long-run variance, independently per series.
pub fn estimate_scales(panel: &PanelData, depth: usize) -> Result<ScalingEstimate> {
    let n_times = panel.n_times();
    let mut sigma2 = Vec::with_capacity(panel.n_series());
    let mut tau = Vec::with_capacity(panel.n_series());
    let mut residuals = Vec::with_capacity(panel.values().len());
    for (j, row) in panel.rows().enumerate() {
        let with_series = |err: Error| match err {
            Error::Degenerate { reason, .. } => Error::Degenerate { series: Some(j + 1), reason },
            Error::Dimension(msg) => Error::Dimension(format!("series {}: {msg}", j + 1)),
            Error::Domain(msg) => Error::Domain(format!("series {}: {msg}", j + 1)),
            other => other,
        };
        let res = estimate_residuals(row, depth).map_err(with_series)?;
        // Round-off left over from removing exact steps is not noise.
        let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let resid_max = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if resid_max <= 64.0 * f64::EPSILON * scale {
            return Err(Error::Degenerate {
                series: Some(j + 1),
                reason: "no variation left after removing mean shifts; cannot estimate its scale".into(),
            });
        }
        let (s2, tj) = long_run_variance(&res).map_err(with_series)?;
        sigma2.push(s2);
        tau.push(tj);
        residuals.extend_from_slice(&res);
    }
    Ok(ScalingEstimate { sigma2, tau, residuals, n_times })
}
