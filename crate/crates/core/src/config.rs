// SPDX-License-Identifier: MIT OR Apache-2.0

//! Detector tuning knobs.

use crate::cusum::DcMode;
use crate::error::{Error, Result};
use crate::math::{floor, ln};

/// How bootstrap statistics over windows shorter than the panel become a
/// test criterion for one window of that length.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum WindowRule {
    /// Quantile of the statistics of every window position in every replicate.
    #[default]
    Pooled,
    /// Quantile of each replicate's maximum over window positions.
    Max,
}

impl core::fmt::Display for WindowRule {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            WindowRule::Pooled => "pooled",
            WindowRule::Max => "max",
        })
    }
}

/// Tuning for the full detection pipeline.
///
/// `mode` and `depth` default from the panel size when left as `None`:
/// the combined statistic with `gamma = log n`, and `L_T = [log2(log T + 1)]`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DetectorConfig {
    pub mode: Option<DcMode>,
    pub alpha_star: f64,
    pub boot_reps: usize,
    pub trim: usize,
    pub depth: Option<usize>,
    pub seed: u64,
    pub bonferroni: bool,
    pub window_rule: WindowRule,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            mode: None,
            alpha_star: 0.05,
            boot_reps: 100,
            trim: 5,
            depth: None,
            seed: 0,
            bonferroni: true,
            window_rule: WindowRule::Pooled,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_star > 0.0 && self.alpha_star < 1.0) {
            return Err(Error::Domain(alloc::format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha_star
            )));
        }
        if self.boot_reps == 0 {
            return Err(Error::Domain("number of bootstrap replicates must be at least 1".into()));
        }
        if self.depth == Some(0) {
            return Err(Error::Domain("scaling tree depth must be at least 1".into()));
        }
        if let Some(mode) = self.mode {
            mode.validate()?;
        }
        Ok(())
    }

    pub fn mode_for(&self, n_series: usize) -> DcMode {
        self.mode.unwrap_or_else(|| DcMode::combined_default(n_series))
    }

    pub fn depth_for(&self, n_times: usize) -> usize {
        self.depth.unwrap_or_else(|| default_depth(n_times))
    }

    /// Per-test level: `alpha* / (2^L_T - 1)` under Bonferroni, else `alpha*`.
    pub fn alpha_for(&self, n_times: usize) -> f64 {
        if self.bonferroni {
            let depth = self.depth_for(n_times).min(52) as i32;
            self.alpha_star / (libm::pow(2.0, f64::from(depth)) - 1.0)
        } else {
            self.alpha_star
        }
    }
}

/// `[log2(log T + 1)]`, at least 1.
pub fn default_depth(n_times: usize) -> usize {
    let depth = floor(libm::log2(ln(n_times as f64) + 1.0));
    (depth as usize).max(1)
}
