// SPDX-License-Identifier: MIT OR Apache-2.0

//! Critical values for the competing statistics in simulation studies.

use panelseg_core::quantile::upper_quantile;
use panelseg_core::reference::{jirak_statistic, max_abs_cusum};
use panelseg_core::{PanelData, ScaledPanel};
use rand::Rng;
use rayon::prelude::*;

use crate::bootstrap::substream;
use crate::detect::scale_panel;
use crate::error::Result;
use crate::simgen::noise::{gen_noise, NoiseSpec};

pub const JIRAK_BLOCK: usize = 4;

/// Circular block resample of the time axis, shared by every series.
pub fn block_indices<R: Rng + ?Sized>(n_times: usize, block: usize, rng: &mut R) -> Vec<usize> {
    let mut idx = Vec::with_capacity(n_times + block);
    while idx.len() < n_times {
        let start = rng.random_range(0..n_times);
        idx.extend((0..block).map(|k| (start + k) % n_times));
    }
    idx.truncate(n_times);
    idx
}

/// `(1 - alpha)` quantile of the maximum weighted CUSUM over circular block
/// bootstrap replicates of standardized residuals.
pub fn jirak_threshold(
    residuals: &[f64],
    n_series: usize,
    n_times: usize,
    boot_reps: usize,
    alpha: f64,
    trim: usize,
    seed: u64,
) -> Result<f64> {
    let stats = (0..boot_reps)
        .into_par_iter()
        .map(|l| {
            let idx = block_indices(n_times, JIRAK_BLOCK, &mut substream(seed, l as u64));
            let values: Vec<f64> = residuals
                .chunks_exact(n_times)
                .flat_map(|row| idx.iter().map(move |&t| row[t]))
                .collect();
            let panel = ScaledPanel::unit(PanelData::new(n_series, n_times, values)?);
            Ok(jirak_statistic(&panel, trim)?.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(upper_quantile(&stats, alpha)?)
}

/// Sparsity threshold from noise-only panels of the true model, each scaled
/// by its own estimated long-run standard deviations.
pub fn sbs_oracle_pi(spec: &NoiseSpec, depth: usize, boot_reps: usize, alpha: f64, seed: u64) -> Result<f64> {
    let maxima = (0..boot_reps)
        .into_par_iter()
        .map(|l| {
            let noise = gen_noise(spec, &mut substream(seed, l as u64))?;
            let (scaled, _) = scale_panel(&noise, depth)?;
            Ok(max_abs_cusum(&scaled))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(panelseg_core::reference::sbs_oracle_threshold(&maxima, alpha)?)
}
