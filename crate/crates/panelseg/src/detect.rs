// SPDX-License-Identifier: MIT OR Apache-2.0

//! The full detection pipeline: scaling, bootstrap criteria, segmentation
//! and the post-processing re-check.

use panelseg_core::{
    dcbs_run, estimate_scales, post_process, standardize, ChangePointReport, CusumScanResult, DcMode,
    DetectorConfig, PanelData, ScaledPanel, ScalingEstimate, SegmentNode, Verdict,
};

use crate::bootstrap::{BootstrapModel, ThresholdTable};
use crate::error::Result;

/// Everything produced by [`detect`].
#[derive(Debug)]
pub struct Detection {
    pub report: ChangePointReport,
    /// `None` when every series is constant and nothing was estimated.
    pub scaling: Option<ScalingEstimate>,
    pub factor_number: Option<usize>,
    pub mode: DcMode,
    pub depth: usize,
    /// Level of each individual test.
    pub alpha: f64,
    /// Replicate statistics for the full-length window.
    pub root_replicates: Vec<f64>,
}

/// Scales each series by its long-run standard deviation.
pub fn scale_panel(panel: &PanelData, depth: usize) -> Result<(ScaledPanel, ScalingEstimate)> {
    let scaling = estimate_scales(panel, depth)?;
    let scaled = standardize(panel, &scaling.scales())?;
    Ok((scaled, scaling))
}

fn is_constant(panel: &PanelData) -> bool {
    panel.rows().all(|row| row.iter().all(|v| *v == row[0]))
}

// All CUSUMs of a constant panel vanish, so the root stops with statistic 0.
fn constant_report(panel: &PanelData, mode: DcMode, trim: usize) -> ChangePointReport {
    ChangePointReport {
        change_points: Vec::new(),
        nodes: vec![SegmentNode {
            level: 1,
            position: 1,
            start: 0,
            end: panel.n_times(),
            verdict: Verdict::Stop { stat: 0.0, threshold: 0.0 },
            children: None,
        }],
        n_times: panel.n_times(),
        mode,
        trim,
    }
}

/// Fits the bootstrap on the scaled residuals and prepares thresholds for `modes`.
pub fn threshold_table(
    scaling: &ScalingEstimate,
    n_series: usize,
    modes: &[DcMode],
    config: &DetectorConfig,
) -> Result<ThresholdTable> {
    let residuals = scaling.standardized_residuals();
    let model = BootstrapModel::fit(&residuals, n_series, scaling.n_times, config.seed)?;
    ThresholdTable::new(model, modes, config.trim, config.boot_reps, config.window_rule)
}

/// Runs segmentation and post-processing with thresholds from `table`.
pub fn segment(
    scaled: &ScaledPanel,
    table: &mut ThresholdTable,
    mode_index: usize,
    alpha: f64,
    trim: usize,
) -> Result<ChangePointReport> {
    let mode = table.modes()[mode_index];
    let report = dcbs_run(scaled, mode, &mut table.source(mode_index, alpha), trim)?;
    Ok(post_process(scaled, &report, mode, &mut table.source(mode_index, alpha), trim)?)
}

pub fn detect(panel: &PanelData, config: &DetectorConfig) -> Result<Detection> {
    config.validate()?;
    let mode = config.mode_for(panel.n_series());
    let depth = config.depth_for(panel.n_times());
    let alpha = config.alpha_for(panel.n_times());
    if panel.n_times() < panelseg_core::dcbs::min_scanned_len(config.trim) {
        return Err(panelseg_core::Error::WindowTooShort { start: 1, end: panel.n_times(), trim: config.trim }.into());
    }
    if is_constant(panel) {
        return Ok(Detection {
            report: constant_report(panel, mode, config.trim),
            scaling: None,
            factor_number: None,
            mode,
            depth,
            alpha,
            root_replicates: Vec::new(),
        });
    }
    let (scaled, scaling) = scale_panel(panel, depth)?;
    let mut table = threshold_table(&scaling, panel.n_series(), &[mode], config)?;
    let report = segment(&scaled, &mut table, 0, alpha, config.trim)?;
    let root_replicates = table.stats(panel.n_times())?[0].clone();
    Ok(Detection {
        report,
        factor_number: Some(table.model().factor_number()),
        scaling: Some(scaling),
        mode,
        depth,
        alpha,
        root_replicates,
    })
}

/// Root scan statistic of a scaled panel, without any threshold.
pub fn root_scan(scaled: &ScaledPanel, mode: DcMode, trim: usize) -> Result<CusumScanResult> {
    Ok(panelseg_core::dc_scan(scaled, 0, scaled.n_times(), mode, trim)?)
}
