// SPDX-License-Identifier: MIT OR Apache-2.0

//! JSON form of a detection. Times and series are 1-based; a segment
//! `start..=end` covers both endpoints.

use panelseg_core::{ChangePointReport, DetectorConfig, Verdict};
use serde::Serialize;

use crate::detect::Detection;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub config: ConfigEcho,
    pub factor_number: Option<usize>,
    pub scales: Option<Vec<f64>>,
    pub change_points: Vec<ChangePointEntry>,
    pub tree: Vec<NodeEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub mode: String,
    pub alpha_star: f64,
    pub alpha: f64,
    pub boot_reps: usize,
    pub trim: usize,
    pub depth: usize,
    pub seed: u64,
    pub bonferroni: bool,
    pub window_rule: String,
    pub n_series: usize,
    pub n_times: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChangePointEntry {
    pub eta: usize,
    pub m: usize,
    pub contributors: Vec<usize>,
    pub stat: f64,
    pub threshold: f64,
    pub survived: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeEntry {
    pub level: usize,
    pub position: usize,
    pub start: usize,
    pub end: usize,
    pub verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Indices into `tree`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub children: Option<[usize; 2]>,
}

pub fn change_points(report: &ChangePointReport) -> Vec<ChangePointEntry> {
    report
        .change_points
        .iter()
        .map(|c| ChangePointEntry {
            eta: c.eta,
            m: c.m_hat,
            contributors: c.contributors.iter().map(|j| j + 1).collect(),
            stat: c.stat,
            threshold: c.threshold,
            survived: c.survived,
        })
        .collect()
}

pub fn tree(report: &ChangePointReport) -> Vec<NodeEntry> {
    report
        .nodes
        .iter()
        .map(|node| {
            let mut entry = NodeEntry {
                level: node.level,
                position: node.position,
                start: node.start + 1,
                end: node.end,
                verdict: "too_short",
                stat: None,
                threshold: None,
                eta: None,
                m: None,
                children: node.children.map(|(l, r)| [l, r]),
            };
            match &node.verdict {
                Verdict::Split { scan, threshold } => {
                    entry.verdict = "split";
                    entry.stat = Some(scan.stat);
                    entry.threshold = Some(*threshold);
                    entry.eta = Some(scan.split);
                    entry.m = Some(scan.m_hat);
                }
                Verdict::Stop { stat, threshold } => {
                    entry.verdict = "stop";
                    entry.stat = Some(*stat);
                    entry.threshold = Some(*threshold);
                }
                Verdict::TooShort => {}
            }
            entry
        })
        .collect()
}

pub fn build(detection: &Detection, config: &DetectorConfig, n_series: usize) -> Report {
    Report {
        version: VERSION,
        config: ConfigEcho {
            mode: detection.mode.to_string(),
            alpha_star: config.alpha_star,
            alpha: detection.alpha,
            boot_reps: config.boot_reps,
            trim: config.trim,
            depth: detection.depth,
            seed: config.seed,
            bonferroni: config.bonferroni,
            window_rule: config.window_rule.to_string(),
            n_series,
            n_times: detection.report.n_times,
        },
        factor_number: detection.factor_number,
        scales: detection.scaling.as_ref().map(|s| s.scales()),
        change_points: change_points(&detection.report),
        tree: tree(&detection.report),
    }
}
