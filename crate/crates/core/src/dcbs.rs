// SPDX-License-Identifier: MIT OR Apache-2.0

//! Double CUSUM binary segmentation.
//!
//! Nodes are processed level by level. A node whose scan statistic exceeds
//! its threshold records the maximising split `b` and hands `start..b` and
//! `b..end` to the next level; otherwise the search on that interval stops.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cusum::{CusumScanResult, DcMode, Scanner};
use crate::error::{Error, Result};
use crate::panel::ScaledPanel;

/// Supplies the test criterion for a window `start..end`.
pub trait ThresholdSource {
    fn threshold(&mut self, start: usize, end: usize) -> core::result::Result<f64, String>;
}

impl<F> ThresholdSource for F
where
    F: FnMut(usize, usize) -> core::result::Result<f64, String>,
{
    fn threshold(&mut self, start: usize, end: usize) -> core::result::Result<f64, String> {
        self(start, end)
    }
}

/// A constant criterion for every window.
#[derive(Clone, Copy, Debug)]
pub struct FixedThreshold(pub f64);

impl ThresholdSource for FixedThreshold {
    fn threshold(&mut self, _start: usize, _end: usize) -> core::result::Result<f64, String> {
        Ok(self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Split { scan: CusumScanResult, threshold: f64 },
    Stop { stat: f64, threshold: f64 },
    /// Shorter than `2 * trim + 4`; not scanned.
    TooShort,
}

/// One interval of the segmentation tree.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentNode {
    /// Level `p >= 1`.
    pub level: usize,
    /// Position `q >= 1` within the level.
    pub position: usize,
    pub start: usize,
    pub end: usize,
    pub verdict: Verdict,
    /// Indices of the two children in [`ChangePointReport::nodes`].
    pub children: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChangePoint {
    /// Last time point (1-based) before the change.
    pub eta: usize,
    pub m_hat: usize,
    /// 0-based series with the `m_hat` largest `|X|` at `eta` on the detecting window.
    pub contributors: Vec<usize>,
    pub stat: f64,
    pub threshold: f64,
    pub survived: bool,
    /// Detecting window `start..end`.
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChangePointReport {
    /// Sorted by `eta`.
    pub change_points: Vec<ChangePoint>,
    /// Breadth-first; `nodes[0]` is the root.
    pub nodes: Vec<SegmentNode>,
    pub n_times: usize,
    pub mode: DcMode,
    pub trim: usize,
}

impl ChangePointReport {
    pub fn root(&self) -> &SegmentNode {
        &self.nodes[0]
    }

    /// Change-points kept after post-processing.
    pub fn surviving(&self) -> impl Iterator<Item = &ChangePoint> {
        self.change_points.iter().filter(|c| c.survived)
    }

    pub fn leaves(&self) -> impl Iterator<Item = &SegmentNode> {
        self.nodes.iter().filter(|n| n.children.is_none())
    }
}

/// Shortest window that is scanned by the segmentation.
pub fn min_scanned_len(trim: usize) -> usize {
    2 * trim + 4
}

/// Runs binary segmentation over the whole panel.
pub fn dcbs_run<S: ThresholdSource + ?Sized>(
    panel: &ScaledPanel,
    mode: DcMode,
    thresholds: &mut S,
    trim: usize,
) -> Result<ChangePointReport> {
    mode.validate()?;
    let n_times = panel.n_times();
    if n_times < min_scanned_len(trim) {
        return Err(Error::WindowTooShort { start: 1, end: n_times, trim });
    }
    let mut scanner = Scanner::new(panel);
    let mut nodes: Vec<SegmentNode> = Vec::new();
    let mut change_points = Vec::new();
    let mut queue = VecDeque::from([(1usize, 1usize, 0usize, n_times)]);
    while let Some((level, position, start, end)) = queue.pop_front() {
        let verdict = if end - start < min_scanned_len(trim) {
            Verdict::TooShort
        } else {
            let scan = scanner.scan(start, end, mode, trim)?;
            let threshold = thresholds
                .threshold(start, end)
                .map_err(|message| Error::Threshold { start: start + 1, end, message })?;
            if scan.stat > threshold {
                change_points.push(ChangePoint {
                    eta: scan.split,
                    m_hat: scan.m_hat,
                    contributors: scan.contributors(),
                    stat: scan.stat,
                    threshold,
                    survived: true,
                    start,
                    end,
                });
                queue.push_back((level + 1, 2 * position - 1, start, scan.split));
                queue.push_back((level + 1, 2 * position, scan.split, end));
                Verdict::Split { scan, threshold }
            } else {
                Verdict::Stop { stat: scan.stat, threshold }
            }
        };
        nodes.push(SegmentNode { level, position, start, end, verdict, children: None });
    }
    link_children(&mut nodes);
    change_points.sort_by_key(|c| c.eta);
    Ok(ChangePointReport { change_points, nodes, n_times, mode, trim })
}

// Breadth-first order places the children of the k-th split node at
// positions 1 + 2k and 2 + 2k.
fn link_children(nodes: &mut [SegmentNode]) {
    let mut next = 1;
    for node in nodes.iter_mut() {
        if matches!(node.verdict, Verdict::Split { .. }) {
            node.children = Some((next, next + 1));
            next += 2;
        }
    }
}

/// Re-check window `[eta_{r-1}, eta_{r+1})` of the `r`-th of `etas`, with
/// `eta_0 = 0` and `eta_{N+1} = T`: the segment holding only that point.
/// Each side is widened to at least `trim + 2` points so the scan has a
/// candidate.
pub fn recheck_window(etas: &[usize], r: usize, n_times: usize, trim: usize) -> (usize, usize) {
    let eta = etas[r];
    let start = if r == 0 { 0 } else { etas[r - 1] };
    let end = etas.get(r + 1).copied().unwrap_or(n_times);
    (start.min(eta.saturating_sub(trim + 2)), end.max(eta + trim + 2).min(n_times))
}

/// Re-tests every detected change-point on a window holding only it.
///
/// Neighbours are taken from the full detected set, so applying this twice
/// gives the same flags as applying it once.
pub fn post_process<S: ThresholdSource + ?Sized>(
    panel: &ScaledPanel,
    report: &ChangePointReport,
    mode: DcMode,
    thresholds: &mut S,
    trim: usize,
) -> Result<ChangePointReport> {
    let mut out = report.clone();
    if out.change_points.is_empty() {
        return Ok(out);
    }
    let n_times = panel.n_times();
    let etas: Vec<usize> = out.change_points.iter().map(|c| c.eta).collect();
    let mut scanner = Scanner::new(panel);
    for (r, cp) in out.change_points.iter_mut().enumerate() {
        let (start, end) = recheck_window(&etas, r, n_times, trim);
        let scan = scanner.scan(start, end, mode, trim)?;
        let threshold = thresholds
            .threshold(start, end)
            .map_err(|message| Error::Threshold { start: start + 1, end, message })?;
        cp.survived = scan.stat > threshold;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::PanelData;
    use alloc::vec;

    fn steps(n_times: usize, etas: &[usize], n: usize) -> ScaledPanel {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                (0..n_times)
                    .map(|t| {
                        etas.iter()
                            .enumerate()
                            .filter(|(_, &eta)| t >= eta)
                            .map(|(r, _)| if (j + r) % 2 == 0 { 1.0 + 0.1 * j as f64 } else { -0.7 })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        ScaledPanel::unit(PanelData::from_rows(&rows).unwrap())
    }

    #[test]
    fn constant_panel_has_no_change() {
        let p = ScaledPanel::unit(PanelData::from_rows(&[vec![1.5; 40], vec![0.2; 40]]).unwrap());
        let mode = DcMode::exponent(0.5).unwrap();
        let r = dcbs_run(&p, mode, &mut FixedThreshold(0.1), 5).unwrap();
        assert!(r.change_points.is_empty());
        assert!(matches!(r.root().verdict, Verdict::Stop { .. }));
    }

    #[test]
    fn infinite_threshold_never_splits() {
        let p = steps(100, &[30, 60, 80], 4);
        let r = dcbs_run(&p, DcMode::exponent(0.0).unwrap(), &mut FixedThreshold(f64::INFINITY), 2).unwrap();
        assert!(r.change_points.is_empty());
        assert_eq!(r.nodes.len(), 1);
    }

    #[test]
    fn noiseless_three_changes() {
        let p = steps(100, &[30, 60, 80], 5);
        for mode in [DcMode::exponent(0.0).unwrap(), DcMode::exponent(0.5).unwrap(), DcMode::combined(1.6).unwrap()] {
            let r = dcbs_run(&p, mode, &mut FixedThreshold(1e-6), 2).unwrap();
            let etas: Vec<usize> = r.change_points.iter().map(|c| c.eta).collect();
            assert_eq!(etas, vec![30, 60, 80]);
            let pp = post_process(&p, &r, mode, &mut FixedThreshold(1e-6), 2).unwrap();
            assert!(pp.change_points.iter().all(|c| c.survived));
            // Leaves tile [1, T].
            let mut leaves: Vec<(usize, usize)> = r.leaves().map(|n| (n.start, n.end)).collect();
            leaves.sort();
            assert_eq!(leaves.first().unwrap().0, 0);
            assert_eq!(leaves.last().unwrap().1, 100);
            assert!(leaves.windows(2).all(|w| w[0].1 == w[1].0));
        }
    }

    #[test]
    fn post_process_removes_spurious_point() {
        let p = steps(120, &[40], 3);
        let mode = DcMode::exponent(0.5).unwrap();
        let mut r = dcbs_run(&p, mode, &mut FixedThreshold(1e-6), 2).unwrap();
        assert_eq!(r.change_points.len(), 1);
        let mut fake = r.change_points[0].clone();
        fake.eta = 80;
        r.change_points.push(fake);
        let pp = post_process(&p, &r, mode, &mut FixedThreshold(1e-6), 2).unwrap();
        assert!(pp.change_points[0].survived);
        assert!(!pp.change_points[1].survived);
        let again = post_process(&p, &pp, mode, &mut FixedThreshold(1e-6), 2).unwrap();
        assert_eq!(again, pp);
    }

    #[test]
    fn empty_report_is_unchanged_by_post_processing() {
        let p = steps(50, &[], 2);
        let mode = DcMode::exponent(0.0).unwrap();
        let r = dcbs_run(&p, mode, &mut FixedThreshold(1.0), 5).unwrap();
        assert_eq!(post_process(&p, &r, mode, &mut FixedThreshold(1.0), 5).unwrap(), r);
    }

    #[test]
    fn threshold_errors_carry_window() {
        let p = steps(50, &[25], 2);
        let mut failing = |_s: usize, _e: usize| -> core::result::Result<f64, String> { Err("boom".into()) };
        let err = dcbs_run(&p, DcMode::exponent(0.0).unwrap(), &mut failing, 5).unwrap_err();
        assert_eq!(err, Error::Threshold { start: 1, end: 50, message: "boom".into() });
    }

    #[test]
    fn too_short_panel() {
        let p = steps(13, &[], 1);
        assert!(dcbs_run(&p, DcMode::exponent(0.0).unwrap(), &mut FixedThreshold(1.0), 5).is_err());
    }

    #[test]
    fn recheck_window_bounds() {
        let etas = [30, 60, 80];
        assert_eq!(recheck_window(&etas, 0, 100, 2), (0, 60));
        assert_eq!(recheck_window(&etas, 1, 100, 2), (30, 80));
        assert_eq!(recheck_window(&etas, 2, 100, 2), (60, 100));
        assert_eq!(recheck_window(&[40, 42, 50], 1, 100, 3), (37, 50));
        assert_eq!(recheck_window(&[40, 95], 1, 100, 3), (40, 100));
    }
}
