// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte Carlo evaluation of the detectors.
//!
//! Every replication draws its panels from its own random streams, so the
//! results do not depend on how replications are scheduled across threads.

use std::fmt;

use panelseg_core::reference::{eh_statistics, jirak_statistic, sbs_statistic, ScanPenalty};
use panelseg_core::{DcMode, DetectorConfig, PanelData, ScaledPanel, ScalingEstimate, Scanner, WindowRule};
use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::bootstrap::substream;
use crate::detect::{scale_panel, segment, threshold_table};
use crate::error::{Error, Result};
use crate::simgen::competitors::{jirak_threshold, sbs_oracle_pi};
use crate::simgen::metrics::{eta_accuracy, nhat_histogram, rejection_rate, summarize_power, PowerSummary, SingleOutcome};
use crate::simgen::noise::{gen_noise, NoiseSpec};
use crate::simgen::signal::{gen_signal, ChangeTruth, SignalSpec};

// Stream domains; the replication index fills the low bits.
const NULL_NOISE: u64 = 1;
const ALT_NOISE: u64 = 2;
const SIGNAL: u64 = 3;
const NULL_BOOT: u64 = 4;
const ALT_BOOT: u64 = 5;
const SBS_ORACLE: u64 = 6;
const JIRAK_BOOT: u64 = 7;

fn stream(domain: u64, rep: usize) -> u64 {
    (domain << 40) | rep as u64
}

fn derived_seed(seed: u64, domain: u64, rep: usize) -> u64 {
    substream(seed, stream(domain, rep)).next_u64()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    /// Double CUSUM; `Combined` with `gamma = None` uses `log n`.
    Dc(DcMode),
    CombinedDefault,
    Sbs,
    Jirak,
    Eh,
}

impl Detector {
    pub fn dc_mode(&self, n_series: usize) -> Option<DcMode> {
        match *self {
            Detector::Dc(mode) => Some(mode),
            Detector::CombinedDefault => Some(DcMode::combined_default(n_series)),
            _ => None,
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Detector::Dc(mode) => write!(f, "{mode}"),
            Detector::CombinedDefault => write!(f, "combined"),
            Detector::Sbs => write!(f, "sbs"),
            Detector::Jirak => write!(f, "jirak"),
            Detector::Eh => write!(f, "eh"),
        }
    }
}

/// What to estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Evaluate {
    /// Rejection rate on null panels with each detector's own criterion.
    pub type1: bool,
    /// Size-corrected power, location accuracy and Rand index.
    pub power: bool,
    /// Full segmentation: number of change-points and per-location accuracy.
    pub multi: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Plan {
    pub name: String,
    pub noise: NoiseSpec,
    pub signal: SignalSpec,
    pub detectors: Vec<Detector>,
    pub reps: usize,
    pub seed: u64,
    pub alpha: f64,
    pub boot_reps: usize,
    pub trim: usize,
    /// Scaling tree depth; `None` uses the default for `T`.
    pub depth: Option<usize>,
    /// Bonferroni-adjust the level of each test in segmentation runs.
    pub bonferroni: bool,
    /// Criterion rule for windows shorter than the panel.
    pub window_rule: WindowRule,
    pub evaluate: Evaluate,
}

impl Plan {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        self.signal.validate(self.noise.n_series, self.noise.n_times)?;
        if self.reps == 0 {
            return Err(Error::Config("number of replications must be at least 1".into()));
        }
        if self.detectors.is_empty() {
            return Err(Error::Config("no detectors requested".into()));
        }
        self.detector_config().validate()?;
        if (self.evaluate.power || self.evaluate.multi) && self.signal.changes.is_empty() {
            return Err(Error::Config("power and segmentation runs need at least one change".into()));
        }
        if self.evaluate.power && self.signal.changes.len() != 1 {
            return Err(Error::Config("power runs take exactly one change".into()));
        }
        if self.evaluate.multi && self.detectors.iter().any(|d| d.dc_mode(1).is_none()) {
            return Err(Error::Config("segmentation runs support double CUSUM detectors only".into()));
        }
        Ok(())
    }

    pub fn detector_config(&self) -> DetectorConfig {
        DetectorConfig {
            mode: None,
            alpha_star: self.alpha,
            boot_reps: self.boot_reps,
            trim: self.trim,
            depth: self.depth,
            seed: self.seed,
            bonferroni: self.bonferroni,
            window_rule: self.window_rule,
        }
    }

    fn depth(&self) -> usize {
        self.detector_config().depth_for(self.noise.n_times)
    }

    fn dc_modes(&self) -> Vec<(usize, DcMode)> {
        self.detectors
            .iter()
            .enumerate()
            .filter_map(|(k, d)| d.dc_mode(self.noise.n_series).map(|m| (k, m)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DetectorRow {
    pub detector: String,
    pub type1: Option<f64>,
    pub power: Option<PowerSummary>,
    /// Counts of `N_hat = 0..=4` and `>= 5`.
    pub nhat: Option<[usize; 6]>,
    pub eta_accuracy: Option<Vec<f64>>,
}

impl DetectorRow {
    /// Fraction of replications with exactly `k` detected change-points.
    pub fn nhat_rate(&self, k: usize) -> Option<f64> {
        self.nhat.map(|h| h[k.min(5)] as f64 / h.iter().sum::<usize>().max(1) as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub plan: Plan,
    /// Sparsity threshold used by the thresholded-sum statistic.
    pub sbs_pi: Option<f64>,
    pub rows: Vec<DetectorRow>,
}

impl ExperimentResult {
    pub fn row(&self, detector: &str) -> Option<&DetectorRow> {
        self.rows.iter().find(|r| r.detector == detector)
    }
}

// Raw statistic and location of every detector on one scaled panel.
fn evaluate_all(
    plan: &Plan,
    scaled: &ScaledPanel,
    sbs_pi: Option<f64>,
) -> Result<Vec<SingleOutcome>> {
    let n = scaled.n_series();
    let t = scaled.n_times();
    let mut scanner = Scanner::new(scaled);
    plan.detectors
        .iter()
        .map(|d| {
            Ok(match *d {
                Detector::Dc(_) | Detector::CombinedDefault => {
                    let scan = scanner.scan(0, t, d.dc_mode(n).unwrap(), plan.trim)?;
                    SingleOutcome { stat: scan.stat, b_hat: Some(scan.split), flagged: Some(scan.contributors()) }
                }
                Detector::Sbs => {
                    let pi = sbs_pi.expect("sparsity threshold computed up front");
                    let (stat, b) = sbs_statistic(scaled, 0, t, pi, plan.trim)?;
                    let flagged = (0..n).filter(|&j| scanner.cusum(j, 0, b, t).abs() > pi).collect();
                    SingleOutcome { stat, b_hat: Some(b), flagged: Some(flagged) }
                }
                Detector::Jirak => {
                    let (stat, b) = jirak_statistic(scaled, plan.trim)?;
                    SingleOutcome { stat, b_hat: Some(b), flagged: None }
                }
                Detector::Eh => {
                    let eh = eh_statistics(scaled, plan.alpha, plan.trim, ScanPenalty::default())?;
                    SingleOutcome { stat: eh.linear.max(eh.scan), b_hat: None, flagged: None }
                }
            })
        })
        .collect()
}

// Whether each detector rejects on a null panel with its own criterion.
fn null_rejections(plan: &Plan, scaling: &ScalingEstimate, outcomes: &[SingleOutcome], rep: usize) -> Result<Vec<bool>> {
    let n = plan.noise.n_series;
    let t = plan.noise.n_times;
    let dc = plan.dc_modes();
    let mut dc_thresholds = vec![f64::INFINITY; plan.detectors.len()];
    if !dc.is_empty() {
        let mut config = plan.detector_config();
        config.seed = derived_seed(plan.seed, NULL_BOOT, rep);
        let modes: Vec<DcMode> = dc.iter().map(|(_, m)| *m).collect();
        let mut table = threshold_table(scaling, n, &modes, &config)?;
        for (i, (k, _)) in dc.iter().enumerate() {
            dc_thresholds[*k] = table.quantile(i, t, plan.alpha)?;
        }
    }
    plan.detectors
        .iter()
        .zip(outcomes)
        .enumerate()
        .map(|(k, (d, o))| {
            Ok(match d {
                Detector::Dc(_) | Detector::CombinedDefault => o.stat > dc_thresholds[k],
                Detector::Sbs => o.stat > 0.0,
                Detector::Eh => o.stat > 1.0,
                Detector::Jirak => {
                    let residuals = scaling.standardized_residuals();
                    let seed = derived_seed(plan.seed, JIRAK_BOOT, rep);
                    o.stat > jirak_threshold(&residuals, n, t, plan.boot_reps, plan.alpha, plan.trim, seed)?
                }
            })
        })
        .collect()
}

fn alternative_panel(plan: &Plan, rep: usize) -> Result<(PanelData, Vec<ChangeTruth>)> {
    let spec = &plan.noise;
    let noise = gen_noise(spec, &mut substream(plan.seed, stream(ALT_NOISE, rep)))?;
    let (signal, truth) =
        gen_signal(&plan.signal, spec.n_series, spec.n_times, &mut substream(plan.seed, stream(SIGNAL, rep)))?;
    let values = noise.values().iter().zip(&signal).map(|(a, b)| a + b).collect();
    Ok((PanelData::new(spec.n_series, spec.n_times, values)?, truth))
}

struct SingleRep {
    null: Vec<SingleOutcome>,
    null_reject: Option<Vec<bool>>,
    alt: Option<(Vec<SingleOutcome>, (usize, Vec<usize>))>,
}

fn single_rep(plan: &Plan, rep: usize, sbs_pi: Option<f64>) -> Result<SingleRep> {
    let depth = plan.depth();
    let null_panel = gen_noise(&plan.noise, &mut substream(plan.seed, stream(NULL_NOISE, rep)))?;
    let (null_scaled, null_scaling) = scale_panel(&null_panel, depth)?;
    let null = evaluate_all(plan, &null_scaled, sbs_pi)?;
    let null_reject = if plan.evaluate.type1 { Some(null_rejections(plan, &null_scaling, &null, rep)?) } else { None };
    let alt = if plan.evaluate.power {
        let (panel, truth) = alternative_panel(plan, rep)?;
        let (scaled, _) = scale_panel(&panel, depth)?;
        let outcomes = evaluate_all(plan, &scaled, sbs_pi)?;
        Some((outcomes, (truth[0].eta, truth[0].pi.clone())))
    } else {
        None
    };
    Ok(SingleRep { null, null_reject, alt })
}

/// Surviving change-points of each double CUSUM detector on one panel.
fn multi_rep(plan: &Plan, rep: usize) -> Result<Vec<Vec<usize>>> {
    let (panel, _) = alternative_panel(plan, rep)?;
    let mut config = plan.detector_config();
    config.seed = derived_seed(plan.seed, ALT_BOOT, rep);
    let (scaled, scaling) = scale_panel(&panel, plan.depth())?;
    let modes: Vec<DcMode> = plan.dc_modes().iter().map(|(_, m)| *m).collect();
    let mut table = threshold_table(&scaling, panel.n_series(), &modes, &config)?;
    let alpha = config.alpha_for(panel.n_times());
    (0..modes.len())
        .map(|i| {
            let report = segment(&scaled, &mut table, i, alpha, plan.trim)?;
            Ok(report.surviving().map(|c| c.eta).collect())
        })
        .collect()
}

pub fn run_experiment(plan: &Plan) -> Result<ExperimentResult> {
    plan.validate()?;
    let n = plan.noise.n_series;
    let t = plan.noise.n_times;
    let mut rows: Vec<DetectorRow> = plan
        .detectors
        .iter()
        .map(|d| DetectorRow { detector: d.to_string(), type1: None, power: None, nhat: None, eta_accuracy: None })
        .collect();
    let needs_single = plan.evaluate.type1 || plan.evaluate.power;
    let sbs_pi = if needs_single && plan.detectors.contains(&Detector::Sbs) {
        Some(sbs_oracle_pi(&plan.noise, plan.depth(), plan.boot_reps, plan.alpha, derived_seed(plan.seed, SBS_ORACLE, 0))?)
    } else {
        None
    };
    if needs_single {
        let reps: Vec<SingleRep> =
            (0..plan.reps).into_par_iter().map(|r| single_rep(plan, r, sbs_pi)).collect::<Result<_>>()?;
        for (k, row) in rows.iter_mut().enumerate() {
            if plan.evaluate.type1 {
                let rejected: Vec<f64> =
                    reps.iter().map(|r| f64::from(u8::from(r.null_reject.as_ref().unwrap()[k]))).collect();
                row.type1 = Some(rejection_rate(&rejected, 0.5));
            }
            if plan.evaluate.power {
                let null: Vec<f64> = reps.iter().map(|r| r.null[k].stat).collect();
                let alt: Vec<SingleOutcome> = reps.iter().map(|r| r.alt.as_ref().unwrap().0[k].clone()).collect();
                let truth: Vec<(usize, Vec<usize>)> = reps.iter().map(|r| r.alt.as_ref().unwrap().1.clone()).collect();
                row.power = Some(summarize_power(&null, &alt, &truth, n, t, plan.alpha)?);
            }
        }
    }
    if plan.evaluate.multi {
        let per_rep: Vec<Vec<Vec<usize>>> =
            (0..plan.reps).into_par_iter().map(|r| multi_rep(plan, r)).collect::<Result<_>>()?;
        let etas: Vec<usize> = plan.signal.changes.iter().map(|c| c.eta).collect();
        for (i, (k, _)) in plan.dc_modes().iter().enumerate() {
            let estimates: Vec<Vec<usize>> = per_rep.iter().map(|r| r[i].clone()).collect();
            let counts: Vec<usize> = estimates.iter().map(Vec::len).collect();
            rows[*k].nhat = Some(nhat_histogram(&counts));
            rows[*k].eta_accuracy = Some(eta_accuracy(&estimates, &etas, t));
        }
    }
    Ok(ExperimentResult { plan: plan.clone(), sbs_pi, rows })
}
