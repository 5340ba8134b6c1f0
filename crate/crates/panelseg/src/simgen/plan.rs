// SPDX-License-Identifier: MIT OR Apache-2.0

//! Experiment plans: a `key = value` text format, built-in presets and
//! table output.
//!
//! ```text
//! # comments start with '#'
//! name = single
//! model = n1          # or n2
//! rho = 0.2           # rho for n1, rho_h for n2
//! n = 100
//! T = 100
//! change = 0.5T, 0.4n, 0.1   # eta, m, delta; repeat for more changes
//! detectors = phi=0; phi=0.5; combined; eh; jirak; sbs
//! window_rule = pooled  # or max
//! evaluate = power    # any of type1, power, multi
//! reps = 50
//! seed = 1
//! ```
//!
//! Locations accept `<fraction>T` or an integer; cardinalities accept
//! `<fraction>n`, `sqrt(n)` or an integer. Fractions are rounded down.

use std::fs;
use std::io::Write;
use std::path::Path;

use panelseg_core::{DcMode, WindowRule};

use crate::error::{Error, Result};
use crate::simgen::experiment::{Detector, Evaluate, ExperimentResult, Plan};
use crate::simgen::noise::{NoiseModel, NoiseSpec, DEFAULT_BURN_IN};
use crate::simgen::signal::{ChangeSpec, SignRule, SignalSpec, DEFAULT_SPREAD};

pub const PRESETS: [&str; 4] = ["type1-n1", "single", "factor", "multi"];

const DC_DETECTORS: &str = "phi=0; phi=0.5; combined";
const ALL_DETECTORS: &str = "phi=0; phi=0.5; combined; jirak; eh; sbs";

fn preset_text(name: &str) -> Option<String> {
    let body = match name {
        "type1-n1" => format!(
            "model = n1\nrho = 0.2\nn = 50\nT = 100\ndetectors = {ALL_DETECTORS}\nevaluate = type1\nreps = 100\ndepth = 1\nbonferroni = false\n"
        ),
        "single" => format!(
            "model = n1\nrho = 0.2\nn = 100\nT = 100\nchange = 0.5T, 0.4n, 0.1\ndetectors = {ALL_DETECTORS}\nevaluate = power\nreps = 50\ndepth = 1\nbonferroni = false\n"
        ),
        "factor" => format!(
            "model = n2\nrho = 0.9\nn = 100\nT = 100\nchange = 0.5T, sqrt(n), 0.1\ndetectors = {ALL_DETECTORS}\nevaluate = power\nreps = 50\ndepth = 1\nbonferroni = false\n"
        ),
        "multi" => format!(
            "model = n1\nrho = 0.2\nn = 100\nT = 250\nchange = 0.3T, 0.75n, 0.05\nchange = 0.6T, 0.25n, 0.087\nchange = 0.8T, 0.1n, 0.14\ndetectors = {DC_DETECTORS}\nevaluate = multi\nreps = 50\n"
        ),
        _ => return None,
    };
    Some(format!("name = {name}\n{body}"))
}

/// A built-in plan.
pub fn preset(name: &str) -> Option<Plan> {
    preset_text(name).map(|text| parse_plan(&text, Path::new(name)).expect("built-in plans parse"))
}

pub fn load_plan(path: &Path) -> Result<Plan> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    parse_plan(&text, path)
}

/// `0.5T` style amount, rounded down, or a plain integer.
fn parse_amount(text: &str, unit: &str, total: usize) -> std::result::Result<usize, String> {
    let text = text.trim();
    if text == format!("sqrt({unit})") {
        return Ok((total as f64).sqrt().floor() as usize);
    }
    if let Some(frac) = text.strip_suffix(unit) {
        let f: f64 = frac.trim().parse().map_err(|_| format!("cannot parse {text:?}"))?;
        return Ok((f * total as f64 + 1e-9).floor() as usize);
    }
    text.parse().map_err(|_| format!("cannot parse {text:?}; expected an integer or <fraction>{unit}"))
}

/// `eta, m, delta` as in `0.5T, 0.4n, 0.1`.
pub fn parse_change(text: &str, n_series: usize, n_times: usize) -> std::result::Result<ChangeSpec, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("change {text:?} must have the form eta, m, delta"));
    }
    let eta = parse_amount(parts[0], "T", n_times)?;
    let m = parse_amount(parts[1], "n", n_series)?;
    let delta: f64 = parts[2].trim().parse().map_err(|_| format!("cannot parse jump size {:?}", parts[2].trim()))?;
    Ok(ChangeSpec { eta, m, delta, pi: None })
}

/// `phi=<v>`, `combined`, `combined,gamma=<v>`, `sbs`, `jirak` or `eh`.
pub fn parse_detector(text: &str) -> std::result::Result<Detector, String> {
    match text.trim() {
        "sbs" => Ok(Detector::Sbs),
        "jirak" => Ok(Detector::Jirak),
        "eh" => Ok(Detector::Eh),
        "combined" => Ok(Detector::CombinedDefault),
        other => parse_mode(other).map(Detector::Dc),
    }
}

/// `phi=<v>` or `combined,gamma=<v>`.
pub fn parse_mode(text: &str) -> std::result::Result<DcMode, String> {
    let text = text.trim();
    let number = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("cannot parse {v:?} as a number"));
    let mode = if let Some(v) = text.strip_prefix("phi=") {
        DcMode::exponent(number(v)?)
    } else if let Some(v) = text.strip_prefix("combined,gamma=") {
        DcMode::combined(number(v)?)
    } else {
        return Err(format!("unknown statistic {text:?}; expected phi=<v> or combined[,gamma=<v>]"));
    };
    mode.map_err(|e| e.to_string())
}

/// `pooled` or `max`.
pub fn parse_window_rule(v: &str) -> std::result::Result<WindowRule, String> {
    match v.trim() {
        "pooled" => Ok(WindowRule::Pooled),
        "max" => Ok(WindowRule::Max),
        other => Err(format!("expected pooled or max, got {other:?}")),
    }
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got {v:?}")),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse {v:?}"))
}

pub fn parse_plan(text: &str, path: &Path) -> Result<Plan> {
    let err = |line: usize, message: String| Error::Plan { path: path.to_owned(), line, message };
    let mut name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut model = None;
    let mut rho = None;
    let mut n = None;
    let mut t = None;
    let mut burn_in = DEFAULT_BURN_IN;
    let mut changes: Vec<(usize, String)> = Vec::new();
    let mut detectors = None;
    let mut evaluate = None;
    let mut reps = 100;
    let mut seed = 1;
    let mut alpha = 0.05;
    let mut boot_reps = 100;
    let mut trim = 5;
    let mut depth = None;
    let mut bonferroni = true;
    let mut window_rule = WindowRule::Pooled;
    let mut spread = DEFAULT_SPREAD;
    let mut signs = SignRule::Random;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected key = value, got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let at = |r: std::result::Result<(), String>| r.map_err(|m| err(line, format!("{key}: {m}")));
        match key {
            "name" => name = value.to_owned(),
            "model" => {
                model = Some(match value {
                    "n1" => "n1",
                    "n2" => "n2",
                    _ => return Err(err(line, format!("model: expected n1 or n2, got {value:?}"))),
                })
            }
            "rho" => at(parse_num(value).map(|v| rho = Some(v)))?,
            "n" => at(parse_num(value).map(|v| n = Some(v)))?,
            "T" => at(parse_num(value).map(|v| t = Some(v)))?,
            "burn_in" => at(parse_num(value).map(|v| burn_in = v))?,
            "change" => changes.push((line, value.to_owned())),
            "detectors" => {
                let parsed = value
                    .split(';')
                    .filter(|s| !s.trim().is_empty())
                    .map(parse_detector)
                    .collect::<std::result::Result<Vec<_>, _>>();
                at(parsed.map(|d| detectors = Some(d)))?
            }
            "evaluate" => {
                let mut ev = Evaluate::default();
                for item in value.split(',').map(str::trim) {
                    match item {
                        "type1" => ev.type1 = true,
                        "power" => ev.power = true,
                        "multi" => ev.multi = true,
                        _ => return Err(err(line, format!("evaluate: unknown item {item:?}"))),
                    }
                }
                evaluate = Some(ev);
            }
            "reps" => at(parse_num(value).map(|v| reps = v))?,
            "seed" => at(parse_num(value).map(|v| seed = v))?,
            "alpha" => at(parse_num(value).map(|v| alpha = v))?,
            "boot_reps" => at(parse_num(value).map(|v| boot_reps = v))?,
            "trim" => at(parse_num(value).map(|v| trim = v))?,
            "depth" => at(parse_num(value).map(|v| depth = Some(v)))?,
            "bonferroni" => at(parse_bool(value).map(|v| bonferroni = v))?,
            "window_rule" => at(parse_window_rule(value).map(|v| window_rule = v))?,
            "spread" => at(parse_num(value).map(|v| spread = v))?,
            "signs" => {
                signs = match value {
                    "random" => SignRule::Random,
                    "per-series" => SignRule::PerSeries,
                    _ => return Err(err(line, format!("signs: expected random or per-series, got {value:?}"))),
                }
            }
            _ => return Err(err(line, format!("unknown key {key:?}"))),
        }
    }
    let last = text.lines().count().max(1);
    let missing = |what: &str| err(last, format!("missing required key {what:?}"));
    let n = n.ok_or_else(|| missing("n"))?;
    let t = t.ok_or_else(|| missing("T"))?;
    let rho = rho.ok_or_else(|| missing("rho"))?;
    let model = match model.ok_or_else(|| missing("model"))? {
        "n1" => NoiseModel::N1 { rho },
        _ => NoiseModel::N2 { rho_h: rho },
    };
    let mut parsed_changes = Vec::with_capacity(changes.len());
    for (line, value) in &changes {
        parsed_changes.push(parse_change(value, n, t).map_err(|m| err(*line, format!("change: {m}")))?);
    }
    let evaluate = evaluate.unwrap_or(if changes.is_empty() {
        Evaluate { type1: true, ..Evaluate::default() }
    } else {
        Evaluate { power: true, ..Evaluate::default() }
    });
    let plan = Plan {
        name,
        noise: NoiseSpec { model, n_series: n, n_times: t, burn_in },
        signal: SignalSpec { changes: parsed_changes, spread, signs },
        detectors: detectors.ok_or_else(|| missing("detectors"))?,
        reps,
        seed,
        alpha,
        boot_reps,
        trim,
        depth,
        bonferroni,
        window_rule,
        evaluate,
    };
    plan.validate().map_err(|e| err(last, e.to_string()))?;
    Ok(plan)
}

fn fmt_opt(v: Option<f64>) -> String {
    // Adding 0.0 turns -0.0 into 0.0.
    v.map(|x| format!("{}", x + 0.0)).unwrap_or_default()
}

/// Metric names and values for one detector row, in table order.
fn row_cells(result: &ExperimentResult, k: usize) -> Vec<(String, String)> {
    let row = &result.rows[k];
    let mut cells = vec![("type1".to_owned(), fmt_opt(row.type1))];
    if result.plan.evaluate.power {
        let p = row.power.as_ref();
        cells.push(("power".into(), fmt_opt(p.map(|p| p.power))));
        cells.push(("location_accuracy".into(), fmt_opt(p.and_then(|p| p.location_accuracy))));
        cells.push(("rand_index".into(), fmt_opt(p.and_then(|p| p.rand_index))));
        cells.push(("critical".into(), fmt_opt(p.map(|p| p.critical))));
    }
    if result.plan.evaluate.multi {
        for c in 0..6 {
            let label = if c == 5 { "nhat_5plus".to_owned() } else { format!("nhat_{c}") };
            cells.push((label, fmt_opt(row.nhat_rate(c))));
        }
        for r in 0..result.plan.signal.changes.len() {
            let acc = row.eta_accuracy.as_ref().map(|a| a[r]);
            cells.push((format!("eta{}_accuracy", r + 1), fmt_opt(acc)));
        }
    }
    cells
}

/// One row per detector; with `wide`, one row per metric and one column per detector.
pub fn write_table<W: Write + ?Sized>(out: &mut W, result: &ExperimentResult, wide: bool) -> std::io::Result<()> {
    let cells: Vec<Vec<(String, String)>> = (0..result.rows.len()).map(|k| row_cells(result, k)).collect();
    let names: Vec<&str> = cells[0].iter().map(|(n, _)| n.as_str()).collect();
    if wide {
        let header: Vec<&str> = result.rows.iter().map(|r| r.detector.as_str()).collect();
        writeln!(out, "metric,{}", header.iter().map(|h| quote(h)).collect::<Vec<_>>().join(","))?;
        for (i, name) in names.iter().enumerate() {
            let vals: Vec<&str> = cells.iter().map(|c| c[i].1.as_str()).collect();
            writeln!(out, "{name},{}", vals.join(","))?;
        }
    } else {
        writeln!(out, "detector,{}", names.join(","))?;
        for (row, c) in result.rows.iter().zip(&cells) {
            let vals: Vec<&str> = c.iter().map(|(_, v)| v.as_str()).collect();
            writeln!(out, "{},{}", quote(&row.detector), vals.join(","))?;
        }
    }
    Ok(())
}

fn quote(s: &str) -> String {
    if s.contains(',') {
        format!("\"{s}\"")
    } else {
        s.to_owned()
    }
}
