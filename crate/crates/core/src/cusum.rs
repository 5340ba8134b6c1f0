// SPDX-License-Identifier: MIT OR Apache-2.0

//! CUSUM operator, ordered CUSUMs and the double CUSUM scan.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::math::{powf, sqrt};
use crate::panel::ScaledPanel;

/// Which double CUSUM statistic to aggregate with.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DcMode {
    /// `D^phi_m` with `0 <= phi <= 1`.
    Exponent { phi: f64 },
    /// `gamma * D^0_m + D^{1/2}_m` with `gamma > 0`.
    Combined { gamma: f64 },
}

impl DcMode {
    pub fn exponent(phi: f64) -> Result<Self> {
        let mode = DcMode::Exponent { phi };
        mode.validate()?;
        Ok(mode)
    }

    pub fn combined(gamma: f64) -> Result<Self> {
        let mode = DcMode::Combined { gamma };
        mode.validate()?;
        Ok(mode)
    }

    /// The combined statistic with the default `gamma = log n`.
    ///
    /// `log 1 = 0` is not a valid weight, so a single series falls back to
    /// `gamma = 1`.
    pub fn combined_default(n_series: usize) -> Self {
        let gamma = if n_series > 1 { crate::math::ln(n_series as f64) } else { 1.0 };
        DcMode::Combined { gamma }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DcMode::Exponent { phi } if !(0.0..=1.0).contains(&phi) => {
                Err(Error::Domain(format!("phi must lie in [0, 1], got {phi}")))
            }
            DcMode::Combined { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::Domain(format!("gamma must be positive, got {gamma}")))
            }
            _ => Ok(()),
        }
    }

    /// Multiplier of the partial-mean contrast at cardinality `m`.
    ///
    /// Every supported statistic has the form `weight(m) * (mean of the top m
    /// minus tail sum / (2n - m))`.
    pub fn weight(&self, m: usize, n: usize) -> f64 {
        let base = (m * (2 * n - m)) as f64 / (2 * n) as f64;
        match *self {
            DcMode::Exponent { phi } => powf(base, phi),
            DcMode::Combined { gamma } => gamma + sqrt(base),
        }
    }

    /// `weight(m)` for `m = 1..=n`, stored at index `m - 1`.
    pub fn weights(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|m| self.weight(m, n)).collect()
    }
}

impl fmt::Display for DcMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DcMode::Exponent { phi } => write!(f, "phi={phi}"),
            DcMode::Combined { gamma } => write!(f, "combined,gamma={gamma}"),
        }
    }
}

/// CUSUMs `X_{s,b,e}` of a window for every split `b = 1..len-1`.
///
/// `out[i]` holds the contrast between the first `i + 1` points and the rest.
pub fn cusum_series(x: &[f64]) -> Result<Vec<f64>> {
    let len = x.len();
    if len < 2 {
        return Err(Error::Dimension(format!("CUSUM needs a window of at least 2 points, got {len}")));
    }
    let total: f64 = x.iter().sum();
    let lf = len as f64;
    let mut head = 0.0;
    Ok(x[..len - 1]
        .iter()
        .enumerate()
        .map(|(i, v)| {
            head += v;
            let b = (i + 1) as f64;
            sqrt((lf - b) / (lf * b)) * head - sqrt(b / (lf * (lf - b))) * (total - head)
        })
        .collect())
}

/// Split points searched in `start..end` once `trim` points are excluded at
/// both ends, i.e. `[s, e]` minus `[s, s + d] u [e - d, e]` in 1-based terms.
pub fn candidate_splits(start: usize, end: usize, trim: usize) -> Range<usize> {
    let lo = start + trim + 2;
    let hi = end.saturating_sub(trim);
    lo..hi.max(lo)
}

/// The ordered absolute CUSUMs of every series at one split.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderedCusums {
    /// `|X^(1)| >= ... >= |X^(n)|`.
    pub sorted_abs: Vec<f64>,
    /// `order[i]` is the 0-based series holding rank `i`.
    pub order: Vec<usize>,
    /// `signs[i] * X^{order[i]} = sorted_abs[i]`; zero CUSUMs get `+1`.
    pub signs: Vec<i8>,
}

/// Sorts `|X^j_{s,b,e}|` in decreasing order; ties keep the smaller series first.
pub fn ordered_abs_cusums(
    panel: &ScaledPanel,
    start: usize,
    split: usize,
    end: usize,
) -> Result<OrderedCusums> {
    check_window(panel.n_times(), start, end)?;
    if !(start < split && split < end) {
        return Err(Error::Dimension(format!(
            "split {split} must lie strictly inside window [{}, {end}]",
            start + 1
        )));
    }
    let raw: Vec<f64> = panel
        .values()
        .chunks_exact(panel.n_times())
        .map(|row| window_cusum(&row[start..end], split - start))
        .collect();
    Ok(order_cusums(&raw))
}

fn order_cusums(raw: &[f64]) -> OrderedCusums {
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[b].abs().total_cmp(&raw[a].abs()));
    let sorted_abs = order.iter().map(|&j| raw[j].abs()).collect();
    let signs = order.iter().map(|&j| if raw[j] < 0.0 { -1 } else { 1 }).collect();
    OrderedCusums { sorted_abs, order, signs }
}

fn window_cusum(x: &[f64], left: usize) -> f64 {
    let len = x.len() as f64;
    let b = left as f64;
    let head: f64 = x[..left].iter().sum();
    let tail: f64 = x[left..].iter().sum();
    sqrt((len - b) / (len * b)) * head - sqrt(b / (len * (len - b))) * tail
}

pub(crate) fn check_window(n_times: usize, start: usize, end: usize) -> Result<()> {
    if start >= end || end > n_times {
        return Err(Error::Dimension(format!(
            "window [{}, {end}] does not fit inside [1, {n_times}]",
            start + 1
        )));
    }
    Ok(())
}

/// The double CUSUM `D_m` of a decreasing sequence of absolute CUSUMs.
pub fn double_cusum(sorted_abs: &[f64], m: usize, mode: DcMode) -> Result<f64> {
    mode.validate()?;
    let n = sorted_abs.len();
    if m == 0 || m > n {
        return Err(Error::Domain(format!("cardinality m = {m} must lie in 1..={n}")));
    }
    if sorted_abs.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Contract("double CUSUM input must be sorted in decreasing order"));
    }
    let head: f64 = sorted_abs[..m].iter().sum();
    let tail: f64 = sorted_abs[m..].iter().sum();
    Ok(mode.weight(m, n) * (head / m as f64 - tail / (2 * n - m) as f64))
}

/// Outcome of maximising the double CUSUM over split `b` and cardinality `m`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CusumScanResult {
    pub start: usize,
    pub end: usize,
    pub stat: f64,
    /// Maximising split; as a 1-based time this is the estimated change-point.
    pub split: usize,
    pub m_hat: usize,
    /// Series in decreasing order of `|X|` at `split`.
    pub order: Vec<usize>,
    /// Signs of the CUSUMs aligned with `order`.
    pub signs: Vec<i8>,
    pub sorted_abs: Vec<f64>,
}

impl CusumScanResult {
    /// The `m_hat` series with the largest `|X|` at the split, ascending.
    pub fn contributors(&self) -> Vec<usize> {
        let mut top = self.order[..self.m_hat].to_vec();
        top.sort_unstable();
        top
    }
}

/// Largest `weights[m - 1] * contrast[m - 1]`; ties go to the smallest `m`.
fn best_over_m(contrast: &[f64], weights: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 1);
    for (m, (&w, &c)) in weights.iter().zip(contrast).enumerate() {
        let d = w * c;
        if d > best.0 {
            best = (d, m + 1);
        }
    }
    best
}

/// Prefix sums of a panel, reused across many window scans.
#[derive(Clone, Debug)]
pub struct Scanner {
    n_series: usize,
    n_times: usize,
    // Time-major: `prefix[t * n_series + j]` sums the first `t` values of series `j`.
    prefix: Vec<f64>,
    abs: Vec<f64>,
    // Series ordered by decreasing `|X|` at the last scanned split, and the
    // matching values. Neighbouring splits reorder only a few entries.
    order: Vec<usize>,
    sorted: Vec<f64>,
    suffix: Vec<f64>,
    // `contrast[m - 1]`: mean of the top `m` minus the tail sum over `2n - m`.
    contrast: Vec<f64>,
    inv_head: Vec<f64>,
    inv_tail: Vec<f64>,
}

impl Scanner {
    pub fn new(panel: &ScaledPanel) -> Self {
        Self::from_values(panel.n_series(), panel.n_times(), panel.values())
    }

    /// `values` is series-per-row, `n_series * n_times` long.
    pub fn from_values(n_series: usize, n_times: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), n_series * n_times, "panel shape mismatch");
        let mut prefix = vec![0.0; n_series * (n_times + 1)];
        for (j, row) in values.chunks_exact(n_times).enumerate() {
            let mut acc = 0.0;
            for (t, v) in row.iter().enumerate() {
                acc += v;
                prefix[(t + 1) * n_series + j] = acc;
            }
        }
        Self {
            n_series,
            n_times,
            prefix,
            abs: vec![0.0; n_series],
            order: (0..n_series).collect(),
            sorted: vec![0.0; n_series],
            suffix: vec![0.0; n_series + 1],
            contrast: vec![0.0; n_series],
            inv_head: (1..=n_series).map(|m| 1.0 / m as f64).collect(),
            inv_tail: (1..=n_series).map(|m| 1.0 / (2 * n_series - m) as f64).collect(),
        }
    }

    pub fn n_series(&self) -> usize {
        self.n_series
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    #[inline]
    fn weights_at(start: usize, split: usize, end: usize) -> (f64, f64) {
        let len = (end - start) as f64;
        let b = (split - start) as f64;
        (sqrt((len - b) / (len * b)), sqrt(b / (len * (len - b))))
    }

    /// `X^j` for the window `start..end` split at `split`.
    #[inline]
    pub fn cusum(&self, j: usize, start: usize, split: usize, end: usize) -> f64 {
        let n = self.n_series;
        let (a, c) = Self::weights_at(start, split, end);
        let p = &self.prefix;
        let head = p[split * n + j] - p[start * n + j];
        let tail = p[end * n + j] - p[split * n + j];
        a * head - c * tail
    }

    fn fill_abs(&mut self, start: usize, split: usize, end: usize) {
        let n = self.n_series;
        let (a, c) = Self::weights_at(start, split, end);
        let s = &self.prefix[start * n..(start + 1) * n];
        let b = &self.prefix[split * n..(split + 1) * n];
        let e = &self.prefix[end * n..(end + 1) * n];
        for (j, out) in self.abs.iter_mut().enumerate() {
            *out = (a * (b[j] - s[j]) - c * (e[j] - b[j])).abs();
        }
    }

    /// Sorts `abs` into `sorted` in decreasing order, starting from the
    /// previous split's ordering.
    fn sort_abs(&mut self) {
        for (v, &j) in self.sorted.iter_mut().zip(&self.order) {
            *v = self.abs[j];
        }
        for i in 1..self.n_series {
            let (v, j) = (self.sorted[i], self.order[i]);
            let mut k = i;
            while k > 0 && self.sorted[k - 1] < v {
                self.sorted[k] = self.sorted[k - 1];
                self.order[k] = self.order[k - 1];
                k -= 1;
            }
            self.sorted[k] = v;
            self.order[k] = j;
        }
    }

    fn fill_contrast(&mut self) {
        let n = self.n_series;
        self.suffix[n] = 0.0;
        for j in (0..n).rev() {
            self.suffix[j] = self.suffix[j + 1] + self.sorted[j];
        }
        let mut head = 0.0;
        for m in 1..=n {
            head += self.sorted[m - 1];
            self.contrast[m - 1] = head * self.inv_head[m - 1] - self.suffix[m] * self.inv_tail[m - 1];
        }
    }

    fn candidates(&self, start: usize, end: usize, trim: usize) -> Result<Range<usize>> {
        check_window(self.n_times, start, end)?;
        let range = candidate_splits(start, end, trim);
        if range.is_empty() {
            return Err(Error::WindowTooShort { start: start + 1, end, trim });
        }
        Ok(range)
    }

    /// Full scan of `start..end`: statistic, maximising `(b, m)` and the
    /// ordering at the maximiser. Ties go to the smallest `b`, then `m`.
    pub fn scan(&mut self, start: usize, end: usize, mode: DcMode, trim: usize) -> Result<CusumScanResult> {
        mode.validate()?;
        let range = self.candidates(start, end, trim)?;
        let weights = mode.weights(self.n_series);
        let mut best = (f64::NEG_INFINITY, range.start, 1);
        for split in range {
            self.fill_abs(start, split, end);
            self.sort_abs();
            self.fill_contrast();
            let (d, m) = best_over_m(&self.contrast, &weights);
            if d > best.0 {
                best = (d, split, m);
            }
        }
        let (stat, split, m_hat) = best;
        let raw: Vec<f64> = (0..self.n_series).map(|j| self.cusum(j, start, split, end)).collect();
        let ordered = order_cusums(&raw);
        Ok(CusumScanResult {
            start,
            end,
            stat,
            split,
            m_hat,
            order: ordered.order,
            signs: ordered.signs,
            sorted_abs: ordered.sorted_abs,
        })
    }

    /// Scan statistics of `start..end` for several weightings at once.
    ///
    /// `weights[k]` must come from [`DcMode::weights`]; `out[k]` receives the
    /// maximum for weighting `k`. The sort at each split is shared.
    pub fn scan_stats(
        &mut self,
        start: usize,
        end: usize,
        trim: usize,
        weights: &[Vec<f64>],
        out: &mut [f64],
    ) -> Result<()> {
        let range = self.candidates(start, end, trim)?;
        out.iter_mut().for_each(|o| *o = f64::NEG_INFINITY);
        for split in range {
            self.fill_abs(start, split, end);
            self.sort_abs();
            self.fill_contrast();
            for (w, o) in weights.iter().zip(out.iter_mut()) {
                let (d, _) = best_over_m(&self.contrast, w);
                if d > *o {
                    *o = d;
                }
            }
        }
        Ok(())
    }
}

/// Scan the window `start..end` of a scaled panel.
pub fn dc_scan(
    panel: &ScaledPanel,
    start: usize,
    end: usize,
    mode: DcMode,
    trim: usize,
) -> Result<CusumScanResult> {
    Scanner::new(panel).scan(start, end, mode, trim)
}

/// The projection `p^phi_{b,m}` whose CUSUM of `<x_t, p>` reproduces `D^phi_m`.
///
/// `ordered` must be computed on the scaled panel at the split of interest,
/// `scales` are the `sigma_j` that produced it.
pub fn projection_vector(ordered: &OrderedCusums, m: usize, scales: &[f64], mode: DcMode) -> Result<Vec<f64>> {
    let phi = match mode {
        DcMode::Exponent { phi } => phi,
        DcMode::Combined { .. } => {
            return Err(Error::UnsupportedMode("projection is defined for exponent mode only"))
        }
    };
    mode.validate()?;
    let n = ordered.order.len();
    if scales.len() != n {
        return Err(Error::Dimension(format!("expected {n} scales, got {}", scales.len())));
    }
    if m == 0 || m > n {
        return Err(Error::Domain(format!("cardinality m = {m} must lie in 1..={n}")));
    }
    let factor = powf((m * (2 * n - m)) as f64 / (2 * n) as f64, phi);
    let mut p = vec![0.0; n];
    for (rank, (&j, &sign)) in ordered.order.iter().zip(&ordered.signs).enumerate() {
        let s = f64::from(sign) / scales[j];
        p[j] = if rank < m {
            s * factor / m as f64
        } else {
            -s * factor / (2 * n - m) as f64
        };
    }
    Ok(p)
}
