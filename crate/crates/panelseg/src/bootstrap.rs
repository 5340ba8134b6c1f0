// SPDX-License-Identifier: MIT OR Apache-2.0

//! Bootstrap test criteria from a generalised dynamic factor model fit.
//!
//! The standardized residual panel is split into a common component driven
//! by `q` dynamic principal component shocks and an idiosyncratic
//! remainder. Replicates redraw the shocks i.i.d. and resample the
//! idiosyncratic Fourier coefficients from a Daniell neighbourhood; the
//! scan statistic of each replicate gives the null distribution.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use panelseg_core::quantile::upper_quantile;
use panelseg_core::{DcMode, Scanner, ThresholdSource, WindowRule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Independent generator number `stream` under `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn degenerate(reason: &str) -> Error {
    Error::Core(panelseg_core::Error::Degenerate { series: None, reason: reason.into() })
}

fn domain(msg: String) -> Error {
    Error::Core(panelseg_core::Error::Domain(msg))
}

fn as_matrix(values: &[f64], n_series: usize, n_times: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n_series, n_times, values)
}

/// `Q = floor(C / log C)` with `C = min(n, T)`, at least 1.
pub fn max_factors(n_series: usize, n_times: usize) -> usize {
    let c = n_series.min(n_times) as f64;
    ((c / c.ln()).floor() as usize).max(1)
}

/// Information criterion `IC(k)` for `k = 0..=Q`.
///
/// `IC(k) = log(tr S - sum_{l <= k} lambda_l) + k log(C) / C` with `S = E E' / T`.
pub fn factor_criteria(residuals: &[f64], n_series: usize, n_times: usize) -> Result<Vec<f64>> {
    if n_series < 2 || n_times < 8 {
        return Err(domain(format!(
            "factor number needs at least 2 series and 8 time points, got {n_series} x {n_times}"
        )));
    }
    let e = as_matrix(residuals, n_series, n_times);
    // The smaller Gram matrix has the same non-zero spectrum.
    let gram = if n_series <= n_times { &e * e.transpose() } else { e.transpose() * &e } / n_times as f64;
    let trace = gram.trace();
    if !(trace > 0.0) {
        return Err(degenerate("residual panel is identically zero"));
    }
    let mut eig: Vec<f64> = gram.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let c = n_series.min(n_times) as f64;
    let penalty = c.ln() / c;
    let q_max = max_factors(n_series, n_times).min(eig.len());
    let floor = trace * 1e-300_f64.max(f64::MIN_POSITIVE);
    let mut remaining = trace;
    let mut out = Vec::with_capacity(q_max + 1);
    out.push(trace.ln());
    for (k, lambda) in eig.iter().take(q_max).enumerate() {
        remaining -= lambda;
        out.push(remaining.max(floor).ln() + (k + 1) as f64 * penalty);
    }
    Ok(out)
}

/// Number of common shocks minimising the information criterion; ties go to the smaller `k`.
pub fn estimate_factor_number(residuals: &[f64], n_series: usize, n_times: usize) -> Result<usize> {
    let ic = factor_criteria(residuals, n_series, n_times)?;
    let mut best = 0;
    for (k, v) in ic.iter().enumerate() {
        if *v < ic[best] {
            best = k;
        }
    }
    Ok(best)
}

/// Default spectral bandwidth `M = floor(sqrt(T))`.
pub fn default_bandwidth(n_times: usize) -> usize {
    (n_times as f64).sqrt().floor() as usize
}

/// Common/idiosyncratic split of a residual panel.
#[derive(Clone, Debug)]
pub struct GdfmDecomposition {
    pub n_series: usize,
    pub n_times: usize,
    pub q: usize,
    /// Spectral bandwidth `M`; filters have lags `-M..=M`.
    pub bandwidth: usize,
    /// `q x T`, row-major.
    pub shocks: Vec<f64>,
    /// `b_k[j][i]` at `((j * q + i) * (2M + 1)) + (k + M)`.
    pub filter: Vec<f64>,
    /// `n x T`, row-major.
    pub common: Vec<f64>,
    /// `residuals - common`.
    pub idio: Vec<f64>,
}

impl GdfmDecomposition {
    fn taps(&self) -> usize {
        2 * self.bandwidth + 1
    }

    /// `sum_k b_k u_{t-k}` with `t - k` taken modulo `T`.
    pub fn apply_filter(&self, shocks: &[f64]) -> Vec<f64> {
        let (n, t, q, m) = (self.n_series, self.n_times, self.q, self.bandwidth as isize);
        let taps = self.taps();
        let mut out = vec![0.0; n * t];
        for j in 0..n {
            let row = &mut out[j * t..(j + 1) * t];
            for i in 0..q {
                let coef = &self.filter[(j * q + i) * taps..(j * q + i + 1) * taps];
                let u = &shocks[i * t..(i + 1) * t];
                for (tap, &b) in coef.iter().enumerate() {
                    if b == 0.0 {
                        continue;
                    }
                    let lag = tap as isize - m;
                    for (s, slot) in row.iter_mut().enumerate() {
                        let src = (s as isize - lag).rem_euclid(t as isize) as usize;
                        *slot += b * u[src];
                    }
                }
            }
        }
        out
    }

    /// Common component rebuilt from shocks redrawn i.i.d. from their own values.
    pub fn resample_common<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let t = self.n_times;
        if self.q == 0 {
            return vec![0.0; self.n_series * t];
        }
        let mut drawn = vec![0.0; self.q * t];
        for i in 0..self.q {
            let src = &self.shocks[i * t..(i + 1) * t];
            for slot in &mut drawn[i * t..(i + 1) * t] {
                *slot = src[rng.random_range(0..t)];
            }
        }
        self.apply_filter(&drawn)
    }
}

/// Dynamic principal component decomposition with `q` shocks and a Bartlett
/// lag-window spectral estimate of bandwidth `bandwidth`.
pub fn decompose_gdfm(
    residuals: &[f64],
    n_series: usize,
    n_times: usize,
    q: usize,
    bandwidth: usize,
) -> Result<GdfmDecomposition> {
    if residuals.len() != n_series * n_times {
        return Err(Error::Core(panelseg_core::Error::Dimension(format!(
            "expected {} residuals, got {}",
            n_series * n_times,
            residuals.len()
        ))));
    }
    let q_max = max_factors(n_series, n_times);
    if q > q_max || q > n_series {
        return Err(domain(format!("factor number {q} exceeds the maximum {}", q_max.min(n_series))));
    }
    if bandwidth >= n_times {
        return Err(domain(format!("spectral bandwidth {bandwidth} must be below T = {n_times}")));
    }
    let taps = 2 * bandwidth + 1;
    if q == 0 {
        return Ok(GdfmDecomposition {
            n_series,
            n_times,
            q,
            bandwidth,
            shocks: Vec::new(),
            filter: Vec::new(),
            common: vec![0.0; n_series * n_times],
            idio: residuals.to_vec(),
        });
    }
    let e = as_matrix(residuals, n_series, n_times);
    let t = n_times;
    // gamma[k] = (1/T) sum_t e_t e_{t-k}'
    let gamma: Vec<DMatrix<f64>> = (0..=bandwidth)
        .map(|k| e.columns(k, t - k) * e.columns(0, t - k).transpose() / t as f64)
        .collect();
    let mut loadings: Vec<DMatrix<Complex64>> = Vec::with_capacity(bandwidth + 1);
    for h in 0..=bandwidth {
        let theta = 2.0 * PI * h as f64 / taps as f64;
        let mut spec = gamma[0].map(|v| Complex64::new(v, 0.0));
        for (k, g) in gamma.iter().enumerate().skip(1) {
            let w = 1.0 - k as f64 / (bandwidth + 1) as f64;
            let (s, c) = (k as f64 * theta).sin_cos();
            for a in 0..n_series {
                for b in 0..n_series {
                    let (gab, gba) = (g[(a, b)], g[(b, a)]);
                    spec[(a, b)] += Complex64::new(w * c * (gab + gba), w * s * (gba - gab));
                }
            }
        }
        let eig = spec.symmetric_eigen();
        let mut idx: Vec<usize> = (0..n_series).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut p = DMatrix::<Complex64>::zeros(n_series, q);
        for (col, &src) in idx.iter().take(q).enumerate() {
            p.set_column(col, &eig.eigenvectors.column(src));
        }
        align_phases(&mut p, loadings.last(), h == 0);
        loadings.push(p);
    }
    // b_k = (1 / (2M + 1)) [P_0 + 2 sum_{h >= 1} Re(P_h e^{i k theta_h})]
    let mut filter = vec![0.0; n_series * q * taps];
    for k in -(bandwidth as isize)..=bandwidth as isize {
        for (h, p) in loadings.iter().enumerate() {
            let theta = 2.0 * PI * h as f64 / taps as f64;
            let rot = Complex64::from_polar(1.0, k as f64 * theta);
            let mult = if h == 0 { 1.0 } else { 2.0 };
            for j in 0..n_series {
                for i in 0..q {
                    let v = (p[(j, i)] * rot).re * mult / taps as f64;
                    filter[(j * q + i) * taps + (k + bandwidth as isize) as usize] += v;
                }
            }
        }
    }
    // u_{i,t} = sum_k sum_j b_k[j][i] e_{j,t+k}, zero outside the sample.
    let mut shocks = vec![0.0; q * t];
    for i in 0..q {
        for j in 0..n_series {
            let coef = &filter[(j * q + i) * taps..(j * q + i + 1) * taps];
            let row = &residuals[j * t..(j + 1) * t];
            for (tap, &b) in coef.iter().enumerate() {
                let k = tap as isize - bandwidth as isize;
                for s in 0..t {
                    let src = s as isize + k;
                    if (0..t as isize).contains(&src) {
                        shocks[i * t + s] += b * row[src as usize];
                    }
                }
            }
        }
    }
    let mut out = GdfmDecomposition {
        n_series,
        n_times,
        q,
        bandwidth,
        shocks,
        filter,
        common: Vec::new(),
        idio: Vec::new(),
    };
    out.common = out.apply_filter(&out.shocks);
    out.idio = residuals.iter().zip(&out.common).map(|(e, c)| e - c).collect();
    Ok(out)
}

// Eigenvectors carry an arbitrary phase. At frequency zero make the largest
// entry real and positive; elsewhere make the inner product with the
// previous frequency's vector real and positive, so the loadings vary
// smoothly and their inverse transform stays concentrated at small lags.
// `real` drops the round-off imaginary parts where the spectrum is real.
fn align_phases(p: &mut DMatrix<Complex64>, previous: Option<&DMatrix<Complex64>>, real: bool) {
    for col in 0..p.ncols() {
        let anchor = match previous {
            None => {
                let (mut best, mut idx) = (-1.0, 0);
                for (r, v) in p.column(col).iter().enumerate() {
                    if v.norm() > best {
                        best = v.norm();
                        idx = r;
                    }
                }
                p[(idx, col)]
            }
            Some(prev) => prev.column(col).iter().zip(p.column(col).iter()).map(|(a, b)| a.conj() * b).sum(),
        };
        let norm = anchor.norm();
        if norm > 0.0 {
            let rot = anchor.conj() / norm;
            for v in p.column_mut(col).iter_mut() {
                *v *= rot;
            }
        }
        if real {
            // A real eigenvector times a unit phase: restore it before dropping
            // the imaginary parts.
            let (mut best, mut idx) = (-1.0, 0);
            for (r, v) in p.column(col).iter().enumerate() {
                if v.norm() > best {
                    best = v.norm();
                    idx = r;
                }
            }
            let lead = p[(idx, col)];
            if lead.norm() > 0.0 {
                let mut rot = lead.conj() / lead.norm();
                if let Some(prev) = previous {
                    let dot: Complex64 =
                        prev.column(col).iter().zip(p.column(col).iter()).map(|(a, b)| a.conj() * b * rot).sum();
                    if dot.re < 0.0 {
                        rot = -rot;
                    }
                }
                for v in p.column_mut(col).iter_mut() {
                    *v *= rot;
                    v.im = 0.0;
                }
            }
        }
    }
}

/// Default Daniell half-width `max(1, floor(0.05 T))`.
pub fn default_half_width(n_times: usize) -> usize {
    ((0.05 * n_times as f64).floor() as usize).max(1)
}

/// Resampler for the idiosyncratic component in the frequency domain.
///
/// Each Fourier frequency `j = 1..=(T-1)/2` is replaced by a frequency drawn
/// uniformly from `j - h..=j + h` (truncated to the valid range); the same
/// draw is used for every series. Frequency zero and, for even `T`, the
/// Nyquist frequency are kept.
pub struct LocalBootstrap {
    n_series: usize,
    n_times: usize,
    half_width: usize,
    spectra: Vec<Vec<Complex64>>,
    inverse: Arc<dyn Fft<f64>>,
    source: Vec<f64>,
}

impl std::fmt::Debug for LocalBootstrap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalBootstrap")
            .field("n_series", &self.n_series)
            .field("n_times", &self.n_times)
            .field("half_width", &self.half_width)
            .finish_non_exhaustive()
    }
}

impl LocalBootstrap {
    pub fn new(idio: &[f64], n_series: usize, n_times: usize, half_width: usize) -> Result<Self> {
        if n_times < 8 {
            return Err(domain(format!("local bootstrap needs T >= 8, got {n_times}")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_times);
        let inverse = planner.plan_fft_inverse(n_times);
        let spectra = idio
            .chunks_exact(n_times)
            .map(|row| {
                let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                forward.process(&mut buf);
                buf
            })
            .collect();
        Ok(Self { n_series, n_times, half_width, spectra, inverse, source: idio.to_vec() })
    }

    /// Replacement frequency for each `j = 1..=(T-1)/2`, stored at `j - 1`.
    pub fn draw_indices<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let top = (self.n_times - 1) / 2;
        (1..=top)
            .map(|j| {
                let lo = j.saturating_sub(self.half_width).max(1);
                let hi = (j + self.half_width).min(top);
                rng.random_range(lo..=hi)
            })
            .collect()
    }

    pub fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        if self.half_width == 0 {
            return self.source.clone();
        }
        let t = self.n_times;
        let picks = self.draw_indices(rng);
        let mut out = Vec::with_capacity(self.n_series * t);
        let mut buf = vec![Complex64::new(0.0, 0.0); t];
        for spec in &self.spectra {
            buf[0] = spec[0];
            if t % 2 == 0 {
                buf[t / 2] = spec[t / 2];
            }
            for (j, &src) in picks.iter().enumerate().map(|(i, s)| (i + 1, s)) {
                buf[j] = spec[src];
                buf[t - j] = spec[src].conj();
            }
            self.inverse.process(&mut buf);
            out.extend(buf.iter().map(|c| c.re / t as f64));
        }
        out
    }
}

/// One-shot local bootstrap draw of an `n x T` panel.
pub fn local_bootstrap_idio<R: Rng + ?Sized>(
    idio: &[f64],
    n_series: usize,
    n_times: usize,
    half_width: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    Ok(LocalBootstrap::new(idio, n_series, n_times, half_width)?.resample(rng))
}

/// Fitted resampling scheme for one standardized residual panel.
#[derive(Debug)]
pub struct BootstrapModel {
    pub decomposition: GdfmDecomposition,
    local: LocalBootstrap,
    seed: u64,
}

impl BootstrapModel {
    /// Fits the factor number, the decomposition and the frequency resampler.
    ///
    /// A single series has no cross-section to factor, so `q = 0`.
    pub fn fit(residuals: &[f64], n_series: usize, n_times: usize, seed: u64) -> Result<Self> {
        let q = if n_series >= 2 { estimate_factor_number(residuals, n_series, n_times)? } else { 0 };
        Self::fit_with(residuals, n_series, n_times, q, default_bandwidth(n_times), default_half_width(n_times), seed)
    }

    pub fn fit_with(
        residuals: &[f64],
        n_series: usize,
        n_times: usize,
        q: usize,
        bandwidth: usize,
        half_width: usize,
        seed: u64,
    ) -> Result<Self> {
        let decomposition = decompose_gdfm(residuals, n_series, n_times, q, bandwidth)?;
        let local = LocalBootstrap::new(&decomposition.idio, n_series, n_times, half_width)?;
        Ok(Self { decomposition, local, seed })
    }

    pub fn n_series(&self) -> usize {
        self.decomposition.n_series
    }

    pub fn n_times(&self) -> usize {
        self.decomposition.n_times
    }

    pub fn factor_number(&self) -> usize {
        self.decomposition.q
    }

    /// Replicate `l`; depends only on the seed and `l`.
    pub fn replicate(&self, l: usize) -> Vec<f64> {
        let mut rng = substream(self.seed, l as u64);
        let mut panel = self.decomposition.resample_common(&mut rng);
        let idio = self.local.resample(&mut rng);
        for (a, b) in panel.iter_mut().zip(idio) {
            *a += b;
        }
        panel
    }
}

/// The test criterion for one window length and level.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct BootstrapThreshold {
    pub window_len: usize,
    pub alpha: f64,
    pub boot_reps: usize,
    pub rule: WindowRule,
    pub quantile: f64,
    /// The statistics the quantile is taken over: one per replicate under
    /// [`WindowRule::Max`], one per replicate and window position
    /// (replicate-major) under [`WindowRule::Pooled`].
    pub replicate_stats: Vec<f64>,
}

/// Scan statistic of every window of length `window_len`, indexed `[weighting][start]`.
pub fn window_stats(
    scanner: &mut Scanner,
    window_len: usize,
    trim: usize,
    weights: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let n_times = scanner.n_times();
    if window_len > n_times {
        return Err(domain(format!("window length {window_len} exceeds T = {n_times}")));
    }
    let positions = n_times - window_len + 1;
    let mut stats = vec![Vec::with_capacity(positions); weights.len()];
    let mut scratch = vec![0.0; weights.len()];
    for start in 0..positions {
        scanner.scan_stats(start, start + window_len, trim, weights, &mut scratch)?;
        for (col, s) in stats.iter_mut().zip(&scratch) {
            col.push(*s);
        }
    }
    Ok(stats)
}

/// Maximum scan statistic over every window of length `window_len`, for each weighting.
pub fn moving_window_stats(
    scanner: &mut Scanner,
    window_len: usize,
    trim: usize,
    weights: &[Vec<f64>],
) -> Result<Vec<f64>> {
    Ok(window_stats(scanner, window_len, trim, weights)?
        .iter()
        .map(|col| col.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect())
}

/// Replicate statistics for a set of modes, computed lazily per window length.
///
/// Criteria at one length are shared by every window of that length, so
/// the whole segmentation costs one pass over the replicates per distinct
/// length.
#[derive(Debug)]
pub struct ThresholdTable {
    model: BootstrapModel,
    modes: Vec<DcMode>,
    weights: Vec<Vec<f64>>,
    trim: usize,
    boot_reps: usize,
    rule: WindowRule,
    replicates: Vec<Scanner>,
    // window length -> per mode, the statistics named by `rule`
    cache: HashMap<usize, Vec<Vec<f64>>>,
}

impl ThresholdTable {
    pub fn new(
        model: BootstrapModel,
        modes: &[DcMode],
        trim: usize,
        boot_reps: usize,
        rule: WindowRule,
    ) -> Result<Self> {
        if boot_reps == 0 {
            return Err(Error::Config("number of bootstrap replicates must be at least 1".into()));
        }
        if modes.is_empty() {
            return Err(Error::Config("at least one statistic is needed".into()));
        }
        let n = model.n_series();
        let t = model.n_times();
        let weights = modes.iter().map(|m| m.weights(n)).collect();
        let replicates = (0..boot_reps)
            .into_par_iter()
            .map(|l| Scanner::from_values(n, t, &model.replicate(l)))
            .collect();
        Ok(Self { model, modes: modes.to_vec(), weights, trim, boot_reps, rule, replicates, cache: HashMap::new() })
    }

    pub fn model(&self) -> &BootstrapModel {
        &self.model
    }

    pub fn modes(&self) -> &[DcMode] {
        &self.modes
    }

    pub fn rule(&self) -> WindowRule {
        self.rule
    }

    /// Statistics for window length `window_len`, indexed `[mode]`; see
    /// [`BootstrapThreshold::replicate_stats`] for their layout.
    pub fn stats(&mut self, window_len: usize) -> Result<&[Vec<f64>]> {
        if !self.cache.contains_key(&window_len) {
            let (trim, weights, rule) = (self.trim, &self.weights, self.rule);
            let per_rep: Vec<Vec<Vec<f64>>> = self
                .replicates
                .par_iter_mut()
                .map(|scanner| window_stats(scanner, window_len, trim, weights))
                .collect::<Result<_>>()?;
            let by_mode = (0..self.modes.len())
                .map(|k| match rule {
                    WindowRule::Pooled => per_rep.iter().flat_map(|r| r[k].iter().copied()).collect(),
                    WindowRule::Max => {
                        per_rep.iter().map(|r| r[k].iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect()
                    }
                })
                .collect();
            self.cache.insert(window_len, by_mode);
        }
        Ok(&self.cache[&window_len])
    }

    pub fn threshold(&mut self, mode_index: usize, window_len: usize, alpha: f64) -> Result<BootstrapThreshold> {
        let (boot_reps, rule) = (self.boot_reps, self.rule);
        let stats = self.stats(window_len)?[mode_index].clone();
        let quantile = upper_quantile(&stats, alpha)?;
        Ok(BootstrapThreshold { window_len, alpha, boot_reps, rule, quantile, replicate_stats: stats })
    }

    pub fn quantile(&mut self, mode_index: usize, window_len: usize, alpha: f64) -> Result<f64> {
        Ok(upper_quantile(&self.stats(window_len)?[mode_index], alpha)?)
    }

    /// A [`ThresholdSource`] for one mode at level `alpha`.
    pub fn source(&mut self, mode_index: usize, alpha: f64) -> TableSource<'_> {
        TableSource { table: self, mode_index, alpha }
    }
}

pub struct TableSource<'a> {
    table: &'a mut ThresholdTable,
    mode_index: usize,
    alpha: f64,
}

impl ThresholdSource for TableSource<'_> {
    fn threshold(&mut self, start: usize, end: usize) -> std::result::Result<f64, String> {
        self.table.quantile(self.mode_index, end - start, self.alpha).map_err(|e| e.to_string())
    }
}
