// SPDX-License-Identifier: MIT OR Apache-2.0

//! Piecewise-constant mean paths with sparse, randomly signed jumps.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};

pub const DEFAULT_SPREAD: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ChangeSpec {
    /// Last time point (1-based) before the jump.
    pub eta: usize,
    /// Number of series that jump.
    pub m: usize,
    /// Typical jump size `delta`.
    pub delta: f64,
    /// Jumping series (0-based); drawn at random when `None`.
    pub pi: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignRule {
    /// Independent random sign for every jump.
    #[default]
    Random,
    /// One random sign per series, shared by all of its jumps.
    PerSeries,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SignalSpec {
    pub changes: Vec<ChangeSpec>,
    /// `|delta_j| ~ U((1 - spread) delta, (1 + spread) delta)`.
    pub spread: f64,
    pub signs: SignRule,
}

impl Default for SignalSpec {
    fn default() -> Self {
        Self { changes: Vec::new(), spread: DEFAULT_SPREAD, signs: SignRule::Random }
    }
}

impl SignalSpec {
    pub fn new(changes: Vec<ChangeSpec>) -> Self {
        Self { changes, ..Self::default() }
    }

    pub fn validate(&self, n_series: usize, n_times: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.spread) {
            return Err(Error::Config(format!("jump spread must lie in [0, 1], got {}", self.spread)));
        }
        let mut prev = 0;
        for (r, c) in self.changes.iter().enumerate() {
            let label = r + 1;
            if c.eta == 0 || c.eta >= n_times {
                return Err(Error::Config(format!("change {label}: location {} must lie in 1..{n_times}", c.eta)));
            }
            if c.eta <= prev {
                return Err(Error::Config(format!("change {label}: locations must be strictly increasing")));
            }
            if c.m == 0 || c.m > n_series {
                return Err(Error::Config(format!("change {label}: m = {} must lie in 1..={n_series}", c.m)));
            }
            if let Some(pi) = &c.pi {
                if pi.len() != c.m || pi.iter().any(|&j| j >= n_series) {
                    return Err(Error::Config(format!("change {label}: explicit series set is invalid")));
                }
            }
            if !c.delta.is_finite() {
                return Err(Error::Config(format!("change {label}: jump size must be finite")));
            }
            prev = c.eta;
        }
        Ok(())
    }
}

/// Realised jumps of one change-point.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ChangeTruth {
    pub eta: usize,
    /// Ascending 0-based series.
    pub pi: Vec<usize>,
    /// `delta_{j,r}` for each series in `pi`.
    pub jumps: Vec<f64>,
}

/// The mean path `n x T` (row-major) and the realised jumps.
pub fn gen_signal<R: Rng + ?Sized>(
    spec: &SignalSpec,
    n_series: usize,
    n_times: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<ChangeTruth>)> {
    spec.validate(n_series, n_times)?;
    let series_sign: Vec<f64> = match spec.signs {
        SignRule::Random => Vec::new(),
        SignRule::PerSeries => (0..n_series).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
    };
    let mut signal = vec![0.0; n_series * n_times];
    let mut truth = Vec::with_capacity(spec.changes.len());
    for c in &spec.changes {
        let mut pi = match &c.pi {
            Some(pi) => pi.clone(),
            None => sample(rng, n_series, c.m).into_vec(),
        };
        pi.sort_unstable();
        let lo = (1.0 - spec.spread) * c.delta;
        let hi = (1.0 + spec.spread) * c.delta;
        let jumps: Vec<f64> = pi
            .iter()
            .map(|&j| {
                let size = if hi > lo { rng.random_range(lo..hi) } else { lo };
                let sign = match spec.signs {
                    SignRule::Random => {
                        if rng.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    SignRule::PerSeries => series_sign[j],
                };
                sign * size
            })
            .collect();
        for (&j, &d) in pi.iter().zip(&jumps) {
            for v in &mut signal[j * n_times + c.eta..(j + 1) * n_times] {
                *v += d;
            }
        }
        truth.push(ChangeTruth { eta: c.eta, pi, jumps });
    }
    Ok((signal, truth))
}
