// SPDX-License-Identifier: MIT OR Apache-2.0

//! Cross-sectionally correlated ARMA(2, 2) noise, optionally with a common factor.
//!
//! `u_{j,t} = sum_{i=0}^{99} rho_i v_{j-i,t}` with `rho_i = rho / (i + 1)` and
//! `eps_{j,t} = rho_h h_t + 0.2 eps_{j,t-1} - 0.3 eps_{j,t-2} + u_{j,t} + 0.2 u_{j,t-1}`.
//! The spatial moving average reaches 99 coordinates below the first series;
//! those auxiliary coordinates are generated and discarded.

use panelseg_core::PanelData;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const SPATIAL_TAPS: usize = 100;
pub const DEFAULT_BURN_IN: usize = 100;
const AR: [f64; 2] = [0.2, -0.3];
const MA: f64 = 0.2;
const FACTOR_RHO: f64 = 0.2;
const FACTOR_SD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseModel {
    /// ARMA noise with spatial MA strength `rho > 0` and `sigma_v = 0.1 / rho`.
    N1 { rho: f64 },
    /// Spatial MA with `rho = 0.2`, `sigma_v = 0.5 sqrt(1 - rho_h^2)`, plus `rho_h h_t`.
    N2 { rho_h: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::N1 { rho } if !(rho > 0.0 && rho.is_finite()) => {
                Err(Error::Config(format!("N1 requires rho > 0, got {rho}")))
            }
            NoiseModel::N2 { rho_h } if !(rho_h > 0.0 && rho_h < 1.0) => {
                Err(Error::Config(format!("N2 requires 0 < rho_h < 1, got {rho_h}")))
            }
            _ => Ok(()),
        }
    }

    fn spatial_rho(&self) -> f64 {
        match *self {
            NoiseModel::N1 { rho } => rho,
            NoiseModel::N2 { .. } => FACTOR_RHO,
        }
    }

    fn sigma_v(&self) -> f64 {
        match *self {
            NoiseModel::N1 { rho } => 0.1 / rho,
            NoiseModel::N2 { rho_h } => 0.5 * (1.0 - rho_h * rho_h).sqrt(),
        }
    }

    fn factor_loading(&self) -> f64 {
        match *self {
            NoiseModel::N1 { .. } => 0.0,
            NoiseModel::N2 { rho_h } => rho_h,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    pub n_series: usize,
    pub n_times: usize,
    pub burn_in: usize,
}

impl NoiseSpec {
    pub fn new(model: NoiseModel, n_series: usize, n_times: usize) -> Self {
        Self { model, n_series, n_times, burn_in: DEFAULT_BURN_IN }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n_series == 0 || self.n_times < 2 {
            return Err(Error::Config(format!(
                "panel must have n >= 1 and T >= 2, got {} x {}",
                self.n_series, self.n_times
            )));
        }
        Ok(())
    }

    fn total_len(&self) -> usize {
        self.burn_in + self.n_times
    }

    /// Number of spatial innovation rows, including the auxiliary ones.
    pub fn innovation_rows(&self) -> usize {
        self.n_series + SPATIAL_TAPS - 1
    }
}

/// Deterministic map from innovations to the noise panel.
///
/// `v` holds `innovation_rows() x (burn_in + T)` spatial innovations
/// (row `r` is coordinate `r - 98` in 1-based series numbering) and `h`
/// the `burn_in + T` factor innovations, both already on their final scale.
pub fn noise_from_innovations(spec: &NoiseSpec, v: &[f64], h: &[f64]) -> Result<PanelData> {
    spec.validate()?;
    let len = spec.total_len();
    if v.len() != spec.innovation_rows() * len || h.len() != len {
        return Err(Error::Config("innovation arrays do not match the noise specification".into()));
    }
    let rho = spec.model.spatial_rho();
    let weights: Vec<f64> = (0..SPATIAL_TAPS).map(|i| rho / (i + 1) as f64).collect();
    let loading = spec.model.factor_loading();
    let mut values = Vec::with_capacity(spec.n_series * spec.n_times);
    let mut u = vec![0.0; len];
    for j in 0..spec.n_series {
        // Series j draws on innovation rows j..=j + 99, newest coordinate first.
        u.iter_mut().for_each(|x| *x = 0.0);
        for (i, w) in weights.iter().enumerate() {
            let row = &v[(j + SPATIAL_TAPS - 1 - i) * len..(j + SPATIAL_TAPS - i) * len];
            for (slot, x) in u.iter_mut().zip(row) {
                *slot += w * x;
            }
        }
        let (mut e1, mut e2, mut u1) = (0.0, 0.0, 0.0);
        for t in 0..len {
            let e = loading * h[t] + AR[0] * e1 + AR[1] * e2 + u[t] + MA * u1;
            e2 = e1;
            e1 = e;
            u1 = u[t];
            if t >= spec.burn_in {
                values.push(e);
            }
        }
    }
    Ok(PanelData::new(spec.n_series, spec.n_times, values)?)
}

pub fn gen_noise<R: Rng + ?Sized>(spec: &NoiseSpec, rng: &mut R) -> Result<PanelData> {
    spec.validate()?;
    let len = spec.total_len();
    let v_law = Normal::new(0.0, spec.model.sigma_v()).map_err(|e| Error::Config(e.to_string()))?;
    let v: Vec<f64> = (0..spec.innovation_rows() * len).map(|_| v_law.sample(rng)).collect();
    let h: Vec<f64> = match spec.model {
        NoiseModel::N1 { .. } => vec![0.0; len],
        NoiseModel::N2 { .. } => {
            let h_law = Normal::new(0.0, FACTOR_SD).map_err(|e| Error::Config(e.to_string()))?;
            (0..len).map(|_| h_law.sample(rng)).collect()
        }
    };
    noise_from_innovations(spec, &v, &h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_innovations_give_zero_noise() {
        for model in [NoiseModel::N1 { rho: 0.5 }, NoiseModel::N2 { rho_h: 0.9 }] {
            let spec = NoiseSpec::new(model, 7, 20);
            let v = vec![0.0; spec.innovation_rows() * 120];
            let p = noise_from_innovations(&spec, &v, &[0.0; 120]).unwrap();
            assert!(p.values().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn single_impulse_follows_arma_recursion() {
        // One unit innovation at the coordinate of series 1, right after burn-in.
        let spec = NoiseSpec { model: NoiseModel::N1 { rho: 1.0 }, n_series: 2, n_times: 4, burn_in: 0 };
        let mut v = vec![0.0; spec.innovation_rows() * 4];
        v[(SPATIAL_TAPS - 1) * 4] = 1.0;
        let p = noise_from_innovations(&spec, &v, &[0.0; 4]).unwrap();
        // u_1 = (1, 0, 0, 0); eps = (1, 0.2 + 0.2, 0.2 * 0.4 - 0.3, ...)
        let e0 = 1.0;
        let e1 = 0.2 * e0 + 0.2;
        let e2 = 0.2 * e1 - 0.3 * e0;
        let e3 = 0.2 * e2 - 0.3 * e1;
        assert_eq!(p.row(0), &[e0, e1, e2, e3]);
        // Series 2 sees it with weight rho_1 = 1/2.
        for (a, b) in p.row(1).iter().zip(p.row(0)) {
            assert!((a - 0.5 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(NoiseModel::N1 { rho: 0.0 }.validate().is_err());
        assert!(NoiseModel::N2 { rho_h: 1.0 }.validate().is_err());
        assert!(NoiseSpec::new(NoiseModel::N1 { rho: 0.2 }, 0, 10).validate().is_err());
    }
}
