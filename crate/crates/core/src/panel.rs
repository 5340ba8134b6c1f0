// SPDX-License-Identifier: MIT OR Apache-2.0

//! Panel containers. Storage is series-per-row: entry `(j, t)` lives at
//! `values[j * n_times + t]`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// An `n x T` panel of real observations, `n >= 1`, `T >= 2`, all finite.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PanelData {
    n_series: usize,
    n_times: usize,
    values: Vec<f64>,
}

impl PanelData {
    pub fn new(n_series: usize, n_times: usize, values: Vec<f64>) -> Result<Self> {
        if n_series == 0 {
            return Err(Error::Dimension("panel needs at least one series".into()));
        }
        if n_times < 2 {
            return Err(Error::Dimension(format!(
                "panel needs at least 2 time points, got {n_times}"
            )));
        }
        if values.len() != n_series * n_times {
            return Err(Error::Dimension(format!(
                "expected {} values for a {n_series} x {n_times} panel, got {}",
                n_series * n_times,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite entry at series {}, time {}",
                pos / n_times + 1,
                pos % n_times + 1
            )));
        }
        Ok(Self { n_series, n_times, values })
    }

    /// Builds a panel from one vector per series.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_times = rows.first().map_or(0, Vec::len);
        if let Some(j) = rows.iter().position(|r| r.len() != n_times) {
            return Err(Error::Dimension(format!(
                "series {} has {} time points, expected {n_times}",
                j + 1,
                rows[j].len()
            )));
        }
        Self::new(rows.len(), n_times, rows.concat())
    }

    pub fn n_series(&self) -> usize {
        self.n_series
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_times..(j + 1) * self.n_times]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_times)
    }

    pub fn get(&self, j: usize, t: usize) -> f64 {
        self.values[j * self.n_times + t]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A panel with each series divided by its scale `sigma_j > 0`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScaledPanel {
    panel: PanelData,
    scales: Vec<f64>,
}

impl ScaledPanel {
    /// Treats `panel` as already scaled (all `sigma_j = 1`).
    pub fn unit(panel: PanelData) -> Self {
        let scales = alloc::vec![1.0; panel.n_series()];
        Self { panel, scales }
    }

    pub fn n_series(&self) -> usize {
        self.panel.n_series
    }

    pub fn n_times(&self) -> usize {
        self.panel.n_times
    }

    /// Scaled values, series-per-row.
    pub fn values(&self) -> &[f64] {
        &self.panel.values
    }

    pub fn row(&self, j: usize) -> &[f64] {
        self.panel.row(j)
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// The scaled values as a plain panel.
    pub fn as_panel(&self) -> &PanelData {
        &self.panel
    }
}

/// Divides every series by its scale.
pub fn standardize(panel: &PanelData, scales: &[f64]) -> Result<ScaledPanel> {
    if scales.len() != panel.n_series() {
        return Err(Error::Dimension(format!(
            "expected {} scales, got {}",
            panel.n_series(),
            scales.len()
        )));
    }
    if let Some(j) = scales.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::Domain(format!(
            "scale of series {} must be positive and finite, got {}",
            j + 1,
            scales[j]
        )));
    }
    let n_times = panel.n_times();
    let values = panel
        .values()
        .chunks_exact(n_times)
        .zip(scales)
        .flat_map(|(row, s)| row.iter().map(move |x| x / s))
        .collect();
    Ok(ScaledPanel {
        panel: PanelData { n_series: panel.n_series(), n_times, values },
        scales: scales.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(PanelData::new(0, 4, vec![]), Err(Error::Dimension(_))));
        assert!(matches!(PanelData::new(1, 1, vec![1.0]), Err(Error::Dimension(_))));
        assert!(PanelData::new(2, 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            PanelData::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::Domain(_))
        ));
        assert!(PanelData::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn standardize_divides_rows() {
        let p = PanelData::from_rows(&[vec![2.0, 2.0, 2.0], vec![1.0, -1.0, 3.0]]).unwrap();
        let s = standardize(&p, &[2.0, 0.5]).unwrap();
        assert_eq!(s.row(0), &[1.0, 1.0, 1.0]);
        assert_eq!(s.row(1), &[2.0, -2.0, 6.0]);
        assert_eq!(s.scales(), &[2.0, 0.5]);
    }

    #[test]
    fn standardize_rejects_nonpositive_scale() {
        let p = PanelData::from_rows(&[vec![2.0, 2.0], vec![1.0, 1.0]]).unwrap();
        let err = standardize(&p, &[1.0, 0.0]).unwrap_err();
        assert!(alloc::format!("{err}").contains("series 2"));
        assert!(standardize(&p, &[1.0]).is_err());
    }

    #[test]
    fn standardize_by_unit_is_identity() {
        let p = PanelData::from_rows(&[vec![0.3, -1.7, 2.2]]).unwrap();
        let once = standardize(&p, &[0.7]).unwrap();
        let twice = standardize(once.as_panel(), &[1.0]).unwrap();
        assert_eq!(once.values(), twice.values());
    }
}
