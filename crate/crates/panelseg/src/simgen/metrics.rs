// SPDX-License-Identifier: MIT OR Apache-2.0

//! Evaluation metrics for Monte Carlo runs.

use std::collections::BTreeSet;

use panelseg_core::quantile::upper_quantile;

use crate::error::Result;

/// Fraction of the `n` series classified identically by the two sets.
pub fn rand_index(truth: &[usize], estimate: &[usize], n_series: usize) -> f64 {
    let a: BTreeSet<usize> = truth.iter().copied().collect();
    let b: BTreeSet<usize> = estimate.iter().copied().collect();
    let agree = (0..n_series).filter(|j| a.contains(j) == b.contains(j)).count();
    agree as f64 / n_series as f64
}

/// `|eta_hat - eta| < log T`.
pub fn location_hit(eta_hat: usize, eta: usize, n_times: usize) -> bool {
    (eta_hat.abs_diff(eta) as f64) < (n_times as f64).ln()
}

/// Fraction of `stats` strictly above `critical`.
pub fn rejection_rate(stats: &[f64], critical: f64) -> f64 {
    if stats.is_empty() {
        return 0.0;
    }
    stats.iter().filter(|&&s| s > critical).count() as f64 / stats.len() as f64
}

/// The `(1 - alpha)` quantile of the null statistics.
pub fn size_corrected_critical(null_stats: &[f64], alpha: f64) -> Result<f64> {
    Ok(upper_quantile(null_stats, alpha)?)
}

/// One replication of a single change-point test under the alternative.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleOutcome {
    pub stat: f64,
    pub b_hat: Option<usize>,
    /// Series flagged as changing when the test rejects.
    pub flagged: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PowerSummary {
    pub critical: f64,
    pub power: f64,
    pub location_accuracy: Option<f64>,
    pub rand_index: Option<f64>,
}

/// Size-corrected power, location accuracy and Rand index.
///
/// Location accuracy counts replications that reject and locate the change
/// within `log T`, over all replications. The Rand index is averaged over
/// all replications, a non-rejection flagging no series.
pub fn summarize_power(
    null_stats: &[f64],
    alternative: &[SingleOutcome],
    truth: &[(usize, Vec<usize>)],
    n_series: usize,
    n_times: usize,
    alpha: f64,
) -> Result<PowerSummary> {
    let critical = size_corrected_critical(null_stats, alpha)?;
    let r = alternative.len().max(1) as f64;
    let rejected = |o: &SingleOutcome| o.stat > critical;
    let power = alternative.iter().filter(|o| rejected(o)).count() as f64 / r;
    let location_accuracy = alternative.iter().all(|o| o.b_hat.is_some()).then(|| {
        alternative
            .iter()
            .zip(truth)
            .filter(|(o, (eta, _))| rejected(o) && location_hit(o.b_hat.unwrap(), *eta, n_times))
            .count() as f64
            / r
    });
    let rand_index = alternative.iter().all(|o| o.flagged.is_some()).then(|| {
        alternative
            .iter()
            .zip(truth)
            .map(|(o, (_, pi))| {
                let flagged: &[usize] = if rejected(o) { o.flagged.as_deref().unwrap() } else { &[] };
                rand_index(pi, flagged, n_series)
            })
            .sum::<f64>()
            / r
    });
    Ok(PowerSummary { critical, power, location_accuracy, rand_index })
}

/// Counts of `N_hat = 0, 1, 2, 3, 4` and `>= 5`.
pub fn nhat_histogram(counts: &[usize]) -> [usize; 6] {
    let mut h = [0; 6];
    for &c in counts {
        h[c.min(5)] += 1;
    }
    h
}

/// For each true change-point, the fraction of replications with an
/// estimate within `log T` of it.
pub fn eta_accuracy(estimates: &[Vec<usize>], etas: &[usize], n_times: usize) -> Vec<f64> {
    let r = estimates.len().max(1) as f64;
    etas.iter()
        .map(|&eta| {
            estimates.iter().filter(|est| est.iter().any(|&e| location_hit(e, eta, n_times))).count() as f64 / r
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rand_index_examples() {
        let truth: Vec<usize> = (0..4).collect();
        assert_eq!(rand_index(&truth, &truth, 10), 1.0);
        assert_eq!(rand_index(&truth, &(2..6).collect::<Vec<_>>(), 10), 0.6);
        let half: Vec<usize> = (0..5).collect();
        let rest: Vec<usize> = (5..10).collect();
        assert_eq!(rand_index(&half, &rest, 10), 0.0);
        assert_eq!(rand_index(&rest, &truth, 10), rand_index(&truth, &rest, 10));
    }

    #[test]
    fn location_window() {
        // log 100 = 4.6
        assert!(location_hit(54, 50, 100));
        assert!(!location_hit(55, 50, 100));
    }

    #[test]
    fn zero_statistic_detector() {
        let null = vec![0.0; 20];
        let alt: Vec<SingleOutcome> =
            (0..20).map(|_| SingleOutcome { stat: 0.0, b_hat: Some(10), flagged: Some(vec![]) }).collect();
        let truth = vec![(50, vec![1, 2]); 20];
        let s = summarize_power(&null, &alt, &truth, 5, 100, 0.05).unwrap();
        assert_eq!(s.power, 0.0);
        assert_eq!(rejection_rate(&null, 0.0), 0.0);
    }

    #[test]
    fn null_against_itself_gives_alpha() {
        let null: Vec<f64> = (0..100).map(f64::from).collect();
        let alt: Vec<SingleOutcome> =
            null.iter().map(|&s| SingleOutcome { stat: s, b_hat: None, flagged: None }).collect();
        let truth = vec![(1, vec![]); 100];
        let s = summarize_power(&null, &alt, &truth, 3, 50, 0.05).unwrap();
        assert!((s.power - 0.05).abs() <= 0.01);
        assert_eq!(s.location_accuracy, None);
    }

    #[test]
    fn histogram_and_accuracy() {
        assert_eq!(nhat_histogram(&[0, 3, 3, 7, 5, 1]), [1, 1, 0, 2, 0, 2]);
        let est = vec![vec![30, 60], vec![31], vec![]];
        assert_eq!(eta_accuracy(&est, &[30, 60], 100), vec![2.0 / 3.0, 1.0 / 3.0]);
    }
}
