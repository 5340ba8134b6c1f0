// SPDX-License-Identifier: MIT OR Apache-2.0

// Brute-force checks of the scan statistics: every quantity is recomputed
// from raw sums over all (b, m) and compared with the library.

use panelseg_core::cusum::candidate_splits;
use panelseg_core::reference::{
    eh_linear_scale, eh_scan_penalty, eh_statistics, jirak_statistic, sbs_statistic, ScanPenalty,
};
use panelseg_core::{
    cusum_series, dc_scan, double_cusum, ordered_abs_cusums, projection_vector, standardize, DcMode,
    PanelData, ScaledPanel,
};
use proptest::prelude::*;

fn direct_cusum(x: &[f64], s: usize, b: usize, e: usize) -> f64 {
    let len = (e - s) as f64;
    let left = (b - s) as f64;
    let head: f64 = x[s..b].iter().sum();
    let tail: f64 = x[b..e].iter().sum();
    ((len - left) / (len * left)).sqrt() * head - (left / (len * (len - left))).sqrt() * tail
}

fn direct_dc(abs_sorted: &[f64], m: usize, mode: DcMode) -> f64 {
    let n = abs_sorted.len();
    let c = (m * (2 * n - m)) as f64 / (2 * n) as f64;
    let contrast = abs_sorted[..m].iter().sum::<f64>() / m as f64
        - abs_sorted[m..].iter().sum::<f64>() / (2 * n - m) as f64;
    match mode {
        DcMode::Exponent { phi } => c.powf(phi) * contrast,
        DcMode::Combined { gamma } => gamma * contrast + c.sqrt() * contrast,
    }
}

fn abs_sorted_at(rows: &[Vec<f64>], s: usize, b: usize, e: usize) -> Vec<f64> {
    let mut v: Vec<f64> = rows.iter().map(|r| direct_cusum(r, s, b, e).abs()).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

fn panel_strategy(max_n: usize, min_t: usize, max_t: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_n, min_t..=max_t).prop_flat_map(|(n, t)| {
        prop::collection::vec(prop::collection::vec(-3.0f64..3.0, t), n)
    })
}

fn mode_strategy() -> impl Strategy<Value = DcMode> {
    prop_oneof![
        (0.0f64..=1.0).prop_map(|phi| DcMode::Exponent { phi }),
        Just(DcMode::Exponent { phi: 0.0 }),
        Just(DcMode::Exponent { phi: 0.5 }),
        (0.1f64..5.0).prop_map(|gamma| DcMode::Combined { gamma }),
    ]
}

fn unit(rows: &[Vec<f64>]) -> ScaledPanel {
    ScaledPanel::unit(PanelData::from_rows(rows).unwrap())
}

proptest! {
    #[test]
    fn dc_scan_matches_exhaustive_loop(rows in panel_strategy(6, 8, 16), mode in mode_strategy(), trim in 0usize..3) {
        let t = rows[0].len();
        prop_assume!(t >= 2 * trim + 3);
        let got = dc_scan(&unit(&rows), 0, t, mode, trim).unwrap();
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for b in candidate_splits(0, t, trim) {
            let sorted = abs_sorted_at(&rows, 0, b, t);
            for m in 1..=rows.len() {
                let d = direct_dc(&sorted, m, mode);
                if d > best.0 + 1e-12 {
                    best = (d, b, m);
                }
            }
        }
        prop_assert!((got.stat - best.0).abs() < 1e-10, "{} vs {}", got.stat, best.0);
        // The maximiser may differ only when two (b, m) pairs tie numerically.
        if (got.split, got.m_hat) != (best.1, best.2) {
            let sorted = abs_sorted_at(&rows, 0, got.split, t);
            prop_assert!((direct_dc(&sorted, got.m_hat, mode) - best.0).abs() < 1e-10);
        }
    }

    #[test]
    fn dc_scan_subwindow(rows in panel_strategy(4, 14, 20), s in 0usize..4, mode in mode_strategy()) {
        let t = rows[0].len();
        let e = t - 1;
        let got = dc_scan(&unit(&rows), s, e, mode, 1).unwrap();
        let best = candidate_splits(s, e, 1)
            .flat_map(|b| (1..=rows.len()).map(move |m| (b, m)))
            .map(|(b, m)| direct_dc(&abs_sorted_at(&rows, s, b, e), m, mode))
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((got.stat - best).abs() < 1e-10);
        prop_assert!(candidate_splits(s, e, 1).contains(&got.split));
    }

    #[test]
    fn double_cusum_matches_formula(rows in panel_strategy(8, 4, 16), mode in mode_strategy()) {
        let t = rows[0].len();
        for b in 1..t {
            let sorted = abs_sorted_at(&rows, 0, b, t);
            for m in 1..=rows.len() {
                let got = double_cusum(&sorted, m, mode).unwrap();
                prop_assert!((got - direct_dc(&sorted, m, mode)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_reproduces_double_cusum(
        rows in panel_strategy(6, 6, 16),
        scales in prop::collection::vec(0.2f64..3.0, 6),
        phi in 0.0f64..=1.0,
        frac in 0.0f64..1.0,
    ) {
        let n = rows.len();
        let t = rows[0].len();
        let raw = PanelData::from_rows(&rows).unwrap();
        let scaled = standardize(&raw, &scales[..n]).unwrap();
        let mode = DcMode::Exponent { phi };
        let b = 1 + ((t - 2) as f64 * frac) as usize;
        let ordered = ordered_abs_cusums(&scaled, 0, b, t).unwrap();
        for m in 1..=n {
            let p = projection_vector(&ordered, m, &scales[..n], mode).unwrap();
            let y: Vec<f64> = (0..t).map(|k| (0..n).map(|j| p[j] * rows[j][k]).sum()).collect();
            let via_projection = cusum_series(&y).unwrap()[b - 1];
            let want = double_cusum(&ordered.sorted_abs, m, mode).unwrap();
            prop_assert!((via_projection - want).abs() < 1e-8, "{via_projection} vs {want}");
        }
    }

    #[test]
    fn sbs_matches_brute_force(rows in panel_strategy(2, 8, 8), pi in 0.0f64..2.0) {
        let (stat, b_hat) = sbs_statistic(&unit(&rows), 0, 8, pi, 0).unwrap();
        let per_b = |b: usize| -> f64 {
            rows.iter().map(|r| direct_cusum(r, 0, b, 8).abs()).filter(|&x| x > pi).sum()
        };
        let want = candidate_splits(0, 8, 0).map(per_b).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((stat - want).abs() < 1e-10);
        prop_assert!((per_b(b_hat) - want).abs() < 1e-10);
    }

    #[test]
    fn sbs_is_non_increasing_in_threshold(rows in panel_strategy(5, 10, 20), a in 0.0f64..2.0, d in 0.0f64..2.0) {
        let t = rows[0].len();
        let p = unit(&rows);
        let low = sbs_statistic(&p, 0, t, a, 1).unwrap().0;
        let high = sbs_statistic(&p, 0, t, a + d, 1).unwrap().0;
        prop_assert!(high <= low + 1e-12);
    }

    #[test]
    fn jirak_matches_brute_force(rows in panel_strategy(3, 10, 10)) {
        let (stat, _) = jirak_statistic(&unit(&rows), 0).unwrap();
        let want = candidate_splits(0, 10, 0)
            .flat_map(|b| rows.iter().map(move |r| ((b * (10 - b)) as f64 / 10.0).sqrt() * direct_cusum(r, 0, b, 10).abs()))
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((stat - want).abs() < 1e-10);
        let max_abs = (1..10)
            .flat_map(|b| rows.iter().map(move |r| direct_cusum(r, 0, b, 10).abs()))
            .fold(0.0, f64::max);
        prop_assert!(stat <= 10f64.sqrt() / 2.0 * max_abs + 1e-12);
    }

    #[test]
    fn single_series_jirak_collapse(row in prop::collection::vec(-3.0f64..3.0, 12)) {
        let (stat, b) = jirak_statistic(&unit(&[row.clone()]), 0).unwrap();
        let w = |b: usize| ((b * (12 - b)) as f64 / 12.0).sqrt() * direct_cusum(&row, 0, b, 12).abs();
        prop_assert!((stat - w(b)).abs() < 1e-12);
    }

    #[test]
    fn eh_matches_brute_force(rows in panel_strategy(2, 8, 8), alpha in 0.01f64..0.5) {
        let n = rows.len();
        let eh = eh_statistics(&unit(&rows), alpha, 0, ScanPenalty::PerCardinality).unwrap();
        let h = eh_linear_scale(n, alpha).unwrap();
        let mut linear = f64::NEG_INFINITY;
        let mut scan = f64::NEG_INFINITY;
        for b in candidate_splits(0, 8, 0) {
            let sq: Vec<f64> = abs_sorted_at(&rows, 0, b, 8).iter().map(|x| x * x - 1.0).collect();
            linear = linear.max(sq.iter().sum::<f64>() / (h * (2.0 * n as f64).sqrt()));
            for m in 1..=n {
                let tm = eh_scan_penalty(m, n, 8, alpha, ScanPenalty::PerCardinality).unwrap();
                scan = scan.max(sq[..m].iter().sum::<f64>() / (tm * (2.0 * m as f64).sqrt()));
            }
        }
        prop_assert!((eh.linear - linear).abs() < 1e-10);
        prop_assert!((eh.scan - scan).abs() < 1e-10);
        prop_assert_eq!(eh.reject, eh.linear > 1.0 || eh.scan > 1.0);
    }

    #[test]
    fn reordering_keeps_squared_sum(rows in panel_strategy(8, 6, 12)) {
        // The scan numerator at m = n is the linear numerator.
        let t = rows[0].len();
        for b in 1..t {
            let sorted: f64 = abs_sorted_at(&rows, 0, b, t).iter().map(|x| x * x - 1.0).sum();
            let plain: f64 = rows.iter().map(|r| direct_cusum(r, 0, b, t).powi(2) - 1.0).sum();
            prop_assert!((sorted - plain).abs() < 1e-10);
        }
    }
}
