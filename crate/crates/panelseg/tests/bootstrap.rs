// SPDX-License-Identifier: MIT OR Apache-2.0

use panelseg::bootstrap::{
    decompose_gdfm, default_bandwidth, estimate_factor_number, substream, BootstrapModel, LocalBootstrap,
    ThresholdTable,
};
use panelseg::simgen::{gen_noise, NoiseModel, NoiseSpec};
use panelseg_core::{DcMode, WindowRule};
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

fn normals(len: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = substream(seed, stream);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

// Each row rescaled to unit sample variance around its mean.
fn standardize_rows(values: &mut [f64], n_times: usize) {
    for row in values.chunks_exact_mut(n_times) {
        let mean = row.iter().sum::<f64>() / n_times as f64;
        let sd = (row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n_times as f64).sqrt();
        row.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    }
}

#[test]
fn white_noise_has_no_common_shock() {
    let (n, t) = (100, 100);
    let zero = (0..50).filter(|&s| estimate_factor_number(&normals(n * t, s, 0), n, t).unwrap() == 0).count();
    assert!(zero > 25, "q = 0 in {zero}/50 runs");
}

#[test]
fn strong_factor_is_found() {
    let (n, t) = (100, 100);
    let spec = NoiseSpec::new(NoiseModel::N2 { rho_h: 0.9 }, n, t);
    let found = (0..50)
        .filter(|&s| {
            let mut values = gen_noise(&spec, &mut substream(s, 0)).unwrap().into_values();
            standardize_rows(&mut values, t);
            estimate_factor_number(&values, n, t).unwrap() >= 1
        })
        .count();
    assert!(found > 25, "q >= 1 in {found}/50 runs");
}

#[test]
fn rank_one_factor_is_mostly_common() {
    let (n, t) = (20, 1024);
    let h = normals(t, 3, 0);
    let loadings = normals(n, 3, 1);
    let values: Vec<f64> = loadings.iter().flat_map(|l| h.iter().map(move |x| l * x)).collect();
    let d = decompose_gdfm(&values, n, t, 1, default_bandwidth(t)).unwrap();
    let energy = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let share = energy(&d.idio) / energy(&values);
    assert!(share < 0.2, "idiosyncratic share {share}");
    for ((c, i), e) in d.common.iter().zip(&d.idio).zip(&values) {
        assert!((c + i - e).abs() < 1e-12);
    }
}

fn periodogram(x: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(x.len()).process(&mut buf);
    buf.iter().map(|c| c.norm_sqr() / x.len() as f64).collect()
}

#[test]
fn local_bootstrap_tracks_smoothed_periodogram() {
    let t = 256;
    let e = normals(t, 11, 0);
    let mut x = vec![0.0; t];
    for s in 1..t {
        x[s] = 0.5 * x[s - 1] + e[s];
    }
    let h = 12;
    let boot = LocalBootstrap::new(&x, 1, t, h).unwrap();
    let top = (t - 1) / 2;
    let mut mean = vec![0.0; top + 1];
    let reps = 200;
    for l in 0..reps {
        let p = periodogram(&boot.resample(&mut substream(5, l)));
        for j in 1..=top {
            mean[j] += p[j] / reps as f64;
        }
    }
    let original = periodogram(&x);
    let mut worst = 0.0f64;
    for j in h + 1..=top - h {
        let smoothed = original[j - h..=j + h].iter().sum::<f64>() / (2 * h + 1) as f64;
        worst = worst.max((mean[j] / smoothed - 1.0).abs());
    }
    assert!(worst < 0.3, "sup relative deviation {worst}");
}

#[test]
fn quantiles_are_monotone_and_thread_independent() {
    let (n, t) = (12, 64);
    let spec = NoiseSpec::new(NoiseModel::N1 { rho: 0.2 }, n, t);
    let mut values = gen_noise(&spec, &mut substream(4, 0)).unwrap().into_values();
    standardize_rows(&mut values, t);
    let modes = [DcMode::Exponent { phi: 0.0 }, DcMode::combined_default(n)];
    let stats_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let model = BootstrapModel::fit(&values, n, t, 9).unwrap();
            let mut table = ThresholdTable::new(model, &modes, 3, 40, WindowRule::Pooled).unwrap();
            (table.stats(t).unwrap().to_vec(), table.stats(30).unwrap().to_vec())
        })
    };
    let single = stats_with(1);
    assert_eq!(single, stats_with(3));

    let model = BootstrapModel::fit(&values, n, t, 9).unwrap();
    let mut table = ThresholdTable::new(model, &modes, 3, 40, WindowRule::Max).unwrap();
    for k in 0..modes.len() {
        let mut last = f64::INFINITY;
        for alpha in [0.01, 0.05, 0.1, 0.25, 0.5] {
            let q = table.quantile(k, 40, alpha).unwrap();
            assert!(q <= last);
            last = q;
        }
    }
    // The full-length window has a single position, so both rules agree.
    assert_eq!(table.stats(t).unwrap().to_vec(), single.0);
}

mod properties {
    use super::*;
    use panelseg::io::{read_panel_from, write_panel_to};
    use panelseg::simgen::rand_index;
    use panelseg_core::PanelData;
    use proptest::prelude::*;
    use std::path::Path;

    fn panel() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
        (2usize..6, 16usize..40)
            .prop_flat_map(|(n, t)| (Just(n), Just(t), prop::collection::vec(-5.0f64..5.0, n * t)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn decomposition_adds_up((n, t, values) in panel(), q in 0usize..3) {
            let d = decompose_gdfm(&values, n, t, q.min(n), default_bandwidth(t)).unwrap();
            for ((c, i), e) in d.common.iter().zip(&d.idio).zip(&values) {
                prop_assert!((c + i - e).abs() < 1e-12);
            }
            let resampled = d.resample_common(&mut substream(1, 0));
            prop_assert!(resampled.iter().all(|v| v.is_finite()));
        }

        #[test]
        fn local_bootstrap_keeps_the_mean((n, t, values) in panel(), h in 1usize..4, seed in 0u64..100) {
            let out = LocalBootstrap::new(&values, n, t, h).unwrap().resample(&mut substream(seed, 0));
            prop_assert_eq!(out.len(), n * t);
            for (a, b) in values.chunks_exact(t).zip(out.chunks_exact(t)) {
                let (ma, mb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
                prop_assert!((ma - mb).abs() < 1e-9);
            }
        }

        #[test]
        fn panel_csv_round_trips((n, t, values) in panel()) {
            let p = PanelData::new(n, t, values).unwrap();
            let mut buf = Vec::new();
            write_panel_to(&mut buf, &p).unwrap();
            prop_assert_eq!(read_panel_from(buf.as_slice(), Path::new("mem")).unwrap(), p);
        }

        #[test]
        fn rand_index_is_a_rate(
            truth in prop::collection::btree_set(0usize..20, 0..20),
            estimate in prop::collection::btree_set(0usize..20, 0..20),
        ) {
            let (a, b): (Vec<usize>, Vec<usize>) = (truth.into_iter().collect(), estimate.into_iter().collect());
            let r = rand_index(&a, &b, 20);
            prop_assert!((0.0..=1.0).contains(&r));
            prop_assert!((r - rand_index(&b, &a, 20)).abs() < 1e-15);
            prop_assert_eq!(rand_index(&a, &a, 20), 1.0);
        }
    }
}
