// SPDX-License-Identifier: MIT OR Apache-2.0

use nalgebra::DMatrix;
use panelseg::bootstrap::substream;
use panelseg::simgen::{gen_noise, gen_signal, ChangeSpec, NoiseModel, NoiseSpec, SignalSpec};
use panelseg_core::PanelData;

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn top_eigen_share(panel: &PanelData) -> f64 {
    let (n, t) = (panel.n_series(), panel.n_times());
    let mut x = DMatrix::from_row_slice(n, t, panel.values());
    for mut row in x.row_iter_mut() {
        let mean = row.mean();
        row.add_scalar_mut(-mean);
    }
    let cov = &x * x.transpose() / t as f64;
    let eig = cov.symmetric_eigenvalues();
    eig.max() / eig.sum()
}

#[test]
fn n1_correlation_decays_with_distance() {
    let spec = NoiseSpec::new(NoiseModel::N1 { rho: 0.2 }, 60, 500);
    let (mut near, mut far) = (0.0, 0.0);
    for s in 0..50 {
        let p = gen_noise(&spec, &mut substream(s, 0)).unwrap();
        near += correlation(p.row(0), p.row(1)) / 50.0;
        far += correlation(p.row(0), p.row(49)) / 50.0;
    }
    assert!(near > far, "near {near} far {far}");
}

#[test]
fn n2_factor_dominates_the_spectrum() {
    let (n, t) = (60, 500);
    let n1 = NoiseSpec::new(NoiseModel::N1 { rho: 0.2 }, n, t);
    let n2 = NoiseSpec::new(NoiseModel::N2 { rho_h: 0.9 }, n, t);
    let wins = (0..50)
        .filter(|&s| {
            let a = top_eigen_share(&gen_noise(&n2, &mut substream(s, 0)).unwrap());
            let b = top_eigen_share(&gen_noise(&n1, &mut substream(s, 1)).unwrap());
            a > b
        })
        .count();
    assert!(wins > 25, "N2 share larger in {wins}/50 runs");
}

#[test]
fn generators_are_deterministic() {
    let spec = NoiseSpec::new(NoiseModel::N2 { rho_h: 0.5 }, 7, 40);
    let a = gen_noise(&spec, &mut substream(3, 0)).unwrap();
    let b = gen_noise(&spec, &mut substream(3, 0)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, gen_noise(&spec, &mut substream(4, 0)).unwrap());

    let signal = SignalSpec::new(vec![
        ChangeSpec { eta: 10, m: 3, delta: 1.0, pi: None },
        ChangeSpec { eta: 25, m: 7, delta: 0.5, pi: None },
    ]);
    let first = gen_signal(&signal, 7, 40, &mut substream(3, 1)).unwrap();
    assert_eq!(first, gen_signal(&signal, 7, 40, &mut substream(3, 1)).unwrap());
}

#[test]
fn signal_is_piecewise_constant_at_the_truth() {
    let (n, t) = (9, 50);
    let signal = SignalSpec::new(vec![
        ChangeSpec { eta: 15, m: 4, delta: 2.0, pi: None },
        ChangeSpec { eta: 35, m: 2, delta: 1.0, pi: Some(vec![0, 8]) },
    ]);
    let (mean, truth) = gen_signal(&signal, n, t, &mut substream(8, 0)).unwrap();
    assert_eq!(truth[1].pi, vec![0, 8]);
    for j in 0..n {
        let row = &mean[j * t..(j + 1) * t];
        let mut expected = 0.0;
        for (s, &v) in row.iter().enumerate() {
            for c in &truth {
                if s == c.eta {
                    if let Some(k) = c.pi.iter().position(|&p| p == j) {
                        expected += c.jumps[k];
                    }
                }
            }
            assert!((v - expected).abs() < 1e-12, "series {j} time {s}");
        }
    }
    for c in &truth {
        for d in &c.jumps {
            let spec = &signal.changes[truth.iter().position(|x| x.eta == c.eta).unwrap()];
            assert!(d.abs() >= 0.75 * spec.delta && d.abs() <= 1.25 * spec.delta);
        }
    }
}
