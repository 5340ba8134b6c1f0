// SPDX-License-Identifier: MIT OR Apache-2.0

//! Regularized incomplete gamma function and chi-square quantiles.

use crate::error::{Error, Result};
use crate::math::{exp, ln, sqrt};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

fn ln_gamma(a: f64) -> f64 {
    libm::lgamma(a)
}

// Power series for P(a, x), good for x < a + 1.
fn p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * exp(a * ln(x) - x - ln_gamma(a))
}

// Continued fraction for Q(a, x) (modified Lentz), good for x >= a + 1.
fn q_fraction(a: f64, x: f64) -> f64 {
    let tiny = f64::MIN_POSITIVE / EPS;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    exp(a * ln(x) - x - ln_gamma(a)) * h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    check_args(a, x)?;
    Ok(if x == 0.0 {
        0.0
    } else if x < a + 1.0 {
        p_series(a, x)
    } else {
        1.0 - q_fraction(a, x)
    })
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> Result<f64> {
    check_args(a, x)?;
    Ok(if x == 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - p_series(a, x)
    } else {
        q_fraction(a, x)
    })
}

fn check_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(alloc::format!("gamma shape must be positive, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(alloc::format!("gamma argument must be non-negative, got {x}")));
    }
    Ok(())
}

/// The `p`-quantile of the chi-square distribution with `dof` degrees of freedom.
pub fn chi2_quantile(p: f64, dof: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(alloc::format!("probability must lie in (0, 1), got {p}")));
    }
    if !(dof > 0.0 && dof.is_finite()) {
        return Err(Error::Domain(alloc::format!("degrees of freedom must be positive, got {dof}")));
    }
    let a = 0.5 * dof;
    // Increasing in y; evaluated through the tail that is not close to 1.
    let g = |y: f64| -> f64 {
        if p < 0.5 {
            gamma_p(a, y).unwrap_or(f64::NAN) - p
        } else {
            (1.0 - p) - gamma_q(a, y).unwrap_or(f64::NAN)
        }
    };
    let density = |y: f64| exp((a - 1.0) * ln(y) - y - ln_gamma(a));

    // Wilson-Hilferty starting point, in units of y = x / 2.
    let z = normal_quantile(p);
    let c = 2.0 / (9.0 * dof);
    let base = 1.0 - c + z * sqrt(c);
    let wh = dof * base * base * base;
    let mut y = if wh > 0.0 { 0.5 * wh } else { 0.5 * dof * 0.01 };

    let mut lo = 0.0;
    let mut hi = y.max(1.0);
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let gy = g(y);
        if gy == 0.0 {
            break;
        }
        if gy < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let mut next = y - gy / density(y);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= 1e-15 * y {
            y = next;
            break;
        }
        y = next;
    }
    Ok(2.0 * y)
}

// Acklam's rational approximation; only used as a starting point.
fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    let tail = |q: f64| {
        let r = sqrt(-2.0 * ln(q));
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    if p < 0.02425 {
        tail(p)
    } else if p > 1.0 - 0.02425 {
        -tail(1.0 - p)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values from 40-digit arithmetic.
    const CHI2: [(f64, f64, f64); 9] = [
        (1.0, 0.975, 5.023886187314887418),
        (2.0, 0.5, 1.386294361119890619),
        (5.0, 0.95, 11.07049769351635188),
        (10.0, 0.025, 3.246972780236841125),
        (100.0, 0.975, 129.5611971858365863),
        (200.0, 0.975, 241.0578955063109140),
        (50.0, 0.999, 86.66081519040313520),
        (1000.0, 0.975, 1089.530912774913482),
        (3.0, 1e-6, 0.0002418104872012428197),
    ];

    #[test]
    fn chi2_quantiles_match_reference() {
        for (dof, p, want) in CHI2 {
            let got = chi2_quantile(p, dof).unwrap();
            assert!(rel(got, want) < 1e-8, "dof={dof} p={p}: {got} vs {want}");
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for dof in [1.0, 4.0, 37.0, 400.0] {
            for p in [0.01, 0.3, 0.5, 0.9, 0.9999] {
                let x = chi2_quantile(p, dof).unwrap();
                assert!((gamma_p(0.5 * dof, 0.5 * x).unwrap() - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exponential_case() {
        // P(1, x) = 1 - exp(-x).
        for x in [0.1, 1.0, 3.0, 20.0] {
            assert!((gamma_p(1.0, x).unwrap() - (1.0 - exp(-x))).abs() < 1e-14);
            assert!(rel(gamma_q(1.0, x).unwrap(), exp(-x)) < 1e-12);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(chi2_quantile(0.0, 3.0).is_err());
        assert!(chi2_quantile(1.0, 3.0).is_err());
        assert!(chi2_quantile(0.5, 0.0).is_err());
        assert!(gamma_p(-1.0, 1.0).is_err());
        assert!(gamma_p(1.0, -1.0).is_err());
    }
}
