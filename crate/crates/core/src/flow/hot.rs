//! The hot function `h(z) = (4π)^{-1/2} ∫_0^∞ exp(-(z-w)²/4) dw`, i.e. the
//! heat flow of the unit step at time 1, and its inverse `H`.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// `ln (4π)^{-1/2}`.
fn log_norm() -> f64 {
    -0.5 * (4.0 * PI).ln()
}

/// `h(z) = ½ erfc(-z/2)`.
pub fn hot_h(z: f64) -> f64 {
    0.5 * libm::erfc(-0.5 * z)
}

/// `h'(z) = (4π)^{-1/2} e^{-z²/4}`.
pub fn hot_h_prime(z: f64) -> f64 {
    (log_norm() - 0.25 * z * z).exp()
}

/// `h''(z) = -(z/2) h'(z)`.
pub fn hot_h_second(z: f64) -> f64 {
    -0.5 * z * hot_h_prime(z)
}

/// `ln h(z)`, accurate far into the left tail where `h` underflows.
pub fn hot_log_h(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if z > 0.0 {
        return (-0.5 * libm::erfc(0.5 * z)).ln_1p();
    }
    if z > -52.0 {
        return hot_h(z).ln();
    }
    // erfc(x) = e^{-x²}/(x√π) · (1 - 1/(2x²) + 3/(4x⁴) - 15/(8x⁶) + 105/(16x⁸) - …)
    let x = -0.5 * z;
    let y = 1.0 / (2.0 * x * x);
    let series = 1.0 - y * (1.0 - 3.0 * y * (1.0 - 5.0 * y * (1.0 - 7.0 * y * (1.0 - 9.0 * y))));
    -(2.0f64).ln() - x * x - (x * PI.sqrt()).ln() + series.ln()
}

/// `ln h'(z)`.
pub fn hot_log_h_prime(z: f64) -> f64 {
    log_norm() - 0.25 * z * z
}

/// Inverse `H` of the hot function on `(0, 1)`; `H(0) = -∞`, `H(1) = +∞`.
pub fn hot_inverse(y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain {
            what: "y",
            value: y,
            domain: "[0, 1]".into(),
        });
    }
    if y == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if y == 1.0 {
        return Ok(f64::INFINITY);
    }
    if y > 0.5 {
        // 1 - y is exact here.
        return Ok(-hot_inverse_lower(1.0 - y));
    }
    Ok(hot_inverse_lower(y))
}

/// Solves `ln h(z) = ln y` for `y ∈ (0, ½]` by safeguarded Newton.
fn hot_inverse_lower(y: f64) -> f64 {
    let target = y.ln();
    let mut lo = -2.0 * (-target).sqrt() - 2.0;
    let mut hi = 0.0;
    let mut z = -2.0 * (-target - 0.5 * (-target).max(1.0).ln()).max(0.0).sqrt();
    if !(z > lo && z < hi) {
        z = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let g = hot_log_h(z) - target;
        if g == 0.0 {
            return z;
        }
        if g > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        // d/dz ln h = h'/h
        let slope = (hot_log_h_prime(z) - hot_log_h(z)).exp();
        let mut next = z - g / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - z).abs() <= 1e-15 * (1.0 + z.abs()) {
            return next;
        }
        z = next;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_origin() {
        assert_eq!(hot_h(0.0), 0.5);
        assert!((hot_h_prime(0.0) - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-16);
        assert_eq!(hot_h_second(0.0), 0.0);
    }

    #[test]
    fn symmetry() {
        for &z in &[0.3, 1.0, 4.5, 9.0] {
            assert!((hot_h(z) + hot_h(-z) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for &z in &[-3.0, -0.7, 0.0, 1.2, 5.0] {
            let d = 1e-5;
            let fd = (hot_h(z + d) - hot_h(z - d)) / (2.0 * d);
            assert!((fd - hot_h_prime(z)).abs() < 1e-10, "z={z}");
            let fd2 = (hot_h_prime(z + d) - hot_h_prime(z - d)) / (2.0 * d);
            assert!((fd2 - hot_h_second(z)).abs() < 1e-10, "z={z}");
        }
    }

    #[test]
    fn log_h_is_continuous_across_the_tail_switch() {
        let a = hot_log_h(-52.0 + 1e-9);
        let b = hot_log_h(-52.0 - 1e-9);
        assert!((a - b).abs() < 1e-9 * a.abs());
        assert!(hot_log_h(-200.0).is_finite());
    }

    #[test]
    fn tail_ratio_tends_to_one() {
        // h'(z) / (-z h(z) / 2) -> 1 as z -> -inf
        let ratio = |z: f64| (hot_log_h_prime(z) - hot_log_h(z)).exp() / (-0.5 * z);
        assert!((ratio(-40.0) - 1.0).abs() < 2e-3);
        assert!((ratio(-400.0) - 1.0).abs() < 2e-5);
    }

    #[test]
    fn inverse_round_trip() {
        for i in -300..=300 {
            let z = i as f64 * 0.1;
            let y = hot_h(z);
            if y <= 0.0 || y >= 1.0 {
                continue;
            }
            let back = hot_inverse(y).unwrap();
            // conditioning: an ulp of y moves z by eps / h'(z)
            let tol = 1e-9 * (1.0 + z.abs()) + f64::EPSILON / hot_h_prime(z);
            assert!((back - z).abs() < tol, "z={z} back={back}");
        }
        assert_eq!(hot_inverse(0.0).unwrap(), f64::NEG_INFINITY);
        assert!(hot_inverse(1.5).is_err());
    }
}
