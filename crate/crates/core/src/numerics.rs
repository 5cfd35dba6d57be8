//! Small numerical helpers shared by the modules: midpoint concavity sweeps,
//! root bracketing and serialization of non-finite floats.

use crate::error::{Error, Result};
use serde::{Serialize, Serializer};

/// Location of a detected violation (or of the worst-case sample).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// A single sample point.
    Point { at: Vec<f64> },
    /// Two points `x`, `y` and the weight `λ` of the tested combination
    /// `(1-λ)x + λy`.
    Pair { x: Vec<f64>, y: Vec<f64>, lambda: f64 },
    /// Grid triple: flat node indices `[x, m, y]` with coordinates, where
    /// `m = (1-λ)x + λy`.
    Nodes {
        nodes: [usize; 3],
        x: Vec<f64>,
        m: Vec<f64>,
        y: Vec<f64>,
        lambda: f64,
    },
}

impl Witness {
    pub fn point(z: f64) -> Self {
        Witness::Point { at: vec![z] }
    }

    pub fn pair(x: f64, y: f64, lambda: f64) -> Self {
        Witness::Pair {
            x: vec![x],
            y: vec![y],
            lambda,
        }
    }
}

/// Serializes non-finite floats as the strings `"inf"`, `"-inf"`, `"nan"`.
pub fn ser_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// Worst midpoint-concavity violation of uniformly spaced samples.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct MidpointSweep {
    /// Largest scaled violation `(avg - g_mid) / max(1, |g|)`, clamped at 0.
    pub worst: f64,
    /// Node indices `(left, right)` of the worst pair.
    pub pair: Option<(usize, usize)>,
}

/// Tests `g_i >= (g_{i-k} + g_{i+k})/2` for every admissible `i, k`.
///
/// `-∞` samples follow the extended-real convention: an infinite endpoint
/// makes the inequality trivial, an infinite midpoint between finite
/// endpoints is an infinite violation. NaN samples are rejected.
pub(crate) fn midpoint_concavity(g: &[f64]) -> Result<MidpointSweep> {
    if let Some(i) = g.iter().position(|v| v.is_nan()) {
        return Err(Error::Domain {
            what: "sample index",
            value: i as f64,
            domain: "finite samples (got NaN)".into(),
        });
    }
    let n = g.len();
    let mut worst = 0.0f64;
    let mut pair = None;
    for i in 1..n.saturating_sub(1) {
        let kmax = i.min(n - 1 - i);
        for k in 1..=kmax {
            let (l, r, m) = (g[i - k], g[i + k], g[i]);
            if l == f64::NEG_INFINITY || r == f64::NEG_INFINITY {
                continue;
            }
            let avg = 0.5 * l + 0.5 * r;
            if m >= avg {
                continue;
            }
            let v = if m == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                (avg - m) / 1f64.max(l.abs()).max(r.abs()).max(m.abs())
            };
            if v > worst {
                worst = v;
                pair = Some((i - k, i + k));
            }
        }
    }
    Ok(MidpointSweep { worst, pair })
}

/// Same as [`midpoint_concavity`] applied to `-g`.
pub(crate) fn midpoint_convexity(g: &[f64]) -> Result<MidpointSweep> {
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    midpoint_concavity(&neg)
}

/// Bisection for an increasing function with `f(lo) < 0 <= f(hi)`.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for the maximizer of a unimodal function on `[a, b]`.
pub(crate) fn golden_max(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        c
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concave_samples_pass() {
        let g: Vec<f64> = (0..50).map(|i| -((i as f64) * 0.1 - 2.0).powi(2)).collect();
        let s = midpoint_concavity(&g).unwrap();
        assert_eq!(s.worst, 0.0);
        assert!(s.pair.is_none());
    }

    #[test]
    fn convex_samples_fail_with_widest_pair() {
        let g: Vec<f64> = (0..11).map(|i| ((i as f64) * 0.1).powi(2)).collect();
        let s = midpoint_concavity(&g).unwrap();
        // worst absolute gap is k² h² at the widest pair around the middle
        assert_eq!(s.pair, Some((0, 10)));
        assert!((s.worst - 0.25).abs() < 1e-12);
        assert_eq!(midpoint_convexity(&g).unwrap().worst, 0.0);
    }

    #[test]
    fn infinite_midpoint_is_infinite_violation() {
        let g = [0.0, f64::NEG_INFINITY, 0.0];
        assert_eq!(midpoint_concavity(&g).unwrap().worst, f64::INFINITY);
        let g = [f64::NEG_INFINITY, 0.0, 1.0];
        assert_eq!(midpoint_concavity(&g).unwrap().worst, 0.0);
        assert!(midpoint_concavity(&[0.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn root_and_max_helpers() {
        let r = bisect(0.0, 2.0, |x| x * x - 2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        let m = golden_max(-1.0, 3.0, |x| -(x - 1.25).powi(2));
        assert!((m - 1.25).abs() < 1e-7);
    }
}
