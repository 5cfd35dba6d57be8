//! Admissible functions `F: [0, a) → [-∞, ∞)` and the α-means.
//!
//! `F` is continuous and strictly increasing, finite on `(0, a)`, with
//! `F(0) = -∞` by convention. Its inverse `f_F` is defined on the open
//! interval `J_F = F((0, a))` and extended by `f_F(-∞) = 0`. A function
//! `u >= 0` is F-concave when `F(u)` is concave on `{u > 0}`.
//!
//! Families:
//!
//! | family | `F(r)` | `a` |
//! |---|---|---|
//! | `Φ_α` | `(r^α - 1)/α`, `log r` for `α = 0` | `∞` |
//! | `L_α` | `-Φ_α(-log r)` | `1` |
//! | `H_a` | `H(r/a)`, `H` the inverse hot function | `a` (`H_∞ = Φ_0`) |
//! | tabulated | monotone cubic through `(r_i, F_i)` | `r_N` |

use crate::error::{invalid, Error, Result};
use crate::numerics::bisect;
use crate::flow::hot::{hot_h, hot_inverse, hot_log_h, hot_log_h_prime};
use crate::sampling::{Window, DEFAULT_NODES};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

/// Relative margin below `a` (and below `sup J_F`) where evaluation is refused.
pub const EDGE_MARGIN: f64 = 1e-12;
/// Default windows start where `f_F` reaches `e^{LN_FLOOR}` (about 1e-250),
/// well above the subnormal range.
pub const LN_FLOOR: f64 = -575.0;

/// The family an admissible function belongs to.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `Φ_α`, power concavity.
    Power { alpha: f64 },
    /// `L_α`, power-log concavity on `[0, 1)`.
    PowerLog { alpha: f64 },
    /// `H_a`, hot concavity; `a = ∞` coincides with `Φ_0`.
    Hot { a: f64 },
    /// Monotone cubic interpolant of user data.
    Tabulated(Arc<Table>),
}

/// Tabulated `F` values with Fritsch–Carlson slopes.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub label: String,
    r: Vec<f64>,
    f: Vec<f64>,
    slope: Vec<f64>,
}

/// An admissible function together with its interval data.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleFunction {
    family: Family,
    a: f64,
    j_lo: f64,
    j_hi: f64,
    limit_neg_inf: bool,
}

impl AdmissibleFunction {
    /// `Φ_α`.
    pub fn power(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return invalid(format!("power exponent must be finite, got {alpha}"));
        }
        let (j_lo, j_hi) = if alpha > 0.0 {
            (-1.0 / alpha, f64::INFINITY)
        } else if alpha < 0.0 {
            (f64::NEG_INFINITY, -1.0 / alpha)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        Ok(AdmissibleFunction {
            family: Family::Power { alpha },
            a: f64::INFINITY,
            j_lo,
            j_hi,
            limit_neg_inf: alpha <= 0.0,
        })
    }

    /// `L_α` on `[0, 1)`.
    pub fn power_log(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return invalid(format!("power-log exponent must be finite, got {alpha}"));
        }
        let (j_lo, j_hi) = if alpha > 0.0 {
            (f64::NEG_INFINITY, 1.0 / alpha)
        } else if alpha < 0.0 {
            (1.0 / alpha, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        Ok(AdmissibleFunction {
            family: Family::PowerLog { alpha },
            a: 1.0,
            j_lo,
            j_hi,
            limit_neg_inf: alpha >= 0.0,
        })
    }

    /// `H_a` for `a > 0`; `a = ∞` gives the same function as `Φ_0`.
    pub fn hot(a: f64) -> Result<Self> {
        if a.is_nan() || a <= 0.0 {
            return invalid(format!("hot parameter must be positive, got {a}"));
        }
        Ok(AdmissibleFunction {
            family: Family::Hot { a },
            a,
            j_lo: f64::NEG_INFINITY,
            j_hi: f64::INFINITY,
            limit_neg_inf: true,
        })
    }

    /// Monotone cubic interpolation of `(r_i, F_i)`, `0 < r_0 < … < r_N`,
    /// `F` strictly increasing. The domain is `[0, r_N)`; values below
    /// `r_0` are not available. Whether `F(0+) = -∞` must be declared.
    pub fn tabulated(
        label: impl Into<String>,
        r: Vec<f64>,
        f: Vec<f64>,
        limit_neg_inf: bool,
    ) -> Result<Self> {
        if r.len() != f.len() || r.len() < 2 {
            return invalid("a table needs at least two (r, F) rows of equal length");
        }
        if r.iter().chain(&f).any(|v| !v.is_finite()) || r[0] <= 0.0 {
            return invalid("table entries must be finite with r > 0");
        }
        if r.windows(2).any(|w| w[1] <= w[0]) || f.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("table must be strictly increasing in both columns");
        }
        let slope = fritsch_carlson(&r, &f);
        let (a, j_lo, j_hi) = (*r.last().unwrap(), f[0], *f.last().unwrap());
        Ok(AdmissibleFunction {
            family: Family::Tabulated(Arc::new(Table {
                label: label.into(),
                r,
                f,
                slope,
            })),
            a,
            j_lo,
            j_hi,
            limit_neg_inf,
        })
    }

    /// Reads a two-column `r F(r)` text table. Lines starting with `#` are
    /// comments; `# limit_at_zero: true` declares `F(0+) = -∞` (default
    /// false).
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut limit = false;
        let (mut r, mut f) = (Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((k, v)) = comment.split_once(':') {
                    if k.trim() == "limit_at_zero" {
                        limit = v.trim().parse().map_err(|_| {
                            Error::Parse(format!("line {}: expected true or false", lineno + 1))
                        })?;
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {s:?}", lineno + 1)))
            };
            if cols.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1)));
            }
            r.push(parse(cols[0])?);
            f.push(parse(cols[1])?);
        }
        Self::tabulated(path.display().to_string(), r, f, limit)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Right end `a` of the domain `[0, a)`.
    pub fn a(&self) -> f64 {
        self.a
    }

    /// The open range `J_F = (j_lo, j_hi)`.
    pub fn j(&self) -> (f64, f64) {
        (self.j_lo, self.j_hi)
    }

    /// Whether `F(r) → -∞` as `r → 0+`.
    pub fn limit_at_zero_is_neg_inf(&self) -> bool {
        self.limit_neg_inf
    }

    /// Default sampling window inside `J_F`: the trimmed window of
    /// [`Window::trimmed`], with its lower end raised to where `f_F` reaches
    /// `e^{LN_FLOOR}` when it starts below that.
    pub fn default_window(&self) -> Result<Window> {
        let w = Window::trimmed(self.j_lo, self.j_hi, DEFAULT_NODES)?;
        if self.log_inverse(w.lo)? >= LN_FLOOR {
            return Ok(w);
        }
        let lo = bisect(w.lo, w.hi, |z| self.log_inverse_unchecked(z) - LN_FLOOR);
        Window::new(lo, w.hi, w.n)
    }

    /// `F(r)`; `F(0) = -∞`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        let limit = self.a - EDGE_MARGIN * self.a.max(1.0);
        if r.is_nan() || r < 0.0 || r >= limit {
            return Err(self.domain_r(r));
        }
        if r == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(match &self.family {
            Family::Power { alpha } => power_f(*alpha, r),
            Family::PowerLog { alpha } => {
                let s = -r.ln();
                if *alpha == 0.0 {
                    -s.ln()
                } else {
                    -(alpha * s.ln()).exp_m1() / alpha
                }
            }
            Family::Hot { a } if a.is_infinite() => r.ln(),
            Family::Hot { a } => hot_inverse(r / a)?,
            Family::Tabulated(t) => {
                if r < t.r[0] {
                    return Err(self.domain_r(r));
                }
                t.eval(r)
            }
        })
    }

    /// `F'(r)` for `r ∈ (0, a)`.
    pub fn derivative(&self, r: f64) -> Result<f64> {
        let z = self.eval(r)?;
        if r == 0.0 {
            return Err(self.domain_r(r));
        }
        Ok(match &self.family {
            Family::Power { alpha } => (alpha - 1.0) * r.ln(),
            Family::PowerLog { alpha } => (alpha - 1.0) * (-r.ln()).ln() - r.ln(),
            Family::Hot { a } if a.is_infinite() => -r.ln(),
            Family::Hot { a } => -(a.ln() + hot_log_h_prime(z)),
            Family::Tabulated(t) => return Ok(t.derivative(r)),
        }
        .exp())
    }

    /// `f_F(z)`; `f_F(-∞) = 0`.
    pub fn inverse(&self, z: f64) -> Result<f64> {
        if z == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        self.check_z(z)?;
        Ok(match &self.family {
            Family::Tabulated(t) => t.inverse(z),
            Family::Hot { a } if a.is_finite() => a * hot_h(z),
            _ => self.log_inverse_unchecked(z).exp(),
        })
    }

    /// `ln f_F(z)`, computed without forming `f_F` where it would underflow.
    pub fn log_inverse(&self, z: f64) -> Result<f64> {
        if z == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        self.check_z(z)?;
        Ok(self.log_inverse_unchecked(z))
    }

    /// `f_F'(z)`.
    pub fn inverse_d1(&self, z: f64) -> Result<f64> {
        Ok(self.log_inverse_d1(z)?.exp())
    }

    /// `ln f_F'(z)`.
    pub fn log_inverse_d1(&self, z: f64) -> Result<f64> {
        self.check_z(z)?;
        Ok(match &self.family {
            Family::Power { alpha } => power_log_fp(*alpha, z),
            Family::Hot { a } if a.is_infinite() => z,
            Family::Hot { a } => a.ln() + hot_log_h_prime(z),
            Family::PowerLog { alpha } => {
                let alpha = *alpha;
                if alpha == 0.0 {
                    -(-z).exp() - z
                } else {
                    let w = 1.0 - alpha * z;
                    -(w.ln() / alpha).exp() + (1.0 / alpha - 1.0) * w.ln()
                }
            }
            Family::Tabulated(t) => -t.derivative(t.inverse(z)).ln(),
        })
    }

    /// `f_F''(z)`.
    pub fn inverse_d2(&self, z: f64) -> Result<f64> {
        Ok(self.inverse_d1(z)? * self.log_fprime_derivative(z)?)
    }

    /// `(log f_F')'(z) = f_F''(z)/f_F'(z)`.
    pub fn log_fprime_derivative(&self, z: f64) -> Result<f64> {
        self.check_z(z)?;
        Ok(match &self.family {
            Family::Power { alpha } => (1.0 - alpha) / (1.0 + alpha * z),
            Family::Hot { a } if a.is_infinite() => 1.0,
            Family::Hot { .. } => -0.5 * z,
            Family::PowerLog { alpha } => {
                let alpha = *alpha;
                if alpha == 0.0 {
                    (-z).exp_m1()
                } else {
                    let w = 1.0 - alpha * z;
                    (alpha - 1.0) / w + ((1.0 / alpha - 1.0) * w.ln()).exp()
                }
            }
            Family::Tabulated(_) => {
                let h = 1e-4 * z.abs().max(1.0);
                let h = h.min(0.25 * (z - self.j_lo)).min(0.25 * (self.j_hi - z));
                (self.log_inverse_d1(z + h)? - self.log_inverse_d1(z - h)?) / (2.0 * h)
            }
        })
    }

    /// Short textual name, e.g. `phi:-1`, `lalpha:0.5`, `hot:inf`.
    pub fn label(&self) -> String {
        match &self.family {
            Family::Power { alpha } => format!("phi:{alpha}"),
            Family::PowerLog { alpha } => format!("lalpha:{alpha}"),
            Family::Hot { a } if a.is_infinite() => "hot:inf".into(),
            Family::Hot { a } => format!("hot:{a}"),
            Family::Tabulated(t) => format!("table:{}", t.label),
        }
    }

    fn log_inverse_unchecked(&self, z: f64) -> f64 {
        match &self.family {
            Family::Power { alpha } if *alpha == 0.0 => z,
            Family::Power { alpha } => (alpha * z).ln_1p() / alpha,
            Family::Hot { a } if a.is_infinite() => z,
            Family::Hot { a } => a.ln() + hot_log_h(z),
            Family::PowerLog { alpha } => {
                if *alpha == 0.0 {
                    -(-z).exp()
                } else {
                    -((1.0 - alpha * z).ln() / alpha).exp()
                }
            }
            Family::Tabulated(t) => t.inverse(z).ln(),
        }
    }

    fn check_z(&self, z: f64) -> Result<()> {
        let hi_edge = self.j_hi - EDGE_MARGIN * self.j_hi.abs().max(1.0);
        if z.is_nan() || z <= self.j_lo || z >= hi_edge {
            return Err(Error::Domain {
                what: "z",
                value: z,
                domain: format!("J = ({}, {}) of {}", self.j_lo, self.j_hi, self.label()),
            });
        }
        Ok(())
    }

    fn domain_r(&self, r: f64) -> Error {
        Error::Domain {
            what: "r",
            value: r,
            domain: format!("[0, {}) of {}", self.a, self.label()),
        }
    }
}

impl fmt::Display for AdmissibleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses `phi:<alpha>`, `lalpha:<alpha>`, `hot:<a|inf>` or `table:<path>`.
impl FromStr for AdmissibleFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("family {s:?}: expected <kind>:<parameter>")))?;
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("family {s:?}: bad parameter {v:?}")))
        };
        match kind.trim() {
            "phi" => Self::power(num(arg)?),
            "lalpha" => Self::power_log(num(arg)?),
            "hot" => match arg.trim() {
                "inf" | "infinity" => Self::hot(f64::INFINITY),
                v => Self::hot(num(v)?),
            },
            "table" => Self::from_table_file(Path::new(arg.trim())),
            other => Err(Error::Parse(format!("unknown family kind {other:?}"))),
        }
    }
}

fn power_f(alpha: f64, r: f64) -> f64 {
    if alpha == 0.0 {
        r.ln()
    } else {
        (alpha * r.ln()).exp_m1() / alpha
    }
}

fn power_log_fp(alpha: f64, z: f64) -> f64 {
    if alpha == 0.0 {
        z
    } else {
        (1.0 / alpha - 1.0) * (alpha * z).ln_1p()
    }
}

/// The α-mean `M_α(x, y; λ)` of nonnegative numbers: `max`/`min` for
/// `α = ±∞`, `x^{1-λ} y^λ` for `α = 0`, `((1-λ)x^α + λy^α)^{1/α}`
/// otherwise, and `0` whenever `xy = 0`.
pub fn alpha_mean(x: f64, y: f64, lambda: f64, alpha: f64) -> Result<f64> {
    if !(x >= 0.0 && y >= 0.0) {
        return invalid(format!("α-mean needs nonnegative arguments, got {x}, {y}"));
    }
    if !(0.0..=1.0).contains(&lambda) || alpha.is_nan() {
        return invalid(format!("α-mean needs λ in [0, 1] and α not NaN, got λ = {lambda}"));
    }
    if x * y == 0.0 {
        return Ok(0.0);
    }
    Ok(if alpha == f64::INFINITY {
        x.max(y)
    } else if alpha == f64::NEG_INFINITY {
        x.min(y)
    } else if alpha == 0.0 {
        ((1.0 - lambda) * x.ln() + lambda * y.ln()).exp()
    } else {
        ((1.0 - lambda) * x.powf(alpha) + lambda * y.powf(alpha)).powf(1.0 / alpha)
    })
}

fn fritsch_carlson(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        // weighted harmonic mean keeps the interpolant monotone
        let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
        m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
    m
}

impl Table {
    fn segment(&self, r: f64) -> usize {
        match self.r.partition_point(|&v| v <= r) {
            0 => 0,
            k => (k - 1).min(self.r.len() - 2),
        }
    }

    fn hermite(&self, k: usize, t: f64) -> (f64, f64) {
        let h = self.r[k + 1] - self.r[k];
        let (y0, y1, m0, m1) = (self.f[k], self.f[k + 1], self.slope[k], self.slope[k + 1]);
        let (t2, t3) = (t * t, t * t * t);
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1;
        let dv = ((6.0 * t2 - 6.0 * t) * y0 + (-6.0 * t2 + 6.0 * t) * y1) / h
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (3.0 * t2 - 2.0 * t) * m1;
        (v, dv)
    }

    fn eval(&self, r: f64) -> f64 {
        let k = self.segment(r);
        self.hermite(k, (r - self.r[k]) / (self.r[k + 1] - self.r[k])).0
    }

    fn derivative(&self, r: f64) -> f64 {
        let k = self.segment(r);
        self.hermite(k, (r - self.r[k]) / (self.r[k + 1] - self.r[k])).1
    }

    fn inverse(&self, z: f64) -> f64 {
        let k = match self.f.partition_point(|&v| v <= z) {
            0 => 0,
            k => (k - 1).min(self.f.len() - 2),
        };
        let t = crate::numerics::bisect(0.0, 1.0, |t| self.hermite(k, t).0 - z);
        self.r[k] + t * (self.r[k + 1] - self.r[k])
    }
}
