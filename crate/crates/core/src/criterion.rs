//! Sampled checks of the criteria under which a concavity property is
//! preserved by a parabolic flow.
//!
//! * heat flow on convex domains: `F(0+) = -∞`, `F' > 0` and concavity of
//!   `(log f_F')'` on `J_F` ([`dhf_criterion`]);
//! * `u_t = Δu + κ u^p`: additionally concavity of `κ f^p / f'`, and never
//!   for `κ > 0` ([`semilinear_criterion`]);
//! * a necessary condition for general `u_t = Δu + G(x, u, ∇u)`
//!   ([`necessary_htilde`]);
//! * linear equations with variable coefficients ([`linear_vc_conditions`]);
//! * initial-rate tests for porous-medium and p-Laplace flows.

use crate::admissible::AdmissibleFunction;
use crate::error::{invalid, Error, Result};
use crate::numerics::{midpoint_concavity, midpoint_convexity, ser_f64, Witness};
use crate::sampling::Window;
use serde::Serialize;
use std::collections::BTreeMap;

/// Tolerance for deciding that a rate exponent sits on `0` or `1`.
const BOUNDARY_EPS: f64 = 1e-9;

/// One checked condition.
#[derive(Clone, Debug, Serialize)]
pub struct Condition {
    pub name: String,
    pub passed: bool,
    /// Passed with the tested quantity exactly on the edge of its admissible
    /// range (e.g. a linear rate function).
    pub at_boundary: bool,
    #[serde(serialize_with = "ser_f64")]
    pub worst_violation: f64,
    pub witness: Option<Witness>,
    pub detail: String,
}

impl Condition {
    fn new(name: &str, passed: bool, worst: f64, witness: Option<Witness>, detail: impl Into<String>) -> Self {
        Condition {
            name: name.into(),
            passed,
            at_boundary: false,
            worst_violation: worst,
            witness,
            detail: detail.into(),
        }
    }
}

/// Closed-form analysis of an initial-rate function `g(z) = C z^e`.
#[derive(Clone, Debug, Serialize)]
pub struct RateAnalysis {
    pub coefficient: f64,
    /// `None` for the exponential rate of the `α = 0` case.
    pub exponent: Option<f64>,
    pub analytic_concave: bool,
    pub at_boundary: bool,
    /// `α` below which the rate is known to be non-concave.
    pub threshold: f64,
    pub below_threshold: bool,
}

/// Verdict of a preservation criterion: preserved iff every condition passed.
#[derive(Clone, Debug, Serialize)]
pub struct CriterionVerdict {
    pub criterion: String,
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub preserved: bool,
    pub conditions: Vec<Condition>,
    pub notes: Vec<String>,
    pub rate: Option<RateAnalysis>,
}

impl CriterionVerdict {
    fn new(criterion: &str, family: String, conditions: Vec<Condition>) -> Self {
        CriterionVerdict {
            criterion: criterion.into(),
            family,
            params: BTreeMap::new(),
            preserved: conditions.iter().all(|c| c.passed),
            conditions,
            notes: Vec::new(),
            rate: None,
        }
    }

    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn limit_condition(f: &AdmissibleFunction) -> Condition {
    let ok = f.limit_at_zero_is_neg_inf();
    let (lo, _) = f.j();
    Condition::new(
        "limit_at_zero",
        ok,
        if ok { 0.0 } else { f64::INFINITY },
        (!ok).then(|| Witness::point(lo)),
        if ok {
            "F(r) -> -inf as r -> 0+".to_string()
        } else {
            format!("F(0+) = {lo} is finite")
        },
    )
}

fn fprime_condition(f: &AdmissibleFunction, z: &[f64]) -> Result<Condition> {
    for &zi in z {
        let l = f.log_inverse_d1(zi)?;
        if !(l > f64::NEG_INFINITY) {
            return Ok(Condition::new(
                "derivative_positive",
                false,
                f64::INFINITY,
                Some(Witness::point(zi)),
                "f_F' vanishes",
            ));
        }
    }
    Ok(Condition::new("derivative_positive", true, 0.0, None, "f_F' > 0 on the window"))
}

fn concave_condition(name: &str, z: &[f64], g: &[f64], tol: f64, what: &str) -> Result<Condition> {
    let s = midpoint_concavity(g)?;
    Ok(Condition::new(
        name,
        s.worst <= tol,
        s.worst,
        s.pair.map(|(l, r)| Witness::pair(z[l], z[r], 0.5)),
        format!("midpoint concavity of {what}"),
    ))
}

fn window_or_default(f: &AdmissibleFunction, window: Option<Window>) -> Result<Window> {
    match window {
        Some(w) => Ok(w),
        None => f.default_window(),
    }
}

fn dhf_conditions(f: &AdmissibleFunction, z: &[f64], tol: f64) -> Result<Vec<Condition>> {
    let g = z.iter().map(|&z| f.log_fprime_derivative(z)).collect::<Result<Vec<_>>>()?;
    Ok(vec![
        limit_condition(f),
        fprime_condition(f, z)?,
        concave_condition("log_fprime_derivative_concave", z, &g, tol, "(log f_F')'")?,
    ])
}

/// Heat-flow criterion: F-concavity is preserved on convex domains iff
/// `F(0+) = -∞`, `F' > 0` and `(log f_F')'` is concave on `J_F`.
pub fn dhf_criterion(f: &AdmissibleFunction, window: Option<Window>, tol: f64) -> Result<CriterionVerdict> {
    let window = window_or_default(f, window)?;
    let z = window.nodes();
    Ok(CriterionVerdict::new("heat", f.label(), dhf_conditions(f, &z, tol)?))
}

/// Criterion for `u_t = Δu + κ|u|^{p-1}u`, `p > 1`: the heat-flow
/// conditions plus concavity of `κ f^p / f'` (evaluated in log space). A
/// positive `κ` is never preserving.
pub fn semilinear_criterion(
    f: &AdmissibleFunction,
    kappa: f64,
    p: f64,
    window: Option<Window>,
    tol: f64,
) -> Result<CriterionVerdict> {
    if !(p > 1.0 && p.is_finite()) || !kappa.is_finite() {
        return invalid(format!("need p > 1 and finite κ, got p = {p}, κ = {kappa}"));
    }
    let mut verdict = if kappa > 0.0 {
        let mut v = CriterionVerdict::new(
            "semilinear",
            f.label(),
            vec![Condition::new(
                "kappa_nonpositive",
                false,
                kappa,
                None,
                "a positive source term destroys every such concavity property",
            )],
        );
        v.notes.push("positive κ: not preserved for any admissible F".into());
        v
    } else {
        let window = window_or_default(f, window)?;
        let z = window.nodes();
        let mut conditions = dhf_conditions(f, &z, tol)?;
        let g = z
            .iter()
            .map(|&z| {
                if kappa == 0.0 {
                    return Ok(0.0);
                }
                let (lf, lfp) = (f.log_inverse(z)?, f.log_inverse_d1(z)?);
                Ok(kappa * (p * lf - lfp).exp())
            })
            .collect::<Result<Vec<_>>>()?;
        conditions.push(concave_condition("source_term_concave", &z, &g, tol, "κ f^p / f'")?);
        CriterionVerdict::new("semilinear", f.label(), conditions)
    };
    verdict.params.insert("kappa".into(), kappa);
    verdict.params.insert("p".into(), p);
    Ok(verdict)
}

/// Right-hand side `G(x, u, ∇u)` of a semilinear equation.
pub type Nonlinearity<'a> = &'a dyn Fn(&[f64], f64, &[f64]) -> f64;

/// Necessary condition for preservation under `u_t = Δu + G(x, u, ∇u)`:
/// `H̃ = G(x, f, f'θ)/f' + (f''/f')|θ|²` must be concave along the line
/// `z = ⟨θ, x⟩ + ℓ`. For `θ ≠ 0` the line is parametrized by `z`
/// (`x = θ (z - ℓ)/|θ|²`); for `θ = 0`, `z = ℓ` and the window parametrizes
/// `x_1`.
pub fn necessary_htilde(
    f: &AdmissibleFunction,
    g: Nonlinearity<'_>,
    theta: &[f64],
    ell: f64,
    window: Option<Window>,
    tol: f64,
) -> Result<Condition> {
    if theta.is_empty() {
        return invalid("θ needs at least one component");
    }
    let norm2: f64 = theta.iter().map(|t| t * t).sum();
    let window = window_or_default(f, window)?;
    let s = window.nodes();
    let vals = s
        .iter()
        .map(|&s| {
            let (z, x) = if norm2 > 0.0 {
                (s, theta.iter().map(|t| t * (s - ell) / norm2).collect::<Vec<_>>())
            } else {
                let mut x = vec![0.0; theta.len()];
                x[0] = s;
                (ell, x)
            };
            let u = f.inverse(z)?;
            let fp = f.inverse_d1(z)?;
            let grad: Vec<f64> = theta.iter().map(|t| fp * t).collect();
            Ok(g(&x, u, &grad) / fp + f.log_fprime_derivative(z)? * norm2)
        })
        .collect::<Result<Vec<_>>>()?;
    concave_condition("htilde_concave", &s, &vals, tol, "G(x, f, f'θ)/f' + (f''/f')|θ|² along the line")
}

/// Coefficients of `u_t = Σ a^{ij} u_ij + Σ b^i u_i + c u`.
pub struct VariableCoefficients<'a> {
    pub a: &'a dyn Fn(&[f64]) -> Vec<Vec<f64>>,
    pub b: &'a dyn Fn(&[f64]) -> Vec<f64>,
    pub c: &'a dyn Fn(&[f64]) -> f64,
}

/// Tensor grid of `n` nodes per axis over the box `[lo, hi]`.
#[derive(Clone, Debug, Serialize)]
pub struct BoxSample {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: usize,
}

/// A tensor lattice of sample points with integer coordinates.
struct Lattice {
    shape: Vec<usize>,
}

impl Lattice {
    fn len(&self) -> usize {
        self.shape.iter().product()
    }

    fn index(&self, idx: &[isize]) -> Option<usize> {
        let mut k = 0usize;
        for (d, &i) in idx.iter().enumerate() {
            if i < 0 || i as usize >= self.shape[d] {
                return None;
            }
            k = k * self.shape[d] + i as usize;
        }
        Some(k)
    }

    fn multi(&self, mut k: usize) -> Vec<isize> {
        let mut out = vec![0isize; self.shape.len()];
        for d in (0..self.shape.len()).rev() {
            out[d] = (k % self.shape[d]) as isize;
            k /= self.shape[d];
        }
        out
    }

    /// Axis directions and all `{-1, 0, 1}` combinations with at least two
    /// nonzero entries (first nonzero positive).
    fn directions(&self) -> Vec<Vec<isize>> {
        let d = self.shape.len();
        let mut out = Vec::new();
        for code in 1..3usize.pow(d as u32) {
            let mut v = vec![0isize; d];
            let mut c = code;
            for e in v.iter_mut() {
                *e = (c % 3) as isize - 1;
                c /= 3;
            }
            if v.iter().find(|&&e| e != 0) == Some(&1) {
                out.push(v);
            }
        }
        out.sort_by_key(|v| v.iter().filter(|&&e| e != 0).count());
        out
    }

    /// Every collinear triple `(p - k v, p, p + k v)` as flat indices.
    fn triples(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for v in self.directions() {
            for m in 0..self.len() {
                let p = self.multi(m);
                for k in 1.. {
                    let l: Vec<isize> = p.iter().zip(&v).map(|(a, b)| a - k * b).collect();
                    let r: Vec<isize> = p.iter().zip(&v).map(|(a, b)| a + k * b).collect();
                    match (self.index(&l), self.index(&r)) {
                        (Some(li), Some(ri)) => out.push((li, m, ri)),
                        _ => break,
                    }
                }
            }
        }
        out
    }
}

/// Worst relative midpoint-concavity violation over lattice triples.
fn lattice_concavity(vals: &[f64], triples: &[(usize, usize, usize)]) -> (f64, Option<(usize, usize)>) {
    let mut worst = 0.0;
    let mut at = None;
    for &(l, m, r) in triples {
        let avg = 0.5 * (vals[l] + vals[r]);
        let v = (avg - vals[m]) / 1f64.max(vals[l].abs()).max(vals[r].abs()).max(vals[m].abs());
        if v > worst {
            worst = v;
            at = Some((l, r));
        }
    }
    (worst, at)
}

fn box_points(domain: &BoxSample) -> Result<(Lattice, Vec<Vec<f64>>)> {
    let d = domain.lo.len();
    if d == 0 || domain.hi.len() != d || domain.n < 3 {
        return invalid("box sample needs matching lo/hi and at least 3 nodes per axis");
    }
    if domain.lo.iter().zip(&domain.hi).any(|(a, b)| !(b > a)) {
        return invalid("box sample needs lo < hi on every axis");
    }
    let lat = Lattice {
        shape: vec![domain.n; d],
    };
    let pts = (0..lat.len())
        .map(|k| {
            lat.multi(k)
                .iter()
                .enumerate()
                .map(|(ax, &i)| {
                    let t = i as f64 / (domain.n - 1) as f64;
                    domain.lo[ax] + t * (domain.hi[ax] - domain.lo[ax])
                })
                .collect()
        })
        .collect();
    Ok((lat, pts))
}

/// Checks the conditions for preservation under a linear equation with
/// variable coefficients, sampled on a box.
///
/// With `f = Some(F)` (requires `c = 0`): joint concavity in `(x, z)` of
/// `(log f_F')'(z)⟨A(x)θ, θ⟩` for `θ ∈ {0, ±e_i, (e_1+e_2)/√2, 3e_1}`,
/// affine `b`, and the heat-flow conditions on `F`. With `f = None`
/// (log-concavity): constant `A`, affine `b`, convex `c`.
pub fn linear_vc_conditions(
    coef: &VariableCoefficients<'_>,
    f: Option<&AdmissibleFunction>,
    domain: &BoxSample,
    z_window: Option<Window>,
    tol: f64,
) -> Result<CriterionVerdict> {
    let (lat, pts) = box_points(domain)?;
    let d = domain.lo.len();
    let a_vals: Vec<Vec<Vec<f64>>> = pts.iter().map(|x| (coef.a)(x)).collect();
    for (x, a) in pts.iter().zip(&a_vals) {
        check_spd(a, d).map_err(|e| Error::InvalidParameter(format!("A({x:?}): {e}")))?;
    }
    let b_vals: Vec<Vec<f64>> = pts.iter().map(|x| (coef.b)(x)).collect();
    if b_vals.iter().any(|b| b.len() != d) {
        return invalid(format!("b must have {d} components"));
    }
    let c_vals: Vec<f64> = pts.iter().map(|x| (coef.c)(x)).collect();
    let triples = lat.triples();
    let pair_witness = |at: Option<(usize, usize)>| at.map(|(l, r)| Witness::Pair {
        x: pts[l].clone(),
        y: pts[r].clone(),
        lambda: 0.5,
    });

    // b affine: every second difference vanishes
    let mut b_worst = 0.0f64;
    let mut b_at = None;
    for comp in 0..d {
        for &(l, m, r) in &triples {
            let (bl, bm, br) = (b_vals[l][comp], b_vals[m][comp], b_vals[r][comp]);
            let v = (0.5 * (bl + br) - bm).abs() / 1f64.max(bl.abs()).max(br.abs()).max(bm.abs());
            if v > b_worst {
                b_worst = v;
                b_at = Some((l, r));
            }
        }
    }
    let b_cond = Condition::new("b_affine", b_worst <= tol, b_worst, pair_witness(b_at), "second differences of b");

    let mut conditions = Vec::new();
    let name;
    match f {
        Some(f) => {
            name = "linear_variable";
            if let Some(c) = c_vals.iter().find(|c| c.abs() > tol) {
                return invalid(format!(
                    "the criterion for general F covers c = 0 only (found c = {c}); use the log form"
                ));
            }
            let window = match z_window {
                Some(w) => w,
                None => f.default_window()?.with_nodes(33)?,
            };
            let z = window.nodes();
            let lfp = z.iter().map(|&z| f.log_fprime_derivative(z)).collect::<Result<Vec<_>>>()?;
            let mut thetas: Vec<Vec<f64>> = vec![vec![0.0; d]];
            for i in 0..d {
                for s in [1.0, -1.0] {
                    let mut t = vec![0.0; d];
                    t[i] = s;
                    thetas.push(t);
                }
            }
            if d >= 2 {
                let mut t = vec![0.0; d];
                t[0] = std::f64::consts::FRAC_1_SQRT_2;
                t[1] = std::f64::consts::FRAC_1_SQRT_2;
                thetas.push(t);
            }
            let mut t = vec![0.0; d];
            t[0] = 3.0;
            thetas.push(t);

            let mut shape = lat.shape.clone();
            shape.push(z.len());
            let joint = Lattice { shape };
            let jt = joint.triples();
            let (mut worst, mut at, mut at_theta) = (0.0f64, None, 0usize);
            for (ti, th) in thetas.iter().enumerate() {
                let quad: Vec<f64> = a_vals
                    .iter()
                    .map(|a| (0..d).map(|i| (0..d).map(|j| a[i][j] * th[i] * th[j]).sum::<f64>()).sum())
                    .collect();
                let vals: Vec<f64> = (0..joint.len()).map(|k| lfp[k % z.len()] * quad[k / z.len()]).collect();
                let (w, a) = lattice_concavity(&vals, &jt);
                if w > worst {
                    (worst, at, at_theta) = (w, a, ti);
                }
            }
            let point = |k: usize| {
                let mut p = pts[k / z.len()].clone();
                p.push(z[k % z.len()]);
                p
            };
            conditions.push(Condition::new(
                "joint_concavity",
                worst <= tol,
                worst,
                at.map(|(l, r)| Witness::Pair {
                    x: point(l),
                    y: point(r),
                    lambda: 0.5,
                }),
                format!("(x, z) ↦ (log f')'(z)⟨A(x)θ, θ⟩, worst θ = {:?}", thetas[at_theta]),
            ));
            conditions.push(b_cond);
            conditions.extend(dhf_conditions(f, &z, tol)?);
        }
        None => {
            name = "linear_variable_log";
            let mut a_worst = 0.0f64;
            let mut a_at = None;
            for (k, a) in a_vals.iter().enumerate() {
                for i in 0..d {
                    for j in 0..d {
                        let v = (a[i][j] - a_vals[0][i][j]).abs() / a_vals[0][i][j].abs().max(1.0);
                        if v > a_worst {
                            a_worst = v;
                            a_at = Some(k);
                        }
                    }
                }
            }
            conditions.push(Condition::new(
                "a_constant",
                a_worst <= tol,
                a_worst,
                a_at.map(|k| Witness::Point { at: pts[k].clone() }),
                "largest deviation of A from its value at the first sample",
            ));
            conditions.push(b_cond);
            let neg: Vec<f64> = c_vals.iter().map(|c| -c).collect();
            let (w, at) = lattice_concavity(&neg, &triples);
            conditions.push(Condition::new("c_convex", w <= tol, w, pair_witness(at), "midpoint convexity of c"));
        }
    }
    Ok(CriterionVerdict::new(name, f.map_or("phi:0".into(), |f| f.label()), conditions))
}

fn check_spd(a: &[Vec<f64>], d: usize) -> std::result::Result<(), String> {
    if a.len() != d || a.iter().any(|r| r.len() != d) {
        return Err(format!("expected a {d}×{d} matrix"));
    }
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for i in 0..d {
        for j in 0..i {
            if (a[i][j] - a[j][i]).abs() > 1e-12 * scale {
                return Err("not symmetric".into());
            }
        }
    }
    // Cholesky
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let v = a[i][i] - s;
                if !(v > 0.0) {
                    return Err("not positive definite".into());
                }
                l[i][i] = v.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(())
}

/// `-1`-concavity test: convexity of `f_F / f_F'` on the window.
pub fn minus_one_concavity(f: &AdmissibleFunction, window: Option<Window>, tol: f64) -> Result<CriterionVerdict> {
    let window = window_or_default(f, window)?;
    let z = window.nodes();
    let g = z
        .iter()
        .map(|&z| Ok((f.log_inverse(z)? - f.log_inverse_d1(z)?).exp()))
        .collect::<Result<Vec<_>>>()?;
    let s = midpoint_convexity(&g)?;
    let cond = Condition::new(
        "ratio_convex",
        s.worst <= tol,
        s.worst,
        s.pair.map(|(l, r)| Witness::pair(z[l], z[r], 0.5)),
        "midpoint convexity of f/f'",
    );
    Ok(CriterionVerdict::new("minus_one", f.label(), vec![cond]))
}

/// Default window for rate functions on `z > 0`.
pub fn default_rate_window() -> Window {
    Window {
        lo: 0.25,
        hi: 4.0,
        n: 401,
    }
}

fn rate_verdict(
    criterion: &str,
    family: String,
    g: impl Fn(f64) -> f64,
    coefficient: f64,
    exponent: Option<f64>,
    threshold: f64,
    alpha: f64,
    window: Option<Window>,
    tol: f64,
) -> Result<CriterionVerdict> {
    let window = window.unwrap_or_else(default_rate_window);
    if window.lo <= 0.0 {
        return invalid("rate functions are sampled on z > 0");
    }
    let z = window.nodes();
    let vals: Vec<f64> = z.iter().map(|&z| g(z)).collect();
    let (analytic_concave, at_boundary) = match exponent {
        None => (coefficient == 0.0, false),
        Some(e) => {
            let inside = (-BOUNDARY_EPS..=1.0 + BOUNDARY_EPS).contains(&e);
            let edge = e.abs() <= BOUNDARY_EPS || (e - 1.0).abs() <= BOUNDARY_EPS;
            let ok = coefficient == 0.0
                || (coefficient > 0.0 && inside)
                || (coefficient < 0.0 && (e <= BOUNDARY_EPS || e >= 1.0 - BOUNDARY_EPS));
            (ok, ok && edge && coefficient != 0.0)
        }
    };
    let mut cond = concave_condition("rate_concave", &z, &vals, tol, "the initial rate function")?;
    cond.at_boundary = cond.passed && at_boundary;
    let mut v = CriterionVerdict::new(criterion, family, vec![cond]);
    v.params.insert("alpha".into(), alpha);
    v.rate = Some(RateAnalysis {
        coefficient,
        exponent,
        analytic_concave,
        at_boundary,
        threshold,
        below_threshold: alpha < threshold,
    });
    if v.preserved != analytic_concave {
        v.notes.push("sampled and closed-form concavity disagree".into());
    }
    Ok(v)
}

/// Initial rate for the porous medium equation `u_t = Δu^m` acting on
/// `Φ_α`-concave data: `g(z) = (m/α)(m/α - 1) z^{-1 + (m-1)/α}` (and
/// `m² e^{(m-1)z}` for `α = 0`). Non-concave whenever `α < (m-1)/2`.
pub fn pm_initial_rate(m: f64, alpha: f64, window: Option<Window>, tol: f64) -> Result<CriterionVerdict> {
    if !(m > 1.0 && m.is_finite()) || !alpha.is_finite() {
        return invalid(format!("need m > 1 and finite α, got m = {m}, α = {alpha}"));
    }
    let threshold = 0.5 * (m - 1.0);
    let mut v = if alpha == 0.0 {
        rate_verdict("porous_medium", "phi:0".into(), |z| m * m * ((m - 1.0) * z).exp(), m * m, None, threshold, alpha, window, tol)?
    } else {
        let c = (m / alpha) * (m / alpha - 1.0);
        let e = -1.0 + (m - 1.0) / alpha;
        rate_verdict("porous_medium", format!("phi:{alpha}"), |z| c * z.powf(e), c, Some(e), threshold, alpha, window, tol)?
    };
    v.params.insert("m".into(), m);
    Ok(v)
}

/// Initial rate for the p-Laplace equation acting on `Φ_α`-concave data:
/// `g(z) = ((p-1)/(|α|^{p-2} α)) ((1-α)/α) z^{(p-2)/α - (p-1)}` (and
/// `(p-1) e^{(p-2)z}` for `α = 0`). For `0 < α < 1` it is concave exactly
/// when `α ∈ [(p-2)/p, (p-2)/(p-1)]`.
pub fn plaplace_initial_rate(p: f64, alpha: f64, window: Option<Window>, tol: f64) -> Result<CriterionVerdict> {
    if !(p > 2.0 && p.is_finite()) || !alpha.is_finite() {
        return invalid(format!("need p > 2 and finite α, got p = {p}, α = {alpha}"));
    }
    let threshold = (p - 2.0) / p;
    let mut v = if alpha == 0.0 {
        rate_verdict("p_laplace", "phi:0".into(), |z| (p - 1.0) * ((p - 2.0) * z).exp(), p - 1.0, None, threshold, alpha, window, tol)?
    } else {
        let c = (p - 1.0) / (alpha.abs().powf(p - 2.0) * alpha) * ((1.0 - alpha) / alpha);
        let e = (p - 2.0) / alpha - (p - 1.0);
        rate_verdict("p_laplace", format!("phi:{alpha}"), |z| c * z.powf(e), c, Some(e), threshold, alpha, window, tol)?
    };
    v.params.insert("p".into(), p);
    Ok(v)
}
