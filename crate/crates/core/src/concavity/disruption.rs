//! Heat flow destroying a concavity property weaker than log-concavity.
//!
//! For `F` with `F(0+) = -∞` whose concavity is not stronger than
//! log-concavity, `log f_F` fails to be concave somewhere in `J_F`. With a
//! witness `ζ < ω` of that failure and `c` above `ω`, the product of the
//! unit step in `w` with `φ₂(z) = f_F(c - |z|)` is F-concave, but its heat
//! flow loses quasi-concavity (hence every weaker property) for small `t`.

use super::{check_f_concavity, check_log_concavity, quasi_ratio_sweep, ConcavityReport, check_quasi_concavity};
use crate::admissible::AdmissibleFunction;
use crate::error::{Error, Result};
use crate::flow::{heat_line, GridFunction};
use crate::hierarchy::{is_weaker, DEFAULT_TOL};
use crate::numerics::{golden_max, Witness};
use crate::sampling::Window;
use serde::Serialize;

/// Number of scan points for the log-concavity defect.
const SCAN_POINTS: usize = 400;
/// A violation is certified when it exceeds this multiple of its budget.
pub const CERTIFY_RATIO: f64 = 10.0;

/// The F-concave, non-log-concave profile `φ₂(z) = f_F(c - |z|)`.
#[derive(Clone, Debug, Serialize)]
pub struct DisruptionDatum {
    pub family: String,
    /// Witness `(ζ, ω, λ = ½)` of non-concavity of `log f_F`.
    pub zeta: f64,
    pub omega: f64,
    pub lambda: f64,
    /// Midpoint defect `½(log f(ζ) + log f(ω)) - log f((ζ+ω)/2)`.
    pub defect: f64,
    pub c: f64,
    #[serde(skip)]
    pub phi2: GridFunction,
}

/// Grid and resolution settings of the disruption experiment.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DisruptionConfig {
    /// Nodes per axis (odd, so that `0` is a node).
    pub n: usize,
    /// Half-width of the `w` axis in units of `sqrt t`.
    pub w_scale: f64,
    /// Half-width of the `z` axis.
    pub z_half_width: f64,
}

impl Default for DisruptionConfig {
    fn default() -> Self {
        DisruptionConfig {
            n: 257,
            w_scale: 3.0,
            z_half_width: 2.0,
        }
    }
}

/// Result at one time.
#[derive(Clone, Debug, Serialize)]
pub struct DisruptionStep {
    pub t: f64,
    /// Plain quasi-concavity check (tolerance 0).
    pub report: ConcavityReport,
    /// Largest violation/budget ratio over all triples, with its parts.
    pub certified_ratio: f64,
    pub certified_violation: f64,
    pub certified_budget: f64,
    pub certified_witness: Option<Witness>,
    /// `certified_ratio >= 10`.
    pub disrupted: bool,
}

/// A full run.
#[derive(Clone, Debug, Serialize)]
pub struct DisruptionRun {
    pub profile: String,
    pub config: DisruptionConfig,
    pub steps: Vec<DisruptionStep>,
    pub disrupted: bool,
}

/// Finds the log-concavity defect of `f_F` and builds `φ₂` on
/// `[-2, 2]` with 257 nodes.
///
/// Errors with [`Error::Precondition`] when `F(0+)` is finite or when
/// F-concavity is stronger than log-concavity (then the heat flow preserves
/// it and no datum exists).
pub fn build_disruption_datum(f: &AdmissibleFunction, search: Option<Window>) -> Result<DisruptionDatum> {
    if !f.limit_at_zero_is_neg_inf() {
        return Err(Error::Precondition(format!("{f} has a finite limit at 0")));
    }
    let log = AdmissibleFunction::power(0.0)?;
    if is_weaker(&log, f, None, DEFAULT_TOL)?.holds {
        return Err(Error::Precondition(format!(
            "{f}-concavity implies log-concavity, which the heat flow preserves"
        )));
    }
    let w = match search {
        Some(w) => w,
        None => f.default_window()?.with_nodes(SCAN_POINTS)?,
    };
    let z = w.nodes();
    let g = z.iter().map(|&z| f.log_inverse(z)).collect::<Result<Vec<_>>>()?;
    let mut best = (0.0, 0usize);
    for i in 1..z.len() - 1 {
        let d = 0.5 * (g[i - 1] + g[i + 1]) - g[i];
        if d > best.0 {
            best = (d, i);
        }
    }
    if best.0 <= 1e-14 * g[best.1].abs().max(1.0) {
        return Err(Error::NoViolation);
    }
    let delta = w.step();
    let defect_at = |c: f64| {
        let v = |z: f64| f.log_inverse(z).unwrap_or(f64::NAN);
        0.5 * (v(c - delta) + v(c + delta)) - v(c)
    };
    let i = best.1;
    let center = golden_max(
        z[i - 1].max(w.lo + delta),
        z[i + 1].min(w.hi - delta),
        |c| {
            let d = defect_at(c);
            if d.is_nan() {
                f64::NEG_INFINITY
            } else {
                d
            }
        },
    );
    let (zeta, omega) = (center - delta, center + delta);
    let (_, j_hi) = f.j();
    let c = omega + (0.25 * (j_hi - omega)).min(1.0);
    let phi2 = GridFunction::from_fn_1d(-2.0, 2.0, 257, true, |x| f.inverse(c - x.abs()).unwrap_or(0.0))?;
    Ok(DisruptionDatum {
        family: f.label(),
        zeta,
        omega,
        lambda: 0.5,
        defect: defect_at(center),
        c,
        phi2,
    })
}

impl DisruptionDatum {
    /// `φ₂(z)` at an arbitrary point.
    pub fn profile(&self, f: &AdmissibleFunction, z: f64) -> f64 {
        f.inverse(self.c - z.abs()).unwrap_or(0.0)
    }

    /// Checks that `φ₂` is F-concave and not log-concave on `z <= 0`.
    pub fn verify(&self, f: &AdmissibleFunction) -> Result<(ConcavityReport, ConcavityReport)> {
        let fc = check_f_concavity(&self.phi2, f, 1e-12)?;
        let n = self.phi2.shape()[0] / 2 + 1;
        let left = GridFunction::new(
            self.phi2.origin().to_vec(),
            self.phi2.spacing().to_vec(),
            vec![n],
            self.phi2.values()[..n].to_vec(),
            true,
        )?;
        let lc = check_log_concavity(&left, 1e-12)?;
        Ok((fc, lc))
    }
}

/// Unit step on `[-half, half]`: 0 left of the middle node, ½ on it, 1 to
/// the right; extended by its edge values.
fn step_datum(half: f64, n: usize) -> Result<GridFunction> {
    let mid = n / 2;
    let values = (0..n)
        .map(|i| match i.cmp(&mid) {
            std::cmp::Ordering::Less => 0.0,
            std::cmp::Ordering::Equal => 0.5,
            std::cmp::Ordering::Greater => 1.0,
        })
        .collect();
    GridFunction::new(vec![-half], vec![2.0 * half / (n - 1) as f64], vec![n], values, false)
}

fn product(a: &GridFunction, b: &GridFunction) -> Result<GridFunction> {
    let mut values = Vec::with_capacity(a.len() * b.len());
    for &x in a.values() {
        values.extend(b.values().iter().map(|&y| x * y));
    }
    GridFunction::new(
        vec![a.origin()[0], b.origin()[0]],
        vec![a.spacing()[0], b.spacing()[0]],
        vec![a.len(), b.len()],
        values,
        true,
    )
}

/// `step(w) · profile(z)` evolved to time `t` on the configured grid, with
/// the per-node error estimate: the difference from the solution with twice
/// the resolution at the common nodes.
pub fn mirrored_snapshot(
    profile: &(dyn Fn(f64) -> f64 + Sync),
    config: DisruptionConfig,
    t: f64,
) -> Result<(GridFunction, Vec<f64>)> {
    if config.n < 5 || config.n.is_multiple_of(2) {
        return Err(Error::DegenerateGrid(format!("need an odd node count >= 5, got {}", config.n)));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("times must be positive, got {t}")));
    }
    let fine_n = 2 * config.n - 1;
    let lz = config.z_half_width;
    let half = config.w_scale * t.sqrt();
    let wc = heat_line(&step_datum(half, config.n)?, t)?.u;
    let wf = heat_line(&step_datum(half, fine_n)?, t)?.u;
    let zc = heat_line(&GridFunction::from_fn_1d(-lz, lz, config.n, true, profile)?, t)?.u;
    let zf = heat_line(&GridFunction::from_fn_1d(-lz, lz, fine_n, true, profile)?, t)?.u;
    let u = product(&wc, &zc)?;
    let nz = zc.len();
    let e = (0..u.len())
        .map(|k| {
            let (i, j) = (k / nz, k % nz);
            let fine = wf.values()[2 * i] * zf.values()[2 * j];
            (fine - u.values()[k]).abs()
        })
        .collect();
    Ok((u, e))
}

/// Evolves `step(w) · profile(z)` and checks quasi-concavity at each time.
///
/// A triple's budget is `e_m + max(e_x, e_y)` with the per-node error
/// estimate `e` of [`mirrored_snapshot`].
pub fn run_disruption_profile(
    label: &str,
    profile: &(dyn Fn(f64) -> f64 + Sync),
    config: DisruptionConfig,
    t_list: &[f64],
) -> Result<DisruptionRun> {
    let mut steps = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let (u, e) = mirrored_snapshot(profile, config, t)?;
        let report = check_quasi_concavity(&u, 0.0)?;
        let (ratio, viol, budget, wit) = quasi_ratio_sweep(&u, &e);
        steps.push(DisruptionStep {
            t,
            report,
            certified_ratio: ratio,
            certified_violation: viol,
            certified_budget: budget,
            certified_witness: wit,
            disrupted: ratio >= CERTIFY_RATIO,
        });
    }
    Ok(DisruptionRun {
        profile: label.into(),
        config,
        disrupted: steps.iter().any(|s| s.disrupted),
        steps,
    })
}

/// Builds the datum for `f` and runs the experiment.
pub fn run_disruption(
    f: &AdmissibleFunction,
    config: DisruptionConfig,
    t_list: &[f64],
) -> Result<(DisruptionDatum, DisruptionRun)> {
    let datum = build_disruption_datum(f, None)?;
    let profile = |z: f64| datum.profile(f, z);
    let run = run_disruption_profile(&format!("step x {}-profile", f.label()), &profile, config, t_list)?;
    Ok((datum, run))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(s: &str) -> AdmissibleFunction {
        s.parse().unwrap()
    }

    #[test]
    fn datum_for_power_minus_one() {
        let f = fam("phi:-1");
        let d = build_disruption_datum(&f, None).unwrap();
        assert!(d.zeta < d.omega && d.defect > 0.0);
        assert!(d.c > d.omega && d.c < 1.0);
        let (fc, lc) = d.verify(&f).unwrap();
        assert!(fc.passed, "{fc:?}");
        assert!(!lc.passed);
    }

    #[test]
    fn preconditions() {
        assert!(matches!(build_disruption_datum(&fam("hot:1"), None), Err(Error::Precondition(_))));
        assert!(matches!(build_disruption_datum(&fam("phi:0"), None), Err(Error::Precondition(_))));
        assert!(matches!(build_disruption_datum(&fam("phi:0.5"), None), Err(Error::Precondition(_))));
    }

    #[test]
    fn small_run_detects_disruption() {
        let f = fam("phi:-1");
        let cfg = DisruptionConfig {
            n: 65,
            ..Default::default()
        };
        let (_, run) = run_disruption(&f, cfg, &[0.01]).unwrap();
        assert!(run.steps[0].report.worst_violation > 0.0);
    }
}
