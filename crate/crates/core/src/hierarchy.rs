//! Comparison of concavity properties.
//!
//! `F1` is *weaker* than `F2` (`F2 ⪰ F1`) when every F2-concave function is
//! F1-concave, which holds iff `F1 ∘ f_{F2}` is concave on `J_{F2}` (over
//! the common domain). Checks sample this composition on a window and test
//! midpoint concavity with a relative tolerance `tol · max(1, |g|)`.

use crate::admissible::AdmissibleFunction;
use crate::error::{Error, Result};
use crate::flow::hot::{hot_h, hot_h_prime};
use crate::flow::GridFunction;
use crate::numerics::{bisect, midpoint_concavity, ser_f64, Witness};
use crate::sampling::{Window, DEFAULT_NODES};
use serde::Serialize;

/// Default analytic tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
/// The window stops where `f_{F2}` reaches `(1 - SAFETY) a`; closer to `a`
/// the composition cannot be evaluated reliably in floating point.
const SAFETY: f64 = 1e-6;
/// A reverse violation this many times the tolerance certifies strictness.
pub const STRICT_FACTOR: f64 = 10.0;

/// Outcome of a sampled concavity test of a composition.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonResult {
    pub holds: bool,
    #[serde(serialize_with = "ser_f64")]
    pub worst_violation: f64,
    pub witness: Option<Witness>,
    pub window: Window,
}

/// Affine fit `F1 = A F2 + B`.
#[derive(Clone, Debug, Serialize)]
pub struct Equivalence {
    pub equivalent: bool,
    pub a: f64,
    pub b: f64,
    pub max_residual: f64,
}

/// Both directions of a comparison.
#[derive(Clone, Debug, Serialize)]
pub struct Strictness {
    /// `F1` is weaker than `F2`.
    pub weaker: bool,
    /// ... and `F2` is certifiably not weaker than `F1`.
    pub strict: bool,
    pub forward: ComparisonResult,
    pub reverse: ComparisonResult,
}

/// Window in `J_{F2}` on which `F1 ∘ f_{F2}` is sampled: the default window
/// of `F2`, cut where `f_{F2}` approaches the smaller domain end.
pub fn composition_window(f1: &AdmissibleFunction, f2: &AdmissibleFunction, n: usize) -> Result<Window> {
    let w = f2.default_window()?.with_nodes(n)?;
    let cap = f1.a().min(f2.a()) * (1.0 - SAFETY);
    if cap.is_infinite() || f2.inverse(w.hi)? <= cap {
        return Ok(w);
    }
    if f2.inverse(w.lo)? >= cap {
        return Err(Error::EmptyWindow(format!(
            "{} exceeds the common domain [0, {}) on the whole window",
            f2,
            f1.a().min(f2.a())
        )));
    }
    let hi = bisect(w.lo, w.hi, |z| f2.inverse(z).unwrap_or(f64::INFINITY) - cap);
    Window::new(w.lo, hi, n)
}

fn sweep(z: &[f64], g: &[f64], window: Window, tol: f64) -> Result<ComparisonResult> {
    let s = midpoint_concavity(g)?;
    Ok(ComparisonResult {
        holds: s.worst <= tol,
        worst_violation: s.worst,
        witness: s.pair.map(|(l, r)| Witness::pair(z[l], z[r], 0.5)),
        window,
    })
}

/// Whether `F1` is weaker than `F2`: midpoint concavity of `F1 ∘ f_{F2}`.
pub fn is_weaker(
    f1: &AdmissibleFunction,
    f2: &AdmissibleFunction,
    window: Option<Window>,
    tol: f64,
) -> Result<ComparisonResult> {
    let window = match window {
        Some(w) => w,
        None => composition_window(f1, f2, DEFAULT_NODES)?,
    };
    let z = window.nodes();
    let g = z
        .iter()
        .map(|&z| f1.eval(f2.inverse(z)?))
        .collect::<Result<Vec<_>>>()?;
    sweep(&z, &g, window, tol)
}

/// Both directions; `strict` requires the reverse violation to exceed
/// `10 · tol`.
pub fn compare(f1: &AdmissibleFunction, f2: &AdmissibleFunction, tol: f64) -> Result<Strictness> {
    let forward = is_weaker(f1, f2, None, tol)?;
    let reverse = is_weaker(f2, f1, None, tol)?;
    Ok(Strictness {
        weaker: forward.holds,
        strict: forward.holds && reverse.worst_violation > STRICT_FACTOR * tol,
        forward,
        reverse,
    })
}

/// Least-squares fit of `F1 ∘ f_{F2}(z) = A z + B`; equivalent iff `A > 0`
/// and the largest relative residual is within `tol`.
pub fn equivalent(
    f1: &AdmissibleFunction,
    f2: &AdmissibleFunction,
    window: Option<Window>,
    tol: f64,
) -> Result<Equivalence> {
    let window = match window {
        Some(w) => w,
        None => composition_window(f1, f2, DEFAULT_NODES)?,
    };
    let z = window.nodes();
    let g = z
        .iter()
        .map(|&z| f1.eval(f2.inverse(z)?))
        .collect::<Result<Vec<_>>>()?;
    if g.iter().any(|v| !v.is_finite()) {
        return Ok(Equivalence {
            equivalent: false,
            a: f64::NAN,
            b: f64::NAN,
            max_residual: f64::INFINITY,
        });
    }
    let n = z.len() as f64;
    let (mz, mg) = (z.iter().sum::<f64>() / n, g.iter().sum::<f64>() / n);
    let (mut szz, mut szg) = (0.0, 0.0);
    for (zi, gi) in z.iter().zip(&g) {
        szz += (zi - mz) * (zi - mz);
        szg += (zi - mz) * (gi - mg);
    }
    let a = szg / szz;
    let b = mg - a * mz;
    let max_residual = z
        .iter()
        .zip(&g)
        .map(|(zi, gi)| (gi - a * zi - b).abs() / gi.abs().max(1.0))
        .fold(0.0, f64::max);
    Ok(Equivalence {
        equivalent: a > 0.0 && max_residual <= tol,
        a,
        b,
        max_residual,
    })
}

/// Whether F-concavity is closed under `u ↦ κu`: concavity of
/// `z ↦ F(κ f_F(z))` where `κ f_F(z) < a`.
pub fn scalar_closure(f: &AdmissibleFunction, kappa: f64, window: Option<Window>, tol: f64) -> Result<ComparisonResult> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("scalar must be positive, got {kappa}")));
    }
    let window = match window {
        Some(w) => w,
        None => {
            let w = f.default_window()?;
            let cap = f.a() * (1.0 - SAFETY);
            if cap.is_infinite() || kappa * f.inverse(w.hi)? <= cap {
                w
            } else if kappa * f.inverse(w.lo)? >= cap {
                return Err(Error::EmptyWindow(format!("κ = {kappa} pushes {f} out of its domain")));
            } else {
                let hi = bisect(w.lo, w.hi, |z| kappa * f.inverse(z).unwrap_or(f64::INFINITY) - cap);
                Window::new(w.lo, hi, w.n)?
            }
        }
    };
    let z = window.nodes();
    let g = z
        .iter()
        .map(|&z| f.eval(kappa * f.inverse(z)?))
        .collect::<Result<Vec<_>>>()?;
    sweep(&z, &g, window, tol)
}

/// Solves `ε h'(-2/ε) = 1/a` for `ε ∈ (0, 1]`. Only large enough `a`
/// (about 9.63 and up) admit a solution.
pub fn ha_epsilon(a: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("a must be positive and finite, got {a}")));
    }
    // ε h'(-2/ε) is increasing in ε
    let lhs = |e: f64| e * hot_h_prime(-2.0 / e) - 1.0 / a;
    if lhs(1.0) < 0.0 {
        return Err(Error::Bracket(format!(
            "ε h'(-2/ε) = 1/a has no solution in (0, 1] for a = {a}"
        )));
    }
    Ok(bisect(1e-3, 1.0, lhs))
}

/// The H_a-concave approximation `f_a = h_a(log f)` of a log-concave
/// function `f > 0`, with `h_a(z) = a h(ε_a z - 2/ε_a)`. Returns `ε_a` and
/// the samples of `f_a`.
pub fn ha_approximant(a: f64, f: &GridFunction) -> Result<(f64, GridFunction)> {
    let eps = ha_epsilon(a)?;
    if f.values().iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter("the approximated function must be positive".into()));
    }
    let values = f
        .values()
        .iter()
        .map(|&v| a * hot_h(eps * v.ln() - 2.0 / eps))
        .collect();
    Ok((eps, f.with_values(values)))
}

/// Checks "`F1` weaker than `F2` and `F2(0+) = -∞` imply `F1(0+) = -∞`".
/// Returns `true` when the implication holds on the sampled comparison.
pub fn limit_inheritance_check(f1: &AdmissibleFunction, f2: &AdmissibleFunction, tol: f64) -> Result<bool> {
    let weaker = is_weaker(f1, f2, None, tol)?.holds;
    Ok(!(weaker && f2.limit_at_zero_is_neg_inf()) || f1.limit_at_zero_is_neg_inf())
}

/// One link of an ordered chain.
#[derive(Clone, Debug, Serialize)]
pub struct ChainLink {
    pub stronger: String,
    pub weaker: String,
    pub holds: bool,
    pub strict: bool,
    #[serde(serialize_with = "ser_f64")]
    pub forward_violation: f64,
    #[serde(serialize_with = "ser_f64")]
    pub reverse_violation: f64,
}

/// Families sorted from strongest to weakest, with equivalent families
/// grouped.
#[derive(Clone, Debug, Serialize)]
pub struct Chain {
    pub classes: Vec<Vec<String>>,
    pub links: Vec<ChainLink>,
    /// Every pair of classes is comparable.
    pub total: bool,
}

/// Orders a set of families by the "weaker than" relation.
pub fn order_chain(families: &[AdmissibleFunction], tol: f64) -> Result<Chain> {
    let n = families.len();
    // weaker[i][j]: families[i] is weaker than families[j]
    let mut weaker = vec![vec![None::<ComparisonResult>; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                weaker[i][j] = Some(is_weaker(&families[i], &families[j], None, tol)?);
            }
        }
    }
    let w = |i: usize, j: usize| i == j || weaker[i][j].as_ref().is_some_and(|c| c.holds);
    let mut class_of = vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if class_of[i] != usize::MAX {
            continue;
        }
        let members: Vec<usize> = (i..n).filter(|&j| w(i, j) && w(j, i)).collect();
        for &m in &members {
            class_of[m] = classes.len();
        }
        classes.push(members);
    }
    // rank = number of classes this one is stronger than
    let rep: Vec<usize> = classes.iter().map(|c| c[0]).collect();
    let rank = |c: usize| (0..rep.len()).filter(|&d| d != c && w(rep[d], rep[c])).count();
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(rank(c)), c));
    let mut total = true;
    for a in 0..order.len() {
        for b in a + 1..order.len() {
            if !w(rep[order[a]], rep[order[b]]) && !w(rep[order[b]], rep[order[a]]) {
                total = false;
            }
        }
    }
    let links = order
        .windows(2)
        .map(|p| {
            let (s, k) = (rep[p[0]], rep[p[1]]);
            let fwd = weaker[k][s].as_ref().unwrap();
            let rev = weaker[s][k].as_ref().unwrap();
            ChainLink {
                stronger: families[s].label(),
                weaker: families[k].label(),
                holds: fwd.holds,
                strict: fwd.holds && rev.worst_violation > STRICT_FACTOR * tol,
                forward_violation: fwd.worst_violation,
                reverse_violation: rev.worst_violation,
            }
        })
        .collect();
    Ok(Chain {
        classes: order
            .iter()
            .map(|&c| classes[c].iter().map(|&i| families[i].label()).collect())
            .collect(),
        links,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(s: &str) -> AdmissibleFunction {
        s.parse().unwrap()
    }

    #[test]
    fn power_ordering() {
        // Φ_α is weaker than Φ_β for α < β
        assert!(is_weaker(&fam("phi:0"), &fam("phi:1"), None, DEFAULT_TOL).unwrap().holds);
        assert!(is_weaker(&fam("phi:-1"), &fam("phi:0"), None, DEFAULT_TOL).unwrap().holds);
        let r = is_weaker(&fam("phi:0"), &fam("phi:-1"), None, DEFAULT_TOL).unwrap();
        assert!(!r.holds);
        assert!(r.witness.is_some());
    }

    #[test]
    fn log_and_power_log_one_are_equivalent() {
        let e = equivalent(&fam("phi:0"), &fam("lalpha:1"), None, DEFAULT_TOL).unwrap();
        assert!(e.equivalent);
        assert!((e.a - 1.0).abs() < 1e-12 && (e.b + 1.0).abs() < 1e-12);
        let e = equivalent(&fam("lalpha:1"), &fam("phi:0"), None, DEFAULT_TOL).unwrap();
        assert!(e.equivalent);
        assert!((e.a - 1.0).abs() < 1e-12 && (e.b - 1.0).abs() < 1e-12);
        assert!(!equivalent(&fam("phi:0"), &fam("lalpha:0.5"), None, DEFAULT_TOL).unwrap().equivalent);
    }

    #[test]
    fn scalar_closure_cases() {
        assert!(scalar_closure(&fam("phi:-1"), 3.0, None, DEFAULT_TOL).unwrap().holds);
        assert!(scalar_closure(&fam("lalpha:0.5"), 0.9, None, DEFAULT_TOL).unwrap().holds);
        assert!(!scalar_closure(&fam("lalpha:2"), 0.5, None, DEFAULT_TOL).unwrap().holds);
        assert!(scalar_closure(&fam("phi:0"), -1.0, None, DEFAULT_TOL).is_err());
    }

    #[test]
    fn epsilon_equation() {
        for a in [10.0, 100.0, 1000.0] {
            let e = ha_epsilon(a).unwrap();
            assert!((e * hot_h_prime(-2.0 / e) * a - 1.0).abs() < 1e-12);
            assert!(e > 0.0 && e < 1.0);
        }
        assert!(ha_epsilon(5.0).is_err());
        assert!(ha_epsilon(9.7).is_ok());
    }

    #[test]
    fn limit_inheritance() {
        for s in ["phi:0", "hot:1", "lalpha:0.5"] {
            assert!(limit_inheritance_check(&fam("lalpha:-1"), &fam(s), DEFAULT_TOL).unwrap());
            assert!(!is_weaker(&fam("lalpha:-1"), &fam(s), None, DEFAULT_TOL).unwrap().holds);
        }
    }

    #[test]
    fn chain_groups_equivalent_families() {
        let fams: Vec<_> = ["phi:0", "lalpha:0.5", "hot:1", "lalpha:1"].iter().map(|s| fam(s)).collect();
        let c = order_chain(&fams, DEFAULT_TOL).unwrap();
        assert!(c.total);
        assert_eq!(c.classes[0], vec!["hot:1"]);
        assert_eq!(c.classes[1], vec!["lalpha:0.5"]);
        assert_eq!(c.classes[2], vec!["phi:0", "lalpha:1"]);
        assert!(c.links.iter().all(|l| l.holds && l.strict));
    }
}
