//! Property tests of the invariants shared across modules.

use concaflow::admissible::EDGE_MARGIN;
use concaflow::concavity::{check_f_concavity, check_quasi_concavity, f_concave_envelope};
use concaflow::criterion::{dhf_criterion, minus_one_concavity, necessary_htilde, semilinear_criterion};
use concaflow::flow::{
    dirichlet_cn, heat_line, hot_h, hot_h_prime, semilinear_imex_at, GridFunction,
};
use concaflow::hierarchy::{is_weaker, DEFAULT_TOL};
use concaflow::{alpha_mean, AdmissibleFunction};
use proptest::prelude::*;

fn fam(s: &str) -> AdmissibleFunction {
    s.parse().unwrap()
}

const FAMILIES: [&str; 12] = [
    "phi:-2", "phi:-0.5", "phi:0", "phi:0.5", "phi:2", "lalpha:-1", "lalpha:0", "lalpha:0.5", "lalpha:1",
    "lalpha:2", "hot:1", "hot:10",
];

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

#[test]
fn inverse_round_trip_on_log_spaced_radii() {
    for s in FAMILIES {
        let f = fam(s);
        let a = f.a();
        let rs = if a.is_finite() {
            log_spaced(a * 1e-8, a * (1.0 - 1e-8), 200)
        } else {
            log_spaced(1e-8, 1e8, 200)
        };
        for r in rs {
            // values whose image leaves J are domain errors by design
            let Ok(z) = f.eval(r) else { continue };
            let Ok(back) = f.inverse(z) else { continue };
            // where F flattens, rounding z alone moves f_F(z) by ε|z|/F'(r)
            let conditioning = 16.0 * f64::EPSILON * (z.abs() + 1.0) / f.derivative(r).unwrap();
            let bound = (1e-10 * r.max(1.0)).max(conditioning);
            assert!((back - r).abs() <= bound, "{s}: r = {r}, back = {back}");
        }
    }
}

#[test]
fn f_and_inverse_are_strictly_increasing() {
    for s in FAMILIES {
        let f = fam(s);
        let w = f.default_window().unwrap();
        let z = w.nodes();
        let u: Vec<f64> = z.iter().map(|&z| f.inverse(z).unwrap()).collect();
        // f_F saturates at `a` in floating point; only such ties are allowed
        for p in u.windows(2) {
            assert!(p[1] > p[0] || (p[1] == p[0] && f.a() - p[1] <= 1e-14 * f.a()), "{s}: {p:?}");
        }
        let back: Vec<f64> = u.iter().filter_map(|&r| f.eval(r).ok()).collect();
        assert!(back.len() > u.len() / 2, "{s}");
        assert!(back.windows(2).all(|p| p[1] > p[0]), "{s}");
    }
}

#[test]
fn power_log_with_negative_alpha_has_finite_limit() {
    // F(r) - 1/α = -s^α/α with s = -ln r, so the gap closes like s^α and the
    // smallest positive double (s ≈ 708) resolves 1e-6 only for α ≤ -2.5
    for alpha in [-0.5, -1.0, -2.0, -2.5, -3.0] {
        let f = AdmissibleFunction::power_log(alpha).unwrap();
        assert!(!f.limit_at_zero_is_neg_inf());
        let mut prev = f64::INFINITY;
        for r in [1e-10, 1e-100, 1e-300, f64::MIN_POSITIVE] {
            let gap = (f.eval(r).unwrap() - 1.0 / alpha).abs();
            let s: f64 = -r.ln();
            assert!((gap - s.powf(alpha) / alpha.abs()).abs() <= 1e-12, "α = {alpha}, r = {r}");
            assert!(gap < prev);
            prev = gap;
        }
        if alpha <= -2.5 {
            assert!(prev <= 1e-6, "α = {alpha}: {prev}");
        }
    }
}

#[test]
fn h_asymptotics_in_the_left_tail() {
    let z = -30.0;
    let ratio = hot_h_prime(z) / (-z * hot_h(z) / 2.0);
    assert!((0.9..=1.1).contains(&ratio), "{ratio}");
}

#[test]
fn semilinear_with_zero_kappa_matches_heat_criterion() {
    for s in FAMILIES {
        let f = fam(s);
        let heat = dhf_criterion(&f, None, DEFAULT_TOL).unwrap().preserved;
        for p in [2.0, 3.0] {
            assert_eq!(semilinear_criterion(&f, 0.0, p, None, DEFAULT_TOL).unwrap().preserved, heat, "{s} p={p}");
        }
    }
}

#[test]
fn htilde_agrees_with_semilinear_criterion() {
    // families with F(0+) = -∞, where the two criteria test the same things
    let list = ["phi:-1", "phi:0", "lalpha:0", "lalpha:0.25", "lalpha:0.5", "lalpha:0.75", "lalpha:1", "lalpha:2", "hot:1", "hot:10"];
    for s in list {
        let f = fam(s);
        for (kappa, p) in [(-1.0, 2.0), (-1.0, 3.0), (0.0, 2.0)] {
            let preserved = semilinear_criterion(&f, kappa, p, None, DEFAULT_TOL).unwrap().preserved;
            let g = move |_x: &[f64], u: f64, _g: &[f64]| kappa * u.abs().powf(p - 1.0) * u;
            let passes: Vec<bool> = [0.0, 1.0, 3.0]
                .iter()
                .map(|&t| necessary_htilde(&f, &g, &[t, 0.0], 0.0, None, DEFAULT_TOL).unwrap().passed)
                .collect();
            assert_eq!(passes.iter().all(|&b| b), preserved, "{s} κ={kappa} p={p}: {passes:?}");
        }
    }
}

#[test]
fn heat_preserved_families_pass_minus_one_concavity() {
    for s in ["phi:0", "lalpha:0.5", "lalpha:0.75", "lalpha:1", "hot:0.5", "hot:1", "hot:10"] {
        let f = fam(s);
        assert!(dhf_criterion(&f, None, DEFAULT_TOL).unwrap().preserved, "{s}");
        assert!(minus_one_concavity(&f, None, DEFAULT_TOL).unwrap().preserved, "{s}");
    }
}

fn even_bump(n: usize, width: f64) -> GridFunction {
    GridFunction::from_fn_1d(-6.0, 6.0, n, true, |x| (-(x / width).powi(2)).exp() / (1.0 + x * x)).unwrap()
}

#[test]
fn heat_semigroup_and_symmetry() {
    let phi = even_bump(481, 1.0);
    for (s, t) in [(0.05, 0.1), (0.2, 0.3)] {
        let two = heat_line(&heat_line(&phi, s).unwrap().u, t).unwrap().u;
        let one = heat_line(&phi, s + t).unwrap().u;
        let d = two.values().iter().zip(one.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d <= 5e-6, "semigroup defect {d}");
        let v = one.values();
        let asym = (0..v.len()).map(|i| (v[i] - v[v.len() - 1 - i]).abs()).fold(0.0, f64::max);
        assert!(asym <= 1e-12, "asymmetry {asym}");
        // unimodal even data stay increasing left of 0 and decreasing right of it
        let mid = v.len() / 2;
        assert!(v[..=mid].windows(2).all(|w| w[1] >= w[0]));
        assert!(v[mid..].windows(2).all(|w| w[1] <= w[0]));
    }
}

/// `f_F` of a random concave quadratic, kept inside `J`, on 41 nodes.
fn f_concave_instance(f: &AdmissibleFunction, top: f64, curv: f64, x0: f64) -> GridFunction {
    let (lo, hi) = f.j();
    let (lo, hi) = (lo.max(-6.0), hi.min(6.0));
    let peak = lo + top * (hi - lo);
    let floor = lo + 0.05 * (hi - lo);
    // the parabola stays above the floor on [0, 1]
    let reach = x0.max(1.0 - x0);
    let spread = (peak - floor) * curv / (reach * reach);
    GridFunction::from_fn_1d(0.0, 1.0, 41, true, |x| {
        f.inverse(peak - spread * (x - x0) * (x - x0)).unwrap()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn log_fprime_derivative_matches_differences(which in 0usize..3, alpha in -1.5f64..1.5, s in 0.05f64..0.95) {
        let f = match which {
            0 => AdmissibleFunction::power(alpha).unwrap(),
            1 => AdmissibleFunction::power_log(alpha + 1.6).unwrap(),
            _ => AdmissibleFunction::hot(0.5 + alpha.abs() * 5.0).unwrap(),
        };
        let w = f.default_window().unwrap();
        let z = w.lo + s * (w.hi - w.lo);
        let h = 1e-4 * z.abs().max(1.0);
        prop_assume!(z - h > w.lo && z + h < w.hi);
        let lp = |z: f64| f.inverse_d1(z).unwrap().ln();
        let fd = (lp(z + h) - 2.0 * lp(z) + lp(z - h)) / (h * h);
        let fd1 = (lp(z + h) - lp(z - h)) / (2.0 * h);
        let exact = f.log_fprime_derivative(z).unwrap();
        prop_assert!((exact - fd1).abs() <= 1e-6 * exact.abs().max(1.0), "{} at {}: {} vs {} ({})", f, z, exact, fd1, fd);
    }

    #[test]
    fn power_family_ordering(a in -2.0f64..2.0, gap in 0.1f64..1.5) {
        let (fa, fb) = (AdmissibleFunction::power(a).unwrap(), AdmissibleFunction::power(a + gap).unwrap());
        prop_assert!(is_weaker(&fa, &fb, None, DEFAULT_TOL).unwrap().holds);
    }

    #[test]
    fn power_log_ordering(a in 0.0f64..2.0, gap in 0.1f64..1.0) {
        let (fa, fb) = (AdmissibleFunction::power_log(a).unwrap(), AdmissibleFunction::power_log(a + gap).unwrap());
        prop_assert!(is_weaker(&fb, &fa, None, DEFAULT_TOL).unwrap().holds);
    }

    #[test]
    fn hot_ordering(a in 0.2f64..20.0, factor in 1.2f64..10.0) {
        let (fa, fb) = (AdmissibleFunction::hot(a).unwrap(), AdmissibleFunction::hot(a * factor).unwrap());
        prop_assert!(is_weaker(&fb, &fa, None, DEFAULT_TOL).unwrap().holds);
        prop_assert!(is_weaker(&fam("hot:inf"), &fa, None, DEFAULT_TOL).unwrap().holds);
    }

    #[test]
    fn reflexive(k in 0usize..FAMILIES.len()) {
        let f = fam(FAMILIES[k]);
        let r = is_weaker(&f, &f, None, DEFAULT_TOL).unwrap();
        prop_assert!(r.holds && r.worst_violation <= 1e-11, "{:?}", r);
    }

    #[test]
    fn transitive(i in 0usize..FAMILIES.len(), j in 0usize..FAMILIES.len(), k in 0usize..FAMILIES.len()) {
        let (f1, f2, f3) = (fam(FAMILIES[i]), fam(FAMILIES[j]), fam(FAMILIES[k]));
        let a = is_weaker(&f1, &f2, None, DEFAULT_TOL);
        let b = is_weaker(&f2, &f3, None, DEFAULT_TOL);
        if let (Ok(a), Ok(b)) = (a, b) {
            if a.holds && b.holds {
                // an empty common domain is an error, not a verdict
                if let Ok(c) = is_weaker(&f1, &f3, None, 3.0 * DEFAULT_TOL) {
                    prop_assert!(c.holds, "{:?}", c);
                }
            }
        }
    }

    #[test]
    fn alpha_mean_is_monotone_in_alpha(x in 0.01f64..10.0, y in 0.01f64..10.0, l in 0.0f64..1.0, a in -3.0f64..3.0, gap in 0.01f64..2.0) {
        let lo = alpha_mean(x, y, l, a).unwrap();
        let hi = alpha_mean(x, y, l, a + gap).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12));
        prop_assert!(lo >= x.min(y) * (1.0 - 1e-12) && hi <= x.max(y) * (1.0 + 1e-12));
    }

    #[test]
    fn solvers_keep_nonnegative_data_nonnegative(values in prop::collection::vec(0.0f64..1.0, 30), kappa in -1.0f64..0.0) {
        let mut v = values;
        v[0] = 0.0;
        *v.last_mut().unwrap() = 0.0;
        let n = v.len();
        let phi = GridFunction::new(vec![0.0], vec![1.0 / (n - 1) as f64], vec![n], v, true).unwrap();
        for s in dirichlet_cn(&phi, &[0.001, 0.01], None).unwrap() {
            prop_assert!(s.min_before_clamp >= -1e-12 || s.clamped > 0);
            prop_assert!(s.u.values().iter().all(|&x| x >= 0.0));
        }
        for s in semilinear_imex_at(&phi, kappa, 2.0, &[0.01], None).unwrap() {
            prop_assert!(s.u.values().iter().all(|&x| x >= 0.0));
        }
        prop_assert!(heat_line(&phi, 0.01).unwrap().u.values().iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn even_data_give_even_solutions(w in 0.3f64..2.0, t in 0.001f64..0.5) {
        let u = heat_line(&even_bump(241, w), t).unwrap().u;
        let v = u.values();
        let asym = (0..v.len()).map(|i| (v[i] - v[v.len() - 1 - i]).abs()).fold(0.0, f64::max);
        prop_assert!(asym <= 1e-12);
    }

    #[test]
    fn envelope_dominates_and_is_idempotent(values in prop::collection::vec(0.0f64..0.9, 17..40), k in 0usize..4) {
        let f = fam(["phi:0", "phi:-1", "hot:1", "lalpha:0.5"][k]);
        let n = values.len();
        let u = GridFunction::new(vec![0.0], vec![1.0], vec![n], values, true).unwrap();
        let e = f_concave_envelope(&u, &f).unwrap();
        let ee = f_concave_envelope(&e, &f).unwrap();
        for ((a, b), c) in e.values().iter().zip(ee.values()).zip(u.values()) {
            prop_assert!(a + 1e-12 >= *c);
            prop_assert!((a - b).abs() <= 1e-10);
        }
        prop_assert!(check_f_concavity(&e, &f, 1e-9).unwrap().passed);
    }

    #[test]
    fn f_concave_data_are_fixed_and_quasi_concave(k in 0usize..5, top in 0.5f64..0.95, curv in 0.1f64..1.0, x0 in 0.1f64..0.9) {
        let f = fam(["phi:0", "phi:-1", "phi:0.5", "hot:1", "lalpha:0.75"][k]);
        let u = f_concave_instance(&f, top, curv, x0);
        let r = check_f_concavity(&u, &f, 1e-9).unwrap();
        prop_assert!(r.passed, "{:?}", r);
        prop_assert!(check_quasi_concavity(&u, 1e-9).unwrap().passed);
        let e = f_concave_envelope(&u, &f).unwrap();
        let d = e.values().iter().zip(u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(d <= 1e-10, "{}", d);
    }

    #[test]
    fn zero_padded_affine_data_pass(k in 0usize..4, start in 1usize..10, len in 3usize..20, slope in -1.0f64..1.0) {
        let f = fam(["phi:0", "phi:-1", "hot:1", "lalpha:0.5"][k]);
        let n = 32;
        let end = (start + len).min(n - 1);
        let (lo, hi) = f.j();
        let mid = if lo.is_finite() && hi.is_finite() { 0.5 * (lo + hi) } else if hi.is_finite() { hi - 2.0 } else { lo.max(-1.0) + 0.5 };
        let span = 0.2 * (hi - lo).min(4.0);
        let values: Vec<f64> = (0..n)
            .map(|i| {
                if (start..end).contains(&i) {
                    let z = mid + slope * span * ((i - start) as f64 / len as f64 - 0.5);
                    f.inverse(z).unwrap()
                } else {
                    0.0
                }
            })
            .collect();
        let u = GridFunction::new(vec![0.0], vec![1.0], vec![n], values, true).unwrap();
        prop_assert!(check_f_concavity(&u, &f, 1e-9).unwrap().passed);
    }
}

#[test]
fn edge_margin_is_a_domain_error() {
    let f = fam("hot:1");
    assert!(f.eval(1.0 - 0.5 * EDGE_MARGIN).is_err());
    assert!(f.eval(1.0 - 1e-6).is_ok());
}
