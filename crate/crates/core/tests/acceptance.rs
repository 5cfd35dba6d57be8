//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero if any criterion fails.

use concaflow::concavity::{
    check_f_concavity, f_concave_envelope, run_disruption, run_disruption_profile, DisruptionConfig,
};
use concaflow::criterion::{dhf_criterion, plaplace_initial_rate, pm_initial_rate, semilinear_criterion};
use concaflow::flow::{dirichlet_cn, hot_h, hot_h_prime};
use concaflow::hierarchy::{ha_approximant, order_chain, DEFAULT_TOL};
use concaflow::{AdmissibleFunction, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

fn fam(s: &str) -> AdmissibleFunction {
    s.parse().unwrap()
}

/// 10-point Gauss–Legendre nodes and weights on [-1, 1].
const GL10: [(f64, f64); 10] = [
    (-0.973_906_528_517_171_7, 0.066_671_344_308_688_14),
    (-0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (-0.679_409_568_299_024_4, 0.219_086_362_515_982_04),
    (-0.433_395_394_129_247_2, 0.269_266_719_309_996_35),
    (-0.148_874_338_981_631_2, 0.295_524_224_714_752_87),
    (0.148_874_338_981_631_2, 0.295_524_224_714_752_87),
    (0.433_395_394_129_247_2, 0.269_266_719_309_996_35),
    (0.679_409_568_299_024_4, 0.219_086_362_515_982_04),
    (0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (0.973_906_528_517_171_7, 0.066_671_344_308_688_14),
];

/// Composite Gauss–Legendre quadrature of `g` over `[a, b]` with panels of
/// width at most `panel`.
fn quad(a: f64, b: f64, panel: f64, g: impl Fn(f64) -> f64) -> f64 {
    let m = ((b - a) / panel).ceil().max(1.0) as usize;
    let h = (b - a) / m as f64;
    let mut s = 0.0;
    for k in 0..m {
        let mid = a + (k as f64 + 0.5) * h;
        for (x, w) in GL10 {
            s += w * g(mid + 0.5 * h * x);
        }
    }
    0.5 * h * s
}

struct Outcome {
    pass: bool,
    line: String,
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    // oracle: (4π)^{-1/2} ∫_0^60 exp(-(z-w)²/4) dw
    let mut worst = 0.0f64;
    for i in 0..1601 {
        let z = -8.0 + i as f64 * 0.01;
        let oracle = quad(0.0, 60.0, 0.5, |w| (-(z - w) * (z - w) / 4.0).exp()) / (4.0 * PI).sqrt();
        worst = worst.max((hot_h(z) - oracle).abs());
    }
    let h0 = (hot_h(0.0) - 0.5).abs();
    let hp0 = (hot_h_prime(0.0) - 1.0 / (4.0 * PI).sqrt()).abs();
    let pass = worst <= 1e-9 && h0 <= 1e-14 && hp0 <= 1e-12;
    Outcome {
        pass,
        line: format!(
            "hot function vs quadrature: max err {worst:.2e} (<= 1e-9), |h(0)-1/2| = {h0:.1e}, |h'(0)-(4pi)^-1/2| = {hp0:.1e}, {:.2}s",
            start.elapsed().as_secs_f64()
        ),
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    let mut rows = 0;
    let mut check = |s: String, expected: bool| {
        rows += 1;
        let got = dhf_criterion(&fam(&s), None, DEFAULT_TOL).unwrap().preserved;
        if got != expected {
            mismatches.push(s);
        }
    };
    for a in [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0] {
        check(format!("phi:{a}"), a == 0.0);
    }
    for a in [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 2.0] {
        check(format!("lalpha:{a}"), (0.5..=1.0).contains(&a));
    }
    for a in ["0.5", "1", "10", "inf"] {
        check(format!("hot:{a}"), true);
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: mismatches.is_empty() && secs < 5.0,
        line: format!("heat-flow criterion table: {rows} families, mismatches {mismatches:?}, {secs:.2}s (< 5s)"),
    }
}

fn criterion_3() -> Outcome {
    let mut mismatches = Vec::new();
    let mut rows = 0;
    for p in [2.0, 3.0] {
        let mut check = |s: String, kappa: f64, expected: bool| {
            rows += 1;
            let got = semilinear_criterion(&fam(&s), kappa, p, None, DEFAULT_TOL).unwrap().preserved;
            if got != expected {
                mismatches.push(format!("{s} kappa={kappa} p={p}"));
            }
        };
        for a in [-1.0, 0.0, 0.5] {
            check(format!("phi:{a}"), -1.0, a == 0.0);
        }
        for a in [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 2.0] {
            check(format!("lalpha:{a}"), -1.0, (0.5..=1.0).contains(&a));
        }
        for a in ["1", "10"] {
            check(format!("hot:{a}"), -1.0, true);
        }
        for s in ["phi:0", "lalpha:0.5", "lalpha:1", "hot:1", "hot:10"] {
            check(s.to_string(), 1.0, false);
        }
    }
    Outcome {
        pass: mismatches.is_empty(),
        line: format!("semilinear criterion table: {rows} rows, mismatches {mismatches:?}"),
    }
}

/// `h(ψ)` with `ψ = c0 + c1(x-½) + s log(x(1-x)) - q(x-½)²`, an H_1-concave
/// function on `[0, 1]` vanishing at both ends.
fn random_hot_datum(rng: &mut ChaCha8Rng) -> GridFunction {
    let c0 = rng.gen_range(-1.0..2.0);
    let c1 = rng.gen_range(-2.0..2.0);
    let s = rng.gen_range(0.3..1.5);
    let q = rng.gen_range(0.0..3.0);
    GridFunction::from_fn_1d(0.0, 1.0, 513, true, |x| {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let psi = c0 + c1 * (x - 0.5) + s * (x * (1.0 - x)).ln() - q * (x - 0.5) * (x - 0.5);
        hot_h(psi)
    })
    .unwrap()
}

fn criterion_4() -> Outcome {
    let f = fam("hot:1");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..20 {
        let phi = random_hot_datum(&mut rng);
        let snaps = dirichlet_cn(&phi, &[0.01, 0.05, 0.2], Some(1e-4)).unwrap();
        for s in &snaps {
            let r = check_f_concavity(&s.u, &f, 1e-5).unwrap();
            worst = worst.max(r.worst_violation);
            if !r.passed {
                failures += 1;
            }
        }
    }
    // negative control: a two-bump datum is not H_1-concave and must be caught
    let bumps = GridFunction::from_fn_1d(0.0, 1.0, 513, true, |x| {
        0.8 * (-200.0 * (x - 0.3).powi(2)).exp() + 0.8 * (-200.0 * (x - 0.7).powi(2)).exp()
    })
    .unwrap();
    let control = check_f_concavity(&bumps, &f, 1e-5).unwrap();
    Outcome {
        pass: failures == 0 && worst <= 1e-5 && !control.passed,
        line: format!(
            "H_1-concavity along Crank-Nicolson (20 data x 3 times): worst violation {worst:.2e} (<= 1e-5); two-bump control violation {:.2e}",
            control.worst_violation
        ),
    }
}

fn criterion_5() -> Outcome {
    let times = [0.001, 0.01, 0.05];
    let cfg = DisruptionConfig::default();
    let mut parts = Vec::new();
    let mut pass = true;
    for s in ["phi:-1", "lalpha:2"] {
        let f = fam(s);
        let (datum, run) = run_disruption(&f, cfg, &times).unwrap();
        let best = run
            .steps
            .iter()
            .max_by(|a, b| a.certified_ratio.total_cmp(&b.certified_ratio))
            .unwrap();
        pass &= run.disrupted;
        parts.push(format!(
            "{s} (c = {:.3}): best ratio {:.0} at t = {} (violation {:.2e}, budget {:.2e})",
            datum.c, best.certified_ratio, best.t, best.certified_violation, best.certified_budget
        ));
        // control: log-concave profile with the same peak position
        let c = datum.c;
        let control = move |z: f64| (c - z.abs()).exp();
        let run = run_disruption_profile("control", &control, cfg, &times).unwrap();
        let worst = run.steps.iter().map(|s| s.certified_ratio).fold(0.0, f64::max);
        pass &= worst <= 1.0;
        parts.push(format!("control for {s}: max ratio {worst:.2} (<= 1)"));
    }
    Outcome {
        pass,
        line: format!("disruption on 257^2 grid (ratio >= 10): {}", parts.join("; ")),
    }
}

fn random_u(rng: &mut ChaCha8Rng, n: usize, cap: f64) -> GridFunction {
    let values = (0..n)
        .map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.01..cap) })
        .collect();
    GridFunction::new(vec![0.0], vec![1.0 / (n - 1) as f64], vec![n], values, true).unwrap()
}

fn criterion_6() -> Outcome {
    let families = ["phi:0", "phi:-1", "hot:1", "lalpha:0.5", "phi:0.5"];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut idem, mut dom, mut ident, mut oracle) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..100 {
        let f = fam(families[k % families.len()]);
        let cap = 0.9 * f.a().min(1.0);
        let u = random_u(&mut rng, 65, cap);
        let e = f_concave_envelope(&u, &f).unwrap();
        let ee = f_concave_envelope(&e, &f).unwrap();
        for ((a, b), c) in e.values().iter().zip(ee.values()).zip(u.values()) {
            idem = idem.max((a - b).abs());
            dom = dom.max(c - a);
        }
        // F-concave input: f_F of a concave function
        let (lo, hi) = f.j();
        let (lo, hi) = (lo.max(-5.0), hi.min(5.0));
        let top = lo + 0.8 * (hi - lo);
        let curv = rng.gen_range(0.1..2.0);
        let x0 = rng.gen_range(0.2..0.8);
        let v = GridFunction::from_fn_1d(0.0, 1.0, 65, true, |x| {
            f.inverse((top - curv * (x - x0) * (x - x0)).max(lo + 1e-3 * (hi - lo)).min(top)).unwrap()
        })
        .unwrap();
        // clip keeps concavity only if the floor is never active
        if v.values().iter().all(|&y| y > f.inverse(lo + 1e-3 * (hi - lo)).unwrap()) {
            let ev = f_concave_envelope(&v, &f).unwrap();
            for (a, b) in ev.values().iter().zip(v.values()) {
                ident = ident.max((a - b).abs());
            }
        }
    }
    // brute-force sup over pairs (λ fixed by the nodes) in F-space
    for k in 0..10 {
        let f = fam(families[k % families.len()]);
        let u = random_u(&mut rng, 65, 0.9 * f.a().min(1.0));
        let e = f_concave_envelope(&u, &f).unwrap();
        let z: Vec<f64> = u.values().iter().map(|&v| f.eval(v).unwrap()).collect();
        for m in 0..65 {
            let mut best = 0.0f64;
            for i in 0..=m {
                for j in m..65 {
                    if u.values()[i] == 0.0 || u.values()[j] == 0.0 {
                        continue;
                    }
                    let v = if i == j {
                        u.values()[i]
                    } else {
                        let lam = (m - i) as f64 / (j - i) as f64;
                        f.inverse((1.0 - lam) * z[i] + lam * z[j]).unwrap()
                    };
                    best = best.max(v);
                }
            }
            oracle = oracle.max((best - e.values()[m]).abs());
        }
    }
    Outcome {
        pass: idem <= 1e-10 && dom <= 1e-10 && ident <= 1e-10 && oracle <= 1e-8,
        line: format!(
            "F-concave envelope: idempotence {idem:.1e}, domination {dom:.1e}, concave input {ident:.1e} (<= 1e-10), pair oracle {oracle:.1e} (<= 1e-8)"
        ),
    }
}

fn criterion_7() -> Outcome {
    let mut mismatches = Vec::new();
    let mut rows = 0;
    let mut boundary = 0;
    for m in [1.5, 2.0, 3.0] {
        let th = 0.5 * (m - 1.0);
        for a in [-1.0, 0.0, 0.1, 0.5 * th, th, 0.75 * (m - 1.0), m - 1.0] {
            let v = pm_initial_rate(m, a, None, DEFAULT_TOL).unwrap();
            let r = v.rate.as_ref().unwrap();
            rows += 1;
            boundary += usize::from(v.conditions[0].at_boundary);
            // below the threshold the rate must be non-concave
            if v.preserved != r.analytic_concave || (a < th && v.preserved) {
                mismatches.push(format!("pm m={m} a={a}"));
            }
        }
    }
    for p in [3.0, 4.0] {
        let (lo, hi) = ((p - 2.0) / p, (p - 2.0) / (p - 1.0));
        for a in [-1.0, 0.0, 0.1, lo, 0.5 * (lo + hi), hi, 0.9] {
            let v = plaplace_initial_rate(p, a, None, DEFAULT_TOL).unwrap();
            let r = v.rate.as_ref().unwrap();
            rows += 1;
            boundary += usize::from(v.conditions[0].at_boundary);
            let expected = (lo - 1e-12..=hi + 1e-12).contains(&a);
            if v.preserved != r.analytic_concave || v.preserved != expected {
                mismatches.push(format!("p-laplace p={p} a={a}"));
            }
        }
    }
    // closed-form anchor: the rate at m = 2, α = 0 is 4e^z
    let anchor = pm_initial_rate(2.0, 0.0, None, DEFAULT_TOL).unwrap();
    let r = anchor.rate.as_ref().unwrap();
    let anchor_ok = r.exponent.is_none() && (r.coefficient - 4.0).abs() < 1e-12;
    Outcome {
        pass: mismatches.is_empty() && anchor_ok,
        line: format!(
            "initial-rate tables: {rows} rows ({boundary} boundary passes), mismatches {mismatches:?}; m=2, alpha=0 rate {}e^z",
            r.coefficient
        ),
    }
}

fn criterion_8() -> Outcome {
    let fams: Vec<_> = ["lalpha:1", "lalpha:0.75", "hot:1", "lalpha:0.5"].iter().map(|s| fam(s)).collect();
    let chain = order_chain(&fams, DEFAULT_TOL).unwrap();
    let expected = [["hot:1"], ["lalpha:0.5"], ["lalpha:0.75"], ["lalpha:1"]];
    let order_ok = chain.classes.len() == 4 && chain.classes.iter().zip(expected).all(|(c, e)| c == &e);
    let strict = chain.links.iter().all(|l| l.holds && l.strict);
    let shown: Vec<String> = chain.classes.iter().map(|c| c.join("=")).collect();
    Outcome {
        pass: order_ok && strict,
        line: format!("hierarchy chain {} (each link strict: {strict})", shown.join(" > ")),
    }
}

fn criterion_9() -> Outcome {
    let f = GridFunction::from_fn_1d(-2.0, 2.0, 401, true, |x| (-x * x).exp()).unwrap();
    let mut errs = Vec::new();
    let mut oracle_gap = 0.0f64;
    for a in [10.0, 100.0, 1000.0, 10000.0] {
        let (eps, fa) = ha_approximant(a, &f).unwrap();
        // independent route: h_a(z) = ∫_{-∞}^z exp(w - ε²w²/4) dw
        for (i, &v) in fa.values().iter().enumerate().step_by(40) {
            let z = (f.values()[i]).ln();
            let q = quad(z - 60.0, z, 0.25, |w| (w - eps * eps * w * w / 4.0).exp());
            oracle_gap = oracle_gap.max((q - v).abs());
        }
        let err = fa
            .values()
            .iter()
            .zip(f.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        errs.push((a, eps, err));
    }
    let monotone = errs.windows(2).all(|w| w[1].2 < w[0].2);
    let at_1000 = errs[2].2;
    let shown: Vec<String> = errs.iter().map(|(a, e, r)| format!("a={a}: eps={e:.4} err={r:.4}")).collect();
    Outcome {
        pass: monotone && at_1000 <= 0.05 && oracle_gap <= 1e-8,
        line: format!(
            "H_a approximation of exp(-x^2): {}; monotone {monotone}; err(1000) = {at_1000:.4} (<= 0.05); quadrature gap {oracle_gap:.1e}",
            shown.join(", ")
        ),
    }
}

fn main() {
    // (id, check, runtime limit in seconds)
    let criteria: [(&str, fn() -> Outcome, f64); 9] = [
        ("1", criterion_1, 1.0),
        ("2", criterion_2, 5.0),
        ("3", criterion_3, 5.0),
        ("4", criterion_4, 60.0),
        ("5", criterion_5, 120.0),
        ("6", criterion_6, 30.0),
        ("7", criterion_7, 2.0),
        ("8", criterion_8, 5.0),
        ("9", criterion_9, 5.0),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, run, limit) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let pass = o.pass && secs < limit;
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {id}: {} ({secs:.1}s, limit {limit}s)", o.line);
        failed += usize::from(!pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
