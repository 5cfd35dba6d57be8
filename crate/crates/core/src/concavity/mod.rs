//! Discrete concavity checks on grid functions, F-concave envelopes and the
//! disruption experiment.
//!
//! Every check compares a node `m` with two nodes `x`, `y` of the same
//! lattice line such that `m = (1-λ)x + λy`. All midpoint triples along the
//! axis directions (and, in 2D, the diagonal and knight directions) are
//! visited, plus a seeded sample of triples with `λ ∈ {1/4, 1/3, 3/4}`.
//! Violations are measured in the units of `u`:
//!
//! * F-concavity: `M_F(u_x, u_y; λ) - u_m`, with the F-mean
//!   `M_F = f_F((1-λ)F(u_x) + λF(u_y))`; pairs with `u_x u_y = 0` pass;
//! * quasi-concavity: `min(u_x, u_y) - u_m`.

mod disruption;
mod envelope;

pub use disruption::{
    build_disruption_datum, mirrored_snapshot, run_disruption, run_disruption_profile, DisruptionConfig, DisruptionDatum, DisruptionRun,
    DisruptionStep,
};
pub use envelope::f_concave_envelope;

use crate::admissible::AdmissibleFunction;
use crate::error::{Error, Result};
use crate::flow::GridFunction;
use crate::numerics::{ser_f64, Witness};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Default number of random non-midpoint triples per check.
pub const DEFAULT_RANDOM_TRIPLES: usize = 2000;
/// Default seed of the random triples.
pub const DEFAULT_SEED: u64 = 0x5eed;

const DIRS_2D: [(isize, isize); 8] = [(1, 0), (0, 1), (1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1)];
const LAMBDAS: [(isize, isize); 3] = [(1, 4), (1, 3), (3, 4)];

/// Result of a concavity check.
#[derive(Clone, Debug, Serialize)]
pub struct ConcavityReport {
    /// `F:<family>`, `log` or `quasi`.
    pub kind: String,
    pub passed: bool,
    #[serde(serialize_with = "ser_f64")]
    pub worst_violation: f64,
    pub witness: Option<Witness>,
    pub checks: usize,
    pub tol: f64,
}

/// Number and seed of the random triples added to the midpoint sweep.
#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub random_triples: usize,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            random_triples: DEFAULT_RANDOM_TRIPLES,
            seed: DEFAULT_SEED,
        }
    }
}

/// A triple `(x, m, y)` of flat node indices with `m = (1-λ)x + λy`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Triple {
    pub x: usize,
    pub m: usize,
    pub y: usize,
    pub lambda: f64,
}

/// Worst case found by a sweep; ties keep the first triple in sweep order.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Best {
    pub value: f64,
    pub triple: Option<Triple>,
    /// secondary quantities recorded with the best triple
    pub violation: f64,
    pub budget: f64,
}

impl Best {
    fn offer(&mut self, value: f64, t: Triple, violation: f64, budget: f64) {
        if value > self.value {
            *self = Best {
                value,
                triple: Some(t),
                violation,
                budget,
            };
        }
    }

    fn merge(self, later: Best) -> Best {
        if later.value > self.value {
            later
        } else {
            self
        }
    }
}

/// Lattice geometry helpers.
pub(crate) struct Lines {
    shape: Vec<usize>,
}

impl Lines {
    pub(crate) fn new(u: &GridFunction) -> Self {
        Lines {
            shape: u.shape().to_vec(),
        }
    }

    fn dirs(&self) -> Vec<(isize, isize)> {
        if self.shape.len() == 1 {
            vec![(1, 0)]
        } else {
            DIRS_2D.to_vec()
        }
    }

    fn cols(&self) -> isize {
        if self.shape.len() == 1 {
            1
        } else {
            self.shape[1] as isize
        }
    }

    fn rows(&self) -> isize {
        self.shape[0] as isize
    }

    fn flat(&self, i: isize, j: isize) -> Option<usize> {
        if i < 0 || j < 0 || i >= self.rows() || j >= self.cols() {
            None
        } else {
            Some((i * self.cols() + j) as usize)
        }
    }

    /// Visits every midpoint triple centered at flat node `m`.
    fn for_midpoints(&self, m: usize, mut visit: impl FnMut(Triple)) {
        let (i, j) = (m as isize / self.cols(), m as isize % self.cols());
        for (di, dj) in self.dirs() {
            for k in 1.. {
                match (self.flat(i - k * di, j - k * dj), self.flat(i + k * di, j + k * dj)) {
                    (Some(x), Some(y)) => visit(Triple { x, m, y, lambda: 0.5 }),
                    _ => break,
                }
            }
        }
    }

    /// Seeded triples with `λ ∈ {1/4, 1/3, 3/4}` whose combination point is
    /// a node.
    fn random(&self, count: usize, seed: u64) -> Vec<Triple> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dirs = self.dirs();
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count && attempts < 50 * count.max(1) {
            attempts += 1;
            let (di, dj) = dirs[rng.gen_range(0..dirs.len())];
            let (p, q) = LAMBDAS[rng.gen_range(0..LAMBDAS.len())];
            let reach = self.rows().max(self.cols());
            let step = rng.gen_range(1..=(reach / q).max(1));
            let (i, j) = (rng.gen_range(0..self.rows()), rng.gen_range(0..self.cols()));
            let x = self.flat(i, j);
            let m = self.flat(i + p * step * di, j + p * step * dj);
            let y = self.flat(i + q * step * di, j + q * step * dj);
            if let (Some(x), Some(m), Some(y)) = (x, m, y) {
                out.push(Triple {
                    x,
                    m,
                    y,
                    lambda: p as f64 / q as f64,
                });
            }
        }
        out
    }
}

/// Runs `judge` over all midpoint triples and the random sample and returns
/// the largest value, with ties broken by sweep order. `judge` returns
/// `(value, violation, budget)`.
pub(crate) fn sweep(
    u: &GridFunction,
    opts: SweepOptions,
    judge: &(dyn Fn(Triple) -> Option<(f64, f64, f64)> + Sync),
) -> (Best, usize) {
    let lines = Lines::new(u);
    let n = u.len();
    let (best, checks) = (0..n)
        .into_par_iter()
        .map(|m| {
            let mut best = Best::default();
            let mut checks = 0usize;
            lines.for_midpoints(m, |t| {
                checks += 1;
                if let Some((v, viol, bud)) = judge(t) {
                    best.offer(v, t, viol, bud);
                }
            });
            (best, checks)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((Best::default(), 0), |(b, c), (b2, c2)| (b.merge(b2), c + c2));
    let mut best = best;
    let random = lines.random(opts.random_triples, opts.seed);
    for &t in &random {
        if let Some((v, viol, bud)) = judge(t) {
            best.offer(v, t, viol, bud);
        }
    }
    (best, checks + random.len())
}

fn witness(u: &GridFunction, t: Triple) -> Witness {
    Witness::Nodes {
        nodes: [t.x, t.m, t.y],
        x: u.point(t.x),
        m: u.point(t.m),
        y: u.point(t.y),
        lambda: t.lambda,
    }
}

/// `F(u)` at every node (`-∞` where `u = 0`), after checking `max u < a`.
pub(crate) fn f_values(u: &GridFunction, f: &AdmissibleFunction) -> Result<Vec<f64>> {
    let top = u.max();
    if top + 1e-12 >= f.a() {
        return Err(Error::Domain {
            what: "max u",
            value: top,
            domain: format!("[0, {} - 1e-12) required by {f}", f.a()),
        });
    }
    u.values().iter().map(|&v| f.eval(v)).collect()
}

/// `f_F(z)`, falling back to `cap` if `z` sits on the numerical edge of `J_F`.
pub(crate) fn inverse_or(f: &AdmissibleFunction, z: f64, cap: f64) -> f64 {
    f.inverse(z).unwrap_or(cap)
}

/// F-concavity of `u` with violations measured in the units of `u`.
pub fn check_f_concavity(u: &GridFunction, f: &AdmissibleFunction, tol: f64) -> Result<ConcavityReport> {
    check_f_concavity_with(u, f, tol, SweepOptions::default())
}

/// [`check_f_concavity`] with explicit random-triple options.
pub fn check_f_concavity_with(
    u: &GridFunction,
    f: &AdmissibleFunction,
    tol: f64,
    opts: SweepOptions,
) -> Result<ConcavityReport> {
    let z = f_values(u, f)?;
    let vals = u.values();
    let judge = |t: Triple| {
        let (ux, uy) = (vals[t.x], vals[t.y]);
        if ux == 0.0 || uy == 0.0 {
            return None;
        }
        let avg = (1.0 - t.lambda) * z[t.x] + t.lambda * z[t.y];
        if z[t.m] >= avg {
            return None;
        }
        let v = inverse_or(f, avg, ux.max(uy)) - vals[t.m];
        Some((v, v, 0.0))
    };
    let (best, checks) = sweep(u, opts, &judge);
    Ok(ConcavityReport {
        kind: format!("F:{}", f.label()),
        passed: best.value <= tol,
        worst_violation: best.value,
        witness: best.triple.map(|t| witness(u, t)),
        checks,
        tol,
    })
}

/// Log-concavity (`F = log`) of `u`.
pub fn check_log_concavity(u: &GridFunction, tol: f64) -> Result<ConcavityReport> {
    let f = AdmissibleFunction::power(0.0)?;
    let mut r = check_f_concavity(u, &f, tol)?;
    r.kind = "log".into();
    Ok(r)
}

/// Quasi-concavity: `u_m >= min(u_x, u_y) - tol` on every tested triple.
pub fn check_quasi_concavity(u: &GridFunction, tol: f64) -> Result<ConcavityReport> {
    let vals = u.values();
    let judge = |t: Triple| {
        let v = vals[t.x].min(vals[t.y]) - vals[t.m];
        (v > 0.0).then_some((v, v, 0.0))
    };
    let (best, checks) = sweep(u, SweepOptions::default(), &judge);
    Ok(ConcavityReport {
        kind: "quasi".into(),
        passed: best.value <= tol,
        worst_violation: best.value,
        witness: best.triple.map(|t| witness(u, t)),
        checks,
        tol,
    })
}

/// Quasi-concavity sweep that weighs each violation against a per-node
/// error estimate `e`: the budget of a triple is `e_m + max(e_x, e_y)`.
/// Returns the largest ratio violation/budget with its violation and
/// budget.
pub(crate) fn quasi_ratio_sweep(u: &GridFunction, e: &[f64]) -> (f64, f64, f64, Option<Witness>) {
    let vals = u.values();
    let judge = |t: Triple| {
        let v = vals[t.x].min(vals[t.y]) - vals[t.m];
        if v <= 0.0 {
            return None;
        }
        let b = e[t.m] + e[t.x].max(e[t.y]) + 1e-15;
        Some((v / b, v, b))
    };
    let (best, _) = sweep(u, SweepOptions::default(), &judge);
    (best.value, best.violation, best.budget, best.triple.map(|t| witness(u, t)))
}
