//! The least F-concave majorant of a grid function.
//!
//! In F-space this is the upper concave hull of the points `(x_i, F(u_i))`
//! over the nodes with `u_i > 0`; nodes outside the convex hull of that
//! support get 0. In 1D the hull is a monotone chain; in 2D the hull value
//! at each node is the optimum of a three-row linear program
//! `max Σλ_j F(u_j)` subject to `Σλ_j x_j = x`, `Σλ_j = 1`, `λ >= 0`.

use super::{f_values, inverse_or};
use crate::admissible::AdmissibleFunction;
use crate::error::{Error, Result};
use crate::flow::GridFunction;
use rayon::prelude::*;

/// The F-concave envelope of `u`.
pub fn f_concave_envelope(u: &GridFunction, f: &AdmissibleFunction) -> Result<GridFunction> {
    let z = f_values(u, f)?;
    let top = u.max();
    let hull = if u.dims() == 1 {
        upper_hull_1d(&z)
    } else {
        let (nx, ny) = (u.shape()[0], u.shape()[1]);
        upper_hull_2d(&z, nx, ny)?
    };
    let values = hull
        .iter()
        .zip(u.values())
        .map(|(&h, &orig)| {
            if h == f64::NEG_INFINITY {
                0.0
            } else {
                // never below the data, never above its maximum
                inverse_or(f, h, top).clamp(orig, top)
            }
        })
        .collect();
    Ok(u.with_values(values))
}

/// Upper concave hull of `(i, z_i)` over finite `z_i`, evaluated at every
/// node (`-∞` outside the first/last finite node).
fn upper_hull_1d(z: &[f64]) -> Vec<f64> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in z.iter().enumerate() {
        if v == f64::NEG_INFINITY {
            continue;
        }
        let p = (i as f64, v);
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = vec![f64::NEG_INFINITY; z.len()];
    for seg in hull.windows(2) {
        let ((x0, y0), (x1, y1)) = (seg[0], seg[1]);
        for i in x0 as usize..x1 as usize {
            let t = (i as f64 - x0) / (x1 - x0);
            out[i] = if i as f64 == x0 { y0 } else { y0 + t * (y1 - y0) };
        }
    }
    if let Some(&(x, y)) = hull.last() {
        out[x as usize] = y;
    }
    out
}

fn upper_hull_2d(z: &[f64], nx: usize, ny: usize) -> Result<Vec<f64>> {
    let pts: Vec<(f64, f64, f64)> = z
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > f64::NEG_INFINITY)
        .map(|(k, &v)| ((k / ny) as f64, (k % ny) as f64, v))
        .collect();
    if pts.is_empty() {
        return Ok(vec![f64::NEG_INFINITY; z.len()]);
    }
    let scale = pts.iter().fold(1.0f64, |m, p| m.max(p.2.abs()));
    (0..nx * ny)
        .into_par_iter()
        .map(|k| hull_lp(&pts, (k / ny) as f64, (k % ny) as f64, scale))
        .collect()
}

/// Two-phase revised simplex for `max Σλ_j y_j` with the three equality
/// rows `Σλ_j (a_j, b_j, 1) = (p, q, 1)`. Returns `-∞` if infeasible.
fn hull_lp(pts: &[(f64, f64, f64)], p: f64, q: f64, scale: f64) -> Result<f64> {
    let n = pts.len();
    let col = |j: usize| -> [f64; 3] {
        if j < n {
            [pts[j].0, pts[j].1, 1.0]
        } else {
            let mut e = [0.0; 3];
            e[j - n] = 1.0;
            e
        }
    };
    let mut basis = [n, n + 1, n + 2];
    let mut binv = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut xb = [p, q, 1.0];
    let mul = |binv: &[[f64; 3]; 3], a: [f64; 3]| -> [f64; 3] {
        let mut w = [0.0; 3];
        for r in 0..3 {
            w[r] = binv[r][0] * a[0] + binv[r][1] * a[1] + binv[r][2] * a[2];
        }
        w
    };
    let max_iter = 50 * (n + 3);
    for phase in 1..=2 {
        let cost = |j: usize| -> f64 {
            match (phase, j < n) {
                (1, true) => 0.0,
                (1, false) => -1.0,
                (_, true) => pts[j].2,
                (_, false) => 0.0,
            }
        };
        let eps = if phase == 1 { 1e-12 } else { 1e-12 * scale };
        let mut degenerate_run = 0;
        let mut iter = 0;
        loop {
            iter += 1;
            if iter > max_iter {
                return Err(Error::Resolution("envelope linear program did not converge".into()));
            }
            let cb = [cost(basis[0]), cost(basis[1]), cost(basis[2])];
            let pi = [
                cb[0] * binv[0][0] + cb[1] * binv[1][0] + cb[2] * binv[2][0],
                cb[0] * binv[0][1] + cb[1] * binv[1][1] + cb[2] * binv[2][1],
                cb[0] * binv[0][2] + cb[1] * binv[1][2] + cb[2] * binv[2][2],
            ];
            let bland = degenerate_run > 20;
            let mut enter = None;
            let mut best = eps;
            for j in 0..n {
                if basis.contains(&j) {
                    continue;
                }
                let a = col(j);
                let d = cost(j) - (pi[0] * a[0] + pi[1] * a[1] + pi[2] * a[2]);
                if d > best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(j) = enter else { break };
            let w = mul(&binv, col(j));
            let mut leave = None;
            let mut ratio = f64::INFINITY;
            for r in 0..3 {
                if w[r] > 1e-12 {
                    let t = xb[r] / w[r];
                    if t < ratio - 1e-15 || (bland && (t - ratio).abs() <= 1e-15 && leave.is_some_and(|l: usize| basis[r] < basis[l])) {
                        ratio = t;
                        leave = Some(r);
                    }
                }
            }
            let Some(r) = leave else {
                return Err(Error::Resolution("envelope linear program is unbounded".into()));
            };
            degenerate_run = if ratio <= 1e-15 { degenerate_run + 1 } else { 0 };
            pivot(&mut binv, &mut xb, &w, r);
            basis[r] = j;
        }
        if phase == 1 {
            let infeas: f64 = (0..3).filter(|&r| basis[r] >= n).map(|r| xb[r]).sum();
            if infeas > 1e-9 {
                return Ok(f64::NEG_INFINITY);
            }
            // drive zero-level artificials out where possible
            for r in 0..3 {
                if basis[r] < n {
                    continue;
                }
                if let Some(j) = (0..n).find(|&j| !basis.contains(&j) && mul(&binv, col(j))[r].abs() > 1e-9) {
                    let w = mul(&binv, col(j));
                    pivot(&mut binv, &mut xb, &w, r);
                    basis[r] = j;
                }
            }
        }
    }
    Ok((0..3).filter(|&r| basis[r] < n).map(|r| pts[basis[r]].2 * xb[r]).sum())
}

fn pivot(binv: &mut [[f64; 3]; 3], xb: &mut [f64; 3], w: &[f64; 3], r: usize) {
    let piv = w[r];
    for c in 0..3 {
        binv[r][c] /= piv;
    }
    xb[r] /= piv;
    for i in 0..3 {
        if i != r && w[i] != 0.0 {
            let m = w[i];
            for c in 0..3 {
                binv[i][c] -= m * binv[r][c];
            }
            xb[i] -= m * xb[r];
        }
    }
    for v in xb.iter_mut() {
        if *v < 0.0 && *v > -1e-13 {
            *v = 0.0;
        }
    }
}
