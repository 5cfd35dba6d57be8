use super::{FlowSnapshot, GridFunction, Solver};
use crate::error::{invalid, Error, Result};
use std::f64::consts::PI;

/// Radius beyond which the heat kernel at time `t` is below `1e-16` of its
/// peak: `2 sqrt(t ln 1e16)`.
pub fn heat_kernel_radius(t: f64) -> f64 {
    2.0 * (t * 1e16f64.ln()).sqrt()
}

/// Solution of `u_t = u_xx` on the line at time `t`, by trapezoid
/// convolution of the (extended) samples with the Gaussian kernel.
pub fn heat_line(phi: &GridFunction, t: f64) -> Result<FlowSnapshot> {
    if phi.dims() != 1 {
        return invalid("heat_line needs a 1D grid function");
    }
    if !(t > 0.0 && t.is_finite()) {
        return invalid(format!("time must be positive, got {t}"));
    }
    let n = phi.shape()[0];
    let dx = phi.spacing()[0];
    let radius = heat_kernel_radius(t);
    let length = (n - 1) as f64 * dx;
    if 2.0 * radius > 10.0 * length {
        return Err(Error::Resolution(format!(
            "kernel support {:.3e} exceeds ten grid lengths ({length:.3e})",
            2.0 * radius
        )));
    }
    let r = (radius / dx).ceil() as isize;
    let norm = dx / (4.0 * PI * t).sqrt();
    let kernel: Vec<f64> = (0..=r)
        .map(|k| {
            let x = k as f64 * dx;
            norm * (-x * x / (4.0 * t)).exp()
        })
        .collect();
    let mass = kernel[0] + 2.0 * kernel[1..].iter().sum::<f64>();
    if mass > 1.0 + 1e-8 {
        return Err(Error::Resolution(format!(
            "discrete kernel mass {mass} exceeds 1; the grid spacing {dx:e} does not resolve t = {t:e}"
        )));
    }
    let values = (0..n as isize)
        .map(|i| {
            let mut acc = kernel[0] * phi.extended_1d(i);
            for k in 1..=r {
                acc += kernel[k as usize] * (phi.extended_1d(i - k) + phi.extended_1d(i + k));
            }
            acc.max(0.0)
        })
        .collect();
    Ok(FlowSnapshot {
        t,
        u: phi.with_values(values),
        solver: Solver::Convolution,
        clamped: 0,
        min_before_clamp: 0.0,
    })
}

/// Heat flow of a product datum `φ1(x) φ2(y)` in the plane: the outer product
/// of the two line evolutions.
pub fn product_flow_2d(phi1: &GridFunction, phi2: &GridFunction, t: f64) -> Result<FlowSnapshot> {
    let a = heat_line(phi1, t)?;
    let b = heat_line(phi2, t)?;
    let (ua, ub) = (a.u.values(), b.u.values());
    let mut values = Vec::with_capacity(ua.len() * ub.len());
    for &x in ua {
        values.extend(ub.iter().map(|&y| x * y));
    }
    let u = GridFunction::new(
        vec![phi1.origin()[0], phi2.origin()[0]],
        vec![phi1.spacing()[0], phi2.spacing()[0]],
        vec![ua.len(), ub.len()],
        values,
        phi1.zero_outside || phi2.zero_outside,
    )?;
    Ok(FlowSnapshot {
        t,
        u,
        solver: Solver::Convolution,
        clamped: 0,
        min_before_clamp: 0.0,
    })
}
