use super::cn::{schedule, DiffusionStepper};
use super::{clamp_negative, FlowSnapshot, GridFunction, Solver};
use crate::error::{invalid, Error, Result};

/// Solution `z(t) = m (1 - κ(p-1) t m^{p-1})^{-1/(p-1)}` of `z' = κ z^p`,
/// `z(0) = m`, which bounds `‖u(t)‖_∞` for the semilinear equation.
pub fn comparison_bound(m: f64, kappa: f64, p: f64, t: f64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    let base = 1.0 - kappa * (p - 1.0) * t * m.powf(p - 1.0);
    if base <= 0.0 {
        f64::INFINITY
    } else {
        m * base.powf(-1.0 / (p - 1.0))
    }
}

/// `u_t = Δu + κ|u|^{p-1}u` with zero Dirichlet data, snapshots at
/// `T/10, 2T/10, …, T`. See [`semilinear_imex_at`].
pub fn semilinear_imex(phi: &GridFunction, kappa: f64, p: f64, t_final: f64, dt: f64) -> Result<Vec<FlowSnapshot>> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return invalid(format!("final time must be positive, got {t_final}"));
    }
    let times: Vec<f64> = (1..=10).map(|k| t_final * k as f64 / 10.0).collect();
    semilinear_imex_at(phi, kappa, p, &times, Some(dt))
}

/// Each step applies the reaction explicitly and then one Crank–Nicolson
/// (1D) or ADI (2D) diffusion step, so `κ = 0` reproduces
/// [`super::dirichlet_cn`] exactly. For `κ > 0` the run is refused when it
/// would reach the ODE blow-up time `‖φ‖^{-(p-1)} / (κ(p-1))`, and aborted
/// if the solution exceeds twice the comparison bound.
pub fn semilinear_imex_at(
    phi: &GridFunction,
    kappa: f64,
    p: f64,
    t_list: &[f64],
    dt: Option<f64>,
) -> Result<Vec<FlowSnapshot>> {
    if !(p > 1.0 && p.is_finite()) || !kappa.is_finite() {
        return invalid(format!("need p > 1 and finite κ, got p = {p}, κ = {kappa}"));
    }
    let stepper = DiffusionStepper::new(phi)?;
    let plan = schedule(phi, t_list, dt)?;
    let norm = phi.max();
    if kappa > 0.0 && norm > 0.0 {
        let guard = norm.powf(1.0 - p) / (kappa * (p - 1.0));
        let t_max = *t_list.last().unwrap();
        if t_max >= guard {
            return Err(Error::BlowUpGuard { t: t_max, guard });
        }
    }
    let mut u = phi.values().to_vec();
    stepper.zero_boundary(&mut u);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(t_list.len());
    for (&t_target, &(steps, h)) in t_list.iter().zip(&plan) {
        for _ in 0..steps {
            if kappa != 0.0 {
                for v in u.iter_mut() {
                    *v += h * kappa * v.abs().powf(p - 1.0) * *v;
                }
            }
            stepper.step(&mut u, h);
            t += h;
            let bound = comparison_bound(norm, kappa, p, t);
            let top = u.iter().copied().fold(0.0, f64::max);
            if top > 2.0 * bound || !top.is_finite() {
                return Err(Error::Instability {
                    t,
                    detail: format!("max u = {top:e} exceeds twice the comparison bound {bound:e}"),
                });
            }
        }
        let mut v = u.clone();
        let (clamped, min_before_clamp) = clamp_negative(&mut v);
        out.push(FlowSnapshot {
            t: t_target,
            u: phi.with_values(v),
            solver: Solver::Imex,
            clamped,
            min_before_clamp,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::dirichlet_cn;
    use std::f64::consts::PI;

    fn sine() -> GridFunction {
        GridFunction::from_fn_1d(0.0, 1.0, 129, true, |x| (PI * x).sin()).unwrap()
    }

    #[test]
    fn zero_reaction_matches_crank_nicolson() {
        let phi = sine();
        let a = semilinear_imex(&phi, 0.0, 2.0, 0.1, 1e-3).unwrap();
        let times: Vec<f64> = a.iter().map(|s| s.t).collect();
        let b = dirichlet_cn(&phi, &times, Some(1e-3)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for (u, v) in x.u.values().iter().zip(y.u.values()) {
                assert!((u - v).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn absorption_stays_below_the_linear_decay() {
        let phi = sine();
        for s in semilinear_imex(&phi, -1.0, 2.0, 0.5, 1e-3).unwrap() {
            assert!(s.u.max() <= (-s.t).exp() + 1e-12);
            assert!(s.u.max() <= comparison_bound(1.0, -1.0, 2.0, s.t) + 1e-6);
        }
    }

    #[test]
    fn blow_up_guard() {
        let phi = sine();
        // guard = 1 / (κ (p-1)) = 0.5
        assert!(matches!(semilinear_imex(&phi, 2.0, 2.0, 0.6, 1e-3), Err(Error::BlowUpGuard { .. })));
        assert!(semilinear_imex(&phi, 1.0, 1.0, 0.1, 1e-3).is_err());
    }

    #[test]
    fn plateau_tracks_the_ode() {
        // a wide flat datum: the center follows z' = κ z^p for short times
        let phi = GridFunction::from_fn_1d(0.0, 20.0, 2001, true, |x| {
            let s = (x.min(20.0 - x) / 2.0).min(1.0);
            (0.5 * PI * s).sin().powi(2)
        })
        .unwrap();
        let snaps = semilinear_imex(&phi, 1.0, 2.0, 0.5, 2e-4).unwrap();
        let last = snaps.last().unwrap();
        let center = last.u.values()[1000];
        let z = comparison_bound(1.0, 1.0, 2.0, 0.5);
        assert!((center - z).abs() < 1e-3, "{center} vs {z}");
        assert!(last.u.max() <= z + 1e-6);
    }

    #[test]
    fn bound_formula() {
        assert_eq!(comparison_bound(2.0, 0.0, 3.0, 1.0), 2.0);
        assert!((comparison_bound(1.0, 1.0, 2.0, 0.5) - 2.0).abs() < 1e-15);
        assert_eq!(comparison_bound(1.0, 1.0, 2.0, 1.0), f64::INFINITY);
    }
}
