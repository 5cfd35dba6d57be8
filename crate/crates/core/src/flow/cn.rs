use super::{clamp_negative, FlowSnapshot, GridFunction, Solver};
use crate::error::{invalid, Error, Result};

/// Largest boundary value accepted as "vanishing on the boundary".
pub(crate) const BOUNDARY_TOL: f64 = 1e-12;

/// Crank–Nicolson (1D) or Peaceman–Rachford ADI (2D) for `u_t = Δu` on the
/// grid's box with `u = 0` on its boundary. Snapshots are returned at each
/// time in `t_list`; steps are shortened so that every listed time is hit
/// exactly. The default step is `min(dx, 0.01 max t)`.
pub fn dirichlet_cn(phi: &GridFunction, t_list: &[f64], dt: Option<f64>) -> Result<Vec<FlowSnapshot>> {
    let stepper = DiffusionStepper::new(phi)?;
    let plan = schedule(phi, t_list, dt)?;
    let mut u = phi.values().to_vec();
    stepper.zero_boundary(&mut u);
    let mut out = Vec::with_capacity(t_list.len());
    for (&t, &(steps, h)) in t_list.iter().zip(&plan) {
        for _ in 0..steps {
            stepper.step(&mut u, h);
        }
        let mut v = u.clone();
        let (clamped, min_before_clamp) = clamp_negative(&mut v);
        out.push(FlowSnapshot {
            t,
            u: phi.with_values(v),
            solver: stepper.solver(),
            clamped,
            min_before_clamp,
        });
    }
    Ok(out)
}

/// Number of steps and step length for each interval between listed times.
pub(crate) fn schedule(phi: &GridFunction, t_list: &[f64], dt: Option<f64>) -> Result<Vec<(usize, f64)>> {
    let t_max = match t_list.last() {
        Some(&t) => t,
        None => return invalid("empty time list"),
    };
    if t_list.iter().any(|t| !(t.is_finite() && *t > 0.0)) || t_list.windows(2).any(|w| w[1] <= w[0]) {
        return invalid(format!("times must be positive and increasing, got {t_list:?}"));
    }
    let dx = phi.spacing().iter().copied().fold(f64::INFINITY, f64::min);
    let dt = dt.unwrap_or(dx.min(0.01 * t_max));
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid(format!("time step must be positive, got {dt}"));
    }
    let mut prev = 0.0;
    Ok(t_list
        .iter()
        .map(|&t| {
            let span = t - prev;
            prev = t;
            let steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
            (steps, span / steps as f64)
        })
        .collect())
}

/// One Crank–Nicolson / ADI step of the Dirichlet heat equation.
pub(crate) struct DiffusionStepper {
    shape: Vec<usize>,
    spacing: Vec<f64>,
}

impl DiffusionStepper {
    pub(crate) fn new(phi: &GridFunction) -> Result<Self> {
        let s = DiffusionStepper {
            shape: phi.shape().to_vec(),
            spacing: phi.spacing().to_vec(),
        };
        if s.shape.iter().any(|&n| n < 3) {
            return Err(Error::DegenerateGrid("need at least one interior node per axis".into()));
        }
        let worst = s.boundary_indices().map(|k| phi.values()[k]).fold(0.0, f64::max);
        if worst > BOUNDARY_TOL {
            return Err(Error::BoundaryNonzero(worst));
        }
        Ok(s)
    }

    pub(crate) fn solver(&self) -> Solver {
        if self.shape.len() == 1 {
            Solver::CrankNicolson
        } else {
            Solver::PeacemanRachford
        }
    }

    fn boundary_indices(&self) -> Box<dyn Iterator<Item = usize> + '_> {
        if self.shape.len() == 1 {
            Box::new([0, self.shape[0] - 1].into_iter())
        } else {
            let (nx, ny) = (self.shape[0], self.shape[1]);
            Box::new((0..nx * ny).filter(move |k| {
                let (i, j) = (k / ny, k % ny);
                i == 0 || j == 0 || i == nx - 1 || j == ny - 1
            }))
        }
    }

    pub(crate) fn zero_boundary(&self, u: &mut [f64]) {
        let idx: Vec<usize> = self.boundary_indices().collect();
        for k in idx {
            u[k] = 0.0;
        }
    }

    pub(crate) fn step(&self, u: &mut [f64], h: f64) {
        if self.shape.len() == 1 {
            let r = h / (self.spacing[0] * self.spacing[0]);
            let n = self.shape[0];
            let mut rhs: Vec<f64> = (1..n - 1)
                .map(|i| u[i] + 0.5 * r * (u[i - 1] - 2.0 * u[i] + u[i + 1]))
                .collect();
            thomas(-0.5 * r, 1.0 + r, &mut rhs);
            u[1..n - 1].copy_from_slice(&rhs);
        } else {
            let (nx, ny) = (self.shape[0], self.shape[1]);
            let rx = h / (self.spacing[0] * self.spacing[0]);
            let ry = h / (self.spacing[1] * self.spacing[1]);
            let at = |i: usize, j: usize| i * ny + j;
            // implicit in x, explicit in y
            let mut half = vec![0.0; nx * ny];
            let mut line = vec![0.0; nx - 2];
            for j in 1..ny - 1 {
                for i in 1..nx - 1 {
                    let c = u[at(i, j)];
                    line[i - 1] = c + 0.5 * ry * (u[at(i, j - 1)] - 2.0 * c + u[at(i, j + 1)]);
                }
                thomas(-0.5 * rx, 1.0 + rx, &mut line);
                for i in 1..nx - 1 {
                    half[at(i, j)] = line[i - 1];
                }
            }
            // implicit in y, explicit in x
            let mut line = vec![0.0; ny - 2];
            for i in 1..nx - 1 {
                for j in 1..ny - 1 {
                    let c = half[at(i, j)];
                    line[j - 1] = c + 0.5 * rx * (half[at(i - 1, j)] - 2.0 * c + half[at(i + 1, j)]);
                }
                thomas(-0.5 * ry, 1.0 + ry, &mut line);
                for j in 1..ny - 1 {
                    u[at(i, j)] = line[j - 1];
                }
            }
        }
    }
}

/// Solves the constant tridiagonal system `off·x_{i-1} + diag·x_i +
/// off·x_{i+1} = rhs_i` in place.
fn thomas(off: f64, diag: f64, rhs: &mut [f64]) {
    let n = rhs.len();
    if n == 0 {
        return;
    }
    let mut c = vec![0.0; n];
    c[0] = off / diag;
    rhs[0] /= diag;
    for i in 1..n {
        let m = diag - off * c[i - 1];
        c[i] = off / m;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}
