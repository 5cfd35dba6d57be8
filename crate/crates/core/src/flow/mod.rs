//! Grid functions and solvers for the heat and semilinear heat equations.

mod cn;
mod grid;
mod heat;
pub mod hot;
mod semilinear;

pub use cn::dirichlet_cn;
pub use grid::GridFunction;
pub use heat::{heat_kernel_radius, heat_line, product_flow_2d};
pub use hot::{hot_h, hot_h_prime, hot_h_second, hot_inverse};
pub use semilinear::{comparison_bound, semilinear_imex, semilinear_imex_at};

use serde::Serialize;

/// Which scheme produced a snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Trapezoid convolution with the Gaussian kernel on the line.
    Convolution,
    /// Crank–Nicolson with homogeneous Dirichlet data (1D).
    CrankNicolson,
    /// Peaceman–Rachford ADI with homogeneous Dirichlet data (2D).
    PeacemanRachford,
    /// Explicit reaction followed by a Crank–Nicolson/ADI diffusion step.
    Imex,
}

/// The solution at time `t`.
#[derive(Clone, Debug)]
pub struct FlowSnapshot {
    pub t: f64,
    pub u: GridFunction,
    pub solver: Solver,
    /// Number of slightly negative values that were clamped to zero.
    pub clamped: usize,
    /// Most negative value seen before clamping (0 if none).
    pub min_before_clamp: f64,
}

/// Clamps negative round-off to zero, returning `(count, minimum)`.
pub(crate) fn clamp_negative(values: &mut [f64]) -> (usize, f64) {
    let mut count = 0;
    let mut min = 0.0f64;
    for v in values.iter_mut() {
        if *v < 0.0 {
            min = min.min(*v);
            *v = 0.0;
            count += 1;
        }
    }
    (count, min)
}
