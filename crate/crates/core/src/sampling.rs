//! Uniform sampling windows inside the range `J_F` of an admissible function.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Number of nodes in a default window.
pub const DEFAULT_NODES: usize = 401;
/// Infinite ends of `J_F` are replaced by `±J_CAP` before trimming.
pub const J_CAP: f64 = 50.0;
/// Fraction of the span trimmed from each end of a default window.
pub const TRIM: f64 = 0.01;

/// A compact interval `[lo, hi]` sampled at `n` equally spaced nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Window {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::EmptyWindow(format!("[{lo}, {hi}]")));
        }
        if n < 3 {
            return Err(Error::EmptyWindow(format!("{n} nodes; need at least 3")));
        }
        Ok(Window { lo, hi, n })
    }

    /// Default window for an open interval `(j_lo, j_hi)` with possibly
    /// infinite ends: cap at `±50`, then trim 1% of the span from each side.
    pub fn trimmed(j_lo: f64, j_hi: f64, n: usize) -> Result<Self> {
        let lo = j_lo.max(-J_CAP);
        let hi = j_hi.min(J_CAP);
        let span = hi - lo;
        Window::new(lo + TRIM * span, hi - TRIM * span, n)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn with_nodes(self, n: usize) -> Result<Self> {
        Window::new(self.lo, self.hi, n)
    }
}
