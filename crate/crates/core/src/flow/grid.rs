use crate::error::{invalid, Error, Result};
use std::fmt::Write as _;

/// Nonnegative samples on a uniform 1D or 2D tensor grid.
///
/// Values are stored row-major with the first axis slowest. Outside the grid
/// the function is either zero (`zero_outside`) or extended by holding the
/// nearest edge value.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    origin: Vec<f64>,
    spacing: Vec<f64>,
    shape: Vec<usize>,
    values: Vec<f64>,
    pub zero_outside: bool,
}

impl GridFunction {
    pub fn new(
        origin: Vec<f64>,
        spacing: Vec<f64>,
        shape: Vec<usize>,
        values: Vec<f64>,
        zero_outside: bool,
    ) -> Result<Self> {
        let d = shape.len();
        if !(d == 1 || d == 2) || origin.len() != d || spacing.len() != d {
            return Err(Error::DegenerateGrid(format!(
                "need 1 or 2 dimensions with matching origin/spacing, got shape {shape:?}"
            )));
        }
        if shape.iter().any(|&n| n < 2) {
            return Err(Error::DegenerateGrid(format!("shape {shape:?} has an axis with < 2 nodes")));
        }
        if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) || origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::DegenerateGrid(format!("bad origin {origin:?} or spacing {spacing:?}")));
        }
        if values.len() != shape.iter().product::<usize>() {
            return Err(Error::DegenerateGrid(format!(
                "{} values for shape {shape:?}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return invalid(format!("grid values must be finite and nonnegative, found {v}"));
        }
        Ok(GridFunction {
            origin,
            spacing,
            shape,
            values,
            zero_outside,
        })
    }

    /// Samples `f` at `n` nodes spanning `[lo, hi]`.
    pub fn from_fn_1d(lo: f64, hi: f64, n: usize, zero_outside: bool, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::DegenerateGrid(format!("[{lo}, {hi}] with {n} nodes")));
        }
        let h = (hi - lo) / (n - 1) as f64;
        let values = (0..n).map(|i| f(lo + i as f64 * h)).collect();
        Self::new(vec![lo], vec![h], vec![n], values, zero_outside)
    }

    /// Samples `f` on the tensor grid `[x0, x1] × [y0, y1]` with `nx × ny` nodes.
    pub fn from_fn_2d(
        x: (f64, f64, usize),
        y: (f64, f64, usize),
        zero_outside: bool,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        if x.2 < 2 || y.2 < 2 || !(x.1 > x.0) || !(y.1 > y.0) {
            return Err(Error::DegenerateGrid(format!("axes {x:?} × {y:?}")));
        }
        let hx = (x.1 - x.0) / (x.2 - 1) as f64;
        let hy = (y.1 - y.0) / (y.2 - 1) as f64;
        let mut values = Vec::with_capacity(x.2 * y.2);
        for i in 0..x.2 {
            for j in 0..y.2 {
                values.push(f(x.0 + i as f64 * hx, y.0 + j as f64 * hy));
            }
        }
        Self::new(vec![x.0, y.0], vec![hx, hy], vec![x.2, y.2], values, zero_outside)
    }

    /// Constructor for solver output that is already known to be valid.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        GridFunction {
            values,
            ..self.clone()
        }
    }

    pub fn dims(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Coordinate of node `i` along `axis`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + i as f64 * self.spacing[axis]
    }

    /// Coordinates of all nodes along `axis`.
    pub fn axis(&self, axis: usize) -> Vec<f64> {
        (0..self.shape[axis]).map(|i| self.coord(axis, i)).collect()
    }

    /// Coordinates of the node with flat index `k`.
    pub fn point(&self, k: usize) -> Vec<f64> {
        if self.dims() == 1 {
            vec![self.coord(0, k)]
        } else {
            let ny = self.shape[1];
            vec![self.coord(0, k / ny), self.coord(1, k % ny)]
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Value at (possibly out-of-range) 1D index `i`, honouring the extension.
    pub fn extended_1d(&self, i: isize) -> f64 {
        let n = self.shape[0] as isize;
        if (0..n).contains(&i) {
            self.values[i as usize]
        } else if self.zero_outside {
            0.0
        } else {
            self.values[i.clamp(0, n - 1) as usize]
        }
    }

    /// Text form: four header lines (`dims`, `origin`, `spacing`, `shape`)
    /// followed by the values, one grid row per line (a 1D grid is written
    /// as a single column).
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(" ");
        let mut s = String::new();
        let ext = if self.zero_outside { "zero" } else { "hold" };
        let _ = writeln!(s, "dims {} extend={ext}", self.dims());
        let _ = writeln!(s, "origin {}", join(self.origin.iter().map(|v| format!("{v:e}")).collect()));
        let _ = writeln!(s, "spacing {}", join(self.spacing.iter().map(|v| format!("{v:e}")).collect()));
        let _ = writeln!(s, "shape {}", join(self.shape.iter().map(|v| v.to_string()).collect()));
        let cols = if self.dims() == 1 { 1 } else { self.shape[1] };
        for row in self.values.chunks(cols) {
            let _ = writeln!(s, "{}", join(row.iter().map(|v| format!("{v:e}")).collect()));
        }
        s
    }

    /// Parses the format written by [`GridFunction::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let mut header = |key: &str| -> Result<Vec<String>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing `{key}` header line")))?;
            let mut it = line.split_whitespace();
            if it.next() != Some(key) {
                return Err(Error::Parse(format!("expected `{key}` header, got {line:?}")));
            }
            Ok(it.map(str::to_string).collect())
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")));
        let dims_line = header("dims")?;
        let dims: usize = dims_line
            .first()
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| Error::Parse("bad `dims` value".into()))?;
        let zero_outside = !dims_line.iter().any(|t| t == "extend=hold");
        let origin = header("origin")?.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
        let spacing = header("spacing")?.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
        let shape = header("shape")?
            .iter()
            .map(|s| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad shape entry {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if shape.len() != dims {
            return Err(Error::Parse(format!("dims {dims} but shape {shape:?}")));
        }
        let values = lines
            .flat_map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>())
            .map(|s| num(&s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(origin, spacing, shape, values, zero_outside)
    }
}
