//! Declarative experiments and their JSON reports.
//!
//! An [`ExperimentSpec`] is a flat TOML document (one experiment per file)
//! naming a command and its parameters; [`run`] executes it and returns a
//! [`Report`]. When an output directory is given, grids (`*.grid`, the
//! [`GridFunction`] text format), plot data (`*.dat`, whitespace-separated
//! columns) and `manifest.json` are written there.
//!
//! ```toml
//! command = "criterion"
//! family = "lalpha:0.25"
//! semilinear = true
//! kappa = 0.0
//! p = 2.0
//!
//! [expect]
//! preserved = false
//! ```

use crate::admissible::AdmissibleFunction;
use crate::concavity::{
    build_disruption_datum, check_f_concavity, check_log_concavity, check_quasi_concavity, f_concave_envelope,
    mirrored_snapshot, quasi_ratio_sweep, run_disruption_profile, ConcavityReport, DisruptionConfig,
};
use crate::criterion::{dhf_criterion, plaplace_initial_rate, pm_initial_rate, semilinear_criterion, CriterionVerdict};
use crate::error::{invalid, Error, Result};
use crate::flow::{dirichlet_cn, heat_line, hot_h, product_flow_2d, semilinear_imex_at, GridFunction};
use crate::hierarchy::{composition_window, order_chain, DEFAULT_TOL};
use crate::sampling::DEFAULT_NODES;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Version of the report layout; bumped on incompatible changes.
pub const SCHEMA_VERSION: u32 = 1;
/// Smallest accepted node count per axis.
pub const MIN_GRID: usize = 16;

/// Experiment kinds, one per CLI subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Criterion,
    Hierarchy,
    Evolve,
    Disrupt,
    Envelope,
    Rates,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Criterion => "criterion",
            Command::Hierarchy => "hierarchy",
            Command::Evolve => "evolve",
            Command::Disrupt => "disrupt",
            Command::Envelope => "envelope",
            Command::Rates => "rates",
        }
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "criterion" => Command::Criterion,
            "hierarchy" => Command::Hierarchy,
            "evolve" => Command::Evolve,
            "disrupt" => Command::Disrupt,
            "envelope" => Command::Envelope,
            "rates" => Command::Rates,
            _ => return Err(Error::Parse(format!("unknown command {s:?}"))),
        })
    }
}

/// Expected outcomes. Each present key becomes one checked expectation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Expect {
    /// `criterion`, `rates`: every verdict has this `preserved` value.
    pub preserved: Option<bool>,
    /// `hierarchy`: classes from strongest to weakest, equivalent families
    /// joined by `=`.
    pub order: Option<Vec<String>>,
    /// `evolve`, `envelope`: every concavity check passed.
    pub passed: Option<bool>,
    /// `disrupt`: a certified disruption was found.
    pub disrupted: Option<bool>,
    /// `rates`: numeric and closed-form verdicts agree on every row.
    pub agree: Option<bool>,
}

impl Expect {
    fn is_empty(&self) -> bool {
        *self == Expect::default()
    }
}

/// One experiment. Unused keys are ignored by commands that do not need
/// them; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: Option<Command>,
    pub name: String,
    /// Family in the `phi:`/`lalpha:`/`hot:`/`table:` grammar.
    pub family: Option<String>,
    /// Family list for `hierarchy`.
    pub families: Vec<String>,
    /// `criterion`: use the semilinear criterion with `kappa`, `p`.
    pub semilinear: bool,
    pub kappa: Option<f64>,
    /// Semilinear exponent, or the p-Laplace exponent for `rates`.
    pub p: Option<f64>,
    /// Porous-medium exponent for `rates`.
    pub m: Option<f64>,
    /// `rates`: `pm` or `plaplace` (inferred from `m` / `p` when absent).
    pub flow: Option<String>,
    /// `rates`: concavity exponents to test.
    pub alpha: Vec<f64>,
    /// `evolve`: `hot`, `sine`, `gaussian`, `mirrored` or `file:<path>`.
    pub datum: Option<String>,
    /// `line`, `plane`, `interval(x0,x1)`, `rect(x0,x1,y0,y1)`; `line` and
    /// `plane` accept bounds of the sampled region the same way.
    pub domain: Option<String>,
    /// Nodes per axis.
    pub grid: Option<usize>,
    pub times: Vec<f64>,
    /// Time step of the Dirichlet solvers.
    pub dt: Option<f64>,
    /// `evolve`: `F`, `F:<family>`, `log`, `quasi`.
    pub checks: Vec<String>,
    /// `envelope`: input grid file; a seeded random datum when absent.
    pub input: Option<String>,
    /// Analytic tolerance.
    pub tol: f64,
    /// Multiplier of the solver-error estimate added to `tol` in `evolve`.
    pub budget_multiplier: f64,
    pub seed: u64,
    pub expect: Expect,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            command: None,
            name: String::new(),
            family: None,
            families: Vec::new(),
            semilinear: false,
            kappa: None,
            p: None,
            m: None,
            flow: None,
            alpha: Vec::new(),
            datum: None,
            domain: None,
            grid: None,
            times: Vec::new(),
            dt: None,
            checks: Vec::new(),
            input: None,
            tol: DEFAULT_TOL,
            budget_multiplier: 1.0,
            seed: 0,
            expect: Expect::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical JSON form of the spec.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        Sha256::digest(&bytes).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn family(&self) -> Result<AdmissibleFunction> {
        match &self.family {
            Some(s) => s.parse(),
            None => invalid("this command needs `family`"),
        }
    }

    fn times_or(&self, default: &[f64]) -> Result<Vec<f64>> {
        let t = if self.times.is_empty() {
            default.to_vec()
        } else {
            self.times.clone()
        };
        if t.iter().any(|v| !(v.is_finite() && *v > 0.0)) || t.windows(2).any(|w| w[1] <= w[0]) {
            return invalid(format!("times must be positive and strictly increasing, got {t:?}"));
        }
        Ok(t)
    }

    fn grid_or(&self, default: usize) -> Result<usize> {
        let n = self.grid.unwrap_or(default);
        if n < MIN_GRID {
            return invalid(format!("grid needs at least {MIN_GRID} nodes per axis, got {n}"));
        }
        Ok(n)
    }
}

/// Output of one operation, tagged with the module and operation that
/// produced it.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub module: String,
    pub operation: String,
    pub result: Value,
}

impl Verdict {
    fn new(module: &str, operation: &str, result: impl Serialize) -> Self {
        Verdict {
            module: module.into(),
            operation: operation.into(),
            result: serde_json::to_value(result).expect("verdict serializes"),
        }
    }
}

/// One checked expectation.
#[derive(Clone, Debug, Serialize)]
pub struct ExpectationCheck {
    pub key: String,
    pub expected: Value,
    pub actual: Value,
    pub met: bool,
}

/// A file written next to the report, with its path relative to the
/// output directory.
#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub kind: String,
    pub columns: Vec<String>,
    pub description: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

/// The full record of a run, written as `report.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub config_hash: String,
    pub command: Command,
    pub name: String,
    pub spec: ExperimentSpec,
    pub verdicts: Vec<Verdict>,
    pub expectations: Vec<ExpectationCheck>,
    pub expectations_met: bool,
    pub artifacts: Vec<Artifact>,
    pub notes: Vec<String>,
    /// Seconds since the Unix epoch (`SOURCE_DATE_EPOCH` when set); not part
    /// of the config hash.
    pub generated_at: u64,
}

impl Report {
    /// Exit status of the run: 0 when every expectation is met, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.expectations_met {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("report.json");
        std::fs::write(&path, self.to_json() + "\n")?;
        Ok(path)
    }
}

fn timestamp() -> u64 {
    if let Some(v) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()) {
        return v;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Collects verdicts, expectations and artifacts during a run.
struct Run<'a> {
    out: Option<&'a Path>,
    verdicts: Vec<Verdict>,
    expectations: Vec<ExpectationCheck>,
    artifacts: Vec<Artifact>,
    notes: Vec<String>,
}

impl<'a> Run<'a> {
    fn expect<T: Serialize + PartialEq>(&mut self, key: &str, expected: Option<T>, actual: T) {
        if let Some(e) = expected {
            self.expectations.push(ExpectationCheck {
                key: key.into(),
                met: e == actual,
                expected: serde_json::to_value(&e).expect("serializes"),
                actual: serde_json::to_value(&actual).expect("serializes"),
            });
        }
    }

    fn emit(&mut self, path: &str, kind: &str, columns: &[&str], description: String, body: impl FnOnce() -> String) -> Result<()> {
        if let Some(dir) = self.out {
            let full = dir.join(path);
            if let Some(parent) = full.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(full, body())?;
            self.artifacts.push(Artifact {
                path: path.into(),
                kind: kind.into(),
                columns: columns.iter().map(|c| c.to_string()).collect(),
                description,
            });
        }
        Ok(())
    }

    fn emit_grid(&mut self, path: &str, u: &GridFunction, description: String) -> Result<()> {
        self.emit(path, "grid", &[], description, || u.to_text())
    }

    fn emit_dat(&mut self, path: &str, columns: &[&str], rows: &[Vec<f64>], description: String) -> Result<()> {
        self.emit(path, "plot", columns, description, || dat(columns, rows))
    }

    /// Plot data of a grid function: `x u` in 1D, `x y u` with a blank line
    /// after each row in 2D.
    fn emit_grid_dat(&mut self, path: &str, u: &GridFunction, description: String) -> Result<()> {
        if u.dims() == 1 {
            let rows: Vec<Vec<f64>> = (0..u.len()).map(|k| vec![u.coord(0, k), u.values()[k]]).collect();
            return self.emit_dat(path, &["x", "u"], &rows, description);
        }
        let body = || {
            let mut s = String::from("# x y u\n");
            let ny = u.shape()[1];
            for (k, v) in u.values().iter().enumerate() {
                let _ = writeln!(s, "{:e} {:e} {v:e}", u.coord(0, k / ny), u.coord(1, k % ny));
                if k % ny == ny - 1 {
                    s.push('\n');
                }
            }
            s
        };
        self.emit(path, "plot", &["x", "y", "u"], description, body)
    }
}

fn dat(columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = format!("# {}\n", columns.join(" "));
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

/// Runs `spec` and assembles its report. Artifacts are written to `out`
/// when given (the report itself is written by [`Report::write`]).
pub fn run(spec: &ExperimentSpec, out: Option<&Path>) -> Result<Report> {
    let command = match spec.command {
        Some(c) => c,
        None => return invalid("the spec names no `command`"),
    };
    let mut r = Run {
        out,
        verdicts: Vec::new(),
        expectations: Vec::new(),
        artifacts: Vec::new(),
        notes: Vec::new(),
    };
    match command {
        Command::Criterion => cmd_criterion(spec, &mut r)?,
        Command::Hierarchy => cmd_hierarchy(spec, &mut r)?,
        Command::Evolve => cmd_evolve(spec, &mut r)?,
        Command::Disrupt => cmd_disrupt(spec, &mut r)?,
        Command::Envelope => cmd_envelope(spec, &mut r)?,
        Command::Rates => cmd_rates(spec, &mut r)?,
    }
    if spec.expect.is_empty() {
        r.notes.push("no expectations declared".into());
    }
    if let Some(dir) = out {
        if !r.artifacts.is_empty() {
            let manifest = serde_json::to_string_pretty(&r.artifacts).expect("manifest serializes");
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("manifest.json"), manifest + "\n")?;
        }
    }
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool: ToolInfo {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
        config_hash: spec.config_hash(),
        command,
        name: if spec.name.is_empty() {
            command.name().into()
        } else {
            spec.name.clone()
        },
        spec: spec.clone(),
        expectations_met: r.expectations.iter().all(|e| e.met),
        verdicts: r.verdicts,
        expectations: r.expectations,
        artifacts: r.artifacts,
        notes: r.notes,
        generated_at: timestamp(),
    })
}

fn cmd_criterion(spec: &ExperimentSpec, r: &mut Run) -> Result<()> {
    let f = spec.family()?;
    let verdict = if spec.semilinear {
        let (kappa, p) = (spec.kappa.unwrap_or(0.0), spec.p.unwrap_or(2.0));
        (semilinear_criterion(&f, kappa, p, None, spec.tol)?, "semilinear_criterion")
    } else {
        (dhf_criterion(&f, None, spec.tol)?, "dhf_criterion")
    };
    let (v, op) = verdict;
    r.expect("preserved", spec.expect.preserved, v.preserved);
    r.verdicts.push(Verdict::new("criterion", op, &v));
    let w = f.default_window()?;
    let rows = w
        .nodes()
        .into_iter()
        .map(|z| Ok(vec![z, f.log_fprime_derivative(z)?]))
        .collect::<Result<Vec<_>>>()?;
    r.emit_dat(
        "log_fprime_derivative.dat",
        &["z", "d/dz log f'(z)"],
        &rows,
        format!("(log f')' of {}; concave iff the heat flow preserves the property", f.label()),
    )
}

fn cmd_hierarchy(spec: &ExperimentSpec, r: &mut Run) -> Result<()> {
    if spec.families.is_empty() {
        return invalid("`families` is empty");
    }
    let fams = spec
        .families
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<AdmissibleFunction>>>()?;
    let chain = order_chain(&fams, spec.tol)?;
    let normalize = |classes: &[String]| -> Vec<String> {
        classes
            .iter()
            .map(|c| {
                let mut parts: Vec<&str> = c.split('=').map(str::trim).collect();
                parts.sort_unstable();
                parts.join("=")
            })
            .collect()
    };
    let actual: Vec<String> = chain.classes.iter().map(|c| c.join("=")).collect();
    r.expect(
        "order",
        spec.expect.order.as_ref().map(|o| normalize(o)),
        normalize(&actual),
    );
    r.verdicts.push(Verdict::new("hierarchy", "order_chain", &chain));
    let by_label = |l: &str| fams.iter().find(|f| f.label() == l).expect("chain labels come from the input");
    for (k, link) in chain.links.iter().enumerate() {
        let (weak, strong) = (by_label(&link.weaker), by_label(&link.stronger));
        let w = composition_window(weak, strong, DEFAULT_NODES)?;
        let rows = w
            .nodes()
            .into_iter()
            .map(|z| Ok(vec![z, weak.eval(strong.inverse(z)?)?]))
            .collect::<Result<Vec<_>>>()?;
        r.emit_dat(
            &format!("link_{k}.dat"),
            &["z", "F_weaker(f_stronger(z))"],
            &rows,
            format!("{} composed with the inverse of {}; concave since the first is weaker", link.weaker, link.stronger),
        )?;
    }
    Ok(())
}

/// Where an `evolve` datum lives.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Domain {
    Line(f64, f64),
    Plane([f64; 4]),
    Interval(f64, f64),
    Rect([f64; 4]),
}

impl Domain {
    fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, args) = match s.find('(') {
            Some(i) if s.ends_with(')') => {
                let args = s[i + 1..s.len() - 1]
                    .split(',')
                    .map(|a| a.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad domain bound in {s:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                (&s[..i], Some(args))
            }
            Some(_) => return Err(Error::Parse(format!("unbalanced domain {s:?}"))),
            None => (s, None),
        };
        let pair = |a: &Option<Vec<f64>>, d: [f64; 2]| -> Result<(f64, f64)> {
            match a {
                None => Ok((d[0], d[1])),
                Some(v) if v.len() == 2 && v[1] > v[0] => Ok((v[0], v[1])),
                Some(v) => Err(Error::Parse(format!("need two increasing bounds, got {v:?}"))),
            }
        };
        let quad = |a: &Option<Vec<f64>>, d: [f64; 4]| -> Result<[f64; 4]> {
            match a {
                None => Ok(d),
                Some(v) if v.len() == 4 && v[1] > v[0] && v[3] > v[2] => Ok([v[0], v[1], v[2], v[3]]),
                Some(v) => Err(Error::Parse(format!("need x0,x1,y0,y1 with x0<x1 and y0<y1, got {v:?}"))),
            }
        };
        Ok(match head {
            "line" => {
                let (a, b) = pair(&args, [-8.0, 8.0])?;
                Domain::Line(a, b)
            }
            "interval" => {
                let (a, b) = pair(&args, [0.0, 1.0])?;
                Domain::Interval(a, b)
            }
            "plane" => Domain::Plane(quad(&args, [-8.0, 8.0, -8.0, 8.0])?),
            "rect" => Domain::Rect(quad(&args, [0.0, 1.0, 0.0, 1.0])?),
            _ => return Err(Error::Parse(format!("unknown domain {s:?}"))),
        })
    }
}

/// `a · h(ψ)` with `ψ(s) = c0 + c1(s-½) + σ log(s(1-s)) - q(s-½)²` on the
/// rescaled interval: `ψ` is concave, so the datum is `H_a`-concave, and it
/// vanishes at both ends.
fn hot_datum(a: f64, seed: u64, x0: f64, x1: f64) -> impl Fn(f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c0 = rng.gen_range(-1.0..2.0);
    let c1 = rng.gen_range(-2.0..2.0);
    let sigma = rng.gen_range(0.3..1.5);
    let q = rng.gen_range(0.0..3.0);
    move |x| {
        let s = (x - x0) / (x1 - x0);
        if s <= 0.0 || s >= 1.0 {
            return 0.0;
        }
        a * hot_h(c0 + c1 * (s - 0.5) + sigma * (s * (1.0 - s)).ln() - q * (s - 0.5) * (s - 0.5))
    }
}

/// Doubles the resolution of a grid by linear interpolation.
fn refine(u: &GridFunction) -> Result<GridFunction> {
    let spacing: Vec<f64> = u.spacing().iter().map(|h| h / 2.0).collect();
    let shape: Vec<usize> = u.shape().iter().map(|n| 2 * n - 1).collect();
    let values = if u.dims() == 1 {
        (0..shape[0])
            .map(|i| {
                let (k, odd) = (i / 2, i % 2 == 1);
                if odd {
                    0.5 * (u.values()[k] + u.values()[k + 1])
                } else {
                    u.values()[k]
                }
            })
            .collect()
    } else {
        let ny = u.shape()[1];
        let at = |i: usize, j: usize| u.values()[i * ny + j];
        let mut v = Vec::with_capacity(shape[0] * shape[1]);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                let (i0, i1) = (i / 2, i.div_ceil(2));
                let (j0, j1) = (j / 2, j.div_ceil(2));
                v.push(0.25 * (at(i0, j0) + at(i0, j1) + at(i1, j0) + at(i1, j1)));
            }
        }
        v
    };
    GridFunction::new(u.origin().to_vec(), spacing, shape, values, u.zero_outside)
}

/// Largest difference between `coarse` and `fine` at the common nodes
/// (`fine` has twice the resolution).
fn common_difference(coarse: &GridFunction, fine: &GridFunction) -> f64 {
    let c = coarse.values();
    if coarse.dims() == 1 {
        return (0..c.len()).map(|i| (c[i] - fine.values()[2 * i]).abs()).fold(0.0, f64::max);
    }
    let (ny, fy) = (coarse.shape()[1], fine.shape()[1]);
    (0..c.len())
        .map(|k| (c[k] - fine.values()[(2 * (k / ny)) * fy + 2 * (k % ny)]).abs())
        .fold(0.0, f64::max)
}

enum Check {
    F(AdmissibleFunction),
    Log,
    Quasi,
}

impl Check {
    fn parse(s: &str, family: Option<&AdmissibleFunction>) -> Result<Self> {
        Ok(match s {
            "log" => Check::Log,
            "quasi" => Check::Quasi,
            "F" | "f" => match family {
                Some(f) => Check::F(f.clone()),
                None => return invalid("check `F` needs `family`"),
            },
            _ => match s.strip_prefix("F:").or_else(|| s.strip_prefix("f:")) {
                Some(fam) => Check::F(fam.parse()?),
                None => return Err(Error::Parse(format!("unknown check {s:?}"))),
            },
        })
    }

    fn run(&self, u: &GridFunction, tol: f64) -> Result<(ConcavityReport, &'static str)> {
        Ok(match self {
            Check::F(f) => (check_f_concavity(u, f, tol)?, "check_f_concavity"),
            Check::Log => (check_log_concavity(u, tol)?, "check_log_concavity"),
            Check::Quasi => (check_quasi_concavity(u, tol)?, "check_quasi_concavity"),
        })
    }
}

#[derive(Serialize)]
struct EvolveRow {
    t: f64,
    check: String,
    passed: bool,
    worst_violation: f64,
    tol: f64,
    budget: f64,
    clamped: usize,
}

fn cmd_evolve(spec: &ExperimentSpec, r: &mut Run) -> Result<()> {
    let family = spec.family.as_ref().map(|s| s.parse::<AdmissibleFunction>()).transpose()?;
    let datum = spec.datum.clone().unwrap_or_else(|| "sine".into());
    let default_domain = match datum.as_str() {
        "gaussian" => "line",
        "mirrored" => "plane",
        _ => "interval",
    };
    let domain = Domain::parse(spec.domain.as_deref().unwrap_or(default_domain))?;
    let times = spec.times_or(&[0.01, 0.05, 0.2])?;
    let default_checks = if family.is_some() { "F" } else { "log" };
    let check_names = if spec.checks.is_empty() {
        vec![default_checks.to_string()]
    } else {
        spec.checks.clone()
    };
    let checks = check_names
        .iter()
        .map(|s| Check::parse(s, family.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    if !(spec.budget_multiplier >= 0.0) {
        return invalid(format!("budget_multiplier must be nonnegative, got {}", spec.budget_multiplier));
    }

    // (t, snapshot, solver-error estimate, clamped count)
    let mut snaps: Vec<(f64, GridFunction, f64, usize)> = Vec::new();
    // per-node error estimates of the mirrored datum
    let mut nodal: Vec<Vec<f64>> = Vec::new();
    let mut initial: Option<GridFunction> = None;
    if datum == "mirrored" {
        let f = match &family {
            Some(f) => f,
            None => return invalid("datum `mirrored` needs `family`"),
        };
        if !matches!(domain, Domain::Plane(_)) {
            return invalid("datum `mirrored` lives in the plane");
        }
        let n = spec.grid_or(129)?;
        if n % 2 == 0 {
            return invalid("datum `mirrored` needs an odd grid");
        }
        let d = build_disruption_datum(f, None)?;
        r.verdicts.push(Verdict::new("concavity", "build_disruption_datum", &d));
        let profile = |z: f64| d.profile(f, z);
        let config = DisruptionConfig { n, ..Default::default() };
        for &t in &times {
            let (u, e) = mirrored_snapshot(&profile, config, t)?;
            snaps.push((t, u, e.iter().copied().fold(0.0, f64::max), 0));
            nodal.push(e);
        }
    } else if let Domain::Plane(b) = domain {
        if datum != "gaussian" {
            return invalid(format!("datum {datum:?} is not available in the plane"));
        }
        let n = spec.grid_or(129)?;
        let g = |n| -> Result<(GridFunction, GridFunction)> {
            Ok((
                GridFunction::from_fn_1d(b[0], b[1], n, true, |x| (-x * x).exp())?,
                GridFunction::from_fn_1d(b[2], b[3], n, true, |y| (-y * y).exp())?,
            ))
        };
        let (c, fine) = (g(n)?, g(2 * n - 1)?);
        initial = Some(outer(&c.0, &c.1)?);
        for &t in &times {
            let uc = product_flow_2d(&c.0, &c.1, t)?.u;
            let uf = product_flow_2d(&fine.0, &fine.1, t)?.u;
            let e = common_difference(&uc, &uf);
            snaps.push((t, uc, e, 0));
        }
    } else {
        let n = spec.grid_or(129)?;
        let sample = |n: usize| -> Result<GridFunction> {
            match (datum.as_str(), domain) {
                ("gaussian", Domain::Line(a, b)) => GridFunction::from_fn_1d(a, b, n, true, |x| (-x * x).exp()),
                ("sine", Domain::Interval(a, b)) => {
                    GridFunction::from_fn_1d(a, b, n, true, |x| (std::f64::consts::PI * (x - a) / (b - a)).sin().max(0.0))
                }
                ("sine", Domain::Rect(q)) => GridFunction::from_fn_2d((q[0], q[1], n), (q[2], q[3], n), true, |x, y| {
                    let s = |v: f64, a: f64, b: f64| (std::f64::consts::PI * (v - a) / (b - a)).sin().max(0.0);
                    s(x, q[0], q[1]) * s(y, q[2], q[3])
                }),
                ("hot", Domain::Interval(a, b)) => {
                    let scale = match &family {
                        Some(f) if matches!(f.family(), crate::Family::Hot { .. }) && f.a().is_finite() => f.a(),
                        _ => return invalid("datum `hot` needs a `hot:<a>` family with finite a"),
                    };
                    GridFunction::from_fn_1d(a, b, n, true, hot_datum(scale, spec.seed, a, b))
                }
                (d, dom) => invalid(format!("datum {d:?} is not available on {dom:?}")),
            }
        };
        let (coarse, fine) = match datum.strip_prefix("file:") {
            Some(path) => {
                let u = GridFunction::from_text(&std::fs::read_to_string(path)?)?;
                let fine = refine(&u)?;
                (u, fine)
            }
            None => (sample(n)?, sample(2 * n - 1)?),
        };
        let solve = |u0: &GridFunction, dt: Option<f64>| -> Result<Vec<(GridFunction, usize)>> {
            match domain {
                Domain::Line(..) => times
                    .iter()
                    .map(|&t| heat_line(u0, t).map(|s| (s.u, s.clamped)))
                    .collect(),
                _ => {
                    let snaps = match spec.kappa {
                        Some(k) => semilinear_imex_at(u0, k, spec.p.unwrap_or(2.0), &times, dt)?,
                        None => dirichlet_cn(u0, &times, dt)?,
                    };
                    Ok(snaps.into_iter().map(|s| (s.u, s.clamped)).collect())
                }
            }
        };
        let dx = coarse.spacing().iter().copied().fold(f64::INFINITY, f64::min);
        let dt = spec.dt.unwrap_or(dx.min(0.01 * times[times.len() - 1]));
        let uc = solve(&coarse, Some(dt))?;
        let uf = solve(&fine, Some(dt / 2.0))?;
        for ((&t, (u, clamped)), (v, _)) in times.iter().zip(uc).zip(uf) {
            let e = common_difference(&u, &v);
            snaps.push((t, u, e, clamped));
        }
        initial = Some(coarse);
    }

    let mut rows = Vec::new();
    let mut all_passed = true;
    if let Some(u0) = &initial {
        r.emit_grid("datum.grid", u0, "initial datum".into())?;
        for (check, name) in checks.iter().zip(&check_names) {
            let (rep, op) = check.run(u0, spec.tol)?;
            all_passed &= rep.passed;
            rows.push(EvolveRow {
                t: 0.0,
                check: name.clone(),
                passed: rep.passed,
                worst_violation: rep.worst_violation,
                tol: spec.tol,
                budget: 0.0,
                clamped: 0,
            });
            r.verdicts.push(Verdict::new("concavity", op, json!({"t": 0.0, "report": rep})));
        }
    }
    for (k, (t, u, e, clamped)) in snaps.iter().enumerate() {
        let budget = spec.budget_multiplier * e;
        let tol = spec.tol + budget;
        for (check, name) in checks.iter().zip(&check_names) {
            if let (Check::Quasi, Some(e)) = (check, nodal.get(k)) {
                // triple-wise budgets: the step's jump dominates the global one
                let (ratio, viol, b, witness) = quasi_ratio_sweep(u, e);
                let passed = !(viol > spec.tol + spec.budget_multiplier * b);
                all_passed &= passed;
                rows.push(EvolveRow {
                    t: *t,
                    check: name.clone(),
                    passed,
                    worst_violation: viol,
                    tol: spec.tol + spec.budget_multiplier * b,
                    budget: spec.budget_multiplier * b,
                    clamped: *clamped,
                });
                r.verdicts.push(Verdict::new(
                    "concavity",
                    "quasi_ratio_sweep",
                    json!({"t": t, "ratio": ratio, "violation": viol, "budget": b, "witness": witness}),
                ));
                continue;
            }
            let (rep, op) = check.run(u, tol)?;
            all_passed &= rep.passed;
            rows.push(EvolveRow {
                t: *t,
                check: name.clone(),
                passed: rep.passed,
                worst_violation: rep.worst_violation,
                tol,
                budget,
                clamped: *clamped,
            });
            r.verdicts.push(Verdict::new("concavity", op, json!({"t": t, "report": rep})));
        }
        r.emit_grid(&format!("snapshot_{k}.grid"), u, format!("solution at t = {t}"))?;
        r.emit_grid_dat(&format!("snapshot_{k}.dat"), u, format!("solution at t = {t}"))?;
    }
    r.verdicts.push(Verdict::new("flow", "evolve", json!({"table": rows})));
    r.expect("passed", spec.expect.passed, all_passed);
    Ok(())
}

fn outer(a: &GridFunction, b: &GridFunction) -> Result<GridFunction> {
    let mut values = Vec::with_capacity(a.len() * b.len());
    for &x in a.values() {
        values.extend(b.values().iter().map(|&y| x * y));
    }
    GridFunction::new(
        vec![a.origin()[0], b.origin()[0]],
        vec![a.spacing()[0], b.spacing()[0]],
        vec![a.len(), b.len()],
        values,
        true,
    )
}

fn cmd_disrupt(spec: &ExperimentSpec, r: &mut Run) -> Result<()> {
    let f = spec.family()?;
    let times = spec.times_or(&[0.001, 0.01, 0.05])?;
    let n = spec.grid_or(257)?;
    if n % 2 == 0 {
        return invalid(format!("disruption grids need an odd node count, got {n}"));
    }
    let datum = match build_disruption_datum(&f, None) {
        Ok(d) => d,
        Err(Error::Precondition(msg)) => {
            r.notes.push(format!("no disruption datum exists: {msg}"));
            r.verdicts.push(Verdict::new(
                "concavity",
                "build_disruption_datum",
                json!({"family": f.label(), "precondition_failed": msg, "disrupted": false, "correct_negative": true}),
            ));
            r.expect("disrupted", spec.expect.disrupted, false);
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    let config = DisruptionConfig { n, ..Default::default() };
    let profile = |z: f64| datum.profile(&f, z);
    let run = run_disruption_profile(&format!("step x {}-profile", f.label()), &profile, config, &times)?;
    r.verdicts.push(Verdict::new("concavity", "build_disruption_datum", &datum));
    r.verdicts.push(Verdict::new("concavity", "run_disruption", &run));
    r.expect("disrupted", spec.expect.disrupted, run.disrupted);
    r.emit_grid("profile.grid", &datum.phi2, format!("profile f_F(c - |z|) for {}", f.label()))?;
    r.emit_grid_dat("profile.dat", &datum.phi2, format!("profile f_F(c - |z|) for {}", f.label()))?;
    let rows: Vec<Vec<f64>> = run
        .steps
        .iter()
        .map(|s| vec![s.t, s.certified_ratio, s.certified_violation, s.certified_budget])
        .collect();
    r.emit_dat(
        "ratios.dat",
        &["t", "ratio", "violation", "budget"],
        &rows,
        "quasi-concavity violation against its error budget".into(),
    )
}

/// Seeded random 1D datum: values in `(0, 0.9 min(a, 1))` with about one
/// node in ten set to zero.
fn random_datum(f: &AdmissibleFunction, n: usize, seed: u64) -> Result<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cap = 0.9 * f.a().min(1.0);
    let values = (0..n)
        .map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.01 * cap..cap) })
        .collect();
    GridFunction::new(vec![0.0], vec![1.0 / (n - 1) as f64], vec![n], values, true)
}

fn cmd_envelope(spec: &ExperimentSpec, r: &mut Run) -> Result<()> {
    let f = spec.family()?;
    let u = match &spec.input {
        Some(path) => GridFunction::from_text(&std::fs::read_to_string(path)?)?,
        None => random_datum(&f, spec.grid_or(65)?, spec.seed)?,
    };
    let env = f_concave_envelope(&u, &f)?;
    let again = f_concave_envelope(&env, &f)?;
    let lift = env.values().iter().zip(u.values()).map(|(e, v)| e - v).fold(0.0, f64::max);
    let idempotence = env
        .values()
        .iter()
        .zip(again.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let rep = check_f_concavity(&env, &f, spec.tol.max(1e-10))?;
    r.expect("passed", spec.expect.passed, rep.passed);
    r.verdicts.push(Verdict::new(
        "concavity",
        "f_concave_envelope",
        json!({"family": f.label(), "max_lift": lift, "idempotence_residual": idempotence}),
    ));
    r.verdicts.push(Verdict::new("concavity", "check_f_concavity", &rep));
    r.emit_grid("input.grid", &u, "input".into())?;
    r.emit_grid("envelope.grid", &env, format!("{}-concave envelope", f.label()))?;
    if u.dims() == 1 {
        let rows: Vec<Vec<f64>> = (0..u.len())
            .map(|k| vec![u.coord(0, k), u.values()[k], env.values()[k]])
            .collect();
        r.emit_dat("envelope.dat", &["x", "u", "envelope"], &rows, format!("input and {}-concave envelope", f.label()))?;
    } else {
        r.emit_grid_dat("envelope.dat", &env, format!("{}-concave envelope", f.label()))?;
    }
    Ok(())
}

fn cmd_rates(spec: &ExperimentSpec, r: &mut Run) -> Result<()> {
    let flow = match (spec.flow.as_deref(), spec.m, spec.p) {
        (Some(f), ..) => f.to_string(),
        (None, Some(_), None) => "pm".into(),
        (None, None, Some(_)) => "plaplace".into(),
        _ => return invalid("`rates` needs `flow`, or exactly one of `m` and `p`"),
    };
    let (exponent, run): (f64, fn(f64, f64, Option<crate::Window>, f64) -> Result<CriterionVerdict>) = match flow.as_str() {
        "pm" => (spec.m.unwrap_or(2.0), pm_initial_rate),
        "plaplace" => (spec.p.unwrap_or(3.0), plaplace_initial_rate),
        other => return invalid(format!("unknown flow {other:?}; use `pm` or `plaplace`")),
    };
    let alphas = if spec.alpha.is_empty() {
        default_alphas(&flow, exponent)
    } else {
        spec.alpha.clone()
    };
    let mut rows = Vec::new();
    let mut all_agree = true;
    let mut preserved = Vec::new();
    for a in alphas {
        let v = run(exponent, a, None, spec.tol)?;
        let analytic = v.rate.as_ref().map(|x| x.analytic_concave).unwrap_or(v.preserved);
        all_agree &= analytic == v.preserved;
        preserved.push(v.preserved);
        rows.push(vec![a, f64::from(u8::from(v.preserved)), f64::from(u8::from(analytic))]);
        r.verdicts.push(Verdict::new("criterion", if flow == "pm" { "pm_initial_rate" } else { "plaplace_initial_rate" }, &v));
    }
    if let Some(e) = spec.expect.preserved {
        r.expect("preserved", Some(vec![e; preserved.len()]), preserved);
    }
    r.expect("agree", spec.expect.agree, all_agree);
    r.emit_dat(
        "rates.dat",
        &["alpha", "numeric_concave", "analytic_concave"],
        &rows,
        format!("initial-rate concavity for {flow} with exponent {exponent}"),
    )
}

/// Exponents around the known thresholds of each flow.
fn default_alphas(flow: &str, e: f64) -> Vec<f64> {
    if flow == "pm" {
        let th = 0.5 * (e - 1.0);
        vec![-1.0, 0.0, 0.1, 0.5 * th, th, 0.75 * (e - 1.0), e - 1.0]
    } else {
        let (lo, hi) = ((e - 2.0) / e, (e - 2.0) / (e - 1.0));
        vec![-1.0, 0.0, 0.1, lo, 0.5 * (lo + hi), hi, 0.9]
    }
}
