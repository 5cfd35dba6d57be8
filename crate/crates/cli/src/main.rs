//! `concaflow`: run concavity experiments from flags or TOML configs and
//! write `report.json` plus grid and plot files.
//!
//! Exit status: 0 when every declared expectation is met, 1 on a mismatch,
//! 2 on configuration or precondition errors.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use concaflow::experiment::{run, Command, ExperimentSpec, Report};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "concaflow", version, about = "Concavity properties under parabolic flows")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Preservation criterion of a family under the heat or semilinear flow.
    Criterion(Opts),
    /// Order a list of families by the "weaker than" relation.
    Hierarchy(Opts),
    /// Evolve a datum and check concavity at each time.
    Evolve(Opts),
    /// Build and evolve a datum whose quasi-concavity the heat flow destroys.
    Disrupt(Opts),
    /// F-concave envelope of a grid function.
    Envelope(Opts),
    /// Initial-rate concavity for porous-medium and p-Laplace flows.
    Rates(Opts),
    /// Run several config files in parallel, one report directory each.
    Batch {
        /// Config files; each names its command.
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Output root; reports go to `<out>/<name>/report.json`.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// Flags shared by every experiment. Each one overrides the key of the same
/// name in `--config`.
#[derive(Args, Clone, Default)]
struct Opts {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report.json and artifacts; without it the report
    /// is printed to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    /// Family: phi:<alpha>, lalpha:<alpha>, hot:<a|inf> or table:<path>.
    #[arg(long)]
    family: Option<String>,
    /// Family list for `hierarchy` (comma separated or repeated).
    #[arg(long, value_delimiter = ',')]
    families: Vec<String>,
    #[arg(long)]
    semilinear: bool,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    /// `pm` or `plaplace`.
    #[arg(long)]
    flow: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Vec<f64>,
    /// hot, sine, gaussian, mirrored or file:<path>.
    #[arg(long)]
    datum: Option<String>,
    /// line, plane, interval(x0,x1) or rect(x0,x1,y0,y1).
    #[arg(long)]
    domain: Option<String>,
    /// Nodes per axis.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    times: Vec<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// F, F:<family>, log or quasi (comma separated).
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
    /// Input grid file for `envelope`.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    budget_multiplier: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    expect_preserved: Option<bool>,
    #[arg(long)]
    expect_passed: Option<bool>,
    #[arg(long)]
    expect_disrupted: Option<bool>,
    #[arg(long)]
    expect_agree: Option<bool>,
    /// Expected classes from strongest to weakest, `=` joining equivalent
    /// families (comma separated).
    #[arg(long, value_delimiter = ',')]
    expect_order: Vec<String>,
}

impl Opts {
    fn spec(&self, command: Command) -> Result<ExperimentSpec> {
        let mut s = match &self.config {
            Some(path) => ExperimentSpec::from_file(path).with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentSpec::default(),
        };
        s.command = Some(command);
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    s.$field = v.clone().into();
                }
            )*};
        }
        set!(family, kappa, p, m, flow, datum, domain, grid, dt, input);
        if let Some(v) = &self.name {
            s.name = v.clone();
        }
        if let Some(v) = self.tol {
            s.tol = v;
        }
        if let Some(v) = self.budget_multiplier {
            s.budget_multiplier = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if self.semilinear {
            s.semilinear = true;
        }
        macro_rules! set_list {
            ($($field:ident),*) => {$(
                if !self.$field.is_empty() {
                    s.$field = self.$field.clone();
                }
            )*};
        }
        set_list!(families, alpha, times, checks);
        macro_rules! set_expect {
            ($($flag:ident => $key:ident),*) => {$(
                if self.$flag.is_some() {
                    s.expect.$key = self.$flag;
                }
            )*};
        }
        set_expect!(expect_preserved => preserved, expect_passed => passed, expect_disrupted => disrupted, expect_agree => agree);
        if !self.expect_order.is_empty() {
            s.expect.order = Some(self.expect_order.clone());
        }
        Ok(s)
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("CONCAFLOW_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("CONCAFLOW_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn summary(report: &Report) -> String {
    let status = if report.expectations.is_empty() {
        "no expectations"
    } else if report.expectations_met {
        "expectations met"
    } else {
        "EXPECTATION MISMATCH"
    };
    format!("{} [{}]: {status}", report.name, report.command.name())
}

fn run_one(spec: &ExperimentSpec, out: Option<&Path>) -> Result<Report> {
    let report = run(spec, out)?;
    match out {
        Some(dir) => {
            let path = report.write(dir)?;
            println!("{} -> {}", summary(&report), path.display());
        }
        None => println!("{}", report.to_json()),
    }
    Ok(report)
}

fn batch(configs: &[PathBuf], out: &Path) -> Result<i32> {
    let specs = configs
        .iter()
        .map(|p| {
            let s = ExperimentSpec::from_file(p).with_context(|| format!("reading {}", p.display()))?;
            if s.command.is_none() {
                bail!("{} names no `command`", p.display());
            }
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let dir = out.join(if s.name.is_empty() { stem } else { s.name.clone() });
            Ok((s, dir))
        })
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<_> = specs.par_iter().map(|(s, dir)| run(s, Some(dir)).map(|r| (r, dir))).collect();
    let mut code = 0;
    for (res, path) in results.into_iter().zip(configs) {
        match res {
            Ok((report, dir)) => {
                report.write(dir)?;
                println!("{} -> {}", summary(&report), dir.join("report.json").display());
                code = code.max(report.exit_code());
            }
            Err(e) => {
                eprintln!("{}: error: {e}", path.display());
                code = 2;
            }
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Sub::Batch { configs, out } => batch(configs, out),
        Sub::Criterion(o) => run_one(&o.spec(Command::Criterion)?, o.out.as_deref()).map(|r| r.exit_code()),
        Sub::Hierarchy(o) => run_one(&o.spec(Command::Hierarchy)?, o.out.as_deref()).map(|r| r.exit_code()),
        Sub::Evolve(o) => run_one(&o.spec(Command::Evolve)?, o.out.as_deref()).map(|r| r.exit_code()),
        Sub::Disrupt(o) => run_one(&o.spec(Command::Disrupt)?, o.out.as_deref()).map(|r| r.exit_code()),
        Sub::Envelope(o) => run_one(&o.spec(Command::Envelope)?, o.out.as_deref()).map(|r| r.exit_code()),
        Sub::Rates(o) => run_one(&o.spec(Command::Rates)?, o.out.as_deref()).map(|r| r.exit_code()),
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
