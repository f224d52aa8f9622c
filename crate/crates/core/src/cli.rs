//! Command-line front end: `solve`, `sweep` and `check`.
//!
//! Exit codes: 0 success, 1 a property check failed, 2 configuration or
//! usage error, 3 a solve failed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::checks::{CheckContext, SuiteRegistry};
use crate::mesh::DomainSpec;
use crate::nonlinearity::{FamilyRegistry, SpecRecord};
use crate::rhs::{RhsCatalog, RhsRecord};
use crate::solver::{BoundaryCondition, SolverConfig};
use crate::verify::{plan_cases, run_sweep, summarize, write_csv, SweepJson, SweepOutcome, SweepPlan};

pub const CONFIG_SCHEMA: &str = "uhlenbeck-config/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_json")]
    pub json: String,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_csv() -> String {
    "sweep.csv".into()
}
fn default_json() -> String {
    "sweep.json".into()
}
fn default_schema() -> String {
    CONFIG_SCHEMA.into()
}
fn default_seed() -> u64 {
    1
}
fn default_samples() -> usize {
    1000
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir(), csv: default_csv(), json: default_json() }
    }
}

/// One experiment: a sweep plan plus output locations and the sampling seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub domains: Vec<DomainSpec>,
    pub nonlinearities: Vec<SpecRecord>,
    pub rhs: RhsRecord,
    pub bc: BoundaryCondition,
    #[serde(default = "one")]
    pub components: usize,
    pub h: Vec<f64>,
    pub kappa: Vec<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub check_samples: usize,
}

fn one() -> usize {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema: default_schema(),
            domains: vec![DomainSpec::unit_disk()],
            nonlinearities: vec![SpecRecord::power(2.0)],
            rhs: RhsRecord::constant(2.0),
            bc: BoundaryCondition::Dirichlet,
            components: 1,
            h: vec![0.05],
            kappa: vec![1.0],
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
            seed: default_seed(),
            check_samples: default_samples(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates; errors name the offending line or field.
    /// Relative data paths are resolved against `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self, String> {
        let mut cfg: Self = serde_json::from_str(text)
            .map_err(|e| format!("line {} column {}: {e}", e.line(), e.column()))?;
        if let (Some(path), Some(base)) = (cfg.rhs.path.as_mut(), base) {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.schema != CONFIG_SCHEMA {
            return Err(format!("schema: expected `{CONFIG_SCHEMA}`, got `{}`", self.schema));
        }
        for (field, empty) in [
            ("domains", self.domains.is_empty()),
            ("nonlinearities", self.nonlinearities.is_empty()),
            ("h", self.h.is_empty()),
            ("kappa", self.kappa.is_empty()),
        ] {
            if empty {
                return Err(format!("{field}: must not be empty"));
            }
        }
        if let Some(h) = self.h.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
            return Err(format!("h: mesh size must be positive, got {h}"));
        }
        if let Some(k) = self.kappa.iter().find(|k| !k.is_finite()) {
            return Err(format!("kappa: must be finite, got {k}"));
        }
        if self.components == 0 {
            return Err("components: must be positive".into());
        }
        if let Some(path) = &self.rhs.path {
            if !path.exists() {
                return Err(format!("rhs.path: {} does not exist", path.display()));
            }
        }
        self.solver.validate().map_err(|e| format!("solver: {e}"))?;
        RhsCatalog::default().build(&self.rhs).map_err(|e| format!("rhs: {e}"))?;
        let registry = FamilyRegistry::default();
        for (i, r) in self.nonlinearities.iter().enumerate() {
            registry.build(r).map_err(|e| format!("nonlinearities[{i}]: {e}"))?;
        }
        Ok(())
    }

    pub fn plan(&self) -> SweepPlan {
        SweepPlan {
            domains: self.domains.clone(),
            nonlinearities: self.nonlinearities.clone(),
            rhs: self.rhs.clone(),
            bc: self.bc,
            components: self.components,
            h: self.h.clone(),
            kappa: self.kappa.clone(),
            solver: self.solver.clone(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "uhlenbeck", version, about = "Quasilinear elliptic solver and gradient-bound verification")]
pub struct Cli {
    /// Experiment configuration (JSON); built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Sampling seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print the complete default configuration and exit.
    #[arg(long, global = true)]
    pub print_defaults: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve every case of the configuration and write mesh, solution and report files.
    Solve,
    /// Run the configured sweep and write CSV and JSON reports.
    Sweep,
    /// Run a property suite (or `all`) and print a pass/fail table.
    Check {
        #[arg(default_value = "all")]
        suite: String,
        /// Samples per suite; defaults to the configuration value.
        #[arg(long)]
        samples: Option<usize>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_CONFIG, message: message.into() }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        None => ExperimentConfig::default(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text, path.parent())
                .map_err(|e| config_error(format!("{}: {e}", path.display())))?
        }
    };
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.jobs == Some(0) {
        return Err(config_error("--jobs must be positive"));
    }
    Ok(cfg)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| config_error(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn write_reports(cfg: &ExperimentConfig, outcome: &SweepOutcome, csv_name: &str, json_name: &str) -> Result<(), Failure> {
    let mut csv = Vec::new();
    write_csv(outcome, &mut csv).map_err(|e| config_error(format!("csv: {e}")))?;
    write_file(&cfg.output.dir.join(csv_name), &csv)?;
    let config_value = serde_json::to_value(cfg).expect("config serializes");
    let report = SweepJson::build(outcome, config_value);
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&cfg.output.dir.join(json_name), text.as_bytes())
}

fn solver_status(outcome: &SweepOutcome, out: &mut dyn Write) -> i32 {
    for r in &outcome.reports {
        if let Err(e) = &r.result {
            let _ = writeln!(out, "run {} failed: {e}", r.index);
        }
    }
    if outcome.summary.failures > 0 {
        EXIT_SOLVER
    } else {
        EXIT_OK
    }
}

fn cmd_solve(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = load_config(cli)?;
    let cases = plan_cases(&cfg.plan(), &FamilyRegistry::default()).map_err(|e| config_error(e.to_string()))?;
    let catalog = RhsCatalog::default();
    let mut reports = Vec::with_capacity(cases.len());
    for case in &cases {
        let (report, solution) = case.run(&catalog, &cfg.solver);
        if let Ok(mesh) = &case.mesh {
            write_file(&cfg.output.dir.join(format!("mesh-{}.txt", case.index)), mesh.to_text().as_bytes())?;
        }
        if let Some(solution) = solution {
            write_file(
                &cfg.output.dir.join(format!("solution-{}.txt", case.index)),
                solution.to_text().as_bytes(),
            )?;
        }
        if let Some(m) = report.measurements() {
            let _ = writeln!(
                out,
                "run {}: {} {} kappa={} grad_sup={:.6e} ratio={:.6e} oracle_error={}",
                report.index,
                report.descriptor.domain,
                report.descriptor.nonlinearity,
                report.descriptor.kappa,
                m.grad_sup,
                m.gradient_ratio,
                m.oracle_error.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into()),
            );
        }
        reports.push(report);
    }
    let summary = summarize(&reports);
    let outcome = SweepOutcome { reports, summary };
    write_reports(&cfg, &outcome, "report.csv", "report.json")?;
    Ok(solver_status(&outcome, out))
}

fn cmd_sweep(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = load_config(cli)?;
    let outcome = run_sweep(&cfg.plan(), &FamilyRegistry::default(), &RhsCatalog::default(), cli.jobs)
        .map_err(|e| config_error(e.to_string()))?;
    write_reports(&cfg, &outcome, &cfg.output.csv, &cfg.output.json)?;
    let s = &outcome.summary;
    let _ = writeln!(
        out,
        "{} runs, {} failed; ratio band {:.4} [{:.4e}, {:.4e}]; max spreads gradient {:.6} energy {:.6}",
        s.rows, s.failures, s.ratio_band, s.ratio_min, s.ratio_max, s.max_gradient_spread, s.max_energy_spread
    );
    Ok(solver_status(&outcome, out))
}

fn cmd_check(cli: &Cli, suite: &str, samples: Option<usize>, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = load_config(cli)?;
    let registry = SuiteRegistry::default();
    let ctx = CheckContext { seed: cfg.seed, samples: samples.unwrap_or(cfg.check_samples) };
    let outcomes = registry.run(suite, &ctx).ok_or_else(|| {
        let known: Vec<&str> = registry.names().collect();
        config_error(format!("unknown suite `{suite}`; known: {}, all", known.join(", ")))
    })?;
    let _ = writeln!(out, "{:<16} {:>8} {:>8}  status", "suite", "checks", "failed");
    for o in &outcomes {
        let status = if o.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{:<16} {:>8} {:>8}  {status}", o.suite, o.checks, o.failure_count);
        for f in &o.failures {
            let _ = writeln!(out, "    {}: {}", f.check, f.detail);
        }
    }
    let passed = outcomes.iter().all(|o| o.passed());
    let summary = json!({ "seed": ctx.seed, "samples": ctx.samples, "passed": passed, "suites": outcomes });
    let _ = writeln!(out, "{summary}");
    Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Runs the command line `args` (including the program name), writing
/// results to `out` and diagnostics to standard error. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if cli.print_defaults {
        let text = serde_json::to_string_pretty(&ExperimentConfig::default()).expect("defaults serialize");
        let _ = writeln!(out, "{text}");
        return EXIT_OK;
    }
    let result = match &cli.command {
        Some(Command::Solve) => cmd_solve(&cli, out),
        Some(Command::Sweep) => cmd_sweep(&cli, out),
        Some(Command::Check { suite, samples }) => cmd_check(&cli, suite, *samples, out),
        None => Err(config_error("a subcommand is required: solve, sweep or check")),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
