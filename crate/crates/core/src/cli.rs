//! Command-line surface: `point`, `sweep`, `surface`, `verify` and `peaks`.
//!
//! Exit status 0 on success, 1 for domain errors and failed verification,
//! 2 for usage errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use crate::model::{ModelParams, ThermoState};
use crate::oracle::oracle_report;
use crate::sweep::{
    find_peak, refine_peak, sweep_1d, sweep_2d, Axis, GridSpec, Observable, SweepTable,
};
use crate::table_io::{format_value, write_csv, write_json, TableError, VALUE_COLUMNS};
use crate::thermo::{fd_verify, ThermoPoint, DEFAULT_FD_STEP};

pub const DEFAULT_VERIFY_N: usize = 6;
pub const DEFAULT_VERIFY_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(
    name = "qpotts",
    version,
    about = "Exact thermodynamics of the 1D modified q-state Potts chain"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate f, S, m, chi and C at one parameter point.
    Point(PointArgs),
    /// Tabulate all observables along one axis.
    Sweep(SweepArgs),
    /// Tabulate all observables on a two-axis grid.
    Surface(SurfaceArgs),
    /// Cross-check ln Z by three routes and the derivatives by finite differences.
    Verify(VerifyArgs),
    /// Report the grid maximum of one observable along an axis.
    Peaks(PeaksArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<i64>,
    #[arg(long = "J", allow_negative_numbers = true)]
    pub coupling: Option<f64>,
    #[arg(long = "h", allow_negative_numbers = true)]
    pub field: Option<f64>,
    #[arg(long, allow_negative_numbers = true, conflicts_with = "temperature")]
    pub beta: Option<f64>,
    #[arg(long = "T", allow_negative_numbers = true)]
    pub temperature: Option<f64>,
    /// JSON file with default values for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub axis: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Slow (outer) axis.
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub y_axis: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub y_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y_max: Option<f64>,
    #[arg(long)]
    pub y_steps: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Chain length for the partition-function routes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Largest accepted relative discrepancy between ln Z routes.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Finite-difference step.
    #[arg(long)]
    pub step: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PeaksArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// One of f, S, m, chi, C.
    #[arg(long)]
    pub observable: Option<String>,
    /// Refine the grid maximum by golden-section search.
    #[arg(long)]
    pub refine: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Values a `--config` file may supply; every key mirrors a flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub q: Option<i64>,
    #[serde(rename = "J")]
    pub coupling: Option<f64>,
    #[serde(rename = "h")]
    pub field: Option<f64>,
    pub beta: Option<f64>,
    #[serde(rename = "T")]
    pub temperature: Option<f64>,
    pub axis: Option<String>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub steps: Option<usize>,
    pub y_axis: Option<String>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    pub y_steps: Option<usize>,
    pub n: Option<usize>,
    pub tol: Option<f64>,
    pub step: Option<f64>,
    pub observable: Option<String>,
    pub refine: Option<bool>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] crate::Error),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    /// The reader of stdout went away, e.g. `qpotts sweep ... | head`.
    fn is_broken_pipe(&self) -> bool {
        let kind = match self {
            CliError::Io(e) | CliError::Table(TableError::Io(e)) => Some(e.kind()),
            CliError::Table(TableError::Json(e)) => e.io_error_kind(),
            CliError::Table(TableError::Csv(e)) => match e.kind() {
                csv::ErrorKind::Io(e) => Some(e.kind()),
                _ => None,
            },
            _ => None,
        };
        kind == Some(io::ErrorKind::BrokenPipe)
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Point,
    Sweep,
    Surface,
    Verify,
    Peaks,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub n: usize,
    pub tol: f64,
    pub step: f64,
}

/// A fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub params: ModelParams,
    pub state: ThermoState,
    pub grids: Vec<GridSpec>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub verify: VerifyOptions,
    pub observable: Observable,
    pub refine: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    VerificationFailed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::VerificationFailed => 1,
        }
    }
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}

fn parse_axis(s: &str) -> Result<Axis, CliError> {
    s.parse()
        .map_err(|e: crate::Error| CliError::Usage(e.to_string()))
}

fn grid_from(
    axis: Option<String>,
    min: Option<f64>,
    max: Option<f64>,
    steps: Option<usize>,
    prefix: &str,
) -> Result<GridSpec, CliError> {
    let axis = parse_axis(&required(axis, &format!("{prefix}axis"))?)?;
    Ok(GridSpec::new(
        axis,
        required(min, &format!("{prefix}min"))?,
        required(max, &format!("{prefix}max"))?,
        required(steps, &format!("{prefix}steps"))?,
    )?)
}

/// Builds model parameters and state; values on a swept axis may be omitted.
fn resolve_model(
    model: &ModelArgs,
    file: &FileConfig,
    swept: &[Axis],
) -> Result<(ModelParams, ThermoState), CliError> {
    let q = model.q.or(file.q);
    let coupling = model.coupling.or(file.coupling);
    let field = model.field.or(file.field);
    let (beta, temperature) = match (model.beta, model.temperature) {
        (None, None) => (file.beta, file.temperature),
        flags => flags,
    };
    if beta.is_some() && temperature.is_some() {
        return Err(CliError::Usage("give exactly one of --beta and --T".into()));
    }

    let q = match q {
        Some(q) if q < 2 => return Err(crate::Error::InvalidSpinCount(q).into()),
        Some(q) => {
            u32::try_from(q).map_err(|_| CliError::Usage(format!("q = {q} is too large")))?
        }
        None if swept.contains(&Axis::Q) => 2,
        None => return Err(CliError::Usage("missing required --q".into())),
    };
    let coupling = match coupling {
        Some(j) => j,
        None if swept.contains(&Axis::J) => 0.0,
        None => return Err(CliError::Usage("missing required --J".into())),
    };
    let field = match field {
        Some(h) => h,
        None if swept.contains(&Axis::H) => 0.0,
        None => return Err(CliError::Usage("missing required --h".into())),
    };
    let params = ModelParams::new(q, coupling, field)?;
    let state = match (beta, temperature) {
        (Some(b), _) => ThermoState::from_beta(b)?,
        (_, Some(t)) => ThermoState::from_temperature(t)?,
        _ if swept.iter().any(|a| matches!(a, Axis::Beta | Axis::T)) => {
            ThermoState::from_beta(1.0)?
        }
        _ => return Err(CliError::Usage("missing required --beta or --T".into())),
    };
    Ok((params, state))
}

fn load_file(model: &ModelArgs) -> Result<FileConfig, CliError> {
    model
        .config
        .as_deref()
        .map(FileConfig::load)
        .transpose()
        .map(Option::unwrap_or_default)
}

impl RunConfig {
    /// Merges flags over the optional config file and validates the result.
    pub fn from_command(command: Command) -> Result<Self, CliError> {
        let defaults = VerifyOptions {
            n: DEFAULT_VERIFY_N,
            tol: DEFAULT_VERIFY_TOL,
            step: DEFAULT_FD_STEP,
        };
        let base = |kind,
                    model: &ModelArgs,
                    file: &FileConfig,
                    grids: Vec<GridSpec>,
                    output: &OutputArgs|
         -> Result<Self, CliError> {
            let swept: Vec<Axis> = grids.iter().map(|g| g.axis).collect();
            let (params, state) = resolve_model(model, file, &swept)?;
            Ok(Self {
                command: kind,
                params,
                state,
                grids,
                out: output.out.clone().or_else(|| file.out.clone()),
                format: output.format.or(file.format),
                verify: defaults,
                observable: Observable::Susceptibility,
                refine: false,
            })
        };
        let one_grid = |g: &GridArgs, file: &FileConfig| {
            grid_from(
                g.axis.clone().or_else(|| file.axis.clone()),
                g.min.or(file.min),
                g.max.or(file.max),
                g.steps.or(file.steps),
                "",
            )
        };

        match command {
            Command::Point(a) => {
                let file = load_file(&a.model)?;
                base(CommandKind::Point, &a.model, &file, vec![], &a.output)
            }
            Command::Sweep(a) => {
                let file = load_file(&a.model)?;
                let grid = one_grid(&a.grid, &file)?;
                base(CommandKind::Sweep, &a.model, &file, vec![grid], &a.output)
            }
            Command::Surface(a) => {
                let file = load_file(&a.model)?;
                let gx = one_grid(&a.grid, &file)?;
                let gy = grid_from(
                    a.y_axis.clone().or_else(|| file.y_axis.clone()),
                    a.y_min.or(file.y_min),
                    a.y_max.or(file.y_max),
                    a.y_steps.or(file.y_steps),
                    "y-",
                )?;
                base(
                    CommandKind::Surface,
                    &a.model,
                    &file,
                    vec![gx, gy],
                    &a.output,
                )
            }
            Command::Verify(a) => {
                let file = load_file(&a.model)?;
                let mut config = base(CommandKind::Verify, &a.model, &file, vec![], &a.output)?;
                config.verify = VerifyOptions {
                    n: a.n.or(file.n).unwrap_or(defaults.n),
                    tol: a.tol.or(file.tol).unwrap_or(defaults.tol),
                    step: a.step.or(file.step).unwrap_or(defaults.step),
                };
                if !(config.verify.tol > 0.0) {
                    return Err(CliError::Usage("--tol must be positive".into()));
                }
                Ok(config)
            }
            Command::Peaks(a) => {
                let file = load_file(&a.model)?;
                let grid = one_grid(&a.grid, &file)?;
                let mut config = base(CommandKind::Peaks, &a.model, &file, vec![grid], &a.output)?;
                if let Some(name) = a.observable.clone().or_else(|| file.observable.clone()) {
                    config.observable = name
                        .parse()
                        .map_err(|e: crate::Error| CliError::Usage(e.to_string()))?;
                }
                config.refine = a.refine || file.refine.unwrap_or(false);
                Ok(config)
            }
        }
    }
}

fn point_report(params: &ModelParams, state: ThermoState) -> (ThermoPoint, [f64; 10]) {
    let p = ThermoPoint::evaluate(params, state);
    (
        p,
        [
            state.beta(),
            state.temperature(),
            params.field(),
            params.coupling(),
            f64::from(params.q()),
            p.f,
            p.s,
            p.m,
            p.chi,
            p.c,
        ],
    )
}

fn write_table(
    table: &SweepTable,
    format: Option<Format>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    match format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(table, out)?,
        Format::Json => write_json(table, out)?,
    }
    Ok(())
}

/// Executes a resolved command, writing its artifact to `out`.
pub fn run(config: &RunConfig, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let (params, state) = (&config.params, config.state);
    match config.command {
        CommandKind::Point => {
            let (point, values) = point_report(params, state);
            match config.format {
                None => {
                    for (name, v) in ["f", "S", "m", "chi", "C"]
                        .iter()
                        .zip([point.f, point.s, point.m, point.chi, point.c])
                    {
                        writeln!(out, "{name} = {}", format_value(v))?;
                    }
                }
                Some(Format::Csv) => {
                    writeln!(out, "{}", VALUE_COLUMNS.join(","))?;
                    let record: Vec<String> = VALUE_COLUMNS
                        .iter()
                        .zip(values)
                        .map(|(name, v)| {
                            if *name == "q" {
                                params.q().to_string()
                            } else {
                                format_value(v)
                            }
                        })
                        .collect();
                    writeln!(out, "{}", record.join(","))?;
                }
                Some(Format::Json) => {
                    let doc = json!({
                        "params": params,
                        "beta": state.beta(),
                        "T": state.temperature(),
                        "f": point.f, "S": point.s, "m": point.m, "chi": point.chi, "C": point.c,
                    });
                    writeln!(
                        out,
                        "{}",
                        serde_json::to_string_pretty(&doc).map_err(TableError::from)?
                    )?;
                }
            }
            Ok(Outcome::Success)
        }
        CommandKind::Sweep => {
            let table = sweep_1d(params, state, &config.grids[0])?;
            write_table(&table, config.format, out)?;
            Ok(Outcome::Success)
        }
        CommandKind::Surface => {
            let table = sweep_2d(params, state, &config.grids[0], &config.grids[1])?;
            write_table(&table, config.format, out)?;
            Ok(Outcome::Success)
        }
        CommandKind::Verify => {
            let opts = config.verify;
            let oracle = oracle_report(params, state, opts.n)?;
            let fd = fd_verify(params, state, opts.step)?;
            let routes_ok = oracle.max_relative_discrepancy < opts.tol;
            let passed = routes_ok && fd.passed();
            if config.format == Some(Format::Json) {
                let doc = json!({
                    "passed": passed,
                    "tolerance": opts.tol,
                    "partition": oracle,
                    "finite_differences": fd,
                });
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&doc).map_err(TableError::from)?
                )?;
            } else {
                writeln!(out, "N = {}", oracle.n)?;
                writeln!(
                    out,
                    "ln Z (enumeration) = {}",
                    format_value(oracle.ln_z_enumeration)
                )?;
                writeln!(
                    out,
                    "ln Z (trace power) = {}",
                    format_value(oracle.ln_z_trace_power)
                )?;
                writeln!(
                    out,
                    "ln Z (eigenvalues) = {}",
                    format_value(oracle.ln_z_eigen)
                )?;
                writeln!(out, "f_N = {}", format_value(oracle.finite_n_free_energy))?;
                writeln!(
                    out,
                    "max relative discrepancy = {:e} (tol {:e}) {}",
                    oracle.max_relative_discrepancy,
                    opts.tol,
                    if routes_ok { "ok" } else { "FAIL" }
                )?;
                for (name, check) in ["S", "m", "chi", "C"].iter().zip(fd.checks()) {
                    writeln!(
                        out,
                        "{name}: closed form {} finite difference {} relative error {:e} (tol {:e}) {}",
                        format_value(check.analytic),
                        format_value(check.numeric),
                        check.relative_error,
                        check.tolerance,
                        if check.passed { "ok" } else { "FAIL" }
                    )?;
                }
                writeln!(out, "{}", if passed { "PASS" } else { "FAIL" })?;
            }
            Ok(if passed {
                Outcome::Success
            } else {
                Outcome::VerificationFailed
            })
        }
        CommandKind::Peaks => {
            let table = sweep_1d(params, state, &config.grids[0])?;
            let (coord, value) = if config.refine {
                refine_peak(&table, config.observable, 1e-12)?
            } else {
                find_peak(&table, config.observable)?
            };
            let axis = config.grids[0].axis;
            let name = config.observable.name();
            if config.format == Some(Format::Json) {
                writeln!(
                    out,
                    "{}",
                    json!({ "axis": axis, "coordinate": coord, "observable": name, "value": value })
                )?;
            } else {
                writeln!(
                    out,
                    "{axis} = {}, {name} = {}",
                    format_value(coord),
                    format_value(value)
                )?;
            }
            Ok(Outcome::Success)
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    let config = RunConfig::from_command(command)?;
    match &config.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            let outcome = run(&config, &mut file)?;
            file.flush()?;
            Ok(outcome)
        }
        None => run(&config, stdout),
    }
}

/// Parses `args` and runs the command, returning the process exit status.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) if e.is_broken_pipe() => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
