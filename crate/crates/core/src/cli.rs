//! Command-line front end.
//!
//! Exit codes: `0` success, `2` input error, `3` numerical guard tripped or a
//! `--check` invariant failed.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::control::PerturbationKind;
use crate::datamat::{load_trajectory, StackedData, TrajectoryFormat};
use crate::demos;
use crate::engine::{Identifier, LinearModel, Provenance};
use crate::error::{Error, Result};
use crate::experiment::{check_trace, run_experiment, run_trace, ExperimentConfig, TraceRow, TruthReference};
use crate::subspace::{distance, RankPolicy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "transid", version, about = "Online transfer identification of LTI systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Driven,
    Autonomous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Dist {
    Uniform,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    Scalar,
    Poleplace,
}

#[derive(Debug, clap::Args)]
pub struct RunOptions {
    /// Relative singular-value tolerance for numerical rank.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Trace CSV destination (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of trace columns.
    #[arg(long, value_delimiter = ',')]
    pub trace_cols: Option<Vec<String>>,
    /// Verify monotonicity of the distance columns; exit 3 on violation.
    #[arg(long)]
    pub check: bool,
    /// Final model JSON destination.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Identify from a similar-system trajectory and a true-system trajectory.
    Identify {
        #[arg(long)]
        similar: PathBuf,
        #[arg(long = "true")]
        true_data: PathBuf,
        /// Known true model (JSON) enabling the truth-dependent trace columns.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[command(flatten)]
        run: RunOptions,
    },
    /// Random truth, perturbed similar system, identification to completion.
    Experiment {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Dist::Uniform)]
        dist: Dist,
        #[arg(long, default_value_t = 300)]
        length: usize,
        #[command(flatten)]
        run: RunOptions,
    },
    /// Built-in worked examples.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
    },
}

/// Model file layout: row-major `A` and `B`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(default)]
    pub steps: usize,
    #[serde(default)]
    pub completed: bool,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], nrows: usize, ncols: usize, path: &str, name: &str) -> Result<DMatrix<f64>> {
    let format = |message: String| Error::Format {
        path: path.to_string(),
        message,
    };
    if rows.len() != nrows {
        return Err(format(format!("{name} has {} rows, expected {nrows}", rows.len())));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(format(format!("{name} row {} has {} entries, expected {ncols}", bad + 1, rows[bad].len())));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl ModelFile {
    pub fn from_model(model: &LinearModel<f64>, steps: usize, completed: bool) -> Self {
        Self {
            n: model.n(),
            m: model.m(),
            a: rows_of(model.a()),
            b: rows_of(model.b()),
            steps,
            completed,
        }
    }

    pub fn to_model(&self, path: &str) -> Result<LinearModel<f64>> {
        let a = matrix_from_rows(&self.a, self.n, self.n, path, "A")?;
        let b = if self.m == 0 && self.b.is_empty() {
            DMatrix::zeros(self.n, 0)
        } else {
            matrix_from_rows(&self.b, self.n, self.m, path, "B")?
        };
        LinearModel::new(a, b, Provenance::Truth)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        serde_json::from_reader(io::BufReader::new(file)).map_err(|e| Error::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }
}

/// Columns to emit: the requested subset, or every column available.
fn select_columns(requested: Option<&[String]>, has_truth: bool) -> Result<Vec<&'static str>> {
    let available: Vec<&'static str> = TraceRow::COLUMNS
        .iter()
        .copied()
        .filter(|c| has_truth || !TraceRow::is_truth_column(c))
        .collect();
    let Some(requested) = requested else {
        return Ok(available);
    };
    let mut cols = Vec::new();
    for name in requested {
        let name = name.trim();
        let Some(col) = TraceRow::COLUMNS.iter().copied().find(|c| *c == name) else {
            return Err(Error::InvalidArgument(format!("unknown trace column '{name}'")));
        };
        if !available.contains(&col) {
            return Err(Error::InvalidArgument(format!("trace column '{name}' requires a known true model")));
        }
        cols.push(col);
    }
    if cols.is_empty() {
        return Err(Error::InvalidArgument("no trace columns selected".into()));
    }
    Ok(cols)
}

pub fn write_trace<W: Write>(rows: &[TraceRow], cols: &[&str], w: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(cols).map_err(io::Error::from)?;
    for row in rows {
        let record: Vec<String> = cols.iter().map(|c| row.cell(c).unwrap_or_default()).collect();
        writer.write_record(&record).map_err(io::Error::from)?;
    }
    writer.flush()?;
    Ok(())
}

fn emit_trace(rows: &[TraceRow], cols: &[&str], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => write_trace(rows, cols, BufWriter::new(File::create(path)?)),
        None => write_trace(rows, cols, io::stdout().lock()),
    }
}

fn policy(tol: f64) -> Result<RankPolicy<f64>> {
    RankPolicy::new(tol)
}

fn enforce_check(rows: &[TraceRow], initial: (f64, Option<f64>)) -> Result<()> {
    let problems = check_trace(rows, initial, 1e-9);
    if problems.is_empty() {
        return Ok(());
    }
    Err(Error::Numerical(format!("check failed: {}", problems.join("; "))))
}

pub fn cmd_identify(
    similar: &Path,
    true_data: &Path,
    truth: Option<&Path>,
    mode: Option<Mode>,
    run: &RunOptions,
) -> Result<()> {
    let policy = policy(run.tol)?;
    let similar_traj = load_trajectory::<f64>(similar, TrajectoryFormat::from_path(similar))?;
    let true_traj = load_trajectory::<f64>(true_data, TrajectoryFormat::from_path(true_data))?;
    if similar_traj.n() != true_traj.n() || similar_traj.m() != true_traj.m() {
        return Err(Error::InvalidArgument(format!(
            "dimension disagreement: similar data has (n, m) = ({}, {}), true data has ({}, {})",
            similar_traj.n(),
            similar_traj.m(),
            true_traj.n(),
            true_traj.m()
        )));
    }
    match (mode, similar_traj.is_autonomous()) {
        (Some(Mode::Driven), true) => {
            return Err(Error::ModeMismatch("driven mode needs input columns in the data".into()))
        }
        (Some(Mode::Autonomous), false) => {
            return Err(Error::ModeMismatch("autonomous mode needs data without input columns".into()))
        }
        _ => {}
    }

    let truth_model = truth
        .map(|p| ModelFile::load(p)?.to_model(&p.display().to_string()))
        .transpose()?;
    if let Some(t) = &truth_model {
        if t.n() != similar_traj.n() || t.m() != similar_traj.m() {
            return Err(Error::InvalidArgument("true model dimensions disagree with the data".into()));
        }
    }
    let cols = select_columns(run.trace_cols.as_deref(), truth_model.is_some())?;

    let mut identifier = Identifier::new(&StackedData::stack(&similar_traj)?, policy)?;
    let reference = truth_model.as_ref().map(|t| TruthReference::new(t, &policy));
    let initial = (
        0.0,
        reference
            .as_ref()
            .map(|r| distance(&r.space, identifier.current_subspace()))
            .transpose()?,
    );
    let rows = run_trace(&mut identifier, true_traj.snapshots(), reference.as_ref())?;
    emit_trace(&rows, &cols, run.out.as_deref())?;
    if let Some(path) = &run.model_out {
        ModelFile::from_model(identifier.model(), identifier.step(), identifier.is_complete()).save(path)?;
    }
    if run.check {
        enforce_check(&rows, initial)?;
    }
    Ok(())
}

pub fn cmd_experiment(config: &ExperimentConfig, run: &RunOptions) -> Result<()> {
    let cols = select_columns(run.trace_cols.as_deref(), true)?;
    let result = run_experiment::<f64>(config, policy(run.tol)?)?;
    emit_trace(&result.rows, &cols, run.out.as_deref())?;
    if let Some(path) = &run.model_out {
        let id = &result.identifier;
        ModelFile::from_model(id.model(), id.step(), id.is_complete()).save(path)?;
    }
    if run.check {
        enforce_check(&result.rows, (0.0, Some(result.initial_d_to_truth)))?;
        if !result.identifier.is_complete() {
            return Err(Error::Numerical("check failed: identification did not complete".into()));
        }
    }
    Ok(())
}

pub fn cmd_demo<W: Write>(name: DemoName, out: &mut W) -> Result<()> {
    match name {
        DemoName::Scalar => write!(out, "{}", demos::scalar_demo()?)?,
        DemoName::Poleplace => write!(out, "{}", demos::poleplace_demo()?)?,
    }
    Ok(())
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical_guard() {
        EXIT_GUARD
    } else {
        EXIT_INPUT
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Identify {
            similar,
            true_data,
            truth,
            mode,
            run,
        } => cmd_identify(&similar, &true_data, truth.as_deref(), mode, &run),
        Command::Experiment {
            n,
            m,
            sigma,
            seed,
            dist,
            length,
            run,
        } => {
            let mut config = ExperimentConfig::new(n, m, sigma, seed);
            config.length = length;
            config.distribution = match dist {
                Dist::Uniform => PerturbationKind::Uniform,
                Dist::Gaussian => PerturbationKind::Gaussian,
            };
            cmd_experiment(&config, &run)
        }
        Command::Demo { name } => cmd_demo(name, &mut io::stdout().lock()),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
