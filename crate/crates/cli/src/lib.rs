//! Command-line front end for `patchdyn`.
//!
//! [`run`] parses arguments, resolves a [`scenario::Scenario`] from a
//! preset, a scenario file or flags, executes it, writes the requested
//! outputs and prints a JSON run manifest on standard output.

pub mod args;
pub mod commands;
pub mod error;
pub mod gnuplot;
pub mod presets;
pub mod resolve;
pub mod scenario;
pub mod table;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Cli, Command, PresetsAction};
use crate::commands::Report;
use crate::error::{CliError, EXIT_USAGE};
use crate::scenario::{Format, Scenario};
use crate::table::Table;

/// Environment variable capping the worker threads used by sweeps, basin
/// maps and portraits.
pub const THREADS_ENV: &str = "PATCHDYN_THREADS";

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub timestamp: String,
    pub scenario: Option<&'a Scenario>,
    pub derived: Value,
    pub outputs: Vec<String>,
    pub warnings: &'a [String],
    pub wall_clock_seconds: f64,
    pub result: Value,
}

/// Runs the tool with `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Validation(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // The global pool can only be built once per process; later calls keep
    // the first setting.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn execute(command: &Command, stdout: &mut dyn Write) -> Result<i32, CliError> {
    configure_threads()?;
    let started = Instant::now();

    let (name, scenario, report) = match command {
        Command::Presets {
            action: PresetsAction::List(common),
        } => {
            let format = match common.format {
                Some(args::FormatArg::Json) => Format::Json,
                _ => Format::Csv,
            };
            let report = commands::presets_list();
            let outputs = write_tables(&report.tables, common.out.as_deref(), format)?;
            return finish(stdout, "presets list", None, &report, outputs, started).map(|_| 0);
        }
        other => {
            let (name, sc) = resolve::resolve(other)?;
            let report = match name {
                "equilibria" => commands::equilibria(&sc)?,
                "regime" => commands::regime(&sc)?,
                "sweep" => commands::sweep(&sc)?,
                "sensitivity" => commands::sensitivity(&sc)?,
                "simulate-ode" => commands::simulate_ode(&sc)?,
                "basin" => commands::basin(&sc)?,
                "portrait" => commands::portrait(&sc)?,
                "simulate-pde" => commands::simulate_pde(&sc)?,
                _ => unreachable!("resolve returns known commands"),
            };
            (name, sc, report)
        }
    };

    if scenario.gnuplot && (scenario.out.is_none() || scenario.format != Format::Csv) {
        return Err(CliError::Validation("--gnuplot needs --out and CSV format".into()));
    }
    let mut outputs = write_tables(&report.tables, scenario.out.as_deref(), scenario.format)?;
    if scenario.gnuplot {
        outputs.push(write_gnuplot(name, &report.tables, &outputs)?);
    }
    finish(stdout, name, Some(&scenario), &report, outputs, started)?;
    match &report.failure {
        Some(reason) => Err(CliError::Numeric(reason.clone())),
        None => Ok(0),
    }
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

/// Writes each table and returns the paths written. A single table goes to
/// `out` itself unless `out` names a directory; several tables go into the
/// directory `out` as `<table>.<ext>`.
fn write_tables(tables: &[Table], out: Option<&Path>, format: Format) -> Result<Vec<PathBuf>, CliError> {
    let Some(out) = out else {
        return Ok(Vec::new());
    };
    let as_dir = tables.len() > 1
        || out.is_dir()
        || out.as_os_str().to_string_lossy().ends_with(std::path::MAIN_SEPARATOR);
    let paths: Vec<PathBuf> = if as_dir {
        fs::create_dir_all(out)?;
        tables
            .iter()
            .map(|t| out.join(format!("{}.{}", t.name, extension(format))))
            .collect()
    } else {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        vec![out.to_path_buf()]
    };
    for (t, path) in tables.iter().zip(&paths) {
        let mut w = BufWriter::new(File::create(path)?);
        match format {
            Format::Csv => t.write_csv(&mut w)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, &t.to_json())?;
                w.write_all(b"\n")?;
            }
        }
        w.flush()?;
    }
    Ok(paths)
}

fn write_gnuplot(command: &str, tables: &[Table], outputs: &[PathBuf]) -> Result<PathBuf, CliError> {
    let first = outputs
        .first()
        .ok_or_else(|| CliError::Validation("--gnuplot needs an output file".into()))?;
    let files: Vec<(&Table, &Path)> = tables.iter().zip(outputs.iter().map(PathBuf::as_path)).collect();
    let png = first
        .with_extension("png")
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let text = gnuplot::script(command, &files, &png)
        .ok_or_else(|| CliError::Validation(format!("no gnuplot script for `{command}`")))?;
    let path = first.with_extension("gp");
    fs::write(&path, text)?;
    Ok(path)
}

fn derived_json(sc: &Scenario) -> Value {
    let Ok((model, members)) = sc.ode_members() else {
        return Value::Null;
    };
    if model != patchdyn::Model::Nonlinear {
        return Value::Null;
    }
    let all: Vec<Value> = members
        .iter()
        .map(|(_, p)| json!(patchdyn::equilibria::derived_thresholds(p)))
        .collect();
    if all.len() == 1 {
        all.into_iter().next().expect("length checked")
    } else {
        Value::Array(all)
    }
}

fn finish(
    stdout: &mut dyn Write,
    command: &str,
    scenario: Option<&Scenario>,
    report: &Report,
    outputs: Vec<PathBuf>,
    started: Instant,
) -> Result<(), CliError> {
    let mut result = report.summary.clone();
    if outputs.is_empty() {
        let tables: serde_json::Map<String, Value> = report
            .tables
            .iter()
            .map(|t| (t.name.clone(), t.to_json()))
            .collect();
        if let Value::Object(obj) = &mut result {
            obj.insert("tables".into(), Value::Object(tables));
        }
    }
    let manifest = RunManifest {
        tool: "patchdyn",
        version: env!("CARGO_PKG_VERSION"),
        command,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        scenario,
        derived: scenario.map_or(Value::Null, derived_json),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        warnings: &report.warnings,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        result,
    };
    serde_json::to_writer_pretty(&mut *stdout, &manifest)?;
    stdout.write_all(b"\n")?;
    stdout.flush()?;
    Ok(())
}
