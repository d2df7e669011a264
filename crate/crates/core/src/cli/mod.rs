//! Command-line front end: `list-models`, `spectrum` and `verify`.
//!
//! Exit status: 0 when every executed check passes, 1 when a check fails
//! (or nothing could be executed), 2 for configuration, construction and
//! I/O errors, 3 when an eigensolver fails.

pub mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::catalog;
use crate::operators::{Construction, Hermiticity};
use crate::spectra::{eigen_general, eigen_hermitian, match_spectra, Vectors};
use crate::verify::{build_pair, run_all, VerificationReport};
use config::{load_config, resolve, ResolvedRun};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

pub const SPECTRA_HEADER: &str = "level,re_hermitian,re_pseudo,im_pseudo,abs_diff";

#[derive(Debug, Parser)]
#[command(name = "phsolve", version, about = "Isospectral Hermitian / pseudo-Hermitian Hamiltonian pairs on finite-difference grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List catalog models with their parameters.
    ListModels,
    /// Diagonalize both partners and write the matched spectra as CSV.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.spectra`; stdout when neither is given.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification checks and write a JSON report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.report`; stdout when neither is given.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

pub fn exit_code_for(err: &Error) -> u8 {
    if err.is_solver() {
        EXIT_SOLVER
    } else {
        EXIT_CONFIG
    }
}

/// Parses arguments, runs the command and maps the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            return ExitCode::from(code);
        }
    };
    faer::set_global_parallelism(faer::Par::Seq);
    let outcome = match cli.command {
        Command::ListModels => {
            print!("{}", list_models());
            Ok(EXIT_PASS)
        }
        Command::Spectrum { config, out } => cmd_spectrum(&config, out.as_deref()),
        Command::Verify { config, report } => cmd_verify(&config, report.as_deref()),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("phsolve: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

pub fn list_models() -> String {
    let mut out = String::new();
    for e in catalog::entries() {
        let _ = writeln!(out, "{}", e.name);
        let _ = writeln!(out, "  dimension:      {}", e.dimension);
        let _ = writeln!(out, "  representation: {}", e.representation);
        let _ = writeln!(out, "  params:         {}", e.defaults);
        let _ = writeln!(out, "  model:          {}", e.summary);
        let _ = writeln!(out, "  oracle:         {}", e.oracle);
    }
    let _ = writeln!(
        out,
        "every model also accepts `{}` (relative perturbation of f' in the non-Hermitian partner)",
        catalog::CORRUPTION_PARAM
    );
    out
}

fn write_output(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, contents).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(contents.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

/// One CSV table of matched levels for a single construction mode.
pub fn spectra_csv(run: &ResolvedRun, mode: Construction) -> Result<String> {
    let (hh, h) = build_pair(&run.model, &run.setup.grid, run.setup.scheme, mode)?;
    let hermitian = eigen_hermitian(&hh, Vectors::None)?;
    // with f = 0 the two partners coincide and share a solver
    let pseudo = match h.hermiticity {
        Hermiticity::Hermitian => eigen_hermitian(&h, Vectors::None)?,
        _ => eigen_general(&h, Vectors::None)?,
    };
    let report = match_spectra(&pseudo, &hermitian, run.setup.k_levels, f64::INFINITY, f64::INFINITY)?;
    let mut out = String::from(SPECTRA_HEADER);
    out.push('\n');
    for pair in &report.pairs {
        let re_h = hermitian.eigenvalues[pair.index_b].re;
        let z = pseudo.eigenvalues[pair.index_a];
        let _ = writeln!(
            out,
            "{},{:.15e},{:.15e},{:.15e},{:.15e}",
            pair.index_a,
            re_h,
            z.re,
            z.im,
            (z.re - re_h).abs()
        );
    }
    Ok(out)
}

/// `spectra.csv` → `spectra_similarity.csv`.
pub fn similarity_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("spectra");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_similarity.{ext}"),
        None => format!("{stem}_similarity"),
    };
    path.with_file_name(name)
}

/// Writes the spectra table. With mode `both` the continuum table goes to the
/// given path and the similarity table next to it with a `_similarity`
/// suffix (only the continuum table when writing to stdout).
pub fn cmd_spectrum(config_path: &Path, out: Option<&Path>) -> Result<u8> {
    let run = resolve(&load_config(config_path)?)?;
    let path = out.map(Path::to_path_buf).or_else(|| run.config.output.spectra.clone());
    let modes = run.setup.modes.modes();
    let primary = spectra_csv(&run, modes[0])?;
    if let (Some(path), Some(&second)) = (path.as_deref(), modes.get(1)) {
        let table = spectra_csv(&run, second)?;
        write_output(Some(path), &primary)?;
        write_output(Some(&similarity_path(path)), &table)?;
    } else {
        write_output(path.as_deref(), &primary)?;
    }
    Ok(EXIT_PASS)
}

#[derive(Debug, Serialize)]
pub struct ReportDocument<'a> {
    #[serde(flatten)]
    pub report: &'a VerificationReport,
    pub resolved_config: &'a config::RunConfig,
    pub meta: Value,
}

pub fn report_json(report: &VerificationReport, run: &ResolvedRun) -> Result<String> {
    let doc = ReportDocument {
        report,
        resolved_config: &run.config,
        meta: json!({
            "version": env!("CARGO_PKG_VERSION"),
            "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }),
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::config(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn verify_exit_code(report: &VerificationReport) -> u8 {
    if report.has_solver_failure() {
        EXIT_SOLVER
    } else if report.overall {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    }
}

pub fn cmd_verify(config_path: &Path, report_path: Option<&Path>) -> Result<u8> {
    let run = resolve(&load_config(config_path)?)?;
    let path = report_path.map(Path::to_path_buf).or_else(|| run.config.output.report.clone());
    let report = match run_all(&run.model, &run.setup) {
        Ok(report) => report,
        Err(Error::EmptyReport) => {
            eprintln!("phsolve: no check could be executed");
            return Ok(EXIT_CHECK_FAILED);
        }
        Err(e) => return Err(e),
    };
    write_output(path.as_deref(), &report_json(&report, &run)?)?;
    for check in &report.checks {
        let status = match (&check.skipped, check.passed) {
            (Some(_), _) => "skip",
            (None, true) => "pass",
            (None, false) => "FAIL",
        };
        eprintln!("{status:4} {:32} residual {:.3e} tol {:.3e}", check.check_id, check.residual, check.tolerance);
    }
    Ok(verify_exit_code(&report))
}
