//! Configuration-driven experiment runner: parses a JSON config, runs one
//! command and writes CSV, SVG and a provenance report into an output
//! directory that appears only when the whole run succeeded.

pub mod commands;
pub mod config;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use colombeau::genfun::GridFn;
use serde::Serialize;
use thiserror::Error;

pub use config::ExperimentConfig;

pub const TOOL: &str = "colombeau";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GUARD: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] colombeau::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use colombeau::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(
                E::InvalidEpsGrid(_)
                | E::InvalidSpatialGrid(_)
                | E::GridMismatch(_)
                | E::TooFewPoints { .. }
                | E::InvalidParam { .. }
                | E::Parse(_)
                | E::Unresolved { .. }
                | E::OutOfDomain(_)
                | E::EmptyCone
                | E::NotNull { .. },
            ) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Val,
    Wf,
    Hs,
    Bichar,
    Symbol,
    Prop,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Val => "val",
            Command::Wf => "wf",
            Command::Hs => "hs",
            Command::Bichar => "bichar",
            Command::Symbol => "symbol",
            Command::Prop => "prop",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// Everything a command produces, held in memory until the run succeeded.
pub struct Artifacts {
    /// File name and contents, written in this order.
    pub files: Vec<(String, Vec<u8>)>,
    /// Grid functions saved as subdirectories.
    pub fields: Vec<(String, GridFn)>,
    pub summary: serde_json::Value,
    pub checks: Vec<Check>,
    /// Numerical guard that fired (blow-up truncation).
    pub guard: Option<String>,
    /// The config with every default filled in.
    pub resolved: serde_json::Value,
}

impl Artifacts {
    pub fn new(resolved: &ExperimentConfig) -> Result<Self, CliError> {
        Ok(Artifacts {
            files: Vec::new(),
            fields: Vec::new(),
            summary: serde_json::Value::Null,
            checks: Vec::new(),
            guard: None,
            resolved: serde_json::to_value(resolved)?,
        })
    }

    pub fn add(&mut self, name: impl Into<String>, data: impl Into<Vec<u8>>) {
        self.files.push((name.into(), data.into()));
    }
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'a str,
    version: &'a str,
    command: Command,
    config: &'a serde_json::Value,
    summary: &'a serde_json::Value,
    checks: &'a [Check],
    guard: &'a Option<String>,
}

#[derive(Clone, Debug)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub check: bool,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub checks: Vec<Check>,
    pub guard: Option<String>,
    pub exit_code: i32,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text)
}

/// Parses, runs and writes. A guard takes precedence over failed checks in
/// the exit code; both still leave the full output in place.
pub fn run(inv: &Invocation) -> Result<Outcome, CliError> {
    let cfg = load_config(&inv.config)?;
    let jobs = inv.jobs.or(cfg.jobs);
    if jobs == Some(0) {
        return Err(CliError::Config("`jobs` must be positive".into()));
    }
    let out_dir = inv
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(inv.command.name()));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let art = pool.install(|| commands::execute(inv.command, &cfg))?;
    write_artifacts(&art, inv.command, &out_dir)?;
    let failed = art.checks.iter().any(|c| !c.pass);
    let exit_code = if art.guard.is_some() {
        EXIT_GUARD
    } else if inv.check && failed {
        EXIT_CHECK
    } else {
        EXIT_OK
    };
    Ok(Outcome {
        out_dir,
        checks: art.checks,
        guard: art.guard,
        exit_code,
    })
}

fn staging_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Writes into `<out>.partial` and renames it over `<out>` at the end.
pub fn write_artifacts(art: &Artifacts, command: Command, out: &Path) -> Result<(), CliError> {
    let stage = staging_path(out);
    if stage.exists() {
        fs::remove_dir_all(&stage).map_err(io_err(&stage))?;
    }
    let result = (|| {
        fs::create_dir_all(&stage).map_err(io_err(&stage))?;
        for (name, data) in &art.files {
            let p = stage.join(name);
            fs::write(&p, data).map_err(io_err(&p))?;
        }
        for (name, u) in &art.fields {
            colombeau::io::save_gridfn(u, &stage.join(name), Some(name))?;
        }
        let report = Report {
            tool: TOOL,
            version: VERSION,
            command,
            config: &art.resolved,
            summary: &art.summary,
            checks: &art.checks,
            guard: &art.guard,
        };
        let p = stage.join("report.json");
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        fs::write(&p, text).map_err(io_err(&p))?;
        if out.exists() {
            fs::remove_dir_all(out).map_err(io_err(out))?;
        }
        fs::rename(&stage, out).map_err(io_err(out))
    })();
    if result.is_err() {
        let _ = fs::remove_dir_all(&stage);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), EXIT_CONFIG);
        assert_eq!(
            CliError::Core(colombeau::Error::Parse("x".into())).exit_code(),
            EXIT_CONFIG
        );
        assert_eq!(
            CliError::Core(colombeau::Error::NonFinite(0)).exit_code(),
            EXIT_FAILURE
        );
    }

    #[test]
    fn staged_write_replaces_output() {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("o");
        fs::create_dir_all(&out).unwrap();
        fs::write(out.join("stale.csv"), "old").unwrap();
        let mut art = Artifacts::new(&ExperimentConfig::default()).unwrap();
        art.add("a.csv", "x\n1\n");
        write_artifacts(&art, Command::Val, &out).unwrap();
        assert!(!out.join("stale.csv").exists());
        assert_eq!(fs::read_to_string(out.join("a.csv")).unwrap(), "x\n1\n");
        assert!(!staging_path(&out).exists());
        let rep: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        assert_eq!(rep["command"], "val");
        assert_eq!(rep["version"], VERSION);
    }
}
