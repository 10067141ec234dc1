use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::session::{Session, SessionError, TraceRecord};
use crate::devices::{load_script, Script, ScriptError};
use crate::dsl::{instantiate, parse, validate, Diagnostic, FactoryRegistry, InstantiateError, ParseError, World, WorldSpec};

pub const DEFAULT_DT: f64 = 1.0 / 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub world_path: PathBuf,
    pub script_path: PathBuf,
    pub steps: u64,
    pub dt: f64,
    /// `None` writes the trace to standard output.
    pub trace_path: Option<PathBuf>,
    /// Recorded in the trace header only; nothing in a run is random.
    pub seed: u64,
}

impl RunConfig {
    pub fn new(world_path: impl Into<PathBuf>, script_path: impl Into<PathBuf>, steps: u64) -> Self {
        RunConfig {
            world_path: world_path.into(),
            script_path: script_path.into(),
            steps,
            dt: DEFAULT_DT,
            trace_path: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read `{path}`: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: invalid world")]
    Invalid {
        path: PathBuf,
        diagnostics: Vec<Diagnostic>,
    },
    #[error("{path}: {source}")]
    Instantiate {
        path: PathBuf,
        source: InstantiateError,
    },
    #[error("{path}:{source}")]
    Script { path: PathBuf, source: ScriptError },
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("cannot write trace `{path}`: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit status: 2 for files that cannot be read or parsed as a
    /// world, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse { .. } => 2,
            _ => 1,
        }
    }

    /// One line per problem, with locations.
    pub fn lines(&self) -> Vec<String> {
        match self {
            HarnessError::Invalid { path, diagnostics } => diagnostics
                .iter()
                .map(|d| format!("{}:{d}", path.display()))
                .collect(),
            HarnessError::Instantiate {
                path,
                source: InstantiateError::Invalid(diagnostics),
            } => diagnostics
                .iter()
                .map(|d| format!("{}:{d}", path.display()))
                .collect(),
            other => vec![other.to_string()],
        }
    }
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
        path: path.to_owned(),
        source,
    })
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn parse_world_file(path: &Path) -> Result<(String, WorldSpec), HarnessError> {
    let text = read(path)?;
    let spec = parse(&text).map_err(|source| HarnessError::Parse {
        path: path.to_owned(),
        source,
    })?;
    Ok((text, spec))
}

/// Parses and validates a world file.
pub fn validate_world_file(path: &Path, reg: &FactoryRegistry) -> Result<WorldSpec, HarnessError> {
    let (_, spec) = parse_world_file(path)?;
    let diagnostics = validate(&spec, reg);
    if diagnostics.is_empty() {
        Ok(spec)
    } else {
        Err(HarnessError::Invalid {
            path: path.to_owned(),
            diagnostics,
        })
    }
}

pub fn load_world_file(path: &Path, reg: &FactoryRegistry) -> Result<(String, WorldSpec, World), HarnessError> {
    let (text, spec) = parse_world_file(path)?;
    let world = instantiate(&spec, reg).map_err(|source| HarnessError::Instantiate {
        path: path.to_owned(),
        source,
    })?;
    Ok((text, spec, world))
}

pub fn load_script_file(path: &Path) -> Result<(String, Script), HarnessError> {
    let text = read(path)?;
    let script = load_script(&text).map_err(|source| HarnessError::Script {
        path: path.to_owned(),
        source,
    })?;
    Ok((text, script))
}

/// First line of every trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceHeader {
    pub itflow: &'static str,
    pub world: String,
    pub world_sha256: String,
    pub script: String,
    pub script_sha256: String,
    pub steps: u64,
    pub dt: f64,
    pub seed: u64,
}

/// Header plus one JSON line per record.
pub fn render_trace(header: &TraceHeader, records: &[TraceRecord]) -> String {
    let mut out = serde_json::to_string(header).expect("header serializes");
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Writes `text` to `path` through a temporary file in the same directory,
/// so `path` either holds the whole trace or is left untouched.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), HarnessError> {
    let err = |source| HarnessError::Write {
        path: path.to_owned(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_owned(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(err)?;
    tmp.write_all(text.as_bytes()).map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub trace: String,
    pub records: usize,
    pub quit: bool,
}

/// Loads, runs and renders a trace without touching the file system beyond
/// reading inputs.
pub fn run_trace(cfg: &RunConfig, reg: &FactoryRegistry) -> Result<RunOutcome, HarnessError> {
    let (world_text, spec, world) = load_world_file(&cfg.world_path, reg)?;
    let (script_text, script) = load_script_file(&cfg.script_path)?;
    let mut session = Session::new(spec, world, script, cfg.dt)?;
    let records = session.run(cfg.steps)?;
    let header = TraceHeader {
        itflow: env!("CARGO_PKG_VERSION"),
        world: cfg.world_path.display().to_string(),
        world_sha256: sha256_hex(&world_text),
        script: cfg.script_path.display().to_string(),
        script_sha256: sha256_hex(&script_text),
        steps: cfg.steps,
        dt: cfg.dt,
        seed: cfg.seed,
    };
    Ok(RunOutcome {
        trace: render_trace(&header, &records),
        records: records.len(),
        quit: session.quit_requested(),
    })
}

/// `itflow run`: the trace goes to `trace_path` atomically, or is returned
/// for printing when no path is set. A failed run leaves no trace file.
pub fn cmd_run(cfg: &RunConfig, reg: &FactoryRegistry) -> Result<RunOutcome, HarnessError> {
    let outcome = run_trace(cfg, reg)?;
    if let Some(path) = &cfg.trace_path {
        write_atomic(path, &outcome.trace)?;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        write_atomic(&p, "one\n").unwrap();
        write_atomic(&p, "two\n").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn sha_of_empty_text() {
        // published SHA-256 of the empty string
        assert_eq!(
            sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
