//! Batch runner behind the `semiclassics` binary: JSON config in, grid dumps,
//! CSV tables and a manifest out.

mod config;
mod pipelines;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::Orientation;

pub use config::{
    default_grid, CausticSource, CausticsSection, EvolveSection, GradientChoice, HamiltonianSource, HjSection,
    InitialSymbol, IntegratorSettings, KernelSection, KernelSource, OracleSection, Pipeline, Route, RunConfig, Term,
    Tolerances, TrajectorySection,
};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitStatus {
    Success,
    ConfigError,
    NumericalGuard,
    CausticAbort,
    IoError,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::IoError => 1,
            ExitStatus::ConfigError => 2,
            ExitStatus::NumericalGuard => 3,
            ExitStatus::CausticAbort => 4,
        }
    }

    pub fn of(err: &Error) -> Self {
        match err {
            Error::Config { .. } | Error::Parse { .. } | Error::Json(_) => ExitStatus::ConfigError,
            e if e.is_caustic() => ExitStatus::CausticAbort,
            Error::Io(_) => ExitStatus::IoError,
            _ => ExitStatus::NumericalGuard,
        }
    }
}

/// A failure tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("{stage}: {source}")]
pub struct StageError {
    pub stage: String,
    pub status: ExitStatus,
    #[source]
    pub source: Error,
}

impl StageError {
    pub fn new(stage: &str, source: Error) -> Self {
        Self {
            stage: stage.into(),
            status: ExitStatus::of(&source),
            source,
        }
    }

    pub fn with_status(stage: &str, status: ExitStatus, source: Error) -> Self {
        Self {
            stage: stage.into(),
            status,
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub status: ExitStatus,
    pub exit_code: i32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub pipeline: String,
    /// SHA-256 of the raw config bytes.
    pub config_hash: Option<String>,
    pub config_path: Option<PathBuf>,
    pub convention: Option<Orientation>,
    pub tolerances: Option<Tolerances>,
    pub max_residuals: BTreeMap<String, f64>,
    pub counts: BTreeMap<String, u64>,
    /// Values reported for information only (caustic times and the like).
    pub diagnostics: BTreeMap<String, f64>,
    pub stages: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub status: ExitStatus,
    pub failure: Option<Failure>,
}

impl Manifest {
    fn new(pipeline: Pipeline) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            pipeline: pipeline.name().into(),
            config_hash: None,
            config_path: None,
            convention: None,
            tolerances: None,
            max_residuals: BTreeMap::new(),
            counts: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            stages: Vec::new(),
            outputs: Vec::new(),
            status: ExitStatus::Success,
            failure: None,
        }
    }

    pub fn residual(&mut self, name: &str, value: f64) {
        let slot = self.max_residuals.entry(name.into()).or_insert(value);
        // NaN never wins a max; keep the first finite value
        if value > *slot || slot.is_nan() {
            *slot = value;
        }
    }

    pub fn count(&mut self, name: &str, n: u64) {
        *self.counts.entry(name.into()).or_insert(0) += n;
    }

    pub fn diagnostic(&mut self, name: &str, value: f64) {
        self.diagnostics.insert(name.into(), value);
    }

    pub fn exit_code(&self) -> i32 {
        self.status.code()
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub pipeline: Pipeline,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed_convention: Option<Orientation>,
}

/// Everything a pipeline needs once the config is loaded.
pub(crate) struct Context<'a> {
    pub config: &'a RunConfig,
    pub out: PathBuf,
    pub orientation: Orientation,
    pub manifest: &'a mut Manifest,
}

impl Context<'_> {
    pub fn output(&mut self, name: &str) -> PathBuf {
        let path = self.out.join(name);
        self.manifest.outputs.push(PathBuf::from(name));
        path
    }
}

fn load(inv: &Invocation, manifest: &mut Manifest) -> Result<(RunConfig, PathBuf), StageError> {
    let raw = fs::read(&inv.config).map_err(|e| {
        StageError::with_status(
            "load-config",
            ExitStatus::ConfigError,
            Error::Config {
                field: "--config".into(),
                message: format!("{}: {e}", inv.config.display()),
            },
        )
    })?;
    manifest.config_hash = Some(hex::encode(Sha256::digest(&raw)));
    manifest.config_path = Some(inv.config.clone());
    let text = String::from_utf8(raw).map_err(|e| {
        StageError::new(
            "load-config",
            Error::Config {
                field: "<document>".into(),
                message: e.to_string(),
            },
        )
    })?;
    let config = RunConfig::from_json(&text).map_err(|e| StageError::new("parse-config", e))?;
    let base = inv.config.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((config, base))
}

fn output_dir(inv: &Invocation, config: Option<&RunConfig>, base: &Path) -> PathBuf {
    match (&inv.out, config.and_then(|c| c.output.as_ref())) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => PathBuf::from("."),
    }
}

/// Runs one pipeline. The manifest is written to the output directory on
/// every path out of this function that has somewhere to write it.
pub fn run(inv: &Invocation) -> Manifest {
    let mut manifest = Manifest::new(inv.pipeline);
    let fallback = inv.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let (out, result) = match load(inv, &mut manifest) {
        Ok((config, base)) => {
            let out = output_dir(inv, Some(&config), &base);
            let result = execute(inv, &config, &base, &out, &mut manifest);
            (out, result)
        }
        Err(e) => (output_dir(inv, None, &fallback), Err(e)),
    };
    if let Err(e) = result {
        log::error!("{e}");
        manifest.status = e.status;
        manifest.failure = Some(Failure {
            stage: e.stage.clone(),
            status: e.status,
            exit_code: e.status.code(),
            message: e.source.to_string(),
        });
    }
    if let Err(e) = write_manifest(&out, &manifest) {
        log::error!("could not write manifest to {}: {e}", out.display());
        if manifest.status == ExitStatus::Success {
            manifest.status = ExitStatus::IoError;
        }
    }
    manifest
}

fn write_manifest(out: &Path, manifest: &Manifest) -> std::io::Result<()> {
    fs::create_dir_all(out)?;
    let mut json = serde_json::to_string_pretty(manifest)?;
    json.push('\n');
    fs::write(out.join(MANIFEST_NAME), json)
}

fn execute(inv: &Invocation, config: &RunConfig, base: &Path, out: &Path, manifest: &mut Manifest) -> Result<(), StageError> {
    let orientation = inv.seed_convention.or(config.convention).unwrap_or_default();
    manifest.convention = Some(orientation);
    manifest.tolerances = Some(config.tolerances);
    config.validate(inv.pipeline).map_err(|e| StageError::new("validate", e))?;
    manifest.stages.push("validate".into());
    let h = config.hamiltonian(base).map_err(|e| StageError::new("hamiltonian", e))?;
    manifest.stages.push("hamiltonian".into());
    fs::create_dir_all(out).map_err(|e| StageError::new("output-dir", e.into()))?;

    let mut ctx = Context {
        config,
        out: out.to_path_buf(),
        orientation,
        manifest,
    };
    pipelines::run(inv.pipeline, &h, &mut ctx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn invoke(dir: &Path, pipeline: Pipeline, doc: &str) -> Manifest {
        let cfg = dir.join("run.json");
        fs::write(&cfg, doc).unwrap();
        run(&Invocation {
            pipeline,
            config: cfg,
            out: Some(dir.join("out")),
            seed_convention: None,
        })
    }

    #[test]
    fn manifest_is_written_on_config_failure() {
        let dir = tempfile::tempdir().unwrap();
        let m = invoke(dir.path(), Pipeline::Trajectory, r#"{"times": [1.0], "bogus": 1}"#);
        assert_eq!(m.exit_code(), 2);
        let back: Manifest = serde_json::from_slice(&fs::read(dir.path().join("out").join(MANIFEST_NAME)).unwrap()).unwrap();
        assert_eq!(back.failure.unwrap().stage, "parse-config");
        assert!(back.config_hash.is_some());
    }

    #[test]
    fn missing_config_file_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let m = run(&Invocation {
            pipeline: Pipeline::Kernel,
            config: dir.path().join("absent.json"),
            out: Some(dir.path().to_path_buf()),
            seed_convention: None,
        });
        assert_eq!(m.exit_code(), 2);
        assert!(dir.path().join(MANIFEST_NAME).exists());
    }

    #[test]
    fn manifest_is_bit_identical_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let doc = r#"{"hamiltonian": {"preset": {"name": "quartic"}}, "times": [0.25, 0.5],
            "trajectory": {"initial": [0.5, 1.0], "chord": [0.2, -0.1]}}"#;
        invoke(dir.path(), Pipeline::Trajectory, doc);
        let first = fs::read(dir.path().join("out").join(MANIFEST_NAME)).unwrap();
        let csv = fs::read(dir.path().join("out").join("trajectory.csv")).unwrap();
        invoke(dir.path(), Pipeline::Trajectory, doc);
        assert_eq!(first, fs::read(dir.path().join("out").join(MANIFEST_NAME)).unwrap());
        assert_eq!(csv, fs::read(dir.path().join("out").join("trajectory.csv")).unwrap());
    }
}
