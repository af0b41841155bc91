//! Run-directory plumbing: every run writes into a `<name>.partial`
//! working directory that is atomically renamed on completion, so
//! downstream consumers never observe half-written artifacts. Each
//! finished directory holds the config echo, a versioned manifest, the
//! trajectory CSV, and (when a fit was requested) the fit report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::HarnessError;

/// Environment variable that overrides every other output-root choice.
pub const OUTPUT_DIR_ENV: &str = "FLUIDS_OUTPUT_DIR";

/// Current manifest schema version.
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Resolves the output root: the environment override wins, then the
/// caller's request, then `./runs`.
pub fn output_root(requested: Option<&Path>) -> PathBuf {
    if let Ok(env_root) = std::env::var(OUTPUT_DIR_ENV) {
        if !env_root.is_empty() {
            return PathBuf::from(env_root);
        }
    }
    requested
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Summary record written as `manifest.json` in every run directory.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stepper: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub warnings: Vec<String>,
    /// Physics abort description when the run halted early.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort: Option<String>,
    /// Blow-up monitor verdict for the stretching models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    /// Named scalar measurements (rotation speed, fit numbers, drifts).
    pub measured: BTreeMap<String, f64>,
    pub steps: usize,
    pub samples: usize,
    pub wall_time_seconds: f64,
}

impl Manifest {
    pub fn new(model: &str) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            model: model.to_string(),
            stepper: None,
            n: None,
            dt: None,
            t_end: None,
            seed: None,
            warnings: Vec::new(),
            abort: None,
            verdict: None,
            measured: BTreeMap::new(),
            steps: 0,
            samples: 0,
            wall_time_seconds: 0.0,
        }
    }
}

/// A run directory in its working (`.partial`) state.
#[derive(Debug)]
pub struct RunDir {
    work: PathBuf,
    target: PathBuf,
}

impl RunDir {
    /// Creates `<root>/<name>.partial`, picking `<name>-2`, `<name>-3`, …
    /// if earlier runs already claimed the name.
    pub fn create(root: &Path, name: &str) -> Result<Self, HarnessError> {
        fs::create_dir_all(root)
            .map_err(|e| HarnessError::Io(format!("creating output root {root:?}: {e}")))?;
        for attempt in 0..1000u32 {
            let candidate = if attempt == 0 {
                name.to_string()
            } else {
                format!("{name}-{}", attempt + 1)
            };
            let target = root.join(&candidate);
            let work = root.join(format!("{candidate}.partial"));
            if target.exists() || work.exists() {
                continue;
            }
            return match fs::create_dir(&work) {
                Ok(()) => Ok(Self { work, target }),
                Err(e) => Err(HarnessError::Io(format!(
                    "creating run directory {work:?}: {e}"
                ))),
            };
        }
        Err(HarnessError::Io(format!(
            "could not find a free run name under {root:?} for {name}"
        )))
    }

    /// Path of the working directory; files written here become part of
    /// the finished run.
    pub fn path(&self) -> &Path {
        &self.work
    }

    pub fn write_text(&self, file: &str, contents: &str) -> Result<(), HarnessError> {
        fs::write(self.work.join(file), contents)
            .map_err(|e| HarnessError::Io(format!("writing {file}: {e}")))
    }

    pub fn write_json<T: Serialize>(&self, file: &str, value: &T) -> Result<(), HarnessError> {
        let body = serde_json::to_string_pretty(value)
            .map_err(|e| HarnessError::Io(format!("encoding {file}: {e}")))?;
        self.write_text(file, &(body + "\n"))
    }

    /// Writes a CSV with one header row and `Display`-formatted cells,
    /// which keeps float output in shortest round-trip form and therefore
    /// bit-stable for identical runs.
    pub fn write_csv(&self, file: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), HarnessError> {
        let mut out = String::new();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        self.write_text(file, &out)
    }

    /// Finalizes the directory with an atomic rename and returns the
    /// finished path.
    pub fn finish(self) -> Result<PathBuf, HarnessError> {
        fs::rename(&self.work, &self.target).map_err(|e| {
            HarnessError::Io(format!(
                "renaming {:?} to {:?}: {e}",
                self.work, self.target
            ))
        })?;
        Ok(self.target)
    }
}
