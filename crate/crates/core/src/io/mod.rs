//! Scenario files, run directories and the tables written into them.

pub mod output;
pub mod report;
pub mod scenario;

use std::path::{Path, PathBuf};

use crate::astro::AstroError;
use crate::ephemeris::EphemerisError;
use crate::propagator::PropagationError;

pub use output::{events_csv, fmt_sig, trajectory_csv, EVENTS_HEADER, TRAJECTORY_HEADER};
pub use scenario::{echo_scenario, parse_scenario, parse_scenario_file, ScenarioError};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error(transparent)]
    Ephemeris(#[from] EphemerisError),
    #[error(transparent)]
    Astro(#[from] AstroError),
}

/// Environment variable naming the default output root.
pub const RUN_DIR_ENV: &str = "CISLUNAR_RUN_DIR";

/// Directory receiving every file of one run.
#[derive(Debug, Clone)]
pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    /// `<root>/<name>`, where root is `root`, else `$CISLUNAR_RUN_DIR`, else `runs`.
    pub fn create(root: Option<&Path>, name: &str) -> Result<Self, IoError> {
        let root = root
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(RUN_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs"));
        let path = root.join(name);
        std::fs::create_dir_all(&path).map_err(|source| IoError::File {
            path: path.clone(),
            source,
        })?;
        Ok(Self { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, IoError> {
        let path = self.file(name);
        std::fs::write(&path, contents).map_err(|source| IoError::File {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }
}
