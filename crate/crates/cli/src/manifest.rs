use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

/// Record of one run. Everything but the timing fields is a function of the
/// command line and the inputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub arguments: serde_json::Value,
    pub seed: u64,
    pub threads: usize,
    pub inputs: Vec<PathBuf>,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
    pub status: &'static str,
    pub exit_code: u8,
    pub error: Option<String>,
    pub summary: serde_json::Value,
    pub started_unix: u64,
    pub elapsed_seconds: f64,
}

pub struct RunClock {
    start: Instant,
    unix: u64,
}

impl RunClock {
    pub fn start() -> Self {
        Self {
            start: Instant::now(),
            unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        }
    }

    pub fn unix(&self) -> u64 {
        self.unix
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

/// Tracks the files a command writes.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub written: Vec<String>,
    pub inputs: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            ..Self::default()
        }
    }

    /// Path for `name` inside the output directory, recorded as written.
    pub fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }
}
