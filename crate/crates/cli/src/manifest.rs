use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliResult;
use crate::io::{write_json, SCHEMA_VERSION};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct Versions {
    pub l1dom: &'static str,
    pub l1dom_cli: &'static str,
    pub schema: u32,
}

/// Record of one command run, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    /// The resolved arguments, enough to re-run the command.
    pub args: Value,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub versions: Versions,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
    pub summary: Value,
}

/// Started at command entry, finished once outputs are on disk.
pub struct RunClock {
    started: SystemTime,
    instant: Instant,
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl RunClock {
    pub fn start() -> Self {
        Self { started: SystemTime::now(), instant: Instant::now() }
    }

    pub fn finish(
        &self,
        command: &str,
        args: Value,
        config_path: Option<&Path>,
        output_dir: &Path,
        outputs: &[&str],
        summary: Value,
    ) -> CliResult<RunManifest> {
        let mut outputs: Vec<String> = outputs.iter().map(|s| s.to_string()).collect();
        outputs.push(MANIFEST_FILE.to_string());
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            args,
            config_path: config_path.map(Path::to_path_buf),
            output_dir: output_dir.to_path_buf(),
            versions: Versions { l1dom: l1dom::VERSION, l1dom_cli: env!("CARGO_PKG_VERSION"), schema: SCHEMA_VERSION },
            started_unix: unix_seconds(self.started),
            finished_unix: unix_seconds(SystemTime::now()),
            wall_clock_seconds: self.instant.elapsed().as_secs_f64(),
            outputs,
            summary,
        };
        write_json(&output_dir.join(MANIFEST_FILE), &manifest)?;
        Ok(manifest)
    }
}
