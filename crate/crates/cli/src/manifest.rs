use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::CliResult;
use crate::io::{json_bytes, write_atomic};

#[derive(Serialize)]
struct Timing {
    started_unix: f64,
    finished_unix: f64,
    wall_time_secs: f64,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a C,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing: Option<Timing>,
}

/// Clock for a run; timing is recorded in the manifest only on request so that
/// default outputs stay byte-identical across reruns.
pub struct RunClock {
    started: SystemTime,
    instant: Instant,
    record: bool,
}

impl RunClock {
    pub fn start(record: bool) -> Self {
        Self {
            started: SystemTime::now(),
            instant: Instant::now(),
            record,
        }
    }

    pub fn write_manifest(&self, path: &Path, command: &str, config: &impl Serialize, outputs: &[PathBuf]) -> CliResult<()> {
        let unix = |t: SystemTime| t.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
        let timing = self.record.then(|| Timing {
            started_unix: unix(self.started),
            finished_unix: unix(SystemTime::now()),
            wall_time_secs: self.instant.elapsed().as_secs_f64(),
        });
        let m = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            timing,
        };
        write_atomic(path, &json_bytes(&m)?)
    }
}
