use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    CheckFailed,
    Error,
    UsageError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub format: &'static str,
}

/// Record of one invocation, written even when the run fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub status: Status,
    pub exit_code: i32,
    pub message: Option<String>,
    pub outputs: Vec<OutputFile>,
}

pub fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(argv: &[String]) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand: String::new(),
            argv: argv.to_vec(),
            parameters: serde_json::Value::Null,
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
            status: Status::Error,
            exit_code: 1,
            message: None,
            outputs: Vec::new(),
        }
    }

    pub fn write(&mut self, path: &Path) -> std::io::Result<()> {
        self.finished_unix_ms = now_ms();
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(path, text)
    }
}

/// Explicit `--manifest`, else `<first output>.manifest.json`.
pub fn manifest_path(
    explicit: Option<&Path>,
    csv: Option<&Path>,
    json: Option<&Path>,
) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    csv.or(json).map(|p| {
        let mut s = p.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    })
}

/// Best-effort recovery of the path flags from an argv that failed to parse.
pub fn scan_paths(argv: &[String]) -> (Option<PathBuf>, Option<PathBuf>, Option<PathBuf>) {
    let mut found = [None, None, None];
    let names = ["--manifest", "--csv", "--json"];
    let mut it = argv.iter().skip(1);
    while let Some(arg) = it.next() {
        for (slot, name) in found.iter_mut().zip(names) {
            if arg == name {
                if let Some(v) = it.clone().next() {
                    *slot = Some(PathBuf::from(v));
                }
            } else if let Some(v) = arg.strip_prefix(name).and_then(|r| r.strip_prefix('=')) {
                *slot = Some(PathBuf::from(v));
            }
        }
    }
    let [m, c, j] = found;
    (m, c, j)
}
