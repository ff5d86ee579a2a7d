//! Command-line front end: argument parsing, CSV/JSON output and run
//! manifests around `polydisk-core`.

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::Parser;

pub mod args;
pub mod format;
pub mod manifest;
pub mod run;

use args::Cli;
use manifest::{manifest_path, scan_paths, OutputFile, RunManifest, Status};
use run::Failure;

/// Runs one invocation and returns the exit status: 0 on success, 1 on
/// domain, resource or numerical errors and failed checks, 2 on usage errors.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<String> = argv
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let mut record = RunManifest::new(&argv);

    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                // --help and --version
                return 0;
            }
            record.status = Status::UsageError;
            record.exit_code = 2;
            record.message = Some(e.kind().to_string());
            let (m, c, j) = scan_paths(&argv);
            if let Some(path) = manifest_path(m.as_deref(), c.as_deref(), j.as_deref()) {
                write_manifest(&mut record, &path);
            }
            return 2;
        }
    };

    record.subcommand = cli.command.name().to_string();
    record.parameters = serde_json::to_value(&cli).unwrap_or_default();
    let mpath = manifest_path(
        cli.manifest.as_deref(),
        cli.csv.as_deref(),
        cli.json.as_deref(),
    );

    let code = match run::execute(&cli)
        .and_then(|outcome| emit(&cli, &outcome, &mut record).map(|_| outcome))
    {
        Ok(outcome) => {
            if !cli.quiet {
                for w in &outcome.warnings {
                    eprintln!("warning: {w}");
                }
                eprintln!("{}", outcome.summary);
            }
            if outcome.ok {
                record.status = Status::Ok;
                0
            } else {
                eprintln!("error: {}: check failed", record.subcommand);
                record.status = Status::CheckFailed;
                record.message = Some("check failed".into());
                1
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            record.status = if f.exit_code() == 2 {
                Status::UsageError
            } else {
                Status::Error
            };
            record.message = Some(f.message().to_string());
            f.exit_code()
        }
    };
    record.exit_code = code;
    if let Some(path) = mpath {
        write_manifest(&mut record, &path);
    }
    code
}

fn emit(cli: &Cli, outcome: &run::Outcome, record: &mut RunManifest) -> Result<(), Failure> {
    let csv = outcome.table.to_csv();
    match &cli.csv {
        Some(path) => {
            write_file(path, csv.as_bytes(), "--csv")?;
            record.outputs.push(output(path, "csv"));
        }
        None if cli.json.is_none() => {
            // a closed stdout is not worth an error status
            let _ = std::io::stdout().lock().write_all(csv.as_bytes());
        }
        None => {}
    }
    if let Some(path) = &cli.json {
        let doc = serde_json::json!({
            "schema_version": manifest::SCHEMA_VERSION,
            "subcommand": cli.command.name(),
            "parameters": &record.parameters,
            "report": &outcome.report,
        });
        let mut text = serde_json::to_string_pretty(&doc)
            .map_err(|e| Failure::Runtime(format!("--json: {e}")))?;
        text.push('\n');
        write_file(path, text.as_bytes(), "--json")?;
        record.outputs.push(output(path, "json"));
    }
    Ok(())
}

fn output(path: &Path, format: &'static str) -> OutputFile {
    OutputFile {
        path: path.display().to_string(),
        format,
    }
}

fn write_file(path: &Path, bytes: &[u8], flag: &str) -> Result<(), Failure> {
    std::fs::write(path, bytes)
        .map_err(|e| Failure::Runtime(format!("{flag}: cannot write {}: {e}", path.display())))
}

fn write_manifest(record: &mut RunManifest, path: &Path) {
    if let Err(e) = record.write(path) {
        eprintln!("error: --manifest: cannot write {}: {e}", path.display());
    }
}
