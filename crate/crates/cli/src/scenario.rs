//! Scenario files: a named list of operations and an output directory.

use crate::error::{CliError, CliResult};
use crate::ops::{figure_for, Operation, Outcome};
use expose_core::TOOL_VERSION;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Relative to the scenario file.
    pub output_dir: PathBuf,
    pub operations: Vec<Operation>,
}

/// Summary of a finished run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub manifest: Value,
    pub failures: Vec<String>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read scenario {}: {e}", path.display())))?;
    let scenario: Scenario = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("scenario {}: line {} column {}: {e}", path.display(), e.line(), e.column())))?;
    if scenario.operations.is_empty() {
        return Err(CliError::input(format!("scenario {}: no operations", path.display())));
    }
    Ok(scenario)
}

/// Checks that inputs exist and the output directory is writable.
pub fn validate(scenario: &Scenario, base: &Path) -> CliResult<PathBuf> {
    for (k, op) in scenario.operations.iter().enumerate() {
        for input in op.inputs() {
            if !base.join(input).is_file() {
                return Err(CliError::input(format!(
                    "operation {} ({}): referenced file {} does not exist",
                    k + 1,
                    op.name(),
                    input.display()
                )));
            }
        }
    }
    let out = base.join(&scenario.output_dir);
    fs::create_dir_all(&out).map_err(|e| CliError::input(format!("output directory {}: {e}", scenario.output_dir.display())))?;
    let probe = out.join(".expose-lab-write-probe");
    fs::write(&probe, b"").map_err(|e| CliError::input(format!("output directory {} not writable: {e}", scenario.output_dir.display())))?;
    let _ = fs::remove_file(probe);
    Ok(out)
}

fn write(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    fs::write(dir.join(name), contents).map_err(|e| CliError::input(format!("cannot write {name}: {e}")))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Runs every operation in order, writing reports, artifacts, figures and `manifest.json`.
///
/// Input errors abort the run; module failures are recorded and the run continues.
pub fn run_scenario_in(scenario: &Scenario, base: &Path) -> CliResult<RunSummary> {
    let out = validate(scenario, base)?;
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (k, op) in scenario.operations.iter().enumerate() {
        let stem = format!("{:02}-{}", k + 1, op.name());
        let outcome = match op.execute(base) {
            Ok(o) => o,
            Err(CliError::Invariant(msg)) => {
                failures.push(format!("{stem}: {msg}"));
                entries.push(json!({ "index": k + 1, "op": op.name(), "ok": false, "error": msg }));
                continue;
            }
            Err(e) => return Err(CliError::input(format!("{stem}: {e}"))),
        };
        let files = write_outcome(&out, &stem, op, &outcome)?;
        failures.extend(outcome.failures.iter().map(|f| format!("{stem}: {f}")));
        entries.push(json!({
            "index": k + 1,
            "op": op.name(),
            "ok": outcome.ok(),
            "files": files,
            "seeds": outcome.report["seeds"],
            "grid": outcome.report["grid"],
            "tolerances": outcome.report["tolerances"],
        }));
    }
    let manifest = json!({
        "tool_version": TOOL_VERSION,
        "scenario": scenario.name,
        "ok": failures.is_empty(),
        "failures": failures,
        "operations": entries,
    });
    write(&out, "manifest.json", &pretty(&manifest))?;
    Ok(RunSummary { output_dir: out, manifest, failures })
}

fn write_outcome(out: &Path, stem: &str, op: &Operation, outcome: &Outcome) -> CliResult<Vec<String>> {
    let mut files = vec![format!("{stem}.json")];
    write(out, &files[0], &pretty(&outcome.report))?;
    for art in &outcome.artifacts {
        let name = format!("{stem}-{}", art.suffix);
        write(out, &name, &art.contents)?;
        files.push(name.clone());
        if let Some(svg) = figure_for(op, art)? {
            let fig = format!("{}.svg", name.trim_end_matches(".csv"));
            write(out, &fig, &svg)?;
            files.push(fig);
        }
    }
    Ok(files)
}

/// Loads and runs a scenario file.
pub fn run_scenario(path: &Path) -> CliResult<RunSummary> {
    let scenario = load_scenario(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    run_scenario_in(&scenario, &base)
}

/// Runs a single operation: writes it like a one-step scenario when `out` is given, and
/// otherwise prints the report.
pub fn run_single(op: Operation, name: &str, out: Option<PathBuf>) -> CliResult<i32> {
    match out {
        Some(dir) => {
            let scenario = Scenario { name: name.into(), output_dir: dir, operations: vec![op] };
            let summary = run_scenario_in(&scenario, Path::new(""))?;
            report_failures(&summary.failures);
            Ok(summary.exit_code())
        }
        None => {
            let outcome = op.execute(Path::new(""))?;
            print!("{}", pretty(&outcome.report));
            report_failures(&outcome.failures);
            Ok(if outcome.ok() { 0 } else { 1 })
        }
    }
}

pub fn report_failures(failures: &[String]) {
    for f in failures {
        eprintln!("invariant failed: {f}");
    }
}
