//! Command-line harness for `lipfree-core`.
//!
//! Subcommands: `validate`, `norm`, `operator`, `construct`, `verify`.
//! Exit status is 0 on success, 1 on a domain-level failure (a metric axiom
//! fails, a verdict is false, a suite fails) and 2 on bad input.

pub mod args;
pub mod commands;
pub mod construct;
pub mod outcome;
pub mod verify;

use std::fs;
use std::io::Write;

use anyhow::Context;
use serde_json::json;

use crate::args::{Cli, Command, Config, VerifyArgs};
use crate::outcome::{CmdResult, Failure, Status};

/// Runs one parsed command, writing its report to `out` and diagnostics to
/// `err`, and returns the exit status.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Status {
    let result = match &cli.command {
        Command::Validate { space } => commands::validate(&cli.config, space, out),
        Command::Norm {
            space,
            molecule,
            method,
        } => commands::norm(&cli.config, space, molecule, *method, out),
        Command::Operator(a) => commands::operator(&cli.config, a, out),
        Command::Construct(a) => construct::construct(&cli.config, a, out),
        Command::Verify(a) => verify_cmd(&cli.config, a, out),
    };
    match result {
        Ok(status) => status,
        Err(f) => {
            let _ = writeln!(err, "error: {f}");
            f.status
        }
    }
}

fn verify_cmd(cfg: &Config, args: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let vc = verify::VerifyConfig {
        seed: cfg.seed,
        mode: cfg.mode,
        tol: cfg.tol,
        inject: args.inject.clone(),
        suites: args.suites.clone(),
        limit: args.limit,
    };
    let report = verify::run(&vc).map_err(|e| Failure::input(anyhow::anyhow!(e)))?;
    let value = serde_json::to_value(&report).expect("reports serialize");
    if let Some(path) = &cfg.out {
        let text = serde_json::to_string_pretty(&value).expect("json values serialize") + "\n";
        fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::input)?;
    }
    let summary = json!({
        "passed": report.passed,
        "seed": report.seed,
        "mode": report.mode,
        "suites": report.suites.iter().map(|s| json!({
            "name": s.name,
            "cases": s.cases,
            "failed": s.failures.len(),
            "failures": s.failures,
        })).collect::<Vec<_>>(),
    });
    commands::emit(out, &summary)?;
    Ok(if report.passed {
        Status::Success
    } else {
        Status::DomainFailure
    })
}

#[cfg(test)]
mod tests;
