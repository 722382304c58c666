//! `fpb`: analytic curve tables, Monte Carlo sessions and receiver checks
//! for the entangling-probe attack.
//!
//! Exit status: 0 success, 1 usage or validation failure, 2 I/O failure.

pub mod args;
pub mod curves;
pub mod error;
pub mod numfmt;
pub mod simulate;

use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::error::ErrorKind;
use clap::Parser;
use fpb_core::povm::{povm_report, PovmReport};
use fpb_core::probe::{error_rate_from_inconclusive, overlap_q};
use fpb_core::sim::run_session;

use args::{Cli, Command, CurvesArgs, Format, PovmCheckArgs, SimulateArgs};
use error::{CliError, CliResult};
use numfmt::fmt_sig;
use simulate::{log_to_csv, Envelope};

/// Runs one invocation and returns the process exit status.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let sink: &mut dyn Write = if informational { stdout } else { stderr };
            let _ = write!(sink, "{}", e.render());
            return if informational { 0 } else { 1 };
        }
    };
    let outcome = match cli.command {
        Command::Curves(a) => cmd_curves(&a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::PovmCheck(a) => cmd_povm_check(&a, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "fpb: {e}");
            e.exit_code()
        }
    }
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

pub fn cmd_curves(a: &CurvesArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let rows = curves::table(a.e_min, a.e_max, a.steps)?;
    let text = match a.format {
        Format::Csv => curves::to_csv(&rows),
        Format::Json => curves::to_json(&rows),
    };
    emit(&text, a.out.as_deref(), stdout)?;
    Ok(0)
}

pub fn cmd_simulate(a: SimulateArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let a = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            a.merged_over(SimulateArgs::from_config_text(&text)?)
        }
        None => a,
    };
    let plan = a.plan()?;
    let output = run_session(&plan.session, plan.log.is_some())?;
    let envelope = Envelope::new(plan.session, output.stats);
    let text = match plan.format {
        Format::Json => envelope.to_json(),
        Format::Csv => envelope.to_csv(),
    };
    if let (Some(path), Some(log)) = (&plan.log, &output.log) {
        std::fs::write(path, log_to_csv(log)).map_err(|e| CliError::io(path, e))?;
    }
    emit(&text, plan.out.as_deref(), stdout)?;
    Ok(0)
}

fn report_text(r: &PovmReport) -> String {
    let mut lines = vec![format!(
        "error_rate               {}",
        fmt_sig(r.error_rate)
    )];
    if r.error_rate == 0.0 {
        lines.push("degenerate               Pi+ = Pi- = 0, every outcome inconclusive".into());
    }
    let rows = [
        ("overlap_q", r.overlap),
        ("completeness_residual", r.completeness_residual),
        ("min_eigenvalue", r.min_eigenvalue),
        ("misid_plus", r.misid_plus),
        ("misid_minus", r.misid_minus),
        ("inconclusive_rate", r.inconclusive_rate),
        ("inconclusive_expected", r.expected_inconclusive),
        ("conclusive_rate", r.conclusive_rate),
        ("conclusive_expected", r.expected_conclusive),
        ("reflectance_r1", r.reflectance),
        ("reflectance_r1_trig", r.reflectance_trig),
        ("reflectance_r1_expected", r.reflectance_expected),
    ];
    lines.extend(rows.iter().map(|(k, v)| format!("{k:<24} {}", fmt_sig(*v))));
    lines.push(format!(
        "status                   {}",
        if r.passes() { "PASS" } else { "FAIL" }
    ));
    lines.join("\n") + "\n"
}

pub fn cmd_povm_check(a: &PovmCheckArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let as_usage = |e: fpb_core::Error| CliError::Usage(e.to_string());
    let (e, r) = match (a.error_rate, a.inconclusive_rate) {
        (Some(e), None) => (e, overlap_q(e).map_err(as_usage)?),
        (None, Some(r)) => (error_rate_from_inconclusive(r).map_err(as_usage)?, r),
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --error-rate, --inconclusive-rate".into(),
            ))
        }
    };
    let report = povm_report(e, r)?;
    emit(&report_text(&report), None, stdout)?;
    Ok(if report.passes() { 0 } else { 1 })
}
