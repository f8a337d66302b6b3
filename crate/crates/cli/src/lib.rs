//! Batch front-end for the vexh suites: configuration, suite execution and
//! report emission.

pub mod config;
pub mod report;
pub mod suites;

use std::path::{Path, PathBuf};

use anyhow::Result;
use vexh::characterize::VerificationReport;

use config::{RunConfig, Suite};
use report::{Header, ReportFile};
use suites::{run_suite, Context};

#[derive(Debug)]
pub struct RunOutcome {
    pub report: VerificationReport,
    pub passed: bool,
    pub failures: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Runs the configured suites and writes every artifact under `out`.
pub fn execute(config: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let ctx = Context::new(config)?;
    let suites = config.suite.expand();
    let mut report = VerificationReport::default();
    let mut tables = Vec::new();
    for &s in &suites {
        let output = run_suite(&ctx, s)?;
        report.merge(output.report);
        tables.extend(output.tables.into_iter().map(|t| (s.name(), t)));
    }
    let passed = report.passed();
    let failures = report.failures();
    let echoed = RunConfig { out: None, jobs: None, ..config.clone() };
    let file = ReportFile {
        header: Header::now(),
        config: &echoed,
        suites: suites.iter().map(|s| s.name()).collect(),
        passed,
        failures: failures.clone(),
        report: &report,
    };
    let files = report::write_all(out, &file, &tables)?;
    Ok(RunOutcome { report, passed, failures, files })
}

pub fn suite_names() -> Vec<&'static str> {
    Suite::EACH.iter().map(|s| s.name()).collect()
}
