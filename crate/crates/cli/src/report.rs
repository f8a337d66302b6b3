use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use vexh::characterize::VerificationReport;

use crate::config::RunConfig;
use crate::suites::Table;

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Run metadata; the only part of `report.json` that varies between identical runs.
#[derive(Debug, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl Header {
    pub fn now() -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self { tool: "vexh", version: env!("CARGO_PKG_VERSION"), timestamp }
    }
}

#[derive(Debug, Serialize)]
pub struct ReportFile<'a> {
    pub header: Header,
    pub config: &'a RunConfig,
    pub suites: Vec<&'static str>,
    pub passed: bool,
    pub failures: Vec<String>,
    pub report: &'a VerificationReport,
}

/// Writes `report.json`, one CSV per table and `summary.txt`; returns the written paths.
pub fn write_all(out: &Path, file: &ReportFile, tables: &[(&'static str, Table)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
    let mut written = Vec::new();

    let path = out.join(REPORT_FILE);
    let mut json = serde_json::to_string_pretty(file)?;
    json.push('\n');
    fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);

    for (suite, table) in tables {
        let path = out.join(format!("{suite}-{}.csv", table.name));
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        written.push(path);
    }

    let path = out.join(SUMMARY_FILE);
    fs::write(&path, summary(file)).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(written)
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn summary(file: &ReportFile) -> String {
    let r = file.report;
    let mut s = String::new();
    let _ = writeln!(s, "vexh {} suites: {}", file.header.version, file.suites.join(", "));
    let _ = writeln!(s, "seed {}", file.config.seed);
    let _ = writeln!(s);
    if !r.checks.is_empty() {
        let _ = writeln!(s, "checks");
        for c in &r.checks {
            let _ = writeln!(s, "  {} {:<52} value {:<12.4e} tolerance {:.4e}", mark(c.passed), c.name, c.value, c.tolerance);
        }
    }
    for (title, studies) in [("residual convergence", &r.residuals), ("subharmonicity", &r.subharmonicity)] {
        if studies.is_empty() {
            continue;
        }
        let passed = studies.iter().filter(|s| s.passed).count();
        let _ = writeln!(s, "{title}: {passed}/{} studies pass", studies.len());
        for st in studies.iter().filter(|s| !s.passed) {
            let _ = writeln!(s, "  FAIL {} residuals {:?} orders {:?}", st.name, st.residuals, st.orders);
        }
    }
    for e in &r.equivalence {
        if let Some(first) = e.records.first() {
            let _ = writeln!(
                s,
                "equivalence {} n={}: C_lo {:.4} C_hi {:.4} band {:.4}{}",
                first.budget_kind,
                first.grid.dim,
                e.c_lo,
                e.c_hi,
                e.band,
                e.embedding_constant.map(|c| format!(" embedding {c:.4}")).unwrap_or_default()
            );
        }
    }
    for m in &r.maximal {
        if let Some(first) = m.records.first() {
            let _ = writeln!(s, "maximal n={}: constant {:.4} dominates {}", first.grid.dim, m.constant, m.dominates);
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{}", if file.passed { "all assertions pass" } else { "assertions failed:" });
    for f in &file.failures {
        let _ = writeln!(s, "  {f}");
    }
    s
}
