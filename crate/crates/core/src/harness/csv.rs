//! CSV output. Numbers use Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::{ExperimentSummary, TrialRates};
use crate::error::Result;

fn rms_header(n: usize) -> String {
    if n == 3 {
        "k,rms_position,rms_velocity,rms_acceleration".into()
    } else {
        let cols: Vec<String> = (0..n).map(|i| format!("rms_x{i}")).collect();
        format!("k,{}", cols.join(","))
    }
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

pub fn rms_csv(s: &ExperimentSummary) -> String {
    let n = s.rms.first().map_or(0, Vec::len);
    let mut out = rms_header(n);
    out.push('\n');
    for (k, row) in s.rms.iter().enumerate() {
        let _ = write!(out, "{k}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn rates_csv(s: &ExperimentSummary) -> String {
    let mut out = String::from("k,empirical,alg1,alg2\n");
    for k in 0..s.comm_rate_empirical.len() {
        let _ = writeln!(
            out,
            "{k},{},{},{}",
            s.comm_rate_empirical[k], s.comm_rate_alg1[k], s.comm_rate_alg2[k]
        );
    }
    out
}

pub fn stderr_csv(s: &ExperimentSummary) -> String {
    let mut out = String::from("k,empirical,stderr\n");
    for (k, (r, e)) in s.comm_rate_empirical.iter().zip(&s.comm_rate_stderr).enumerate() {
        let _ = writeln!(out, "{k},{r},{e}");
    }
    out
}

/// One header line followed by one row per summary.
pub fn summary_csv(summaries: &[ExperimentSummary]) -> String {
    let mut out = String::from("case,avg_empirical,avg_alg1,avg_alg2\n");
    for s in summaries {
        let [e, a1, a2] = s.avg_rates;
        let _ = writeln!(out, "{},{e},{a1},{a2}", s.case_label);
    }
    out
}

/// Writes `rms.csv`, `rates.csv`, `rate_stderr.csv` and `summary.csv` into
/// `dir`, creating it if needed. Returns the paths written.
pub fn emit_csv(summary: &ExperimentSummary, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    Ok(vec![
        write(dir, "rms.csv", &rms_csv(summary))?,
        write(dir, "rates.csv", &rates_csv(summary))?,
        write(dir, "rate_stderr.csv", &stderr_csv(summary))?,
        write(dir, "summary.csv", &summary_csv(std::slice::from_ref(summary)))?,
    ])
}

/// Writes `summary.csv` for several cases, one subdirectory of per-step
/// files per case.
pub fn emit_table(summaries: &[ExperimentSummary], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for s in summaries {
        let sub = dir.join(&s.case_label);
        paths.extend(emit_csv(s, &sub)?);
    }
    paths.push(write(dir, "summary.csv", &summary_csv(summaries))?);
    Ok(paths)
}

/// Writes `trial_rates.csv` (columns `k, gamma, alg1, alg2`).
pub fn emit_trial_rates(rates: &TrialRates, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut out = String::from("k,gamma,alg1,alg2\n");
    for k in 0..rates.gamma.len() {
        let _ = writeln!(out, "{k},{},{},{}", u8::from(rates.gamma[k]), rates.alg1[k], rates.alg2[k]);
    }
    write(dir, "trial_rates.csv", &out)
}
