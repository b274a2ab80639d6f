//! Artifact files and their manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::stats::{CheckKind, LadderRow, StatReport};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

/// Writes `files` plus `manifest.json` into `out_dir`, creating it if needed.
/// Refuses to replace any existing file unless `force` is set.
pub fn write_files(out_dir: &Path, files: &[(String, Vec<u8>)], force: bool) -> Result<Manifest> {
    fs::create_dir_all(out_dir)?;
    let targets: Vec<PathBuf> = files
        .iter()
        .map(|(name, _)| out_dir.join(name))
        .chain(std::iter::once(out_dir.join(MANIFEST)))
        .collect();
    if !force {
        if let Some(existing) = targets.iter().find(|p| p.exists()) {
            return Err(Error::WouldOverwrite(existing.display().to_string()));
        }
    }
    let mut manifest = Manifest { files: Vec::new() };
    for (name, bytes) in files {
        fs::write(out_dir.join(name), bytes)?;
        manifest.files.push(ManifestEntry {
            path: name.clone(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
    }
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(out_dir.join(MANIFEST), text)?;
    Ok(manifest)
}

fn to_csv<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.serialize(row).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

/// One row per check: `name,estimate,standard_error,target,tolerance,kind,verdict`.
pub fn summary_csv(report: &StatReport) -> Vec<u8> {
    let rows = report.checks.iter().map(|c| {
        let kind = match c.kind {
            CheckKind::TwoSided => "two_sided",
            CheckKind::UpperBound => "upper_bound",
        };
        let verdict = if c.verdict { "pass" } else { "fail" };
        (&c.name, c.estimate, c.standard_error, c.target, c.tolerance, kind, verdict)
    });
    to_csv(&["name", "estimate", "standard_error", "target", "tolerance", "kind", "verdict"], rows)
}

/// `component,t,var_re,var_im`
pub fn variance_csv(report: &StatReport) -> Vec<u8> {
    to_csv(
        &["component", "t", "var_re", "var_im"],
        report.variance_profile.iter().map(|r| (r.component, r.t, r.var_re, r.var_im)),
    )
}

/// `component,part,epsilon,t,ks_stat,p_value`
pub fn ks_csv(report: &StatReport) -> Vec<u8> {
    to_csv(
        &["component", "part", "epsilon", "t", "ks_stat", "p_value"],
        report.ks_records.iter().map(|r| (r.component, &r.part, r.epsilon, r.t, r.ks_stat, r.p_value)),
    )
}

/// `epsilon,master_seed,component,ks_stat,p_value,tightness,tightness_se`
pub fn ladder_csv(rows: &[LadderRow]) -> Vec<u8> {
    to_csv(
        &["epsilon", "master_seed", "component", "ks_stat", "p_value", "tightness", "tightness_se"],
        rows.iter().map(|r| (r.epsilon, r.master_seed, r.component, r.ks_stat, r.p_value, r.tightness, r.tightness_se)),
    )
}

/// The files `write_report` produces: always `report.json` and `summary.csv`,
/// plus the variance profile and KS rows when the report has any.
pub fn report_files(report: &StatReport) -> Vec<(String, Vec<u8>)> {
    let mut json = serde_json::to_string_pretty(report).expect("reports serialize");
    json.push('\n');
    let mut files = vec![
        ("report.json".to_string(), json.into_bytes()),
        ("summary.csv".to_string(), summary_csv(report)),
    ];
    if !report.variance_profile.is_empty() {
        files.push(("variance_profile.csv".to_string(), variance_csv(report)));
    }
    if !report.ks_records.is_empty() {
        files.push(("ks.csv".to_string(), ks_csv(report)));
    }
    files
}

pub fn write_report(report: &StatReport, out_dir: &Path, force: bool) -> Result<Manifest> {
    write_files(out_dir, &report_files(report), force)
}
