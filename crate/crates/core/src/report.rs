//! Report files: one JSON per check, the fitted-constant CSV, plot data and
//! kernel tables.
//!
//! Every file carries the config hash. JSON reports have a `config_hash`
//! field; CSV files start with a `# config_hash: <hex>` line followed by a
//! fixed header. Floats use Rust's shortest round-trip formatting, so equal
//! inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{CheckEntry, SystemConfig};
use crate::error::Result;
use crate::harness::{Condition, KernelTable, VerificationReport};
use crate::measure::Estimate;

pub const FITTED_CSV: &str = "fitted.csv";
pub const PLOT_CSV: &str = "plot_data.csv";
pub const FITTED_HEADER: &str = "index,check,pass,margin,quantity,value,error";
pub const PLOT_HEADER: &str = "index,check,series,norm_x,log_abs_q";

/// Outcome of one configured check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub entry: CheckEntry,
    pub result: std::result::Result<VerificationReport, String>,
    pub runtime_s: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        matches!(&self.result, Ok(r) if r.pass)
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    check: &'a str,
    id: &'a str,
    config_hash: &'a str,
    system: &'a SystemConfig,
    params: serde_json::Value,
    pass: bool,
    margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conditions: Option<&'a [Condition]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fitted: Option<&'a std::collections::BTreeMap<String, Estimate>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<&'a std::collections::BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    notes: Option<&'a [String]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    runtime_s: f64,
}

pub fn report_json(outcome: &CheckOutcome, hash: &str) -> String {
    let e = &outcome.entry;
    let base = JsonReport {
        check: e.spec.name(),
        id: &e.id,
        config_hash: hash,
        system: &e.system,
        params: e.spec.params_json(),
        pass: false,
        margin: f64::NEG_INFINITY,
        max_defect: None,
        conditions: None,
        fitted: None,
        grid: None,
        notes: None,
        error: None,
        runtime_s: outcome.runtime_s,
    };
    let doc = match &outcome.result {
        Ok(r) => JsonReport {
            pass: r.pass,
            margin: r.margin,
            max_defect: Some(r.max_defect),
            conditions: Some(&r.conditions),
            fitted: Some(&r.fitted),
            grid: Some(&r.grid),
            notes: Some(&r.notes),
            ..base
        },
        Err(msg) => JsonReport {
            error: Some(msg),
            ..base
        },
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

fn hash_line(hash: &str) -> String {
    format!("# config_hash: {hash}\n")
}

pub fn fitted_csv(outcomes: &[CheckOutcome], hash: &str) -> String {
    let mut s = hash_line(hash);
    s.push_str(FITTED_HEADER);
    s.push('\n');
    for o in outcomes {
        if let Ok(r) = &o.result {
            for (name, est) in &r.fitted {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    o.entry.index, o.entry.id, r.pass, r.margin, name, est.value, est.error
                );
            }
        }
    }
    s
}

pub fn plot_csv(outcomes: &[CheckOutcome], hash: &str) -> String {
    let mut s = hash_line(hash);
    s.push_str(PLOT_HEADER);
    s.push('\n');
    for o in outcomes {
        if let Ok(r) = &o.result {
            for p in &r.plot {
                let _ = writeln!(s, "{},{},{},{},{}", o.entry.index, o.entry.id, p.series, p.norm_x, p.log_abs_q);
            }
        }
    }
    s
}

/// Columns x1..xN, y1..yN, t, value, error_estimate. One-point kernels are
/// written with y = 0, since q(x) = q(x, 0).
pub fn kernel_csv(table: &KernelTable, hash: &str) -> String {
    let n = table.dim;
    let mut s = hash_line(hash);
    let mut cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    cols.extend((1..=n).map(|i| format!("y{i}")));
    cols.extend(["t", "value", "error_estimate"].map(String::from));
    s.push_str(&cols.join(","));
    s.push('\n');
    let zero = vec![0.0; n];
    for row in &table.rows {
        let y = row.y.as_deref().unwrap_or(&zero);
        let fields: Vec<String> = row
            .x
            .iter()
            .chain(y.iter())
            .chain([row.t, row.value, row.error].iter())
            .map(|v| v.to_string())
            .collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

/// Writes every output file; returns the paths in write order.
pub fn write_all(dir: &Path, outcomes: &[CheckOutcome], hash: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    for o in outcomes {
        put(format!("{}.json", o.entry.id), report_json(o, hash))?;
        if let Ok(r) = &o.result {
            if let Some(t) = &r.table {
                put(format!("{}-kernel.csv", o.entry.id), kernel_csv(t, hash))?;
            }
        }
    }
    put(FITTED_CSV.to_string(), fitted_csv(outcomes, hash))?;
    put(PLOT_CSV.to_string(), plot_csv(outcomes, hash))?;
    Ok(written)
}
