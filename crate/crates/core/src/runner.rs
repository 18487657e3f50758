//! Config-driven execution: build contexts, dispatch checks on a bounded
//! pool, write reports, map the outcome to an exit code.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::config::{build_context, ExperimentConfig, CATALOG};
use crate::error::{DunklError, Result};
use crate::measure::WeightedContext;
use crate::report::{write_all, CheckOutcome};

/// Overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "DUNKL_LAB_OUTPUT_DIR";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Debug)]
pub struct RunSummary {
    pub outcomes: Vec<CheckOutcome>,
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.outcomes.iter().any(|o| o.result.is_err()) {
            EXIT_ERROR
        } else if self.outcomes.iter().all(|o| o.passed()) {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

/// Output directory: the env override, else the config's, else `out/<stem>`
/// next to the working directory.
pub fn resolve_output_dir(cfg: &ExperimentConfig, config_path: &Path) -> PathBuf {
    if let Some(d) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
        return PathBuf::from(d);
    }
    if let Some(d) = &cfg.output_dir {
        return PathBuf::from(d);
    }
    let stem = config_path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    PathBuf::from("out").join(stem)
}

/// Runs every check of a parsed config and writes its reports to `out`.
pub fn execute(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    // one context per distinct (system, grid); contexts cache their grids
    let mut contexts: HashMap<String, Arc<WeightedContext>> = HashMap::new();
    let mut per_check = Vec::with_capacity(cfg.checks.len());
    for entry in &cfg.checks {
        let key = serde_json::to_string(&(&entry.system, &entry.grid)).unwrap_or_default();
        let ctx = match contexts.get(&key) {
            Some(c) => c.clone(),
            None => {
                let c = Arc::new(build_context(entry).map_err(|e| {
                    DunklError::Config(format!("check {} ({}): {e}", entry.index, entry.id))
                })?);
                contexts.insert(key, c.clone());
                c
            }
        };
        per_check.push(ctx);
    }

    let workers = cfg.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| DunklError::Config(format!("cannot start {workers} workers: {e}")))?;
    let record = cfg.record_timing;
    let outcomes: Vec<CheckOutcome> = pool.install(|| {
        cfg.checks
            .par_iter()
            .zip(per_check.par_iter())
            .map(|(entry, ctx)| {
                let start = Instant::now();
                let result = entry.spec.run(ctx).map_err(|e| e.to_string());
                CheckOutcome {
                    entry: entry.clone(),
                    result,
                    runtime_s: if record { start.elapsed().as_secs_f64() } else { 0.0 },
                }
            })
            .collect()
    });
    let files = write_all(out, &outcomes, &cfg.hash)?;
    Ok(RunSummary {
        outcomes,
        output_dir: out.to_path_buf(),
        files,
    })
}

/// `run <config>`: prints one line per check and returns the exit code.
pub fn run(config_path: &Path, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cfg = match ExperimentConfig::from_path(config_path) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "{}: {e}", config_path.display());
            return EXIT_ERROR;
        }
    };
    let out = resolve_output_dir(&cfg, config_path);
    let summary = match execute(&cfg, &out) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            return EXIT_ERROR;
        }
    };
    let _ = writeln!(stdout, "config_hash {}", cfg.hash);
    for o in &summary.outcomes {
        match &o.result {
            Ok(r) => {
                let verdict = if r.pass { "PASS" } else { "FAIL" };
                let _ = writeln!(stdout, "{verdict}  {:<32} margin {:.4e}", o.entry.id, r.margin);
            }
            Err(msg) => {
                let _ = writeln!(stdout, "ERROR {:<32} {msg}", o.entry.id);
                let _ = writeln!(stderr, "{}: {msg}", o.entry.id);
            }
        }
    }
    let _ = writeln!(stdout, "reports in {}", summary.output_dir.display());
    summary.exit_code()
}

/// `list-checks`: one block per check kind.
pub fn list_checks(stdout: &mut dyn Write) {
    for c in CATALOG {
        let _ = writeln!(stdout, "{}", c.name);
        let _ = writeln!(stdout, "    statement: {}", c.anchor);
        let required = if c.required.is_empty() { "none" } else { c.required };
        let _ = writeln!(stdout, "    required:  {required}");
        let _ = writeln!(stdout, "    params:    {}", c.params().join(", "));
    }
    let _ = writeln!(stdout, "{} check kinds", CATALOG.len());
}
