//! Runs a directory of scenarios, one scenario per worker.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;

use crate::runner::{run_scenario, Outcome, RunOptions, Status};

/// `*.toml` files in `dir`, sorted by name.
pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    Ok(files)
}

/// Outcomes in file order.
pub fn run_sweep(files: &[PathBuf], opts: &RunOptions, jobs: usize) -> Result<Vec<Outcome>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building worker pool")?;
    Ok(pool.install(|| files.par_iter().map(|f| run_scenario(f, opts)).collect()))
}

/// Worst status over all outcomes.
pub fn aggregate(outcomes: &[Outcome]) -> Status {
    outcomes.iter().map(|o| o.status).max().unwrap_or(Status::Pass)
}

pub fn table(outcomes: &[Outcome]) -> String {
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(8).max(8);
    let mut s = format!("{:<width$}  {:<16}  checks\n", "scenario", "status");
    for o in outcomes {
        let passed = o.checks.iter().filter(|c| c.passed).count();
        s.push_str(&format!(
            "{:<width$}  {:<16}  {}/{}",
            o.name,
            o.status.label(),
            passed,
            o.checks.len()
        ));
        if let Some(r) = &o.reason {
            s.push_str(&format!("  {r}"));
        }
        s.push('\n');
    }
    s
}
