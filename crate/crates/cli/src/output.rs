//! Artifact tree: `series.csv`, `profiles/*.csv`, `summary.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use qpar_core::io::{write_table, Provenance};
use qpar_core::RadialState;

use crate::runner::{Check, Simulation};

pub fn provenance(sim: &Simulation) -> Provenance {
    let e = sim.params.derive();
    let cfg = sim.solver.config();
    let mut p: Provenance = vec![
        ("scenario".into(), sim.scenario.name.clone()),
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("seed".into(), sim.seed.to_string()),
        (
            "params".into(),
            format!("n = {}, p = {}, q = {}", sim.params.n(), sim.params.p(), sim.params.q()),
        ),
        (
            "derived".into(),
            format!(
                "d = {}, lambda = {}, alpha = {}, spread = {}, sigma = {}, mu = {}",
                e.d, e.lambda, e.alpha, e.spread, e.sigma, e.mu
            ),
        ),
        ("regime".into(), format!("{:?}", sim.params.regime())),
        ("range_condition".into(), sim.params.range_condition().to_string()),
        (
            "solver".into(),
            format!(
                "cfl = {}, delta = {}, max_dt = {}, boundary = {:?}",
                cfg.cfl_safety, cfg.regularization, cfg.max_dt, cfg.outer_bc
            ),
        ),
        ("steps".into(), sim.trajectory.steps.to_string()),
    ];
    p.push(("config".into(), sim.scenario.echo()));
    p
}

fn write_profile(path: &Path, prov: &Provenance, state: &RadialState) -> Result<()> {
    let mut prov = prov.clone();
    prov.push(("t".into(), qpar_core::io::format_f64(state.t())));
    let rows = state
        .grid()
        .midpoints()
        .iter()
        .zip(state.values())
        .map(|(&r, &u)| vec![r, u]);
    write_table(path, &prov, &["r", "u"], rows).with_context(|| format!("writing {}", path.display()))
}

pub fn summary_text(prov: &Provenance, checks: &[Check], warnings: &[String], status: &str) -> String {
    let mut s = String::new();
    for (k, v) in prov {
        for (i, line) in v.lines().enumerate() {
            if i == 0 {
                let _ = writeln!(s, "# {k} = {line}");
            } else {
                let _ = writeln!(s, "#   {line}");
            }
        }
    }
    for c in checks {
        let _ = writeln!(
            s,
            "check {} {} {}",
            c.name,
            if c.passed { "pass" } else { "fail" },
            c.detail
        );
    }
    for w in warnings {
        let _ = writeln!(s, "warning {w}");
    }
    let _ = writeln!(s, "status {status}");
    s
}

/// Writes the artifact tree for a finished simulation.
pub fn write_artifacts(
    dir: &Path,
    sim: &Simulation,
    checks: &[Check],
    warnings: &[String],
    status: &str,
) -> Result<()> {
    let prov = provenance(sim);
    let profiles = dir.join("profiles");
    fs::create_dir_all(&profiles).with_context(|| format!("creating {}", profiles.display()))?;
    let tr = &sim.trajectory;
    let rows = (0..tr.len()).map(|k| vec![tr.times[k], tr.sup[k], tr.d_mass[k], tr.support[k], tr.l2w[k]]);
    write_table(&dir.join("series.csv"), &prov, &["t", "sup", "d_mass", "support", "L2w"], rows)
        .context("writing series.csv")?;
    write_profile(&profiles.join("initial.csv"), &prov, &sim.initial)?;
    for k in 0..tr.snapshots.len() {
        if let Some(state) = tr.state_at(k) {
            write_profile(&profiles.join(format!("sample_{k:04}.csv")), &prov, &state)?;
        }
    }
    write_profile(&profiles.join("final.csv"), &prov, &sim.final_state)?;
    fs::write(dir.join("summary.txt"), summary_text(&prov, checks, warnings, status))
        .context("writing summary.txt")?;
    Ok(())
}
