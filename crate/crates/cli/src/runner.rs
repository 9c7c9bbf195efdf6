//! Scenario pipeline: initial data, simulation, analyses, artifacts.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use qpar_core::analysis::{self, Evolution, SolverRun};
use qpar_core::giant::{self, GiantProfile};
use qpar_core::lap_number::{self, SignChangeConfig};
use qpar_core::numerics::interp_linear;
use qpar_core::solver1d::{build_grid, project, sup_distance};
use qpar_core::{
    BarenblattSpec, EquationParams, Error, OuterBoundary, Quadrature, RadialState, Regime, Sampler,
    Solver, SolverConfig, Trajectory,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Analysis, ConfigError, InitialData, Scenario};
use crate::output;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_root: Option<PathBuf>,
    pub seed: Option<u64>,
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    AssertionFailed,
    ConfigError,
    SolverFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::AssertionFailed => 1,
            Status::ConfigError => 2,
            Status::SolverFailure => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::AssertionFailed => "assertion-failed",
            Status::ConfigError => "config-error",
            Status::SolverFailure => "solver-failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// `key=value` pairs.
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: String,
    pub status: Status,
    pub reason: Option<String>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub out_dir: Option<PathBuf>,
}

impl Outcome {
    fn early(name: &str, status: Status, reason: String) -> Self {
        Self {
            name: name.into(),
            status,
            reason: Some(reason),
            checks: Vec::new(),
            warnings: Vec::new(),
            out_dir: None,
        }
    }

    /// `status=<label> scenario=<name> reason="..."`.
    pub fn line(&self) -> String {
        let mut s = format!("status={} scenario={}", self.status.label(), self.name);
        if let Some(r) = &self.reason {
            s.push_str(&format!(" reason=\"{}\"", r.replace('"', "'")));
        }
        s
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),
    #[error("solver: {0}")]
    Solver(Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

/// A finished run with everything the analyses need.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub scenario: Scenario,
    pub params: EquationParams,
    pub seed: u64,
    pub solver: Solver,
    pub initial: RadialState,
    pub final_state: RadialState,
    pub trajectory: Trajectory,
    pub giant: Option<GiantProfile>,
}

/// Solver, initial state and giant profile (for giant data) of a scenario.
pub fn prepare(
    scenario: &Scenario,
    seed: u64,
) -> Result<(Solver, RadialState, Option<GiantProfile>), RunError> {
    let eq = scenario.equation()?;
    let grid = Arc::new(
        build_grid(scenario.outer(), scenario.domain.cells, eq.d()).map_err(|e| RunError::Config(e.to_string()))?,
    );
    let start = scenario.time.start;
    let config_err = |e: Error| RunError::Config(e.to_string());
    let mut profile = None;
    let initial = match &scenario.initial {
        InitialData::Barenblatt { c, t_delay } => {
            let spec = BarenblattSpec::new(eq, *c, *t_delay).map_err(config_err)?;
            let f = spec.profile_at(start).map_err(config_err)?;
            project(f, grid, start)
        }
        InitialData::Giant { nodes, tol, max_iter } => {
            let v = giant::fixed_point(&eq, *nodes, *tol, *max_iter).map_err(RunError::Solver)?;
            let scale = start.powf(-1.0 / (eq.q() - 2.0));
            let state = project(|r| scale * v.eval(r), grid, start);
            profile = Some(v);
            state
        }
        InitialData::Bump { center, width, height } => project(
            |r| height * (1.0 - ((r - center) / width).powi(2)).max(0.0),
            grid,
            start,
        ),
        InitialData::Csv { path } => {
            let full = scenario.base_dir.join(path);
            let (rs, us) = qpar_core::io::read_columns(&full, "r", "u")
                .map_err(|e| RunError::Config(format!("{}: {e}", full.display())))?;
            if rs.len() < 2 || rs.windows(2).any(|w| w[1] <= w[0]) {
                return Err(RunError::Config(format!(
                    "{}: r column must increase strictly with ≥ 2 rows",
                    full.display()
                )));
            }
            let last = *rs.last().unwrap();
            project(|r| if r > last { 0.0 } else { interp_linear(&rs, &us, r) }, grid, start)
        }
        InitialData::RandomBumps { count, seed: own } => {
            let mut rng = ChaCha8Rng::seed_from_u64(own.unwrap_or(seed));
            let outer = scenario.outer();
            let bumps: Vec<(f64, f64, f64)> = (0..*count)
                .map(|_| {
                    let c = rng.gen_range(0.0..0.3 * outer);
                    let w = rng.gen_range(0.05 * outer..0.15 * outer);
                    let h = rng.gen_range(0.2..1.0);
                    (c, w, h)
                })
                .collect();
            project(
                |r| {
                    bumps
                        .iter()
                        .map(|&(c, w, h)| h * (1.0 - ((r - c) / w).powi(2)).max(0.0))
                        .sum()
                },
                grid,
                start,
            )
        }
    }
    .map_err(config_err)?;
    let mut cfg = SolverConfig::for_params(&eq, scenario.boundary());
    let s = scenario.solver;
    if let Some(c) = s.cfl {
        cfg.cfl_safety = c;
    }
    if let Some(d) = s.delta {
        cfg.regularization = d;
    }
    if let Some(m) = s.max_dt {
        cfg.max_dt = m;
    }
    let solver = Solver::new(eq, cfg).map_err(config_err)?;
    Ok((solver, initial, profile))
}

pub fn effective_seed(scenario: &Scenario, opts: &RunOptions) -> u64 {
    opts.seed.unwrap_or(scenario.seed)
}

/// Runs the scenario's time integration with snapshots as requested.
pub fn simulate(scenario: &Scenario, seed: u64, snapshots: bool) -> Result<Simulation, RunError> {
    let (solver, initial, giant) = prepare(scenario, seed)?;
    let mut state = initial.clone();
    let mut run = solver.clone();
    let sampler = Sampler::new(scenario.sample_times(), snapshots);
    let trajectory = run
        .run_until(&mut state, scenario.time.end, &sampler)
        .map_err(|e| {
            if e.is_solver_failure() {
                RunError::Solver(e)
            } else {
                RunError::Config(e.to_string())
            }
        })?;
    Ok(Simulation {
        scenario: scenario.clone(),
        params: *solver.params(),
        seed,
        solver,
        initial,
        final_state: state,
        trajectory,
        giant,
    })
}

/// `C` of the Barenblatt solution with the d-mass of the initial data.
pub fn matching_c(sim: &Simulation) -> qpar_core::Result<f64> {
    BarenblattSpec::new(sim.params, 1.0, 1.0)?.c_for_mass(sim.initial.d_mass(), &Quadrature::default())
}

fn fmt(x: f64) -> String {
    format!("{x:.6e}")
}

fn exponent_check(name: &str, fit: qpar_core::Result<qpar_core::FitResult>, expect: f64, tol: f64) -> Check {
    match fit {
        Ok(f) => Check::new(
            name,
            (f.exponent - expect).abs() <= tol,
            format!(
                "value={} expect={} tol={} stderr={} samples={}",
                fmt(f.exponent),
                fmt(expect),
                tol,
                fmt(f.std_error),
                f.samples
            ),
        ),
        Err(e) => Check::new(name, false, format!("error=\"{e}\"")),
    }
}

/// Evaluates one analysis on a finished simulation.
pub fn evaluate(sim: &Simulation, analysis: &Analysis) -> Check {
    let name = analysis.name();
    let tr = &sim.trajectory;
    let eq = &sim.params;
    let e = eq.derive();
    let err = |e: Error| Check::new(name, false, format!("error=\"{e}\""));
    match analysis {
        Analysis::MassConservation { tol } => {
            let m0 = sim.initial.d_mass();
            let drift = tr.d_mass.iter().map(|m| (m - m0).abs() / m0).fold(0.0, f64::max);
            Check::new(name, drift <= *tol, format!("drift={} tol={tol}", fmt(drift)))
        }
        Analysis::BarenblattError { tol } => {
            let InitialData::Barenblatt { c, t_delay } = sim.scenario.initial else {
                return err(Error::Precondition("needs barenblatt data".into()));
            };
            let result = BarenblattSpec::new(*eq, c, t_delay).and_then(|spec| {
                let f = spec.profile_at(sim.final_state.t())?;
                Ok(sup_distance(&sim.final_state, f))
            });
            match result {
                Ok(d) => Check::new(name, d <= *tol, format!("sup_error={} tol={tol}", fmt(d))),
                Err(e) => err(e),
            }
        }
        Analysis::DecayExponent { window, expect, tol } => exponent_check(
            name,
            analysis::fit_decay_exponent(tr, (window[0], window[1])),
            expect.unwrap_or(e.alpha),
            *tol,
        ),
        Analysis::SupportExponent { window, expect, tol } => exponent_check(
            name,
            analysis::fit_support_exponent(tr, (window[0], window[1])),
            expect.unwrap_or(e.spread),
            *tol,
        ),
        Analysis::TailExponent { window, expect, tol } => exponent_check(
            name,
            analysis::tail_exponent(
                &sim.final_state,
                eq,
                (window[0], window[1]),
                sim.solver.config().regularization,
            ),
            expect.unwrap_or(-eq.q() / (2.0 - eq.q())),
            *tol,
        ),
        Analysis::BestFit { slack, times } => {
            let c0 = match matching_c(sim) {
                Ok(c) => c,
                Err(e) => return err(e),
            };
            let mut fits = Vec::new();
            let wanted = |t: f64| times.as_ref().is_none_or(|ts| ts.contains(&t));
            for k in (0..tr.len()).filter(|&k| wanted(tr.times[k])) {
                let state = tr.state_at(k).expect("snapshots recorded");
                match analysis::best_fit_barenblatt(&state, eq, (0.5 * c0, 2.0 * c0)) {
                    Ok(f) => fits.push(f),
                    Err(e) => return err(e),
                }
            }
            let monotone = fits.windows(2).all(|w| w[1].renormalized <= (1.0 + slack) * w[0].renormalized);
            let drift = match fits.len() {
                0 | 1 => 0.0,
                n => (fits[n - 1].c / fits[n - 2].c - 1.0).abs(),
            };
            let last = fits.last().map(|f| (f.c, f.renormalized)).unwrap_or((f64::NAN, f64::NAN));
            Check::new(
                name,
                monotone && drift < 0.02,
                format!(
                    "c_star={} c_mass={} renormalized={} c_change={} nonincreasing={monotone}",
                    fmt(last.0),
                    fmt(c0),
                    fmt(last.1),
                    fmt(drift)
                ),
            )
        }
        Analysis::Monotonicity { tol } => match analysis::monotonicity_defect(tr, tr.start_time) {
            Ok(r) => Check::new(
                name,
                r.min_increment >= -tol * r.scale,
                format!(
                    "min_increment={} scale={} negative_entries={}",
                    fmt(r.min_increment),
                    fmt(r.scale),
                    r.negative_entries
                ),
            ),
            Err(e) => err(e),
        },
        Analysis::Alexandrov { r0, tol } => match analysis::alexandrov_monotonicity(&sim.final_state, *r0) {
            Ok(v) => {
                let sup = sim.final_state.sup();
                Check::new(name, v <= tol * sup, format!("max_increase={} sup={}", fmt(v), fmt(sup)))
            }
            Err(e) => err(e),
        },
        Analysis::Extinction { threshold } => match analysis::extinction_time(tr, *threshold) {
            Ok(Some(t)) => Check::new(name, true, format!("t_extinct={}", fmt(t))),
            Ok(None) => Check::new(
                name,
                false,
                format!("t_extinct=none final_sup={}", fmt(sim.final_state.sup())),
            ),
            Err(e) => err(e),
        },
        Analysis::Sturmian { delays, band } => {
            let c = match matching_c(sim) {
                Ok(c) => c,
                Err(e) => return err(e),
            };
            let cfg = match SignChangeConfig::relative(*band) {
                Ok(c) => c,
                Err(e) => return err(e),
            };
            let mut ok = true;
            let mut parts = Vec::new();
            for &delay in delays {
                let report = BarenblattSpec::new(*eq, c, delay).and_then(|spec| {
                    lap_number::sturmian_monotonicity(tr, |r, t| spec.eval(r, t).unwrap_or(f64::NAN), &cfg)
                });
                match report {
                    Ok(r) => {
                        ok &= r.nonincreasing;
                        let counts: Vec<String> = r.counts.iter().map(usize::to_string).collect();
                        parts.push(format!("delay{}=[{}]", delay, counts.join(" ")));
                    }
                    Err(e) => return err(e),
                }
            }
            Check::new(name, ok, parts.join(" "))
        }
        Analysis::ChangeOnce {
            delay_range,
            count,
            band,
        } => {
            let cfg = match SignChangeConfig::relative(*band) {
                Ok(c) => c,
                Err(e) => return err(e),
            };
            match lap_number::change_once_delays(
                tr,
                (delay_range[0], delay_range[1]),
                *count,
                &cfg,
                &Quadrature::default(),
            ) {
                Ok(r) => Check::new(
                    name,
                    true,
                    format!("c={} t1={} t2={}", fmt(r.c), fmt(r.t1), fmt(r.t2)),
                ),
                Err(e) => err(e),
            }
        }
        Analysis::Harnack { probes, t0, r, c_theta } => {
            let mut run = match SolverRun::new(sim.solver.clone(), sim.initial.clone(), sim.scenario.time.end) {
                Ok(r) => r,
                Err(e) => return err(e),
            };
            let grid = run.grid().clone();
            let mut mus = Vec::new();
            for &x0 in probes {
                match analysis::harnack_probe(&mut run, eq, grid.cell_of(x0), *t0, *r, *c_theta) {
                    Ok(rep) => mus.push(rep.mu),
                    Err(e) => return err(e),
                }
            }
            let finite = mus.iter().all(|m| m.is_finite());
            let list: Vec<String> = mus.iter().map(|&m| fmt(m)).collect();
            Check::new(name, finite, format!("mu=[{}]", list.join(" ")))
        }
        Analysis::Oscillation { x0, t0, radii } => {
            let mut run = match SolverRun::new(sim.solver.clone(), sim.initial.clone(), sim.scenario.time.end) {
                Ok(r) => r,
                Err(e) => return err(e),
            };
            let idx = run.grid().cell_of(*x0);
            match analysis::oscillation_scan(&mut run, eq, idx, *t0, radii) {
                Ok(rep) => Check::new(
                    name,
                    rep.exponent.is_finite() && rep.exponent > 0.0,
                    format!("exponent={} stderr={} omega0={}", fmt(rep.exponent), fmt(rep.std_error), fmt(rep.omega0)),
                ),
                Err(e) => err(e),
            }
        }
        Analysis::GiantResiduals { integral_tol, ode_tol } => {
            let Some(v) = &sim.giant else {
                return err(Error::Precondition("needs giant data".into()));
            };
            let rep = v.report();
            let ode = giant::ode_residual(v);
            let edge = *v.values().last().unwrap();
            let slope = v.slope_at_origin().abs();
            let h = v.grid().h_node();
            let ok = rep.integral_residual < *integral_tol && ode < *ode_tol && edge == 0.0 && slope <= 10.0 * h;
            Check::new(
                name,
                ok,
                format!(
                    "integral={} ode={} v_edge={} slope0={} h_node={} iterations={} v0={}",
                    fmt(rep.integral_residual),
                    fmt(ode),
                    fmt(edge),
                    fmt(slope),
                    fmt(h),
                    rep.iterations,
                    fmt(v.values()[0])
                ),
            )
        }
        Analysis::GiantTracking { tol } => {
            let Some(v) = &sim.giant else {
                return err(Error::Precondition("needs giant data".into()));
            };
            let t = sim.final_state.t();
            let f = t.powf(1.0 / (eq.q() - 2.0));
            let dist = sim
                .final_state
                .grid()
                .midpoints()
                .iter()
                .zip(sim.final_state.values())
                .map(|(&r, &u)| (f * u - v.eval(r)).abs())
                .fold(0.0, f64::max);
            Check::new(name, dist <= *tol, format!("sup_error={} tol={tol} t={}", fmt(dist), fmt(t)))
        }
    }
}

fn warnings(sim: &Simulation) -> Vec<String> {
    let mut w = Vec::new();
    if sim.final_state.values().iter().any(|&v| v < 0.0) {
        w.push("negative values in the final profile".into());
    }
    let grid = sim.final_state.grid();
    if sim.params.regime() == Regime::Slow
        && sim.solver.config().outer_bc == OuterBoundary::ZeroFlux
        && sim.trajectory.support.iter().any(|&s| s > grid.outer() - 2.0 * grid.h())
    {
        w.push("support reached the outer boundary".into());
    }
    w
}

/// Runs every analysis and writes artifacts under `out_root/<name>`.
pub fn run_loaded(scenario: &Scenario, opts: &RunOptions) -> Outcome {
    let seed = effective_seed(scenario, opts);
    let sim = match simulate(scenario, seed, scenario.needs_snapshots()) {
        Ok(s) => s,
        Err(RunError::Config(m)) => return Outcome::early(&scenario.name, Status::ConfigError, m),
        Err(RunError::Solver(e)) => {
            return Outcome::early(&scenario.name, Status::SolverFailure, e.to_string())
        }
    };
    let checks: Vec<Check> = scenario.analyses.iter().map(|a| evaluate(&sim, a)).collect();
    let warnings = warnings(&sim);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let (status, reason) = if !failed.is_empty() {
        (Status::AssertionFailed, Some(format!("failed checks: {}", failed.join(", "))))
    } else if opts.strict && !warnings.is_empty() {
        (Status::AssertionFailed, Some(format!("strict: {}", warnings.join("; "))))
    } else {
        (Status::Pass, None)
    };
    let mut outcome = Outcome {
        name: scenario.name.clone(),
        status,
        reason,
        checks,
        warnings,
        out_dir: None,
    };
    if let Some(root) = &opts.out_root {
        let dir = root.join(scenario.output.as_deref().unwrap_or(&scenario.name));
        match output::write_artifacts(&dir, &sim, &outcome.checks, &outcome.warnings, status.label()) {
            Ok(()) => outcome.out_dir = Some(dir),
            Err(e) => {
                outcome.status = outcome.status.max(Status::AssertionFailed);
                outcome.reason = Some(format!("writing artifacts: {e:#}"));
            }
        }
    }
    outcome
}

/// Loads, validates and runs a scenario file.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Outcome {
    match Scenario::load(path) {
        Ok(s) => run_loaded(&s, opts),
        Err(e) => {
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Outcome::early(&name, Status::ConfigError, e.to_string())
        }
    }
}
