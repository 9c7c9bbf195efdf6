//! Scenario files.

use std::path::{Path, PathBuf};

use qpar_core::{EquationParams, OuterBoundary, Regime};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub params: ParamsSection,
    pub domain: DomainSection,
    pub initial: InitialData,
    pub time: TimeSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, rename = "analysis")]
    pub analyses: Vec<Analysis>,
    /// Output directory, relative to the output root.
    #[serde(default)]
    pub output: Option<String>,
    /// Directory of the file the scenario was read from.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub n: u32,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    ZeroFlux,
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    /// Unit ball with zero boundary values.
    #[serde(default)]
    pub ball: bool,
    pub outer: Option<f64>,
    pub cells: usize,
    pub boundary: Option<Boundary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Barenblatt {
        c: f64,
        #[serde(default)]
        t_delay: f64,
    },
    Giant {
        #[serde(default = "default_nodes")]
        nodes: usize,
        #[serde(default = "default_giant_tol")]
        tol: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
    /// `height · (1 - ((r - center)/width)²)₊`.
    Bump { center: f64, width: f64, height: f64 },
    /// Columns `r,u`, interpolated linearly.
    Csv { path: String },
    RandomBumps {
        count: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn default_nodes() -> usize {
    1024
}

fn default_giant_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default)]
    pub start: f64,
    pub end: f64,
    #[serde(default)]
    pub samples: Vec<f64>,
    pub geometric: Option<Geometric>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometric {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub cfl: Option<f64>,
    pub delta: Option<f64>,
    pub max_dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Analysis {
    /// Relative d-mass drift over the samples.
    MassConservation { tol: f64 },
    /// Sup distance to the Barenblatt solution of the initial data at the end time.
    BarenblattError { tol: f64 },
    DecayExponent {
        window: [f64; 2],
        expect: Option<f64>,
        tol: f64,
    },
    SupportExponent {
        window: [f64; 2],
        expect: Option<f64>,
        tol: f64,
    },
    TailExponent {
        window: [f64; 2],
        expect: Option<f64>,
        tol: f64,
    },
    /// Renormalized best-fit error over the samples, nonincreasing up to `slack`.
    BestFit {
        #[serde(default = "default_slack")]
        slack: f64,
        /// Sample times to use; all samples if absent.
        #[serde(default)]
        times: Option<Vec<f64>>,
    },
    Monotonicity { tol: f64 },
    Alexandrov { r0: f64, tol: f64 },
    Extinction { threshold: f64 },
    Sturmian {
        delays: Vec<f64>,
        #[serde(default = "default_band")]
        band: f64,
    },
    ChangeOnce {
        delay_range: [f64; 2],
        count: usize,
        #[serde(default = "default_band")]
        band: f64,
    },
    Harnack {
        probes: Vec<f64>,
        t0: f64,
        r: f64,
        #[serde(default = "default_c_theta")]
        c_theta: f64,
    },
    Oscillation { x0: f64, t0: f64, radii: Vec<f64> },
    GiantResiduals { integral_tol: f64, ode_tol: f64 },
    /// `sup |t^{1/(q-2)} u - V|` at the end time.
    GiantTracking { tol: f64 },
}

fn default_slack() -> f64 {
    0.05
}

fn default_band() -> f64 {
    1e-8
}

fn default_c_theta() -> f64 {
    1.0
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::MassConservation { .. } => "mass_conservation",
            Analysis::BarenblattError { .. } => "barenblatt_error",
            Analysis::DecayExponent { .. } => "decay_exponent",
            Analysis::SupportExponent { .. } => "support_exponent",
            Analysis::TailExponent { .. } => "tail_exponent",
            Analysis::BestFit { .. } => "best_fit",
            Analysis::Monotonicity { .. } => "monotonicity",
            Analysis::Alexandrov { .. } => "alexandrov",
            Analysis::Extinction { .. } => "extinction",
            Analysis::Sturmian { .. } => "sturmian",
            Analysis::ChangeOnce { .. } => "change_once",
            Analysis::Harnack { .. } => "harnack",
            Analysis::Oscillation { .. } => "oscillation",
            Analysis::GiantResiduals { .. } => "giant_residuals",
            Analysis::GiantTracking { .. } => "giant_tracking",
        }
    }

    fn needs_snapshots(&self) -> bool {
        matches!(
            self,
            Analysis::BestFit { .. }
                | Analysis::Monotonicity { .. }
                | Analysis::Sturmian { .. }
                | Analysis::ChangeOnce { .. }
        )
    }
}

/// A scenario file that failed to load or validate.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut s = Self::parse(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::new(),
            message: e.message().to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    /// Canonical TOML echo of the scenario.
    pub fn echo(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn equation(&self) -> Result<EquationParams, ConfigError> {
        let p = self.params;
        EquationParams::new(p.n, p.p, p.q).map_err(|e| match e {
            qpar_core::Error::InvalidParams(m) => invalid(m),
            other => invalid(other.to_string()),
        })
    }

    pub fn outer(&self) -> f64 {
        if self.domain.ball {
            1.0
        } else {
            self.domain.outer.unwrap_or(1.0)
        }
    }

    pub fn boundary(&self) -> OuterBoundary {
        match (self.domain.ball, self.domain.boundary) {
            (true, _) | (false, Some(Boundary::Dirichlet)) => OuterBoundary::DirichletZero,
            _ => OuterBoundary::ZeroFlux,
        }
    }

    /// Sorted sample times in `(start, end]`; the end time is always included.
    pub fn sample_times(&self) -> Vec<f64> {
        let mut ts = self.time.samples.clone();
        if let Some(g) = self.time.geometric {
            for i in 0..g.count {
                ts.push(if i + 1 == g.count {
                    g.to
                } else {
                    g.from * (g.to / g.from).powf(i as f64 / (g.count - 1) as f64)
                });
            }
        }
        ts.push(self.time.end);
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        ts
    }

    pub fn needs_snapshots(&self) -> bool {
        self.analyses.iter().any(Analysis::needs_snapshots)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() || self.name.contains(['/', '\\']) {
            return Err(invalid("name must be a non-empty file-name-safe string"));
        }
        let eq = self.equation()?;
        let d = &self.domain;
        if d.ball && (d.outer.is_some_and(|r| r != 1.0) || d.boundary == Some(Boundary::ZeroFlux)) {
            return Err(invalid("ball domain has radius 1 and dirichlet boundary"));
        }
        if !d.ball && !d.outer.is_some_and(|r| r > 0.0 && r.is_finite()) {
            return Err(invalid("domain.outer must be positive (or set ball = true)"));
        }
        if d.cells < 2 {
            return Err(invalid("domain.cells must be at least 2"));
        }
        let t = &self.time;
        if !(t.start >= 0.0) || !(t.end > t.start) {
            return Err(invalid("time.end must exceed time.start ≥ 0"));
        }
        if let Some(g) = t.geometric {
            if !(g.from > 0.0 && g.to > g.from) || g.count < 2 {
                return Err(invalid("time.geometric needs 0 < from < to and count ≥ 2"));
            }
        }
        for &s in &self.sample_times() {
            if !(s > t.start && s <= t.end) {
                return Err(invalid(format!("sample time {s} outside (start, end]")));
            }
        }
        match self.initial {
            InitialData::Barenblatt { c, t_delay } => {
                if !(c > 0.0) || !(t_delay >= 0.0) || !(t.start + t_delay > 0.0) {
                    return Err(invalid("barenblatt data needs c > 0 and start + t_delay > 0"));
                }
                qpar_core::BarenblattSpec::new(eq, c, t_delay).map_err(|e| invalid(e.to_string()))?;
            }
            InitialData::Giant { nodes, tol, .. } => {
                if eq.regime() != Regime::Slow {
                    return Err(invalid("giant data requires q > 2"));
                }
                if !self.domain.ball || !(t.start > 0.0) || nodes < 32 || !(tol > 0.0) {
                    return Err(invalid(
                        "giant data needs the unit ball, start > 0, nodes ≥ 32 and tol > 0",
                    ));
                }
            }
            InitialData::Bump { width, height, center } => {
                if !(width > 0.0) || !(height >= 0.0) || !(center >= 0.0) {
                    return Err(invalid("bump needs width > 0, height ≥ 0 and center ≥ 0"));
                }
            }
            InitialData::Csv { ref path } => {
                if path.is_empty() {
                    return Err(invalid("csv initial data needs a path"));
                }
            }
            InitialData::RandomBumps { count, .. } => {
                if count == 0 {
                    return Err(invalid("random_bumps needs count ≥ 1"));
                }
            }
        }
        let s = self.solver;
        if s.cfl.is_some_and(|c| !(c > 0.0 && c <= 1.0)) {
            return Err(invalid("solver.cfl must lie in (0, 1]"));
        }
        if s.delta.is_some_and(|d| !(d >= 0.0)) || s.max_dt.is_some_and(|d| !(d > 0.0)) {
            return Err(invalid("solver.delta must be ≥ 0 and solver.max_dt > 0"));
        }
        if eq.q() < 2.0 && s.delta == Some(0.0) {
            return Err(invalid("solver.delta must be positive when q < 2"));
        }
        for a in &self.analyses {
            self.validate_analysis(a, &eq)?;
        }
        Ok(())
    }

    fn validate_analysis(&self, a: &Analysis, eq: &EquationParams) -> Result<(), ConfigError> {
        let name = a.name();
        let window_ok = |w: &[f64; 2]| w[0] > 0.0 && w[1] > w[0];
        let pre = |m: &str| invalid(format!("{name}: precondition failed: {m}"));
        match a {
            Analysis::MassConservation { tol }
            | Analysis::BarenblattError { tol }
            | Analysis::Monotonicity { tol }
            | Analysis::GiantTracking { tol } => {
                if !(*tol >= 0.0) {
                    return Err(invalid(format!("{name}: tol must be ≥ 0")));
                }
            }
            _ => {}
        }
        match a {
            Analysis::BarenblattError { .. } => {
                if !matches!(self.initial, InitialData::Barenblatt { .. }) {
                    return Err(pre("needs barenblatt initial data"));
                }
            }
            Analysis::DecayExponent { window, .. } | Analysis::SupportExponent { window, .. } => {
                if !window_ok(window) {
                    return Err(invalid(format!("{name}: window must satisfy 0 < lo < hi")));
                }
                if matches!(a, Analysis::SupportExponent { .. }) && eq.regime() != Regime::Slow {
                    return Err(pre("support exponent requires the slow regime (q > 2)"));
                }
            }
            Analysis::TailExponent { window, .. } => {
                if !window_ok(window) {
                    return Err(invalid(format!("{name}: window must satisfy 0 < lo < hi")));
                }
                if eq.regime() != Regime::Fast {
                    return Err(pre("tail exponent applies to the fast regime (q < 2)"));
                }
                if !eq.range_condition() {
                    return Err(pre("tail exponent requires the range condition"));
                }
            }
            Analysis::BestFit { slack, times } => {
                if !(*slack >= 0.0) {
                    return Err(invalid(format!("{name}: slack must be ≥ 0")));
                }
                let samples = self.sample_times();
                if times.as_ref().is_some_and(|ts| ts.iter().any(|t| !samples.contains(t))) {
                    return Err(invalid(format!("{name}: times must be sample times")));
                }
                barenblatt_exists(eq).map_err(|m| pre(&m))?;
            }
            Analysis::Monotonicity { .. } => {
                if eq.q() <= 2.0 {
                    return Err(pre("monotonicity estimate requires q > 2"));
                }
                if self.boundary() != OuterBoundary::DirichletZero {
                    return Err(pre("monotonicity estimate needs a dirichlet boundary"));
                }
            }
            Analysis::Alexandrov { r0, .. } => {
                if !(*r0 >= 0.0 && *r0 < self.outer()) {
                    return Err(invalid(format!("{name}: r0 must lie in [0, R)")));
                }
            }
            Analysis::Extinction { threshold } => {
                if !(*threshold > 0.0) {
                    return Err(invalid(format!("{name}: threshold must be positive")));
                }
            }
            Analysis::Sturmian { delays, band } => {
                if delays.is_empty() || delays.iter().any(|&d| !(d >= 0.0)) || !(*band >= 0.0) {
                    return Err(invalid(format!("{name}: delays must be ≥ 0 and band ≥ 0")));
                }
                barenblatt_exists(eq).map_err(|m| pre(&m))?;
            }
            Analysis::ChangeOnce {
                delay_range,
                count,
                band,
            } => {
                if !window_ok(delay_range) || *count < 2 || !(*band >= 0.0) {
                    return Err(invalid(format!(
                        "{name}: delay_range must satisfy 0 < lo < hi and count ≥ 2"
                    )));
                }
                barenblatt_exists(eq).map_err(|m| pre(&m))?;
            }
            Analysis::Harnack { probes, t0, r, c_theta } => {
                if probes.is_empty() || !(*r > 0.0) || !(*c_theta > 0.0) {
                    return Err(invalid(format!("{name}: needs probes, r > 0 and c_theta > 0")));
                }
                if !(*t0 > self.time.start && *t0 < self.time.end) {
                    return Err(invalid(format!("{name}: t0 must lie inside the run")));
                }
            }
            Analysis::Oscillation { radii, t0, .. } => {
                if radii.len() < 2 || !(*t0 > self.time.start && *t0 <= self.time.end) {
                    return Err(invalid(format!("{name}: needs ≥ 2 radii and t0 inside the run")));
                }
            }
            Analysis::GiantResiduals { .. } | Analysis::GiantTracking { .. } => {
                if !matches!(self.initial, InitialData::Giant { .. }) {
                    return Err(pre("needs giant initial data"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn barenblatt_exists(eq: &EquationParams) -> Result<(), String> {
    qpar_core::BarenblattSpec::new(*eq, 1.0, 1.0)
        .map(|_| ())
        .map_err(|e| format!("no Barenblatt reference: {e}"))
}
