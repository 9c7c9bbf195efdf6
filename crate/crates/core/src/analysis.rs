//! Diagnostics computed from runs: exponent fits, best-fit Barenblatt
//! distance, radial monotonicity, extinction, the monotonicity estimate,
//! Harnack and oscillation probes.

use std::sync::Arc;

use crate::closed_forms::BarenblattSpec;
use crate::error::{Error, Result};
use crate::numerics::{golden_section, line_fit};
use crate::params::{EquationParams, Regime};
use crate::solver1d::{Grid, OuterBoundary, RadialState, Sampler, Solver, Trajectory};

/// Least-squares power-law fit on log-log samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// Fitted exponent, sign convention per fit (decay exponents are positive).
    pub exponent: f64,
    /// Standard error of the slope.
    pub std_error: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Minimum number of samples for a fit.
pub const MIN_FIT_SAMPLES: usize = 5;

fn power_fit(xs: &[f64], ys: &[f64], window: (f64, f64), what: &str) -> Result<FitResult> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::InvalidArgument("fit window is empty".into()));
    }
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if x >= lo && x <= hi {
            if !(y > 0.0) || !(x > 0.0) {
                return Err(Error::Degenerate(format!(
                    "{what} must be positive inside the fit window"
                )));
            }
            lx.push(x.ln());
            ly.push(y.ln());
        }
    }
    if lx.len() < MIN_FIT_SAMPLES {
        return Err(Error::Degenerate(format!(
            "{} samples in window, need {MIN_FIT_SAMPLES}",
            lx.len()
        )));
    }
    let (slope, intercept, se) = line_fit(&lx, &ly);
    Ok(FitResult {
        exponent: slope,
        std_error: se,
        intercept,
        window,
        samples: lx.len(),
    })
}

/// `sup u ~ t^{-α̂}`; returns `α̂`.
pub fn fit_decay_exponent(traj: &Trajectory, window: (f64, f64)) -> Result<FitResult> {
    let mut fit = power_fit(&traj.times, &traj.sup, window, "sup norm")?;
    fit.exponent = -fit.exponent;
    Ok(fit)
}

/// `support ~ t^{β̂}`; returns `β̂`.
pub fn fit_support_exponent(traj: &Trajectory, window: (f64, f64)) -> Result<FitResult> {
    if traj.params.regime() != Regime::Slow {
        return Err(Error::UnboundedSupport(match traj.params.regime() {
            Regime::Fast => "fast",
            _ => "heat-type",
        }));
    }
    let edge = traj.grid.outer() - traj.grid.h();
    for (&t, &s) in traj.times.iter().zip(&traj.support) {
        if t >= window.0 && t <= window.1 && s > edge {
            return Err(Error::Containment(format!(
                "support reached the outer boundary at t = {t}"
            )));
        }
    }
    power_fit(&traj.times, &traj.support, window, "support radius")
}

/// `u ~ r^{s}` over a radius window of a fast-diffusion profile; returns `s`.
pub fn tail_exponent(
    state: &RadialState,
    params: &EquationParams,
    window: (f64, f64),
    delta: f64,
) -> Result<FitResult> {
    if params.regime() != Regime::Fast {
        return Err(Error::Precondition(
            "tail exponent applies to the fast regime (q < 2)".into(),
        ));
    }
    if !params.range_condition() {
        return Err(Error::Precondition(
            "tail exponent requires the range condition".into(),
        ));
    }
    let u = state.values();
    let sup = state.sup();
    let last = *u.last().unwrap();
    if last.abs() > 1e-8 * sup {
        return Err(Error::Containment(format!(
            "outer cell value {last:e} exceeds 1e-8 of the sup norm"
        )));
    }
    let mids = state.grid().midpoints();
    for (&r, &v) in mids.iter().zip(u) {
        if r >= window.0 && r <= window.1 && !(v > 10.0 * delta) {
            return Err(Error::Precondition(format!(
                "tail value {v:e} at r = {r} is within 10·δ of the regularization floor"
            )));
        }
    }
    power_fit(mids, u, window, "tail value")
}

/// Result of [`best_fit_barenblatt`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestFit {
    pub c: f64,
    pub sup_distance: f64,
    /// `t^α · sup|u - B(·, t; C*)|`.
    pub renormalized: f64,
}

/// Golden-section search on `C` for the Barenblatt solution (no delay)
/// closest in sup norm to `state` at its own time.
pub fn best_fit_barenblatt(
    state: &RadialState,
    params: &EquationParams,
    c_bracket: (f64, f64),
) -> Result<BestFit> {
    if state.sup() == 0.0 {
        return Err(Error::Degenerate("zero state has no best-fit Barenblatt".into()));
    }
    if state.values().iter().any(|&v| v < 0.0) {
        return Err(Error::Precondition("state must be nonnegative".into()));
    }
    let (lo, hi) = c_bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument("C bracket must satisfy 0 < lo < hi".into()));
    }
    let t = state.t();
    let base = BarenblattSpec::new(*params, 1.0, 0.0)?;
    let objective = |c: f64| -> f64 {
        base.with_c(c)
            .and_then(|s| s.profile_at(t).map(|f| crate::solver1d::sup_distance(state, f)))
            .unwrap_or(f64::INFINITY)
    };
    let (c, dist) = golden_section(objective, lo, hi, 1e-6);
    let edge_tol = 1e-4 * (hi - lo);
    if c - lo < edge_tol || hi - c < edge_tol {
        return Err(Error::NonConvergence(format!(
            "best-fit C = {c} sits at the bracket edge [{lo}, {hi}]"
        )));
    }
    let alpha = params.derive().alpha;
    Ok(BestFit {
        c,
        sup_distance: dist,
        renormalized: t.powf(alpha) * dist,
    })
}

/// `u^κ(r) = κ^{d/λ} u(κ^{1/λ} r)` on the same grid, at time `t/κ`.
pub fn rescaled_orbit(state: &RadialState, params: &EquationParams, kappa: f64) -> Result<RadialState> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument("scaling factor must be positive".into()));
    }
    let e = params.derive();
    let stretch = kappa.powf(1.0 / e.lambda);
    let amp = kappa.powf(e.alpha);
    let grid = state.grid().clone();
    let outer = grid.outer();
    let support = state.support_radius();
    if support / stretch > outer - grid.h() {
        return Err(Error::Containment(
            "rescaled support leaves the grid".into(),
        ));
    }
    let u: Vec<f64> = grid
        .midpoints()
        .iter()
        .map(|&r| {
            let x = stretch * r;
            if x >= support {
                0.0
            } else {
                amp * state.interpolate(x)
            }
        })
        .collect();
    RadialState::new(grid, u, state.t() / kappa)
}

/// Largest increase of `u` between consecutive cells with midpoint `≥ r0`.
pub fn alexandrov_monotonicity(state: &RadialState, r0: f64) -> Result<f64> {
    let grid = state.grid();
    if !(r0 < grid.outer()) {
        return Err(Error::InvalidArgument("R0 must be inside the grid".into()));
    }
    let mids = grid.midpoints();
    let u = state.values();
    Ok((0..u.len() - 1)
        .filter(|&i| mids[i] >= r0)
        .map(|i| u[i + 1] - u[i])
        .fold(0.0, f64::max))
}

/// First sample time with `sup < threshold`.
///
/// With `q < 2` the regularization `δ` bounds the diffusivity, so the decay
/// just before extinction is slower than for the unregularized equation.
pub fn extinction_time(traj: &Trajectory, threshold: f64) -> Result<Option<f64>> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument("threshold must be positive".into()));
    }
    Ok(traj
        .times
        .iter()
        .zip(&traj.sup)
        .find(|(_, &s)| s < threshold)
        .map(|(&t, _)| t))
}

/// `sup ~ e^{-ρ t}`; returns `ρ` in the exponent field.
pub fn exponential_rate(traj: &Trajectory, window: (f64, f64)) -> Result<FitResult> {
    let mut ts = Vec::new();
    let mut ls = Vec::new();
    for (&t, &s) in traj.times.iter().zip(&traj.sup) {
        if t >= window.0 && t <= window.1 {
            if !(s > 0.0) {
                return Err(Error::Degenerate("sup norm vanished inside the window".into()));
            }
            ts.push(t);
            ls.push(s.ln());
        }
    }
    if ts.len() < MIN_FIT_SAMPLES {
        return Err(Error::Degenerate(format!(
            "{} samples in window, need {MIN_FIT_SAMPLES}",
            ts.len()
        )));
    }
    let (slope, intercept, se) = line_fit(&ts, &ls);
    Ok(FitResult {
        exponent: -slope,
        std_error: se,
        intercept,
        window,
        samples: ts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    /// `min Δ(τ^{1/(q-2)} u_i)` over cells and consecutive snapshots.
    pub min_increment: f64,
    /// `max τ^{1/(q-2)} |u_i|`, the scale for the tolerance.
    pub scale: f64,
    pub negative_entries: bool,
}

/// Monotonicity of `τ^{1/(q-2)} u_i(τ)` with `τ = t - origin`.
pub fn monotonicity_defect(traj: &Trajectory, origin: f64) -> Result<MonotonicityReport> {
    let q = traj.params.q();
    if q <= 2.0 {
        return Err(Error::Precondition("monotonicity estimate requires q > 2".into()));
    }
    if traj.config.outer_bc != OuterBoundary::DirichletZero {
        return Err(Error::Precondition(
            "monotonicity estimate is for bounded-domain runs with zero boundary values".into(),
        ));
    }
    if traj.snapshots.len() != traj.times.len() || traj.snapshots.len() < 2 {
        return Err(Error::Degenerate("need at least two profile snapshots".into()));
    }
    let k = 1.0 / (q - 2.0);
    let scaled: Vec<Vec<f64>> = traj
        .times
        .iter()
        .zip(&traj.snapshots)
        .map(|(&t, u)| {
            let f = (t - origin).max(0.0).powf(k);
            u.iter().map(|v| f * v).collect()
        })
        .collect();
    let mut min_increment = f64::INFINITY;
    let mut scale = 0.0_f64;
    for w in scaled.windows(2) {
        for (a, b) in w[0].iter().zip(&w[1]) {
            min_increment = min_increment.min(b - a);
            scale = scale.max(a.abs()).max(b.abs());
        }
    }
    Ok(MonotonicityReport {
        min_increment,
        scale,
        negative_entries: traj.snapshots.iter().flatten().any(|&v| v < 0.0),
    })
}

/// A space-time field on a radial grid that can be sampled at chosen times.
pub trait Evolution {
    fn grid(&self) -> &Arc<Grid>;
    fn start_time(&self) -> f64;
    fn horizon(&self) -> f64;
    /// Cell values at each requested time (any order, within
    /// `[start_time, horizon]`).
    fn states_at(&mut self, times: &[f64]) -> Result<Vec<Vec<f64>>>;
}

fn check_times<E: Evolution + ?Sized>(ev: &E, times: &[f64]) -> Result<()> {
    for &t in times {
        if t < ev.start_time() || t > ev.horizon() {
            return Err(Error::Containment(format!(
                "time {t} outside [{}, {}]",
                ev.start_time(),
                ev.horizon()
            )));
        }
    }
    Ok(())
}

/// Numerical solution restarted from fixed initial data on every query.
#[derive(Debug, Clone)]
pub struct SolverRun {
    solver: Solver,
    initial: RadialState,
    horizon: f64,
}

impl SolverRun {
    pub fn new(solver: Solver, initial: RadialState, horizon: f64) -> Result<Self> {
        if !(horizon > initial.t()) {
            return Err(Error::InvalidArgument("horizon must exceed the start time".into()));
        }
        Ok(Self {
            solver,
            initial,
            horizon,
        })
    }
}

impl Evolution for SolverRun {
    fn grid(&self) -> &Arc<Grid> {
        self.initial.grid()
    }

    fn start_time(&self) -> f64 {
        self.initial.t()
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn states_at(&mut self, times: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_times(self, times)?;
        let start = self.initial.t();
        let mut sorted: Vec<f64> = times.iter().copied().filter(|&t| t > start).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        let snaps = match sorted.last() {
            Some(&end) => {
                let mut s = self.initial.clone();
                let traj = self.solver.run_until(&mut s, end, &Sampler::new(sorted.clone(), true))?;
                traj.snapshots
            }
            None => Vec::new(),
        };
        Ok(times
            .iter()
            .map(|&t| {
                if t <= start {
                    self.initial.values().to_vec()
                } else {
                    let k = sorted.partition_point(|&s| s < t);
                    snaps[k].clone()
                }
            })
            .collect())
    }
}

/// Barenblatt solution sampled at cell midpoints.
#[derive(Debug, Clone)]
pub struct ClosedFormRun {
    spec: BarenblattSpec,
    grid: Arc<Grid>,
    start: f64,
    horizon: f64,
}

impl ClosedFormRun {
    pub fn new(spec: BarenblattSpec, grid: Arc<Grid>, start: f64, horizon: f64) -> Result<Self> {
        if !(start + spec.t_delay() > 0.0) || !(horizon > start) {
            return Err(Error::InvalidArgument("invalid time window".into()));
        }
        Ok(Self {
            spec,
            grid,
            start,
            horizon,
        })
    }
}

impl Evolution for ClosedFormRun {
    fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn start_time(&self) -> f64 {
        self.start
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn states_at(&mut self, times: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_times(self, times)?;
        times
            .iter()
            .map(|&t| {
                let f = self.spec.profile_at(t)?;
                Ok(self.grid.midpoints().iter().map(|&r| f(r)).collect())
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnackReport {
    pub index: usize,
    pub x0: f64,
    pub t0: f64,
    pub r: f64,
    pub c_theta: f64,
    pub theta: f64,
    pub u0: f64,
    /// Infimum over radii within `r` of `x0` at `t0 + θ`.
    pub inf: f64,
    /// `u0 / inf`; infinite if the infimum vanishes.
    pub mu: f64,
}

/// Cells whose midpoint lies within `r` of `x0`.
fn cells_within(grid: &Grid, x0: f64, r: f64) -> std::ops::Range<usize> {
    let mids = grid.midpoints();
    let lo = mids.partition_point(|&m| m < x0 - r);
    let hi = mids.partition_point(|&m| m <= x0 + r);
    lo..hi
}

/// Measures `μ = u(x0, t0) / inf_{|r - x0| < r} u(·, t0 + θ)` with the
/// intrinsic delay `θ = C_θ r^q / u(x0, t0)^{q-2}`.
pub fn harnack_probe<E: Evolution + ?Sized>(
    ev: &mut E,
    params: &EquationParams,
    index: usize,
    t0: f64,
    r: f64,
    c_theta: f64,
) -> Result<HarnackReport> {
    let grid = ev.grid().clone();
    if index >= grid.cells() {
        return Err(Error::InvalidArgument(format!("cell {index} out of range")));
    }
    if !(r > 0.0) || !(c_theta > 0.0) {
        return Err(Error::InvalidArgument("radius and C_θ must be positive".into()));
    }
    let x0 = grid.midpoints()[index];
    if x0 + 4.0 * r > grid.outer() {
        return Err(Error::Containment(format!(
            "ball of radius 4r = {} around {x0} leaves [0, {}]",
            4.0 * r,
            grid.outer()
        )));
    }
    let u0 = ev.states_at(&[t0])?.remove(0)[index];
    if !(u0 > 0.0) {
        return Err(Error::Precondition(format!("u(x0, t0) = {u0} is not positive")));
    }
    let q = params.q();
    let theta = c_theta * r.powf(q) / u0.powf(q - 2.0);
    if t0 - 4.0 * theta < ev.start_time() || t0 + 4.0 * theta > ev.horizon() {
        return Err(Error::Containment(format!(
            "time window t0 ± 4θ = {t0} ± {} leaves the run",
            4.0 * theta
        )));
    }
    let later = ev.states_at(&[t0 + theta])?.remove(0);
    let cells = cells_within(&grid, x0, r);
    let inf = later[cells].iter().copied().fold(f64::INFINITY, f64::min);
    let mu = if inf > 0.0 { u0 / inf } else { f64::INFINITY };
    Ok(HarnackReport {
        index,
        x0,
        t0,
        r,
        c_theta,
        theta,
        u0,
        inf,
        mu,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationReport {
    pub x0: f64,
    pub t0: f64,
    /// Reference oscillation `ω0` fixing the cylinder scaling `a0 = ω0^{2-q}`.
    pub omega0: f64,
    pub a0: f64,
    pub radii: Vec<f64>,
    pub oscillations: Vec<f64>,
    /// Fitted Hölder exponent `â` of `osc ~ r^â`.
    pub exponent: f64,
    pub std_error: f64,
    /// Log-residuals of the fit.
    pub residuals: Vec<f64>,
}

/// Time levels sampled inside each cylinder.
const CYLINDER_LEVELS: usize = 9;

/// Oscillation of the run over backward cylinders
/// `{|r - x0| < ρ} × [t0 - a0 ρ^q, t0]`, `a0 = ω0^{2-q}`, for each `ρ` in
/// `radii`. `ω0` is the spatial oscillation at `t0` over the largest interval.
pub fn oscillation_scan<E: Evolution + ?Sized>(
    ev: &mut E,
    params: &EquationParams,
    index: usize,
    t0: f64,
    radii: &[f64],
) -> Result<OscillationReport> {
    let grid = ev.grid().clone();
    if index >= grid.cells() {
        return Err(Error::InvalidArgument(format!("cell {index} out of range")));
    }
    if radii.len() < 2 || radii.windows(2).any(|w| w[1] >= w[0]) || radii[radii.len() - 1] <= 0.0 {
        return Err(Error::InvalidArgument("radii must be positive and decreasing".into()));
    }
    let x0 = grid.midpoints()[index];
    let q = params.q();
    if x0 + radii[0] > grid.outer() {
        return Err(Error::Containment("largest cylinder leaves the domain".into()));
    }
    let now = ev.states_at(&[t0])?.remove(0);
    let span = |u: &[f64], rho: f64| {
        let cells = cells_within(&grid, x0, rho);
        let (lo, hi) = u[cells]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        (lo, hi)
    };
    let (lo, hi) = span(&now, radii[0]);
    let omega0 = hi - lo;
    if !(omega0 > 0.0) {
        return Err(Error::Degenerate("zero oscillation".into()));
    }
    let a0 = omega0.powf(2.0 - q);
    let mut times = Vec::new();
    for &rho in radii {
        let depth = a0 * rho.powf(q);
        if t0 - depth < ev.start_time() {
            return Err(Error::Containment(format!(
                "cylinder of radius {rho} reaches before the start of the run"
            )));
        }
        for k in 0..CYLINDER_LEVELS {
            times.push(t0 - depth * k as f64 / (CYLINDER_LEVELS - 1) as f64);
        }
    }
    let states = ev.states_at(&times)?;
    let mut oscillations = Vec::with_capacity(radii.len());
    for (j, &rho) in radii.iter().enumerate() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for u in &states[j * CYLINDER_LEVELS..(j + 1) * CYLINDER_LEVELS] {
            let (a, b) = span(u, rho);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        oscillations.push(hi - lo);
    }
    if oscillations.iter().any(|&o| !(o > 0.0)) {
        return Err(Error::Degenerate("zero oscillation".into()));
    }
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = oscillations.iter().map(|o| o.ln()).collect();
    let (slope, intercept, se) = line_fit(&lx, &ly);
    let residuals = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| y - intercept - slope * x)
        .collect();
    Ok(OscillationReport {
        x0,
        t0,
        omega0,
        a0,
        radii: radii.to_vec(),
        oscillations,
        exponent: slope,
        std_error: se,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver1d::{build_grid, project, SolverConfig};
    use crate::Quadrature;

    fn p334() -> EquationParams {
        EquationParams::new(3, 3.0, 4.0).unwrap()
    }

    /// Trajectory built from exact Barenblatt diagnostics.
    fn exact_trajectory(spec: &BarenblattSpec, times: &[f64]) -> Trajectory {
        let p = *spec.params();
        let grid = Arc::new(build_grid(1e6, 16, p.d()).unwrap());
        let cfg = SolverConfig::for_params(&p, OuterBoundary::ZeroFlux);
        Trajectory {
            params: p,
            grid,
            config: cfg,
            start_time: 0.0,
            times: times.to_vec(),
            sup: times.iter().map(|&t| spec.eval(0.0, t).unwrap()).collect(),
            d_mass: vec![1.0; times.len()],
            support: times
                .iter()
                .map(|&t| spec.support_radius(t).unwrap_or(f64::INFINITY))
                .collect(),
            l2w: vec![1.0; times.len()],
            snapshots: Vec::new(),
            steps: 0,
        }
    }

    fn geometric(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn exponents_exact_on_closed_forms() {
        for (n, p, q) in [(3, 3.0, 4.0), (2, 2.0, 2.0), (3, 3.0, 1.5)] {
            let pr = EquationParams::new(n, p, q).unwrap();
            let spec = BarenblattSpec::new(pr, 1.0, 0.0).unwrap();
            let tr = exact_trajectory(&spec, &geometric(10.0, 100.0, 12));
            let fit = fit_decay_exponent(&tr, (10.0, 100.0)).unwrap();
            assert!((fit.exponent - pr.derive().alpha).abs() < 1e-12);
            assert_eq!(fit.samples, 12);
        }
        let spec = BarenblattSpec::new(p334(), 1.0, 0.0).unwrap();
        let tr = exact_trajectory(&spec, &geometric(10.0, 100.0, 12));
        let fit = fit_support_exponent(&tr, (10.0, 100.0)).unwrap();
        assert!((fit.exponent - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let spec = BarenblattSpec::new(p334(), 1.0, 0.0).unwrap();
        let tr = exact_trajectory(&spec, &geometric(10.0, 100.0, 4));
        assert!(matches!(fit_decay_exponent(&tr, (10.0, 100.0)), Err(Error::Degenerate(_))));
        let fast = BarenblattSpec::new(EquationParams::new(3, 3.0, 1.5).unwrap(), 1.0, 0.0).unwrap();
        let tr = exact_trajectory(&fast, &geometric(10.0, 100.0, 8));
        assert!(fit_support_exponent(&tr, (10.0, 100.0)).is_err());
    }

    #[test]
    fn tail_of_exact_fast_profile() {
        let p = EquationParams::new(3, 3.0, 1.5).unwrap();
        let spec = BarenblattSpec::new(p, 1.0, 0.0).unwrap();
        let grid = Arc::new(build_grid(1e4, 20_000, p.d()).unwrap());
        let f = spec.profile_at(1.0).unwrap();
        let mut s = project(f, grid, 1.0).unwrap();
        // Mimic a truncated domain: the last cell is cut to zero.
        *s.values_mut().last_mut().unwrap() = 0.0;
        let fit = tail_exponent(&s, &p, (20.0, 200.0), 1e-8).unwrap();
        assert!((fit.exponent + 3.0).abs() < 0.03, "{fit:?}");
        assert!(tail_exponent(&s, &p334(), (20.0, 200.0), 1e-8).is_err());
        let short = Arc::new(build_grid(300.0, 600, p.d()).unwrap());
        let full = project(spec.profile_at(1.0).unwrap(), short, 1.0).unwrap();
        assert!(matches!(tail_exponent(&full, &p, (20.0, 200.0), 1e-8), Err(Error::Containment(_))));
    }

    #[test]
    fn best_fit_recovers_c() {
        let p = p334();
        let spec = BarenblattSpec::new(p, 1.0, 0.0).unwrap();
        let grid = Arc::new(build_grid(6.0, 2000, p.d()).unwrap());
        let s = project(spec.profile_at(2.0).unwrap(), grid, 2.0).unwrap();
        let fit = best_fit_barenblatt(&s, &p, (0.5, 2.0)).unwrap();
        assert!((fit.c - 1.0).abs() < 1e-4, "{fit:?}");
        assert!(fit.sup_distance < 1e-6);
        let zero = project(|_| 0.0, s.grid().clone(), 2.0).unwrap();
        assert!(best_fit_barenblatt(&zero, &p, (0.5, 2.0)).is_err());
        assert!(best_fit_barenblatt(&s, &p, (1.5, 3.0)).is_err());
    }

    #[test]
    fn rescaled_orbit_of_barenblatt() {
        let p = p334();
        let spec = BarenblattSpec::new(p, 1.0, 0.0).unwrap();
        let grid = Arc::new(build_grid(8.0, 2000, p.d()).unwrap());
        let s = project(spec.profile_at(4.0).unwrap(), grid, 4.0).unwrap();
        let same = rescaled_orbit(&s, &p, 1.0).unwrap();
        assert_eq!(same.values(), s.values());
        let k = 2f64.powi(12);
        let r = rescaled_orbit(&s, &p, 1.0 / k).unwrap();
        assert_eq!(r.t(), 4.0 * k);
        let exact = spec.profile_at(4.0 * k).unwrap();
        let err = crate::solver1d::sup_distance(&r, exact);
        assert!(err < 0.01 * r.sup(), "{err}");
        assert!((r.d_mass() / s.d_mass() - 1.0).abs() < 1e-4);
        assert!(rescaled_orbit(&s, &p, 1e-30).is_err());
    }

    #[test]
    fn alexandrov_examples() {
        let p = p334();
        let spec = BarenblattSpec::new(p, 1.0, 0.0).unwrap();
        let grid = Arc::new(build_grid(6.0, 300, p.d()).unwrap());
        let s = project(spec.profile_at(2.0).unwrap(), grid.clone(), 2.0).unwrap();
        assert_eq!(alexandrov_monotonicity(&s, 0.0).unwrap(), 0.0);
        let up = project(|r| r, grid, 0.0).unwrap();
        assert!(alexandrov_monotonicity(&up, 1.0).unwrap() > 0.0);
        assert!(alexandrov_monotonicity(&up, 7.0).is_err());
    }

    #[test]
    fn extinction_detection() {
        let spec = BarenblattSpec::new(p334(), 1.0, 0.0).unwrap();
        let tr = exact_trajectory(&spec, &geometric(1.0, 1e6, 10));
        assert_eq!(extinction_time(&tr, 1e-6).unwrap(), None);
        let mut tr2 = tr.clone();
        tr2.sup = vec![1.0, 0.5, 1e-7, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(extinction_time(&tr2, 1e-6).unwrap(), Some(tr.times[2]));
        assert!(extinction_time(&tr, 0.0).is_err());
    }

    #[test]
    fn exponential_rate_fit() {
        let spec = BarenblattSpec::new(p334(), 1.0, 0.0).unwrap();
        let mut tr = exact_trajectory(&spec, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        tr.sup = tr.times.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let fit = exponential_rate(&tr, (1.0, 6.0)).unwrap();
        assert!((fit.exponent - 0.7).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_on_ball_run() {
        let p = p334();
        let grid = Arc::new(build_grid(1.0, 100, p.d()).unwrap());
        let init = project(|r| 1.0 - r * r, grid, 0.0).unwrap();
        let cfg = SolverConfig::for_params(&p, OuterBoundary::DirichletZero);
        let mut sol = Solver::new(p, cfg).unwrap();
        let mut s = init;
        let tr = sol.run_until(&mut s, 1.0, &Sampler::geometric(1e-3, 1.0, 20, true)).unwrap();
        let rep = monotonicity_defect(&tr, 0.0).unwrap();
        assert!(rep.min_increment >= -1e-6 * rep.scale, "{rep:?}");
        assert!(!rep.negative_entries);
        let cfg = SolverConfig::for_params(&p, OuterBoundary::ZeroFlux);
        let mut tr2 = tr.clone();
        tr2.config = cfg;
        assert!(monotonicity_defect(&tr2, 0.0).is_err());
    }

    #[test]
    fn harnack_closed_form_oracle() {
        let p = p334();
        let spec = BarenblattSpec::new(p, 1.0, 0.0).unwrap();
        let grid = Arc::new(build_grid(20.0, 2000, p.d()).unwrap());
        let mut ev = ClosedFormRun::new(spec, grid.clone(), 1.0, 100.0).unwrap();
        let rep = harnack_probe(&mut ev, &p, 0, 10.0, 0.5, 1.0).unwrap();
        let u0 = spec.eval(grid.midpoints()[0], 10.0).unwrap();
        let theta = 0.5f64.powi(4) / (u0 * u0);
        assert!((rep.theta - theta).abs() < 1e-12 * theta);
        // Radially decreasing: the infimum sits at the outer edge of the interval.
        let cells = cells_within(&grid, rep.x0, 0.5);
        let edge = grid.midpoints()[cells.end - 1];
        let inf = spec.eval(edge, 10.0 + theta).unwrap();
        assert!((rep.mu - u0 / inf).abs() < 1e-12 * rep.mu);
    }

    #[test]
    fn harnack_constant_and_errors() {
        let p = p334();
        let grid = Arc::new(build_grid(4.0, 100, p.d()).unwrap());
        let init = project(|_| 0.5, grid.clone(), 0.0).unwrap();
        let sol = Solver::new(p, SolverConfig::for_params(&p, OuterBoundary::ZeroFlux)).unwrap();
        let mut run = SolverRun::new(sol, init, 10.0).unwrap();
        let rep = harnack_probe(&mut run, &p, 20, 2.0, 0.3, 1.0).unwrap();
        assert_eq!(rep.mu, 1.0);
        assert!(matches!(harnack_probe(&mut run, &p, 90, 2.0, 0.3, 1.0), Err(Error::Containment(_))));
        let zero = project(|r| if r < 1.0 { 1.0 } else { 0.0 }, grid, 0.0).unwrap();
        let sol = Solver::new(p, SolverConfig::for_params(&p, OuterBoundary::ZeroFlux)).unwrap();
        let mut run = SolverRun::new(sol, zero, 1.0).unwrap();
        assert!(matches!(harnack_probe(&mut run, &p, 70, 0.5, 0.1, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn oscillation_scan_smooth_point() {
        let p = p334();
        let spec = BarenblattSpec::new(p, 1.0, 0.0).unwrap();
        let grid = Arc::new(build_grid(6.0, 6000, p.d()).unwrap());
        let mut ev = ClosedFormRun::new(spec, grid.clone(), 1.0, 10.0).unwrap();
        let idx = grid.cell_of(1.0);
        let rep = oscillation_scan(&mut ev, &p, idx, 5.0, &[0.4, 0.2, 0.1, 0.05]).unwrap();
        assert!(rep.exponent > 0.95, "{rep:?}");
        let flat = project(|_| 1.0, grid.clone(), 0.0).unwrap();
        let sol = Solver::new(p, SolverConfig::for_params(&p, OuterBoundary::ZeroFlux)).unwrap();
        let mut run = SolverRun::new(sol, flat, 1.0).unwrap();
        assert!(matches!(
            oscillation_scan(&mut run, &p, idx, 0.5, &[0.2, 0.1]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn solver_run_matches_direct_run() {
        let p = p334();
        let grid = Arc::new(build_grid(3.0, 60, p.d()).unwrap());
        let init = project(|r| (1.0 - r * r).max(0.0), grid, 0.0).unwrap();
        let sol = Solver::new(p, SolverConfig::for_params(&p, OuterBoundary::ZeroFlux)).unwrap();
        let mut run = SolverRun::new(sol.clone(), init.clone(), 2.0).unwrap();
        let got = run.states_at(&[1.0, 0.0, 0.5]).unwrap();
        let mut s = init.clone();
        let mut sol2 = sol;
        sol2.run_until(&mut s, 1.0, &Sampler::new(vec![0.5, 1.0], false)).unwrap();
        assert_eq!(got[0], s.values());
        assert_eq!(got[1], init.values());
        let _ = Quadrature::default();
    }
}
