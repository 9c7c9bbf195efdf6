//! Conservative explicit finite-volume solver for
//! `u_t = ((p-1)/(q-1)) r^{1-d} (|u_r|^{q-2} u_r r^{d-1})_r` on `[0, R]`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::params::EquationParams;

/// Support detection threshold relative to the current sup norm.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Default fast-regime regularization.
pub const DEFAULT_DELTA: f64 = 1e-8;

/// Uniform cell-centred grid on `[0, R]` with weights `∫ r^{d-1} dr`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    outer: f64,
    h: f64,
    d: f64,
    faces: Vec<f64>,
    mids: Vec<f64>,
    weights: Vec<f64>,
    inv_weights: Vec<f64>,
    face_area: Vec<f64>,
}

impl Grid {
    pub fn new(outer: f64, cells: usize, d: f64) -> Result<Self> {
        if !(outer > 0.0) || !outer.is_finite() {
            return Err(Error::InvalidArgument("outer radius must be positive".into()));
        }
        if cells < 2 {
            return Err(Error::InvalidArgument("grid needs at least two cells".into()));
        }
        if !(d >= 1.0) || !d.is_finite() {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        let h = outer / cells as f64;
        let faces: Vec<f64> = (0..=cells)
            .map(|i| if i == cells { outer } else { h * i as f64 })
            .collect();
        let mids = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let weights: Vec<f64> = faces
            .windows(2)
            .map(|w| (w[1].powf(d) - w[0].powf(d)) / d)
            .collect();
        let inv_weights = weights.iter().map(|w| 1.0 / w).collect();
        let face_area = faces.iter().map(|&r| r.powf(d - 1.0)).collect();
        Ok(Self {
            outer,
            h,
            d,
            faces,
            mids,
            weights,
            inv_weights,
            face_area,
        })
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    pub fn cells(&self) -> usize {
        self.mids.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.mids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the cell containing `r` (clamped to the grid).
    pub fn cell_of(&self, r: f64) -> usize {
        ((r / self.h).floor().max(0.0) as usize).min(self.cells() - 1)
    }
}

/// Builds a [`Grid`].
pub fn build_grid(outer: f64, cells: usize, d: f64) -> Result<Grid> {
    Grid::new(outer, cells, d)
}

/// Cell averages on a grid at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    grid: Arc<Grid>,
    u: Vec<f64>,
    t: f64,
}

impl RadialState {
    pub fn new(grid: Arc<Grid>, u: Vec<f64>, t: f64) -> Result<Self> {
        if u.len() != grid.cells() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.cells(),
                u.len()
            )));
        }
        if let Some(cell) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { cell, t });
        }
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument("time must be nonnegative".into()));
        }
        Ok(Self { grid, u, t })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.u
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn set_t(&mut self, t: f64) {
        self.t = t;
    }

    pub fn sup(&self) -> f64 {
        self.u.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn d_mass(&self) -> f64 {
        d_mass(self)
    }

    /// Outer face of the last cell above [`SUPPORT_THRESHOLD`]·sup.
    pub fn support_radius(&self) -> f64 {
        let sup = self.sup();
        if sup == 0.0 {
            return 0.0;
        }
        let cut = SUPPORT_THRESHOLD * sup;
        match self.u.iter().rposition(|v| v.abs() > cut) {
            Some(i) => self.grid.faces[i + 1],
            None => 0.0,
        }
    }

    /// `(Σ u_i² w_i)^{1/2}`.
    pub fn l2_weighted(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.grid.weights)
            .map(|(u, w)| u * u * w)
            .sum::<f64>()
            .sqrt()
    }

    /// Linear interpolation through the cell midpoints; zero-slope
    /// extension at the origin and at the outer radius.
    pub fn interpolate(&self, r: f64) -> f64 {
        crate::numerics::interp_linear(&self.grid.mids, &self.u, r)
    }
}

/// `Σ u_i w_i`.
pub fn d_mass(state: &RadialState) -> f64 {
    state
        .u
        .iter()
        .zip(&state.grid.weights)
        .map(|(u, w)| u * w)
        .sum()
}

/// Samples `profile` at the cell midpoints.
pub fn project<F: Fn(f64) -> f64>(profile: F, grid: Arc<Grid>, t: f64) -> Result<RadialState> {
    let u = grid.mids.iter().map(|&r| profile(r)).collect();
    RadialState::new(grid, u, t)
}

/// `max_i |u_i - reference(r_i)|` over the cell midpoints.
pub fn sup_distance<F: Fn(f64) -> f64>(state: &RadialState, reference: F) -> f64 {
    state
        .u
        .iter()
        .zip(&state.grid.mids)
        .fold(0.0_f64, |m, (u, &r)| m.max((u - reference(r)).abs()))
}

/// Outer boundary condition at `r = R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OuterBoundary {
    DirichletZero,
    ZeroFlux,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub cfl_safety: f64,
    pub outer_bc: OuterBoundary,
    /// `δ` in `Φ_δ(s) = (s² + δ²)^{(q-2)/2} s`.
    pub regularization: f64,
    pub max_dt: f64,
    pub nan_guard: bool,
}

impl SolverConfig {
    /// Defaults for the given exponents: `δ = 1e-8` when `q < 2`, else 0.
    pub fn for_params(params: &EquationParams, outer_bc: OuterBoundary) -> Self {
        Self {
            cfl_safety: 0.4,
            outer_bc,
            regularization: if params.q() < 2.0 { DEFAULT_DELTA } else { 0.0 },
            max_dt: f64::INFINITY,
            nan_guard: true,
        }
    }

    pub fn validate(&self, params: &EquationParams) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidArgument("cfl_safety must lie in (0, 1]".into()));
        }
        if !(self.regularization >= 0.0) || !self.regularization.is_finite() {
            return Err(Error::InvalidArgument("regularization must be finite and nonnegative".into()));
        }
        if params.q() < 2.0 && self.regularization == 0.0 {
            return Err(Error::InvalidArgument(
                "regularization must be positive when q < 2".into(),
            ));
        }
        if !(self.max_dt > 0.0) {
            return Err(Error::InvalidArgument("max_dt must be positive".into()));
        }
        Ok(())
    }
}

/// `r_face^{d-1} Φ_δ((u_right - u_left)/h)`.
pub fn flux(
    face_radius: f64,
    u_left: f64,
    u_right: f64,
    h: f64,
    params: &EquationParams,
    delta: f64,
) -> f64 {
    let s = (u_right - u_left) / h;
    let e = 0.5 * (params.q() - 2.0);
    face_radius.powf(params.d() - 1.0) * (s * s + delta * delta).powf(e) * s
}

/// `(x)^{e}` with cheap paths for integer and half-integer exponents.
#[derive(Debug, Clone, Copy)]
enum Power {
    Zero,
    Int(i32),
    Half(i32),
    Real(f64),
}

impl Power {
    fn new(e: f64) -> Self {
        if e == 0.0 {
            Power::Zero
        } else if e.fract() == 0.0 && e.abs() < 64.0 {
            Power::Int(e as i32)
        } else if (2.0 * e).fract() == 0.0 && e.abs() < 64.0 {
            Power::Half((2.0 * e) as i32)
        } else {
            Power::Real(e)
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Power::Zero => 1.0,
            Power::Int(1) => x,
            Power::Int(k) => x.powi(k),
            Power::Half(k) => x.sqrt().powi(k),
            Power::Real(e) => x.powf(e),
        }
    }
}

/// Options for [`Solver::run_until`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sampler {
    /// Strictly increasing sample times after the start time.
    pub times: Vec<f64>,
    /// Keep a copy of the profile at every sample.
    pub snapshots: bool,
}

impl Sampler {
    pub fn new(times: Vec<f64>, snapshots: bool) -> Self {
        Self { times, snapshots }
    }

    /// `count` times spaced geometrically between `t0` and `t1`.
    pub fn geometric(t0: f64, t1: f64, count: usize, snapshots: bool) -> Self {
        let times = (0..count)
            .map(|i| {
                if i + 1 == count {
                    t1
                } else {
                    t0 * (t1 / t0).powf(i as f64 / (count - 1).max(1) as f64)
                }
            })
            .collect();
        Self { times, snapshots }
    }
}

/// Diagnostics sampled along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: EquationParams,
    pub grid: Arc<Grid>,
    pub config: SolverConfig,
    pub start_time: f64,
    pub times: Vec<f64>,
    pub sup: Vec<f64>,
    pub d_mass: Vec<f64>,
    pub support: Vec<f64>,
    pub l2w: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub steps: u64,
}

impl Trajectory {
    fn new(params: EquationParams, config: SolverConfig, state: &RadialState) -> Self {
        Self {
            params,
            grid: state.grid.clone(),
            config,
            start_time: state.t,
            times: Vec::new(),
            sup: Vec::new(),
            d_mass: Vec::new(),
            support: Vec::new(),
            l2w: Vec::new(),
            snapshots: Vec::new(),
            steps: 0,
        }
    }

    fn record(&mut self, state: &RadialState, snapshot: bool) {
        self.times.push(state.t);
        self.sup.push(state.sup());
        self.d_mass.push(state.d_mass());
        self.support.push(state.support_radius());
        self.l2w.push(state.l2_weighted());
        if snapshot {
            self.snapshots.push(state.u.clone());
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Snapshot at sample `k` as a state.
    pub fn state_at(&self, k: usize) -> Option<RadialState> {
        self.snapshots.get(k).map(|u| RadialState {
            grid: self.grid.clone(),
            u: u.clone(),
            t: self.times[k],
        })
    }
}

/// Explicit time stepper bound to one set of exponents and settings.
#[derive(Debug, Clone)]
pub struct Solver {
    params: EquationParams,
    config: SolverConfig,
    k: f64,
    power: Power,
    /// `max(1, q-1)`, bounding `Φ'_δ(s)/(s² + δ²)^{(q-2)/2}`.
    dphi_factor: f64,
    delta2: f64,
    fluxes: Vec<f64>,
    bounds: Vec<f64>,
    other_fluxes: Vec<f64>,
}

impl Solver {
    pub fn new(params: EquationParams, config: SolverConfig) -> Result<Self> {
        config.validate(&params)?;
        Ok(Self {
            params,
            k: params.diffusion_factor(),
            power: Power::new(0.5 * (params.q() - 2.0)),
            dphi_factor: (params.q() - 1.0).max(1.0),
            delta2: config.regularization * config.regularization,
            config,
            fluxes: Vec::new(),
            bounds: Vec::new(),
            other_fluxes: Vec::new(),
        })
    }

    pub fn params(&self) -> &EquationParams {
        &self.params
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if (grid.d - self.params.d()).abs() > 1e-12 * grid.d {
            return Err(Error::InvalidArgument(format!(
                "grid dimension {} does not match d = {}",
                grid.d,
                self.params.d()
            )));
        }
        Ok(())
    }

    /// Face slopes, scaled fluxes `K r^{d-1} Φ_δ(s)` into `fluxes` and the
    /// local `K r^{d-1} max(1,q-1)(s²+δ²)^{(q-2)/2}/h_f` into `bounds`.
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        state: &RadialState,
        bc: OuterBoundary,
        k: f64,
        power: Power,
        dphi_factor: f64,
        delta2: f64,
        fluxes: &mut Vec<f64>,
        bounds: &mut Vec<f64>,
    ) {
        let n = state.grid.cells();
        fluxes.resize(n + 1, 0.0);
        bounds.resize(n + 1, 0.0);
        fluxes[0] = 0.0;
        bounds[0] = 0.0;
        fluxes[n] = 0.0;
        bounds[n] = 0.0;
        match power {
            Power::Zero => Self::faces_with(state, k, dphi_factor, delta2, fluxes, bounds, |_| 1.0),
            Power::Int(1) => Self::faces_with(state, k, dphi_factor, delta2, fluxes, bounds, |x| x),
            Power::Half(1) => Self::faces_with(state, k, dphi_factor, delta2, fluxes, bounds, f64::sqrt),
            Power::Half(-1) => {
                Self::faces_with(state, k, dphi_factor, delta2, fluxes, bounds, |x| 1.0 / x.sqrt())
            }
            p => Self::faces_with(state, k, dphi_factor, delta2, fluxes, bounds, |x| p.apply(x)),
        }
        if bc == OuterBoundary::DirichletZero {
            let g = &*state.grid;
            let half = 0.5 * g.h;
            let s = -state.u[n - 1] / half;
            let a = power.apply(s * s + delta2);
            let area = k * g.face_area[n];
            fluxes[n] = area * a * s;
            bounds[n] = area * dphi_factor * a / half;
        }
    }

    #[inline(always)]
    fn faces_with<P: Fn(f64) -> f64>(
        state: &RadialState,
        k: f64,
        dphi_factor: f64,
        delta2: f64,
        fluxes: &mut [f64],
        bounds: &mut [f64],
        pw: P,
    ) {
        let g = &*state.grid;
        let n = g.cells();
        let inv_h = 1.0 / g.h;
        let inner = fluxes[1..n]
            .iter_mut()
            .zip(&mut bounds[1..n])
            .zip(&g.face_area[1..n])
            .zip(state.u.windows(2));
        for (((flux, bound), &area), u) in inner {
            let s = (u[1] - u[0]) * inv_h;
            let a = k * area * pw(s * s + delta2);
            *flux = a * s;
            *bound = dphi_factor * a * inv_h;
        }
    }

    fn stable_dt(grid: &Grid, bounds: &[f64], cfl: f64) -> f64 {
        let rate = bounds
            .windows(2)
            .zip(&grid.inv_weights)
            .fold(0.0_f64, |m, (b, iw)| m.max((b[0] + b[1]) * iw));
        if rate > 0.0 {
            cfl / rate
        } else {
            f64::INFINITY
        }
    }

    fn apply(state: &mut RadialState, fluxes: &[f64], dt: f64) {
        let iw = &state.grid.inv_weights;
        for ((u, f), iw) in state.u.iter_mut().zip(fluxes.windows(2)).zip(iw) {
            *u += dt * (f[1] - f[0]) * iw;
        }
    }

    fn guard(&self, state: &RadialState) -> Result<()> {
        if self.config.nan_guard && !state.u.iter().sum::<f64>().is_finite() {
            if let Some(cell) = state.u.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { cell, t: state.t });
            }
        }
        Ok(())
    }

    fn choose_dt(&self, t: f64, dt_cfl: f64, limit: f64) -> Result<(f64, bool)> {
        let dt = dt_cfl.min(self.config.max_dt);
        if dt < 1e-15 * t.max(1.0) {
            return Err(Error::TimeStepUnderflow { dt, t });
        }
        let remaining = limit - t;
        if dt >= remaining {
            Ok((remaining, true))
        } else {
            Ok((dt, false))
        }
    }

    /// One explicit step, never passing `limit`. Returns the step taken.
    pub fn step(&mut self, state: &mut RadialState, limit: f64) -> Result<f64> {
        self.check_grid(&state.grid)?;
        let mut fluxes = std::mem::take(&mut self.fluxes);
        let mut bounds = std::mem::take(&mut self.bounds);
        Self::assemble(
            state,
            self.config.outer_bc,
            self.k,
            self.power,
            self.dphi_factor,
            self.delta2,
            &mut fluxes,
            &mut bounds,
        );
        let dt_cfl = Self::stable_dt(&state.grid, &bounds, self.config.cfl_safety);
        let result = self.choose_dt(state.t, dt_cfl, limit).map(|(dt, lands)| {
            Self::apply(state, &fluxes, dt);
            state.t = if lands { limit } else { state.t + dt };
            dt
        });
        self.fluxes = fluxes;
        self.bounds = bounds;
        let dt = result?;
        self.guard(state)?;
        Ok(dt)
    }

    fn check_times(start: f64, t_end: f64, sampler: &Sampler) -> Result<()> {
        if !(t_end > start) {
            return Err(Error::InvalidArgument(format!(
                "end time {t_end} must exceed the start time {start}"
            )));
        }
        let mut prev = start;
        for &s in &sampler.times {
            if !(s > prev) || s > t_end {
                return Err(Error::InvalidArgument(
                    "sample times must increase strictly within (start, end]".into(),
                ));
            }
            prev = s;
        }
        Ok(())
    }

    /// Advances `state` to `t_end`, recording diagnostics at every sample time.
    pub fn run_until(
        &mut self,
        state: &mut RadialState,
        t_end: f64,
        sampler: &Sampler,
    ) -> Result<Trajectory> {
        Self::check_times(state.t, t_end, sampler)?;
        let mut traj = Trajectory::new(self.params, self.config, state);
        let mut targets = sampler.times.iter().copied().peekable();
        while state.t < t_end {
            let limit = targets.peek().copied().unwrap_or(t_end);
            self.step(state, limit)?;
            traj.steps += 1;
            if state.t == limit && targets.peek().is_some() {
                traj.record(state, sampler.snapshots);
                targets.next();
            }
        }
        Ok(traj)
    }

    /// Advances two states on the same grid with a common step size whose
    /// bound covers every slope between the two states, so the update is
    /// order preserving for the pair.
    pub fn run_pair_until(
        &mut self,
        a: &mut RadialState,
        b: &mut RadialState,
        t_end: f64,
        sampler: &Sampler,
    ) -> Result<(Trajectory, Trajectory)> {
        if a.grid != b.grid || a.t != b.t {
            return Err(Error::InvalidArgument(
                "paired states need the same grid and time".into(),
            ));
        }
        self.check_grid(&a.grid)?;
        Self::check_times(a.t, t_end, sampler)?;
        let mut ta = Trajectory::new(self.params, self.config, a);
        let mut tb = Trajectory::new(self.params, self.config, b);
        let mut targets = sampler.times.iter().copied().peekable();
        let mut fa = Vec::new();
        let mut ba = Vec::new();
        let mut fb = std::mem::take(&mut self.other_fluxes);
        let mut bb = Vec::new();
        let fast = self.params.q() < 2.0;
        while a.t < t_end {
            let limit = targets.peek().copied().unwrap_or(t_end);
            let bc = self.config.outer_bc;
            Self::assemble(a, bc, self.k, self.power, self.dphi_factor, self.delta2, &mut fa, &mut ba);
            Self::assemble(b, bc, self.k, self.power, self.dphi_factor, self.delta2, &mut fb, &mut bb);
            for f in 0..ba.len() {
                ba[f] = ba[f].max(bb[f]);
            }
            if fast {
                // Φ'_δ peaks at zero slope when q < 2: if the two slopes have
                // opposite signs, the mean-value slope may be zero.
                self.straddle_bounds(a, &fa, &fb, &mut ba);
            }
            let dt_cfl = Self::stable_dt(&a.grid, &ba, self.config.cfl_safety);
            let (dt, lands) = self.choose_dt(a.t, dt_cfl, limit)?;
            Self::apply(a, &fa, dt);
            Self::apply(b, &fb, dt);
            let t_new = if lands { limit } else { a.t + dt };
            a.t = t_new;
            b.t = t_new;
            self.guard(a)?;
            self.guard(b)?;
            ta.steps += 1;
            tb.steps += 1;
            if lands && targets.peek().is_some() {
                ta.record(a, sampler.snapshots);
                tb.record(b, sampler.snapshots);
                targets.next();
            }
        }
        self.other_fluxes = fb;
        Ok((ta, tb))
    }

    fn straddle_bounds(
        &self,
        a: &RadialState,
        fa: &[f64],
        fb: &[f64],
        bounds: &mut [f64],
    ) {
        let g = &*a.grid;
        let n = g.cells();
        let peak = self.power.apply(self.delta2) * self.dphi_factor;
        for f in 1..=n {
            if fa[f] * fb[f] < 0.0 || (fa[f] == 0.0) != (fb[f] == 0.0) {
                let h_f = if f == n { 0.5 * g.h } else { g.h };
                bounds[f] = bounds[f].max(self.k * g.face_area[f] * peak / h_f);
            }
        }
    }
}
