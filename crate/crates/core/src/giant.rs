//! The friendly giant: separable solutions `t^{-1/(q-2)} V(r)` in a ball with
//! zero boundary values. `V` is the maximal fixed point of
//!
//! `TV(R) = ∫_R^1 (κ ∫_0^r V(y)(y/r)^{d-1} dy)^{1/(q-1)} dr`,
//! `κ = (q-1)/((p-1)(q-2))`.

use crate::error::{Error, Result};
use crate::params::EquationParams;

/// Smallest accepted node count.
pub const MIN_NODES: usize = 32;

/// Default node count.
pub const DEFAULT_NODES: usize = 1024;

/// Nodes `r_j = R x_j^β` with `x_j` uniform on `[0, 1]` and `β = q - 1`.
///
/// Near the origin `V(0) - V(r) ∝ r^{q/(q-1)}`, which becomes `x^q` in the
/// stretched variable, so the quadrature sees a smooth integrand.
#[derive(Debug, Clone, PartialEq)]
pub struct GiantGrid {
    outer: f64,
    beta: f64,
    dx: f64,
    x: Vec<f64>,
    r: Vec<f64>,
}

impl GiantGrid {
    pub fn new(params: &EquationParams, nodes: usize, outer: f64) -> Result<Self> {
        if nodes < MIN_NODES {
            return Err(Error::InvalidArgument(format!(
                "giant grid needs at least {MIN_NODES} nodes, got {nodes}"
            )));
        }
        if !(outer > 0.0) {
            return Err(Error::InvalidArgument("outer radius must be positive".into()));
        }
        let beta = params.q() - 1.0;
        let dx = 1.0 / (nodes - 1) as f64;
        let x: Vec<f64> = (0..nodes)
            .map(|j| if j + 1 == nodes { 1.0 } else { j as f64 * dx })
            .collect();
        let r = x.iter().map(|&x| outer * x.powf(beta)).collect();
        Ok(Self {
            outer,
            beta,
            dx,
            x,
            r,
        })
    }

    pub fn nodes(&self) -> usize {
        self.x.len()
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    /// Node spacing in the stretched variable.
    pub fn h_node(&self) -> f64 {
        self.dx
    }

    /// `dr/dx`.
    fn jacobian(&self, j: usize) -> f64 {
        self.outer * self.beta * self.x[j].powf(self.beta - 1.0)
    }

    fn scaled(&self, outer: f64) -> Self {
        Self {
            outer,
            r: self.r.iter().map(|r| r * outer / self.outer).collect(),
            ..self.clone()
        }
    }
}

/// Fourth-order cumulative integral `∫_{x_0}^{x_j} f dx` on a uniform grid.
fn cumulative(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    let c = dx / 24.0;
    for j in 0..n - 1 {
        let seg = if j == 0 {
            c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if j == n - 2 {
            c * (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1])
        } else {
            c * (-f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2])
        };
        out[j + 1] = out[j] + seg;
    }
    out
}

/// `κ = (q-1)/((p-1)(q-2))`.
fn kappa(params: &EquationParams) -> f64 {
    (params.q() - 1.0) / ((params.p() - 1.0) * (params.q() - 2.0))
}

fn require_slow(params: &EquationParams) -> Result<()> {
    if params.q() <= 2.0 {
        return Err(Error::Precondition(
            "friendly giant requires q > 2".into(),
        ));
    }
    Ok(())
}

/// Eight-point Gauss-Legendre nodes and weights on `[-1, 1]`.
const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// `∫_0^{r_j} V(y) y^{d-1} dy` at every node.
///
/// In the stretched variable the weight is `R^d β x^{βd-1}`. It is integrated
/// exactly against the local cubic interpolant of `V` by Gauss-Legendre, which
/// keeps the relative accuracy near the origin where the weight is tiny.
fn moments(params: &EquationParams, grid: &GiantGrid, v: &[f64]) -> Vec<f64> {
    let n = grid.nodes();
    let d = params.d();
    let expo = grid.beta * d - 1.0;
    let scale = grid.outer.powf(d) * grid.beta;
    let mut out = vec![0.0; n];
    for j in 0..n - 1 {
        let s0 = j.saturating_sub(1).min(n - 4);
        let xs = &grid.x[s0..s0 + 4];
        let vs = &v[s0..s0 + 4];
        let (a, b) = (grid.x[j], grid.x[j + 1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut seg = 0.0;
        for &(node, weight) in &GAUSS8 {
            let x = mid + half * node;
            let mut interp = 0.0;
            for k in 0..4 {
                let mut basis = 1.0;
                for m in 0..4 {
                    if m != k {
                        basis *= (x - xs[m]) / (xs[k] - xs[m]);
                    }
                }
                interp += basis * vs[k];
            }
            seg += weight * interp * x.powf(expo);
        }
        out[j + 1] = out[j] + half * scale * seg;
    }
    out
}

/// `-V'(r)` implied by the profile: `(κ r^{1-d} ∫_0^r V y^{d-1} dy)^{1/(q-1)}`.
fn gradient_magnitude(params: &EquationParams, grid: &GiantGrid, v: &[f64]) -> Vec<f64> {
    let d = params.d();
    let kap = kappa(params);
    let inv = 1.0 / (params.q() - 1.0);
    let moments = moments(params, grid, v);
    (0..grid.nodes())
        .map(|j| {
            let r = grid.r[j];
            if r == 0.0 {
                0.0
            } else {
                (kap * (moments[j] * r.powf(1.0 - d)).max(0.0)).powf(inv)
            }
        })
        .collect()
}

/// One application of `T`. `(TV)(R) = 0` at the outer node exactly.
pub fn apply_t(params: &EquationParams, grid: &GiantGrid, v: &[f64]) -> Result<Vec<f64>> {
    require_slow(params)?;
    if v.len() != grid.nodes() {
        return Err(Error::InvalidArgument("profile length does not match grid".into()));
    }
    if v.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidArgument("profile must be nonnegative".into()));
    }
    let g = gradient_magnitude(params, grid, v);
    let integrand: Vec<f64> = (0..grid.nodes()).map(|j| g[j] * grid.jacobian(j)).collect();
    let cum = cumulative(&integrand, grid.dx);
    let total = cum[grid.nodes() - 1];
    let mut out: Vec<f64> = cum.iter().map(|c| (total - c).max(0.0)).collect();
    *out.last_mut().unwrap() = 0.0;
    Ok(out)
}

/// Upper starting level: the smallest admissible `M` with
/// `M^{q-2} ≥ (q-1)/(d(q-2)(p-1))`, raised to at least 1.
pub fn upper_bound(params: &EquationParams) -> Result<f64> {
    require_slow(params)?;
    let need = (kappa(params) / params.d()).powf(1.0 / (params.q() - 2.0));
    Ok(need.max(1.0))
}

/// Lower estimate `m = I^{(q-1)/(q-2)}`, with
/// `I = ∫_{1/2}^1 (r (q-1)/(d(q-2)(p-1)))^{1/(q-1)} dr` evaluated by Simpson.
pub fn lower_bound(params: &EquationParams) -> Result<f64> {
    require_slow(params)?;
    let c = kappa(params) / params.d();
    let inv = 1.0 / (params.q() - 1.0);
    let integral = crate::numerics::simpson(|r| (r * c).powf(inv), 0.5, 1.0, 512);
    Ok(integral.powf((params.q() - 1.0) / (params.q() - 2.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GiantReport {
    pub iterations: usize,
    /// `sup|V^{k+1} - V^k|` at the last iteration.
    pub final_change: f64,
    /// `sup|TV - V|` for the returned profile.
    pub integral_residual: f64,
    pub ode_residual: f64,
    /// Iterations in which some node increased by more than rounding.
    pub monotone_violations: usize,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GiantProfile {
    params: EquationParams,
    grid: GiantGrid,
    values: Vec<f64>,
    report: GiantReport,
}

impl GiantProfile {
    pub fn params(&self) -> &EquationParams {
        &self.params
    }

    pub fn grid(&self) -> &GiantGrid {
        &self.grid
    }

    pub fn radii(&self) -> &[f64] {
        &self.grid.r
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn report(&self) -> &GiantReport {
        &self.report
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, &v| m.max(v))
    }

    /// Linear interpolation of `V` between nodes.
    pub fn eval(&self, r: f64) -> f64 {
        crate::numerics::interp_linear(&self.grid.r, &self.values, r)
    }

    /// One-sided difference quotient at the first node.
    pub fn slope_at_origin(&self) -> f64 {
        (self.values[1] - self.values[0]) / (self.grid.r[1] - self.grid.r[0])
    }
}

/// Monotone iteration `V^{k+1} = T V^k` from the constant [`upper_bound`].
pub fn fixed_point(
    params: &EquationParams,
    nodes: usize,
    tol: f64,
    max_iter: usize,
) -> Result<GiantProfile> {
    require_slow(params)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let grid = GiantGrid::new(params, nodes, 1.0)?;
    let upper = upper_bound(params)?;
    let lower = lower_bound(params)?;
    let mut v = vec![upper; grid.nodes()];
    let mut violations = 0;
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        let next = apply_t(params, &grid, &v)?;
        iterations += 1;
        let slack = 1e-14 * upper;
        if next.iter().zip(&v).any(|(a, b)| *a > b + slack) {
            violations += 1;
        }
        change = next
            .iter()
            .zip(&v)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        v = next;
        if change < tol {
            break;
        }
    }
    if change >= tol {
        return Err(Error::NonConvergence(format!(
            "fixed point iteration stalled at change {change:e} after {iterations} iterations"
        )));
    }
    let sup = v.iter().fold(0.0_f64, |m, &x| m.max(x));
    if sup < 0.5 * lower {
        return Err(Error::NonConvergence(format!(
            "iteration collapsed towards the zero profile (sup {sup:e} < m/2 = {:e})",
            0.5 * lower
        )));
    }
    let tv = apply_t(params, &grid, &v)?;
    let integral_residual = tv
        .iter()
        .zip(&v)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let mut profile = GiantProfile {
        params: *params,
        grid,
        values: v,
        report: GiantReport {
            iterations,
            final_change: change,
            integral_residual,
            ode_residual: 0.0,
            monotone_violations: violations,
            upper_bound: upper,
            lower_bound: lower,
            tol,
        },
    };
    profile.report.ode_residual = ode_residual(&profile);
    Ok(profile)
}

/// Five-point fourth-order derivative in the stretched variable.
fn derivative_x(f: &[f64], j: usize, dx: f64) -> f64 {
    let n = f.len();
    let c = 1.0 / (12.0 * dx);
    if j == 0 {
        c * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4])
    } else if j == 1 {
        c * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4])
    } else if j == n - 2 {
        c * (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5])
    } else if j == n - 1 {
        c * (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5])
    } else {
        c * (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2])
    }
}

/// `max_j |V'(r_j) + (κ ∫_0^{r_j} V(y)(y/r_j)^{d-1} dy)^{1/(q-1)}|` over the
/// interior nodes.
pub fn ode_residual(profile: &GiantProfile) -> f64 {
    let grid = &profile.grid;
    let v = &profile.values;
    let g = gradient_magnitude(&profile.params, grid, v);
    (1..grid.nodes() - 1)
        .map(|j| {
            let dv = derivative_x(v, j, grid.dx) / grid.jacobian(j);
            (dv + g[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// `V_R(r) = R^{q/(q-2)} V(r/R)` on `[0, R]`.
pub fn rescale(profile: &GiantProfile, outer: f64) -> Result<GiantProfile> {
    if !(outer > 0.0) {
        return Err(Error::InvalidArgument("target radius must be positive".into()));
    }
    let q = profile.params.q();
    let factor = (outer / profile.grid.outer).powf(q / (q - 2.0));
    let mut out = GiantProfile {
        params: profile.params,
        grid: profile.grid.scaled(outer),
        values: profile.values.iter().map(|v| v * factor).collect(),
        report: profile.report.clone(),
    };
    out.report.ode_residual = ode_residual(&out);
    Ok(out)
}

/// `t^{-1/(q-2)} V(r)`.
pub fn separable_eval(profile: &GiantProfile, r: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument("time must be positive".into()));
    }
    if !(0.0..=profile.grid.outer).contains(&r) {
        return Err(Error::InvalidArgument(format!(
            "radius {r} outside [0, {}]",
            profile.grid.outer
        )));
    }
    Ok(t.powf(-1.0 / (profile.params.q() - 2.0)) * profile.eval(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p334() -> EquationParams {
        EquationParams::new(3, 3.0, 4.0).unwrap()
    }

    #[test]
    fn zero_is_fixed() {
        let p = p334();
        let g = GiantGrid::new(&p, 64, 1.0).unwrap();
        assert!(apply_t(&p, &g, &vec![0.0; 64]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_input_closed_form() {
        let p = p334();
        let m = 0.7;
        let kap: f64 = 0.75;
        let d = 4.0;
        for nodes in [64usize, 128] {
            let g = GiantGrid::new(&p, nodes, 1.0).unwrap();
            let tv = apply_t(&p, &g, &vec![m; nodes]).unwrap();
            let err = g
                .radii()
                .iter()
                .zip(&tv)
                .map(|(&r, v)| {
                    let exact = (kap * m / d).powf(1.0 / 3.0) * 0.75 * (1.0 - r.powf(4.0 / 3.0));
                    (exact - v).abs()
                })
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "{nodes}: {err}");
            assert_eq!(*tv.last().unwrap(), 0.0);
        }
    }

    #[test]
    fn bounds_for_reference_exponents() {
        let p = p334();
        assert_eq!(upper_bound(&p).unwrap(), 1.0);
        // Closed form of the lower-estimate integral.
        let c: f64 = 3.0 / 16.0;
        let i = c.powf(1.0 / 3.0) * 0.75 * (1.0 - 0.5f64.powf(4.0 / 3.0));
        assert!((lower_bound(&p).unwrap() - i.powf(1.5)).abs() < 1e-12);
        // A large upper level is needed when κ/d is big.
        let p2 = EquationParams::new(2, 1.1, 2.2).unwrap();
        let m = upper_bound(&p2).unwrap();
        let kap = 1.2 / (0.1 * 0.2);
        assert!((m.powf(0.2) - kap / p2.d()).abs() < 1e-9 * m);
    }

    #[test]
    fn reference_profile() {
        let p = p334();
        let prof = fixed_point(&p, DEFAULT_NODES, 1e-10, 500).unwrap();
        let rep = prof.report();
        assert!(rep.integral_residual < 1e-8, "{rep:?}");
        assert!(rep.ode_residual < 1e-6, "{rep:?}");
        assert_eq!(rep.monotone_violations, 0);
        assert_eq!(*prof.values().last().unwrap(), 0.0);
        assert!(prof.slope_at_origin().abs() <= 10.0 * prof.grid().h_node());
        assert!(prof.sup() >= rep.lower_bound && prof.sup() <= rep.upper_bound);
        assert!(prof.values().windows(2).all(|w| w[1] <= w[0]));
        let again = apply_t(&p, prof.grid(), prof.values()).unwrap();
        let change = again.iter().zip(prof.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(change < 1e-9);
    }

    #[test]
    fn ode_residual_converges() {
        let p = p334();
        let a = fixed_point(&p, 64, 1e-13, 500).unwrap().report().ode_residual;
        let b = fixed_point(&p, 128, 1e-13, 500).unwrap().report().ode_residual;
        assert!(a / b > 4.0, "{a} {b}");
    }

    #[test]
    fn rescaling() {
        let p = p334();
        let prof = fixed_point(&p, 512, 1e-11, 500).unwrap();
        let same = rescale(&prof, 1.0).unwrap();
        assert_eq!(same.values(), prof.values());
        let big = rescale(&prof, 2.0).unwrap();
        assert!((big.values()[0] / prof.values()[0] - 4.0).abs() < 1e-14);
        assert!(big.report().ode_residual < 1e-5);
        assert!((big.radii().last().unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn separable_values() {
        let p = p334();
        let prof = fixed_point(&p, 256, 1e-10, 500).unwrap();
        assert_eq!(separable_eval(&prof, 0.3, 1.0).unwrap(), prof.eval(0.3));
        assert_eq!(separable_eval(&prof, 1.0, 2.0).unwrap(), 0.0);
        let a = separable_eval(&prof, 0.4, 1.0).unwrap();
        let b = separable_eval(&prof, 0.4, 4.0).unwrap();
        assert!((b - 0.5 * a).abs() < 1e-15);
        assert!(separable_eval(&prof, 0.4, 0.0).is_err());
    }

    #[test]
    fn rejects_fast_and_negative() {
        let fast = EquationParams::new(3, 3.0, 1.5).unwrap();
        assert!(fixed_point(&fast, 256, 1e-8, 10).is_err());
        let p = p334();
        let g = GiantGrid::new(&p, 64, 1.0).unwrap();
        let mut v = vec![0.1; 64];
        v[3] = -1.0;
        assert!(apply_t(&p, &g, &v).is_err());
        assert!(GiantGrid::new(&p, 8, 1.0).is_err());
    }
}
