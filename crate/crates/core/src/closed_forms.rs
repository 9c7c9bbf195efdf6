//! Explicit solutions: Barenblatt-type profiles in all three regimes and the
//! one-dimensional traveling wave.

use crate::error::{Error, Result};
use crate::numerics::{bisect, Quadrature};
use crate::params::{EquationParams, Regime};

/// A Barenblatt-type solution `B(r, t; C)` shifted by a time delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarenblattSpec {
    params: EquationParams,
    c: f64,
    t_delay: f64,
    r_center: f64,
    regime: Regime,
    d: f64,
    lambda: f64,
    time_factor: f64,
    /// `|q-2|/q · λ^{1/(1-q)}`, the coefficient of the radial term.
    coef: f64,
}

impl BarenblattSpec {
    pub fn new(params: EquationParams, c: f64, t_delay: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument("C must be positive".into()));
        }
        if !(t_delay >= 0.0) || !t_delay.is_finite() {
            return Err(Error::InvalidArgument("time delay must be nonnegative".into()));
        }
        let regime = params.regime();
        if regime == Regime::Fast && !params.range_condition() {
            return Err(Error::Precondition(
                "fast Barenblatt solution requires the range condition".into(),
            ));
        }
        let q = params.q();
        let e = params.derive();
        Ok(Self {
            params,
            c,
            t_delay,
            r_center: 0.0,
            regime,
            d: e.d,
            lambda: e.lambda,
            time_factor: params.diffusion_factor(),
            coef: (q - 2.0).abs() / q * e.lambda.powf(1.0 / (1.0 - q)),
        })
    }

    pub fn with_center(mut self, r_center: f64) -> Self {
        self.r_center = r_center;
        self
    }

    pub fn with_c(&self, c: f64) -> Result<Self> {
        Self::new(self.params, c, self.t_delay).map(|s| s.with_center(self.r_center))
    }

    pub fn with_delay(&self, t_delay: f64) -> Result<Self> {
        Self::new(self.params, self.c, t_delay).map(|s| s.with_center(self.r_center))
    }

    pub fn params(&self) -> &EquationParams {
        &self.params
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn t_delay(&self) -> f64 {
        self.t_delay
    }

    pub fn r_center(&self) -> f64 {
        self.r_center
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    fn shifted_time(&self, t: f64) -> Result<f64> {
        let tt = t + self.t_delay;
        if !(tt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "t + t_delay must be positive, got {tt}"
            )));
        }
        Ok(tt)
    }

    /// `B(r, t)`.
    pub fn eval(&self, r: f64, t: f64) -> Result<f64> {
        let tt = self.shifted_time(t)?;
        Ok(self.eval_shifted(r, tt))
    }

    /// Evaluation at shifted time `t̃ = t + t_delay > 0`.
    fn eval_shifted(&self, r: f64, tt: f64) -> f64 {
        let r = (r - self.r_center).abs();
        let q = self.params.q();
        match self.regime {
            Regime::Linear => {
                let pm1 = self.params.p() - 1.0;
                self.c * tt.powf(-self.d / 2.0) * (-r * r / (4.0 * pm1 * tt)).exp()
            }
            Regime::Slow | Regime::Fast => {
                let s = self.time_factor * tt;
                let xi = r * s.powf(-1.0 / self.lambda);
                let radial = self.coef * xi.powf(q / (q - 1.0));
                let amp = s.powf(-self.d / self.lambda);
                if self.regime == Regime::Slow {
                    let inner = self.c - radial;
                    if inner <= 0.0 {
                        0.0
                    } else {
                        amp * inner.powf((q - 1.0) / (q - 2.0))
                    }
                } else {
                    amp * (self.c + radial).powf(-(q - 1.0) / (2.0 - q))
                }
            }
        }
    }

    /// Snapshot closure at time `t`.
    pub fn profile_at(&self, t: f64) -> Result<impl Fn(f64) -> f64 + '_> {
        let tt = self.shifted_time(t)?;
        Ok(move |r| self.eval_shifted(r, tt))
    }

    /// Radius where the bracket `C - coef·ξ^{q/(q-1)}` vanishes. For the
    /// fast branch the same formula gives the crossover radius of the tail.
    fn edge_radius(&self, tt: f64) -> f64 {
        let q = self.params.q();
        let s = self.time_factor * tt;
        s.powf(1.0 / self.lambda)
            * (self.c * q / (q - 2.0).abs()).powf((q - 1.0) / q)
            * self.lambda.powf(1.0 / q)
    }

    /// Free-boundary radius of the slow solution, measured from the center.
    pub fn support_radius(&self, t: f64) -> Result<f64> {
        match self.regime {
            Regime::Slow => {
                let tt = self.shifted_time(t)?;
                Ok(self.edge_radius(tt))
            }
            Regime::Fast => Err(Error::UnboundedSupport("fast")),
            Regime::Linear => Err(Error::UnboundedSupport("heat-type")),
        }
    }

    fn moment(&self, t: f64, weight: f64, quad: &Quadrature) -> Result<f64> {
        let tt = self.shifted_time(t)?;
        let f = |r: f64| self.eval_shifted(r + self.r_center, tt);
        match self.regime {
            Regime::Slow => quad.compact(f, weight, self.edge_radius(tt)),
            Regime::Fast => quad.unbounded(f, weight, self.edge_radius(tt)),
            Regime::Linear => {
                let scale = (4.0 * (self.params.p() - 1.0) * tt).sqrt();
                quad.unbounded(f, weight, scale)
            }
        }
    }

    /// `∫_0^∞ B(r, t) r^{d-1} dr`.
    pub fn d_mass(&self, t: f64, quad: &Quadrature) -> Result<f64> {
        self.moment(t, self.d - 1.0, quad)
    }

    /// `∫_0^∞ B(r, t) r^{n-1} dr`.
    pub fn n_moment(&self, t: f64, quad: &Quadrature) -> Result<f64> {
        let q = self.params.q();
        let n = self.params.n() as f64;
        if self.regime == Regime::Fast && n * (2.0 - q) >= q {
            return Err(Error::Precondition(
                "n-moment of the fast solution diverges for these exponents".into(),
            ));
        }
        self.moment(t, n - 1.0, quad)
    }

    /// Exponent `e` in `d_mass ∝ C^e`: `(q-1)λ/(q(q-2))`, or 1 for the heat kernel.
    pub fn mass_exponent(&self) -> f64 {
        match self.regime {
            Regime::Linear => 1.0,
            _ => {
                let q = self.params.q();
                (q - 1.0) * self.lambda / (q * (q - 2.0))
            }
        }
    }

    /// The constant `C` whose solution carries the given d-mass.
    pub fn c_for_mass(&self, mass: f64, quad: &Quadrature) -> Result<f64> {
        if !(mass > 0.0) {
            return Err(Error::InvalidArgument("target mass must be positive".into()));
        }
        let unit = self.with_c(1.0)?.d_mass(1.0, quad)?;
        Ok((mass / unit).powf(1.0 / self.mass_exponent()))
    }

    /// Finite-difference residual of `u_t = K r^{1-d}(|u_r|^{q-2}u_r r^{d-1})_r`
    /// at an interior point of the positivity set.
    pub fn self_similar_residual(&self, r: f64, t: f64, h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::InvalidArgument("step must be positive".into()));
        }
        let rr = r - self.r_center;
        if rr - h <= 0.0 {
            return Err(Error::Precondition(
                "residual needs r - h > 0 away from the origin".into(),
            ));
        }
        let tt = self.shifted_time(t)?;
        if tt - h <= 0.0 {
            return Err(Error::Precondition("residual needs t + t_delay > h".into()));
        }
        if self.regime == Regime::Slow && rr + h >= self.edge_radius(tt + h) {
            return Err(Error::Precondition(
                "residual stencil touches the free boundary".into(),
            ));
        }
        let q = self.params.q();
        let u = |r: f64, tt: f64| self.eval_shifted(r + self.r_center, tt);
        let u0 = u(rr, tt);
        let up = u(rr + h, tt);
        let um = u(rr - h, tt);
        let u_t = (u(rr, tt + h) - u(rr, tt - h)) / (2.0 * h);
        let u_r = (up - um) / (2.0 * h);
        let u_rr = (up - 2.0 * u0 + um) / (h * h);
        let diffusivity = if self.regime == Regime::Linear {
            1.0
        } else {
            u_r.abs().powf(q - 2.0)
        };
        let rhs = self.time_factor
            * diffusivity
            * ((q - 1.0) * u_rr + (self.d - 1.0) / rr * u_r);
        Ok(u_t - rhs)
    }
}

/// Traveling wave `c (a t + x_1 - b)_+^{(q-1)/(q-2)}` moving in the
/// negative `x_1` direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TravelingWaveSpec {
    params: EquationParams,
    a: f64,
    b: f64,
    c_amp: f64,
}

impl TravelingWaveSpec {
    /// Builds the wave and calibrates its amplitude.
    pub fn new(params: EquationParams, a: f64, b: f64) -> Result<Self> {
        if params.q() <= 2.0 {
            return Err(Error::Precondition("traveling wave requires q > 2".into()));
        }
        if !(a > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(
                "wave speed must be positive and the offset finite".into(),
            ));
        }
        let c_amp = calibrate(&params, a)?;
        Ok(Self {
            params,
            a,
            b,
            c_amp,
        })
    }

    pub fn params(&self) -> &EquationParams {
        &self.params
    }

    pub fn speed(&self) -> f64 {
        self.a
    }

    pub fn offset(&self) -> f64 {
        self.b
    }

    pub fn amplitude(&self) -> f64 {
        self.c_amp
    }

    pub fn exponent(&self) -> f64 {
        let q = self.params.q();
        (q - 1.0) / (q - 2.0)
    }

    /// Position of the front `b - a t`.
    pub fn front(&self, t: f64) -> f64 {
        self.b - self.a * t
    }

    pub fn eval(&self, x1: f64, t: f64) -> f64 {
        let z = self.a * t + x1 - self.b;
        if z <= 0.0 {
            0.0
        } else {
            self.c_amp * z.powf(self.exponent())
        }
    }

    /// Central-difference residual of `u_t - (p-1)|u'|^{q-2}u''`.
    pub fn pde_residual(&self, x1: f64, t: f64, h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::InvalidArgument("step must be positive".into()));
        }
        let z = self.a * t + x1 - self.b;
        if z - h * (1.0 + self.a) <= 0.0 {
            return Err(Error::Precondition(
                "residual stencil reaches the front".into(),
            ));
        }
        let q = self.params.q();
        let u0 = self.eval(x1, t);
        let up = self.eval(x1 + h, t);
        let um = self.eval(x1 - h, t);
        let u_t = (self.eval(x1, t + h) - self.eval(x1, t - h)) / (2.0 * h);
        let u_x = (up - um) / (2.0 * h);
        let u_xx = (up - 2.0 * u0 + um) / (h * h);
        Ok(u_t - (self.params.p() - 1.0) * u_x.abs().powf(q - 2.0) * u_xx)
    }
}

/// Amplitude for which the residual vanishes at the reference point `z = 1`.
/// With `u = c z^k`, the residual there is `c·g(c)` where `g` is strictly
/// decreasing in `c`, so a bracketing root find on `g` suffices.
fn calibrate(params: &EquationParams, a: f64) -> Result<f64> {
    let q = params.q();
    let k = (q - 1.0) / (q - 2.0);
    // Analytic derivatives of the unit ansatz at z = 1.
    let (u_t_unit, u_x_unit, u_xx_unit) = (a * k, k, k * (k - 1.0));
    let g = |ln_c: f64| {
        let c = ln_c.exp();
        u_t_unit - (params.p() - 1.0) * (c * u_x_unit).abs().powf(q - 2.0) * u_xx_unit
    };
    let mut lo = -1.0;
    let mut hi = 1.0;
    while g(lo) <= 0.0 {
        lo -= 8.0;
        if lo < -700.0 {
            return Err(Error::NonConvergence("amplitude bracket".into()));
        }
    }
    while g(hi) >= 0.0 {
        hi += 8.0;
        if hi > 700.0 {
            return Err(Error::NonConvergence("amplitude bracket".into()));
        }
    }
    Ok(bisect(g, lo, hi, 1e-15)?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slow() -> BarenblattSpec {
        BarenblattSpec::new(EquationParams::new(3, 3.0, 4.0).unwrap(), 1.0, 0.0).unwrap()
    }

    fn fast() -> BarenblattSpec {
        BarenblattSpec::new(EquationParams::new(3, 3.0, 1.5).unwrap(), 1.0, 0.0).unwrap()
    }

    fn heat() -> BarenblattSpec {
        BarenblattSpec::new(EquationParams::new(2, 2.0, 2.0).unwrap(), 1.0, 0.0).unwrap()
    }

    fn edge_334() -> f64 {
        (2.0 * 12f64.powf(1.0 / 3.0)).powf(0.75)
    }

    #[test]
    fn center_value_at_unit_time_factor() {
        assert!((slow().eval(0.0, 1.5).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn support_edge_matches_bisection() {
        let spec = slow();
        // Independent oracle: root of the bracket C - (1/2)·12^{-1/3}·r^{4/3} at s = 1.
        let bracket = |r: f64| 1.0 - 0.5 * 12f64.powf(-1.0 / 3.0) * r.powf(4.0 / 3.0);
        let root = bisect(bracket, 0.1, 10.0, 1e-15).unwrap();
        let r = spec.support_radius(1.5).unwrap();
        assert!((r - root).abs() < 1e-10);
        assert!((r - edge_334()).abs() < 1e-12);
        // Rounding in the closed-form radius leaves at most a 1e-16 bracket.
        assert!(spec.eval(r, 1.5).unwrap() < 1e-20);
        assert!(spec.eval(0.99 * r, 1.5).unwrap() > 0.0);
        assert_eq!(spec.eval(r + 1.0, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn support_scales_with_time() {
        let spec = slow();
        let t1 = 1.5;
        let t2 = 4096.0 * t1;
        let ratio = spec.support_radius(t2).unwrap() / spec.support_radius(t1).unwrap();
        assert!((ratio - 2.0).abs() < 1e-12);
        assert_eq!(fast().support_radius(1.0), Err(Error::UnboundedSupport("fast")));
        assert!(heat().support_radius(1.0).is_err());
    }

    #[test]
    fn rejects_nonpositive_time() {
        assert!(slow().eval(0.0, 0.0).is_err());
        assert!(slow().with_delay(1.0).unwrap().eval(0.0, -0.5).is_ok());
    }

    #[test]
    fn fast_requires_range_condition() {
        let p = EquationParams::new(3, 1.3, 1.3).unwrap();
        assert!(BarenblattSpec::new(p, 1.0, 0.0).is_err());
    }

    #[test]
    fn d_mass_constant_in_time() {
        let q = Quadrature::default();
        for spec in [slow(), fast(), heat()] {
            let m1 = spec.d_mass(1.0, &q).unwrap();
            for t in [2.0, 5.0, 10.0] {
                let m = spec.d_mass(t, &q).unwrap();
                assert!((m / m1 - 1.0).abs() < 1e-8, "{:?} {t} {m} {m1}", spec.regime());
            }
        }
    }

    #[test]
    fn heat_mass_is_gaussian_integral() {
        // d = 2: ∫ t^{-1} e^{-r²/4t} r dr = 2.
        let m = heat().d_mass(3.0, &Quadrature::default()).unwrap();
        assert!((m - 2.0).abs() < 1e-10);
    }

    #[test]
    fn slow_mass_beta_integral() {
        // (3,3,4), s = 1, C = 1: B = (1 - a r^{4/3})_+^{3/2}, a = 12^{-1/3}/2.
        // ∫ B r^3 dr = (3/4) a^{-3} B(3, 5/2) with B(3, 5/2) = Γ(3)Γ(5/2)/Γ(11/2).
        let a = 0.5 * 12f64.powf(-1.0 / 3.0);
        let beta = 2.0 * (3.0 / 4.0) * std::f64::consts::PI.sqrt()
            / ((9.0 / 2.0) * (7.0 / 2.0) * (5.0 / 2.0) * (3.0 / 4.0) * std::f64::consts::PI.sqrt());
        let exact = 0.75 * a.powi(-3) * beta;
        let m = slow().d_mass(1.5, &Quadrature::default()).unwrap();
        assert!((m / exact - 1.0).abs() < 1e-10, "{m} {exact}");
    }

    #[test]
    fn mass_grows_with_c_and_power_law() {
        let q = Quadrature::default();
        let s = slow();
        let m1 = s.d_mass(1.0, &q).unwrap();
        let m2 = s.with_c(2.0).unwrap().d_mass(1.0, &q).unwrap();
        assert!(m2 > m1);
        assert!(((m2 / m1).log2() - s.mass_exponent()).abs() < 1e-8);
        let f = fast();
        let f1 = f.d_mass(1.0, &q).unwrap();
        let f2 = f.with_c(2.0).unwrap().d_mass(1.0, &q).unwrap();
        assert!(((f2 / f1).log2() - f.mass_exponent()).abs() < 1e-7);
        let c = s.c_for_mass(3.0 * m1, &q).unwrap();
        let m3 = s.with_c(c).unwrap().d_mass(1.0, &q).unwrap();
        assert!((m3 / (3.0 * m1) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn mass_preserving_scaling_keeps_mass() {
        // u_B(r,t) = A u(Br, Ct) is again Barenblatt with the same C and the
        // delay divided by C; compare its quadrature with the original.
        let q = Quadrature::default();
        let spec = slow().with_delay(0.5).unwrap();
        let (a, c) = spec.params().mass_preserving_scaling(1.7).unwrap();
        let t = 2.0;
        let scaled = quad_mass_of(|r| a * spec.eval(1.7 * r, c * t).unwrap(), 4.0, &spec, t, 1.7, &q);
        let orig = spec.d_mass(t, &q).unwrap();
        assert!((scaled / orig - 1.0).abs() < 1e-8);
    }

    fn quad_mass_of<F: Fn(f64) -> f64>(
        f: F,
        d: f64,
        spec: &BarenblattSpec,
        t: f64,
        b: f64,
        q: &Quadrature,
    ) -> f64 {
        let (_, c) = spec.params().mass_preserving_scaling(b).unwrap();
        let edge = spec.support_radius(c * t).unwrap() / b;
        q.compact(f, d - 1.0, edge).unwrap()
    }

    #[test]
    fn self_similarity_pointwise() {
        for spec in [slow(), fast(), heat()] {
            let e = spec.params().derive();
            let b: f64 = 1.3;
            for i in 0..20 {
                let r = 0.2 * i as f64;
                let t = 0.7;
                let lhs = spec.eval(b * r, b.powf(e.lambda) * t).unwrap() * b.powf(e.d);
                let rhs = spec.eval(r, t).unwrap();
                assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-300), "{lhs} {rhs}");
            }
        }
    }

    #[test]
    fn radially_nonincreasing() {
        for spec in [slow(), fast(), heat()] {
            let f = spec.profile_at(1.0).unwrap();
            let mut prev = f(0.0);
            for i in 1..1000 {
                let v = f(i as f64 * 0.005);
                assert!(v <= prev && v >= 0.0);
                prev = v;
            }
        }
    }

    #[test]
    fn n_moment_exponent() {
        let q = Quadrature::default();
        let s = slow();
        let lambda = 12.0;
        let t1 = 1.0;
        let t2 = 2f64.powf(lambda);
        let m1 = s.n_moment(t1, &q).unwrap();
        let m2 = s.n_moment(t2, &q).unwrap();
        let mu = -(m2 / m1).ln() / (t2 / t1).ln();
        assert!((mu - 1.0 / 12.0).abs() < 1e-8, "{mu}");
    }

    #[test]
    fn n_moment_p_equals_q_is_constant() {
        let q = Quadrature::default();
        let s = BarenblattSpec::new(EquationParams::new(3, 3.0, 3.0).unwrap(), 1.0, 0.0).unwrap();
        let a = s.n_moment(1.0, &q).unwrap();
        let b = s.n_moment(7.0, &q).unwrap();
        assert!((a / b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn n_moment_vanishes_at_initial_time_when_q_below_p() {
        let q = Quadrature::default();
        let s = BarenblattSpec::new(EquationParams::new(3, 4.0, 3.0).unwrap(), 1.0, 0.0).unwrap();
        let vals: Vec<f64> = [1.0, 1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&t| s.n_moment(t, &q).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn n_moment_divergent_fast_case() {
        assert!(fast().n_moment(1.0, &Quadrature::default()).is_err());
    }

    #[test]
    fn residual_second_order_slow() {
        let s = slow();
        let r1 = s.self_similar_residual(1.0, 2.0, 1e-2).unwrap().abs();
        let r2 = s.self_similar_residual(1.0, 2.0, 1e-3).unwrap().abs();
        assert!(r1 / r2 > 80.0, "{r1} {r2}");
        assert!(s.self_similar_residual(0.0, 2.0, 1e-3).is_err());
        let edge = s.support_radius(2.0).unwrap();
        assert!(s.self_similar_residual(edge, 2.0, 1e-3).is_err());
    }

    #[test]
    fn residual_heat_and_fast() {
        let h = heat().self_similar_residual(1.0, 1.0, 1e-4).unwrap();
        assert!(h.abs() < 1e-8, "{h}");
        let f = fast();
        let a = f.self_similar_residual(1.0, 1.0, 1e-2).unwrap().abs();
        let b = f.self_similar_residual(1.0, 1.0, 1e-3).unwrap().abs();
        assert!(a / b > 80.0, "{a} {b}");
    }

    #[test]
    fn traveling_wave_amplitude_and_residual() {
        let p = EquationParams::new(3, 3.0, 4.0).unwrap();
        let w = TravelingWaveSpec::new(p, 0.8, 0.3).unwrap();
        // Oracle: c^{q-2} = a (q-2) / ((p-1) k^{q-2}).
        let q = 4.0;
        let k = 1.5f64;
        let c = (0.8 * (q - 2.0) / (2.0 * k.powf(q - 2.0))).powf(1.0 / (q - 2.0));
        assert!((w.amplitude() - c).abs() < 1e-12);
        for i in 0..20 {
            let x = 0.5 + 0.1 * i as f64;
            let res = w.pde_residual(x, 1.0, 1e-3).unwrap();
            assert!(res.abs() < 1e-6, "{x} {res}");
        }
        assert_eq!(w.eval(-1.0, 0.0), 0.0);
        assert_eq!(w.front(2.0), 0.3 - 1.6);
        assert!(TravelingWaveSpec::new(EquationParams::new(3, 3.0, 2.0).unwrap(), 1.0, 0.0).is_err());
    }

    #[test]
    fn center_offset_shifts_profile() {
        let s = slow().with_center(2.0);
        assert_eq!(s.eval(2.0, 1.5).unwrap(), slow().eval(0.0, 1.5).unwrap());
    }
}
