//! The radial operator of the n-dimensional equation and the weighted
//! divergence form in dimension d, evaluated on sampled profiles.

use crate::error::{Error, Result};
use crate::params::EquationParams;

/// Below this gradient magnitude the diffusivity is treated as degenerate
/// (`q > 2`) or singular (`q < 2`).
pub const GRADIENT_FLOOR: f64 = 1e-12;

/// Analytic `(u_r, u_rr)` at a radius.
pub type Derivatives = Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// Samples of a radial profile, optionally with exact derivatives.
pub struct SampledProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
    analytic: Option<Derivatives>,
}

impl std::fmt::Debug for SampledProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SampledProfile")
            .field("radii", &self.radii)
            .field("values", &self.values)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl SampledProfile {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 3 {
            return Err(Error::InvalidArgument(
                "profile needs at least three radii with matching values".into(),
            ));
        }
        if radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "radii must be positive and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("profile values must be finite".into()));
        }
        Ok(Self {
            radii,
            values,
            analytic: None,
        })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(radii: Vec<f64>, f: F) -> Result<Self> {
        let values = radii.iter().map(|&r| f(r)).collect();
        Self::new(radii, values)
    }

    pub fn with_derivatives(mut self, derivatives: Derivatives) -> Self {
        self.analytic = Some(derivatives);
        self
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn has_derivatives(&self) -> bool {
        self.analytic.is_some()
    }

    fn locate(&self, at: Point) -> Result<(usize, f64)> {
        match at {
            Point::Index(i) => self
                .radii
                .get(i)
                .map(|&r| (i, r))
                .ok_or_else(|| Error::InvalidArgument(format!("index {i} out of range"))),
            Point::Radius(r) => {
                let i = self.radii.partition_point(|&x| x < r);
                for j in [i.saturating_sub(1), i] {
                    if let Some(&x) = self.radii.get(j) {
                        if (x - r).abs() <= 1e-12 * r.abs().max(1.0) {
                            return Ok((j, x));
                        }
                    }
                }
                Err(Error::InvalidArgument(format!(
                    "radius {r} is not a sample point"
                )))
            }
        }
    }

    fn interior(&self, i: usize) -> Result<()> {
        if i == 0 || i + 1 >= self.radii.len() {
            return Err(Error::InvalidArgument(format!(
                "index {i} has no two-sided stencil"
            )));
        }
        Ok(())
    }

    /// Second-order three-point derivatives on a possibly nonuniform stencil.
    fn fd_derivatives(&self, i: usize) -> Result<(f64, f64)> {
        self.interior(i)?;
        let (r, u) = (&self.radii, &self.values);
        let h1 = r[i] - r[i - 1];
        let h2 = r[i + 1] - r[i];
        let s = h1 + h2;
        let u_r = -h2 / (h1 * s) * u[i - 1] + (h2 - h1) / (h1 * h2) * u[i] + h1 / (h2 * s) * u[i + 1];
        let u_rr = 2.0 * (u[i - 1] / (h1 * s) - u[i] / (h1 * h2) + u[i + 1] / (h2 * s));
        Ok((u_r, u_rr))
    }

    fn derivatives(&self, at: Point) -> Result<(f64, f64, f64)> {
        match (&self.analytic, at) {
            (Some(d), Point::Radius(r)) => {
                let (u_r, u_rr) = d(r);
                Ok((r, u_r, u_rr))
            }
            (Some(d), Point::Index(i)) => {
                let (_, r) = self.locate(Point::Index(i))?;
                let (u_r, u_rr) = d(r);
                Ok((r, u_r, u_rr))
            }
            (None, at) => {
                let (i, r) = self.locate(at)?;
                let (u_r, u_rr) = self.fd_derivatives(i)?;
                Ok((r, u_r, u_rr))
            }
        }
    }
}

/// Where to evaluate an operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Index(usize),
    Radius(f64),
}

/// `|u_r|^{q-2}`, with the degenerate and singular cases at the gradient floor.
fn diffusivity(u_r: f64, r: f64, q: f64) -> Result<Option<f64>> {
    if u_r.abs() > GRADIENT_FLOOR || q == 2.0 {
        return Ok(Some(u_r.abs().powf(q - 2.0)));
    }
    if q > 2.0 {
        Ok(None)
    } else {
        Err(Error::SingularPoint { r })
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

/// `|u_r|^{q-2}((p-1)u_rr + (n-1)/r u_r)`.
pub fn radial_rhs(profile: &SampledProfile, at: Point, params: &EquationParams) -> Result<f64> {
    let (r, u_r, u_rr) = profile.derivatives(at)?;
    check_radius(r)?;
    let Some(a) = diffusivity(u_r, r, params.q())? else {
        return Ok(0.0);
    };
    let n = params.n() as f64;
    Ok(a * ((params.p() - 1.0) * u_rr + (n - 1.0) / r * u_r))
}

/// `((p-1)/(q-1)) r^{1-d} (|u_r|^{q-2}u_r r^{d-1})_r`.
///
/// With analytic derivatives the flux derivative is expanded by the chain
/// rule; on samples it is a difference of face fluxes.
pub fn divergence_rhs(profile: &SampledProfile, at: Point, params: &EquationParams) -> Result<f64> {
    let q = params.q();
    let d = params.d();
    let k = params.diffusion_factor();
    let phi = |s: f64| s.abs().powf(q - 2.0) * s;
    if profile.has_derivatives() {
        let (r, u_r, u_rr) = profile.derivatives(at)?;
        check_radius(r)?;
        if diffusivity(u_r, r, q)?.is_none() {
            return Ok(0.0);
        }
        let dphi = (q - 1.0) * u_r.abs().powf(q - 2.0);
        let flux_r = dphi * u_rr * r.powf(d - 1.0) + phi(u_r) * (d - 1.0) * r.powf(d - 2.0);
        return Ok(k * r.powf(1.0 - d) * flux_r);
    }
    let (i, r) = profile.locate(at)?;
    check_radius(r)?;
    let (u_r, _) = profile.fd_derivatives(i)?;
    if diffusivity(u_r, r, q)?.is_none() {
        return Ok(0.0);
    }
    let (rs, us) = (&profile.radii, &profile.values);
    let face = |a: usize| {
        let rf = 0.5 * (rs[a] + rs[a + 1]);
        let s = (us[a + 1] - us[a]) / (rs[a + 1] - rs[a]);
        (rf, phi(s) * rf.powf(d - 1.0))
    };
    let (rl, fl) = face(i - 1);
    let (rr, fr) = face(i);
    Ok(k * r.powf(1.0 - d) * (fr - fl) / (rr - rl))
}

/// Largest relative discrepancy between the two operator forms over the
/// admissible sample radii (positive, off the gradient floor, two-sided
/// stencil available when finite differences are used).
pub fn equivalence_check(
    profile: &SampledProfile,
    params: &EquationParams,
    sample_radii: &[f64],
) -> Result<f64> {
    let mut worst: Option<f64> = None;
    for &r in sample_radii {
        if !(r > 0.0) {
            continue;
        }
        let at = Point::Radius(r);
        let Ok((_, u_r, _)) = profile.derivatives(at) else {
            continue;
        };
        if u_r.abs() <= GRADIENT_FLOOR {
            continue;
        }
        let a = radial_rhs(profile, at, params)?;
        let b = divergence_rhs(profile, at, params)?;
        let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        let rel = (a - b).abs() / scale;
        worst = Some(worst.map_or(rel, |w: f64| w.max(rel)));
    }
    worst.ok_or_else(|| Error::Degenerate("no admissible sample radii".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::BarenblattSpec;

    fn params(n: u32, p: f64, q: f64) -> EquationParams {
        EquationParams::new(n, p, q).unwrap()
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    fn square_analytic() -> SampledProfile {
        SampledProfile::from_fn(grid(0.5, 1.5, 11), |r| r * r)
            .unwrap()
            .with_derivatives(Box::new(|r| (2.0 * r, 2.0)))
    }

    #[test]
    fn square_profile_hand_value() {
        let pr = params(3, 3.0, 4.0);
        let prof = square_analytic();
        let a = radial_rhs(&prof, Point::Radius(1.0), &pr).unwrap();
        let b = divergence_rhs(&prof, Point::Radius(1.0), &pr).unwrap();
        assert!((a - 32.0).abs() < 1e-13);
        assert!((b - 32.0).abs() < 1e-13);
        // Finite differences are exact for quadratics in the radial form.
        let fd = SampledProfile::from_fn(grid(0.5, 1.5, 11), |r| r * r).unwrap();
        assert!((radial_rhs(&fd, Point::Radius(1.0), &pr).unwrap() - 32.0).abs() < 1e-10);
    }

    #[test]
    fn divergence_by_independent_expansion() {
        // d = 4 for (3,3,4): r^{-3}(8 r^3 · r^3)_r = r^{-3}·48 r^5 = 48 r^2; times K = 2/3.
        let pr = params(3, 3.0, 4.0);
        let r: f64 = 1.2;
        let expected = 2.0 / 3.0 * 48.0 * r * r;
        let prof = square_analytic();
        let b = divergence_rhs(&prof, Point::Radius(r), &pr).unwrap();
        assert!((b - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn constant_profile_gives_zero() {
        let prof = SampledProfile::from_fn(grid(0.5, 1.5, 11), |_| 3.0).unwrap();
        for q in [2.0, 4.0] {
            let pr = params(3, 3.0, q);
            assert!(radial_rhs(&prof, Point::Index(5), &pr).unwrap().abs() < 1e-12);
            assert!(divergence_rhs(&prof, Point::Index(5), &pr).unwrap().abs() < 1e-12);
        }
        assert_eq!(
            radial_rhs(&prof, Point::Index(5), &params(3, 3.0, 1.5)),
            Err(Error::SingularPoint { r: 1.0 })
        );
    }

    #[test]
    fn linear_profile_both_forms() {
        let pr = params(3, 3.0, 4.0);
        let prof = SampledProfile::from_fn(grid(0.5, 1.5, 11), |r| r)
            .unwrap()
            .with_derivatives(Box::new(|_| (1.0, 0.0)));
        let a = radial_rhs(&prof, Point::Radius(0.8), &pr).unwrap();
        let b = divergence_rhs(&prof, Point::Radius(0.8), &pr).unwrap();
        assert!((a - 2.0 / 0.8).abs() < 1e-14);
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn cubic_with_analytic_derivatives() {
        let prof = SampledProfile::from_fn(grid(0.2, 2.0, 50), |r| 1.0 - 0.3 * r + 0.2 * r * r - 0.1 * r * r * r)
            .unwrap()
            .with_derivatives(Box::new(|r| (-0.3 + 0.4 * r - 0.3 * r * r, 0.4 - 0.6 * r)));
        for pr in [params(3, 3.0, 4.0), params(4, 1.7, 2.6), params(2, 2.5, 1.6)] {
            let disc = equivalence_check(&prof, &pr, prof.radii()).unwrap();
            assert!(disc < 1e-12, "{disc}");
        }
    }

    #[test]
    fn barenblatt_fd_matches_time_derivative() {
        let pr = params(3, 3.0, 4.0);
        let spec = BarenblattSpec::new(pr, 1.0, 0.0).unwrap();
        let t = 2.0;
        let mut errs = Vec::new();
        for h in [1e-2f64, 5e-3] {
            let radii = grid(0.5, 2.0, (1.5 / h).round() as usize + 1);
            let prof = SampledProfile::from_fn(radii, |r| spec.eval(r, t).unwrap()).unwrap();
            let r0 = 1.0;
            let dt = 1e-4;
            let ut = (spec.eval(r0, t + dt).unwrap() - spec.eval(r0, t - dt).unwrap()) / (2.0 * dt);
            let a = radial_rhs(&prof, Point::Radius(r0), &pr).unwrap();
            let b = divergence_rhs(&prof, Point::Radius(r0), &pr).unwrap();
            errs.push(((a - ut).abs(), (b - ut).abs()));
        }
        assert!(errs[0].0 / errs[1].0 > 3.0 && errs[0].1 / errs[1].1 > 3.0, "{errs:?}");
        assert!(errs[1].0 < 1e-4 && errs[1].1 < 1e-4);
    }

    #[test]
    fn equal_exponents_coincide_with_classical_form() {
        // p = q: d = n, both forms are the radial q-Laplacian.
        let pr = params(3, 2.5, 2.5);
        let prof = square_analytic();
        let r: f64 = 0.9;
        let classical = (2.0 * r).powf(0.5) * (1.5 * 2.0 + 2.0 / r * 2.0 * r);
        let a = radial_rhs(&prof, Point::Radius(r), &pr).unwrap();
        let b = divergence_rhs(&prof, Point::Radius(r), &pr).unwrap();
        assert!((a - classical).abs() < 1e-13 && (b - classical).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SampledProfile::new(vec![0.0, 1.0, 2.0], vec![1.0; 3]).is_err());
        assert!(SampledProfile::new(vec![1.0, 1.0, 2.0], vec![1.0; 3]).is_err());
        assert!(SampledProfile::new(vec![1.0, 2.0, 3.0], vec![1.0, f64::NAN, 1.0]).is_err());
        let prof = SampledProfile::from_fn(grid(0.5, 1.5, 11), |r| r).unwrap();
        assert!(radial_rhs(&prof, Point::Index(0), &params(3, 3.0, 4.0)).is_err());
        assert!(radial_rhs(&prof, Point::Radius(0.77), &params(3, 3.0, 4.0)).is_err());
        let flat = SampledProfile::from_fn(grid(0.5, 1.5, 11), |_| 1.0).unwrap();
        assert!(equivalence_check(&flat, &params(3, 3.0, 4.0), flat.radii()).is_err());
    }
}
