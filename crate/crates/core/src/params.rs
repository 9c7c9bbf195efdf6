//! Equation parameters and the exponents derived from them.
//!
//! The equation is `u_t = |Du|^{q-2} (Δu + (p-2) Δ∞ᴺ u)` with the constant in
//! front of the operator fixed to one. Radial solutions solve the weighted
//! one-dimensional q-parabolic equation in the fictitious dimension
//! `d = (n-1)(q-1)/(p-1) + 1`.

use std::fmt;

use crate::error::{Error, Result};

/// Tolerance used to decide that `q` sits on the linear (heat-type) branch.
pub const LINEAR_Q_TOL: f64 = 1e-12;

/// Diffusion regime of the reparametrized equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `q > 2`: degenerate diffusion, finite propagation.
    Slow,
    /// `q = 2`: linear homogeneity, heat-type kernel.
    Linear,
    /// `q < 2`: singular diffusion, infinite propagation.
    Fast,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Slow => "slow",
            Regime::Linear => "linear",
            Regime::Fast => "fast",
        })
    }
}

/// The exponent triple `(n, p, q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquationParams {
    n: u32,
    p: f64,
    q: f64,
}

impl EquationParams {
    pub fn new(n: u32, p: f64, q: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::InvalidParams("p must exceed 1".into()));
        }
        if !q.is_finite() || q <= 1.0 {
            return Err(Error::InvalidParams("q must exceed 1".into()));
        }
        Ok(Self { n, p, q })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `κ = q - p`, the exponent on `|Du|` in the original form.
    pub fn kappa(&self) -> f64 {
        self.q - self.p
    }

    /// `γ = q - 2`.
    pub fn gamma(&self) -> f64 {
        self.q - 2.0
    }

    /// One space dimension reduces to the plain q-Laplacian; nothing to transform.
    pub fn is_one_dimensional(&self) -> bool {
        self.n == 1
    }

    /// Fictitious dimension.
    pub fn d(&self) -> f64 {
        (self.n as f64 - 1.0) * (self.q - 1.0) / (self.p - 1.0) + 1.0
    }

    /// `(p-1)/(q-1)`, the factor in front of the d-dimensional q-Laplacian.
    pub fn diffusion_factor(&self) -> f64 {
        (self.p - 1.0) / (self.q - 1.0)
    }

    pub fn derive(&self) -> DerivedExponents {
        let d = self.d();
        let lambda = d * (self.q - 2.0) + self.q;
        let sigma = d - self.n as f64;
        DerivedExponents {
            d,
            lambda,
            alpha: d / lambda,
            spread: 1.0 / lambda,
            sigma,
            // σ = 0 forces μ = 0 even on the critical line λ = 0.
            mu: if sigma == 0.0 { 0.0 } else { sigma / lambda },
        }
    }

    /// `2n < q(n-1) + 2p`. Equivalent to `λ > 0` and to the piecewise
    /// threshold on `q`; the three forms are cross-checked in debug builds
    /// away from the boundary.
    pub fn range_condition(&self) -> bool {
        let n = self.n as f64;
        let margin = self.q * (n - 1.0) + 2.0 * self.p - 2.0 * n;
        let holds = margin > 0.0;
        if margin.abs() > 1e-9 {
            debug_assert_eq!(holds, self.range_condition_lambda());
            debug_assert_eq!(holds, self.range_condition_piecewise());
        }
        holds
    }

    /// Range condition as `λ = d(q-2) + q > 0`.
    pub fn range_condition_lambda(&self) -> bool {
        self.derive().lambda > 0.0
    }

    /// Range condition in the form `q > 1` for `p ≥ (1+n)/2`, else
    /// `q > 2(n-p)/(n-1)`.
    pub fn range_condition_piecewise(&self) -> bool {
        let n = self.n as f64;
        if self.p >= (1.0 + n) / 2.0 {
            self.q > 1.0
        } else {
            self.q > 2.0 * (n - self.p) / (n - 1.0)
        }
    }

    pub fn regime(&self) -> Regime {
        if (self.q - 2.0).abs() <= LINEAR_Q_TOL {
            Regime::Linear
        } else if self.q > 2.0 {
            Regime::Slow
        } else {
            Regime::Fast
        }
    }

    /// Time factor `C = A^{q-2} B^q` making `A u(Bx, Ct)` a solution.
    pub fn scaling_transform(&self, amplitude: f64, space: f64) -> Result<f64> {
        if !(amplitude > 0.0) || !(space > 0.0) {
            return Err(Error::InvalidArgument(
                "scaling factors must be positive".into(),
            ));
        }
        Ok(amplitude.powf(self.q - 2.0) * space.powf(self.q))
    }

    /// The d-mass preserving member of the scaling group: `A = B^d`,
    /// `C = B^λ`. Returns `(A, C)`.
    pub fn mass_preserving_scaling(&self, space: f64) -> Result<(f64, f64)> {
        if !(space > 0.0) {
            return Err(Error::InvalidArgument(
                "scaling factors must be positive".into(),
            ));
        }
        let e = self.derive();
        Ok((space.powf(e.d), space.powf(e.lambda)))
    }
}

impl fmt::Display for EquationParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, p={}, q={})", self.n, self.p, self.q)
    }
}

/// Exponents computed from [`EquationParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedExponents {
    /// Fictitious dimension.
    pub d: f64,
    /// Self-similarity exponent `d(q-2) + q`.
    pub lambda: f64,
    /// Sup-norm decay exponent `d/λ`.
    pub alpha: f64,
    /// Spreading exponent `1/λ`.
    pub spread: f64,
    /// Moment weight exponent `d - n`.
    pub sigma: f64,
    /// n-mass singularity exponent `σ/λ`.
    pub mu: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u32, p: f64, q: f64) -> EquationParams {
        EquationParams::new(n, p, q).unwrap()
    }

    #[test]
    fn derive_slow_example() {
        let e = p(3, 3.0, 4.0).derive();
        assert_eq!(e.d, 4.0);
        assert_eq!(e.lambda, 12.0);
        assert!((e.alpha - 1.0 / 3.0).abs() < 1e-15);
        assert!((e.spread - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(e.sigma, 1.0);
        assert!((e.mu - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn derive_heat_case() {
        // q = 2 leaves λ = q = 2, so α = d/2.
        let e = p(2, 2.0, 2.0).derive();
        assert_eq!(e.d, 2.0);
        assert_eq!(e.lambda, 2.0);
        assert_eq!(e.alpha, 1.0);
    }

    #[test]
    fn derive_fast_example() {
        let e = p(3, 3.0, 1.5).derive();
        assert!((e.d - 1.5).abs() < 1e-15);
        assert!((e.lambda - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_exponents() {
        assert_eq!(
            EquationParams::new(3, 3.0, 0.5),
            Err(Error::InvalidParams("q must exceed 1".into()))
        );
        assert!(EquationParams::new(3, 1.0, 2.0).is_err());
        assert!(EquationParams::new(0, 2.0, 2.0).is_err());
        assert!(EquationParams::new(2, f64::NAN, 2.0).is_err());
    }

    #[test]
    fn range_condition_examples() {
        assert!(p(3, 3.0, 1.5).range_condition());
        assert!(!p(3, 1.3, 1.3).range_condition());
        assert!(p(3, 3.0, 4.0).range_condition());
        assert!(p(3, 1.7, 1.7).range_condition());
    }

    #[test]
    fn regimes() {
        assert_eq!(p(3, 3.0, 4.0).regime(), Regime::Slow);
        assert_eq!(p(3, 3.0, 2.0).regime(), Regime::Linear);
        assert_eq!(p(3, 3.0, 1.5).regime(), Regime::Fast);
        assert_eq!(p(3, 3.0, 2.0 + 1e-13).regime(), Regime::Linear);
        assert_eq!(p(3, 3.0, 2.0 + 1e-9).regime(), Regime::Slow);
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(p(3, 3.0, 4.0).scaling_transform(2.0, 3.0).unwrap(), 324.0);
        assert_eq!(p(2, 2.0, 2.0).scaling_transform(17.0, 3.0).unwrap(), 9.0);
        assert_eq!(p(3, 3.0, 4.0).scaling_transform(16.0, 2.0).unwrap(), 4096.0);
        assert!(p(3, 3.0, 4.0).scaling_transform(0.0, 2.0).is_err());
        assert!(p(3, 3.0, 4.0).scaling_transform(1.0, -2.0).is_err());
    }

    #[test]
    fn mass_preserving_examples() {
        let (a, c) = p(3, 3.0, 4.0).mass_preserving_scaling(2.0).unwrap();
        assert_eq!((a, c), (16.0, 4096.0));
        assert_eq!(p(3, 3.0, 4.0).mass_preserving_scaling(1.0).unwrap(), (1.0, 1.0));
        // Heat case: λ = 2, so C = B^2.
        assert_eq!(p(2, 2.0, 2.0).mass_preserving_scaling(3.0).unwrap(), (9.0, 9.0));
        assert!(p(2, 2.0, 2.0).mass_preserving_scaling(0.0).is_err());
        // Consistent with the general scaling law.
        let pp = p(3, 2.5, 3.5);
        let (a, c) = pp.mass_preserving_scaling(1.7).unwrap();
        let c2 = pp.scaling_transform(a, 1.7).unwrap();
        assert!((c - c2).abs() < 1e-12 * c);
    }

    #[test]
    fn equal_exponents_keep_dimension() {
        for n in 1..6 {
            for &pq in &[1.1, 1.5, 2.0, 3.7] {
                let e = p(n, pq, pq).derive();
                assert_eq!(e.d, n as f64);
                assert_eq!(e.sigma, 0.0);
                assert_eq!(e.mu, 0.0);
            }
        }
    }

    #[test]
    fn large_q_asymptotics() {
        for n in 2..6 {
            for &pp in &[1.2, 2.0, 4.5] {
                let q = 1e4;
                let ratio = p(n, pp, q).d() / q;
                let limit = (n as f64 - 1.0) / (pp - 1.0);
                assert!((ratio - limit).abs() / limit < 0.01);
            }
        }
    }

    #[test]
    fn one_dimension_is_trivial() {
        let e = p(1, 3.0, 5.0).derive();
        assert_eq!(e.d, 1.0);
        assert!(p(1, 3.0, 5.0).is_one_dimensional());
    }
}
