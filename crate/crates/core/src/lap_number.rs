//! Sign-change counting and intersection comparison against reference
//! solutions.

use crate::closed_forms::BarenblattSpec;
use crate::error::{Error, Result};
use crate::numerics::Quadrature;
use crate::solver1d::{RadialState, Trajectory};

/// Values with `|w| ≤ ε` are sign-neutral. With `relative` set the band is
/// `zero_band · sup|w|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignChangeConfig {
    pub zero_band: f64,
    pub relative: bool,
}

impl Default for SignChangeConfig {
    fn default() -> Self {
        Self {
            zero_band: 1e-8,
            relative: true,
        }
    }
}

impl SignChangeConfig {
    pub fn absolute(eps: f64) -> Result<Self> {
        Self::checked(eps, false)
    }

    pub fn relative(factor: f64) -> Result<Self> {
        Self::checked(factor, true)
    }

    fn checked(zero_band: f64, relative: bool) -> Result<Self> {
        if !(zero_band >= 0.0) || !zero_band.is_finite() {
            return Err(Error::InvalidArgument("zero band must be finite and ≥ 0".into()));
        }
        Ok(Self { zero_band, relative })
    }

    fn band(&self, w: &[f64]) -> f64 {
        if self.relative {
            self.zero_band * w.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        } else {
            self.zero_band
        }
    }
}

/// Signs of the maximal blocks of the band-filtered sequence, from the first
/// sample on, as a string over `+` and `-`.
pub fn sign_pattern(samples: &[f64], config: &SignChangeConfig) -> String {
    let eps = config.band(samples);
    let mut out = String::new();
    let mut last = None;
    for &v in samples {
        if v.abs() <= eps {
            continue;
        }
        let s = if v > 0.0 { '+' } else { '-' };
        if last != Some(s) {
            out.push(s);
            last = Some(s);
        }
    }
    out
}

/// Number of strict sign alternations after band filtering.
pub fn sign_changes(samples: &[f64], config: &SignChangeConfig) -> usize {
    sign_pattern(samples, config).len().saturating_sub(1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Intersection {
    pub count: usize,
    /// Block signs of `u - reference`, listed outward from the origin.
    pub pattern: String,
}

/// Sign changes of `u - reference` at the cell midpoints.
pub fn intersection_count<F: Fn(f64) -> f64>(
    state: &RadialState,
    reference: F,
    config: &SignChangeConfig,
) -> Intersection {
    let diff = difference(state.grid().midpoints(), state.values(), reference);
    intersection_of(&diff, config)
}

fn difference<F: Fn(f64) -> f64>(mids: &[f64], u: &[f64], reference: F) -> Vec<f64> {
    mids.iter().zip(u).map(|(&r, &v)| v - reference(r)).collect()
}

fn intersection_of(diff: &[f64], config: &SignChangeConfig) -> Intersection {
    let pattern = sign_pattern(diff, config);
    Intersection {
        count: pattern.len().saturating_sub(1),
        pattern,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SturmianReport {
    pub times: Vec<f64>,
    pub counts: Vec<usize>,
    pub patterns: Vec<String>,
    pub nonincreasing: bool,
}

impl SturmianReport {
    /// `N(t) = n` with the given pattern at every sample.
    pub fn constant(&self, n: usize, pattern: &str) -> bool {
        self.counts.iter().all(|&c| c == n) && self.patterns.iter().all(|p| p == pattern)
    }
}

/// `N(t)` of a run against a reference family `reference(r, t)`.
pub fn sturmian_monotonicity<F: Fn(f64, f64) -> f64>(
    traj: &Trajectory,
    reference: F,
    config: &SignChangeConfig,
) -> Result<SturmianReport> {
    if traj.snapshots.len() < 3 || traj.snapshots.len() != traj.times.len() {
        return Err(Error::Degenerate("need snapshots at ≥ 3 times".into()));
    }
    let mids = traj.grid.midpoints();
    let mut counts = Vec::with_capacity(traj.times.len());
    let mut patterns = Vec::with_capacity(traj.times.len());
    for (&t, u) in traj.times.iter().zip(&traj.snapshots) {
        let diff = difference(mids, u, |r| reference(r, t));
        let i = intersection_of(&diff, config);
        counts.push(i.count);
        patterns.push(i.pattern);
    }
    let nonincreasing = counts.windows(2).all(|w| w[1] <= w[0]);
    Ok(SturmianReport {
        times: traj.times.clone(),
        counts,
        patterns,
        nonincreasing,
    })
}

/// Delays bracketing a run between two same-mass Barenblatt solutions.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeOnceDelays {
    pub c: f64,
    pub t1: f64,
    pub t2: f64,
    /// Against `B(·, t + t1; C)`; pattern `-+`.
    pub inner: SturmianReport,
    /// Against `B(·, t + t2; C)`; pattern `+-`.
    pub outer: SturmianReport,
}

/// Scans `count` logarithmically spaced delays in `[lo, hi]` for the
/// smallest `t1` with `N ≡ 1` and pattern `-+`, and the largest `t2` with
/// `N ≡ 1` and pattern `+-`. `C` matches the run's initial d-mass.
pub fn change_once_delays(
    traj: &Trajectory,
    delay_range: (f64, f64),
    count: usize,
    config: &SignChangeConfig,
    quad: &Quadrature,
) -> Result<ChangeOnceDelays> {
    let (lo, hi) = delay_range;
    if !(lo > 0.0 && hi > lo) || count < 2 {
        return Err(Error::InvalidArgument("delay grid needs 0 < lo < hi and ≥ 2 points".into()));
    }
    let mass = *traj
        .d_mass
        .first()
        .ok_or_else(|| Error::Degenerate("empty trajectory".into()))?;
    let probe = BarenblattSpec::new(traj.params, 1.0, lo)?;
    let c = probe.c_for_mass(mass, quad)?;
    let delays: Vec<f64> = (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect();
    let report = |delay: f64| -> Result<SturmianReport> {
        let spec = BarenblattSpec::new(traj.params, c, delay)?;
        sturmian_monotonicity(traj, |r, t| spec.eval(r, t).unwrap_or(f64::NAN), config)
    };
    let mut inner = None;
    for &d in &delays {
        let rep = report(d)?;
        if rep.constant(1, "-+") {
            inner = Some((d, rep));
            break;
        }
    }
    let mut outer = None;
    for &d in delays.iter().rev() {
        let rep = report(d)?;
        if rep.constant(1, "+-") {
            outer = Some((d, rep));
            break;
        }
    }
    match (inner, outer) {
        (Some((t1, inner)), Some((t2, outer))) if t1 < t2 => Ok(ChangeOnceDelays {
            c,
            t1,
            t2,
            inner,
            outer,
        }),
        (i, o) => Err(Error::NonConvergence(format!(
            "delay search in [{lo}, {hi}] found t1 = {:?}, t2 = {:?}",
            i.map(|x| x.0),
            o.map(|x| x.0)
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::EquationParams;
    use crate::solver1d::{build_grid, project};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn abs(eps: f64) -> SignChangeConfig {
        SignChangeConfig::absolute(eps).unwrap()
    }

    #[test]
    fn counting_examples() {
        assert_eq!(sign_changes(&[1.0, -1.0, 1.0], &abs(0.0)), 2);
        assert_eq!(sign_changes(&[1.0, 2.0, 3.0], &abs(0.0)), 0);
        assert_eq!(sign_changes(&[1.0, 1e-15, -1.0], &abs(1e-12)), 1);
        assert_eq!(sign_changes(&[], &abs(0.0)), 0);
        assert_eq!(sign_changes(&[0.0, 0.0], &abs(0.0)), 0);
        assert_eq!(sign_pattern(&[-1.0, 0.0, 2.0, 3.0, -0.5], &abs(0.0)), "-+-");
        assert!(SignChangeConfig::absolute(-1.0).is_err());
    }

    #[test]
    fn intersection_examples() {
        let p = EquationParams::new(3, 3.0, 4.0).unwrap();
        let grid = Arc::new(build_grid(6.0, 600, p.d()).unwrap());
        let b = BarenblattSpec::new(p, 1.0, 1.0).unwrap();
        let s = project(b.profile_at(1.0).unwrap(), grid.clone(), 1.0).unwrap();
        let cfg = SignChangeConfig::default();
        assert_eq!(intersection_count(&s, b.profile_at(1.0).unwrap(), &cfg).count, 0);

        let quad = Quadrature::default();
        let mass = b.d_mass(1.0, &quad).unwrap();
        let narrow = BarenblattSpec::new(p, 1.0, 0.1).unwrap();
        let c = narrow.c_for_mass(mass, &quad).unwrap();
        assert!((c - 1.0).abs() < 1e-6);
        let narrow = narrow.with_c(c).unwrap();
        let i = intersection_count(&s, narrow.profile_at(0.1).unwrap(), &cfg);
        assert_eq!(i.count, 1);
        assert_eq!(i.pattern, "-+");

        let flat = project(|_| 1.0, grid, 0.0).unwrap();
        let i = intersection_count(&flat, |_| 2.0, &cfg);
        assert_eq!((i.count, i.pattern.as_str()), (0, "-"));
    }

    proptest! {
        #[test]
        fn count_symmetries(w in proptest::collection::vec(-1.0f64..1.0, 0..40), e1 in 0.0f64..0.5, e2 in 0.0f64..0.5) {
            let cfg = abs(e1);
            let n = sign_changes(&w, &cfg);
            let rev: Vec<f64> = w.iter().rev().copied().collect();
            let neg: Vec<f64> = w.iter().map(|v| -v).collect();
            prop_assert_eq!(n, sign_changes(&rev, &cfg));
            prop_assert_eq!(n, sign_changes(&neg, &cfg));
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(sign_changes(&w, &abs(hi)) <= sign_changes(&w, &abs(lo)));
        }
    }
}
