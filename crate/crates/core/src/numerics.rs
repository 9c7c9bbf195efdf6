//! Small numerical helpers shared by the modules: radial quadrature,
//! bracketing root finding, golden-section search and a log-log line fit.

use crate::error::{Error, Result};

/// Grading power used to cluster quadrature nodes at endpoints where the
/// integrand has a fractional-power singularity.
const GRADING: i32 = 4;

/// Relative cutoff for truncating power or Gaussian tails.
pub const TAIL_CUTOFF: f64 = 1e-14;

/// Settings for the radial moment quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Simpson cells per sub-interval; at least 64.
    pub cells: usize,
    /// Maximum relative difference between the `cells` and `2·cells` results.
    pub rel_tol: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            cells: 1024,
            rel_tol: 1e-9,
        }
    }
}

impl Quadrature {
    pub fn with_cells(cells: usize) -> Self {
        Self {
            cells,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.cells < 64 {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs at least 64 cells, got {}",
                self.cells
            )));
        }
        Ok(())
    }

    /// `∫_0^edge f(r) r^w dr` for `f` with a fractional-power cusp at `edge`
    /// and a possibly fractional weight at the origin.
    pub fn compact<F: Fn(f64) -> f64>(&self, f: F, weight: f64, edge: f64) -> Result<f64> {
        self.validate()?;
        let coarse = compact_simpson(&f, weight, edge, even(self.cells));
        let fine = compact_simpson(&f, weight, edge, even(2 * self.cells));
        self.check(coarse, fine)
    }

    /// `∫_0^∞ f(r) r^w dr` for a decaying `f` with characteristic radius
    /// `scale`. The tail is cut where the integrand drops below
    /// [`TAIL_CUTOFF`] of its peak; panels grow geometrically.
    pub fn unbounded<F: Fn(f64) -> f64>(&self, f: F, weight: f64, scale: f64) -> Result<f64> {
        self.validate()?;
        let coarse = unbounded_simpson(&f, weight, scale, even(self.cells))?;
        let fine = unbounded_simpson(&f, weight, scale, even(2 * self.cells))?;
        self.check(coarse, fine)
    }

    fn check(&self, coarse: f64, fine: f64) -> Result<f64> {
        let scale = fine.abs().max(f64::MIN_POSITIVE);
        if (fine - coarse).abs() > self.rel_tol * scale {
            return Err(Error::NonConvergence(format!(
                "quadrature refinements differ: {coarse:e} vs {fine:e}"
            )));
        }
        Ok(fine)
    }
}

fn even(n: usize) -> usize {
    n + n % 2
}

/// Composite Simpson on `[a, b]` with `cells` (even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cells: usize) -> f64 {
    let cells = even(cells.max(2));
    let h = (b - a) / cells as f64;
    let mut sum = f(a) + f(b);
    for i in 1..cells {
        let x = a + h * i as f64;
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    sum * h / 3.0
}

fn graded_from_zero<F: Fn(f64) -> f64>(f: &F, weight: f64, len: f64, cells: usize) -> f64 {
    // r = len·x^m clusters nodes at the origin.
    let m = GRADING as f64;
    simpson(
        |x| {
            if x == 0.0 {
                return 0.0;
            }
            let r = len * x.powi(GRADING);
            f(r) * r.powf(weight) * len * m * x.powi(GRADING - 1)
        },
        0.0,
        1.0,
        cells,
    )
}

fn compact_simpson<F: Fn(f64) -> f64>(f: &F, weight: f64, edge: f64, cells: usize) -> f64 {
    let half = 0.5 * edge;
    let inner = graded_from_zero(f, weight, half, cells);
    // r = edge - half·y^m clusters nodes at the free boundary.
    let m = GRADING as f64;
    let outer = simpson(
        |y| {
            if y == 0.0 {
                return 0.0;
            }
            let r = edge - half * y.powi(GRADING);
            f(r) * r.powf(weight) * half * m * y.powi(GRADING - 1)
        },
        0.0,
        1.0,
        cells,
    );
    inner + outer
}

fn unbounded_simpson<F: Fn(f64) -> f64>(
    f: &F,
    weight: f64,
    scale: f64,
    cells: usize,
) -> Result<f64> {
    let mut total = graded_from_zero(f, weight, scale, cells);
    // Peak of the log-variable integrand r·f(r)·r^w over the core region.
    let log_integrand = |y: f64| {
        let r = y.exp();
        f(r) * r.powf(weight + 1.0)
    };
    let mut peak = (1..=16)
        .map(|i| {
            let r = scale * i as f64 / 16.0;
            f(r) * r.powf(weight + 1.0)
        })
        .fold(0.0_f64, f64::max);
    let per_panel = even((cells / 4).max(16));
    let step = std::f64::consts::LN_2;
    let mut y = scale.ln();
    for panel in 0..1000 {
        let part = simpson(log_integrand, y, y + step, per_panel);
        total += part;
        y += step;
        let end = log_integrand(y);
        peak = peak.max(end);
        if panel >= 4 && end.abs() <= TAIL_CUTOFF * peak {
            return Ok(total);
        }
        if !y.exp().is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence(
        "tail did not decay below the truncation cutoff".into(),
    ))
}

/// Bisection on a sign-changing bracket.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NonConvergence(format!(
            "bracket [{lo}, {hi}] does not change sign"
        )));
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol * mid.abs().max(1e-300) {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimization of a unimodal function on `[a, b]`, to a
/// relative tolerance on the abscissa. Returns `(argmin, min)`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if (b - a).abs() <= rel_tol * 0.5 * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Ordinary least-squares line `y = a + b x`. Returns `(slope, intercept,
/// standard error of the slope)`.
pub fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let se = if xs.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, se)
}

/// Piecewise-linear interpolation on increasing abscissae; clamps outside.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let k = xs.partition_point(|&v| v <= x).saturating_sub(1).min(last - 1);
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + t * (ys[k + 1] - ys[k])
}
