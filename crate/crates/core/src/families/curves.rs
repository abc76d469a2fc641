//! Closed-form curves in ℂ (equivalently planar curves in ℝ²), radius
//! profiles for evolving quadrics, and circles on the unit 3-sphere.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Sector boundaries of the polar catenoid are avoided by this margin.
pub const CATENOID_SECTOR_MARGIN: f64 = 0.05;

/// Value and first two derivatives of a curve at a parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub value: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    /// origin + velocity · s
    Line { origin: Complex64, velocity: Complex64 },
    /// scale · exp(rate · s)
    Exponential { scale: Complex64, rate: Complex64 },
    /// growth · e^{rate s} + decay · e^{−rate s}
    Hyperbolic { growth: Complex64, decay: Complex64, rate: f64 },
    /// center + radius · e^{i(rate s + phase)}
    Circle { center: Complex64, radius: f64, rate: f64, phase: f64 },
    /// ρ(φ) e^{iφ} with ρ = (c / sin nφ)^{1/n}; the parameter is the polar angle.
    PolarCatenoid { n: usize, c: f64 },
    /// Cubic spline through tabulated points, not-a-knot ends.
    Spline { knots: Vec<f64>, points: Vec<Complex64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    spec: CurveSpec,
    moments: Vec<Complex64>,
}

impl CurveSpec {
    pub fn build(&self) -> Result<Curve> {
        let moments = match self {
            CurveSpec::PolarCatenoid { n, c } => {
                if *n == 0 {
                    return Err(Error::Spec("catenoid curve needs n >= 1".into()));
                }
                if *c == 0.0 {
                    return Err(Error::Spec("catenoid constant c must be nonzero".into()));
                }
                Vec::new()
            }
            CurveSpec::Spline { knots, points } => spline_moments(knots, points)?,
            CurveSpec::Circle { radius, .. } if *radius <= 0.0 => {
                return Err(Error::Spec("circle radius must be positive".into()));
            }
            _ => Vec::new(),
        };
        Ok(Curve { spec: self.clone(), moments })
    }
}

impl Curve {
    pub fn spec(&self) -> &CurveSpec {
        &self.spec
    }

    pub fn eval(&self, s: f64) -> CurvePoint {
        let i = Complex64::i();
        match &self.spec {
            CurveSpec::Line { origin, velocity } => {
                CurvePoint { value: origin + velocity * s, d1: *velocity, d2: Complex64::new(0.0, 0.0) }
            }
            CurveSpec::Exponential { scale, rate } => {
                let v = scale * (rate * s).exp();
                CurvePoint { value: v, d1: rate * v, d2: rate * rate * v }
            }
            CurveSpec::Hyperbolic { growth, decay, rate } => {
                let g = growth * (rate * s).exp();
                let d = decay * (-rate * s).exp();
                CurvePoint { value: g + d, d1: (g - d) * rate, d2: (g + d) * (rate * rate) }
            }
            CurveSpec::Circle { center, radius, rate, phase } => {
                let e = Complex64::from_polar(*radius, rate * s + phase);
                CurvePoint { value: center + e, d1: i * rate * e, d2: -(rate * rate) * e }
            }
            CurveSpec::PolarCatenoid { n, c } => {
                let nf = *n as f64;
                let sn = (nf * s).sin();
                let cot = (nf * s).cos() / sn;
                let rho = (c / sn).powf(1.0 / nf);
                // (ln ρ)' = −cot nφ, (ln ρ)'' = n csc² nφ
                let rho1 = -rho * cot;
                let rho2 = rho * (cot * cot + nf / (sn * sn));
                let e = Complex64::from_polar(1.0, s);
                CurvePoint {
                    value: rho * e,
                    d1: (rho1 + i * rho) * e,
                    d2: (rho2 - rho + i * 2.0 * rho1) * e,
                }
            }
            CurveSpec::Spline { knots, points } => spline_eval(knots, points, &self.moments, s),
        }
    }
}

/// φ-interval of the given angular sector, shrunk away from the boundary rays.
///
/// Sector k is (kπ/n, (k+1)π/n), on which sin nφ has the sign (−1)^k; the
/// radicand c / sin nφ is positive only when that sign matches c.
pub fn catenoid_interval(n: usize, c: f64, sector: usize) -> Result<(f64, f64)> {
    if n == 0 || c == 0.0 {
        return Err(Error::Spec("catenoid needs n >= 1 and c != 0".into()));
    }
    if sector >= 2 * n {
        return Err(Error::Spec(format!("sector {sector} out of range 0..{}", 2 * n)));
    }
    let sector_sign = if sector.is_multiple_of(2) { 1.0 } else { -1.0 };
    if sector_sign * c < 0.0 {
        return Err(Error::Domain(format!("sector {sector} is empty for c = {c}")));
    }
    let width = PI / n as f64;
    let lo = sector as f64 * width + CATENOID_SECTOR_MARGIN;
    let hi = (sector + 1) as f64 * width - CATENOID_SECTOR_MARGIN;
    if lo >= hi {
        return Err(Error::Domain("sector narrower than the boundary margin".into()));
    }
    Ok((lo, hi))
}

fn spline_moments(knots: &[f64], points: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = knots.len();
    if n < 4 || points.len() != n {
        return Err(Error::Spec("spline needs at least 4 knots and one point per knot".into()));
    }
    if knots.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Spec("spline knots must be strictly increasing".into()));
    }
    let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    let zero = Complex64::new(0.0, 0.0);
    let mut a = Matrix::<Complex64>::zeros(n, n);
    let mut rhs = vec![zero; n];
    // not-a-knot: third derivative continuous at knots 1 and n−2
    a[(0, 0)] = (-h[1]).into();
    a[(0, 1)] = (h[0] + h[1]).into();
    a[(0, 2)] = (-h[0]).into();
    for i in 1..n - 1 {
        a[(i, i - 1)] = h[i - 1].into();
        a[(i, i)] = (2.0 * (h[i - 1] + h[i])).into();
        a[(i, i + 1)] = h[i].into();
        rhs[i] = ((points[i + 1] - points[i]) / h[i] - (points[i] - points[i - 1]) / h[i - 1]) * 6.0;
    }
    a[(n - 1, n - 3)] = (-h[n - 2]).into();
    a[(n - 1, n - 2)] = (h[n - 3] + h[n - 2]).into();
    a[(n - 1, n - 1)] = (-h[n - 3]).into();
    linalg::solve(&a, &rhs).ok_or_else(|| Error::Spec("singular spline system".into()))
}

fn spline_eval(knots: &[f64], points: &[Complex64], m: &[Complex64], t: f64) -> CurvePoint {
    let last = knots.len() - 2;
    let i = match knots.iter().position(|&k| k > t) {
        Some(0) => 0,
        Some(p) => (p - 1).min(last),
        None => last,
    };
    let h = knots[i + 1] - knots[i];
    let a = knots[i + 1] - t;
    let b = t - knots[i];
    let ci = points[i] - m[i] * (h * h / 6.0);
    let cj = points[i + 1] - m[i + 1] * (h * h / 6.0);
    CurvePoint {
        value: m[i] * (a * a * a / (6.0 * h)) + m[i + 1] * (b * b * b / (6.0 * h)) + ci * (a / h) + cj * (b / h),
        d1: -m[i] * (a * a / (2.0 * h)) + m[i + 1] * (b * b / (2.0 * h)) + (cj - ci) / h,
        d2: m[i] * (a / h) + m[i + 1] * (b / h),
    }
}

/// Positive radius function r(s) for evolving quadrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadiusProfile {
    Constant { value: f64 },
    /// scale · e^{rate s}
    Exponential { scale: f64, rate: f64 },
    /// (k / sin(frequency · s))^{1/n}, the radius of a catenoid with polar
    /// angle `frequency · s / n`.
    Catenoid { k: f64, frequency: f64, n: usize },
}

impl RadiusProfile {
    /// (r, r′, r″) at s.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        match *self {
            RadiusProfile::Constant { value } => (value, 0.0, 0.0),
            RadiusProfile::Exponential { scale, rate } => {
                let r = scale * (rate * s).exp();
                (r, rate * r, rate * rate * r)
            }
            RadiusProfile::Catenoid { k, frequency, n } => {
                let nf = n as f64;
                let sn = (frequency * s).sin();
                let cot = (frequency * s).cos() / sn;
                let r = (k / sn).powf(1.0 / nf);
                let l1 = -(frequency / nf) * cot;
                let l2 = frequency * frequency / (nf * sn * sn);
                (r, r * l1, r * (l1 * l1 + l2))
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, RadiusProfile::Constant { .. })
    }

    /// Checks r > 0 and finite on a sample of the interval.
    pub fn check_positive(&self, interval: (f64, f64)) -> Result<()> {
        if let RadiusProfile::Catenoid { n: 0, .. } = self {
            return Err(Error::Spec("catenoid radius needs n >= 1".into()));
        }
        for i in 0..=256 {
            let s = interval.0 + (interval.1 - interval.0) * i as f64 / 256.0;
            let (r, r1, r2) = self.eval(s);
            if !(r > 0.0) || !r.is_finite() || !r1.is_finite() || !r2.is_finite() {
                return Err(Error::Spec(format!("radius profile not positive and finite at s = {s}")));
            }
        }
        Ok(())
    }
}

/// A circle on the unit sphere S³ ⊂ ℂ²:
/// γ(s) = cos(a)·center + sin(a)·(cos s · u + sin s · v),
/// with (center, u, v) orthonormal in ℝ⁴. a = π/2 gives a great circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereCircle {
    pub center: [Complex64; 2],
    pub u: [Complex64; 2],
    pub v: [Complex64; 2],
    pub angle: f64,
}

/// Real inner product on ℂ² ≅ ℝ⁴.
fn real_dot(a: &[Complex64; 2], b: &[Complex64; 2]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

impl SphereCircle {
    pub fn great_circle() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            center: [Complex64::new(0.0, 1.0), zero],
            u: [one, zero],
            v: [zero, one],
            angle: std::f64::consts::FRAC_PI_2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vs = [&self.center, &self.u, &self.v];
        for (i, a) in vs.iter().enumerate() {
            for (j, b) in vs.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                if (real_dot(a, b) - expected).abs() > 1e-12 {
                    return Err(Error::Spec("sphere circle frame is not orthonormal in R^4".into()));
                }
            }
        }
        Ok(())
    }

    /// (γ, γ′, γ″) at s.
    pub fn eval(&self, s: f64) -> [[Complex64; 2]; 3] {
        let (ca, sa) = (self.angle.cos(), self.angle.sin());
        let (cs, ss) = (s.cos(), s.sin());
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 3];
        for k in 0..2 {
            out[0][k] = self.center[k] * ca + (self.u[k] * cs + self.v[k] * ss) * sa;
            out[1][k] = (-self.u[k] * ss + self.v[k] * cs) * sa;
            out[2][k] = -(self.u[k] * cs + self.v[k] * ss) * sa;
        }
        out
    }
}
