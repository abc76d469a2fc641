//! Real quadrics S = {x ∈ ℝⁿ : ⟨x, Mx⟩_p = c}: rejection sampling and graph
//! charts with closed-form first and second derivatives.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::groups::check_self_adjoint;
use crate::linalg::{self, Matrix};
use crate::psherm::Signature;

/// Admissible residual of the quadric equation.
pub const QUADRIC_TOL: f64 = 1e-10;
pub const DEFAULT_CHART_HALF_WIDTH: f64 = 0.5;
const SAMPLING_ATTEMPTS: usize = 1_000_000;

/// A = GM, symmetric when M is self-adjoint; the quadric is xᵀAx = c.
fn form_matrix(m: &Matrix<f64>, sig: &Signature) -> Result<Matrix<f64>> {
    if !m.is_square() || m.rows() != sig.n() {
        return Err(Error::DimensionMismatch { expected: sig.n(), got: m.rows() });
    }
    let residual = check_self_adjoint(m, sig);
    if residual > QUADRIC_TOL {
        return Err(Error::Spec(format!("M is not self-adjoint for the form: residual {residual:e}")));
    }
    let a = &sig.gram::<f64>() * m;
    // symmetrize away rounding
    Ok(Matrix::from_fn(a.rows(), a.cols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)])))
}

fn quad(a: &Matrix<f64>, x: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    ax.iter().zip(x).map(|(p, q)| p * q).sum()
}

fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Seeded points on the quadric by rejection with rescaling from the unit sphere.
pub fn sample_quadric(m: &Matrix<f64>, c: f64, sig: &Signature, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if c == 0.0 {
        return Err(Error::Sampling("sampling the cone c = 0 is not supported".into()));
    }
    let a = form_matrix(m, sig)?;
    let n = sig.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > SAMPLING_ATTEMPTS {
            return Err(Error::Sampling(format!("no admissible directions found for c = {c}; quadric may be empty")));
        }
        let mut y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let r = euclid(&y);
        if r == 0.0 {
            continue;
        }
        y.iter_mut().for_each(|v| *v /= r);
        let q = quad(&a, &y);
        // reject near-null directions, whose rescaling is unbounded
        if q.signum() != c.signum() || q.abs() < 1e-6 {
            continue;
        }
        let k = (c / q).sqrt();
        out.push(y.into_iter().map(|v| v * k).collect());
    }
    Ok(out)
}

/// Deterministic points on the quadric, from coordinate directions and
/// directions at multiples of π/12 in each coordinate plane, ordered by
/// decreasing |⟨y, My⟩_p| of the unit direction.
pub fn center_candidates(m: &Matrix<f64>, c: f64, sig: &Signature) -> Result<Vec<Vec<f64>>> {
    if c == 0.0 {
        return Err(Error::Spec("a chart center must be given for c = 0".into()));
    }
    let a = form_matrix(m, sig)?;
    let n = sig.n();
    let mut dirs = Vec::new();
    for j in 0..n {
        dirs.push((0..n).map(|k| if k == j { 1.0 } else { 0.0 }).collect::<Vec<f64>>());
    }
    for j in 0..n {
        for k in j + 1..n {
            for step in 1..12 {
                if step == 6 {
                    continue;
                }
                let th = std::f64::consts::PI * step as f64 / 12.0;
                dirs.push((0..n).map(|l| if l == j { th.cos() } else if l == k { th.sin() } else { 0.0 }).collect());
            }
        }
    }
    let mut scored: Vec<(f64, Vec<f64>)> = dirs
        .into_iter()
        .filter_map(|y| {
            let q = quad(&a, &y);
            (q.signum() == c.signum() && q.abs() > 1e-9).then(|| {
                let k = (c / q).sqrt();
                (q.abs(), y.into_iter().map(|v| v * k).collect())
            })
        })
        .collect();
    if scored.is_empty() {
        return Err(Error::Domain(format!("quadric with c = {c} has no point along the candidate directions")));
    }
    // stable: ties keep generation order
    scored.sort_by(|x, y| y.0.total_cmp(&x.0));
    Ok(scored.into_iter().map(|(_, x)| x).collect())
}

/// The first of [`center_candidates`].
pub fn default_center(m: &Matrix<f64>, c: f64, sig: &Signature) -> Result<Vec<f64>> {
    Ok(center_candidates(m, c, sig)?.remove(0))
}

/// Point of a chart with its derivatives with respect to the chart parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    pub x: Vec<f64>,
    /// `first[i]` = ∂x/∂t_i.
    pub first: Vec<Vec<f64>>,
    /// `second[i][j]` = ∂²x/∂t_i∂t_j.
    pub second: Vec<Vec<Vec<f64>>>,
}

/// Graph chart: the free coordinates move linearly, the solved coordinate
/// follows from the quadric equation. Oriented so that det_ℝ(x, ∂x/∂t) > 0 at
/// the chart center.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadricChart {
    m: Matrix<f64>,
    a: Matrix<f64>,
    c: f64,
    sig: Signature,
    center: Vec<f64>,
    solved: usize,
    free: Vec<usize>,
    /// ±1 per chart parameter.
    orientation: Vec<f64>,
    half_width: f64,
}

impl QuadricChart {
    pub fn m(&self) -> &Matrix<f64> {
        &self.m
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    /// Center, projected onto the quadric.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Index of the coordinate solved for.
    pub fn solved_coordinate(&self) -> usize {
        self.solved
    }

    fn free_coords(&self, t: &[f64]) -> Vec<f64> {
        let mut x = self.center.clone();
        for (i, &j) in self.free.iter().enumerate() {
            x[j] += self.orientation[i] * t[i];
        }
        x
    }

    fn solve_coordinate(&self, mut x: Vec<f64>) -> Result<Vec<f64>> {
        let k = self.solved;
        let akk = self.a[(k, k)];
        let mut b = 0.0;
        let mut rest = 0.0;
        for i in 0..x.len() {
            if i == k {
                continue;
            }
            b += self.a[(k, i)] * x[i];
            for j in 0..x.len() {
                if j != k {
                    rest += self.a[(i, j)] * x[i] * x[j];
                }
            }
        }
        // akk x² + 2 b x + (rest − c) = 0
        let target = self.center[k];
        let scale = self.a.max_abs();
        let root = if akk.abs() <= 1e-12 * scale {
            if b == 0.0 {
                return Err(Error::Domain("chart leaves the quadric".into()));
            }
            (self.c - rest) / (2.0 * b)
        } else {
            let disc = b * b - akk * (rest - self.c);
            if disc < 0.0 {
                return Err(Error::Domain("chart leaves the quadric".into()));
            }
            let r1 = (-b + disc.sqrt()) / akk;
            let r2 = (-b - disc.sqrt()) / akk;
            if (r1 - target).abs() <= (r2 - target).abs() { r1 } else { r2 }
        };
        x[k] = root;
        let grad = 2.0 * self.a.mul_vec(&x)[k];
        if grad != 0.0 {
            x[k] -= (quad(&self.a, &x) - self.c) / grad;
        }
        Ok(x)
    }

    pub fn point(&self, t: &[f64]) -> Result<Vec<f64>> {
        if t.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: t.len() });
        }
        self.solve_coordinate(self.free_coords(t))
    }

    /// Point with first and second derivatives by implicit differentiation.
    pub fn eval(&self, t: &[f64]) -> Result<ChartPoint> {
        let x = self.point(t)?;
        let n = x.len();
        let k = self.solved;
        let grad: Vec<f64> = self.a.mul_vec(&x).into_iter().map(|v| 2.0 * v).collect();
        if grad[k].abs() <= 1e-12 * euclid(&grad) {
            return Err(Error::Degenerate("solved coordinate has vanishing partial".into()));
        }
        let mut first = Vec::with_capacity(self.dim());
        for (i, &j) in self.free.iter().enumerate() {
            let mut d = vec![0.0; n];
            d[j] = self.orientation[i];
            d[k] = -grad[j] * self.orientation[i] / grad[k];
            first.push(d);
        }
        // F(x(t)) = c twice differentiated: 2 x_iᵀ A x_j + F_k x_k,ij = 0
        let mut second = vec![vec![vec![0.0; n]; self.dim()]; self.dim()];
        for i in 0..self.dim() {
            let ai = self.a.mul_vec(&first[i]);
            for j in i..self.dim() {
                let q: f64 = ai.iter().zip(&first[j]).map(|(p, q)| p * q).sum();
                let v = -2.0 * q / grad[k];
                second[i][j][k] = v;
                second[j][i][k] = v;
            }
        }
        Ok(ChartPoint { x, first, second })
    }

    /// Chart parameters of a quadric point, if it lies in the chart box.
    pub fn inverse(&self, x: &[f64]) -> Option<Vec<f64>> {
        if x.len() != self.center.len() {
            return None;
        }
        let t: Vec<f64> =
            self.free.iter().enumerate().map(|(i, &j)| self.orientation[i] * (x[j] - self.center[j])).collect();
        if t.iter().any(|v| v.abs() > self.half_width * (1.0 + 1e-12)) {
            return None;
        }
        let y = self.point(&t).ok()?;
        let err = euclid(&y.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>());
        (err <= 1e-8 * (1.0 + euclid(x))).then_some(t)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        let per_axis = 5usize;
        let total = per_axis.pow(d as u32);
        for idx in 0..total {
            let mut rem = idx;
            let t: Vec<f64> = (0..d)
                .map(|_| {
                    let a = rem % per_axis;
                    rem /= per_axis;
                    -self.half_width + 2.0 * self.half_width * a as f64 / (per_axis - 1) as f64
                })
                .collect();
            let p = self.eval(&t)?;
            let resid = (quad(&self.a, &p.x) - self.c).abs();
            if resid > QUADRIC_TOL * (1.0 + self.c.abs()) {
                return Err(Error::Domain(format!("chart residual {resid:e} above tolerance")));
            }
        }
        Ok(())
    }
}

/// Graph chart of the quadric around `center`, on the box [−h, h]^{n−1}.
///
/// The half-width is halved until the chart is valid on a sample grid.
pub fn quadric_chart(
    m: &Matrix<f64>,
    c: f64,
    sig: &Signature,
    center: &[f64],
    half_width: Option<f64>,
) -> Result<QuadricChart> {
    let n = sig.n();
    if n < 2 {
        return Err(Error::Precondition("quadric charts need n >= 2".into()));
    }
    if center.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: center.len() });
    }
    let a = form_matrix(m, sig)?;
    let grad = a.mul_vec(center);
    let norm = euclid(&grad);
    if norm <= 1e-12 * (1.0 + euclid(center)) {
        return Err(Error::Degenerate("defining function has vanishing gradient at the chart center".into()));
    }
    let solved = (0..n).fold(0, |best, j| if grad[j].abs() > grad[best].abs() { j } else { best });
    let free: Vec<usize> = (0..n).filter(|&j| j != solved).collect();
    let mut chart = QuadricChart {
        m: m.clone(),
        a,
        c,
        sig: *sig,
        center: center.to_vec(),
        solved,
        free,
        orientation: vec![1.0; n - 1],
        half_width: half_width.unwrap_or(DEFAULT_CHART_HALF_WIDTH),
    };
    if !(chart.half_width > 0.0) {
        return Err(Error::Spec("chart half-width must be positive".into()));
    }
    chart.center = chart.point(&vec![0.0; n - 1])?;
    let p = chart.eval(&vec![0.0; n - 1])?;
    let mut rows = vec![p.x.clone()];
    rows.extend(p.first.iter().cloned());
    if linalg::det(&Matrix::from_rows(&rows)) < 0.0 {
        chart.orientation[0] = -1.0;
    }
    for _ in 0..20 {
        match chart.validate() {
            Ok(()) => return Ok(chart),
            Err(_) => chart.half_width *= 0.5,
        }
    }
    Err(Error::Domain("no valid chart half-width found".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyperbola() -> (Matrix<f64>, Signature) {
        (Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]), Signature::new(1, 2).unwrap())
    }

    #[test]
    fn identity_quadric_is_unit_sphere() {
        let sig = Signature::new(0, 3).unwrap();
        let pts = sample_quadric(&Matrix::identity(3), 1.0, &sig, 50, 1).unwrap();
        for x in pts {
            assert!((euclid(&x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hyperbola_samples() {
        let (m, sig) = hyperbola();
        let pts = sample_quadric(&m, 2.0, &sig, 200, 3).unwrap();
        for x in pts {
            // 2 x1 x2 = c, i.e. x2 = 1/x1
            assert!((x[0] * x[1] - 1.0).abs() < 1e-10);
        }
        assert!(matches!(sample_quadric(&m, 0.0, &sig, 1, 0), Err(Error::Sampling(_))));
    }

    #[test]
    fn chart_derivatives_match_finite_differences() {
        let cases = [
            (Matrix::identity(3), 1.0, Signature::new(0, 3).unwrap()),
            (Matrix::identity(3), -1.0, Signature::new(1, 3).unwrap()),
            (Matrix::from_rows(&[[2.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, -1.0]]), 1.0, Signature::new(0, 3).unwrap()),
        ];
        for (m, c, sig) in cases {
            let center = default_center(&m, c, &sig).unwrap();
            let chart = quadric_chart(&m, c, &sig, &center, None).unwrap();
            let t = vec![0.13, -0.21];
            let p = chart.eval(&t).unwrap();
            let h = 1e-6;
            for i in 0..2 {
                let mut tp = t.clone();
                let mut tm = t.clone();
                tp[i] += h;
                tm[i] -= h;
                let pp = chart.eval(&tp).unwrap();
                let pm = chart.eval(&tm).unwrap();
                for r in 0..3 {
                    assert!(((pp.x[r] - pm.x[r]) / (2.0 * h) - p.first[i][r]).abs() < 1e-7);
                    for j in 0..2 {
                        let d = (pp.first[j][r] - pm.first[j][r]) / (2.0 * h);
                        assert!((d - p.second[i][j][r]).abs() < 1e-7);
                    }
                }
            }
        }
    }

    #[test]
    fn chart_is_oriented_and_invertible() {
        let (m, sig) = hyperbola();
        let center = default_center(&m, 2.0, &sig).unwrap();
        assert!((center[0] - 1.0).abs() < 1e-15 && (center[1] - 1.0).abs() < 1e-15);
        let chart = quadric_chart(&m, 2.0, &sig, &center, None).unwrap();
        let p = chart.eval(&[0.0]).unwrap();
        assert!(p.x[0] * p.first[0][1] - p.x[1] * p.first[0][0] > 0.0);
        let x = chart.point(&[0.3]).unwrap();
        let t = chart.inverse(&x).unwrap();
        assert!((t[0] - 0.3).abs() < 1e-14);
        assert!(chart.inverse(&[-1.0, -1.0]).is_none());
        assert!(chart.inverse(&[1.2, 1.0]).is_none());
    }

    #[test]
    fn vanishing_gradient_is_rejected() {
        let sig = Signature::new(0, 2).unwrap();
        let r = quadric_chart(&Matrix::identity(2), 1.0, &sig, &[0.0, 0.0], None);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn empty_quadric_has_no_center() {
        let sig = Signature::new(0, 2).unwrap();
        assert!(default_center(&Matrix::identity(2), -1.0, &sig).is_err());
    }
}
