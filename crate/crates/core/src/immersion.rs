//! Parametric patches u ↦ f(u) ∈ ℂⁿ over a box in ℝⁿ, with jets supplied in
//! closed form or by central differences, and the pointwise quantities built
//! from their tangent frames: induced metric, Lagrangian defect, Lagrangian
//! angle and volume element.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circular;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::psherm::{self, CVector, Frame, Signature, DEFAULT_TOL};
use crate::scalar::Real;

/// Default relative step for first derivatives.
pub const FD_STEP_FIRST: f64 = 1e-5;
/// Default relative step for second derivatives.
pub const FD_STEP_SECOND: f64 = 1e-4;

/// Axis-aligned closed box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBox<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

impl<T: Real> ParamBox<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::Domain("box needs lo < hi on every axis".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn unit(n: usize) -> Self {
        Self { lo: vec![T::zero(); n], hi: vec![T::one(); n] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    #[inline]
    pub fn width(&self, axis: usize) -> T {
        self.hi[axis] - self.lo[axis]
    }

    pub fn center(&self) -> Vec<T> {
        self.lo.iter().zip(&self.hi).map(|(&a, &b)| (a + b) * T::lit(0.5)).collect()
    }

    pub fn contains(&self, u: &[T]) -> bool {
        u.len() == self.dim()
            && u.iter().enumerate().all(|(j, &x)| {
                let slack = self.width(j) * T::epsilon() * T::lit(16.0);
                x >= self.lo[j] - slack && x <= self.hi[j] + slack
            })
    }

    /// The box shrunk by `fraction × width` on each side of every axis.
    pub fn shrink(&self, fraction: T) -> Self {
        let lo = (0..self.dim()).map(|j| self.lo[j] + self.width(j) * fraction).collect();
        let hi = (0..self.dim()).map(|j| self.hi[j] - self.width(j) * fraction).collect();
        Self { lo, hi }
    }

    /// Maps a point of [0,1]ⁿ into the box.
    pub fn from_unit(&self, t: &[T]) -> Vec<T> {
        t.iter().enumerate().map(|(j, &s)| self.lo[j] + self.width(j) * s).collect()
    }

    pub fn volume(&self) -> T {
        (0..self.dim()).map(|j| self.width(j)).fold(T::one(), |a, b| a * b)
    }
}

/// Value, first and second partial derivatives of a patch at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    pub value: CVector<T>,
    /// `first[j]` = ∂f/∂u_j.
    pub first: Vec<CVector<T>>,
    /// `second[j][k]` = ∂²f/∂u_j∂u_k.
    pub second: Vec<Vec<CVector<T>>>,
}

pub type EvalFn<T> = Arc<dyn Fn(&[T]) -> Result<CVector<T>> + Send + Sync>;
pub type JetFn<T> = Arc<dyn Fn(&[T]) -> Result<Jet<T>> + Send + Sync>;

#[derive(Clone)]
pub enum JetMode<T> {
    /// Closed-form derivatives.
    Analytic(JetFn<T>),
    /// Central differences with steps relative to the box width per axis.
    FiniteDifference { first: T, second: T },
}

impl<T: Real> JetMode<T> {
    pub fn finite_difference() -> Self {
        JetMode::FiniteDifference { first: T::lit(FD_STEP_FIRST), second: T::lit(FD_STEP_SECOND) }
    }
}

impl<T> fmt::Debug for JetMode<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JetMode::Analytic(_) => f.write_str("Analytic"),
            JetMode::FiniteDifference { first, second } => f
                .debug_struct("FiniteDifference")
                .field("first", first)
                .field("second", second)
                .finish(),
        }
    }
}

/// An immersed patch f: box ⊂ ℝᵏ → ℂⁿ. Immutable and cheap to clone.
#[derive(Clone)]
pub struct ImmersionPatch<T> {
    sig: Signature,
    domain: ParamBox<T>,
    eval: EvalFn<T>,
    jet_mode: JetMode<T>,
    label: String,
    warnings: Vec<String>,
}

impl<T: Real> fmt::Debug for ImmersionPatch<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImmersionPatch")
            .field("label", &self.label)
            .field("sig", &self.sig)
            .field("domain", &self.domain)
            .field("jet_mode", &self.jet_mode)
            .field("warnings", &self.warnings)
            .finish()
    }
}

impl<T: Real> ImmersionPatch<T> {
    pub fn new(
        sig: Signature,
        domain: ParamBox<T>,
        eval: EvalFn<T>,
        jet_mode: JetMode<T>,
        label: impl Into<String>,
    ) -> Self {
        Self { sig, domain, eval, jet_mode, label: label.into(), warnings: Vec::new() }
    }

    /// Patch whose jets are taken from a closed-form jet function.
    pub fn analytic(
        sig: Signature,
        domain: ParamBox<T>,
        jet: impl Fn(&[T]) -> Result<Jet<T>> + Send + Sync + 'static,
        label: impl Into<String>,
    ) -> Self {
        let jet: JetFn<T> = Arc::new(jet);
        let j2 = jet.clone();
        let eval: EvalFn<T> = Arc::new(move |u| Ok(j2(u)?.value));
        Self::new(sig, domain, eval, JetMode::Analytic(jet), label)
    }

    pub fn with_warning(mut self, w: impl Into<String>) -> Self {
        self.warnings.push(w.into());
        self
    }

    #[inline]
    pub fn signature(&self) -> Signature {
        self.sig
    }

    #[inline]
    pub fn domain(&self) -> &ParamBox<T> {
        &self.domain
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn jet_mode(&self) -> &JetMode<T> {
        &self.jet_mode
    }

    pub fn eval_fn(&self) -> EvalFn<T> {
        self.eval.clone()
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.jet_mode, JetMode::Analytic(_))
    }

    /// Same map, derivatives by central differences.
    pub fn to_finite_difference(&self, first: T, second: T) -> Self {
        Self {
            jet_mode: JetMode::FiniteDifference { first, second },
            label: format!("{} (finite differences)", self.label),
            ..self.clone()
        }
    }

    fn check_point(&self, u: &[T]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: u.len() });
        }
        if !self.domain.contains(u) {
            return Err(boundary(u));
        }
        Ok(())
    }

    pub fn evaluate(&self, u: &[T]) -> Result<CVector<T>> {
        self.check_point(u)?;
        (self.eval)(u)
    }

    /// Absolute step per axis for a relative step.
    fn steps(&self, rel: T) -> Vec<T> {
        (0..self.dim()).map(|j| rel * self.domain.width(j)).collect()
    }

    fn offset(u: &[T], shifts: &[(usize, T)]) -> Vec<T> {
        let mut p = u.to_vec();
        for &(j, d) in shifts {
            p[j] += d;
        }
        p
    }

    fn eval_checked(&self, p: &[T], origin: &[T]) -> Result<CVector<T>> {
        if !self.domain.contains(p) {
            return Err(boundary(origin));
        }
        (self.eval)(p)
    }

    fn fd_first(&self, u: &[T], rel: T) -> Result<Vec<CVector<T>>> {
        let h = self.steps(rel);
        (0..self.dim())
            .map(|j| {
                let fp = self.eval_checked(&Self::offset(u, &[(j, h[j])]), u)?;
                let fm = self.eval_checked(&Self::offset(u, &[(j, -h[j])]), u)?;
                Ok((&fp - &fm).scale_real(T::one() / (T::lit(2.0) * h[j])))
            })
            .collect()
    }

    fn fd_second(&self, u: &[T], rel: T, center: &CVector<T>) -> Result<Vec<Vec<CVector<T>>>> {
        let h = self.steps(rel);
        let k = self.dim();
        let mut out = vec![vec![CVector::zeros(center.len()); k]; k];
        for j in 0..k {
            let fp = self.eval_checked(&Self::offset(u, &[(j, h[j])]), u)?;
            let fm = self.eval_checked(&Self::offset(u, &[(j, -h[j])]), u)?;
            let num = &(&fp + &fm) - &center.scale_real(T::lit(2.0));
            out[j][j] = num.scale_real(T::one() / (h[j] * h[j]));
            for l in j + 1..k {
                let fpp = self.eval_checked(&Self::offset(u, &[(j, h[j]), (l, h[l])]), u)?;
                let fpm = self.eval_checked(&Self::offset(u, &[(j, h[j]), (l, -h[l])]), u)?;
                let fmp = self.eval_checked(&Self::offset(u, &[(j, -h[j]), (l, h[l])]), u)?;
                let fmm = self.eval_checked(&Self::offset(u, &[(j, -h[j]), (l, -h[l])]), u)?;
                let num = &(&fpp - &fpm) - &(&fmp - &fmm);
                let d = num.scale_real(T::one() / (T::lit(4.0) * h[j] * h[l]));
                out[j][l] = d.clone();
                out[l][j] = d;
            }
        }
        Ok(out)
    }

    /// Full second-order jet at `u`.
    pub fn jet(&self, u: &[T]) -> Result<Jet<T>> {
        self.check_point(u)?;
        match &self.jet_mode {
            JetMode::Analytic(f) => f(u),
            JetMode::FiniteDifference { first, second } => {
                let value = (self.eval)(u)?;
                let d1 = self.fd_first(u, *first)?;
                let d2 = self.fd_second(u, *second, &value)?;
                Ok(Jet { value, first: d1, second: d2 })
            }
        }
    }

    /// (∂f/∂u_1, …, ∂f/∂u_k) at `u`.
    pub fn tangent_frame(&self, u: &[T]) -> Result<Frame<T>> {
        self.check_point(u)?;
        match &self.jet_mode {
            JetMode::Analytic(f) => Ok(Frame::new(f(u)?.first)),
            JetMode::FiniteDifference { first, .. } => Ok(Frame::new(self.fd_first(u, *first)?)),
        }
    }

    /// Relative margin keeping every finite-difference stencil of this patch
    /// inside the domain.
    pub fn stencil_margin(&self) -> T {
        match &self.jet_mode {
            JetMode::Analytic(_) => T::zero(),
            JetMode::FiniteDifference { first, second } => first.max(*second),
        }
    }
}

fn boundary<T: Real>(u: &[T]) -> Error {
    Error::Boundary { point: u.iter().map(|x| x.to_f64_lossy()).collect() }
}

/// Symmetric Gram matrix g_jk = ⟨X_j, X_k⟩_{2p}.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix<T>(pub Matrix<T>);

impl<T: Real> GramMatrix<T> {
    pub fn of_frame(frame: &Frame<T>, sig: &Signature) -> Self {
        let k = frame.len();
        let mut g = Matrix::zeros(k, k);
        for j in 0..k {
            for l in j..k {
                let v = psherm::metric_raw(&frame.vectors[j].0, &frame.vectors[l].0, sig);
                g[(j, l)] = v;
                g[(l, j)] = v;
            }
        }
        GramMatrix(g)
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn det(&self) -> T {
        linalg::det(&self.0)
    }

    /// Solves g a = b.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        linalg::solve(&self.0, b).ok_or_else(|| Error::Degenerate("singular induced metric".into()))
    }
}

pub fn tangent_frame<T: Real>(patch: &ImmersionPatch<T>, u: &[T]) -> Result<Frame<T>> {
    patch.tangent_frame(u)
}

pub fn induced_metric<T: Real>(patch: &ImmersionPatch<T>, u: &[T]) -> Result<GramMatrix<T>> {
    let frame = patch.tangent_frame(u)?;
    Ok(GramMatrix::of_frame(&frame, &patch.signature()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignatureCounts {
    pub pos: usize,
    pub neg: usize,
    pub null: usize,
}

/// Eigenvalue sign counts of a symmetric matrix with absolute tolerance `tol`.
pub fn metric_signature<T: Real>(g: &GramMatrix<T>, tol: T) -> SignatureCounts {
    let ev = linalg::symmetric_eigenvalues(&g.0);
    let mut c = SignatureCounts { pos: 0, neg: 0, null: 0 };
    for e in ev {
        if e > tol {
            c.pos += 1;
        } else if e < -tol {
            c.neg += 1;
        } else {
            c.null += 1;
        }
    }
    c
}

/// Signature counts with tolerance relative to the largest |g_jk|.
pub fn metric_signature_relative<T: Real>(g: &GramMatrix<T>, rel_tol: T) -> SignatureCounts {
    let scale = g.0.max_abs();
    metric_signature(g, rel_tol * scale)
}

/// max_{j<k} |ω(X_j, X_k)| / (|X_j| |X_k|).
pub fn frame_defect<T: Real>(frame: &Frame<T>, sig: &Signature) -> T {
    let mut worst = T::zero();
    for j in 0..frame.len() {
        for k in j + 1..frame.len() {
            let a = &frame.vectors[j];
            let b = &frame.vectors[k];
            let denom = a.norm() * b.norm();
            if denom == T::zero() {
                continue;
            }
            worst = worst.max(psherm::symplectic_raw(&a.0, &b.0, sig).abs() / denom);
        }
    }
    worst
}

pub fn lagrangian_defect<T: Real>(patch: &ImmersionPatch<T>, u: &[T]) -> Result<T> {
    let frame = patch.tangent_frame(u)?;
    Ok(frame_defect(&frame, &patch.signature()))
}

/// √|det g| of a frame.
pub fn frame_dvol<T: Real>(frame: &Frame<T>, sig: &Signature) -> T {
    GramMatrix::of_frame(frame, sig).det().abs().sqrt()
}

/// √|det g| > 1e−9 × Π|X_j|.
pub fn frame_is_nondegenerate<T: Real>(frame: &Frame<T>, sig: &Signature) -> bool {
    frame_dvol(frame, sig) > T::lit(DEFAULT_TOL) * frame.scale()
}

/// Principal argument of Ω on a frame; errors when |Ω| is below tolerance.
pub fn frame_angle<T: Real>(frame: &Frame<T>, sig: &Signature) -> Result<T> {
    let omega = psherm::hol_volume(frame, sig)?;
    if omega.norm() <= T::lit(DEFAULT_TOL) * frame.scale() {
        return Err(Error::Degenerate(format!(
            "|Ω| = {:e} below tolerance",
            omega.norm().to_f64_lossy()
        )));
    }
    Ok(circular::principal(omega.arg()))
}

pub fn lagrangian_angle_at<T: Real>(patch: &ImmersionPatch<T>, u: &[T]) -> Result<T> {
    let frame = patch.tangent_frame(u)?;
    frame_angle(&frame, &patch.signature())
}

pub fn dvol<T: Real>(patch: &ImmersionPatch<T>, u: &[T]) -> Result<T> {
    let frame = patch.tangent_frame(u)?;
    Ok(frame_dvol(&frame, &patch.signature()))
}

/// Pairwise summation; fixed tree shape, so the result depends only on order.
pub fn pairwise_sum<T: Real>(values: &[T]) -> T {
    match values.len() {
        0 => T::zero(),
        1 => values[0],
        n if n <= 8 => values.iter().fold(T::zero(), |a, &b| a + b),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Cell centres of the midpoint grid in row-major order, and the cell volume.
pub fn midpoint_grid<T: Real>(domain: &ParamBox<T>, grid: &[usize]) -> Result<(Vec<Vec<T>>, T)> {
    if grid.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: grid.len() });
    }
    if grid.contains(&0) {
        return Err(Error::Precondition("grid needs at least one cell per axis".into()));
    }
    let total: usize = grid.iter().product();
    let mut points = Vec::with_capacity(total);
    let mut idx = vec![0usize; grid.len()];
    for _ in 0..total {
        let p = (0..grid.len())
            .map(|j| {
                let frac = (T::lit(idx[j] as f64) + T::lit(0.5)) / T::lit(grid[j] as f64);
                domain.lo[j] + domain.width(j) * frac
            })
            .collect();
        points.push(p);
        for j in (0..grid.len()).rev() {
            idx[j] += 1;
            if idx[j] < grid[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    let cell = (0..grid.len())
        .map(|j| domain.width(j) / T::lit(grid[j] as f64))
        .fold(T::one(), |a, b| a * b);
    Ok((points, cell))
}

/// Tensor-product midpoint quadrature of dvol. Cells are evaluated in
/// parallel; the reduction order is fixed.
pub fn patch_volume<T: Real>(patch: &ImmersionPatch<T>, grid: &[usize]) -> Result<T> {
    let (points, cell) = midpoint_grid(patch.domain(), grid)?;
    let values: Vec<T> = points
        .par_iter()
        .map(|u| dvol(patch, u))
        .collect::<Result<Vec<T>>>()?;
    Ok(pairwise_sum(&values) * cell)
}

/// Sequential variant of [`patch_volume`]; bitwise identical result.
pub fn patch_volume_serial<T: Real>(patch: &ImmersionPatch<T>, grid: &[usize]) -> Result<T> {
    let (points, cell) = midpoint_grid(patch.domain(), grid)?;
    let values: Vec<T> = points.iter().map(|u| dvol(patch, u)).collect::<Result<Vec<T>>>()?;
    Ok(pairwise_sum(&values) * cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn flat(sig: Signature) -> ImmersionPatch<f64> {
        let n = sig.n();
        ImmersionPatch::analytic(
            sig,
            ParamBox::unit(n),
            move |u: &[f64]| {
                Ok(Jet {
                    value: CVector::from_real(u),
                    first: (0..n).map(|j| CVector::basis(n, j)).collect(),
                    second: vec![vec![CVector::zeros(n); n]; n],
                })
            },
            "flat",
        )
    }

    fn complex_line() -> ImmersionPatch<f64> {
        let sig = Signature::new(0, 2).unwrap();
        let eval: EvalFn<f64> = Arc::new(|u: &[f64]| {
            Ok(CVector(vec![Complex::new(u[0], u[1]), Complex::new(0.0, 0.0)]))
        });
        ImmersionPatch::new(sig, ParamBox::unit(2), eval, JetMode::finite_difference(), "line")
    }

    #[test]
    fn flat_frame_and_metric() {
        let sig = Signature::new(1, 3).unwrap();
        let p = flat(sig);
        let u = [0.2, 0.5, 0.9];
        let f = tangent_frame(&p, &u).unwrap();
        assert_eq!(f, Frame::canonical(3));
        let g = induced_metric(&p, &u).unwrap();
        assert_eq!(g.0, Matrix::diagonal(&[-1.0, 1.0, 1.0]));
        assert_eq!(metric_signature(&g, 1e-12), SignatureCounts { pos: 2, neg: 1, null: 0 });
        assert_eq!(lagrangian_defect(&p, &u).unwrap(), 0.0);
        assert_eq!(lagrangian_angle_at(&p, &u).unwrap(), 0.0);
        assert_eq!(dvol(&p, &u).unwrap(), 1.0);
    }

    #[test]
    fn flat_unit_box_volume() {
        let p = flat(Signature::new(0, 2).unwrap());
        assert!((patch_volume(&p, &[8, 8]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn metric_signature_small_cases() {
        let g = GramMatrix(Matrix::diagonal(&[-1.0, 1.0]));
        assert_eq!(metric_signature(&g, 1e-9), SignatureCounts { pos: 1, neg: 1, null: 0 });
        let z = GramMatrix(Matrix::<f64>::zeros(3, 3));
        assert_eq!(metric_signature(&z, 1e-9), SignatureCounts { pos: 0, neg: 0, null: 3 });
    }

    #[test]
    fn complex_line_is_symplectic() {
        let p = complex_line();
        let d = lagrangian_defect(&p, &[0.5, 0.5]).unwrap();
        assert!((d - 1.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn fd_stencil_leaving_domain_errors() {
        let p = complex_line();
        assert!(matches!(p.tangent_frame(&[0.0, 0.5]), Err(Error::Boundary { .. })));
        assert!(matches!(p.tangent_frame(&[1.5, 0.5]), Err(Error::Boundary { .. })));
    }

    #[test]
    fn serial_and_parallel_volume_agree_bitwise() {
        let p = complex_line();
        let a = patch_volume(&p, &[7, 9]).unwrap();
        let b = patch_volume_serial(&p, &[7, 9]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn degenerate_angle_errors() {
        let sig = Signature::new(0, 2).unwrap();
        let frame = Frame::new(vec![CVector::<f64>::basis(2, 0), CVector::basis(2, 0)]);
        assert!(matches!(frame_angle(&frame, &sig), Err(Error::Degenerate(_))));
        assert!(!frame_is_nondegenerate(&frame, &sig));
    }
}
