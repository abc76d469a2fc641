//! Mean curvature by two independent routes.
//!
//! * [`mean_curvature_sff`] traces the normal part of the second derivatives
//!   against the inverse induced metric. It is the reference value.
//! * [`mean_curvature_angle`] differentiates the Lagrangian angle and returns
//!   (1/n) J∇β, valid on Lagrangian patches only.
//!
//! Normal projection in indefinite signature uses the Gram solve g a = ⟨V, X⟩
//! rather than an orthonormal normal frame, which may not exist when normals
//! are null-adapted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circular;
use crate::error::{Error, Result};
use crate::immersion::{frame_angle, frame_defect, GramMatrix, ImmersionPatch};
use crate::psherm::{self, apply_j, CVector, Frame, Signature};
use crate::scalar::Real;

/// Relative step of the 5-point stencil used on β.
pub const ANGLE_STENCIL_STEP: f64 = 1e-3;
/// Lagrangian defect above which the angle route refuses to run.
pub const LAGRANGIAN_TOL: f64 = 1e-9;

fn tangential_coeffs<T: Real>(v: &CVector<T>, frame: &Frame<T>, g: &GramMatrix<T>, sig: &Signature) -> Result<Vec<T>> {
    let rhs: Vec<T> = frame.vectors.iter().map(|x| psherm::metric_raw(&v.0, &x.0, sig)).collect();
    g.solve(&rhs)
}

/// Normal part of `v`: v − Σ a_m X_m with g a = [⟨v, X_m⟩].
pub fn normal_projection<T: Real>(v: &CVector<T>, frame: &Frame<T>, sig: &Signature) -> Result<CVector<T>> {
    let g = GramMatrix::of_frame(frame, sig);
    check_nondegenerate(frame, &g)?;
    let a = tangential_coeffs(v, frame, &g, sig)?;
    Ok(v - &CVector::combination(&a, &frame.vectors))
}

fn check_nondegenerate<T: Real>(frame: &Frame<T>, g: &GramMatrix<T>) -> Result<()> {
    let dv = g.det().abs().sqrt();
    if dv <= T::lit(psherm::DEFAULT_TOL) * frame.scale() {
        return Err(Error::Degenerate(format!("induced metric degenerate (√|det g| = {:e})", dv.to_f64_lossy())));
    }
    Ok(())
}

fn inverse<T: Real>(g: &GramMatrix<T>) -> Result<Vec<Vec<T>>> {
    let k = g.0.rows();
    let mut cols = Vec::with_capacity(k);
    for j in 0..k {
        let mut e = vec![T::zero(); k];
        e[j] = T::one();
        cols.push(g.solve(&e)?);
    }
    Ok(cols)
}

/// H = (1/n) Σ g^{jk} (∂²f/∂u_j∂u_k)^⊥.
pub fn mean_curvature_sff<T: Real>(patch: &ImmersionPatch<T>, u: &[T]) -> Result<CVector<T>> {
    let sig = patch.signature();
    let jet = patch.jet(u)?;
    let frame = Frame::new(jet.first);
    let g = GramMatrix::of_frame(&frame, &sig);
    check_nondegenerate(&frame, &g)?;
    let ginv = inverse(&g)?;
    let k = frame.len();
    let mut trace = CVector::zeros(jet.value.len());
    for j in 0..k {
        for l in 0..k {
            trace = &trace + &jet.second[j][l].scale_real(ginv[j][l]);
        }
    }
    let a = tangential_coeffs(&trace, &frame, &g, &sig)?;
    let normal = &trace - &CVector::combination(&a, &frame.vectors);
    Ok(normal.scale_real(T::one() / T::lit(k as f64)))
}

/// Lagrangian angle at `u` lifted near `reference`.
fn angle_near<T: Real>(patch: &ImmersionPatch<T>, u: &[T], reference: T) -> Result<T> {
    let frame = patch.tangent_frame(u)?;
    Ok(circular::lift_near(frame_angle(&frame, &patch.signature())?, reference))
}

/// Covariant components ∂β/∂u_j by a 5-point central stencil on the unwrapped angle.
pub fn angle_differential<T: Real>(patch: &ImmersionPatch<T>, u: &[T]) -> Result<Vec<T>> {
    let frame = patch.tangent_frame(u)?;
    let beta0 = frame_angle(&frame, &patch.signature())?;
    let k = patch.dim();
    let mut d = Vec::with_capacity(k);
    for j in 0..k {
        let h = patch.domain().width(j) * T::lit(ANGLE_STENCIL_STEP);
        let at = |m: T| -> Result<T> {
            let mut p = u.to_vec();
            p[j] += h * m;
            if !patch.domain().contains(&p) {
                return Err(Error::Boundary { point: u.iter().map(|x| x.to_f64_lossy()).collect() });
            }
            angle_near(patch, &p, beta0)
        };
        let bp2 = at(T::lit(2.0))?;
        let bp1 = at(T::one())?;
        let bm1 = at(-T::one())?;
        let bm2 = at(T::lit(-2.0))?;
        d.push((-bp2 + T::lit(8.0) * bp1 - T::lit(8.0) * bm1 + bm2) / (T::lit(12.0) * h));
    }
    Ok(d)
}

/// Metric gradient ∇β = Σ a_j X_j with g a = dβ.
pub fn angle_gradient<T: Real>(patch: &ImmersionPatch<T>, u: &[T]) -> Result<(CVector<T>, Vec<T>)> {
    let sig = patch.signature();
    let frame = patch.tangent_frame(u)?;
    let g = GramMatrix::of_frame(&frame, &sig);
    check_nondegenerate(&frame, &g)?;
    let dbeta = angle_differential(patch, u)?;
    let a = g.solve(&dbeta)?;
    Ok((CVector::combination(&a, &frame.vectors), dbeta))
}

/// H = (1/n) J∇β on a Lagrangian patch.
pub fn mean_curvature_angle<T: Real>(patch: &ImmersionPatch<T>, u: &[T]) -> Result<CVector<T>> {
    mean_curvature_angle_with_tol(patch, u, T::lit(LAGRANGIAN_TOL))
}

pub fn mean_curvature_angle_with_tol<T: Real>(patch: &ImmersionPatch<T>, u: &[T], lagrangian_tol: T) -> Result<CVector<T>> {
    let frame = patch.tangent_frame(u)?;
    let defect = frame_defect(&frame, &patch.signature());
    if defect > lagrangian_tol {
        return Err(Error::NotLagrangian { defect: defect.to_f64_lossy(), tol: lagrangian_tol.to_f64_lossy() });
    }
    let (grad, _) = angle_gradient(patch, u)?;
    Ok(apply_j(&grad).scale_real(T::one() / T::lit(patch.dim() as f64)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureSample<T> {
    pub point: Vec<T>,
    pub h_angle: CVector<T>,
    pub h_sff: CVector<T>,
    pub beta_gradient: Vec<T>,
    pub discrepancy: T,
}

pub fn curvature_sample<T: Real>(patch: &ImmersionPatch<T>, u: &[T]) -> Result<CurvatureSample<T>> {
    let h_angle = mean_curvature_angle(patch, u)?;
    let h_sff = mean_curvature_sff(patch, u)?;
    let (_, beta_gradient) = angle_gradient(patch, u)?;
    let discrepancy = (&h_angle - &h_sff).norm();
    Ok(CurvatureSample { point: u.to_vec(), h_angle, h_sff, beta_gradient, discrepancy })
}

/// H = f_uv^⊥ / ⟨f_u, f_v⟩ for a surface given in null coordinates.
///
/// With g = [[0, a], [a, 0]] the normalized trace (1/2) Σ g^{jk} II_jk is
/// II_uv / a; the unnormalized trace would carry an extra factor 2.
pub fn surface_h_null_coords<T: Real>(patch: &ImmersionPatch<T>, u: &[T]) -> Result<CVector<T>> {
    let sig = patch.signature();
    if patch.dim() != 2 || sig.n() != 2 {
        return Err(Error::Precondition("null-coordinate formula needs a surface in ℂ²".into()));
    }
    let jet = patch.jet(u)?;
    let fu = &jet.first[0];
    let fv = &jet.first[1];
    let tol = T::lit(1e-8);
    let nu = fu.norm();
    let nv = fv.norm();
    let uu = psherm::metric_raw(&fu.0, &fu.0, &sig);
    let vv = psherm::metric_raw(&fv.0, &fv.0, &sig);
    if uu.abs() > tol * nu * nu || vv.abs() > tol * nv * nv {
        return Err(Error::Precondition(format!(
            "coordinates are not null: |f_u|² = {:e}, |f_v|² = {:e}",
            uu.to_f64_lossy(),
            vv.to_f64_lossy()
        )));
    }
    let uv = psherm::metric_raw(&fu.0, &fv.0, &sig);
    if uv.abs() <= T::lit(psherm::DEFAULT_TOL) * nu * nv {
        return Err(Error::Degenerate("⟨f_u, f_v⟩ vanishes".into()));
    }
    let frame = Frame::new(jet.first.clone());
    let normal = normal_projection(&jet.second[0][1], &frame, &sig)?;
    Ok(normal.scale_real(T::one() / uv))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalityResidual {
    /// max |H_angle| over the samples.
    pub max_h: f64,
    /// Circular standard deviation of β over the samples.
    pub beta_spread: f64,
    pub beta_mean: f64,
    /// max of the two.
    pub residual: f64,
}

/// Uniform sample points in the part of the domain where every stencil fits.
pub fn interior_samples<T: Real>(patch: &ImmersionPatch<T>, count: usize, seed: u64) -> Vec<Vec<T>> {
    let margin = T::lit(2.5 * ANGLE_STENCIL_STEP) + patch.stencil_margin() * T::lit(2.0);
    let inner = patch.domain().shrink(margin);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let t: Vec<T> = (0..patch.dim()).map(|_| T::lit(rng.random::<f64>())).collect();
            inner.from_unit(&t)
        })
        .collect()
}

pub fn minimality_residual<T: Real>(patch: &ImmersionPatch<T>, sample_count: usize, seed: u64) -> Result<MinimalityResidual> {
    let points = interior_samples(patch, sample_count, seed);
    let per_point: Vec<(f64, f64)> = points
        .par_iter()
        .map(|u| {
            let h = mean_curvature_angle(patch, u)?;
            let beta = crate::immersion::lagrangian_angle_at(patch, u)?;
            Ok((h.norm().to_f64_lossy(), beta.to_f64_lossy()))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_h = per_point.iter().fold(0.0f64, |a, &(h, _)| a.max(h));
    let betas: Vec<f64> = per_point.iter().map(|&(_, b)| b).collect();
    let st = circular::stats(&betas);
    Ok(MinimalityResidual { max_h, beta_spread: st.spread, beta_mean: st.mean, residual: max_h.max(st.spread) })
}
