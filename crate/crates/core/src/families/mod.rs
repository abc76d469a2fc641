//! Generators for the explicit minimal and non-minimal Lagrangian families:
//! flat planes, equivariant patches γ(s)·x, catenoids, evolving quadrics
//! r(s)e^{iMs}x, products of null curves and Hopf-type surfaces.

pub mod curves;
pub mod quadric;

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{self, mat_exp_ims};
use crate::immersion::{Jet, ParamBox};
use crate::linalg::Matrix;
use crate::psherm::{self, CVector, Plane, Signature};
use crate::{CVec, Patch};

pub use curves::{catenoid_interval, Curve, CurvePoint, CurveSpec, RadiusProfile, SphereCircle};
pub use quadric::{center_candidates, default_center, quadric_chart, sample_quadric, ChartPoint, QuadricChart};

/// Closed-form value checks use this many samples along curve intervals.
const CURVE_CHECK_SAMPLES: usize = 257;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    FlatPlane,
    Equivariant(EquivariantSpec),
    Catenoid(CatenoidSpec),
    EvolvingQuadric(EvolvingQuadricSpec),
    ProductNullCurves(ProductNullCurvesSpec),
    Hopf(HopfSpec),
}

impl FamilySpec {
    pub fn build(&self, sig: &Signature) -> Result<Patch> {
        match self {
            FamilySpec::FlatPlane => Ok(make_flat_plane(sig)),
            FamilySpec::Equivariant(s) => make_equivariant(sig, s),
            FamilySpec::Catenoid(s) => make_catenoid(sig, s),
            FamilySpec::EvolvingQuadric(s) => make_evolving_quadric(sig, s),
            FamilySpec::ProductNullCurves(s) => make_product_null_curves(sig, s),
            FamilySpec::Hopf(s) => make_hopf(sig, s),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FamilySpec::FlatPlane => "flat_plane",
            FamilySpec::Equivariant(_) => "equivariant",
            FamilySpec::Catenoid(_) => "catenoid",
            FamilySpec::EvolvingQuadric(_) => "evolving_quadric",
            FamilySpec::ProductNullCurves(_) => "product_null_curves",
            FamilySpec::Hopf(_) => "hopf",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivariantSpec {
    pub epsilon: i8,
    pub curve: CurveSpec,
    pub interval: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart_center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart_half_width: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatenoidSpec {
    pub epsilon: i8,
    pub c: f64,
    pub sector: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart_center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart_half_width: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolvingQuadricSpec {
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    pub c: f64,
    pub radius: RadiusProfile,
    pub interval: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart_center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart_half_width: Option<f64>,
}

/// Curves are planar: q(u) ∈ ℂ is placed in P as Re(q)·b₁ + Im(q)·b₂.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductNullCurvesSpec {
    pub plane: [[Complex64; 2]; 2],
    pub gamma1: CurveSpec,
    pub gamma2: CurveSpec,
    pub u_interval: [f64; 2],
    pub v_interval: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopfSpec {
    pub curve: SphereCircle,
    pub s_interval: [f64; 2],
    pub t_interval: [f64; 2],
}

fn interval_box(first: [f64; 2], rest: &[[f64; 2]]) -> Result<ParamBox<f64>> {
    let mut lo = vec![first[0]];
    let mut hi = vec![first[1]];
    for r in rest {
        lo.push(r[0]);
        hi.push(r[1]);
    }
    ParamBox::new(lo, hi)
}

fn real_scaled(x: &[f64], k: Complex64) -> CVec {
    CVector(x.iter().map(|&v| k * v).collect())
}

fn check_epsilon(epsilon: i8) -> Result<f64> {
    match epsilon {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        e => Err(Error::Spec(format!("epsilon must be +1 or -1, got {e}"))),
    }
}

/// f(u) = Σ u_j e_j on the unit box.
pub fn make_flat_plane(sig: &Signature) -> Patch {
    let n = sig.n();
    Patch::analytic(
        *sig,
        ParamBox::unit(n),
        move |u: &[f64]| {
            Ok(Jet {
                value: CVector::from_real(u),
                first: (0..n).map(|j| CVector::basis(n, j)).collect(),
                second: vec![vec![CVector::zeros(n); n]; n],
            })
        },
        "flat_plane",
    )
}

/// γ(s)·x with x on the quadric ⟨x, x⟩_p = ε.
#[derive(Clone, Debug)]
pub struct EquivariantFamily {
    sig: Signature,
    curve: Curve,
    interval: [f64; 2],
    chart: QuadricChart,
    label: String,
}

impl EquivariantFamily {
    pub fn new(
        sig: &Signature,
        epsilon: i8,
        curve: Curve,
        interval: [f64; 2],
        chart_center: Option<&[f64]>,
        chart_half_width: Option<f64>,
        label: &str,
    ) -> Result<Self> {
        let n = sig.n();
        if n < 2 {
            return Err(Error::Precondition("equivariant patches need n >= 2".into()));
        }
        let eps = check_epsilon(epsilon)?;
        let center = match chart_center {
            Some(c) => c.to_vec(),
            None => {
                let j = if eps > 0.0 {
                    if sig.p() == n {
                        return Err(Error::Domain("quadric <x,x> = +1 is empty for p = n".into()));
                    }
                    n - 1
                } else {
                    if sig.p() == 0 {
                        return Err(Error::Domain("quadric <x,x> = -1 is empty for p = 0".into()));
                    }
                    0
                };
                (0..n).map(|k| if k == j { 1.0 } else { 0.0 }).collect()
            }
        };
        let chart = quadric_chart(&Matrix::identity(n), eps, sig, &center, chart_half_width)?;
        let (a, b) = (interval[0], interval[1]);
        for k in 0..CURVE_CHECK_SAMPLES {
            let s = a + (b - a) * k as f64 / (CURVE_CHECK_SAMPLES - 1) as f64;
            let g = curve.eval(s);
            if !(g.value.norm() > 1e-12) || !g.d1.is_finite() || !g.d2.is_finite() {
                return Err(Error::Domain(format!("curve vanishes or is singular at s = {s}")));
            }
        }
        Ok(Self { sig: *sig, curve, interval, chart, label: label.into() })
    }

    pub fn chart(&self) -> &QuadricChart {
        &self.chart
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    /// Same family over a re-centered chart.
    pub fn recentered(&self, center: &[f64]) -> Result<Self> {
        let chart = quadric_chart(&Matrix::identity(self.sig.n()), self.chart.c(), &self.sig, center, Some(self.chart.half_width()))?;
        Ok(Self { chart, ..self.clone() })
    }

    /// arg(γ′ γ^{n−1}), the closed-form Lagrangian angle.
    pub fn predicted_angle(&self, s: f64) -> f64 {
        let g = self.curve.eval(s);
        (g.d1 * g.value.powu(self.sig.n() as u32 - 1)).arg()
    }

    pub fn patch(&self) -> Result<Patch> {
        let h = self.chart.half_width();
        let rest = vec![[-h, h]; self.chart.dim()];
        let domain = interval_box(self.interval, &rest)?;
        let curve = self.curve.clone();
        let chart = self.chart.clone();
        let d = chart.dim();
        Ok(Patch::analytic(
            self.sig,
            domain,
            move |u: &[f64]| {
                let g = curve.eval(u[0]);
                if !(g.value.norm() > 1e-12) {
                    return Err(Error::Domain(format!("curve vanishes at s = {}", u[0])));
                }
                let p = chart.eval(&u[1..])?;
                let mut first = vec![real_scaled(&p.x, g.d1)];
                first.extend(p.first.iter().map(|xi| real_scaled(xi, g.value)));
                let mut second = vec![vec![CVector::zeros(p.x.len()); d + 1]; d + 1];
                second[0][0] = real_scaled(&p.x, g.d2);
                for i in 0..d {
                    second[0][i + 1] = real_scaled(&p.first[i], g.d1);
                    second[i + 1][0] = second[0][i + 1].clone();
                    for j in 0..d {
                        second[i + 1][j + 1] = real_scaled(&p.second[i][j], g.value);
                    }
                }
                Ok(Jet { value: real_scaled(&p.x, g.value), first, second })
            },
            self.label.clone(),
        ))
    }
}

pub fn make_equivariant(sig: &Signature, spec: &EquivariantSpec) -> Result<Patch> {
    EquivariantFamily::new(
        sig,
        spec.epsilon,
        spec.curve.build()?,
        spec.interval,
        spec.chart_center.as_deref(),
        spec.chart_half_width,
        "equivariant",
    )?
    .patch()
}

pub fn catenoid_family(sig: &Signature, spec: &CatenoidSpec) -> Result<EquivariantFamily> {
    let n = sig.n();
    let (lo, hi) = catenoid_interval(n, spec.c, spec.sector)?;
    let curve = CurveSpec::PolarCatenoid { n, c: spec.c }.build()?;
    EquivariantFamily::new(sig, spec.epsilon, curve, [lo, hi], spec.chart_center.as_deref(), spec.chart_half_width, "catenoid")
}

pub fn make_catenoid(sig: &Signature, spec: &CatenoidSpec) -> Result<Patch> {
    catenoid_family(sig, spec)?.patch()
}

/// r(s) e^{iMs} x with ⟨x, Mx⟩_p = c.
#[derive(Clone, Debug)]
pub struct EvolvingQuadric {
    sig: Signature,
    m: Matrix<f64>,
    c: f64,
    radius: RadiusProfile,
    interval: [f64; 2],
    chart: QuadricChart,
}

impl EvolvingQuadric {
    pub fn new(sig: &Signature, spec: &EvolvingQuadricSpec) -> Result<Self> {
        let n = sig.n();
        if spec.m.len() != n || spec.m.iter().any(|r| r.len() != n) {
            return Err(Error::Spec(format!("M must be {n}x{n}")));
        }
        let m = Matrix::from_rows(&spec.m);
        let residual = groups::check_self_adjoint(&m, sig);
        if residual > quadric::QUADRIC_TOL {
            return Err(Error::Spec(format!("M is not self-adjoint: check_self_adjoint residual {residual:e}")));
        }
        if crate::linalg::det(&m).abs() <= 1e-12 * m.max_abs().powi(n as i32) {
            return Err(Error::Spec("M must be invertible".into()));
        }
        spec.radius.check_positive((spec.interval[0], spec.interval[1]))?;
        let build = |center: &[f64]| -> Result<Self> {
            let chart = quadric_chart(&m, spec.c, sig, center, spec.chart_half_width)?;
            Ok(Self { sig: *sig, m: m.clone(), c: spec.c, radius: spec.radius.clone(), interval: spec.interval, chart })
        };
        match &spec.chart_center {
            Some(c) => build(c),
            None => {
                // the surface can be degenerate along parts of the quadric;
                // take the candidate center where the frame is best conditioned
                let mut best: Option<(f64, Self)> = None;
                for center in quadric::center_candidates(&m, spec.c, sig)? {
                    let Ok(fam) = build(&center) else { continue };
                    let q = fam.conditioning_at_center().unwrap_or(0.0);
                    if best.as_ref().is_none_or(|(b, _)| q > *b) {
                        best = Some((q, fam));
                    }
                }
                best.map(|(_, f)| f).ok_or_else(|| Error::Domain("no usable chart center on the quadric".into()))
            }
        }
    }

    /// √|det g| / Π|X_j| at the interval midpoint and chart center.
    fn conditioning_at_center(&self) -> Result<f64> {
        let patch = self.patch()?;
        let mut u = vec![0.5 * (self.interval[0] + self.interval[1])];
        u.extend(vec![0.0; self.chart.dim()]);
        let frame = patch.tangent_frame(&u)?;
        Ok(crate::immersion::frame_dvol(&frame, &self.sig) / frame.scale())
    }

    pub fn chart(&self) -> &QuadricChart {
        &self.chart
    }

    /// tr(M)s + arg(c r′/r + i⟨Mx, Mx⟩_p) + π/2.
    pub fn theoquad_angle(&self, s: f64, x: &[f64]) -> f64 {
        let (r, r1, _) = self.radius.eval(s);
        let mx = self.m.mul_vec(x);
        let mx2: f64 = (0..mx.len()).map(|j| self.sig.epsilon_real::<f64>(j) * mx[j] * mx[j]).sum();
        self.m.trace() * s + Complex64::new(self.c * r1 / r, mx2).arg() + FRAC_PI_2
    }

    pub fn patch(&self) -> Result<Patch> {
        let h = self.chart.half_width();
        let domain = interval_box(self.interval, &vec![[-h, h]; self.chart.dim()])?;
        let m = self.m.clone();
        let mc = crate::linalg::complexify(&m);
        let radius = self.radius.clone();
        let chart = self.chart.clone();
        let d = chart.dim();
        let i = Complex64::i();
        Ok(Patch::analytic(
            self.sig,
            domain,
            move |u: &[f64]| {
                let s = u[0];
                let (r, r1, r2) = radius.eval(s);
                if !(r > 0.0) || !r.is_finite() {
                    return Err(Error::Domain(format!("radius not positive at s = {s}")));
                }
                let e = mat_exp_ims(&m, s);
                let p = chart.eval(&u[1..])?;
                let ex = CVector::from_real(&p.x).apply(&e);
                let mex = ex.apply(&mc);
                let mmex = mex.apply(&mc);
                let exi: Vec<CVec> = p.first.iter().map(|xi| CVector::from_real(xi).apply(&e)).collect();
                let mexi: Vec<CVec> = exi.iter().map(|v| v.apply(&mc)).collect();
                let value = ex.scale_real(r);
                let fs = &ex.scale_real(r1) + &mex.scale(i * r);
                let mut first = vec![fs];
                first.extend(exi.iter().map(|v| v.scale_real(r)));
                let n = p.x.len();
                let mut second = vec![vec![CVector::zeros(n); d + 1]; d + 1];
                second[0][0] = &(&ex.scale_real(r2) + &mex.scale(i * (2.0 * r1))) - &mmex.scale_real(r);
                for a in 0..d {
                    let v = &exi[a].scale_real(r1) + &mexi[a].scale(i * r);
                    second[0][a + 1] = v.clone();
                    second[a + 1][0] = v;
                    for b in 0..d {
                        second[a + 1][b + 1] = CVector::from_real(&p.second[a][b]).apply(&e).scale_real(r);
                    }
                }
                Ok(Jet { value, first, second })
            },
            "evolving_quadric",
        ))
    }
}

pub fn make_evolving_quadric(sig: &Signature, spec: &EvolvingQuadricSpec) -> Result<Patch> {
    EvolvingQuadric::new(sig, spec)?.patch()
}

fn plane_point(basis: &[CVec; 2], q: Complex64) -> CVec {
    &basis[0].scale_real(q.re) + &basis[1].scale_real(q.im)
}

/// γ₁(u) + Jγ₂(v) with γ₁, γ₂ in a totally null plane P ⊂ ℂ².
pub fn make_product_null_curves(sig: &Signature, spec: &ProductNullCurvesSpec) -> Result<Patch> {
    if sig.n() != 2 {
        return Err(Error::Spec("product of null curves lives in C^2".into()));
    }
    let basis = [CVector(spec.plane[0].to_vec()), CVector(spec.plane[1].to_vec())];
    let plane = Plane::new(basis[0].clone(), basis[1].clone())?;
    if !psherm::plane_props(&plane, sig)?.totally_null {
        return Err(Error::Spec("plane P is not totally null".into()));
    }
    let g1 = spec.gamma1.build()?;
    let g2 = spec.gamma2.build()?;
    let domain = interval_box(spec.u_interval, &[spec.v_interval])?;
    let i = Complex64::i();

    // sampled non-degeneracy of the pairing ⟨γ₁′, Jγ₂′⟩
    let mut min_pairing = f64::INFINITY;
    let k = 9;
    for a in 0..k {
        for b in 0..k {
            let u = spec.u_interval[0] + (spec.u_interval[1] - spec.u_interval[0]) * a as f64 / (k - 1) as f64;
            let v = spec.v_interval[0] + (spec.v_interval[1] - spec.v_interval[0]) * b as f64 / (k - 1) as f64;
            let d1 = plane_point(&basis, g1.eval(u).d1);
            let d2 = plane_point(&basis, g2.eval(v).d1).scale(i);
            let scale = d1.norm() * d2.norm();
            let pairing = psherm::metric_raw(&d1.0, &d2.0, sig).abs();
            min_pairing = min_pairing.min(if scale > 0.0 { pairing / scale } else { 0.0 });
        }
    }
    let basis = Arc::new(basis);
    let mut patch = Patch::analytic(
        *sig,
        domain,
        move |u: &[f64]| {
            let a = g1.eval(u[0]);
            let b = g2.eval(u[1]);
            let value = &plane_point(&basis, a.value) + &plane_point(&basis, b.value).scale(i);
            let fu = plane_point(&basis, a.d1);
            let fv = plane_point(&basis, b.d1).scale(i);
            let zero = CVector::zeros(2);
            Ok(Jet {
                value,
                first: vec![fu, fv],
                second: vec![
                    vec![plane_point(&basis, a.d2), zero.clone()],
                    vec![zero, plane_point(&basis, b.d2).scale(i)],
                ],
            })
        },
        "product_null_curves",
    );
    if min_pairing < 1e-9 {
        patch = patch.with_warning(format!("degenerate pairing <g1', J g2'> sampled (relative {min_pairing:e})"));
    }
    Ok(patch)
}

/// (γ₁(s)e^{it}, γ₂(s)e^{it}) in ℂ² with the definite form.
pub fn make_hopf(sig: &Signature, spec: &HopfSpec) -> Result<Patch> {
    if sig.p() != 0 || sig.n() != 2 {
        return Err(Error::Spec("Hopf surfaces need signature (0, 2)".into()));
    }
    let curve = spec.curve.clone();
    curve.validate()?;
    let i = Complex64::i();
    let (a, b) = (spec.s_interval[0], spec.s_interval[1]);
    for k in 0..CURVE_CHECK_SAMPLES {
        let s = a + (b - a) * k as f64 / (CURVE_CHECK_SAMPLES - 1) as f64;
        let [g, d, _] = curve.eval(s);
        let norm2 = g[0].norm_sqr() + g[1].norm_sqr();
        // γ′ must not be a real multiple of Jγ, otherwise f_s ∥ f_t
        let jg = [i * g[0], i * g[1]];
        let along: f64 = (0..2).map(|k| (d[k].conj() * jg[k]).re).sum();
        let d2: f64 = d[0].norm_sqr() + d[1].norm_sqr();
        if (norm2 - 1.0).abs() > 1e-12 || d2 - along * along <= 1e-12 {
            return Err(Error::Spec(format!("sphere curve constraint violated at s = {s}")));
        }
    }
    let domain = interval_box(spec.s_interval, &[spec.t_interval])?;
    Ok(Patch::analytic(
        *sig,
        domain,
        move |u: &[f64]| {
            let [g, d, dd] = curve.eval(u[0]);
            let e = Complex64::from_polar(1.0, u[1]);
            let v = |w: [Complex64; 2], k: Complex64| CVector(vec![w[0] * k, w[1] * k]);
            Ok(Jet {
                value: v(g, e),
                first: vec![v(d, e), v(g, i * e)],
                second: vec![vec![v(dd, e), v(d, i * e)], vec![v(d, i * e), v(g, -e)]],
            })
        },
        "hopf",
    ))
}

/// The split-signature example: M the rotation generator, c = 2, r ≡ 1.
pub fn split_rotation_quadric(interval: [f64; 2]) -> EvolvingQuadricSpec {
    EvolvingQuadricSpec {
        m: vec![vec![0.0, -1.0], vec![1.0, 0.0]],
        c: 2.0,
        radius: RadiusProfile::Constant { value: 1.0 },
        interval,
        chart_center: None,
        chart_half_width: None,
    }
}

/// The two hyperbolae of the split example in P = {x₁ = y₂, x₂ = y₁}:
/// γ₁(u) = ½(eᵘ + ie⁻ᵘ, e⁻ᵘ + ieᵘ), γ₂(v) = −½(eᵛ + ie⁻ᵛ, e⁻ᵛ + ieᵛ).
pub fn split_hyperbolae(u_interval: [f64; 2], v_interval: [f64; 2]) -> ProductNullCurvesSpec {
    let c = Complex64::new;
    ProductNullCurvesSpec {
        plane: [[c(1.0, 0.0), c(0.0, 1.0)], [c(0.0, 1.0), c(1.0, 0.0)]],
        gamma1: CurveSpec::Hyperbolic { growth: c(0.5, 0.0), decay: c(0.0, 0.5), rate: 1.0 },
        gamma2: CurveSpec::Hyperbolic { growth: c(-0.5, 0.0), decay: c(0.0, -0.5), rate: 1.0 },
        u_interval,
        v_interval,
    }
}

/// Non-minimal surface in null coordinates in ℂ² with signature (1, 2):
/// f = U(u·n₁ + v·m₁ + a(u, v)·n₂) with n₁, m₁, n₂ null, ⟨n₁, m₁⟩ = 1,
/// n₂ orthogonal to both, a = amplitude·sin(u)·cos(2v), U pseudo-unitary.
pub fn null_coordinate_surface(amplitude: f64, seed: u64) -> Result<Patch> {
    use rand::SeedableRng;
    let sig = Signature::new(1, 2)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = Complex64::new;
    let n1 = CVector(vec![c(h, 0.0), c(h, 0.0)]);
    let m1 = CVector(vec![c(-h, 0.0), c(h, 0.0)]);
    let n2 = CVector(vec![c(0.0, h), c(0.0, h)]);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let unitary = groups::random_pseudo_unitary(&sig, &mut rng);
    let (n1, m1, n2) = (n1.apply(&unitary), m1.apply(&unitary), n2.apply(&unitary));
    Ok(Patch::analytic(
        sig,
        ParamBox::new(vec![-1.0, -1.0], vec![1.0, 1.0])?,
        move |u: &[f64]| {
            let (x, y) = (u[0], u[1]);
            let a = amplitude * x.sin() * (2.0 * y).cos();
            let au = amplitude * x.cos() * (2.0 * y).cos();
            let av = -2.0 * amplitude * x.sin() * (2.0 * y).sin();
            let auu = -a;
            let auv = -2.0 * amplitude * x.cos() * (2.0 * y).sin();
            let avv = -4.0 * a;
            let value = &(&n1.scale_real(x) + &m1.scale_real(y)) + &n2.scale_real(a);
            Ok(Jet {
                value,
                first: vec![&n1 + &n2.scale_real(au), &m1 + &n2.scale_real(av)],
                second: vec![
                    vec![n2.scale_real(auu), n2.scale_real(auv)],
                    vec![n2.scale_real(auv), n2.scale_real(avv)],
                ],
            })
        },
        "null_coordinate_surface",
    ))
}
