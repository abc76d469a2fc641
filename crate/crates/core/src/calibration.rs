//! The calibration form Θ₀ = Re(e^{−iβ₀}Ω) on Lagrangian frames, and volume
//! comparisons against compactly supported Hamiltonian perturbations.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::minimality_residual;
use crate::error::{Error, Result};
use crate::groups::random_pseudo_unitary;
use crate::immersion::{frame_angle, frame_defect, frame_dvol, midpoint_grid, pairwise_sum, JetMode, ParamBox};
use crate::linalg::{self, Matrix};
use crate::psherm::{self, CVector, Frame, Signature};
use crate::{circular, CVec, Frame64, Patch};

/// Lagrangian defect accepted by the frame checks.
pub const FRAME_LAGRANGIAN_TOL: f64 = 1e-9;
const REDRAW_LIMIT: usize = 100;
const MIN_ABS_DET: f64 = 0.05;

/// Re(e^{−iβ₀} Ω).
pub fn theta0(frame: &Frame64, beta0: f64, sig: &Signature) -> Result<f64> {
    let omega = psherm::hol_volume(frame, sig)?;
    Ok((Complex64::from_polar(1.0, -beta0) * omega).re)
}

/// Random Lagrangian frame: a real frame with |det| > 0.05 mapped by a random
/// pseudo-unitary transformation (skipped when `twist` is false).
pub fn random_lagrangian_frame_with(sig: &Signature, rng: &mut impl Rng, twist: bool) -> Result<Frame64> {
    let n = sig.n();
    let mut real = None;
    for _ in 0..REDRAW_LIMIT {
        let a = Matrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
        if linalg::det(&a).abs() > MIN_ABS_DET {
            real = Some(a);
            break;
        }
    }
    let a = real.ok_or_else(|| Error::Sampling(format!("no frame with |det| > {MIN_ABS_DET} in {REDRAW_LIMIT} draws")))?;
    let frame = Frame::new((0..n).map(|j| CVector::from_real(a.row(j))).collect());
    if !twist {
        return Ok(frame);
    }
    Ok(frame.map_ambient(&random_pseudo_unitary(sig, rng)))
}

pub fn random_lagrangian_frame(sig: &Signature, seed: u64) -> Result<Frame64> {
    random_lagrangian_frame_with(sig, &mut ChaCha8Rng::seed_from_u64(seed), true)
}

/// Multiplies the frame by e^{iθ} with θ = (β₀ − β)/n, so its angle becomes β₀.
pub fn rotate_to_angle(frame: &Frame64, beta0: f64, sig: &Signature) -> Result<Frame64> {
    let beta = frame_angle(frame, sig)?;
    let theta = circular::principal(beta0 - beta) / sig.n() as f64;
    let k = Complex64::from_polar(1.0, theta);
    Ok(Frame::new(frame.vectors.iter().map(|v| v.scale(k)).collect()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub frame: Frame64,
    pub beta0: f64,
    pub theta0: f64,
    pub dvol: f64,
    pub beta: f64,
    /// dvol − theta0.
    pub slack: f64,
}

fn check_frame(frame: &Frame64, sig: &Signature) -> Result<()> {
    if frame.len() != sig.n() {
        return Err(Error::DimensionMismatch { expected: sig.n(), got: frame.len() });
    }
    if !crate::immersion::frame_is_nondegenerate(frame, sig) {
        return Err(Error::Precondition("frame is degenerate".into()));
    }
    let defect = frame_defect(frame, sig);
    if defect > FRAME_LAGRANGIAN_TOL {
        return Err(Error::Precondition(format!("frame is not Lagrangian (defect {defect:e})")));
    }
    Ok(())
}

pub fn calib_check(frame: &Frame64, beta0: f64, sig: &Signature) -> Result<CalibrationSample> {
    check_frame(frame, sig)?;
    let theta = theta0(frame, beta0, sig)?;
    let dvol = frame_dvol(frame, sig);
    Ok(CalibrationSample {
        frame: frame.clone(),
        beta0,
        theta0: theta,
        dvol,
        beta: frame_angle(frame, sig)?,
        slack: dvol - theta,
    })
}

/// M_jk = ⟨⟨X_j, e_k⟩⟩_p.
pub fn pairing_matrix(frame: &Frame64, sig: &Signature) -> Matrix<Complex64> {
    let n = sig.n();
    Matrix::from_fn(frame.len(), n, |j, k| frame.vectors[j][k] * sig.epsilon_real::<f64>(k))
}

/// |dvol − |det_ℂ M|| / dvol without preconditions; large on non-Lagrangian frames.
pub fn det_identity_residual(frame: &Frame64, sig: &Signature) -> f64 {
    let dvol = frame_dvol(frame, sig);
    let det = linalg::det(&pairing_matrix(frame, sig)).norm();
    (dvol - det).abs() / dvol
}

pub fn det_identity_check(frame: &Frame64, sig: &Signature) -> Result<f64> {
    check_frame(frame, sig)?;
    Ok(det_identity_residual(frame, sig))
}

/// Aggregates of a calibration survey over random frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub frames: usize,
    /// min over frames and β₀ of dvol − Θ₀.
    pub slack_min: f64,
    pub identity_max_residual: f64,
    pub max_defect: f64,
    /// max |Θ₀ − dvol| / dvol after rotating each frame to β₀.
    pub equality_max_residual: f64,
}

/// Per-frame record: minimal slack over the β₀ grid, identity residual,
/// defect and the equality residual after rotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: usize,
    pub p: usize,
    pub n: usize,
    pub beta: f64,
    pub dvol: f64,
    pub slack_min: f64,
    pub identity_residual: f64,
    pub defect: f64,
    pub equality_residual: f64,
}

/// Uniform β₀ grid of ℝ/2πℤ.
pub fn beta0_grid(count: usize) -> Vec<f64> {
    (0..count).map(|k| circular::principal(std::f64::consts::TAU * k as f64 / count as f64)).collect()
}

fn frame_job(sig: &Signature, seed: u64, index: usize, betas: &[f64]) -> Result<FrameRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let frame = random_lagrangian_frame_with(sig, &mut rng, true)?;
    let mut slack_min = f64::INFINITY;
    let mut beta = 0.0;
    let mut dvol = 0.0;
    for &b in betas {
        let s = calib_check(&frame, b, sig)?;
        slack_min = slack_min.min(s.slack);
        beta = s.beta;
        dvol = s.dvol;
    }
    let beta0 = betas[index % betas.len()];
    let rotated = rotate_to_angle(&frame, beta0, sig)?;
    let s = calib_check(&rotated, beta0, sig)?;
    Ok(FrameRecord {
        index,
        p: sig.p(),
        n: sig.n(),
        beta,
        dvol,
        slack_min,
        identity_residual: det_identity_check(&frame, sig)?,
        defect: frame_defect(&frame, sig),
        equality_residual: (s.theta0 - s.dvol).abs() / s.dvol,
    })
}

/// Draws `count` frames, cycling through `sigs`; frame k uses stream k of the
/// seeded generator. `parallel` spreads jobs over the rayon pool; the records
/// are identical either way.
pub fn calibration_survey(sigs: &[Signature], count: usize, seed: u64, beta_grid: usize, parallel: bool) -> Result<Vec<FrameRecord>> {
    if sigs.is_empty() {
        return Err(Error::Precondition("no signatures to survey".into()));
    }
    let betas = beta0_grid(beta_grid.max(1));
    let job = |k: usize| frame_job(&sigs[k % sigs.len()], seed, k, &betas);
    if parallel {
        (0..count).into_par_iter().map(job).collect()
    } else {
        (0..count).map(job).collect()
    }
}

pub fn summarize(records: &[FrameRecord]) -> CalibrationSummary {
    let fold = |f: fn(&FrameRecord) -> f64, init: f64, pick: fn(f64, f64) -> f64| records.iter().map(f).fold(init, pick);
    CalibrationSummary {
        frames: records.len(),
        slack_min: fold(|r| r.slack_min, f64::INFINITY, f64::min),
        identity_max_residual: fold(|r| r.identity_residual, 0.0, f64::max),
        max_defect: fold(|r| r.defect, 0.0, f64::max),
        equality_max_residual: fold(|r| r.equality_residual, 0.0, f64::max),
    }
}

/// Compactly supported Hamiltonian h(z) = amplitude·ρ²·(1 − |z − z_c|²/ρ²)³
/// with z_c = f(center), flowed for `steps` RK4 steps of size `step_size`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    /// Bump center in the parameter domain.
    pub center: Vec<f64>,
    /// Ambient radius ρ of the support ball around f(center).
    pub radius: f64,
    pub amplitude: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    /// Flowed points beyond this Euclidean norm raise a divergence error.
    #[serde(default = "default_ambient_bound")]
    pub ambient_bound: f64,
}

fn default_steps() -> usize {
    100
}

fn default_step_size() -> f64 {
    0.01
}

fn default_ambient_bound() -> f64 {
    1e6
}

impl PerturbationSpec {
    pub fn new(center: Vec<f64>, radius: f64, amplitude: f64) -> Self {
        Self {
            center,
            radius,
            amplitude,
            steps: default_steps(),
            step_size: default_step_size(),
            ambient_bound: default_ambient_bound(),
        }
    }
}

/// Hamiltonian field X_h = −J·grad h, grad taken for the metric Re⟨⟨·,·⟩⟩_p.
struct BumpField {
    center: CVec,
    radius: f64,
    amplitude: f64,
    eps: Vec<f64>,
}

impl BumpField {
    fn eval(&self, z: &[Complex64]) -> Vec<Complex64> {
        let d: Vec<Complex64> = z.iter().zip(&self.center.0).map(|(a, b)| a - b).collect();
        let q = d.iter().map(|w| w.norm_sqr()).sum::<f64>() / (self.radius * self.radius);
        if q >= 1.0 {
            return vec![Complex64::new(0.0, 0.0); z.len()];
        }
        // Euclidean gradient 2A·b′(q)·(z − z_c) with b′ = −3(1 − q)²
        let k = -6.0 * self.amplitude * (1.0 - q) * (1.0 - q);
        let i = Complex64::i();
        d.iter().zip(&self.eps).map(|(w, e)| -i * (w * (k * e))).collect()
    }

    fn flow(&self, z: &CVec, steps: usize, dt: f64, bound: f64) -> Result<CVec> {
        let mut y = z.0.clone();
        let axpy = |y: &[Complex64], k: &[Complex64], h: f64| -> Vec<Complex64> {
            y.iter().zip(k).map(|(a, b)| a + b * h).collect()
        };
        for _ in 0..steps {
            let k1 = self.eval(&y);
            if k1.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
                // outside the support the flow is stationary
                break;
            }
            let k2 = self.eval(&axpy(&y, &k1, 0.5 * dt));
            let k3 = self.eval(&axpy(&y, &k2, 0.5 * dt));
            let k4 = self.eval(&axpy(&y, &k3, dt));
            for j in 0..y.len() {
                y[j] += (k1[j] + (k2[j] + k3[j]) * 2.0 + k4[j]) * (dt / 6.0);
            }
            let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if !(norm <= bound) {
                return Err(Error::Divergence { bound, norm });
            }
        }
        Ok(CVector(y))
    }
}

/// Sample points on the boundary faces of a box, `per_axis` per free axis.
fn boundary_samples(domain: &ParamBox<f64>, per_axis: usize) -> Vec<Vec<f64>> {
    let d = domain.dim();
    let mut out = Vec::new();
    for axis in 0..d {
        for side in [domain.lo[axis], domain.hi[axis]] {
            let total = per_axis.pow(d as u32 - 1);
            for idx in 0..total {
                let mut rem = idx;
                let mut p = Vec::with_capacity(d);
                for j in 0..d {
                    if j == axis {
                        p.push(side);
                    } else {
                        let a = rem % per_axis;
                        rem /= per_axis;
                        let frac = if per_axis == 1 { 0.5 } else { a as f64 / (per_axis - 1) as f64 };
                        p.push(domain.lo[j] + domain.width(j) * frac);
                    }
                }
                out.push(p);
            }
        }
    }
    out
}

fn boundary_per_axis(dim: usize) -> usize {
    match dim {
        0..=2 => 65,
        3 => 17,
        _ => 9,
    }
}

/// Relative margin kept free of the support: one second-difference stencil.
fn support_margin() -> f64 {
    2.0 * crate::immersion::FD_STEP_SECOND
}

/// Minimal ambient distance from f(center) to the sampled image of the
/// boundary shell of the domain.
fn boundary_distance(patch: &Patch, center: &CVec) -> Result<f64> {
    let eval = patch.eval_fn();
    let outer = patch.domain().clone();
    let inner = outer.shrink(support_margin());
    let per_axis = boundary_per_axis(outer.dim());
    let mut best = f64::INFINITY;
    for b in boundary_samples(&outer, per_axis).into_iter().chain(boundary_samples(&inner, per_axis)) {
        let z = eval(&b)?;
        best = best.min((&z - center).norm());
    }
    Ok(best)
}

fn validate_spec(patch: &Patch, spec: &PerturbationSpec) -> Result<CVec> {
    let domain = patch.domain();
    if spec.center.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: spec.center.len() });
    }
    if !(spec.radius > 0.0) || !spec.amplitude.is_finite() || !(spec.step_size > 0.0) || !(spec.ambient_bound > 0.0) {
        return Err(Error::Spec("perturbation needs radius > 0, finite amplitude, step size > 0, bound > 0".into()));
    }
    if !domain.shrink(support_margin()).contains(&spec.center) {
        return Err(Error::Spec("bump center must lie in the domain interior".into()));
    }
    let center = patch.evaluate(&spec.center)?;
    let dist = boundary_distance(patch, &center)?;
    if dist <= spec.radius {
        return Err(Error::Spec(format!(
            "bump support reaches the domain boundary (boundary distance {dist:e}, radius {:e})",
            spec.radius
        )));
    }
    Ok(center)
}

/// Flows the patch along the Hamiltonian field of the bump. The result
/// evaluates by flowing on demand and takes jets by finite differences.
pub fn hamiltonian_perturb(patch: &Patch, spec: &PerturbationSpec) -> Result<Patch> {
    let center = validate_spec(patch, spec)?;
    if spec.steps == 0 || spec.amplitude == 0.0 {
        return Ok(patch.clone());
    }
    let sig = patch.signature();
    let field = BumpField {
        center,
        radius: spec.radius,
        amplitude: spec.amplitude,
        eps: sig.sign_vector::<f64>(),
    };
    let base = patch.eval_fn();
    let (steps, dt, bound) = (spec.steps, spec.step_size, spec.ambient_bound);
    let eval = std::sync::Arc::new(move |u: &[f64]| field.flow(&base(u)?, steps, dt, bound));
    Ok(Patch::new(
        sig,
        patch.domain().clone(),
        eval,
        JetMode::finite_difference(),
        format!("{}+hamiltonian", patch.label()),
    ))
}

/// Seeded perturbations: center in the middle of the box, ambient radius a
/// random fraction in [0.4, 0.7] of the boundary distance.
pub fn random_perturbations(
    patch: &Patch,
    count: usize,
    amplitude_range: (f64, f64),
    seed: u64,
) -> Result<Vec<PerturbationSpec>> {
    let domain = patch.domain();
    (0..count)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let center: Vec<f64> = (0..domain.dim())
                .map(|j| domain.lo[j] + domain.width(j) * rng.random_range(0.35..0.65))
                .collect();
            let z = patch.evaluate(&center)?;
            let dist = boundary_distance(patch, &z)?;
            let fraction: f64 = rng.random_range(0.4..0.7);
            let amplitude = rng.random_range(amplitude_range.0..=amplitude_range.1);
            Ok(PerturbationSpec::new(center, fraction * dist, amplitude))
        })
        .collect()
}

/// Quadrature of dvol together with the defect and degeneracy counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridVolume {
    pub volume: f64,
    pub max_defect: f64,
    pub degenerate_points: usize,
}

/// Serial midpoint quadrature; a point is degenerate when
/// √|det g| ≤ threshold · Π|X_j|.
pub fn grid_volume(patch: &Patch, grid: &[usize], threshold: f64) -> Result<GridVolume> {
    let (points, cell) = midpoint_grid(patch.domain(), grid)?;
    let sig = patch.signature();
    let mut values = Vec::with_capacity(points.len());
    let mut max_defect = 0.0f64;
    let mut degenerate_points = 0;
    for u in &points {
        let frame = patch.tangent_frame(u)?;
        let dv = frame_dvol(&frame, &sig);
        if dv <= threshold * frame.scale() {
            degenerate_points += 1;
        }
        max_defect = max_defect.max(frame_defect(&frame, &sig));
        values.push(dv);
    }
    Ok(GridVolume { volume: pairwise_sum(&values) * cell, max_defect, degenerate_points })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeRun {
    pub index: usize,
    pub amplitude: f64,
    pub radius: f64,
    pub volume: f64,
    /// volume − base volume.
    pub slack: f64,
    pub max_defect: f64,
    pub degenerate_points: usize,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeComparison {
    pub base_volume: f64,
    pub base_residual: f64,
    pub runs: Vec<VolumeRun>,
}

impl VolumeComparison {
    pub fn degenerate_count(&self) -> usize {
        self.runs.iter().filter(|r| r.degenerate).count()
    }

    /// Smallest slack over the non-degenerate runs.
    pub fn slack_min(&self) -> f64 {
        self.runs.iter().filter(|r| !r.degenerate).map(|r| r.slack).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VolumeOptions {
    pub degeneracy_threshold: f64,
    /// Minimality residual the base must meet.
    pub base_residual_tol: f64,
    pub residual_samples: usize,
    pub seed: u64,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        Self { degeneracy_threshold: 1e-6, base_residual_tol: 1e-6, residual_samples: 200, seed: 0 }
    }
}

/// Volumes of the base and of every perturbation on the same grid. Runs are
/// independent jobs; results keep the order of `specs`.
pub fn volume_compare(base: &Patch, specs: &[PerturbationSpec], grid: &[usize], opts: &VolumeOptions) -> Result<VolumeComparison> {
    let residual = minimality_residual(base, opts.residual_samples, opts.seed)?.residual;
    if !(residual < opts.base_residual_tol) {
        return Err(Error::Precondition(format!("base patch is not minimal (residual {residual:e})")));
    }
    let base_grid = grid_volume(base, grid, opts.degeneracy_threshold)?;
    let runs = specs
        .par_iter()
        .enumerate()
        .map(|(index, spec)| {
            let perturbed = hamiltonian_perturb(base, spec)?;
            let g = grid_volume(&perturbed, grid, opts.degeneracy_threshold)?;
            Ok(VolumeRun {
                index,
                amplitude: spec.amplitude,
                radius: spec.radius,
                volume: g.volume,
                slack: g.volume - base_grid.volume,
                max_defect: g.max_defect,
                degenerate_points: g.degenerate_points,
                degenerate: g.degenerate_points > 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VolumeComparison { base_volume: base_grid.volume, base_residual: residual, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn theta0_on_canonical_basis() {
        let sig = Signature::new(0, 3).unwrap();
        let f = Frame::canonical(3);
        assert_eq!(theta0(&f, 0.0, &sig).unwrap(), 1.0);
        assert!(theta0(&f, FRAC_PI_2, &sig).unwrap().abs() < 1e-16);
    }

    #[test]
    fn untwisted_frame_is_real() {
        let sig = Signature::new(1, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_lagrangian_frame_with(&sig, &mut rng, false).unwrap();
        let s = calib_check(&f, 0.0, &sig).unwrap();
        assert!(s.beta == 0.0 || (s.beta.abs() - std::f64::consts::PI).abs() < 1e-15);
        if s.beta == 0.0 {
            assert!((s.theta0 - s.dvol).abs() < 1e-14 * s.dvol);
        }
    }

    #[test]
    fn non_lagrangian_witness_breaks_identity() {
        // (e₁, i e₁): ω(e₁, ie₁) ≠ 0, det M = 0 yet dvol = 1
        let sig = Signature::new(0, 2).unwrap();
        let e1 = CVector::<f64>::basis(2, 0);
        let f = Frame::new(vec![e1.clone(), psherm::apply_j(&e1)]);
        assert!((frame_dvol(&f, &sig) - 1.0).abs() < 1e-15);
        assert!((det_identity_residual(&f, &sig) - 1.0).abs() < 1e-15);
        assert!(matches!(det_identity_check(&f, &sig), Err(Error::Precondition(_))));
    }

    #[test]
    fn field_preserves_q_and_matches_phase_rotation() {
        // the flow is z_c + diag(e^{iε_j θ}) (z − z_c) with θ = 6A(1 − q)² t
        let sig = Signature::new(1, 2).unwrap();
        let field = BumpField {
            center: CVector(vec![Complex64::new(0.1, 0.0), Complex64::new(0.0, 0.2)]),
            radius: 1.0,
            amplitude: 0.1,
            eps: sig.sign_vector(),
        };
        let z = CVector(vec![Complex64::new(0.4, 0.1), Complex64::new(-0.2, 0.3)]);
        let out = field.flow(&z, 100, 0.01, 1e6).unwrap();
        let d: Vec<Complex64> = z.0.iter().zip(&field.center.0).map(|(a, b)| a - b).collect();
        let q: f64 = d.iter().map(|w| w.norm_sqr()).sum();
        let theta = 6.0 * 0.1 * (1.0 - q) * (1.0 - q);
        for j in 0..2 {
            let expected = field.center[j] + d[j] * Complex64::from_polar(1.0, field.eps[j] * theta);
            assert!((out[j] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn boundary_faces_cover_each_side() {
        let b = ParamBox::unit(2);
        let s = boundary_samples(&b, 3);
        assert_eq!(s.len(), 12);
        assert!(s.iter().all(|p| p.iter().any(|&x| x == 0.0 || x == 1.0)));
    }
}
