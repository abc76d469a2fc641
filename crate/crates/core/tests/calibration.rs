use lagcal_core::calibration::*;
use lagcal_core::curvature::interior_samples;
use lagcal_core::families::{make_catenoid, make_product_null_curves, split_hyperbolae, CatenoidSpec};
use lagcal_core::immersion::{frame_defect, frame_dvol, lagrangian_defect, patch_volume};
use lagcal_core::psherm::hol_volume;
use lagcal_core::{Complex64, Error, Patch, Signature};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn all_signatures() -> Vec<Signature> {
    (1..=4).flat_map(|n| (0..=n).map(move |p| Signature::new(p, n).unwrap())).collect()
}

fn catenoid() -> Patch {
    let sig = Signature::new(0, 2).unwrap();
    make_catenoid(&sig, &CatenoidSpec { epsilon: 1, c: 1.0, sector: 0, chart_center: None, chart_half_width: None }).unwrap()
}

fn off_center(base: &Patch, spec: &PerturbationSpec) -> Vec<f64> {
    spec.center.iter().enumerate().map(|(k, c)| c + 0.01 * base.domain().width(k)).collect()
}

#[test]
fn random_frames_are_lagrangian_with_unit_modulus_identity() {
    for sig in all_signatures() {
        for seed in 0..50 {
            let f = random_lagrangian_frame(&sig, seed).unwrap();
            assert!(frame_defect(&f, &sig) < 1e-10);
            let omega = hol_volume(&f, &sig).unwrap();
            assert!((frame_dvol(&f, &sig) - omega.norm()).abs() < 1e-9 * omega.norm());
        }
    }
}

#[test]
fn gram_identity_needs_sign_factors() {
    // ⟨⟨X_j, X_k⟩⟩ = Σ_l ε_l ⟨⟨X_j, e_l⟩⟩ conj⟨⟨X_k, e_l⟩⟩; dropping ε_l breaks it when p > 0
    let sig = Signature::new(1, 3).unwrap();
    let f = random_lagrangian_frame(&sig, 9).unwrap();
    let m = pairing_matrix(&f, &sig);
    let mut with_eps = 0.0f64;
    let mut without = 0.0f64;
    for j in 0..3 {
        for k in 0..3 {
            let h = lagcal_core::psherm::herm_form(&f.vectors[j], &f.vectors[k], &sig).unwrap();
            let a: Complex64 = (0..3).map(|l| m[(j, l)] * m[(k, l)].conj() * sig.epsilon_real::<f64>(l)).sum();
            let b: Complex64 = (0..3).map(|l| m[(j, l)] * m[(k, l)].conj()).sum();
            with_eps = with_eps.max((h - a).norm());
            without = without.max((h - b).norm());
        }
    }
    assert!(with_eps < 1e-12);
    assert!(without > 1e-3);
}

#[test]
fn survey_inequality_identity_and_equality() {
    let records = calibration_survey(&all_signatures(), 5_000, 1, 16, true).unwrap();
    let s = summarize(&records);
    assert!(s.slack_min >= -1e-9, "{s:?}");
    assert!(s.identity_max_residual < 1e-10, "{s:?}");
    assert!(s.equality_max_residual < 1e-10, "{s:?}");
    // serial and parallel runs agree record for record
    let serial = calibration_survey(&all_signatures(), 200, 1, 16, false).unwrap();
    assert_eq!(serial[..], records[..200]);
}

#[test]
fn rotated_frames_attain_equality() {
    let sig = Signature::new(2, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 0..100 {
        let f = random_lagrangian_frame_with(&sig, &mut rng, true).unwrap();
        let beta0 = -3.0 + 0.06 * k as f64;
        let r = rotate_to_angle(&f, beta0, &sig).unwrap();
        let s = calib_check(&r, beta0, &sig).unwrap();
        assert!(s.slack.abs() < 1e-10 * s.dvol);
        assert!(lagcal_core::circular::distance(s.beta, beta0) < 1e-12);
    }
}

#[test]
fn calib_check_preconditions() {
    let sig = Signature::new(0, 2).unwrap();
    let e = lagcal_core::CVector::<f64>::basis(2, 0);
    let degenerate = lagcal_core::Frame::new(vec![e.clone(), e]);
    assert!(matches!(calib_check(&degenerate, 0.0, &sig), Err(Error::Precondition(_))));
}

#[test]
fn zero_amplitude_and_zero_steps_are_identity() {
    let base = catenoid();
    let c = base.domain().center();
    let mut spec = PerturbationSpec::new(c.clone(), 0.1, 0.0);
    let p = hamiltonian_perturb(&base, &spec).unwrap();
    let grid = [40, 40];
    assert_eq!(patch_volume(&p, &grid).unwrap(), patch_volume(&base, &grid).unwrap());
    spec.amplitude = 0.1;
    spec.steps = 0;
    let p = hamiltonian_perturb(&base, &spec).unwrap();
    for u in interior_samples(&base, 20, 1) {
        assert_eq!(p.evaluate(&u).unwrap(), base.evaluate(&u).unwrap());
    }
}

#[test]
fn perturbation_fixes_boundary_and_stays_lagrangian() {
    let base = catenoid();
    let specs = random_perturbations(&base, 5, (0.02, 0.1), 3).unwrap();
    for spec in &specs {
        let p = hamiltonian_perturb(&base, spec).unwrap();
        let d = base.domain();
        for k in 0..50 {
            let t = k as f64 / 49.0;
            for u in [vec![d.lo[0], d.lo[1] + t * d.width(1)], vec![d.lo[0] + t * d.width(0), d.hi[1]]] {
                assert!((&p.evaluate(&u).unwrap() - &base.evaluate(&u).unwrap()).norm() < 1e-12);
            }
        }
        for u in interior_samples(&p, 300, 2) {
            assert!(lagrangian_defect(&p, &u).unwrap() < 1e-6);
        }
        // f(center) is fixed, nearby points move
        let u = off_center(&base, spec);
        let moved = (&p.evaluate(&u).unwrap() - &base.evaluate(&u).unwrap()).norm();
        assert!(moved > 1e-3 * spec.radius);
    }
}

#[test]
fn support_reaching_boundary_is_rejected() {
    let base = catenoid();
    let spec = PerturbationSpec::new(base.domain().center(), 100.0, 0.1);
    assert!(matches!(hamiltonian_perturb(&base, &spec), Err(Error::Spec(_))));
    let mut edge = base.domain().lo.clone();
    edge[0] += 1e-6;
    assert!(matches!(hamiltonian_perturb(&base, &PerturbationSpec::new(edge, 0.01, 0.1)), Err(Error::Spec(_))));
}

#[test]
fn divergence_bound_is_enforced() {
    let base = catenoid();
    let mut spec = random_perturbations(&base, 1, (0.1, 0.1), 0).unwrap().remove(0);
    spec.ambient_bound = 1e-3;
    let p = hamiltonian_perturb(&base, &spec).unwrap();
    assert!(matches!(p.evaluate(&off_center(&base, &spec)), Err(Error::Divergence { .. })));
}

#[test]
fn rk4_converges_at_fourth_order() {
    // inside the ball q is conserved and each coordinate turns by e^{iε_j θ}
    let base = catenoid();
    let mut spec = random_perturbations(&base, 1, (0.2, 0.2), 5).unwrap().remove(0);
    let zc = base.evaluate(&spec.center).unwrap();
    let u = off_center(&base, &spec);
    let z = base.evaluate(&u).unwrap();
    let d = &z - &zc;
    let q = d.norm().powi(2) / (spec.radius * spec.radius);
    assert!(q < 1.0);
    let theta = 6.0 * spec.amplitude * (1.0 - q).powi(2);
    let exact = &zc + &d.scale(Complex64::from_polar(1.0, theta));
    let mut errors = Vec::new();
    for steps in [2usize, 4, 8] {
        spec.steps = steps;
        spec.step_size = 1.0 / steps as f64;
        let p = hamiltonian_perturb(&base, &spec).unwrap();
        errors.push((&p.evaluate(&u).unwrap() - &exact).norm());
    }
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 12.0 && ratio < 20.0, "{errors:?}");
    }
}

#[test]
fn small_volume_comparison() {
    let base = catenoid();
    let specs = random_perturbations(&base, 3, (0.02, 0.2), 11).unwrap();
    let cmp = volume_compare(&base, &specs, &[80, 80], &VolumeOptions::default()).unwrap();
    assert_eq!(cmp.runs.len(), 3);
    assert_eq!(cmp.degenerate_count(), 0);
    assert!(cmp.slack_min() > -1e-6, "{cmp:?}");

    let sig = Signature::new(1, 2).unwrap();
    let base = make_product_null_curves(&sig, &split_hyperbolae([0.5, 1.5], [-1.5, -0.5])).unwrap();
    let specs = random_perturbations(&base, 3, (0.02, 0.2), 11).unwrap();
    let cmp = volume_compare(&base, &specs, &[80, 80], &VolumeOptions::default()).unwrap();
    assert!(cmp.slack_min() > -1e-6, "{cmp:?}");
}

#[test]
fn volume_compare_requires_minimal_base() {
    let sig = Signature::new(0, 2).unwrap();
    let hopf = lagcal_core::families::make_hopf(
        &sig,
        &lagcal_core::families::HopfSpec {
            curve: lagcal_core::families::curves::SphereCircle {
                center: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                u: [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
                v: [Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)],
                angle: 0.6,
            },
            s_interval: [0.0, 1.0],
            t_interval: [0.0, 1.0],
        },
    )
    .unwrap();
    assert!(matches!(volume_compare(&hopf, &[], &[10, 10], &VolumeOptions::default()), Err(Error::Precondition(_))));
}
