use lagcal_core::circular::{distance, principal};
use lagcal_core::families::quadric::quadric_chart;
use lagcal_core::families::{make_catenoid, CatenoidSpec};
use lagcal_core::groups::random_pseudo_unitary;
use lagcal_core::immersion::frame_angle;
use lagcal_core::linalg::{det, Matrix};
use lagcal_core::psherm::*;
use lagcal_core::{calibration, curvature, CVec, Complex64, Frame64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn signature() -> impl Strategy<Value = Signature> {
    (1usize..=4).prop_flat_map(|n| (0..=n).prop_map(move |p| Signature::new(p, n).unwrap()))
}

fn cvec(n: usize) -> impl Strategy<Value = CVec> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), n)
        .prop_map(|v| CVector(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()))
}

fn sig_and_pair() -> impl Strategy<Value = (Signature, CVec, CVec)> {
    signature().prop_flat_map(|s| (Just(s), cvec(s.n()), cvec(s.n())))
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + scale)
}

proptest! {
    #[test]
    fn form_is_hermitian_and_splits_into_metric_and_omega((s, z, w) in sig_and_pair()) {
        let h = herm_form(&z, &w, &s).unwrap();
        let h2 = herm_form(&w, &z, &s).unwrap();
        let scale = z.norm() * w.norm();
        prop_assert!((h - h2.conj()).norm() <= 1e-12 * (1.0 + scale));
        let g = metric(&z, &w, &s).unwrap();
        let om = symplectic(&z, &w, &s).unwrap();
        prop_assert!(close(g, h.re, scale));
        prop_assert!(close(om, -h.im, scale));
        prop_assert!(close(om, -symplectic(&w, &z, &s).unwrap(), scale));
        prop_assert!(close(om, metric(&apply_j(&z), &w, &s).unwrap(), scale));
    }

    #[test]
    fn pseudo_unitary_maps_preserve_the_form((s, z, w) in sig_and_pair(), seed in any::<u64>()) {
        let u = random_pseudo_unitary(&s, &mut ChaCha8Rng::seed_from_u64(seed));
        let h = herm_form(&z, &w, &s).unwrap();
        let hu = herm_form(&z.apply(&u), &w.apply(&u), &s).unwrap();
        let scale = u.max_abs().powi(2) * z.norm() * w.norm();
        prop_assert!((h - hu).norm() <= 1e-11 * (1.0 + scale), "{h} vs {hu}");
    }

    #[test]
    fn holomorphic_volume_transforms_by_det(s in signature(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = calibration::random_lagrangian_frame_with(&s, &mut rng, true).unwrap();
        let u = random_pseudo_unitary(&s, &mut rng);
        let lhs = hol_volume(&f.map_ambient(&u), &s).unwrap();
        let rhs = det(&u) * hol_volume(&f, &s).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
    }

    #[test]
    fn principal_value_range(a in -1e4f64..1e4) {
        let r = principal(a);
        prop_assert!(r > -PI && r <= PI);
        prop_assert!(distance(r, a) < 1e-9);
        let k = ((a - r) / (2.0 * PI)).round();
        prop_assert!((a - r - 2.0 * PI * k).abs() < 1e-9);
    }

    #[test]
    fn angle_ignores_oriented_reparametrization(s in signature(), seed in any::<u64>(), entries in prop::collection::vec(-2.0f64..2.0, 16)) {
        let f: Frame64 = calibration::random_lagrangian_frame(&s, seed).unwrap();
        let n = s.n();
        let a = Matrix::from_fn(n, n, |i, j| entries[i * n + j] + if i == j { 3.0 } else { 0.0 });
        let d = det(&a);
        prop_assume!(d.abs() > 0.1);
        let beta = frame_angle(&f, &s).unwrap();
        let beta_a = frame_angle(&f.reparametrize(&a), &s).unwrap();
        let expected = if d > 0.0 { beta } else { beta + PI };
        prop_assert!(distance(beta_a, expected) < 1e-9);
    }

    #[test]
    fn calibration_slack_is_nonnegative(s in signature(), seed in any::<u64>(), beta0 in -PI..PI) {
        let f = calibration::random_lagrangian_frame(&s, seed).unwrap();
        let c = calibration::calib_check(&f, beta0, &s).unwrap();
        prop_assert!(c.slack >= -1e-9 * (1.0 + c.dvol));
    }

    #[test]
    fn chart_points_lie_on_the_quadric(d in prop::collection::vec(0.5f64..3.0, 3), p in 0usize..=2, c in 0.5f64..2.0, t in prop::collection::vec(-1.0f64..1.0, 2)) {
        let s = Signature::new(p, 3).unwrap();
        // ε_j d_j x_j² = c has a point on some axis with ε_j = +1 since p < n
        let m = Matrix::diagonal(&d);
        let mut center = vec![0.0; 3];
        center[2] = (c / d[2]).sqrt();
        let chart = quadric_chart(&m, c, &s, &center, None).unwrap();
        let t: Vec<f64> = t.iter().map(|x| x * chart.half_width()).collect();
        let x = chart.point(&t).unwrap();
        let q: f64 = (0..3).map(|j| s.epsilon_real::<f64>(j) * d[j] * x[j] * x[j]).sum();
        prop_assert!((q - c).abs() < 1e-10 * (1.0 + c));
        let back = chart.inverse(&x).unwrap();
        prop_assert!(back.iter().zip(&t).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn totally_null_iff_omega_orthogonal_is_j_plane(seed in any::<u64>(), null in any::<bool>(), raw in prop::collection::vec(-1.0f64..1.0, 8)) {
        let s = Signature::new(1, 2).unwrap();
        let c = |a: f64, b: f64| Complex64::new(a, b);
        let plane = if null {
            // the totally null plane {x₁ = y₂, x₂ = y₁}, moved by U(1,1)
            let u = random_pseudo_unitary(&s, &mut ChaCha8Rng::seed_from_u64(seed));
            let a = CVector(vec![c(1.0, 0.0), c(0.0, 1.0)]).apply(&u);
            let b = CVector(vec![c(0.0, 1.0), c(1.0, 0.0)]).apply(&u);
            Plane::new(a, b)
        } else {
            Plane::new(CVector(vec![c(raw[0], raw[1]), c(raw[2], raw[3])]), CVector(vec![c(raw[4], raw[5]), c(raw[6], raw[7])]))
        };
        prop_assume!(plane.is_ok());
        let plane = plane.unwrap();
        let props = plane_props(&plane, &s).unwrap();
        if null {
            prop_assert!(props.totally_null);
        }
        // any two of the three properties force the third
        prop_assert!(props.count() != 2);
        if let Ok(orth) = symplectic_orthogonal(&plane, &s) {
            prop_assert_eq!(props.totally_null, orth.same_span(&plane.apply_j()));
            prop_assert!(symplectic_orthogonal(&orth, &s).unwrap().same_span(&plane));
        }
    }
}

#[test]
fn finite_difference_jets_match_analytic() {
    let sig = Signature::new(1, 2).unwrap();
    let patch = make_catenoid(&sig, &CatenoidSpec { epsilon: -1, c: 1.0, sector: 0, chart_center: None, chart_half_width: None }).unwrap();
    assert!(patch.is_analytic());
    let fd = patch.to_finite_difference(1e-5, 1e-4);
    for u in curvature::interior_samples(&patch, 100, 3) {
        let a = patch.jet(&u).unwrap();
        let b = fd.jet(&u).unwrap();
        for j in 0..2 {
            let e = (&a.first[j] - &b.first[j]).norm();
            assert!(e < 1e-7 * (1.0 + a.first[j].norm()), "{e:e} at {u:?} ({j})");
            for k in 0..2 {
                let e = (&a.second[j][k] - &b.second[j][k]).norm();
                let scale = a.second[j][k].norm();
                assert!(e < 1e-5 * (1.0 + scale), "{e:e} vs {scale:e} at {u:?} ({j},{k})");
            }
        }
    }
}
