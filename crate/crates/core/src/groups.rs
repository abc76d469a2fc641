//! Matrix groups attached to ⟨·,·⟩_p: the one-parameter groups e^{iMs} for
//! self-adjoint M, and random elements of SO(p, n−p) and U(p, n−p).

use num_complex::Complex64;
use rand::Rng;

use crate::linalg::{self, Matrix};
use crate::psherm::Signature;

/// e^{iMs}, with M real. Exact scaling-and-squaring; no diagonalization.
pub fn mat_exp_ims(m: &Matrix<f64>, s: f64) -> Matrix<Complex64> {
    linalg::expm(&linalg::complexify(m).scale(Complex64::new(0.0, s)))
}

/// max |(GM)ᵀ − GM| entrywise, with G = diag(ε). Zero iff ⟨Mx, y⟩_p = ⟨x, My⟩_p.
pub fn check_self_adjoint(m: &Matrix<f64>, sig: &Signature) -> f64 {
    let gm = &sig.gram::<f64>() * m;
    let t = gm.transpose();
    (&t - &gm).max_abs()
}

fn uniform_half(rng: &mut impl Rng) -> f64 {
    rng.random_range(-0.5..=0.5)
}

/// exp(G·S) with S real antisymmetric, entries uniform in [−0.5, 0.5].
pub fn random_so_pq(sig: &Signature, rng: &mut impl Rng) -> Matrix<f64> {
    let n = sig.n();
    let mut s = Matrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let x = uniform_half(rng);
            s[(i, j)] = x;
            s[(j, i)] = -x;
        }
    }
    let gs = &sig.gram::<f64>() * &s;
    linalg::expm(&linalg::complexify(&gs)).map(|z| z.re)
}

/// exp(G·S_h) with S_h anti-Hermitian, real and imaginary parts uniform in [−0.5, 0.5].
pub fn random_pseudo_unitary(sig: &Signature, rng: &mut impl Rng) -> Matrix<Complex64> {
    let n = sig.n();
    let mut s = Matrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        s[(i, i)] = Complex64::new(0.0, uniform_half(rng));
        for j in i + 1..n {
            let z = Complex64::new(uniform_half(rng), uniform_half(rng));
            s[(i, j)] = z;
            s[(j, i)] = -z.conj();
        }
    }
    let g = linalg::complexify(&sig.gram::<f64>());
    linalg::expm(&(&g * &s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psherm::{herm_form, CVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &Matrix<Complex64>, b: &Matrix<Complex64>, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn identity_generator_gives_scalar_phase() {
        let e = mat_exp_ims(&Matrix::identity(3), 0.7);
        let expected = Matrix::<Complex64>::identity(3).scale(Complex64::from_polar(1.0, 0.7));
        assert!(close(&e, &expected, 1e-14));
        assert!(close(&mat_exp_ims(&Matrix::identity(3), 0.0), &Matrix::identity(3), 0.0));
    }

    #[test]
    fn rotation_generator_is_hyperbolic() {
        let m = Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]);
        let s: f64 = 1.3;
        let i = Complex64::i();
        let expected = Matrix::from_rows(&[
            [Complex64::from(s.cosh()), -i * s.sinh()],
            [i * s.sinh(), Complex64::from(s.cosh())],
        ]);
        assert!(close(&mat_exp_ims(&m, s), &expected, 1e-13));
        assert_eq!(check_self_adjoint(&m, &Signature::new(1, 2).unwrap()), 0.0);
        assert_eq!(check_self_adjoint(&m, &Signature::new(0, 2).unwrap()), 2.0);
    }

    #[test]
    fn group_law_for_nilpotent_generator() {
        // not diagonalizable
        let m = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]);
        let (s, t) = (0.4, -1.1);
        let prod = &mat_exp_ims(&m, s) * &mat_exp_ims(&m, t);
        assert!(close(&mat_exp_ims(&m, s + t), &prod, 1e-12));
    }

    #[test]
    fn sampled_groups_preserve_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (p, n) in [(0, 3), (1, 3), (2, 4)] {
            let sig = Signature::new(p, n).unwrap();
            let a = linalg::complexify(&random_so_pq(&sig, &mut rng));
            let u = random_pseudo_unitary(&sig, &mut rng);
            let z = CVector::new((0..n).map(|k| Complex64::new(k as f64 - 0.5, 0.3)).collect());
            let w = CVector::new((0..n).map(|k| Complex64::new(0.2, 1.0 - k as f64)).collect());
            let h0 = herm_form(&z, &w, &sig).unwrap();
            for g in [&a, &u] {
                let h1 = herm_form(&z.apply(g), &w.apply(g), &sig).unwrap();
                assert!((h1 - h0).norm() < 1e-12);
            }
        }
    }
}
