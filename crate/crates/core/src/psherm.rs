//! Linear algebra of ℂⁿ with the pseudo-Hermitian form
//! ⟨⟨z, w⟩⟩_p = −Σ_{j≤p} z_j w̄_j + Σ_{j>p} z_j w̄_j,
//! its real part (a metric of signature (2p, 2(n−p))) and the symplectic form
//! ω_p = −Im ⟨⟨·,·⟩⟩_p.

use std::ops::{Add, Index, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::Real;

/// Default relative tolerance for degeneracy and subspace tests.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSignature", into = "RawSignature")]
pub struct Signature {
    p: usize,
    n: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignature {
    p: usize,
    n: usize,
}

impl TryFrom<RawSignature> for Signature {
    type Error = Error;

    fn try_from(raw: RawSignature) -> Result<Self> {
        Signature::new(raw.p, raw.n)
    }
}

impl From<Signature> for RawSignature {
    fn from(s: Signature) -> Self {
        RawSignature { p: s.p, n: s.n }
    }
}

impl Signature {
    pub fn new(p: usize, n: usize) -> Result<Self> {
        if n == 0 || p > n {
            return Err(Error::InvalidSignature { p, n });
        }
        Ok(Self { p, n })
    }

    /// Definite signature (p = 0).
    pub fn definite(n: usize) -> Result<Self> {
        Self::new(0, n)
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// ε_j for a zero-based index: −1 on the first p coordinates, +1 after.
    #[inline]
    pub fn epsilon(&self, j: usize) -> i8 {
        if j < self.p {
            -1
        } else {
            1
        }
    }

    #[inline]
    pub fn epsilon_real<T: Real>(&self, j: usize) -> T {
        if j < self.p {
            -T::one()
        } else {
            T::one()
        }
    }

    pub fn sign_vector<T: Real>(&self) -> Vec<T> {
        (0..self.n).map(|j| self.epsilon_real(j)).collect()
    }

    /// G = diag(ε_1, …, ε_n).
    pub fn gram<T: Real>(&self) -> Matrix<T> {
        Matrix::diagonal(&self.sign_vector())
    }

    pub fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: len });
        }
        Ok(())
    }
}

/// A vector of ℂⁿ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CVector<T>(pub Vec<Complex<T>>);

impl<T: Real> CVector<T> {
    pub fn new(entries: Vec<Complex<T>>) -> Self {
        Self(entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![Complex::zero(); n])
    }

    /// Canonical basis vector e_j (zero-based).
    pub fn basis(n: usize, j: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[j] = Complex::one();
        v
    }

    pub fn from_real(x: &[T]) -> Self {
        Self(x.iter().map(|&r| Complex::new(r, T::zero())).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex<T>> {
        self.0.iter()
    }

    /// Euclidean norm in ℂⁿ ≅ ℝ²ⁿ.
    pub fn norm(&self) -> T {
        self.0.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn scale(&self, k: Complex<T>) -> Self {
        Self(self.0.iter().map(|&z| z * k).collect())
    }

    pub fn scale_real(&self, k: T) -> Self {
        Self(self.0.iter().map(|&z| z * k).collect())
    }

    /// Real coordinates (x_1, …, x_n, y_1, …, y_n).
    pub fn to_real(&self) -> Vec<T> {
        self.0.iter().map(|z| z.re).chain(self.0.iter().map(|z| z.im)).collect()
    }

    pub fn from_real_coords(v: &[T]) -> Self {
        let n = v.len() / 2;
        Self((0..n).map(|j| Complex::new(v[j], v[n + j])).collect())
    }

    pub fn apply(&self, m: &Matrix<Complex<T>>) -> Self {
        Self(m.mul_vec(&self.0))
    }

    /// Combination Σ c_k v_k with real coefficients.
    pub fn combination(coeffs: &[T], vectors: &[CVector<T>]) -> Self {
        let n = vectors.first().map_or(0, CVector::len);
        let mut out = Self::zeros(n);
        for (&c, v) in coeffs.iter().zip(vectors) {
            for (o, &z) in out.0.iter_mut().zip(&v.0) {
                *o += z * c;
            }
        }
        out
    }
}

impl<T> Index<usize> for CVector<T> {
    type Output = Complex<T>;

    fn index(&self, j: usize) -> &Complex<T> {
        &self.0[j]
    }
}

impl<T: Real> Add for &CVector<T> {
    type Output = CVector<T>;

    fn add(self, rhs: &CVector<T>) -> CVector<T> {
        CVector(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a + b).collect())
    }
}

impl<T: Real> Sub for &CVector<T> {
    type Output = CVector<T>;

    fn sub(self, rhs: &CVector<T>) -> CVector<T> {
        CVector(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a - b).collect())
    }
}

impl<T: Real> Neg for &CVector<T> {
    type Output = CVector<T>;

    fn neg(self) -> CVector<T> {
        CVector(self.0.iter().map(|&a| -a).collect())
    }
}

impl<T: Real> Mul<Complex<T>> for &CVector<T> {
    type Output = CVector<T>;

    fn mul(self, k: Complex<T>) -> CVector<T> {
        self.scale(k)
    }
}

/// An ordered list of vectors, the argument of Ω and of Gram evaluations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame<T> {
    pub vectors: Vec<CVector<T>>,
}

impl<T: Real> Frame<T> {
    pub fn new(vectors: Vec<CVector<T>>) -> Self {
        Self { vectors }
    }

    pub fn canonical(n: usize) -> Self {
        Self::new((0..n).map(|j| CVector::basis(n, j)).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Product of the Euclidean norms of the frame vectors.
    pub fn scale(&self) -> T {
        self.vectors.iter().map(CVector::norm).fold(T::one(), |a, b| a * b)
    }

    /// Applies a complex matrix to every vector.
    pub fn map_ambient(&self, m: &Matrix<Complex<T>>) -> Self {
        Self::new(self.vectors.iter().map(|v| v.apply(m)).collect())
    }

    /// Reparametrizes the frame: new X_j = Σ_k a_{kj} X_k.
    pub fn reparametrize(&self, a: &Matrix<T>) -> Self {
        let k = self.len();
        Self::new(
            (0..a.cols())
                .map(|j| {
                    let coeffs: Vec<T> = (0..k).map(|r| a[(r, j)]).collect();
                    CVector::combination(&coeffs, &self.vectors)
                })
                .collect(),
        )
    }

    fn check(&self, sig: &Signature) -> Result<()> {
        for v in &self.vectors {
            sig.check_dim(v.len())?;
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn herm_raw<T: Real>(z: &[Complex<T>], w: &[Complex<T>], sig: &Signature) -> Complex<T> {
    let mut acc = Complex::zero();
    for (j, (a, b)) in z.iter().zip(w).enumerate() {
        let term = a * b.conj();
        if j < sig.p() {
            acc -= term;
        } else {
            acc += term;
        }
    }
    acc
}

#[inline]
pub(crate) fn metric_raw<T: Real>(z: &[Complex<T>], w: &[Complex<T>], sig: &Signature) -> T {
    herm_raw(z, w, sig).re
}

#[inline]
pub(crate) fn symplectic_raw<T: Real>(z: &[Complex<T>], w: &[Complex<T>], sig: &Signature) -> T {
    -herm_raw(z, w, sig).im
}

fn check_pair<T: Real>(z: &CVector<T>, w: &CVector<T>, sig: &Signature) -> Result<()> {
    sig.check_dim(z.len())?;
    sig.check_dim(w.len())
}

/// ⟨⟨z, w⟩⟩_p.
pub fn herm_form<T: Real>(z: &CVector<T>, w: &CVector<T>, sig: &Signature) -> Result<Complex<T>> {
    check_pair(z, w, sig)?;
    Ok(herm_raw(&z.0, &w.0, sig))
}

/// ⟨z, w⟩_{2p} = Re ⟨⟨z, w⟩⟩_p.
pub fn metric<T: Real>(z: &CVector<T>, w: &CVector<T>, sig: &Signature) -> Result<T> {
    check_pair(z, w, sig)?;
    Ok(metric_raw(&z.0, &w.0, sig))
}

/// ω_p(z, w) = −Im ⟨⟨z, w⟩⟩_p.
pub fn symplectic<T: Real>(z: &CVector<T>, w: &CVector<T>, sig: &Signature) -> Result<T> {
    check_pair(z, w, sig)?;
    Ok(symplectic_raw(&z.0, &w.0, sig))
}

/// The complex structure J: multiplication by i.
pub fn apply_j<T: Real>(z: &CVector<T>) -> CVector<T> {
    CVector(z.0.iter().map(|&a| Complex::new(-a.im, a.re)).collect())
}

/// Ω(X_1, …, X_n) = det of the matrix whose rows are the frame vectors.
pub fn hol_volume<T: Real>(frame: &Frame<T>, sig: &Signature) -> Result<Complex<T>> {
    if frame.len() != sig.n() {
        return Err(Error::DimensionMismatch { expected: sig.n(), got: frame.len() });
    }
    frame.check(sig)?;
    Ok(hol_volume_raw(frame))
}

pub(crate) fn hol_volume_raw<T: Real>(frame: &Frame<T>) -> Complex<T> {
    let rows: Vec<&[Complex<T>]> = frame.vectors.iter().map(|v| v.as_slice()).collect();
    linalg::det(&Matrix::from_rows(&rows))
}

/// Real matrix whose columns are the real coordinates of `vectors`.
pub fn real_span_matrix<T: Real>(vectors: &[CVector<T>]) -> Matrix<T> {
    let cols: Vec<Vec<T>> = vectors.iter().map(CVector::to_real).collect();
    let rows = cols.first().map_or(0, Vec::len);
    Matrix::from_fn(rows, cols.len(), |r, c| cols[c][r])
}

/// Real dimension of the real span.
pub fn real_rank<T: Real>(vectors: &[CVector<T>], rel_tol: T) -> usize {
    linalg::rank(&real_span_matrix(vectors), rel_tol)
}

/// Equality of real spans, decided by ranks of the stacked bases.
pub fn same_real_span<T: Real>(a: &[CVector<T>], b: &[CVector<T>], rel_tol: T) -> bool {
    let ra = real_rank(a, rel_tol);
    let rb = real_rank(b, rel_tol);
    if ra != rb {
        return false;
    }
    let stacked: Vec<CVector<T>> = a.iter().chain(b).cloned().collect();
    real_rank(&stacked, rel_tol) == ra
}

/// A real 2-plane in ℂ².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plane<T> {
    basis: [CVector<T>; 2],
}

impl<T: Real> Plane<T> {
    pub fn new(a: CVector<T>, b: CVector<T>) -> Result<Self> {
        if a.len() != 2 || b.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: a.len().max(b.len()) });
        }
        let basis = [a, b];
        if real_rank(&basis, T::lit(DEFAULT_TOL)) != 2 {
            return Err(Error::Degenerate("plane basis is not real-linearly independent".into()));
        }
        Ok(Self { basis })
    }

    pub fn basis(&self) -> &[CVector<T>; 2] {
        &self.basis
    }

    pub fn apply_j(&self) -> Self {
        Self { basis: [apply_j(&self.basis[0]), apply_j(&self.basis[1])] }
    }

    pub fn same_span(&self, other: &Plane<T>) -> bool {
        same_real_span(&self.basis, &other.basis, T::lit(DEFAULT_TOL))
    }

    pub fn contains(&self, v: &CVector<T>) -> bool {
        let stacked = [self.basis[0].clone(), self.basis[1].clone(), v.clone()];
        real_rank(&stacked, T::lit(DEFAULT_TOL)) == 2
    }
}

fn check_plane_sig(sig: &Signature) -> Result<()> {
    if sig.n() != 2 {
        return Err(Error::Precondition(format!("plane operations need n = 2, got n = {}", sig.n())));
    }
    Ok(())
}

/// P^ω = { v : ω_p(v, x) = 0 for all x in P }.
pub fn symplectic_orthogonal<T: Real>(plane: &Plane<T>, sig: &Signature) -> Result<Plane<T>> {
    check_plane_sig(sig)?;
    // ω(v, b) = Σ ε_j (x_vj y_bj − y_vj x_bj): one row of a 2×4 system per basis vector
    let mut a = Matrix::<T>::zeros(4, 4);
    for (k, b) in plane.basis.iter().enumerate() {
        for j in 0..2 {
            let eps: T = sig.epsilon_real(j);
            a[(k, j)] = eps * b[j].im;
            a[(k, 2 + j)] = -eps * b[j].re;
        }
    }
    let (sv, v) = linalg::jacobi_svd(&a);
    let smax = sv.iter().fold(T::zero(), |x, &y| x.max(y));
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| sv[i].partial_cmp(&sv[j]).unwrap_or(std::cmp::Ordering::Equal));
    let tol = T::lit(DEFAULT_TOL) * smax;
    if smax == T::zero() || sv[order[2]] <= tol || sv[order[1]] > tol {
        return Err(Error::Degenerate("symplectic orthogonal: rank-deficient null-space solve".into()));
    }
    let null: Vec<CVector<T>> = order[..2]
        .iter()
        .map(|&c| CVector::from_real_coords(&v.column(c)))
        .collect();
    let mut it = null.into_iter();
    Plane::new(it.next().unwrap(), it.next().unwrap())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaneProps {
    pub totally_null: bool,
    pub lagrangian: bool,
    pub complex: bool,
}

impl PlaneProps {
    pub fn count(&self) -> usize {
        usize::from(self.totally_null) + usize::from(self.lagrangian) + usize::from(self.complex)
    }
}

pub fn plane_props<T: Real>(plane: &Plane<T>, sig: &Signature) -> Result<PlaneProps> {
    plane_props_with_tol(plane, sig, T::lit(DEFAULT_TOL))
}

pub fn plane_props_with_tol<T: Real>(plane: &Plane<T>, sig: &Signature, tol: T) -> Result<PlaneProps> {
    check_plane_sig(sig)?;
    let [a, b] = &plane.basis;
    let na = a.norm();
    let nb = b.norm();
    let null = metric_raw(&a.0, &a.0, sig).abs() <= tol * na * na
        && metric_raw(&b.0, &b.0, sig).abs() <= tol * nb * nb
        && metric_raw(&a.0, &b.0, sig).abs() <= tol * na * nb;
    let lagrangian = symplectic_raw(&a.0, &b.0, sig).abs() <= tol * na * nb;
    let complex = same_real_span(&plane.basis, &plane.apply_j().basis, tol);
    Ok(PlaneProps { totally_null: null, lagrangian, complex })
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn v(entries: &[(f64, f64)]) -> CVector<f64> {
        CVector(entries.iter().map(|&(r, i)| C::new(r, i)).collect())
    }

    fn sig(p: usize, n: usize) -> Signature {
        Signature::new(p, n).unwrap()
    }

    #[test]
    fn signature_bounds() {
        assert!(Signature::new(3, 2).is_err());
        assert!(Signature::new(0, 0).is_err());
        let s = sig(1, 3);
        assert_eq!([s.epsilon(0), s.epsilon(1), s.epsilon(2)], [-1, 1, 1]);
    }

    #[test]
    fn herm_form_examples() {
        let s = sig(1, 2);
        let e1 = CVector::<f64>::basis(2, 0);
        let e2 = CVector::<f64>::basis(2, 1);
        assert_eq!(herm_form(&e1, &e1, &s).unwrap(), C::new(-1.0, 0.0));
        assert_eq!(herm_form(&e2, &e2, &s).unwrap(), C::new(1.0, 0.0));
        let z = v(&[(1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(herm_form(&z, &e2, &s).unwrap(), C::new(0.0, 1.0));
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let s = sig(1, 2);
        let z = CVector::<f64>::basis(3, 0);
        let w = CVector::<f64>::basis(2, 0);
        assert_eq!(herm_form(&z, &w, &s), Err(Error::DimensionMismatch { expected: 2, got: 3 }));
        assert!(metric(&z, &w, &s).is_err());
        assert!(hol_volume(&Frame::<f64>::canonical(3), &s).is_err());
    }

    #[test]
    fn metric_and_symplectic_examples() {
        let s = sig(1, 2);
        let e1 = CVector::<f64>::basis(2, 0);
        let ie1 = apply_j(&e1);
        assert_eq!(metric(&e1, &ie1, &s).unwrap(), 0.0);
        assert_eq!(symplectic(&e1, &ie1, &s).unwrap(), -1.0);
        let x = v(&[(0.3, -1.2), (2.0, 0.7)]);
        assert_eq!(symplectic(&x, &x, &s).unwrap(), 0.0);
    }

    #[test]
    fn j_squares_to_minus_one() {
        let z = v(&[(0.3, -1.2), (2.0, 0.7)]);
        assert_eq!(apply_j(&apply_j(&z)), -&z);
        assert_eq!(apply_j(&CVector::<f64>::basis(2, 0)), v(&[(0.0, 1.0), (0.0, 0.0)]));
    }

    #[test]
    fn hol_volume_examples() {
        let s = sig(1, 3);
        assert_eq!(hol_volume(&Frame::<f64>::canonical(3), &s).unwrap(), C::new(1.0, 0.0));
        let mut f = Frame::<f64>::canonical(3);
        f.vectors.swap(0, 2);
        assert_eq!(hol_volume(&f, &s).unwrap(), C::new(-1.0, 0.0));
        let theta = 0.77f64;
        let mut g = Frame::<f64>::canonical(3);
        g.vectors[0] = g.vectors[0].scale(C::from_polar(1.0, theta));
        let w = hol_volume(&g, &s).unwrap();
        assert!((w - C::from_polar(1.0, theta)).norm() < 1e-15);
    }

    #[test]
    fn symplectic_orthogonal_of_real_plane_is_itself() {
        let s = sig(1, 2);
        let p = Plane::new(CVector::<f64>::basis(2, 0), CVector::basis(2, 1)).unwrap();
        let q = symplectic_orthogonal(&p, &s).unwrap();
        assert!(q.same_span(&p));
    }

    #[test]
    fn symplectic_orthogonal_of_complex_line() {
        let s = sig(1, 2);
        let e1 = CVector::<f64>::basis(2, 0);
        let p = Plane::new(e1.clone(), apply_j(&e1)).unwrap();
        let q = symplectic_orthogonal(&p, &s).unwrap();
        let e2 = CVector::<f64>::basis(2, 1);
        let expected = Plane::new(e2.clone(), apply_j(&e2)).unwrap();
        assert!(q.same_span(&expected));
    }

    #[test]
    fn null_plane_of_split_example() {
        // {x1 = y2, x2 = y1}: spanned by (1, i) and (i, 1)
        let s = sig(1, 2);
        let p = Plane::new(v(&[(1.0, 0.0), (0.0, 1.0)]), v(&[(0.0, 1.0), (1.0, 0.0)])).unwrap();
        let props = plane_props(&p, &s).unwrap();
        assert_eq!(props, PlaneProps { totally_null: true, lagrangian: false, complex: false });
        let q = symplectic_orthogonal(&p, &s).unwrap();
        assert!(q.same_span(&p.apply_j()));
    }

    #[test]
    fn real_plane_props() {
        let s = sig(1, 2);
        let p = Plane::new(CVector::<f64>::basis(2, 0), CVector::basis(2, 1)).unwrap();
        let props = plane_props(&p, &s).unwrap();
        assert_eq!(props, PlaneProps { totally_null: false, lagrangian: true, complex: false });
    }

    #[test]
    fn dependent_basis_rejected() {
        let a = v(&[(1.0, 2.0), (0.5, 0.0)]);
        let b = a.scale_real(-3.0);
        assert!(matches!(Plane::new(a, b), Err(Error::Degenerate(_))));
    }

    #[test]
    fn plane_ops_need_n_two() {
        let s = sig(1, 3);
        let p = Plane::new(CVector::<f64>::basis(2, 0), CVector::basis(2, 1)).unwrap();
        assert!(matches!(plane_props(&p, &s), Err(Error::Precondition(_))));
    }

    #[test]
    fn signature_serde_validates() {
        let ok: Signature = serde_json::from_str(r#"{"p":1,"n":2}"#).unwrap();
        assert_eq!(ok, sig(1, 2));
        assert!(serde_json::from_str::<Signature>(r#"{"p":3,"n":2}"#).is_err());
        assert!(serde_json::from_str::<Signature>(r#"{"p":0,"n":2,"q":1}"#).is_err());
    }

    #[test]
    fn f32_forms() {
        let s = sig(1, 2);
        let z = CVector::<f32>(vec![Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)]);
        let e2 = CVector::<f32>::basis(2, 1);
        assert_eq!(herm_form(&z, &e2, &s).unwrap(), Complex::new(0.0f32, 1.0));
    }
}
