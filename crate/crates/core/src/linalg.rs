//! Small dense linear algebra for the n ≤ 8 problems that arise here.
//!
//! Everything is row-major and allocation-light. The routines are written for
//! tiny matrices (Gram matrices, frames, 4×4 real embeddings of ℂ² planes), so
//! there is no blocking and no attempt at cache tuning.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::{Entry, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Copy + Zero> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows<R: AsRef<[S]>>(rows: &[R]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { rows: nrows, cols: ncols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn map<U: Copy + Zero>(&self, f: impl Fn(S) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }
}

impl<S: Copy + Zero + One> Matrix<S> {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { S::one() } else { S::zero() })
    }

    pub fn diagonal(d: &[S]) -> Self {
        Self::from_fn(d.len(), d.len(), |r, c| if r == c { d[r] } else { S::zero() })
    }
}

impl<S: Entry> Matrix<S> {
    pub fn scale(&self, k: S) -> Self {
        self.map(|x| x * k)
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> S::Real {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].modulus()).sum::<S::Real>())
            .fold(S::Real::zero(), num_traits::Float::max)
    }

    pub fn max_abs(&self) -> S::Real {
        self.data.iter().fold(S::Real::zero(), |a, &x| num_traits::Float::max(a, x.modulus()))
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).fold(S::zero(), |acc, i| acc + self[(i, i)])
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &S {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl<S: Entry> Mul for &Matrix<S> {
    type Output = Matrix<S>;

    fn mul(self, rhs: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == S::zero() {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        out
    }
}

impl<S: Entry> Add for &Matrix<S> {
    type Output = Matrix<S>;

    fn add(self, rhs: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<S: Entry> Sub for &Matrix<S> {
    type Output = Matrix<S>;

    fn sub(self, rhs: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

/// LU factorization with partial pivoting, in place. Returns the permutation
/// parity, or `None` when an exactly zero pivot column is met.
fn lu_in_place<S: Entry>(a: &mut Matrix<S>, perm: &mut [usize]) -> Option<bool> {
    let n = a.rows;
    let mut odd = false;
    for (i, p) in perm.iter_mut().enumerate() {
        *p = i;
    }
    for k in 0..n {
        let mut piv = k;
        let mut best = a[(k, k)].modulus();
        for r in k + 1..n {
            let m = a[(r, k)].modulus();
            if m > best {
                best = m;
                piv = r;
            }
        }
        if best == S::Real::zero() {
            return None;
        }
        if piv != k {
            for c in 0..n {
                a.data.swap(k * n + c, piv * n + c);
            }
            perm.swap(k, piv);
            odd = !odd;
        }
        let d = a[(k, k)];
        for r in k + 1..n {
            let f = a[(r, k)] / d;
            a[(r, k)] = f;
            if f == S::zero() {
                continue;
            }
            for c in k + 1..n {
                let v = a[(k, c)];
                a[(r, c)] -= f * v;
            }
        }
    }
    Some(odd)
}

/// Determinant by pivoted LU.
pub fn det<S: Entry>(m: &Matrix<S>) -> S {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.rows;
    if n == 0 {
        return S::one();
    }
    let mut a = m.clone();
    let mut perm = vec![0; n];
    match lu_in_place(&mut a, &mut perm) {
        None => S::zero(),
        Some(odd) => {
            let mut d = (0..n).fold(S::one(), |acc, i| acc * a[(i, i)]);
            if odd {
                d = -d;
            }
            d
        }
    }
}

/// Solves `m x = b`. Returns `None` for an exactly singular pivot.
pub fn solve<S: Entry>(m: &Matrix<S>, b: &[S]) -> Option<Vec<S>> {
    assert!(m.is_square(), "solve with a non-square matrix");
    let n = m.rows;
    assert_eq!(b.len(), n, "right-hand side dimension mismatch");
    let mut a = m.clone();
    let mut perm = vec![0; n];
    lu_in_place(&mut a, &mut perm)?;
    let mut y: Vec<S> = perm.iter().map(|&p| b[p]).collect();
    for r in 0..n {
        for c in 0..r {
            let v = y[c];
            y[r] -= a[(r, c)] * v;
        }
    }
    for r in (0..n).rev() {
        for c in r + 1..n {
            let v = y[c];
            y[r] -= a[(r, c)] * v;
        }
        y[r] /= a[(r, r)];
    }
    Some(y)
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// returned in ascending order.
pub fn symmetric_eigenvalues<T: Real>(m: &Matrix<T>) -> Vec<T> {
    assert!(m.is_square());
    let n = m.rows;
    let mut a = m.clone();
    // symmetrize defensively against round-off in callers
    for r in 0..n {
        for c in r + 1..n {
            let avg = (a[(r, c)] + a[(c, r)]) * T::lit(0.5);
            a[(r, c)] = avg;
            a[(c, r)] = avg;
        }
    }
    let scale = a.max_abs();
    if scale == T::zero() {
        return vec![T::zero(); n];
    }
    for _sweep in 0..100 {
        let mut off = T::zero();
        for r in 0..n {
            for c in r + 1..n {
                off += a[(r, c)] * a[(r, c)];
            }
        }
        if off.sqrt() <= T::epsilon() * scale * T::lit(1e-2) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Singular value decomposition by one-sided (Hestenes) Jacobi.
///
/// Returns the singular values (one per column of `m`, unsorted, matching the
/// columns of `v`) and the right singular vectors as columns of `v`, so that
/// the columns of `m · v` are mutually orthogonal with norms equal to the
/// singular values.
pub fn jacobi_svd<T: Real>(m: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    let rows = m.rows;
    let cols = m.cols;
    let mut a = m.clone();
    let mut v = Matrix::<T>::identity(cols);
    let tol = T::epsilon() * T::lit(4.0);
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = T::zero();
                for k in 0..rows {
                    let x = a[(k, i)];
                    let y = a[(k, j)];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma == T::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..rows {
                    let x = a[(k, i)];
                    let y = a[(k, j)];
                    a[(k, i)] = c * x - s * y;
                    a[(k, j)] = s * x + c * y;
                }
                for k in 0..cols {
                    let x = v[(k, i)];
                    let y = v[(k, j)];
                    v[(k, i)] = c * x - s * y;
                    v[(k, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sv = (0..cols)
        .map(|c| (0..rows).map(|r| a[(r, c)] * a[(r, c)]).sum::<T>().sqrt())
        .collect();
    (sv, v)
}

/// Numerical rank: singular values above `rel_tol × σ_max`.
pub fn rank<T: Real>(m: &Matrix<T>, rel_tol: T) -> usize {
    if m.rows == 0 || m.cols == 0 {
        return 0;
    }
    // one-sided Jacobi orthogonalizes columns; work on the wider side's transpose
    let work = if m.cols > m.rows { m.transpose() } else { m.clone() };
    let (sv, _) = jacobi_svd(&work);
    let smax = sv.iter().fold(T::zero(), |a, &b| a.max(b));
    if smax == T::zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Matrix exponential by scaling and squaring with a degree-13 Taylor kernel.
///
/// The argument is scaled by 2^-k until its 1-norm is at most 0.5; the
/// truncation error of the kernel is then below 0.5^14/14! ≈ 7e-16. No
/// diagonalizability is assumed.
pub fn expm<T: Real>(a: &Matrix<Complex<T>>) -> Matrix<Complex<T>> {
    assert!(a.is_square(), "exponential of a non-square matrix");
    let n = a.rows;
    let norm = a.norm_one();
    let mut squarings = 0u32;
    let threshold = T::lit(0.5);
    let mut scale = T::one();
    while norm * scale > threshold {
        scale = scale * T::lit(0.5);
        squarings += 1;
    }
    let scaled = a.scale(Complex::new(scale, T::zero()));
    // Horner evaluation of Σ_{k≤13} X^k / k!
    let mut result = Matrix::<Complex<T>>::identity(n);
    for k in (1..=13u32).rev() {
        let inv_k = Complex::new(T::one() / T::lit(f64::from(k)), T::zero());
        let prod = &scaled * &result;
        result = &Matrix::identity(n) + &prod.scale(inv_k);
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Embeds a real matrix as a complex one.
pub fn complexify<T: Real>(m: &Matrix<T>) -> Matrix<Complex<T>> {
    m.map(|x| Complex::new(x, T::zero()))
}
