//! Dense complex linear algebra: Hermitian generalized eigenvalues and
//! determinants.
//!
//! The generalized problem `K x = λ M x` (K Hermitian, M Hermitian positive
//! definite) is reduced to standard form with the Cholesky factor of `M`,
//! brought to real symmetric tridiagonal form by Householder reflections and
//! then solved with the implicit QL iteration.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex::zero(); n * n] }
    }

    pub fn from_real(n: usize, entries: &[T]) -> Self {
        assert_eq!(entries.len(), n * n, "entry count must be n*n");
        Self { n, data: entries.iter().map(|&x| Complex::new(x, T::zero())).collect() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex<T>) {
        self.data[i * self.n + j] = value;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: Complex<T>) {
        self.data[i * self.n + j] += value;
    }

    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(x)
                    .fold(Complex::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// max |A - A^H|.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in 0..=i {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

/// Lower Cholesky factor `L` with `A = L L^H`.
pub fn cholesky<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    let n = a.dim();
    let mut l = CMatrix::zeros(n);
    for j in 0..n {
        let mut diag = a.get(j, j).re;
        for k in 0..j {
            diag -= l.get(j, k).norm_sqr();
        }
        if !(diag > T::zero()) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: diag.lossy_f64() });
        }
        let ljj = diag.sqrt();
        l.set(j, j, Complex::new(ljj, T::zero()));
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k).conj();
            }
            l.set(i, j, s / ljj);
        }
    }
    Ok(l)
}

/// Forward substitution `L X = B` applied in place to every column of `b`.
fn forward_solve_columns<T: Real>(l: &CMatrix<T>, b: &mut CMatrix<T>) {
    let n = l.dim();
    for col in 0..n {
        for i in 0..n {
            let mut s = b.get(i, col);
            for k in 0..i {
                s -= l.get(i, k) * b.get(k, col);
            }
            b.set(i, col, s / l.get(i, i).re);
        }
    }
}

fn conjugate_transpose<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let n = a.dim();
    let mut t = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            t.set(j, i, a.get(i, j).conj());
        }
    }
    t
}

/// `L^{-1} K L^{-H}` for Hermitian `K`, symmetrized.
pub fn reduce_to_standard<T: Real>(k: &CMatrix<T>, l: &CMatrix<T>) -> CMatrix<T> {
    let mut y = k.clone();
    forward_solve_columns(l, &mut y);
    // (L^{-1} K L^{-H})^H = L^{-1} (L^{-1} K)^H, and the product is Hermitian.
    let mut z = conjugate_transpose(&y);
    forward_solve_columns(l, &mut z);
    let n = z.dim();
    let half = T::lit(0.5);
    for i in 0..n {
        for j in 0..i {
            let avg = (z.get(i, j) + z.get(j, i).conj()) * half;
            z.set(i, j, avg);
            z.set(j, i, avg.conj());
        }
        let d = z.get(i, i).re;
        z.set(i, i, Complex::new(d, T::zero()));
    }
    z
}

/// Real symmetric tridiagonal form (diagonal, off-diagonal) of a Hermitian
/// matrix. The off-diagonal entries are the moduli of the complex
/// subdiagonal, which leaves the spectrum unchanged.
pub fn tridiagonalize<T: Real>(mut a: CMatrix<T>) -> (Vec<T>, Vec<T>) {
    let n = a.dim();
    let mut offdiag = vec![T::zero(); n];
    let mut v = vec![Complex::<T>::zero(); n];
    let mut p = vec![Complex::<T>::zero(); n];
    let two = T::lit(2.0);
    for k in 0..n.saturating_sub(1) {
        let start = k + 1;
        let sigma = (start..n).map(|i| a.get(i, k).norm_sqr()).sum::<T>().sqrt();
        let x0 = a.get(start, k);
        let tail: T = (start + 1..n).map(|i| a.get(i, k).norm_sqr()).sum();
        if tail == T::zero() {
            offdiag[k] = x0.norm();
            continue;
        }
        let x0_abs = x0.norm();
        let phase = if x0_abs > T::zero() { x0 / x0_abs } else { Complex::one() };
        let alpha = -phase * sigma;
        for i in start..n {
            v[i] = a.get(i, k);
        }
        v[start] -= alpha;
        let vnorm = (start..n).map(|i| v[i].norm_sqr()).sum::<T>().sqrt();
        for vi in v.iter_mut().take(n).skip(start) {
            *vi /= vnorm;
        }
        offdiag[k] = sigma;

        // Trailing block update A <- A - 2 (v w^H + w v^H), w = p - (v^H p) v.
        for i in start..n {
            let mut s = Complex::zero();
            for j in start..n {
                s += a.get(i, j) * v[j];
            }
            p[i] = s;
        }
        let beta: T = (start..n).map(|i| (v[i].conj() * p[i]).re).sum();
        for i in start..n {
            p[i] -= v[i] * beta;
        }
        for i in start..n {
            let vi = v[i] * two;
            let wi = p[i] * two;
            for j in start..n {
                let upd = vi * p[j].conj() + wi * v[j].conj();
                a.add(i, j, -upd);
            }
        }
    }
    let diag = (0..n).map(|i| a.get(i, i).re).collect();
    (diag, offdiag)
}

/// All eigenvalues of a symmetric tridiagonal matrix, ascending.
///
/// `offdiag[i]` couples rows `i` and `i + 1`; the last entry is ignored.
pub fn tridiagonal_eigenvalues<T: Real>(diag: &[T], offdiag: &[T]) -> Result<Vec<T>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.resize(n, T::zero());
    if n > 0 {
        e[n - 1] = T::zero();
    }
    let eps = T::epsilon();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigensolverFailure { index: l, residual: e[l].lossy_f64() });
            }
            let mut g = (d[l + 1] - d[l]) / (T::lit(2.0) * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + T::lit(2.0) * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(d)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues<T: Real>(a: &CMatrix<T>) -> Result<Vec<T>> {
    let (d, e) = tridiagonalize(a.clone());
    tridiagonal_eigenvalues(&d, &e)
}

/// Eigenvalues of a real symmetric matrix given row-major, ascending.
pub fn symmetric_eigenvalues<T: Real>(n: usize, entries: &[T]) -> Result<Vec<T>> {
    hermitian_eigenvalues(&CMatrix::from_real(n, entries))
}

/// Eigenvalues of the pencil `K x = λ M x`, ascending.
pub fn generalized_eigenvalues<T: Real>(k: &CMatrix<T>, m: &CMatrix<T>) -> Result<Vec<T>> {
    let l = cholesky(m)?;
    let c = reduce_to_standard(k, &l);
    let (d, e) = tridiagonalize(c);
    tridiagonal_eigenvalues(&d, &e)
}

/// Determinant by LU factorization with partial pivoting.
pub fn determinant<T: Real>(mut a: CMatrix<T>) -> Complex<T> {
    let n = a.dim();
    let mut det = Complex::<T>::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a.get(i, col).norm().partial_cmp(&a.get(j, col).norm()).expect("finite entries"))
            .expect("nonempty column");
        let pv = a.get(pivot, col);
        if pv.norm() == T::zero() {
            return Complex::zero();
        }
        if pivot != col {
            for j in 0..n {
                let tmp = a.get(col, j);
                a.set(col, j, a.get(pivot, j));
                a.set(pivot, j, tmp);
            }
            det = -det;
        }
        det *= pv;
        for i in col + 1..n {
            let factor = a.get(i, col) / pv;
            if factor.norm() == T::zero() {
                continue;
            }
            for j in col..n {
                let upd = factor * a.get(col, j);
                a.add(i, j, -upd);
            }
        }
    }
    det
}
