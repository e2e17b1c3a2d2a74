//! Dense square complex matrices sized for a handful of qubits.

use crate::error::{Error, Result};
use crate::scalar::Real;
use num_complex::Complex;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

/// Row-major `dim × dim` complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<R> {
    dim: usize,
    data: Vec<Complex<R>>,
}

impl<R: Real> CMatrix<R> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Complex::new(R::zero(), R::zero()); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::new(R::one(), R::zero());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<R>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_vec(dim: usize, data: Vec<Complex<R>>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::LengthMismatch { expected: dim * dim, found: data.len() });
        }
        if !data.iter().all(|z| crate::scalar::is_finite(*z)) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<const N: usize>(rows: [[Complex<R>; N]; N]) -> Self {
        Self { dim: N, data: rows.into_iter().flatten().collect() }
    }

    pub fn diagonal(entries: &[Complex<R>]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// `|v⟩⟨v|`.
    pub fn outer(v: &[Complex<R>]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex<R>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, k: Complex<R>) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&z| z * k).collect() }
    }

    pub fn scale_real(&self, k: R) -> Self {
        self.scale(Complex::new(k, R::zero()))
    }

    pub fn trace(&self) -> Complex<R> {
        (0..self.dim).fold(Complex::new(R::zero(), R::zero()), |acc, i| acc + self[(i, i)])
    }

    /// Kronecker product `self ⊗ other`; `self` occupies the more significant index bits.
    pub fn kron(&self, other: &Self) -> Self {
        let d = other.dim;
        Self::from_fn(self.dim * d, |i, j| self[(i / d, j / d)] * other[(i % d, j % d)])
    }

    pub fn mul_vec(&self, v: &[Complex<R>]) -> Vec<Complex<R>> {
        (0..self.dim)
            .map(|i| {
                let row = &self.data[i * self.dim..(i + 1) * self.dim];
                row.iter().zip(v).fold(Complex::new(R::zero(), R::zero()), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(R::zero(), R::max)
    }

    /// Entrywise distance after removing one global phase, aligned on the
    /// largest-magnitude entry of `self`.
    pub fn max_abs_diff_up_to_phase(&self, other: &Self) -> R {
        let Some((k, _)) = self
            .data
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap_or(std::cmp::Ordering::Equal))
        else {
            return R::zero();
        };
        let (a, b) = (self.data[k], other.data[k]);
        let phase = if b.norm() > R::zero() && a.norm() > R::zero() {
            let r = a / b;
            r / r.norm()
        } else {
            Complex::new(R::one(), R::zero())
        };
        self.max_abs_diff(&other.scale(phase))
    }

    /// `max |U†U − I|`.
    pub fn unitarity_deviation(&self) -> R {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.dim))
    }

    /// `max |M − M†|`.
    pub fn hermiticity_deviation(&self) -> R {
        self.max_abs_diff(&self.adjoint())
    }

    /// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
    ///
    /// Returns eigenvalues in ascending order and the matching eigenvectors as
    /// the columns of a unitary matrix. Only the Hermitian part of `self` is used.
    pub fn eigh(&self) -> (Vec<R>, CMatrix<R>) {
        let n = self.dim;
        let half = R::lit(0.5);
        let mut a = Self::from_fn(n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half);
        let mut v = Self::identity(n);
        let eps = R::epsilon();

        for _sweep in 0..100 {
            let off: R = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].norm_sqr())
                .fold(R::zero(), |s, x| s + x);
            let total: R = a.data.iter().map(|z| z.norm_sqr()).fold(R::zero(), |s, x| s + x);
            if off <= eps * eps * total || off == R::zero() {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let mag = apq.norm();
                    if mag <= R::min_positive_value() {
                        continue;
                    }
                    let phase = apq / mag;
                    let tau = (a[(q, q)].re - a[(p, p)].re) / (mag + mag);
                    let t = tau.signum() / (tau.abs() + (R::one() + tau * tau).sqrt());
                    let t = if tau == R::zero() { R::one() } else { t };
                    let cs = R::one() / (R::one() + t * t).sqrt();
                    let sn = t * cs;
                    // Columns p, q of the rotation J: J_pp = c, J_pq = s·e^{iθ},
                    // J_qp = −s·e^{−iθ}, J_qq = c.
                    let jpp = Complex::new(cs, R::zero());
                    let jqq = jpp;
                    let jpq = phase * sn;
                    let jqp = -phase.conj() * sn;
                    // A ← A J
                    for k in 0..n {
                        let (akp, akq) = (a[(k, p)], a[(k, q)]);
                        a[(k, p)] = akp * jpp + akq * jqp;
                        a[(k, q)] = akp * jpq + akq * jqq;
                    }
                    // A ← J† A
                    for k in 0..n {
                        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                    }
                    // V ← V J
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = vkp * jpp + vkq * jqp;
                        v[(k, q)] = vkp * jpq + vkq * jqq;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| a[(i, i)].re).collect();
        let vectors = Self::from_fn(n, |row, col| v[(row, order[col])]);
        (values, vectors)
    }
}

impl<R> Index<(usize, usize)> for CMatrix<R> {
    type Output = Complex<R>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<R> {
        &self.data[i * self.dim + j]
    }
}

impl<R> IndexMut<(usize, usize)> for CMatrix<R> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<R> {
        &mut self.data[i * self.dim + j]
    }
}

impl<R: Real> Mul for &CMatrix<R> {
    type Output = CMatrix<R>;
    fn mul(self, rhs: &CMatrix<R>) -> CMatrix<R> {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.re == R::zero() && a.im == R::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<R: Real> Add for &CMatrix<R> {
    type Output = CMatrix<R>;
    fn add(self, rhs: &CMatrix<R>) -> CMatrix<R> {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        CMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl<R: Real> Sub for &CMatrix<R> {
    type Output = CMatrix<R>;
    fn sub(self, rhs: &CMatrix<R>) -> CMatrix<R> {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        CMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}
