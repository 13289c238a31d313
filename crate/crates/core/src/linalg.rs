//! Dense complex linear algebra for small operator matrices (dims 2–16).
//!
//! Everything is stored dense in row-major order; the dimensions that occur
//! here (2, 4, and 16 for vectorized superoperators) make sparsity and
//! external solvers counterproductive. Provides the arithmetic needed for
//! master-equation work plus two nontrivial kernels:
//!
//! - Hermitian eigenvalues via cyclic complex Jacobi rotations, used to
//!   monitor positivity of density matrices.
//! - Matrix exponential via scaling-and-squaring with a truncated Taylor
//!   kernel, used as an independent piecewise-constant propagation oracle.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hermiticity tolerance for eigenvalue extraction: max |m - m†| entry.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Zero matrix of the given dimension (must be ≥ 1).
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be >= 1");
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    /// Identity matrix of the given dimension.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from a row-major entry list; checks the length and finiteness.
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidParameter {
                name: "entries",
                reason: format!("expected {}x{} = {} entries, got {}", dim, dim, dim * dim, entries.len()),
            });
        }
        let m = Self { dim, entries };
        m.check_finite()?;
        Ok(m)
    }

    /// Integrator-internal constructor: callers guarantee the length.
    pub(crate) fn from_vec_unchecked(dim: usize, entries: Vec<Complex64>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        Self { dim, entries }
    }

    /// Build entry-wise from a function of (row, col).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.entries[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    fn check_finite(&self) -> Result<()> {
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.get(i, j);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    fn check_same_dim(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                op,
                lhs: self.dim,
                rhs: other.dim,
            });
        }
        Ok(())
    }

    /// Entry-wise sum.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other, "add")?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self { dim: self.dim, entries })
    }

    /// Entry-wise difference.
    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other, "sub")?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self { dim: self.dim, entries })
    }

    /// Scale by a complex factor.
    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|a| a * factor).collect(),
        }
    }

    /// Scale by a real factor.
    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Matrix product.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_same_dim(other, "mul")?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self.get(j, i).conj())
    }

    /// Sum of the main diagonal.
    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Kronecker product; the result has dimension `self.dim * other.dim`.
    pub fn kron(&self, other: &Self) -> Self {
        let (na, nb) = (self.dim, other.dim);
        let n = na * nb;
        let mut out = Self::zeros(n);
        for ia in 0..na {
            for ja in 0..na {
                let a = self.get(ia, ja);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for ib in 0..nb {
                    for jb in 0..nb {
                        out.entries[(ia * nb + ib) * n + (ja * nb + jb)] = a * other.get(ib, jb);
                    }
                }
            }
        }
        out
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "max_abs_diff: dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Induced 1-norm (max column sum of moduli).
    pub fn one_norm(&self) -> f64 {
        let n = self.dim;
        (0..n)
            .map(|j| (0..n).map(|i| self.get(i, j).norm()).sum())
            .fold(0.0, f64::max)
    }

    /// Max |m(i,j) - conj(m(j,i))| over all entries.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Hermitian part (m + m†)/2.
    pub fn hermitian_part(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| (self.get(i, j) + self.get(j, i).conj()) * 0.5)
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    ///
    /// Uses cyclic complex Jacobi rotations on the Hermitian part; converges
    /// quadratically at these dimensions. The input must be Hermitian within
    /// [`HERMITICITY_TOL`] (max |m - m†| entry); the returned values sum to
    /// the trace within ~1e-12 of its magnitude.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        let asym = self.max_asymmetry();
        if asym > HERMITICITY_TOL {
            return Err(Error::NotHermitian { max_asymmetry: asym });
        }
        let n = self.dim;
        let mut a = self.hermitian_part();
        let scale = a.max_abs().max(1e-300);
        let tol = 1e-15 * scale;
        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a.get(p, q).norm());
                }
            }
            if off <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut a, p, q);
                }
            }
        }
        let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
        eig.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
        Ok(eig)
    }

    /// Matrix exponential.
    ///
    /// Scaling-and-squaring: the argument is halved until its 1-norm is below
    /// 0.25, a truncated Taylor series is summed to machine precision, and the
    /// result is squared back up. Accurate to ~1e-14 relative at the norms a
    /// Liouvillian reaches on a sub-picosecond step.
    pub fn expm(&self) -> Self {
        let norm = self.one_norm();
        let squarings = if norm > TAYLOR_THETA {
            (norm / TAYLOR_THETA).log2().ceil() as u32
        } else {
            0
        };
        let scaled = self.scale_re(0.5f64.powi(squarings as i32));

        let n = self.dim;
        let mut sum = Self::identity(n);
        let mut term = Self::identity(n);
        for k in 1..=40u32 {
            term = term
                .checked_mul(&scaled)
                .expect("square matrices of equal dim")
                .scale_re(1.0 / k as f64);
            sum = sum.checked_add(&term).expect("square matrices of equal dim");
            if k >= 4 && term.max_abs() <= 1e-18 * sum.max_abs() {
                break;
            }
        }

        let mut result = sum;
        for _ in 0..squarings {
            result = result
                .checked_mul(&result)
                .expect("square matrices of equal dim");
        }
        result
    }
}

const TAYLOR_THETA: f64 = 0.25;

/// One cyclic-Jacobi step: zero the (p, q) entry of Hermitian `a` in place.
///
/// The off-diagonal phase is absorbed first (diag(1, e^{-iφ})), then a real
/// Golub–Van Loan rotation eliminates the remaining symmetric pair.
fn jacobi_rotate(a: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    let abs_apq = apq.norm();
    if abs_apq < 1e-300 {
        return;
    }
    let phase = apq / abs_apq; // e^{iφ}
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    let tau = (aqq - app) / (2.0 * abs_apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // u = combined unitary, identity except rows/cols p and q:
    //   u[p][p] = c           u[p][q] = s
    //   u[q][p] = -s e^{-iφ}  u[q][q] = c e^{-iφ}
    let upp = Complex64::new(c, 0.0);
    let upq = Complex64::new(s, 0.0);
    let uqp = -phase.conj() * s;
    let uqq = phase.conj() * c;

    let n = a.dim;
    // a <- u† a u, touching only rows/cols p and q
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, akp * upp + akq * uqp);
        a.set(k, q, akp * upq + akq * uqq);
    }
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, upp.conj() * apk + uqp.conj() * aqk);
        a.set(q, k, upq.conj() * apk + uqq.conj() * aqk);
    }
    // clean up roundoff on the eliminated pair
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));
    let hpp = a.get(p, p);
    let hqq = a.get(q, q);
    a.set(p, p, Complex64::new(hpp.re, 0.0));
    a.set(q, q, Complex64::new(hqq.re, 0.0));
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let v = self.get(i, j);
                write!(f, "{:+.4e}{:+.4e}i  ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_add(rhs).expect("matrix add: dimension mismatch")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_sub(rhs).expect("matrix sub: dimension mismatch")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.checked_mul(rhs).expect("matrix mul: dimension mismatch")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sigma_minus() -> ComplexMatrix {
        // |g><e| in the |g>=0, |e>=1 ordering
        let mut m = ComplexMatrix::zeros(2);
        m.set(0, 1, c(1.0, 0.0));
        m
    }

    fn sigma_plus() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(2);
        m.set(1, 0, c(1.0, 0.0));
        m
    }

    /// Deterministic pseudo-random stream (splitmix64) for reproducible
    /// random-matrix tests.
    pub(crate) struct Stream(u64);

    impl Stream {
        pub fn new(seed: u64) -> Self {
            Stream(seed)
        }

        pub fn next_f64(&mut self) -> f64 {
            self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = self.0;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z = z ^ (z >> 31);
            (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        }

        pub fn matrix(&mut self, dim: usize) -> ComplexMatrix {
            ComplexMatrix::from_fn(dim, |_, _| c(self.next_f64(), self.next_f64()))
        }

        pub fn hermitian(&mut self, dim: usize) -> ComplexMatrix {
            self.matrix(dim).hermitian_part()
        }
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.kron(&i2), ComplexMatrix::identity(4));
        assert_eq!(ComplexMatrix::identity(4).trace(), c(4.0, 0.0));
    }

    #[test]
    fn adjoint_of_lowering_is_raising() {
        assert_eq!(sigma_minus().adjoint(), sigma_plus());
    }

    #[test]
    fn dimension_mismatch_reports_both_dims() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(4);
        match a.checked_mul(&b) {
            Err(Error::DimensionMismatch { lhs, rhs, .. }) => {
                assert_eq!((lhs, rhs), (2, 4));
            }
            other => panic!("expected dimension mismatch, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let m = ComplexMatrix::from_fn(2, |i, j| {
            if i == j {
                c(if i == 0 { 1.0 } else { -1.0 }, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let eig = m.hermitian_eigenvalues().unwrap();
        assert!((eig[0] + 1.0).abs() < 1e-14 && (eig[1] - 1.0).abs() < 1e-14);

        let eig4 = ComplexMatrix::identity(4).hermitian_eigenvalues().unwrap();
        for v in eig4 {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eigenvalues_reject_non_hermitian() {
        let m = sigma_minus();
        match m.hermitian_eigenvalues() {
            Err(Error::NotHermitian { max_asymmetry }) => {
                assert!((max_asymmetry - 1.0).abs() < 1e-15);
            }
            other => panic!("expected NotHermitian, got {:?}", other),
        }
    }

    #[test]
    fn eigenvalue_sum_matches_trace() {
        let mut rng = Stream::new(7);
        for _ in 0..20 {
            let m = rng.hermitian(6);
            let eig = m.hermitian_eigenvalues().unwrap();
            let sum: f64 = eig.iter().sum();
            assert!((sum - m.trace().re).abs() < 1e-10);
        }
    }

    /// Independent oracle: eigenvalues of a Hermitian matrix are the real
    /// roots of det(m - λI), located by scanning + bisection on the real
    /// determinant (Gaussian elimination with partial pivoting).
    fn det_shifted(m: &ComplexMatrix, lambda: f64) -> f64 {
        let n = m.dim();
        let mut a: Vec<Complex64> = m.entries().to_vec();
        for i in 0..n {
            a[i * n + i] -= c(lambda, 0.0);
        }
        let mut det = c(1.0, 0.0);
        for col in 0..n {
            let mut piv = col;
            for r in (col + 1)..n {
                if a[r * n + col].norm() > a[piv * n + col].norm() {
                    piv = r;
                }
            }
            if a[piv * n + col].norm() == 0.0 {
                return 0.0;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in (col + 1)..n {
                let f = a[r * n + col] / p;
                for j in col..n {
                    let v = a[col * n + j];
                    a[r * n + j] -= f * v;
                }
            }
        }
        // det(m - λI) is real for Hermitian m and real λ
        det.re
    }

    #[test]
    fn eigenvalues_match_characteristic_polynomial_bisection() {
        let mut rng = Stream::new(42);
        let m = rng.hermitian(4);
        let eig = m.hermitian_eigenvalues().unwrap();

        // scan for sign changes over the Gershgorin-bound interval
        let bound = m.one_norm() + 1.0;
        let steps = 20_000;
        let mut roots = Vec::new();
        let mut prev_l = -bound;
        let mut prev_f = det_shifted(&m, prev_l);
        for k in 1..=steps {
            let l = -bound + 2.0 * bound * k as f64 / steps as f64;
            let f = det_shifted(&m, l);
            if prev_f == 0.0 {
                roots.push(prev_l);
            } else if f.signum() != prev_f.signum() {
                let (mut lo, mut hi) = (prev_l, l);
                let mut flo = prev_f;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = det_shifted(&m, mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_l = l;
            prev_f = f;
        }
        assert_eq!(roots.len(), 4, "expected 4 simple roots, found {:?}", roots);
        for (a, b) in eig.iter().zip(&roots) {
            assert!((a - b).abs() < 1e-10, "jacobi {} vs bisection {}", a, b);
        }
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = ComplexMatrix::zeros(3);
        assert!(z.expm().max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn expm_of_diagonal() {
        let theta = 0.7;
        let m = ComplexMatrix::from_fn(2, |i, j| {
            if i == j {
                c(0.0, if i == 0 { theta } else { -theta })
            } else {
                c(0.0, 0.0)
            }
        });
        let e = m.expm();
        let expected = ComplexMatrix::from_fn(2, |i, j| {
            if i == j {
                let s = if i == 0 { theta } else { -theta };
                c(s.cos(), s.sin())
            } else {
                c(0.0, 0.0)
            }
        });
        assert!(e.max_abs_diff(&expected) < 1e-14);
    }

    /// Independent oracle: raw order-30 Taylor sum without scaling/squaring,
    /// adequate at ‖m‖ ≈ 1.
    fn expm_taylor30(m: &ComplexMatrix) -> ComplexMatrix {
        let n = m.dim();
        let mut sum = ComplexMatrix::identity(n);
        let mut term = ComplexMatrix::identity(n);
        for k in 1..=30u32 {
            term = term.checked_mul(m).unwrap().scale_re(1.0 / k as f64);
            sum = sum.checked_add(&term).unwrap();
        }
        sum
    }

    #[test]
    fn expm_matches_taylor_oracle_16x16() {
        let mut rng = Stream::new(2024);
        let raw = rng.matrix(16);
        // normalize to ‖m‖₁ ≈ 1
        let m = raw.scale_re(1.0 / raw.one_norm());
        let e = m.expm();
        let oracle = expm_taylor30(&m);
        let rel = e.max_abs_diff(&oracle) / oracle.max_abs();
        assert!(rel < 1e-12, "relative deviation {rel:.3e}");
    }
}
