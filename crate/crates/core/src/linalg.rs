//! Small dense complex linear algebra.
//!
//! Everything here works on `d x d` blocks with `d` in the tens at most:
//! storage is dense and row-major, the Hermitian eigensolver is cyclic Jacobi
//! with native complex rotations, and matrix functions (positive part,
//! pseudo-inverse powers) are evaluated through the eigendecomposition.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>12.5e}{:+.5e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds from row-major data; fails on length mismatch or non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        let m = Matrix { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend(row.iter().map(|&x| C64::new(x, 0.0)));
        }
        Self::from_vec(r, c, data)
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(
            n,
            n,
            |i, j| if i == j { C64::new(diag[i], 0.0) } else { ZERO },
        )
    }

    pub fn scalar(x: f64) -> Self {
        Matrix {
            rows: 1,
            cols: 1,
            data: vec![C64::new(x, 0.0)],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn check_finite(&self) -> Result<()> {
        if let Some(k) = self
            .data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::invalid(format!(
                "non-finite entry at ({}, {})",
                k / self.cols.max(1),
                k % self.cols.max(1)
            )));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Matrix {
        self.scale(C64::new(s, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "mul_vec: length mismatch");
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// `self^* v` without forming the adjoint.
    pub fn adjoint_mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.rows, "adjoint_mul_vec: length mismatch");
        let mut out = vec![ZERO; self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for (j, o) in out.iter_mut().enumerate() {
                *o += self[(i, j)].conj() * vi;
            }
        }
        out
    }

    /// Partial-pivoting LU. Returns the packed factors, the permutation and its sign.
    fn lu(&self) -> (Vec<C64>, Vec<usize>, f64, bool) {
        assert!(self.is_square(), "LU of a non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                singular = true;
                continue;
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
                sign = -sign;
            }
            let d = a[k * n + k];
            for i in (k + 1)..n {
                let f = a[i * n + k] / d;
                a[i * n + k] = f;
                for j in (k + 1)..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= f * akj;
                }
            }
        }
        (a, perm, sign, singular)
    }

    pub fn det(&self) -> C64 {
        let n = self.rows;
        let (a, _, sign, singular) = self.lu();
        if singular {
            return ZERO;
        }
        (0..n).fold(C64::new(sign, 0.0), |acc, i| acc * a[i * n + i])
    }

    pub fn inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: self.cols,
            });
        }
        let n = self.rows;
        let (a, perm, _, singular) = self.lu();
        if singular {
            return Err(Error::Singular("exact zero pivot in LU".into()));
        }
        let mut inv = Matrix::zeros(n, n);
        for col in 0..n {
            // solve L U x = P e_col
            let mut x: Vec<C64> = (0..n)
                .map(|i| if perm[i] == col { ONE } else { ZERO })
                .collect();
            for i in 0..n {
                for j in 0..i {
                    let l = a[i * n + j];
                    let xj = x[j];
                    x[i] -= l * xj;
                }
            }
            for i in (0..n).rev() {
                for j in (i + 1)..n {
                    let u = a[i * n + j];
                    let xj = x[j];
                    x[i] -= u * xj;
                }
                x[i] /= a[i * n + i];
            }
            for i in 0..n {
                inv[(i, col)] = x[i];
            }
        }
        inv.check_finite()
            .map_err(|_| Error::Singular("inverse overflowed".into()))?;
        Ok(inv)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul: inner dimensions differ");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Square matrix with `h[i][j] == conj(h[j][i])` exactly as stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hermitian(Matrix);

impl Hermitian {
    /// Symmetrizes `(M + M^*) / 2`. The result is bit-exactly Hermitian.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.rows,
                got: m.cols,
            });
        }
        if m.rows == 0 {
            return Err(Error::invalid("empty matrix"));
        }
        m.check_finite()?;
        Ok(Self::symmetrize(m))
    }

    fn symmetrize(m: Matrix) -> Self {
        let n = m.rows;
        let mut h = m;
        for i in 0..n {
            h[(i, i)] = C64::new(h[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        Hermitian(h)
    }

    pub fn zeros(n: usize) -> Self {
        Hermitian(Matrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Hermitian(Matrix::identity(n))
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Hermitian(Matrix::identity(n).scale_real(s))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Hermitian(Matrix::from_real_diag(diag))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(Matrix::from_real_rows(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// `H - s I`.
    pub fn shift(&self, s: f64) -> Hermitian {
        let mut m = self.0.clone();
        for i in 0..m.rows {
            m[(i, i)].re -= s;
        }
        Hermitian(m)
    }

    pub fn add(&self, other: &Hermitian) -> Hermitian {
        Self::symmetrize(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Hermitian) -> Hermitian {
        Self::symmetrize(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> Hermitian {
        Hermitian(self.0.scale_real(s))
    }

    /// `X H X^*`, re-symmetrized.
    pub fn congruence(&self, x: &Matrix) -> Hermitian {
        Self::symmetrize(&(x * &self.0) * &x.adjoint())
    }

    /// `M^* M` for an arbitrary matrix.
    pub fn gram(m: &Matrix) -> Hermitian {
        Self::symmetrize(&m.adjoint() * m)
    }

    /// `<v, H v>`; real for Hermitian `H` up to rounding, the real part is returned.
    pub fn quadratic_form(&self, v: &[C64]) -> f64 {
        let hv = self.0.mul_vec(v);
        v.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(self).values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 1 {
            return self.0.data[0].re;
        }
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        if self.dim() == 1 {
            return self.0.data[0].re;
        }
        *self.eigenvalues().last().expect("dim >= 1")
    }

    /// Operator norm, i.e. the largest |eigenvalue|.
    pub fn norm(&self) -> f64 {
        let v = self.eigenvalues();
        v[0].abs().max(v[v.len() - 1].abs())
    }
}

impl Index<(usize, usize)> for Hermitian {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct EigenH {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenH {
    /// `sum_k f(lambda_k) v_k v_k^*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Hermitian {
        let n = self.values.len();
        let mut out = Matrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        Hermitian::symmetrize(out)
    }

    pub fn reconstruct(&self) -> Hermitian {
        self.apply(|x| x)
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic complex Jacobi eigensolver.
///
/// Each rotation first removes the phase of the pivot `h_pq` with a diagonal
/// unitary, then applies the real symmetric Jacobi rotation that annihilates
/// it. Sweeps continue until the off-diagonal Frobenius mass is at rounding
/// level relative to the whole matrix.
pub fn eigh(h: &Hermitian) -> EigenH {
    let n = h.dim();
    let mut a = h.0.clone();
    let mut v = Matrix::identity(n);
    let total = a.frobenius();

    if n > 1 && total > 0.0 {
        let target = (f64::EPSILON * total).powi(2) * 1e-2;
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off <= target {
                break;
            }
            for p in 0..(n - 1) {
                for q in (p + 1)..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = Matrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    EigenH { values, vectors }
}

fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // negligible pivot relative to both diagonal entries: zero it outright
    if r <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) && (app - aqq).abs() > 0.0 {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    let phase_conj = (apq / r).conj();
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // U = diag(1, e^{-i phi}) * [[c, s], [-s, c]] restricted to (p, q)
    let u_pp = C64::new(c, 0.0);
    let u_pq = C64::new(s, 0.0);
    let u_qp = phase_conj * (-s);
    let u_qq = phase_conj * c;

    let n = a.rows;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * u_pp + akq * u_qp;
        a[(k, q)] = akp * u_pq + akq * u_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

/// `H_+ = H P_(0, inf)`.
pub fn positive_part(h: &Hermitian) -> Hermitian {
    eigh(h).apply(|x| if x > 0.0 { x } else { 0.0 })
}

/// Default strict-positivity floor `1e-12 (1 + ||H||)`.
pub fn default_floor(h: &Hermitian) -> f64 {
    1e-12 * (1.0 + h.norm())
}

/// Exponents supported by [`opp_power`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PowerExponent {
    NegOne,
    NegHalf,
    PosHalf,
}

impl PowerExponent {
    pub fn value(self) -> f64 {
        match self {
            PowerExponent::NegOne => -1.0,
            PowerExponent::NegHalf => -0.5,
            PowerExponent::PosHalf => 0.5,
        }
    }

    fn eval(self, x: f64) -> f64 {
        match self {
            PowerExponent::NegOne => 1.0 / x,
            PowerExponent::NegHalf => 1.0 / x.sqrt(),
            PowerExponent::PosHalf => x.sqrt(),
        }
    }
}

impl TryFrom<f64> for PowerExponent {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        if p == -1.0 {
            Ok(PowerExponent::NegOne)
        } else if p == -0.5 {
            Ok(PowerExponent::NegHalf)
        } else if p == 0.5 {
            Ok(PowerExponent::PosHalf)
        } else {
            Err(Error::usage(format!(
                "unsupported exponent {p}; expected one of -1, -1/2, 1/2"
            )))
        }
    }
}

/// Power of the positive part, zero on its orthogonal complement.
///
/// Eigenvalues at or below `floor` count as zero; `None` uses
/// [`default_floor`]. With `NegOne` this is the inverse of `H_+` on its range.
pub fn opp_power(h: &Hermitian, p: PowerExponent, floor: Option<f64>) -> Hermitian {
    let e = eigh(h);
    let floor = floor.unwrap_or_else(|| {
        let norm = e.values[0].abs().max(e.values[e.values.len() - 1].abs());
        1e-12 * (1.0 + norm)
    });
    e.apply(|x| if x > floor { p.eval(x) } else { 0.0 })
}

/// Orthogonal projector onto the span of eigenvectors with eigenvalue above `floor`.
pub fn positive_projector(h: &Hermitian, floor: f64) -> Hermitian {
    eigh(h).apply(|x| if x > floor { 1.0 } else { 0.0 })
}

/// Largest singular value, `sqrt(lambda_max(M^* M))`.
pub fn op_norm(m: &Matrix) -> f64 {
    if m.rows == 1 && m.cols == 1 {
        return m.data[0].norm();
    }
    let g = Hermitian::gram(m);
    g.max_eigenvalue().max(0.0).sqrt()
}

/// Inverse of a Hermitian matrix through its eigendecomposition; fails when
/// some `|eigenvalue| <= tol`.
pub fn hermitian_inverse(h: &Hermitian, tol: f64) -> Result<Hermitian> {
    let e = eigh(h);
    if let Some(&mu) = e.values.iter().find(|x| x.abs() <= tol) {
        return Err(Error::Singular(format!(
            "eigenvalue {mu:e} within tolerance {tol:e}"
        )));
    }
    Ok(e.apply(|x| 1.0 / x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Hermitian {
        let m = Matrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        Hermitian::new(m).unwrap()
    }

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        (a - b).max_abs()
    }

    #[test]
    fn eigh_diagonal() {
        let e = eigh(&Hermitian::from_real_diag(&[3.0, -1.0]));
        assert_eq!(e.values, vec![-1.0, 3.0]);
        assert_eq!(e.vectors[(0, 0)].norm(), 0.0);
        assert_eq!(e.vectors[(1, 0)].norm(), 1.0);
        assert_eq!(e.vectors[(0, 1)].norm(), 1.0);
    }

    #[test]
    fn eigh_pauli() {
        let h = Hermitian::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let e = eigh(&h);
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    /// Roots of det(H - x I) located by sign changes on a fine grid, then bisection.
    fn char_poly_roots(h: &Hermitian) -> Vec<f64> {
        let n = h.dim();
        let bound = (0..n)
            .map(|i| (0..n).map(|j| h[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
            + 1.0;
        let charp = |x: f64| h.shift(x).as_matrix().det().re;
        let steps = 40_000;
        let mut roots = Vec::new();
        let mut prev_x = -bound;
        let mut prev = charp(prev_x);
        for k in 1..=steps {
            let x = -bound + 2.0 * bound * k as f64 / steps as f64;
            let fx = charp(x);
            if prev == 0.0 {
                roots.push(prev_x);
            } else if prev.signum() != fx.signum() && fx != 0.0 {
                let (mut lo, mut hi, flo) = (prev_x, x, prev);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = charp(mid);
                    if fm.signum() == flo.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-14 {
                        break;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_x = x;
            prev = fx;
        }
        roots
    }

    #[test]
    fn eigh_matches_characteristic_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let h = random_hermitian(&mut rng, 5);
            let roots = char_poly_roots(&h);
            let e = eigh(&h);
            assert_eq!(roots.len(), 5, "oracle found {roots:?}");
            for (r, v) in roots.iter().zip(&e.values) {
                assert!((r - v).abs() < 1e-9, "{r} vs {v}");
            }
        }
    }

    #[test]
    fn eigh_round_trip_many_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let n = 1 + trial % 12;
            let h = random_hermitian(&mut rng, n);
            let e = eigh(&h);
            let v = &e.vectors;
            let vv = &v.adjoint() * v;
            assert!(max_abs_diff(&vv, &Matrix::identity(n)) <= 1e-12);
            let hv = h.as_matrix() * v;
            let vd = v * &Matrix::from_real_diag(&e.values);
            let hn = h.norm();
            assert!(max_abs_diff(&hv, &vd) <= 1e-10 * (1.0 + hn));
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            assert!(max_abs_diff(e.reconstruct().as_matrix(), h.as_matrix()) <= 1e-10 * (1.0 + hn));
        }
    }

    #[test]
    fn eigh_large_section() {
        // dense oracle use in the spectral engine goes up to a few hundred
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(&mut rng, 80);
        let e = eigh(&h);
        let v = &e.vectors;
        assert!(max_abs_diff(&(&v.adjoint() * v), &Matrix::identity(80)) <= 1e-12);
        let hv = h.as_matrix() * v;
        let vd = v * &Matrix::from_real_diag(&e.values);
        assert!(max_abs_diff(&hv, &vd) <= 1e-10 * (1.0 + h.norm()));
    }

    #[test]
    fn positive_part_examples() {
        let p = positive_part(&Hermitian::from_real_diag(&[2.0, -3.0]));
        assert!(max_abs_diff(p.as_matrix(), &Matrix::from_real_diag(&[2.0, 0.0])) < 1e-15);
        assert_eq!(positive_part(&Hermitian::zeros(3)), Hermitian::zeros(3));
        // eigenvalues 3 and -1; eigenvector (1,1)/sqrt2 for 3
        let h = Hermitian::from_real_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        let p = positive_part(&h);
        let want = Matrix::from_real_rows(&[&[1.5, 1.5], &[1.5, 1.5]]).unwrap();
        assert!(max_abs_diff(p.as_matrix(), &want) < 1e-14);
    }

    #[test]
    fn positive_part_is_psd_and_commutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..10 {
            let h = random_hermitian(&mut rng, n);
            let p = positive_part(&h);
            assert!(p.min_eigenvalue() >= -1e-12);
            let hp = h.as_matrix() * p.as_matrix();
            let ph = p.as_matrix() * h.as_matrix();
            assert!(max_abs_diff(&hp, &ph) <= 1e-10);
        }
    }

    #[test]
    fn opp_power_examples() {
        let h = Hermitian::from_real_diag(&[4.0, -1.0]);
        let inv = opp_power(&h, PowerExponent::NegOne, None);
        assert!(max_abs_diff(inv.as_matrix(), &Matrix::from_real_diag(&[0.25, 0.0])) < 1e-15);
        let isq = opp_power(&h, PowerExponent::NegHalf, None);
        assert!(max_abs_diff(isq.as_matrix(), &Matrix::from_real_diag(&[0.5, 0.0])) < 1e-15);

        let floor = 1e-6;
        let h = Hermitian::from_real_diag(&[9.0, 0.5 * floor]);
        let isq = opp_power(&h, PowerExponent::NegHalf, Some(floor));
        assert!(max_abs_diff(isq.as_matrix(), &Matrix::from_real_diag(&[1.0 / 3.0, 0.0])) < 1e-15);
    }

    #[test]
    fn unsupported_exponent_is_usage_error() {
        assert!(matches!(PowerExponent::try_from(2.0), Err(Error::Usage(_))));
        assert_eq!(
            PowerExponent::try_from(-0.5).unwrap(),
            PowerExponent::NegHalf
        );
    }

    #[test]
    fn functional_calculus_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 1..=12 {
            let h = random_hermitian(&mut rng, n);
            let floor = default_floor(&h);
            let bp = positive_part(&h);
            let inv = opp_power(&h, PowerExponent::NegOne, None);
            let proj = positive_projector(&h, floor);
            let prod = bp.as_matrix() * inv.as_matrix();
            assert!(max_abs_diff(&prod, proj.as_matrix()) <= 1e-9);

            let half = opp_power(&h, PowerExponent::NegHalf, None);
            let sq = half.as_matrix() * half.as_matrix();
            assert!(max_abs_diff(&sq, inv.as_matrix()) <= 1e-9 * (1.0 + inv.norm()));
        }
    }

    #[test]
    fn op_norm_examples() {
        assert!((op_norm(&Matrix::identity(3)) - 1.0).abs() < 1e-15);
        assert!((op_norm(&Matrix::from_real_diag(&[2.0, -5.0])) - 5.0).abs() < 1e-14);
        let nil = Matrix::from_real_rows(&[&[0.0, 3.0], &[0.0, 0.0]]).unwrap();
        assert!((op_norm(&nil) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn op_norm_adjoint_and_submultiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in 1..8 {
            let mk = |rng: &mut ChaCha8Rng| {
                Matrix::from_fn(n, n, |_, _| {
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                })
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            assert!((op_norm(&a) - op_norm(&a.adjoint())).abs() <= 1e-10);
            assert!(op_norm(&(&a * &b)) <= op_norm(&a) * op_norm(&b) + 1e-9);
        }
    }

    #[test]
    fn non_finite_rejected() {
        let m = Matrix::from_real_diag(&[1.0, f64::NAN]);
        assert!(matches!(Hermitian::new(m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn symmetrization_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let h = random_hermitian(&mut rng, 6);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(h[(i, j)], h[(j, i)].conj());
            }
        }
    }

    #[test]
    fn inverse_and_det() {
        let m = Matrix::from_real_rows(&[&[2.0, 1.0], &[1.0, 3.0]]).unwrap();
        assert!((m.det().re - 5.0).abs() < 1e-14);
        let inv = m.inverse().unwrap();
        assert!(max_abs_diff(&(&m * &inv), &Matrix::identity(2)) < 1e-15);
        let sing = Matrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(sing.inverse().is_err());
    }
}
