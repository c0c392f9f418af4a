//! Scalar transfer matrices and products.
//!
//! For `d = 1` the eigenvector recursion
//! `a_{n-1} u_{n-1} + b_n u_n + a_n u_{n+1} = lambda u_n` reads
//! `(u_n, u_{n+1})^T = T_n (u_{n-1}, u_n)^T` with
//! `T_n = [[0, 1], [-a_{n-1}/a_n, (lambda - b_n)/a_n]]`.

mod levinson;
mod recursion;

use std::ops::{Add, Mul, Sub};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{op_norm, Matrix, C64};
use crate::model::CoefficientFamily;

pub use levinson::{
    catalog_splitting, levinson_for_family, levinson_hypotheses, CustomSplitting, LevinsonReport,
    Splitting, Step3Splitting, TwoStepSplitting,
};
pub use recursion::{
    solve_recursion, subordinacy_ratio, Direction, ScaledValue, SolutionPath, SubordinacyOptions,
    SubordinacyTrace, Trend,
};

/// 2x2 complex matrix tagged with its index and spectral parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Transfer2 {
    pub m: [[C64; 2]; 2],
    /// Step index for one-step matrices, group index for products.
    pub n: usize,
    pub lambda: f64,
}

impl Transfer2 {
    pub fn new(m: [[C64; 2]; 2], n: usize, lambda: f64) -> Self {
        Transfer2 { m, n, lambda }
    }

    pub fn from_real(m: [[f64; 2]; 2], n: usize, lambda: f64) -> Self {
        let c = |x: f64| C64::new(x, 0.0);
        Transfer2 {
            m: [[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]],
            n,
            lambda,
        }
    }

    pub fn identity(n: usize, lambda: f64) -> Self {
        Self::from_real([[1.0, 0.0], [0.0, 1.0]], n, lambda)
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(2, 2, |i, j| self.m[i][j])
    }

    /// Operator norm.
    pub fn norm(&self) -> f64 {
        op_norm(&self.to_matrix())
    }

    pub fn is_finite(&self) -> bool {
        self.m
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

impl Mul for Transfer2 {
    type Output = Transfer2;
    /// Matrix product; the tag is taken from the left factor.
    fn mul(self, rhs: Transfer2) -> Transfer2 {
        let a = &self.m;
        let b = &rhs.m;
        let m = [
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ];
        Transfer2 {
            m,
            n: self.n,
            lambda: self.lambda,
        }
    }
}

impl Add for Transfer2 {
    type Output = Transfer2;
    fn add(self, rhs: Transfer2) -> Transfer2 {
        let mut m = self.m;
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += rhs.m[i][j];
            }
        }
        Transfer2 {
            m,
            n: self.n,
            lambda: self.lambda,
        }
    }
}

impl Sub for Transfer2 {
    type Output = Transfer2;
    fn sub(self, rhs: Transfer2) -> Transfer2 {
        let mut m = self.m;
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] -= rhs.m[i][j];
            }
        }
        Transfer2 {
            m,
            n: self.n,
            lambda: self.lambda,
        }
    }
}

/// `(a_n, b_n)` for a scalar family with real off-diagonal.
pub(crate) fn scalar_coeffs(f: &CoefficientFamily, n: usize) -> Result<(f64, f64)> {
    if f.block_dim() != 1 {
        return Err(Error::UnsupportedDimension(f.block_dim()));
    }
    f.scalar_at(n)?
        .ok_or_else(|| Error::usage("transfer matrices need a real off-diagonal sequence"))
}

/// One-step matrix `T_n`, `n >= 2`.
pub fn transfer_step(f: &CoefficientFamily, n: usize, lambda: f64) -> Result<Transfer2> {
    if f.block_dim() != 1 {
        return Err(Error::UnsupportedDimension(f.block_dim()));
    }
    if n < 2 {
        return Err(Error::usage(format!("transfer step needs n >= 2, got {n}")));
    }
    if !lambda.is_finite() {
        return Err(Error::invalid("lambda must be finite"));
    }
    let (a_prev, _) = scalar_coeffs(f, n - 1)?;
    let (a, b) = scalar_coeffs(f, n)?;
    if a == 0.0 {
        return Err(Error::SingularCoupling {
            index: n,
            det_abs: 0.0,
        });
    }
    Ok(Transfer2::from_real(
        [[0.0, 1.0], [-a_prev / a, (lambda - b) / a]],
        n,
        lambda,
    ))
}

/// `T_{kn} ... T_{kn-k+1}` for `k` in `{2, 3}`; group index `n >= 2`.
pub fn kstep_product(f: &CoefficientFamily, n: usize, k: usize, lambda: f64) -> Result<Transfer2> {
    if !(k == 2 || k == 3) {
        return Err(Error::usage(format!(
            "k-step products are defined for k = 2 or 3, got {k}"
        )));
    }
    if n < 2 {
        return Err(Error::usage(format!(
            "group index must be at least 2, got {n}"
        )));
    }
    let mut acc = Transfer2::identity(n, lambda);
    for step in (k * n - k + 1)..=(k * n) {
        acc = transfer_step(f, step, lambda)? * acc;
    }
    acc.n = n;
    Ok(acc)
}

/// Eigenvalues `tr/2 +/- sqrt((tr/2)^2 - det)` with the principal square root.
pub fn eig_2x2(m: &Transfer2) -> (C64, C64) {
    let half = m.trace() * 0.5;
    let root = (half * half - m.det()).sqrt();
    (half + root, half - root)
}

/// `sum log|mu_k|` and the unwrapped `sum arg mu_k` over `k = n0..n-1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogProduct {
    pub log_modulus: f64,
    pub phase: f64,
}

/// Neumaier-compensated accumulator.
#[derive(Default, Clone, Copy)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Log-modulus and phase of `prod_{k=n0}^{n-1} mu(k)`, without forming the product.
pub fn log_product(mu: impl Fn(usize) -> C64, n0: usize, n: usize) -> Result<LogProduct> {
    let mut lm = KahanSum::default();
    let mut ph = KahanSum::default();
    for k in n0..n {
        let z = mu(k);
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::invalid(format!("non-finite factor at index {k}")));
        }
        if z.norm() == 0.0 {
            return Err(Error::ZeroFactor { index: k });
        }
        lm.add(z.norm().ln());
        ph.add(z.arg());
    }
    Ok(LogProduct {
        log_modulus: lm.value(),
        phase: ph.value(),
    })
}
