//! Schur complement criteria for 2x2 block Hermitian matrices.
//!
//! For `M = [[A, B], [B^*, C]]` with `C` invertible the predicates are
//! P1: `M >= 0`, P2: `A >= 0` and `C >= 0`, P3: `A - B C^{-1} B^* >= 0`,
//! each up to `-tol`.
//!
//! The finite-rank variant is a finite-dimensional surrogate: a predicate
//! holds when at most `rank_budget` eigenvalues fall below `-tol`, i.e. when a
//! perturbation of rank at most `rank_budget` restores it. `C` is first
//! replaced by `C + eps P_ker(C)`. By Haynsworth inertia additivity
//! `neg(M) = neg(C) + neg(S)`, so the surrogate equivalence is exact whenever
//! `neg(M) <= rank_budget`; beyond that it can legitimately fail.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eigh, Hermitian, Matrix};

#[derive(Clone, Debug, Serialize)]
pub struct SchurFrobeniusRecord {
    pub p1_full: bool,
    pub p2_diagonal: bool,
    pub p3_schur: bool,
    /// `P1 <=> (P2 and P3)`.
    pub equivalent: bool,
    pub min_eig_full: f64,
    pub min_eig_a: f64,
    pub min_eig_c: f64,
    pub min_eig_schur: f64,
    pub negatives_full: usize,
    pub negatives_a: usize,
    pub negatives_c: usize,
    pub negatives_schur: usize,
    pub rank_budget: usize,
    pub tol: f64,
}

fn full_matrix(a: &Hermitian, b: &Matrix, c: &Hermitian) -> Result<Hermitian> {
    let (m, k) = (a.dim(), c.dim());
    if b.rows() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: b.rows(),
        });
    }
    if b.cols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: b.cols(),
        });
    }
    b.check_finite()?;
    let mut full = Matrix::zeros(m + k, m + k);
    for i in 0..m {
        for j in 0..m {
            full[(i, j)] = a[(i, j)];
        }
        for j in 0..k {
            full[(i, m + j)] = b[(i, j)];
            full[(m + j, i)] = b[(i, j)].conj();
        }
    }
    for i in 0..k {
        for j in 0..k {
            full[(m + i, m + j)] = c[(i, j)];
        }
    }
    Hermitian::new(full)
}

fn negatives(vals: &[f64], tol: f64) -> usize {
    vals.iter().filter(|&&x| x < -tol).count()
}

fn record(
    a: &Hermitian,
    b: &Matrix,
    c: &Hermitian,
    c_inv: &Hermitian,
    rank_budget: usize,
    tol: f64,
) -> Result<SchurFrobeniusRecord> {
    let full = full_matrix(a, b, c)?.eigenvalues();
    let ea = a.eigenvalues();
    let ec = c.eigenvalues();
    let schur = a.sub(&c_inv.congruence(b)).eigenvalues();
    let (nf, na, nc, ns) = (
        negatives(&full, tol),
        negatives(&ea, tol),
        negatives(&ec, tol),
        negatives(&schur, tol),
    );
    let p1 = nf <= rank_budget;
    let p2 = na <= rank_budget && nc <= rank_budget;
    let p3 = ns <= rank_budget;
    Ok(SchurFrobeniusRecord {
        p1_full: p1,
        p2_diagonal: p2,
        p3_schur: p3,
        equivalent: p1 == (p2 && p3),
        min_eig_full: full[0],
        min_eig_a: ea[0],
        min_eig_c: ec[0],
        min_eig_schur: schur[0],
        negatives_full: nf,
        negatives_a: na,
        negatives_c: nc,
        negatives_schur: ns,
        rank_budget,
        tol,
    })
}

/// Evaluates P1, P2, P3 for `[[A, B], [B^*, C]]`; `B` is `dim A x dim C`.
pub fn schur_frobenius(
    a: &Hermitian,
    b: &Matrix,
    c: &Hermitian,
    tol: f64,
) -> Result<SchurFrobeniusRecord> {
    if !(tol >= 0.0) {
        return Err(Error::usage("tol must be nonnegative"));
    }
    let e = eigh(c);
    let min_abs = e.values.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    if min_abs <= tol {
        return Err(Error::Singular(format!(
            "C has an eigenvalue of modulus {min_abs:e} <= tol {tol:e}"
        )));
    }
    let c_inv = e.apply(|x| 1.0 / x);
    record(a, b, c, &c_inv, 0, tol)
}

/// Finite-rank surrogate: each predicate may fail on up to `rank_budget`
/// eigenvalues. A (near-)singular `C` is regularized as `C + eps P_ker(C)`
/// with `eps = 1 + ||C||`, kernel meaning eigenvalues of modulus `<= tol`.
pub fn schur_frobenius_mod_finite_rank(
    a: &Hermitian,
    b: &Matrix,
    c: &Hermitian,
    rank_budget: usize,
    tol: f64,
) -> Result<SchurFrobeniusRecord> {
    if !(tol >= 0.0) {
        return Err(Error::usage("tol must be nonnegative"));
    }
    let e = eigh(c);
    let norm = e.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let eps = 1.0 + norm;
    let c_mod = e.apply(|x| if x.abs() <= tol { x + eps } else { x });
    let c_inv = e.apply(|x| {
        if x.abs() <= tol {
            1.0 / (x + eps)
        } else {
            1.0 / x
        }
    });
    record(a, b, &c_mod, &c_inv, rank_budget, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_blocks() {
        let r = schur_frobenius(
            &Hermitian::identity(2),
            &Matrix::zeros(2, 2),
            &Hermitian::identity(2),
            1e-12,
        )
        .unwrap();
        assert!(r.p1_full && r.p2_diagonal && r.p3_schur && r.equivalent);
    }

    #[test]
    fn scalar_counterexample() {
        let r = schur_frobenius(
            &Hermitian::from_real_diag(&[1.0]),
            &Matrix::scalar(2.0),
            &Hermitian::from_real_diag(&[1.0]),
            1e-12,
        )
        .unwrap();
        assert!(!r.p1_full && !r.p3_schur && r.p2_diagonal && r.equivalent);
        assert!((r.min_eig_schur + 3.0).abs() < 1e-14);
        assert!((r.min_eig_full + 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_c_rejected() {
        let e = schur_frobenius(
            &Hermitian::identity(1),
            &Matrix::zeros(1, 2),
            &Hermitian::from_real_diag(&[1.0, 0.0]),
            1e-12,
        );
        assert!(matches!(e, Err(Error::Singular(_))));
    }

    #[test]
    fn rank_one_fix() {
        let a = Hermitian::from_real_diag(&[-5.0, 1.0]);
        let b = Matrix::zeros(2, 2);
        let c = Hermitian::identity(2);
        let r = schur_frobenius_mod_finite_rank(&a, &b, &c, 1, 1e-12).unwrap();
        assert!(r.p1_full && r.p2_diagonal && r.p3_schur && r.equivalent);
        let r0 = schur_frobenius_mod_finite_rank(&a, &b, &c, 0, 1e-12).unwrap();
        let plain = schur_frobenius(&a, &b, &c, 1e-12).unwrap();
        assert_eq!(
            (r0.p1_full, r0.p2_diagonal, r0.p3_schur),
            (plain.p1_full, plain.p2_diagonal, plain.p3_schur)
        );
        assert!(!r0.p1_full);
    }

    #[test]
    fn kernel_regularization() {
        let a = Hermitian::identity(1);
        let b = Matrix::zeros(1, 2);
        let c = Hermitian::from_real_diag(&[1.0, 0.0]);
        let r = schur_frobenius_mod_finite_rank(&a, &b, &c, 0, 1e-12).unwrap();
        assert!(r.p1_full && r.equivalent);
    }

    #[test]
    fn dimension_checks() {
        let e = schur_frobenius(
            &Hermitian::identity(2),
            &Matrix::zeros(3, 2),
            &Hermitian::identity(2),
            1e-12,
        );
        assert!(e.unwrap_err().is_usage());
    }
}
