//! Eigenvalue counting for Dirichlet sections by block LDL^* inertia.
//!
//! The pivots `D_1 = B_1 - lambda I`,
//! `D_k = B_k - lambda I - A_{k-1}^* D_{k-1}^{-1} A_{k-1}` are congruent to
//! the section shifted by `lambda`, so their summed inertia counts the
//! eigenvalues below, at and above the shift.

mod classify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, Hermitian, Matrix};
use crate::model::TruncatedJacobi;

pub use classify::{
    classify, eigenvalue_csv, Classification, ClassifyOptions, SpectralReport, SubintervalReport,
};

/// Retry budget for near-singular pivots; the perturbation grows tenfold per retry.
const MAX_RETRIES: u32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub n_minus: usize,
    pub n_zero: usize,
    pub n_plus: usize,
    /// Number of perturbed re-evaluations needed (0 when the shift was clean).
    pub retries: u32,
}

impl Inertia {
    pub fn total(&self) -> usize {
        self.n_minus + self.n_zero + self.n_plus
    }
}

/// Singularity threshold `1e-12 (1 + |lambda| + max block norm)`.
pub fn sigma_tol(t: &TruncatedJacobi, lambda: f64) -> f64 {
    1e-12 * (1.0 + lambda.abs() + t.max_block_norm())
}

/// Negative-pivot count, or `None` when some pivot is within `sigma` of singular.
fn negative_pivots(t: &TruncatedJacobi, lambda: f64, sigma: f64) -> Option<usize> {
    if let Some((b, a)) = t.scalar_parts() {
        let mut neg = 0;
        let mut prev = 0.0f64;
        for k in 0..b.len() {
            let mut d = b[k] - lambda;
            if k > 0 {
                d -= a[k - 1].norm_sqr() / prev;
            }
            if !d.is_finite() || d.abs() <= sigma {
                return None;
            }
            if d < 0.0 {
                neg += 1;
            }
            prev = d;
        }
        return Some(neg);
    }

    let n = t.num_blocks();
    let mut neg = 0;
    let mut prev_inv: Option<Matrix> = None;
    for k in 1..=n {
        let mut dk = t.diag_ref(k).expect("block storage").shift(lambda);
        if let Some(inv) = &prev_inv {
            let a = t.offdiag_ref(k - 1).expect("block storage");
            let corr = &a.adjoint() * &(inv * a);
            dk = Hermitian::new(&dk.clone().into_matrix() - &corr).ok()?;
        }
        let e = eigh(&dk);
        if e.values.iter().any(|mu| mu.abs() <= sigma) {
            return None;
        }
        neg += e.values.iter().filter(|&&mu| mu < 0.0).count();
        if k < n {
            prev_inv = Some(e.apply(|mu| 1.0 / mu).into_matrix());
        }
    }
    Some(neg)
}

/// Inertia of `T - lambda I`.
///
/// A pivot within [`sigma_tol`] of singular triggers re-evaluation at
/// `lambda -/+ h`, `h = 1e-9 (1 + |lambda|)`, widened tenfold per retry. When
/// the two sides agree the common count is returned with `n_zero = 0`;
/// otherwise `n_zero` is their difference.
pub fn ldl_inertia(t: &TruncatedJacobi, lambda: f64) -> Result<Inertia> {
    if !lambda.is_finite() {
        return Err(Error::invalid("shift must be finite"));
    }
    let size = t.size();
    let sigma = sigma_tol(t, lambda);
    if let Some(nm) = negative_pivots(t, lambda, sigma) {
        return Ok(Inertia {
            n_minus: nm,
            n_zero: 0,
            n_plus: size - nm,
            retries: 0,
        });
    }
    let mut h = 1e-9 * (1.0 + lambda.abs());
    for retry in 1..=MAX_RETRIES {
        let lo = negative_pivots(t, lambda - h, sigma_tol(t, lambda - h));
        let hi = negative_pivots(t, lambda + h, sigma_tol(t, lambda + h));
        if let (Some(nl), Some(nh)) = (lo, hi) {
            let nh = nh.max(nl);
            return Ok(Inertia {
                n_minus: nl,
                n_zero: nh - nl,
                n_plus: size - nh,
                retries: retry,
            });
        }
        h *= 10.0;
    }
    Err(Error::SingularShift { lambda })
}

/// Real interval with optional open ends and optional infinite ends.
///
/// Infinite ends are replaced by `-/+(Gershgorin bound + 1)` of the section
/// at evaluation time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub lo_closed: bool,
    #[serde(default)]
    pub hi_closed: bool,
    #[serde(default)]
    pub lo_infinite: bool,
    #[serde(default)]
    pub hi_infinite: bool,
}

impl Interval {
    /// Open interval `(lo, hi)`.
    pub fn open(lo: f64, hi: f64) -> Result<Self> {
        let i = Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
            lo_infinite: false,
            hi_infinite: false,
        };
        i.validate()?;
        Ok(i)
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        let i = Interval {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
            lo_infinite: false,
            hi_infinite: false,
        };
        i.validate()?;
        Ok(i)
    }

    /// `(lo, +inf)`.
    pub fn above(lo: f64) -> Result<Self> {
        let i = Interval {
            lo,
            hi: f64::INFINITY,
            lo_closed: false,
            hi_closed: false,
            lo_infinite: false,
            hi_infinite: true,
        };
        i.validate()?;
        Ok(i)
    }

    /// `(-inf, hi)`.
    pub fn below(hi: f64) -> Result<Self> {
        let i = Interval {
            lo: f64::NEG_INFINITY,
            hi,
            lo_closed: false,
            hi_closed: false,
            lo_infinite: true,
            hi_infinite: false,
        };
        i.validate()?;
        Ok(i)
    }

    pub fn validate(&self) -> Result<()> {
        let lo_ok = self.lo_infinite || self.lo.is_finite();
        let hi_ok = self.hi_infinite || self.hi.is_finite();
        if !lo_ok || !hi_ok {
            return Err(Error::invalid(
                "interval endpoints must be finite or flagged infinite",
            ));
        }
        if !self.lo_infinite && !self.hi_infinite && self.lo >= self.hi {
            return Err(Error::usage(format!(
                "interval needs lo < hi, got ({}, {})",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    /// Finite endpoints, with infinite ends clamped to `+/-bound`.
    pub fn resolve(&self, bound: f64) -> Interval {
        let mut r = *self;
        if self.lo_infinite {
            r.lo = -bound;
            r.lo_infinite = false;
            r.lo_closed = true;
        }
        if self.hi_infinite {
            r.hi = bound;
            r.hi_infinite = false;
            r.hi_closed = true;
        }
        r
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_infinite {
            true
        } else if self.lo_closed {
            x >= self.lo
        } else {
            x > self.lo
        };
        let below = if self.hi_infinite {
            true
        } else if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        above && below
    }
}

/// Count with a record of endpoint handling.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CountOutcome {
    pub count: usize,
    pub lo: f64,
    pub hi: f64,
    pub lo_inertia: Inertia,
    pub hi_inertia: Inertia,
    /// True when an endpoint was within the singularity window of an eigenvalue
    /// and had to be evaluated at nudged shifts.
    pub nudged: bool,
}

fn resolved(t: &TruncatedJacobi, i: &Interval) -> Result<Interval> {
    i.validate()?;
    Ok(i.resolve(t.gershgorin_bound() + 1.0))
}

/// Eigenvalues below-or-at `lo` and below-or-at `hi` according to openness.
fn endpoint_counts(t: &TruncatedJacobi, i: &Interval) -> Result<(usize, usize, Inertia, Inertia)> {
    let il = ldl_inertia(t, i.lo)?;
    let ih = ldl_inertia(t, i.hi)?;
    let below_lo = if i.lo_closed {
        il.n_minus
    } else {
        il.n_minus + il.n_zero
    };
    let below_hi = if i.hi_closed {
        ih.n_minus + ih.n_zero
    } else {
        ih.n_minus
    };
    Ok((below_lo, below_hi.max(below_lo), il, ih))
}

pub fn count_detailed(t: &TruncatedJacobi, i: &Interval) -> Result<CountOutcome> {
    let r = resolved(t, i)?;
    let (below_lo, below_hi, il, ih) = endpoint_counts(t, &r)?;
    Ok(CountOutcome {
        count: below_hi - below_lo,
        lo: r.lo,
        hi: r.hi,
        lo_inertia: il,
        hi_inertia: ih,
        nudged: il.retries > 0 || ih.retries > 0,
    })
}

/// Number of section eigenvalues in `i`, with multiplicity.
pub fn count(t: &TruncatedJacobi, i: &Interval) -> Result<usize> {
    count_detailed(t, i).map(|c| c.count)
}

/// All section eigenvalues in `i`, ascending, each within `tol` of a true one.
///
/// Brackets narrower than `tol` holding several eigenvalues return their
/// midpoint repeated with multiplicity.
pub fn eigenvalues_in(t: &TruncatedJacobi, i: &Interval, tol: f64) -> Result<Vec<f64>> {
    if !(tol > 0.0) {
        return Err(Error::usage("bisection tolerance must be positive"));
    }
    let r = resolved(t, i)?;
    let (below_lo, below_hi, _, _) = endpoint_counts(t, &r)?;
    let mut out = Vec::with_capacity(below_hi - below_lo);
    bisect(t, r.lo, r.hi, below_lo, below_hi, tol, &mut out)?;
    Ok(out)
}

fn bisect(
    t: &TruncatedJacobi,
    lo: f64,
    hi: f64,
    below_lo: usize,
    below_hi: usize,
    tol: f64,
    out: &mut Vec<f64>,
) -> Result<()> {
    let k = below_hi - below_lo;
    if k == 0 {
        return Ok(());
    }
    let mid = 0.5 * (lo + hi);
    if hi - lo <= tol || mid <= lo || mid >= hi {
        out.extend(std::iter::repeat_n(mid, k));
        return Ok(());
    }
    let below_mid = ldl_inertia(t, mid)?.n_minus.clamp(below_lo, below_hi);
    bisect(t, lo, mid, below_lo, below_mid, tol, out)?;
    bisect(t, mid, hi, below_mid, below_hi, tol, out)
}
