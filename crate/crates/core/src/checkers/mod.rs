//! Finite-horizon witnesses for discreteness criteria.
//!
//! "For all n >= N" statements are checked on `[candidate, horizon]` only.
//! When the last violation of a condition falls inside the trailing tail
//! window the condition is reported as failing, since no finite witness index
//! was observed.
//!
//! Horizons count index pairs: a horizon `H` scans `B_1..B_{2H}`.

mod probe;
mod schur;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::export::{csv_string, fmt_f64, SCHEMA_VERSION};
use crate::linalg::{op_norm, opp_power, Hermitian, PowerExponent};
use crate::model::{block_at, CoefficientFamily};

pub use probe::{form_positivity_probe, PositivityProbe, ProbeOptions, PROBE_FLOOR};
pub use schur::{schur_frobenius, schur_frobenius_mod_finite_rank, SchurFrobeniusRecord};

/// Index of the minimal closed extension assumed in counting bounds.
pub const ASSUMED_INDEX_JMIN: usize = 0;

/// Default closeness to 1 below which a margin sum counts as critical.
pub const DEFAULT_CRIT_TOL: f64 = 1e-3;

/// Default threshold for "B_n invertible".
pub const DEFAULT_INVERTIBILITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
pub struct Window {
    pub first: usize,
    pub last: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub holds: bool,
    pub window: Window,
    pub detail: String,
    /// Index (block index unless stated otherwise) witnessing a failure.
    pub witness_index: Option<usize>,
}

/// Witnesses behind the counting bound `d * calN(c + 2a) + ind J_min`.
#[derive(Clone, Debug, Serialize)]
pub struct DiscretenessWitnesses {
    pub c: f64,
    pub a: f64,
    /// Least pair index with `max eig B_{2n} <= c` from there to the horizon.
    pub n0: usize,
    /// Least pair index with `min eig B_{2n-1} - c >= 2a` from there to the horizon.
    pub n_of_2a: usize,
    /// `max(2 n0, 2 n_of_2a - 1)`, a block index.
    pub cal_n: usize,
    /// `d * cal_n + assumed_index_jmin`.
    pub bound: usize,
    /// Last pair index violating each condition, if any.
    pub last_even_violation: Option<usize>,
    pub last_odd_violation: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoSidedWitness {
    pub m: f64,
    /// Least pair index with `min eig B_{2j-1} >= M` thereafter.
    pub n_odd: usize,
    /// Least pair index with `max eig B_{2j} <= -M` thereafter.
    pub n_even: usize,
    pub n_of_m: usize,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingMargins {
    pub tail_window: usize,
    pub s1_tail_sup: f64,
    pub s2_tail_sup: f64,
    pub sum: f64,
    pub crit_tol: f64,
    pub critical: bool,
    /// `inf min eig B_{2k-1}` over the tail and over the preceding window.
    pub odd_min_tail: f64,
    pub odd_min_previous: f64,
    /// `sup ||pinv(B_{2k})_+||` over the tail and over the preceding window.
    pub even_pinv_norm_tail: f64,
    pub even_pinv_norm_previous: f64,
    /// Smallest `|eigenvalue|` among `B_1..B_{2H}`.
    pub min_abs_eigenvalue: f64,
}

/// Full margin sequences for `n = 2..=horizon`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct MarginSeries {
    pub n: Vec<usize>,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
}

impl MarginSeries {
    /// `n,s1,s2` rows.
    pub fn to_csv(&self) -> String {
        let rows = (0..self.n.len()).map(|k| {
            vec![
                self.n[k].to_string(),
                fmt_f64(self.s1[k]),
                fmt_f64(self.s2[k]),
            ]
        });
        csv_string(&["n", "s1", "s2"], rows)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub schema_version: String,
    pub check: String,
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub block_dim: usize,
    pub horizon: usize,
    pub assumed_index_jmin: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discreteness: Option<DiscretenessWitnesses>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_sided: Option<Vec<TwoSidedWitness>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margins: Option<CouplingMargins>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub series: Option<MarginSeries>,
}

impl ConditionReport {
    fn new(check: &str, f: &CoefficientFamily, horizon: usize) -> Self {
        ConditionReport {
            schema_version: SCHEMA_VERSION.into(),
            check: check.into(),
            family: f.name().into(),
            params: f.params().clone(),
            block_dim: f.block_dim(),
            horizon,
            assumed_index_jmin: ASSUMED_INDEX_JMIN,
            discreteness: None,
            two_sided: None,
            margins: None,
            verdicts: Vec::new(),
            notes: f.notes(),
            series: None,
        }
    }

    /// True when every verdict holds.
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

/// Default tail window: a tenth of the horizon, at least one index.
pub fn default_tail_window(horizon: usize) -> usize {
    (horizon / 10).max(1)
}

fn check_horizon(f: &CoefficientFamily, horizon: usize, min: usize) -> Result<()> {
    if horizon < min {
        return Err(Error::usage(format!(
            "horizon must be at least {min}, got {horizon}"
        )));
    }
    if 2 * horizon > f.max_index() {
        return Err(Error::OutOfRange {
            family: f.name().into(),
            index: 2 * horizon,
            max: f.max_index(),
        });
    }
    Ok(())
}

/// `(min eig B_{2n-1}, max eig B_{2n})` for `n = 1..=horizon`.
fn pair_extremes(f: &CoefficientFamily, horizon: usize) -> Result<Vec<(f64, f64)>> {
    (1..=horizon)
        .into_par_iter()
        .map(|n| {
            let odd = block_at(f, 2 * n - 1)?.b.min_eigenvalue();
            let even = block_at(f, 2 * n)?.b.max_eigenvalue();
            Ok((odd, even))
        })
        .collect()
}

fn last_violation(vals: impl DoubleEndedIterator<Item = (usize, bool)>) -> Option<usize> {
    vals.rev().find(|(_, bad)| *bad).map(|(n, _)| n)
}

/// Witness indices and counting bound for discreteness above `c`.
///
/// `N_0` covers `max eig B_{2n} <= c`; `N(2a)` covers
/// `min eig B_{2n-1} - c >= 2a`; `calN = max(2 N_0, 2 N(2a) - 1)`.
pub fn discreteness_witnesses(
    f: &CoefficientFamily,
    c: f64,
    a: f64,
    horizon: usize,
) -> Result<ConditionReport> {
    if !(a > 0.0) || !a.is_finite() || !c.is_finite() {
        return Err(Error::usage("need finite c and a > 0"));
    }
    check_horizon(f, horizon, 100)?;
    let ext = pair_extremes(f, horizon)?;
    let tail = default_tail_window(horizon);
    let tail_start = horizon - tail + 1;
    let window = Window {
        first: 1,
        last: horizon,
    };

    let even_viol = last_violation(ext.iter().enumerate().map(|(i, e)| (i + 1, e.1 > c)));
    let odd_viol = last_violation(
        ext.iter()
            .enumerate()
            .map(|(i, e)| (i + 1, e.0 - c < 2.0 * a)),
    );
    let n0 = even_viol.map_or(1, |n| n + 1);
    let n2a = odd_viol.map_or(1, |n| n + 1);
    let cal_n = (2 * n0).max(2 * n2a - 1);
    let d = f.block_dim();

    let mut r = ConditionReport::new("discreteness_witnesses", f, horizon);
    let even_ok = even_viol.is_none_or(|n| n < tail_start);
    let odd_ok = odd_viol.is_none_or(|n| n < tail_start);
    r.verdicts.push(Verdict {
        name: "even_blocks_bounded_by_c".into(),
        holds: even_ok,
        window,
        detail: if even_ok {
            format!("max eig B_2n <= {c} for pair indices {n0}..={horizon}")
        } else {
            format!("max eig B_2n > {c} inside the tail window starting at pair index {tail_start}")
        },
        witness_index: if even_ok {
            None
        } else {
            even_viol.map(|n| 2 * n)
        },
    });
    r.verdicts.push(Verdict {
        name: "odd_blocks_diverge".into(),
        holds: odd_ok,
        window,
        detail: if odd_ok {
            format!("min eig B_2n-1 - {c} >= {} for pair indices {n2a}..={horizon}", 2.0 * a)
        } else {
            format!("min eig B_2n-1 - {c} < {} inside the tail window starting at pair index {tail_start}", 2.0 * a)
        },
        witness_index: if odd_ok { None } else { odd_viol.map(|n| 2 * n - 1) },
    });
    if !even_ok {
        r.notes.push(
            "even blocks are not bounded by c on the window: the counting bound does not apply; \
             the coupling-margin criterion may still apply"
                .into(),
        );
    }
    r.notes.push(format!(
        "assumed ind J_min = {ASSUMED_INDEX_JMIN} (limit point case)"
    ));
    r.discreteness = Some(DiscretenessWitnesses {
        c,
        a,
        n0,
        n_of_2a: n2a,
        cal_n,
        bound: d * cal_n + ASSUMED_INDEX_JMIN,
        last_even_violation: even_viol,
        last_odd_violation: odd_viol,
    });
    Ok(r)
}

/// Two-sided growth: `B_{2j-1} >= M` and `B_{2j} <= -M` eventually, for each `M`.
pub fn two_sided_growth(
    f: &CoefficientFamily,
    m_list: &[f64],
    horizon: usize,
) -> Result<ConditionReport> {
    if m_list.is_empty() || m_list.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
        return Err(Error::usage("M values must be positive and finite"));
    }
    if m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::usage("M values must be strictly ascending"));
    }
    check_horizon(f, horizon, 10)?;
    let ext = pair_extremes(f, horizon)?;
    let tail_start = horizon - default_tail_window(horizon) + 1;
    let window = Window {
        first: 1,
        last: horizon,
    };
    let mut r = ConditionReport::new("two_sided_growth", f, horizon);
    let mut witnesses = Vec::new();
    for &m in m_list {
        let odd = last_violation(ext.iter().enumerate().map(|(i, e)| (i + 1, e.0 < m)));
        let even = last_violation(ext.iter().enumerate().map(|(i, e)| (i + 1, e.1 > -m)));
        let ok = |v: Option<usize>| v.is_none_or(|n| n < tail_start);
        let holds = ok(odd) && ok(even);
        let n_odd = odd.map_or(1, |n| n + 1);
        let n_even = even.map_or(1, |n| n + 1);
        let witness = if !ok(even) {
            even.map(|n| 2 * n)
        } else if !ok(odd) {
            odd.map(|n| 2 * n - 1)
        } else {
            None
        };
        r.verdicts.push(Verdict {
            name: format!("growth_at_M={m}"),
            holds,
            window,
            detail: if holds {
                format!(
                    "B_2j-1 >= {m} and B_2j <= -{m} for pair indices >= {}",
                    n_odd.max(n_even)
                )
            } else {
                format!("violation inside the tail window starting at pair index {tail_start}")
            },
            witness_index: witness,
        });
        witnesses.push(TwoSidedWitness {
            m,
            n_odd,
            n_even,
            n_of_m: n_odd.max(n_even),
            holds,
        });
    }
    r.two_sided = Some(witnesses);
    Ok(r)
}

fn neg_half(h: &Hermitian) -> Hermitian {
    opp_power(h, PowerExponent::NegHalf, None)
}

/// Norm of the pseudo-inverse of the positive part, `1 / (smallest eigenvalue above the floor)`.
fn pinv_positive_norm(h: &Hermitian) -> f64 {
    let vals = h.eigenvalues();
    let floor = 1e-12 * (1.0 + vals[0].abs().max(vals[vals.len() - 1].abs()));
    vals.iter()
        .copied()
        .filter(|&x| x > floor)
        .fold(0.0, |m, x| m.max(1.0 / x))
}

struct PairData {
    s1: f64,
    s2: f64,
    odd_min: f64,
    even_pinv: f64,
    min_abs: f64,
}

/// Coupling margins
/// `s1(n) = ||pinv(B_2n)^{1/2} A_{2n-1}^* B_{2n-1}^{-1/2}||` and
/// `s2(n) = ||pinv(B_{2n-2})^{1/2} A_{2n-2} B_{2n-1}^{-1/2}||`,
/// their suprema over the last `tail_window` pair indices, and the
/// divergence conditions on odd and even blocks.
///
/// The margin verdict holds only when `sup s1 + sup s2 < 1 - crit_tol`; a sum
/// within `crit_tol` of 1 is flagged critical.
pub fn coupling_margins(
    f: &CoefficientFamily,
    horizon: usize,
    tail_window: usize,
    crit_tol: f64,
) -> Result<ConditionReport> {
    check_horizon(f, horizon, 4)?;
    if tail_window == 0 || tail_window >= horizon {
        return Err(Error::usage(format!(
            "need 0 < tail_window < horizon, got {tail_window} and {horizon}"
        )));
    }
    if !(crit_tol >= 0.0) {
        return Err(Error::usage("crit_tol must be nonnegative"));
    }
    let data: Vec<PairData> = (2..=horizon)
        .into_par_iter()
        .map(|n| {
            let b_odd = block_at(f, 2 * n - 1)?;
            let b_even = block_at(f, 2 * n)?;
            let b_prev = block_at(f, 2 * n - 2)?;
            let odd_half = neg_half(&b_odd.b);
            let s1 = op_norm(
                &(&(neg_half(&b_even.b).as_matrix() * &b_odd.a.adjoint()) * odd_half.as_matrix()),
            );
            let s2 =
                op_norm(&(&(neg_half(&b_prev.b).as_matrix() * &b_prev.a) * odd_half.as_matrix()));
            let odd_vals = b_odd.b.eigenvalues();
            let even_vals = b_even.b.eigenvalues();
            let min_abs = odd_vals
                .iter()
                .chain(&even_vals)
                .fold(f64::INFINITY, |m, x| m.min(x.abs()));
            Ok(PairData {
                s1,
                s2,
                odd_min: odd_vals[0],
                even_pinv: pinv_positive_norm(&b_even.b),
                min_abs,
            })
        })
        .collect::<Result<_>>()?;
    let b1_min_abs = block_at(f, 1)?
        .b
        .eigenvalues()
        .iter()
        .fold(f64::INFINITY, |m, x| m.min(x.abs()));
    let b2_min_abs = block_at(f, 2)?
        .b
        .eigenvalues()
        .iter()
        .fold(f64::INFINITY, |m, x| m.min(x.abs()));

    // data[k] is pair index k + 2
    let len = data.len();
    let tail = tail_window.min(len);
    let tail_data = &data[len - tail..];
    let prev_start = len.saturating_sub(2 * tail);
    let prev_data = &data[prev_start..len - tail];
    let tail_first = horizon - tail + 1;
    let tail_win = Window {
        first: tail_first,
        last: horizon,
    };

    let s1_sup = tail_data.iter().fold(0.0f64, |m, p| m.max(p.s1));
    let s2_sup = tail_data.iter().fold(0.0f64, |m, p| m.max(p.s2));
    let sum = s1_sup + s2_sup;
    let critical = (sum - 1.0).abs() <= crit_tol;
    let margin_ok = sum < 1.0 - crit_tol;

    let odd_min_tail = tail_data
        .iter()
        .fold(f64::INFINITY, |m, p| m.min(p.odd_min));
    let odd_min_prev = prev_data
        .iter()
        .fold(f64::INFINITY, |m, p| m.min(p.odd_min));
    let odd_ok = odd_min_tail > 0.0 && (prev_data.is_empty() || odd_min_tail > odd_min_prev);
    let first_nonpos = tail_data
        .iter()
        .position(|p| p.odd_min <= 0.0)
        .map(|k| 2 * (tail_first + k) - 1);

    let even_tail = tail_data.iter().fold(0.0f64, |m, p| m.max(p.even_pinv));
    let even_prev = prev_data.iter().fold(0.0f64, |m, p| m.max(p.even_pinv));
    let even_ok = even_tail == 0.0 || (!prev_data.is_empty() && even_tail < even_prev);

    let min_abs = data
        .iter()
        .fold(b1_min_abs.min(b2_min_abs), |m, p| m.min(p.min_abs));

    let mut r = ConditionReport::new("coupling_margins", f, horizon);
    r.verdicts.push(Verdict {
        name: "odd_blocks_diverge".into(),
        holds: odd_ok,
        window: tail_win,
        detail: format!(
            "inf min eig B_2k-1: tail {odd_min_tail:e}, preceding window {odd_min_prev:e}"
        ),
        witness_index: first_nonpos,
    });
    r.verdicts.push(Verdict {
        name: "even_positive_parts_dichotomy".into(),
        holds: even_ok,
        window: tail_win,
        detail: if even_tail == 0.0 {
            "positive parts of B_2k vanish on the tail".into()
        } else {
            format!("sup ||pinv(B_2k)_+||: tail {even_tail:e}, preceding window {even_prev:e}")
        },
        witness_index: None,
    });
    r.verdicts.push(Verdict {
        name: "margin_sum_below_one".into(),
        holds: margin_ok,
        window: tail_win,
        detail: if margin_ok {
            format!("holds (< 1): sup s1 + sup s2 = {sum:.12}")
        } else {
            format!("fails (< 1 not satisfied): sup s1 + sup s2 = {sum:.12}")
        },
        witness_index: None,
    });
    if critical {
        r.notes.push(format!(
            "critical coupling: margin sum {sum:.12} lies within {crit_tol:e} of 1; the finite-horizon \
             estimate cannot decide the strict inequality"
        ));
    }
    r.notes.push(format!(
        "invertibility of the diagonal (informational): min |eig B_n| over blocks 1..={} is {min_abs:e}{}",
        2 * horizon,
        if min_abs > DEFAULT_INVERTIBILITY_TOL { "" } else { " (not invertible)" }
    ));
    r.margins = Some(CouplingMargins {
        tail_window: tail,
        s1_tail_sup: s1_sup,
        s2_tail_sup: s2_sup,
        sum,
        crit_tol,
        critical,
        odd_min_tail,
        odd_min_previous: odd_min_prev,
        even_pinv_norm_tail: even_tail,
        even_pinv_norm_previous: even_prev,
        min_abs_eigenvalue: min_abs,
    });
    r.series = Some(MarginSeries {
        n: (2..=horizon).collect(),
        s1: data.iter().map(|p| p.s1).collect(),
        s2: data.iter().map(|p| p.s2).collect(),
    });
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_witnesses() {
        let f = CoefficientFamily::example1(0.75, 1.0).unwrap();
        let r = discreteness_witnesses(&f, 0.0, 1.0, 1000).unwrap();
        let w = r.discreteness.as_ref().unwrap();
        assert_eq!((w.n0, w.n_of_2a, w.cal_n, w.bound), (1, 2, 3, 3));
        assert!(r.all_hold());
        assert_eq!(r.assumed_index_jmin, 0);
    }

    #[test]
    fn growing_even_blocks_fail() {
        let f = CoefficientFamily::named("scalar_power_diag", &[("alpha", 0.75), ("beta", 0.3)])
            .unwrap();
        let r = discreteness_witnesses(&f, 0.0, 1.0, 200).unwrap();
        let v = r.verdict("even_blocks_bounded_by_c").unwrap();
        assert!(!v.holds);
        assert_eq!(v.witness_index, Some(400));
    }

    #[test]
    fn horizon_precondition() {
        let f = CoefficientFamily::example1(0.75, 1.0).unwrap();
        assert!(discreteness_witnesses(&f, 0.0, 1.0, 50)
            .unwrap_err()
            .is_usage());
        assert!(discreteness_witnesses(&f, 0.0, 0.0, 500)
            .unwrap_err()
            .is_usage());
    }

    #[test]
    fn example1_margins_vanish() {
        let f = CoefficientFamily::example1(0.75, 1.0).unwrap();
        let r = coupling_margins(&f, 1000, 100, DEFAULT_CRIT_TOL).unwrap();
        let m = r.margins.as_ref().unwrap();
        assert_eq!(m.s1_tail_sup, 0.0);
        assert_eq!(m.s2_tail_sup, 0.0);
        assert!(r.all_hold(), "{:?}", r.verdicts);
        let csv = r.series.as_ref().unwrap().to_csv();
        assert!(csv.starts_with("n,s1,s2\n2,"));
    }
}
