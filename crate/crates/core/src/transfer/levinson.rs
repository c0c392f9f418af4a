//! Hypothesis checks for a Levinson-type diagonalization of `x_{n+1} = A_n x_n`
//! with `A_n = V_n + R_n`: `det A_n, det V_n != 0`, `V` of bounded variation,
//! `R` summable, and `V_inf` with nonzero eigenvalues of distinct moduli.

use std::sync::Arc;

use serde::Serialize;

use crate::checkers::{Verdict, Window};
use crate::error::{Error, Result};
use crate::export::SCHEMA_VERSION;
use crate::fit::{geometric_grid, loglog_slope};
use crate::linalg::C64;
use crate::model::CoefficientFamily;

use super::{eig_2x2, kstep_product, Transfer2};

/// Determinants below this are reported as vanishing.
const DET_TOL: f64 = 1e-12;
/// Minimum gap between eigenvalues, and between their moduli, of `V_inf`.
const SEPARATION_TOL: f64 = 1e-6;
/// Number of geometric sample points used by the exponent fits.
const FIT_POINTS: usize = 60;

/// Leading part `V_n` of the `k`-step product at group index `n`.
pub trait Splitting: Send + Sync {
    fn name(&self) -> String;
    fn steps(&self) -> usize;
    fn leading(&self, n: usize, lambda: f64) -> Transfer2;
}

/// Three-step products of `step3`: the `1/n` and `1/n^alpha` terms of
/// `T_{3n} T_{3n-1} T_{3n-2}` around `[[0, -1], [1, delta]]`.
#[derive(Clone, Copy, Debug)]
pub struct Step3Splitting {
    pub alpha: f64,
    pub delta: f64,
}

impl Splitting for Step3Splitting {
    fn name(&self) -> String {
        "step3".into()
    }

    fn steps(&self) -> usize {
        3
    }

    fn leading(&self, n: usize, lambda: f64) -> Transfer2 {
        let (al, de) = (self.alpha, self.delta);
        let x = 3.0 * n as f64;
        let inv = al / x;
        let pw = lambda / x.powf(al);
        // F1 = [[0,1],[-2,0]], F2 = diag(-1,-2), F3 = diag(0,1), E21 = [[0,0],[1,0]]
        let m = [
            [-pw, -1.0 + inv],
            [1.0 - 2.0 * inv + de * pw, de - 2.0 * pw - de * inv],
        ];
        Transfer2::from_real(m, n, lambda)
    }
}

/// Two-step products of `heuristic2step`: `-I` plus the `1/n` and
/// `1/n^alpha` corrections, with the `b_{2n-1}` entries kept.
#[derive(Clone, Copy, Debug)]
pub struct TwoStepSplitting {
    pub alpha: f64,
    pub beta: f64,
}

impl Splitting for TwoStepSplitting {
    fn name(&self) -> String {
        "heuristic2step".into()
    }

    fn steps(&self) -> usize {
        2
    }

    fn leading(&self, n: usize, lambda: f64) -> Transfer2 {
        let al = self.alpha;
        let even = 2.0 * n as f64;
        let odd = even - 1.0;
        let b_odd = odd.powf(self.beta);
        let m = [
            [
                -1.0 + al / even,
                lambda / even.powf(al) - b_odd / odd.powf(al),
            ],
            [
                -lambda / even.powf(al),
                -1.0 + al / even - lambda * b_odd / even.powf(2.0 * al),
            ],
        ];
        Transfer2::from_real(m, n, lambda)
    }
}

/// User-supplied leading part.
#[derive(Clone)]
pub struct CustomSplitting {
    pub name: String,
    pub steps: usize,
    pub leading: Arc<dyn Fn(usize, f64) -> Transfer2 + Send + Sync>,
}

impl Splitting for CustomSplitting {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn steps(&self) -> usize {
        self.steps
    }

    fn leading(&self, n: usize, lambda: f64) -> Transfer2 {
        (self.leading)(n, lambda)
    }
}

/// Catalog splitting for a family, if one exists.
pub fn catalog_splitting(f: &CoefficientFamily) -> Option<Box<dyn Splitting>> {
    let p = f.params();
    match f.name() {
        "step3" => Some(Box::new(Step3Splitting {
            alpha: p["alpha"],
            delta: p["delta"],
        })),
        "heuristic2step" => Some(Box::new(TwoStepSplitting {
            alpha: p["alpha"],
            beta: p["beta"],
        })),
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevinsonReport {
    pub schema_version: String,
    pub family: Option<String>,
    pub splitting: Option<String>,
    pub lambda: Option<f64>,
    /// Group indices.
    pub window: Window,
    pub min_abs_det_a: f64,
    pub min_abs_det_v: f64,
    /// `sum ||V_{n+1} - V_n||` up to each checkpoint.
    pub bv_partial_sums: Vec<(usize, f64)>,
    /// `sum ||R_n||` up to each checkpoint.
    pub l1_partial_sums: Vec<(usize, f64)>,
    pub bv_increment_exponent: Option<f64>,
    pub remainder_exponent: Option<f64>,
    /// `V` at the end of the window.
    pub v_inf: Transfer2,
    pub v_inf_eigenvalues: [C64; 2],
    pub v_inf_moduli: [f64; 2],
    pub eigenvalue_separation: f64,
    pub moduli_separation: f64,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
}

impl LevinsonReport {
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

fn fit_exponent(first: usize, values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let last = first + values.len() - 1;
    let pts = geometric_grid(first, last, FIT_POINTS);
    let x: Vec<f64> = pts.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = pts.iter().map(|&n| values[n - first]).collect();
    loglog_slope(&x, &y)
}

/// Checks the hypotheses on `V_n`, `R_n` for `n` in `first..first + len`.
///
/// Increment and remainder norms are fitted against `n` on a geometric
/// sample; exponents below `-1` count as summability evidence. `V_inf` is
/// estimated by the last `V_n`.
pub fn levinson_hypotheses(
    v: &[Transfer2],
    r: &[Transfer2],
    first: usize,
) -> Result<LevinsonReport> {
    if v.len() != r.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            got: r.len(),
        });
    }
    if v.len() < 2 {
        return Err(Error::usage("the window must contain at least two indices"));
    }
    if v.iter().chain(r).any(|t| !t.is_finite()) {
        return Err(Error::invalid("non-finite entry in the V or R sequence"));
    }
    let last = first + v.len() - 1;
    let window = Window { first, last };

    let det_a = v.iter().zip(r).map(|(a, b)| (*a + *b).det().norm());
    let (mut min_a, mut arg_a) = (f64::INFINITY, first);
    for (k, d) in det_a.enumerate() {
        if d < min_a {
            (min_a, arg_a) = (d, first + k);
        }
    }
    let (mut min_v, mut arg_v) = (f64::INFINITY, first);
    for (k, t) in v.iter().enumerate() {
        let d = t.det().norm();
        if d < min_v {
            (min_v, arg_v) = (d, first + k);
        }
    }

    let incr: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let rem: Vec<f64> = r.iter().map(Transfer2::norm).collect();
    let checkpoints = geometric_grid(first, last, 20);
    let partial = |vals: &[f64]| -> Vec<(usize, f64)> {
        let mut acc = 0.0;
        let mut out = Vec::new();
        let mut next = checkpoints.iter().peekable();
        for (k, x) in vals.iter().enumerate() {
            acc += x;
            while next.peek().is_some_and(|&&c| c <= first + k) {
                out.push((*next.next().expect("peeked"), acc));
            }
        }
        out
    };
    let bv_partial_sums = partial(&incr);
    let l1_partial_sums = partial(&rem);
    let bv_exp = fit_exponent(first, &incr);
    let r_exp = fit_exponent(first, &rem);

    let v_inf = *v.last().expect("non-empty");
    let (e1, e2) = eig_2x2(&v_inf);
    let moduli = [e1.norm(), e2.norm()];
    let eig_sep = (e1 - e2).norm();
    let mod_sep = (moduli[0] - moduli[1]).abs();

    let mut notes = Vec::new();
    let mut verdicts = Vec::new();
    verdicts.push(Verdict {
        name: "det_a_nonvanishing".into(),
        holds: min_a > DET_TOL,
        window,
        detail: format!("min |det A_n| = {min_a:e} at n = {arg_a}"),
        witness_index: (min_a <= DET_TOL).then_some(arg_a),
    });
    verdicts.push(Verdict {
        name: "det_v_nonvanishing".into(),
        holds: min_v > DET_TOL,
        window,
        detail: format!("min |det V_n| = {min_v:e} at n = {arg_v}"),
        witness_index: (min_v <= DET_TOL).then_some(arg_v),
    });
    let fmt_exp = |e: Option<f64>| e.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    verdicts.push(Verdict {
        name: "v_bounded_variation".into(),
        holds: bv_exp.is_some_and(|e| e < -1.0) || incr.iter().all(|&x| x == 0.0),
        window,
        detail: format!("increment exponent {} (needs < -1)", fmt_exp(bv_exp)),
        witness_index: None,
    });
    verdicts.push(Verdict {
        name: "r_summable".into(),
        holds: r_exp.is_some_and(|e| e < -1.0) || rem.iter().all(|&x| x == 0.0),
        window,
        detail: format!("remainder exponent {} (needs < -1)", fmt_exp(r_exp)),
        witness_index: None,
    });
    let nonzero = moduli.iter().all(|&m| m > DET_TOL);
    let distinct = eig_sep > SEPARATION_TOL;
    let separated = mod_sep > SEPARATION_TOL;
    if nonzero && distinct && !separated {
        notes.push("distinct eigenvalues, equal moduli".into());
    }
    verdicts.push(Verdict {
        name: "limit_eigenvalues_separated".into(),
        holds: nonzero && distinct && separated,
        window,
        detail: format!(
            "eigenvalues {:.6}{:+.6}i, {:.6}{:+.6}i; moduli {:.6}, {:.6}; eigenvalue gap {eig_sep:e}, modulus gap {mod_sep:e}",
            e1.re, e1.im, e2.re, e2.im, moduli[0], moduli[1]
        ),
        witness_index: None,
    });

    Ok(LevinsonReport {
        schema_version: SCHEMA_VERSION.into(),
        family: None,
        splitting: None,
        lambda: None,
        window,
        min_abs_det_a: min_a,
        min_abs_det_v: min_v,
        bv_partial_sums,
        l1_partial_sums,
        bv_increment_exponent: bv_exp,
        remainder_exponent: r_exp,
        v_inf,
        v_inf_eigenvalues: [e1, e2],
        v_inf_moduli: moduli,
        eigenvalue_separation: eig_sep,
        moduli_separation: mod_sep,
        verdicts,
        notes,
    })
}

/// Builds `A_n = Sigma_n` from the family, `V_n` from the splitting and
/// `R_n = A_n - V_n` on group indices `first..=last`.
pub fn levinson_for_family(
    f: &CoefficientFamily,
    split: &dyn Splitting,
    lambda: f64,
    first: usize,
    last: usize,
) -> Result<LevinsonReport> {
    if first < 2 || first >= last {
        return Err(Error::usage(format!(
            "window must satisfy 2 <= first < last, got [{first}, {last}]"
        )));
    }
    let k = split.steps();
    let mut v = Vec::with_capacity(last - first + 1);
    let mut r = Vec::with_capacity(last - first + 1);
    for n in first..=last {
        let a = kstep_product(f, n, k, lambda)?;
        let lead = split.leading(n, lambda);
        r.push(a - lead);
        v.push(lead);
    }
    let mut rep = levinson_hypotheses(&v, &r, first)?;
    rep.family = Some(f.name().into());
    rep.splitting = Some(split.name());
    rep.lambda = Some(lambda);
    rep.notes.extend(f.notes());
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step3_report(delta: f64) -> LevinsonReport {
        let f = CoefficientFamily::step3(0.75, delta).unwrap();
        let s = catalog_splitting(&f).unwrap();
        levinson_for_family(&f, s.as_ref(), 1.0, 10, 10_000).unwrap()
    }

    #[test]
    fn step3_delta_one() {
        let r = step3_report(1.0);
        let re = r.remainder_exponent.unwrap();
        assert!((re + 1.5).abs() <= 0.1, "remainder exponent {re}");
        assert!(r.bv_increment_exponent.unwrap() <= -1.0);
        assert!(r.verdict("r_summable").unwrap().holds);
        assert!(r.verdict("v_bounded_variation").unwrap().holds);
        assert!(!r.verdict("limit_eigenvalues_separated").unwrap().holds);
        assert!(r
            .notes
            .iter()
            .any(|n| n == "distinct eigenvalues, equal moduli"));
        for w in r
            .bv_partial_sums
            .windows(2)
            .chain(r.l1_partial_sums.windows(2))
        {
            assert!(w[0].1 <= w[1].1 && w[0].0 < w[1].0);
        }
    }

    #[test]
    fn step3_delta_three() {
        let r = step3_report(3.0);
        assert!(r.all_hold(), "{:?}", r.verdicts);
        let s5 = 5f64.sqrt();
        let mut m = r.v_inf_moduli;
        m.sort_by(f64::total_cmp);
        assert!((m[0] - (3.0 - s5) / 2.0).abs() < 1e-2);
        assert!((m[1] - (3.0 + s5) / 2.0).abs() < 1e-2);
    }

    #[test]
    fn two_step_splitting_matches_product_to_leading_order() {
        let f =
            CoefficientFamily::named("heuristic2step", &[("alpha", 0.8), ("beta", 0.3)]).unwrap();
        let s = catalog_splitting(&f).unwrap();
        let r = levinson_for_family(&f, s.as_ref(), 1.0, 100, 5000).unwrap();
        assert!(r.remainder_exponent.unwrap() < -1.0);
    }
}
