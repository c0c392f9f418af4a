//! Generalized eigenvectors of scalar Jacobi matrices and subordinacy ratios.
//!
//! Paths are stored as `mantissa * exp(log_scale)`; the running pair is
//! renormalized whenever its size leaves `[1e-150, 1e150]`, so stretched
//! exponential growth or decay never overflows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{csv_string, fmt_f64, SCHEMA_VERSION};
use crate::linalg::C64;
use crate::model::CoefficientFamily;

use super::scalar_coeffs;

const GUARD_HI: f64 = 1e150;
const GUARD_LO: f64 = 1e-150;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// `mant * exp(log_scale)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaledValue {
    pub mant: C64,
    pub log_scale: f64,
}

impl ScaledValue {
    /// Natural log of the modulus; `-inf` for zero.
    pub fn log_modulus(&self) -> f64 {
        self.mant.norm().ln() + self.log_scale
    }

    pub fn phase(&self) -> f64 {
        self.mant.arg()
    }

    /// Plain value; overflows to infinity or underflows to zero when out of range.
    pub fn value(&self) -> C64 {
        self.mant * self.log_scale.exp()
    }

    /// Mantissa rescaled to `exp(log_scale)`.
    fn at_scale(&self, log_scale: f64) -> C64 {
        if self.mant.norm() == 0.0 {
            return self.mant;
        }
        self.mant * (self.log_scale - log_scale).exp()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolutionPath {
    pub family: String,
    #[serde(skip)]
    family_params: std::collections::BTreeMap<String, f64>,
    pub lambda: f64,
    pub direction: Direction,
    /// `u_1..u_N`.
    pub values: Vec<ScaledValue>,
}

impl SolutionPath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `u_n`, 1-based.
    pub fn get(&self, n: usize) -> ScaledValue {
        self.values[n - 1]
    }

    pub fn same_family(&self, other: &SolutionPath) -> bool {
        self.family == other.family && self.family_params == other.family_params
    }

    /// `n,re,im,log_modulus`; `re`/`im` are the plain value and may be
    /// `inf` or `0` where only the log-modulus is meaningful.
    pub fn to_csv(&self) -> String {
        let rows = self.values.iter().enumerate().map(|(k, s)| {
            let v = s.value();
            vec![
                (k + 1).to_string(),
                fmt_f64(v.re),
                fmt_f64(v.im),
                fmt_f64(s.log_modulus()),
            ]
        });
        csv_string(&["n", "re", "im", "log_modulus"], rows)
    }

    /// Largest relative residual of `a_{n-1} u_{n-1} + b_n u_n + a_n u_{n+1} = lambda u_n`
    /// over `2 <= n <= N-1`, each term scaled by the sum of the term moduli.
    pub fn max_relative_residual(&self, f: &CoefficientFamily) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let mut a_prev = scalar_coeffs(f, 1)?.0;
        for n in 2..self.len() {
            let (a, b) = scalar_coeffs(f, n)?;
            let (p, c, x) = (self.get(n - 1), self.get(n), self.get(n + 1));
            let s = p.log_scale.max(c.log_scale).max(x.log_scale);
            let (p, c, x) = (p.at_scale(s), c.at_scale(s), x.at_scale(s));
            let terms = [p * a_prev, c * b, x * a, -c * self.lambda];
            let scale: f64 = terms.iter().map(|t| t.norm()).sum();
            if scale > 0.0 {
                let r: C64 = terms.iter().sum();
                worst = worst.max(r.norm() / scale);
            }
            a_prev = a;
        }
        Ok(worst)
    }
}

/// Runs the three-term recursion from `init` over indices `1..=horizon`.
///
/// Forward: `init = (u_1, u_2)`. Backward: `init = (u_N, u_{N-1})`, which
/// builds the solution that decays as `n` grows when one exists; the
/// unwanted component shrinks under backward iteration, so renormalization
/// alone keeps it accurate.
pub fn solve_recursion(
    f: &CoefficientFamily,
    lambda: f64,
    init: (C64, C64),
    horizon: usize,
    direction: Direction,
) -> Result<SolutionPath> {
    if f.block_dim() != 1 {
        return Err(Error::UnsupportedDimension(f.block_dim()));
    }
    if horizon < 2 {
        return Err(Error::usage(format!(
            "horizon must be at least 2, got {horizon}"
        )));
    }
    if !lambda.is_finite() {
        return Err(Error::invalid("lambda must be finite"));
    }
    let (x0, x1) = init;
    if ![x0, x1]
        .iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
    {
        return Err(Error::invalid("initial values must be finite"));
    }
    if x0.norm() == 0.0 && x1.norm() == 0.0 {
        return Err(Error::usage("initial values must not both vanish"));
    }
    if horizon > f.max_index() {
        return Err(Error::OutOfRange {
            family: f.name().into(),
            index: horizon,
            max: f.max_index(),
        });
    }

    // coefficients a_1..a_N, b_1..b_N
    let mut a = Vec::with_capacity(horizon);
    let mut b = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let (an, bn) = scalar_coeffs(f, n)?;
        if an == 0.0 {
            return Err(Error::SingularCoupling {
                index: n,
                det_abs: 0.0,
            });
        }
        a.push(an);
        b.push(bn);
    }

    let mut out = vec![
        ScaledValue {
            mant: C64::new(0.0, 0.0),
            log_scale: 0.0
        };
        horizon
    ];
    let (mut prev, mut cur, mut scale) = (x0, x1, 0.0f64);
    let (i0, i1) = match direction {
        Direction::Forward => (0, 1),
        Direction::Backward => (horizon - 1, horizon - 2),
    };
    out[i0] = ScaledValue {
        mant: prev,
        log_scale: 0.0,
    };
    out[i1] = ScaledValue {
        mant: cur,
        log_scale: 0.0,
    };

    for step in 2..horizon {
        // index (0-based) of the value being produced and of the centre term
        let (idx, centre) = match direction {
            Direction::Forward => (step, step - 1),
            Direction::Backward => (horizon - 1 - step, horizon - step),
        };
        let l = lambda - b[centre];
        let next = match direction {
            // a_{n-1} u_{n-1} + b_n u_n + a_n u_{n+1} = lambda u_n with n = centre + 1
            Direction::Forward => (cur * l - prev * a[centre - 1]) / a[centre],
            Direction::Backward => (cur * l - prev * a[centre]) / a[centre - 1],
        };
        prev = cur;
        cur = next;
        let big = prev.norm().max(cur.norm());
        if !(big.is_finite()) {
            return Err(Error::Overflow { index: idx + 1 });
        }
        if big > GUARD_HI || (big < GUARD_LO && big > 0.0) {
            prev /= big;
            cur /= big;
            scale += big.ln();
            if !scale.is_finite() {
                return Err(Error::Overflow { index: idx + 1 });
            }
        }
        out[idx] = ScaledValue {
            mant: cur,
            log_scale: scale,
        };
    }

    Ok(SolutionPath {
        family: f.name().into(),
        family_params: f.params().clone(),
        lambda,
        direction,
        values: out,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    ToZero,
    BoundedOscillating,
    Inconclusive,
}

impl Trend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Trend::ToZero => "to-zero",
            Trend::BoundedOscillating => "bounded-oscillating",
            Trend::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubordinacyOptions {
    /// Bounded-oscillating when every checkpoint ratio lies in `[r_min, 1/r_min]`.
    pub r_min: f64,
    /// To-zero when the last three checkpoints each drop by at least this factor.
    pub decrease_factor: f64,
    /// First checkpoint; later ones double until the horizon, which is always included.
    pub first_checkpoint: usize,
    /// Relative Wronskian below which the solutions count as dependent.
    pub wronskian_tol: f64,
}

impl Default for SubordinacyOptions {
    fn default() -> Self {
        SubordinacyOptions {
            r_min: 0.05,
            decrease_factor: 10.0,
            first_checkpoint: 10,
            wronskian_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SubordinacyTrace {
    pub schema_version: String,
    pub family: String,
    pub lambda: f64,
    pub checkpoints: Vec<usize>,
    /// `log10 r_N` at each checkpoint; kept in log form so tiny ratios stay positive.
    pub log10_ratio: Vec<f64>,
    pub trend: Trend,
    pub options: SubordinacyOptions,
    /// `|u_1 v_2 - u_2 v_1| / (|u_1 v_2| + |u_2 v_1|)`.
    pub relative_wronskian: f64,
}

impl SubordinacyTrace {
    /// Plain ratio; may underflow to zero.
    pub fn ratio(&self, k: usize) -> f64 {
        10f64.powf(self.log10_ratio[k])
    }

    /// `N,ratio`, with ratios printed from their logarithm so none underflows.
    pub fn to_csv(&self) -> String {
        let rows = self
            .checkpoints
            .iter()
            .zip(&self.log10_ratio)
            .map(|(n, &l)| vec![n.to_string(), fmt_from_log10(l)]);
        csv_string(&["N", "ratio"], rows)
    }
}

/// Scientific notation for `10^l` with 17 significant digits.
fn fmt_from_log10(l: f64) -> String {
    if !l.is_finite() {
        return fmt_f64(10f64.powf(l));
    }
    let mut e = l.floor();
    let mut m = 10f64.powf(l - e);
    if m >= 10.0 {
        m /= 10.0;
        e += 1.0;
    }
    let s = format!("{m:.16e}");
    // s is "d.dddde0" or "1.0000e1" after rounding
    let (mant, exp) = s.split_once('e').expect("scientific format");
    let exp: i64 = exp.parse().expect("integer exponent");
    format!("{mant}e{}", exp + e as i64)
}

fn log_add_exp(x: f64, y: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return y;
    }
    if y == f64::NEG_INFINITY {
        return x;
    }
    let m = x.max(y);
    m + ((x - m).exp() + (y - m).exp()).ln()
}

fn relative_wronskian(u: &SolutionPath, v: &SolutionPath) -> f64 {
    let t1 = (
        u.get(1).mant * v.get(2).mant,
        u.get(1).log_scale + v.get(2).log_scale,
    );
    let t2 = (
        u.get(2).mant * v.get(1).mant,
        u.get(2).log_scale + v.get(1).log_scale,
    );
    let s = t1.1.max(t2.1);
    let x = t1.0 * (t1.1 - s).exp();
    let y = t2.0 * (t2.1 - s).exp();
    let denom = x.norm() + y.norm();
    if denom == 0.0 {
        0.0
    } else {
        (x - y).norm() / denom
    }
}

/// `r_N = sum_{n<=N} |u_n|^2 / sum_{n<=N} |v_n|^2` on a doubling grid of
/// checkpoints, with a trend tag.
pub fn subordinacy_ratio(
    u: &SolutionPath,
    v: &SolutionPath,
    opts: &SubordinacyOptions,
) -> Result<SubordinacyTrace> {
    if u.lambda != v.lambda {
        return Err(Error::usage(format!(
            "paths have different lambda ({} vs {})",
            u.lambda, v.lambda
        )));
    }
    if !u.same_family(v) {
        return Err(Error::usage("paths come from different families"));
    }
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    if !(opts.r_min > 0.0 && opts.r_min < 1.0)
        || !(opts.decrease_factor > 1.0)
        || opts.first_checkpoint == 0
    {
        return Err(Error::usage(
            "need 0 < r_min < 1, decrease_factor > 1 and a positive first checkpoint",
        ));
    }
    let rel_w = relative_wronskian(u, v);
    if rel_w < opts.wronskian_tol {
        return Err(Error::DependentSolutions { wronskian: rel_w });
    }

    let n_max = u.len();
    let mut checkpoints = Vec::new();
    let mut c = opts.first_checkpoint.min(n_max);
    while c < n_max {
        checkpoints.push(c);
        c *= 2;
    }
    checkpoints.push(n_max);

    let (mut lu, mut lv) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut log10_ratio = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    for n in 1..=n_max {
        lu = log_add_exp(lu, 2.0 * u.get(n).log_modulus());
        lv = log_add_exp(lv, 2.0 * v.get(n).log_modulus());
        if next.peek() == Some(&&n) {
            next.next();
            log10_ratio.push((lu - lv) / std::f64::consts::LN_10);
        }
    }

    let k = log10_ratio.len();
    let drop = opts.decrease_factor.log10();
    let bound = opts.r_min.log10().abs();
    let trend = if k >= 3
        && log10_ratio[k - 3] - log10_ratio[k - 2] >= drop
        && log10_ratio[k - 2] - log10_ratio[k - 1] >= drop
    {
        Trend::ToZero
    } else if log10_ratio.iter().all(|l| l.abs() <= bound) {
        Trend::BoundedOscillating
    } else {
        Trend::Inconclusive
    };

    Ok(SubordinacyTrace {
        schema_version: SCHEMA_VERSION.into(),
        family: u.family.clone(),
        lambda: u.lambda,
        checkpoints,
        log10_ratio,
        trend,
        options: *opts,
        relative_wronskian: rel_w,
    })
}
