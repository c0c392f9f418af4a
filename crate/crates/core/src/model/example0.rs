//! Relative unboundedness of `diag(n^beta)` with respect to `J(n^alpha, 0)`.
//!
//! The test vector is `u_n = i^n / n^x`. With `1/2 < x <= beta + 1/2` the
//! vector `J u` stays square-summable while `n^beta u_n` does not.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{geometric_grid, loglog_slope};
use crate::linalg::C64;

#[derive(Clone, Debug, Serialize)]
pub struct Example0Report {
    pub alpha: f64,
    pub beta: f64,
    pub x: f64,
    pub horizon: usize,
    /// `sum_{n <= N} |(J u)_n|^2`.
    pub s_j: f64,
    /// Same sum up to `2N`.
    pub s_j_double: f64,
    /// `S_J(2N) - S_J(N)`.
    pub s_j_increment: f64,
    /// `sum_{n <= N} |n^beta u_n|^2`.
    pub s_b: f64,
    /// Log-log slope of `S_B` over geometric checkpoints in `[N/10, N]`.
    pub s_b_exponent: f64,
    /// `2 beta - 2 x + 1`.
    pub s_b_exponent_expected: f64,
    /// `max_{10 <= n <= N} n * relerr_n` against `i^{n-1} n^{alpha-x} (2x - alpha) / n`.
    pub max_scaled_relerr: f64,
    /// Same maximum restricted to `n >= N/2`; close to the overall value when
    /// the relative error really decays like `1/n`.
    pub tail_scaled_relerr: f64,
    pub checkpoints: Vec<usize>,
    pub s_b_checkpoints: Vec<f64>,
}

fn i_pow(n: i64) -> C64 {
    match n.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

fn validate(alpha: f64, beta: f64, x: f64) -> Result<()> {
    let fail = |what: &str| {
        Err(Error::usage(format!(
            "parameter constraint violated: {what}"
        )))
    };
    if !(alpha.is_finite() && beta.is_finite() && x.is_finite()) {
        return Err(Error::invalid("alpha, beta and x must be finite"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return fail("0 < alpha <= 1");
    }
    if !(beta > 0.0 && beta < alpha) {
        return fail("0 < beta < alpha");
    }
    if !(x > 0.5 && x <= beta + 0.5) {
        return fail("1/2 < x <= beta + 1/2");
    }
    if 2.0 * x == alpha {
        return fail("2x != alpha");
    }
    Ok(())
}

/// Partial sums and growth diagnostics for the test vector `u_n = i^n / n^x`.
pub fn residual_example0(alpha: f64, beta: f64, x: f64, horizon: usize) -> Result<Example0Report> {
    validate(alpha, beta, x)?;
    if horizon < 100 {
        return Err(Error::usage(format!(
            "horizon must be at least 100, got {horizon}"
        )));
    }
    let u = |n: usize| i_pow(n as i64) * (n as f64).powf(-x);
    let a = |n: usize| (n as f64).powf(alpha);

    let checkpoints = geometric_grid((horizon / 10).max(1), horizon, 12);
    let mut s_b_checkpoints = Vec::with_capacity(checkpoints.len());
    let mut next_cp = 0;

    let mut s_j = 0.0;
    let mut s_j_at_n = 0.0;
    let mut s_b = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut tail_rel: f64 = 0.0;

    for n in 1..=2 * horizon {
        // (J u)_n = a_{n-1} u_{n-1} + a_n u_{n+1}, a_0 = 0
        let left = if n > 1 {
            u(n - 1) * a(n - 1)
        } else {
            C64::new(0.0, 0.0)
        };
        let ju = left + u(n + 1) * a(n);
        s_j += ju.norm_sqr();
        if n <= horizon {
            let nb = (n as f64).powf(beta);
            s_b += (u(n) * nb).norm_sqr();
            if n >= 10 {
                let nf = n as f64;
                let lead = i_pow(n as i64 - 1) * nf.powf(alpha - x) * ((2.0 * x - alpha) / nf);
                let rel = (ju - lead).norm() / lead.norm();
                max_rel = max_rel.max(nf * rel);
                if n >= horizon / 2 {
                    tail_rel = tail_rel.max(nf * rel);
                }
            }
            if next_cp < checkpoints.len() && n == checkpoints[next_cp] {
                s_b_checkpoints.push(s_b);
                next_cp += 1;
            }
            if n == horizon {
                s_j_at_n = s_j;
            }
        }
    }

    let xs: Vec<f64> = checkpoints.iter().map(|&c| c as f64).collect();
    let s_b_exponent = loglog_slope(&xs, &s_b_checkpoints).unwrap_or(f64::NAN);

    Ok(Example0Report {
        alpha,
        beta,
        x,
        horizon,
        s_j: s_j_at_n,
        s_j_double: s_j,
        s_j_increment: s_j - s_j_at_n,
        s_b,
        s_b_exponent,
        s_b_exponent_expected: 2.0 * beta - 2.0 * x + 1.0,
        max_scaled_relerr: max_rel,
        tail_scaled_relerr: tail_rel,
        checkpoints,
        s_b_checkpoints,
    })
}
