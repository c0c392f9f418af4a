//! Random probe of `q(u) = ||(J - (c + a)) u||^2 - a^2 ||u||^2` on the tail.
//!
//! For `u` supported on blocks `first..=last` the vector `(J - s) u` lives on
//! blocks `first-1..=last+1`, so `q(u)` is computed exactly from finitely
//! many blocks with no truncation error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Hermitian, Matrix, C64};
use crate::model::{block_at, CoefficientFamily};

use super::discreteness_witnesses;

/// Verdict threshold on the smallest observed quotient.
pub const PROBE_FLOOR: f64 = -1e-8;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProbeOptions {
    pub trials: usize,
    /// First and last block of the support, 1-based and inclusive.
    pub first: usize,
    pub last: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityProbe {
    pub schema_version: String,
    pub family: String,
    pub c: f64,
    pub a: f64,
    /// Tail cutoff `calN(c + 2a)`; the support starts strictly after it.
    pub cut_index: usize,
    pub support_first: usize,
    pub support_last: usize,
    pub trials: usize,
    pub seed: u64,
    /// `min q(u) / <u, u>` over all trials.
    pub min_quotient: f64,
    pub argmin_trial: usize,
    pub holds: bool,
    /// Entries of the minimizing vector as `[re, im]`, present only on failure.
    pub failing_vector: Option<Vec<[f64; 2]>>,
}

/// Blocks `B_{first-1}..B_{last+1}` and `A_{first-1}..A_{last}`.
struct Window {
    b: Vec<Hermitian>,
    a: Vec<Matrix>,
}

impl Window {
    fn load(f: &CoefficientFamily, first: usize, last: usize) -> Result<Self> {
        let mut b = Vec::new();
        let mut a = Vec::new();
        for k in (first - 1)..=(last + 1) {
            let blk = block_at(f, k)?;
            b.push(blk.b);
            if k <= last {
                a.push(blk.a);
            }
        }
        Ok(Window { b, a })
    }

    /// `q(u) / <u, u>` for `u` given on blocks `first..=last`.
    fn quotient(&self, u: &[C64], d: usize, shift: f64, a: f64) -> f64 {
        let nb = self.b.len();
        // padded u over blocks first-1..=last+1
        let mut up = vec![C64::new(0.0, 0.0); nb * d];
        up[d..d + u.len()].copy_from_slice(u);
        let mut wnorm = 0.0;
        for k in 0..nb {
            let mut w = self.b[k]
                .shift(shift)
                .as_matrix()
                .mul_vec(&up[k * d..(k + 1) * d]);
            if k > 0 {
                let x = self.a[k - 1].adjoint_mul_vec(&up[(k - 1) * d..k * d]);
                w.iter_mut().zip(x).for_each(|(o, v)| *o += v);
            }
            if k + 1 < nb {
                let x = self.a[k].mul_vec(&up[(k + 1) * d..(k + 2) * d]);
                w.iter_mut().zip(x).for_each(|(o, v)| *o += v);
            }
            wnorm += w.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        let unorm: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        (wnorm - a * a * unorm) / unorm
    }
}

fn random_vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    (0..len)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Smallest Rayleigh quotient of `(J - (c + a))^2 - a^2` over random vectors
/// supported on `first..=last`. Trial `t` uses a ChaCha8 stream seeded with
/// `seed + t`.
///
/// The support must start strictly after the tail cutoff reported by
/// [`discreteness_witnesses`] for the same `c` and `a`.
pub fn form_positivity_probe(
    f: &CoefficientFamily,
    c: f64,
    a: f64,
    opts: &ProbeOptions,
) -> Result<PositivityProbe> {
    if opts.trials == 0 {
        return Err(Error::usage("need at least one trial"));
    }
    if opts.first == 0 || opts.first > opts.last {
        return Err(Error::usage(
            "support must be a nonempty block range starting at 1 or later",
        ));
    }
    let horizon = (opts.last + 1).div_ceil(2).max(100);
    let w = discreteness_witnesses(f, c, a, horizon)?;
    if !w.all_hold() {
        return Err(Error::usage(
            "the witness conditions fail on this horizon, so no tail cutoff exists for the probe",
        ));
    }
    let cut = w.discreteness.as_ref().expect("witnesses present").cal_n;
    if opts.first <= cut {
        return Err(Error::usage(format!(
            "support must start strictly after the tail cutoff {cut}; got first block {}",
            opts.first
        )));
    }
    probe_unchecked(f, c, a, opts, cut)
}

/// Probe without the tail-cutoff precondition; `cut` is only recorded.
pub(crate) fn probe_unchecked(
    f: &CoefficientFamily,
    c: f64,
    a: f64,
    opts: &ProbeOptions,
    cut: usize,
) -> Result<PositivityProbe> {
    let d = f.block_dim();
    let win = Window::load(f, opts.first, opts.last)?;
    let len = (opts.last - opts.first + 1) * d;
    let shift = c + a;
    let quotients: Vec<f64> = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(t as u64));
            let u = random_vector(&mut rng, len);
            win.quotient(&u, d, shift, a)
        })
        .collect();
    let (argmin, min_q) =
        quotients
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, q)| if q < acc.1 { (i, q) } else { acc },
            );
    let holds = min_q >= PROBE_FLOOR;
    let failing_vector = if holds {
        None
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(argmin as u64));
        Some(
            random_vector(&mut rng, len)
                .iter()
                .map(|z| [z.re, z.im])
                .collect(),
        )
    };
    Ok(PositivityProbe {
        schema_version: crate::export::SCHEMA_VERSION.into(),
        family: f.name().into(),
        c,
        a,
        cut_index: cut,
        support_first: opts.first,
        support_last: opts.last,
        trials: opts.trials,
        seed: opts.seed,
        min_quotient: min_q,
        argmin_trial: argmin,
        holds,
        failing_vector,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::truncate;

    #[test]
    fn support_inside_cutoff_rejected() {
        let f = CoefficientFamily::example1(0.75, 1.0).unwrap();
        let opts = ProbeOptions {
            trials: 5,
            first: 3,
            last: 20,
            seed: 1,
        };
        assert!(form_positivity_probe(&f, 0.0, 2.0, &opts)
            .unwrap_err()
            .is_usage());
    }

    #[test]
    fn quotient_matches_dense_section() {
        let f = CoefficientFamily::example1(0.75, 1.0).unwrap();
        let (first, last) = (10, 14);
        let win = Window::load(&f, first, last).unwrap();
        let t = truncate(&f, last + 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_vector(&mut rng, last - first + 1);
        let mut full = vec![C64::new(0.0, 0.0); t.size()];
        full[first - 1..last].copy_from_slice(&u);
        let s = 0.5 + 2.0;
        let w: Vec<C64> = t
            .apply(&full)
            .unwrap()
            .iter()
            .zip(&full)
            .map(|(x, y)| x - y * s)
            .collect();
        let q = (w.iter().map(|z| z.norm_sqr()).sum::<f64>()
            - 4.0 * u.iter().map(|z| z.norm_sqr()).sum::<f64>())
            / u.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let got = win.quotient(&u, 1, s, 2.0);
        assert!((q - got).abs() < 1e-9 * (1.0 + q.abs()));
    }

    #[test]
    fn single_odd_block_nonnegative() {
        // B_{2k-1} = (2k-1)^{3/4} >= 4a = 8 once 2k - 1 >= 16
        let f = CoefficientFamily::example1(0.75, 1.0).unwrap();
        let opts = ProbeOptions {
            trials: 50,
            first: 17,
            last: 17,
            seed: 3,
        };
        let p = probe_unchecked(&f, 0.0, 2.0, &opts, 0).unwrap();
        assert!(p.min_quotient >= 0.0);
    }
}
