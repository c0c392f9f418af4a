//! Discrete-versus-continuous classification across a truncation schedule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{csv_string, fmt_f64, SCHEMA_VERSION};
use crate::fit::loglog_slope;
use crate::model::{truncate, CoefficientFamily};

use super::{eigenvalues_in, Interval};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyOptions {
    /// Relative match tolerance: eigenvalue `l` is matched within `match_tol_rel * (1 + |l|)`.
    pub match_tol_rel: f64,
    /// Minimum log-log slope of counts against `N` for continuous-like.
    pub count_slope_min: f64,
    /// Maximum log-log slope of the mean level spacing against `N` for continuous-like.
    pub spacing_slope_max: f64,
    /// Bisection width.
    pub eig_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            match_tol_rel: 1e-6,
            count_slope_min: 0.15,
            spacing_slope_max: -0.15,
            eig_tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    DiscreteLike,
    ContinuousLike,
    Inconclusive,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::DiscreteLike => "discrete-like",
            Classification::ContinuousLike => "continuous-like",
            Classification::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SubintervalReport {
    pub lo: f64,
    pub hi: f64,
    /// Count per schedule entry.
    pub counts: Vec<usize>,
    /// Eigenvalues per schedule entry.
    pub eigenvalues: Vec<Vec<f64>>,
    /// For each consecutive pair `(N_k, N_{k+1})`: the largest distance from an
    /// eigenvalue at `N_k` to the nearest one at `N_{k+1}`; `None` when `N_k`
    /// has no eigenvalue here.
    pub match_distances: Vec<Option<f64>>,
    /// True when every eigenvalue at every `N_k` met its match tolerance.
    pub all_matched: bool,
    pub count_slope: Option<f64>,
    pub mean_spacing: Vec<Option<f64>>,
    pub spacing_slope: Option<f64>,
    pub classification: Classification,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub schema_version: String,
    pub family: String,
    pub params: std::collections::BTreeMap<String, f64>,
    /// Interval after replacing infinite ends.
    pub interval: Interval,
    pub grid: usize,
    pub schedule: Vec<usize>,
    pub options: ClassifyOptions,
    pub totals: Vec<usize>,
    pub subintervals: Vec<SubintervalReport>,
}

fn nearest(sorted: &[f64], x: f64) -> Option<f64> {
    let pos = sorted.partition_point(|&v| v < x);
    let mut best: Option<f64> = None;
    for k in [pos.wrapping_sub(1), pos] {
        if let Some(&v) = sorted.get(k) {
            let d = (v - x).abs();
            best = Some(best.map_or(d, |b: f64| b.min(d)));
        }
    }
    best
}

fn mean_spacing(vals: &[f64]) -> Option<f64> {
    if vals.len() < 2 {
        return None;
    }
    Some((vals[vals.len() - 1] - vals[0]) / (vals.len() - 1) as f64)
}

/// Runs the truncation schedule and tags each of `grid` equal subintervals.
///
/// A subinterval is discrete-like when its counts agree at the last two
/// schedule entries and every eigenvalue at each `N_k` has a partner at
/// `N_{k+1}` within the match tolerance. It is continuous-like when counts
/// grow with log-log slope at least `count_slope_min` and the mean level
/// spacing shrinks with slope at most `spacing_slope_max`. Anything else is
/// inconclusive.
pub fn classify(
    f: &CoefficientFamily,
    interval: &Interval,
    grid: usize,
    schedule: &[usize],
    opts: &ClassifyOptions,
) -> Result<SpectralReport> {
    interval.validate()?;
    if grid == 0 {
        return Err(Error::usage("grid must have at least one subinterval"));
    }
    if schedule.len() < 3 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::usage(
            "schedule must be strictly increasing with at least 3 entries",
        ));
    }
    let sections: Vec<_> = schedule
        .par_iter()
        .map(|&n| truncate(f, n))
        .collect::<Result<_>>()?;
    let bound = sections.last().expect("non-empty").gershgorin_bound() + 1.0;
    let r = interval.resolve(bound);

    let spectra: Vec<Vec<f64>> = sections
        .par_iter()
        .map(|t| eigenvalues_in(t, &r, opts.eig_tol))
        .collect::<Result<_>>()?;

    let width = (r.hi - r.lo) / grid as f64;
    let edges: Vec<f64> = (0..=grid)
        .map(|k| {
            if k == grid {
                r.hi
            } else {
                r.lo + width * k as f64
            }
        })
        .collect();

    let subintervals = (0..grid)
        .map(|g| {
            let (lo, hi) = (edges[g], edges[g + 1]);
            let last = g + 1 == grid;
            let inside = |x: f64| x >= lo && (x < hi || (last && x <= hi));
            let eigenvalues: Vec<Vec<f64>> = spectra
                .iter()
                .map(|s| s.iter().copied().filter(|&x| inside(x)).collect())
                .collect();
            summarize(lo, hi, schedule, eigenvalues, &spectra, opts)
        })
        .collect();

    Ok(SpectralReport {
        schema_version: SCHEMA_VERSION.into(),
        family: f.name().to_string(),
        params: f.params().clone(),
        interval: r,
        grid,
        schedule: schedule.to_vec(),
        options: *opts,
        totals: spectra.iter().map(Vec::len).collect(),
        subintervals,
    })
}

fn summarize(
    lo: f64,
    hi: f64,
    schedule: &[usize],
    eigenvalues: Vec<Vec<f64>>,
    spectra: &[Vec<f64>],
    opts: &ClassifyOptions,
) -> SubintervalReport {
    let counts: Vec<usize> = eigenvalues.iter().map(Vec::len).collect();
    let mut all_matched = true;
    let match_distances: Vec<Option<f64>> = (0..schedule.len() - 1)
        .map(|k| {
            let next = &spectra[k + 1];
            let mut worst: Option<f64> = None;
            for &x in &eigenvalues[k] {
                let d = nearest(next, x).unwrap_or(f64::INFINITY);
                if d > opts.match_tol_rel * (1.0 + x.abs()) {
                    all_matched = false;
                }
                worst = Some(worst.map_or(d, |w: f64| w.max(d)));
            }
            worst
        })
        .collect();

    let ns: Vec<f64> = schedule.iter().map(|&n| n as f64).collect();
    let cs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let count_slope = if counts.iter().all(|&c| c > 0) {
        loglog_slope(&ns, &cs)
    } else {
        None
    };
    let mean_spacing: Vec<Option<f64>> = eigenvalues.iter().map(|v| mean_spacing(v)).collect();
    let spacing_slope = if mean_spacing.iter().all(|s| s.is_some_and(|x| x > 0.0)) {
        let sp: Vec<f64> = mean_spacing.iter().map(|s| s.expect("checked")).collect();
        loglog_slope(&ns, &sp)
    } else {
        None
    };

    let n = counts.len();
    let stable = counts[n - 1] == counts[n - 2];
    let (classification, reason) = if stable && all_matched {
        (
            Classification::DiscreteLike,
            format!(
                "counts stable at {} and all eigenvalues matched",
                counts[n - 1]
            ),
        )
    } else {
        match (count_slope, spacing_slope) {
            (Some(cs), Some(ss)) if cs >= opts.count_slope_min && ss <= opts.spacing_slope_max => (
                Classification::ContinuousLike,
                format!("count slope {cs:.3} >= {}, spacing slope {ss:.3} <= {}", opts.count_slope_min, opts.spacing_slope_max),
            ),
            (cs, ss) => (
                Classification::Inconclusive,
                format!(
                    "counts stable: {stable}, all matched: {all_matched}, count slope {}, spacing slope {}",
                    cs.map_or("n/a".into(), |v| format!("{v:.3}")),
                    ss.map_or("n/a".into(), |v| format!("{v:.3}"))
                ),
            ),
        }
    };

    SubintervalReport {
        lo,
        hi,
        counts,
        eigenvalues,
        match_distances,
        all_matched,
        count_slope,
        mean_spacing,
        spacing_slope,
        classification,
        reason,
    }
}

/// `lambda,interval_lo,interval_hi,N` rows for every eigenvalue in the report.
pub fn eigenvalue_csv(report: &SpectralReport) -> String {
    let mut rows = Vec::new();
    for sub in &report.subintervals {
        for (vals, &n) in sub.eigenvalues.iter().zip(&report.schedule) {
            for &x in vals {
                rows.push(vec![
                    fmt_f64(x),
                    fmt_f64(sub.lo),
                    fmt_f64(sub.hi),
                    n.to_string(),
                ]);
            }
        }
    }
    csv_string(&["lambda", "interval_lo", "interval_hi", "N"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_validation() {
        let f = CoefficientFamily::example1(0.75, 1.0).unwrap();
        let i = Interval::open(0.5, 10.0).unwrap();
        let o = ClassifyOptions::default();
        assert!(classify(&f, &i, 1, &[100, 200], &o).unwrap_err().is_usage());
        assert!(classify(&f, &i, 1, &[100, 300, 200], &o)
            .unwrap_err()
            .is_usage());
        assert!(classify(&f, &i, 0, &[100, 200, 300], &o)
            .unwrap_err()
            .is_usage());
    }

    #[test]
    fn example1_positive_side_is_discrete() {
        let f = CoefficientFamily::example1(0.75, 1.0).unwrap();
        let i = Interval::open(0.5, 10.0).unwrap();
        let r = classify(&f, &i, 4, &[250, 500, 1000], &ClassifyOptions::default()).unwrap();
        for s in &r.subintervals {
            assert_eq!(
                s.classification,
                Classification::DiscreteLike,
                "{}",
                s.reason
            );
        }
        let csv = eigenvalue_csv(&r);
        assert!(csv.starts_with("lambda,interval_lo,interval_hi,N\n"));
        assert_eq!(csv.lines().count(), 1 + r.totals.iter().sum::<usize>());
    }
}
