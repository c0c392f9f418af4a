//! The `reproduce` gallery: named experiments, each checked against an
//! expected outcome and summarized in one row.

use blockjacobi::checkers::{
    coupling_margins, default_tail_window, discreteness_witnesses, form_positivity_probe,
    schur_frobenius, schur_frobenius_mod_finite_rank, ProbeOptions, DEFAULT_CRIT_TOL, PROBE_FLOOR,
};
use blockjacobi::export::{csv_string, fmt_f64, SCHEMA_VERSION};
use blockjacobi::linalg::{hermitian_inverse, Hermitian, Matrix, C64};
use blockjacobi::model::{residual_example0, truncate, CoefficientFamily};
use blockjacobi::spectral::{classify, count, Classification, ClassifyOptions, Interval};
use blockjacobi::transfer::{
    eig_2x2, kstep_product, solve_recursion, subordinacy_ratio, Direction, SubordinacyOptions,
    Trend,
};
use blockjacobi::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{suggestion, Manifest, ManifestEntry, RunConfig};
use crate::output::Output;

pub struct Experiment {
    pub name: &'static str,
    pub reference: &'static str,
    /// Default tolerance; `None` when the experiment has no tunable tolerance.
    pub tolerance: Option<f64>,
    run: fn(&Ctx) -> Result<(String, String, bool)>,
}

struct Ctx {
    tol: f64,
    seed: u64,
    /// Directory for experiment artifacts; created on first use.
    dir: std::path::PathBuf,
}

pub const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "example0",
        reference: "relative unboundedness of a diagonal perturbation",
        tolerance: Some(0.05),
        run: example0,
    },
    Experiment {
        name: "example1-dichotomy",
        reference: "alternating diagonal example: discrete above zero, continuous below",
        tolerance: Some(1e-6),
        run: example1_dichotomy,
    },
    Experiment {
        name: "thmA-bound",
        reference: "counting bound below 2a from tail witnesses",
        tolerance: None,
        run: counting_bound,
    },
    Experiment {
        name: "positivity-probe",
        reference: "tail positivity of the form (J - a)^2 - a^2",
        tolerance: Some(-PROBE_FLOOR),
        run: positivity_probe,
    },
    Experiment {
        name: "prop3-identities",
        reference:
            "three-step counterexample: determinant, trace and eigenvalue modulus of the product",
        tolerance: Some(1e-10),
        run: step3_identities,
    },
    Experiment {
        name: "prop3-subordinacy",
        reference: "subordinacy trends of the three-step and alternating examples",
        tolerance: None,
        run: step3_subordinacy,
    },
    Experiment {
        name: "prop5-margin",
        reference: "two-period power family: limit of the coupling margin",
        tolerance: Some(0.05),
        run: coupling_margin,
    },
    Experiment {
        name: "schur-frobenius",
        reference: "block positivity through the Schur complement, exact and modulo finite rank",
        tolerance: Some(1e-12),
        run: schur,
    },
    Experiment {
        name: "prop3-det-identity",
        reference: "three-step counterexample: determinant closed form",
        tolerance: Some(1e-10),
        run: step3_det_identity,
    },
];

/// Number of leading entries of [`EXPERIMENTS`] run when no manifest is given.
pub const DEFAULT_MANIFEST_LEN: usize = 8;

pub fn find(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryRow {
    pub name: String,
    pub reference: String,
    pub tolerance: Option<f64>,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub schema_version: &'static str,
    pub seed: u64,
    pub all_pass: bool,
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn to_csv(&self) -> String {
        let rows = self.rows.iter().map(|r| {
            vec![
                r.name.clone(),
                quote(&r.reference),
                r.tolerance.map_or(String::new(), fmt_f64),
                quote(&r.expected),
                quote(&r.observed),
                r.pass.to_string(),
            ]
        });
        csv_string(
            &[
                "name",
                "reference",
                "tolerance",
                "expected",
                "observed",
                "pass",
            ],
            rows,
        )
    }

    pub fn table(&self) -> String {
        let mut s = format!("{:<20} {:<5} observed\n", "experiment", "pass");
        for r in &self.rows {
            s += &format!(
                "{:<20} {:<5} {}\n",
                r.name,
                if r.pass { "PASS" } else { "FAIL" },
                r.observed
            );
        }
        s
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Resolves the manifest from `manifest` (file), `experiments` (names) or the default.
pub fn manifest(cfg: &RunConfig) -> Result<Vec<ManifestEntry>> {
    let entries = match (&cfg.manifest, &cfg.experiments) {
        (Some(_), Some(_)) => {
            return Err(Error::usage(
                "give either a manifest file or experiment names, not both",
            ))
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::usage(format!("cannot read manifest {}: {e}", path.display()))
            })?;
            serde_json::from_str::<Manifest>(&text)
                .map_err(|e| Error::usage(format!("manifest {}: {e}", path.display())))?
                .experiments
        }
        (None, Some(names)) => names
            .iter()
            .map(|n| ManifestEntry {
                name: n.clone(),
                tolerance: None,
            })
            .collect(),
        (None, None) => EXPERIMENTS[..DEFAULT_MANIFEST_LEN]
            .iter()
            .map(|e| ManifestEntry {
                name: e.name.into(),
                tolerance: None,
            })
            .collect(),
    };
    let names: Vec<&str> = EXPERIMENTS.iter().map(|e| e.name).collect();
    for e in &entries {
        let exp = find(&e.name).ok_or_else(|| {
            Error::usage(format!(
                "unknown experiment `{}`{}",
                e.name,
                suggestion(&e.name, &names)
            ))
        })?;
        match (e.tolerance, exp.tolerance) {
            (Some(_), None) => {
                return Err(Error::usage(format!(
                    "experiment `{}` takes no tolerance",
                    e.name
                )))
            }
            (Some(t), Some(_)) if !(t >= 0.0 && t.is_finite()) => {
                return Err(Error::usage(format!(
                    "tolerance for `{}` must be finite and nonnegative",
                    e.name
                )))
            }
            _ => {}
        }
    }
    Ok(entries)
}

/// Runs every entry; an experiment that errors is recorded as a failed row.
pub fn reproduce(entries: &[ManifestEntry], seed: u64, out: &mut Output) -> Result<Summary> {
    let mut rows = Vec::with_capacity(entries.len());
    for e in entries {
        let exp = find(&e.name)
            .ok_or_else(|| Error::usage(format!("unknown experiment `{}`", e.name)))?;
        let tol = e.tolerance.or(exp.tolerance);
        let ctx = Ctx {
            tol: tol.unwrap_or(0.0),
            seed,
            dir: out.dir().join(exp.name),
        };
        let (expected, observed, pass) = match (exp.run)(&ctx) {
            Ok(r) => r,
            Err(err) => ("completes".into(), format!("error: {err}"), false),
        };
        rows.push(SummaryRow {
            name: exp.name.into(),
            reference: exp.reference.into(),
            tolerance: tol,
            expected,
            observed,
            pass,
        });
    }
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        seed,
        all_pass: rows.iter().all(|r| r.pass),
        rows,
    };
    out.json("summary.json", &summary)?;
    out.text("summary.csv", &summary.to_csv())?;
    Ok(summary)
}

fn example0(ctx: &Ctx) -> Result<(String, String, bool)> {
    let r = residual_example0(0.75, 0.3, 0.6, 100_000)?;
    let exp_err = (r.s_b_exponent - r.s_b_exponent_expected).abs();
    let settled = r.s_j_increment <= 1e-3 * r.s_j;
    Ok((
        format!(
            "S_B exponent {} within {}; S_J doubling increment <= 1e-3 S_J",
            r.s_b_exponent_expected, ctx.tol
        ),
        format!(
            "S_B exponent {:.4}; S_J increment ratio {:.2e}",
            r.s_b_exponent,
            r.s_j_increment / r.s_j
        ),
        exp_err <= ctx.tol && settled,
    ))
}

fn example1_dichotomy(ctx: &Ctx) -> Result<(String, String, bool)> {
    let f = CoefficientFamily::example1(0.75, 1.0)?;
    let opts = ClassifyOptions {
        match_tol_rel: ctx.tol,
        ..Default::default()
    };
    let schedule = [1000, 2000, 4000];
    let upper = classify(&f, &Interval::open(0.5, 10.0)?, 1, &schedule, &opts)?;
    let lower = classify(&f, &Interval::open(-10.0, -0.5)?, 1, &schedule, &opts)?;
    let (u, l) = (&upper.subintervals[0], &lower.subintervals[0]);
    Ok((
        "(0.5, 10) discrete-like; (-10, -0.5) continuous-like".into(),
        format!(
            "(0.5, 10) {} counts {:?}; (-10, -0.5) {} counts {:?} slope {:.3}",
            u.classification.as_str(),
            u.counts,
            l.classification.as_str(),
            l.counts,
            l.count_slope.unwrap_or(f64::NAN)
        ),
        u.classification == Classification::DiscreteLike
            && l.classification == Classification::ContinuousLike,
    ))
}

fn counting_bound(_: &Ctx) -> Result<(String, String, bool)> {
    let f = CoefficientFamily::example1(0.75, 1.0)?;
    let mut violations = 0;
    let mut worst = 0.0f64;
    for a in [1.0, 5.0, 10.0] {
        let w = discreteness_witnesses(&f, 0.0, a, 2000)?;
        let holds = w.all_hold();
        let Some(d) = w.discreteness.filter(|_| holds) else {
            return Ok((
                "bound holds".into(),
                format!("witness conditions fail for a = {a}"),
                false,
            ));
        };
        let limit = d.bound + f.block_dim();
        for n in [1000, 2000, 4000] {
            let c = count(&truncate(&f, n)?, &Interval::open(1e-6, 2.0 * a)?)?;
            worst = worst.max(c as f64 / limit as f64);
            violations += usize::from(c > limit);
        }
    }
    Ok((
        "count in (1e-6, 2a) <= d calN + d for a in {1, 5, 10}, N in {1000, 2000, 4000}".into(),
        format!("{violations} violations; largest count/limit {worst:.3}"),
        violations == 0,
    ))
}

fn positivity_probe(ctx: &Ctx) -> Result<(String, String, bool)> {
    let f = CoefficientFamily::example1(0.75, 1.0)?;
    let w = discreteness_witnesses(&f, 0.0, 2.0, 1000)?;
    let first = w.discreteness.as_ref().map_or(2, |d| d.cal_n + 1);
    let opts = ProbeOptions {
        trials: 200,
        first,
        last: first + 199,
        seed: ctx.seed,
    };
    let p = form_positivity_probe(&f, 0.0, 2.0, &opts)?;
    Ok((
        format!("min quotient >= -{}", ctx.tol),
        format!(
            "min quotient {:.3e} over {} trials past block {}",
            p.min_quotient, p.trials, p.cut_index
        ),
        p.min_quotient >= -ctx.tol,
    ))
}

fn step3_identities(ctx: &Ctx) -> Result<(String, String, bool)> {
    let (al, de) = (0.75, 1.0);
    let f = CoefficientFamily::step3(al, de)?;
    let mut det_err = 0.0f64;
    for lambda in [-2.0, 1.0, 5.0] {
        for n in 2..=500 {
            let d = kstep_product(&f, n, 3, lambda)?.det();
            det_err = det_err.max((d - C64::new((1.0 - 1.0 / n as f64).powf(al), 0.0)).norm());
        }
    }
    let mut trace_c = 0.0f64;
    for n in 10..=10_000 {
        let x = 3.0 * n as f64;
        let tr = kstep_product(&f, n, 3, 1.0)?.trace().re;
        trace_c =
            trace_c.max((tr - (de - 3.0 / x.powf(al) - al * de / x)).abs() * (n as f64).powf(1.5));
    }
    let mut pair_err = 0.0f64;
    for n in 5..=500 {
        let p = kstep_product(&f, n, 3, 1.0)?;
        let half = p.trace() * 0.5;
        if (half * half - p.det()).re < 0.0 {
            let (e1, e2) = eig_2x2(&p);
            pair_err = pair_err
                .max((e1.norm_sqr() - p.det().re).abs())
                .max((e2.norm_sqr() - p.det().re).abs());
        }
    }
    Ok((
        format!(
            "det and |eigenvalue|^2 identities within {}; trace constant <= 10",
            ctx.tol
        ),
        format!(
            "det error {det_err:.2e}; trace constant {trace_c:.3}; modulus error {pair_err:.2e}"
        ),
        det_err <= ctx.tol && pair_err <= ctx.tol && trace_c <= 10.0,
    ))
}

fn step3_subordinacy(_: &Ctx) -> Result<(String, String, bool)> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let opts = SubordinacyOptions::default();
    let f = CoefficientFamily::step3(0.75, 1.0)?;
    let u = solve_recursion(&f, 1.0, (one, zero), 10_000, Direction::Forward)?;
    let v = solve_recursion(&f, 1.0, (zero, one), 10_000, Direction::Forward)?;
    let t3 = subordinacy_ratio(&u, &v, &opts)?.trend;
    let g = CoefficientFamily::example1(0.75, 1.0)?;
    let s = solve_recursion(
        &g,
        1.0,
        (one, C64::new(1e-30, 0.0)),
        10_000,
        Direction::Backward,
    )?;
    let w = solve_recursion(&g, 1.0, (one, zero), 10_000, Direction::Forward)?;
    let t1 = subordinacy_ratio(&s, &w, &opts)?.trend;
    Ok((
        "three-step bounded-oscillating; alternating to-zero".into(),
        format!("three-step {}; alternating {}", t3.as_str(), t1.as_str()),
        t3 == Trend::BoundedOscillating && t1 == Trend::ToZero,
    ))
}

fn coupling_margin(ctx: &Ctx) -> Result<(String, String, bool)> {
    let horizon = 100_000;
    let f = CoefficientFamily::named("prop5", &[])?;
    let r = coupling_margins(&f, horizon, default_tail_window(horizon), DEFAULT_CRIT_TOL)?;
    let sum = r.margins.as_ref().map_or(f64::NAN, |m| m.sum);
    let g = CoefficientFamily::named("prop5", &[("d1", 2.0), ("d2", 2.0)])?;
    let crit = coupling_margins(&g, horizon, default_tail_window(horizon), DEFAULT_CRIT_TOL)?;
    let crit_ok = crit.margins.as_ref().is_some_and(|m| m.critical) && !crit.all_hold();
    Ok((
        format!(
            "margin sum within {} of 2/3; critical family fails",
            ctx.tol
        ),
        format!(
            "margin sum {sum:.5}; critical family {}",
            if crit_ok {
                "fails as critical"
            } else {
                "not flagged"
            }
        ),
        (sum - 2.0 / 3.0).abs() <= ctx.tol && crit_ok,
    ))
}

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| {
        C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))
    })
}

fn random_hermitian(r: &mut ChaCha8Rng, n: usize) -> Hermitian {
    Hermitian::new(random_matrix(r, n, n)).expect("square")
}

/// Counts of equivalence failures over random block matrices `[[A, B], [B^*, C]]`:
/// `exact` trials with `C >= 0.1 I` and block sizes up to 12, then
/// `finite_rank` trials with one planted negative direction and budget 1.
pub fn schur_trials(
    seed: u64,
    exact: usize,
    finite_rank: usize,
    tol: f64,
) -> Result<(usize, usize)> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut exact_fail = 0;
    for _ in 0..exact {
        let (m, k) = (r.random_range(1..=12usize), r.random_range(1..=12usize));
        let g = random_matrix(&mut r, k, k);
        let c = Hermitian::gram(&g.adjoint()).shift(-0.1 - r.random_range(0.0..1.0));
        let b = random_matrix(&mut r, m, k);
        let base = hermitian_inverse(&c, tol)?.congruence(&b);
        let a = base
            .add(&random_hermitian(&mut r, m).scale(r.random_range(0.0..1.0)))
            .shift(r.random_range(-0.5..0.5));
        let rec = schur_frobenius(&a, &b, &c, tol)?;
        exact_fail += usize::from(!rec.equivalent);
    }
    let mut rank_fail = 0;
    for _ in 0..finite_rank {
        let (m, k) = (r.random_range(1..=8usize), r.random_range(1..=8usize));
        let n = m + k;
        let g = random_matrix(&mut r, n, n);
        let v = random_matrix(&mut r, n, 1);
        let weight = r.random_range(1.0..20.0);
        let full = &Hermitian::gram(&g.adjoint()).shift(-0.1).into_matrix()
            - &(&v * &v.adjoint()).scale_real(weight);
        let a = Hermitian::new(Matrix::from_fn(m, m, |i, j| full[(i, j)]))?;
        let b = Matrix::from_fn(m, k, |i, j| full[(i, m + j)]);
        let c = Hermitian::new(Matrix::from_fn(k, k, |i, j| full[(m + i, m + j)]))?;
        let rec = schur_frobenius_mod_finite_rank(&a, &b, &c, 1, tol)?;
        rank_fail += usize::from(!(rec.equivalent && rec.p1_full));
    }
    Ok((exact_fail, rank_fail))
}

fn schur(ctx: &Ctx) -> Result<(String, String, bool)> {
    let (e, f) = schur_trials(ctx.seed, 500, 300, ctx.tol)?;
    Ok((
        "equivalence in all 500 exact and 300 finite-rank trials".into(),
        format!("{e} exact failures; {f} finite-rank failures"),
        e == 0 && f == 0,
    ))
}

fn step3_det_identity(ctx: &Ctx) -> Result<(String, String, bool)> {
    let al = 0.75;
    let f = CoefficientFamily::step3(al, 1.0)?;
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for n in 2..=500usize {
        let det = kstep_product(&f, n, 3, 1.0)?.det().re;
        let closed = (1.0 - 1.0 / n as f64).powf(al);
        let diff = (det - closed).abs();
        worst = worst.max(diff);
        rows.push(vec![
            n.to_string(),
            fmt_f64(det),
            fmt_f64(closed),
            fmt_f64(diff),
        ]);
    }
    std::fs::create_dir_all(&ctx.dir)?;
    std::fs::write(
        ctx.dir.join("det_identity.csv"),
        csv_string(&["n", "det", "closed_form", "diff"], rows),
    )?;
    Ok((
        format!("max |det - (1 - 1/n)^alpha| <= {}", ctx.tol),
        format!("max diff {worst:.3e}"),
        worst <= ctx.tol,
    ))
}
