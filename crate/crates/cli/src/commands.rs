//! One function per subcommand. Each writes its artifacts and reports
//! whether every verdict held.

use std::collections::BTreeMap;
use std::sync::Arc;

use blockjacobi::checkers::{
    coupling_margins, default_tail_window, discreteness_witnesses, form_positivity_probe,
    two_sided_growth, ProbeOptions, DEFAULT_CRIT_TOL,
};
use blockjacobi::export::{csv_string, fmt_f64, SCHEMA_VERSION};
use blockjacobi::linalg::C64;
use blockjacobi::model::{truncate, CATALOG};
use blockjacobi::spectral::{classify, count_detailed, eigenvalue_csv, CountOutcome, Interval};
use blockjacobi::transfer::{
    catalog_splitting, eig_2x2, kstep_product, levinson_for_family, solve_recursion,
    subordinacy_ratio, CustomSplitting, Direction, LevinsonReport, Splitting, SubordinacyTrace,
    Transfer2,
};
use blockjacobi::{Error, Result};
use serde::Serialize;

use crate::config::{RunConfig, SplittingConfig};
use crate::output::Output;

pub struct Outcome {
    pub pass: bool,
    pub message: String,
}

impl Outcome {
    fn new(pass: bool, message: impl Into<String>) -> Self {
        Outcome {
            pass,
            message: message.into(),
        }
    }
}

pub fn spectrum(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let f = cfg.family()?;
    let interval = cfg.interval()?;
    let schedule = cfg
        .schedule
        .clone()
        .unwrap_or_else(|| vec![1000, 2000, 4000]);
    let grid = cfg.grid.unwrap_or(1);
    let opts = cfg.classify.unwrap_or_default();
    let rep = classify(&f, &interval, grid, &schedule, &opts)?;
    out.json("spectrum.json", &rep)?;
    out.text("eigenvalues.csv", &eigenvalue_csv(&rep))?;
    let lines: Vec<String> = rep
        .subintervals
        .iter()
        .map(|s| {
            format!(
                "[{}, {}]: {} (counts {:?})",
                s.lo,
                s.hi,
                s.classification.as_str(),
                s.counts
            )
        })
        .collect();
    Ok(Outcome::new(true, lines.join("\n")))
}

#[derive(Serialize)]
struct CountReport {
    schema_version: &'static str,
    family: String,
    params: BTreeMap<String, f64>,
    block_dim: usize,
    #[serde(rename = "N")]
    n: usize,
    interval: Interval,
    count: usize,
    detail: CountOutcome,
}

pub fn count(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let f = cfg.family()?;
    let interval = cfg.interval()?;
    let n = RunConfig::require(&cfg.n, "N")?;
    let t = truncate(&f, n)?;
    let c = count_detailed(&t, &interval)?;
    let rep = CountReport {
        schema_version: SCHEMA_VERSION,
        family: f.name().into(),
        params: f.params().clone(),
        block_dim: f.block_dim(),
        n,
        interval,
        count: c.count,
        detail: c,
    };
    out.json("count.json", &rep)?;
    Ok(Outcome::new(true, c.count.to_string()))
}

fn verdict_lines(verdicts: &[blockjacobi::checkers::Verdict]) -> String {
    verdicts
        .iter()
        .map(|v| {
            format!(
                "{}: {} ({})",
                v.name,
                if v.holds { "holds" } else { "FAILS" },
                v.detail
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn check_a(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let f = cfg.family()?;
    let a = RunConfig::require(&cfg.a, "a")?;
    let rep = discreteness_witnesses(&f, cfg.c.unwrap_or(0.0), a, cfg.horizon.unwrap_or(1000))?;
    out.json("check_a.json", &rep)?;
    let w = rep.discreteness.as_ref().expect("witnesses present");
    let msg = format!(
        "{}\ntail cutoff {} and bound {}",
        verdict_lines(&rep.verdicts),
        w.cal_n,
        w.bound
    );
    Ok(Outcome::new(rep.all_hold(), msg))
}

pub fn check_b(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let f = cfg.family()?;
    let horizon = cfg.horizon.unwrap_or(1000);
    let tail = cfg
        .tail_window
        .unwrap_or_else(|| default_tail_window(horizon));
    let rep = coupling_margins(&f, horizon, tail, cfg.crit_tol.unwrap_or(DEFAULT_CRIT_TOL))?;
    out.json("check_b.json", &rep)?;
    if let Some(s) = &rep.series {
        out.text("margins.csv", &s.to_csv())?;
    }
    Ok(Outcome::new(rep.all_hold(), verdict_lines(&rep.verdicts)))
}

pub fn prop1(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let f = cfg.family()?;
    let m = RunConfig::require(&cfg.m_list, "m_list")?;
    let rep = two_sided_growth(&f, &m, cfg.horizon.unwrap_or(1000))?;
    out.json("prop1.json", &rep)?;
    Ok(Outcome::new(rep.all_hold(), verdict_lines(&rep.verdicts)))
}

/// Leading part from configuration terms `coeff(lambda) (scale n)^(-power) M`.
pub fn custom_splitting(sc: &SplittingConfig) -> Result<CustomSplitting> {
    for t in &sc.terms {
        if t.coeff != "one" && t.coeff != "lambda" {
            return Err(Error::usage(format!(
                "splitting term coeff must be `one` or `lambda`, got `{}`",
                t.coeff
            )));
        }
        if !(t.scale > 0.0)
            || !t.power.is_finite()
            || t.matrix.iter().flatten().any(|x| !x.is_finite())
        {
            return Err(Error::usage(
                "splitting terms need a positive scale and finite entries",
            ));
        }
    }
    if !(sc.steps == 2 || sc.steps == 3) {
        return Err(Error::usage("splitting steps must be 2 or 3"));
    }
    let terms = sc.terms.clone();
    Ok(CustomSplitting {
        name: sc.name.clone(),
        steps: sc.steps,
        leading: Arc::new(move |n, lambda| {
            let mut m = [[0.0; 2]; 2];
            for t in &terms {
                let c = if t.coeff == "lambda" { lambda } else { 1.0 };
                let w = c * (t.scale * n as f64).powf(-t.power);
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] += w * t.matrix[i][j];
                    }
                }
            }
            Transfer2::from_real(m, n, lambda)
        }),
    })
}

#[derive(Serialize)]
struct TransferReport {
    schema_version: &'static str,
    family: String,
    params: BTreeMap<String, f64>,
    lambda: f64,
    k: usize,
    window: [usize; 2],
    levinson: Option<LevinsonReport>,
    notes: Vec<String>,
}

pub fn transfer(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let f = cfg.family()?;
    let lambda = RunConfig::require(&cfg.lambda, "lambda")?;
    let [first, last] = cfg.window.unwrap_or([10, 10_000]);
    if first < 2 || first >= last {
        return Err(Error::usage(format!(
            "window must satisfy 2 <= first < last, got [{first}, {last}]"
        )));
    }
    let split: Option<Box<dyn Splitting>> = match &cfg.splitting {
        Some(sc) => Some(Box::new(custom_splitting(sc)?)),
        None => catalog_splitting(&f),
    };
    let k = match (cfg.k, &split) {
        (Some(k), Some(s)) if k != s.steps() => {
            return Err(Error::usage(format!(
                "k = {k} does not match the {}-step splitting",
                s.steps()
            )))
        }
        (Some(k), _) => k,
        (None, Some(s)) => s.steps(),
        (None, None) => 2,
    };

    let mut rows = Vec::with_capacity(last - first + 1);
    for n in first..=last {
        let p = kstep_product(&f, n, k, lambda)?;
        let (e1, e2) = eig_2x2(&p);
        let z = |c: C64| [fmt_f64(c.re), fmt_f64(c.im)];
        let mut row = vec![n.to_string()];
        for c in [p.det(), p.trace(), e1, e2] {
            row.extend(z(c));
        }
        rows.push(row);
    }
    out.text(
        "products.csv",
        &csv_string(
            &[
                "n", "det_re", "det_im", "trace_re", "trace_im", "eig1_re", "eig1_im", "eig2_re",
                "eig2_im",
            ],
            rows,
        ),
    )?;

    let mut notes = f.notes();
    let levinson = match &split {
        Some(s) => Some(levinson_for_family(&f, s.as_ref(), lambda, first, last)?),
        None => {
            notes.push("no splitting available for this family; only products were written".into());
            None
        }
    };
    let pass = levinson.as_ref().is_none_or(LevinsonReport::all_hold);
    let msg = match &levinson {
        Some(l) => {
            verdict_lines(&l.verdicts)
                + &l.notes
                    .iter()
                    .map(|n| format!("\nnote: {n}"))
                    .collect::<String>()
        }
        None => notes.join("\n"),
    };
    let rep = TransferReport {
        schema_version: SCHEMA_VERSION,
        family: f.name().into(),
        params: f.params().clone(),
        lambda,
        k,
        window: [first, last],
        levinson,
        notes,
    };
    out.json("transfer.json", &rep)?;
    Ok(Outcome::new(pass, msg))
}

#[derive(Serialize)]
struct PathSummary {
    direction: Direction,
    init: [f64; 2],
    max_relative_residual: f64,
}

#[derive(Serialize)]
struct SubordinacyReport {
    schema_version: &'static str,
    family: String,
    params: BTreeMap<String, f64>,
    lambda: f64,
    horizon: usize,
    u: PathSummary,
    v: PathSummary,
    trace: SubordinacyTrace,
    expect: Option<String>,
}

fn default_init(d: Direction, first: bool) -> [f64; 2] {
    match (d, first) {
        (Direction::Backward, _) => [1.0, 0.0],
        (Direction::Forward, true) => [1.0, 0.0],
        (Direction::Forward, false) => [0.0, 1.0],
    }
}

pub fn subordinacy(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let f = cfg.family()?;
    let lambda = RunConfig::require(&cfg.lambda, "lambda")?;
    let horizon = cfg.horizon.unwrap_or(10_000);
    if let Some(e) = &cfg.expect {
        if !["to-zero", "bounded-oscillating", "inconclusive"].contains(&e.as_str()) {
            return Err(Error::usage(format!(
                "--expect must be to-zero, bounded-oscillating or inconclusive, got `{e}`"
            )));
        }
    }
    let ud = cfg.u_direction.unwrap_or(Direction::Forward);
    let vd = cfg.v_direction.unwrap_or(Direction::Forward);
    let ui = cfg.u_init.unwrap_or_else(|| default_init(ud, true));
    let vi = cfg.v_init.unwrap_or_else(|| default_init(vd, false));
    let c = |x: f64| C64::new(x, 0.0);
    let u = solve_recursion(&f, lambda, (c(ui[0]), c(ui[1])), horizon, ud)?;
    let v = solve_recursion(&f, lambda, (c(vi[0]), c(vi[1])), horizon, vd)?;
    let trace = subordinacy_ratio(&u, &v, &cfg.subordinacy.unwrap_or_default())?;
    out.text("u_path.csv", &u.to_csv())?;
    out.text("v_path.csv", &v.to_csv())?;
    out.text("subordinacy.csv", &trace.to_csv())?;
    let observed = trace.trend.as_str();
    let pass = cfg.expect.as_deref().is_none_or(|e| e == observed);
    let rep = SubordinacyReport {
        schema_version: SCHEMA_VERSION,
        family: f.name().into(),
        params: f.params().clone(),
        lambda,
        horizon,
        u: PathSummary {
            direction: ud,
            init: ui,
            max_relative_residual: u.max_relative_residual(&f)?,
        },
        v: PathSummary {
            direction: vd,
            init: vi,
            max_relative_residual: v.max_relative_residual(&f)?,
        },
        trace,
        expect: cfg.expect.clone(),
    };
    out.json("subordinacy.json", &rep)?;
    let msg = match &cfg.expect {
        Some(e) => format!("trend {observed} (expected {e})"),
        None => format!("trend {observed}"),
    };
    Ok(Outcome::new(pass, msg))
}

pub fn probe(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let f = cfg.family()?;
    let c = cfg.c.unwrap_or(0.0);
    let a = RunConfig::require(&cfg.a, "a")?;
    let first = match cfg.first {
        Some(x) => x,
        None => {
            let w = discreteness_witnesses(&f, c, a, 1000)?;
            if !w.all_hold() {
                return Err(Error::usage(
                    "the witness conditions fail, so there is no tail cutoff to place the support after",
                ));
            }
            w.discreteness.expect("witnesses present").cal_n + 1
        }
    };
    let last = cfg.last.unwrap_or(first + 199);
    let opts = ProbeOptions {
        trials: cfg.trials.unwrap_or(200),
        first,
        last,
        seed: cfg.seed(),
    };
    let p = form_positivity_probe(&f, c, a, &opts)?;
    out.json("probe.json", &p)?;
    let msg = format!(
        "min quotient {:e} over {} trials on blocks {}..={} (cutoff {})",
        p.min_quotient, p.trials, p.support_first, p.support_last, p.cut_index
    );
    Ok(Outcome::new(p.holds, msg))
}

pub fn families() -> Outcome {
    let mut lines = Vec::new();
    for f in CATALOG {
        let params: Vec<String> = f
            .params
            .iter()
            .map(|p| format!("{}={}", p.name, p.default))
            .collect();
        lines.push(format!(
            "{:<18} d={}  {}\n{:<18} {}",
            f.name,
            f.block_dim,
            params.join(" "),
            "",
            f.summary
        ));
    }
    Outcome::new(true, lines.join("\n"))
}

pub fn reproduce(cfg: &RunConfig, out: &mut Output) -> Result<Outcome> {
    let entries = crate::gallery::manifest(cfg)?;
    let summary = crate::gallery::reproduce(&entries, cfg.seed(), out)?;
    Ok(Outcome::new(
        summary.all_pass,
        summary.table().trim_end().to_string(),
    ))
}
