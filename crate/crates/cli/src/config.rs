//! Run configuration: a JSON file overlaid by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use blockjacobi::model::{catalog_entry, read_table, CoefficientFamily, CATALOG};
use blockjacobi::spectral::{ClassifyOptions, Interval};
use blockjacobi::transfer::{Direction, SubordinacyOptions};
use blockjacobi::{Error, Result};
use serde::Deserialize;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BJAC_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "bjac-out";

/// Interval endpoint: a number, or the strings `"inf"` / `"-inf"`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Bound {
    Num(f64),
    Text(String),
}

impl Bound {
    pub fn value(&self) -> Result<f64> {
        match self {
            Bound::Num(x) => Ok(*x),
            Bound::Text(s) => parse_bound(s),
        }
    }
}

pub fn parse_bound(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        t => t
            .parse::<f64>()
            .map_err(|_| Error::usage(format!("cannot parse interval endpoint `{s}`"))),
    }
}

/// One term `coeff(lambda) * (scale * n)^(-power) * matrix` of a custom leading part.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittingTerm {
    /// `"one"` or `"lambda"`.
    #[serde(default = "one")]
    pub coeff: String,
    #[serde(default)]
    pub power: f64,
    #[serde(default = "unit")]
    pub scale: f64,
    pub matrix: [[f64; 2]; 2],
}

fn one() -> String {
    "one".into()
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittingConfig {
    pub name: String,
    pub steps: usize,
    pub terms: Vec<SplittingTerm>,
}

/// Experiment entry of a gallery manifest.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    /// Overrides the experiment's default tolerance.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub experiments: Vec<ManifestEntry>,
}

/// Every setting any command understands. Unset fields take command defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: Option<String>,
    pub params: Option<BTreeMap<String, f64>>,
    pub table: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,

    pub interval: Option<[Bound; 2]>,
    pub closed: Option<bool>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub schedule: Option<Vec<usize>>,
    pub grid: Option<usize>,
    pub classify: Option<ClassifyOptions>,

    pub c: Option<f64>,
    pub a: Option<f64>,
    pub horizon: Option<usize>,
    pub tail_window: Option<usize>,
    pub crit_tol: Option<f64>,
    pub m_list: Option<Vec<f64>>,

    pub lambda: Option<f64>,
    pub k: Option<usize>,
    pub window: Option<[usize; 2]>,
    pub splitting: Option<SplittingConfig>,
    pub u_direction: Option<Direction>,
    pub v_direction: Option<Direction>,
    pub u_init: Option<[f64; 2]>,
    pub v_init: Option<[f64; 2]>,
    pub expect: Option<String>,
    pub subordinacy: Option<SubordinacyOptions>,

    pub trials: Option<usize>,
    pub first: Option<usize>,
    pub last: Option<usize>,

    pub experiments: Option<Vec<String>>,
    pub manifest: Option<PathBuf>,
}

macro_rules! overlay_fields {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::usage(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `flags` replace those here; parameter maps merge key by key.
    pub fn overlay(&mut self, flags: RunConfig) {
        let mut flags = flags;
        // a different family on the command line drops the file's family settings
        if flags.family.is_some() && flags.family != self.family {
            self.params = None;
            self.table = None;
        }
        if flags.table.is_some() {
            self.family = None;
            self.params = None;
        }
        if let Some(p) = flags.params.take() {
            self.params.get_or_insert_with(BTreeMap::new).extend(p);
        }
        overlay_fields!(self, flags;
            family, table, out_dir, seed, workers, interval, closed, n, schedule, grid, classify,
            c, a, horizon, tail_window, crit_tol, m_list, lambda, k, window, splitting,
            u_direction, v_direction, u_init, v_init, expect, subordinacy, trials, first, last,
            experiments, manifest,
        );
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn require<T: Clone>(value: &Option<T>, name: &str) -> Result<T> {
        value
            .clone()
            .ok_or_else(|| Error::usage(format!("missing required option `{name}`")))
    }

    /// Builds the coefficient family from `family` + `params` or from `table`.
    pub fn family(&self) -> Result<CoefficientFamily> {
        if let Some(path) = &self.table {
            if self.family.is_some() {
                return Err(Error::usage(
                    "give either a family name or a table file, not both",
                ));
            }
            let table = read_table(path)?;
            let name = path
                .file_stem()
                .map_or("table".into(), |s| s.to_string_lossy().into_owned());
            return Ok(CoefficientFamily::from_table(name, table));
        }
        let name = self
            .family
            .as_deref()
            .ok_or_else(|| Error::usage("missing required option `family`"))?;
        let info = catalog_entry(name).ok_or_else(|| {
            let names: Vec<&str> = CATALOG.iter().map(|f| f.name).collect();
            Error::usage(format!(
                "unknown family `{name}`{}",
                suggestion(name, &names)
            ))
        })?;
        let params = self.params.clone().unwrap_or_default();
        let known: Vec<&str> = info.params.iter().map(|p| p.name).collect();
        for key in params.keys() {
            if !known.contains(&key.as_str()) {
                return Err(Error::usage(format!(
                    "family `{name}` has no parameter `{key}`{} (parameters: {})",
                    suggestion(key, &known),
                    known.join(", ")
                )));
            }
        }
        CoefficientFamily::builtin(name, &params)
    }

    pub fn interval(&self) -> Result<Interval> {
        let [lo, hi] = Self::require(&self.interval, "interval")?;
        make_interval(lo.value()?, hi.value()?, self.closed.unwrap_or(false))
    }
}

pub fn make_interval(lo: f64, hi: f64, closed: bool) -> Result<Interval> {
    if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
        return Err(Error::usage(format!("bad interval ({lo}, {hi})")));
    }
    let i = Interval {
        lo,
        hi,
        lo_closed: closed && lo.is_finite(),
        hi_closed: closed && hi.is_finite(),
        lo_infinite: lo == f64::NEG_INFINITY,
        hi_infinite: hi == f64::INFINITY,
    };
    i.validate()?;
    Ok(i)
}

/// `"; did you mean `x`?"` when some candidate is close to `word`.
pub fn suggestion(word: &str, candidates: &[&str]) -> String {
    candidates
        .iter()
        .map(|c| (strsim::jaro_winkler(word, c), *c))
        .filter(|(score, _)| *score > 0.8)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map_or(String::new(), |(_, c)| format!("; did you mean `{c}`?"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let e = serde_json::from_str::<RunConfig>(r#"{"famly": "example1"}"#).unwrap_err();
        assert!(e.to_string().contains("unknown field"));
    }

    #[test]
    fn flags_override_file() {
        let mut base: RunConfig = serde_json::from_str(
            r#"{"family": "example1", "params": {"alpha": 0.7}, "c": 1.0, "a": 2.0}"#,
        )
        .unwrap();
        let flags = RunConfig {
            a: Some(5.0),
            params: Some([("b".to_string(), 2.0)].into()),
            ..Default::default()
        };
        base.overlay(flags);
        assert_eq!((base.c, base.a), (Some(1.0), Some(5.0)));
        assert_eq!(base.params.as_ref().unwrap().len(), 2);
        assert_eq!(base.family().unwrap().params()["b"], 2.0);
    }

    #[test]
    fn family_suggestions() {
        let cfg = RunConfig {
            family: Some("exmaple1".into()),
            ..Default::default()
        };
        let e = cfg.family().unwrap_err().to_string();
        assert!(e.contains("did you mean `example1`"), "{e}");
        let cfg = RunConfig {
            family: Some("example1".into()),
            params: Some([("alpah".to_string(), 0.7)].into()),
            ..Default::default()
        };
        assert!(cfg
            .family()
            .unwrap_err()
            .to_string()
            .contains("did you mean `alpha`"));
    }

    #[test]
    fn interval_bounds() {
        let cfg: RunConfig = serde_json::from_str(r#"{"interval": ["-inf", 2.5]}"#).unwrap();
        let i = cfg.interval().unwrap();
        assert!(i.lo_infinite && !i.hi_infinite && i.hi == 2.5);
        assert!(make_interval(3.0, 1.0, false).is_err());
    }
}
