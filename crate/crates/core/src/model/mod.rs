//! Coefficient families `(A_n, B_n)` and their Dirichlet sections.
//!
//! Indices are 1-based everywhere in the public API: `block_at(f, 1)` is the
//! first diagonal block, and a section with `N` blocks uses `B_1..B_N` and
//! `A_1..A_{N-1}`.

mod example0;
mod table;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Hermitian, Matrix, C64};

pub use example0::{residual_example0, Example0Report};
pub use table::{parse_table, read_table, write_table, BlockTable};

/// Default cap on `d * N` for a section.
pub const DEFAULT_SIZE_CAP: usize = 1_000_000;

/// Largest index any generator is asked for.
pub const MAX_INDEX: usize = 10_000_000;

/// One generated pair of blocks.
#[derive(Clone, Debug)]
pub struct Blocks {
    pub a: Matrix,
    pub b: Hermitian,
    /// `|det A_n|`, always positive for blocks returned by [`block_at`].
    pub a_det_abs: f64,
}

/// Parameter metadata for a built-in family.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ParamInfo {
    pub name: &'static str,
    pub default: f64,
}

/// Entry of the built-in catalog.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FamilyInfo {
    pub name: &'static str,
    pub block_dim: usize,
    pub params: &'static [ParamInfo],
    pub summary: &'static str,
}

const fn p(name: &'static str, default: f64) -> ParamInfo {
    ParamInfo { name, default }
}

/// Built-in families. Parameter ranges are checked by [`CoefficientFamily::builtin`].
pub const CATALOG: &[FamilyInfo] = &[
    FamilyInfo {
        name: "scalar_power",
        block_dim: 1,
        params: &[p("alpha", 1.0)],
        summary: "a_n = n^alpha, b_n = 0; 0 < alpha <= 1",
    },
    FamilyInfo {
        name: "scalar_power_diag",
        block_dim: 1,
        params: &[p("alpha", 0.75), p("beta", 0.3)],
        summary: "a_n = n^alpha, b_n = n^beta; 0 < alpha <= 1, 0 < beta < alpha",
    },
    FamilyInfo {
        name: "example1",
        block_dim: 1,
        params: &[p("alpha", 0.75), p("b", 1.0)],
        summary: "a_n = n^alpha, b_odd = b n^alpha, b_even = 0; 2/3 <= alpha < 1, b > 0",
    },
    FamilyInfo {
        name: "heuristic2step",
        block_dim: 1,
        params: &[p("alpha", 0.8), p("beta", 0.3)],
        summary: "a_n = n^alpha, b_odd = n^beta, b_even = 0; 1/2 < alpha < 1, 0 < beta < alpha",
    },
    FamilyInfo {
        name: "step3",
        block_dim: 1,
        params: &[p("alpha", 0.75), p("delta", 1.0)],
        summary: "a_n = n^alpha, b_{3k} = delta (3k)^alpha, other b_n = 0; 1/2 < alpha < 1, delta > 0",
    },
    FamilyInfo {
        name: "prop5",
        block_dim: 1,
        params: &[
            p("alpha1", 0.5),
            p("alpha2", 0.5),
            p("beta1", 0.5),
            p("beta2", 0.5),
            p("c1", 1.0),
            p("c2", 1.0),
            p("d1", 3.0),
            p("d2", 3.0),
        ],
        summary: "a_2n = c1 n^alpha1, a_2n-1 = c2 n^alpha2, b_2n = d1 n^beta1, b_2n-1 = d2 n^beta2; all > 0",
    },
    FamilyInfo {
        name: "prop6",
        block_dim: 2,
        params: &[
            p("gamma", 1.0),
            p("tau", 0.75),
            p("b_scale", 1.0),
            p("b_exp", 0.75),
            p("eps", 0.1),
            p("eta", 1.0),
            p("a_scale", 0.2),
            p("a_exp", 0.75),
        ],
        summary: "2x2 blocks: B_2n-1 = gamma n^tau I, B_4j = 0, B_4j-2 = diag(0, b_scale j^b_exp), \
                  A_n = a_scale n^a_exp [[1, 0], [eps, eta]]",
    },
];

pub fn catalog_entry(name: &str) -> Option<&'static FamilyInfo> {
    CATALOG.iter().find(|f| f.name == name)
}

type BlockFn = dyn Fn(usize) -> (Matrix, Hermitian) + Send + Sync;
type ScalarFn = dyn Fn(usize) -> (f64, f64) + Send + Sync;

#[derive(Clone)]
enum Kind {
    ScalarPower {
        alpha: f64,
    },
    ScalarPowerDiag {
        alpha: f64,
        beta: f64,
    },
    Example1 {
        alpha: f64,
        b: f64,
    },
    Heuristic2Step {
        alpha: f64,
        beta: f64,
    },
    Step3 {
        alpha: f64,
        delta: f64,
    },
    Prop5 {
        alpha1: f64,
        alpha2: f64,
        beta1: f64,
        beta2: f64,
        c1: f64,
        c2: f64,
        d1: f64,
        d2: f64,
    },
    Prop6 {
        gamma: f64,
        tau: f64,
        b_scale: f64,
        b_exp: f64,
        eps: f64,
        eta: f64,
        a_scale: f64,
        a_exp: f64,
    },
    Table(Arc<BlockTable>),
    ScalarFn(Arc<ScalarFn>),
    BlockFn(Arc<BlockFn>),
}

/// Parametric generator of `(A_n, B_n)`.
#[derive(Clone)]
pub struct CoefficientFamily {
    name: String,
    dim: usize,
    params: BTreeMap<String, f64>,
    kind: Kind,
}

impl fmt::Debug for CoefficientFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientFamily")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("params", &self.params)
            .finish()
    }
}

fn npow(n: usize, e: f64) -> f64 {
    (n as f64).powf(e)
}

fn require(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::usage(format!(
            "parameter constraint violated: {what}"
        )))
    }
}

impl CoefficientFamily {
    /// Builds a catalog family. Missing parameters take catalog defaults;
    /// unknown parameter names are rejected.
    pub fn builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let info =
            catalog_entry(name).ok_or_else(|| Error::usage(format!("unknown family `{name}`")))?;
        for key in params.keys() {
            if !info.params.iter().any(|p| p.name == key) {
                let known: Vec<_> = info.params.iter().map(|p| p.name).collect();
                return Err(Error::usage(format!(
                    "family `{name}` has no parameter `{key}` (known: {})",
                    known.join(", ")
                )));
            }
        }
        let mut full = BTreeMap::new();
        for pi in info.params {
            let v = params.get(pi.name).copied().unwrap_or(pi.default);
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "parameter `{}` is not finite",
                    pi.name
                )));
            }
            full.insert(pi.name.to_string(), v);
        }
        let g = |k: &str| full[k];
        let kind = match name {
            "scalar_power" => {
                let alpha = g("alpha");
                require(alpha > 0.0 && alpha <= 1.0, "0 < alpha <= 1")?;
                Kind::ScalarPower { alpha }
            }
            "scalar_power_diag" => {
                let (alpha, beta) = (g("alpha"), g("beta"));
                require(alpha > 0.0 && alpha <= 1.0, "0 < alpha <= 1")?;
                require(beta > 0.0 && beta < alpha, "0 < beta < alpha")?;
                Kind::ScalarPowerDiag { alpha, beta }
            }
            "example1" => {
                let (alpha, b) = (g("alpha"), g("b"));
                require((2.0 / 3.0..1.0).contains(&alpha), "2/3 <= alpha < 1")?;
                require(b > 0.0, "b > 0")?;
                Kind::Example1 { alpha, b }
            }
            "heuristic2step" => {
                let (alpha, beta) = (g("alpha"), g("beta"));
                require(alpha > 0.5 && alpha < 1.0, "1/2 < alpha < 1")?;
                require(beta > 0.0 && beta < alpha, "0 < beta < alpha")?;
                Kind::Heuristic2Step { alpha, beta }
            }
            "step3" => {
                let (alpha, delta) = (g("alpha"), g("delta"));
                require(alpha > 0.5 && alpha < 1.0, "1/2 < alpha < 1")?;
                require(delta > 0.0, "delta > 0")?;
                Kind::Step3 { alpha, delta }
            }
            "prop5" => {
                for k in ["alpha1", "alpha2", "beta1", "beta2", "c1", "c2", "d1", "d2"] {
                    require(g(k) > 0.0, &format!("{k} > 0"))?;
                }
                Kind::Prop5 {
                    alpha1: g("alpha1"),
                    alpha2: g("alpha2"),
                    beta1: g("beta1"),
                    beta2: g("beta2"),
                    c1: g("c1"),
                    c2: g("c2"),
                    d1: g("d1"),
                    d2: g("d2"),
                }
            }
            "prop6" => {
                for k in ["gamma", "tau", "b_scale", "b_exp", "a_scale"] {
                    require(g(k) > 0.0, &format!("{k} > 0"))?;
                }
                require(g("a_exp") >= 0.0, "a_exp >= 0")?;
                require(g("eta") != 0.0, "eta != 0")?;
                Kind::Prop6 {
                    gamma: g("gamma"),
                    tau: g("tau"),
                    b_scale: g("b_scale"),
                    b_exp: g("b_exp"),
                    eps: g("eps"),
                    eta: g("eta"),
                    a_scale: g("a_scale"),
                    a_exp: g("a_exp"),
                }
            }
            _ => unreachable!("catalog and constructor disagree on `{name}`"),
        };
        Ok(CoefficientFamily {
            name: name.to_string(),
            dim: info.block_dim,
            params: full,
            kind,
        })
    }

    /// Convenience wrapper over [`builtin`](Self::builtin) taking `(name, value)` pairs.
    pub fn named(name: &str, params: &[(&str, f64)]) -> Result<Self> {
        let map = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Self::builtin(name, &map)
    }

    pub fn example1(alpha: f64, b: f64) -> Result<Self> {
        Self::named("example1", &[("alpha", alpha), ("b", b)])
    }

    pub fn step3(alpha: f64, delta: f64) -> Result<Self> {
        Self::named("step3", &[("alpha", alpha), ("delta", delta)])
    }

    pub fn from_table(name: impl Into<String>, table: BlockTable) -> Self {
        CoefficientFamily {
            name: name.into(),
            dim: table.block_dim(),
            params: BTreeMap::new(),
            kind: Kind::Table(Arc::new(table)),
        }
    }

    /// Scalar family from a closure `n -> (a_n, b_n)`. `a_n` must be nonzero.
    pub fn scalar_fn(
        name: impl Into<String>,
        f: impl Fn(usize) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        CoefficientFamily {
            name: name.into(),
            dim: 1,
            params: BTreeMap::new(),
            kind: Kind::ScalarFn(Arc::new(f)),
        }
    }

    /// Block family from a closure `n -> (A_n, B_n)`. `B_n` is re-symmetrized.
    pub fn block_fn(
        name: impl Into<String>,
        dim: usize,
        f: impl Fn(usize) -> (Matrix, Hermitian) + Send + Sync + 'static,
    ) -> Self {
        CoefficientFamily {
            name: name.into(),
            dim,
            params: BTreeMap::new(),
            kind: Kind::BlockFn(Arc::new(f)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn block_dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// Largest index the generator covers.
    pub fn max_index(&self) -> usize {
        match &self.kind {
            Kind::Table(t) => t.len(),
            _ => MAX_INDEX,
        }
    }

    /// Remarks about the chosen parameters that do not invalidate the family.
    pub fn notes(&self) -> Vec<String> {
        let mut notes = Vec::new();
        if let Kind::Heuristic2Step { alpha, beta } = self.kind {
            if 2.0 * alpha <= (1.0 + beta).max(2.0 - beta) {
                notes.push(format!(
                    "2 alpha = {} does not exceed max(1 + beta, 2 - beta) = {}; \
                     the cancellation heuristic is outside its stated regime",
                    2.0 * alpha,
                    (1.0 + beta).max(2.0 - beta)
                ));
            }
        }
        if let Kind::Step3 { delta, .. } = self.kind {
            if delta >= 2.0 {
                notes.push(format!(
                    "delta = {delta} >= 2: limit 3-step matrix has real eigenvalues"
                ));
            }
        }
        notes
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::usage("block indices start at 1"));
        }
        let max = self.max_index();
        if n > max {
            return Err(Error::OutOfRange {
                family: self.name.clone(),
                index: n,
                max,
            });
        }
        Ok(())
    }

    /// Real scalar coefficients `(a_n, b_n)` for families with `d = 1` and a
    /// real off-diagonal; `None` otherwise.
    pub fn scalar_at(&self, n: usize) -> Result<Option<(f64, f64)>> {
        self.check_index(n)?;
        let v = match &self.kind {
            Kind::ScalarPower { alpha } => (npow(n, *alpha), 0.0),
            Kind::ScalarPowerDiag { alpha, beta } => (npow(n, *alpha), npow(n, *beta)),
            Kind::Example1 { alpha, b } => {
                let a = npow(n, *alpha);
                (a, if n % 2 == 1 { b * a } else { 0.0 })
            }
            Kind::Heuristic2Step { alpha, beta } => (
                npow(n, *alpha),
                if n % 2 == 1 { npow(n, *beta) } else { 0.0 },
            ),
            Kind::Step3 { alpha, delta } => {
                let a = npow(n, *alpha);
                (a, if n.is_multiple_of(3) { delta * a } else { 0.0 })
            }
            Kind::Prop5 {
                alpha1,
                alpha2,
                beta1,
                beta2,
                c1,
                c2,
                d1,
                d2,
            } => {
                let m = n.div_ceil(2);
                if n.is_multiple_of(2) {
                    (c1 * npow(m, *alpha1), d1 * npow(m, *beta1))
                } else {
                    (c2 * npow(m, *alpha2), d2 * npow(m, *beta2))
                }
            }
            Kind::ScalarFn(f) => f(n),
            Kind::Table(t) if t.block_dim() == 1 => {
                let (a, b) = t.get(n).expect("index checked");
                if a[(0, 0)].im != 0.0 {
                    return Ok(None);
                }
                (a[(0, 0)].re, b[(0, 0)].re)
            }
            Kind::BlockFn(f) if self.dim == 1 => {
                let (a, b) = f(n);
                if a[(0, 0)].im != 0.0 {
                    return Ok(None);
                }
                (a[(0, 0)].re, b[(0, 0)].re)
            }
            _ => return Ok(None),
        };
        Ok(Some(v))
    }

    fn raw_blocks(&self, n: usize) -> Result<(Matrix, Hermitian)> {
        if let Some((a, b)) = self.scalar_at(n)? {
            return Ok((Matrix::scalar(a), Hermitian::from_real_diag(&[b])));
        }
        match &self.kind {
            Kind::Prop6 {
                gamma,
                tau,
                b_scale,
                b_exp,
                eps,
                eta,
                a_scale,
                a_exp,
            } => {
                let m = n.div_ceil(2);
                let b = if n % 2 == 1 {
                    Hermitian::scaled_identity(2, gamma * npow(m, *tau))
                } else if m.is_multiple_of(2) {
                    Hermitian::zeros(2)
                } else {
                    let j = m.div_ceil(2);
                    Hermitian::from_real_diag(&[0.0, b_scale * npow(j, *b_exp)])
                };
                let s = a_scale * npow(n, *a_exp);
                let a = Matrix::from_real_rows(&[&[s, 0.0], &[s * eps, s * eta]])?;
                Ok((a, b))
            }
            Kind::Table(t) => {
                let (a, b) = t.get(n).expect("index checked");
                Ok((a.clone(), b.clone()))
            }
            Kind::BlockFn(f) => {
                let (a, b) = f(n);
                if a.rows() != self.dim || a.cols() != self.dim || b.dim() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        got: a.rows(),
                    });
                }
                a.check_finite()?;
                Ok((a, b))
            }
            _ => unreachable!("scalar families handled above"),
        }
    }
}

/// `(A_n, B_n)` for `n >= 1`, with `A_n` checked for invertibility.
pub fn block_at(f: &CoefficientFamily, n: usize) -> Result<Blocks> {
    let (a, b) = f.raw_blocks(n)?;
    let a_det_abs = a.det().norm();
    if a_det_abs == 0.0 || !a_det_abs.is_finite() {
        return Err(Error::SingularCoupling {
            index: n,
            det_abs: a_det_abs,
        });
    }
    Ok(Blocks { a, b, a_det_abs })
}

#[derive(Clone, Debug)]
enum Storage {
    /// `d = 1`: real diagonal and (possibly complex) couplings.
    Scalar {
        b: Vec<f64>,
        a: Vec<C64>,
    },
    Block {
        b: Vec<Hermitian>,
        a: Vec<Matrix>,
    },
}

/// Finite `N`-block section of a family with Dirichlet cutoff.
#[derive(Clone, Debug)]
pub struct TruncatedJacobi {
    family: String,
    dim: usize,
    blocks: usize,
    storage: Storage,
}

/// Section with `N` blocks; `A_N` is dropped.
pub fn truncate(f: &CoefficientFamily, n_blocks: usize) -> Result<TruncatedJacobi> {
    truncate_with_cap(f, n_blocks, DEFAULT_SIZE_CAP)
}

pub fn truncate_with_cap(
    f: &CoefficientFamily,
    n_blocks: usize,
    cap: usize,
) -> Result<TruncatedJacobi> {
    if n_blocks < 2 {
        return Err(Error::usage(format!(
            "a section needs N >= 2 blocks, got {n_blocks}"
        )));
    }
    let size = n_blocks.saturating_mul(f.block_dim());
    if size > cap {
        return Err(Error::TooLarge { size, cap });
    }
    if n_blocks > f.max_index() {
        return Err(Error::OutOfRange {
            family: f.name.clone(),
            index: n_blocks,
            max: f.max_index(),
        });
    }
    let storage = if f.block_dim() == 1 {
        let mut b = Vec::with_capacity(n_blocks);
        let mut a = Vec::with_capacity(n_blocks - 1);
        for n in 1..=n_blocks {
            match f.scalar_at(n)? {
                Some((an, bn)) => {
                    if n < n_blocks {
                        if an == 0.0 || !an.is_finite() {
                            return Err(Error::SingularCoupling {
                                index: n,
                                det_abs: an.abs(),
                            });
                        }
                        a.push(C64::new(an, 0.0));
                    }
                    if !bn.is_finite() {
                        return Err(Error::invalid(format!("B_{n} is not finite")));
                    }
                    b.push(bn);
                }
                None => {
                    let blk = block_at(f, n)?;
                    if n < n_blocks {
                        a.push(blk.a[(0, 0)]);
                    }
                    b.push(blk.b[(0, 0)].re);
                }
            }
        }
        Storage::Scalar { b, a }
    } else {
        let mut b = Vec::with_capacity(n_blocks);
        let mut a = Vec::with_capacity(n_blocks - 1);
        for n in 1..=n_blocks {
            let blk = block_at(f, n)?;
            if n < n_blocks {
                a.push(blk.a);
            }
            b.push(blk.b);
        }
        Storage::Block { b, a }
    };
    Ok(TruncatedJacobi {
        family: f.name.clone(),
        dim: f.block_dim(),
        blocks: n_blocks,
        storage,
    })
}

impl TruncatedJacobi {
    /// Builds a section directly from blocks `B_1..B_N` and `A_1..A_{N-1}`.
    pub fn from_blocks(
        family: impl Into<String>,
        b: Vec<Hermitian>,
        a: Vec<Matrix>,
    ) -> Result<Self> {
        let n = b.len();
        if n < 2 || a.len() + 1 != n {
            return Err(Error::usage(
                "need N >= 2 diagonal blocks and N - 1 couplings",
            ));
        }
        let d = b[0].dim();
        for (k, ak) in a.iter().enumerate() {
            if ak.rows() != d || ak.cols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: ak.rows(),
                });
            }
            ak.check_finite()?;
            if ak.det().norm() == 0.0 {
                return Err(Error::SingularCoupling {
                    index: k + 1,
                    det_abs: 0.0,
                });
            }
        }
        if b.iter().any(|bk| bk.dim() != d) {
            return Err(Error::usage("diagonal blocks of different sizes"));
        }
        let storage = if d == 1 {
            Storage::Scalar {
                b: b.iter().map(|x| x[(0, 0)].re).collect(),
                a: a.iter().map(|x| x[(0, 0)]).collect(),
            }
        } else {
            Storage::Block { b, a }
        };
        Ok(TruncatedJacobi {
            family: family.into(),
            dim: d,
            blocks: n,
            storage,
        })
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn block_dim(&self) -> usize {
        self.dim
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks
    }

    /// Order `d * N` of the section.
    pub fn size(&self) -> usize {
        self.dim * self.blocks
    }

    /// Scalar view `(b, a)` when `d = 1`.
    pub fn scalar_parts(&self) -> Option<(&[f64], &[C64])> {
        match &self.storage {
            Storage::Scalar { b, a } => Some((b, a)),
            Storage::Block { .. } => None,
        }
    }

    /// `B_k`, 1-based.
    pub fn diag(&self, k: usize) -> Hermitian {
        match &self.storage {
            Storage::Scalar { b, .. } => Hermitian::from_real_diag(&[b[k - 1]]),
            Storage::Block { b, .. } => b[k - 1].clone(),
        }
    }

    /// `A_k`, 1-based, `k < N`.
    pub fn offdiag(&self, k: usize) -> Matrix {
        match &self.storage {
            Storage::Scalar { a, .. } => Matrix::from_vec(1, 1, vec![a[k - 1]]).expect("finite"),
            Storage::Block { a, .. } => a[k - 1].clone(),
        }
    }

    pub(crate) fn diag_ref(&self, k: usize) -> Option<&Hermitian> {
        match &self.storage {
            Storage::Block { b, .. } => Some(&b[k - 1]),
            Storage::Scalar { .. } => None,
        }
    }

    pub(crate) fn offdiag_ref(&self, k: usize) -> Option<&Matrix> {
        match &self.storage {
            Storage::Block { a, .. } => Some(&a[k - 1]),
            Storage::Scalar { .. } => None,
        }
    }

    /// Largest operator norm among all blocks (Frobenius bound for `d > 1`).
    pub fn max_block_norm(&self) -> f64 {
        match &self.storage {
            Storage::Scalar { b, a } => {
                let mb = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                a.iter().fold(mb, |m, x| m.max(x.norm()))
            }
            Storage::Block { b, a } => {
                let mb = b
                    .iter()
                    .fold(0.0f64, |m, x| m.max(x.as_matrix().frobenius()));
                a.iter().fold(mb, |m, x| m.max(x.frobenius()))
            }
        }
    }

    /// Largest absolute row sum of the full section.
    pub fn gershgorin_bound(&self) -> f64 {
        let d = self.dim;
        let mut bound = 0.0f64;
        match &self.storage {
            Storage::Scalar { b, a } => {
                for k in 0..self.blocks {
                    let left = if k > 0 { a[k - 1].norm() } else { 0.0 };
                    let right = if k + 1 < self.blocks {
                        a[k].norm()
                    } else {
                        0.0
                    };
                    bound = bound.max(b[k].abs() + left + right);
                }
            }
            Storage::Block { b, a } => {
                for k in 0..self.blocks {
                    for i in 0..d {
                        let mut s: f64 = (0..d).map(|j| b[k][(i, j)].norm()).sum();
                        if k > 0 {
                            // row i of A_{k-1}^*: conj of column i of A_{k-1}
                            s += (0..d).map(|j| a[k - 1][(j, i)].norm()).sum::<f64>();
                        }
                        if k + 1 < self.blocks {
                            s += (0..d).map(|j| a[k][(i, j)].norm()).sum::<f64>();
                        }
                        bound = bound.max(s);
                    }
                }
            }
        }
        bound
    }

    /// `(T v)_k = A_{k-1}^* v_{k-1} + B_k v_k + A_k v_{k+1}`.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.size() {
            return Err(Error::usage(format!(
                "vector length {} does not match section size {}",
                v.len(),
                self.size()
            )));
        }
        let n = self.blocks;
        let d = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        match &self.storage {
            Storage::Scalar { b, a } => {
                for k in 0..n {
                    let mut s = b[k] * v[k];
                    if k > 0 {
                        s += a[k - 1].conj() * v[k - 1];
                    }
                    if k + 1 < n {
                        s += a[k] * v[k + 1];
                    }
                    out[k] = s;
                }
            }
            Storage::Block { b, a } => {
                for k in 0..n {
                    let blk = &mut out[k * d..(k + 1) * d];
                    let bv = b[k].as_matrix().mul_vec(&v[k * d..(k + 1) * d]);
                    for (o, x) in blk.iter_mut().zip(bv) {
                        *o += x;
                    }
                    if k > 0 {
                        let w = a[k - 1].adjoint_mul_vec(&v[(k - 1) * d..k * d]);
                        for (o, x) in blk.iter_mut().zip(w) {
                            *o += x;
                        }
                    }
                    if k + 1 < n {
                        let w = a[k].mul_vec(&v[(k + 1) * d..(k + 2) * d]);
                        for (o, x) in blk.iter_mut().zip(w) {
                            *o += x;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Dense `dN x dN` matrix; intended for small sections and reference checks.
    pub fn to_dense(&self) -> Matrix {
        let n = self.blocks;
        let d = self.dim;
        let mut m = Matrix::zeros(n * d, n * d);
        for k in 1..=n {
            let bk = self.diag(k);
            for i in 0..d {
                for j in 0..d {
                    m[((k - 1) * d + i, (k - 1) * d + j)] = bk[(i, j)];
                }
            }
            if k < n {
                let ak = self.offdiag(k);
                for i in 0..d {
                    for j in 0..d {
                        m[((k - 1) * d + i, k * d + j)] = ak[(i, j)];
                        m[(k * d + j, (k - 1) * d + i)] = ak[(i, j)].conj();
                    }
                }
            }
        }
        m
    }

    /// Dense Hermitian form of the section.
    pub fn to_hermitian(&self) -> Hermitian {
        Hermitian::new(self.to_dense()).expect("section entries are finite")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_at_examples() {
        let f = CoefficientFamily::example1(0.75, 1.0).unwrap();
        let blk = block_at(&f, 3).unwrap();
        let want = 3f64.powf(0.75);
        assert_eq!(blk.a[(0, 0)].re, want);
        assert_eq!(blk.b[(0, 0)].re, want);

        let f = CoefficientFamily::step3(0.75, 1.0).unwrap();
        let blk = block_at(&f, 5).unwrap();
        assert_eq!(blk.a[(0, 0)].re, 5f64.powf(0.75));
        assert_eq!(blk.b[(0, 0)].re, 0.0);

        let f = CoefficientFamily::named("scalar_power", &[("alpha", 1.0)]).unwrap();
        let blk = block_at(&f, 1).unwrap();
        assert_eq!(blk.a[(0, 0)].re, 1.0);
        assert_eq!(blk.b[(0, 0)].re, 0.0);
        assert_eq!(blk.a_det_abs, 1.0);
    }

    #[test]
    fn zero_index_rejected() {
        let f = CoefficientFamily::example1(0.75, 1.0).unwrap();
        assert!(block_at(&f, 0).unwrap_err().is_usage());
    }

    #[test]
    fn parameter_ranges() {
        let e = CoefficientFamily::example1(0.5, 1.0).unwrap_err();
        assert!(e.to_string().contains("2/3 <= alpha < 1"), "{e}");
        assert!(CoefficientFamily::example1(0.75, 0.0).is_err());
        assert!(CoefficientFamily::step3(0.4, 1.0).is_err());
        assert!(CoefficientFamily::named("prop6", &[("eta", 0.0)]).is_err());
        assert!(CoefficientFamily::named("example1", &[("gamma", 1.0)]).is_err());
        assert!(CoefficientFamily::named("nonesuch", &[]).is_err());
    }

    #[test]
    fn truncate_examples() {
        let f = CoefficientFamily::named("scalar_power", &[("alpha", 1.0)]).unwrap();
        let t = truncate(&f, 2).unwrap();
        let want = Matrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert_eq!(t.to_dense(), want);

        let f = CoefficientFamily::example1(0.75, 1.0).unwrap();
        let t = truncate(&f, 3).unwrap();
        let (b, a) = t.scalar_parts().unwrap();
        assert_eq!(b, &[1.0, 0.0, 3f64.powf(0.75)]);
        assert_eq!(a[0].re, 1.0);
        assert_eq!(a[1].re, 2f64.powf(0.75));

        let f = CoefficientFamily::named("prop6", &[]).unwrap();
        let t = truncate(&f, 4).unwrap();
        let m = t.to_dense();
        assert_eq!((m.rows(), m.cols()), (8, 8));
        for i in 0usize..8 {
            for j in 0..8 {
                if i.abs_diff(j) > 3 {
                    assert_eq!(m[(i, j)].norm(), 0.0);
                }
            }
        }
        assert!(t.to_hermitian().as_matrix() == &m);
    }

    #[test]
    fn truncate_guards() {
        let f = CoefficientFamily::example1(0.75, 1.0).unwrap();
        assert!(truncate(&f, 1).unwrap_err().is_usage());
        assert!(matches!(
            truncate_with_cap(&f, 100, 50),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn apply_examples() {
        let f = CoefficientFamily::named("scalar_power", &[("alpha", 1.0)]).unwrap();
        let t = truncate(&f, 2).unwrap();
        let out = t.apply(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        assert_eq!(out, vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(t.apply(&[C64::new(1.0, 0.0)]).unwrap_err().is_usage());
    }

    #[test]
    fn prop6_blocks() {
        let f = CoefficientFamily::named("prop6", &[]).unwrap();
        // B_4 = 0, B_2 = diag(0, b_1), B_6 = diag(0, b_2), B_3 = gamma 2^tau I
        assert_eq!(block_at(&f, 4).unwrap().b, Hermitian::zeros(2));
        assert_eq!(
            block_at(&f, 2).unwrap().b,
            Hermitian::from_real_diag(&[0.0, 1.0])
        );
        assert_eq!(
            block_at(&f, 6).unwrap().b,
            Hermitian::from_real_diag(&[0.0, 2f64.powf(0.75)])
        );
        assert_eq!(
            block_at(&f, 3).unwrap().b,
            Hermitian::scaled_identity(2, 2f64.powf(0.75))
        );
        let a = block_at(&f, 5).unwrap();
        let s = 0.2 * 5f64.powf(0.75);
        assert!((a.a_det_abs - s * s).abs() < 1e-14);
    }

    #[test]
    fn heuristic_regime_note() {
        let f =
            CoefficientFamily::named("heuristic2step", &[("alpha", 0.8), ("beta", 0.3)]).unwrap();
        assert_eq!(f.notes().len(), 1);
        let f =
            CoefficientFamily::named("heuristic2step", &[("alpha", 0.9), ("beta", 0.3)]).unwrap();
        assert!(f.notes().is_empty());
    }
}
