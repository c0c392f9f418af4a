//! Custom-family table files.
//!
//! ```text
//! d=2
//! # n  A (2d^2 reals, re/im interleaved, row-major)  B (2d^2 reals)
//! 1  1 0 0 0 0 0 1 0   2 0 0 0 0 0 3 0
//! ```
//!
//! Records must be numbered consecutively from 1. Blank lines and lines
//! starting with `#` are ignored.

use std::path::Path;

use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::linalg::{Hermitian, Matrix, C64};

use super::{block_at, CoefficientFamily};

const HERMITIAN_TOL: f64 = 1e-12;

/// Blocks `(A_n, B_n)` for `n = 1..=len`.
#[derive(Clone, Debug)]
pub struct BlockTable {
    dim: usize,
    a: Vec<Matrix>,
    b: Vec<Hermitian>,
}

impl BlockTable {
    pub fn new(dim: usize, a: Vec<Matrix>, b: Vec<Hermitian>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("block dimension must be positive"));
        }
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        for (k, (ak, bk)) in a.iter().zip(&b).enumerate() {
            if ak.rows() != dim || ak.cols() != dim || bk.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
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
        Ok(BlockTable { dim, a, b })
    }

    pub fn block_dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// 1-based lookup.
    pub fn get(&self, n: usize) -> Option<(&Matrix, &Hermitian)> {
        if n == 0 || n > self.len() {
            return None;
        }
        Some((&self.a[n - 1], &self.b[n - 1]))
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn entries(vals: &[f64], d: usize) -> Vec<C64> {
    (0..d * d)
        .map(|k| C64::new(vals[2 * k], vals[2 * k + 1]))
        .collect()
}

/// Parses table text. Errors carry the 1-based line number.
pub fn parse_table(text: &str) -> Result<BlockTable> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing `d=<int>` header"))?;
    let d: usize = header
        .strip_prefix("d=")
        .and_then(|s| s.trim().parse().ok())
        .filter(|&d: &usize| d >= 1)
        .ok_or_else(|| {
            parse_err(
                hline,
                format!("expected header `d=<positive int>`, found `{header}`"),
            )
        })?;

    let per = 2 * d * d;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (lineno, line) in lines {
        let mut fields = line.split_whitespace();
        let n_str = fields.next().expect("non-empty line");
        let n: usize = n_str.parse().map_err(|_| {
            parse_err(
                lineno,
                format!("record index `{n_str}` is not a positive integer"),
            )
        })?;
        if n != a.len() + 1 {
            return Err(parse_err(
                lineno,
                format!("expected record {}, found {n}", a.len() + 1),
            ));
        }
        let vals: Vec<f64> = fields
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(lineno, format!("`{s}` is not a finite real")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != 2 * per {
            return Err(parse_err(
                lineno,
                format!(
                    "expected {} reals after the index, found {}",
                    2 * per,
                    vals.len()
                ),
            ));
        }
        let am = Matrix::from_vec(d, d, entries(&vals[..per], d))
            .map_err(|e| parse_err(lineno, e.to_string()))?;
        let bm = Matrix::from_vec(d, d, entries(&vals[per..], d))
            .map_err(|e| parse_err(lineno, e.to_string()))?;
        let scale = 1.0 + bm.max_abs();
        for i in 0..d {
            for j in 0..d {
                if (bm[(i, j)] - bm[(j, i)].conj()).norm() > HERMITIAN_TOL * scale {
                    return Err(parse_err(
                        lineno,
                        format!("B_{n} is not Hermitian at ({i}, {j})"),
                    ));
                }
            }
        }
        if am.det().norm() == 0.0 {
            return Err(parse_err(lineno, format!("A_{n} is singular")));
        }
        a.push(am);
        b.push(Hermitian::new(bm).map_err(|e| parse_err(lineno, e.to_string()))?);
    }
    if a.is_empty() {
        return Err(parse_err(hline, "table has no records"));
    }
    BlockTable::new(d, a, b)
}

pub fn read_table(path: &Path) -> Result<BlockTable> {
    parse_table(&std::fs::read_to_string(path)?)
}

/// Serializes blocks `1..=n_max` of a family in table format.
pub fn write_table(f: &CoefficientFamily, n_max: usize) -> Result<String> {
    let d = f.block_dim();
    let mut out = format!("d={d}\n");
    for n in 1..=n_max {
        let blk = block_at(f, n)?;
        out.push_str(&n.to_string());
        for m in [&blk.a, blk.b.as_matrix()] {
            for z in m.data() {
                out.push(' ');
                out.push_str(&fmt_f64(z.re));
                out.push(' ');
                out.push_str(&fmt_f64(z.im));
            }
        }
        out.push('\n');
    }
    Ok(out)
}
