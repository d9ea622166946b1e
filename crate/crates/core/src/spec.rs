//! Serializable operator descriptions.
//!
//! Offsets follow the Toeplitz convention `offset = i - j`, so the unilateral
//! shift is the single coefficient 1 at offset 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::parse_expression;
use crate::numerics::C64;
use crate::operator::{Dispersion, LazyOperator, ResolventControl};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    #[serde(flatten)]
    pub kind: OperatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_bound: Option<f64>,
    /// `"identity"` or an expression in `x`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolvent_control: Option<String>,
    /// Expression in `k`; overrides the canonical bound of the kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OperatorKind {
    /// `entry(j, j) = expr(j)`.
    Diagonal { expr: String },
    /// `entry(j, j - offset) = expr(j)`: each band is evaluated at the row index `j`.
    Banded { bands: Vec<Band> },
    Toeplitz { symbol: Vec<Coefficient> },
    /// Laurent operator on `l^2(Z)` moved to `l^2(N)` through `0, 1, -1, 2, -2, ...`.
    LaurentFolded { symbol: Vec<Coefficient> },
    /// Direct sum of blocks of the given sizes; `size_expr` (in `r`) continues
    /// the list, otherwise its last size repeats.
    BlockDirectSum {
        family: BlockFamily,
        #[serde(default)]
        sizes: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        size_expr: Option<String>,
    },
    /// `S e_n = alpha_n e_{n+1}`.
    ShiftWeighted { weights: ShiftWeights },
    /// `entry(j, k) = expr(j, k)`.
    CustomExpression {
        expr: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bandwidth: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub offset: i64,
    pub expr: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub offset: i64,
    pub value: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockFamily {
    /// Ones in the four corners of an `s x s` block, zeros elsewhere.
    Corner,
    /// Block `r` of size `s`: identity with corners `1/(r+1)` and anti-corners 1.
    LinsysCorner,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftWeights {
    /// `alpha_n = expr(n)`.
    Expr(String),
    /// Run starts `l_1 < l_2 < ...` with `alpha = 1` on `l_j + 1 ..= l_j + j` and
    /// 0 elsewhere; requires `l_{j+1} > l_j + 2j`.
    Runs(Vec<usize>),
}

/// Cap on block-direct-sum indices precomputed at construction.
const BLOCK_INDEX_CAP: usize = 1 << 24;

pub fn fold_index(x: i64) -> usize {
    if x > 0 {
        2 * x as usize
    } else {
        (-2 * x + 1) as usize
    }
}

pub fn unfold_index(j: usize) -> i64 {
    if j % 2 == 0 {
        (j / 2) as i64
    } else {
        -((j as i64 - 1) / 2)
    }
}

fn symbol_lookup(symbol: &[Coefficient]) -> (i64, i64, Vec<C64>) {
    let lo = symbol.iter().map(|c| c.offset).min().unwrap_or(0);
    let hi = symbol.iter().map(|c| c.offset).max().unwrap_or(0);
    let mut table = vec![C64::new(0.0, 0.0); (hi - lo + 1) as usize];
    for c in symbol {
        table[(c.offset - lo) as usize] += c.value;
    }
    (lo, hi, table)
}

fn block_starts(sizes: &[usize], size_expr: Option<&str>) -> Result<Vec<usize>> {
    let expr = match size_expr {
        Some(s) => Some(parse_expression(s)?.compile(&["r"])?),
        None => None,
    };
    if sizes.is_empty() && expr.is_none() {
        return Err(Error::Config("block-direct-sum needs sizes or size_expr".into()));
    }
    let mut starts = vec![1usize];
    let mut r = 0usize;
    while *starts.last().unwrap() <= BLOCK_INDEX_CAP {
        r += 1;
        let s = if r <= sizes.len() {
            sizes[r - 1]
        } else if let Some(e) = &expr {
            let v = e.eval_real(&[r as f64])?.re;
            if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0) {
                return Err(Error::Config(format!("block size {v} at r = {r} is not a natural number")));
            }
            v as usize
        } else {
            *sizes.last().unwrap()
        };
        if s < 2 {
            return Err(Error::Config(format!("block {r} has size {s}; blocks need size >= 2")));
        }
        starts.push(starts.last().unwrap() + s);
    }
    Ok(starts)
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind) -> Self {
        Self { kind, norm_bound: None, resolvent_control: None, dispersion: None }
    }

    pub fn with_resolvent_control(mut self, g: &str) -> Self {
        self.resolvent_control = Some(g.to_string());
        self
    }

    pub fn with_dispersion(mut self, f: &str) -> Self {
        self.dispersion = Some(f.to_string());
        self
    }

    pub fn with_norm_bound(mut self, m: f64) -> Self {
        self.norm_bound = Some(m);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("operator specs always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("operator spec: {e}")))
    }

    /// Instantiates the lazy operator, attaching canonical hints.
    pub fn build(&self) -> Result<LazyOperator> {
        let mut op = build_kind(&self.kind)?;
        if let Some(m) = self.norm_bound {
            op.norm_bound = Some(m);
        }
        if let Some(g) = &self.resolvent_control {
            op.resolvent_control = Some(ResolventControl::parse(g)?);
        }
        if let Some(f) = &self.dispersion {
            let f = Dispersion::parse(f)?;
            for k in 1..=64 {
                f.apply(k)?;
            }
            op.dispersion = Some(f);
        }
        Ok(op)
    }
}

pub fn make_test_operator(spec: &OperatorSpec) -> Result<LazyOperator> {
    spec.build()
}

fn build_kind(kind: &OperatorKind) -> Result<LazyOperator> {
    Ok(match kind {
        OperatorKind::Diagonal { expr } => {
            let e = parse_expression(expr)?.compile(&["j"])?;
            LazyOperator::new(move |i, j| if i == j { e.eval_real(&[j as f64]) } else { Ok(C64::new(0.0, 0.0)) })
                .with_band(0)
                .with_dispersion(Dispersion::Offset(0))
        }
        OperatorKind::Banded { bands } => {
            let mut compiled = Vec::with_capacity(bands.len());
            for b in bands {
                compiled.push((b.offset, parse_expression(&b.expr)?.compile(&["j"])?));
            }
            let w = bands.iter().map(|b| b.offset.unsigned_abs() as usize).max().unwrap_or(0);
            LazyOperator::new(move |i, j| {
                let off = i as i64 - j as i64;
                let mut v = C64::new(0.0, 0.0);
                for (o, e) in &compiled {
                    if *o == off {
                        v += e.eval_real(&[i as f64])?;
                    }
                }
                Ok(v)
            })
            .with_band(w)
            .with_dispersion(Dispersion::Offset(w))
        }
        OperatorKind::Toeplitz { symbol } => {
            let (lo, hi, table) = symbol_lookup(symbol);
            let norm: f64 = table.iter().map(|c| c.norm()).sum();
            let w = lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
            LazyOperator::new(move |i, j| {
                let off = i as i64 - j as i64;
                Ok(if off < lo || off > hi { C64::new(0.0, 0.0) } else { table[(off - lo) as usize] })
            })
            .with_band(w)
            .with_norm_bound(norm)
            .with_dispersion(Dispersion::Offset(w))
        }
        OperatorKind::LaurentFolded { symbol } => {
            let (lo, hi, table) = symbol_lookup(symbol);
            let norm: f64 = table.iter().map(|c| c.norm()).sum();
            let w = lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
            LazyOperator::new(move |i, j| {
                let off = unfold_index(i) - unfold_index(j);
                Ok(if off < lo || off > hi { C64::new(0.0, 0.0) } else { table[(off - lo) as usize] })
            })
            .with_band(2 * w + 1)
            .with_norm_bound(norm)
            .with_dispersion(Dispersion::Offset(2 * w))
        }
        OperatorKind::BlockDirectSum { family, sizes, size_expr } => {
            let starts = block_starts(sizes, size_expr.as_deref())?;
            let family = *family;
            let limit = *starts.last().unwrap();
            LazyOperator::new(move |i, j| {
                if i >= limit || j >= limit {
                    return Err(Error::Input(format!("block-direct-sum index beyond {limit}")));
                }
                let r = starts.partition_point(|&s| s <= i);
                let (s0, s1) = (starts[r - 1], starts[r]);
                if j < s0 || j >= s1 {
                    return Ok(C64::new(0.0, 0.0));
                }
                let (a, b, last) = (i - s0, j - s0, s1 - s0 - 1);
                let corner = (a == 0 || a == last) && (b == 0 || b == last);
                let v = match family {
                    BlockFamily::Corner => f64::from(u8::from(corner)),
                    BlockFamily::LinsysCorner => {
                        if corner && a == b {
                            1.0 / (r as f64 + 1.0)
                        } else if corner || a == b {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                Ok(C64::new(v, 0.0))
            })
            .with_norm_bound(2.0)
        }
        OperatorKind::ShiftWeighted { weights } => {
            let alpha: Box<dyn Fn(usize) -> Result<C64> + Send + Sync> = match weights {
                ShiftWeights::Expr(src) => {
                    let e = parse_expression(src)?.compile(&["j"])?;
                    Box::new(move |n| e.eval_real(&[n as f64]))
                }
                ShiftWeights::Runs(starts) => {
                    for (idx, w) in starts.windows(2).enumerate() {
                        let j = idx + 1;
                        if w[1] <= w[0] + 2 * j {
                            return Err(Error::Config(format!(
                                "run starts must satisfy l_(j+1) > l_j + 2j; fails at j = {j}"
                            )));
                        }
                    }
                    let starts = starts.clone();
                    Box::new(move |n| {
                        let hit = starts.iter().enumerate().any(|(idx, &l)| n > l && n <= l + idx + 1);
                        Ok(C64::new(f64::from(u8::from(hit)), 0.0))
                    })
                }
            };
            LazyOperator::new(move |i, j| if i == j + 1 { alpha(j) } else { Ok(C64::new(0.0, 0.0)) })
                .with_band(1)
                .with_dispersion(Dispersion::Offset(1))
        }
        OperatorKind::CustomExpression { expr, bandwidth } => {
            let e = parse_expression(expr)?.compile(&["j", "k"])?;
            let op = LazyOperator::new(move |i, j| e.eval_real(&[i as f64, j as f64]));
            match bandwidth {
                Some(w) => op.with_band(*w).with_dispersion(Dispersion::Offset(*w)),
                None => op,
            }
        }
    })
}

/// Named operators used across tests, benches and examples.
pub mod zoo {
    use super::*;

    fn coef(offset: i64, v: f64) -> Coefficient {
        Coefficient { offset, value: C64::new(v, 0.0) }
    }

    pub fn identity() -> OperatorSpec {
        OperatorSpec::new(OperatorKind::Diagonal { expr: "1".into() }).with_norm_bound(1.0)
    }

    pub fn zero() -> OperatorSpec {
        OperatorSpec::new(OperatorKind::Diagonal { expr: "0".into() }).with_norm_bound(0.0)
    }

    pub fn diagonal(expr: &str) -> OperatorSpec {
        OperatorSpec::new(OperatorKind::Diagonal { expr: expr.into() })
    }

    /// `diag(2, 1, 1, ...)`.
    pub fn diag_two_then_ones() -> OperatorSpec {
        diagonal("1 + delta(j - 1)").with_norm_bound(2.0)
    }

    /// `e_n -> e_{n+1}`.
    pub fn unilateral_shift() -> OperatorSpec {
        OperatorSpec::new(OperatorKind::Toeplitz { symbol: vec![coef(1, 1.0)] })
    }

    /// Toeplitz operator with `diag` on the diagonal and `off` on both neighbours.
    pub fn tridiagonal(diag: f64, off: f64) -> OperatorSpec {
        OperatorSpec::new(OperatorKind::Toeplitz { symbol: vec![coef(-1, off), coef(0, diag), coef(1, off)] })
    }

    /// `S + S*` on `l^2(Z)`, folded.
    pub fn laurent_sum() -> OperatorSpec {
        OperatorSpec::new(OperatorKind::LaurentFolded { symbol: vec![coef(-1, 1.0), coef(1, 1.0)] })
    }

    /// `3I + S + S*` on `l^2(Z)`, folded.
    pub fn laurent_tridiagonal(diag: f64) -> OperatorSpec {
        OperatorSpec::new(OperatorKind::LaurentFolded { symbol: vec![coef(-1, 1.0), coef(0, diag), coef(1, 1.0)] })
    }

    pub fn corner_blocks(sizes: Vec<usize>, size_expr: Option<&str>) -> OperatorSpec {
        OperatorSpec::new(OperatorKind::BlockDirectSum {
            family: BlockFamily::Corner,
            sizes,
            size_expr: size_expr.map(str::to_string),
        })
    }

    pub fn linsys_blocks(sizes: Vec<usize>, size_expr: Option<&str>) -> OperatorSpec {
        OperatorSpec::new(OperatorKind::BlockDirectSum {
            family: BlockFamily::LinsysCorner,
            sizes,
            size_expr: size_expr.map(str::to_string),
        })
    }

    pub fn weighted_shift_runs(starts: Vec<usize>) -> OperatorSpec {
        OperatorSpec::new(OperatorKind::ShiftWeighted { weights: ShiftWeights::Runs(starts) }).with_norm_bound(1.0)
    }
}
