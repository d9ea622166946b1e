//! Operator arguments: a JSON file, inline JSON, or a short form.
//!
//! Short forms:
//! `identity`, `zero`, `shift`, `diag:EXPR`, `tridiag:D,O`,
//! `toeplitz:V@OFF,...`, `laurent:V@OFF,...`, `entries:EXPR` (in `j`, `k`),
//! `banded:W:EXPR`.

use anyhow::{anyhow, bail, Context, Result};
use scitower::spec::{zoo, Coefficient, OperatorKind, OperatorSpec};
use scitower::{RhsVector, C64};

fn coefficients(src: &str) -> Result<Vec<Coefficient>> {
    src.split(',')
        .map(|t| {
            let (v, off) = t.split_once('@').ok_or_else(|| anyhow!("coefficient '{t}' needs VALUE@OFFSET"))?;
            let value = scitower::polyroots::parse_complex(v)?;
            let offset = off.trim().parse::<i64>().with_context(|| format!("offset in '{t}'"))?;
            Ok(Coefficient { offset, value })
        })
        .collect()
}

pub fn parse_operator(src: &str) -> Result<OperatorSpec> {
    let s = src.trim();
    if s.starts_with('{') {
        return Ok(OperatorSpec::from_json(s)?);
    }
    if let Some(path) = s.strip_prefix('@') {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
        return Ok(OperatorSpec::from_json(&text)?);
    }
    let (head, rest) = s.split_once(':').unwrap_or((s, ""));
    Ok(match head {
        "identity" => zoo::identity(),
        "zero" => zoo::zero(),
        "shift" => zoo::unilateral_shift(),
        "diag" => zoo::diagonal(rest),
        "tridiag" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                bail!("tridiag takes D,O");
            }
            zoo::tridiagonal(parts[0].trim().parse()?, parts[1].trim().parse()?)
        }
        "toeplitz" => OperatorSpec::new(OperatorKind::Toeplitz { symbol: coefficients(rest)? }),
        "laurent" => OperatorSpec::new(OperatorKind::LaurentFolded { symbol: coefficients(rest)? }),
        "entries" => OperatorSpec::new(OperatorKind::CustomExpression { expr: rest.into(), bandwidth: None }),
        "banded" => {
            let (w, e) = rest.split_once(':').ok_or_else(|| anyhow!("banded takes W:EXPR"))?;
            OperatorSpec::new(OperatorKind::CustomExpression { expr: e.into(), bandwidth: Some(w.trim().parse()?) })
        }
        _ => {
            let path = std::path::Path::new(s);
            if path.exists() {
                let text = std::fs::read_to_string(path)?;
                OperatorSpec::from_json(&text)?
            } else {
                bail!("unknown operator form '{s}'")
            }
        }
    })
}

/// `e<k>` for a unit vector, otherwise an expression in `j`.
pub fn parse_rhs(src: &str) -> Result<RhsVector> {
    let s = src.trim();
    if let Some(k) = s.strip_prefix('e').and_then(|k| k.parse::<usize>().ok()) {
        if k == 0 {
            bail!("unit vectors are numbered from 1");
        }
        return Ok(RhsVector::unit(k));
    }
    Ok(RhsVector::parse(s)?)
}

pub fn parse_list<T: std::str::FromStr>(src: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    src.split(',').map(|t| t.trim().parse::<T>().map_err(|e| anyhow!("bad list entry '{t}': {e}"))).collect()
}

pub fn parse_coeffs(src: &str) -> Result<Vec<C64>> {
    src.split(',').map(|t| Ok(scitower::polyroots::parse_complex(t)?)).collect()
}
