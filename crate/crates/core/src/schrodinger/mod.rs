//! Schrödinger operators `H = -Δ + V` on `R^d`.

pub mod bounded;
pub mod unbounded;

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{parse_expression, CompiledExpr};
use crate::numerics::C64;

/// Potential `V(x_1, ..., x_d)` given as an expression, with an optional
/// declared sector `arg V in [-theta2, theta1]`.
#[derive(Clone)]
pub struct PotentialSpec {
    dim: usize,
    expr: CompiledExpr,
    pub sector: Option<(f64, f64)>,
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("dim", &self.dim)
            .field("expr", &self.expr.source().to_string())
            .field("sector", &self.sector)
            .finish()
    }
}

impl PotentialSpec {
    /// Variables are `x1 .. xd`; in one dimension `x` also works.
    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Input(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        let mut names: Vec<String> = (1..=dim).map(|p| format!("x{p}")).collect();
        if dim == 1 {
            names.push("x".into());
        }
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let expr = parse_expression(src)?.compile(&refs)?;
        Ok(Self { dim, expr, sector: None })
    }

    pub fn with_sector(mut self, theta1: f64, theta2: f64) -> Result<Self> {
        if !(theta1 >= 0.0 && theta2 >= 0.0 && theta1 + theta2 < std::f64::consts::PI) {
            return Err(Error::Input(format!("invalid sector angles ({theta1}, {theta2})")));
        }
        self.sector = Some((theta1, theta2));
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> String {
        self.expr.source().to_string()
    }

    pub fn eval(&self, x: &[f64]) -> Result<C64> {
        if x.len() != self.dim {
            return Err(Error::Dimension(format!("potential in {} variables called with {}", self.dim, x.len())));
        }
        let v = if self.dim == 1 { self.expr.eval_real(&[x[0], x[0]])? } else { self.expr.eval_real(x)? };
        if let Some((t1, t2)) = self.sector {
            if v.norm() > 0.0 {
                let a = v.arg();
                if a > t1 + 1e-12 || a < -t2 - 1e-12 {
                    return Err(Error::Config(format!("V({x:?}) = {v} lies outside the declared sector")));
                }
            }
        }
        Ok(v)
    }

    /// Whether every sampled value is real.
    pub fn is_real_on(&self, pts: &[Vec<f64>]) -> Result<bool> {
        for p in pts {
            if self.eval(p)?.im != 0.0 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
