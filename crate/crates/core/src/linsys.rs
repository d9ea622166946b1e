//! Least-squares towers for `Ax = b` and for `||A^{-1}||`.

use serde::{Deserialize, Serialize};

use crate::cloud::TowerStage;
use crate::error::{Error, Result};
use crate::numerics::{gram, is_positive_definite, solve_hpd, vec_norm, C64, DEFAULT_ETA};
use crate::operator::{LazyOperator, RhsVector};
use crate::spectral::SectionPair;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub stage: TowerStage,
    /// Coordinates `x_1 .. x_m`.
    pub x: Vec<C64>,
    /// `P_m A* P_n A P_m` failed the `1/m` test; `x` is the zero vector.
    pub below_threshold: bool,
    /// `||P_n A P_m x - P_n b||`.
    pub residual: f64,
}

impl SolveResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("solve results always serialize")
    }
}

/// `(P_m A* P_n A P_m)^{-1} P_m A* P_n b`, or zero when the smallest
/// eigenvalue of the normal matrix is at most `1/m`.
pub fn solve_stage(op: &LazyOperator, b: &RhsVector, m: usize, n: usize) -> Result<SolveResult> {
    if n < m || m == 0 {
        return Err(Error::Input(format!("solve stage needs n >= m >= 1, got m = {m}, n = {n}")));
    }
    let a = op.finite_section(n, m)?;
    let bn = b.truncate(n)?;
    let g = gram(&a);
    let mut shifted = g.clone();
    for i in 0..m {
        shifted[(i, i)].re -= 1.0 / m as f64;
    }
    let stage = TowerStage::new("solve", &[m as u64, n as u64]).thresholds(&[1.0 / m as f64]);
    let below = !is_positive_definite(&shifted, DEFAULT_ETA);
    let x = if below {
        vec![C64::new(0.0, 0.0); m]
    } else {
        let rhs = a.adjoint().mul_vec(&bn)?;
        solve_hpd(&g, &rhs, DEFAULT_ETA)?
    };
    let ax = a.mul_vec(&x)?;
    let r: Vec<C64> = ax.iter().zip(&bn).map(|(p, q)| p - q).collect();
    let mut res = SolveResult { stage, x, below_threshold: below, residual: vec_norm(&r) };
    if below {
        res.stage.flag("below threshold");
    }
    Ok(res)
}

/// [`solve_stage`] with `n = f(m)`.
pub fn solve_dispersion(op: &LazyOperator, b: &RhsVector, m: usize) -> Result<SolveResult> {
    let n = op.require_dispersion()?.apply(m)?;
    let mut r = solve_stage(op, b, m, n)?;
    r.stage.tower = "solve-dispersion".into();
    r.stage.indices = vec![m as u64];
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseNormResult {
    pub stage: TowerStage,
    /// Least `k/m` above `min(sigma_1(P_n A P_m), sigma_1(P_n A* P_m))`.
    pub delta: f64,
    pub inverse_norm: f64,
}

/// `1/delta_{m,n}`.
pub fn inverse_norm_stage(op: &LazyOperator, m: usize, n: usize) -> Result<InverseNormResult> {
    if n < m || m == 0 {
        return Err(Error::Input(format!("inverse norm stage needs n >= m >= 1, got m = {m}, n = {n}")));
    }
    let q = SectionPair::new(op, n, m, 0)?.quantized(C64::new(0.0, 0.0), m as u64)?;
    Ok(InverseNormResult {
        stage: TowerStage::new("inverse-norm", &[m as u64, n as u64]),
        delta: q.value(),
        inverse_norm: 1.0 / q.value(),
    })
}

pub fn inverse_norm_dispersion(op: &LazyOperator, m: usize) -> Result<InverseNormResult> {
    let n = op.require_dispersion()?.apply(m)?;
    let mut r = inverse_norm_stage(op, m, n)?;
    r.stage.tower = "inverse-norm-dispersion".into();
    r.stage.indices = vec![m as u64];
    Ok(r)
}
