//! Lazy infinite matrices on `l^2(N)` and their finite sections.
//!
//! Indices are 1-based throughout, matching `P_n A P_m` notation: `entry(i, j)`
//! is `<A e_j, e_i>`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{parse_expression, CompiledExpr};
use crate::numerics::{ComplexMatrix, C64};

pub type EntryFn = Arc<dyn Fn(usize, usize) -> Result<C64> + Send + Sync>;

/// Upper bound `f` on the dispersion: `(I - P_f(m)) A P_m` and `P_m A (I - P_f(m))`
/// are small. Values are normalized to `f(k) >= k`.
#[derive(Clone)]
pub enum Dispersion {
    Offset(usize),
    Expr(CompiledExpr),
    Fn(Arc<dyn Fn(usize) -> usize + Send + Sync>),
}

impl Dispersion {
    pub fn parse(src: &str) -> Result<Self> {
        Ok(Dispersion::Expr(parse_expression(src)?.compile(&["k"])?))
    }

    pub fn apply(&self, k: usize) -> Result<usize> {
        let v = match self {
            Dispersion::Offset(d) => k + d,
            Dispersion::Expr(e) => {
                let v = e.eval_real(&[k as f64])?.re;
                if !(v.is_finite() && v >= 0.0 && v < 1e12) {
                    return Err(Error::Eval(format!("dispersion bound f({k}) = {v} out of range")));
                }
                v.ceil() as usize
            }
            Dispersion::Fn(f) => f(k),
        };
        Ok(v.max(k))
    }

    /// `f` composed with itself `times` times.
    pub fn iterate(&self, k: usize, times: usize) -> Result<usize> {
        let mut v = k;
        for _ in 0..times {
            v = self.apply(v)?;
        }
        Ok(v)
    }
}

impl fmt::Debug for Dispersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dispersion::Offset(d) => write!(f, "k + {d}"),
            Dispersion::Expr(e) => write!(f, "{}", e.source()),
            Dispersion::Fn(_) => f.write_str("<fn>"),
        }
    }
}

/// Resolvent control `g` with `||(A - z)^{-1}||^{-1} >= g(dist(z, sp A))`.
#[derive(Clone)]
pub enum ResolventControl {
    Identity,
    Expr(CompiledExpr),
}

impl ResolventControl {
    /// `"identity"` or an expression in `x`. Checks `g(0) = 0` and
    /// monotonicity on a sample grid.
    pub fn parse(src: &str) -> Result<Self> {
        if src.trim() == "identity" {
            return Ok(ResolventControl::Identity);
        }
        let g = ResolventControl::Expr(parse_expression(src)?.compile(&["x"])?);
        g.validate()?;
        Ok(g)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            ResolventControl::Identity => Ok(x),
            ResolventControl::Expr(e) => Ok(e.eval_real(&[x])?.re),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g0 = self.eval(0.0)?;
        if g0.abs() > 1e-12 {
            return Err(Error::Config(format!("resolvent control must vanish at 0, got g(0) = {g0}")));
        }
        let mut prev = g0;
        for k in 1..=400 {
            let x = k as f64 / 20.0;
            let v = self.eval(x)?;
            if v < prev {
                return Err(Error::Config(format!("resolvent control decreases near x = {x}")));
            }
            prev = v;
        }
        Ok(())
    }
}

impl fmt::Debug for ResolventControl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolventControl::Identity => f.write_str("identity"),
            ResolventControl::Expr(e) => write!(f, "{}", e.source()),
        }
    }
}

/// Default cap on the `h_delta` scan.
pub const H_DELTA_K_MAX: u64 = 1_000_000;

/// `min{k/m : g(k/m) > y}`, returned as `k`.
pub fn h_delta_steps(g: &ResolventControl, y: f64, m: u64, k_max: u64) -> Result<u64> {
    for k in 1..=k_max {
        if g.eval(k as f64 / m as f64)? > y {
            return Ok(k);
        }
    }
    Err(Error::GrowthTooSlow { y, delta: 1.0 / m as f64, k_max })
}

/// `h_delta(y) = min{k delta : g(k delta) > y}`.
pub fn h_delta(g: &ResolventControl, y: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !(y >= 0.0) {
        return Err(Error::Input(format!("h_delta needs delta > 0 and y >= 0, got {delta}, {y}")));
    }
    let inv = 1.0 / delta;
    if (inv - inv.round()).abs() < 1e-9 && inv.round() >= 1.0 {
        let m = inv.round() as u64;
        return Ok(h_delta_steps(g, y, m, H_DELTA_K_MAX)? as f64 / m as f64);
    }
    for k in 1..=H_DELTA_K_MAX {
        if g.eval(k as f64 * delta)? > y {
            return Ok(k as f64 * delta);
        }
    }
    Err(Error::GrowthTooSlow { y, delta, k_max: H_DELTA_K_MAX })
}

/// An infinite matrix given by an entry oracle plus optional structure hints.
#[derive(Clone)]
pub struct LazyOperator {
    entry: EntryFn,
    /// Entries with `|i - j| > band` are known to vanish.
    band: Option<usize>,
    pub norm_bound: Option<f64>,
    pub dispersion: Option<Dispersion>,
    pub resolvent_control: Option<ResolventControl>,
}

impl fmt::Debug for LazyOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LazyOperator")
            .field("band", &self.band)
            .field("norm_bound", &self.norm_bound)
            .field("dispersion", &self.dispersion)
            .field("resolvent_control", &self.resolvent_control)
            .finish()
    }
}

impl LazyOperator {
    pub fn new(entry: impl Fn(usize, usize) -> Result<C64> + Send + Sync + 'static) -> Self {
        Self { entry: Arc::new(entry), band: None, norm_bound: None, dispersion: None, resolvent_control: None }
    }

    /// Infallible real-valued convenience constructor.
    pub fn from_real(entry: impl Fn(usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(move |i, j| Ok(C64::new(entry(i, j), 0.0)))
    }

    pub fn with_band(mut self, band: usize) -> Self {
        self.band = Some(band);
        self
    }

    pub fn with_norm_bound(mut self, m: f64) -> Self {
        self.norm_bound = Some(m);
        self
    }

    pub fn with_dispersion(mut self, f: Dispersion) -> Self {
        self.dispersion = Some(f);
        self
    }

    pub fn with_resolvent_control(mut self, g: ResolventControl) -> Self {
        self.resolvent_control = Some(g);
        self
    }

    pub fn band(&self) -> Option<usize> {
        self.band
    }

    pub fn entry(&self, i: usize, j: usize) -> Result<C64> {
        if i == 0 || j == 0 {
            return Err(Error::Input("operator indices are 1-based".into()));
        }
        if let Some(w) = self.band {
            if i.abs_diff(j) > w {
                return Ok(C64::new(0.0, 0.0));
            }
        }
        let v = (self.entry)(i, j)?;
        if !v.is_finite() {
            return Err(Error::Eval(format!("entry ({i}, {j}) is not finite")));
        }
        Ok(v)
    }

    /// Entry of the adjoint: `conj(A_ji)`.
    pub fn adjoint_entry(&self, i: usize, j: usize) -> Result<C64> {
        Ok(self.entry(j, i)?.conj())
    }

    /// Rows `r0+1 ..= r0+rows`, columns `c0+1 ..= c0+cols`.
    pub fn block(&self, r0: usize, rows: usize, c0: usize, cols: usize, adjoint: bool) -> Result<ComplexMatrix> {
        let mut m = ComplexMatrix::zeros(rows, cols);
        for jj in 0..cols {
            let j = c0 + jj + 1;
            let (lo, hi) = match self.band {
                Some(w) => (j.saturating_sub(w).max(r0 + 1), (j + w).min(r0 + rows)),
                None => (r0 + 1, r0 + rows),
            };
            for i in lo..=hi {
                if i < r0 + 1 {
                    continue;
                }
                m[(i - r0 - 1, jj)] = if adjoint { self.adjoint_entry(i, j)? } else { self.entry(i, j)? };
            }
        }
        Ok(m)
    }

    /// `P_n A P_m` as an `n x m` matrix.
    pub fn finite_section(&self, n: usize, m: usize) -> Result<ComplexMatrix> {
        if n == 0 || m == 0 {
            return Err(Error::Input("section sizes must be at least 1".into()));
        }
        self.block(0, n, 0, m, false)
    }

    /// `P_n A* P_m`, the conjugate transpose of `P_m A P_n`.
    pub fn adjoint_section(&self, n: usize, m: usize) -> Result<ComplexMatrix> {
        if n == 0 || m == 0 {
            return Err(Error::Input("section sizes must be at least 1".into()));
        }
        self.block(0, n, 0, m, true)
    }

    pub fn require_dispersion(&self) -> Result<&Dispersion> {
        self.dispersion.as_ref().ok_or_else(|| Error::Config("operator carries no dispersion bound f".into()))
    }

    pub fn require_resolvent_control(&self) -> Result<&ResolventControl> {
        self.resolvent_control
            .as_ref()
            .ok_or_else(|| Error::Config("operator carries no resolvent control g".into()))
    }

    pub fn require_norm_bound(&self) -> Result<f64> {
        self.norm_bound.ok_or_else(|| Error::Config("operator carries no norm bound".into()))
    }
}

/// Right-hand side `b` of `Ax = b`, given entrywise (1-based).
#[derive(Clone)]
pub struct RhsVector {
    entry: Arc<dyn Fn(usize) -> Result<C64> + Send + Sync>,
    pub support: Option<usize>,
}

impl fmt::Debug for RhsVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RhsVector").field("support", &self.support).finish()
    }
}

impl RhsVector {
    pub fn new(entry: impl Fn(usize) -> Result<C64> + Send + Sync + 'static) -> Self {
        Self { entry: Arc::new(entry), support: None }
    }

    /// The standard basis vector `e_k`.
    pub fn unit(k: usize) -> Self {
        let mut b = Self::new(move |i| Ok(C64::new(if i == k { 1.0 } else { 0.0 }, 0.0)));
        b.support = Some(k);
        b
    }

    pub fn from_vec(v: Vec<C64>) -> Self {
        let len = v.len();
        let mut b = Self::new(move |i| Ok(v.get(i - 1).copied().unwrap_or(C64::new(0.0, 0.0))));
        b.support = Some(len);
        b
    }

    pub fn parse(src: &str) -> Result<Self> {
        let e = parse_expression(src)?.compile(&["j"])?;
        Ok(Self::new(move |i| e.eval_real(&[i as f64])))
    }

    pub fn entry(&self, i: usize) -> Result<C64> {
        if i == 0 {
            return Err(Error::Input("vector indices are 1-based".into()));
        }
        (self.entry)(i)
    }

    /// `P_n b`.
    pub fn truncate(&self, n: usize) -> Result<Vec<C64>> {
        (1..=n).map(|i| self.entry(i)).collect()
    }
}
