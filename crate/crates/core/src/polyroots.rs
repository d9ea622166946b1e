//! Newton-based root towers: a height-one tower from starting sets, the root
//! proximity certificate, and the height-three quartic tower.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::{PointCloud, TowerStage};
use crate::error::{Error, Result};
use crate::numerics::{C64, DEFAULT_ETA};

/// `c_0 + c_1 X + ... + c_d X^d` with `c_d != 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<C64>,
}

impl Polynomial {
    /// Coefficients in ascending order. Trailing zeros are rejected rather
    /// than trimmed so the stated degree is never silently lowered.
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::Input("polynomial degree must be at least 1".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Input("non-finite coefficient".into()));
        }
        if coeffs.last().unwrap().norm() <= DEFAULT_ETA {
            return Err(Error::Input("leading coefficient vanishes".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[C64]) -> Result<Self> {
        let mut c = vec![C64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
            for (i, &ci) in c.iter().enumerate() {
                next[i + 1] += ci;
                next[i] -= r * ci;
            }
            c = next;
        }
        Self::new(c)
    }

    /// Comma-separated complex literals such as `1, -2+0.5i, i`, lowest degree first.
    pub fn parse(src: &str) -> Result<Self> {
        Self::new(src.split(',').map(parse_complex).collect::<Result<Vec<_>>>()?)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `(p(z), p'(z))` by Horner.
    pub fn eval_with_derivative(&self, z: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn monic(&self) -> Self {
        let lead = *self.coeffs.last().unwrap();
        Self { coeffs: self.coeffs.iter().map(|&c| c / lead).collect() }
    }

    /// `1 + max |c_i / c_d|`.
    pub fn cauchy_bound(&self) -> f64 {
        let lead = self.coeffs.last().unwrap().norm();
        1.0 + self.coeffs[..self.degree()].iter().map(|c| c.norm() / lead).fold(0.0, f64::max)
    }

    /// Fujiwara's bound `2 max(|c_{d-1}/c_d|, |c_{d-2}/c_d|^{1/2}, ..., |c_0/(2 c_d)|^{1/d})`.
    pub fn fujiwara_bound(&self) -> f64 {
        let d = self.degree();
        let lead = self.coeffs[d].norm();
        let mut best = 0.0f64;
        for k in 1..=d {
            let mut c = self.coeffs[d - k].norm() / lead;
            if k == d {
                c /= 2.0;
            }
            best = best.max(c.powf(1.0 / k as f64));
        }
        2.0 * best
    }

    /// The smaller of the Cauchy and Fujiwara bounds, kept away from 0.
    pub fn root_bound(&self) -> f64 {
        self.cauchy_bound().min(self.fujiwara_bound()).max(1e-3)
    }
}

/// Parses `3`, `-2.5`, `i`, `-i`, `1+2i`, `0.5-1e-3i`, `4i`.
pub fn parse_complex(src: &str) -> Result<C64> {
    let s: String = src.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Input(format!("cannot parse complex literal {src:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    let imag_part = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| bad()),
        }
    };
    if let Some(body) = s.strip_suffix('i') {
        // split at the last sign that is not the leading one or an exponent sign
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        match split {
            Some(k) => {
                let re = body[..k].parse::<f64>().map_err(|_| bad())?;
                Ok(C64::new(re, imag_part(&body[k..])?))
            }
            None => Ok(C64::new(0.0, imag_part(body)?)),
        }
    } else {
        Ok(C64::new(s.parse::<f64>().map_err(|_| bad())?, 0.0))
    }
}

/// `z - p(z)/p'(z)`.
pub fn newton_step(p: &Polynomial, z: C64) -> Result<C64> {
    let (v, dv) = p.eval_with_derivative(z);
    if dv.norm() <= DEFAULT_ETA {
        return Err(Error::CriticalPoint { re: z.re, im: z.im });
    }
    Ok(z - v / dv)
}

/// True iff `|z_n - z_next| < eps / d`, which places a root within `eps` of `z_n`.
pub fn root_certificate(p: &Polynomial, z_n: C64, z_next: C64, eps: f64) -> bool {
    (z_n - z_next).norm() < eps / p.degree() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartingMode {
    /// `ceil(ln d) + 1` circles of `ceil(4d(1 + ln d))` points each.
    Dense,
    /// At most `max(ceil(1.11 d ln^2 d), 2)` points on circles with the
    /// Hubbard–Schleicher–Sutherland radii.
    HssStrict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartingSet {
    pub points: Vec<C64>,
    pub degree: usize,
    pub radius: f64,
    pub mode: StartingMode,
}

pub fn hss_budget(d: usize) -> usize {
    let l = (d as f64).ln();
    ((1.11 * d as f64 * l * l).ceil() as usize).max(2)
}

/// Deterministic starting points for Newton's method, all outside the disc
/// of radius `r` that holds the roots and inside `2r`.
pub fn starting_set(d: usize, r: f64, mode: StartingMode) -> Result<StartingSet> {
    if d < 1 {
        return Err(Error::Input("degree must be at least 1".into()));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Input(format!("root bound must be positive, got {r}")));
    }
    let l = (d as f64).ln();
    // a small irrational twist keeps points off the symmetry axes of real polynomials
    let twist = 0.1 * std::f64::consts::SQRT_2;
    let mut points = Vec::new();
    match mode {
        StartingMode::Dense => {
            let s = l.ceil() as usize + 1;
            let per = (4.0 * d as f64 * (1.0 + l)).ceil() as usize;
            for nu in 0..s {
                let rad = 1.1 * r * (1.0 + 0.5 * nu as f64 / s as f64);
                let off = if nu % 2 == 1 { 0.5 } else { 0.0 };
                for k in 0..per {
                    let th = 2.0 * PI * (k as f64 + off) / per as f64 + twist;
                    points.push(C64::from_polar(rad, th));
                }
            }
        }
        StartingMode::HssStrict => {
            let budget = hss_budget(d);
            let s = ((0.26632 * l).ceil() as usize).max(1);
            let per = (budget / s).max(1);
            let q = if d > 1 { (d as f64 - 1.0) / d as f64 } else { 1.0 };
            for nu in 1..=s {
                // HSS radii are stated for roots in the unit disc; scale by r
                let rad = (1.0 + std::f64::consts::SQRT_2) * r * q.powf((2.0 * nu as f64 - 1.0) / (4.0 * s as f64));
                let rad = rad.min(1.99 * r);
                let off = if nu % 2 == 0 { 0.5 } else { 0.0 };
                for k in 0..per {
                    let th = 2.0 * PI * (k as f64 + off) / per as f64 + twist;
                    points.push(C64::from_polar(rad, th));
                }
            }
        }
    }
    Ok(StartingSet { points, degree: d, radius: r, mode })
}

enum Orbit {
    Done { z_n: C64, z_next: C64 },
    Critical,
    Divergent,
}

fn orbit(p: &Polynomial, s: C64, n: usize, cutoff: f64) -> Orbit {
    let mut prev2: Option<C64> = None;
    let mut prev = s;
    let mut k = 0usize;
    // invariant: prev = s_k
    while k < n {
        let next = match newton_step(p, prev) {
            Ok(z) => z,
            Err(_) => return Orbit::Critical,
        };
        if !(next.norm() <= cutoff) {
            return Orbit::Divergent;
        }
        if next == prev {
            return Orbit::Done { z_n: prev, z_next: prev };
        }
        if prev2 == Some(next) {
            // exact 2-cycle s_{k-1} = s_{k+1}; s_n and s_{n+1} follow from parity
            let (a, b) = (prev, next);
            return if (n - k) % 2 == 0 { Orbit::Done { z_n: a, z_next: b } } else { Orbit::Done { z_n: b, z_next: a } };
        }
        prev2 = Some(prev);
        prev = next;
        k += 1;
    }
    match newton_step(p, prev) {
        Ok(z) if z.norm() <= cutoff => Orbit::Done { z_n: prev, z_next: z },
        Ok(_) => Orbit::Divergent,
        Err(_) => Orbit::Critical,
    }
}

/// `Gamma_n(p) = {s_n : s in S_d, |s_n - s_{n+1}| < 1/sqrt(n)}`.
pub fn roots_stage(p: &Polynomial, n: usize) -> Result<PointCloud> {
    roots_stage_with(p, n, StartingMode::Dense)
}

pub fn roots_stage_with(p: &Polynomial, n: usize, mode: StartingMode) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::Input("iteration count must be at least 1".into()));
    }
    let r = p.root_bound();
    let set = starting_set(p.degree(), r, mode)?;
    let thr = 1.0 / (n as f64).sqrt();
    let (mut critical, mut divergent) = (0usize, 0usize);
    let mut pts = Vec::new();
    for &s in &set.points {
        match orbit(p, s, n, 10.0 * r) {
            Orbit::Done { z_n, z_next } => {
                if (z_n - z_next).norm() < thr {
                    pts.push(z_n);
                }
            }
            Orbit::Critical => critical += 1,
            Orbit::Divergent => divergent += 1,
        }
    }
    let mut stage = TowerStage::new("roots", &[n as u64]).thresholds(&[thr]);
    if critical > 0 {
        stage.flag(format!("{critical} orbits hit a critical point"));
    }
    if divergent > 0 {
        stage.flag(format!("{divergent} orbits left the disc of radius {}", 10.0 * r));
    }
    if pts.is_empty() {
        stage.flag("no orbit passed the filter");
    }
    PointCloud::new(stage, pts)
}

/// Starting data `(w0, v0, y0)` for the quartic tower.
pub const QUARTIC_DEFAULT_D0: [C64; 3] = [C64::new(0.4, 0.3), C64::new(1.1, -0.2), C64::new(0.7, 0.9)];

fn tiny(z: C64, scale: f64) -> bool {
    !(z.norm() > 1e-10 * scale) || !z.is_finite()
}

/// `x_{n3, n2, n1}` for a degree-four `p` and starting triple `d0`.
pub fn quartic_tower_stage(p: &Polynomial, d0: [C64; 3], n3: usize, n2: usize, n1: usize) -> Result<C64> {
    if p.degree() != 4 {
        return Err(Error::Input(format!("quartic tower needs degree 4, got {}", p.degree())));
    }
    let c = p.monic();
    let a = c.coeffs();
    let (a1, a2, a3, a4) = (a[3], a[2], a[1], a[0]);
    // depressed quartic Y^4 + b2 Y^2 + b3 Y + b4 with Y = X + a1/4
    let h = a1 / 4.0;
    let b2 = a2 - 6.0 * h * h;
    let b3 = a3 - 2.0 * a2 * h + 8.0 * h * h * h;
    let b4 = a4 - a3 * h + a2 * h * h - 3.0 * h * h * h * h;
    // resolvent 4(2z - b2)(z^2 - b4) - b3^2, monic: z^3 + A z^2 + B z + C
    let ca = -b2 / 2.0;
    let cb = -b4;
    let cc = b2 * b4 / 2.0 - b3 * b3 / 8.0;
    // z = W - A/3 = W + b2/6 gives W^3 + c2 W + c3
    let c2 = cb - ca * ca / 3.0;
    let c3 = 2.0 * ca * ca * ca / 27.0 - ca * cb / 3.0 + cc;
    let scale = 1.0 + b2.norm() + b3.norm() + b4.norm();

    let mut w = d0[0];
    for _ in 0..n1 {
        let s = w * w * w + c2 * w + c3;
        let ds = 3.0 * w * w + c2;
        let q = 3.0 * c2 * w * w + 9.0 * c3 * w - c2 * c2;
        let dq = 6.0 * c2 * w + 9.0 * c3;
        // Newton on t = s/q: w - s q / (s' q - s q')
        let den = ds * q - s * dq;
        if s == C64::new(0.0, 0.0) {
            break;
        }
        if tiny(den, scale * scale * scale) {
            return Err(Error::Degenerate("resolvent stage"));
        }
        w -= s * q / den;
        if !w.is_finite() {
            return Err(Error::Degenerate("resolvent stage"));
        }
    }
    let z = w + b2 / 6.0;

    let target = 2.0 * z - b2;
    let shift = if b3 == C64::new(0.0, 0.0) {
        if tiny(target, scale) {
            return Err(Error::Degenerate("square-root stage"));
        }
        C64::new(0.0, 0.0)
    } else {
        if tiny(target, scale) {
            return Err(Error::Degenerate("square-root stage"));
        }
        b3 / (2.0 * target)
    };
    let mut v = d0[1];
    for _ in 0..n2 {
        if tiny(v, 1.0) {
            return Err(Error::Degenerate("square-root stage"));
        }
        v -= (v * v - target) / (2.0 * v);
    }

    let mut y = d0[2];
    for _ in 0..n3 {
        let q = y * y + z - v * (y - shift);
        let dq = 2.0 * y - v;
        if q == C64::new(0.0, 0.0) {
            break;
        }
        if tiny(dq, 1.0) {
            return Err(Error::Degenerate("factor stage"));
        }
        y -= q / dq;
    }
    let x = y - h;
    if !x.is_finite() {
        return Err(Error::Degenerate("factor stage"));
    }
    Ok(x)
}

/// Outcome of [`quartic_tower`]: the value and the starting triple that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuarticResult {
    pub root: C64,
    pub d0: [C64; 3],
    pub retries: usize,
}

/// [`quartic_tower_stage`] from the default triple, retrying with seeded
/// pseudo-random triples on breakdown.
pub fn quartic_tower(p: &Polynomial, n3: usize, n2: usize, n1: usize, seed: u64, max_retries: usize) -> Result<QuarticResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d0 = QUARTIC_DEFAULT_D0;
    let mut last = None;
    for retries in 0..=max_retries {
        match quartic_tower_stage(p, d0, n3, n2, n1) {
            Ok(root) => return Ok(QuarticResult { root, d0, retries }),
            Err(e @ Error::Degenerate(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
        for z in d0.iter_mut() {
            *z = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        }
    }
    Err(last.unwrap_or(Error::Degenerate("quartic tower")))
}
