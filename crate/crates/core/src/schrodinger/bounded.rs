//! `-Δ + V` for bounded `V` of locally bounded variation: Halton quadrature,
//! the Gabor trial space, Gram matrices and the spectral towers built on them.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{GridSpec, PointCloud, TowerStage};
use crate::error::{Error, Result};
use crate::expr::{parse_expression, CompiledExpr};
use crate::numerics::{gram_above, quantize_least, ComplexMatrix, QuantizedValue, C64, DEFAULT_ETA};
use crate::operator::ResolventControl;
use crate::schrodinger::PotentialSpec;
use crate::spectral::upsilon_indices;
use crate::sublevel::{default_margin, Sublevel};

/// Radical inverse of `k` in base `b`.
pub fn radical_inverse(mut k: u64, b: u64) -> f64 {
    let mut inv = 1.0 / b as f64;
    let mut x = 0.0;
    while k > 0 {
        x += (k % b) as f64 * inv;
        k /= b;
        inv /= b as f64;
    }
    x
}

/// The `k`-th Halton point (`k >= 1`).
pub fn halton(k: u64, bases: &[u64]) -> Vec<f64> {
    bases.iter().map(|&b| radical_inverse(k, b)).collect()
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn validate_bases(bases: &[u64]) -> Result<()> {
    if bases.is_empty() {
        return Err(Error::Input("at least one Halton base is needed".into()));
    }
    for (i, &a) in bases.iter().enumerate() {
        if a < 2 {
            return Err(Error::Input(format!("Halton base {a} is below 2")));
        }
        for &b in &bases[i + 1..] {
            if gcd(a, b) != 1 {
                return Err(Error::Input(format!("Halton bases {a} and {b} are not coprime")));
            }
        }
    }
    Ok(())
}

/// First `d` primes, the default bases.
pub fn default_bases(d: usize) -> Vec<u64> {
    [2, 3, 5, 7, 11, 13][..d].to_vec()
}

/// Exact star discrepancy in one dimension.
pub fn star_discrepancy_1d(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in v.iter().enumerate() {
        d = d.max(((i + 1) as f64 / n - x).abs()).max((x - i as f64 / n).abs());
    }
    d
}

/// Exact star discrepancy in two dimensions by scanning the corner grid
/// spanned by the point coordinates and 1.
pub fn star_discrepancy_2d(pts: &[[f64; 2]]) -> f64 {
    let n = pts.len();
    if n == 0 {
        return 0.0;
    }
    let mut ys: Vec<f64> = pts.iter().map(|p| p[1]).collect();
    ys.push(1.0);
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let rank = |y: f64| ys.partition_point(|&v| v < y);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0]));
    let mut us: Vec<f64> = pts.iter().map(|p| p[0]).collect();
    us.push(1.0);
    us.sort_by(f64::total_cmp);
    us.dedup();
    let mut cnt = vec![0u32; ys.len()];
    let mut next = 0usize;
    let nf = n as f64;
    let mut best = 0.0f64;
    for &u in &us {
        // open in x: points with x < u
        while next < n && pts[order[next]][0] < u {
            cnt[rank(pts[order[next]][1])] += 1;
            next += 1;
        }
        let mut acc = 0u32;
        for (r, &v) in ys.iter().enumerate() {
            // acc = #{x < u, y < v}
            best = best.max(u * v - acc as f64 / nf);
            acc += cnt[r];
        }
        let mut closed = cnt.clone();
        let mut k = next;
        while k < n && pts[order[k]][0] <= u {
            closed[rank(pts[order[k]][1])] += 1;
            k += 1;
        }
        let mut acc = 0u32;
        for (r, &v) in ys.iter().enumerate() {
            acc += closed[r];
            // acc = #{x <= u, y <= v}
            best = best.max(acc as f64 / nf - u * v);
        }
    }
    best
}

/// The Halton discrepancy bound `d/N + (1/N) prod_k ((b_k-1)/(2 ln b_k) ln N + (b_k+1)/2)`.
pub fn halton_bound(bases: &[u64], n: u64) -> f64 {
    let nf = n as f64;
    let prod: f64 = bases
        .iter()
        .map(|&b| {
            let b = b as f64;
            (b - 1.0) / (2.0 * b.ln()) * nf.ln() + (b + 1.0) / 2.0
        })
        .product();
    bases.len() as f64 / nf + prod / nf
}

/// Upper bound for `C*`: twice the ceiling of the largest ratio
/// `halton_bound(N) / (ln(N)^d / N)` over `2 <= N <= 2^20`.
pub fn c_star(bases: &[u64]) -> Result<f64> {
    validate_bases(bases)?;
    let d = bases.len() as i32;
    let mut worst = 0.0f64;
    for n in 2..=(1u64 << 20) {
        let nf = n as f64;
        worst = worst.max(halton_bound(bases, n) * nf / nf.ln().powi(d));
    }
    Ok(2.0 * worst.ceil())
}

/// `d^s/dxi^s` of `xi -> ∫_l^{l+1} e^{2πi(k - xi)x} dx`.
pub fn gabor_hat_eval(k: i64, l: i64, s: u32, xi: f64) -> Result<C64> {
    if s > 3 {
        return Err(Error::Input(format!("derivative order {s} is above 3")));
    }
    let alpha = 2.0 * PI * (k as f64 - xi);
    let (a, b) = (l as f64, l as f64 + 1.0);
    let x_max = a.abs().max(b.abs());
    let i = C64::new(0.0, 1.0);
    let integral = if alpha.abs() * x_max <= 1.0 {
        // ∫ x^s e^{iαx} = Σ_r (iα)^r / r! ∫ x^{s+r}
        let mut sum = C64::new(0.0, 0.0);
        let mut coef = C64::new(1.0, 0.0);
        for r in 0..40u32 {
            let p = (s + r + 1) as i32;
            sum += coef * ((b.powi(p) - a.powi(p)) / p as f64);
            coef *= i * alpha / (r + 1) as f64;
        }
        sum
    } else {
        let ia = i * alpha;
        let (ea, eb) = ((ia * a).exp(), (ia * b).exp());
        let mut val = (eb - ea) / ia;
        for q in 1..=s {
            let qi = q as i32;
            val = (eb * b.powi(qi) - ea * a.powi(qi)) / ia - val * (q as f64) / ia;
        }
        val
    };
    Ok(integral * (C64::new(0.0, -2.0 * PI)).powu(s))
}

/// `∫_l^{l+1} |x|^s dx`.
fn abs_moment(l: i64, s: u32) -> f64 {
    let (a, b) = (l as f64, l as f64 + 1.0);
    let p = (s + 1) as i32;
    let prim = |x: f64| x.signum() * x.abs().powi(p) / p as f64;
    prim(b) - prim(a)
}

/// Envelope for `|gabor_hat_eval(k, l, s, xi)|`: `(2π)^s M_s(l)` when
/// `|xi - k| <= 1`, divided by `|xi - k| + 1` otherwise, with
/// `M_0 = 1`, `M_1 = |l + 1/2|`, `M_2 = l^2 + l + 1/3`, `M_3 = |(l+1)^4 - l^4| / 4`
/// for `l >= 0` (absolute moments in general).
pub fn gabor_envelope(k: i64, l: i64, s: u32, xi: f64) -> f64 {
    let lf = l as f64;
    let m = if l >= 0 {
        match s {
            0 => 1.0,
            1 => (lf + 0.5).abs(),
            2 => lf * lf + lf + 1.0 / 3.0,
            _ => ((lf + 1.0).powi(4) - lf.powi(4)).abs() / 4.0,
        }
    } else {
        abs_moment(l, s)
    };
    let base = (2.0 * PI).powi(s as i32) * m;
    let t = (xi - k as f64).abs();
    if t <= 1.0 {
        base
    } else {
        base / (t + 1.0)
    }
}

/// Enumeration `theta` of `Z^{2d}`: max-norm shells, lexicographic inside a
/// shell on `(k1, l1, k2, l2, ...)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaborIndexMap {
    pub dim: usize,
    /// `theta(1..=m)`, each entry a list of `d` pairs `(k_p, l_p)`.
    pub indices: Vec<Vec<(i64, i64)>>,
}

impl GaborIndexMap {
    pub fn new(dim: usize, m: usize) -> Result<Self> {
        if dim == 0 || m == 0 {
            return Err(Error::Input("index map needs d >= 1 and m >= 1".into()));
        }
        let len = 2 * dim;
        let mut out = Vec::with_capacity(m);
        let mut r = 0i64;
        while out.len() < m {
            let mut t = vec![-r; len];
            loop {
                if t.iter().any(|v| v.abs() == r) {
                    out.push((0..dim).map(|p| (t[2 * p], t[2 * p + 1])).collect());
                    if out.len() == m {
                        break;
                    }
                }
                // odometer increment, last coordinate fastest
                let mut q = len;
                loop {
                    if q == 0 {
                        break;
                    }
                    q -= 1;
                    if t[q] < r {
                        t[q] += 1;
                        for v in t.iter_mut().skip(q + 1) {
                            *v = -r;
                        }
                        break;
                    }
                    if q == 0 {
                        q = usize::MAX;
                        break;
                    }
                }
                if q == usize::MAX || (r == 0) {
                    break;
                }
            }
            r += 1;
        }
        Ok(Self { dim, indices: out })
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    /// `k~(m, d)`.
    pub fn k_max(&self) -> i64 {
        self.indices.iter().flatten().map(|p| p.0.abs()).max().unwrap_or(0)
    }

    /// `l~(m, d)`.
    pub fn l_max(&self) -> i64 {
        self.indices.iter().flatten().map(|p| p.1.abs()).max().unwrap_or(0)
    }
}

/// Constants and schedule of the bounded-variation error budget.
#[derive(Clone, Debug)]
pub struct BvBudget {
    pub dim: usize,
    pub bases: Vec<u64>,
    /// `phi(a)` bounding the total variation of `V` on `[-a, a]^d`.
    pub phi: CompiledExpr,
    pub c_star: f64,
}

impl BvBudget {
    pub fn new(phi: &str, bases: Vec<u64>) -> Result<Self> {
        let c_star = c_star(&bases)?;
        Ok(Self { dim: bases.len(), phi: parse_expression(phi)?.compile(&["a"])?, bases, c_star })
    }

    pub fn phi(&self, a: f64) -> Result<f64> {
        let v = self.phi.eval_real(&[a])?.re;
        if !(v >= 0.0) {
            return Err(Error::Eval(format!("phi({a}) = {v} is negative")));
        }
        Ok(v)
    }

    /// `3^d - 2^{d+1} + 2`.
    pub fn sigma(&self) -> f64 {
        sigma(self.dim)
    }

    /// `N(n) = ceil(n phi(n)^4)`.
    pub fn samples(&self, n: u64) -> Result<f64> {
        Ok((n as f64 * self.phi(n as f64)?.powi(4)).ceil())
    }

    pub fn c1(&self, theta: &GaborIndexMap, a: f64) -> f64 {
        c1(theta, self.dim, a)
    }

    pub fn c2(&self, theta: &GaborIndexMap) -> f64 {
        c2(theta, self.dim)
    }

    /// `tau~(m, n)`.
    pub fn tau(&self, theta: &GaborIndexMap, n: u64) -> Result<f64> {
        let m = theta.m() as f64;
        let d = self.dim as i32;
        let sg = self.sigma();
        let ph = self.phi(n as f64)?;
        let big_n = self.samples(n)?;
        let disc = if big_n >= 2.0 { big_n.ln().powi(d) / big_n } else { f64::INFINITY };
        Ok((m + 1.0) * m * self.c1(theta, n as f64)
            + (m * m + sg * sg * ph * ph + 2.0 * (sg * m + 1.0) * (ph + 1.0))
                * (1.0 + sg * sg + 2.0 * sg)
                * self.c2(theta)
                * self.c_star
                * disc)
    }

    /// Least `n` with `tau~(m, n) <= 1/m^3`. Values up to `k~ + 1` are
    /// scanned; beyond that `tau~` is decreasing and a galloping search is used.
    pub fn n_of_m(&self, theta: &GaborIndexMap) -> Result<u64> {
        let m = theta.m() as f64;
        let target = 1.0 / (m * m * m);
        let ok = |n: u64| -> Result<bool> { Ok(self.tau(theta, n)? <= target) };
        let head = theta.k_max() as u64 + 1;
        for n in 1..=head {
            if ok(n)? {
                return Ok(n);
            }
        }
        let (mut lo, mut hi) = (head, head * 2);
        while !ok(hi)? {
            lo = hi;
            hi *= 2;
            if hi > 1u64 << 50 {
                return Err(Error::Config("schedule n(m) exceeds 2^50".into()));
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

pub fn sigma(d: usize) -> f64 {
    3f64.powi(d as i32) - 2f64.powi(d as i32 + 1) + 2.0
}

/// `C_1(m, d, a) = d^2 (4 max(l~^2 + l~ + 1/3, 1)^2 / (|a - k~| + 1))^d`.
pub fn c1(theta: &GaborIndexMap, d: usize, a: f64) -> f64 {
    let (k, l) = (theta.k_max() as f64, theta.l_max() as f64);
    let top = (l * l + l + 1.0 / 3.0).max(1.0);
    (d * d) as f64 * (4.0 * top * top / ((a - k).abs() + 1.0)).powi(d as i32)
}

/// `C_2(m, d) = 2^d (2((l~+1)^4 + l~^4)^2 (2(k~+1) + 2))^d`.
pub fn c2(theta: &GaborIndexMap, d: usize) -> f64 {
    let (k, l) = (theta.k_max() as f64, theta.l_max() as f64);
    let q = (l + 1.0).powi(4) + l.powi(4);
    2f64.powi(d as i32) * (2.0 * q * q * (2.0 * (k + 1.0) + 2.0)).powi(d as i32)
}

/// Halton nodes rescaled to the box `[-a, a]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QmcPlan {
    pub bases: Vec<u64>,
    pub half_width: f64,
    pub nodes: usize,
}

const CHUNK: usize = 2048;

impl QmcPlan {
    pub fn new(bases: Vec<u64>, half_width: f64, nodes: usize) -> Result<Self> {
        validate_bases(&bases)?;
        if !(half_width > 0.0) || nodes == 0 {
            return Err(Error::Input("QMC plan needs a > 0 and N >= 1".into()));
        }
        Ok(Self { bases, half_width, nodes })
    }

    pub fn dim(&self) -> usize {
        self.bases.len()
    }

    /// `a(2 t_k - 1)` for `k = 1..=N`.
    pub fn point(&self, k: usize) -> Vec<f64> {
        halton(k as u64, &self.bases).into_iter().map(|t| self.half_width * (2.0 * t - 1.0)).collect()
    }

    pub fn weight(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim() as i32) / self.nodes as f64
    }

    /// Fixed chunks of node indices; reductions add chunk results in order.
    fn chunks(&self) -> Vec<(usize, usize)> {
        (0..self.nodes.div_ceil(CHUNK)).map(|c| (c * CHUNK + 1, ((c + 1) * CHUNK).min(self.nodes))).collect()
    }
}

/// `(2a)^d / N · Σ f(x_k) conj(g(x_k))` over the rescaled Halton nodes.
pub fn qmc_inner(
    f: impl Fn(&[f64]) -> Result<C64> + Sync,
    g: impl Fn(&[f64]) -> Result<C64> + Sync,
    plan: &QmcPlan,
) -> Result<C64> {
    let parts: Vec<Result<C64>> = plan
        .chunks()
        .par_iter()
        .map(|&(lo, hi)| {
            let mut s = C64::new(0.0, 0.0);
            for k in lo..=hi {
                let x = plan.point(k);
                s += f(&x)? * g(&x)?.conj();
            }
            Ok(s)
        })
        .collect();
    let mut total = C64::new(0.0, 0.0);
    for p in parts {
        total += p?;
    }
    Ok(total * plan.weight())
}

/// Per-node values of `phi_j`, `Δphi_j` and `V`.
struct NodeValues {
    phi: Vec<C64>,
    lap: Vec<C64>,
    v: C64,
}

fn node_values(theta: &GaborIndexMap, v: &PotentialSpec, x: &[f64]) -> Result<NodeValues> {
    let d = theta.dim;
    let m = theta.m();
    let mut phi = Vec::with_capacity(m);
    let mut lap = Vec::with_capacity(m);
    let mut h0 = vec![C64::new(0.0, 0.0); d];
    let mut h2 = vec![C64::new(0.0, 0.0); d];
    for idx in &theta.indices {
        for p in 0..d {
            let (k, l) = idx[p];
            h0[p] = gabor_hat_eval(k, l, 0, x[p])?;
            h2[p] = gabor_hat_eval(k, l, 2, x[p])?;
        }
        phi.push(h0.iter().product());
        let mut s = C64::new(0.0, 0.0);
        for p in 0..d {
            let mut t = h2[p];
            for q in 0..d {
                if q != p {
                    t *= h0[q];
                }
            }
            s += t;
        }
        lap.push(s);
    }
    Ok(NodeValues { phi, lap, v: v.eval(x)? })
}

/// `Σ_k a_j(x_k) conj(b_i(x_k))` stored at `(i, j)`.
fn accumulate(acc: &mut [C64], m: usize, a: &[C64], b: &[C64]) {
    for i in 0..m {
        let bi = b[i].conj();
        let row = &mut acc[i * m..(i + 1) * m];
        for j in 0..m {
            row[j] += a[j] * bi;
        }
    }
}

fn to_matrix(m: usize, data: Vec<C64>, w: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(m, m, |i, j| data[i * m + j] * w)
}

/// The Gram matrices behind `Z_m(z)` and its twin at one quadrature stage.
///
/// With `u_j = (-Δ + V) phi_j`, `u~_j = (-Δ + conj V) phi_j` and `w_j = phi_j`,
/// `Z(z) = G^{uu} - conj(z) G^{uw} - z G^{wu} + |z|^2 G^{ww}` where
/// `G^{ab}_{ij} = <a_j, b_i>_{a,N}`.
#[derive(Clone, Debug)]
pub struct ZStage {
    pub m: usize,
    pub plan: QmcPlan,
    pub guu: ComplexMatrix,
    pub guw: ComplexMatrix,
    pub gtt: ComplexMatrix,
    pub gtw: ComplexMatrix,
    pub gww: ComplexMatrix,
    /// `V` was real at every node, so the twin coincides with `Z`.
    pub real_potential: bool,
}

impl ZStage {
    pub fn assemble(v: &PotentialSpec, theta: &GaborIndexMap, plan: &QmcPlan) -> Result<Self> {
        if v.dim() != theta.dim || plan.dim() != theta.dim {
            return Err(Error::Dimension("potential, index map and plan disagree on d".into()));
        }
        let m = theta.m();
        type Acc = ([Vec<C64>; 5], bool);
        let parts: Vec<Result<Acc>> = plan
            .chunks()
            .par_iter()
            .map(|&(lo, hi)| {
                let mut acc: [Vec<C64>; 5] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); m * m]);
                let mut real = true;
                let mut u = vec![C64::new(0.0, 0.0); m];
                let mut t = vec![C64::new(0.0, 0.0); m];
                for k in lo..=hi {
                    let nv = node_values(theta, v, &plan.point(k))?;
                    real &= nv.v.im == 0.0;
                    for j in 0..m {
                        u[j] = -nv.lap[j] + nv.v * nv.phi[j];
                        t[j] = -nv.lap[j] + nv.v.conj() * nv.phi[j];
                    }
                    accumulate(&mut acc[0], m, &u, &u);
                    accumulate(&mut acc[1], m, &u, &nv.phi);
                    accumulate(&mut acc[2], m, &t, &t);
                    accumulate(&mut acc[3], m, &t, &nv.phi);
                    accumulate(&mut acc[4], m, &nv.phi, &nv.phi);
                }
                Ok((acc, real))
            })
            .collect();
        let mut total: [Vec<C64>; 5] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); m * m]);
        let mut real = true;
        for p in parts {
            let (acc, r) = p?;
            real &= r;
            for (tot, a) in total.iter_mut().zip(acc.iter()) {
                for (x, y) in tot.iter_mut().zip(a) {
                    *x += y;
                }
            }
        }
        let w = plan.weight();
        let [guu, guw, gtt, gtw, gww] = total;
        Ok(Self {
            m,
            plan: plan.clone(),
            guu: to_matrix(m, guu, w),
            guw: to_matrix(m, guw, w),
            gtt: to_matrix(m, gtt, w),
            gtw: to_matrix(m, gtw, w),
            gww: to_matrix(m, gww, w),
            real_potential: real,
        })
    }

    fn combine(g_aa: &ComplexMatrix, g_aw: &ComplexMatrix, gww: &ComplexMatrix, z: C64) -> ComplexMatrix {
        let m = g_aa.rows();
        let zc = z.conj();
        let z2 = z.norm_sqr();
        let mut out = ComplexMatrix::from_fn(m, m, |i, j| {
            g_aa[(i, j)] - zc * g_aw[(i, j)] - z * g_aw[(j, i)].conj() + gww[(i, j)] * z2
        });
        for i in 0..m {
            out[(i, i)].im = 0.0;
        }
        out
    }

    /// `Z_m(z)`.
    pub fn z(&self, z: C64) -> ComplexMatrix {
        Self::combine(&self.guu, &self.guw, &self.gww, z)
    }

    /// `Z~_m(z)`, built from `conj V` at `conj z`.
    pub fn z_twin(&self, z: C64) -> ComplexMatrix {
        Self::combine(&self.gtt, &self.gtw, &self.gww, z.conj())
    }

    /// `min(sigma_{1,n}(S_m), sigma_{1,n}(S~_m)) > eps`.
    pub fn above(&self, z: C64, eps: f64) -> bool {
        gram_above(&self.z(z), eps, DEFAULT_ETA) && (self.real_potential || gram_above(&self.z_twin(z), eps, DEFAULT_ETA))
    }

    /// `zeta_m(z)`: least `k/m` not below the two singular values.
    pub fn zeta(&self, z: C64) -> Result<QuantizedValue> {
        let m = self.m as u64;
        let scale = self.guu.frobenius_norm().sqrt() + z.norm() * self.lipschitz() + 1.0;
        let cap = (m as f64 * scale).ceil() as u64 + 1;
        quantize_least(m, cap, |eps| self.above(z, eps))
    }

    /// Lipschitz constant of `z -> sigma_{1,n}` (`sqrt ||G^{ww}||_F`).
    pub fn lipschitz(&self) -> f64 {
        self.gww.frobenius_norm().sqrt().max(1e-12)
    }

    /// `min(sigma_{1,n}, sigma~_{1,n})` by bisection; oracle use.
    pub fn sigma(&self, z: C64, tol: f64) -> f64 {
        let mut hi = 1.0;
        while self.above(z, hi) {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.above(z, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// The component integrals `<g Δ^s phi_j, Δ^t phi_i>_{a,N}`, `g in {1, V, conj V, |V|^2}`.
#[derive(Clone, Debug)]
pub struct ZComponents {
    /// `<Δphi_j, Δphi_i>`.
    pub dd: ComplexMatrix,
    /// `<V phi_j, Δphi_i>`.
    pub vd: ComplexMatrix,
    /// `<conj V Δphi_j, phi_i>`.
    pub dv: ComplexMatrix,
    /// `<|V|^2 phi_j, phi_i>`.
    pub vv: ComplexMatrix,
    /// `<Δphi_j, phi_i>`.
    pub d0: ComplexMatrix,
    /// `<phi_j, Δphi_i>`.
    pub d0t: ComplexMatrix,
    /// `<V phi_j, phi_i>`.
    pub v0: ComplexMatrix,
    /// `<conj V phi_j, phi_i>`.
    pub v0c: ComplexMatrix,
    /// `<phi_j, phi_i>`.
    pub ww: ComplexMatrix,
}

impl ZComponents {
    pub fn assemble(v: &PotentialSpec, theta: &GaborIndexMap, plan: &QmcPlan) -> Result<Self> {
        let m = theta.m();
        let mut acc: [Vec<C64>; 9] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); m * m]);
        let mut scaled = vec![C64::new(0.0, 0.0); m];
        for k in 1..=plan.nodes {
            let nv = node_values(theta, v, &plan.point(k))?;
            accumulate(&mut acc[0], m, &nv.lap, &nv.lap);
            for j in 0..m {
                scaled[j] = nv.v * nv.phi[j];
            }
            accumulate(&mut acc[1], m, &scaled, &nv.lap);
            accumulate(&mut acc[6], m, &scaled, &nv.phi);
            for j in 0..m {
                scaled[j] = nv.v.conj() * nv.lap[j];
            }
            accumulate(&mut acc[2], m, &scaled, &nv.phi);
            for j in 0..m {
                scaled[j] = nv.v.norm_sqr() * nv.phi[j];
            }
            accumulate(&mut acc[3], m, &scaled, &nv.phi);
            accumulate(&mut acc[4], m, &nv.lap, &nv.phi);
            accumulate(&mut acc[5], m, &nv.phi, &nv.lap);
            for j in 0..m {
                scaled[j] = nv.v.conj() * nv.phi[j];
            }
            accumulate(&mut acc[7], m, &scaled, &nv.phi);
            accumulate(&mut acc[8], m, &nv.phi, &nv.phi);
        }
        let w = plan.weight();
        let [dd, vd, dv, vv, d0, d0t, v0, v0c, ww] = acc.map(|a| to_matrix(m, a, w));
        Ok(Self { dd, vd, dv, vv, d0, d0t, v0, v0c, ww })
    }

    /// `Z_m(z)` expanded as a polynomial in `z` and `conj z`.
    pub fn z(&self, z: C64) -> ComplexMatrix {
        let m = self.ww.rows();
        ComplexMatrix::from_fn(m, m, |i, j| {
            let g0 = self.dd[(i, j)] - self.vd[(i, j)] - self.dv[(i, j)] + self.vv[(i, j)];
            let g1 = -self.d0[(i, j)] + self.v0[(i, j)];
            let g2 = -self.d0t[(i, j)] + self.v0c[(i, j)];
            g0 - z.conj() * g1 - z * g2 + self.ww[(i, j)] * z.norm_sqr()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleMode {
    /// Honour `n(m)` and `N(n)` exactly, failing when the node count is out of reach.
    Strict,
    /// Cap `n` and clamp `N` to a desk-scale window, flagging any change.
    Capped,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleCaps {
    pub n_cap: u64,
    pub nodes_min: usize,
    pub nodes_cap: usize,
    /// Largest node count strict mode accepts.
    pub strict_nodes_max: usize,
}

impl Default for ScheduleCaps {
    fn default() -> Self {
        Self { n_cap: 16, nodes_min: 4096, nodes_cap: 65_536, strict_nodes_max: 1 << 22 }
    }
}

/// Box half-width `n` and node count `N` actually used for a stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    pub n: u64,
    pub nodes: usize,
    pub flags: Vec<String>,
}

/// Resolves the quadrature stage `(n, N(n))` for a requested `n`.
pub fn stage_plan(budget: &BvBudget, n: u64, mode: ScheduleMode, caps: &ScheduleCaps) -> Result<StagePlan> {
    let mut flags = Vec::new();
    let want = budget.samples(n)?;
    match mode {
        ScheduleMode::Strict => {
            if !(want >= 1.0) || want > caps.strict_nodes_max as f64 {
                return Err(Error::Config(format!(
                    "the schedule needs N = {want:e} nodes at n = {n}, beyond the limit {}",
                    caps.strict_nodes_max
                )));
            }
            Ok(StagePlan { n, nodes: want as usize, flags })
        }
        ScheduleMode::Capped => {
            let n_used = n.min(caps.n_cap);
            if n_used < n {
                flags.push(format!("schedule truncated: n = {n} capped at {n_used}"));
            }
            let want = budget.samples(n_used)?;
            let nodes = want.clamp(caps.nodes_min as f64, caps.nodes_cap as f64) as usize;
            if nodes as f64 != want {
                flags.push(format!("node count {want} clamped to {nodes}"));
            }
            Ok(StagePlan { n: n_used, nodes, flags })
        }
    }
}

/// `n(m)` resolved under `mode`.
pub fn schedule_n_of_m(budget: &BvBudget, m: usize, mode: ScheduleMode, caps: &ScheduleCaps) -> Result<StagePlan> {
    let theta = GaborIndexMap::new(budget.dim, m)?;
    let n = match (budget.n_of_m(&theta), mode) {
        (Ok(n), _) => n,
        (Err(Error::Config(_)), ScheduleMode::Capped) => {
            let mut plan = stage_plan(budget, caps.n_cap, mode, caps)?;
            plan.flags.insert(0, format!("schedule truncated: n beyond 2^50 capped at {}", plan.n));
            return Ok(plan);
        }
        (Err(e), _) => return Err(e),
    };
    stage_plan(budget, n, mode, caps)
}

/// Bounded-potential problem data shared by the stage evaluators.
#[derive(Clone, Debug)]
pub struct BoundedProblem {
    pub potential: PotentialSpec,
    pub budget: BvBudget,
    pub mode: ScheduleMode,
    pub caps: ScheduleCaps,
}

impl BoundedProblem {
    pub fn new(potential: PotentialSpec, budget: BvBudget, mode: ScheduleMode) -> Result<Self> {
        if potential.dim() != budget.dim {
            return Err(Error::Dimension(format!(
                "potential has dimension {}, bases give {}",
                potential.dim(),
                budget.dim
            )));
        }
        Ok(Self { potential, budget, mode, caps: ScheduleCaps::default() })
    }

    /// Gram data for basis size `m` at quadrature stage `n`.
    pub fn stage(&self, m: usize, n: u64) -> Result<(ZStage, Vec<String>)> {
        self.stage_with(m, stage_plan(&self.budget, n, self.mode, &self.caps)?)
    }

    fn stage_with(&self, m: usize, plan: StagePlan) -> Result<(ZStage, Vec<String>)> {
        let theta = GaborIndexMap::new(self.budget.dim, m)?;
        let qmc = QmcPlan::new(self.budget.bases.clone(), plan.n as f64, plan.nodes)?;
        Ok((ZStage::assemble(&self.potential, &theta, &qmc)?, plan.flags))
    }

    /// Gram data for `zeta_m`, at stage `n(m)`.
    pub fn zeta_stage(&self, m: usize) -> Result<(ZStage, Vec<String>)> {
        self.stage_with(m, schedule_n_of_m(&self.budget, m, self.mode, &self.caps)?)
    }
}

pub fn zeta_m(problem: &BoundedProblem, z: C64, m: usize) -> Result<QuantizedValue> {
    problem.zeta_stage(m)?.0.zeta(z)
}

fn sublevel_of(zs: &ZStage, grid: GridSpec, thr: f64) -> Vec<(i64, i64)> {
    Sublevel {
        grid,
        threshold: thr,
        lipschitz: zs.lipschitz(),
        above: |z: C64, t: f64| zs.above(z, t),
        member: |z: C64| !zs.above(z, thr),
        exact: true,
        margin: default_margin(thr),
    }
    .run()
}

/// `Gamma_m(V) = Upsilon_{B_m(0)}^{1/m}(zeta_m)`.
pub fn spectrum_cr_stage(problem: &BoundedProblem, g: &ResolventControl, m: usize) -> Result<PointCloud> {
    let (zs, flags) = problem.zeta_stage(m)?;
    let den = m as u64;
    let grid = GridSpec::ball(m as f64 + 1.0 / m as f64, den);
    let cands = sublevel_of(&zs, grid, 1.0);
    let zeta = |a: i64, b: i64| -> Result<f64> { Ok(zs.zeta(grid.point(a, b))?.value()) };
    let idx = upsilon_indices(den, &cands, &zeta, g)?;
    let mut stage = TowerStage::new("schrodinger-bounded-cr", &[m as u64]).thresholds(&[1.0]).grid(grid);
    for f in flags {
        stage.flag(f);
    }
    PointCloud::new(stage, idx.into_iter().map(|(a, b)| grid.point(a, b)).collect())
}

fn vote(grid: GridSpec, n: usize, hits: impl Iterator<Item = (Vec<(i64, i64)>, Vec<(i64, i64)>)>) -> Vec<C64> {
    use std::collections::HashMap;
    let mut count: HashMap<(i64, i64), i64> = HashMap::new();
    for (s, t) in hits {
        for p in s.into_iter().chain(t) {
            *count.entry(p).or_default() += 1;
        }
    }
    count.into_iter().filter(|&(_, c)| c - n as i64 > 0).map(|(p, _)| grid.point(p.0, p.1)).collect()
}

/// Height-two spectrum stage on `G_m = 4^{-m}(Z + iZ) ∩ B_m(0)`: counts
/// `i in (m, n]` with `zeta_i(lambda) <= 1/m` and `<= 1/(m+1)`.
pub fn spectrum_stage_h2(problem: &BoundedProblem, m: usize, n: usize) -> Result<PointCloud> {
    if n <= m || m == 0 {
        return Err(Error::Input(format!("height-two stage needs n > m >= 1, got m = {m}, n = {n}")));
    }
    if m > 5 {
        return Err(Error::Input("the 4^-m grid is limited to m <= 5".into()));
    }
    let grid = GridSpec::ball(m as f64, 4u64.pow(m as u32));
    let mut stage = TowerStage::new("schrodinger-bounded-spectrum-h2", &[m as u64, n as u64])
        .thresholds(&[1.0 / m as f64, 1.0 / (m as f64 + 1.0)])
        .grid(grid);
    let mut hits = Vec::new();
    for i in m + 1..=n {
        let (zs, flags) = problem.zeta_stage(i)?;
        for f in flags {
            stage.flag(f);
        }
        // zeta_i <= 1/q  <=>  sigma <= floor(i/q)/i
        let ts = (i / m) as f64 / i as f64;
        let tt = (i / (m + 1)) as f64 / i as f64;
        let s = sublevel_of(&zs, grid, ts);
        let t: Vec<(i64, i64)> = s.iter().copied().filter(|&(a, b)| !zs.above(grid.point(a, b), tt)).collect();
        hits.push((s, t));
    }
    PointCloud::new(stage, vote(grid, n, hits.into_iter()))
}

/// Height-two pseudospectrum stage on `(1/m)(Z + iZ) ∩ B_m(0)` with the
/// thresholds `eps - 1/m` and `1/((eps - 1/m)^{-1} + 1/m)`.
pub fn pseudospectrum_stage_h2(problem: &BoundedProblem, eps: f64, m: usize, n: usize) -> Result<PointCloud> {
    if n <= m || m == 0 {
        return Err(Error::Input(format!("height-two stage needs n > m >= 1, got m = {m}, n = {n}")));
    }
    let mf = m as f64;
    if !(eps > 1.0 / mf) {
        return Err(Error::Input(format!("eps = {eps} must exceed 1/m = {}", 1.0 / mf)));
    }
    let ts = eps - 1.0 / mf;
    let tt = 1.0 / (1.0 / ts + 1.0 / mf);
    let grid = GridSpec::ball(mf, m as u64);
    let mut stage = TowerStage::new("schrodinger-bounded-pseudospectrum-h2", &[m as u64, n as u64])
        .thresholds(&[ts, tt])
        .grid(grid);
    let mut hits = Vec::new();
    for i in m + 1..=n {
        let (zs, flags) = problem.stage(m, i as u64)?;
        for f in flags {
            stage.flag(f);
        }
        let s = sublevel_of(&zs, grid, ts);
        let t: Vec<(i64, i64)> = s.iter().copied().filter(|&(a, b)| !zs.above(grid.point(a, b), tt)).collect();
        hits.push((s, t));
    }
    PointCloud::new(stage, vote(grid, n, hits.into_iter()))
}
