//! Grid towers for spectra, pseudospectra and essential spectra of bounded operators.

use std::collections::HashMap;

use crate::cloud::{GridSpec, PointCloud, TowerStage};
use crate::error::{Error, Result};
use crate::numerics::{gram, gram_above, matpow_apply, quantize_least, ComplexMatrix, QuantizedValue, ShiftedGram, C64, DEFAULT_ETA};
use crate::operator::{h_delta_steps, LazyOperator, ResolventControl, H_DELTA_K_MAX};
use crate::sublevel::{default_margin, Sublevel};

/// The section `P_rows (A - zI) Q_offset P_(offset+cols)` and its adjoint twin
/// `P_rows (A* - conj(z) I) Q_offset P_(offset+cols)`, ready for repeated
/// evaluation at many `z`.
#[derive(Clone, Debug)]
pub struct SectionPair {
    main: ShiftedGram,
    /// `None` when the twin has the same singular values (real symmetric data).
    twin: Option<ShiftedGram>,
    eta: f64,
}

impl SectionPair {
    pub fn new(op: &LazyOperator, rows: usize, cols: usize, col_offset: usize) -> Result<Self> {
        Self::with_eta(op, rows, cols, col_offset, DEFAULT_ETA)
    }

    pub fn with_eta(op: &LazyOperator, rows: usize, cols: usize, col_offset: usize, eta: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Input("empty section".into()));
        }
        let b0 = op.block(0, rows, col_offset, cols, false)?;
        let b1 = op.block(0, rows, col_offset, cols, true)?;
        let twin = if b0 == b1 && b0.data().iter().all(|z| z.im == 0.0) {
            None
        } else {
            Some(ShiftedGram::new(&b1, col_offset))
        };
        Ok(Self { main: ShiftedGram::new(&b0, col_offset), twin, eta })
    }

    /// Decides `min(sigma_1(B(z)), sigma_1(B~(z))) > t`.
    pub fn above(&self, z: C64, t: f64) -> bool {
        self.main.above(z, t, self.eta) && self.twin.as_ref().map_or(true, |tw| tw.above(z.conj(), t, self.eta))
    }

    pub fn quantized(&self, z: C64, m: u64) -> Result<QuantizedValue> {
        let cap = (m as f64 * (self.main.frobenius0() + z.norm() * (self.main.dim() as f64).sqrt() + 1.0)).ceil() as u64 + 1;
        quantize_least(m, cap, |eps| self.above(z, eps))
    }

    /// `min(sigma_1, sigma_1~)` by bisection; diagnostics and oracles only.
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

/// `zeta_{m,n}(z)`: least `k/m` above `gamma_{m,n}(z)`.
pub fn zeta_mn(op: &LazyOperator, z: C64, m: usize, n: usize) -> Result<QuantizedValue> {
    if n < m || m == 0 {
        return Err(Error::Input(format!("zeta_mn needs n >= m >= 1, got m = {m}, n = {n}")));
    }
    SectionPair::new(op, n, m, 0)?.quantized(z, m as u64)
}

fn sublevel_points(grid: GridSpec, thr: f64, pair: &SectionPair) -> Vec<(i64, i64)> {
    Sublevel {
        grid,
        threshold: thr,
        lipschitz: 1.0,
        above: |z: C64, t: f64| pair.above(z, t),
        member: |z: C64| !pair.above(z, thr),
        exact: true,
        margin: default_margin(thr),
    }
    .run()
}

enum Memo {
    Dense { a0: i64, b0: i64, w: i64, vals: Vec<f64> },
    Sparse(HashMap<(i64, i64), f64>),
}

impl Memo {
    fn get_or(&mut self, a: i64, b: i64, f: &dyn Fn(i64, i64) -> Result<f64>) -> Result<f64> {
        match self {
            Memo::Dense { a0, b0, w, vals } => {
                let idx = ((a - *a0) * *w + (b - *b0)) as usize;
                let v = vals[idx];
                if v.is_nan() {
                    let v = f(a, b)?;
                    vals[idx] = v;
                    Ok(v)
                } else {
                    Ok(v)
                }
            }
            Memo::Sparse(map) => {
                if let Some(&v) = map.get(&(a, b)) {
                    return Ok(v);
                }
                let v = f(a, b)?;
                map.insert((a, b), v);
                Ok(v)
            }
        }
    }
}

/// The grid selection step: for every candidate `z` with `zeta(z) <= 1`, keep
/// all minimizers of `zeta` over the lattice ball of radius `h_delta(zeta(z))`
/// around `z`. Lattice coordinates are integers over `den`; `delta = 1/den`.
pub fn upsilon_indices(
    den: u64,
    candidates: &[(i64, i64)],
    zeta: &dyn Fn(i64, i64) -> Result<f64>,
    g: &ResolventControl,
) -> Result<Vec<(i64, i64)>> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let rmax = h_delta_steps(g, 1.0, den, H_DELTA_K_MAX)? as i64;
    let (mut amin, mut amax, mut bmin, mut bmax) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    for &(a, b) in candidates {
        amin = amin.min(a);
        amax = amax.max(a);
        bmin = bmin.min(b);
        bmax = bmax.max(b);
    }
    let (a0, b0) = (amin - rmax, bmin - rmax);
    let (ha, wb) = (amax + rmax - a0 + 1, bmax + rmax - b0 + 1);
    let mut memo = if ha.saturating_mul(wb) <= 40_000_000 {
        Memo::Dense { a0, b0, w: wb, vals: vec![f64::NAN; (ha * wb) as usize] }
    } else {
        Memo::Sparse(HashMap::new())
    };
    let mut radius_cache: HashMap<u64, i64> = HashMap::new();
    let mut out = Vec::new();
    let mut mins = Vec::new();
    for &(a, b) in candidates {
        let y = memo.get_or(a, b, zeta)?;
        if y > 1.0 {
            continue;
        }
        let r = match radius_cache.get(&y.to_bits()) {
            Some(&r) => r,
            None => {
                let r = h_delta_steps(g, y, den, H_DELTA_K_MAX)? as i64;
                radius_cache.insert(y.to_bits(), r);
                r
            }
        };
        let mut best = f64::INFINITY;
        mins.clear();
        for da in -r..=r {
            let span = ((r * r - da * da) as f64).sqrt().floor() as i64;
            for db in -span..=span {
                let v = memo.get_or(a + da, b + db, zeta)?;
                if v < best {
                    best = v;
                    mins.clear();
                }
                if v == best {
                    mins.push((a + da, b + db));
                }
            }
        }
        out.extend_from_slice(&mins);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// `Upsilon_K^delta(zeta)` over an explicit grid, evaluating `zeta` at every grid point.
pub fn upsilon(grid: GridSpec, zeta: impl Fn(C64) -> Result<f64>, g: &ResolventControl) -> Result<Vec<C64>> {
    let zeta_idx = |a: i64, b: i64| zeta(grid.point(a, b));
    let r = grid.index_radius();
    let mut cands = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            if grid.contains_index(a, b) && zeta_idx(a, b)? <= 1.0 {
                cands.push((a, b));
            }
        }
    }
    let idx = upsilon_indices(grid.denominator, &cands, &zeta_idx, g)?;
    Ok(idx.into_iter().map(|(a, b)| grid.point(a, b)).collect())
}

fn radius_flag(stage: &mut TowerStage, op: &LazyOperator, m: usize) {
    if let Some(norm) = op.norm_bound {
        if (m as f64) < 2.0 * norm + 4.0 {
            stage.flag(format!("grid radius {m} below 2*||A||+4 = {}", 2.0 * norm + 4.0));
        }
    }
}

/// `Gamma_{m,n}(A) = Upsilon_{B_m(0)}^{1/m}(zeta_{m,n})`.
pub fn spectrum_cr_stage(op: &LazyOperator, m: usize, n: usize) -> Result<PointCloud> {
    let g = op.require_resolvent_control()?;
    if n < m || m == 0 {
        return Err(Error::Input(format!("spectrum stage needs n >= m >= 1, got m = {m}, n = {n}")));
    }
    let pair = SectionPair::new(op, n, m, 0)?;
    let den = m as u64;
    let grid = GridSpec::ball(m as f64 + 1.0 / m as f64, den);
    let cands = sublevel_points(grid, 1.0, &pair);
    let zeta = |a: i64, b: i64| -> Result<f64> { Ok(pair.quantized(grid.point(a, b), den)?.value()) };
    let idx = upsilon_indices(den, &cands, &zeta, g)?;
    let mut stage = TowerStage::new("spectrum-cr", &[m as u64, n as u64]).thresholds(&[1.0]).grid(grid);
    radius_flag(&mut stage, op, m);
    PointCloud::new(stage, idx.into_iter().map(|(a, b)| grid.point(a, b)).collect())
}

/// Height-one variant with `n = f(m)`.
pub fn spectrum_cr_dispersion_stage(op: &LazyOperator, m: usize) -> Result<PointCloud> {
    let n = op.require_dispersion()?.apply(m)?;
    let mut pc = spectrum_cr_stage(op, m, n)?;
    pc.stage.tower = "spectrum-cr-dispersion".into();
    pc.stage.indices = vec![m as u64];
    Ok(pc)
}

/// `gamma^N_{m,n}(z) <= eps` tested without roots: `sigma_1(C^(2^N) P_m) <= eps^(2^N)`
/// for `C = P_n (A - z) P_n` and its adjoint.
struct PowerTest {
    base: ComplexMatrix,
    base_adj: ComplexMatrix,
    m: usize,
    power: u32,
    eta: f64,
}

impl PowerTest {
    fn member(&self, z: C64, eps: f64) -> bool {
        let s = ComplexMatrix::from_fn(self.base.rows(), self.m, |i, j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
        let t = eps.powi(1 << self.power);
        let c = self.base.minus_shift(z);
        let p = matpow_apply(&c, self.power, &s).expect("square by construction");
        if !gram_above(&gram(&p), t, self.eta) {
            return true;
        }
        let c = self.base_adj.minus_shift(z.conj());
        let p = matpow_apply(&c, self.power, &s).expect("square by construction");
        !gram_above(&gram(&p), t, self.eta)
    }
}

/// `{z in G_m : gamma^N_{m,n}(z) <= eps}` with `G_m = (1/m)(Z + iZ) ∩ B_m(0)`.
pub fn pseudospectrum_stage(op: &LazyOperator, power: u32, eps: f64, m: usize, n: usize) -> Result<PointCloud> {
    if n < m || m == 0 {
        return Err(Error::Input(format!("pseudospectrum stage needs n >= m >= 1, got m = {m}, n = {n}")));
    }
    if !(eps > 0.0) {
        return Err(Error::Input("eps must be positive".into()));
    }
    let grid = GridSpec::ball(m as f64, m as u64);
    let mut stage = TowerStage::new("pseudospectrum", &[m as u64, n as u64]).thresholds(&[eps]).grid(grid);
    if power >= 4 {
        stage.flag("repeated squaring with N >= 4 may overflow");
    }
    let idx = if power == 0 {
        let pair = SectionPair::new(op, n, m, 0)?;
        sublevel_points(grid, eps, &pair)
    } else {
        let square = SectionPair::new(op, n, n, 0)?;
        let test = PowerTest {
            base: op.finite_section(n, n)?,
            base_adj: op.adjoint_section(n, n)?,
            m,
            power,
            eta: DEFAULT_ETA,
        };
        Sublevel {
            grid,
            threshold: eps,
            lipschitz: 1.0,
            above: |z: C64, t: f64| square.above(z, t),
            member: |z: C64| test.member(z, eps),
            exact: false,
            margin: default_margin(eps),
        }
        .run()
    };
    PointCloud::new(stage, idx.into_iter().map(|(a, b)| grid.point(a, b)).collect())
}

/// `pseudospectrum_stage` with `eps = 1/k`.
pub fn spectrum_general_stage(op: &LazyOperator, power: u32, k: usize, m: usize, n: usize) -> Result<PointCloud> {
    let mut pc = pseudospectrum_stage(op, power, 1.0 / k as f64, m, n)?;
    pc.stage.tower = "spectrum-general".into();
    pc.stage.indices = vec![k as u64, m as u64, n as u64];
    Ok(pc)
}

/// Height-one pseudospectrum with `n = f∘...∘f(m)` (`2^N` copies).
pub fn pseudospectrum_dispersion_stage(op: &LazyOperator, power: u32, eps: f64, m: usize) -> Result<PointCloud> {
    let n = op.require_dispersion()?.iterate(m, 1 << power)?;
    let mut pc = pseudospectrum_stage(op, power, eps, m, n)?;
    pc.stage.tower = "pseudospectrum-dispersion".into();
    pc.stage.indices = vec![m as u64];
    Ok(pc)
}

/// `{z in G_n : sigma_1(P_n (K - z) P_n) <= 1/n}` for compact `K`.
pub fn spectrum_compact_stage(op: &LazyOperator, n: usize) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::Input("n must be at least 1".into()));
    }
    let grid = GridSpec::ball(n as f64, n as u64);
    let pair = SectionPair::new(op, n, n, 0)?;
    let idx = sublevel_points(grid, 1.0 / n as f64, &pair);
    let stage = TowerStage::new("spectrum-compact", &[n as u64]).thresholds(&[1.0 / n as f64]).grid(grid);
    PointCloud::new(stage, idx.into_iter().map(|(a, b)| grid.point(a, b)).collect())
}

/// Default cap on the dyadic level of the essential-spectrum grids.
pub const ESSENTIAL_LEVEL_CAP: u32 = 6;

fn essential_grid(n: usize, level_cap: u32) -> (GridSpec, u32) {
    let level = (n as u32).min(level_cap);
    let d = 1u64 << level;
    (GridSpec::square(d as f64, d), level)
}

fn essential_pair(op: &LazyOperator, m: usize, n: usize, k: usize) -> Result<SectionPair> {
    if !(k >= n && n > m && m >= 1) {
        return Err(Error::Input(format!("essential stage needs k >= n > m >= 1, got ({m}, {n}, {k})")));
    }
    SectionPair::new(op, k, n - m, m)
}

/// `Gamma_{m,n,k}(A) = {lambda in G_n : mu_{m,n,k}(lambda) <= 1/m}`, where `mu`
/// is the smaller singular value of `P_k (A - lambda) Q_m P_n` and its adjoint twin.
pub fn essential_general_stage(op: &LazyOperator, m: usize, n: usize, k: usize, level_cap: u32) -> Result<PointCloud> {
    let pair = essential_pair(op, m, n, k)?;
    let (grid, level) = essential_grid(n, level_cap);
    let thr = 1.0 / m as f64;
    let idx = sublevel_points(grid, thr, &pair);
    let mut stage = TowerStage::new("essential-general", &[m as u64, n as u64, k as u64]).thresholds(&[thr]).grid(grid);
    if (level as usize) < n {
        stage.flag(format!("grid level capped at {level}"));
    }
    PointCloud::new(stage, idx.into_iter().map(|(a, b)| grid.point(a, b)).collect())
}

/// Sequence of stage outputs with the first index at which they stopped changing.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub stages: Vec<PointCloud>,
    pub stabilized: bool,
}

impl Sweep {
    pub fn last(&self) -> &PointCloud {
        self.stages.last().expect("sweeps hold at least one stage")
    }
}

/// Increases `k` from `n` until `Gamma_{m,n,k}` is unchanged over three
/// consecutive steps or `k` reaches `8n`. The sets decrease in `k`, so each
/// step only re-tests the previous members.
pub fn essential_stabilized_k(op: &LazyOperator, m: usize, n: usize, level_cap: u32) -> Result<PointCloud> {
    let first = essential_general_stage(op, m, n, n, level_cap)?;
    let grid = first.stage.grid.expect("essential stages carry a grid");
    let thr = 1.0 / m as f64;
    let mut current = first;
    let mut unchanged = 0;
    let mut k = n;
    while unchanged < 3 {
        if k >= 8 * n {
            current.stage.flag("unstabilized");
            break;
        }
        k += 1;
        let pair = essential_pair(op, m, n, k)?;
        let pts: Vec<C64> = current.points.iter().copied().filter(|&z| !pair.above(z, thr)).collect();
        unchanged = if pts.len() == current.len() { unchanged + 1 } else { 0 };
        let mut stage = current.stage.clone();
        stage.indices = vec![m as u64, n as u64, k as u64];
        stage.grid = Some(grid);
        current = PointCloud::new(stage, pts)?;
    }
    current.stage.tower = "essential-general-k-stabilized".into();
    Ok(current)
}

/// Runs [`essential_stabilized_k`] over increasing `ns`; the stage sets grow
/// with `n`, and the sweep reports whether the last three agree.
pub fn essential_sweep_n(op: &LazyOperator, m: usize, ns: &[usize], level_cap: u32) -> Result<Sweep> {
    let mut stages = Vec::new();
    for &n in ns {
        stages.push(essential_stabilized_k(op, m, n, level_cap)?);
    }
    Ok(Sweep { stabilized: tail_stable(&stages), stages })
}

/// Runs [`essential_sweep_n`] for each `m` in `ms` (decreasing sets in `m`),
/// keeping the final stage of each.
pub fn essential_sweep_m(op: &LazyOperator, ms: &[usize], ns: &[usize], level_cap: u32) -> Result<Sweep> {
    let mut stages = Vec::new();
    for &m in ms {
        let ns_m: Vec<usize> = ns.iter().copied().filter(|&n| n > m).collect();
        if ns_m.is_empty() {
            return Err(Error::Input(format!("no n > m = {m} in the n schedule")));
        }
        stages.push(essential_sweep_n(op, m, &ns_m, level_cap)?.last().clone());
    }
    Ok(Sweep { stabilized: tail_stable(&stages), stages })
}

fn tail_stable(stages: &[PointCloud]) -> bool {
    stages.len() >= 3 && stages[stages.len() - 3..].windows(2).all(|w| w[0].points == w[1].points)
}

/// Map from a fine lattice coordinate (over `2^level`) to the coarse centres
/// `s / 2^m` whose closed squares of half-width `2^-(m+1)` contain it.
fn coarse_owners(a: i64, level: u32, m: u32) -> Vec<i64> {
    let shift = level - m;
    if shift == 0 {
        return vec![a];
    }
    let scale = 1i64 << shift;
    let half = scale / 2;
    let base = a.div_euclid(scale);
    let rem = a.rem_euclid(scale);
    if rem < half {
        vec![base]
    } else if rem > half {
        vec![base + 1]
    } else {
        vec![base, base + 1]
    }
}

/// Counter-based essential-spectrum stage with a dispersion bound. Returns
/// the centres `lambda in Z_m ∩ B_{2M+2}(0)` with `E_{m,n}(lambda) > 0`.
///
/// The fine grids `G_i` are capped at level `min(i, m + level_slack)`.
pub fn essential_dispersion_stage(op: &LazyOperator, m: usize, n: usize, level_slack: u32) -> Result<PointCloud> {
    let norm = op.require_norm_bound()?;
    let f = op.require_dispersion()?;
    if m < 5 || n <= m {
        return Err(Error::Input(format!("voting stage needs m >= 5 and n > m, got m = {m}, n = {n}")));
    }
    let mm = m as u32;
    if mm + level_slack > 40 {
        return Err(Error::Input("lattice level too fine".into()));
    }
    let k_rad = 2.0 * norm + 2.0;
    let coarse = GridSpec::ball(k_rad, 1u64 << mm);
    let (t_s, t_t) = (1.0 / m as f64, 1.0 / (m as f64 + 1.0));
    let mut s_count: HashMap<(i64, i64), u32> = HashMap::new();
    let mut t_count: HashMap<(i64, i64), u32> = HashMap::new();
    let mut capped = false;
    for i in m + 1..=n {
        let level = (i as u32).min(mm + level_slack);
        capped |= (level as usize) < i;
        let d = 1u64 << level;
        let fine = GridSpec::square(k_rad + 1.0 / (1u64 << (mm + 1)) as f64, d);
        let pair = SectionPair::new(op, f.apply(i)?, i - m, m)?;
        let hits = sublevel_points(fine, t_s, &pair);
        let mut s_set: Vec<(i64, i64)> = Vec::new();
        let mut t_set: Vec<(i64, i64)> = Vec::new();
        for &(a, b) in &hits {
            let strict = !pair.above(fine.point(a, b), t_t);
            for &sa in &coarse_owners(a, level, mm) {
                for &sb in &coarse_owners(b, level, mm) {
                    if coarse.contains_index(sa, sb) {
                        s_set.push((sa, sb));
                        if strict {
                            t_set.push((sa, sb));
                        }
                    }
                }
            }
        }
        for set in [&mut s_set, &mut t_set] {
            set.sort_unstable();
            set.dedup();
        }
        for p in s_set {
            *s_count.entry(p).or_default() += 1;
        }
        for p in t_set {
            *t_count.entry(p).or_default() += 1;
        }
    }
    let mut centres = Vec::new();
    for (&p, &s) in &s_count {
        let t = t_count.get(&p).copied().unwrap_or(0);
        if s as i64 + t as i64 - n as i64 > 0 {
            centres.push(coarse.point(p.0, p.1));
        }
    }
    let mut stage = TowerStage::new("essential-dispersion", &[m as u64, n as u64]).thresholds(&[t_s, t_t]).grid(coarse);
    if capped {
        stage.flag(format!("fine grids capped at level m+{level_slack}"));
    }
    PointCloud::new(stage, centres)
}

/// Runs `spectrum_cr_stage` over increasing `ns` at fixed `m`.
pub fn spectrum_cr_sweep(op: &LazyOperator, m: usize, ns: &[usize]) -> Result<Sweep> {
    let mut stages = Vec::new();
    for &n in ns {
        stages.push(spectrum_cr_stage(op, m, n)?);
    }
    Ok(Sweep { stabilized: tail_stable(&stages), stages })
}
