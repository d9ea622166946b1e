//! Lattice discretization of `-Δ + V` for confining sectorial `V`.

use crate::cloud::{GridSpec, PointCloud, TowerStage};
use crate::error::{Error, Result};
use crate::numerics::{BandMatrix, ComplexMatrix, ShiftedGram, C64, DEFAULT_ETA};
use crate::schrodinger::PotentialSpec;
use crate::sublevel::{default_margin, Sublevel};

/// Lattice `(Z/n)^d ∩ [-floor(sqrt n), floor(sqrt n)]^d`, enumerated with
/// `x1` varying slowest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeSpec {
    pub n: usize,
    pub dim: usize,
}

/// Largest lattice handled with dense matrices.
pub const DENSE_LIMIT: usize = 2000;
/// Lattice size above which a stage is flagged as large.
pub const LARGE_LATTICE: usize = 50_000;

impl LatticeSpec {
    pub fn new(n: usize, dim: usize) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::Input("lattice needs n >= 1 and d >= 1".into()));
        }
        Ok(Self { n, dim })
    }

    /// `floor(sqrt n)`.
    pub fn half_width(&self) -> usize {
        (self.n as f64).sqrt().floor() as usize
    }

    pub fn per_axis(&self) -> usize {
        2 * self.n * self.half_width() + 1
    }

    pub fn count(&self) -> usize {
        self.per_axis().pow(self.dim as u32)
    }

    /// Index step between neighbours along axis `p` (0-based).
    pub fn stride(&self, p: usize) -> usize {
        self.per_axis().pow((self.dim - 1 - p) as u32)
    }

    pub fn coords(&self, idx: usize) -> Vec<usize> {
        (0..self.dim).map(|p| (idx / self.stride(p)) % self.per_axis()).collect()
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let off = (self.n * self.half_width()) as f64;
        self.coords(idx).into_iter().map(|c| (c as f64 - off) / self.n as f64).collect()
    }
}

fn for_each_entry(v: &PotentialSpec, lat: &LatticeSpec, mut put: impl FnMut(usize, usize, C64)) -> Result<()> {
    if v.dim() != lat.dim {
        return Err(Error::Dimension(format!("potential has dimension {}, lattice {}", v.dim(), lat.dim)));
    }
    let n2 = (lat.n * lat.n) as f64;
    let l = lat.per_axis();
    for idx in 0..lat.count() {
        let y = lat.point(idx);
        put(idx, idx, C64::new(2.0 * lat.dim as f64 * n2, 0.0) + v.eval(&y)?);
        let c = lat.coords(idx);
        for p in 0..lat.dim {
            if c[p] + 1 < l {
                let j = idx + lat.stride(p);
                put(idx, j, C64::new(-n2, 0.0));
                put(j, idx, C64::new(-n2, 0.0));
            }
        }
    }
    Ok(())
}

/// Dense `H_n`: `2dn^2 + V(y)` on the diagonal, `-n^2` between lattice neighbours.
pub fn assemble_hamiltonian(v: &PotentialSpec, n: usize) -> Result<ComplexMatrix> {
    let lat = LatticeSpec::new(n, v.dim())?;
    let size = lat.count();
    if size > 4 * DENSE_LIMIT {
        return Err(Error::Input(format!("{size} lattice points is too many for a dense matrix")));
    }
    let mut h = ComplexMatrix::zeros(size, size);
    for_each_entry(v, &lat, |i, j, x| h[(i, j)] = x)?;
    Ok(h)
}

/// Banded `H_n` with half-bandwidth equal to the lattice stride of `x1`.
pub fn assemble_banded(v: &PotentialSpec, n: usize) -> Result<BandMatrix> {
    let lat = LatticeSpec::new(n, v.dim())?;
    let w = if lat.dim == 1 { 1 } else { lat.stride(0) };
    let mut h = BandMatrix::zeros(lat.count(), w);
    for_each_entry(v, &lat, |i, j, x| h.set(i, j, x))?;
    Ok(h)
}

/// `sigma_1(H_n - z) > eps` tests on whichever storage fits.
pub enum Hamiltonian {
    Dense(ShiftedGram),
    Banded(BandMatrix),
}

impl Hamiltonian {
    /// Banded storage when it is at most a quarter of the dense width or the
    /// lattice exceeds [`DENSE_LIMIT`], dense otherwise.
    pub fn assemble(v: &PotentialSpec, n: usize) -> Result<Self> {
        let lat = LatticeSpec::new(n, v.dim())?;
        let w = if lat.dim == 1 { 1 } else { lat.stride(0) };
        if lat.count() > DENSE_LIMIT || 4 * (2 * w + 1) <= lat.count() {
            Ok(Hamiltonian::Banded(assemble_banded(v, n)?))
        } else {
            Ok(Hamiltonian::Dense(ShiftedGram::new(&assemble_hamiltonian(v, n)?, 0)))
        }
    }

    pub fn above(&self, z: C64, eps: f64) -> bool {
        match self {
            Hamiltonian::Dense(g) => g.above(z, eps, DEFAULT_ETA),
            Hamiltonian::Banded(b) => b.shifted_above(z, eps, DEFAULT_ETA),
        }
    }
}

/// `{z in G_n : sigma_1(H_n - z) <= eps}` with `G_n = B_n(0) ∩ (1/(2n))(Z + iZ)`.
pub fn pseudospectrum_stage(v: &PotentialSpec, eps: f64, n: usize) -> Result<PointCloud> {
    if !(eps > 0.0) {
        return Err(Error::Input("eps must be positive".into()));
    }
    let lat = LatticeSpec::new(n, v.dim())?;
    let h = Hamiltonian::assemble(v, n)?;
    let grid = GridSpec::ball(n as f64, 2 * n as u64);
    let idx = Sublevel {
        grid,
        threshold: eps,
        lipschitz: 1.0,
        above: |z: C64, t: f64| h.above(z, t),
        member: |z: C64| !h.above(z, eps),
        exact: true,
        margin: default_margin(eps),
    }
    .run();
    let mut stage = TowerStage::new("schrodinger-unbounded", &[n as u64]).thresholds(&[eps]).grid(grid);
    if lat.count() > LARGE_LATTICE {
        stage.flag(format!("{} lattice points", lat.count()));
    }
    PointCloud::new(stage, idx.into_iter().map(|(a, b)| grid.point(a, b)).collect())
}

/// [`pseudospectrum_stage`] with `eps = 1/n`.
pub fn spectrum_stage(v: &PotentialSpec, n: usize) -> Result<PointCloud> {
    pseudospectrum_stage(v, 1.0 / n as f64, n)
}
