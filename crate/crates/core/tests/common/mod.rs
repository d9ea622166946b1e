//! Independent reference computations backed by nalgebra.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use scitower::{ComplexMatrix, C64};

pub fn to_na(m: &ComplexMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// Smallest singular value (of `min(rows, cols)` values).
pub fn sigma_min(m: &ComplexMatrix) -> f64 {
    to_na(m).singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// `sigma_min(B - z I)` where `I` is the leading `rows x cols` identity.
pub fn sigma_min_shifted(b: &ComplexMatrix, z: C64) -> f64 {
    sigma_min(&b.minus_shift(z))
}

/// `min(sigma_1(P_n (A - z) P_m), sigma_1(P_n (A* - conj z) P_m))` from two sections.
pub fn gamma(section: &ComplexMatrix, adjoint_section: &ComplexMatrix, z: C64) -> f64 {
    sigma_min_shifted(section, z).min(sigma_min_shifted(adjoint_section, z.conj()))
}

pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = to_na(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn solve(m: &ComplexMatrix, b: &[C64]) -> Vec<C64> {
    let rhs = nalgebra::DVector::from_column_slice(b);
    to_na(m).lu().solve(&rhs).expect("oracle system is invertible").iter().copied().collect()
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_point(rng: &mut impl Rng, r: f64) -> C64 {
    C64::new(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

pub fn l2(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Composite Gauss-Legendre (5 nodes) on `[a, b]` with `pieces` panels.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / pieces as f64;
    let mut s = 0.0;
    for p in 0..pieces {
        let c = a + (p as f64 + 0.5) * h;
        for k in 0..5 {
            s += W[k] * f(c + 0.5 * h * X[k]);
        }
    }
    s * 0.5 * h
}
