//! Dense complex linear algebra used by every tower.
//!
//! The only certified primitive is the positivity test: `B*B - eps^2 I` is
//! positive definite iff Gaussian elimination without row exchange leaves
//! only positive pivots. Everything else (quantized smallest singular values,
//! bisection, Hermitian solves) is built on top of it.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default comparison tolerance applied to pivots and thresholds.
pub const DEFAULT_ETA: f64 = 1e-12;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::Dimension("ragged rows".into()));
            }
            data.extend(row.iter().map(|&x| C64::new(x, 0.0)));
        }
        Self::new(r, c, data)
    }

    /// Builds a matrix from a fallible 0-based entry function.
    pub fn try_from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Result<C64>,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j)?);
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_col_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Leading `rows x cols` block.
    pub fn leading(&self, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows.min(self.rows), cols.min(self.cols), |i, j| self[(i, j)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// `self - z * E` where `E` is the rectangular identity (ones on the main diagonal).
    pub fn minus_shift(&self, z: C64) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows.min(self.cols) {
            out[(i, i)] -= z;
        }
        out
    }

    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `k / m`, the least multiple of `1/m` above a certified quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizedValue {
    pub k: u64,
    pub m: u64,
}

impl QuantizedValue {
    pub fn value(&self) -> f64 {
        self.k as f64 / self.m as f64
    }
}

fn check_finite(b: &ComplexMatrix) -> Result<()> {
    if b.data.iter().any(|z| !z.is_finite()) {
        return Err(Error::Input("non-finite matrix entry".into()));
    }
    Ok(())
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols != b.rows {
        return Err(Error::Dimension(format!(
            "{}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = ComplexMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (l, &ail) in a.row(i).iter().enumerate() {
            if ail == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, &blj) in orow.iter_mut().zip(b.row(l)) {
                *o += ail * blj;
            }
        }
    }
    Ok(out)
}

/// `C^(2^N) S`, computed with `N` squarings of `C` followed by one product.
pub fn matpow_apply(c: &ComplexMatrix, n: u32, s: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !c.is_square() {
        return Err(Error::Dimension("matpow_apply needs a square C".into()));
    }
    let mut p = c.clone();
    for _ in 0..n {
        p = matmul(&p, &p)?;
    }
    matmul(&p, s)
}

/// `B* B`.
pub fn gram(b: &ComplexMatrix) -> ComplexMatrix {
    let c = b.cols;
    let mut g = ComplexMatrix::zeros(c, c);
    for r in 0..b.rows {
        let row = b.row(r);
        for i in 0..c {
            let bi = row[i].conj();
            if bi == C64::new(0.0, 0.0) {
                continue;
            }
            for j in i..c {
                g.data[i * c + j] += bi * row[j];
            }
        }
    }
    for i in 0..c {
        g.data[i * c + i].im = 0.0;
        for j in 0..i {
            g.data[i * c + j] = g.data[j * c + i].conj();
        }
    }
    g
}

/// Positive definiteness of a Hermitian matrix by elimination without row
/// exchange, reading only the upper triangle. Aborts at the first pivot `<= eta`.
pub fn is_positive_definite(h: &ComplexMatrix, eta: f64) -> bool {
    let n = h.rows;
    let mut a = h.data.clone();
    for k in 0..n {
        let pivot = a[k * n + k].re;
        if !(pivot > eta) {
            return false;
        }
        let inv = 1.0 / pivot;
        for i in k + 1..n {
            let f = a[k * n + i].conj() * inv;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            let (head, tail) = a.split_at_mut(i * n);
            let krow = &head[k * n..k * n + n];
            let irow = &mut tail[..n];
            for j in i..n {
                irow[j] -= f * krow[j];
            }
        }
    }
    true
}

/// Whether `G - eps^2 I` is positive definite, for a Gram matrix `G = B*B`.
pub fn gram_above(g: &ComplexMatrix, eps: f64, eta: f64) -> bool {
    let mut s = g.clone();
    let e2 = eps * eps;
    for i in 0..s.rows {
        s[(i, i)].re -= e2;
    }
    is_positive_definite(&s, eta)
}

/// Decides `sigma_1(B) > eps` through positivity of `B*B - eps^2 I`.
pub fn is_sigma_min_above(b: &ComplexMatrix, eps: f64, eta: f64) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(Error::Input(format!("eps must be positive, got {eps}")));
    }
    if b.rows == 0 || b.cols == 0 {
        return Err(Error::Input("empty matrix".into()));
    }
    check_finite(b)?;
    Ok(gram_above(&gram(b), eps, eta))
}

/// Least `k >= 1` for which `above(k/m)` fails. `above` must be monotone
/// (true at some `eps` implies true at every smaller `eps`), so a galloping
/// search returns the same `k` as the plain increment loop.
pub fn quantize_least(m: u64, cap: u64, above: impl Fn(f64) -> bool) -> Result<QuantizedValue> {
    if m == 0 {
        return Err(Error::Input("m must be at least 1".into()));
    }
    let test = |k: u64| above(k as f64 / m as f64);
    if !test(1) {
        return Ok(QuantizedValue { k: 1, m });
    }
    let mut lo = 1u64;
    let mut hi = 2u64;
    while test(hi) {
        if hi > cap {
            return Err(Error::Internal(format!("quantization loop exceeded k > {cap}")));
        }
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if test(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(QuantizedValue { k: hi, m })
}

/// Defensive cap on the quantization loop: `m (||B||_F + 1)`.
pub fn quantization_cap(frobenius: f64, m: u64) -> u64 {
    (m as f64 * (frobenius + 1.0)).ceil() as u64 + 1
}

/// Quantized smallest singular value of a Gram matrix `G = B*B`.
pub fn gram_quantized(g: &ComplexMatrix, m: u64, eta: f64) -> Result<QuantizedValue> {
    let trace: f64 = (0..g.rows).map(|i| g[(i, i)].re).sum();
    let cap = quantization_cap(trace.max(0.0).sqrt(), m);
    quantize_least(m, cap, |eps| gram_above(g, eps, eta))
}

/// Least `k/m >= sigma_1(B)`.
pub fn sigma_min_quantized(b: &ComplexMatrix, m: u64) -> Result<QuantizedValue> {
    sigma_min_quantized_eta(b, m, DEFAULT_ETA)
}

pub fn sigma_min_quantized_eta(b: &ComplexMatrix, m: u64, eta: f64) -> Result<QuantizedValue> {
    if b.rows == 0 || b.cols == 0 {
        return Err(Error::Input("empty matrix".into()));
    }
    check_finite(b)?;
    gram_quantized(&gram(b), m, eta)
}

/// The increment loop `k = 1, 2, ...` verbatim; kept as a reference for
/// [`sigma_min_quantized`].
pub fn sigma_min_quantized_linear(b: &ComplexMatrix, m: u64, eta: f64) -> Result<QuantizedValue> {
    if m == 0 {
        return Err(Error::Input("m must be at least 1".into()));
    }
    check_finite(b)?;
    let g = gram(b);
    let cap = quantization_cap(b.frobenius_norm(), m);
    let mut k = 1u64;
    while gram_above(&g, k as f64 / m as f64, eta) {
        k += 1;
        if k > cap {
            return Err(Error::Internal(format!("quantization loop exceeded k > {cap}")));
        }
    }
    Ok(QuantizedValue { k, m })
}

/// Bisection on `eps` over `[0, 1 + max column norm]`.
pub fn sigma_min_bisect(b: &ComplexMatrix, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Input(format!("tol must be positive, got {tol}")));
    }
    if b.rows == 0 || b.cols == 0 {
        return Err(Error::Input("empty matrix".into()));
    }
    check_finite(b)?;
    Ok(gram_bisect(&gram(b), 1.0 + b.max_col_norm(), tol, DEFAULT_ETA))
}

/// Bisection for `sqrt(lambda_min(G))` on `[0, hi]`.
pub fn gram_bisect(g: &ComplexMatrix, hi: f64, tol: f64, eta: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gram_above(g, mid, eta) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `M x = rhs` for Hermitian positive definite `M` by elimination
/// without row exchange.
pub fn solve_hpd(m: &ComplexMatrix, rhs: &[C64], eta: f64) -> Result<Vec<C64>> {
    let n = m.rows;
    if !m.is_square() || rhs.len() != n {
        return Err(Error::Dimension(format!(
            "{}x{} system with rhs of length {}",
            m.rows,
            m.cols,
            rhs.len()
        )));
    }
    check_finite(m)?;
    let scale = m.frobenius_norm().max(1.0);
    if m.hermitian_defect() > eta * scale {
        return Err(Error::Input("matrix is not Hermitian".into()));
    }
    let mut a = m.data.clone();
    let mut x = rhs.to_vec();
    for k in 0..n {
        let pivot = a[k * n + k];
        if !(pivot.re > eta) {
            return Err(Error::NotPositiveDefinite { row: k, pivot: pivot.re });
        }
        for i in k + 1..n {
            let f = a[i * n + k] / pivot;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in k..n {
                let akj = a[k * n + j];
                a[i * n + j] -= f * akj;
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= a[k * n + j] * x[j];
        }
        x[k] = s / a[k * n + k];
    }
    Ok(x)
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Gram matrices of the shifted family `B(z) = B0 - z E`, where `E` has a one
/// at `(offset + c, c)` for each column `c` that fits. Evaluating at a new `z`
/// costs `O(cols^2)` instead of a fresh product.
#[derive(Clone, Debug)]
pub struct ShiftedGram {
    g0: ComplexMatrix,
    /// `E* B0`.
    f: ComplexMatrix,
    /// Diagonal of `E* E`.
    d: Vec<f64>,
}

impl ShiftedGram {
    pub fn new(b0: &ComplexMatrix, offset: usize) -> Self {
        let c = b0.cols();
        let g0 = gram(b0);
        let mut f = ComplexMatrix::zeros(c, c);
        let mut d = vec![0.0; c];
        for col in 0..c {
            let r = offset + col;
            if r < b0.rows() {
                d[col] = 1.0;
                for j in 0..c {
                    f[(col, j)] = b0[(r, j)];
                }
            }
        }
        Self { g0, f, d }
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// `B(z)* B(z) = G0 - z F* - conj(z) F + |z|^2 D`.
    pub fn at(&self, z: C64) -> ComplexMatrix {
        let c = self.dim();
        let zc = z.conj();
        let z2 = z.norm_sqr();
        let mut g = self.g0.clone();
        for i in 0..c {
            for j in 0..c {
                g[(i, j)] -= z * self.f[(j, i)].conj() + zc * self.f[(i, j)];
            }
            g[(i, i)].re += z2 * self.d[i];
            g[(i, i)].im = 0.0;
        }
        g
    }

    pub fn above(&self, z: C64, eps: f64, eta: f64) -> bool {
        gram_above(&self.at(z), eps, eta)
    }

    /// `||B0||_F`, used for quantization caps.
    pub fn frobenius0(&self) -> f64 {
        (0..self.dim()).map(|i| self.g0[(i, i)].re).sum::<f64>().max(0.0).sqrt()
    }
}

/// Square complex matrix with half-bandwidth `w`.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    w: usize,
    /// Row `i` holds columns `i - w ..= i + w` at positions `0..=2w`.
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, w: usize) -> Self {
        Self { n, w, data: vec![C64::new(0.0, 0.0); n * (2 * w + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.w
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i.abs_diff(j) > self.w {
            return C64::new(0.0, 0.0);
        }
        self.data[i * (2 * self.w + 1) + (j + self.w - i)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(i.abs_diff(j) <= self.w, "entry outside band");
        let w = self.w;
        self.data[i * (2 * w + 1) + (j + w - i)] = v;
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn norm_bound(&self) -> f64 {
        // max(row sum, column sum) bound via sqrt(||A||_1 ||A||_inf)
        let mut row_max = 0.0f64;
        let mut col = vec![0.0f64; self.n];
        for i in 0..self.n {
            let mut r = 0.0;
            for j in i.saturating_sub(self.w)..(i + self.w + 1).min(self.n) {
                let a = self.get(i, j).norm();
                r += a;
                col[j] += a;
            }
            row_max = row_max.max(r);
        }
        let col_max = col.into_iter().fold(0.0, f64::max);
        (row_max * col_max).sqrt()
    }

    /// Whether `(A - zI)*(A - zI) - eps^2 I` is positive definite, using banded
    /// elimination on the Gram matrix (half-bandwidth `2w`).
    pub fn shifted_above(&self, z: C64, eps: f64, eta: f64) -> bool {
        let n = self.n;
        let w = self.w;
        let gw = 2 * w;
        let stride = gw + 1;
        // Upper band of G: g[i * stride + d] = G(i, i + d).
        let mut g = vec![C64::new(0.0, 0.0); n * stride];
        let b = |r: usize, c: usize| -> C64 {
            let v = self.get(r, c);
            if r == c {
                v - z
            } else {
                v
            }
        };
        for r in 0..n {
            let lo = r.saturating_sub(w);
            let hi = (r + w + 1).min(n);
            for i in lo..hi {
                let bi = b(r, i).conj();
                for j in i..hi {
                    g[i * stride + (j - i)] += bi * b(r, j);
                }
            }
        }
        let e2 = eps * eps;
        for i in 0..n {
            g[i * stride].re -= e2;
            g[i * stride].im = 0.0;
        }
        for k in 0..n {
            let pivot = g[k * stride].re;
            if !(pivot > eta) {
                return false;
            }
            let inv = 1.0 / pivot;
            let top = (k + gw + 1).min(n);
            for i in k + 1..top {
                let f = g[k * stride + (i - k)].conj() * inv;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in i..top {
                    let gkj = g[k * stride + (j - k)];
                    g[i * stride + (j - i)] -= f * gkj;
                }
            }
        }
        true
    }
}
