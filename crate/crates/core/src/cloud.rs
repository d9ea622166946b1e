//! Lattices, point clouds, stage metadata and set distances.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridShape {
    /// Lattice points with `|z| <= radius`.
    Ball,
    /// Lattice points with `|Re z|, |Im z| <= radius`.
    Square,
}

/// The lattice `(1/denominator)(Z + iZ)` cut to a ball or square.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub shape: GridShape,
    pub radius: f64,
    pub denominator: u64,
}

impl GridSpec {
    pub fn ball(radius: f64, denominator: u64) -> Self {
        Self { shape: GridShape::Ball, radius, denominator }
    }

    pub fn square(radius: f64, denominator: u64) -> Self {
        Self { shape: GridShape::Square, radius, denominator }
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.denominator as f64
    }

    /// Largest integer coordinate that can appear.
    pub fn index_radius(&self) -> i64 {
        (self.radius * self.denominator as f64 + 1e-9).floor() as i64
    }

    pub fn point(&self, a: i64, b: i64) -> C64 {
        let d = self.denominator as f64;
        C64::new(a as f64 / d, b as f64 / d)
    }

    pub fn contains_index(&self, a: i64, b: i64) -> bool {
        match self.shape {
            GridShape::Square => {
                let r = self.index_radius();
                a.abs() <= r && b.abs() <= r
            }
            GridShape::Ball => {
                let rd = self.radius * self.denominator as f64;
                ((a as f64).powi(2) + (b as f64).powi(2)) <= rd * rd * (1.0 + 1e-12) + 1e-9
            }
        }
    }

    /// Whether `z` is (up to rounding) a lattice point of this grid.
    pub fn on_lattice(&self, z: C64) -> bool {
        let d = self.denominator as f64;
        let (a, b) = (z.re * d, z.im * d);
        (a - a.round()).abs() < 1e-6 && (b - b.round()).abs() < 1e-6
            && self.contains_index(a.round() as i64, b.round() as i64)
    }

    pub fn count(&self) -> usize {
        let r = self.index_radius();
        (-r..=r)
            .map(|a| (-r..=r).filter(|&b| self.contains_index(a, b)).count())
            .sum()
    }

    pub fn points(&self) -> Vec<C64> {
        let r = self.index_radius();
        let mut out = Vec::new();
        for a in -r..=r {
            for b in -r..=r {
                if self.contains_index(a, b) {
                    out.push(self.point(a, b));
                }
            }
        }
        out
    }
}

/// Stage indices, thresholds and grid behind a tower output.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TowerStage {
    pub tower: String,
    pub indices: Vec<u64>,
    pub thresholds: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub flags: Vec<String>,
}

impl TowerStage {
    pub fn new(tower: &str, indices: &[u64]) -> Self {
        Self { tower: tower.to_string(), indices: indices.to_vec(), ..Default::default() }
    }

    pub fn thresholds(mut self, t: &[f64]) -> Self {
        self.thresholds = t.to_vec();
        self
    }

    pub fn grid(mut self, g: GridSpec) -> Self {
        self.grid = Some(g);
        self
    }

    pub fn flag(&mut self, f: impl Into<String>) {
        let f = f.into();
        if !self.flags.contains(&f) {
            self.flags.push(f);
        }
    }
}

pub fn cmp_points(a: &C64, b: &C64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Finite set of complex points, sorted by `(Re, Im)` without duplicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub stage: TowerStage,
    pub points: Vec<C64>,
}

impl PointCloud {
    pub fn new(stage: TowerStage, mut points: Vec<C64>) -> Result<Self> {
        if points.iter().any(|z| z.re.is_nan() || z.im.is_nan()) {
            return Err(Error::Internal("NaN in point cloud".into()));
        }
        points.sort_by(cmp_points);
        points.dedup();
        Ok(Self { stage, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, z: C64) -> bool {
        self.points.binary_search_by(|p| cmp_points(p, &z)).is_ok()
    }

    pub fn is_subset_of(&self, other: &PointCloud) -> bool {
        self.points.iter().all(|&p| other.contains(p))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,im\n");
        for p in &self.points {
            let _ = writeln!(s, "{},{}", p.re, p.im);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("point clouds always serialize")
    }
}

/// Distance from `z` to the nearest point of `ys` (infinite when empty).
pub fn dist_to_set(z: C64, ys: &[C64]) -> f64 {
    ys.iter().map(|y| (z - y).norm()).fold(f64::INFINITY, f64::min)
}

/// `sup_{x in xs} d(x, ys)`, with the empty supremum equal to 0.
pub fn directed(xs: &[C64], ys: &[C64]) -> f64 {
    xs.iter().map(|&x| dist_to_set(x, ys)).fold(0.0, f64::max)
}

/// Hausdorff distance between finite point sets.
pub fn hausdorff_points(xs: &[C64], ys: &[C64]) -> Result<f64> {
    if xs.is_empty() && ys.is_empty() {
        return Err(Error::Input("Hausdorff distance of two empty sets is undefined".into()));
    }
    if xs.is_empty() || ys.is_empty() {
        return Ok(f64::INFINITY);
    }
    Ok(directed(xs, ys).max(directed(ys, xs)))
}

pub fn hausdorff(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    hausdorff_points(&x.points, &y.points)
}

/// `max(sup_{s in X ∩ K} d(s, Y), sup_{t in Y ∩ K} d(t, X))` with `K` the
/// closed ball of radius `r`; suprema over empty sets are 0.
pub fn aw_truncated_points(xs: &[C64], ys: &[C64], r: f64) -> Result<f64> {
    if xs.is_empty() && ys.is_empty() {
        return Err(Error::Input("truncated distance of two empty sets is undefined".into()));
    }
    let xk: Vec<C64> = xs.iter().copied().filter(|z| z.norm() <= r).collect();
    let yk: Vec<C64> = ys.iter().copied().filter(|z| z.norm() <= r).collect();
    Ok(directed(&xk, ys).max(directed(&yk, xs)))
}

pub fn aw_truncated(x: &PointCloud, y: &PointCloud, r: f64) -> Result<f64> {
    aw_truncated_points(&x.points, &y.points, r)
}

/// Samples of a segment `[a, b]` with spacing at most `h`, for oracle sets.
pub fn segment(a: C64, b: C64, h: f64) -> Vec<C64> {
    let n = ((b - a).norm() / h).ceil().max(1.0) as usize;
    (0..=n).map(|k| a + (b - a) * (k as f64 / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn hausdorff_examples() {
        assert_eq!(hausdorff_points(&[c(0.0)], &[c(0.0)]).unwrap(), 0.0);
        assert_eq!(hausdorff_points(&[c(0.0)], &[c(3.0)]).unwrap(), 3.0);
        assert_eq!(aw_truncated_points(&[c(0.0), c(1.0)], &[c(0.0)], 0.5).unwrap(), 0.0);
        assert!(hausdorff_points(&[], &[]).is_err());
        assert_eq!(aw_truncated_points(&[c(5.0)], &[c(6.0)], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn cloud_is_sorted_and_deduplicated() {
        let pc = PointCloud::new(TowerStage::new("t", &[1]), vec![c(1.0), c(-1.0), c(1.0), C64::new(-1.0, -2.0)]).unwrap();
        assert_eq!(pc.points, vec![C64::new(-1.0, -2.0), c(-1.0), c(1.0)]);
        assert!(pc.contains(c(1.0)));
        assert_eq!(pc.to_csv(), "re,im\n-1,-2\n-1,0\n1,0\n");
    }

    #[test]
    fn grid_counts() {
        assert_eq!(GridSpec::ball(2.0, 1).count(), 13);
        assert_eq!(GridSpec::square(1.0, 2).count(), 25);
        assert!(GridSpec::ball(1.0, 4).on_lattice(C64::new(0.25, -0.5)));
        assert!(!GridSpec::ball(1.0, 4).on_lattice(C64::new(0.3, 0.0)));
    }
}
