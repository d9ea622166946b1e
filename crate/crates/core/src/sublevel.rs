//! Sublevel sets of Lipschitz functions on lattices, by quadtree pruning.
//!
//! All the grid towers ask for `{z in grid : f(z) <= t}` where `f` is a
//! smallest singular value of a shifted section (1-Lipschitz in `z`). Instead
//! of testing every lattice point, boxes are discarded when a test at the box
//! centre certifies `f > t` on the whole box, and accepted wholesale when it
//! certifies `f <= t`. Leaves fall back to the pointwise test, so the output
//! is the same set a full sweep would produce.

use rayon::prelude::*;

use crate::cloud::{GridShape, GridSpec};
use crate::numerics::C64;

const LEAF_POINTS: i64 = 16;

/// Description of one sublevel query.
pub struct Sublevel<A, M>
where
    A: Fn(C64, f64) -> bool + Sync,
    M: Fn(C64) -> bool + Sync,
{
    pub grid: GridSpec,
    pub threshold: f64,
    /// Lipschitz constant of the lower bound `l` tested by `above`.
    pub lipschitz: f64,
    /// `above(z, t)` decides `l(z) > t` for a lower bound `l <= f`.
    pub above: A,
    /// Pointwise membership `f(z) <= threshold`.
    pub member: M,
    /// `l == f`, so a failed `above` test certifies membership.
    pub exact: bool,
    /// Safety band added to every certificate.
    pub margin: f64,
}

impl<A, M> Sublevel<A, M>
where
    A: Fn(C64, f64) -> bool + Sync,
    M: Fn(C64) -> bool + Sync,
{
    /// Integer coordinates `(a, b)` of the members, sorted.
    pub fn run(&self) -> Vec<(i64, i64)> {
        let r = self.grid.index_radius();
        let tiles = 8i64;
        let step = ((2 * r + 1) + tiles - 1) / tiles;
        let mut boxes = Vec::new();
        let mut a0 = -r;
        while a0 <= r {
            let mut b0 = -r;
            while b0 <= r {
                boxes.push((a0, (a0 + step - 1).min(r), b0, (b0 + step - 1).min(r)));
                b0 += step;
            }
            a0 += step;
        }
        let mut out: Vec<(i64, i64)> = boxes
            .par_iter()
            .flat_map_iter(|&(a0, a1, b0, b1)| {
                let mut acc = Vec::new();
                self.visit(a0, a1, b0, b1, &mut acc);
                acc
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn points(&self) -> Vec<C64> {
        self.run().into_iter().map(|(a, b)| self.grid.point(a, b)).collect()
    }

    fn box_meets_grid(&self, a0: i64, a1: i64, b0: i64, b1: i64) -> bool {
        match self.grid.shape {
            GridShape::Square => true,
            GridShape::Ball => {
                let na = if a0 > 0 { a0 } else if a1 < 0 { a1 } else { 0 };
                let nb = if b0 > 0 { b0 } else if b1 < 0 { b1 } else { 0 };
                self.grid.contains_index(na, nb)
            }
        }
    }

    fn visit(&self, a0: i64, a1: i64, b0: i64, b1: i64, acc: &mut Vec<(i64, i64)>) {
        if a0 > a1 || b0 > b1 || !self.box_meets_grid(a0, a1, b0, b1) {
            return;
        }
        let d = self.grid.denominator as f64;
        let c = C64::new((a0 + a1) as f64 / (2.0 * d), (b0 + b1) as f64 / (2.0 * d));
        let ha = (a1 - a0) as f64 / (2.0 * d);
        let hb = (b1 - b0) as f64 / (2.0 * d);
        let rho = self.lipschitz * (ha * ha + hb * hb).sqrt();
        if (self.above)(c, self.threshold + rho + self.margin) {
            return;
        }
        let n = (a1 - a0 + 1) * (b1 - b0 + 1);
        let inner = self.threshold - rho - self.margin;
        if self.exact && n > 1 && inner > 0.0 && !(self.above)(c, inner) {
            for a in a0..=a1 {
                for b in b0..=b1 {
                    if self.grid.contains_index(a, b) {
                        acc.push((a, b));
                    }
                }
            }
            return;
        }
        if n <= LEAF_POINTS {
            for a in a0..=a1 {
                for b in b0..=b1 {
                    if self.grid.contains_index(a, b) && (self.member)(self.grid.point(a, b)) {
                        acc.push((a, b));
                    }
                }
            }
            return;
        }
        let am = (a0 + a1).div_euclid(2);
        let bm = (b0 + b1).div_euclid(2);
        self.visit(a0, am, b0, bm, acc);
        self.visit(a0, am, bm + 1, b1, acc);
        self.visit(am + 1, a1, b0, bm, acc);
        self.visit(am + 1, a1, bm + 1, b1, acc);
    }
}

/// Default certificate margin for a threshold `t`.
pub fn default_margin(t: f64) -> f64 {
    1e-9 * t.max(1.0) + 1e-10
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_brute_force_on_disc() {
        let grid = GridSpec::ball(3.0, 8);
        let f = |z: C64| (z - C64::new(0.7, -0.4)).norm();
        let q = Sublevel {
            grid,
            threshold: 1.1,
            lipschitz: 1.0,
            above: |z: C64, t: f64| f(z) > t,
            member: |z: C64| f(z) <= 1.1,
            exact: true,
            margin: 1e-12,
        };
        let fast = q.points();
        let brute: Vec<C64> = grid.points().into_iter().filter(|&z| f(z) <= 1.1).collect();
        let mut fast_sorted = fast.clone();
        let mut brute_sorted = brute.clone();
        fast_sorted.sort_by(crate::cloud::cmp_points);
        brute_sorted.sort_by(crate::cloud::cmp_points);
        assert_eq!(fast_sorted, brute_sorted);
    }
}
