mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scitower::schrodinger::unbounded::{assemble_banded, assemble_hamiltonian, pseudospectrum_stage, LatticeSpec};
use scitower::schrodinger::PotentialSpec;
use scitower::numerics::is_sigma_min_above;
use scitower::{C64, DEFAULT_ETA};
use std::f64::consts::PI;

fn laplacian_1d(n: usize) -> Vec<f64> {
    let l = LatticeSpec::new(n, 1).unwrap().per_axis();
    let nn = (n * n) as f64;
    let mut v: Vec<f64> = (1..=l).map(|k| 2.0 * nn * (1.0 - (k as f64 * PI / (l as f64 + 1.0)).cos())).collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn laplacian_eigenvalues_1d() {
    for n in 1..=5 {
        let h = assemble_hamiltonian(&PotentialSpec::parse("0", 1).unwrap(), n).unwrap();
        let got = common::hermitian_eigenvalues(&h);
        let want = laplacian_1d(n);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9 * (1.0 + w), "n = {n}: {g} vs {w}");
        }
    }
}

#[test]
fn laplacian_eigenvalues_2d() {
    for n in 1..=2 {
        let h = assemble_hamiltonian(&PotentialSpec::parse("0", 2).unwrap(), n).unwrap();
        let got = common::hermitian_eigenvalues(&h);
        let e = laplacian_1d(n);
        let mut want: Vec<f64> = e.iter().flat_map(|a| e.iter().map(move |b| a + b)).collect();
        want.sort_by(f64::total_cmp);
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9 * (1.0 + w));
        }
    }
}

#[test]
fn harmonic_oscillator_low_eigenvalues() {
    let h = assemble_hamiltonian(&PotentialSpec::parse("x^2", 1).unwrap(), 16).unwrap();
    let ev = common::hermitian_eigenvalues(&h);
    for (k, e) in ev.iter().take(4).enumerate() {
        let want = 2.0 * k as f64 + 1.0;
        assert!((e - want).abs() <= 0.05 * want, "level {k}: {e}");
    }
}

#[test]
fn banded_storage_matches_dense() {
    for (src, d) in [("x1^2 + x2^2", 2usize), ("x^4 - x", 1)] {
        let v = PotentialSpec::parse(src, d).unwrap();
        for n in 1..=3 {
            assert_eq!(assemble_banded(&v, n).unwrap().to_dense(), assemble_hamiltonian(&v, n).unwrap());
        }
    }
}

#[test]
fn sector_is_enforced() {
    let v = PotentialSpec::parse("x^2 * (1 + i)", 1).unwrap();
    assert!(v.clone().with_sector(0.5, 0.1).unwrap().eval(&[1.0]).is_err());
    assert!(v.with_sector(PI / 4.0, 0.0).unwrap().eval(&[1.0]).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn real_potential_gives_hermitian_matrix(n in 1usize..5, c in -3.0f64..3.0) {
        let v = PotentialSpec::parse(&format!("x1^2 + {c} * x2^4"), 2).unwrap();
        let h = assemble_hamiltonian(&v, n.min(2)).unwrap();
        prop_assert_eq!(h.hermitian_defect(), 0.0);
        let v = PotentialSpec::parse(&format!("x^2 + {c} * sin(x)"), 1).unwrap();
        prop_assert_eq!(assemble_hamiltonian(&v, n).unwrap().hermitian_defect(), 0.0);
    }

    /// <H u, u> lies in the sector of V.
    #[test]
    fn numerical_range_in_sector(seed in any::<u64>(), n in 1usize..5, t in 0.0f64..1.4) {
        let v = PotentialSpec::parse(&format!("x^2 * exp(i * {t})"), 1).unwrap().with_sector(t, 0.0).unwrap();
        let h = assemble_hamiltonian(&v, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<C64> = (0..h.rows()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let hu = h.mul_vec(&u).unwrap();
        let q: C64 = hu.iter().zip(&u).map(|(a, b)| a * b.conj()).sum();
        prop_assert!(q.arg() >= -1e-12 && q.arg() <= t + 1e-12);
    }

    /// Stage points are exactly the lattice points passing the dense sigma test.
    #[test]
    fn stage_matches_dense_test(n in 1usize..4, eps in 0.2f64..2.0) {
        let v = PotentialSpec::parse("x^2", 1).unwrap();
        let pc = pseudospectrum_stage(&v, eps, n).unwrap();
        let h = assemble_hamiltonian(&v, n).unwrap();
        for z in pc.stage.grid.unwrap().points() {
            let s = common::sigma_min_shifted(&h, z);
            if (s - eps).abs() > 1e-7 {
                prop_assert_eq!(pc.contains(z), s <= eps);
                prop_assert_eq!(is_sigma_min_above(&h.minus_shift(z), eps, DEFAULT_ETA).unwrap(), s > eps);
            }
        }
    }

    /// Real potentials put the output within eps of the real axis.
    #[test]
    fn real_potential_stays_near_axis(n in 1usize..6, c in 0.0f64..2.0) {
        let v = PotentialSpec::parse(&format!("x^2 + {c} * cos(3 * x)"), 1).unwrap();
        let pc = pseudospectrum_stage(&v, 1.0 / n as f64, n).unwrap();
        let slack = 1.0 / (2 * n) as f64;
        prop_assert!(!pc.is_empty());
        for z in &pc.points {
            prop_assert!(z.im.abs() <= 1.0 / n as f64 + slack);
        }
    }
}
