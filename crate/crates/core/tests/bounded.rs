mod common;

use proptest::prelude::*;
use scitower::schrodinger::bounded::*;
use scitower::schrodinger::PotentialSpec;
use scitower::{ComplexMatrix, C64};
use std::f64::consts::PI;

/// `(-2πi)^s ∫_l^{l+1} x^s e^{2πi(k - xi)x} dx` by composite Gauss-Legendre.
fn gabor_oracle(k: i64, l: i64, s: u32, xi: f64) -> C64 {
    let alpha = 2.0 * PI * (k as f64 - xi);
    let f = |x: f64| x.powi(s as i32) * C64::new(0.0, alpha * x).exp();
    let (a, b) = (l as f64, l as f64 + 1.0);
    let re = common::gauss_legendre(|x| f(x).re, a, b, 64);
    let im = common::gauss_legendre(|x| f(x).im, a, b, 64);
    C64::new(re, im) * C64::new(0.0, -2.0 * PI).powu(s)
}

/// Star discrepancy from the definition: corners from the coordinates and 1,
/// with closed and open boxes.
fn brute_discrepancy(pts: &[[f64; 2]]) -> f64 {
    let n = pts.len() as f64;
    let mut xs: Vec<f64> = pts.iter().map(|p| p[0]).chain([1.0]).collect();
    let mut ys: Vec<f64> = pts.iter().map(|p| p[1]).chain([1.0]).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let mut best = 0.0f64;
    for &u in &xs {
        for &v in &ys {
            let closed = pts.iter().filter(|p| p[0] <= u && p[1] <= v).count() as f64;
            let open = pts.iter().filter(|p| p[0] < u && p[1] < v).count() as f64;
            best = best.max(closed / n - u * v).max(u * v - open / n);
        }
    }
    best
}

fn relative(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let diff = ComplexMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] - b[(i, j)]);
    diff.frobenius_norm() / b.frobenius_norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn radical_inverse_reverses_digits(k in 1u64..1_000_000, b in 2u64..12) {
        let mut digits = Vec::new();
        let mut q = k;
        while q > 0 {
            digits.push(q % b);
            q /= b;
        }
        let want: f64 = digits.iter().enumerate().map(|(i, &d)| d as f64 / (b as f64).powi(i as i32 + 1)).sum();
        prop_assert!((radical_inverse(k, b) - want).abs() < 1e-15);
    }

    #[test]
    fn discrepancy_2d_matches_definition(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..40)) {
        let pts: Vec<[f64; 2]> = pts.into_iter().map(|(a, b)| [a, b]).collect();
        prop_assert!((star_discrepancy_2d(&pts) - brute_discrepancy(&pts)).abs() < 1e-12);
    }

    #[test]
    fn discrepancy_1d_matches_definition(xs in prop::collection::vec(0.0f64..1.0, 1..60)) {
        let n = xs.len() as f64;
        let want = xs.iter().chain([1.0].iter()).fold(0.0f64, |acc, &u| {
            let closed = xs.iter().filter(|&&x| x <= u).count() as f64;
            let open = xs.iter().filter(|&&x| x < u).count() as f64;
            acc.max(closed / n - u).max(u - open / n)
        });
        prop_assert!((star_discrepancy_1d(&xs) - want).abs() < 1e-12);
    }

    #[test]
    fn gabor_transform_matches_quadrature(k in -6i64..7, l in -6i64..7, s in 0u32..4, t in -5.0f64..5.0) {
        let xi = k as f64 + t;
        let got = gabor_hat_eval(k, l, s, xi).unwrap();
        let want = gabor_oracle(k, l, s, xi);
        prop_assert!((got - want).norm() <= 1e-9 * (1.0 + want.norm()), "{} vs {}", got, want);
    }

    /// The envelope holds for s <= 1 everywhere and for every order on |xi - k| <= 1.
    #[test]
    fn envelope_holds(k in -8i64..9, l in -8i64..9, s in 0u32..4, t in -6.0f64..6.0) {
        prop_assume!(s <= 1 || t.abs() <= 1.0);
        let xi = k as f64 + t;
        let v = gabor_hat_eval(k, l, s, xi).unwrap().norm();
        prop_assert!(v <= gabor_envelope(k, l, s, xi) * (1.0 + 1e-12));
    }

    /// Each order is the xi-derivative of the one below.
    #[test]
    fn gabor_derivatives_by_differences(k in -4i64..5, l in -4i64..5, s in 0u32..3, xi in -6.0f64..6.0) {
        let h = 1e-5;
        let fd = (gabor_hat_eval(k, l, s, xi + h).unwrap() - gabor_hat_eval(k, l, s, xi - h).unwrap()) / (2.0 * h);
        let d = gabor_hat_eval(k, l, s + 1, xi).unwrap();
        prop_assert!((fd - d).norm() <= 1e-4 * (1.0 + d.norm()));
    }
}

#[test]
fn halton_meets_discrepancy_bound() {
    for bases in [vec![2u64], vec![3], vec![2, 3], vec![2, 5]] {
        let pts: Vec<Vec<f64>> = (1..=400u64).map(|k| halton(k, &bases)).collect();
        for n in 1..=400usize {
            let d = if bases.len() == 1 {
                star_discrepancy_1d(&pts[..n].iter().map(|p| p[0]).collect::<Vec<_>>())
            } else {
                star_discrepancy_2d(&pts[..n].iter().map(|p| [p[0], p[1]]).collect::<Vec<_>>())
            };
            assert!(d <= halton_bound(&bases, n as u64), "{bases:?} n = {n}");
        }
    }
}

#[test]
fn bases_are_validated() {
    assert!(validate_bases(&[2, 4]).is_err());
    assert!(validate_bases(&[1]).is_err());
    assert!(validate_bases(&[]).is_err());
    assert!(validate_bases(&[4, 9, 5]).is_ok());
    assert!(QmcPlan::new(vec![2], 0.0, 10).is_err());
}

/// The printed third-derivative bound fails just outside the unit window.
#[test]
fn envelope_counterexample_third_derivative() {
    let worst = (1..2000)
        .map(|i| {
            let xi = 1.0 + i as f64 * 1e-3;
            gabor_hat_eval(0, 0, 3, xi).unwrap().norm() / gabor_envelope(0, 0, 3, xi)
        })
        .fold(0.0f64, f64::max);
    assert!(worst > 1.2 && worst < 1.25, "{worst}");
}

#[test]
fn sigma_constants() {
    assert_eq!(sigma(1), 1.0);
    assert_eq!(sigma(2), 3.0);
    assert_eq!(sigma(3), 13.0);
}

#[test]
fn qmc_integrates_polynomials_on_the_box() {
    let plan = QmcPlan::new(vec![2, 3], 1.5, 1 << 14).unwrap();
    let got = qmc_inner(|x| Ok(C64::new(x[0] * x[0] + x[1], 0.0)), |_| Ok(C64::new(1.0, 0.0)), &plan).unwrap();
    // ∫∫ x^2 + y over [-1.5, 1.5]^2 = 3 * 2 * 1.5^3 / 3
    let exact = 2.0 * 1.5f64.powi(3);
    let cs = c_star(&[2, 3]).unwrap();
    let n = plan.nodes as f64;
    let tv = 2.0 * 1.5 * 3.0 + 3.0;
    assert!((got.re - exact).abs() <= 9.0 * tv * cs * n.ln().powi(2) / n);
}

fn small_plan() -> QmcPlan {
    QmcPlan::new(vec![2], 6.0, 4096).unwrap()
}

#[test]
fn z_matrices_are_hermitian_psd() {
    let theta = GaborIndexMap::new(1, 9).unwrap();
    for src in ["cos(x)", "x / (1 + x^2) + i * sin(x)"] {
        let zs = ZStage::assemble(&PotentialSpec::parse(src, 1).unwrap(), &theta, &small_plan()).unwrap();
        for z in [C64::new(0.0, 0.0), C64::new(2.5, -1.0), C64::new(-3.0, 4.0)] {
            for zm in [zs.z(z), zs.z_twin(z)] {
                let scale = zm.frobenius_norm();
                assert!(zm.hermitian_defect() <= 1e-12 * scale);
                let ev = common::hermitian_eigenvalues(&zm);
                assert!(ev[0] >= -1e-10 * scale, "{src} at {z}: {}", ev[0]);
            }
        }
    }
}

#[test]
fn z_stage_matches_component_form() {
    let theta = GaborIndexMap::new(1, 7).unwrap();
    for src in ["cos(x)", "exp(-x^2) * (1 + i)"] {
        let v = PotentialSpec::parse(src, 1).unwrap();
        let zs = ZStage::assemble(&v, &theta, &small_plan()).unwrap();
        let zc = ZComponents::assemble(&v, &theta, &small_plan()).unwrap();
        for z in [C64::new(0.0, 0.0), C64::new(1.5, 2.0), C64::new(-4.0, -0.5)] {
            assert!(relative(&zs.z(z), &zc.z(z)) < 1e-10, "{src} at {z}");
        }
    }
    let theta = GaborIndexMap::new(2, 5).unwrap();
    let v = PotentialSpec::parse("cos(x1) * sin(x2)", 2).unwrap();
    let plan = QmcPlan::new(vec![2, 3], 3.0, 4096).unwrap();
    let zs = ZStage::assemble(&v, &theta, &plan).unwrap();
    let zc = ZComponents::assemble(&v, &theta, &plan).unwrap();
    assert!(relative(&zs.z(C64::new(0.7, 0.2)), &zc.z(C64::new(0.7, 0.2))) < 1e-10);
}

/// A constant potential only shifts the spectral parameter.
#[test]
fn constant_potential_shifts_z() {
    let theta = GaborIndexMap::new(1, 8).unwrap();
    let c = 1.75;
    let zc = ZStage::assemble(&PotentialSpec::parse("1.75", 1).unwrap(), &theta, &small_plan()).unwrap();
    let z0 = ZStage::assemble(&PotentialSpec::parse("0", 1).unwrap(), &theta, &small_plan()).unwrap();
    assert!(zc.real_potential);
    for z in [C64::new(0.0, 0.0), C64::new(3.0, 1.0)] {
        assert!(relative(&zc.z(z), &z0.z(z - c)) < 1e-10);
    }
}

#[test]
fn capped_schedule_flags_changes() {
    let budget = BvBudget::new("1", vec![2]).unwrap();
    let caps = ScheduleCaps::default();
    let plan = schedule_n_of_m(&budget, 4, ScheduleMode::Capped, &caps).unwrap();
    assert_eq!(plan.n, caps.n_cap);
    assert!(plan.nodes >= caps.nodes_min && plan.nodes <= caps.nodes_cap);
    assert!(plan.flags.iter().any(|f| f.contains("truncated")));
    assert!(schedule_n_of_m(&budget, 4, ScheduleMode::Strict, &caps).is_err());
    // a small request passes strict mode untouched
    let plan = stage_plan(&BvBudget::new("2", vec![2]).unwrap(), 3, ScheduleMode::Strict, &caps).unwrap();
    assert_eq!((plan.n, plan.nodes), (3, 48));
    assert!(plan.flags.is_empty());
}

#[test]
fn schedule_grows_with_m() {
    let budget = BvBudget::new("1 + a", vec![2]).unwrap();
    let ns: Vec<u64> = (1..=3).map(|m| budget.n_of_m(&GaborIndexMap::new(1, m).unwrap()).unwrap()).collect();
    assert!(ns.windows(2).all(|w| w[0] <= w[1]), "{ns:?}");
    for (m, &n) in (1..=3).zip(&ns) {
        let theta = GaborIndexMap::new(1, m).unwrap();
        let t = 1.0 / (m as f64).powi(3);
        assert!(budget.tau(&theta, n).unwrap() <= t);
        assert!(n == 1 || budget.tau(&theta, n - 1).unwrap() > t);
    }
}

#[test]
fn height_two_inputs_are_checked() {
    let p = BoundedProblem::new(PotentialSpec::parse("0", 1).unwrap(), BvBudget::new("1", vec![2]).unwrap(), ScheduleMode::Capped)
        .unwrap();
    assert!(spectrum_stage_h2(&p, 3, 3).is_err());
    assert!(spectrum_stage_h2(&p, 6, 8).is_err());
    assert!(pseudospectrum_stage_h2(&p, 0.1, 4, 6).is_err());
    assert!(BoundedProblem::new(PotentialSpec::parse("0", 2).unwrap(), BvBudget::new("1", vec![2]).unwrap(), ScheduleMode::Capped)
        .is_err());
}

/// V = 0, z = 0: Z is the QMC Gram matrix of the Laplacians, checked against
/// tensor Gauss-Legendre quadrature over the same box.
#[test]
fn free_laplacian_gram_against_quadrature() {
    let theta = GaborIndexMap::new(1, 6).unwrap();
    let plan = QmcPlan::new(vec![2], 6.0, 1 << 14).unwrap();
    let zs = ZStage::assemble(&PotentialSpec::parse("0", 1).unwrap(), &theta, &plan).unwrap();
    let z = zs.z(C64::new(0.0, 0.0));
    let lap = |j: usize, x: f64| {
        let (k, l) = theta.indices[j][0];
        gabor_hat_eval(k, l, 2, x).unwrap()
    };
    let m = theta.m();
    let want = ComplexMatrix::from_fn(m, m, |i, j| {
        let re = common::gauss_legendre(|x| (lap(j, x) * lap(i, x).conj()).re, -6.0, 6.0, 400);
        let im = common::gauss_legendre(|x| (lap(j, x) * lap(i, x).conj()).im, -6.0, 6.0, 400);
        C64::new(re, im)
    });
    assert!(relative(&z, &want) < 1e-2, "{}", relative(&z, &want));
}
