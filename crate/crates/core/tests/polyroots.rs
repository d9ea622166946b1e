use proptest::prelude::*;
use scitower::polyroots::{
    newton_step, quartic_tower, root_certificate, roots_stage, roots_stage_with, starting_set, Polynomial, StartingMode,
};
use scitower::C64;

fn roots_strategy(d: std::ops::Range<usize>) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), d).prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

fn dist(z: C64, roots: &[C64]) -> f64 {
    roots.iter().map(|r| (z - r).norm()).fold(f64::INFINITY, f64::min)
}

fn separated(roots: &[C64], gap: f64) -> bool {
    roots.iter().enumerate().all(|(i, a)| roots[i + 1..].iter().all(|b| (a - b).norm() > gap))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Every output point has a root within d / sqrt(n).
    #[test]
    fn outputs_are_certified(roots in roots_strategy(1..8), n in 1usize..200) {
        let p = Polynomial::from_roots(&roots).unwrap();
        let pc = roots_stage(&p, n).unwrap();
        let d = roots.len() as f64;
        for z in &pc.points {
            prop_assert!(dist(*z, &roots) <= d / (n as f64).sqrt() + 1e-9);
        }
    }

    /// With well-separated simple roots every root is found.
    #[test]
    fn all_roots_found(roots in roots_strategy(1..8)) {
        prop_assume!(separated(&roots, 0.2));
        let p = Polynomial::from_roots(&roots).unwrap();
        let pc = roots_stage(&p, 2000).unwrap();
        for r in &roots {
            let d = pc.points.iter().map(|z| (z - r).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-6, "root {} missed by {}", r, d);
        }
    }

    #[test]
    fn starting_points_sit_between_r_and_2r(d in 1usize..40, r in 0.1f64..100.0, strict in any::<bool>()) {
        let mode = if strict { StartingMode::HssStrict } else { StartingMode::Dense };
        let s = starting_set(d, r, mode).unwrap();
        prop_assert!(!s.points.is_empty());
        for z in &s.points {
            prop_assert!(z.norm() > r && z.norm() < 2.0 * r);
        }
    }

    #[test]
    fn root_bound_holds(roots in roots_strategy(1..10), scale in 0.1f64..10.0) {
        let roots: Vec<C64> = roots.into_iter().map(|z| z * scale).collect();
        let p = Polynomial::from_roots(&roots).unwrap();
        let r = p.root_bound();
        prop_assert!(roots.iter().all(|z| z.norm() <= r * (1.0 + 1e-9)));
    }

    /// A certified step places a root within eps.
    #[test]
    fn certificate_is_sound(roots in roots_strategy(1..7), re in -3.0f64..3.0, im in -3.0f64..3.0, eps in 0.01f64..1.0) {
        let p = Polynomial::from_roots(&roots).unwrap();
        let z = C64::new(re, im);
        if let Ok(next) = newton_step(&p, z) {
            if root_certificate(&p, z, next, eps) {
                prop_assert!(dist(z, &roots) <= eps + 1e-9);
            }
        }
    }
}

#[test]
fn hss_mode_finds_roots_of_a_cubic() {
    let roots = [C64::new(1.0, 0.0), C64::new(-0.5, 0.8), C64::new(-0.5, -0.8)];
    let p = Polynomial::from_roots(&roots).unwrap();
    let pc = roots_stage_with(&p, 500, StartingMode::HssStrict).unwrap();
    for r in roots {
        assert!(dist(r, &pc.points) < 1e-6);
    }
}

/// The distance from the tower output to the root set shrinks along (n, n, n).
#[test]
fn quartic_error_decreases() {
    let cases: [[f64; 2]; 4] = [[1.0, 2.0], [-1.0, 0.5], [0.3, 1.7], [2.0, -1.5]];
    for [a, b] in cases {
        let roots = [C64::new(a, 0.0), C64::new(b, 0.0), C64::new(0.2, 1.0), C64::new(0.2, -1.0)];
        let p = Polynomial::from_roots(&roots).unwrap();
        let errs: Vec<f64> =
            [20, 40, 80].iter().map(|&n| dist(quartic_tower(&p, n, n, n, 0, 8).unwrap().root, &roots)).collect();
        assert!(errs[1] <= errs[0] + 1e-12 && errs[2] <= errs[1] + 1e-12, "{roots:?}: {errs:?}");
        assert!(errs[2] < 1e-6, "{errs:?}");
    }
}

#[test]
fn parse_and_reject() {
    let p = Polynomial::parse("2, -3, 1").unwrap();
    assert_eq!(p.degree(), 2);
    assert_eq!(p.eval(C64::new(1.0, 0.0)), C64::new(0.0, 0.0));
    assert!(Polynomial::from_real(&[1.0]).is_err());
    assert!(Polynomial::from_real(&[1.0, 0.0]).is_err());
    assert!(roots_stage(&p, 0).is_err());
    assert!(quartic_tower(&p, 4, 4, 4, 0, 1).is_err());
}
