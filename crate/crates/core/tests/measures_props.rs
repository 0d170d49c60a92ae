use std::f64::consts::PI;

use amencert::circle::{ActionSpec, Grid};
use amencert::group::{GroupSpec, Word};
use amencert::measures::{
    affinity, avg_hellinger_sq, avg_hellinger_sq_pushforward, hellinger, hellinger_sq, integrate,
    l1_distance, pushforward, test_battery, GridFunction, GridMeasure, MeasuredAction,
};
use proptest::prelude::*;

const THETAS: [f64; 2] = [0.3, 0.7];

fn density(grid: Grid, coeffs: &[(f64, f64)], floor: f64) -> GridMeasure {
    GridMeasure::from_density(GridFunction::from_fn(grid, |x| {
        let s: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, (a, b))| a * (2.0 * PI * (k + 1) as f64 * x).cos() + b * (2.0 * PI * (k + 1) as f64 * x).sin())
            .sum();
        (1.0 + s).max(floor)
    }))
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-0.8f64..0.8, -0.8f64..0.8), 1..4)
}

#[test]
fn hellinger_half_interval_fixture() {
    let g = Grid::new(4096).unwrap();
    let leb = GridMeasure::lebesgue(g);
    let half = GridMeasure::from_density(GridFunction::from_fn(g, |x| if x < 0.5 { 2.0 } else { 0.0 })).unwrap();
    let a = affinity(&leb, &half, &leb).unwrap();
    assert!((a - 0.5f64.sqrt()).abs() < 1e-9);
    let h = hellinger(&leb, &half, &leb).unwrap();
    assert!((h - 0.54120).abs() < 1e-4, "{h}");
    assert!((l1_distance(&leb, &half, &leb).unwrap() - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn hellinger_metric_and_sandwich(
        c1 in coeffs(),
        c2 in coeffs(),
        c3 in coeffs(),
        floor in prop_oneof![Just(0.0), Just(1e-3)],
    ) {
        let g = Grid::new(256).unwrap();
        let leb = GridMeasure::lebesgue(g);
        let (m1, m2, m3) = (density(g, &c1, floor), density(g, &c2, floor), density(g, &c3, floor));
        let h12 = hellinger(&m1, &m2, &leb).unwrap();
        let h21 = hellinger(&m2, &m1, &leb).unwrap();
        let h13 = hellinger(&m1, &m3, &leb).unwrap();
        let h23 = hellinger(&m2, &m3, &leb).unwrap();
        prop_assert_eq!(hellinger(&m1, &m1, &leb).unwrap(), 0.0);
        prop_assert!((h12 - h21).abs() < 1e-14);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&h12));
        prop_assert!(h13 <= h12 + h23 + 1e-12);

        let h2 = hellinger_sq(&m1, &m2, &leb).unwrap();
        let a = affinity(&m1, &m2, &leb).unwrap();
        prop_assert!((h2 - (1.0 - a)).abs() < 1e-12);
        let tv = 0.5 * l1_distance(&m1, &m2, &leb).unwrap();
        prop_assert!(h2 <= tv + 1e-12, "{h2} > {tv}");
        prop_assert!(tv <= h12 * (2.0 - h2).sqrt() + 1e-12, "{tv} > {}", h12 * (2.0 - h2).sqrt());
    }

    #[test]
    fn hellinger_does_not_depend_on_dominating_measure(
        c1 in coeffs(),
        c2 in coeffs(),
        cn in coeffs(),
    ) {
        let g = Grid::new(256).unwrap();
        let leb = GridMeasure::lebesgue(g);
        let nu = density(g, &cn, 0.05);
        let (m1, m2) = (density(g, &c1, 0.0), density(g, &c2, 0.0));
        prop_assert!((hellinger(&m1, &m2, &leb).unwrap() - hellinger(&m1, &m2, &nu).unwrap()).abs() < 1e-12);
        prop_assert!((l1_distance(&m1, &m2, &leb).unwrap() - l1_distance(&m1, &m2, &nu).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn defining_identity_on_ball_of_radius_four() {
    let f2 = GroupSpec::free(2);
    let g = Grid::new(4096).unwrap();
    let action = ActionSpec::sine_perturbed(f2, g, &THETAS, 0.1).unwrap();
    for nu in [GridMeasure::lebesgue(g), density(g, &[(0.3, -0.2), (0.1, 0.05)], 0.0)] {
        let m = MeasuredAction::new(&action, &nu).unwrap();
        let mut worst = 0.0f64;
        for w in f2.ball(4).unwrap().elements() {
            for (_, f) in test_battery() {
                worst = worst.max(m.defining_identity_defect(w, f).unwrap());
            }
        }
        assert!(worst <= 1e-5, "{worst}");
    }
}

fn max_cocycle_defect(n: usize) -> f64 {
    let f2 = GroupSpec::free(2);
    let g = Grid::new(n).unwrap();
    let action = ActionSpec::sine_perturbed(f2, g, &THETAS, 0.1).unwrap();
    let nu = density(g, &[(0.3, -0.2)], 0.0);
    let m = MeasuredAction::new(&action, &nu).unwrap();
    let ball = f2.ball(2).unwrap();
    let mut worst = 0.0f64;
    for a in ball.elements() {
        for b in ball.elements() {
            if a.is_identity() || b.is_identity() {
                continue;
            }
            let d = m.cocycle_defect(a, b).unwrap();
            assert!(d <= 1e-4 * (a.len() + b.len()) as f64, "{a}·{b}: {d}");
            worst = worst.max(d / (a.len() + b.len()) as f64);
        }
    }
    worst
}

#[test]
fn cocycle_defect_decays_quadratically() {
    let coarse = max_cocycle_defect(512);
    let fine = max_cocycle_defect(1024);
    let ratio = coarse / fine;
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}: {coarse:e} vs {fine:e}");
}

#[test]
fn cocycle_is_exact_for_lebesgue() {
    let f2 = GroupSpec::free(2);
    let g = Grid::new(512).unwrap();
    let action = ActionSpec::sine_perturbed(f2, g, &THETAS, 0.2).unwrap();
    let leb = GridMeasure::lebesgue(g);
    let m = MeasuredAction::new(&action, &leb).unwrap();
    let w = |s: &str| f2.parse_word(s).unwrap();
    assert!(m.cocycle_defect(&w("ab"), &w("Ba")).unwrap() < 1e-4);
}

#[test]
fn generator_derivative_matches_pushforward_oracle() {
    let f2 = GroupSpec::free(2);
    let g = Grid::new(2048).unwrap();
    let action = ActionSpec::sine_perturbed(f2, g, &THETAS, 0.15).unwrap();
    let nu = density(g, &[(0.2, 0.1)], 0.0);
    let m = MeasuredAction::new(&action, &nu).unwrap();
    for s in f2.generators() {
        let word: Word = f2.generator(s).unwrap();
        let pushed = pushforward(&nu, action.generator(s)).unwrap();
        let oracle = pushed.density().zip_with(nu.density(), |a, b| a / b).unwrap();
        let rho = m.rho(&word).unwrap();
        assert!(rho.sup_distance(&oracle).unwrap() < 1e-5, "{s}");
        let mass = integrate(&rho, &nu).unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }
    let direct = avg_hellinger_sq(&action, &nu).unwrap();
    let routed = avg_hellinger_sq_pushforward(&action, &nu).unwrap();
    assert!((direct - routed).abs() < 1e-7, "{direct} vs {routed}");
}

#[test]
fn rotations_preserve_lebesgue() {
    let f2 = GroupSpec::free(2);
    let g = Grid::new(256).unwrap();
    let action = ActionSpec::rotations(f2, g, &THETAS).unwrap();
    let leb = GridMeasure::lebesgue(g);
    let m = MeasuredAction::new(&action, &leb).unwrap();
    for w in f2.ball(3).unwrap().elements() {
        assert!(m.rho(w).unwrap().values().iter().all(|&r| r == 1.0));
    }
    assert_eq!(avg_hellinger_sq(&action, &leb).unwrap(), 0.0);
}
