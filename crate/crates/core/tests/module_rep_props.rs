use amencert::circle::{ActionSpec, Grid, Orbit};
use amencert::group::{GroupSpec, Word};
use amencert::measures::{GridFunction, GridMeasure, MeasuredAction};
use amencert::module_rep::{
    apply_l, apply_pi, build_coboundary_cocycle, build_folner_witness, check_cocycle,
    cocycle_bounds_with, cocycle_constant, folner_defect_exact, lemma_rho_identity_check,
    module_inner, random_smooth_field, random_witness, rho_bounds_series, scalar_inner,
    verify_witness, weighted_cocycle_law_defect, weighted_norm_with, truncated_rho_bounds,
    CocycleFamily, ModuleVector,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const THETAS: [f64; 2] = [0.3, 0.7];

fn tilted(grid: Grid) -> GridMeasure {
    GridMeasure::from_density(GridFunction::from_fn(grid, |x| {
        1.0 + 0.3 * (2.0 * std::f64::consts::PI * x).cos()
    }))
    .unwrap()
}

#[test]
fn folner_defect_is_one_over_n() {
    let z2 = GroupSpec::free_abelian(2);
    let g = Grid::new(16).unwrap();
    let action = ActionSpec::sine_perturbed(z2, g, &[0.1, 0.1], 0.0).unwrap();
    let orbit = Orbit::new(&action);
    for n in [2usize, 5, 10, 50] {
        assert_eq!(folner_defect_exact(z2, n).unwrap(), (1, n as u128));
        let xi = build_folner_witness(z2, n, g).unwrap();
        let r = verify_witness(&xi, &orbit, 0.5).unwrap();
        assert!(r.is_valid_field());
        assert!((r.defect - 1.0 / n as f64).abs() < 1e-12, "n={n}: {}", r.defect);
    }
}

#[test]
fn witness_conditions_are_flagged_independently() {
    let z2 = GroupSpec::free_abelian(2);
    let g = Grid::new(16).unwrap();
    let action = ActionSpec::rotations(z2, g, &[0.1, 0.25]).unwrap();
    let orbit = Orbit::new(&action);
    let good = build_folner_witness(z2, 50, g).unwrap();
    let base = verify_witness(&good, &orbit, 0.1).unwrap();
    assert!(base.is_witness());

    let corner = z2.identity();
    let mut flipped = ModuleVector::zero(z2, g);
    for (k, f) in good.entries() {
        let f = if *k == corner { f.map(|v| -v) } else { f.clone() };
        flipped.add_entry(k.clone(), f).unwrap();
    }
    let r = verify_witness(&flipped, &orbit, 0.1).unwrap();
    assert!(!r.nonnegative && r.unit_norm && r.almost_invariant, "{r:?}");

    let scaled = good.map_entries(|f| f.map(|v| 1.1 * v));
    let r = verify_witness(&scaled, &orbit, 0.1).unwrap();
    assert!(r.nonnegative && !r.unit_norm && r.almost_invariant, "{r:?}");

    let f2 = GroupSpec::free(2);
    let action = ActionSpec::rotations(f2, g, &[0.1, 0.25]).unwrap();
    let point = ModuleVector::from_entries(f2, g, [(f2.identity(), GridFunction::constant(g, 1.0))]).unwrap();
    let r = verify_witness(&point, &Orbit::new(&action), 0.5).unwrap();
    assert!(r.nonnegative && r.unit_norm && !r.almost_invariant, "{r:?}");
    assert_eq!(r.defect, 1.0);
}

fn random_word(rng: &mut ChaCha8Rng, ball: &[Word]) -> Word {
    ball.choose(rng).unwrap().clone()
}

#[test]
fn pi_is_unitary_and_multiplicative() {
    let f2 = GroupSpec::free(2);
    let g = Grid::new(4096).unwrap();
    let action = ActionSpec::sine_perturbed(f2, g, &THETAS, 0.1).unwrap();
    let nu = tilted(g);
    let m = MeasuredAction::new(&action, &nu).unwrap();
    let ball = f2.ball(4).unwrap().elements().to_vec();
    let support = f2.ball(1).unwrap().elements().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (a, b) = (random_word(&mut rng, &ball), random_word(&mut rng, &ball));
        let xi = random_smooth_field(&mut rng, f2, g, &support).unwrap();
        let eta = random_smooth_field(&mut rng, f2, g, &support).unwrap();
        let tol = 1e-5 * (1 + a.len().max(b.len())) as f64;

        let pa_xi = apply_pi(&m, &a, &xi).unwrap();
        let pa_eta = apply_pi(&m, &a, &eta).unwrap();
        let before = scalar_inner(&xi, &eta, &nu).unwrap();
        let after = scalar_inner(&pa_xi, &pa_eta, &nu).unwrap();
        assert!((before - after).abs() <= tol, "{a}: {before} vs {after}");

        let ab = f2.mul(&a, &b).unwrap();
        let direct = apply_pi(&m, &ab, &xi).unwrap();
        let composed = apply_pi(&m, &a, &apply_pi(&m, &b, &xi).unwrap()).unwrap();
        let d = direct.sup_distance(&composed).unwrap();
        assert!(d <= tol, "{a}·{b}: {d:e}");
    }
    let xi = random_smooth_field(&mut rng, f2, g, &support).unwrap();
    assert_eq!(apply_pi(&m, &f2.identity(), &xi).unwrap(), xi);
}

#[test]
fn l_preserves_the_module_inner_product() {
    let f2 = GroupSpec::free(2);
    let g = Grid::new(4096).unwrap();
    let action = ActionSpec::sine_perturbed(f2, g, &THETAS, 0.1).unwrap();
    let orbit = Orbit::new(&action);
    let ball = f2.ball(4).unwrap().elements().to_vec();
    let support = f2.ball(2).unwrap().elements().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let w = random_word(&mut rng, &ball);
        let xi = random_smooth_field(&mut rng, f2, g, &support).unwrap();
        let moved = apply_l(&orbit, &w, &xi).unwrap();
        let lhs = module_inner(&moved, &moved).unwrap();
        let inv = orbit.phi(&f2.inv(&w).unwrap()).unwrap();
        let rhs = module_inner(&xi, &xi).unwrap().compose_with(&inv).unwrap();
        assert!(lhs.sup_distance(&rhs).unwrap() <= 1e-4, "{w}");
        assert!((lhs.max() - module_inner(&xi, &xi).unwrap().max()).abs() <= 1e-4);

        let back = apply_l(&orbit, &f2.inv(&w).unwrap(), &moved).unwrap();
        assert!(back.sup_distance(&xi).unwrap() <= 1e-4 * (1 + w.len()) as f64);
    }
}

#[test]
fn invariant_measure_makes_pi_equal_l() {
    let f2 = GroupSpec::free(2);
    let g = Grid::new(256).unwrap();
    let action = ActionSpec::rotations(f2, g, &THETAS).unwrap();
    let leb = GridMeasure::lebesgue(g);
    let m = MeasuredAction::new(&action, &leb).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let xi = random_smooth_field(&mut rng, f2, g, f2.ball(1).unwrap().elements()).unwrap();
    for w in f2.ball(2).unwrap().elements() {
        assert_eq!(apply_pi(&m, w, &xi).unwrap(), apply_l(m.orbit(), w, &xi).unwrap());
    }
}

#[test]
fn truncated_bounds_are_monotone_and_satisfy_rho_identities() {
    let f2 = GroupSpec::free(2);
    let g = Grid::new(4096).unwrap();
    let action = ActionSpec::sine_perturbed(f2, g, &THETAS, 0.1).unwrap();
    let nu = tilted(g);
    let m = MeasuredAction::new(&action, &nu).unwrap();
    let series = rho_bounds_series(&m, 3).unwrap();
    for w in series.windows(2) {
        assert!(w[0].0.values().iter().zip(w[1].0.values()).all(|(a, b)| a <= b));
        assert!(w[0].1.values().iter().zip(w[1].1.values()).all(|(a, b)| a >= b));
    }
    let (hi, lo) = &series[3];
    assert!(hi.min() >= 1.0 && lo.max() <= 1.0);

    let a = f2.parse_word("a").unwrap();
    let d = lemma_rho_identity_check(&m, &a, 2).unwrap();
    assert!(d.sup <= 5e-4 && d.inf <= 5e-4, "{d:?}");
    for w in f2.ball(2).unwrap().elements() {
        let d = lemma_rho_identity_check(&m, w, 2).unwrap();
        let tol = 1e-3 * (1 + w.len()) as f64;
        assert!(d.sup <= tol && d.inf <= tol, "{w}: {d:?}");
    }
    assert_eq!(
        lemma_rho_identity_check(&m, &f2.identity(), 2).unwrap(),
        amencert::module_rep::LemmaDefects { sup: 0.0, inf: 0.0 }
    );
}

#[test]
fn ball_witness_overlap_radius() {
    let f2 = GroupSpec::free(2);
    let g = Grid::new(64).unwrap();
    let action = ActionSpec::sine_perturbed(f2, g, &THETAS, 0.1).unwrap();
    let orbit = Orbit::new(&action);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let support: Vec<(Word, f64)> = f2.ball(2).unwrap().elements().iter().map(|k| (k.clone(), 1.0)).collect();
    let xi = random_witness(&mut rng, f2, g, &support).unwrap();
    let radius = xi.support_spread().unwrap() + 1;
    for w in f2.ball(radius + 1).unwrap().elements() {
        let overlap = module_inner(&xi, &apply_l(&orbit, w, &xi).unwrap()).unwrap();
        if w.len() >= radius {
            assert_eq!(overlap.max(), 0.0, "{w}");
        }
    }
}

#[test]
fn coboundary_cocycle_growth_and_law() {
    let f2 = GroupSpec::free(2);
    let g = Grid::new(1024).unwrap();
    let action = ActionSpec::sine_perturbed(f2, g, &THETAS, 0.1).unwrap();
    let nu = GridMeasure::lebesgue(g);
    let m = MeasuredAction::new(&action, &nu).unwrap();
    let orbit = m.orbit();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let family = CocycleFamily::ball_levels(&mut rng, f2, g, &[0, 0, 1, 1, 2, 2, 3, 3]).unwrap();
    let k = cocycle_constant(orbit, &family).unwrap();
    assert!(k > 0.0 && k <= 2.0 * family.levels().len() as f64);

    let (_, lo) = truncated_rho_bounds(&m, 3).unwrap();
    let ball = f2.ball(6).unwrap();
    for w in ball.elements() {
        let b = cocycle_bounds_with(orbit, &family, w, k).unwrap();
        assert!(b.violation() <= 1e-9, "{w}: {}", b.violation());
        let weighted = weighted_norm_with(&m, &family, &lo, k, w).unwrap();
        assert!(weighted.lower <= weighted.value + 1e-9, "{w}: {weighted:?}");
        assert!(weighted.value <= weighted.upper + 1e-9, "{w}: {weighted:?}");
    }
    let far = f2.parse_word("abababa").unwrap();
    let b = cocycle_bounds_with(orbit, &family, &far, k).unwrap();
    let spread = (b.norm.min() - 16.0).abs().max((b.norm.max() - 16.0).abs());
    assert!(spread < 1e-5, "{spread:e}");

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let small = f2.ball(3).unwrap().elements().to_vec();
    for _ in 0..30 {
        let (x, y) = (random_word(&mut rng, &small), random_word(&mut rng, &small));
        let d = check_cocycle(orbit, &family, &x, &y).unwrap();
        assert!(d <= 1e-4 * (x.len() + y.len()).max(1) as f64, "{x}·{y}: {d:e}");
        let wd = weighted_cocycle_law_defect(&m, &family, 3, &x, &y).unwrap();
        assert!(wd <= 1e-3, "{x}·{y}: {wd:e}");
    }
    for b in build_coboundary_cocycle(orbit, &family, &f2.identity()).unwrap() {
        assert!(b.entries().all(|(_, f)| f.values().iter().all(|&v| v == 0.0)));
    }
}
