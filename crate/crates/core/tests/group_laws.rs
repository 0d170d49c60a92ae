use amencert::group::{Family, Gen, GroupSpec, Kernel, Word};
use proptest::prelude::*;

fn letters(rank: usize, max_len: usize) -> impl Strategy<Value = Vec<Gen>> {
    prop::collection::vec((0..rank, any::<bool>()), 0..=max_len)
        .prop_map(|v| v.into_iter().map(|(i, inv)| Gen::new(i, inv)).collect())
}

fn text(ls: &[Gen]) -> String {
    ls.iter().map(|s| s.symbol()).collect()
}

/// Free reduction with a stack.
fn stack_reduce(ls: &[Gen]) -> Vec<Gen> {
    let mut out: Vec<Gen> = Vec::new();
    for &s in ls {
        if out.last() == Some(&s.inverse()) {
            out.pop();
        } else {
            out.push(s);
        }
    }
    out
}

fn exponent_sum(ls: &[Gen], rank: usize) -> Vec<i64> {
    let mut e = vec![0i64; rank];
    for s in ls {
        e[s.index()] += if s.is_inverse() { -1 } else { 1 };
    }
    e
}

fn specs() -> impl Strategy<Value = GroupSpec> {
    prop_oneof![
        (1u32..=3).prop_map(GroupSpec::free),
        (1u32..=3).prop_map(GroupSpec::free_abelian),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn axioms_and_length_metric(
        spec in specs(),
        seeds in (letters(3, 10), letters(3, 10), letters(3, 10)),
    ) {
        let rank = spec.rank();
        let clip = |ls: Vec<Gen>| -> Vec<Gen> {
            ls.into_iter().map(|s| Gen::new(s.index() % rank, s.is_inverse())).collect()
        };
        let (x, y, z) = (clip(seeds.0), clip(seeds.1), clip(seeds.2));
        let g = spec.reduce(&x).unwrap();
        let h = spec.reduce(&y).unwrap();
        let k = spec.reduce(&z).unwrap();
        let e = spec.identity();

        let gh_k = spec.mul(&spec.mul(&g, &h).unwrap(), &k).unwrap();
        let g_hk = spec.mul(&g, &spec.mul(&h, &k).unwrap()).unwrap();
        prop_assert_eq!(&gh_k, &g_hk);
        prop_assert_eq!(spec.mul(&e, &g).unwrap(), g.clone());
        prop_assert_eq!(spec.mul(&g, &e).unwrap(), g.clone());
        let gi = spec.inv(&g).unwrap();
        prop_assert!(spec.mul(&g, &gi).unwrap().is_identity());
        prop_assert!(spec.mul(&gi, &g).unwrap().is_identity());

        prop_assert_eq!(gi.len(), g.len());
        let d = |a: &Word, b: &Word| spec.mul(&spec.inv(a).unwrap(), b).unwrap().len();
        prop_assert_eq!(d(&g, &h), d(&h, &g));
        prop_assert!(d(&g, &k) <= d(&g, &h) + d(&h, &k));
        prop_assert_eq!(d(&g, &g), 0);

        match spec.family() {
            Family::Free => {
                prop_assert_eq!(g.letters().to_vec(), stack_reduce(&x));
            }
            Family::FreeAbelian => {
                let ex = exponent_sum(&x, rank);
                prop_assert_eq!(spec.exponents(&g), ex.clone());
                prop_assert_eq!(g.len() as i64, ex.iter().map(|v| v.abs()).sum::<i64>());
                prop_assert_eq!(spec.mul(&g, &h).unwrap(), spec.mul(&h, &g).unwrap());
            }
        }
        prop_assert_eq!(spec.parse_word(&g.to_string()).unwrap(), g.clone());
        prop_assert_eq!(spec.parse_word(&text(&x)).unwrap(), g);
    }

    #[test]
    fn left_generator_action_matches_product(spec in specs(), x in letters(3, 8), i in 0usize..6) {
        let rank = spec.rank();
        let x: Vec<Gen> = x.into_iter().map(|s| Gen::new(s.index() % rank, s.is_inverse())).collect();
        let g = spec.reduce(&x).unwrap();
        let s = spec.generators()[i % spec.num_generators()];
        let direct = spec.mul(&spec.generator(s).unwrap(), &g).unwrap();
        prop_assert_eq!(spec.left_mul_gen(s, &g), direct);
    }

    #[test]
    fn convolution_is_associative(
        a in prop::collection::vec((letters(2, 3), -2.0f64..2.0), 1..4),
        b in prop::collection::vec((letters(2, 3), -2.0f64..2.0), 1..4),
        c in prop::collection::vec((letters(2, 3), -2.0f64..2.0), 1..4),
    ) {
        let spec = GroupSpec::free(2);
        let kern = |v: &[(Vec<Gen>, f64)]| {
            Kernel::from_pairs(spec, v.iter().map(|(ls, x)| (spec.reduce(ls).unwrap(), *x))).unwrap()
        };
        let (p, q, r) = (kern(&a), kern(&b), kern(&c));
        let left = p.convolve(&q).unwrap().convolve(&r).unwrap();
        let right = p.convolve(&q.convolve(&r).unwrap()).unwrap();
        let keys: std::collections::BTreeSet<Word> =
            left.support().chain(right.support()).cloned().collect();
        for g in keys {
            prop_assert!((left.get(&g) - right.get(&g)).abs() < 1e-9);
        }
    }
}

#[test]
fn balls_match_counting_oracles() {
    for k in 1..=3u32 {
        let spec = GroupSpec::free(k);
        for r in 0..=5usize {
            let q = 2 * k as u128 - 1;
            let expected: u128 = 1 + (1..=r).map(|j| 2 * k as u128 * q.pow(j as u32 - 1)).sum::<u128>();
            assert_eq!(spec.ball(r).unwrap().len() as u128, expected, "F_{k} r={r}");
        }
    }
    for d in 1..=3u32 {
        let spec = GroupSpec::free_abelian(d);
        for r in 0..=6i64 {
            let count = lattice_points(d as usize, r);
            assert_eq!(spec.ball(r as usize).unwrap().len(), count, "Z^{d} r={r}");
        }
    }
}

fn lattice_points(d: usize, r: i64) -> usize {
    if d == 0 {
        return 1;
    }
    (-r..=r).map(|x| lattice_points(d - 1, r - x.abs())).sum()
}

#[test]
fn ball_elements_are_distinct_and_within_radius() {
    for spec in [GroupSpec::free(2), GroupSpec::free_abelian(2)] {
        let ball = spec.ball(4).unwrap();
        let set: std::collections::BTreeSet<&Word> = ball.elements().iter().collect();
        assert_eq!(set.len(), ball.len());
        assert!(ball.elements().iter().all(|g| g.len() <= 4));
    }
}
