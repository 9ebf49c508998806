use furstenberg::algebraic::*;
use furstenberg::certificate::{build_example, two_gen_matrices, Family};
use furstenberg::measure::MeasureSpec;
use furstenberg::ExactScalar;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = ExactScalar> {
    (-10_000i64..10_000, 1i64..10_000).prop_map(|(p, q)| ExactScalar::frac(p, q))
}

fn quadratic(d: u64) -> impl Strategy<Value = ExactScalar> {
    (-500i64..500, 1i64..500, -500i64..500, 1i64..500).prop_map(move |(a, b, c, e)| {
        let q = |n: i64, m: i64| BigRational::new(BigInt::from(n), BigInt::from(m));
        ExactScalar::quadratic(q(a, b), q(c, e), d).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn height_of_product_and_sum(x in rational(), y in rational()) {
        let bound = 2.0 * x.height() * y.height();
        prop_assert!((&x * &y).height() <= bound * (1.0 + 1e-12));
        prop_assert!((&x + &y).height() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn quadratic_height_bound(x in quadratic(2), y in quadratic(2)) {
        // normalized heights of degree-2 numbers: H(P(x, y)) ≤ L(P) H(x) H(y)
        let bound = 2.0 * x.height() * y.height();
        prop_assert!((&x * &y).height() <= bound * (1.0 + 1e-9));
        prop_assert!((&x + &y).height() <= bound * (1.0 + 1e-9));
    }

    #[test]
    fn display_parse_roundtrip(x in quadratic(7)) {
        let back: ExactScalar = x.to_string().parse().unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn field_identities(x in quadratic(3), y in quadratic(3)) {
        prop_assert_eq!((&x * &y).conj(), &x.conj() * &y.conj());
        if !y.is_zero() {
            prop_assert_eq!(&(&x * &y) * &y.inv().unwrap(), x.clone());
        }
        let f = x.to_f64() * y.to_f64();
        prop_assert!(((&x * &y).to_f64() - f).abs() <= 1e-9 * f.abs().max(1.0));
    }

    #[test]
    fn two_gen_exact_identity(n in 2u64..=1_000_000) {
        let (a, b) = two_gen_matrices(n).unwrap();
        prop_assert_eq!(a.det().unwrap(), ExactScalar::one());
        prop_assert_eq!(b.det().unwrap(), ExactScalar::one());
        let nb = BigInt::from(n);
        let lhs = (&nb * &nb - 1u32).pow(2) + (BigInt::from(2) * &nb).pow(2);
        prop_assert_eq!(lhs, (&nb * &nb + 1u32).pow(2));
    }
}

proptest! {
    // exact words of length 12 are slow; fewer, larger cases
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn pingpong_sound(
        k in 2usize..=3,
        lam in 40i64..200,
        offset in 1u64..50,
        eps_scale in 0.2f64..0.9,
    ) {
        // exact conjugates of diag(λ) by rational rotations θ_m, θ_m ∘ θ_m, ...
        let (s, c) = theta_n(offset);
        let r = ExactMatrix::rotation(&c, &s).unwrap();
        let d = ExactMatrix::diag(&ExactScalar::int(lam)).unwrap();
        let mut gens = Vec::new();
        let mut rot = ExactMatrix::identity();
        let mut els = Vec::new();
        for _ in 0..k {
            gens.push(d.conjugate_by(&rot).unwrap());
            let g = rot.to_group_element().unwrap();
            els.push((g.m21.atan2(g.m11), lam as f64));
            rot = rot.try_mul(&r).unwrap();
        }
        let step = 2.0 * s.to_f64().atan2(c.to_f64());
        let eps = (eps_scale * step / 2.0).min(0.39);
        if let Ok(cert) = pingpong_certify(&els, eps) {
            prop_assert!(cert.min_gap > 0.0);
            let hit = word_collision_search(&gens, 12, 400, lam as u64).unwrap();
            prop_assert!(hit.is_none(), "{hit:?}");
        }
    }
}

fn entropy_non_increasing(spec: &MeasureSpec, n_max: usize) {
    let levels = exact_product_entropy(spec, n_max).unwrap();
    for w in levels.windows(2) {
        assert!(
            w[1].entropy_per_step <= w[0].entropy_per_step + 1e-12,
            "{:?}: H/n rose from {} to {} at n = {}",
            spec.name,
            w[0].entropy_per_step,
            w[1].entropy_per_step,
            w[1].n
        );
    }
}

#[test]
fn entropy_envelope_monotone_on_fixtures() {
    let fixtures = [
        (Family::TwoGen { n: 2 }, 10),
        (Family::TwoGen { n: 5 }, 10),
        (Family::Rotational { a: 2, entries: None }, 6),
        (Family::Rotational { a: 3, entries: None }, 4),
        (Family::Rotational { a: 4, entries: None }, 4),
        (Family::Rotational { a: 6, entries: None }, 3),
        (Family::LargeElement { r: 2.0, n_steps: 1, symmetrize: false }, 8),
    ];
    for (f, n) in fixtures {
        entropy_non_increasing(&build_example(&f).unwrap(), n);
    }
    // a relation: R_{π/2} has order 2 in PSL, so H(μ*ⁿ)/n drops
    let r = ExactMatrix::rotation(&ExactScalar::zero(), &ExactScalar::one()).unwrap();
    let d = ExactMatrix::diag(&ExactScalar::int(2)).unwrap();
    let spec = MeasureSpec::uniform_exact("relation", vec![r, d]).unwrap();
    entropy_non_increasing(&spec, 8);
    let lv = exact_product_entropy(&spec, 8).unwrap();
    assert!(!lv[7].all_distinct);
}

#[test]
fn two_gen_words_distinct_to_twelve() {
    let spec = build_example(&Family::TwoGen { n: 5 }).unwrap();
    let levels = exact_product_entropy(&spec, 12).unwrap();
    assert!(levels.iter().all(|l| l.all_distinct));
    assert_eq!(levels[11].support, 4096);
    assert!((levels[11].entropy_per_step - 2f64.ln()).abs() < 1e-12);
}
