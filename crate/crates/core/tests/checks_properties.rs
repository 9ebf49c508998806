use furstenberg::checks::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cramer_monotone(b in 0.5f64..3.0, af in 0.05f64..0.95, cf in 0.05f64..0.95, n in 1u32..200) {
        let a = af * b;
        let c = cf * a;
        let here = cramer_bound(a, b, c, n).unwrap();
        prop_assert!(here <= 1.0 + 1e-15);
        prop_assert!(cramer_bound(a, b, c, n + 1).unwrap() <= here * (1.0 + 1e-12));
        let c2 = (c * 1.01).min(a);
        prop_assert!(cramer_bound(a, b, c2, n).unwrap() >= here * (1.0 - 1e-12));
    }

    #[test]
    fn truncated_gaussian_monotone_in_a(r in 0.01f64..10.0, a in 1.0f64..8.0) {
        let lo = TruncatedGaussianSpec::new(r, a).unwrap().stats();
        let hi = TruncatedGaussianSpec::new(r, a * 1.05).unwrap().stats();
        prop_assert!(hi.entropy >= lo.entropy - 1e-12);
        prop_assert!(hi.trace_variance >= lo.trace_variance * (1.0 - 1e-12));
        prop_assert!(lo.entropy <= lo.gaussian_entropy + 1e-12);
        prop_assert!(lo.trace_variance <= 3.0 * r * r * (1.0 + 1e-12));
    }
}

#[test]
fn truncated_gaussian_limits() {
    let s = TruncatedGaussianSpec::new(1.0, 30.0).unwrap().stats();
    assert!((s.entropy - s.gaussian_entropy).abs() < 1e-12);
    assert!((s.trace_variance - 3.0).abs() < 1e-12);
    let six = TruncatedGaussianSpec::new(1.0, 6.0).unwrap().stats();
    assert!((six.entropy - 4.2569).abs() < 1e-3, "{}", six.entropy);
}

#[test]
fn truncated_gaussian_gap_at_two_exceeds_announced_rate() {
    // 3/2 log 2πe − H at a = 2 is 0.8879, above 2e^{−1}
    let s = TruncatedGaussianSpec::new(1.0, 2.0).unwrap().stats();
    let gap = s.gaussian_entropy - s.entropy;
    assert!((gap - 0.8879).abs() < 1e-4, "{gap}");
    assert!(gap > 2.0 * (-1f64).exp());
    let q = truncated_gaussian_stats_quadrature(&TruncatedGaussianSpec::new(1.0, 2.0).unwrap(), 4000);
    assert!((q.entropy - s.entropy).abs() < 1e-9);
}

#[test]
fn failure_semantics() {
    let pass = CheckReport::bound("x", 1.0, 2.0, 0.0);
    let fail = CheckReport::bound("x", 3.0, 2.0, 0.0);
    assert!(!pass.is_failure());
    assert!(fail.is_failure());
    assert!(!fail.clone().inapplicable("out of scope").is_failure());
    let line = fail.to_json_line();
    assert!(!line.contains('\n'));
    let v: serde_json::Value = serde_json::from_str(&line).unwrap();
    assert_eq!(v["pass"], false);
}

#[test]
fn haar_kappa_seed_stable() {
    let a = estimate_haar_kappa(0.05, 4_000_000, 1).unwrap();
    let b = estimate_haar_kappa(0.05, 4_000_000, 2).unwrap();
    assert!((a.kappa - b.kappa).abs() <= 0.01 * a.kappa.max(b.kappa), "{a:?} {b:?}");
    assert!((a.kappa - HAAR_KAPPA).abs() <= 0.02 * HAAR_KAPPA, "{a:?}");
}
