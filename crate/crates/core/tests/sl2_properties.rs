use std::f64::consts::{FRAC_PI_2, PI};

use furstenberg::sl2::*;
use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use proptest::prelude::*;

fn element() -> impl Strategy<Value = GroupElement> {
    (0.0..PI, 1.01f64..100.0, 0.0..PI).prop_map(|(a, l, b)| GroupElement::from_cartan(a, l, b))
}

fn lie(max: f64) -> impl Strategy<Value = LieVector> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..max).prop_filter_map("nonzero", |(a, b, c, r)| {
        let v = LieVector::new(a, b, c);
        (v.norm() > 1e-3).then(|| v.scale(r / v.norm()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn attractor_identity(t1 in 0.0..PI, lam in 10.0f64..1e3, t2 in 0.0..PI, y in 0.1f64..(PI - 0.1)) {
        let g = GroupElement::from_cartan(t1, lam, t2);
        let c = cartan_decompose(&g).unwrap();
        let b = ProjectivePoint::new(c.b_minus().angle + y);
        let x = b.distance(&c.b_minus());
        prop_assume!(x >= 0.1);
        let w = g.apply(b.vector());
        let u = c.b_plus().vector();
        let d = (u[0] * w[1] - u[1] * w[0]).abs().atan2((u[0] * w[0] + u[1] * w[1]).abs());
        prop_assert!((d - c.b_plus().distance(&act(&g, b))).abs() < 1e-12);
        prop_assert!(d <= (0.1f64.tan().recip() / (lam * lam)).atan() * (1.0 + 1e-9));
        let predicted = (1.0 / (c.lambda * c.lambda * x.tan())).atan();
        prop_assert!((d - predicted).abs() <= 1e-8 * predicted.max(1e-12), "{d} vs {predicted}");
    }

    #[test]
    fn product_norm_sandwich(g1 in element(), g2 in element()) {
        let (c1, c2) = (cartan_decompose(&g1).unwrap(), cartan_decompose(&g2).unwrap());
        let n = (g1 * g2).norm();
        let upper = g1.norm() * g2.norm();
        let lower = upper * c1.b_minus().distance(&c2.b_plus()).sin();
        prop_assert!(n <= upper * (1.0 + 1e-12));
        prop_assert!(lower <= n * (1.0 + 1e-12));
    }

    #[test]
    fn derivative_bounds_and_integral(g in element()) {
        let n2 = g.norm().powi(2);
        let m = 1 << 14;
        let h = PI / m as f64;
        let mut sum = 0.0;
        for i in 0..m {
            let d = act_derivative(&g, i as f64 * h);
            prop_assert!(d >= (1.0 / n2) * (1.0 - 1e-12) && d <= n2 * (1.0 + 1e-12));
            sum += d * h;
        }
        // periodic trapezoid sum converges spectrally for ‖g‖ ≤ 100 at this grid
        prop_assume!(g.norm() <= 30.0);
        prop_assert!((sum - PI).abs() < 1e-8, "{sum}");
    }

    #[test]
    fn derivative_matches_finite_difference(g in element(), x in 0.0..PI) {
        let h = 1e-6;
        let fd = angle_diff(act(&g, ProjectivePoint::new(x + h)).angle, act(&g, ProjectivePoint::new(x - h)).angle) / (2.0 * h);
        let d = act_derivative(&g, x);
        prop_assert!((fd - d).abs() <= 1e-6 * d.max(1.0), "{fd} vs {d}");
    }

    #[test]
    fn cartan_roundtrip(t1 in 0.0..PI, log_l in 0.01f64..(1e6f64).ln(), t2 in 0.0..PI) {
        let g = GroupElement::from_cartan(t1, log_l.exp(), t2);
        let c = cartan_decompose(&g).unwrap();
        prop_assert!(c.reconstruct().max_entry_diff_psl(&g) <= 1e-10 * g.norm());
        prop_assert!((c.lambda - g.norm()).abs() <= 1e-10 * g.norm());
    }

    #[test]
    fn exp_log_roundtrip(u in lie(0.5)) {
        let back = log_map(&exp_map(&u)).unwrap();
        let err = back.add(&u.scale(-1.0)).norm();
        prop_assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn rho_operator_norm(b in 0.0..PI, v in lie(1.0)) {
        prop_assert!(rho_form(ProjectivePoint::new(b), &v).abs() <= 2f64.sqrt() * v.norm() + 1e-15);
    }

    #[test]
    fn principal_component_variance(
        pts in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), 3..12),
        t in 0.05f64..0.75,
        b in 0.0..PI,
    ) {
        let vs: Vec<Vector3<f64>> = pts.iter().map(|&(a, b, c)| Vector3::new(a, b, c)).collect();
        let n = vs.len() as f64;
        let mean = vs.iter().sum::<Vector3<f64>>() / n;
        let cov = vs.iter().map(|v| (v - mean) * (v - mean).transpose()).sum::<Matrix3<f64>>() / n;
        let eig = SymmetricEigen::new(cov);
        let (imax, lmax) = eig.eigenvalues.iter().enumerate().fold((0, f64::MIN), |a, (i, &l)| if l > a.1 { (i, l) } else { a });
        prop_assume!(lmax > 1e-6);
        let e = eig.eigenvectors.column(imax);
        let e1 = LieVector::new(e[0], e[1], e[2]);
        let arcs = rho_zero_arcs(&e1, t).unwrap();
        prop_assume!(!arcs.arcs.iter().any(|a| a.contains(b)));
        let bp = ProjectivePoint::new(b);
        let rs: Vec<f64> = vs.iter().map(|v| rho_form(bp, &LieVector::new(v[0], v[1], v[2]))).collect();
        let m = rs.iter().sum::<f64>() / n;
        let var = rs.iter().map(|r| (r - m).powi(2)).sum::<f64>() / n;
        prop_assert!(var >= arcs.delta.powi(2) * lmax * (1.0 - 1e-9) - 1e-15, "{var} {} {lmax}", arcs.delta);
        if arcs.delta >= 1.0 / 3.0 {
            prop_assert!(var >= arcs.delta / 3.0 * lmax * (1.0 - 1e-9) - 1e-15);
        }
    }
}

#[test]
fn b_minus_is_perpendicular_preimage_of_contraction() {
    let g = GroupElement::from_cartan(0.3, 5.0, 1.1);
    let c = cartan_decompose(&g).unwrap();
    let w = g.apply(c.b_minus().vector());
    let len = w[0].hypot(w[1]);
    assert!((len - 1.0 / c.lambda).abs() < 1e-12);
    assert!((c.b_minus().angle - reduce_angle(1.1 + FRAC_PI_2)).abs() < 1e-12);
}
