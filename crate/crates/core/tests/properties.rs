use proptest::prelude::*;
use sphgd_core::rng::{derive_seed, pairwise_sum};
use sphgd_core::sphere::*;
use sphgd_core::sq::{correlation_bound, sda_from_correlations, vstat_tolerance, SdaConvention, SoftIndicator};

proptest! {
    #[test]
    fn legendre_recurrence(n in 3usize..40, l in 1usize..20, t in -1.0f64..1.0) {
        let nf = n as f64;
        let lf = l as f64;
        let r = (lf + nf - 2.0) * legendre(n, l + 1, t) - (2.0 * lf + nf - 2.0) * t * legendre(n, l, t) + lf * legendre(n, l - 1, t);
        prop_assert!(r.abs() < 1e-10);
    }

    #[test]
    fn legendre_bounded_with_endpoints(n in 3usize..40, k in 0usize..24) {
        for i in 0..=1000 {
            let t = -1.0 + 2.0 * i as f64 / 1000.0;
            prop_assert!(legendre(n, k, t).abs() <= 1.0 + 1e-9);
        }
        prop_assert!((legendre(n, k, 1.0) - 1.0).abs() < 1e-12);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((legendre(n, k, -1.0) - sign).abs() < 1e-12);
    }

    #[test]
    fn checked_evaluator_matches(n in 3usize..20, k in 0usize..10, t in -1.0f64..1.0) {
        let ev = LegendreEvaluator::new(n, 10).unwrap();
        prop_assert_eq!(legendre_eval(&ev, k, t).unwrap(), legendre(n, k, t));
    }

    #[test]
    fn harmonic_dim_float_form(n in 3usize..30, k in 0usize..15) {
        let exact = harmonic_dim(n, k).unwrap() as f64;
        prop_assert!((harmonic_dim_f64(n, k) - exact).abs() <= 1e-9 * exact);
    }

    #[test]
    fn sampling_is_deterministic_and_normalized(n in 3usize..12, m in 1usize..300, seed in any::<u64>()) {
        let a = sample_uniform_sphere(n, m, seed).unwrap();
        let b = sample_uniform_sphere(n, m, seed).unwrap();
        prop_assert_eq!(a.as_flat(), b.as_flat());
        for x in a.iter() {
            prop_assert!((dot(x, x).sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_vectors_normalize(v in prop::collection::vec(-10.0f64..10.0, 3..16)) {
        prop_assume!(v.iter().map(|x| x * x).sum::<f64>() > 1e-6);
        let u = UnitVector::normalized(v.clone()).unwrap();
        prop_assert_eq!(u.dim(), v.len());
        prop_assert!((dot(u.coords(), u.coords()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vstat_tolerance_formula(p in 0.0f64..=1.0, t in 1.0f64..1e8) {
        let tol = vstat_tolerance(p, t);
        prop_assert!(tol >= 1.0 / t);
        prop_assert!(tol >= (p * (1.0 - p) / t).sqrt());
        prop_assert!(tol == 1.0 / t || tol == (p * (1.0 - p) / t).sqrt());
    }

    #[test]
    fn soft_indicator_contract(y in -5.0f64..5.0, eps in 0.01f64..3.0, x in -10.0f64..10.0, dx in -0.5f64..0.5) {
        let s = SoftIndicator::new(y, eps).unwrap();
        let v = s.eval(x);
        prop_assert!((0.0..=1.0 / eps + 1e-12).contains(&v));
        let (lo, hi) = s.support();
        if x <= lo || x >= hi {
            prop_assert_eq!(v, 0.0);
        }
        prop_assert!((s.eval(x + dx) - v).abs() <= s.lipschitz() * dx.abs() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn correlation_bound_dominates(n in 3usize..200, k in 0usize..16, t in -1.0f64..1.0) {
        prop_assert!(legendre(n, k, t).abs() <= correlation_bound(n, k, t) * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn sda_is_monotone_in_gamma(values in prop::collection::vec(-1.0f64..1.0, 28), g in 0.01f64..0.5) {
        let d = 8;
        let mut rho = vec![vec![1.0; d]; d];
        let mut it = values.into_iter();
        for (i, j) in (0..d).flat_map(|i| ((i + 1)..d).map(move |j| (i, j))) {
            let v = it.next().unwrap();
            rho[i][j] = v;
            rho[j][i] = v;
        }
        for conv in [SdaConvention::IncludeDiagonal, SdaConvention::OffDiagonal] {
            let lo = sda_from_correlations(&rho, g, conv).unwrap();
            let hi = sda_from_correlations(&rho, 2.0 * g, conv).unwrap();
            prop_assert!(lo <= hi && hi <= d);
        }
    }

    #[test]
    fn seed_derivation_is_pure(master in any::<u64>(), name in "[a-z]{1,12}") {
        prop_assert_eq!(derive_seed(master, &name), derive_seed(master, &name));
    }

    #[test]
    fn pairwise_sum_close_to_naive(xs in prop::collection::vec(-1e3f64..1e3, 0..200)) {
        let naive: f64 = xs.iter().sum();
        prop_assert!((pairwise_sum(&xs) - naive).abs() <= 1e-9 * (1.0 + xs.iter().map(|x| x.abs()).sum::<f64>()));
    }
}
