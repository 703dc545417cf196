use devroye_lab::asclt::{kappa_to_gaussian, weighted_empirical};
use devroye_lab::covariance::autocovariance_of;
use devroye_lab::dimension::{scale_rows, Points};
use devroye_lab::holder::{devroye_bound, lj_coefficients, CatalogFunctional, Functional, Observable};
use devroye_lab::measure::{kantorovich_empirical, EmpiricalMeasure};
use devroye_lab::spectral::{periodogram_of, IntegratedPeriodogram};
use proptest::prelude::*;

fn unit_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn devroye_bound_is_quadratic_in_coefficients(l in prop::collection::vec(0.0f64..2.0, 1..40), c in 0.1f64..10.0, d in 0.01f64..5.0) {
        let scaled: Vec<f64> = l.iter().map(|v| v * c).collect();
        let lhs = devroye_bound(&scaled, d);
        let rhs = c * c * devroye_bound(&l, d);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
    }

    #[test]
    fn mean_functional_moves_within_its_coefficient(x in unit_vec(2..30), j in 0usize..30, to in 0.0f64..1.0) {
        let n = x.len();
        let j = j % n;
        let f = CatalogFunctional::Mean { n, u: Observable::cosine() };
        let l = lj_coefficients(&f, &[(0.0, 1.0)], 0).unwrap().values;
        let mut y = x.clone();
        y[j] = to;
        let dk = (f.evaluate(&x, 1).unwrap() - f.evaluate(&y, 1).unwrap()).abs();
        prop_assert!(dk <= l[j] * (x[j] - to).abs() * (1.0 + 1e-6) + 1e-15);
    }

    #[test]
    fn kantorovich_is_a_metric(a in unit_vec(1..40), b in unit_vec(1..40), c in unit_vec(1..40)) {
        let (a, b, c) = (EmpiricalMeasure::new(a).unwrap(), EmpiricalMeasure::new(b).unwrap(), EmpiricalMeasure::new(c).unwrap());
        let ab = kantorovich_empirical(&a, &b);
        prop_assert_eq!(ab, kantorovich_empirical(&b, &a));
        prop_assert!(ab >= 0.0);
        prop_assert!(ab <= kantorovich_empirical(&a, &c) + kantorovich_empirical(&c, &b) + 1e-12);
        prop_assert_eq!(kantorovich_empirical(&a, &a), 0.0);
    }

    #[test]
    fn correlation_sandwich_holds(pts in unit_vec(4..120), eps in 0.005f64..0.5) {
        let rows = scale_rows(Points::new(&pts, 2).unwrap_or_else(|_| Points::new(&pts, 1).unwrap()), &[eps], 1.0, 1.0, 0).unwrap();
        prop_assert!(rows[0].sandwich_holds());
        prop_assert!((0.0..=1.0).contains(&rows[0].k_phi0));
    }

    #[test]
    fn lag_one_autocovariance_ignores_shifts(x in unit_vec(10..80), c in -5.0f64..5.0) {
        let k = x.len() - 1;
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let a = autocovariance_of(&x, 1, k).unwrap();
        let b = autocovariance_of(&shifted, 1, k).unwrap();
        prop_assert!((a - b).abs() <= 1e-10);
        prop_assert!(a >= -1e-15);
    }

    #[test]
    fn integrated_periodogram_is_nondecreasing(y in prop::collection::vec(-1.0f64..1.0, 2..100), w in 0.0f64..6.0) {
        let ip = IntegratedPeriodogram::new(&y);
        prop_assert!(periodogram_of(&y, w) >= 0.0);
        prop_assert!(ip.eval(w + 0.2) >= ip.eval(w) - 1e-12);
    }

    #[test]
    fn kappa_is_nonnegative_and_bounded(s in prop::collection::vec(-50.0f64..50.0, 1..60), sigma2 in 0.1f64..4.0) {
        let a = weighted_empirical(&s).unwrap();
        let k = kappa_to_gaussian(&a, sigma2).unwrap();
        let max_abs = a.atoms.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(k >= 0.0);
        prop_assert!(k <= max_abs + (2.0 * sigma2 / std::f64::consts::PI).sqrt() + 1e-9);
    }
}
