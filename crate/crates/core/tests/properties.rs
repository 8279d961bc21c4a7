use std::f64::consts::PI;

use brownian_infima::{
    avoid_prob, cumulative_times, estimate, gaussian_pdf, inf_positive_prob, mills_ratio, no_zero_prob,
    small_inf_prob, small_inf_upper_bound, summability_check, theorem_weight, touch_upper_bound_level_free,
    upper_tail, zero_touch_prob, zero_touch_prob_closed, BandQuery, BoundConfig, EventSpec, Interval, Quadrature,
    Role, SequenceFamily, SimConfig,
};
use brownian_infima::bounds::empirical_touch_constant;
use brownian_infima::BandSolver;
use proptest::prelude::*;

fn iv(a: f64, b: f64) -> Interval {
    Interval::new(a, b).unwrap()
}

fn window() -> impl Strategy<Value = (f64, f64)> {
    (0.2f64..6.0, 0.05f64..6.0).prop_map(|(a, len)| (a, a + len))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tail_is_symmetric(x in -40.0f64..40.0) {
        let s = upper_tail(x).unwrap().value() + upper_tail(-x).unwrap().value();
        prop_assert!((s - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn tail_is_strictly_decreasing(x in -8.0f64..8.0, dx in 1e-3f64..2.0) {
        prop_assert!(upper_tail(x).unwrap().value() > upper_tail(x + dx).unwrap().value());
    }

    #[test]
    fn central_mass_is_dominated(x in 0.0f64..10.0) {
        let mass = 1.0 - 2.0 * upper_tail(x).unwrap().value();
        prop_assert!(mass <= ((2.0 / PI).sqrt() * x).min(1.0) + 1e-16);
        let quad = Quadrature::new(1e-13).unwrap();
        let integral = quad.integrate(|t| gaussian_pdf(t, 1.0).unwrap(), -x, x).unwrap().value;
        prop_assert!((integral - mass).abs() < 1e-12);
    }

    #[test]
    fn mills_tail_identity(x in 0.0f64..10.0) {
        let lhs = mills_ratio(x).unwrap() * (-x * x / 2.0).exp();
        let rhs = (2.0 * PI).sqrt() * upper_tail(x).unwrap().value();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn quadrature_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, m in -2.0f64..2.0) {
        let tol = 1e-11;
        let quad = Quadrature::new(tol).unwrap();
        let f = |x: f64| (-(x - m) * (x - m)).exp();
        let g = |x: f64| 1.0 / (1.0 + x * x);
        let (lo, hi) = (-3.0, 4.0);
        let sum = quad.integrate(|x| alpha * f(x) + beta * g(x), lo, hi).unwrap().value;
        let parts = alpha * quad.integrate(f, lo, hi).unwrap().value + beta * quad.integrate(g, lo, hi).unwrap().value;
        prop_assert!((sum - parts).abs() <= 10.0 * tol);
    }

    #[test]
    fn quadrature_splits(c in -5.0f64..5.0, m in -1.0f64..1.0) {
        let tol = 1e-11;
        let quad = Quadrature::new(tol).unwrap();
        let f = |x: f64| (-(x - m) * (x - m) / 2.0).exp() * (1.0 + x.sin() / 2.0);
        let whole = quad.integrate(f, f64::NEG_INFINITY, f64::INFINITY).unwrap().value;
        let left = quad.integrate(f, f64::NEG_INFINITY, c).unwrap().value;
        let right = quad.integrate(f, c, f64::INFINITY).unwrap().value;
        prop_assert!((left + right - whole).abs() <= 10.0 * tol);
    }

    #[test]
    fn gaussian_truncation_is_negligible(m in -5.0f64..5.0, v in 0.01f64..25.0) {
        let quad = Quadrature::new(1e-15).unwrap();
        let s = v.sqrt();
        let inside = quad.integrate(|x| gaussian_pdf(x - m, v).unwrap(), m - 8.0 * s, m + 8.0 * s).unwrap().value;
        prop_assert!((1.0 - inside).abs() < 1e-14);
        prop_assert!(2.0 * upper_tail(8.0).unwrap().value() < 1e-14);
    }

    #[test]
    fn avoid_is_symmetric_in_level((a, b) in window(), m in 0.0f64..3.0, c in 0.01f64..2.0) {
        let pos = avoid_prob(iv(a, b), BandQuery::new(m, c).unwrap()).unwrap().value();
        let neg = avoid_prob(iv(a, b), BandQuery::new(-m, c).unwrap()).unwrap().value();
        prop_assert_eq!(pos, neg);
    }

    #[test]
    fn touch_and_positive_are_complementary((a, b) in window(), m in -3.0f64..3.0) {
        let s = zero_touch_prob(iv(a, b), m).unwrap().value() + inf_positive_prob(iv(a, b), m).unwrap().value();
        prop_assert!((s - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn touch_formulas_agree((a, b) in window(), m in -3.0f64..3.0) {
        let quad = zero_touch_prob(iv(a, b), m).unwrap().value();
        let closed = zero_touch_prob_closed(iv(a, b), m).unwrap().value();
        prop_assert!((quad - closed).abs() <= 1e-8);
    }

    #[test]
    fn touch_at_level_zero_is_arctan((a, b) in window()) {
        let exact = 1.0 - 2.0 / PI * (a / (b - a)).sqrt().atan();
        prop_assert!((zero_touch_prob(iv(a, b), 0.0).unwrap().value() - exact).abs() <= 1e-10);
        prop_assert!((1.0 - no_zero_prob(iv(a, b)).value() - exact).abs() <= 1e-10);
    }

    #[test]
    fn avoid_is_monotone((a, b) in window(), m in -2.0f64..2.0, c in 0.01f64..2.0, dc in 0.0f64..1.0, db in 0.0f64..3.0) {
        let base = avoid_prob(iv(a, b), BandQuery::new(m, c).unwrap()).unwrap().value();
        let wider = avoid_prob(iv(a, b), BandQuery::new(m, c + dc).unwrap()).unwrap().value();
        let longer = avoid_prob(iv(a, b + db), BandQuery::new(m, c).unwrap()).unwrap().value();
        prop_assert!(wider <= base + 1e-10);
        prop_assert!(longer <= base + 1e-10);
    }

    #[test]
    fn avoid_tends_to_endpoint_law(a in 0.2f64..6.0, m in -2.0f64..2.0, c in 0.05f64..2.0) {
        let root = a.sqrt();
        let limit = upper_tail((c - m) / root).unwrap().value() + upper_tail((c + m) / root).unwrap().value();
        let near = avoid_prob(iv(a, a + 1e-8), BandQuery::new(m, c).unwrap()).unwrap().value();
        prop_assert!((near - limit).abs() < 1e-4);
        // sqrt(2/pi) sqrt(b - a) times the density of W(a) at the two band edges
        let eps: f64 = 1e-6;
        let edges = gaussian_pdf(c - m, a).unwrap() + gaussian_pdf(c + m, a).unwrap();
        let first_order = (2.0 / PI).sqrt() * eps.sqrt() * edges;
        let near = avoid_prob(iv(a, a + eps), BandQuery::new(m, c).unwrap()).unwrap().value();
        prop_assert!((near - (limit - first_order)).abs() < 1e-5);
    }

    #[test]
    fn short_windows_keep_the_partition(a in 0.2f64..6.0, len in 1e-9f64..1e-3, c in 0.01f64..2.0, m in -3.0f64..3.0) {
        let w = iv(a, a + len);
        let total = zero_touch_prob(w, 0.0).unwrap().value()
            + small_inf_prob(w, c).unwrap().value()
            + avoid_prob(w, BandQuery::new(0.0, c).unwrap()).unwrap().value();
        prop_assert!((total - 1.0).abs() <= 1e-8);
        let closed = zero_touch_prob_closed(w, 0.0).unwrap().value();
        prop_assert!((zero_touch_prob(w, 0.0).unwrap().value() - closed).abs() <= 1e-9);
        let quad = zero_touch_prob(w, m).unwrap().value();
        prop_assert!((quad - zero_touch_prob_closed(w, m).unwrap().value()).abs() <= 1e-8);
        prop_assert!((quad + inf_positive_prob(w, m).unwrap().value() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn outcomes_partition_sample_space((a, b) in window(), c in 0.01f64..3.0) {
        let w = iv(a, b);
        let total = zero_touch_prob(w, 0.0).unwrap().value()
            + small_inf_prob(w, c).unwrap().value()
            + avoid_prob(w, BandQuery::new(0.0, c).unwrap()).unwrap().value();
        prop_assert!((total - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn small_inf_bound_is_linear_and_symmetric(x in 0.2f64..6.0, y in 0.2f64..6.0, eta in 0.001f64..1.0, k in 0.1f64..10.0) {
        let one = small_inf_upper_bound(iv(x, x + y), eta).unwrap();
        let swapped = small_inf_upper_bound(iv(y, x + y), eta).unwrap();
        let scaled = small_inf_upper_bound(iv(x, x + y), k * eta).unwrap();
        prop_assert!((one - swapped).abs() <= 1e-14 * one);
        prop_assert!((scaled - k * one).abs() <= 1e-13 * scaled);
    }

    #[test]
    fn small_inf_bound_dominates((a, b) in window(), eta in 0.001f64..2.0) {
        let exact = small_inf_prob(iv(a, b), eta).unwrap().value();
        prop_assert!(exact < small_inf_upper_bound(iv(a, b), eta).unwrap());
    }

    #[test]
    fn partition_extends_prefix(coeff in 0.01f64..5.0, p in -0.9f64..2.0, n in 1usize..60, extra in 1usize..60) {
        let theta = SequenceFamily::power_law(Role::Theta, coeff, p).unwrap();
        let short = cumulative_times(&theta, n).unwrap();
        let long = cumulative_times(&theta, n + extra).unwrap();
        prop_assert_eq!(short.times(), &long.times()[..n + 1]);
        for k in 1..=n {
            prop_assert_eq!(theorem_weight(&short, k).unwrap(), theorem_weight(&long, k).unwrap());
        }
    }

    #[test]
    fn weight_ignores_appended_terms(terms in prop::collection::vec(0.01f64..3.0, 2..30), tail in prop::collection::vec(0.0f64..3.0, 1..10)) {
        let base = SequenceFamily::explicit(Role::Theta, terms.clone()).unwrap();
        let mut longer = terms.clone();
        longer.extend(tail);
        let extended = SequenceFamily::explicit(Role::Theta, longer).unwrap();
        let n = terms.len() - 1;
        let p = cumulative_times(&base, n).unwrap();
        let q = cumulative_times(&extended, n).unwrap();
        for k in 1..=n {
            prop_assert_eq!(theorem_weight(&p, k).unwrap(), theorem_weight(&q, k).unwrap());
        }
    }

    #[test]
    fn verdicts_are_scale_free(tp in -1.5f64..2.0, ep in -3.0f64..0.5, scale in 0.001f64..1000.0, geo in prop::bool::ANY) {
        let theta = if geo {
            SequenceFamily::geometric(Role::Theta, 1.0, 1.0 + tp.abs()).unwrap()
        } else {
            SequenceFamily::power_law(Role::Theta, 1.0, tp).unwrap()
        };
        let eta = SequenceFamily::power_law(Role::Eta, 1.0, ep).unwrap();
        let scaled = SequenceFamily::power_law(Role::Eta, scale, ep).unwrap();
        prop_assert_eq!(
            summability_check(&theta, &eta, 50).unwrap().verdict,
            summability_check(&theta, &scaled, 50).unwrap().verdict
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulation_is_reproducible(seed in 0u64..1000, workers in 1usize..4) {
        let event = EventSpec::avoid(iv(1.0, 2.0), BandQuery::new(0.2, 0.1).unwrap()).unwrap();
        let cfg = |workers| SimConfig { n_paths: 5000, steps_per_interval: 50, seed, workers };
        let first = estimate(event, cfg(workers)).unwrap();
        prop_assert_eq!(first, estimate(event, cfg(workers)).unwrap());
        prop_assert_eq!(first, estimate(event, cfg(1)).unwrap());
    }
}

#[test]
fn level_free_touch_bound_dominates_with_sweep_constant() {
    let times = [0.5, 1.0, 2.0, 5.0];
    let sweep = empirical_touch_constant(&BandSolver::default(), &times, &[0.0]).unwrap();
    let cfg = BoundConfig::new(sweep.constant).unwrap();
    for &a in &times {
        for &b in times.iter().filter(|&&b| b > a) {
            let exact = zero_touch_prob(iv(a, b), 0.0).unwrap().value();
            assert!(exact <= touch_upper_bound_level_free(iv(a, b), cfg).unwrap() + 1e-15);
        }
    }
    assert!(sweep.constant <= 1.0);
}
