use peelbound::lab::{self, Row};
use peelbound::peel;
use peelbound::sim;
use peelbound::stats;
use proptest::prelude::*;

proptest! {
    #[test]
    fn gamma_round_trip(x in 0.0f64..1e4) {
        let y = peel::gamma(peel::gamma_inverse(x));
        prop_assert!((y - x).abs() <= 1e-9 * x.max(1.0));
    }

    #[test]
    fn gamma_subadditive(x in 0.0f64..1e3, y in 0.0f64..1e3) {
        prop_assert!(peel::gamma(x + y) <= (peel::gamma(x) + peel::gamma(y)) * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn gamma_monotone(x in 0.0f64..1e3, d in 0.0f64..10.0) {
        prop_assert!(peel::gamma(x) <= peel::gamma(x + d) + 1e-12);
    }

    #[test]
    fn grid_covers_range(r in 1e-4f64..0.4, k in 1.1f64..50.0, q in 1.05f64..2.0) {
        let delta = (r * k).min(1.0);
        prop_assume!(delta > r);
        let g = peel::build_grid(r, delta, q).unwrap();
        prop_assert!((g.hi(g.l) - delta).abs() <= 1e-12);
        prop_assert!(g.hi(1) > r);
        for j in 1..g.l {
            prop_assert!(g.hi(j) < g.hi(j + 1));
        }
    }

    #[test]
    fn quantiles_are_ordered(v in prop::collection::vec(-1e3f64..1e3, 1..50)) {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let q50 = stats::quantile(&v, 0.5);
        let q90 = stats::quantile(&v, 0.9);
        prop_assert!(lo <= q50 && q50 <= q90 && q90 <= hi);
    }

    #[test]
    fn pava_is_monotone_and_preserves_mass(v in prop::collection::vec(-5.0f64..5.0, 1..40)) {
        let w = vec![1.0; v.len()];
        let fit = sim::pava(&v, &w);
        prop_assert!(fit.windows(2).all(|p| p[0] <= p[1] + 1e-12));
        let (a, b): (f64, f64) = (v.iter().sum(), fit.iter().sum());
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn slope_fit_recovers_power(a in 0.1f64..10.0, b in -2.0f64..2.0) {
        let xs = [10.0, 100.0, 1000.0, 1e4];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| a * x.powf(b)).collect();
        let fit = lab::fit_slope(&xs, &ys).unwrap();
        prop_assert!((fit.slope - b).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trips_floats(v in prop::num::f64::NORMAL | prop::num::f64::ZERO, n in 1usize..1_000_000, seed in any::<u64>()) {
        let rows = vec![Row { study: "s".into(), class: "c,with comma".into(), n, rep: "0".into(), statistic: "sup".into(), value: v, seed }];
        let back = lab::parse_csv(&lab::emit_csv(&rows).unwrap()).unwrap();
        prop_assert_eq!(back[0].value.to_bits(), v.to_bits());
        prop_assert_eq!(&back, &rows);
    }
}
