use fsbc::diagnostics::{classify_breakdown, DiagnosticsRecord, Thresholds};
use proptest::prelude::*;

fn record(t: f64, geo: (f64, f64, f64), vort: f64) -> DiagnosticsRecord {
    let mut x = [0.1; 16];
    x[0] = t;
    x[9] = vort;
    x[10] = t * vort;
    (x[11], x[12], x[13]) = geo;
    DiagnosticsRecord::from_values(x)
}

proptest! {
    #[test]
    fn geometry_flag_is_exactly_a_threshold_crossing(
        geos in prop::collection::vec((1e-5f64..2.0, 1e-5f64..2.0, 0.0f64..20.0), 1..30),
        eps in 1e-4f64..0.5,
        turning in 1.0f64..15.0,
    ) {
        let hist: Vec<_> = geos.iter().enumerate().map(|(k, &g)| record(0.1 * k as f64, g, 1.0)).collect();
        let th = Thresholds { eps_geo: eps, turning, ..Thresholds::default() };
        let crossed = geos.iter().any(|&(d, m, s)| d <= eps || m <= eps || s >= turning);
        prop_assert_eq!(classify_breakdown(&hist, &th).cond_c.triggered, crossed);
    }

    #[test]
    fn short_histories_carry_no_trend(
        geos in prop::collection::vec((0.5f64..2.0, 0.5f64..2.0, 0.0f64..1.0), 1..3),
        vort in 1e-3f64..1e3,
    ) {
        let hist: Vec<_> = geos.iter().enumerate().map(|(k, &g)| record(0.1 * k as f64, g, vort * (k + 1) as f64)).collect();
        let r = classify_breakdown(&hist, &Thresholds::default());
        prop_assert_eq!(r.cond_a.trend_slope, 0.0);
        prop_assert_eq!(r.cond_b_prime.trend_slope, 0.0);
        prop_assert_eq!(r.cond_c.trend_slope, 0.0);
    }
}
