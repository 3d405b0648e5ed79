use proptest::prelude::*;

use rrflux::corruption::{corrupt_correlation, degradation_table, ErrorRegime, MAX_STEP};
use rrflux::metrics::MetricId;
use rrflux::series::Series;

fn positive_series() -> impl Strategy<Value = Series> {
    prop::collection::vec(0.01..500.0f64, 3..120)
        .prop_filter("non-constant", |v| v.iter().any(|x| (x - v[0]).abs() > 1e-3))
        .prop_map(|v| Series::from_values(v).unwrap())
}

fn curve(table: &[rrflux::corruption::DegradationCurve], m: MetricId, r: ErrorRegime) -> &[f64] {
    &table.iter().find(|c| c.metric == m && c.regime == r).unwrap().values
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn curves_follow_closed_forms(s in positive_series(), seed in any::<u64>()) {
        let t = degradation_table(&s, seed).unwrap();
        let v = s.values();
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
        for k in 0..=MAX_STEP as usize {
            let e = 0.05 * k as f64;
            let nse_bias = 1.0 - (e * m / sd).powi(2);
            prop_assert!((curve(&t, MetricId::Nse, ErrorRegime::Bias)[k] - nse_bias).abs() <= 1e-9 * (1.0 + nse_bias.abs()));
            prop_assert!((curve(&t, MetricId::Nse, ErrorRegime::Variability)[k] - (1.0 - e * e)).abs() <= 1e-9);
            prop_assert!((curve(&t, MetricId::Nse, ErrorRegime::Correlation)[k] - (1.0 - 2.0 * e)).abs() <= 1e-9);
            let kv = curve(&t, MetricId::KgeSs, ErrorRegime::Variability)[k];
            let kc = curve(&t, MetricId::KgeSs, ErrorRegime::Correlation)[k];
            prop_assert!((kv - (1.0 - e / 2f64.sqrt())).abs() <= 1e-9);
            prop_assert!((kv - kc).abs() <= 1e-9);
            prop_assert!((curve(&t, MetricId::Wia, ErrorRegime::Variability)[k] - (1.0 - 0.025 * k as f64)).abs() <= 1e-9);
            if k >= 1 {
                prop_assert!(curve(&t, MetricId::KgeSs, ErrorRegime::Bias)[k] <= kv);
            }
        }
    }

    #[test]
    fn correlation_corruption_replays(s in positive_series(), seed in any::<u64>(), k in 0u32..=20) {
        let a = corrupt_correlation(&s, k, seed).unwrap();
        let b = corrupt_correlation(&s, k, seed).unwrap();
        let bits = |x: &[f64]| x.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(a.series.values()), bits(b.series.values()));
    }
}
