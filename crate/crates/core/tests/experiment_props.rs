use std::collections::BTreeMap;

use proptest::prelude::*;

use rrflux::cli::with_threads;
use rrflux::experiment::{
    acceptable_runs, evaluate_sets, AcceptabilityFilter, EvaluationRecord, Evaluator,
    SufficiencyVerdict,
};
use rrflux::fluxmap::{classify, export_fluxmap, import_fluxmap, points_for, FluxMapHeader};
use rrflux::metrics::MetricId;
use rrflux::models::{FluxFractions, ModelId, ModelParams};
use rrflux::sampling::{lhs, ParameterSet};
use rrflux::synthetic::{perfect_model_flow, synthetic_forcing};

fn record(id: u64, value: Option<f64>, fractions: Option<(f64, f64, f64)>) -> EvaluationRecord {
    let mut metric_values = BTreeMap::new();
    if let Some(v) = value {
        metric_values.insert(MetricId::KgeSs, v);
    }
    EvaluationRecord {
        run_id: id,
        params: ParameterSet::new(vec![]),
        metric_values,
        fractions: fractions.map(|(a, b, c)| FluxFractions::from_volumes(a, b, c).unwrap()),
        flags: vec![],
    }
}

fn records() -> impl Strategy<Value = Vec<EvaluationRecord>> {
    prop::collection::vec(
        (
            prop::option::weighted(0.9, -2.0..1.0f64),
            prop::option::weighted(0.9, (0.01..1.0f64, 0.01..1.0f64, 0.01..1.0f64)),
        ),
        1..80,
    )
    .prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (m, f))| record(i as u64, m, f))
            .collect()
    })
}

proptest! {
    #[test]
    fn stricter_filter_accepts_a_subset(recs in records(), d1 in 0.001..0.5f64, d2 in 0.001..0.5f64) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let hmv = 1.0;
        let strict = AcceptabilityFilter::new(MetricId::KgeSs, hmv, lo).unwrap();
        let relaxed = AcceptabilityFilter::new(MetricId::KgeSs, hmv, hi).unwrap();
        let a: Vec<u64> = acceptable_runs(&recs, &strict).iter().map(|r| r.run_id).collect();
        let b: Vec<u64> = acceptable_runs(&recs, &relaxed).iter().map(|r| r.run_id).collect();
        prop_assert!(a.iter().all(|id| b.contains(id)));
        prop_assert!(a.windows(2).all(|w| w[0] < w[1]));
        for r in acceptable_runs(&recs, &relaxed) {
            prop_assert!(r.fractions.is_some());
        }
    }

    #[test]
    fn verdict_swap_symmetry(a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let v = SufficiencyVerdict::from_hmvs(MetricId::Nse, a, b);
        let w = SufficiencyVerdict::from_hmvs(MetricId::Nse, b, a);
        prop_assert_eq!(v.sufficient, w.sufficient);
        use rrflux::experiment::InadequateSide::*;
        let flipped = match v.inadequate_side { Ensemble => Sce, Sce => Ensemble, Neither => Neither };
        prop_assert_eq!(w.inadequate_side, flipped);
        prop_assert_eq!(v.hmv, a.max(b));
    }

    #[test]
    fn fluxmap_round_trip_reproduces_classes(recs in records(), delta in 0.05..3.0f64) {
        let hmv = recs.iter().filter_map(|r| r.value(MetricId::KgeSs)).fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(hmv.is_finite());
        let filter = AcceptabilityFilter::new(MetricId::KgeSs, hmv, delta).unwrap();
        let points = points_for(&recs, &filter);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fm.csv");
        let header = FluxMapHeader {
            metric: MetricId::KgeSs,
            hmv,
            threshold: filter.threshold,
            ensemble_size: recs.len(),
            seed: Some(1),
        };
        export_fluxmap(&points, &header, &path).unwrap();
        let (h, back) = import_fluxmap(&path).unwrap();
        prop_assert_eq!(h, header);
        prop_assert_eq!(back.len(), points.len());
        for (p, q) in points.iter().zip(&back) {
            prop_assert_eq!(p.run_id, q.run_id);
            prop_assert_eq!(q.class, classify(&q.fractions));
            prop_assert_eq!(p.class, q.class);
            prop_assert_eq!(p.metric_value, q.metric_value);
        }
    }
}

#[test]
fn perfect_model_record_scores_one_for_both_models() {
    let forcing = synthetic_forcing(2 * 365, 3).unwrap();
    for model in [ModelId::Simhyd, ModelId::Sacramento] {
        let space = model.default_space();
        let mid: Vec<f64> = space.dims().iter().map(|d| d.lower + 0.4 * d.width()).collect();
        let theta = ModelParams::from_values(model, &mid).unwrap();
        let obs = perfect_model_flow(&theta, &forcing).unwrap();
        let ev = Evaluator::new(model, forcing.clone(), &obs, 100, &MetricId::ALL).unwrap();
        let r = ev.evaluate(0, &ParameterSet::new(mid));
        for m in MetricId::ALL {
            assert!((r.value(m).unwrap() - 1.0).abs() <= 1e-12, "{model} {m}");
        }
        assert!(r.flags.is_empty());
    }
}

#[test]
fn records_independent_of_thread_count() {
    let forcing = synthetic_forcing(600, 8).unwrap();
    let space = ModelId::Sacramento.default_space();
    let mid: Vec<f64> = space.dims().iter().map(|d| d.lower + 0.5 * d.width()).collect();
    let obs = perfect_model_flow(&ModelParams::from_values(ModelId::Sacramento, &mid).unwrap(), &forcing).unwrap();
    let ev = Evaluator::new(ModelId::Sacramento, forcing, &obs, 200, &MetricId::ALL).unwrap();
    let sets = lhs(&space, 300, 8);
    let one = with_threads(1, || evaluate_sets(&ev, &sets, 5)).unwrap();
    let four = with_threads(4, || evaluate_sets(&ev, &sets, 5)).unwrap();
    assert_eq!(one, four);
    assert!(one.iter().enumerate().all(|(i, r)| r.run_id == 5 + i as u64));
}
