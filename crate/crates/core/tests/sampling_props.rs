use proptest::prelude::*;

use rrflux::models::ModelId;
use rrflux::sampling::{lhs, sce_optimize, sce_repeats, stratum_index, ParameterSpace, SceConfig};
use rrflux::Result;

fn space(bounds: &[(f64, f64)]) -> ParameterSpace {
    ParameterSpace::new(
        bounds
            .iter()
            .enumerate()
            .map(|(i, (lo, hi))| (format!("x{i}"), *lo, *hi))
            .collect(),
    )
    .unwrap()
}

fn rosenbrock(x: &[f64]) -> Result<f64> {
    Ok(-(100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)))
}

#[test]
fn rosenbrock_optimum_found() {
    let s = space(&[(-2.0, 2.0), (-2.0, 2.0)]);
    let cfg = SceConfig::for_dims(2, 4, 3);
    let r = sce_optimize(&rosenbrock, &s, &cfg);
    let b = &r.best_params.values;
    assert!((b[0] - 1.0).abs() < 1e-4 && (b[1] - 1.0).abs() < 1e-4, "{b:?} after {} evals", r.evals_used);
}

#[test]
fn million_point_lhs_is_stratified() {
    let s = ModelId::Simhyd.default_space();
    let n = 1_000_000;
    let sample = lhs(&s, n, 1);
    for (d, dim) in s.dims().iter().enumerate() {
        let mut hit = vec![false; n];
        for p in &sample {
            let i = stratum_index(p.values[d], dim.lower, dim.upper, n);
            assert!(!hit[i], "{}: stratum {i} hit twice", dim.name);
            hit[i] = true;
        }
    }
}

#[test]
fn repeats_replay_bitwise() {
    let s = space(&[(0.0, 1.0); 4]);
    let f = |x: &[f64]| Ok(-x.iter().map(|v| (v - 0.3).abs()).sum::<f64>());
    let mut cfg = SceConfig::for_dims(4, 3, 11);
    cfg.max_evals = 2000;
    let (h1, a) = sce_repeats(&f, &s, &cfg, 4);
    let (h2, b) = sce_repeats(&f, &s, &cfg, 4);
    assert_eq!(h1.to_bits(), h2.to_bits());
    assert_eq!(a, b);
    assert!(a.iter().all(|r| r.best_value <= h1));
    let (single, one) = sce_repeats(&f, &s, &cfg, 1);
    assert_eq!(single, one[0].best_value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lhs_one_per_stratum(count in 1usize..400, seed in any::<u64>(), dims in 1usize..6) {
        let s = space(&vec![(-3.0, 7.5); dims]);
        let sample = lhs(&s, count, seed);
        prop_assert_eq!(sample.len(), count);
        for d in 0..dims {
            let mut strata: Vec<usize> = sample
                .iter()
                .map(|p| stratum_index(p.values[d], -3.0, 7.5, count))
                .collect();
            strata.sort_unstable();
            prop_assert_eq!(strata, (0..count).collect::<Vec<_>>());
        }
    }

    #[test]
    fn sce_trace_monotone_and_in_bounds(
        seed in any::<u64>(),
        centre in prop::collection::vec(0.0..1.0f64, 3),
        budget in 50usize..1500,
    ) {
        let s = space(&[(0.0, 1.0), (-1.0, 2.0), (5.0, 6.0)]);
        let seen = std::sync::Mutex::new(Vec::new());
        let f = |x: &[f64]| {
            seen.lock().unwrap().push(x.to_vec());
            Ok(-x.iter().zip(&centre).map(|(a, c)| (a - c).powi(2)).sum::<f64>())
        };
        let mut cfg = SceConfig::for_dims(3, 2, seed);
        cfg.max_evals = budget;
        let r = sce_optimize(&f, &s, &cfg);
        prop_assert!(r.evals_used <= budget);
        prop_assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(r.trace.last().copied(), Some(r.best_value));
        prop_assert!(seen.lock().unwrap().iter().all(|x| s.contains(x)));
    }
}
