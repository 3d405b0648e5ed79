//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rrflux::cli;
use rrflux::config::{write_parameter_sets, RunConfig};
use rrflux::corruption::{self, ErrorRegime, MAX_STEP};
use rrflux::experiment::{run_ensemble, Evaluator, InadequateSide, SufficiencyVerdict};
use rrflux::fluxmap::{classify, ternary_coords, DominanceClass};
use rrflux::metrics::MetricId;
use rrflux::models::{
    DailyFluxes, FluxFractions, ModelId, ModelParams, ParameterVector, RunoffModel,
    SacramentoParams, SimhydParams,
};
use rrflux::sampling::{lhs, sce_repeats, stratum_index, ParameterSet, SceConfig};
use rrflux::series::{write_forcing, Series};
use rrflux::synthetic::{perfect_model_flow, synthetic_forcing};

type Outcome = Result<String, String>;

const TEN_YEARS: usize = 3653;
const SQRT2: f64 = std::f64::consts::SQRT_2;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || {
        format!("{what}: got {got}, want {want} (tol {tol})")
    })
}

// Independent statistics, population convention.
fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn std(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn random_positive_series(rng: &mut ChaCha8Rng) -> Series {
    let n = rng.gen_range(8..300);
    let scale = 10f64.powf(rng.gen_range(-2.0..3.0));
    let values = (0..n)
        .map(|_| {
            let u: f64 = rng.gen_range(0.0..1.0);
            scale * (0.01 + (-(1.0 - u).ln()).powf(1.5))
        })
        .collect();
    Series::from_values(values).unwrap()
}

fn curves(series: &Series, seed: u64) -> BTreeMap<(MetricId, ErrorRegime), Vec<f64>> {
    corruption::degradation_table(series, seed)
        .unwrap()
        .into_iter()
        .map(|c| ((c.metric, c.regime), c.values))
        .collect()
}

fn theta_star() -> ModelParams {
    ModelParams::Simhyd(SimhydParams {
        insc: 2.0,
        coeff: 200.0,
        sq: 1.5,
        smsc: 250.0,
        sub: 0.3,
        crak: 0.2,
        k: 0.1,
    })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let table = curves(&corruption::example_series(), 42);
    let at20 = |m, r| table[&(m, r)][MAX_STEP as usize];
    let expected = [
        (MetricId::Nse, ErrorRegime::Variability, 0.0),
        (MetricId::Nse, ErrorRegime::Correlation, -1.0),
        (MetricId::KgeSs, ErrorRegime::Variability, 1.0 - 1.0 / SQRT2),
        (MetricId::KgeSs, ErrorRegime::Correlation, 1.0 - 1.0 / SQRT2),
        (MetricId::KgeSs, ErrorRegime::Bias, 1.0 - 1.25f64.sqrt() / SQRT2),
        (MetricId::Wia, ErrorRegime::Variability, 0.5),
    ];
    for (m, r, want) in expected {
        close(at20(m, r), want, 1e-6, &format!("{m} {r} step 20"))?;
    }
    // Reference values, rounded to two decimals.
    for (m, r, printed) in [
        (MetricId::Nse, ErrorRegime::Variability, 0.00),
        (MetricId::Nse, ErrorRegime::Correlation, -1.00),
        (MetricId::KgeSs, ErrorRegime::Bias, 0.21),
        (MetricId::Wia, ErrorRegime::Variability, 0.50),
    ] {
        close(at20(m, r), printed, 0.005, &format!("{m} {r} printed"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("6 closed-form cells within 1e-6 in {elapsed:?}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut series = vec![corruption::example_series()];
    series.extend((0..25).map(|_| random_positive_series(&mut rng)));
    for (s_idx, s) in series.iter().enumerate() {
        let c = curves(s, 7 + s_idx as u64);
        let ratio = mean(s.values()) / std(s.values());
        for k in 0..=MAX_STEP as usize {
            let e = 0.05 * k as f64;
            let tag = |name: &str| format!("series {s_idx} {name} k={k}");
            close(c[&(MetricId::Nse, ErrorRegime::Variability)][k], 1.0 - e * e, 1e-9, &tag("nse var"))?;
            close(c[&(MetricId::Nse, ErrorRegime::Correlation)][k], 1.0 - 2.0 * e, 1e-9, &tag("nse corr"))?;
            close(
                c[&(MetricId::Nse, ErrorRegime::Bias)][k],
                1.0 - (e * ratio).powi(2),
                1e-9 * (1.0 + (e * ratio).powi(2)),
                &tag("nse bias"),
            )?;
            let kge_line = 1.0 - e / SQRT2;
            close(c[&(MetricId::KgeSs, ErrorRegime::Variability)][k], kge_line, 1e-9, &tag("kgess var"))?;
            close(c[&(MetricId::KgeSs, ErrorRegime::Correlation)][k], kge_line, 1e-9, &tag("kgess corr"))?;
            let bias_dist = (e * e + (1.0 - 1.0 / (1.0 + e)).powi(2)).sqrt();
            close(c[&(MetricId::KgeSs, ErrorRegime::Bias)][k], 1.0 - bias_dist / SQRT2, 1e-9, &tag("kgess bias"))?;
            close(c[&(MetricId::Wia, ErrorRegime::Variability)][k], 1.0 - 0.025 * k as f64, 1e-9, &tag("wia var"))?;
            if k >= 1 {
                ensure(
                    c[&(MetricId::KgeSs, ErrorRegime::Bias)][k]
                        <= c[&(MetricId::KgeSs, ErrorRegime::Variability)][k],
                    || tag("kgess bias above kgess var"),
                )?;
            }
        }
    }
    Ok(format!("{} series x 21 steps match closed forms within 1e-9", series.len()))
}

fn criterion_3() -> Outcome {
    let c = curves(&corruption::example_series(), 42);
    for k in 1..=MAX_STEP as usize {
        let nse = c[&(MetricId::Nse, ErrorRegime::Bias)][k];
        let wia = c[&(MetricId::Wia, ErrorRegime::Bias)][k];
        let kge = c[&(MetricId::KgeSs, ErrorRegime::Bias)][k];
        ensure(nse > wia && wia > kge, || {
            format!("bias k={k}: nse {nse}, wia {wia}, kgess {kge}")
        })?;
    }
    for ((m, r), values) in &c {
        for k in 1..values.len() {
            ensure(values[k] <= values[k - 1], || {
                format!("{m} {r} rises at k={k}: {} -> {}", values[k - 1], values[k])
            })?;
        }
    }
    Ok("NSE > WIA > KGEss for k = 1..20 under bias; 9 curves non-increasing".into())
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rel = |got: f64, want: f64, what: &str| {
        ensure((got - want).abs() <= 1e-10 * want.abs(), || {
            format!("{what}: got {got}, want {want}")
        })
    };
    for case in 0..100 {
        let s = random_positive_series(&mut rng);
        let (m, sd) = (mean(s.values()), std(s.values()));
        for step in corruption::all_steps(&s, case).map_err(|e| e.to_string())? {
            let v = step.series.values();
            let e = 0.05 * step.k as f64;
            let tag = |q: &str| format!("case {case} {} k={} {q}", step.regime, step.k);
            match step.regime {
                ErrorRegime::Bias => {
                    rel(mean(v), m * (1.0 + e), &tag("mean"))?;
                    rel(std(v), sd, &tag("std"))?;
                }
                ErrorRegime::Variability => {
                    rel(mean(v), m, &tag("mean"))?;
                    rel(std(v), sd * (1.0 + e), &tag("std"))?;
                }
                ErrorRegime::Correlation => {
                    rel(mean(v), m, &tag("mean"))?;
                    rel(std(v), sd, &tag("std"))?;
                    close(corr(s.values(), v), 1.0 - e, 1e-10, &tag("cc"))?;
                }
            }
        }
    }
    Ok("100 fuzzed series x 63 steps satisfy mean/std/CC constraints within 1e-10".into())
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let forcing = synthetic_forcing(TEN_YEARS + 365, 5).map_err(|e| e.to_string())?;
    let theta = theta_star();
    let obs = perfect_model_flow(&theta, &forcing).map_err(|e| e.to_string())?;
    let evaluator = Evaluator::new(ModelId::Simhyd, forcing.clone(), &obs, 365, &MetricId::ALL)
        .map_err(|e| e.to_string())?;

    let space = ModelId::Simhyd.default_space();
    let config = SceConfig::for_model(ModelId::Simhyd, 5);
    let objective = |v: &[f64]| evaluator.score(MetricId::KgeSs, v);
    let (hmv, results) = sce_repeats(&objective, &space, &config, 10);
    ensure(hmv >= 0.99, || format!("SCE KGEss HMV {hmv} < 0.99"))?;

    let mut sets = lhs(&space, 500, 5);
    sets.push(ParameterSet::new(theta.to_values()));
    let records = run_ensemble(ModelId::Simhyd, &sets, &forcing, &obs, &MetricId::ALL, 365)
        .map_err(|e| e.to_string())?;
    let at_theta = records.last().unwrap();
    for m in MetricId::ALL {
        let v = at_theta.value(m).ok_or_else(|| format!("{m} missing at theta*"))?;
        close(v, 1.0, 1e-9, &format!("{m} at theta*"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    let evals: usize = results.iter().map(|r| r.evals_used).sum();
    Ok(format!(
        "SCE KGEss HMV {hmv:.6} ({evals} evaluations, 10 repeats); theta* scores 1 on all metrics; {elapsed:.1?}"
    ))
}

fn audit<M: RunoffModel>(model: &M, precip: &[f64], pet: &[f64]) -> Result<(), String> {
    let mut state = M::State::default();
    let start = model.storage(&state);
    let (mut p_sum, mut out) = (0.0, 0.0);
    for (day, (p, e)) in precip.iter().zip(pet).enumerate() {
        let (next, f): (M::State, DailyFluxes) = model.step(&state, *p, *e);
        let fluxes = [f.intensity, f.wetness, f.slow, f.aet, f.deep_loss, f.total];
        ensure(fluxes.iter().all(|v| *v >= 0.0 && v.is_finite()), || {
            format!("negative flux on day {day}: {f:?}")
        })?;
        ensure(M::store_levels(&next).iter().all(|v| *v >= 0.0), || {
            format!("negative store on day {day}")
        })?;
        p_sum += p;
        out += f.aet + f.total + f.deep_loss;
        state = next;
    }
    let residual = p_sum - out - (model.storage(&state) - start);
    ensure(residual.abs() <= 1e-6 * p_sum, || {
        format!("residual {residual} of rainfall {p_sum}")
    })
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for model in [ModelId::Simhyd, ModelId::Sacramento] {
        let space = model.default_space();
        for case in 0..1000 {
            let values: Vec<f64> = space
                .dims()
                .iter()
                .map(|d| d.lower + rng.gen_range(0.0..=1.0) * d.width())
                .collect();
            let days = rng.gen_range(30..730);
            let storm = rng.gen_range(1.0..60.0);
            let precip: Vec<f64> = (0..days)
                .map(|_| {
                    if rng.gen_bool(0.6) {
                        0.0
                    } else {
                        -(1.0 - rng.gen_range(0.0..1.0f64)).ln() * storm
                    }
                })
                .collect();
            let pet: Vec<f64> = (0..days).map(|_| rng.gen_range(0.0..10.0)).collect();
            if precip.iter().sum::<f64>() == 0.0 {
                continue;
            }
            let result = match model {
                ModelId::Simhyd => audit(&SimhydParams::from_values(&values).unwrap(), &precip, &pet),
                ModelId::Sacramento => {
                    audit(&SacramentoParams::from_values(&values).unwrap(), &precip, &pet)
                }
            };
            result.map_err(|e| format!("{model} case {case}: {e}"))?;
        }
    }
    Ok("1000 fuzzed cases per model conserve mass within 1e-6 of rainfall, all stores and fluxes >= 0".into())
}

fn criterion_7() -> Outcome {
    for model in [ModelId::Simhyd, ModelId::Sacramento] {
        let space = model.default_space();
        for count in [4usize, 100, 10_000] {
            let sample = lhs(&space, count, 7);
            ensure(sample.len() == count, || format!("{count}: got {}", sample.len()))?;
            for (d, dim) in space.dims().iter().enumerate() {
                let mut hits = vec![0u32; count];
                for p in &sample {
                    let x = p.values[d];
                    ensure(dim.lower <= x && x <= dim.upper, || format!("{} out of range", dim.name))?;
                    hits[stratum_index(x, dim.lower, dim.upper, count)] += 1;
                }
                ensure(hits.iter().all(|&h| h == 1), || {
                    format!("{model} {} count {count}: strata not filled once", dim.name)
                })?;
            }
        }
    }
    Ok("counts 4, 100, 10000: one sample per stratum in every dimension of both models".into())
}

fn criterion_8() -> Outcome {
    let cases = [
        (0.80, 0.81, true, InadequateSide::Neither),
        (0.69, 0.77, false, InadequateSide::Ensemble),
        (0.83, 0.81, false, InadequateSide::Sce),
    ];
    for (ens, sce, sufficient, side) in cases {
        let v = SufficiencyVerdict::from_hmvs(MetricId::KgeSs, ens, sce);
        ensure(v.sufficient == sufficient && v.inadequate_side == side, || {
            format!("{ens}/{sce}: got {} {}", v.sufficient, v.inadequate_side)
        })?;
        close(v.hmv, ens.max(sce), 0.0, "hmv")?;
    }
    Ok("0.80/0.81 sufficient; 0.69/0.77 ENSEMBLE; 0.83/0.81 SCE".into())
}

fn criterion_9() -> Outcome {
    let mut n = 0;
    for i in 0..=10u32 {
        for j in 0..=(10 - i) {
            let k = 10 - i - j;
            let f = FluxFractions::new(f64::from(i) / 10.0, f64::from(j) / 10.0, f64::from(k) / 10.0)
                .map_err(|e| e.to_string())?;
            let brute = if i > 5 {
                DominanceClass::IntensityDominated
            } else if j > 5 {
                DominanceClass::WetnessDominated
            } else if k > 5 {
                DominanceClass::SlowDominated
            } else {
                DominanceClass::NoDominantMode
            };
            ensure(classify(&f) == brute, || format!("({i},{j},{k}) -> {:?}", classify(&f)))?;
            n += 1;
        }
    }
    ensure(n == 66, || format!("grid has {n} points"))?;
    let h = 3f64.sqrt() / 2.0;
    let pts = [
        ((1.0, 0.0, 0.0), (0.5, h)),
        ((0.0, 1.0, 0.0), (1.0, 0.0)),
        ((0.0, 0.0, 1.0), (0.0, 0.0)),
        ((1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0), (0.5, h / 3.0)),
    ];
    for ((a, b, c), (x, y)) in pts {
        let (gx, gy) = ternary_coords(&FluxFractions::new(a, b, c).unwrap());
        close(gx, x, 1e-12, "x")?;
        close(gy, y, 1e-12, "y")?;
    }
    Ok("66 grid triples match brute force; vertices and centroid exact to 1e-12".into())
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let forcing = synthetic_forcing(3 * 365, 10).map_err(|e| e.to_string())?;
    let obs = perfect_model_flow(&theta_star(), &forcing).map_err(|e| e.to_string())?;
    let data = tmp.path().join("catchment.csv");
    write_forcing(&data, &forcing, Some(&obs)).map_err(|e| e.to_string())?;
    let extra = tmp.path().join("extra.csv");
    write_parameter_sets(&extra, ModelId::Simhyd, &[theta_star().to_values()])
        .map_err(|e| e.to_string())?;

    let mut outputs = Vec::new();
    for threads in [1usize, 4, 8] {
        let mut cfg = RunConfig::default();
        cfg.forcing = Some(data.clone());
        cfg.params_file = Some(extra.clone());
        cfg.size = 10_000;
        cfg.seed = 10;
        cfg.threads = threads;
        cfg.batch_size = 1024;
        cfg.sce.repeats = Some(2);
        cfg.sce.max_evals = Some(400);
        cfg.out = tmp.path().join(format!("out{threads}"));
        let report = cli::with_threads(threads, || cli::cmd_ensemble(&cfg))
            .and_then(|r| r)
            .map_err(|e| e.to_string())?;
        ensure(report.runs == 10_001, || format!("{} runs", report.runs))?;
        ensure(report.filters.len() == 6, || format!("{} flux maps", report.filters.len()))?;
        outputs.push(dir_bytes(&cfg.out));
    }
    ensure(outputs[0].len() >= 11, || format!("only {} files", outputs[0].len()))?;
    for (i, o) in outputs.iter().enumerate().skip(1) {
        for (name, bytes) in &outputs[0] {
            ensure(o.get(name) == Some(bytes), || format!("{name} differs at run {i}"))?;
        }
    }
    Ok(format!(
        "{} output files byte-identical at 1, 4 and 8 threads",
        outputs[0].len()
    ))
}

fn criterion_11() -> Outcome {
    let forcing = synthetic_forcing(TEN_YEARS, 11).map_err(|e| e.to_string())?;
    let obs = perfect_model_flow(&theta_star(), &forcing).map_err(|e| e.to_string())?;
    let evaluator = Evaluator::new(ModelId::Simhyd, forcing, &obs, 365, &MetricId::ALL)
        .map_err(|e| e.to_string())?;
    let sets = lhs(&ModelId::Simhyd.default_space(), 100_000, 11);
    let start = Instant::now();
    let records = rrflux::experiment::evaluate_sets(&evaluator, &sets, 0);
    let elapsed = start.elapsed();
    ensure(records.len() == 100_000, || "missing records".into())?;
    ensure(elapsed < Duration::from_secs(600), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "100000 SIMHYD 10-year runs scored in {elapsed:.1?} on {} worker(s)",
        rayon::current_num_threads()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("step-20 closed forms", criterion_1),
        ("degradation curve closed forms", criterion_2),
        ("bias ordering and monotone curves", criterion_3),
        ("corruption moments", criterion_4),
        ("perfect-model round trip", criterion_5),
        ("mass balance", criterion_6),
        ("LHS stratification", criterion_7),
        ("sufficiency verdicts", criterion_8),
        ("flux-map classification", criterion_9),
        ("ensemble determinism across threads", criterion_10),
        ("throughput", criterion_11),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
