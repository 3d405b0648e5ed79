//! Shuffled Complex Evolution (SCE-UA), maximizing.
//!
//! The population is ranked and dealt into complexes by striping ranks.
//! Each complex evolves through competitive complex evolution: a
//! sub-complex is drawn with triangular rank weights, its worst point is
//! reflected through the centroid of the others, then contracted, then
//! replaced by a random point inside the complex's bounding box. Complexes
//! are then shuffled back together and the cycle repeats.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ParameterSet, ParameterSpace};
use crate::error::{Error, Result};
use crate::models::ModelId;
use crate::rng::{self, Domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceConfig {
    pub n_complexes: usize,
    pub points_per_complex: usize,
    pub subcomplex_size: usize,
    pub evolution_steps: usize,
    pub max_evals: usize,
    pub convergence_tol: f64,
    pub convergence_window: usize,
    pub seed: u64,
}

impl SceConfig {
    pub const DEFAULT_MAX_EVALS: usize = 50_000;
    pub const DEFAULT_TOL: f64 = 1e-4;
    pub const DEFAULT_WINDOW: usize = 10;

    /// Defaults scaled to the dimension count.
    pub fn for_dims(dims: usize, n_complexes: usize, seed: u64) -> Self {
        SceConfig {
            n_complexes,
            points_per_complex: 2 * dims + 1,
            subcomplex_size: dims + 1,
            evolution_steps: 2 * dims + 1,
            max_evals: Self::DEFAULT_MAX_EVALS,
            convergence_tol: Self::DEFAULT_TOL,
            convergence_window: Self::DEFAULT_WINDOW,
            seed,
        }
    }

    /// Four complexes for SIMHYD, six for SACRAMENTO.
    pub fn for_model(model: ModelId, seed: u64) -> Self {
        let complexes = match model {
            ModelId::Simhyd => 4,
            ModelId::Sacramento => 6,
        };
        Self::for_dims(model.parameter_names().len(), complexes, seed)
    }

    pub fn validate(&self, dims: usize) -> Result<()> {
        if self.n_complexes < 2 {
            return Err(Error::Config("SCE needs at least 2 complexes".into()));
        }
        if self.points_per_complex < dims + 2 {
            return Err(Error::Config(format!(
                "SCE points_per_complex must be at least dims + 2 = {}",
                dims + 2
            )));
        }
        if self.subcomplex_size < 2 || self.subcomplex_size > self.points_per_complex {
            return Err(Error::Config(
                "SCE subcomplex_size must lie in 2..=points_per_complex".into(),
            ));
        }
        if self.evolution_steps == 0 || self.max_evals == 0 || self.convergence_window == 0 {
            return Err(Error::Config(
                "SCE evolution_steps, max_evals and convergence_window must be positive".into(),
            ));
        }
        if !(self.convergence_tol >= 0.0) {
            return Err(Error::Config("SCE convergence_tol must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_params: ParameterSet,
    pub best_value: f64,
    pub evals_used: usize,
    /// Best-so-far value after the initial population and after each
    /// shuffling loop.
    pub trace: Vec<f64>,
    /// Evaluations whose objective returned an error (scored as -inf).
    pub failed_evals: usize,
    pub seed: u64,
}

#[derive(Clone)]
struct Point {
    x: Vec<f64>,
    f: f64,
}

fn sort_desc(points: &mut [Point]) {
    points.sort_by(|a, b| b.f.total_cmp(&a.f));
}

struct Budget<'a, F> {
    objective: &'a F,
    used: usize,
    max: usize,
    failed: usize,
    best: Option<Point>,
}

impl<F> Budget<'_, F>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    /// `None` once the evaluation budget is spent.
    fn eval(&mut self, x: Vec<f64>) -> Option<Point> {
        if self.used >= self.max {
            return None;
        }
        self.used += 1;
        let f = match (self.objective)(&x) {
            Ok(v) if !v.is_nan() => v,
            _ => {
                self.failed += 1;
                f64::NEG_INFINITY
            }
        };
        let p = Point { x, f };
        if self.best.as_ref().map_or(true, |b| p.f > b.f) {
            self.best = Some(p.clone());
        }
        Some(p)
    }

    fn best_value(&self) -> f64 {
        self.best.as_ref().map_or(f64::NEG_INFINITY, |b| b.f)
    }
}

fn uniform_in(rng: &mut ChaCha8Rng, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    lower
        .iter()
        .zip(upper)
        .map(|(lo, hi)| if hi > lo { rng.gen_range(*lo..=*hi) } else { *lo })
        .collect()
}

/// Draws `q` distinct ranks out of `m`, always including the best, with
/// probability decreasing linearly in rank.
fn select_subcomplex(rng: &mut ChaCha8Rng, m: usize, q: usize) -> Vec<usize> {
    if q >= m {
        return (0..m).collect();
    }
    let mut chosen = vec![0usize];
    let mf = m as f64;
    while chosen.len() < q {
        let r: f64 = rng.gen();
        let t = (mf + 0.5 - ((mf + 0.5).powi(2) - mf * (mf + 1.0) * r).sqrt()).floor();
        let pos = (t.max(0.0) as usize).min(m - 1);
        if !chosen.contains(&pos) {
            chosen.push(pos);
        }
    }
    chosen.sort_unstable();
    chosen
}

fn relative_change(old: f64, new: f64) -> f64 {
    if old == new {
        return 0.0;
    }
    (new - old) / old.abs().max(new.abs()).max(f64::MIN_POSITIVE)
}

pub fn sce_optimize<F>(objective: &F, space: &ParameterSpace, config: &SceConfig) -> SearchResult
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let dims = space.len();
    let lower: Vec<f64> = space.dims().iter().map(|d| d.lower).collect();
    let upper: Vec<f64> = space.dims().iter().map(|d| d.upper).collect();
    let mut rng = rng::stream(config.seed, Domain::ShuffledComplex, 0);
    let mut budget = Budget {
        objective,
        used: 0,
        max: config.max_evals,
        failed: 0,
        best: None,
    };

    let ngs = config.n_complexes;
    let npg = config.points_per_complex;
    let nps = config.subcomplex_size.min(npg);

    let mut population: Vec<Point> = Vec::with_capacity(ngs * npg);
    for _ in 0..ngs * npg {
        match budget.eval(uniform_in(&mut rng, &lower, &upper)) {
            Some(p) => population.push(p),
            None => break,
        }
    }
    sort_desc(&mut population);
    let mut trace = vec![budget.best_value()];

    'outer: while population.len() == ngs * npg {
        for igs in 0..ngs {
            let mut complex: Vec<Point> =
                (0..npg).map(|k| population[k * ngs + igs].clone()).collect();
            for _ in 0..config.evolution_steps {
                let picks = select_subcomplex(&mut rng, npg, nps);
                let mut sub: Vec<Point> = picks.iter().map(|&i| complex[i].clone()).collect();
                let (box_lo, box_hi) = bounding_box(&complex, dims);
                let evolved = evolve(&mut sub, &lower, &upper, &box_lo, &box_hi, &mut rng, &mut budget);
                for (&i, p) in picks.iter().zip(sub) {
                    complex[i] = p;
                }
                sort_desc(&mut complex);
                if !evolved {
                    for (k, p) in complex.into_iter().enumerate() {
                        population[k * ngs + igs] = p;
                    }
                    break 'outer;
                }
            }
            for (k, p) in complex.into_iter().enumerate() {
                population[k * ngs + igs] = p;
            }
        }
        sort_desc(&mut population);
        trace.push(budget.best_value());

        let n = trace.len();
        if n > config.convergence_window {
            let change = relative_change(trace[n - 1 - config.convergence_window], trace[n - 1]);
            if change.abs() < config.convergence_tol {
                break;
            }
        }
    }
    let final_best = budget.best_value();
    if trace.last() != Some(&final_best) {
        trace.push(final_best);
    }

    let best = budget.best.clone().unwrap_or_else(|| Point {
        x: lower.clone(),
        f: f64::NEG_INFINITY,
    });
    SearchResult {
        best_params: ParameterSet::new(best.x),
        best_value: best.f,
        evals_used: budget.used,
        trace,
        failed_evals: budget.failed,
        seed: config.seed,
    }
}

fn bounding_box(points: &[Point], dims: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; dims];
    let mut hi = vec![f64::NEG_INFINITY; dims];
    for p in points {
        for d in 0..dims {
            lo[d] = lo[d].min(p.x[d]);
            hi[d] = hi[d].max(p.x[d]);
        }
    }
    (lo, hi)
}

/// One competitive complex evolution step on `sub` (sorted best first).
/// Returns false when the budget ran out before a replacement was made.
fn evolve<F>(
    sub: &mut [Point],
    lower: &[f64],
    upper: &[f64],
    box_lo: &[f64],
    box_hi: &[f64],
    rng: &mut ChaCha8Rng,
    budget: &mut Budget<'_, F>,
) -> bool
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let q = sub.len();
    let dims = lower.len();
    let worst = sub[q - 1].clone();
    let mut centroid = vec![0.0; dims];
    for p in &sub[..q - 1] {
        for (c, x) in centroid.iter_mut().zip(&p.x) {
            *c += x;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= (q - 1) as f64);

    let reflected: Vec<f64> = centroid
        .iter()
        .zip(&worst.x)
        .map(|(c, w)| 2.0 * c - w)
        .collect();
    let inside = reflected
        .iter()
        .zip(lower.iter().zip(upper))
        .all(|(x, (lo, hi))| x >= lo && x <= hi);
    let candidate = if inside {
        reflected
    } else {
        uniform_in(rng, box_lo, box_hi)
    };
    let Some(mut next) = budget.eval(candidate) else {
        return false;
    };
    if next.f < worst.f {
        let contracted: Vec<f64> = centroid
            .iter()
            .zip(&worst.x)
            .map(|(c, w)| 0.5 * (c + w))
            .collect();
        let Some(p) = budget.eval(contracted) else {
            return false;
        };
        next = p;
        if next.f < worst.f {
            let Some(p) = budget.eval(uniform_in(rng, box_lo, box_hi)) else {
                return false;
            };
            next = p;
        }
    }
    sub[q - 1] = next;
    true
}

/// Runs `repeats` independent searches with seeds `seed, seed + 1, ...`
/// concurrently and returns the highest value found with every result.
pub fn sce_repeats<F>(
    objective: &F,
    space: &ParameterSpace,
    config: &SceConfig,
    repeats: usize,
) -> (f64, Vec<SearchResult>)
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let results: Vec<SearchResult> = (0..repeats.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let mut cfg = config.clone();
            cfg.seed = config.seed.wrapping_add(r);
            sce_optimize(objective, space, &cfg)
        })
        .collect();
    let hmv = results
        .iter()
        .map(|r| r.best_value)
        .fold(f64::NEG_INFINITY, f64::max);
    (hmv, results)
}
