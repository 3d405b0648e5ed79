use rand::seq::SliceRandom;
use rand::Rng;

use super::{ParameterSet, ParameterSpace};
use crate::rng::{self, Domain};

/// Index of the equal-width stratum holding `x`; the upper bound belongs
/// to the last stratum.
pub fn stratum_index(x: f64, lower: f64, upper: f64, count: usize) -> usize {
    let t = (x - lower) / (upper - lower) * count as f64;
    (t.floor().max(0.0) as usize).min(count - 1)
}

/// Latin hypercube sample of `count` points.
///
/// Each dimension draws from its own stream, so a dimension's column does
/// not depend on the other dimensions.
pub fn lhs(space: &ParameterSpace, count: usize, seed: u64) -> Vec<ParameterSet> {
    if count == 0 {
        return Vec::new();
    }
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(space.len());
    for (d, dim) in space.dims().iter().enumerate() {
        let mut rng = rng::stream(seed, Domain::LatinHypercube, d as u64);
        let mut strata: Vec<usize> = (0..count).collect();
        strata.shuffle(&mut rng);
        let column = strata
            .into_iter()
            .map(|s| {
                let u: f64 = rng.gen();
                let x = dim.lower + (s as f64 + u) / count as f64 * dim.width();
                snap_into_stratum(x, s, dim.lower, dim.upper, count)
            })
            .collect();
        columns.push(column);
    }
    (0..count)
        .map(|i| ParameterSet::new(columns.iter().map(|c| c[i]).collect()))
        .collect()
}

/// Round-off can push a point across a stratum edge; step it back one ulp
/// at a time.
fn snap_into_stratum(mut x: f64, s: usize, lower: f64, upper: f64, count: usize) -> f64 {
    x = x.clamp(lower, upper);
    while stratum_index(x, lower, upper, count) > s {
        x = x.next_down();
    }
    while stratum_index(x, lower, upper, count) < s {
        x = x.next_up();
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(dims: usize) -> ParameterSpace {
        ParameterSpace::new((0..dims).map(|i| (format!("p{i}"), 0.0, 1.0)).collect()).unwrap()
    }

    #[test]
    fn one_point_anywhere() {
        let s = lhs(&unit(3), 1, 4);
        assert_eq!(s.len(), 1);
        assert!(unit(3).contains(&s[0].values));
    }

    #[test]
    fn four_points_one_per_quarter() {
        for seed in 0..20 {
            let s = lhs(&unit(2), 4, seed);
            for d in 0..2 {
                let mut col: Vec<f64> = s.iter().map(|p| p.values[d]).collect();
                col.sort_by(f64::total_cmp);
                for (i, x) in col.iter().enumerate() {
                    assert!(*x >= i as f64 * 0.25 && *x < (i + 1) as f64 * 0.25 + 1e-15);
                }
            }
        }
    }

    #[test]
    fn deterministic_and_dimension_independent() {
        let a = lhs(&unit(3), 50, 9);
        assert_eq!(a, lhs(&unit(3), 50, 9));
        // Adding a dimension leaves the existing columns untouched.
        let b = lhs(&unit(4), 50, 9);
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.values[..], q.values[..3]);
        }
        assert_ne!(a, lhs(&unit(3), 50, 10));
    }

    #[test]
    fn empty_request() {
        assert!(lhs(&unit(2), 0, 1).is_empty());
    }
}
