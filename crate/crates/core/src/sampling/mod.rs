//! Parameter-space sampling and solution-space search.

mod lhs;
mod sce;

pub use lhs::{lhs, stratum_index};
pub use sce::{sce_optimize, sce_repeats, SceConfig, SearchResult};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl Dimension {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lower..=self.upper).contains(&v)
    }
}

/// Ordered box of named parameter bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    dims: Vec<Dimension>,
}

impl ParameterSpace {
    pub fn new(dims: Vec<(String, f64, f64)>) -> Result<Self> {
        let mut out: Vec<Dimension> = Vec::with_capacity(dims.len());
        for (name, lower, upper) in dims {
            if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                return Err(Error::Config(format!(
                    "range for `{name}` must satisfy lower < upper, got [{lower}, {upper}]"
                )));
            }
            if out.iter().any(|d| d.name == name) {
                return Err(Error::Config(format!("duplicate parameter `{name}`")));
            }
            out.push(Dimension { name, lower, upper });
        }
        if out.is_empty() {
            return Err(Error::Config("parameter space has no dimensions".into()));
        }
        Ok(ParameterSpace { dims: out })
    }

    pub fn dims(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.dims.iter().map(|d| d.name.as_str())
    }

    pub fn contains(&self, values: &[f64]) -> bool {
        values.len() == self.dims.len() && self.dims.iter().zip(values).all(|(d, v)| d.contains(*v))
    }

    /// Replaces the bounds of an existing dimension.
    pub fn set_range(&mut self, name: &str, lower: f64, upper: f64) -> Result<()> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::Config(format!(
                "range for `{name}` must satisfy lower < upper, got [{lower}, {upper}]"
            )));
        }
        let dim = self
            .dims
            .iter_mut()
            .find(|d| d.name == name)
            .ok_or_else(|| Error::Config(format!("unknown parameter `{name}`")))?;
        dim.lower = lower;
        dim.upper = upper;
        Ok(())
    }
}

/// A point of a [`ParameterSpace`], values in dimension order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub values: Vec<f64>,
}

impl ParameterSet {
    pub fn new(values: Vec<f64>) -> Self {
        ParameterSet { values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_validation() {
        assert!(ParameterSpace::new(vec![("a".into(), 1.0, 1.0)]).is_err());
        assert!(ParameterSpace::new(vec![("a".into(), 0.0, 1.0), ("a".into(), 0.0, 2.0)]).is_err());
        let mut s = ParameterSpace::new(vec![("a".into(), 0.0, 1.0)]).unwrap();
        assert!(s.contains(&[1.0]));
        assert!(!s.contains(&[1.5]));
        s.set_range("a", 0.0, 2.0).unwrap();
        assert!(s.contains(&[1.5]));
        assert!(s.set_range("b", 0.0, 2.0).is_err());
    }
}
