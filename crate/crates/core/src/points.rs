//! Named numeric assignments.

use std::collections::BTreeMap;

/// An assignment of coordinate values to named chart variables. Used by all
/// fiber maps, integrators and residual evaluators.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointTuple {
    values: BTreeMap<String, f64>,
}

impl PointTuple {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, f64)>) -> Self {
        PointTuple {
            values: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.values.insert(name.into(), value);
    }

    /// Assigns `values[i]` to `names[i]`; the slices must match in length.
    pub fn set_block(&mut self, names: &[String], values: &[f64]) {
        assert_eq!(names.len(), values.len(), "block length mismatch");
        for (n, v) in names.iter().zip(values) {
            self.values.insert(n.clone(), *v);
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl<const N: usize> From<[(&str, f64); N]> for PointTuple {
    fn from(pairs: [(&str, f64); N]) -> Self {
        PointTuple::from_pairs(pairs.into_iter().map(|(n, v)| (n.to_string(), v)))
    }
}
