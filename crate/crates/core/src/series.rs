use alloc::vec::Vec;
use core::ops::Index;

/// Fixed-horizon hourly series. Units (kW or $/kWh) depend on the field that
/// owns it; range checks happen when the series is placed into a
/// [`Scenario`](crate::Scenario).
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries(Vec<f64>);

impl HourlySeries {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn constant(value: f64, horizon: usize) -> Self {
        Self(alloc::vec![value; horizon])
    }

    pub fn zeros(horizon: usize) -> Self {
        Self::constant(0.0, horizon)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> core::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// Largest value, or 0 for an empty series.
    pub fn peak(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Index<usize> for HourlySeries {
    type Output = f64;

    fn index(&self, hour: usize) -> &f64 {
        &self.0[hour]
    }
}

impl From<Vec<f64>> for HourlySeries {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl FromIterator<f64> for HourlySeries {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}
