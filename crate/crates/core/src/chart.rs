//! Coordinate charts: ordered coordinate names plus constant parameters.
//!
//! Ring variables are the coordinates followed by the parameters. Parameters
//! are constants for every differential operator; multi-indices only range
//! over coordinates.

use std::collections::HashSet;
use std::sync::Arc;

use crate::coeffs::RationalFunction;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chart {
    coords: Vec<String>,
    params: Vec<String>,
}

impl Chart {
    pub fn new<S: Into<String>>(coords: impl IntoIterator<Item = S>, params: impl IntoIterator<Item = S>) -> Result<Arc<Chart>> {
        let coords: Vec<String> = coords.into_iter().map(Into::into).collect();
        let params: Vec<String> = params.into_iter().map(Into::into).collect();
        if coords.is_empty() {
            return Err(Error::InvalidChart("a chart needs at least one coordinate".into()));
        }
        let mut seen = HashSet::new();
        for name in coords.iter().chain(params.iter()) {
            let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(Error::InvalidChart(format!("`{name}` is not an identifier")));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidChart(format!("duplicate name `{name}`")));
            }
        }
        Ok(Arc::new(Chart { coords, params }))
    }

    /// Chart dimension `m`.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Number of ring variables (coordinates and parameters).
    pub fn nvars(&self) -> usize {
        self.coords.len() + self.params.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn var_names(&self) -> Vec<String> {
        self.coords.iter().chain(self.params.iter()).cloned().collect()
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    /// Ring-variable index of a coordinate or parameter name.
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.coord_index(name)
            .or_else(|| self.params.iter().position(|p| p == name).map(|i| i + self.coords.len()))
    }

    /// The coordinate function `x^i` as a scalar.
    pub fn coordinate(&self, i: usize) -> RationalFunction {
        RationalFunction::var(i, self.nvars())
    }

    pub fn zero(&self) -> RationalFunction {
        RationalFunction::zero(self.nvars())
    }

    pub fn one(&self) -> RationalFunction {
        RationalFunction::one(self.nvars())
    }

    /// Same parameters, new coordinates.
    pub fn with_coords(&self, coords: Vec<String>) -> Result<Arc<Chart>> {
        Chart::new(coords, self.params.clone())
    }
}

pub(crate) fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::ChartMismatch)
    }
}
