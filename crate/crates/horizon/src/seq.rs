//! Finite windows of bi-infinite real sequences, density vectors and
//! discrete line ensembles.
//!
//! A bi-infinite sequence is only ever observed through a [`Window`]: a
//! contiguous slice of values together with the index of its first entry.
//! Operations that the underlying theory defines with an infinite past take
//! an explicit boundary mode instead (see the queueing module).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite contiguous slice of a bi-infinite real sequence.
///
/// Entry `j` of `values` holds the sequence value at index `base + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    base: i64,
    values: Vec<f64>,
}

impl Window {
    pub fn new(base: i64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyWindow);
        }
        Ok(Window { base, values })
    }

    /// Constant window of length `len`.
    pub fn constant(base: i64, len: usize, value: f64) -> Result<Self> {
        Self::new(base, vec![value; len])
    }

    pub fn base(&self) -> i64 {
        self.base
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length >= 1 by construction
    }

    /// Index of the last entry.
    pub fn end(&self) -> i64 {
        self.base + self.values.len() as i64 - 1
    }

    pub fn contains(&self, index: i64) -> bool {
        index >= self.base && index <= self.end()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: i64) -> Result<f64> {
        if !self.contains(index) {
            return Err(Error::IndexOutOfRange {
                index,
                base: self.base,
                end: self.end(),
            });
        }
        Ok(self.values[(index - self.base) as usize])
    }

    /// Iterate `(index, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(j, &v)| (self.base + j as i64, v))
    }

    pub(crate) fn same_shape(&self, other: &Window) -> Result<()> {
        if self.base != other.base || self.values.len() != other.values.len() {
            return Err(Error::WindowMismatch {
                base_a: self.base,
                len_a: self.values.len(),
                base_b: other.base,
                len_b: other.values.len(),
            });
        }
        Ok(())
    }

    /// Sum of entries over `[k, l]`.
    pub fn partial_sum(&self, k: i64, l: i64) -> Result<f64> {
        if k > l {
            return Err(Error::EmptyRange { k, l });
        }
        if !self.contains(k) {
            return Err(Error::IndexOutOfRange {
                index: k,
                base: self.base,
                end: self.end(),
            });
        }
        if !self.contains(l) {
            return Err(Error::IndexOutOfRange {
                index: l,
                base: self.base,
                end: self.end(),
            });
        }
        let a = (k - self.base) as usize;
        let b = (l - self.base) as usize;
        Ok(self.values[a..=b].iter().sum())
    }

    /// Elementwise sum; requires identical base and length.
    pub fn add(&self, other: &Window) -> Result<Window> {
        self.same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Window {
            base: self.base,
            values,
        })
    }

    /// Elementwise difference; requires identical base and length.
    pub fn sub(&self, other: &Window) -> Result<Window> {
        self.same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Window {
            base: self.base,
            values,
        })
    }

    /// Shift every entry by the constant `c`.
    pub fn add_scalar(&self, c: f64) -> Window {
        Window {
            base: self.base,
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// Restriction to `[from, to]`.
    pub fn slice(&self, from: i64, to: i64) -> Result<Window> {
        if from > to {
            return Err(Error::EmptyRange { k: from, l: to });
        }
        for index in [from, to] {
            if !self.contains(index) {
                return Err(Error::IndexOutOfRange {
                    index,
                    base: self.base,
                    end: self.end(),
                });
            }
        }
        let a = (from - self.base) as usize;
        let b = (to - self.base) as usize;
        Ok(Window {
            base: from,
            values: self.values[a..=b].to_vec(),
        })
    }

    /// Drop the first `n` entries, moving the base right by `n`.
    pub fn trim_left(&self, n: usize) -> Result<Window> {
        if n >= self.values.len() {
            return Err(Error::BurnInTooLong {
                burn_in: n,
                len: self.values.len(),
            });
        }
        Ok(Window {
            base: self.base + n as i64,
            values: self.values[n..].to_vec(),
        })
    }

    /// Mean of the entries (used for empirical density bookkeeping).
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub(crate) fn from_raw(base: i64, values: Vec<f64>) -> Window {
        debug_assert!(!values.is_empty());
        Window { base, values }
    }
}

/// Strictly decreasing vector of positive densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityVector {
    rho: Vec<f64>,
}

impl DensityVector {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if rho.is_empty() {
            return Err(Error::BadDensities);
        }
        if rho.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::BadDensities);
        }
        if rho.windows(2).any(|p| p[0] <= p[1]) {
            return Err(Error::BadDensities);
        }
        Ok(DensityVector { rho })
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: usize) -> f64 {
        self.rho[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rho
    }

    /// Smallest gap between consecutive densities; the whole spread for a
    /// single density.
    pub fn min_gap(&self) -> f64 {
        self.rho
            .windows(2)
            .map(|p| p[0] - p[1])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Several windows sharing one index range, ordered bottom to top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineEnsemble {
    lines: Vec<Window>,
    ordered: bool,
}

impl LineEnsemble {
    pub fn new(lines: Vec<Window>) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        for (index, line) in lines.iter().enumerate().skip(1) {
            if lines[0].same_shape(line).is_err() {
                return Err(Error::EnsembleMismatch { index });
            }
        }
        Ok(LineEnsemble {
            lines,
            ordered: false,
        })
    }

    pub(crate) fn new_ordered(lines: Vec<Window>) -> Result<Self> {
        let mut ens = Self::new(lines)?;
        ens.ordered = true;
        Ok(ens)
    }

    pub fn k(&self) -> usize {
        self.lines.len()
    }

    pub fn base(&self) -> i64 {
        self.lines[0].base()
    }

    pub fn len(&self) -> usize {
        self.lines[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn end(&self) -> i64 {
        self.lines[0].end()
    }

    /// Whether the producer asserted cumulative ordering between lines.
    pub fn ordered(&self) -> bool {
        self.ordered
    }

    pub fn line(&self, i: usize) -> Result<&Window> {
        self.lines.get(i).ok_or(Error::LineOutOfRange {
            index: i,
            lines: self.lines.len(),
        })
    }

    pub fn lines(&self) -> &[Window] {
        &self.lines
    }

    pub fn into_lines(self) -> Vec<Window> {
        self.lines
    }

    /// Restriction of every line to `[from, to]`.
    pub fn slice(&self, from: i64, to: i64) -> Result<LineEnsemble> {
        let lines = self
            .lines
            .iter()
            .map(|l| l.slice(from, to))
            .collect::<Result<Vec<_>>>()?;
        Ok(LineEnsemble {
            lines,
            ordered: self.ordered,
        })
    }

    /// Shift every line by the constant `c`.
    pub fn add_scalar(&self, c: f64) -> LineEnsemble {
        LineEnsemble {
            lines: self.lines.iter().map(|l| l.add_scalar(c)).collect(),
            ordered: self.ordered,
        }
    }
}
