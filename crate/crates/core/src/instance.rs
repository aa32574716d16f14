//! Instance representation and objective evaluation.
//!
//! A [`QuboInstance`] stores the symmetric matrix `Q` in upper-triangular
//! sparse form. An off-diagonal entry `(i, j)` with `i < j` stands for both
//! `c_ij` and `c_ji`, so it contributes twice to `x^t Q x`:
//!
//! ```text
//! x^t Q x = sum_i c_ii x_i + 2 * sum_{i<j} c_ij x_i x_j
//! ```

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// One stored coefficient, `i <= j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Immutable UBQP instance: maximize `x^t Q x` over binary `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboInstance {
    n: usize,
    name: Option<String>,
    /// Nonzero coefficients sorted by `(i, j)`.
    entries: Vec<Coefficient>,
    diagonal: Vec<f64>,
    /// Off-diagonal adjacency, both directions, sorted by neighbour index.
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl QuboInstance {
    /// Builds an instance from `(i, j, value)` triples.
    ///
    /// Pairs with `i > j` are normalized to `(j, i)`. Zero values are
    /// dropped. Any position given twice is rejected, including a pair given
    /// once as `(i, j)` and once as `(j, i)`.
    pub fn new<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut list = Vec::new();
        for (i, j, value) in entries {
            if i >= n || j >= n {
                return input(format!("coefficient ({i}, {j}) out of range for n = {n}"));
            }
            if !value.is_finite() {
                return input(format!("coefficient ({i}, {j}) is not finite"));
            }
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            list.push(Coefficient { i, j, value });
        }
        list.sort_by_key(|c| (c.i, c.j));
        if let Some(w) = list
            .windows(2)
            .find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j))
        {
            return input(format!("duplicate coefficient ({}, {})", w[0].i, w[0].j));
        }
        list.retain(|c| c.value != 0.0);

        let mut diagonal = vec![0.0; n];
        let mut neighbors = vec![Vec::new(); n];
        for c in &list {
            if c.i == c.j {
                diagonal[c.i] = c.value;
            } else {
                neighbors[c.i].push((c.j, c.value));
                neighbors[c.j].push((c.i, c.value));
            }
        }
        for row in &mut neighbors {
            row.sort_by_key(|&(j, _)| j);
        }
        Ok(Self {
            n,
            name: None,
            entries: list,
            diagonal,
            neighbors,
        })
    }

    /// Builds an instance from a full square matrix, which must be symmetric.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut triples = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return input(format!("row {i} has {} columns, expected {n}", row.len()));
            }
            for j in i..n {
                if rows[j][i] != row[j] {
                    return input(format!("matrix not symmetric at ({i}, {j})"));
                }
                triples.push((i, j, row[j]));
            }
        }
        Self::new(n, triples)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Nonzero coefficients in `(i, j)` order.
    pub fn entries(&self) -> &[Coefficient] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.diagonal[i]
    }

    /// Off-diagonal neighbours of `i` as `(j, c_ij)`, sorted by `j`.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    /// Coefficient at `(i, j)` in either orientation; zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diagonal[i];
        }
        let row = &self.neighbors[i];
        match row.binary_search_by_key(&j, |&(k, _)| k) {
            Ok(pos) => row[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Full symmetric matrix.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for c in &self.entries {
            dense[c.i][c.j] = c.value;
            dense[c.j][c.i] = c.value;
        }
        dense
    }

    /// Objective `x^t Q x` for a binary assignment.
    pub fn evaluate(&self, bits: &[u8]) -> Result<f64> {
        self.check_bits(bits)?;
        Ok(self.value_unchecked(bits))
    }

    pub(crate) fn check_bits(&self, bits: &[u8]) -> Result<()> {
        if bits.len() != self.n {
            return input(format!(
                "assignment has {} bits, instance has {}",
                bits.len(),
                self.n
            ));
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return input(format!("bit {pos} is {}, expected 0 or 1", bits[pos]));
        }
        Ok(())
    }

    pub(crate) fn value_unchecked(&self, bits: &[u8]) -> f64 {
        self.entries
            .iter()
            .filter(|c| bits[c.i] == 1 && bits[c.j] == 1)
            .map(|c| if c.i == c.j { c.value } else { 2.0 * c.value })
            .sum()
    }

    /// Sum of the positive elements of the full symmetric matrix. No binary
    /// assignment can exceed it.
    pub fn positive_sum_bound(&self) -> f64 {
        self.entries
            .iter()
            .filter(|c| c.value > 0.0)
            .map(|c| if c.i == c.j { c.value } else { 2.0 * c.value })
            .sum()
    }

    /// Seeded random instance with integer coefficients uniform in
    /// `[-magnitude, magnitude]`. Each upper-triangular position is populated
    /// with probability `density`; zero draws leave the position empty.
    pub fn random(n: usize, density: f64, magnitude: i64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut triples = Vec::new();
        for i in 0..n {
            for j in i..n {
                if rng.random_bool(density.clamp(0.0, 1.0)) {
                    let v = rng.random_range(-magnitude..=magnitude);
                    triples.push((i, j, v as f64));
                }
            }
        }
        Self::new(n, triples).expect("generated coefficients are in range and unique")
    }
}

/// A binary assignment together with its objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySolution {
    pub bits: Vec<u8>,
    pub value: f64,
}

impl BinarySolution {
    /// Evaluates `bits` against `instance`.
    pub fn new(instance: &QuboInstance, bits: Vec<u8>) -> Result<Self> {
        let value = instance.evaluate(&bits)?;
        Ok(Self { bits, value })
    }

    pub(crate) fn evaluated(instance: &QuboInstance, bits: Vec<u8>) -> Self {
        let value = instance.value_unchecked(&bits);
        Self { bits, value }
    }

    /// Bits as a `0`/`1` string, variable 0 first.
    pub fn bitstring(&self) -> String {
        bitstring(&self.bits)
    }
}

impl fmt::Display for BinarySolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "value={} bits={}", self.value, self.bitstring())
    }
}

pub fn bitstring(bits: &[u8]) -> String {
    bits.iter()
        .map(|&b| if b == 1 { '1' } else { '0' })
        .collect()
}

/// Parses a `0`/`1` string into bits.
pub fn parse_bitstring(text: &str) -> Result<Vec<u8>> {
    text.chars()
        .map(|ch| match ch {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::Input(format!("invalid bit character {other:?}"))),
        })
        .collect()
}
