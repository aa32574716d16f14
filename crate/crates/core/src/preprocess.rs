//! Variable fixing by diagonal dominance and the matching sensitivity ranges.
//!
//! For variable `i` let `neg_i` and `pos_i` be the sums of its negative and
//! positive off-diagonal coefficients. Then:
//!
//! * dominant: `c_ii > 0` and `c_ii + 2 neg_i > 0` forces `x_i = 1`;
//! * recessive: `c_ii < 0` and `c_ii + 2 pos_i < 0` forces `x_i = 0`;
//! * with `c_ii = 0`, a row whose off-diagonals are all `>= 0` (some `> 0`)
//!   admits an optimum with `x_i = 1`, and a row whose off-diagonals are all
//!   `<= 0` (some `< 0`) admits an optimum with `x_i = 0`.
//!
//! The strict rules hold in every optimum; the zero-diagonal rules only in
//! some optimum.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::instance::QuboInstance;

/// Which value, if any, the fixing rules certify for a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fixable {
    One,
    Zero,
    None,
}

/// Strength of a fixing certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    /// The fixed value appears in every optimal solution.
    AllOptima,
    /// The fixed value appears in at least one optimal solution.
    SomeOptimum,
}

/// Row statistics of one variable against the currently free neighbours.
#[derive(Debug, Clone, Copy)]
struct RowSums {
    diagonal: f64,
    negative: f64,
    positive: f64,
}

impl RowSums {
    fn of(instance: &QuboInstance, i: usize) -> Self {
        let (mut negative, mut positive) = (0.0, 0.0);
        for &(_, c) in instance.row(i) {
            if c < 0.0 {
                negative += c;
            } else {
                positive += c;
            }
        }
        Self {
            diagonal: instance.diagonal(i),
            negative,
            positive,
        }
    }

    /// `c_ii + 2 neg` for a non-negative diagonal, `c_ii + 2 pos` otherwise.
    fn delta(&self) -> f64 {
        if self.diagonal >= 0.0 {
            self.diagonal + 2.0 * self.negative
        } else {
            self.diagonal + 2.0 * self.positive
        }
    }

    fn classify(&self) -> (Fixable, Guarantee) {
        let delta = self.delta();
        if self.diagonal > 0.0 && delta > 0.0 {
            (Fixable::One, Guarantee::AllOptima)
        } else if self.diagonal < 0.0 && delta < 0.0 {
            (Fixable::Zero, Guarantee::AllOptima)
        } else if self.diagonal == 0.0 && self.negative == 0.0 && self.positive > 0.0 {
            (Fixable::One, Guarantee::SomeOptimum)
        } else if self.diagonal == 0.0 && self.positive == 0.0 && self.negative < 0.0 {
            (Fixable::Zero, Guarantee::SomeOptimum)
        } else {
            (Fixable::None, Guarantee::AllOptima)
        }
    }
}

fn check_index(instance: &QuboInstance, i: usize) -> Result<()> {
    if i >= instance.n() {
        return input(format!(
            "variable {i} out of range for n = {}",
            instance.n()
        ));
    }
    Ok(())
}

/// Dominance slack of variable `i`.
///
/// For `c_ii >= 0` this is `c_ii + 2 * (sum of negative c_ij)`: when
/// positive it is how far `c_ii` can drop while `x_i = 1` stays certain, when
/// negative how far it must rise before that holds. For `c_ii < 0` it is
/// `c_ii + 2 * (sum of positive c_ij)`, negative exactly when `x_i = 0` is
/// certain.
pub fn delta_p(instance: &QuboInstance, i: usize) -> Result<f64> {
    check_index(instance, i)?;
    Ok(RowSums::of(instance, i).delta())
}

/// How far the symmetric pair value `c_ij` may fall before a dominant `x_i`
/// is no longer certain to be 1. The pair enters the row sum twice, so this
/// is half of [`delta_p`].
pub fn pair_slack(instance: &QuboInstance, i: usize, j: usize) -> Result<f64> {
    check_index(instance, i)?;
    check_index(instance, j)?;
    if i == j {
        return input("pair slack needs two distinct variables");
    }
    let row = RowSums::of(instance, i);
    let delta = row.delta();
    if !(row.diagonal > 0.0 && delta > 0.0) {
        return Err(Error::State(format!(
            "variable {i} is not diagonally dominant (c_ii = {}, slack = {delta})",
            row.diagonal
        )));
    }
    Ok(delta / 2.0)
}

/// Result of substituting fixed values into an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub instance: QuboInstance,
    /// Objective contributed by the fixed variables alone.
    pub constant: f64,
    /// `index_map[r]` is the original index of reduced variable `r`.
    pub index_map: Vec<usize>,
}

/// Substitutes `(index, bit)` assignments and drops those variables.
///
/// A variable fixed to 1 moves `c_ii` (and its pair terms with other
/// variables fixed to 1) into the constant and folds `2 c_ij` into the
/// diagonal of every survivor `j`. A variable fixed to 0 simply disappears.
pub fn reduce(instance: &QuboInstance, assignments: &[(usize, u8)]) -> Result<Reduction> {
    let n = instance.n();
    let mut fixed: Vec<Option<u8>> = vec![None; n];
    for &(i, bit) in assignments {
        check_index(instance, i)?;
        if bit > 1 {
            return input(format!("bit for variable {i} is {bit}, expected 0 or 1"));
        }
        if fixed[i].replace(bit).is_some() {
            return input(format!("variable {i} assigned twice"));
        }
    }

    let index_map: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let mut position = vec![usize::MAX; n];
    for (r, &i) in index_map.iter().enumerate() {
        position[i] = r;
    }

    let mut constant = 0.0;
    let mut diagonal: Vec<f64> = index_map.iter().map(|&i| instance.diagonal(i)).collect();
    let mut off = Vec::new();
    for c in instance.entries() {
        match (fixed[c.i], fixed[c.j]) {
            (Some(1), Some(1)) => constant += if c.i == c.j { c.value } else { 2.0 * c.value },
            (Some(1), None) => diagonal[position[c.j]] += 2.0 * c.value,
            (None, Some(1)) => diagonal[position[c.i]] += 2.0 * c.value,
            (None, None) if c.i != c.j => off.push((position[c.i], position[c.j], c.value)),
            _ => {}
        }
    }
    let triples = diagonal
        .into_iter()
        .enumerate()
        .map(|(r, v)| (r, r, v))
        .chain(off);
    let mut reduced = QuboInstance::new(index_map.len(), triples)?;
    if let Some(name) = instance.name() {
        reduced = reduced.with_name(format!("{name} (reduced)"));
    }
    Ok(Reduction {
        instance: reduced,
        constant,
        index_map,
    })
}

/// One variable fixed by [`fix_variables`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedVariable {
    pub index: usize,
    pub bit: u8,
    /// Slack at the moment the rule fired, against the partially reduced
    /// instance.
    pub delta: f64,
    /// 1-based round in which the rule fired.
    pub round: usize,
    pub guarantee: Guarantee,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixReport {
    pub assignments: Vec<FixedVariable>,
    pub constant: f64,
    pub reduced: QuboInstance,
    pub index_map: Vec<usize>,
    /// Rounds performed, including the final round in which nothing fired.
    pub rounds: usize,
}

impl FixReport {
    /// Expands an assignment of the reduced instance to the original indices.
    pub fn merge(&self, reduced_bits: &[u8]) -> Result<Vec<u8>> {
        self.reduced.check_bits(reduced_bits)?;
        let n = self.index_map.len() + self.assignments.len();
        let mut bits = vec![0; n];
        for a in &self.assignments {
            bits[a.index] = a.bit;
        }
        for (r, &i) in self.index_map.iter().enumerate() {
            bits[i] = reduced_bits[r];
        }
        Ok(bits)
    }
}

/// Applies the fixing rules in ascending index order, substituting each fix
/// immediately, and repeats full scans until a round fixes nothing.
pub fn fix_variables(instance: &QuboInstance) -> FixReport {
    let n = instance.n();
    let mut fixed: Vec<Option<u8>> = vec![None; n];
    // diagonal plus twice the couplings to variables already fixed to 1
    let mut folded: Vec<f64> = (0..n).map(|i| instance.diagonal(i)).collect();
    let mut assignments = Vec::new();
    let mut all_strict = true;
    let mut rounds = 0;

    loop {
        rounds += 1;
        let mut fired = false;
        for i in 0..n {
            if fixed[i].is_some() {
                continue;
            }
            let mut row = RowSums {
                diagonal: folded[i],
                negative: 0.0,
                positive: 0.0,
            };
            for &(j, c) in instance.row(i) {
                if fixed[j].is_none() {
                    if c < 0.0 {
                        row.negative += c;
                    } else {
                        row.positive += c;
                    }
                }
            }
            let (fixable, guarantee) = row.classify();
            let bit = match fixable {
                Fixable::One => 1,
                Fixable::Zero => 0,
                Fixable::None => continue,
            };
            all_strict &= guarantee == Guarantee::AllOptima;
            let guarantee = if all_strict {
                Guarantee::AllOptima
            } else {
                Guarantee::SomeOptimum
            };
            fixed[i] = Some(bit);
            if bit == 1 {
                for &(j, c) in instance.row(i) {
                    folded[j] += 2.0 * c;
                }
            }
            assignments.push(FixedVariable {
                index: i,
                bit,
                delta: row.delta(),
                round: rounds,
                guarantee,
            });
            fired = true;
        }
        if !fired {
            break;
        }
    }

    let pairs: Vec<(usize, u8)> = assignments.iter().map(|a| (a.index, a.bit)).collect();
    let Reduction {
        instance: reduced,
        constant,
        index_map,
    } = reduce(instance, &pairs).expect("fixed indices are distinct and in range");
    FixReport {
        assignments,
        constant,
        reduced,
        index_map,
        rounds,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRecord {
    pub index: usize,
    pub diagonal: f64,
    pub delta: f64,
    pub fixable: Fixable,
    /// Not fixable, but within the caller's tolerance of becoming so.
    pub near: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub records: Vec<SensitivityRecord>,
}

impl SensitivityReport {
    pub fn fixable(&self) -> impl Iterator<Item = &SensitivityRecord> {
        self.records.iter().filter(|r| r.fixable != Fixable::None)
    }

    pub fn near(&self) -> impl Iterator<Item = &SensitivityRecord> {
        self.records.iter().filter(|r| r.near)
    }
}

/// Per-variable slack and classification on the unreduced instance.
pub fn sensitivity_report(
    instance: &QuboInstance,
    near_tolerance: f64,
) -> Result<SensitivityReport> {
    if near_tolerance.is_nan() || near_tolerance < 0.0 {
        return input(format!(
            "near tolerance must be non-negative, got {near_tolerance}"
        ));
    }
    let records = (0..instance.n())
        .map(|i| {
            let row = RowSums::of(instance, i);
            let delta = row.delta();
            let (fixable, _) = row.classify();
            SensitivityRecord {
                index: i,
                diagonal: row.diagonal,
                delta,
                fixable,
                near: fixable == Fixable::None && delta.abs() <= near_tolerance,
            }
        })
        .collect();
    Ok(SensitivityReport { records })
}

/// Classification of a single variable, as used by [`sensitivity_report`].
pub fn classify(instance: &QuboInstance, i: usize) -> Result<(Fixable, Guarantee)> {
    check_index(instance, i)?;
    Ok(RowSums::of(instance, i).classify())
}
