//! Scenario generators and two-level orthogonal designs.
//!
//! Two generator matrices, `level_a` and `level_b`, bound every coefficient.
//! Positions where they differ are the design factors; a run of a `k x d`
//! design with entries in `{+1, -1}` picks `level_a` (`+1`) or `level_b`
//! (`-1`) for each factor and so instantiates one scenario. Designs are
//! taken from Sylvester-Hadamard matrices, whose columns are balanced and
//! pairwise orthogonal.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::instance::QuboInstance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorEntry {
    pub i: usize,
    pub j: usize,
    /// Value in the `+1` ("upper") generator.
    pub a: f64,
    /// Value in the `-1` ("lower") generator.
    pub b: f64,
}

impl GeneratorEntry {
    pub fn differs(&self) -> bool {
        self.a != self.b
    }

    pub fn position(&self) -> (usize, usize) {
        (self.i, self.j)
    }
}

/// The two extreme matrices, stored as one list of upper-triangular
/// positions. Nothing orders `a` against `b`; they are labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioGenerators {
    n: usize,
    entries: Vec<GeneratorEntry>,
}

#[derive(Deserialize)]
struct RawGenerators {
    n: usize,
    entries: Vec<GeneratorEntry>,
}

impl<'de> Deserialize<'de> for ScenarioGenerators {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let raw = RawGenerators::deserialize(deserializer)?;
        Self::new(raw.n, raw.entries.into_iter().map(|e| (e.i, e.j, e.a, e.b)))
            .map_err(serde::de::Error::custom)
    }
}

impl ScenarioGenerators {
    /// Builds generators from `(i, j, a, b)`, 0-based. `i > j` is swapped;
    /// positions that are zero in both matrices are dropped.
    pub fn new<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64, f64)>,
    {
        let mut list = Vec::new();
        for (i, j, a, b) in entries {
            if i >= n || j >= n {
                return input(format!(
                    "generator position ({i}, {j}) out of range for n = {n}"
                ));
            }
            if !a.is_finite() || !b.is_finite() {
                return input(format!(
                    "generator position ({i}, {j}) has a non-finite level"
                ));
            }
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            list.push(GeneratorEntry { i, j, a, b });
        }
        list.sort_by_key(GeneratorEntry::position);
        if let Some(w) = list.windows(2).find(|w| w[0].position() == w[1].position()) {
            return input(format!(
                "duplicate generator position ({}, {})",
                w[0].i, w[0].j
            ));
        }
        list.retain(|e| e.a != 0.0 || e.b != 0.0);
        Ok(Self { n, entries: list })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("generators serialize")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[GeneratorEntry] {
        &self.entries
    }

    /// The `+1` generator as an instance.
    pub fn upper(&self) -> QuboInstance {
        self.instance_with(|e| e.a)
    }

    /// The `-1` generator as an instance.
    pub fn lower(&self) -> QuboInstance {
        self.instance_with(|e| e.b)
    }

    fn instance_with(&self, level: impl Fn(&GeneratorEntry) -> f64) -> QuboInstance {
        QuboInstance::new(self.n, self.entries.iter().map(|e| (e.i, e.j, level(e))))
            .expect("generator positions are valid")
    }
}

/// Positions where the generators disagree, in `(i, j)` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferenceSet {
    pub positions: Vec<(usize, usize)>,
}

impl DifferenceSet {
    pub fn d(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Column names used by CSV exports: `pos_i_j`.
    pub fn column_names(&self) -> Vec<String> {
        self.positions
            .iter()
            .map(|(i, j)| format!("pos_{i}_{j}"))
            .collect()
    }
}

pub fn differing_elements(gen: &ScenarioGenerators) -> DifferenceSet {
    DifferenceSet {
        positions: gen
            .entries
            .iter()
            .filter(|e| e.differs())
            .map(GeneratorEntry::position)
            .collect(),
    }
}

/// Smallest power of two `k >= 2d`, at least 4 when `d >= 1`; 1 when `d = 0`.
pub fn run_count(d: usize) -> usize {
    if d == 0 {
        1
    } else {
        (2 * d).next_power_of_two().max(4)
    }
}

/// A `k x d` table of `+1` / `-1` levels; column `m` drives
/// `DifferenceSet::positions[m]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignMatrix {
    k: usize,
    d: usize,
    levels: Vec<i8>,
}

impl DesignMatrix {
    /// Wraps an arbitrary level table; it is not checked for orthogonality.
    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut levels = Vec::with_capacity(rows.len() * d);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != d {
                return input(format!("run {r} has {} levels, expected {d}", row.len()));
            }
            if let Some(&bad) = row.iter().find(|&&v| v != 1 && v != -1) {
                return input(format!("run {r} has level {bad}, expected +1 or -1"));
            }
            levels.extend_from_slice(row);
        }
        Ok(Self {
            k: rows.len(),
            d,
            levels,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, r: usize) -> &[i8] {
        &self.levels[r * self.d..(r + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        (0..self.k).map(move |r| self.row(r))
    }

    pub fn level(&self, r: usize, m: usize) -> i8 {
        self.levels[r * self.d + m]
    }

    pub fn column(&self, m: usize) -> impl Iterator<Item = i8> + '_ {
        (0..self.k).map(move |r| self.level(r, m))
    }

    /// Every column sums to zero.
    pub fn is_balanced(&self) -> bool {
        (0..self.d).all(|m| self.column(m).map(i64::from).sum::<i64>() == 0)
    }

    /// Every pair of distinct columns has dot product zero.
    pub fn is_orthogonal(&self) -> bool {
        (0..self.d).all(|a| {
            (a + 1..self.d).all(|b| {
                (0..self.k)
                    .map(|r| i64::from(self.level(r, a) * self.level(r, b)))
                    .sum::<i64>()
                    == 0
            })
        })
    }

    /// CSV with a `pos_i_j` header and `+1` / `-1` cells.
    pub fn to_csv(&self, diff: &DifferenceSet) -> Result<String> {
        if diff.d() != self.d {
            return input(format!(
                "difference set has {} positions, design has {} columns",
                diff.d(),
                self.d
            ));
        }
        let mut out = diff.column_names().join(",");
        out.push('\n');
        for row in self.rows() {
            let cells: Vec<&str> = row
                .iter()
                .map(|&v| if v > 0 { "+1" } else { "-1" })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        Ok(out)
    }
}

/// Entry `(r, c)` of the order-`k` Sylvester-Hadamard matrix.
fn hadamard(r: usize, c: usize) -> i8 {
    if (r & c).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Columns `1..=d` of the order-`k` Sylvester-Hadamard matrix
/// (`H_1 = [1]`, `H_2m = [[H_m, H_m], [H_m, -H_m]]`); column 0, all `+1`, is
/// skipped and factor `m` takes column `m + 1`.
pub fn build_design(k: usize, d: usize) -> Result<DesignMatrix> {
    if !k.is_power_of_two() {
        return input(format!("run count {k} is not a power of two"));
    }
    if d == 0 {
        return input("design needs at least one factor");
    }
    if k < 2 * d {
        return input(format!("run count {k} is below twice the factor count {d}"));
    }
    let levels = (0..k)
        .flat_map(|r| (1..=d).map(move |c| hadamard(r, c)))
        .collect();
    Ok(DesignMatrix { k, d, levels })
}

fn check_alignment(gen: &ScenarioGenerators, diff: &DifferenceSet) -> Result<()> {
    let expected = gen
        .entries
        .iter()
        .filter(|e| e.differs())
        .map(GeneratorEntry::position);
    if !expected.eq(diff.positions.iter().copied()) {
        return input("difference set does not match the generators");
    }
    Ok(())
}

/// Scenario for one design run: `level_a` where the run is `+1`, `level_b`
/// where it is `-1`, the common value elsewhere.
pub fn instantiate_scenario(
    gen: &ScenarioGenerators,
    diff: &DifferenceSet,
    row: &[i8],
) -> Result<QuboInstance> {
    check_alignment(gen, diff)?;
    if row.len() != diff.d() {
        return input(format!(
            "run has {} levels, difference set has {}",
            row.len(),
            diff.d()
        ));
    }
    if let Some(&bad) = row.iter().find(|&&v| v != 1 && v != -1) {
        return input(format!("level {bad} is not +1 or -1"));
    }
    let mut factor = 0;
    let triples: Vec<_> = gen
        .entries
        .iter()
        .map(|e| {
            let v = if !e.differs() {
                e.a
            } else {
                let level = row[factor];
                factor += 1;
                if level > 0 {
                    e.a
                } else {
                    e.b
                }
            };
            (e.i, e.j, v)
        })
        .collect();
    QuboInstance::new(gen.n, triples)
}

/// Every position at the midpoint `(a + b) / 2`.
pub fn average_instance(gen: &ScenarioGenerators) -> QuboInstance {
    gen.instance_with(|e| (e.a + e.b) / 2.0)
}

/// Generators at `c (1 + fraction)` and `c (1 - fraction)` for every nonzero
/// coefficient `c`; zero coefficients stay zero.
pub fn perturbed_generators(instance: &QuboInstance, fraction: f64) -> Result<ScenarioGenerators> {
    if !(fraction > 0.0 && fraction.is_finite()) {
        return input(format!(
            "perturbation fraction must be positive, got {fraction}"
        ));
    }
    ScenarioGenerators::new(
        instance.n(),
        instance.entries().iter().map(|c| {
            (
                c.i,
                c.j,
                c.value * (1.0 + fraction),
                c.value * (1.0 - fraction),
            )
        }),
    )
}

/// Each differing position drawn uniformly from the closed interval between
/// its levels, in position order, from a generator seeded with `seed`.
pub fn random_scenario(gen: &ScenarioGenerators, seed: u64) -> QuboInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<_> = gen
        .entries
        .iter()
        .map(|e| {
            let v = if e.differs() {
                rng.random_range(e.a.min(e.b)..=e.a.max(e.b))
            } else {
                e.a
            };
            (e.i, e.j, v)
        })
        .collect();
    QuboInstance::new(gen.n, triples).expect("generator positions are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{product_transition_generators, PRODUCT_TRANSITION_LEVELS};

    #[test]
    fn difference_set_of_product_example() {
        let gen = product_transition_generators();
        let diff = differing_elements(&gen);
        assert_eq!(diff.d(), 22);
        assert!(!diff.positions.contains(&(1, 1)));
        let mut sorted = diff.positions.clone();
        sorted.sort();
        assert_eq!(sorted, diff.positions);
        assert_eq!(run_count(diff.d()), 64);
    }

    #[test]
    fn difference_set_edge_cases() {
        let same = ScenarioGenerators::new(2, [(0, 0, 3.0, 3.0), (0, 1, -1.0, -1.0)]).unwrap();
        assert!(differing_elements(&same).is_empty());
        let one = ScenarioGenerators::new(3, [(1, 1, 3.0, 4.0), (0, 2, 1.0, 1.0)]).unwrap();
        assert_eq!(differing_elements(&one).positions, vec![(1, 1)]);
    }

    #[test]
    fn run_counts() {
        assert_eq!(run_count(0), 1);
        assert_eq!(run_count(1), 4);
        assert_eq!(run_count(2), 4);
        assert_eq!(run_count(3), 8);
        assert_eq!(run_count(23), 64);
        assert_eq!(run_count(123), 256);
        assert_eq!(run_count(130), 512);
        for d in 0..300 {
            assert!(run_count(d) > d);
        }
    }

    #[test]
    fn small_sylvester_design() {
        let design = build_design(8, 3).unwrap();
        let cols: Vec<Vec<i8>> = (0..3).map(|m| design.column(m).collect()).collect();
        assert_eq!(
            cols,
            vec![
                vec![1, -1, 1, -1, 1, -1, 1, -1],
                vec![1, 1, -1, -1, 1, 1, -1, -1],
                vec![1, -1, -1, 1, 1, -1, -1, 1],
            ]
        );
        assert!(design.is_balanced() && design.is_orthogonal());
    }

    #[test]
    fn design_preconditions() {
        assert!(build_design(6, 3).is_err());
        assert!(build_design(4, 3).is_err());
        assert!(build_design(4, 2).is_ok());
        assert!(build_design(4, 0).is_err());
        assert!(build_design(8, 5).is_err());
    }

    #[test]
    fn sixty_four_run_design_is_orthogonal() {
        let design = build_design(64, 23).unwrap();
        assert_eq!((design.k(), design.d()), (64, 23));
        assert!(design.is_balanced() && design.is_orthogonal());
        assert!(design.row(0).iter().all(|&v| v == 1));
    }

    #[test]
    fn non_orthogonal_table_is_detected() {
        let design =
            DesignMatrix::from_rows(&[vec![1, 1], vec![-1, -1], vec![1, 1], vec![-1, -1]]).unwrap();
        assert!(design.is_balanced());
        assert!(!design.is_orthogonal());
        assert!(DesignMatrix::from_rows(&[vec![1, 0]]).is_err());
    }

    #[test]
    fn extreme_runs_reproduce_generators() {
        let gen = product_transition_generators();
        let diff = differing_elements(&gen);
        let plus = instantiate_scenario(&gen, &diff, &vec![1; diff.d()]).unwrap();
        let minus = instantiate_scenario(&gen, &diff, &vec![-1; diff.d()]).unwrap();
        assert_eq!(plus, gen.upper());
        assert_eq!(minus, gen.lower());
    }

    #[test]
    fn single_high_factor() {
        let gen = product_transition_generators();
        let diff = differing_elements(&gen);
        let m = diff.positions.iter().position(|&p| p == (5, 8)).unwrap();
        let mut row = vec![-1; diff.d()];
        row[m] = 1;
        let q = instantiate_scenario(&gen, &diff, &row).unwrap();
        assert_eq!(q.get(5, 8), 9.0);
        for &(i, j, _, b) in &PRODUCT_TRANSITION_LEVELS {
            if (i, j) != (5, 8) {
                assert_eq!(q.get(i, j), b, "position ({i}, {j})");
            }
        }
    }

    #[test]
    fn instantiate_checks_inputs() {
        let gen = product_transition_generators();
        let diff = differing_elements(&gen);
        assert!(instantiate_scenario(&gen, &diff, &[1; 3]).is_err());
        assert!(instantiate_scenario(&gen, &diff, &vec![0; diff.d()]).is_err());
        let wrong = DifferenceSet {
            positions: vec![(0, 0)],
        };
        assert!(instantiate_scenario(&gen, &wrong, &[1]).is_err());
    }

    #[test]
    fn average_takes_midpoints() {
        let gen = product_transition_generators();
        let avg = average_instance(&gen);
        assert_eq!(avg.get(0, 0), -1.5);
        assert_eq!(avg.get(1, 1), 2.0);
        assert_eq!(avg.get(0, 1), -100.0);
        let zero = ScenarioGenerators::new(3, []).unwrap();
        assert_eq!(average_instance(&zero).nnz(), 0);
    }

    #[test]
    fn perturbation_scales_nonzero_coefficients() {
        let q = QuboInstance::new(3, [(0, 0, 100.0), (0, 1, -40.0)]).unwrap();
        let gen = perturbed_generators(&q, 0.05).unwrap();
        let e = gen.entries();
        assert_eq!(e.len(), 2);
        assert!((e[0].a - 105.0).abs() < 1e-12 && (e[0].b - 95.0).abs() < 1e-12);
        assert!((e[1].a + 42.0).abs() < 1e-12 && (e[1].b + 38.0).abs() < 1e-12);
        assert!(perturbed_generators(&q, 0.0).is_err());
        assert!(perturbed_generators(&q, -0.1).is_err());
    }

    #[test]
    fn random_scenarios_stay_in_range_and_are_seeded() {
        let gen = product_transition_generators();
        for seed in 0..500 {
            let q = random_scenario(&gen, seed);
            for e in gen.entries() {
                let v = q.get(e.i, e.j);
                assert!(v >= e.a.min(e.b) && v <= e.a.max(e.b));
            }
        }
        assert_eq!(random_scenario(&gen, 4), random_scenario(&gen, 4));
        let fixed = ScenarioGenerators::new(2, [(0, 1, 2.0, 2.0)]).unwrap();
        assert_eq!(random_scenario(&fixed, 1), fixed.upper());
    }

    #[test]
    fn generators_json_round_trip_and_validation() {
        let gen = product_transition_generators();
        assert_eq!(ScenarioGenerators::from_json(&gen.to_json()).unwrap(), gen);
        let bad = r#"{"n": 2, "entries": [{"i": 0, "j": 5, "a": 1, "b": 2}]}"#;
        assert!(ScenarioGenerators::from_json(bad).is_err());
    }

    #[test]
    fn design_csv_layout() {
        let diff = DifferenceSet {
            positions: vec![(0, 0), (0, 1), (1, 1)],
        };
        let csv = build_design(8, 3).unwrap().to_csv(&diff).unwrap();
        let block = "+1,+1,+1\n-1,+1,-1\n+1,-1,-1\n-1,-1,+1\n";
        assert_eq!(csv, format!("pos_0_0,pos_0_1,pos_1_1\n{block}{block}"));
    }
}
