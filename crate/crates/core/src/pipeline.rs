//! Robustness analysis: solve every design scenario and pool the optima.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{
    build_design, differing_elements, instantiate_scenario, run_count, DesignMatrix, DifferenceSet,
    ScenarioGenerators,
};
use crate::error::{input, Error, Result};
use crate::instance::{bitstring, parse_bitstring, BinarySolution, QuboInstance};
use crate::solver::{solve, SolveStatus, SolverConfig};

/// Relative tolerance under which two objective values count as equal.
pub const VALUE_MATCH_TOLERANCE: f64 = 1e-9;

/// Solver seed for scenario `index`, independent of execution order.
pub fn scenario_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub scenario_index: usize,
    pub solution: BinarySolution,
    pub status: SolveStatus,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub bits: String,
    pub frequency: usize,
    pub mean_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub reference_bits: String,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub k: usize,
    /// Distinct returned solutions, ordered by bitstring.
    pub pool: Vec<PoolEntry>,
    pub most_robust: String,
    pub coverage: Option<Coverage>,
    /// Fraction of scenarios solved to proven optimality.
    pub exactness: f64,
}

impl RobustnessReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Everything produced by one analysis run.
#[derive(Debug, Clone)]
pub struct RobustAnalysis {
    pub generators: ScenarioGenerators,
    pub diff: DifferenceSet,
    /// `None` when the generators agree everywhere and the single scenario
    /// is the common matrix.
    pub design: Option<DesignMatrix>,
    /// Sorted by scenario index.
    pub results: Vec<ScenarioResult>,
    pub report: RobustnessReport,
}

impl RobustAnalysis {
    pub fn k(&self) -> usize {
        self.results.len()
    }

    /// The instance solved for scenario `index`.
    pub fn scenario(&self, index: usize) -> Result<QuboInstance> {
        match &self.design {
            None if index == 0 => Ok(self.generators.upper()),
            None => input(format!("scenario {index} out of range for k = 1")),
            Some(design) if index < design.k() => {
                instantiate_scenario(&self.generators, &self.diff, design.row(index))
            }
            Some(design) => input(format!(
                "scenario {index} out of range for k = {}",
                design.k()
            )),
        }
    }

    pub fn scenarios(&self) -> Result<Vec<QuboInstance>> {
        (0..self.k()).map(|i| self.scenario(i)).collect()
    }

    pub fn optima(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.value).collect()
    }

    /// Records the coverage of `reference` in the report and returns it.
    pub fn attach_reference(&mut self, reference: &[u8]) -> Result<f64> {
        let percent = coverage(&self.results, &self.scenarios()?, reference)?;
        self.report.coverage = Some(Coverage {
            reference_bits: bitstring(reference),
            percent,
        });
        Ok(percent)
    }
}

/// Builds the design for `gen`, solves every scenario on up to `jobs`
/// worker threads (`0` lets the pool decide) and pools the returned
/// solutions. The outcome does not depend on `jobs`.
pub fn run_robust_analysis(
    gen: &ScenarioGenerators,
    config: &SolverConfig,
    jobs: usize,
) -> Result<RobustAnalysis> {
    config.validate()?;
    let diff = differing_elements(gen);
    let design = if diff.is_empty() {
        None
    } else {
        Some(build_design(run_count(diff.d()), diff.d())?)
    };
    let k = design.as_ref().map_or(1, DesignMatrix::k);

    let solve_one = |index: usize| -> Result<ScenarioResult> {
        let scenario = match &design {
            None => gen.upper(),
            Some(design) => instantiate_scenario(gen, &diff, design.row(index))?,
        };
        let outcome = solve(
            &scenario,
            &config.with_seed(scenario_seed(config.seed, index)),
        );
        let value = outcome.solution.value;
        Ok(ScenarioResult {
            scenario_index: index,
            solution: outcome.solution,
            status: outcome.status,
            value,
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::State(format!("cannot start worker pool: {e}")))?;
    let mut results: Vec<ScenarioResult> =
        pool.install(|| (0..k).into_par_iter().map(solve_one).collect::<Result<_>>())?;
    results.sort_by_key(|r| r.scenario_index);

    let report = summarize(&results)?;
    Ok(RobustAnalysis {
        generators: gen.clone(),
        diff,
        design,
        results,
        report,
    })
}

/// Pools `results` (sorted by scenario index) into a report without
/// coverage.
pub fn summarize(results: &[ScenarioResult]) -> Result<RobustnessReport> {
    let pool = pool_solutions(results);
    let most_robust = most_robust(&pool)?;
    let exact = results
        .iter()
        .filter(|r| r.status == SolveStatus::ProvenOptimal)
        .count();
    Ok(RobustnessReport {
        k: results.len(),
        pool,
        most_robust,
        coverage: None,
        exactness: if results.is_empty() {
            0.0
        } else {
            exact as f64 / results.len() as f64
        },
    })
}

/// Groups results by exact returned bitstring; means are summed in result
/// order.
pub fn pool_solutions(results: &[ScenarioResult]) -> Vec<PoolEntry> {
    let mut groups: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for r in results {
        let entry = groups.entry(r.solution.bitstring()).or_insert((0, 0.0));
        entry.0 += 1;
        entry.1 += r.value;
    }
    groups
        .into_iter()
        .map(|(bits, (frequency, total))| PoolEntry {
            bits,
            frequency,
            mean_value: total / frequency as f64,
        })
        .collect()
}

/// Highest frequency, then higher mean, then smallest bitstring.
pub fn most_robust(pool: &[PoolEntry]) -> Result<String> {
    pool.iter()
        .min_by(|x, y| {
            y.frequency
                .cmp(&x.frequency)
                .then(y.mean_value.total_cmp(&x.mean_value))
                .then(x.bits.cmp(&y.bits))
        })
        .map(|e| e.bits.clone())
        .ok_or_else(|| Error::State("solution pool is empty".into()))
}

/// True when `candidate` reaches `optimum` up to [`VALUE_MATCH_TOLERANCE`].
pub fn attains(candidate: f64, optimum: f64) -> bool {
    candidate >= optimum - VALUE_MATCH_TOLERANCE * optimum.abs().max(1.0)
}

/// Percentage of scenarios in which `reference` attains the recorded
/// optimum, so alternate optima count as covered.
pub fn coverage(
    results: &[ScenarioResult],
    scenarios: &[QuboInstance],
    reference: &[u8],
) -> Result<f64> {
    if results.len() != scenarios.len() {
        return input(format!(
            "{} results for {} scenarios",
            results.len(),
            scenarios.len()
        ));
    }
    if results.is_empty() {
        return input("coverage of an empty scenario set");
    }
    let mut hits = 0;
    for (result, scenario) in results.iter().zip(scenarios) {
        if attains(scenario.evaluate(reference)?, result.value) {
            hits += 1;
        }
    }
    Ok(100.0 * hits as f64 / results.len() as f64)
}

/// `index,bits,value,status` rows with a header.
pub fn scenarios_to_csv(results: &[ScenarioResult]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["index", "bits", "value", "status"])?;
    for r in results {
        writer.write_record([
            r.scenario_index.to_string(),
            r.solution.bitstring(),
            r.value.to_string(),
            r.status.to_string(),
        ])?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Reads the output of [`scenarios_to_csv`], sorted by index.
pub fn scenarios_from_csv(text: &str) -> Result<Vec<ScenarioResult>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut results = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record?;
        let field = |idx: usize| {
            record.get(idx).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing column {idx}"),
            })
        };
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("invalid {what}"),
        };
        let scenario_index: usize = field(0)?.parse().map_err(|_| bad("index"))?;
        let bits = parse_bitstring(field(1)?).map_err(|_| bad("bits"))?;
        let value: f64 = field(2)?.parse().map_err(|_| bad("value"))?;
        let status: SolveStatus = field(3)?.parse().map_err(|_| bad("status"))?;
        results.push(ScenarioResult {
            scenario_index,
            solution: BinarySolution { bits, value },
            status,
            value,
        });
    }
    results.sort_by_key(|r| r.scenario_index);
    if results
        .iter()
        .enumerate()
        .any(|(k, r)| r.scenario_index != k)
    {
        return input("scenario indices are not 0..k");
    }
    Ok(results)
}
