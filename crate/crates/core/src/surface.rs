//! Response-surface estimate of the optimal objective.
//!
//! Coefficients are coded so that `level_a` maps to `+1` and `level_b` to
//! `-1`. A main-effects regression `g(z) = b0 + sum_m b_m z_m` fitted on the
//! design runs predicts the optimum of any scenario inside the generator
//! box, and `g(z) + 3 * standard_error` serves as an upper-bound estimate.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{random_scenario, DesignMatrix, DifferenceSet, ScenarioGenerators};
use crate::error::{input, Error, Result};
use crate::instance::QuboInstance;
use crate::pipeline::{scenario_seed, RobustAnalysis};
use crate::solver::{solve_exact, SolveStatus, SolverConfig};

/// Standard errors added to the estimate to form the upper bound.
pub const UPPER_BOUND_SIGMAS: f64 = 3.0;

/// Slack allowed when checking that a coded value lies in `[-1, 1]`.
const CODED_RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceModel {
    pub intercept: f64,
    /// One coefficient per position of `diff`.
    pub coefficients: Vec<f64>,
    pub standard_error: f64,
    /// Residual degrees of freedom, `k - d - 1`.
    pub dof: usize,
    pub diff: DifferenceSet,
}

#[derive(Serialize, Deserialize)]
struct ModelCoefficient {
    i: usize,
    j: usize,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    intercept: f64,
    coefficients: Vec<ModelCoefficient>,
    standard_error: f64,
    dof: usize,
}

impl SurfaceModel {
    /// Model of a scenario space with a single point: the known optimum,
    /// with no residual error.
    pub fn constant(optimum: f64) -> Self {
        Self {
            intercept: optimum,
            coefficients: Vec::new(),
            standard_error: 0.0,
            dof: 0,
            diff: DifferenceSet {
                positions: Vec::new(),
            },
        }
    }

    pub fn d(&self) -> usize {
        self.coefficients.len()
    }

    pub fn to_json(&self) -> String {
        let view = ModelJson {
            intercept: self.intercept,
            coefficients: self
                .diff
                .positions
                .iter()
                .zip(&self.coefficients)
                .map(|(&(i, j), &beta)| ModelCoefficient { i, j, beta })
                .collect(),
            standard_error: self.standard_error,
            dof: self.dof,
        };
        serde_json::to_string_pretty(&view).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let view: ModelJson = serde_json::from_str(text)?;
        if view.standard_error.is_nan() || view.standard_error < 0.0 {
            return input("standard error must be non-negative");
        }
        let positions: Vec<(usize, usize)> = view.coefficients.iter().map(|c| (c.i, c.j)).collect();
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return input("model positions must be strictly increasing");
        }
        Ok(Self {
            intercept: view.intercept,
            coefficients: view.coefficients.iter().map(|c| c.beta).collect(),
            standard_error: view.standard_error,
            dof: view.dof,
            diff: DifferenceSet { positions },
        })
    }
}

/// Codes a scenario against the generators:
/// `z_m = (2 q_m - (a_m + b_m)) / (a_m - b_m)`.
pub fn code_scenario(
    gen: &ScenarioGenerators,
    diff: &DifferenceSet,
    instance: &QuboInstance,
) -> Result<Vec<f64>> {
    if instance.n() != gen.n() {
        return input(format!(
            "instance has {} variables, generators have {}",
            instance.n(),
            gen.n()
        ));
    }
    let differing = gen
        .entries()
        .iter()
        .filter(|e| e.differs())
        .map(|e| e.position());
    if !differing.eq(diff.positions.iter().copied()) {
        return input("difference set does not match the generators");
    }
    for c in instance.entries() {
        if gen
            .entries()
            .binary_search_by_key(&(c.i, c.j), |e| e.position())
            .is_err()
        {
            return input(format!(
                "instance has coefficient at ({}, {}) outside the generators",
                c.i, c.j
            ));
        }
    }
    let mut z = Vec::with_capacity(diff.d());
    for e in gen.entries() {
        let q = instance.get(e.i, e.j);
        if !e.differs() {
            if q != e.a {
                return input(format!(
                    "({}, {}) is {q}, generators fix it at {}",
                    e.i, e.j, e.a
                ));
            }
            continue;
        }
        let (lo, hi) = (e.a.min(e.b), e.a.max(e.b));
        if q < lo || q > hi {
            return Err(Error::Range(format!(
                "({}, {}) = {q} outside [{lo}, {hi}]",
                e.i, e.j
            )));
        }
        z.push((2.0 * q - (e.a + e.b)) / (e.a - e.b));
    }
    Ok(z)
}

/// Least-squares fit over a design; uses the orthogonal shortcut when the
/// design is balanced and orthogonal and a general solve otherwise.
pub fn fit_model(
    design: &DesignMatrix,
    diff: &DifferenceSet,
    optima: &[f64],
) -> Result<SurfaceModel> {
    if diff.d() != design.d() {
        return input(format!(
            "difference set has {} positions, design has {} columns",
            diff.d(),
            design.d()
        ));
    }
    let runs: Vec<Vec<f64>> = design
        .rows()
        .map(|row| row.iter().map(|&v| f64::from(v)).collect())
        .collect();
    if design.is_balanced() && design.is_orthogonal() {
        let (intercept, coefficients) = orthogonal_fit(&runs, optima)?;
        finish(intercept, coefficients, &runs, optima, diff)
    } else {
        fit_coded(&runs, optima, diff)
    }
}

/// General least-squares fit on arbitrary coded runs.
pub fn fit_coded(runs: &[Vec<f64>], optima: &[f64], diff: &DifferenceSet) -> Result<SurfaceModel> {
    let (intercept, coefficients) = least_squares(runs, optima)?;
    finish(intercept, coefficients, runs, optima, diff)
}

fn check_shape(runs: &[Vec<f64>], optima: &[f64]) -> Result<(usize, usize)> {
    let k = runs.len();
    let d = runs.first().map_or(0, Vec::len);
    if optima.len() != k {
        return input(format!("{} optima for {k} runs", optima.len()));
    }
    if runs.iter().any(|r| r.len() != d) {
        return input("runs have different lengths");
    }
    if k < d + 2 {
        return input(format!(
            "k = {k} runs and d = {d} factors leave {} residual degrees of freedom",
            k as i64 - d as i64 - 1
        ));
    }
    Ok((k, d))
}

/// `b0 = mean(y)`, `b_m = (column_m . y) / k`. Valid only for balanced,
/// orthogonal `+1`/`-1` columns.
pub fn orthogonal_fit(runs: &[Vec<f64>], optima: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (k, d) = check_shape(runs, optima)?;
    let intercept = optima.iter().sum::<f64>() / k as f64;
    let coefficients = (0..d)
        .map(|m| runs.iter().zip(optima).map(|(r, y)| r[m] * y).sum::<f64>() / k as f64)
        .collect();
    Ok((intercept, coefficients))
}

/// Ordinary least squares with an intercept column, via SVD.
pub fn least_squares(runs: &[Vec<f64>], optima: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (k, d) = check_shape(runs, optima)?;
    let x = DMatrix::from_fn(k, d + 1, |r, c| if c == 0 { 1.0 } else { runs[r][c - 1] });
    let y = DVector::from_column_slice(optima);
    let svd = x.svd(true, true);
    let largest = svd.singular_values.max();
    let eps = largest * 1e-12 * (k.max(d + 1) as f64);
    if svd.rank(eps) < d + 1 {
        return input("coded runs are rank deficient");
    }
    let beta = svd
        .solve(&y, eps)
        .map_err(|e| Error::State(e.to_string()))?;
    Ok((beta[0], beta.iter().skip(1).copied().collect()))
}

fn finish(
    intercept: f64,
    coefficients: Vec<f64>,
    runs: &[Vec<f64>],
    optima: &[f64],
    diff: &DifferenceSet,
) -> Result<SurfaceModel> {
    if diff.d() != coefficients.len() {
        return input(format!(
            "difference set has {} positions, fit has {} factors",
            diff.d(),
            coefficients.len()
        ));
    }
    let dof = runs.len() - coefficients.len() - 1;
    let sse: f64 = runs
        .iter()
        .zip(optima)
        .map(|(z, y)| {
            let fitted = intercept + z.iter().zip(&coefficients).map(|(a, b)| a * b).sum::<f64>();
            (y - fitted).powi(2)
        })
        .sum();
    Ok(SurfaceModel {
        intercept,
        coefficients,
        standard_error: (sse / dof as f64).sqrt(),
        dof,
        diff: diff.clone(),
    })
}

/// Fits the model for a finished analysis; a single-scenario analysis
/// yields [`SurfaceModel::constant`].
pub fn fit_analysis(analysis: &RobustAnalysis) -> Result<SurfaceModel> {
    match &analysis.design {
        None => Ok(SurfaceModel::constant(analysis.results[0].value)),
        Some(design) => fit_model(design, &analysis.diff, &analysis.optima()),
    }
}

fn check_coded(model: &SurfaceModel, z: &[f64]) -> Result<()> {
    if z.len() != model.d() {
        return input(format!(
            "coded scenario has {} values, model has {} factors",
            z.len(),
            model.d()
        ));
    }
    if let Some(v) = z
        .iter()
        .find(|v| v.is_nan() || v.abs() > 1.0 + CODED_RANGE_SLACK)
    {
        return Err(Error::Range(format!("coded value {v} outside [-1, 1]")));
    }
    Ok(())
}

/// `b0 + sum_m b_m z_m`.
pub fn estimate(model: &SurfaceModel, z: &[f64]) -> Result<f64> {
    check_coded(model, z)?;
    Ok(model.intercept
        + model
            .coefficients
            .iter()
            .zip(z)
            .map(|(b, v)| b * v)
            .sum::<f64>())
}

/// Estimate plus [`UPPER_BOUND_SIGMAS`] standard errors.
pub fn upper_bound(model: &SurfaceModel, z: &[f64]) -> Result<f64> {
    Ok(estimate(model, z)? + UPPER_BOUND_SIGMAS * model.standard_error)
}

/// `100 (bound - optimum) / |optimum|`, undefined at a zero optimum.
pub fn gap_percent(bound: f64, optimum: f64) -> Option<f64> {
    (optimum != 0.0).then(|| 100.0 * (bound - optimum) / optimum.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub scenario: usize,
    pub optimum: f64,
    pub g_estimate: f64,
    pub g_bound: f64,
    pub possum_bound: f64,
    pub g_gap_pct: Option<f64>,
    pub possum_gap_pct: Option<f64>,
    pub status: SolveStatus,
}

impl BoundRow {
    pub fn proven(&self) -> bool {
        self.status == SolveStatus::ProvenOptimal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundComparison {
    /// Sorted by descending surface-bound gap; rows without a gap last.
    pub rows: Vec<BoundRow>,
}

impl BoundComparison {
    fn counted(&self) -> impl Iterator<Item = &BoundRow> {
        self.rows.iter().filter(|r| r.proven())
    }

    fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
        let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
        (count > 0).then(|| sum / count as f64)
    }

    /// Mean surface-bound gap over proven rows with a nonzero optimum.
    pub fn mean_g_gap(&self) -> Option<f64> {
        Self::mean(self.counted().filter_map(|r| r.g_gap_pct))
    }

    /// Mean positive-sum-bound gap over proven rows with a nonzero optimum.
    pub fn mean_possum_gap(&self) -> Option<f64> {
        Self::mean(self.counted().filter_map(|r| r.possum_gap_pct))
    }

    /// Fraction of proven rows whose surface bound reaches the optimum.
    pub fn g_bound_validity(&self) -> Option<f64> {
        Self::mean(self.counted().map(|r| {
            if crate::pipeline::attains(r.g_bound, r.optimum) {
                1.0
            } else {
                0.0
            }
        }))
    }

    pub fn flagged(&self) -> usize {
        self.rows.iter().filter(|r| !r.proven()).count()
    }

    /// `scenario,optimum,g_estimate,g_bound,possum_bound,g_gap_pct,possum_gap_pct`.
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record([
            "scenario",
            "optimum",
            "g_estimate",
            "g_bound",
            "possum_bound",
            "g_gap_pct",
            "possum_gap_pct",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            writer.write_record([
                r.scenario.to_string(),
                r.optimum.to_string(),
                r.g_estimate.to_string(),
                r.g_bound.to_string(),
                r.possum_bound.to_string(),
                opt(r.g_gap_pct),
                opt(r.possum_gap_pct),
            ])?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Draws `count` random interior scenarios, solves each exactly and sets
/// both bounds against the optimum. Scenario `s` uses seed
/// `scenario_seed(seed, s)`.
pub fn compare_bounds(
    model: &SurfaceModel,
    gen: &ScenarioGenerators,
    count: usize,
    seed: u64,
    config: &SolverConfig,
) -> Result<BoundComparison> {
    if count == 0 {
        return input("validation needs at least one scenario");
    }
    let mut rows = (0..count)
        .into_par_iter()
        .map(|s| {
            let scenario = random_scenario(gen, scenario_seed(seed, s));
            let z = code_scenario(gen, &model.diff, &scenario)?;
            let outcome = solve_exact(&scenario, &config.with_seed(scenario_seed(config.seed, s)));
            let optimum = outcome.solution.value;
            let g_estimate = estimate(model, &z)?;
            let g_bound = g_estimate + UPPER_BOUND_SIGMAS * model.standard_error;
            let possum_bound = scenario.positive_sum_bound();
            Ok(BoundRow {
                scenario: s,
                optimum,
                g_estimate,
                g_bound,
                possum_bound,
                g_gap_pct: gap_percent(g_bound, optimum),
                possum_gap_pct: gap_percent(possum_bound, optimum),
                status: outcome.status,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|x, y| match (x.g_gap_pct, y.g_gap_pct) {
        (Some(a), Some(b)) => b.total_cmp(&a).then(x.scenario.cmp(&y.scenario)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => x.scenario.cmp(&y.scenario),
    });
    Ok(BoundComparison { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_design, differing_elements};
    use crate::fixtures::product_transition_generators;

    fn diff_of(d: usize) -> DifferenceSet {
        DifferenceSet {
            positions: (0..d).map(|m| (m, m)).collect(),
        }
    }

    #[test]
    fn coding_maps_levels_to_unit_interval() {
        let gen = product_transition_generators();
        let diff = differing_elements(&gen);
        assert!(code_scenario(&gen, &diff, &gen.upper())
            .unwrap()
            .iter()
            .all(|&z| z == 1.0));
        assert!(code_scenario(&gen, &diff, &gen.lower())
            .unwrap()
            .iter()
            .all(|&z| z == -1.0));
        let mid = crate::design::average_instance(&gen);
        assert!(code_scenario(&gen, &diff, &mid)
            .unwrap()
            .iter()
            .all(|&z| z == 0.0));
    }

    #[test]
    fn coding_single_position() {
        let gen = ScenarioGenerators::new(9, [(5, 8, 9.0, -5.0)]).unwrap();
        let diff = differing_elements(&gen);
        let q = QuboInstance::new(9, [(5, 8, 2.0)]).unwrap();
        assert_eq!(code_scenario(&gen, &diff, &q).unwrap(), vec![0.0]);
    }

    #[test]
    fn coding_rejects_outside_values() {
        let gen = ScenarioGenerators::new(2, [(0, 1, 9.0, -5.0), (0, 0, 1.0, 1.0)]).unwrap();
        let diff = differing_elements(&gen);
        let far = QuboInstance::new(2, [(0, 1, 10.0), (0, 0, 1.0)]).unwrap();
        assert!(matches!(
            code_scenario(&gen, &diff, &far),
            Err(Error::Range(_))
        ));
        let moved = QuboInstance::new(2, [(0, 1, 0.0), (0, 0, 2.0)]).unwrap();
        assert!(matches!(
            code_scenario(&gen, &diff, &moved),
            Err(Error::Input(_))
        ));
        let extra = QuboInstance::new(2, [(0, 1, 0.0), (0, 0, 1.0), (1, 1, 3.0)]).unwrap();
        assert!(matches!(
            code_scenario(&gen, &diff, &extra),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn recovers_exact_linear_response() {
        let design = build_design(8, 2).unwrap();
        let optima: Vec<f64> = design
            .rows()
            .map(|r| 5.0 + 2.0 * f64::from(r[0]) - f64::from(r[1]))
            .collect();
        let model = fit_model(&design, &diff_of(2), &optima).unwrap();
        assert_eq!(model.intercept, 5.0);
        assert_eq!(model.coefficients, vec![2.0, -1.0]);
        assert_eq!(model.standard_error, 0.0);
        assert_eq!(model.dof, 5);
    }

    #[test]
    fn constant_response_has_zero_coefficients() {
        let design = build_design(16, 5).unwrap();
        let model = fit_model(&design, &diff_of(5), &[7.5; 16]).unwrap();
        assert_eq!(model.intercept, 7.5);
        assert!(model.coefficients.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn fit_rejects_bad_shapes() {
        let design = build_design(4, 2).unwrap();
        assert!(fit_model(&design, &diff_of(2), &[1.0; 3]).is_err());
        assert!(fit_model(&design, &diff_of(3), &[1.0; 4]).is_err());
        // k = 4, d = 3 leaves no residual degree of freedom
        let design = DesignMatrix::from_rows(&[
            vec![1, 1, 1],
            vec![-1, 1, -1],
            vec![1, -1, -1],
            vec![-1, -1, 1],
        ])
        .unwrap();
        assert!(fit_model(&design, &diff_of(3), &[1.0; 4]).is_err());
    }

    #[test]
    fn non_orthogonal_design_uses_general_solve() {
        let design = DesignMatrix::from_rows(&[
            vec![1, 1],
            vec![1, -1],
            vec![-1, 1],
            vec![1, 1],
            vec![-1, -1],
        ])
        .unwrap();
        let optima: Vec<f64> = design
            .rows()
            .map(|r| 3.0 - 4.0 * f64::from(r[0]) + 0.5 * f64::from(r[1]))
            .collect();
        let model = fit_model(&design, &diff_of(2), &optima).unwrap();
        assert!((model.intercept - 3.0).abs() < 1e-12);
        assert!((model.coefficients[0] + 4.0).abs() < 1e-12);
        assert!((model.coefficients[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn estimates_and_bounds() {
        let model = SurfaceModel {
            intercept: 5.0,
            coefficients: vec![2.0, -1.0],
            standard_error: 0.0,
            dof: 5,
            diff: diff_of(2),
        };
        assert_eq!(estimate(&model, &[0.0, 0.0]).unwrap(), 5.0);
        assert_eq!(estimate(&model, &[1.0, 1.0]).unwrap(), 6.0);
        assert_eq!(upper_bound(&model, &[1.0, 1.0]).unwrap(), 6.0);
        let z = [0.3, -0.8];
        assert_eq!(
            estimate(&model, &z).unwrap() + estimate(&model, &[-0.3, 0.8]).unwrap(),
            10.0
        );
        let noisy = SurfaceModel {
            standard_error: 2.0,
            ..model.clone()
        };
        assert_eq!(upper_bound(&noisy, &[1.0, 1.0]).unwrap(), 12.0);
        assert!(estimate(&model, &[1.0]).is_err());
        assert!(matches!(
            estimate(&model, &[1.5, 0.0]),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn model_json_round_trip() {
        let model = SurfaceModel {
            intercept: 16.25,
            coefficients: vec![0.5, -3.0],
            standard_error: 1.5,
            dof: 41,
            diff: DifferenceSet {
                positions: vec![(0, 0), (5, 8)],
            },
        };
        let text = model.to_json();
        assert!(text.contains("\"beta\": -3.0"));
        assert_eq!(SurfaceModel::from_json(&text).unwrap(), model);
    }

    #[test]
    fn gaps() {
        assert_eq!(gap_percent(15.0, 10.0), Some(50.0));
        assert_eq!(gap_percent(-5.0, -10.0), Some(50.0));
        assert_eq!(gap_percent(1.0, 0.0), None);
    }

    #[test]
    fn degenerate_generators_give_constant_bounds() {
        let gen =
            ScenarioGenerators::new(2, [(0, 0, 3.0, 3.0), (0, 1, -1.0, -1.0), (1, 1, 2.0, 2.0)])
                .unwrap();
        let model = SurfaceModel::constant(3.0);
        let cmp = compare_bounds(&model, &gen, 4, 1, &SolverConfig::default()).unwrap();
        assert_eq!(cmp.rows.len(), 4);
        for r in &cmp.rows {
            assert_eq!((r.optimum, r.g_bound, r.possum_bound), (3.0, 3.0, 5.0));
        }
        assert!(compare_bounds(&model, &gen, 0, 1, &SolverConfig::default()).is_err());
    }
}
