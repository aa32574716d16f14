use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use ubqp_core::design::{average_instance, perturbed_generators};
use ubqp_core::pipeline::{scenarios_from_csv, scenarios_to_csv};
use ubqp_core::surface::fit_analysis;
use ubqp_core::{
    build_design, compare_bounds, differing_elements, fit_model, fix_variables, parse_instance,
    run_count, run_robust_analysis, sensitivity_report, solve, solve_exact, write_instance, Error,
    QuboInstance, RobustAnalysis, ScenarioGenerators, SolveStatus, SolverConfig, SurfaceModel,
};

use crate::{Command, GeneratorSource, Reference, SolverArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Solve { input, out, solver } => cmd_solve(&input, out.as_deref(), &solver),
        Command::Preprocess {
            input,
            tolerance,
            out,
            reduced,
        } => cmd_preprocess(&input, tolerance, out.as_deref(), reduced.as_deref()),
        Command::Design { source, out } => cmd_design(&source, out.as_deref()),
        Command::Analyze {
            source,
            out,
            scenarios,
            reference,
            run,
        } => {
            let gen = source.load()?;
            let config = run.solver.config()?;
            let mut analysis = analyze(&gen, &config, run.jobs)?;
            if let Some(Reference::Average) = reference {
                attach_average_reference(&mut analysis, &config)?;
            }
            print_pool(&analysis);
            if let Some(path) = out {
                write(&path, &analysis.report.to_json())?;
            }
            if let Some(path) = scenarios {
                write(&path, &scenarios_to_csv(&analysis.results)?)?;
            }
            Ok(())
        }
        Command::Fit {
            source,
            fit_from,
            out,
        } => {
            let gen = source.load()?;
            let model = fit_from_csv(&gen, &fit_from)?;
            print_model(&model);
            if let Some(path) = out {
                write(&path, &model.to_json())?;
            }
            Ok(())
        }
        Command::Bound {
            source,
            fit_from,
            validate,
            out,
            model,
            run,
        } => {
            let gen = source.load()?;
            let config = run.solver.config()?;
            let fitted = match fit_from {
                Some(path) => fit_from_csv(&gen, &path)?,
                None => fit_analysis(&analyze(&gen, &config, run.jobs)?)?,
            };
            print_model(&fitted);
            let comparison = in_pool(run.jobs, || {
                compare_bounds(&fitted, &gen, validate, config.seed, &config)
            })??;
            let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}%"));
            println!(
                "validated {} scenarios ({} not proven optimal)",
                comparison.rows.len(),
                comparison.flagged()
            );
            println!(
                "surface bound holds on {}",
                pct(comparison.g_bound_validity().map(|f| 100.0 * f))
            );
            println!("mean surface-bound gap {}", pct(comparison.mean_g_gap()));
            println!(
                "mean positive-sum gap {}",
                pct(comparison.mean_possum_gap())
            );
            if let Some(path) = model {
                write(&path, &fitted.to_json())?;
            }
            if let Some(path) = out {
                write(&path, &comparison.to_csv()?)?;
            }
            Ok(())
        }
    }
}

impl GeneratorSource {
    fn load(&self) -> Result<ScenarioGenerators> {
        match (&self.r#gen, &self.input, self.perturb) {
            (Some(path), None, None) => Ok(ScenarioGenerators::from_json(&read(path)?)?),
            (None, Some(path), Some(fraction)) => {
                Ok(perturbed_generators(&load_instance(path)?, fraction)?)
            }
            _ => Err(Error::Input("give either --gen or both --in and --perturb".into()).into()),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_instance(path: &Path) -> Result<QuboInstance> {
    parse_instance(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::State(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Serialize)]
struct SolveReport<'a> {
    bits: String,
    value: f64,
    status: SolveStatus,
    nodes_or_iterations: u64,
    incumbent_trace: &'a [f64],
}

fn cmd_solve(input: &Path, out: Option<&Path>, solver: &SolverArgs) -> Result<()> {
    let instance = load_instance(input)?;
    let outcome = solve(&instance, &solver.config()?);
    println!(
        "value={} bits={} status={}",
        outcome.solution.value,
        outcome.solution.bitstring(),
        outcome.status
    );
    if let Some(path) = out {
        let report = SolveReport {
            bits: outcome.solution.bitstring(),
            value: outcome.solution.value,
            status: outcome.status,
            nodes_or_iterations: outcome.nodes_or_iterations,
            incumbent_trace: &outcome.incumbent_trace,
        };
        write(path, &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PreprocessReport<'a> {
    constant: f64,
    rounds: usize,
    fixed: &'a [ubqp_core::preprocess::FixedVariable],
    index_map: &'a [usize],
    sensitivity: &'a [ubqp_core::preprocess::SensitivityRecord],
}

fn cmd_preprocess(
    input: &Path,
    tolerance: Option<f64>,
    out: Option<&Path>,
    reduced: Option<&Path>,
) -> Result<()> {
    let instance = load_instance(input)?;
    let report = fix_variables(&instance);
    for f in &report.assignments {
        println!("fix x{}={} delta={}", f.index, f.bit, f.delta);
    }
    println!(
        "fixed {} of {} variables in {} rounds, constant={}",
        report.assignments.len(),
        instance.n(),
        report.rounds,
        report.constant
    );
    let sensitivity = sensitivity_report(&instance, tolerance.unwrap_or(0.0))?;
    if tolerance.is_some() {
        for r in sensitivity.near() {
            println!("near x{} delta={}", r.index, r.delta);
        }
    }
    if let Some(path) = out {
        let json = PreprocessReport {
            constant: report.constant,
            rounds: report.rounds,
            fixed: &report.assignments,
            index_map: &report.index_map,
            sensitivity: &sensitivity.records,
        };
        write(path, &serde_json::to_string_pretty(&json)?)?;
    }
    if let Some(path) = reduced {
        write(path, &write_instance(&report.reduced))?;
    }
    Ok(())
}

fn cmd_design(source: &GeneratorSource, out: Option<&Path>) -> Result<()> {
    let gen = source.load()?;
    let diff = differing_elements(&gen);
    if diff.is_empty() {
        println!("warning: generators agree everywhere; the only scenario is the common matrix");
        println!("k=1 d=0");
        return Ok(());
    }
    let design = build_design(run_count(diff.d()), diff.d())?;
    println!("k={} d={}", design.k(), design.d());
    if let Some(path) = out {
        write(path, &design.to_csv(&diff)?)?;
    }
    Ok(())
}

fn analyze(gen: &ScenarioGenerators, config: &SolverConfig, jobs: usize) -> Result<RobustAnalysis> {
    let analysis = run_robust_analysis(gen, config, jobs)?;
    if analysis.design.is_none() {
        println!("warning: generators agree everywhere; analyzing the single common scenario");
    }
    Ok(analysis)
}

fn attach_average_reference(analysis: &mut RobustAnalysis, config: &SolverConfig) -> Result<()> {
    let outcome = solve_exact(&average_instance(&analysis.generators), config);
    if outcome.status != SolveStatus::ProvenOptimal {
        println!(
            "warning: reference solution is {}, not proven optimal",
            outcome.status
        );
    }
    analysis.attach_reference(&outcome.solution.bits)?;
    Ok(())
}

fn print_pool(analysis: &RobustAnalysis) {
    let report = &analysis.report;
    println!("k={} d={}", report.k, analysis.diff.d());
    let width = report.pool.first().map_or(8, |e| e.bits.len().max(8));
    println!(
        "{:<width$}  {:>9}  {:>12}",
        "solution", "frequency", "mean value"
    );
    let mut pool: Vec<_> = report.pool.iter().collect();
    pool.sort_by(|x, y| y.frequency.cmp(&x.frequency).then(x.bits.cmp(&y.bits)));
    for entry in pool {
        println!(
            "{:<width$}  {:>9}  {:>12}",
            entry.bits, entry.frequency, entry.mean_value
        );
    }
    println!("most robust {}", report.most_robust);
    println!(
        "proven optimal in {}% of scenarios",
        100.0 * report.exactness
    );
    if let Some(c) = &report.coverage {
        println!(
            "reference {} is optimal in {}% of scenarios",
            c.reference_bits, c.percent
        );
    }
}

fn fit_from_csv(gen: &ScenarioGenerators, path: &Path) -> Result<SurfaceModel> {
    let results =
        scenarios_from_csv(&read(path)?).with_context(|| format!("in {}", path.display()))?;
    let optima: Vec<f64> = results.iter().map(|r| r.value).collect();
    let diff = differing_elements(gen);
    if diff.is_empty() {
        if optima.len() != 1 {
            return Err(Error::Input(format!(
                "expected 1 scenario for d = 0, found {}",
                optima.len()
            ))
            .into());
        }
        return Ok(SurfaceModel::constant(optima[0]));
    }
    let k = run_count(diff.d());
    if optima.len() != k {
        return Err(Error::Input(format!(
            "expected {k} scenarios for d = {}, found {}",
            diff.d(),
            optima.len()
        ))
        .into());
    }
    Ok(fit_model(&build_design(k, diff.d())?, &diff, &optima)?)
}

fn print_model(model: &SurfaceModel) {
    println!(
        "intercept={} standard_error={} dof={} factors={}",
        model.intercept,
        model.standard_error,
        model.dof,
        model.d()
    );
}
