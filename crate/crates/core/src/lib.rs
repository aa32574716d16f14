//! Robust optimization of unconstrained binary quadratic programs.
//!
//! An instance is `max x^T Q x` over `x in {0,1}^n` with `Q` stored as an
//! upper triangle. When the coefficients are only known to lie between two
//! levels, [`run_robust_analysis`] solves every scenario of a two-level
//! orthogonal design, pools the optimal solutions, and the response surface
//! in [`surface`] estimates the optimum of any scenario in the box.

pub mod design;
pub mod error;
pub mod fixtures;
pub mod instance;
pub mod io;
pub mod pipeline;
pub mod preprocess;
pub mod solver;
pub mod surface;

pub use design::{
    build_design, differing_elements, instantiate_scenario, run_count, DesignMatrix, DifferenceSet,
    GeneratorEntry, ScenarioGenerators,
};
pub use error::{Error, Result};
pub use instance::{bitstring, parse_bitstring, BinarySolution, Coefficient, QuboInstance};
pub use io::{parse_instance, read_instance, write_instance};
pub use pipeline::{
    run_robust_analysis, PoolEntry, RobustAnalysis, RobustnessReport, ScenarioResult,
};
pub use preprocess::{fix_variables, sensitivity_report, FixReport, Fixable, Guarantee};
pub use solver::{solve, solve_exact, SolveMode, SolveOutcome, SolveStatus, SolverConfig};
pub use surface::{
    compare_bounds, estimate, fit_model, upper_bound, BoundComparison, SurfaceModel,
};
