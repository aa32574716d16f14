//! Exact and heuristic maximization of `x^t Q x`.
//!
//! * [`solve_exact`]: Gray-code enumeration up to `enum_threshold`
//!   variables, otherwise variable fixing followed by depth-first
//!   branch-and-bound.
//! * [`solve_heuristic`]: multi-start tabu search over 1-flip moves.
//! * [`solve`]: dispatches on [`SolveMode`].

mod branch;
mod enumerate;
mod tabu;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::instance::{BinarySolution, QuboInstance};

pub use branch::branch_and_bound;
pub use enumerate::enumerate;
pub use tabu::solve_heuristic;

/// Node budget applied by [`SolveMode::Auto`] when none is configured.
pub const DEFAULT_AUTO_NODE_BUDGET: u64 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Auto,
    Exact,
    Heuristic,
}

impl FromStr for SolveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "exact" => Ok(Self::Exact),
            "heuristic" => Ok(Self::Heuristic),
            other => input(format!("unknown solve mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: SolveMode,
    /// Instances with at most this many variables are enumerated.
    pub enum_threshold: usize,
    /// Wall-clock cutoff. Results stop being reproducible once it binds.
    pub time_budget: Option<Duration>,
    /// Branch-and-bound node cutoff; deterministic.
    pub node_budget: Option<u64>,
    pub restarts: usize,
    pub tabu_tenure: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: SolveMode::Auto,
            enum_threshold: 22,
            time_budget: None,
            node_budget: None,
            restarts: 10,
            tabu_tenure: 10,
            seed: 0x5eed,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.enum_threshold < 1 {
            return input("enum_threshold must be at least 1");
        }
        if self.restarts < 1 {
            return input("restarts must be at least 1");
        }
        Ok(())
    }

    /// The same configuration with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    ProvenOptimal,
    Heuristic,
    BudgetExhausted,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ProvenOptimal => "proven_optimal",
            Self::Heuristic => "heuristic",
            Self::BudgetExhausted => "budget_exhausted",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolveStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proven_optimal" => Ok(Self::ProvenOptimal),
            "heuristic" => Ok(Self::Heuristic),
            "budget_exhausted" => Ok(Self::BudgetExhausted),
            other => input(format!("unknown solve status {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub solution: BinarySolution,
    pub status: SolveStatus,
    /// Enumerated states, search nodes, or tabu moves, depending on the path.
    pub nodes_or_iterations: u64,
    pub elapsed: Duration,
    /// Objective of every new incumbent, in the order found.
    pub incumbent_trace: Vec<f64>,
}

/// Change in objective from flipping bit `i`:
/// `(1 - 2 x_i) (c_ii + 2 sum_{j != i} c_ij x_j)`.
pub fn one_flip_gain(instance: &QuboInstance, bits: &[u8], i: usize) -> Result<f64> {
    instance.check_bits(bits)?;
    if i >= instance.n() {
        return input(format!(
            "variable {i} out of range for n = {}",
            instance.n()
        ));
    }
    Ok(flip_sign(bits[i]) * local_field(instance, bits, i))
}

/// `c_ii + 2 sum_j c_ij x_j`.
pub(crate) fn local_field(instance: &QuboInstance, bits: &[u8], i: usize) -> f64 {
    instance.diagonal(i)
        + 2.0
            * instance
                .row(i)
                .iter()
                .filter(|&&(j, _)| bits[j] == 1)
                .map(|&(_, c)| c)
                .sum::<f64>()
}

#[inline]
pub(crate) fn flip_sign(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Proves optimality by enumeration when `n <= enum_threshold`, otherwise
/// by branch-and-bound within the configured budgets.
pub fn solve_exact(instance: &QuboInstance, config: &SolverConfig) -> SolveOutcome {
    if instance.n() <= config.enum_threshold {
        enumerate(instance, config.time_budget)
    } else {
        branch_and_bound(instance, config.node_budget, config.time_budget)
    }
}

/// Dispatches on `config.mode`. In auto mode, instances too large to
/// enumerate get a budgeted branch-and-bound; if that does not close, tabu
/// search runs and the better of the two incumbents is returned.
pub fn solve(instance: &QuboInstance, config: &SolverConfig) -> SolveOutcome {
    match config.mode {
        SolveMode::Exact => solve_exact(instance, config),
        SolveMode::Heuristic => solve_heuristic(instance, config),
        SolveMode::Auto => {
            if instance.n() <= config.enum_threshold {
                return enumerate(instance, config.time_budget);
            }
            let start = Instant::now();
            let budget = config.node_budget.unwrap_or(DEFAULT_AUTO_NODE_BUDGET);
            let exact = branch_and_bound(instance, Some(budget), config.time_budget);
            if exact.status == SolveStatus::ProvenOptimal {
                return exact;
            }
            let heuristic = solve_heuristic(instance, config);
            let nodes = exact.nodes_or_iterations + heuristic.nodes_or_iterations;
            let mut best = if exact.solution.value > heuristic.solution.value {
                exact
            } else {
                heuristic
            };
            best.status = SolveStatus::Heuristic;
            best.nodes_or_iterations = nodes;
            best.elapsed = start.elapsed();
            best
        }
    }
}
