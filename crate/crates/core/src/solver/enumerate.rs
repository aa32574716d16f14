use std::time::{Duration, Instant};

use super::{flip_sign, SolveOutcome, SolveStatus};
use crate::instance::{BinarySolution, QuboInstance};

const CLOCK_CHECK_MASK: u64 = (1 << 16) - 1;

/// Visits all `2^n` assignments in reflected Gray-code order, flipping one
/// bit per step and updating the local fields of its neighbours.
///
/// Among equal optima the first one met in Gray-code order is returned,
/// starting from the all-zero assignment.
///
/// # Panics
///
/// Panics if `n >= 64`.
pub fn enumerate(instance: &QuboInstance, time_budget: Option<Duration>) -> SolveOutcome {
    let start = Instant::now();
    let n = instance.n();
    assert!(n < 64, "enumeration is limited to fewer than 64 variables");

    let mut bits = vec![0u8; n];
    let mut field: Vec<f64> = (0..n).map(|i| instance.diagonal(i)).collect();
    let mut value = 0.0;
    let mut best = 0.0;
    let mut best_bits = bits.clone();
    let mut trace = vec![0.0];
    let mut status = SolveStatus::ProvenOptimal;

    let states = 1u64 << n;
    let mut visited = 1;
    for step in 1..states {
        if step & CLOCK_CHECK_MASK == 0 {
            if let Some(limit) = time_budget {
                if start.elapsed() >= limit {
                    status = SolveStatus::BudgetExhausted;
                    break;
                }
            }
        }
        let i = step.trailing_zeros() as usize;
        value += flip_sign(bits[i]) * field[i];
        bits[i] ^= 1;
        let delta = if bits[i] == 1 { 2.0 } else { -2.0 };
        for &(j, c) in instance.row(i) {
            field[j] += delta * c;
        }
        visited += 1;
        if value > best {
            best = value;
            best_bits.copy_from_slice(&bits);
            trace.push(best);
        }
    }

    let solution = BinarySolution::evaluated(instance, best_bits);
    SolveOutcome {
        solution,
        status,
        nodes_or_iterations: visited,
        elapsed: start.elapsed(),
        incumbent_trace: trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::five_variable_example;

    #[test]
    fn visits_every_state() {
        let out = enumerate(&five_variable_example(), None);
        assert_eq!(out.nodes_or_iterations, 32);
        assert_eq!(out.solution.value, 288.0);
    }

    #[test]
    fn first_optimum_in_gray_order_wins_ties() {
        // x0 and x1 each worth 1 alone, 0 together: optima 10 and 01.
        let q = QuboInstance::new(2, [(0, 0, 1.0), (1, 1, 1.0), (0, 1, -1.0)]).unwrap();
        let out = enumerate(&q, None);
        assert_eq!(out.solution.bits, vec![1, 0]);
    }

    #[test]
    fn all_negative_returns_zero_vector() {
        let q = QuboInstance::new(3, [(0, 0, -1.0), (1, 1, -1.0), (2, 2, -4.0)]).unwrap();
        let out = enumerate(&q, None);
        assert_eq!(out.solution.bits, vec![0, 0, 0]);
        assert_eq!(out.incumbent_trace, vec![0.0]);
    }
}
