use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{flip_sign, local_field, SolveOutcome, SolveStatus, SolverConfig};
use crate::instance::{BinarySolution, QuboInstance};
use crate::preprocess::{classify, Fixable};

/// Multi-start tabu search over 1-flip moves.
///
/// Every restart draws a start point from the seeded generator: variables
/// the dominance rules certify start at their certified value, the rest are
/// uniform. Each iteration applies the best non-tabu flip, or a tabu flip
/// that beats the best solution found so far. A flipped variable stays tabu
/// for `tabu_tenure` iterations, capped at `(n - 1) / 2` so small instances
/// keep a move available. A restart ends after `10 n` consecutive moves
/// without improving its own best.
pub fn solve_heuristic(instance: &QuboInstance, config: &SolverConfig) -> SolveOutcome {
    let start = Instant::now();
    let n = instance.n();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let certified: Vec<Fixable> = (0..n)
        .map(|i| classify(instance, i).expect("index in range").0)
        .collect();
    let tenure = config.tabu_tenure.min(n.saturating_sub(1) / 2) as u64;
    let stall_limit = 10 * n;

    let mut best_bits = vec![0u8; n];
    let mut best = 0.0;
    let mut trace = vec![best];
    let mut moves: u64 = 0;

    'restarts: for _ in 0..config.restarts.max(1) {
        if n == 0 {
            break;
        }
        let mut bits: Vec<u8> = certified
            .iter()
            .map(|f| match f {
                Fixable::One => 1,
                Fixable::Zero => 0,
                Fixable::None => u8::from(rng.random_bool(0.5)),
            })
            .collect();
        let mut field: Vec<f64> = (0..n).map(|i| local_field(instance, &bits, i)).collect();
        let mut value = instance.value_unchecked(&bits);
        if value > best {
            best = value;
            best_bits.copy_from_slice(&bits);
            trace.push(best);
        }

        let mut tabu_until = vec![0u64; n];
        let mut restart_best = value;
        let mut stall = 0;
        let mut iteration: u64 = 0;
        while stall < stall_limit {
            iteration += 1;
            if iteration & 1023 == 0 {
                if let Some(limit) = config.time_budget {
                    if start.elapsed() >= limit {
                        break 'restarts;
                    }
                }
            }
            let mut chosen: Option<(usize, f64)> = None;
            for i in 0..n {
                let gain = flip_sign(bits[i]) * field[i];
                let allowed = tabu_until[i] <= iteration || value + gain > best;
                if allowed && chosen.is_none_or(|(_, g)| gain > g) {
                    chosen = Some((i, gain));
                }
            }
            let Some((i, gain)) = chosen else { break };

            value += gain;
            bits[i] ^= 1;
            let delta = if bits[i] == 1 { 2.0 } else { -2.0 };
            for &(j, c) in instance.row(i) {
                field[j] += delta * c;
            }
            tabu_until[i] = iteration + tenure + 1;
            moves += 1;

            if value > restart_best {
                restart_best = value;
                stall = 0;
                if value > best {
                    best = value;
                    best_bits.copy_from_slice(&bits);
                    trace.push(best);
                }
            } else {
                stall += 1;
            }
        }
    }

    SolveOutcome {
        solution: BinarySolution::evaluated(instance, best_bits),
        status: SolveStatus::Heuristic,
        nodes_or_iterations: moves,
        elapsed: start.elapsed(),
        incumbent_trace: trace,
    }
}
