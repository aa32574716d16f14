use std::time::{Duration, Instant};

use super::{flip_sign, SolveOutcome, SolveStatus};
use crate::instance::{BinarySolution, QuboInstance};
use crate::preprocess::fix_variables;

const CLOCK_CHECK_MASK: u64 = (1 << 12) - 1;
const FREE: i8 = -1;

/// Variable fixing followed by depth-first branch-and-bound on the reduced
/// instance.
///
/// Each node is bounded by the positive-element bound of the free
/// subproblem, taken row by row: with `h_i` the diagonal folded with the
/// couplings to variables already set to 1 and `p_i` the sum of positive
/// couplings to free variables, the free part is at most
/// `sum_i max(0, h_i + p_i)`. Nodes whose bound does not exceed the
/// incumbent are pruned. A free variable the dominance rules force
/// (against the free neighbourhood) is assigned without branching;
/// otherwise the variable with the largest absolute slack is branched on,
/// lowest index first among ties.
pub fn branch_and_bound(
    instance: &QuboInstance,
    node_budget: Option<u64>,
    time_budget: Option<Duration>,
) -> SolveOutcome {
    let start = Instant::now();
    let fixing = fix_variables(instance);
    let reduced = &fixing.reduced;

    let mut search = Search::new(reduced, node_budget, time_budget, start);
    search.trace.push(fixing.constant + search.incumbent);
    search.run(fixing.constant);

    let bits = fixing
        .merge(&search.incumbent_bits)
        .expect("incumbent matches the reduced instance");
    let status = if search.aborted {
        SolveStatus::BudgetExhausted
    } else {
        SolveStatus::ProvenOptimal
    };
    SolveOutcome {
        solution: BinarySolution::evaluated(instance, bits),
        status,
        nodes_or_iterations: search.nodes,
        elapsed: start.elapsed(),
        incumbent_trace: search.trace,
    }
}

struct Search<'a> {
    q: &'a QuboInstance,
    assignment: Vec<i8>,
    /// Diagonal plus twice the couplings to variables assigned 1.
    folded: Vec<f64>,
    /// Positive / negative coupling sums over free neighbours.
    positive: Vec<f64>,
    negative: Vec<f64>,
    value: f64,
    incumbent: f64,
    incumbent_bits: Vec<u8>,
    trace: Vec<f64>,
    nodes: u64,
    node_budget: Option<u64>,
    time_budget: Option<Duration>,
    start: Instant,
    aborted: bool,
}

enum Choice {
    Forced(usize, u8),
    Branch(usize),
    Leaf,
}

impl<'a> Search<'a> {
    fn new(
        q: &'a QuboInstance,
        node_budget: Option<u64>,
        time_budget: Option<Duration>,
        start: Instant,
    ) -> Self {
        let n = q.n();
        let mut positive = vec![0.0; n];
        let mut negative = vec![0.0; n];
        for i in 0..n {
            for &(_, c) in q.row(i) {
                if c > 0.0 {
                    positive[i] += c;
                } else {
                    negative[i] += c;
                }
            }
        }
        let incumbent_bits = greedy_ascent(q);
        let incumbent = q.value_unchecked(&incumbent_bits);
        Self {
            q,
            assignment: vec![FREE; n],
            folded: (0..n).map(|i| q.diagonal(i)).collect(),
            positive,
            negative,
            value: 0.0,
            incumbent,
            incumbent_bits,
            trace: Vec::new(),
            nodes: 0,
            node_budget,
            time_budget,
            start,
            aborted: false,
        }
    }

    fn run(&mut self, constant: f64) {
        self.descend(constant);
    }

    fn out_of_budget(&self) -> bool {
        if self.node_budget.is_some_and(|limit| self.nodes > limit) {
            return true;
        }
        if self.nodes & CLOCK_CHECK_MASK == 0 {
            if let Some(limit) = self.time_budget {
                return self.start.elapsed() >= limit;
            }
        }
        false
    }

    /// Bound of the current node and the variable to assign next.
    fn inspect(&self) -> (f64, Choice) {
        let mut bound = self.value;
        let mut forced = None;
        let mut branch: Option<(usize, f64)> = None;
        for i in 0..self.q.n() {
            if self.assignment[i] != FREE {
                continue;
            }
            let h = self.folded[i];
            bound += (h + self.positive[i]).max(0.0);
            let slack = if h >= 0.0 {
                h + 2.0 * self.negative[i]
            } else {
                h + 2.0 * self.positive[i]
            };
            if forced.is_none() {
                if h > 0.0 && slack > 0.0 {
                    forced = Some((i, 1));
                } else if h < 0.0 && slack < 0.0 {
                    forced = Some((i, 0));
                }
            }
            if branch.is_none_or(|(_, best)| slack.abs() > best) {
                branch = Some((i, slack.abs()));
            }
        }
        let choice = match (forced, branch) {
            (Some((i, bit)), _) => Choice::Forced(i, bit),
            (None, Some((i, _))) => Choice::Branch(i),
            (None, None) => Choice::Leaf,
        };
        (bound, choice)
    }

    fn descend(&mut self, constant: f64) {
        self.nodes += 1;
        if self.out_of_budget() {
            self.aborted = true;
            return;
        }
        let (bound, choice) = self.inspect();
        match choice {
            Choice::Leaf => {
                if self.value > self.incumbent {
                    self.incumbent = self.value;
                    self.incumbent_bits = self.assignment.iter().map(|&b| b as u8).collect();
                    self.trace.push(constant + self.value);
                }
            }
            _ if bound <= self.incumbent => {}
            Choice::Forced(i, bit) => {
                self.assign(i, bit);
                self.descend(constant);
                self.unassign(i, bit);
            }
            Choice::Branch(i) => {
                let lean = self.folded[i] + self.positive[i] + self.negative[i];
                let first = u8::from(lean > 0.0);
                for bit in [first, 1 - first] {
                    self.assign(i, bit);
                    self.descend(constant);
                    self.unassign(i, bit);
                    if self.aborted {
                        return;
                    }
                }
            }
        }
    }

    fn assign(&mut self, i: usize, bit: u8) {
        self.assignment[i] = bit as i8;
        if bit == 1 {
            self.value += self.folded[i];
        }
        for &(j, c) in self.q.row(i) {
            if c > 0.0 {
                self.positive[j] -= c;
            } else {
                self.negative[j] -= c;
            }
            if bit == 1 {
                self.folded[j] += 2.0 * c;
            }
        }
    }

    fn unassign(&mut self, i: usize, bit: u8) {
        for &(j, c) in self.q.row(i) {
            if c > 0.0 {
                self.positive[j] += c;
            } else {
                self.negative[j] += c;
            }
            if bit == 1 {
                self.folded[j] -= 2.0 * c;
            }
        }
        if bit == 1 {
            self.value -= self.folded[i];
        }
        self.assignment[i] = FREE;
    }
}

/// Steepest-ascent 1-flip local search from the all-zero assignment.
fn greedy_ascent(q: &QuboInstance) -> Vec<u8> {
    let n = q.n();
    let mut bits = vec![0u8; n];
    let mut field: Vec<f64> = (0..n).map(|i| q.diagonal(i)).collect();
    loop {
        let best = (0..n)
            .map(|i| (i, flip_sign(bits[i]) * field[i]))
            .filter(|&(_, gain)| gain > 0.0)
            .fold(None, |acc: Option<(usize, f64)>, cur| match acc {
                Some(a) if a.1 >= cur.1 => Some(a),
                _ => Some(cur),
            });
        let Some((i, _)) = best else { break };
        bits[i] ^= 1;
        let delta = if bits[i] == 1 { 2.0 } else { -2.0 };
        for &(j, c) in q.row(i) {
            field[j] += delta * c;
        }
    }
    bits
}
