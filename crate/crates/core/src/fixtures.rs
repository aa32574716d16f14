//! Reference instances used by the tests, benchmarks and the CLI examples.

use crate::design::ScenarioGenerators;
use crate::instance::QuboInstance;

/// Five-variable instance whose optimum is 288 at `01011`; variable 3 is
/// diagonally dominant with slack 8.
pub fn five_variable_example() -> QuboInstance {
    QuboInstance::from_dense(&[
        vec![50.0, -75.0, 50.0, -15.0, 0.0],
        vec![-75.0, 100.0, 0.0, -5.0, 0.0],
        vec![50.0, 0.0, 100.0, -25.0, -120.0],
        vec![-15.0, -5.0, -25.0, 100.0, -1.0],
        vec![0.0, 0.0, -120.0, -1.0, 100.0],
    ])
    .expect("fixture matrix is symmetric")
}

/// Varying coefficients of the nine-decision product-transition example as
/// `(i, j, strategic, tactical)`.
pub const PRODUCT_TRANSITION_LEVELS: [(usize, usize, f64, f64); 23] = [
    (0, 0, -5.0, 2.0),
    (1, 1, 2.0, 2.0),
    (2, 2, -3.0, 6.0),
    (3, 3, 5.0, 2.0),
    (4, 4, -1.0, 1.0),
    (5, 5, 2.0, 0.0),
    (6, 6, 2.0, -2.0),
    (7, 7, 2.0, -2.0),
    (8, 8, 5.0, -4.0),
    (0, 4, 1.0, 3.0),
    (0, 6, 5.0, -3.0),
    (0, 7, 3.0, -3.0),
    (0, 8, 0.0, -5.0),
    (1, 5, 6.0, -1.0),
    (1, 6, 3.0, 0.0),
    (1, 7, 3.0, 0.0),
    (2, 5, 1.0, 3.0),
    (3, 5, 7.0, 1.0),
    (3, 6, 0.0, -3.0),
    (3, 7, 1.0, -1.0),
    (3, 8, 6.0, -7.0),
    (5, 8, 9.0, -5.0),
    (6, 7, 7.0, 3.0),
];

/// Mutually exclusive product decisions (enhance, phase out, discontinue,
/// replace).
pub const EXCLUSIVE_DECISIONS: [usize; 4] = [0, 1, 2, 3];

/// Penalty placed on every pair of [`EXCLUSIVE_DECISIONS`].
pub const EXCLUSION_PENALTY: f64 = -100.0;

/// Scenario generators for the product-transition example: the varying
/// levels of [`PRODUCT_TRANSITION_LEVELS`] plus a fixed
/// [`EXCLUSION_PENALTY`] between every pair of exclusive decisions.
///
/// The placement of the penalties is a reconstruction; only the varying
/// levels are known.
pub fn product_transition_generators() -> ScenarioGenerators {
    let mut entries: Vec<(usize, usize, f64, f64)> = PRODUCT_TRANSITION_LEVELS.to_vec();
    for (k, &a) in EXCLUSIVE_DECISIONS.iter().enumerate() {
        for &b in &EXCLUSIVE_DECISIONS[k + 1..] {
            entries.push((a, b, EXCLUSION_PENALTY, EXCLUSION_PENALTY));
        }
    }
    ScenarioGenerators::new(9, entries).expect("fixture positions are unique")
}
