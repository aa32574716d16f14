//! Fixed workloads shared by the benchmarks.

use ubqp_core::design::perturbed_generators;
use ubqp_core::{QuboInstance, ScenarioGenerators};

/// Seeded random instance with integer coefficients in `[-100, 100]`.
pub fn instance(n: usize, density: f64, seed: u64) -> QuboInstance {
    QuboInstance::random(n, density, 100, seed)
}

/// Generators at `+/- fraction` around a seeded random instance.
pub fn generators(n: usize, density: f64, fraction: f64, seed: u64) -> ScenarioGenerators {
    perturbed_generators(&instance(n, density, seed), fraction).expect("fraction is positive")
}
