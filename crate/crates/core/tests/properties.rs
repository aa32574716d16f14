mod common;

use common::{brute_force, quadratic_form, symmetric};
use proptest::prelude::*;
use ubqp_core::design::{
    average_instance, instantiate_scenario, perturbed_generators, random_scenario,
};
use ubqp_core::solver::{branch_and_bound, one_flip_gain};
use ubqp_core::surface::{least_squares, orthogonal_fit};
use ubqp_core::{
    build_design, differing_elements, estimate, fit_model, run_count, DifferenceSet, QuboInstance,
    ScenarioGenerators, SurfaceModel,
};

fn instance(max_n: usize) -> impl Strategy<Value = QuboInstance> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(
            prop_oneof![2 => Just(0i32), 3 => -50i32..=50],
            n * (n + 1) / 2,
        )
        .prop_map(move |vals| {
            let mut it = vals.into_iter();
            let mut triples = Vec::new();
            for i in 0..n {
                for j in i..n {
                    triples.push((i, j, f64::from(it.next().unwrap())));
                }
            }
            QuboInstance::new(n, triples).unwrap()
        })
    })
}

fn with_bits(max_n: usize) -> impl Strategy<Value = (QuboInstance, Vec<u8>)> {
    instance(max_n).prop_flat_map(|q| {
        let n = q.n();
        (Just(q), prop::collection::vec(0u8..=1, n))
    })
}

proptest! {
    #[test]
    fn evaluate_matches_symmetric_form((q, x) in with_bits(14)) {
        prop_assert_eq!(q.evaluate(&x).unwrap(), quadratic_form(&symmetric(&q), &x));
    }

    #[test]
    fn positive_sum_bound_dominates((q, x) in with_bits(14)) {
        prop_assert!(q.positive_sum_bound() >= q.evaluate(&x).unwrap());
    }

    #[test]
    fn dense_and_sparse_agree((q, x) in with_bits(12)) {
        let dense = QuboInstance::from_dense(&q.to_dense()).unwrap();
        prop_assert_eq!(&dense, &q);
        prop_assert_eq!(dense.evaluate(&x).unwrap(), q.evaluate(&x).unwrap());
    }

    #[test]
    fn relabelling_preserves_values((q, x) in with_bits(10), shift in 0usize..10) {
        let n = q.n();
        let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let relabelled =
            QuboInstance::new(n, q.entries().iter().map(|c| (perm[c.i], perm[c.j], c.value))).unwrap();
        let mut y = vec![0u8; n];
        for i in 0..n {
            y[perm[i]] = x[i];
        }
        prop_assert_eq!(relabelled.evaluate(&y).unwrap(), q.evaluate(&x).unwrap());
    }

    #[test]
    fn flip_gain_is_value_difference((q, x) in with_bits(14), pick in 0usize..14) {
        let i = pick % q.n();
        let mut y = x.clone();
        y[i] ^= 1;
        let diff = q.evaluate(&y).unwrap() - q.evaluate(&x).unwrap();
        prop_assert_eq!(one_flip_gain(&q, &x, i).unwrap(), diff);
    }

    #[test]
    fn branch_and_bound_is_exact_and_monotone(q in instance(12)) {
        let out = branch_and_bound(&q, None, None);
        prop_assert_eq!(out.solution.value, brute_force(&q).0);
        prop_assert!(out.incumbent_trace.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(out.incumbent_trace.last().copied(), Some(out.solution.value));
    }

    #[test]
    fn designs_are_balanced_and_orthogonal(d in 1usize..=70) {
        let k = run_count(d);
        prop_assert!(k.is_power_of_two() && k >= 2 * d && k >= 4);
        prop_assert!(k == 4 || k / 2 < 2 * d);
        let design = build_design(k, d).unwrap();
        for m in 0..d {
            prop_assert_eq!(design.column(m).map(i32::from).sum::<i32>(), 0);
            for l in m + 1..d {
                let dot: i32 = design.rows().map(|r| i32::from(r[m]) * i32::from(r[l])).sum();
                prop_assert_eq!(dot, 0);
            }
        }
    }

    #[test]
    fn regression_recovers_linear_response(
        d in 1usize..=24,
        beta in prop::collection::vec(-1000.0f64..1000.0, 25),
    ) {
        let design = build_design(run_count(d), d).unwrap();
        let optima: Vec<f64> = design
            .rows()
            .map(|r| beta[0] + r.iter().zip(&beta[1..]).map(|(&z, b)| f64::from(z) * b).sum::<f64>())
            .collect();
        let diff = DifferenceSet { positions: (0..d).map(|m| (0, m)).collect() };
        let model = fit_model(&design, &diff, &optima).unwrap();
        prop_assert!((model.intercept - beta[0]).abs() <= 1e-9);
        for m in 0..d {
            prop_assert!((model.coefficients[m] - beta[m + 1]).abs() <= 1e-9);
        }
        prop_assert!(model.standard_error <= 1e-9);
    }

    #[test]
    fn shortcut_agrees_with_general_solve(
        d in 1usize..=12,
        noise in prop::collection::vec(-50.0f64..50.0, 32),
    ) {
        let design = build_design(run_count(d), d).unwrap();
        let runs: Vec<Vec<f64>> = design.rows().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect();
        let optima = &noise[..design.k()];
        let (b0, b) = orthogonal_fit(&runs, optima).unwrap();
        let (c0, c) = least_squares(&runs, optima).unwrap();
        prop_assert!((b0 - c0).abs() <= 1e-9);
        for (x, y) in b.iter().zip(&c) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn estimate_is_affine_in_the_coding(
        coefficients in prop::collection::vec(-10.0f64..10.0, 1..8),
        intercept in -100.0f64..100.0,
        t in 0.0f64..1.0,
    ) {
        let d = coefficients.len();
        let model = SurfaceModel {
            intercept,
            coefficients: coefficients.clone(),
            standard_error: 0.0,
            dof: 1,
            diff: DifferenceSet { positions: (0..d).map(|m| (m, m)).collect() },
        };
        let up: Vec<f64> = coefficients.iter().map(|b| if *b >= 0.0 { t } else { -t }).collect();
        let down: Vec<f64> = up.iter().map(|v| -v).collect();
        let hi = estimate(&model, &up).unwrap();
        let lo = estimate(&model, &down).unwrap();
        prop_assert!((hi + lo - 2.0 * intercept).abs() <= 1e-9);
        prop_assert!(hi >= intercept - 1e-12 && lo <= intercept + 1e-12);
    }

    #[test]
    fn random_scenarios_lie_between_generators(seed in any::<u64>()) {
        let gen = ScenarioGenerators::new(3, [(0, 0, 4.0, -2.0), (0, 2, 1.0, 3.0), (1, 1, 5.0, 5.0)]).unwrap();
        let s = random_scenario(&gen, seed);
        prop_assert!((-2.0..=4.0).contains(&s.get(0, 0)));
        prop_assert!((1.0..=3.0).contains(&s.get(0, 2)));
        prop_assert_eq!(s.get(1, 1), 5.0);
        prop_assert_eq!(average_instance(&gen).get(0, 0), 1.0);
    }

    #[test]
    fn mirrored_runs_sum_to_both_generators(q in instance(8), fraction in 0.01f64..0.5, row_seed in any::<u64>()) {
        prop_assume!(q.nnz() > 0);
        let gen = perturbed_generators(&q, fraction).unwrap();
        let diff = differing_elements(&gen);
        let row: Vec<i8> = (0..diff.d()).map(|m| if (row_seed >> (m % 64)) & 1 == 1 { 1 } else { -1 }).collect();
        let mirror: Vec<i8> = row.iter().map(|v| -v).collect();
        let a = instantiate_scenario(&gen, &diff, &row).unwrap();
        let b = instantiate_scenario(&gen, &diff, &mirror).unwrap();
        let (upper, lower) = (gen.upper(), gen.lower());
        for &(i, j) in &diff.positions {
            prop_assert_eq!(a.get(i, j) + b.get(i, j), upper.get(i, j) + lower.get(i, j));
        }
    }
}
