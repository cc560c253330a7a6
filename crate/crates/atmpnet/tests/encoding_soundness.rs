//! The linearized 0-1 program against the enumeration oracle: feasible-set
//! equality, objective agreement, decode round-trips, and the exact
//! difference between the two model variants.

use atmpnet::generate::{generate, GenParams, Geometry};
use atmpnet::instance::Instance;
use atmpnet::milp::{assignment_from_solution, decode, encode};
use atmpnet::oracle;
use atmpnet::{ModelVariant, ObjectiveVector, Scalarization, Solution};

const OBJECTIVE_TOLERANCE: f64 = 1e-6;

fn gen_instance(n_orders: usize, n_locations: usize, n_modes: usize, seed: u64) -> Instance {
    generate(&GenParams { n_orders, n_locations, n_modes, seed, geometry: Geometry::UnitSquare })
        .expect("counts are nonzero")
}

fn suite_sizes(seed: u64) -> (usize, usize, usize) {
    (1 + (seed as usize % 3), 1 + ((seed as usize / 3) % 3), 1 + (seed as usize % 2))
}

fn oracle_space(
    instance: &Instance,
    variant: ModelVariant,
) -> Vec<(Solution, ObjectiveVector)> {
    let mut all = Vec::new();
    oracle::enumerate_all(instance, variant, |sol, vec| all.push((sol.clone(), *vec)))
        .expect("suite instances are tiny");
    all
}

#[test]
fn every_oracle_solution_satisfies_the_encoding_and_objectives_agree() {
    let scal = Scalarization::weighted(1.0, 1.0, -150.0);
    for seed in 0..50 {
        let (ni, nj, nk) = suite_sizes(seed);
        let inst = gen_instance(ni, nj, nk, seed);
        for variant in [ModelVariant::Canonical, ModelVariant::Strict] {
            let lp = encode(&inst, &scal, variant).expect("weights are valid");
            let mut best_oracle = f64::INFINITY;
            let mut best_lp = f64::INFINITY;
            for (sol, vec) in oracle_space(&inst, variant) {
                let assignment = assignment_from_solution(&inst, &sol);
                assert!(
                    lp.satisfied_by(&assignment, OBJECTIVE_TOLERANCE),
                    "seed {seed}, {variant:?}: oracle solution rejected by the encoding"
                );
                let lp_value = lp.objective_value(&assignment);
                let direct = scal.apply(&vec);
                assert!(
                    (lp_value - direct).abs() <= OBJECTIVE_TOLERANCE,
                    "seed {seed}, {variant:?}: objective {lp_value} vs {direct}"
                );
                assert_eq!(
                    decode(&inst, &assignment).expect("oracle solutions decode"),
                    sol,
                    "seed {seed}, {variant:?}"
                );
                best_oracle = best_oracle.min(direct);
                best_lp = best_lp.min(lp_value);
            }
            assert!(
                (best_oracle - best_lp).abs() <= OBJECTIVE_TOLERANCE,
                "seed {seed}, {variant:?}: optima {best_oracle} vs {best_lp}"
            );
        }
    }
}

/// Every 0-1 decision vector, tried as a solution: the encoding must accept
/// exactly the oracle-feasible ones. Decision bits determine the auxiliaries,
/// so this sweeps the encoding's whole solution space.
#[test]
fn encoding_feasible_set_equals_the_oracle_set_exhaustively() {
    let scal = Scalarization::weighted(1.0, 1.0, -150.0);
    for (ni, nj, nk, seed) in [(1, 1, 1, 9u64), (1, 2, 1, 10), (2, 2, 1, 11), (2, 2, 2, 12)] {
        let inst = gen_instance(ni, nj, nk, seed);
        for variant in [ModelVariant::Canonical, ModelVariant::Strict] {
            let lp = encode(&inst, &scal, variant).expect("weights are valid");
            let feasible: Vec<Solution> =
                oracle_space(&inst, variant).into_iter().map(|(s, _)| s).collect();
            let n_bits = 2 * nj + ni + 2 * ni * nj + nj * nk;
            let mut checked = 0u64;
            for bits in 0u64..(1 << n_bits) {
                let mut next = 0;
                let mut take = || {
                    let b = bits >> next & 1 == 1;
                    next += 1;
                    b
                };
                let sol = Solution {
                    y_m: (0..nj).map(|_| take()).collect(),
                    y_c: (0..nj).map(|_| take()).collect(),
                    z: (0..ni).map(|_| take()).collect(),
                    x_m: (0..ni).map(|_| (0..nj).map(|_| take()).collect()).collect(),
                    x_c: (0..ni).map(|_| (0..nj).map(|_| take()).collect()).collect(),
                    m: (0..nj).map(|_| (0..nk).map(|_| take()).collect()).collect(),
                };
                let assignment = assignment_from_solution(&inst, &sol);
                let accepted = lp.satisfied_by(&assignment, OBJECTIVE_TOLERANCE);
                let expected = feasible.contains(&sol);
                assert_eq!(
                    accepted, expected,
                    "{ni}x{nj}x{nk} seed {seed}, {variant:?}: encoding and oracle disagree on {sol:?}"
                );
                checked += 1;
            }
            assert_eq!(checked, 1 << n_bits);
        }
    }
}

#[test]
fn variants_differ_exactly_on_direct_frozen_solutions() {
    let scal = Scalarization::weighted(1.0, 1.0, -150.0);
    for seed in 0..50 {
        let (ni, nj, nk) = suite_sizes(seed);
        let inst = gen_instance(ni, nj, nk, seed);
        let canonical_lp = encode(&inst, &scal, ModelVariant::Canonical).expect("valid");
        let strict_lp = encode(&inst, &scal, ModelVariant::Strict).expect("valid");

        for (sol, _) in oracle_space(&inst, ModelVariant::Canonical) {
            let assignment = assignment_from_solution(&inst, &sol);
            assert!(
                strict_lp.satisfied_by(&assignment, OBJECTIVE_TOLERANCE),
                "seed {seed}: canonical solution rejected by the strict encoding"
            );
        }
        for (sol, _) in oracle_space(&inst, ModelVariant::Strict) {
            let assignment = assignment_from_solution(&inst, &sol);
            if canonical_lp.satisfied_by(&assignment, OBJECTIVE_TOLERANCE) {
                continue;
            }
            let has_direct_frozen = (0..ni).any(|i| sol.z[i] && sol.x_c[i].iter().all(|&b| !b));
            assert!(
                has_direct_frozen,
                "seed {seed}: strict-only solution without a zero-cryo frozen order: {sol:?}"
            );
        }
    }
}

#[test]
fn epsilon_encodings_accept_exactly_the_in_bounds_solutions() {
    for seed in 0..25 {
        let (ni, nj, nk) = suite_sizes(seed);
        let inst = gen_instance(ni, nj, nk, seed);
        let space = oracle_space(&inst, ModelVariant::Canonical);
        let max_cost = space.iter().map(|(_, v)| v.cost).fold(0.0f64, f64::max);
        let scal = Scalarization::epsilon(
            atmpnet::Objective::WaitingTime,
            None,
            Some(max_cost * 0.5),
            Some(1),
        );
        let lp = encode(&inst, &scal, ModelVariant::Canonical).expect("bounds are valid");
        for (sol, vec) in &space {
            let assignment = assignment_from_solution(&inst, sol);
            let accepted = lp.satisfied_by(&assignment, OBJECTIVE_TOLERANCE);
            let in_bounds = scal.satisfies_bounds(vec);
            assert_eq!(accepted, in_bounds, "seed {seed}: bounds disagree on {vec:?}");
            if accepted {
                let lp_value = lp.objective_value(&assignment);
                assert!(
                    (lp_value - vec.waiting_time_hours).abs() <= OBJECTIVE_TOLERANCE,
                    "seed {seed}: epsilon objective {lp_value} vs W {}",
                    vec.waiting_time_hours
                );
            }
        }
    }
}
