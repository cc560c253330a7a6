//! Property tests across module boundaries: dominance order laws, the
//! nondominated filter against a quadratic reference, serialization
//! round-trips over random shapes, and evaluator monotonicity laws.

use atmpnet::evaluator;
use atmpnet::exact::{self, Configuration, LocationState};
use atmpnet::generate::{generate, GenParams, Geometry};
use atmpnet::instance::{Instance, TravelMatrix};
use atmpnet::io;
use atmpnet::pareto::{nondominated_filter, FrontPoint};
use atmpnet::{ModelVariant, ObjectiveVector, Scalarization, Solution};
use proptest::prelude::*;

fn gen_instance(n_orders: usize, n_locations: usize, n_modes: usize, seed: u64) -> Instance {
    generate(&GenParams { n_orders, n_locations, n_modes, seed, geometry: Geometry::UnitSquare })
        .expect("counts are nonzero")
}

fn vector_strategy() -> impl Strategy<Value = ObjectiveVector> {
    (0.0f64..100.0, 0.0f64..100.0, 0usize..6).prop_map(|(w, c, v)| ObjectiveVector {
        waiting_time_hours: w,
        cost: c,
        coverage: v,
    })
}

/// A configuration drawn from the seed's bits: each location closed, cryo, or
/// manufacturing in a valid mode.
fn config_from_seed(instance: &Instance, seed: u64) -> Configuration {
    let nk = instance.n_modes();
    let states = (0..instance.n_locations())
        .map(|j| match (seed >> (2 * j)) % 4 {
            0 => LocationState::Closed,
            1 => LocationState::Cryo,
            r => LocationState::Manufacturing((r as usize + j) % nk),
        })
        .collect();
    Configuration { states }
}

/// Rebuilds an instance with one failure rate replaced.
fn with_failure_rate(instance: &Instance, i: usize, k: usize, rate: f64) -> Instance {
    let ni = instance.n_orders();
    let nj = instance.n_locations();
    let nk = instance.n_modes();
    let mut failure: Vec<Vec<f64>> =
        (0..ni).map(|a| (0..nk).map(|b| instance.failure_rate(a, b)).collect()).collect();
    failure[i][k] = rate;
    let fresh: Vec<Vec<Vec<f64>>> = (0..ni)
        .map(|a| (0..nj).map(|b| (0..nk).map(|c| instance.op_cost_fresh(a, b, c)).collect()).collect())
        .collect();
    let frozen: Vec<Vec<Vec<f64>>> = (0..ni)
        .map(|a| (0..nj).map(|b| (0..nk).map(|c| instance.op_cost_frozen(a, b, c)).collect()).collect())
        .collect();
    Instance::from_parts(
        instance.orders().to_vec(),
        instance.locations().to_vec(),
        instance.modes().to_vec(),
        TravelMatrix::new(instance.travel().rows().to_vec()),
        fresh,
        frozen,
        failure,
        Some(instance.big_t_hours()),
        Some(instance.cryo_leg_limit_hours()),
    )
}

/// The filter's contract, written the slow way: drop every vector strictly
/// dominated by another, collapse duplicates, sort by
/// (coverage desc, cost asc, wait asc).
fn quadratic_reference(vectors: &[ObjectiveVector]) -> Vec<ObjectiveVector> {
    let mut kept: Vec<ObjectiveVector> = Vec::new();
    for v in vectors {
        if vectors.iter().any(|other| other.dominates(v)) {
            continue;
        }
        if kept.contains(v) {
            continue;
        }
        kept.push(*v);
    }
    kept.sort_by(|a, b| {
        b.coverage
            .cmp(&a.coverage)
            .then(a.cost.partial_cmp(&b.cost).unwrap())
            .then(a.waiting_time_hours.partial_cmp(&b.waiting_time_hours).unwrap())
    });
    kept
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dominance_is_irreflexive(a in vector_strategy()) {
        prop_assert!(!a.dominates(&a));
    }

    #[test]
    fn dominance_is_asymmetric(a in vector_strategy(), b in vector_strategy()) {
        prop_assert!(!(a.dominates(&b) && b.dominates(&a)));
    }

    #[test]
    fn dominance_is_transitive(
        a in vector_strategy(),
        b in vector_strategy(),
        c in vector_strategy(),
    ) {
        if a.dominates(&b) && b.dominates(&c) {
            prop_assert!(a.dominates(&c));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_matches_the_quadratic_reference(
        vectors in proptest::collection::vec(vector_strategy(), 0..60),
    ) {
        let points = vectors
            .iter()
            .map(|&objectives| FrontPoint {
                solution: Solution::all_closed(1, 1, 1),
                objectives,
                proved_optimal: true,
            })
            .collect();
        let filtered: Vec<ObjectiveVector> =
            nondominated_filter(points).into_iter().map(|p| p.objectives).collect();
        prop_assert_eq!(filtered, quadratic_reference(&vectors));
    }
}

#[test]
fn filter_matches_the_reference_on_a_thousand_vectors() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let vectors: Vec<ObjectiveVector> = (0..1000)
        .map(|_| ObjectiveVector {
            waiting_time_hours: rng.random_range(0.0..50.0),
            cost: rng.random_range(0.0..50.0),
            coverage: rng.random_range(0..5),
        })
        .collect();
    let points = vectors
        .iter()
        .map(|&objectives| FrontPoint {
            solution: Solution::all_closed(1, 1, 1),
            objectives,
            proved_optimal: true,
        })
        .collect();
    let filtered: Vec<ObjectiveVector> =
        nondominated_filter(points).into_iter().map(|p| p.objectives).collect();
    assert_eq!(filtered, quadratic_reference(&vectors));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn serialization_round_trips_losslessly(
        n_orders in 1usize..6,
        n_locations in 1usize..5,
        n_modes in 1usize..4,
        seed in any::<u64>(),
    ) {
        let inst = gen_instance(n_orders, n_locations, n_modes, seed);
        let text = io::instance_to_json(&inst);
        let back = io::instance_from_json(&text).expect("generated instances are valid");
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(io::instance_to_json(&back), text);
    }

    #[test]
    fn raising_a_failure_rate_never_improves_wait_or_cost(
        seed in any::<u64>(),
        config_bits in any::<u64>(),
        order_pick in any::<u64>(),
        mode_pick in any::<u64>(),
        bump in 0.01f64..0.5,
    ) {
        let inst = gen_instance(3, 3, 2, seed);
        let config = config_from_seed(&inst, config_bits);
        let scal = Scalarization::weighted(1.0, 1.0, -100.0);
        let (solution, before) =
            exact::best_assignment(&inst, &config, &scal, ModelVariant::Canonical)
                .expect("weights are valid")
                .expect("weighted scalarizations always admit an assignment");
        let i = (order_pick % 3) as usize;
        let k = (mode_pick % 2) as usize;
        let old = inst.failure_rate(i, k);
        let raised = (old + bump).min(0.99);
        let bumped = with_failure_rate(&inst, i, k, raised);
        let after = evaluator::evaluate(&bumped, &solution).expect("feasibility ignores rates");
        prop_assert!(after.waiting_time_hours >= before.waiting_time_hours);
        prop_assert!(after.cost >= before.cost);
        prop_assert_eq!(after.coverage, before.coverage);
    }

    #[test]
    fn unassigning_an_order_reduces_coverage_by_one_and_never_raises_wait_or_cost(
        seed in any::<u64>(),
        config_bits in any::<u64>(),
        order_pick in any::<u64>(),
    ) {
        let inst = gen_instance(3, 3, 2, seed);
        let config = config_from_seed(&inst, config_bits);
        let scal = Scalarization::weighted(1.0, 0.2, -500.0);
        let (mut solution, before) =
            exact::best_assignment(&inst, &config, &scal, ModelVariant::Canonical)
                .expect("weights are valid")
                .expect("weighted scalarizations always admit an assignment");
        let i = (order_pick % 3) as usize;
        let was_covered = solution.x_m[i].iter().any(|&b| b);
        solution.x_m[i].iter_mut().for_each(|b| *b = false);
        solution.x_c[i].iter_mut().for_each(|b| *b = false);
        solution.z[i] = false;
        let after = evaluator::evaluate(&inst, &solution).expect("unassigning stays feasible");
        prop_assert!(after.waiting_time_hours <= before.waiting_time_hours);
        prop_assert!(after.cost <= before.cost);
        prop_assert_eq!(after.coverage + usize::from(was_covered), before.coverage);
    }
}
