//! The covering and median baselines against plain subset enumeration, plus
//! their monotonicity laws, on random geometry.

use atmpnet::classical::{backup_lscp, lscp, mclp, p_center, p_median, BackupSpec, CoverSpec};
use atmpnet::generate::{generate, GenParams, Geometry};
use atmpnet::instance::{Instance, FEASIBILITY_TOLERANCE_HOURS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gen_instance(n_orders: usize, n_locations: usize, seed: u64) -> Instance {
    generate(&GenParams {
        n_orders,
        n_locations,
        n_modes: 1,
        seed,
        geometry: Geometry::UnitSquare,
    })
    .expect("counts are nonzero")
}

/// All subsets of `0..n` in ascending bitmask order.
fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << n).map(move |bits| (0..n).filter(|j| bits & (1 << j) != 0).collect())
}

fn covers(instance: &Instance, open: &[usize], i: usize, radius: f64) -> bool {
    open.iter().any(|&j| instance.d_order_to_loc(i, j) <= radius + FEASIBILITY_TOLERANCE_HOURS)
}

fn covered_weight(instance: &Instance, open: &[usize], radius: f64, weights: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..instance.n_orders() {
        if covers(instance, open, i, radius) {
            total += weights[i];
        }
    }
    total
}

fn median_value(instance: &Instance, open: &[usize], weights: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..instance.n_orders() {
        let nearest =
            open.iter().map(|&j| instance.d_order_to_loc(i, j)).fold(f64::INFINITY, f64::min);
        total += weights[i] * nearest;
    }
    total
}

fn center_value(instance: &Instance, open: &[usize]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..instance.n_orders() {
        let nearest =
            open.iter().map(|&j| instance.d_order_to_loc(i, j)).fold(f64::INFINITY, f64::min);
        worst = worst.max(nearest);
    }
    worst
}

/// Sorted order-to-location distances, for picking meaningful radii.
fn distance_quantiles(instance: &Instance) -> Vec<f64> {
    let mut all: Vec<f64> = (0..instance.n_orders())
        .flat_map(|i| (0..instance.n_locations()).map(move |j| (i, j)))
        .map(|(i, j)| instance.d_order_to_loc(i, j))
        .collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pick = |q: f64| all[((all.len() - 1) as f64 * q) as usize];
    vec![pick(0.25), pick(0.5), pick(0.75), all[all.len() - 1]]
}

/// The smallest radius at which every order can reach some location.
fn coverable_radius(instance: &Instance) -> f64 {
    (0..instance.n_orders())
        .map(|i| {
            (0..instance.n_locations())
                .map(|j| instance.d_order_to_loc(i, j))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max)
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.5..2.0)).collect()
}

#[test]
fn lscp_equals_subset_enumeration() {
    for seed in 0..32 {
        let inst = gen_instance(6 + (seed as usize % 5), 4 + (seed as usize % 5), seed);
        let radius = coverable_radius(&inst) * 1.05;
        let spec = CoverSpec { coverage_radius_hours: radius, p: 1, demand_weights: None };
        let (open, count) = lscp(&inst, &spec).expect("radius chosen coverable");
        let brute = subsets(inst.n_locations())
            .filter(|s| (0..inst.n_orders()).all(|i| covers(&inst, s, i, radius)))
            .map(|s| s.len())
            .min()
            .expect("the full set covers");
        assert_eq!(count, brute, "seed {seed}");
        assert_eq!(open.len(), count, "seed {seed}: reported set has the reported size");
        assert!(
            (0..inst.n_orders()).all(|i| covers(&inst, &open, i, radius)),
            "seed {seed}: reported set covers every order"
        );
    }
}

#[test]
fn lscp_reports_exactly_the_unreachable_orders() {
    for seed in 40..50 {
        let inst = gen_instance(8, 5, seed);
        let radius = coverable_radius(&inst) * 0.6;
        let unreachable: Vec<usize> = (0..inst.n_orders())
            .filter(|&i| {
                !(0..inst.n_locations())
                    .any(|j| inst.d_order_to_loc(i, j) <= radius + FEASIBILITY_TOLERANCE_HOURS)
            })
            .collect();
        let spec = CoverSpec { coverage_radius_hours: radius, p: 1, demand_weights: None };
        match lscp(&inst, &spec) {
            Ok(_) => assert!(unreachable.is_empty(), "seed {seed}"),
            Err(atmpnet::classical::ClassicalError::Uncoverable { orders }) => {
                assert_eq!(orders, unreachable, "seed {seed}");
                assert!(!unreachable.is_empty(), "seed {seed}");
            }
            Err(e) => panic!("seed {seed}: unexpected error {e}"),
        }
    }
}

#[test]
fn mclp_equals_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 0..32 {
        let inst = gen_instance(6 + (seed as usize % 5), 4 + (seed as usize % 5), seed);
        let radius = distance_quantiles(&inst)[1];
        let weights = if seed % 2 == 0 { Some(random_weights(&mut rng, inst.n_orders())) } else { None };
        let p = 1 + (seed as usize % 3);
        let spec = CoverSpec {
            coverage_radius_hours: radius,
            p,
            demand_weights: weights.clone(),
        };
        let (open, value) = mclp(&inst, &spec).expect("spec is valid");
        let w = weights.unwrap_or_else(|| vec![1.0; inst.n_orders()]);
        let brute = subsets(inst.n_locations())
            .filter(|s| s.len() <= p)
            .map(|s| covered_weight(&inst, &s, radius, &w))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(value, brute, "seed {seed}");
        assert!(open.len() <= p, "seed {seed}");
        assert_eq!(covered_weight(&inst, &open, radius, &w), value, "seed {seed}");
    }
}

#[test]
fn p_median_equals_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for seed in 0..32 {
        let inst = gen_instance(6 + (seed as usize % 5), 4 + (seed as usize % 5), seed);
        let weights = if seed % 2 == 0 { Some(random_weights(&mut rng, inst.n_orders())) } else { None };
        let p = 1 + (seed as usize % 3);
        let spec = CoverSpec { coverage_radius_hours: 0.0, p, demand_weights: weights.clone() };
        let (open, value) = p_median(&inst, &spec).expect("spec is valid");
        let w = weights.unwrap_or_else(|| vec![1.0; inst.n_orders()]);
        let brute = subsets(inst.n_locations())
            .filter(|s| s.len() == p)
            .map(|s| median_value(&inst, &s, &w))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(value, brute, "seed {seed}");
        assert_eq!(open.len(), p, "seed {seed}");
        assert_eq!(median_value(&inst, &open, &w), value, "seed {seed}");
    }
}

#[test]
fn p_center_equals_subset_enumeration() {
    for seed in 0..32 {
        let inst = gen_instance(6 + (seed as usize % 5), 4 + (seed as usize % 5), seed);
        let p = 1 + (seed as usize % 3);
        let spec = CoverSpec { coverage_radius_hours: 0.0, p, demand_weights: None };
        let (open, value) = p_center(&inst, &spec).expect("spec is valid");
        let brute = subsets(inst.n_locations())
            .filter(|s| s.len() == p)
            .map(|s| center_value(&inst, &s))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(value, brute, "seed {seed}");
        assert_eq!(open.len(), p, "seed {seed}");
        assert_eq!(center_value(&inst, &open), value, "seed {seed}");
    }
}

#[test]
fn backup_lscp_equals_subset_enumeration() {
    for seed in 0..32 {
        let inst = gen_instance(5 + (seed as usize % 4), 4 + (seed as usize % 5), seed);
        let primary = coverable_radius(&inst) * 1.05;
        let backup = primary * 1.6;
        let spec = BackupSpec { primary_radius_hours: primary, backup_radius_hours: backup };
        let double_covered = |s: &[usize]| {
            (0..inst.n_orders()).all(|i| {
                let near = s
                    .iter()
                    .filter(|&&j| {
                        inst.d_order_to_loc(i, j) <= backup + FEASIBILITY_TOLERANCE_HOURS
                    })
                    .count();
                covers(&inst, s, i, primary) && near >= 2
            })
        };
        let brute = subsets(inst.n_locations()).filter(|s| double_covered(s)).map(|s| s.len()).min();
        match (backup_lscp(&inst, &spec), brute) {
            (Ok((open, count)), Some(expected)) => {
                assert_eq!(count, expected, "seed {seed}");
                assert_eq!(open.len(), count, "seed {seed}");
                assert!(double_covered(&open), "seed {seed}");
            }
            (Err(atmpnet::classical::ClassicalError::Uncoverable { .. }), None) => {}
            (got, want) => panic!("seed {seed}: library {got:?} vs brute force {want:?}"),
        }
    }
}

#[test]
fn monotonicity_laws_hold_across_random_instances() {
    for seed in 60..75 {
        let inst = gen_instance(8, 6, seed);
        let radii = distance_quantiles(&inst);
        let coverable = coverable_radius(&inst);

        let mut last_count: Option<usize> = None;
        for &r in radii.iter().filter(|&&r| r >= coverable) {
            let spec = CoverSpec { coverage_radius_hours: r, p: 1, demand_weights: None };
            let (_, count) = lscp(&inst, &spec).expect("radius at least the coverable threshold");
            if let Some(last) = last_count {
                assert!(count <= last, "seed {seed}: LSCP count grew with the radius");
            }
            last_count = Some(count);
        }

        let mid = radii[1];
        let mut last_weight = f64::NEG_INFINITY;
        for p in 1..=inst.n_locations() {
            let spec = CoverSpec { coverage_radius_hours: mid, p, demand_weights: None };
            let (_, w) = mclp(&inst, &spec).expect("spec is valid");
            assert!(w >= last_weight, "seed {seed}: MCLP weight fell as p grew");
            last_weight = w;
        }
        let mut last_weight = f64::NEG_INFINITY;
        for &r in &radii {
            let spec = CoverSpec { coverage_radius_hours: r, p: 2, demand_weights: None };
            let (_, w) = mclp(&inst, &spec).expect("spec is valid");
            assert!(w >= last_weight, "seed {seed}: MCLP weight fell as the radius grew");
            last_weight = w;
        }

        let mut last_median = f64::INFINITY;
        let mut last_center = f64::INFINITY;
        for p in 1..=inst.n_locations() {
            let spec = CoverSpec { coverage_radius_hours: 0.0, p, demand_weights: None };
            let (_, median) = p_median(&inst, &spec).expect("spec is valid");
            let (_, center) = p_center(&inst, &spec).expect("spec is valid");
            assert!(median <= last_median, "seed {seed}: p-median value grew with p");
            assert!(center <= last_center, "seed {seed}: p-center value grew with p");
            last_median = median;
            last_center = center;
        }

        let primary = coverable * 1.05;
        let (_, single) = lscp(
            &inst,
            &CoverSpec { coverage_radius_hours: primary, p: 1, demand_weights: None },
        )
        .expect("radius chosen coverable");
        if let Ok((_, double)) = backup_lscp(
            &inst,
            &BackupSpec { primary_radius_hours: primary, backup_radius_hours: primary * 1.6 },
        ) {
            assert!(double >= single, "seed {seed}: double coverage cheaper than single");
        }
    }
}
