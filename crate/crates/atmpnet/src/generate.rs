//! Seeded random instance generation.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{CandidateLocation, Instance, Mode, Order, TravelMatrix};

/// Travel time per unit of Euclidean distance on the unit square.
pub const TRAVEL_HOURS_PER_UNIT: f64 = 12.0;

/// Where travel times come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// Orders and locations drawn uniformly on the unit square; travel time
    /// is Euclidean distance times [`TRAVEL_HOURS_PER_UNIT`], hence symmetric.
    UnitSquare,
    /// A caller-supplied travel matrix; may be asymmetric.
    Matrix(TravelMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub n_orders: usize,
    pub n_locations: usize,
    pub n_modes: usize,
    pub seed: u64,
    pub geometry: Geometry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenError {
    ZeroCount { field: &'static str },
    MatrixSize { expected: usize, found: usize },
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::ZeroCount { field } => write!(f, "{field} must be at least 1"),
            GenError::MatrixSize { expected, found } => {
                write!(f, "travel matrix has {found} nodes, expected orders + locations = {expected}")
            }
        }
    }
}

impl std::error::Error for GenError {}

/// Generates a valid instance from the given parameters. The same parameters
/// always produce the same instance.
///
/// Shelf lives are bimodal: roughly 40 % of orders draw a short one
/// (0.5 to 4 hours, usually forcing a frozen route) and the rest a long one
/// (6 to 30 hours, usually allowing fresh routes). Frozen production is
/// slower than fresh and frozen operational cost is drawn relative to fresh,
/// anywhere from a 20 % saving to a 50 % premium.
pub fn generate(params: &GenParams) -> Result<Instance, GenError> {
    for (field, n) in [
        ("n_orders", params.n_orders),
        ("n_locations", params.n_locations),
        ("n_modes", params.n_modes),
    ] {
        if n == 0 {
            return Err(GenError::ZeroCount { field });
        }
    }

    let ni = params.n_orders;
    let nj = params.n_locations;
    let nk = params.n_modes;
    let n_nodes = ni + nj;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let travel = match &params.geometry {
        Geometry::UnitSquare => {
            let points: Vec<(f64, f64)> =
                (0..n_nodes).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
            let rows = points
                .iter()
                .map(|&(ax, ay)| {
                    points
                        .iter()
                        .map(|&(bx, by)| {
                            let (dx, dy) = (ax - bx, ay - by);
                            (dx * dx + dy * dy).sqrt() * TRAVEL_HOURS_PER_UNIT
                        })
                        .collect()
                })
                .collect();
            TravelMatrix::new(rows)
        }
        Geometry::Matrix(matrix) => {
            if matrix.node_count() != n_nodes {
                return Err(GenError::MatrixSize {
                    expected: n_nodes,
                    found: matrix.node_count(),
                });
            }
            matrix.clone()
        }
    };

    let orders = (0..ni)
        .map(|i| {
            let shelf_life_hours = if rng.random::<f64>() < 0.4 {
                rng.random_range(0.5..4.0)
            } else {
                rng.random_range(6.0..30.0)
            };
            Order { id: i, shelf_life_hours }
        })
        .collect();

    let locations = (0..nj)
        .map(|j| CandidateLocation {
            id: j,
            setup_cost_manufacturing: rng.random_range(50.0..500.0),
            setup_cost_cryo: rng.random_range(10.0..100.0),
        })
        .collect();

    let modes = (0..nk)
        .map(|k| {
            let fresh = rng.random_range(5.0..40.0);
            Mode {
                id: k,
                production_time_fresh_hours: fresh,
                production_time_frozen_hours: fresh * rng.random_range(1.05..1.6),
            }
        })
        .collect();

    let mut op_cost_fresh = vec![vec![vec![0.0; nk]; nj]; ni];
    let mut op_cost_frozen = vec![vec![vec![0.0; nk]; nj]; ni];
    for i in 0..ni {
        for j in 0..nj {
            for k in 0..nk {
                let fresh = rng.random_range(5.0..50.0);
                op_cost_fresh[i][j][k] = fresh;
                op_cost_frozen[i][j][k] = fresh * rng.random_range(0.8..1.5);
            }
        }
    }

    let mut failure_rate = vec![vec![0.0; nk]; ni];
    for row in &mut failure_rate {
        for r in row.iter_mut() {
            *r = rng.random_range(0.0..0.3);
        }
    }

    Ok(Instance::from_parts(
        orders,
        locations,
        modes,
        travel,
        op_cost_fresh,
        op_cost_frozen,
        failure_rate,
        None,
        None,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(seed: u64) -> GenParams {
        GenParams {
            n_orders: 6,
            n_locations: 4,
            n_modes: 2,
            seed,
            geometry: Geometry::UnitSquare,
        }
    }

    #[test]
    fn generated_instances_validate_cleanly() {
        for seed in 0..25 {
            let inst = generate(&params(seed)).unwrap();
            let violations = inst.validate();
            assert!(violations.is_empty(), "seed {seed}: {violations:?}");
        }
    }

    #[test]
    fn same_seed_same_instance() {
        assert_eq!(generate(&params(11)).unwrap(), generate(&params(11)).unwrap());
    }

    #[test]
    fn different_seeds_differ() {
        assert_ne!(generate(&params(1)).unwrap(), generate(&params(2)).unwrap());
    }

    #[test]
    fn unit_square_travel_is_symmetric_with_zero_diagonal() {
        let inst = generate(&params(3)).unwrap();
        let n = inst.travel().node_count();
        for a in 0..n {
            assert_eq!(inst.travel().get(a, a), 0.0);
            for b in 0..n {
                assert_eq!(inst.travel().get(a, b), inst.travel().get(b, a));
            }
        }
    }

    #[test]
    fn zero_counts_are_rejected() {
        let mut p = params(0);
        p.n_modes = 0;
        assert!(matches!(generate(&p), Err(GenError::ZeroCount { field: "n_modes" })));
    }

    #[test]
    fn matrix_geometry_must_match_node_count() {
        let mut p = params(0);
        p.geometry = Geometry::Matrix(TravelMatrix::new(vec![vec![0.0; 3]; 3]));
        assert!(matches!(generate(&p), Err(GenError::MatrixSize { expected: 10, found: 3 })));
    }

    #[test]
    fn shelf_lives_span_short_and_long_regimes() {
        let inst = generate(&GenParams {
            n_orders: 40,
            n_locations: 3,
            n_modes: 2,
            seed: 5,
            geometry: Geometry::UnitSquare,
        })
        .unwrap();
        let short = inst.orders().iter().filter(|o| o.shelf_life_hours < 4.0).count();
        let long = inst.orders().iter().filter(|o| o.shelf_life_hours >= 6.0).count();
        assert!(short > 0, "expected at least one short shelf life");
        assert!(long > 0, "expected at least one long shelf life");
    }
}
