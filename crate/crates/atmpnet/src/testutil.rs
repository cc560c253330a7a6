//! Hand-built fixtures shared across unit tests.

use crate::instance::{CandidateLocation, Instance, Mode, Order, TravelMatrix};

/// One order, two locations, one mode, with numbers chosen so the objective
/// arithmetic can be checked by hand.
///
/// Node order in the travel matrix: order 0, location 0, location 1.
/// Location 0 is the natural manufacturer (2 h out, 3 h back, setup 100);
/// location 1 is the natural cryopreservation site (1 h out, 2 h onward to
/// location 0, setup 40 as cryo) but a poor fresh manufacturer (9 h back).
fn spot(failure_rate: f64, shelf_life_hours: f64) -> Instance {
    Instance::from_parts(
        vec![Order { id: 0, shelf_life_hours }],
        vec![
            CandidateLocation { id: 0, setup_cost_manufacturing: 100.0, setup_cost_cryo: 77.0 },
            CandidateLocation { id: 1, setup_cost_manufacturing: 120.0, setup_cost_cryo: 40.0 },
        ],
        vec![Mode { id: 0, production_time_fresh_hours: 10.0, production_time_frozen_hours: 5.0 }],
        TravelMatrix::new(vec![
            vec![0.0, 2.0, 1.0],
            vec![3.0, 0.0, 4.0],
            vec![9.0, 2.0, 0.0],
        ]),
        vec![vec![vec![30.0], vec![25.0]]],
        vec![vec![vec![20.0], vec![22.0]]],
        vec![vec![failure_rate]],
        None,
        None,
    )
}

pub(crate) fn spot_instance() -> Instance {
    spot(0.0, 3.0)
}

pub(crate) fn spot_instance_with_failure(failure_rate: f64) -> Instance {
    spot(failure_rate, 3.0)
}

pub(crate) fn spot_instance_with_shelf_life(shelf_life_hours: f64) -> Instance {
    spot(0.0, shelf_life_hours)
}

/// Two orders, two locations, two modes; order 1 has a shelf life too short
/// for any fresh route, so covering it requires cryopreservation.
///
/// Node order: order 0, order 1, location 0, location 1.
pub(crate) fn tiny_instance() -> Instance {
    Instance::from_parts(
        vec![
            Order { id: 0, shelf_life_hours: 10.0 },
            Order { id: 1, shelf_life_hours: 1.5 },
        ],
        vec![
            CandidateLocation { id: 0, setup_cost_manufacturing: 100.0, setup_cost_cryo: 35.0 },
            CandidateLocation { id: 1, setup_cost_manufacturing: 80.0, setup_cost_cryo: 45.0 },
        ],
        vec![
            Mode { id: 0, production_time_fresh_hours: 10.0, production_time_frozen_hours: 14.0 },
            Mode { id: 1, production_time_fresh_hours: 7.0, production_time_frozen_hours: 9.0 },
        ],
        TravelMatrix::new(vec![
            vec![0.0, 6.0, 3.0, 5.0],
            vec![6.0, 0.0, 4.0, 2.0],
            vec![3.0, 4.0, 0.0, 2.0],
            vec![5.0, 2.0, 2.0, 0.0],
        ]),
        vec![
            vec![vec![12.0, 18.0], vec![14.0, 20.0]],
            vec![vec![11.0, 16.0], vec![13.0, 19.0]],
        ],
        vec![
            vec![vec![15.0, 21.0], vec![17.0, 23.0]],
            vec![vec![14.0, 19.0], vec![16.0, 22.0]],
        ],
        vec![vec![0.1, 0.05], vec![0.2, 0.15]],
        None,
        None,
    )
}
