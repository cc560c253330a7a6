//! Brute-force reference implementation, kept deliberately independent of the
//! solver and evaluator modules: it re-derives route feasibility and objective
//! values from the instance data with its own (branch-based) code so the two
//! routes can be cross-checked against each other in tests.
//!
//! Everything here enumerates, so it is only usable on desk-size instances;
//! [`enumerate_all`] refuses instances whose state-space bound exceeds
//! [`ENUMERATION_GUARD`].

use std::fmt;

use crate::instance::{Instance, FEASIBILITY_TOLERANCE_HOURS};
use crate::solution::{ObjectiveVector, Solution};
use crate::ModelVariant;

/// Upper limit on `configurations x route combinations` accepted for
/// enumeration.
pub const ENUMERATION_GUARD: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    /// The instance's enumeration bound exceeds [`ENUMERATION_GUARD`].
    TooLarge { bound: u128, limit: u128 },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::TooLarge { bound, limit } => {
                write!(f, "state space bound {bound} exceeds the enumeration limit {limit}")
            }
        }
    }
}

impl std::error::Error for OracleError {}

/// Upper bound on the number of enumerated states:
/// `(modes + 2)^locations` facility configurations times, per order, one
/// uncovered route, `locations` fresh routes, `locations^2` frozen routes and,
/// under [`ModelVariant::Strict`], `locations` direct frozen routes.
pub fn enumeration_bound(instance: &Instance, variant: ModelVariant) -> u128 {
    let ni = instance.n_orders() as u32;
    let nj = instance.n_locations() as u128;
    let nk = instance.n_modes() as u128;
    let configs = (nk + 2).checked_pow(instance.n_locations() as u32).unwrap_or(u128::MAX);
    let direct = match variant {
        ModelVariant::Canonical => 0,
        ModelVariant::Strict => nj,
    };
    let per_order = 1 + nj + nj * nj + direct;
    let routes = per_order.checked_pow(ni).unwrap_or(u128::MAX);
    configs.saturating_mul(routes)
}

/// How one order is served.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Route {
    Uncovered,
    Fresh { manufacturer: usize },
    Frozen { manufacturer: usize, cryo: usize },
    /// Frozen flag without a cryopreservation stop; only reachable under
    /// [`ModelVariant::Strict`].
    DirectFrozen { manufacturer: usize },
}

fn route_is_feasible(instance: &Instance, order: usize, route: Route) -> bool {
    let tol = FEASIBILITY_TOLERANCE_HOURS;
    let shelf = instance.shelf_life(order);
    let lifted = shelf + instance.big_t_hours();
    match route {
        Route::Uncovered => true,
        Route::Fresh { manufacturer } => {
            instance.d_order_to_loc(order, manufacturer) <= shelf + tol
                && instance.d_loc_to_order(manufacturer, order) <= shelf + tol
        }
        Route::Frozen { manufacturer, cryo } => {
            instance.d_order_to_loc(order, cryo) <= instance.cryo_leg_limit_hours() + tol
                && instance.d_order_to_loc(order, manufacturer) <= lifted + tol
                && instance.d_loc_to_order(manufacturer, order) <= lifted + tol
        }
        Route::DirectFrozen { manufacturer } => {
            instance.d_order_to_loc(order, manufacturer) <= lifted + tol
                && instance.d_loc_to_order(manufacturer, order) <= lifted + tol
        }
    }
}

/// Re-derives the objective values of a (presumed feasible) solution directly
/// from its assignments, without the evaluator module.
pub fn reference_objectives(instance: &Instance, solution: &Solution) -> ObjectiveVector {
    let ni = instance.n_orders();
    let nj = instance.n_locations();
    let nk = instance.n_modes();

    let mut waiting = 0.0;
    let mut coverage = 0usize;
    for i in 0..ni {
        let Some(j) = (0..nj).find(|&j| solution.x_m[i][j]) else {
            continue;
        };
        coverage += 1;
        let k = (0..nk).find(|&k| solution.m[j][k]).expect("open manufacturer runs a mode");
        let to_manufacturer = if solution.z[i] {
            match (0..nj).find(|&jp| solution.x_c[i][jp]) {
                Some(jp) => instance.d_order_to_loc(i, jp) + instance.d_loc_to_loc(jp, j),
                None => 0.0,
            }
        } else {
            instance.d_order_to_loc(i, j)
        };
        let production =
            if solution.z[i] { instance.prod_frozen(k) } else { instance.prod_fresh(k) };
        let repeat = 1.0 + instance.failure_rate(i, k);
        waiting += repeat * (to_manufacturer + production) + instance.d_loc_to_order(j, i);
    }

    let mut setup = 0.0;
    for j in 0..nj {
        if solution.y_m[j] {
            setup += instance.setup_manufacturing(j);
        }
        if solution.y_c[j] {
            setup += instance.setup_cryo(j);
        }
    }
    let mut operations = 0.0;
    for i in 0..ni {
        let Some(j) = (0..nj).find(|&j| solution.x_m[i][j]) else {
            continue;
        };
        let k = (0..nk).find(|&k| solution.m[j][k]).expect("open manufacturer runs a mode");
        let unit = if solution.z[i] {
            instance.op_cost_frozen(i, j, k)
        } else {
            instance.op_cost_fresh(i, j, k)
        };
        operations += (1.0 + instance.failure_rate(i, k)) * unit;
    }

    ObjectiveVector { waiting_time_hours: waiting, cost: setup + operations, coverage }
}

fn build_solution(instance: &Instance, states: &[usize], routes: &[Route]) -> Solution {
    let mut sol =
        Solution::all_closed(instance.n_orders(), instance.n_locations(), instance.n_modes());
    for (j, &state) in states.iter().enumerate() {
        match state {
            0 => {}
            1 => sol.y_c[j] = true,
            k_plus_2 => {
                sol.y_m[j] = true;
                sol.m[j][k_plus_2 - 2] = true;
            }
        }
    }
    for (i, &route) in routes.iter().enumerate() {
        match route {
            Route::Uncovered => {}
            Route::Fresh { manufacturer } => {
                sol.x_m[i][manufacturer] = true;
            }
            Route::Frozen { manufacturer, cryo } => {
                sol.x_m[i][manufacturer] = true;
                sol.x_c[i][cryo] = true;
                sol.z[i] = true;
            }
            Route::DirectFrozen { manufacturer } => {
                sol.x_m[i][manufacturer] = true;
                sol.z[i] = true;
            }
        }
    }
    sol
}

/// Enumerates every solution in the model's solution space (facility
/// configurations crossed with per-order feasible routes) and calls `visit`
/// with each solution and its objective values. Returns the number of
/// solutions visited.
///
/// Under [`ModelVariant::Canonical`] a frozen order always stops at an open
/// cryopreservation site and only covered orders carry the frozen flag; under
/// [`ModelVariant::Strict`] covered orders may additionally freeze
/// without a cryopreservation stop.
pub fn enumerate_all(
    instance: &Instance,
    variant: ModelVariant,
    mut visit: impl FnMut(&Solution, &ObjectiveVector),
) -> Result<u64, OracleError> {
    let bound = enumeration_bound(instance, variant);
    if bound > ENUMERATION_GUARD {
        return Err(OracleError::TooLarge { bound, limit: ENUMERATION_GUARD });
    }

    let ni = instance.n_orders();
    let nj = instance.n_locations();
    let nk = instance.n_modes();
    let mut visited = 0u64;

    let mut states = vec![0usize; nj];
    loop {
        let manufacturers: Vec<(usize, usize)> = states
            .iter()
            .enumerate()
            .filter(|(_, &s)| s >= 2)
            .map(|(j, &s)| (j, s - 2))
            .collect();
        let cryo_sites: Vec<usize> =
            states.iter().enumerate().filter(|(_, &s)| s == 1).map(|(j, _)| j).collect();

        let mut route_choices: Vec<Vec<Route>> = Vec::with_capacity(ni);
        for i in 0..ni {
            let mut routes = vec![Route::Uncovered];
            for &(j, _) in &manufacturers {
                let route = Route::Fresh { manufacturer: j };
                if route_is_feasible(instance, i, route) {
                    routes.push(route);
                }
            }
            for &(j, _) in &manufacturers {
                for &jp in &cryo_sites {
                    let route = Route::Frozen { manufacturer: j, cryo: jp };
                    if route_is_feasible(instance, i, route) {
                        routes.push(route);
                    }
                }
            }
            if variant == ModelVariant::Strict {
                for &(j, _) in &manufacturers {
                    let route = Route::DirectFrozen { manufacturer: j };
                    if route_is_feasible(instance, i, route) {
                        routes.push(route);
                    }
                }
            }
            route_choices.push(routes);
        }

        let mut picks = vec![0usize; ni];
        loop {
            let routes: Vec<Route> =
                picks.iter().enumerate().map(|(i, &p)| route_choices[i][p]).collect();
            let sol = build_solution(instance, &states, &routes);
            let vec = reference_objectives(instance, &sol);
            visit(&sol, &vec);
            visited += 1;

            let mut idx = ni;
            loop {
                if idx == 0 {
                    break;
                }
                idx -= 1;
                picks[idx] += 1;
                if picks[idx] < route_choices[idx].len() {
                    break;
                }
                picks[idx] = 0;
            }
            if picks.iter().all(|&p| p == 0) {
                break;
            }
        }

        let mut j = nj;
        loop {
            if j == 0 {
                return Ok(visited);
            }
            j -= 1;
            states[j] += 1;
            if states[j] < nk + 2 {
                break;
            }
            states[j] = 0;
        }
    }
}

/// The exact Pareto front by exhaustive enumeration: every nondominated
/// objective vector with one witness solution each (the first encountered in
/// enumeration order).
pub fn oracle_front(
    instance: &Instance,
    variant: ModelVariant,
) -> Result<Vec<(Solution, ObjectiveVector)>, OracleError> {
    let mut archive: Vec<(Solution, ObjectiveVector)> = Vec::new();
    enumerate_all(instance, variant, |sol, vec| {
        if archive.iter().any(|(_, kept)| kept.dominates(vec) || kept == vec) {
            return;
        }
        archive.retain(|(_, kept)| !vec.dominates(kept));
        archive.push((sol.clone(), *vec));
    })?;
    Ok(archive)
}
