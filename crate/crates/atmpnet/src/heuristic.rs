//! Multi-start local search over facility configurations.
//!
//! The search space is the configuration side only: which locations open as
//! what, running which mode. Order assignments are recomputed optimally for
//! every visited configuration (the assignment subproblem is cheap per
//! configuration), which keeps every emitted solution feasible by
//! construction and collapses the search space the exact solver branches
//! over.
//!
//! Each start descends with first-improvement moves in seeded random order,
//! then applies a few perturb-and-redescend rounds; starts are independent
//! and may run in parallel, with a deterministic merge.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::exact::{self, Configuration, LocationState};
use crate::exec;
use crate::instance::{Instance, FEASIBILITY_TOLERANCE_HOURS};
use crate::pareto::{self, FrontGrid, ParetoFront, WalkStep};
use crate::scalarization::{Objective, Scalarization, ScalarizationError};
use crate::solution::{ObjectiveVector, Solution};
use crate::ModelVariant;

/// Node cap for each per-configuration assignment solve inside the search
/// loop; far smaller than the exact solver's because a capped assignment
/// only costs solution quality here, never correctness.
const ASSIGNMENT_NODE_CAP: u64 = 20_000;

/// Which move families the descent may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighborhood {
    /// Open a closed location (as a manufacturer in mode 0) or close an open
    /// one.
    pub toggle_facility: bool,
    /// Swap a location between manufacturing and cryopreservation.
    pub retype_facility: bool,
    /// Switch an open manufacturer to another mode.
    pub change_mode: bool,
    /// Exchange the states of two locations.
    pub swap_pair: bool,
}

impl Default for Neighborhood {
    fn default() -> Self {
        Neighborhood {
            toggle_facility: true,
            retype_facility: true,
            change_mode: true,
            swap_pair: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    /// Independent restarts.
    pub starts: usize,
    /// Perturbation rounds without improvement before a start terminates.
    pub max_no_improve: usize,
    pub seed: u64,
    pub neighborhood: Neighborhood,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            starts: 8,
            max_no_improve: 3,
            seed: 0,
            neighborhood: Neighborhood::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HeuristicError {
    InvalidParams(String),
    Scalarization(ScalarizationError),
    /// No visited configuration admits an assignment within the
    /// scalarization's bounds. Only epsilon scalarizations can fail this way.
    Infeasible,
}

impl fmt::Display for HeuristicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeuristicError::InvalidParams(msg) => write!(f, "invalid search parameters: {msg}"),
            HeuristicError::Scalarization(e) => write!(f, "{e}"),
            HeuristicError::Infeasible => {
                write!(f, "no visited configuration satisfies the bounds")
            }
        }
    }
}

impl std::error::Error for HeuristicError {}

impl From<ScalarizationError> for HeuristicError {
    fn from(e: ScalarizationError) -> Self {
        HeuristicError::Scalarization(e)
    }
}

/// Lexicographic comparison key consistent with the exact solver's tie-break:
/// scalarized value for weighted sums; (objective, companion) for epsilon
/// forms.
fn value_key(scal: &Scalarization, vec: &ObjectiveVector) -> (f64, f64) {
    match scal {
        Scalarization::WeightedSum { .. } => (scal.apply(vec), 0.0),
        Scalarization::Epsilon { objective, .. } => match objective {
            Objective::WaitingTime => (vec.waiting_time_hours, vec.cost),
            Objective::Cost => (vec.cost, vec.waiting_time_hours),
            Objective::Coverage => (-(vec.coverage as f64), vec.waiting_time_hours),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Toggle(usize),
    Retype(usize),
    ChangeMode(usize, usize),
    SwapPair(usize, usize),
}

fn move_list(n_locations: usize, n_modes: usize, neighborhood: &Neighborhood) -> Vec<Move> {
    let mut moves = Vec::new();
    if neighborhood.toggle_facility {
        moves.extend((0..n_locations).map(Move::Toggle));
    }
    if neighborhood.retype_facility {
        moves.extend((0..n_locations).map(Move::Retype));
    }
    if neighborhood.change_mode {
        for j in 0..n_locations {
            for k in 0..n_modes {
                moves.push(Move::ChangeMode(j, k));
            }
        }
    }
    if neighborhood.swap_pair {
        for a in 0..n_locations {
            for b in (a + 1)..n_locations {
                moves.push(Move::SwapPair(a, b));
            }
        }
    }
    moves
}

/// Applies a move; `None` when it would not change the configuration.
fn apply_move(config: &Configuration, mv: Move) -> Option<Configuration> {
    let mut states = config.states.clone();
    match mv {
        Move::Toggle(j) => {
            states[j] = match states[j] {
                LocationState::Closed => LocationState::Manufacturing(0),
                _ => LocationState::Closed,
            };
        }
        Move::Retype(j) => {
            states[j] = match states[j] {
                LocationState::Closed => return None,
                LocationState::Cryo => LocationState::Manufacturing(0),
                LocationState::Manufacturing(_) => LocationState::Cryo,
            };
        }
        Move::ChangeMode(j, k) => match states[j] {
            LocationState::Manufacturing(current) if current != k => {
                states[j] = LocationState::Manufacturing(k);
            }
            _ => return None,
        },
        Move::SwapPair(a, b) => {
            if states[a] == states[b] {
                return None;
            }
            states.swap(a, b);
        }
    }
    Some(Configuration { states })
}

/// One evaluated configuration with its comparison key.
#[derive(Debug, Clone)]
struct Evaluated {
    config: Configuration,
    outcome: Option<(Solution, ObjectiveVector)>,
    key: (f64, f64),
}

fn evaluate_config(
    instance: &Instance,
    config: Configuration,
    scal: &Scalarization,
    variant: ModelVariant,
) -> Evaluated {
    let outcome = exact::assignment_with_cap(instance, &config, scal, variant, ASSIGNMENT_NODE_CAP);
    let key = match &outcome {
        Some((_, vec)) => value_key(scal, vec),
        None => (f64::INFINITY, f64::INFINITY),
    };
    Evaluated { config, outcome, key }
}

/// How many orders can reach each location fresh, both legs within shelf
/// life; the restart bias opens well-connected locations more often.
fn fresh_reach(instance: &Instance) -> Vec<usize> {
    let tol = FEASIBILITY_TOLERANCE_HOURS;
    (0..instance.n_locations())
        .map(|j| {
            (0..instance.n_orders())
                .filter(|&i| {
                    instance.d_order_to_loc(i, j) <= instance.shelf_life(i) + tol
                        && instance.d_loc_to_order(j, i) <= instance.shelf_life(i) + tol
                })
                .count()
        })
        .collect()
}

fn random_config(instance: &Instance, reach: &[usize], rng: &mut ChaCha8Rng) -> Configuration {
    let max_reach = reach.iter().copied().max().unwrap_or(0).max(1) as f64;
    let states = (0..instance.n_locations())
        .map(|j| {
            let open_prob = 0.25 + 0.5 * reach[j] as f64 / max_reach;
            if rng.random::<f64>() < open_prob {
                if rng.random::<f64>() < 0.75 {
                    LocationState::Manufacturing(rng.random_range(0..instance.n_modes()))
                } else {
                    LocationState::Cryo
                }
            } else {
                LocationState::Closed
            }
        })
        .collect();
    Configuration { states }
}

/// Reassigns two random locations to random different states.
fn perturb(config: &Configuration, n_modes: usize, rng: &mut ChaCha8Rng) -> Configuration {
    let mut states = config.states.clone();
    let nj = states.len();
    for _ in 0..2.min(nj) {
        let j = rng.random_range(0..nj);
        let current = state_index(states[j]);
        let mut pick = rng.random_range(0..n_modes + 1);
        if pick >= current {
            pick += 1;
        }
        states[j] = state_from_index(pick);
    }
    Configuration { states }
}

fn state_index(state: LocationState) -> usize {
    match state {
        LocationState::Closed => 0,
        LocationState::Cryo => 1,
        LocationState::Manufacturing(k) => 2 + k,
    }
}

fn state_from_index(index: usize) -> LocationState {
    match index {
        0 => LocationState::Closed,
        1 => LocationState::Cryo,
        k_plus_2 => LocationState::Manufacturing(k_plus_2 - 2),
    }
}

/// First-improvement descent: scans moves in a fresh random order after every
/// accepted move, stops at a configuration none of whose neighbors improves
/// the key.
fn descend(
    instance: &Instance,
    start: Evaluated,
    scal: &Scalarization,
    variant: ModelVariant,
    neighborhood: &Neighborhood,
    rng: &mut ChaCha8Rng,
) -> Evaluated {
    let mut current = start;
    let mut moves = move_list(instance.n_locations(), instance.n_modes(), neighborhood);
    loop {
        moves.shuffle(rng);
        let mut improved = false;
        for &mv in &moves {
            let Some(candidate) = apply_move(&current.config, mv) else {
                continue;
            };
            let evaluated = evaluate_config(instance, candidate, scal, variant);
            if evaluated.key < current.key {
                current = evaluated;
                improved = true;
                break;
            }
        }
        if !improved {
            return current;
        }
    }
}

fn run_start(
    instance: &Instance,
    scal: &Scalarization,
    variant: ModelVariant,
    params: &SearchParams,
    reach: &[usize],
    start_idx: usize,
    warm: Option<&Configuration>,
) -> Evaluated {
    let mut rng = ChaCha8Rng::seed_from_u64(
        params.seed.wrapping_add((start_idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
    );
    let initial = match warm {
        Some(config) => config.clone(),
        None => random_config(instance, reach, &mut rng),
    };
    let evaluated = evaluate_config(instance, initial, scal, variant);
    let mut best = descend(instance, evaluated, scal, variant, &params.neighborhood, &mut rng);
    let mut stale_rounds = 0usize;
    while stale_rounds < params.max_no_improve {
        let kicked = perturb(&best.config, instance.n_modes(), &mut rng);
        let kicked = evaluate_config(instance, kicked, scal, variant);
        let candidate = descend(instance, kicked, scal, variant, &params.neighborhood, &mut rng);
        if candidate.key < best.key {
            best = candidate;
            stale_rounds = 0;
        } else {
            stale_rounds += 1;
        }
    }
    best
}

fn search(
    instance: &Instance,
    scal: &Scalarization,
    variant: ModelVariant,
    params: &SearchParams,
    warm: Option<&Configuration>,
) -> Result<Evaluated, HeuristicError> {
    scal.validate()?;
    if params.starts == 0 {
        return Err(HeuristicError::InvalidParams("starts must be at least 1".to_string()));
    }
    if params.max_no_improve == 0 {
        return Err(HeuristicError::InvalidParams(
            "max_no_improve must be at least 1".to_string(),
        ));
    }
    let reach = fresh_reach(instance);
    let total_starts = params.starts + usize::from(warm.is_some());
    let results = exec::map_indexed(total_starts, |idx| {
        let warm_for_start = (idx == params.starts).then_some(warm).flatten();
        run_start(instance, scal, variant, params, &reach, idx, warm_for_start)
    });
    results
        .into_iter()
        .enumerate()
        .filter(|(_, e)| e.outcome.is_some())
        .min_by(|(ia, a), (ib, b)| {
            a.key.partial_cmp(&b.key).expect("finite keys").then(ia.cmp(ib))
        })
        .map(|(_, e)| e)
        .ok_or(HeuristicError::Infeasible)
}

/// Multi-start first-improvement local search; the returned solution is
/// feasible and locally optimal in the declared neighborhood. Deterministic
/// given the seed, including under parallel starts.
pub fn local_search(
    instance: &Instance,
    scal: &Scalarization,
    variant: ModelVariant,
    params: &SearchParams,
) -> Result<(Solution, ObjectiveVector), HeuristicError> {
    let best = search(instance, scal, variant, params, None)?;
    Ok(best.outcome.expect("search only returns evaluations with outcomes"))
}

/// Heuristic Pareto front: the same epsilon-constraint walk as the exact
/// front, with [`local_search`] as the inner solver. The previous step's
/// configuration seeds one extra start per step. All points are marked
/// approximate.
pub fn front_heuristic(
    instance: &Instance,
    grid: &FrontGrid,
    variant: ModelVariant,
    params: &SearchParams,
) -> Result<ParetoFront, HeuristicError> {
    if params.starts == 0 || params.max_no_improve == 0 {
        return Err(HeuristicError::InvalidParams("counts must be at least 1".to_string()));
    }
    let mut warm: Option<Configuration> = None;
    let front = pareto::walk_sequential(instance.n_orders(), grid, |level, cost_bound| {
        let scal = pareto::step_scalarization(level, cost_bound);
        match search(instance, &scal, variant, params, warm.as_ref()) {
            Ok(best) => {
                warm = Some(best.config.clone());
                let (solution, objectives) =
                    best.outcome.expect("search only returns evaluations with outcomes");
                WalkStep::Point(solution, objectives, false)
            }
            Err(HeuristicError::Infeasible) => WalkStep::Infeasible,
            Err(e) => unreachable!("walk scalarizations and params are valid: {e}"),
        }
    });
    Ok(front)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{solve, SolveOptions};
    use crate::testutil::{spot_instance, tiny_instance};

    #[test]
    fn descent_reaches_the_all_closed_cost_optimum() {
        let inst = tiny_instance();
        let scal = Scalarization::weighted(0.0, 1.0, 0.0);
        let (solution, objectives) =
            local_search(&inst, &scal, ModelVariant::Canonical, &SearchParams::default()).unwrap();
        assert_eq!(objectives.cost, 0.0);
        assert!(solution.y_m.iter().all(|&b| !b) && solution.y_c.iter().all(|&b| !b));
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let inst = tiny_instance();
        let scal = Scalarization::weighted(1.0, 1.0, -300.0);
        let params = SearchParams { seed: 42, ..Default::default() };
        let a = local_search(&inst, &scal, ModelVariant::Canonical, &params).unwrap();
        let b = local_search(&inst, &scal, ModelVariant::Canonical, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn matches_the_exact_optimum_on_the_spot_instance() {
        let inst = spot_instance();
        for scal in [
            Scalarization::weighted(1.0, 1.0, -1000.0),
            Scalarization::weighted(0.5, 1.0, 0.0),
            Scalarization::epsilon(Objective::WaitingTime, None, None, Some(1)),
        ] {
            let exact = solve(&inst, &scal, &SolveOptions::default()).unwrap();
            let (_, objectives) =
                local_search(&inst, &scal, ModelVariant::Canonical, &SearchParams::default())
                    .unwrap();
            assert_eq!(
                value_key(&scal, &objectives),
                value_key(&scal, &exact.objectives),
                "heuristic missed the optimum for {scal:?}"
            );
        }
    }

    #[test]
    fn unsatisfiable_coverage_reports_infeasible() {
        let inst = spot_instance();
        let scal = Scalarization::epsilon(Objective::WaitingTime, None, None, Some(2));
        assert_eq!(
            local_search(&inst, &scal, ModelVariant::Canonical, &SearchParams::default()),
            Err(HeuristicError::Infeasible)
        );
    }

    #[test]
    fn zero_starts_is_rejected() {
        let inst = spot_instance();
        let scal = Scalarization::weighted(1.0, 1.0, 0.0);
        let params = SearchParams { starts: 0, ..Default::default() };
        assert!(matches!(
            local_search(&inst, &scal, ModelVariant::Canonical, &params),
            Err(HeuristicError::InvalidParams(_))
        ));
    }

    #[test]
    fn heuristic_front_is_feasible_and_contains_the_zero_point() {
        let inst = spot_instance();
        let front = front_heuristic(
            &inst,
            &FrontGrid::default(),
            ModelVariant::Canonical,
            &SearchParams::default(),
        )
        .unwrap();
        assert!(!front.points.is_empty());
        assert!(front.points.iter().any(|p| p.objectives.coverage == 0
            && p.objectives.cost == 0.0
            && p.objectives.waiting_time_hours == 0.0));
        for p in &front.points {
            assert!(!p.proved_optimal, "heuristic points are never proved optimal");
            let violations = crate::evaluator::check_feasible(&inst, &p.solution).unwrap();
            assert!(violations.iter().all(|v| v.severity != crate::evaluator::Severity::Error));
        }
    }

    #[test]
    fn restricted_neighborhood_still_descends() {
        let inst = tiny_instance();
        let scal = Scalarization::weighted(0.0, 1.0, 0.0);
        let params = SearchParams {
            neighborhood: Neighborhood {
                toggle_facility: true,
                retype_facility: false,
                change_mode: false,
                swap_pair: false,
            },
            ..Default::default()
        };
        let (_, objectives) =
            local_search(&inst, &scal, ModelVariant::Canonical, &params).unwrap();
        assert_eq!(objectives.cost, 0.0, "toggles alone close every facility");
    }
}
