//! Pareto front construction and front metrics.
//!
//! The three objectives (waiting time, cost, coverage) are swept by an
//! epsilon-constraint scheme: coverage is integral, so it becomes an exact
//! outer loop over levels `0..=n_orders`; within a level, waiting time is
//! minimized under a cost bound that adaptively walks down from the cost of
//! the unconstrained waiting-time minimum to the cheapest achievable cost,
//! landing exactly on each nondominated cost along the way. Weighted sums
//! would miss unsupported points here because the feasible objective set is
//! integral, hence non-convex.
//!
//! Per level the walk emits at most [`FrontGrid::cost_levels`] points; levels
//! richer than that are truncated (recorded on the front). Levels are
//! independent, so [`walk`] runs them as parallel cells under the `parallel`
//! feature; points from all levels are then merged through
//! [`nondominated_filter`].

use std::fmt;

use crate::exact::{self, SolveError, SolveOptions};
use crate::exec;
use crate::instance::Instance;
use crate::io;
use crate::scalarization::{EpsilonBounds, Objective, Scalarization};
use crate::solution::{ObjectiveVector, Solution};

/// Per-coverage-level resolution of the cost sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrontGrid {
    /// Maximum number of cost levels explored per coverage level.
    pub cost_levels: usize,
}

impl Default for FrontGrid {
    fn default() -> Self {
        FrontGrid { cost_levels: 16 }
    }
}

/// One front member.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontPoint {
    pub solution: Solution,
    pub objectives: ObjectiveVector,
    /// False when the producing solve could not prove optimality.
    pub proved_optimal: bool,
}

/// A mutually nondominated set of feasible solutions, sorted by
/// (coverage desc, cost asc, waiting time asc).
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub points: Vec<FrontPoint>,
    /// True when some coverage level hit its cost-level cap or a solve
    /// budget, so nondominated points may be missing.
    pub truncated: bool,
}

/// Outcome of one epsilon-constraint step, as produced by the inner solver.
pub(crate) enum WalkStep {
    /// A solution minimizing waiting time under the step's bounds.
    Point(Solution, ObjectiveVector, bool),
    /// No solution satisfies the step's bounds.
    Infeasible,
    /// The solver gave up before finding anything.
    Exhausted,
}

/// One coverage level's cost walk: waiting-time minima under a cost bound
/// that steps strictly downward (`None` on the first step) until the level is
/// infeasible or capped.
fn walk_level(
    grid: &FrontGrid,
    level: usize,
    solve_step: &(impl Fn(usize, Option<f64>) -> WalkStep + Sync),
) -> (Vec<FrontPoint>, bool) {
    let mut points: Vec<FrontPoint> = Vec::new();
    let mut truncated = false;
    let mut cost_bound: Option<f64> = None;
    let mut steps = 0usize;
    loop {
        if steps == grid.cost_levels {
            truncated = true;
            break;
        }
        steps += 1;
        match solve_step(level, cost_bound) {
            WalkStep::Point(solution, objectives, proved_optimal) => {
                cost_bound = Some(objectives.cost);
                points.push(FrontPoint { solution, objectives, proved_optimal });
            }
            WalkStep::Infeasible => break,
            WalkStep::Exhausted => {
                truncated = true;
                break;
            }
        }
    }
    (points, truncated)
}

/// Epsilon-constraint driver for stateless step solvers. Coverage levels are
/// independent cells, run in parallel under the `parallel` feature; results
/// are merged in level order, so the front is identical either way.
pub(crate) fn walk(
    n_orders: usize,
    grid: &FrontGrid,
    solve_step: impl Fn(usize, Option<f64>) -> WalkStep + Sync,
) -> ParetoFront {
    let levels = exec::map_indexed(n_orders + 1, |level| walk_level(grid, level, &solve_step));
    let mut points: Vec<FrontPoint> = Vec::new();
    let mut truncated = false;
    for (level_points, level_truncated) in levels {
        points.extend(level_points);
        truncated |= level_truncated;
    }
    ParetoFront { points: nondominated_filter(points), truncated }
}

/// Sequential variant of [`walk`] for stateful step solvers; the heuristic
/// threads warm starts from each step into the next.
pub(crate) fn walk_sequential(
    n_orders: usize,
    grid: &FrontGrid,
    mut solve_step: impl FnMut(usize, Option<f64>) -> WalkStep,
) -> ParetoFront {
    let mut points: Vec<FrontPoint> = Vec::new();
    let mut truncated = false;
    for level in 0..=n_orders {
        let mut cost_bound: Option<f64> = None;
        let mut steps = 0usize;
        loop {
            if steps == grid.cost_levels {
                truncated = true;
                break;
            }
            steps += 1;
            match solve_step(level, cost_bound) {
                WalkStep::Point(solution, objectives, proved_optimal) => {
                    cost_bound = Some(objectives.cost);
                    points.push(FrontPoint { solution, objectives, proved_optimal });
                }
                WalkStep::Infeasible => break,
                WalkStep::Exhausted => {
                    truncated = true;
                    break;
                }
            }
        }
    }
    let points = nondominated_filter(points);
    ParetoFront { points, truncated }
}

pub(crate) fn step_scalarization(level: usize, cost_bound: Option<f64>) -> Scalarization {
    Scalarization::Epsilon {
        objective: Objective::WaitingTime,
        bounds: EpsilonBounds {
            max_wait: None,
            max_cost: cost_bound,
            min_coverage: Some(level),
            cost_bound_exclusive: cost_bound.is_some(),
        },
    }
}

/// The exact Pareto front. On instances small enough for exhaustive
/// enumeration this equals the oracle's nondominated set whenever no level
/// holds more points than the grid allows (`truncated` reports that).
pub fn front_exact(
    instance: &Instance,
    grid: &FrontGrid,
    solve_options: &SolveOptions,
) -> ParetoFront {
    walk(instance.n_orders(), grid, |level, cost_bound| {
        let scal = step_scalarization(level, cost_bound);
        match exact::solve(instance, &scal, solve_options) {
            Ok(outcome) => {
                WalkStep::Point(outcome.solution, outcome.objectives, outcome.stats.proved_optimal)
            }
            Err(SolveError::Infeasible { .. }) => WalkStep::Infeasible,
            Err(SolveError::BudgetExhausted { .. }) => WalkStep::Exhausted,
            Err(SolveError::Scalarization(e)) => {
                unreachable!("walk scalarizations are valid by construction: {e}")
            }
        }
    })
}

/// Keeps exactly the nondominated points, dropping duplicates of the same
/// objective vector (first in sort order wins), and sorts the result by
/// (coverage desc, cost asc, waiting time asc).
pub fn nondominated_filter(mut points: Vec<FrontPoint>) -> Vec<FrontPoint> {
    points.sort_by(|a, b| {
        b.objectives
            .coverage
            .cmp(&a.objectives.coverage)
            .then(a.objectives.cost.partial_cmp(&b.objectives.cost).expect("finite cost"))
            .then(
                a.objectives
                    .waiting_time_hours
                    .partial_cmp(&b.objectives.waiting_time_hours)
                    .expect("finite waiting time"),
            )
    });
    let mut kept: Vec<FrontPoint> = Vec::new();
    for p in points {
        if kept
            .iter()
            .any(|k| k.objectives.dominates(&p.objectives) || k.objectives == p.objectives)
        {
            continue;
        }
        kept.retain(|k| !p.objectives.dominates(&k.objectives));
        kept.push(p);
    }
    kept.sort_by(|a, b| {
        b.objectives
            .coverage
            .cmp(&a.objectives.coverage)
            .then(a.objectives.cost.partial_cmp(&b.objectives.cost).expect("finite cost"))
            .then(
                a.objectives
                    .waiting_time_hours
                    .partial_cmp(&b.objectives.waiting_time_hours)
                    .expect("finite waiting time"),
            )
    });
    kept
}

#[derive(Debug, Clone, PartialEq)]
pub enum HypervolumeError {
    /// The point at this index is not weakly better than the reference in
    /// every objective.
    ReferenceNotDominated { index: usize },
}

impl fmt::Display for HypervolumeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HypervolumeError::ReferenceNotDominated { index } => {
                write!(f, "point {index} does not dominate the reference point")
            }
        }
    }
}

impl std::error::Error for HypervolumeError {}

/// Exact 3-D hypervolume of the region between the points and the reference
/// (the reference must be weakly worse than every point in all three
/// objectives). Computed as a sweep over coverage levels: coverage is
/// integral, so the dominated region is a stack of slabs, each weighted by
/// the 2-D staircase area of the points active at that coverage or better.
pub fn hypervolume(
    points: &[ObjectiveVector],
    reference: &ObjectiveVector,
) -> Result<f64, HypervolumeError> {
    // Work in minimized coordinates: (W, C, -V).
    let m_ref = -(reference.coverage as f64);
    let mut normalized: Vec<(f64, f64, f64)> = Vec::with_capacity(points.len());
    for (index, p) in points.iter().enumerate() {
        let m = -(p.coverage as f64);
        if p.waiting_time_hours > reference.waiting_time_hours
            || p.cost > reference.cost
            || m > m_ref
        {
            return Err(HypervolumeError::ReferenceNotDominated { index });
        }
        normalized.push((p.waiting_time_hours, p.cost, m));
    }
    normalized.sort_by(|a, b| a.2.partial_cmp(&b.2).expect("finite levels"));

    let mut volume = 0.0;
    let mut active: Vec<(f64, f64)> = Vec::new();
    let mut idx = 0;
    while idx < normalized.len() {
        let level = normalized[idx].2;
        while idx < normalized.len() && normalized[idx].2 == level {
            active.push((normalized[idx].0, normalized[idx].1));
            idx += 1;
        }
        let next_level = if idx < normalized.len() { normalized[idx].2 } else { m_ref };
        let thickness = next_level - level;
        if thickness > 0.0 {
            volume += thickness * staircase_area(&mut active, reference);
        }
    }
    Ok(volume)
}

/// Area of the union of boxes `[w, w_ref] x [c, c_ref]` over the active
/// points.
fn staircase_area(active: &mut [(f64, f64)], reference: &ObjectiveVector) -> f64 {
    active.sort_by(|a, b| a.partial_cmp(b).expect("finite objectives"));
    let mut area = 0.0;
    let mut c_bound = reference.cost;
    for &(w, c) in active.iter() {
        if c < c_bound {
            area += (reference.waiting_time_hours - w) * (c_bound - c);
            c_bound = c;
        }
    }
    area
}

/// Renders a front as CSV. `mean_wait_covered_hours` is total waiting time
/// divided by coverage, blank at coverage zero where the mean is undefined.
/// Row `sN` refers to the solution under key `sN` in the sidecar produced by
/// [`front_solutions_json`].
pub fn front_to_csv(front: &ParetoFront) -> String {
    let mut out = String::from("v,cost,waiting_hours,solution_id,optimality_flag,mean_wait_covered_hours\n");
    for (idx, p) in front.points.iter().enumerate() {
        let flag = if p.proved_optimal { "exact" } else { "approximate" };
        let mean = if p.objectives.coverage == 0 {
            String::new()
        } else {
            format!("{}", p.objectives.waiting_time_hours / p.objectives.coverage as f64)
        };
        out.push_str(&format!(
            "{},{},{},s{},{},{}\n",
            p.objectives.coverage, p.objectives.cost, p.objectives.waiting_time_hours, idx, flag, mean
        ));
    }
    out
}

/// The front's solutions as one canonical JSON object keyed by the
/// `solution_id` values used in the CSV.
pub fn front_solutions_json(front: &ParetoFront) -> String {
    let mut map = serde_json::Map::new();
    for (idx, p) in front.points.iter().enumerate() {
        map.insert(format!("s{idx}"), io::solution_value(&p.solution));
    }
    let mut out =
        serde_json::to_string(&serde_json::Value::Object(map)).expect("serialization cannot fail");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator;
    use crate::testutil::{spot_instance, tiny_instance};
    use crate::ModelVariant;

    fn exact_front(instance: &Instance) -> ParetoFront {
        front_exact(instance, &FrontGrid { cost_levels: usize::MAX }, &SolveOptions::default())
    }

    #[test]
    fn front_contains_the_zero_point_and_is_feasible() {
        let inst = tiny_instance();
        let front = exact_front(&inst);
        assert!(!front.truncated);
        assert!(front.points.iter().any(|p| p.objectives
            == ObjectiveVector { waiting_time_hours: 0.0, cost: 0.0, coverage: 0 }));
        for p in &front.points {
            let violations = evaluator::check_feasible(&inst, &p.solution).unwrap();
            assert!(violations
                .iter()
                .all(|v| v.severity != evaluator::Severity::Error));
            assert_eq!(evaluator::evaluate(&inst, &p.solution).unwrap(), p.objectives);
            assert!(p.proved_optimal);
        }
    }

    #[test]
    fn front_is_mutually_nondominated() {
        let inst = tiny_instance();
        let front = exact_front(&inst);
        for (a, pa) in front.points.iter().enumerate() {
            for (b, pb) in front.points.iter().enumerate() {
                if a != b {
                    assert!(!pa.objectives.dominates(&pb.objectives));
                    assert!(pa.objectives != pb.objectives);
                }
            }
        }
    }

    #[test]
    fn front_equals_oracle_front_on_the_spot_instance() {
        let inst = spot_instance();
        let front = exact_front(&inst);
        let mut got: Vec<ObjectiveVector> = front.points.iter().map(|p| p.objectives).collect();
        let mut want: Vec<ObjectiveVector> = crate::oracle::oracle_front(&inst, ModelVariant::Canonical)
            .unwrap()
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        let key = |v: &ObjectiveVector| (v.coverage, v.cost.to_bits(), v.waiting_time_hours.to_bits());
        got.sort_by_key(key);
        want.sort_by_key(key);
        assert_eq!(got, want);
    }

    #[test]
    fn cost_level_cap_truncates_and_yields_a_prefix() {
        let inst = tiny_instance();
        let full = exact_front(&inst);
        let capped = front_exact(&inst, &FrontGrid { cost_levels: 1 }, &SolveOptions::default());
        assert!(capped.points.len() < full.points.len() || !capped.truncated);
        for p in &capped.points {
            assert!(
                full.points.iter().any(|q| q.objectives == p.objectives),
                "capped walk found a point the full walk missed: {:?}",
                p.objectives
            );
        }
    }

    #[test]
    fn filter_keeps_incomparable_and_drops_dominated() {
        let mk = |w: f64, c: f64, v: usize| FrontPoint {
            solution: Solution::all_closed(1, 1, 1),
            objectives: ObjectiveVector { waiting_time_hours: w, cost: c, coverage: v },
            proved_optimal: true,
        };
        let kept = nondominated_filter(vec![mk(1.0, 1.0, 1), mk(2.0, 2.0, 1)]);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].objectives.cost, 1.0);

        let kept = nondominated_filter(vec![mk(1.0, 2.0, 1), mk(2.0, 1.0, 1)]);
        assert_eq!(kept.len(), 2);

        let kept = nondominated_filter(vec![mk(1.0, 1.0, 1), mk(1.0, 1.0, 1)]);
        assert_eq!(kept.len(), 1, "duplicate vectors collapse to one");
    }

    #[test]
    fn filter_sorts_by_coverage_then_cost_then_wait() {
        let mk = |w: f64, c: f64, v: usize| FrontPoint {
            solution: Solution::all_closed(1, 1, 1),
            objectives: ObjectiveVector { waiting_time_hours: w, cost: c, coverage: v },
            proved_optimal: true,
        };
        let kept = nondominated_filter(vec![
            mk(0.0, 0.0, 0),
            mk(5.0, 9.0, 2),
            mk(9.0, 5.0, 2),
            mk(1.0, 3.0, 1),
        ]);
        let order: Vec<(usize, f64)> =
            kept.iter().map(|p| (p.objectives.coverage, p.objectives.cost)).collect();
        assert_eq!(order, vec![(2, 5.0), (2, 9.0), (1, 3.0), (0, 0.0)]);
    }

    #[test]
    fn single_point_hypervolume_is_the_box_volume() {
        let p = ObjectiveVector { waiting_time_hours: 1.0, cost: 2.0, coverage: 3 };
        let r = ObjectiveVector { waiting_time_hours: 4.0, cost: 6.0, coverage: 1 };
        // (4-1) * (6-2) * (3-1) = 24.
        assert_eq!(hypervolume(&[p], &r).unwrap(), 24.0);
    }

    #[test]
    fn boundary_point_contributes_zero() {
        let p = ObjectiveVector { waiting_time_hours: 4.0, cost: 2.0, coverage: 3 };
        let r = ObjectiveVector { waiting_time_hours: 4.0, cost: 6.0, coverage: 1 };
        assert_eq!(hypervolume(&[p], &r).unwrap(), 0.0);
    }

    #[test]
    fn overlapping_boxes_union_correctly() {
        let a = ObjectiveVector { waiting_time_hours: 0.0, cost: 2.0, coverage: 1 };
        let b = ObjectiveVector { waiting_time_hours: 1.0, cost: 0.0, coverage: 1 };
        let r = ObjectiveVector { waiting_time_hours: 3.0, cost: 3.0, coverage: 0 };
        // 2-D union area 7 (3x1 + 2x3 - 2x1 overlap), slab thickness 1.
        assert_eq!(hypervolume(&[a, b], &r).unwrap(), 7.0);
    }

    #[test]
    fn coverage_levels_stack_slabs() {
        let low = ObjectiveVector { waiting_time_hours: 0.0, cost: 0.0, coverage: 1 };
        let high = ObjectiveVector { waiting_time_hours: 0.0, cost: 2.0, coverage: 2 };
        let r = ObjectiveVector { waiting_time_hours: 4.0, cost: 4.0, coverage: 0 };
        // Slab at coverage >= 2: only `high`, area (4-0)*(4-2) = 8, thickness 1.
        // Slab at coverage >= 1: both, area 4*4 = 16, thickness 1.
        assert_eq!(hypervolume(&[low, high], &r).unwrap(), 24.0);
    }

    #[test]
    fn invalid_reference_is_rejected() {
        let p = ObjectiveVector { waiting_time_hours: 5.0, cost: 2.0, coverage: 3 };
        let r = ObjectiveVector { waiting_time_hours: 4.0, cost: 6.0, coverage: 1 };
        assert_eq!(
            hypervolume(&[p], &r),
            Err(HypervolumeError::ReferenceNotDominated { index: 0 })
        );
    }

    #[test]
    fn empty_front_has_zero_hypervolume() {
        let r = ObjectiveVector { waiting_time_hours: 4.0, cost: 6.0, coverage: 0 };
        assert_eq!(hypervolume(&[], &r).unwrap(), 0.0);
    }

    #[test]
    fn csv_has_header_and_mean_column() {
        let inst = spot_instance();
        let front = exact_front(&inst);
        let csv = front_to_csv(&front);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "v,cost,waiting_hours,solution_id,optimality_flag,mean_wait_covered_hours"
        );
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), front.points.len());
        for (row, p) in rows.iter().zip(&front.points) {
            let fields: Vec<&str> = row.split(',').collect();
            assert_eq!(fields.len(), 6);
            assert_eq!(fields[0], p.objectives.coverage.to_string());
            assert_eq!(fields[4], "exact");
            if p.objectives.coverage == 0 {
                assert!(fields[5].is_empty());
            } else {
                let mean: f64 = fields[5].parse().unwrap();
                assert_eq!(
                    mean,
                    p.objectives.waiting_time_hours / p.objectives.coverage as f64
                );
            }
        }
    }

    #[test]
    fn sidecar_lists_each_solution_under_its_row_id() {
        let inst = spot_instance();
        let front = exact_front(&inst);
        let sidecar = front_solutions_json(&front);
        let value: serde_json::Value = serde_json::from_str(&sidecar).unwrap();
        let obj = value.as_object().unwrap();
        assert_eq!(obj.len(), front.points.len());
        for idx in 0..front.points.len() {
            let sol = obj.get(&format!("s{idx}")).expect("row id present");
            let parsed = crate::io::solution_from_json(&sol.to_string()).unwrap();
            assert_eq!(parsed, front.points[idx].solution);
        }
    }
}
