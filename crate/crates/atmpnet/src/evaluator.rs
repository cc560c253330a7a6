//! Feasibility checking and objective evaluation.
//!
//! The three objectives:
//!
//! * waiting time `W`: per covered order, the failure-inflated sum of
//!   time-to-manufacturer and production time, plus the return leg. The
//!   time-to-manufacturer of a fresh order is the direct pickup leg; for a
//!   frozen order it is the leg into the cryopreservation site plus the leg
//!   onward to the manufacturer, with the (frozen) pickup leg itself excused
//!   from the shelf-life clock.
//! * cost `C`: facility setup plus failure-inflated per-order operational
//!   cost, using fresh or frozen processing rates as dictated by the route.
//! * coverage `V`: the number of orders assigned to a manufacturer.
//!
//! Expected manufacturing repeats after a failed run scale time and
//! operational cost by `1 + failure_rate`.

use std::fmt;

use crate::instance::{Instance, FEASIBILITY_TOLERANCE_HOURS};
use crate::solution::{ObjectiveVector, Solution};

/// Names the constraint family a violation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintTag {
    /// Fresh pickup leg must fit the shelf life unless the order is frozen.
    FreshTo,
    /// Leg into the cryopreservation site must fit the cryo leg limit.
    CryoLeg,
    /// Return leg must fit the shelf life unless the order is frozen.
    FreshFrom,
    /// At most one manufacturing assignment per order.
    OneManufacturing,
    /// Cryo assignments only for frozen orders, and at most one.
    OneCryo,
    /// Manufacturing assignments only to open manufacturing facilities.
    ManufacturingAssignOpen,
    /// Cryo assignments only to open cryopreservation facilities.
    CryoAssignOpen,
    /// A location hosts at most one facility type.
    OneFacilityType,
    /// Open manufacturing facilities run exactly one mode, closed ones none.
    ModeIffManufacturing,
    /// A frozen covered order without a cryopreservation assignment: allowed
    /// by the constraint set but almost surely a modelling mistake, because
    /// the frozen transport leg then takes zero time.
    FrozenWithoutCryo,
}

impl ConstraintTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstraintTag::FreshTo => "fresh_to",
            ConstraintTag::CryoLeg => "cryo_leg",
            ConstraintTag::FreshFrom => "fresh_from",
            ConstraintTag::OneManufacturing => "one_manufacturing",
            ConstraintTag::OneCryo => "one_cryo",
            ConstraintTag::ManufacturingAssignOpen => "manufacturing_assign_open",
            ConstraintTag::CryoAssignOpen => "cryo_assign_open",
            ConstraintTag::OneFacilityType => "one_facility_type",
            ConstraintTag::ModeIffManufacturing => "mode_iff_manufacturing",
            ConstraintTag::FrozenWithoutCryo => "frozen_without_cryo",
        }
    }
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    /// The solution is outside the feasible set.
    Error,
    /// The solution is feasible but suspicious.
    Warning,
}

/// One violated (or suspicious) constraint, with the indices it applies to.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintViolation {
    pub tag: ConstraintTag,
    pub severity: Severity,
    pub order: Option<usize>,
    pub location: Option<usize>,
    pub detail: String,
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag)?;
        if let Some(i) = self.order {
            write!(f, " order {i}")?;
        }
        if let Some(j) = self.location {
            write!(f, " location {j}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Why an evaluation could not produce a number.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    /// Solution arrays do not have the shapes the instance requires.
    ShapeMismatch { expected: (usize, usize, usize) },
    /// The solution violates at least one hard constraint.
    Infeasible(Vec<ConstraintViolation>),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::ShapeMismatch { expected: (ni, nj, nk) } => write!(
                f,
                "solution shape does not match instance with {ni} orders, {nj} locations, {nk} modes"
            ),
            EvalError::Infeasible(violations) => {
                write!(f, "solution is infeasible ({} violations)", violations.len())
            }
        }
    }
}

impl std::error::Error for EvalError {}

fn require_shape(instance: &Instance, solution: &Solution) -> Result<(), EvalError> {
    if solution.shape_matches(instance) {
        Ok(())
    } else {
        Err(EvalError::ShapeMismatch {
            expected: (instance.n_orders(), instance.n_locations(), instance.n_modes()),
        })
    }
}

/// Checks every constraint and returns all violations found, hard errors and
/// warnings alike. An empty result means feasible with nothing suspicious;
/// a result with only `Warning` entries is still feasible.
///
/// Travel-time comparisons use [`FEASIBILITY_TOLERANCE_HOURS`] of absolute
/// slack; logical constraints are exact.
pub fn check_feasible(
    instance: &Instance,
    solution: &Solution,
) -> Result<Vec<ConstraintViolation>, EvalError> {
    require_shape(instance, solution)?;
    let ni = instance.n_orders();
    let nj = instance.n_locations();
    let nk = instance.n_modes();
    let tol = FEASIBILITY_TOLERANCE_HOURS;
    let mut out = Vec::new();

    let violation = |tag, severity, order, location, detail: String| ConstraintViolation {
        tag,
        severity,
        order,
        location,
        detail,
    };

    for i in 0..ni {
        let z = solution.z[i];
        let relax = if z { instance.big_t_hours() } else { 0.0 };
        let shelf = instance.shelf_life(i);

        let mut pickup = 0.0;
        let mut ret = 0.0;
        let mut n_mfg = 0usize;
        for j in 0..nj {
            if solution.x_m[i][j] {
                pickup += instance.d_order_to_loc(i, j);
                ret += instance.d_loc_to_order(j, i);
                n_mfg += 1;
            }
        }
        if pickup > shelf + relax + tol {
            out.push(violation(
                ConstraintTag::FreshTo,
                Severity::Error,
                Some(i),
                None,
                format!("pickup leg {pickup} h exceeds shelf life {shelf} h"),
            ));
        }
        if ret > shelf + relax + tol {
            out.push(violation(
                ConstraintTag::FreshFrom,
                Severity::Error,
                Some(i),
                None,
                format!("return leg {ret} h exceeds shelf life {shelf} h"),
            ));
        }
        if n_mfg > 1 {
            out.push(violation(
                ConstraintTag::OneManufacturing,
                Severity::Error,
                Some(i),
                None,
                format!("assigned to {n_mfg} manufacturing facilities"),
            ));
        }

        let mut cryo_leg = 0.0;
        let mut n_cryo = 0usize;
        for j in 0..nj {
            if solution.x_c[i][j] {
                cryo_leg += instance.d_order_to_loc(i, j);
                n_cryo += 1;
            }
        }
        if cryo_leg > instance.cryo_leg_limit_hours() + tol {
            out.push(violation(
                ConstraintTag::CryoLeg,
                Severity::Error,
                Some(i),
                None,
                format!(
                    "cryopreservation leg {cryo_leg} h exceeds the {} h limit",
                    instance.cryo_leg_limit_hours()
                ),
            ));
        }
        let z_count = usize::from(z);
        if n_cryo > z_count {
            out.push(violation(
                ConstraintTag::OneCryo,
                Severity::Error,
                Some(i),
                None,
                format!("{n_cryo} cryopreservation assignments but frozen flag is {z_count}"),
            ));
        }
        if z && n_cryo == 0 {
            out.push(violation(
                ConstraintTag::FrozenWithoutCryo,
                Severity::Warning,
                Some(i),
                None,
                "frozen order has no cryopreservation assignment, so its frozen leg takes zero time"
                    .to_string(),
            ));
        }

        for j in 0..nj {
            if solution.x_m[i][j] && !solution.y_m[j] {
                out.push(violation(
                    ConstraintTag::ManufacturingAssignOpen,
                    Severity::Error,
                    Some(i),
                    Some(j),
                    "assigned to a location with no manufacturing facility".to_string(),
                ));
            }
            if solution.x_c[i][j] && !solution.y_c[j] {
                out.push(violation(
                    ConstraintTag::CryoAssignOpen,
                    Severity::Error,
                    Some(i),
                    Some(j),
                    "assigned to a location with no cryopreservation facility".to_string(),
                ));
            }
        }
    }

    for j in 0..nj {
        if solution.y_m[j] && solution.y_c[j] {
            out.push(violation(
                ConstraintTag::OneFacilityType,
                Severity::Error,
                None,
                Some(j),
                "hosts both facility types".to_string(),
            ));
        }
        let n_modes = (0..nk).filter(|&k| solution.m[j][k]).count();
        let expected = usize::from(solution.y_m[j]);
        if n_modes != expected {
            out.push(violation(
                ConstraintTag::ModeIffManufacturing,
                Severity::Error,
                None,
                Some(j),
                format!("{n_modes} modes selected, expected {expected}"),
            ));
        }
    }

    Ok(out)
}

fn require_feasible(instance: &Instance, solution: &Solution) -> Result<(), EvalError> {
    let violations = check_feasible(instance, solution)?;
    let errors: Vec<ConstraintViolation> = violations
        .into_iter()
        .filter(|v| v.severity == Severity::Error)
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(EvalError::Infeasible(errors))
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn waiting_time_unchecked(instance: &Instance, solution: &Solution) -> f64 {
    let ni = instance.n_orders();
    let nj = instance.n_locations();
    let nk = instance.n_modes();
    let mut total = 0.0;
    for i in 0..ni {
        let z = indicator(solution.z[i]);
        for j in 0..nj {
            if !solution.x_m[i][j] {
                continue;
            }
            let time_to_manufacturer = (1.0 - z) * instance.d_order_to_loc(i, j)
                + z * {
                    let mut via_cryo = 0.0;
                    for jp in 0..nj {
                        via_cryo += indicator(solution.x_c[i][jp])
                            * (instance.d_order_to_loc(i, jp) + instance.d_loc_to_loc(jp, j));
                    }
                    via_cryo
                };
            let mut production = 0.0;
            let mut repeat_factor = 1.0;
            for k in 0..nk {
                let m = indicator(solution.m[j][k]);
                production +=
                    m * ((1.0 - z) * instance.prod_fresh(k) + z * instance.prod_frozen(k));
                repeat_factor += m * instance.failure_rate(i, k);
            }
            total += repeat_factor * (time_to_manufacturer + production)
                + instance.d_loc_to_order(j, i);
        }
    }
    total
}

fn total_cost_unchecked(instance: &Instance, solution: &Solution) -> f64 {
    let ni = instance.n_orders();
    let nj = instance.n_locations();
    let nk = instance.n_modes();
    let mut setup = 0.0;
    for j in 0..nj {
        setup += indicator(solution.y_m[j]) * instance.setup_manufacturing(j)
            + indicator(solution.y_c[j]) * instance.setup_cryo(j);
    }
    let mut operations = 0.0;
    for i in 0..ni {
        let z = indicator(solution.z[i]);
        for j in 0..nj {
            if !solution.x_m[i][j] {
                continue;
            }
            for k in 0..nk {
                if !solution.m[j][k] {
                    continue;
                }
                operations += (1.0 + instance.failure_rate(i, k))
                    * ((1.0 - z) * instance.op_cost_fresh(i, j, k)
                        + z * instance.op_cost_frozen(i, j, k));
            }
        }
    }
    setup + operations
}

fn coverage_unchecked(solution: &Solution) -> usize {
    solution.x_m.iter().map(|row| row.iter().filter(|&&x| x).count()).sum()
}

/// Total waiting time `W` in hours. Fails on shape mismatch or hard
/// infeasibility.
pub fn waiting_time(instance: &Instance, solution: &Solution) -> Result<f64, EvalError> {
    require_feasible(instance, solution)?;
    Ok(waiting_time_unchecked(instance, solution))
}

/// Total cost `C` (setup plus operations). Fails on shape mismatch or hard
/// infeasibility.
pub fn total_cost(instance: &Instance, solution: &Solution) -> Result<f64, EvalError> {
    require_feasible(instance, solution)?;
    Ok(total_cost_unchecked(instance, solution))
}

/// Coverage `V`: the number of orders with a manufacturing assignment. Only
/// requires matching shapes.
pub fn coverage(instance: &Instance, solution: &Solution) -> Result<usize, EvalError> {
    require_shape(instance, solution)?;
    Ok(coverage_unchecked(solution))
}

/// All three objectives of a feasible solution.
pub fn evaluate(instance: &Instance, solution: &Solution) -> Result<ObjectiveVector, EvalError> {
    require_feasible(instance, solution)?;
    Ok(ObjectiveVector {
        waiting_time_hours: waiting_time_unchecked(instance, solution),
        cost: total_cost_unchecked(instance, solution),
        coverage: coverage_unchecked(solution),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{
        spot_instance, spot_instance_with_failure, spot_instance_with_shelf_life, tiny_instance,
    };

    /// Fresh route: pickup 2 h, production 10 h, return 3 h, no failures.
    #[test]
    fn fresh_waiting_time_is_pickup_plus_production_plus_return() {
        let inst = spot_instance();
        let mut sol = Solution::all_closed(inst.n_orders(), inst.n_locations(), inst.n_modes());
        sol.y_m[0] = true;
        sol.m[0][0] = true;
        sol.x_m[0][0] = true;
        assert_eq!(waiting_time(&inst, &sol).unwrap(), 15.0);
    }

    /// A 50 % failure rate inflates pickup + production by 1.5:
    /// 1.5 * (2 + 10) + 3 = 21.
    #[test]
    fn failure_rate_inflates_travel_and_production() {
        let inst = spot_instance_with_failure(0.5);
        let mut sol = Solution::all_closed(inst.n_orders(), inst.n_locations(), inst.n_modes());
        sol.y_m[0] = true;
        sol.m[0][0] = true;
        sol.x_m[0][0] = true;
        assert_eq!(waiting_time(&inst, &sol).unwrap(), 21.0);
    }

    /// Frozen route through the cryo site: 1 + 2 + 5 + 3 = 11 with frozen
    /// production 5 h; the direct pickup leg no longer appears.
    #[test]
    fn frozen_waiting_time_routes_through_cryo_site() {
        let inst = spot_instance();
        let mut sol = Solution::all_closed(inst.n_orders(), inst.n_locations(), inst.n_modes());
        sol.y_m[0] = true;
        sol.m[0][0] = true;
        sol.x_m[0][0] = true;
        sol.y_c[1] = true;
        sol.x_c[0][1] = true;
        sol.z[0] = true;
        assert_eq!(waiting_time(&inst, &sol).unwrap(), 11.0);
    }

    /// Setup 100 + 40 plus failure-inflated operations 1.1 * 20 = 162.
    #[test]
    fn cost_sums_setup_and_inflated_operations() {
        let inst = spot_instance_with_failure(0.1);
        let mut sol = Solution::all_closed(inst.n_orders(), inst.n_locations(), inst.n_modes());
        sol.y_m[0] = true;
        sol.m[0][0] = true;
        sol.x_m[0][0] = true;
        sol.y_c[1] = true;
        sol.x_c[0][1] = true;
        sol.z[0] = true;
        let c = total_cost(&inst, &sol).unwrap();
        assert!((c - 162.0).abs() <= 1e-9, "expected 162, got {c}");
    }

    #[test]
    fn all_closed_evaluates_to_zero() {
        let inst = tiny_instance();
        let sol = Solution::all_closed(inst.n_orders(), inst.n_locations(), inst.n_modes());
        let vec = evaluate(&inst, &sol).unwrap();
        assert_eq!(vec.waiting_time_hours, 0.0);
        assert_eq!(vec.cost, 0.0);
        assert_eq!(vec.coverage, 0);
    }

    #[test]
    fn uncovered_orders_contribute_nothing() {
        let inst = spot_instance();
        let mut sol = Solution::all_closed(inst.n_orders(), inst.n_locations(), inst.n_modes());
        sol.y_m[0] = true;
        sol.m[0][0] = true;
        let vec = evaluate(&inst, &sol).unwrap();
        assert_eq!(vec.waiting_time_hours, 0.0);
        assert_eq!(vec.cost, 100.0, "setup is still paid for the open facility");
        assert_eq!(vec.coverage, 0);
    }

    #[test]
    fn shelf_life_violation_on_pickup_is_tagged_fresh_to() {
        let inst = spot_instance_with_shelf_life(0.5);
        let mut sol = Solution::all_closed(inst.n_orders(), inst.n_locations(), inst.n_modes());
        sol.y_m[0] = true;
        sol.m[0][0] = true;
        sol.x_m[0][0] = true;
        let violations = check_feasible(&inst, &sol).unwrap();
        assert!(
            violations.iter().any(|v| v.tag == ConstraintTag::FreshTo && v.order == Some(0)),
            "expected a fresh_to violation, got {violations:?}"
        );
        assert!(matches!(waiting_time(&inst, &sol), Err(EvalError::Infeasible(_))));
    }

    /// Location 1 is one hour out but nine hours back, so only the return leg
    /// breaks the three-hour shelf life.
    #[test]
    fn shelf_life_violation_on_return_is_tagged_fresh_from() {
        let inst = spot_instance();
        let mut sol = Solution::all_closed(inst.n_orders(), inst.n_locations(), inst.n_modes());
        sol.y_m[1] = true;
        sol.m[1][0] = true;
        sol.x_m[0][1] = true;
        let violations = check_feasible(&inst, &sol).unwrap();
        assert!(
            violations.iter().any(|v| v.tag == ConstraintTag::FreshFrom && v.order == Some(0)),
            "expected a fresh_from violation, got {violations:?}"
        );
        assert!(
            !violations.iter().any(|v| v.tag == ConstraintTag::FreshTo),
            "the pickup leg fits the shelf life, got {violations:?}"
        );
    }

    #[test]
    fn frozen_flag_lifts_shelf_life_constraints() {
        let inst = spot_instance();
        let mut sol = Solution::all_closed(inst.n_orders(), inst.n_locations(), inst.n_modes());
        sol.y_m[1] = true;
        sol.m[1][0] = true;
        sol.x_m[0][1] = true;
        sol.y_c[0] = true;
        sol.x_c[0][0] = true;
        sol.z[0] = true;
        let violations = check_feasible(&inst, &sol).unwrap();
        assert!(
            violations.iter().all(|v| v.severity != Severity::Error),
            "frozen routing should be feasible, got {violations:?}"
        );
    }

    #[test]
    fn frozen_without_cryo_is_a_warning_not_an_error() {
        let inst = spot_instance();
        let mut sol = Solution::all_closed(inst.n_orders(), inst.n_locations(), inst.n_modes());
        sol.y_m[0] = true;
        sol.m[0][0] = true;
        sol.x_m[0][0] = true;
        sol.z[0] = true;
        let violations = check_feasible(&inst, &sol).unwrap();
        assert!(violations
            .iter()
            .any(|v| v.tag == ConstraintTag::FrozenWithoutCryo && v.severity == Severity::Warning));
        assert!(violations.iter().all(|v| v.severity != Severity::Error));
        assert!(waiting_time(&inst, &sol).is_ok(), "warnings must not block evaluation");
    }

    #[test]
    fn assignment_to_closed_facility_is_rejected() {
        let inst = spot_instance();
        let mut sol = Solution::all_closed(inst.n_orders(), inst.n_locations(), inst.n_modes());
        sol.x_m[0][0] = true;
        let violations = check_feasible(&inst, &sol).unwrap();
        assert!(violations
            .iter()
            .any(|v| v.tag == ConstraintTag::ManufacturingAssignOpen && v.location == Some(0)));
    }

    #[test]
    fn both_facility_types_at_one_location_is_rejected() {
        let inst = spot_instance();
        let mut sol = Solution::all_closed(inst.n_orders(), inst.n_locations(), inst.n_modes());
        sol.y_m[0] = true;
        sol.y_c[0] = true;
        sol.m[0][0] = true;
        let violations = check_feasible(&inst, &sol).unwrap();
        assert!(violations.iter().any(|v| v.tag == ConstraintTag::OneFacilityType));
    }

    #[test]
    fn open_manufacturer_needs_exactly_one_mode() {
        let inst = spot_instance();
        let mut sol = Solution::all_closed(inst.n_orders(), inst.n_locations(), inst.n_modes());
        sol.y_m[0] = true;
        let violations = check_feasible(&inst, &sol).unwrap();
        assert!(violations
            .iter()
            .any(|v| v.tag == ConstraintTag::ModeIffManufacturing && v.location == Some(0)));
    }

    #[test]
    fn shape_mismatch_is_an_error_not_a_violation() {
        let inst = spot_instance();
        let sol = Solution::all_closed(inst.n_orders() + 1, inst.n_locations(), inst.n_modes());
        assert!(matches!(
            check_feasible(&inst, &sol),
            Err(EvalError::ShapeMismatch { expected: _ })
        ));
    }
}
