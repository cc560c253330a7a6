//! Decision variables and objective values.

use crate::instance::Instance;

/// A full variable assignment: which locations open as what, which orders are
/// served where, whether each order ships fresh or frozen, and which mode each
/// manufacturing facility runs.
///
/// Shapes: `y_m`, `y_c` over locations; `x_m`, `x_c` over `[order][location]`;
/// `z` over orders; `m` over `[location][mode]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    /// Location opens as a manufacturing facility.
    pub y_m: Vec<bool>,
    /// Location opens as a cryopreservation facility.
    pub y_c: Vec<bool>,
    /// Order is manufactured at location.
    pub x_m: Vec<Vec<bool>>,
    /// Order's starting material is cryopreserved at location.
    pub x_c: Vec<Vec<bool>>,
    /// Order ships frozen (goes through cryopreservation).
    pub z: Vec<bool>,
    /// Manufacturing facility at location runs mode.
    pub m: Vec<Vec<bool>>,
}

impl Solution {
    /// The do-nothing solution: every location closed, every order uncovered.
    pub fn all_closed(n_orders: usize, n_locations: usize, n_modes: usize) -> Self {
        Solution {
            y_m: vec![false; n_locations],
            y_c: vec![false; n_locations],
            x_m: vec![vec![false; n_locations]; n_orders],
            x_c: vec![vec![false; n_locations]; n_orders],
            z: vec![false; n_orders],
            m: vec![vec![false; n_modes]; n_locations],
        }
    }

    /// Whether every array has the shape the instance expects.
    pub fn shape_matches(&self, instance: &Instance) -> bool {
        let ni = instance.n_orders();
        let nj = instance.n_locations();
        let nk = instance.n_modes();
        self.y_m.len() == nj
            && self.y_c.len() == nj
            && self.z.len() == ni
            && self.x_m.len() == ni
            && self.x_m.iter().all(|row| row.len() == nj)
            && self.x_c.len() == ni
            && self.x_c.iter().all(|row| row.len() == nj)
            && self.m.len() == nj
            && self.m.iter().all(|row| row.len() == nk)
    }
}

/// Objective values of a solution: total waiting time and total cost are
/// minimized, coverage (number of served orders) is maximized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveVector {
    pub waiting_time_hours: f64,
    pub cost: f64,
    pub coverage: usize,
}

impl ObjectiveVector {
    /// Pareto dominance: no worse in all three objectives and strictly better
    /// in at least one. Lower waiting time and cost are better, higher
    /// coverage is better. A vector never dominates itself.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        let no_worse = self.waiting_time_hours <= other.waiting_time_hours
            && self.cost <= other.cost
            && self.coverage >= other.coverage;
        let strictly_better = self.waiting_time_hours < other.waiting_time_hours
            || self.cost < other.cost
            || self.coverage > other.coverage;
        no_worse && strictly_better
    }
}
