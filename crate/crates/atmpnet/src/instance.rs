//! Problem data: patient orders, candidate facility locations, manufacturing
//! modes, and the travel-time matrix that ties them together.
//!
//! Orders are indexed `0..n_orders`, locations `0..n_locations`, modes
//! `0..n_modes`. The travel matrix is indexed over orders first, then
//! locations, so node `i` is order `i` and node `n_orders + j` is location `j`.
//! Travel times may be asymmetric.

use std::fmt;

/// Default cap on the pickup-to-cryopreservation leg, in hours.
pub const DEFAULT_CRYO_LEG_LIMIT_HOURS: f64 = 24.0;

/// Absolute tolerance applied to travel-time feasibility comparisons.
pub const FEASIBILITY_TOLERANCE_HOURS: f64 = 1e-9;

/// A patient order: starting material is picked up at the patient site and
/// the finished product is returned there.
#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    pub id: usize,
    /// How long the fresh starting material survives transport, in hours.
    pub shelf_life_hours: f64,
}

/// A candidate site that can host either a manufacturing facility or a
/// cryopreservation facility, but not both.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateLocation {
    pub id: usize,
    pub setup_cost_manufacturing: f64,
    pub setup_cost_cryo: f64,
}

/// A manufacturing mode (technology choice) selectable per manufacturing
/// facility. Production of frozen material is typically slower because it
/// includes thawing.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub id: usize,
    pub production_time_fresh_hours: f64,
    pub production_time_frozen_hours: f64,
}

/// Dense travel-time matrix over orders and locations, in hours.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelMatrix {
    entries: Vec<Vec<f64>>,
}

impl TravelMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Self {
        TravelMatrix { entries }
    }

    pub fn node_count(&self) -> usize {
        self.entries.len()
    }

    /// Travel time from node `from` to node `to`, in hours.
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from][to]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn max_entry(&self) -> f64 {
        let mut max = 0.0_f64;
        for row in &self.entries {
            for &v in row {
                if v > max {
                    max = v;
                }
            }
        }
        max
    }
}

/// A complete problem instance.
///
/// Cost tensors are indexed `[order][location][mode]`, failure rates
/// `[order][mode]`. `big_t_hours` is the deactivation constant that lifts the
/// shelf-life constraints for orders routed through cryopreservation; it must
/// exceed every travel time in the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    orders: Vec<Order>,
    locations: Vec<CandidateLocation>,
    modes: Vec<Mode>,
    travel: TravelMatrix,
    op_cost_fresh: Vec<Vec<Vec<f64>>>,
    op_cost_frozen: Vec<Vec<Vec<f64>>>,
    failure_rate: Vec<Vec<f64>>,
    big_t_hours: f64,
    cryo_leg_limit_hours: f64,
}

impl Instance {
    /// Assembles an instance without validating it; call [`Instance::validate`]
    /// to obtain the list of structural problems, if any.
    ///
    /// `big_t_hours` defaults to the largest travel time plus one hour and
    /// `cryo_leg_limit_hours` to [`DEFAULT_CRYO_LEG_LIMIT_HOURS`].
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        orders: Vec<Order>,
        locations: Vec<CandidateLocation>,
        modes: Vec<Mode>,
        travel: TravelMatrix,
        op_cost_fresh: Vec<Vec<Vec<f64>>>,
        op_cost_frozen: Vec<Vec<Vec<f64>>>,
        failure_rate: Vec<Vec<f64>>,
        big_t_hours: Option<f64>,
        cryo_leg_limit_hours: Option<f64>,
    ) -> Self {
        let big_t_hours = big_t_hours.unwrap_or_else(|| travel.max_entry() + 1.0);
        let cryo_leg_limit_hours = cryo_leg_limit_hours.unwrap_or(DEFAULT_CRYO_LEG_LIMIT_HOURS);
        Instance {
            orders,
            locations,
            modes,
            travel,
            op_cost_fresh,
            op_cost_frozen,
            failure_rate,
            big_t_hours,
            cryo_leg_limit_hours,
        }
    }

    pub fn n_orders(&self) -> usize {
        self.orders.len()
    }

    pub fn n_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn orders(&self) -> &[Order] {
        &self.orders
    }

    pub fn locations(&self) -> &[CandidateLocation] {
        &self.locations
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn travel(&self) -> &TravelMatrix {
        &self.travel
    }

    pub fn shelf_life(&self, order: usize) -> f64 {
        self.orders[order].shelf_life_hours
    }

    /// Travel time from order `i` to location `j`.
    pub fn d_order_to_loc(&self, i: usize, j: usize) -> f64 {
        self.travel.get(i, self.orders.len() + j)
    }

    /// Travel time from location `j` back to order `i`.
    pub fn d_loc_to_order(&self, j: usize, i: usize) -> f64 {
        self.travel.get(self.orders.len() + j, i)
    }

    /// Travel time between two locations.
    pub fn d_loc_to_loc(&self, a: usize, b: usize) -> f64 {
        let base = self.orders.len();
        self.travel.get(base + a, base + b)
    }

    pub fn setup_manufacturing(&self, j: usize) -> f64 {
        self.locations[j].setup_cost_manufacturing
    }

    pub fn setup_cryo(&self, j: usize) -> f64 {
        self.locations[j].setup_cost_cryo
    }

    pub fn prod_fresh(&self, k: usize) -> f64 {
        self.modes[k].production_time_fresh_hours
    }

    pub fn prod_frozen(&self, k: usize) -> f64 {
        self.modes[k].production_time_frozen_hours
    }

    pub fn op_cost_fresh(&self, i: usize, j: usize, k: usize) -> f64 {
        self.op_cost_fresh[i][j][k]
    }

    pub fn op_cost_frozen(&self, i: usize, j: usize, k: usize) -> f64 {
        self.op_cost_frozen[i][j][k]
    }

    pub fn failure_rate(&self, i: usize, k: usize) -> f64 {
        self.failure_rate[i][k]
    }

    pub fn big_t_hours(&self) -> f64 {
        self.big_t_hours
    }

    pub fn cryo_leg_limit_hours(&self) -> f64 {
        self.cryo_leg_limit_hours
    }

    /// Checks structural well-formedness and returns every violation found.
    /// An empty vector means the instance is usable by every solver entry
    /// point in this crate.
    pub fn validate(&self) -> Vec<InstanceViolation> {
        let mut out = Vec::new();
        let ni = self.orders.len();
        let nj = self.locations.len();
        let nk = self.modes.len();

        if ni == 0 {
            out.push(InstanceViolation::new("orders", "", "at least one order is required"));
        }
        if nj == 0 {
            out.push(InstanceViolation::new(
                "locations",
                "",
                "at least one candidate location is required",
            ));
        }
        if nk == 0 {
            out.push(InstanceViolation::new("modes", "", "at least one mode is required"));
        }

        for (i, order) in self.orders.iter().enumerate() {
            if order.id != i {
                out.push(InstanceViolation::new(
                    "orders.id",
                    format!("[{i}]"),
                    format!("expected id {i}, found {}", order.id),
                ));
            }
            if !(order.shelf_life_hours.is_finite() && order.shelf_life_hours > 0.0) {
                out.push(InstanceViolation::new(
                    "orders.shelf_life_hours",
                    format!("[{i}]"),
                    format!("must be finite and positive, found {}", order.shelf_life_hours),
                ));
            }
        }

        for (j, loc) in self.locations.iter().enumerate() {
            if loc.id != j {
                out.push(InstanceViolation::new(
                    "locations.id",
                    format!("[{j}]"),
                    format!("expected id {j}, found {}", loc.id),
                ));
            }
            for (field, value) in [
                ("locations.setup_cost_manufacturing", loc.setup_cost_manufacturing),
                ("locations.setup_cost_cryo", loc.setup_cost_cryo),
            ] {
                if !(value.is_finite() && value >= 0.0) {
                    out.push(InstanceViolation::new(
                        field,
                        format!("[{j}]"),
                        format!("must be finite and non-negative, found {value}"),
                    ));
                }
            }
        }

        for (k, mode) in self.modes.iter().enumerate() {
            if mode.id != k {
                out.push(InstanceViolation::new(
                    "modes.id",
                    format!("[{k}]"),
                    format!("expected id {k}, found {}", mode.id),
                ));
            }
            for (field, value) in [
                ("modes.production_time_fresh_hours", mode.production_time_fresh_hours),
                ("modes.production_time_frozen_hours", mode.production_time_frozen_hours),
            ] {
                if !(value.is_finite() && value >= 0.0) {
                    out.push(InstanceViolation::new(
                        field,
                        format!("[{k}]"),
                        format!("must be finite and non-negative, found {value}"),
                    ));
                }
            }
        }

        let n_nodes = ni + nj;
        if self.travel.node_count() != n_nodes {
            out.push(InstanceViolation::new(
                "travel",
                "",
                format!(
                    "expected {n_nodes} rows (orders + locations), found {}",
                    self.travel.node_count()
                ),
            ));
        }
        for (a, row) in self.travel.rows().iter().enumerate() {
            if row.len() != self.travel.node_count() {
                out.push(InstanceViolation::new(
                    "travel",
                    format!("[{a}]"),
                    format!("expected {} columns, found {}", self.travel.node_count(), row.len()),
                ));
                continue;
            }
            for (b, &v) in row.iter().enumerate() {
                if !(v.is_finite() && v >= 0.0) {
                    out.push(InstanceViolation::new(
                        "travel",
                        format!("[{a}][{b}]"),
                        format!("must be finite and non-negative, found {v}"),
                    ));
                } else if a == b && v != 0.0 {
                    out.push(InstanceViolation::new(
                        "travel",
                        format!("[{a}][{b}]"),
                        format!("diagonal entries must be zero, found {v}"),
                    ));
                }
            }
        }

        for (field, tensor) in [
            ("op_cost_fresh", &self.op_cost_fresh),
            ("op_cost_frozen", &self.op_cost_frozen),
        ] {
            if tensor.len() != ni {
                out.push(InstanceViolation::new(
                    field,
                    "",
                    format!("expected {ni} order rows, found {}", tensor.len()),
                ));
                continue;
            }
            for (i, by_loc) in tensor.iter().enumerate() {
                if by_loc.len() != nj {
                    out.push(InstanceViolation::new(
                        field,
                        format!("[{i}]"),
                        format!("expected {nj} location rows, found {}", by_loc.len()),
                    ));
                    continue;
                }
                for (j, by_mode) in by_loc.iter().enumerate() {
                    if by_mode.len() != nk {
                        out.push(InstanceViolation::new(
                            field,
                            format!("[{i}][{j}]"),
                            format!("expected {nk} mode entries, found {}", by_mode.len()),
                        ));
                        continue;
                    }
                    for (k, &v) in by_mode.iter().enumerate() {
                        if !(v.is_finite() && v >= 0.0) {
                            out.push(InstanceViolation::new(
                                field,
                                format!("[{i}][{j}][{k}]"),
                                format!("must be finite and non-negative, found {v}"),
                            ));
                        }
                    }
                }
            }
        }

        if self.failure_rate.len() != ni {
            out.push(InstanceViolation::new(
                "failure_rate",
                "",
                format!("expected {ni} order rows, found {}", self.failure_rate.len()),
            ));
        } else {
            for (i, by_mode) in self.failure_rate.iter().enumerate() {
                if by_mode.len() != nk {
                    out.push(InstanceViolation::new(
                        "failure_rate",
                        format!("[{i}]"),
                        format!("expected {nk} mode entries, found {}", by_mode.len()),
                    ));
                    continue;
                }
                for (k, &v) in by_mode.iter().enumerate() {
                    if !(v.is_finite() && (0.0..1.0).contains(&v)) {
                        out.push(InstanceViolation::new(
                            "failure_rate",
                            format!("[{i}][{k}]"),
                            format!("must lie in [0, 1), found {v}"),
                        ));
                    }
                }
            }
        }

        if !(self.big_t_hours.is_finite() && self.big_t_hours > self.travel.max_entry()) {
            out.push(InstanceViolation::new(
                "big_t_hours",
                "",
                format!(
                    "must be finite and exceed the largest travel time {}, found {}",
                    self.travel.max_entry(),
                    self.big_t_hours
                ),
            ));
        }
        if !(self.cryo_leg_limit_hours.is_finite() && self.cryo_leg_limit_hours >= 0.0) {
            out.push(InstanceViolation::new(
                "cryo_leg_limit_hours",
                "",
                format!("must be finite and non-negative, found {}", self.cryo_leg_limit_hours),
            ));
        }

        out
    }
}

/// One structural problem found by [`Instance::validate`]: the offending
/// field, the index path within it, and a human-readable message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceViolation {
    pub field: String,
    pub index: String,
    pub message: String,
}

impl InstanceViolation {
    fn new(
        field: impl Into<String>,
        index: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        InstanceViolation {
            field: field.into(),
            index: index.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for InstanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}: {}", self.field, self.index, self.message)
    }
}
