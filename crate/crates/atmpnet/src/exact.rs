//! Exact optimization by branch-and-bound over facility configurations.
//!
//! The search branches on what each candidate location becomes (closed, a
//! cryopreservation site, or a manufacturing facility in one of the modes).
//! Once every location is decided, the per-order assignment subproblem
//! decomposes: each order independently picks its best feasible route, except
//! when an epsilon bound couples the orders, in which case a small exact
//! search over order routes runs instead.
//!
//! Pruning uses an admissible lower bound that relaxes every undecided
//! location to "open for free in the best role", so it never cuts off an
//! optimal completion. Bound comparisons carry [`PRUNE_SLACK`] so that
//! last-bit rounding differences between the bound and the leaf values can
//! never make the search inexact.

use std::fmt;
use std::time::Instant;

use crate::evaluator;
use crate::instance::{Instance, FEASIBILITY_TOLERANCE_HOURS};
use crate::scalarization::{Objective, Scalarization, ScalarizationError};
use crate::solution::{ObjectiveVector, Solution};
use crate::ModelVariant;

/// Slack for bound-versus-incumbent comparisons during pruning.
pub const PRUNE_SLACK: f64 = 1e-9;

/// What a candidate location becomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocationState {
    Closed,
    Cryo,
    /// A manufacturing facility running the given mode.
    Manufacturing(usize),
}

/// A fully decided facility configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    pub states: Vec<LocationState>,
}

impl Configuration {
    pub fn all_closed(n_locations: usize) -> Self {
        Configuration { states: vec![LocationState::Closed; n_locations] }
    }

    /// Open manufacturing facilities as `(location, mode)`, ascending by
    /// location.
    pub fn manufacturers(&self) -> Vec<(usize, usize)> {
        self.states
            .iter()
            .enumerate()
            .filter_map(|(j, s)| match s {
                LocationState::Manufacturing(k) => Some((j, *k)),
                _ => None,
            })
            .collect()
    }

    /// Open cryopreservation sites, ascending.
    pub fn cryo_sites(&self) -> Vec<usize> {
        self.states
            .iter()
            .enumerate()
            .filter_map(|(j, s)| (*s == LocationState::Cryo).then_some(j))
            .collect()
    }

    /// Total setup cost of the open facilities.
    pub fn setup_cost(&self, instance: &Instance) -> f64 {
        let mut total = 0.0;
        for (j, state) in self.states.iter().enumerate() {
            match state {
                LocationState::Closed => {}
                LocationState::Cryo => total += instance.setup_cryo(j),
                LocationState::Manufacturing(_) => total += instance.setup_manufacturing(j),
            }
        }
        total
    }

    /// Writes the facility variables (`y_m`, `y_c`, `m`) into a solution.
    pub fn apply_to(&self, solution: &mut Solution) {
        for (j, state) in self.states.iter().enumerate() {
            match state {
                LocationState::Closed => {}
                LocationState::Cryo => solution.y_c[j] = true,
                LocationState::Manufacturing(k) => {
                    solution.y_m[j] = true;
                    solution.m[j][*k] = true;
                }
            }
        }
    }
}

/// A configuration with some locations not yet decided.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialConfiguration {
    pub states: Vec<Option<LocationState>>,
}

impl PartialConfiguration {
    pub fn undecided(n_locations: usize) -> Self {
        PartialConfiguration { states: vec![None; n_locations] }
    }
}

/// How a covered order reaches its manufacturer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteKind {
    /// Direct fresh transport to the manufacturer.
    Fresh { manufacturer: usize },
    /// Frozen transport via a cryopreservation site.
    Frozen { manufacturer: usize, cryo: usize },
    /// Frozen flag with no cryopreservation stop; the inbound leg then takes
    /// zero time. Only exists under [`ModelVariant::Strict`].
    DirectFrozen { manufacturer: usize },
}

/// One feasible way to cover an order under a fixed configuration, with its
/// waiting-time and operational-cost contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderOption {
    pub route: RouteKind,
    pub wait: f64,
    pub cost: f64,
}

/// Enumerates each order's feasible cover options under a configuration, in
/// canonical order: fresh routes by manufacturer index, then frozen routes by
/// (manufacturer, cryo site), then direct frozen routes where the variant
/// allows them. Leaving an order uncovered is always possible and is not
/// listed.
pub fn order_options(
    instance: &Instance,
    config: &Configuration,
    variant: ModelVariant,
) -> Vec<Vec<OrderOption>> {
    let tol = FEASIBILITY_TOLERANCE_HOURS;
    let manufacturers = config.manufacturers();
    let cryo_sites = config.cryo_sites();
    (0..instance.n_orders())
        .map(|i| {
            let shelf = instance.shelf_life(i);
            let mut options = Vec::new();
            for &(j, k) in &manufacturers {
                if instance.d_order_to_loc(i, j) <= shelf + tol
                    && instance.d_loc_to_order(j, i) <= shelf + tol
                {
                    options.push(OrderOption {
                        route: RouteKind::Fresh { manufacturer: j },
                        wait: (1.0 + instance.failure_rate(i, k))
                            * (instance.d_order_to_loc(i, j) + instance.prod_fresh(k))
                            + instance.d_loc_to_order(j, i),
                        cost: (1.0 + instance.failure_rate(i, k)) * instance.op_cost_fresh(i, j, k),
                    });
                }
            }
            for &(j, k) in &manufacturers {
                for &jp in &cryo_sites {
                    if instance.d_order_to_loc(i, jp) <= instance.cryo_leg_limit_hours() + tol {
                        options.push(OrderOption {
                            route: RouteKind::Frozen { manufacturer: j, cryo: jp },
                            wait: (1.0 + instance.failure_rate(i, k))
                                * ((instance.d_order_to_loc(i, jp) + instance.d_loc_to_loc(jp, j))
                                    + instance.prod_frozen(k))
                                + instance.d_loc_to_order(j, i),
                            cost: (1.0 + instance.failure_rate(i, k))
                                * instance.op_cost_frozen(i, j, k),
                        });
                    }
                }
            }
            if variant == ModelVariant::Strict {
                for &(j, k) in &manufacturers {
                    options.push(OrderOption {
                        route: RouteKind::DirectFrozen { manufacturer: j },
                        wait: (1.0 + instance.failure_rate(i, k)) * instance.prod_frozen(k)
                            + instance.d_loc_to_order(j, i),
                        cost: (1.0 + instance.failure_rate(i, k))
                            * instance.op_cost_frozen(i, j, k),
                    });
                }
            }
            options
        })
        .collect()
}

/// Node and wall-clock budgets plus model switches for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub variant: ModelVariant,
    /// Disable to turn the search into plain exhaustive enumeration of
    /// configurations; results must not change.
    pub prune: bool,
    /// Budget on branch-and-bound nodes.
    pub max_nodes: u64,
    /// Optional wall-clock budget in seconds. Off by default so identical
    /// inputs always produce identical outputs.
    pub max_seconds: Option<f64>,
    /// Node budget for each cost- or wait-bounded per-configuration
    /// assignment search.
    pub assignment_node_cap: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            variant: ModelVariant::Canonical,
            prune: true,
            max_nodes: 10_000_000,
            max_seconds: None,
            assignment_node_cap: 1_000_000,
        }
    }
}

/// Search accounting. `proved_optimal` is true only when the search ran to
/// completion within its budgets and every assignment subproblem was solved
/// exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchStats {
    pub nodes_explored: u64,
    pub nodes_pruned: u64,
    pub configs_evaluated: u64,
    pub root_bound: f64,
    pub proved_optimal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub solution: Solution,
    pub objectives: ObjectiveVector,
    /// Scalarized value of `objectives`; for epsilon forms, the optimized
    /// objective (coverage negated).
    pub value: f64,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    Scalarization(ScalarizationError),
    /// The search completed and no solution satisfies the bounds.
    Infeasible { stats: SearchStats },
    /// A budget ran out before any solution satisfying the bounds was found.
    BudgetExhausted { stats: SearchStats },
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Scalarization(e) => write!(f, "{e}"),
            SolveError::Infeasible { .. } => write!(f, "no solution satisfies the bounds"),
            SolveError::BudgetExhausted { .. } => {
                write!(f, "search budget exhausted before a feasible solution was found")
            }
        }
    }
}

impl std::error::Error for SolveError {}

impl From<ScalarizationError> for SolveError {
    fn from(e: ScalarizationError) -> Self {
        SolveError::Scalarization(e)
    }
}

/// (primary, secondary) value compared lexicographically; smaller is better.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SearchValue {
    primary: f64,
    secondary: f64,
}

impl SearchValue {
    fn improves_on(&self, other: &SearchValue) -> bool {
        self.primary < other.primary
            || (self.primary == other.primary && self.secondary < other.secondary)
    }
}

/// Best assignment of orders for one fixed configuration.
#[derive(Debug, Clone)]
struct ConfigBest {
    choices: Vec<Option<OrderOption>>,
    wait: f64,
    cost: f64,
    coverage: usize,
    value: SearchValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PrimaryKind {
    Wait,
    Cost,
    Coverage,
}

#[derive(Debug, Clone, Copy)]
struct SubproblemSpec {
    primary: PrimaryKind,
    required_coverage: usize,
    max_wait: Option<f64>,
    max_cost: Option<f64>,
    cost_exclusive: bool,
}

impl SubproblemSpec {
    fn from_scalarization(scal: &Scalarization) -> Option<SubproblemSpec> {
        match scal {
            Scalarization::WeightedSum { .. } => None,
            Scalarization::Epsilon { objective, bounds } => Some(SubproblemSpec {
                primary: match objective {
                    Objective::WaitingTime => PrimaryKind::Wait,
                    Objective::Cost => PrimaryKind::Cost,
                    Objective::Coverage => PrimaryKind::Coverage,
                },
                required_coverage: bounds.min_coverage.unwrap_or(0),
                max_wait: bounds.max_wait,
                max_cost: bounds.max_cost,
                cost_exclusive: bounds.cost_bound_exclusive,
            }),
        }
    }

    fn cost_within(&self, total_cost: f64) -> bool {
        match self.max_cost {
            None => true,
            Some(b) => {
                if self.cost_exclusive {
                    total_cost < b
                } else {
                    total_cost <= b
                }
            }
        }
    }

    fn wait_within(&self, total_wait: f64) -> bool {
        self.max_wait.is_none_or(|b| total_wait <= b)
    }

    /// Whether every completion of a state whose cheapest possible total cost
    /// is `min_total_cost` already busts the cost bound.
    fn cost_hopeless(&self, min_total_cost: f64) -> bool {
        self.max_cost.is_some_and(|b| min_total_cost > b + PRUNE_SLACK)
    }

    fn wait_hopeless(&self, min_total_wait: f64) -> bool {
        self.max_wait.is_some_and(|b| min_total_wait > b + PRUNE_SLACK)
    }
}

/// Per-order search data under one configuration: options pruned to their
/// (wait, cost) Pareto frontier plus suffix minima for bounding.
struct OrderData {
    options: Vec<Vec<OrderOption>>,
    /// `suffix_coverable[i]` = number of coverable orders with index >= i.
    suffix_coverable: Vec<usize>,
    /// Sorted ascending per suffix, finite entries only.
    suffix_min_waits: Vec<Vec<f64>>,
    suffix_min_costs: Vec<Vec<f64>>,
}

impl OrderData {
    fn build(all_options: Vec<Vec<OrderOption>>) -> OrderData {
        let n = all_options.len();
        let options: Vec<Vec<OrderOption>> = all_options
            .into_iter()
            .map(|opts| {
                let mut kept: Vec<OrderOption> = Vec::with_capacity(opts.len());
                for o in opts {
                    if !kept.iter().any(|p| p.wait <= o.wait && p.cost <= o.cost) {
                        kept.retain(|p| !(o.wait <= p.wait && o.cost <= p.cost));
                        kept.push(o);
                    }
                }
                kept
            })
            .collect();
        let min_wait: Vec<f64> = options
            .iter()
            .map(|opts| opts.iter().map(|o| o.wait).fold(f64::INFINITY, f64::min))
            .collect();
        let min_cost: Vec<f64> = options
            .iter()
            .map(|opts| opts.iter().map(|o| o.cost).fold(f64::INFINITY, f64::min))
            .collect();
        let mut suffix_coverable = vec![0usize; n + 1];
        let mut suffix_min_waits = vec![Vec::new(); n + 1];
        let mut suffix_min_costs = vec![Vec::new(); n + 1];
        for i in (0..n).rev() {
            suffix_coverable[i] =
                suffix_coverable[i + 1] + usize::from(!options[i].is_empty());
            let mut waits = suffix_min_waits[i + 1].clone();
            let mut costs = suffix_min_costs[i + 1].clone();
            if !options[i].is_empty() {
                waits.push(min_wait[i]);
                costs.push(min_cost[i]);
            }
            waits.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            costs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            suffix_min_waits[i] = waits;
            suffix_min_costs[i] = costs;
        }
        OrderData { options, suffix_coverable, suffix_min_waits, suffix_min_costs }
    }

    /// Sum of the `needed` smallest per-order minimum waits at or after
    /// `idx`; infinite when fewer than `needed` orders are coverable.
    fn cheapest_extra_wait(&self, idx: usize, needed: usize) -> f64 {
        if needed == 0 {
            return 0.0;
        }
        let waits = &self.suffix_min_waits[idx];
        if waits.len() < needed {
            return f64::INFINITY;
        }
        waits[..needed].iter().sum()
    }

    fn cheapest_extra_cost(&self, idx: usize, needed: usize) -> f64 {
        if needed == 0 {
            return 0.0;
        }
        let costs = &self.suffix_min_costs[idx];
        if costs.len() < needed {
            return f64::INFINITY;
        }
        costs[..needed].iter().sum()
    }
}

fn totals_from_choices(choices: &[Option<OrderOption>], setup: f64) -> (f64, f64, usize) {
    let mut wait = 0.0;
    let mut operations = 0.0;
    let mut coverage = 0usize;
    for choice in choices {
        if let Some(opt) = choice {
            wait += opt.wait;
            operations += opt.cost;
            coverage += 1;
        }
    }
    (wait, setup + operations, coverage)
}

fn search_value(spec: Option<&SubproblemSpec>, scal: &Scalarization, wait: f64, cost: f64, coverage: usize) -> SearchValue {
    match spec {
        None => {
            let vec = ObjectiveVector { waiting_time_hours: wait, cost, coverage };
            SearchValue { primary: scal.apply(&vec), secondary: 0.0 }
        }
        Some(spec) => match spec.primary {
            PrimaryKind::Wait => SearchValue { primary: wait, secondary: cost },
            PrimaryKind::Cost => SearchValue { primary: cost, secondary: wait },
            PrimaryKind::Coverage => {
                SearchValue { primary: -(coverage as f64), secondary: wait }
            }
        },
    }
}

/// Exact greedy for uncoupled subproblems: pick each order's best option by
/// `key`, cover the `required` best orders by (key, index). Returns `None`
/// when fewer orders are coverable than required.
fn greedy_cover(
    data: &OrderData,
    required: usize,
    key: impl Fn(&OrderOption) -> (f64, f64),
) -> Option<Vec<Option<OrderOption>>> {
    let n = data.options.len();
    let mut best_per_order: Vec<Option<(OrderOption, (f64, f64))>> = vec![None; n];
    for i in 0..n {
        for o in &data.options[i] {
            let k = key(o);
            match &best_per_order[i] {
                Some((_, kb)) if !(k < *kb) => {}
                _ => best_per_order[i] = Some((*o, k)),
            }
        }
    }
    let mut candidates: Vec<(f64, f64, usize)> = best_per_order
        .iter()
        .enumerate()
        .filter_map(|(i, b)| b.as_ref().map(|(_, (k0, k1))| (*k0, *k1, i)))
        .collect();
    if candidates.len() < required {
        return None;
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite keys"));
    let mut choices: Vec<Option<OrderOption>> = vec![None; n];
    for &(_, _, i) in candidates.iter().take(required) {
        choices[i] = Some(best_per_order[i].expect("candidate has an option").0);
    }
    Some(choices)
}

struct AssignmentSearch<'a> {
    data: &'a OrderData,
    spec: &'a SubproblemSpec,
    setup: f64,
    node_cap: u64,
    nodes: u64,
    capped: bool,
    /// Children order per order: uncovered first except for coverage primary.
    cover_first: bool,
    best: Option<(SearchValue, Vec<Option<OrderOption>>)>,
    current: Vec<Option<OrderOption>>,
}

impl AssignmentSearch<'_> {
    fn run(mut self) -> (Option<(SearchValue, Vec<Option<OrderOption>>)>, bool) {
        self.dfs(0, 0, 0.0, 0.0);
        (self.best, !self.capped)
    }

    fn consider_leaf(&mut self, covered: usize, wait_sum: f64, cost_sum: f64) {
        if covered < self.spec.required_coverage {
            return;
        }
        let total_cost = self.setup + cost_sum;
        if !self.spec.cost_within(total_cost) || !self.spec.wait_within(wait_sum) {
            return;
        }
        let value = match self.spec.primary {
            PrimaryKind::Wait => SearchValue { primary: wait_sum, secondary: total_cost },
            PrimaryKind::Cost => SearchValue { primary: total_cost, secondary: wait_sum },
            PrimaryKind::Coverage => {
                SearchValue { primary: -(covered as f64), secondary: wait_sum }
            }
        };
        let replace = match &self.best {
            None => true,
            Some((incumbent, _)) => value.improves_on(incumbent),
        };
        if replace {
            self.best = Some((value, self.current.clone()));
        }
    }

    fn prune(&self, idx: usize, covered: usize, wait_sum: f64, cost_sum: f64) -> bool {
        let needed = self.spec.required_coverage.saturating_sub(covered);
        if self.data.suffix_coverable[idx] < needed {
            return true;
        }
        let extra_wait = self.data.cheapest_extra_wait(idx, needed);
        let extra_cost = self.data.cheapest_extra_cost(idx, needed);
        if self.spec.wait_hopeless(wait_sum + extra_wait)
            || self.spec.cost_hopeless(self.setup + (cost_sum + extra_cost))
        {
            return true;
        }
        if let Some((incumbent, _)) = &self.best {
            match self.spec.primary {
                PrimaryKind::Wait => {
                    if wait_sum + extra_wait > incumbent.primary + PRUNE_SLACK {
                        return true;
                    }
                }
                PrimaryKind::Cost => {
                    if self.setup + (cost_sum + extra_cost) > incumbent.primary + PRUNE_SLACK {
                        return true;
                    }
                }
                PrimaryKind::Coverage => {
                    let potential = covered + self.data.suffix_coverable[idx];
                    if (-(potential as f64)) > incumbent.primary {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn dfs(&mut self, idx: usize, covered: usize, wait_sum: f64, cost_sum: f64) {
        if self.capped {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.node_cap {
            self.capped = true;
            return;
        }
        if idx == self.data.options.len() {
            self.consider_leaf(covered, wait_sum, cost_sum);
            return;
        }
        if self.prune(idx, covered, wait_sum, cost_sum) {
            return;
        }
        let data = self.data;
        if !self.cover_first {
            self.dfs(idx + 1, covered, wait_sum, cost_sum);
        }
        for opt in &data.options[idx] {
            self.current[idx] = Some(*opt);
            self.dfs(idx + 1, covered + 1, wait_sum + opt.wait, cost_sum + opt.cost);
            self.current[idx] = None;
        }
        if self.cover_first {
            self.dfs(idx + 1, covered, wait_sum, cost_sum);
        }
    }
}

/// Solves the per-order assignment subproblem for one configuration.
/// The first component is `None` when no assignment satisfying the bounds
/// was found; the second is false when the search hit its node cap, in which
/// case a `None` is inconclusive and a `Some` may be suboptimal.
fn solve_config(
    instance: &Instance,
    config: &Configuration,
    scal: &Scalarization,
    variant: ModelVariant,
    assignment_node_cap: u64,
) -> (Option<ConfigBest>, bool) {
    let setup = config.setup_cost(instance);
    let spec = SubproblemSpec::from_scalarization(scal);
    let all_options = order_options(instance, config, variant);

    let choices: Vec<Option<OrderOption>>;
    let mut exact = true;

    match &spec {
        None => {
            let Scalarization::WeightedSum { wait_weight, cost_weight, coverage_weight } = scal
            else {
                unreachable!("spec is None only for weighted sums");
            };
            choices = all_options
                .iter()
                .map(|opts| {
                    let mut best: Option<(OrderOption, f64)> = None;
                    for o in opts {
                        let contribution =
                            wait_weight * o.wait + cost_weight * o.cost + coverage_weight;
                        if contribution < best.as_ref().map_or(0.0, |(_, c)| *c) {
                            best = Some((*o, contribution));
                        }
                    }
                    best.map(|(o, _)| o)
                })
                .collect();
        }
        Some(spec) => {
            let data = OrderData::build(all_options);
            let uncoupled = match spec.primary {
                PrimaryKind::Wait => spec.max_cost.is_none(),
                PrimaryKind::Cost => spec.max_wait.is_none(),
                PrimaryKind::Coverage => spec.max_wait.is_none() && spec.max_cost.is_none(),
            };
            if uncoupled {
                let found = match spec.primary {
                    PrimaryKind::Wait => {
                        greedy_cover(&data, spec.required_coverage, |o| (o.wait, o.cost))
                    }
                    PrimaryKind::Cost => {
                        greedy_cover(&data, spec.required_coverage, |o| (o.cost, o.wait))
                    }
                    PrimaryKind::Coverage => {
                        let mut all = vec![None; data.options.len()];
                        for i in 0..data.options.len() {
                            let mut best: Option<(OrderOption, (f64, f64))> = None;
                            for o in &data.options[i] {
                                let k = (o.wait, o.cost);
                                if best.as_ref().is_none_or(|(_, kb)| k < *kb) {
                                    best = Some((*o, k));
                                }
                            }
                            all[i] = best.map(|(o, _)| o);
                        }
                        if all.iter().filter(|c| c.is_some()).count() < spec.required_coverage {
                            None
                        } else {
                            Some(all)
                        }
                    }
                };
                match found {
                    None => return (None, true),
                    Some(c) => choices = c,
                }
            } else {
                let mut search = AssignmentSearch {
                    data: &data,
                    spec,
                    setup,
                    node_cap: assignment_node_cap,
                    nodes: 0,
                    capped: false,
                    cover_first: spec.primary == PrimaryKind::Coverage,
                    best: None,
                    current: vec![None; data.options.len()],
                };
                for seed_key in [
                    |o: &OrderOption| (o.wait, o.cost),
                    |o: &OrderOption| (o.cost, o.wait),
                ] {
                    if let Some(seed) = greedy_cover(&data, spec.required_coverage, seed_key) {
                        let (w, c, v) = totals_from_choices(&seed, setup);
                        if spec.cost_within(c) && spec.wait_within(w) {
                            let value = match spec.primary {
                                PrimaryKind::Wait => SearchValue { primary: w, secondary: c },
                                PrimaryKind::Cost => SearchValue { primary: c, secondary: w },
                                PrimaryKind::Coverage => {
                                    SearchValue { primary: -(v as f64), secondary: w }
                                }
                            };
                            let replace = match &search.best {
                                None => true,
                                Some((incumbent, _)) => value.improves_on(incumbent),
                            };
                            if replace {
                                search.best = Some((value, seed));
                            }
                        }
                    }
                }
                let (best, was_exact) = search.run();
                exact = was_exact;
                match best {
                    None => return (None, exact),
                    Some((_, c)) => choices = c,
                }
            }
        }
    }

    let (wait, cost, coverage) = totals_from_choices(&choices, setup);
    if let Some(spec) = &spec {
        if coverage < spec.required_coverage
            || !spec.cost_within(cost)
            || !spec.wait_within(wait)
        {
            return (None, exact);
        }
    }
    let value = search_value(spec.as_ref(), scal, wait, cost, coverage);
    (Some(ConfigBest { choices, wait, cost, coverage, value }), exact)
}

fn materialize(
    instance: &Instance,
    config: &Configuration,
    choices: &[Option<OrderOption>],
) -> Solution {
    let mut sol =
        Solution::all_closed(instance.n_orders(), instance.n_locations(), instance.n_modes());
    config.apply_to(&mut sol);
    for (i, choice) in choices.iter().enumerate() {
        match choice {
            None => {}
            Some(OrderOption { route: RouteKind::Fresh { manufacturer }, .. }) => {
                sol.x_m[i][*manufacturer] = true;
            }
            Some(OrderOption { route: RouteKind::Frozen { manufacturer, cryo }, .. }) => {
                sol.x_m[i][*manufacturer] = true;
                sol.x_c[i][*cryo] = true;
                sol.z[i] = true;
            }
            Some(OrderOption { route: RouteKind::DirectFrozen { manufacturer }, .. }) => {
                sol.x_m[i][*manufacturer] = true;
                sol.z[i] = true;
            }
        }
    }
    sol
}

/// The optimal order assignment for one fixed configuration, or `None` when
/// no assignment satisfies the scalarization's bounds.
///
/// Cost- or wait-coupled epsilon subproblems run a bounded exact search; on
/// instances large enough to exhaust the internal node budget the best
/// assignment found is returned instead (the exact solver tracks this in its
/// optimality proof flag).
pub fn best_assignment(
    instance: &Instance,
    config: &Configuration,
    scal: &Scalarization,
    variant: ModelVariant,
) -> Result<Option<(Solution, ObjectiveVector)>, ScalarizationError> {
    scal.validate()?;
    Ok(assignment_with_cap(
        instance,
        config,
        scal,
        variant,
        SolveOptions::default().assignment_node_cap,
    ))
}

/// [`best_assignment`] with an explicit node cap and without revalidating the
/// scalarization; the heuristic calls this in its inner loop.
pub(crate) fn assignment_with_cap(
    instance: &Instance,
    config: &Configuration,
    scal: &Scalarization,
    variant: ModelVariant,
    assignment_node_cap: u64,
) -> Option<(Solution, ObjectiveVector)> {
    let (found, _) = solve_config(instance, config, scal, variant, assignment_node_cap);
    let best = found?;
    let solution = materialize(instance, config, &best.choices);
    let objectives = evaluator::evaluate(instance, &solution)
        .expect("assignments constructed from feasible options are feasible");
    Some((solution, objectives))
}

/// Relaxed per-order cover options for a partially decided configuration:
/// undecided locations count as open in every role at zero setup cost, so the
/// resulting per-order minima underestimate every completion.
fn relaxed_order_minima(
    instance: &Instance,
    partial: &PartialConfiguration,
    variant: ModelVariant,
) -> (Vec<f64>, Vec<f64>) {
    let tol = FEASIBILITY_TOLERANCE_HOURS;
    let nj = instance.n_locations();
    let nk = instance.n_modes();
    let mfg_candidates: Vec<(usize, Option<usize>)> = (0..nj)
        .filter_map(|j| match partial.states[j] {
            Some(LocationState::Manufacturing(k)) => Some((j, Some(k))),
            None => Some((j, None)),
            _ => None,
        })
        .collect();
    let cryo_candidates: Vec<usize> = (0..nj)
        .filter(|&j| matches!(partial.states[j], Some(LocationState::Cryo) | None))
        .collect();

    let mut min_wait = vec![f64::INFINITY; instance.n_orders()];
    let mut min_cost = vec![f64::INFINITY; instance.n_orders()];
    for i in 0..instance.n_orders() {
        let shelf = instance.shelf_life(i);
        let mut consider = |wait: f64, cost: f64| {
            if wait < min_wait[i] {
                min_wait[i] = wait;
            }
            if cost < min_cost[i] {
                min_cost[i] = cost;
            }
        };
        for &(j, mode) in &mfg_candidates {
            let modes: Vec<usize> = match mode {
                Some(k) => vec![k],
                None => (0..nk).collect(),
            };
            let fresh_ok = instance.d_order_to_loc(i, j) <= shelf + tol
                && instance.d_loc_to_order(j, i) <= shelf + tol;
            for &k in &modes {
                let repeat = 1.0 + instance.failure_rate(i, k);
                if fresh_ok {
                    consider(
                        repeat * (instance.d_order_to_loc(i, j) + instance.prod_fresh(k))
                            + instance.d_loc_to_order(j, i),
                        repeat * instance.op_cost_fresh(i, j, k),
                    );
                }
                for &jp in &cryo_candidates {
                    if jp != j
                        && instance.d_order_to_loc(i, jp)
                            <= instance.cryo_leg_limit_hours() + tol
                    {
                        consider(
                            repeat
                                * ((instance.d_order_to_loc(i, jp)
                                    + instance.d_loc_to_loc(jp, j))
                                    + instance.prod_frozen(k))
                                + instance.d_loc_to_order(j, i),
                            repeat * instance.op_cost_frozen(i, j, k),
                        );
                    }
                }
                if variant == ModelVariant::Strict {
                    consider(
                        repeat * instance.prod_frozen(k) + instance.d_loc_to_order(j, i),
                        repeat * instance.op_cost_frozen(i, j, k),
                    );
                }
            }
        }
    }
    (min_wait, min_cost)
}

/// Admissible lower bound on the scalarized value over all completions of a
/// partial configuration; `f64::INFINITY` when no completion can satisfy the
/// bounds. Never decreases as further locations get decided.
pub fn lower_bound(
    instance: &Instance,
    partial: &PartialConfiguration,
    scal: &Scalarization,
    variant: ModelVariant,
) -> f64 {
    let mut setup_committed = 0.0;
    for (j, state) in partial.states.iter().enumerate() {
        match state {
            Some(LocationState::Cryo) => setup_committed += instance.setup_cryo(j),
            Some(LocationState::Manufacturing(_)) => {
                setup_committed += instance.setup_manufacturing(j)
            }
            _ => {}
        }
    }
    let (min_wait, min_cost) = relaxed_order_minima(instance, partial, variant);

    match SubproblemSpec::from_scalarization(scal) {
        None => {
            let Scalarization::WeightedSum { wait_weight, cost_weight, coverage_weight } = scal
            else {
                unreachable!("spec is None only for weighted sums");
            };
            let mut bound = cost_weight * setup_committed;
            for i in 0..instance.n_orders() {
                if min_wait[i].is_finite() {
                    let contribution =
                        wait_weight * min_wait[i] + cost_weight * min_cost[i] + coverage_weight;
                    if contribution < 0.0 {
                        bound += contribution;
                    }
                }
            }
            bound
        }
        Some(spec) => {
            let mut coverable_waits: Vec<f64> =
                min_wait.iter().copied().filter(|w| w.is_finite()).collect();
            let mut coverable_costs: Vec<f64> = min_wait
                .iter()
                .zip(&min_cost)
                .filter(|(w, _)| w.is_finite())
                .map(|(_, &c)| c)
                .collect();
            coverable_waits.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            coverable_costs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let needed = spec.required_coverage;
            if coverable_waits.len() < needed {
                return f64::INFINITY;
            }
            let cheapest_wait: f64 = coverable_waits[..needed].iter().sum();
            let cheapest_cost: f64 = coverable_costs[..needed].iter().sum();
            if spec.wait_hopeless(cheapest_wait)
                || spec.cost_hopeless(setup_committed + cheapest_cost)
            {
                return f64::INFINITY;
            }
            match spec.primary {
                PrimaryKind::Wait => cheapest_wait,
                PrimaryKind::Cost => setup_committed + cheapest_cost,
                PrimaryKind::Coverage => {
                    let coverable = (0..instance.n_orders())
                        .filter(|&i| {
                            min_wait[i].is_finite()
                                && !spec.wait_hopeless(min_wait[i])
                                && !spec.cost_hopeless(setup_committed + min_cost[i])
                        })
                        .count();
                    -(coverable as f64)
                }
            }
        }
    }
}

/// Exact solve: branch-and-bound over facility configurations, optimal under
/// the given scalarization. Locations are branched in decreasing setup-cost
/// order, children closed first, then cryopreservation, then manufacturing by
/// mode index; ties everywhere resolve to the first candidate in that order,
/// so results are deterministic.
pub fn solve(
    instance: &Instance,
    scal: &Scalarization,
    options: &SolveOptions,
) -> Result<SolveOutcome, SolveError> {
    scal.validate()?;
    let nj = instance.n_locations();
    let mut branch_order: Vec<usize> = (0..nj).collect();
    branch_order.sort_by(|&a, &b| {
        let weight = |j: usize| {
            instance.setup_manufacturing(j).max(instance.setup_cryo(j))
        };
        weight(b).partial_cmp(&weight(a)).expect("finite setup costs").then(a.cmp(&b))
    });

    let mut partial = PartialConfiguration::undecided(nj);
    let root_bound = lower_bound(instance, &partial, scal, options.variant);

    struct Search<'a> {
        instance: &'a Instance,
        scal: &'a Scalarization,
        options: &'a SolveOptions,
        branch_order: &'a [usize],
        stats: SearchStats,
        incumbent: Option<(ConfigBest, Configuration)>,
        budget_hit: bool,
        started: Instant,
    }

    impl Search<'_> {
        fn out_of_budget(&mut self) -> bool {
            if self.budget_hit {
                return true;
            }
            if self.stats.nodes_explored > self.options.max_nodes {
                self.budget_hit = true;
                return true;
            }
            if let Some(limit) = self.options.max_seconds {
                if self.stats.nodes_explored % 1024 == 0
                    && self.started.elapsed().as_secs_f64() > limit
                {
                    self.budget_hit = true;
                    return true;
                }
            }
            false
        }

        fn recurse(&mut self, depth: usize, partial: &mut PartialConfiguration) {
            self.stats.nodes_explored += 1;
            if self.out_of_budget() {
                return;
            }

            let bound = lower_bound(self.instance, partial, self.scal, self.options.variant);
            if bound.is_infinite() {
                self.stats.nodes_pruned += 1;
                return;
            }
            if self.options.prune {
                if let Some((best, _)) = &self.incumbent {
                    if bound > best.value.primary + PRUNE_SLACK {
                        self.stats.nodes_pruned += 1;
                        return;
                    }
                }
            }

            if depth == self.branch_order.len() {
                let config = Configuration {
                    states: partial
                        .states
                        .iter()
                        .map(|s| s.expect("all locations decided at a leaf"))
                        .collect(),
                };
                self.stats.configs_evaluated += 1;
                let (found, exact) = solve_config(
                    self.instance,
                    &config,
                    self.scal,
                    self.options.variant,
                    self.options.assignment_node_cap,
                );
                if !exact {
                    self.stats.proved_optimal = false;
                }
                if let Some(best) = found {
                    let replace = match &self.incumbent {
                        None => true,
                        Some((incumbent, _)) => best.value.improves_on(&incumbent.value),
                    };
                    if replace {
                        self.incumbent = Some((best, config));
                    }
                }
                return;
            }

            let j = self.branch_order[depth];
            let mut states = vec![LocationState::Closed, LocationState::Cryo];
            states.extend((0..self.instance.n_modes()).map(LocationState::Manufacturing));
            for state in states {
                partial.states[j] = Some(state);
                self.recurse(depth + 1, partial);
                partial.states[j] = None;
                if self.budget_hit {
                    return;
                }
            }
        }
    }

    let mut search = Search {
        instance,
        scal,
        options,
        branch_order: &branch_order,
        stats: SearchStats {
            nodes_explored: 0,
            nodes_pruned: 0,
            configs_evaluated: 0,
            root_bound,
            proved_optimal: true,
        },
        incumbent: None,
        budget_hit: false,
        started: Instant::now(),
    };
    search.recurse(0, &mut partial);

    let mut stats = search.stats;
    if search.budget_hit {
        stats.proved_optimal = false;
    }

    match search.incumbent {
        None => {
            if search.budget_hit || !stats.proved_optimal {
                Err(SolveError::BudgetExhausted { stats })
            } else {
                Err(SolveError::Infeasible { stats })
            }
        }
        Some((best, config)) => {
            let solution = materialize(instance, &config, &best.choices);
            let objectives = evaluator::evaluate(instance, &solution)
                .expect("solutions assembled from feasible options are feasible");
            debug_assert_eq!(objectives.waiting_time_hours, best.wait);
            debug_assert_eq!(objectives.cost, best.cost);
            debug_assert_eq!(objectives.coverage, best.coverage);
            let value = scal.apply(&objectives);
            Ok(SolveOutcome { solution, objectives, value, stats })
        }
    }
}
