//! Network design for personalised cell and gene therapies.
//!
//! The model decides where to open manufacturing and cryopreservation
//! facilities, which manufacturing mode each facility runs, which patient
//! orders to serve from where, and whether each order's starting material
//! travels fresh or frozen. Three objectives are tracked: total waiting time
//! (minimize), total cost (minimize) and coverage, the number of served
//! orders (maximize).
//!
//! Module map:
//!
//! * [`instance`], [`solution`]: problem data and variable assignments.
//! * [`generate`], [`io`]: seeded random instances, canonical JSON files.
//! * [`evaluator`]: feasibility checks and objective evaluation.
//! * [`scalarization`]: weighted-sum and epsilon-constraint single-objective
//!   views.
//! * [`exact`]: branch-and-bound over facility configurations.
//! * [`milp`]: the same model as a mixed-integer linear program, with a
//!   product-term linearization and an LP-format exporter.
//! * [`pareto`]: epsilon-constraint Pareto front enumeration, hypervolume,
//!   CSV export.
//! * [`heuristic`]: multi-start local search for instances beyond exact
//!   reach.
//! * [`classical`]: covering and median baselines on the same data.
//! * [`oracle`]: independent brute-force reference used for cross-checks.
//!
//! The `parallel` feature (on by default) runs Pareto front cells and local
//! search starts on a rayon pool; disabling it yields a fully sequential
//! build with identical results.

pub mod classical;
pub mod evaluator;
pub mod exact;
mod exec;
pub mod generate;
pub mod heuristic;
pub mod instance;
pub mod io;
pub mod milp;
pub mod oracle;
pub mod pareto;
pub mod scalarization;
pub mod solution;
#[cfg(test)]
pub(crate) mod testutil;

pub use instance::{CandidateLocation, Instance, InstanceViolation, Mode, Order, TravelMatrix};
pub use scalarization::{Objective, Scalarization};
pub use solution::{ObjectiveVector, Solution};

/// Which solution space the solvers, the encoder and the oracle work in.
///
/// The underlying constraint set leaves two degenerate freedoms: an uncovered
/// order may carry the frozen flag, and a covered frozen order may skip the
/// cryopreservation stop entirely, in which case its inbound transport
/// contributes zero time. `Canonical` removes both: frozen implies covered
/// and routed through an open cryopreservation site. `Strict` keeps the
/// constraint set verbatim except that frozen still implies covered, so the
/// zero-time direct frozen routes remain available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelVariant {
    #[default]
    Canonical,
    Strict,
}
