//! Ways of turning the three objectives into a single optimization target:
//! weighted sums and epsilon-constraint forms (optimize one objective, bound
//! the others).

use std::fmt;

use crate::solution::ObjectiveVector;

/// One of the three objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    WaitingTime,
    Cost,
    Coverage,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::WaitingTime => "waiting_time",
            Objective::Cost => "cost",
            Objective::Coverage => "coverage",
        })
    }
}

/// Bounds on the non-optimized objectives of an epsilon-constraint solve.
///
/// `cost_bound_exclusive` turns `cost <= max_cost` into `cost < max_cost`;
/// the Pareto front walk uses this to force strictly cheaper solutions from
/// one step to the next.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpsilonBounds {
    pub max_wait: Option<f64>,
    pub max_cost: Option<f64>,
    pub min_coverage: Option<usize>,
    pub cost_bound_exclusive: bool,
}

/// A single-objective view of the model.
///
/// For `WeightedSum` the scalar is `wait_weight * W + cost_weight * C +
/// coverage_weight * V`, minimized; since coverage is maximized, a coverage
/// reward enters as a non-positive `coverage_weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalarization {
    WeightedSum { wait_weight: f64, cost_weight: f64, coverage_weight: f64 },
    Epsilon { objective: Objective, bounds: EpsilonBounds },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScalarizationError {
    InvalidWeights(String),
    InvalidBounds(String),
}

impl fmt::Display for ScalarizationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarizationError::InvalidWeights(msg) => write!(f, "invalid weights: {msg}"),
            ScalarizationError::InvalidBounds(msg) => write!(f, "invalid bounds: {msg}"),
        }
    }
}

impl std::error::Error for ScalarizationError {}

impl Scalarization {
    pub fn weighted(wait_weight: f64, cost_weight: f64, coverage_weight: f64) -> Self {
        Scalarization::WeightedSum { wait_weight, cost_weight, coverage_weight }
    }

    pub fn epsilon(
        objective: Objective,
        max_wait: Option<f64>,
        max_cost: Option<f64>,
        min_coverage: Option<usize>,
    ) -> Self {
        Scalarization::Epsilon {
            objective,
            bounds: EpsilonBounds { max_wait, max_cost, min_coverage, cost_bound_exclusive: false },
        }
    }

    pub fn validate(&self) -> Result<(), ScalarizationError> {
        match self {
            Scalarization::WeightedSum { wait_weight, cost_weight, coverage_weight } => {
                for (name, w) in
                    [("wait", wait_weight), ("cost", cost_weight), ("coverage", coverage_weight)]
                {
                    if !w.is_finite() {
                        return Err(ScalarizationError::InvalidWeights(format!(
                            "{name} weight must be finite, found {w}"
                        )));
                    }
                }
                if *wait_weight < 0.0 || *cost_weight < 0.0 {
                    return Err(ScalarizationError::InvalidWeights(
                        "wait and cost weights must be non-negative".to_string(),
                    ));
                }
                if *coverage_weight > 0.0 {
                    return Err(ScalarizationError::InvalidWeights(
                        "coverage is maximized, so its weight must be non-positive".to_string(),
                    ));
                }
                if *wait_weight == 0.0 && *cost_weight == 0.0 && *coverage_weight == 0.0 {
                    return Err(ScalarizationError::InvalidWeights(
                        "at least one weight must be nonzero".to_string(),
                    ));
                }
                Ok(())
            }
            Scalarization::Epsilon { objective, bounds } => {
                let own_bound_set = match objective {
                    Objective::WaitingTime => bounds.max_wait.is_some(),
                    Objective::Cost => bounds.max_cost.is_some(),
                    Objective::Coverage => bounds.min_coverage.is_some(),
                };
                if own_bound_set {
                    return Err(ScalarizationError::InvalidBounds(format!(
                        "the optimized objective {objective} must not carry its own bound"
                    )));
                }
                for (name, bound) in [("max_wait", bounds.max_wait), ("max_cost", bounds.max_cost)]
                {
                    if let Some(b) = bound {
                        if !b.is_finite() {
                            return Err(ScalarizationError::InvalidBounds(format!(
                                "{name} must be finite, found {b}"
                            )));
                        }
                    }
                }
                if bounds.cost_bound_exclusive && bounds.max_cost.is_none() {
                    return Err(ScalarizationError::InvalidBounds(
                        "an exclusive cost bound requires max_cost".to_string(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// The scalar value of an objective vector under this scalarization,
    /// oriented so that smaller is better. For epsilon forms this is the
    /// optimized objective itself (coverage negated); the bounds are checked
    /// separately by [`Scalarization::satisfies_bounds`].
    pub fn apply(&self, vec: &ObjectiveVector) -> f64 {
        match self {
            Scalarization::WeightedSum { wait_weight, cost_weight, coverage_weight } => {
                wait_weight * vec.waiting_time_hours
                    + cost_weight * vec.cost
                    + coverage_weight * (vec.coverage as f64)
            }
            Scalarization::Epsilon { objective, .. } => match objective {
                Objective::WaitingTime => vec.waiting_time_hours,
                Objective::Cost => vec.cost,
                Objective::Coverage => -(vec.coverage as f64),
            },
        }
    }

    /// Whether the vector satisfies every epsilon bound. Weighted sums have
    /// no bounds, so everything passes.
    pub fn satisfies_bounds(&self, vec: &ObjectiveVector) -> bool {
        match self {
            Scalarization::WeightedSum { .. } => true,
            Scalarization::Epsilon { bounds, .. } => {
                let wait_ok = bounds.max_wait.is_none_or(|b| vec.waiting_time_hours <= b);
                let cost_ok = bounds.max_cost.is_none_or(|b| {
                    if bounds.cost_bound_exclusive {
                        vec.cost < b
                    } else {
                        vec.cost <= b
                    }
                });
                let cover_ok = bounds.min_coverage.is_none_or(|b| vec.coverage >= b);
                wait_ok && cost_ok && cover_ok
            }
        }
    }
}
