//! Canonical JSON serialization for instances and solutions.
//!
//! Canonical form: object keys sorted, numbers rendered shortest-round-trip,
//! no insignificant whitespace, trailing newline. Reading accepts any JSON
//! layout of the same fields; writing always produces the canonical bytes,
//! so read-then-write normalizes a file.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::instance::{CandidateLocation, Instance, InstanceViolation, Mode, Order, TravelMatrix};
use crate::solution::Solution;

#[derive(Debug, Clone, PartialEq)]
pub enum ReadError {
    /// Not parseable as the expected document shape.
    Parse(String),
    /// Parsed fine but the instance is structurally invalid.
    Invalid(Vec<InstanceViolation>),
}

impl fmt::Display for ReadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReadError::Parse(msg) => write!(f, "parse error: {msg}"),
            ReadError::Invalid(violations) => {
                writeln!(f, "invalid instance ({} violations):", violations.len())?;
                for v in violations {
                    writeln!(f, "  {v}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ReadError {}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrderDoc {
    id: usize,
    shelf_life_hours: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocationDoc {
    id: usize,
    setup_cost_manufacturing: f64,
    setup_cost_cryo: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeDoc {
    id: usize,
    p_fresh_hours: f64,
    p_frozen_hours: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    orders: Vec<OrderDoc>,
    locations: Vec<LocationDoc>,
    modes: Vec<ModeDoc>,
    travel: Vec<Vec<f64>>,
    op_cost_fresh: Vec<Vec<Vec<f64>>>,
    op_cost_frozen: Vec<Vec<Vec<f64>>>,
    failure_rate: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    big_t_hours: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cryo_leg_limit_hours: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionDoc {
    y_m: Vec<u8>,
    y_c: Vec<u8>,
    x_m: Vec<Vec<u8>>,
    x_c: Vec<Vec<u8>>,
    z: Vec<u8>,
    m: Vec<Vec<u8>>,
}

fn canonical_json<T: Serialize>(doc: &T) -> String {
    let value = serde_json::to_value(doc).expect("document serialization cannot fail");
    let mut out = serde_json::to_string(&value).expect("value serialization cannot fail");
    out.push('\n');
    out
}

/// Renders the instance in canonical JSON. The optional fields are always
/// written, so defaults picked up during reading become explicit.
pub fn instance_to_json(instance: &Instance) -> String {
    let doc = InstanceDoc {
        orders: instance
            .orders()
            .iter()
            .map(|o| OrderDoc { id: o.id, shelf_life_hours: o.shelf_life_hours })
            .collect(),
        locations: instance
            .locations()
            .iter()
            .map(|l| LocationDoc {
                id: l.id,
                setup_cost_manufacturing: l.setup_cost_manufacturing,
                setup_cost_cryo: l.setup_cost_cryo,
            })
            .collect(),
        modes: instance
            .modes()
            .iter()
            .map(|m| ModeDoc {
                id: m.id,
                p_fresh_hours: m.production_time_fresh_hours,
                p_frozen_hours: m.production_time_frozen_hours,
            })
            .collect(),
        travel: instance.travel().rows().to_vec(),
        op_cost_fresh: (0..instance.n_orders())
            .map(|i| {
                (0..instance.n_locations())
                    .map(|j| {
                        (0..instance.n_modes()).map(|k| instance.op_cost_fresh(i, j, k)).collect()
                    })
                    .collect()
            })
            .collect(),
        op_cost_frozen: (0..instance.n_orders())
            .map(|i| {
                (0..instance.n_locations())
                    .map(|j| {
                        (0..instance.n_modes()).map(|k| instance.op_cost_frozen(i, j, k)).collect()
                    })
                    .collect()
            })
            .collect(),
        failure_rate: (0..instance.n_orders())
            .map(|i| (0..instance.n_modes()).map(|k| instance.failure_rate(i, k)).collect())
            .collect(),
        big_t_hours: Some(instance.big_t_hours()),
        cryo_leg_limit_hours: Some(instance.cryo_leg_limit_hours()),
    };
    canonical_json(&doc)
}

fn parse_instance(text: &str) -> Result<Instance, ReadError> {
    let doc: InstanceDoc =
        serde_json::from_str(text).map_err(|e| ReadError::Parse(e.to_string()))?;
    Ok(Instance::from_parts(
        doc.orders
            .into_iter()
            .map(|o| Order { id: o.id, shelf_life_hours: o.shelf_life_hours })
            .collect(),
        doc.locations
            .into_iter()
            .map(|l| CandidateLocation {
                id: l.id,
                setup_cost_manufacturing: l.setup_cost_manufacturing,
                setup_cost_cryo: l.setup_cost_cryo,
            })
            .collect(),
        doc.modes
            .into_iter()
            .map(|m| Mode {
                id: m.id,
                production_time_fresh_hours: m.p_fresh_hours,
                production_time_frozen_hours: m.p_frozen_hours,
            })
            .collect(),
        TravelMatrix::new(doc.travel),
        doc.op_cost_fresh,
        doc.op_cost_frozen,
        doc.failure_rate,
        doc.big_t_hours,
        doc.cryo_leg_limit_hours,
    ))
}

/// Parses and validates an instance document.
pub fn instance_from_json(text: &str) -> Result<Instance, ReadError> {
    let (instance, violations) = instance_from_json_with_violations(text)?;
    if violations.is_empty() {
        Ok(instance)
    } else {
        Err(ReadError::Invalid(violations))
    }
}

/// Parses an instance document and returns it together with its structural
/// violations instead of refusing invalid ones; used to report problems in
/// full rather than fail on the first.
pub fn instance_from_json_with_violations(
    text: &str,
) -> Result<(Instance, Vec<InstanceViolation>), ReadError> {
    let instance = parse_instance(text)?;
    let violations = instance.validate();
    Ok((instance, violations))
}

fn bits(bools: &[bool]) -> Vec<u8> {
    bools.iter().map(|&b| u8::from(b)).collect()
}

fn bit_rows(rows: &[Vec<bool>]) -> Vec<Vec<u8>> {
    rows.iter().map(|r| bits(r)).collect()
}

fn bools(bits: Vec<u8>, field: &str) -> Result<Vec<bool>, ReadError> {
    bits.into_iter()
        .map(|b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(ReadError::Parse(format!("{field}: entries must be 0 or 1, found {other}"))),
        })
        .collect()
}

fn bool_rows(rows: Vec<Vec<u8>>, field: &str) -> Result<Vec<Vec<bool>>, ReadError> {
    rows.into_iter().map(|r| bools(r, field)).collect()
}

/// The solution document as a JSON value, for embedding in larger documents.
pub(crate) fn solution_value(solution: &Solution) -> serde_json::Value {
    let doc = SolutionDoc {
        y_m: bits(&solution.y_m),
        y_c: bits(&solution.y_c),
        x_m: bit_rows(&solution.x_m),
        x_c: bit_rows(&solution.x_c),
        z: bits(&solution.z),
        m: bit_rows(&solution.m),
    };
    serde_json::to_value(doc).expect("document serialization cannot fail")
}

/// Renders a solution in canonical JSON with 0/1 entries.
pub fn solution_to_json(solution: &Solution) -> String {
    let doc = SolutionDoc {
        y_m: bits(&solution.y_m),
        y_c: bits(&solution.y_c),
        x_m: bit_rows(&solution.x_m),
        x_c: bit_rows(&solution.x_c),
        z: bits(&solution.z),
        m: bit_rows(&solution.m),
    };
    canonical_json(&doc)
}

/// Parses a solution document. Shapes are not checked against any instance
/// here; the evaluator rejects mismatches.
pub fn solution_from_json(text: &str) -> Result<Solution, ReadError> {
    let doc: SolutionDoc =
        serde_json::from_str(text).map_err(|e| ReadError::Parse(e.to_string()))?;
    Ok(Solution {
        y_m: bools(doc.y_m, "y_m")?,
        y_c: bools(doc.y_c, "y_c")?,
        x_m: bool_rows(doc.x_m, "x_m")?,
        x_c: bool_rows(doc.x_c, "x_c")?,
        z: bools(doc.z, "z")?,
        m: bool_rows(doc.m, "m")?,
    })
}
