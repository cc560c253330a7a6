//! The network-design model as a pure 0-1 linear program.
//!
//! The waiting-time objective multiplies up to four binaries (assignment,
//! frozen flag, mode choice, cryo stop). [`encode`] expands those products
//! into auxiliary binaries constrained by the standard product inequalities
//! `w <= a`, `w <= b`, `w >= a + b - 1`, chaining pair auxiliaries for the
//! higher-degree monomials. Each distinct monomial gets one auxiliary shared
//! by the objective and any epsilon bound. [`decode`] maps a variable
//! assignment back to a [`Solution`], rejecting non-integral values and
//! auxiliaries inconsistent with their factors.
//!
//! [`LinearProgram::lp_text`] writes the encoding in LP text format so
//! external solvers can cross-check results.

use std::fmt;

use crate::evaluator::{self, ConstraintViolation, Severity};
use crate::instance::Instance;
use crate::scalarization::{Objective, Scalarization, ScalarizationError};
use crate::solution::Solution;
use crate::ModelVariant;

/// A variable value within this distance of an integer is rounded to it by
/// [`decode`]; anything further is rejected.
pub const INTEGRALITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

/// Sparse linear expression: `(variable index, coefficient)` pairs sorted by
/// index, zero coefficients omitted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearExpr {
    pub terms: Vec<(usize, f64)>,
}

impl LinearExpr {
    fn push(&mut self, index: usize, coefficient: f64) {
        if coefficient != 0.0 {
            self.terms.push((index, coefficient));
        }
    }

    fn from_dense(dense: &[f64]) -> Self {
        let mut expr = LinearExpr::default();
        for (index, &coefficient) in dense.iter().enumerate() {
            expr.push(index, coefficient);
        }
        expr
    }

    /// The expression's value under the given variable assignment.
    pub fn value(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(index, coefficient)| coefficient * values[index]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    fn as_str(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: LinearExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    fn holds(&self, values: &[f64], tol: f64) -> bool {
        let lhs = self.expr.value(values);
        match self.sense {
            Sense::Le => lhs <= self.rhs + tol,
            Sense::Eq => (lhs - self.rhs).abs() <= tol,
            Sense::Ge => lhs >= self.rhs - tol,
        }
    }
}

/// A minimization program over named variables. Variable order is
/// deterministic given the instance: decision variables first (`ym`, `yc`,
/// `z`, `xm`, `xc`, `m`), then product auxiliaries.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub variables: Vec<Variable>,
    pub objective: LinearExpr,
    pub constraints: Vec<Constraint>,
    /// Number of leading non-auxiliary variables.
    pub n_decision: usize,
}

impl LinearProgram {
    pub fn n_auxiliary(&self) -> usize {
        self.variables.len() - self.n_decision
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.value(values)
    }

    /// Names of all violated constraints and out-of-bound or non-integral
    /// variables, with `tol` slack on every comparison.
    pub fn violations(&self, values: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (variable, &value) in self.variables.iter().zip(values) {
            let integral = match variable.kind {
                VarKind::Binary => (value - value.round()).abs() <= tol,
                VarKind::Continuous => true,
            };
            if value < variable.lower - tol || value > variable.upper + tol || !integral {
                out.push(variable.name.clone());
            }
        }
        for constraint in &self.constraints {
            if !constraint.holds(values, tol) {
                out.push(constraint.name.clone());
            }
        }
        out
    }

    pub fn satisfied_by(&self, values: &[f64], tol: f64) -> bool {
        self.violations(values, tol).is_empty()
    }

    /// The program in LP text format: objective, constraints, bounds for
    /// continuous variables, binary markers.
    pub fn lp_text(&self) -> String {
        let mut out = String::from("Minimize\n obj:");
        if self.objective.terms.is_empty() {
            out.push_str(&format!(" 0 {}", self.variables[0].name));
        } else {
            write_terms(&mut out, &self.objective, &self.variables);
        }
        out.push_str("\nSubject To\n");
        for constraint in &self.constraints {
            out.push_str(&format!(" {}:", constraint.name));
            write_terms(&mut out, &constraint.expr, &self.variables);
            out.push_str(&format!(" {} {}\n", constraint.sense.as_str(), constraint.rhs));
        }
        let continuous: Vec<&Variable> =
            self.variables.iter().filter(|v| v.kind == VarKind::Continuous).collect();
        if !continuous.is_empty() {
            out.push_str("Bounds\n");
            for variable in continuous {
                out.push_str(&format!(
                    " {} <= {} <= {}\n",
                    variable.lower, variable.name, variable.upper
                ));
            }
        }
        out.push_str("Binary\n");
        for variable in &self.variables {
            if variable.kind == VarKind::Binary {
                out.push_str(&format!(" {}\n", variable.name));
            }
        }
        out.push_str("End\n");
        out
    }
}

fn write_terms(out: &mut String, expr: &LinearExpr, variables: &[Variable]) {
    for (position, &(index, coefficient)) in expr.terms.iter().enumerate() {
        let name = &variables[index].name;
        if position == 0 {
            if coefficient < 0.0 {
                out.push_str(&format!(" - {} {name}", -coefficient));
            } else {
                out.push_str(&format!(" {coefficient} {name}"));
            }
        } else if coefficient < 0.0 {
            out.push_str(&format!(" - {} {name}", -coefficient));
        } else {
            out.push_str(&format!(" + {coefficient} {name}"));
        }
    }
}

/// Number of product auxiliaries the encoding introduces: per (order,
/// location) pair one `xm*z`, per mode `xm*m` and `xm*z*m`, per cryo site
/// `xm*z*xc`, and per (cryo site, mode) `xm*z*m*xc`.
pub fn expected_auxiliary_count(n_orders: usize, n_locations: usize, n_modes: usize) -> usize {
    n_orders * n_locations * (1 + 2 * n_modes + n_locations + n_locations * n_modes)
}

/// Index arithmetic for the deterministic variable order.
#[derive(Debug, Clone, Copy)]
struct VarLayout {
    ni: usize,
    nj: usize,
    nk: usize,
}

impl VarLayout {
    fn of(instance: &Instance) -> Self {
        VarLayout {
            ni: instance.n_orders(),
            nj: instance.n_locations(),
            nk: instance.n_modes(),
        }
    }

    fn ym(self, j: usize) -> usize {
        j
    }

    fn yc(self, j: usize) -> usize {
        self.nj + j
    }

    fn z(self, i: usize) -> usize {
        2 * self.nj + i
    }

    fn xm(self, i: usize, j: usize) -> usize {
        2 * self.nj + self.ni + i * self.nj + j
    }

    fn xc(self, i: usize, j: usize) -> usize {
        2 * self.nj + self.ni + self.ni * self.nj + i * self.nj + j
    }

    fn m(self, j: usize, k: usize) -> usize {
        2 * self.nj + self.ni + 2 * self.ni * self.nj + j * self.nk + k
    }

    fn n_decision(self) -> usize {
        2 * self.nj + self.ni + 2 * self.ni * self.nj + self.nj * self.nk
    }

    fn xmz(self, i: usize, j: usize) -> usize {
        self.n_decision() + i * self.nj + j
    }

    fn xmm(self, i: usize, j: usize, k: usize) -> usize {
        self.n_decision() + self.ni * self.nj + (i * self.nj + j) * self.nk + k
    }

    fn xmzm(self, i: usize, j: usize, k: usize) -> usize {
        self.xmm(0, 0, 0) + self.ni * self.nj * self.nk + (i * self.nj + j) * self.nk + k
    }

    fn xmzc(self, i: usize, j: usize, jp: usize) -> usize {
        self.xmzm(0, 0, 0) + self.ni * self.nj * self.nk + (i * self.nj + j) * self.nj + jp
    }

    fn xmzmc(self, i: usize, j: usize, jp: usize, k: usize) -> usize {
        self.xmzc(0, 0, 0)
            + self.ni * self.nj * self.nj
            + ((i * self.nj + j) * self.nj + jp) * self.nk
            + k
    }

    fn total(self) -> usize {
        self.n_decision() + expected_auxiliary_count(self.ni, self.nj, self.nk)
    }

    fn names(self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.total());
        for j in 0..self.nj {
            names.push(format!("ym_{j}"));
        }
        for j in 0..self.nj {
            names.push(format!("yc_{j}"));
        }
        for i in 0..self.ni {
            names.push(format!("z_{i}"));
        }
        for i in 0..self.ni {
            for j in 0..self.nj {
                names.push(format!("xm_{i}_{j}"));
            }
        }
        for i in 0..self.ni {
            for j in 0..self.nj {
                names.push(format!("xc_{i}_{j}"));
            }
        }
        for j in 0..self.nj {
            for k in 0..self.nk {
                names.push(format!("m_{j}_{k}"));
            }
        }
        for i in 0..self.ni {
            for j in 0..self.nj {
                names.push(format!("xmz_{i}_{j}"));
            }
        }
        for i in 0..self.ni {
            for j in 0..self.nj {
                for k in 0..self.nk {
                    names.push(format!("xmm_{i}_{j}_{k}"));
                }
            }
        }
        for i in 0..self.ni {
            for j in 0..self.nj {
                for k in 0..self.nk {
                    names.push(format!("xmzm_{i}_{j}_{k}"));
                }
            }
        }
        for i in 0..self.ni {
            for j in 0..self.nj {
                for jp in 0..self.nj {
                    names.push(format!("xmzc_{i}_{j}_{jp}"));
                }
            }
        }
        for i in 0..self.ni {
            for j in 0..self.nj {
                for jp in 0..self.nj {
                    for k in 0..self.nk {
                        names.push(format!("xmzmc_{i}_{j}_{jp}_{k}"));
                    }
                }
            }
        }
        names
    }
}

/// Waiting-time coefficients over the full variable vector: the objective
/// expanded monomial by monomial onto the decision and product variables.
fn wait_dense(instance: &Instance, lay: VarLayout) -> Vec<f64> {
    let mut dense = vec![0.0; lay.total()];
    for i in 0..lay.ni {
        for j in 0..lay.nj {
            let d_ij = instance.d_order_to_loc(i, j);
            let d_ji = instance.d_loc_to_order(j, i);
            dense[lay.xm(i, j)] += d_ij + d_ji;
            dense[lay.xmz(i, j)] -= d_ij;
            for k in 0..lay.nk {
                let r = instance.failure_rate(i, k);
                let pf = instance.prod_fresh(k);
                let pz = instance.prod_frozen(k);
                dense[lay.xmm(i, j, k)] += (1.0 + r) * pf + r * d_ij;
                dense[lay.xmzm(i, j, k)] += (1.0 + r) * (pz - pf) - r * d_ij;
            }
            for jp in 0..lay.nj {
                let leg = instance.d_order_to_loc(i, jp) + instance.d_loc_to_loc(jp, j);
                dense[lay.xmzc(i, j, jp)] += leg;
                for k in 0..lay.nk {
                    dense[lay.xmzmc(i, j, jp, k)] += instance.failure_rate(i, k) * leg;
                }
            }
        }
    }
    dense
}

/// Cost coefficients: setup on the open flags, operations on the
/// assignment-mode products.
fn cost_dense(instance: &Instance, lay: VarLayout) -> Vec<f64> {
    let mut dense = vec![0.0; lay.total()];
    for j in 0..lay.nj {
        dense[lay.ym(j)] += instance.setup_manufacturing(j);
        dense[lay.yc(j)] += instance.setup_cryo(j);
    }
    for i in 0..lay.ni {
        for j in 0..lay.nj {
            for k in 0..lay.nk {
                let repeat = 1.0 + instance.failure_rate(i, k);
                let fresh = instance.op_cost_fresh(i, j, k);
                let frozen = instance.op_cost_frozen(i, j, k);
                dense[lay.xmm(i, j, k)] += repeat * fresh;
                dense[lay.xmzm(i, j, k)] += repeat * (frozen - fresh);
            }
        }
    }
    dense
}

fn coverage_dense(lay: VarLayout) -> Vec<f64> {
    let mut dense = vec![0.0; lay.total()];
    for i in 0..lay.ni {
        for j in 0..lay.nj {
            dense[lay.xm(i, j)] += 1.0;
        }
    }
    dense
}

#[derive(Debug, Clone, PartialEq)]
pub enum EncodeError {
    Scalarization(ScalarizationError),
    /// Strict inequalities cannot be expressed in a linear program; the
    /// front walk's exclusive cost bounds stay solver-side.
    ExclusiveCostBound,
}

impl fmt::Display for EncodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncodeError::Scalarization(err) => write!(f, "{err}"),
            EncodeError::ExclusiveCostBound => {
                f.write_str("an exclusive cost bound cannot be encoded as a linear constraint")
            }
        }
    }
}

impl std::error::Error for EncodeError {}

impl From<ScalarizationError> for EncodeError {
    fn from(err: ScalarizationError) -> Self {
        EncodeError::Scalarization(err)
    }
}

/// Adds the three product inequalities defining `w = a * b` over binaries.
fn push_product(constraints: &mut Vec<Constraint>, name: &str, w: usize, a: usize, b: usize) {
    let mut le_a = LinearExpr::default();
    le_a.push(w, 1.0);
    le_a.push(a, -1.0);
    constraints.push(Constraint {
        name: format!("{name}_ub_a"),
        expr: le_a,
        sense: Sense::Le,
        rhs: 0.0,
    });
    let mut le_b = LinearExpr::default();
    le_b.push(w, 1.0);
    le_b.push(b, -1.0);
    constraints.push(Constraint {
        name: format!("{name}_ub_b"),
        expr: le_b,
        sense: Sense::Le,
        rhs: 0.0,
    });
    let mut ge = LinearExpr::default();
    ge.push(w, 1.0);
    ge.push(a, -1.0);
    ge.push(b, -1.0);
    constraints.push(Constraint {
        name: format!("{name}_lb"),
        expr: ge,
        sense: Sense::Ge,
        rhs: -1.0,
    });
}

/// Encodes the scalarized model for `instance` as a 0-1 linear program.
///
/// Under [`ModelVariant::Canonical`] the cryo stop is tied to the frozen
/// flag with `sum_j' xc[i,j'] = sum_j xm[i,j]*z[i]`; under
/// [`ModelVariant::Strict`] the verbatim `sum_j' xc[i,j'] <= z[i]` is kept,
/// which leaves the zero-travel direct frozen routes feasible. Both variants
/// restrict the frozen flag to covered orders.
///
/// Epsilon scalarizations with an exclusive cost bound are rejected: strict
/// inequalities have no linear encoding.
pub fn encode(
    instance: &Instance,
    scalarization: &Scalarization,
    variant: ModelVariant,
) -> Result<LinearProgram, EncodeError> {
    scalarization.validate()?;
    if let Scalarization::Epsilon { bounds, .. } = scalarization {
        if bounds.cost_bound_exclusive {
            return Err(EncodeError::ExclusiveCostBound);
        }
    }

    let lay = VarLayout::of(instance);
    let variables: Vec<Variable> = lay
        .names()
        .into_iter()
        .map(|name| Variable { name, kind: VarKind::Binary, lower: 0.0, upper: 1.0 })
        .collect();

    let mut constraints = Vec::new();

    for i in 0..lay.ni {
        let mut expr = LinearExpr::default();
        for j in 0..lay.nj {
            expr.push(lay.xm(i, j), 1.0);
        }
        constraints.push(Constraint {
            name: format!("one_manufacturing_{i}"),
            expr,
            sense: Sense::Le,
            rhs: 1.0,
        });
    }
    for i in 0..lay.ni {
        for j in 0..lay.nj {
            let mut to = LinearExpr::default();
            to.push(lay.xm(i, j), instance.d_order_to_loc(i, j));
            to.push(lay.z(i), -instance.big_t_hours());
            constraints.push(Constraint {
                name: format!("fresh_to_{i}_{j}"),
                expr: to,
                sense: Sense::Le,
                rhs: instance.shelf_life(i),
            });
            let mut from = LinearExpr::default();
            from.push(lay.xm(i, j), instance.d_loc_to_order(j, i));
            from.push(lay.z(i), -instance.big_t_hours());
            constraints.push(Constraint {
                name: format!("fresh_from_{i}_{j}"),
                expr: from,
                sense: Sense::Le,
                rhs: instance.shelf_life(i),
            });
        }
    }
    for i in 0..lay.ni {
        for j in 0..lay.nj {
            let leg = instance.d_order_to_loc(i, j);
            if leg == 0.0 {
                continue;
            }
            let mut expr = LinearExpr::default();
            expr.push(lay.xc(i, j), leg);
            constraints.push(Constraint {
                name: format!("cryo_leg_{i}_{j}"),
                expr,
                sense: Sense::Le,
                rhs: instance.cryo_leg_limit_hours(),
            });
        }
    }
    for i in 0..lay.ni {
        for j in 0..lay.nj {
            let mut open_m = LinearExpr::default();
            open_m.push(lay.xm(i, j), 1.0);
            open_m.push(lay.ym(j), -1.0);
            constraints.push(Constraint {
                name: format!("assign_open_m_{i}_{j}"),
                expr: open_m,
                sense: Sense::Le,
                rhs: 0.0,
            });
            let mut open_c = LinearExpr::default();
            open_c.push(lay.xc(i, j), 1.0);
            open_c.push(lay.yc(j), -1.0);
            constraints.push(Constraint {
                name: format!("assign_open_c_{i}_{j}"),
                expr: open_c,
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
    }
    for j in 0..lay.nj {
        let mut expr = LinearExpr::default();
        expr.push(lay.ym(j), 1.0);
        expr.push(lay.yc(j), 1.0);
        constraints.push(Constraint {
            name: format!("one_facility_type_{j}"),
            expr,
            sense: Sense::Le,
            rhs: 1.0,
        });
    }
    for j in 0..lay.nj {
        let mut expr = LinearExpr::default();
        for k in 0..lay.nk {
            expr.push(lay.m(j, k), 1.0);
        }
        expr.push(lay.ym(j), -1.0);
        constraints.push(Constraint {
            name: format!("mode_iff_manufacturing_{j}"),
            expr,
            sense: Sense::Eq,
            rhs: 0.0,
        });
    }
    for i in 0..lay.ni {
        let mut expr = LinearExpr::default();
        expr.push(lay.z(i), 1.0);
        for j in 0..lay.nj {
            expr.push(lay.xm(i, j), -1.0);
        }
        constraints.push(Constraint {
            name: format!("frozen_implies_covered_{i}"),
            expr,
            sense: Sense::Le,
            rhs: 0.0,
        });
    }
    match variant {
        ModelVariant::Canonical => {
            for i in 0..lay.ni {
                let mut expr = LinearExpr::default();
                for j in 0..lay.nj {
                    expr.push(lay.xc(i, j), 1.0);
                }
                for j in 0..lay.nj {
                    expr.push(lay.xmz(i, j), -1.0);
                }
                constraints.push(Constraint {
                    name: format!("cryo_iff_frozen_{i}"),
                    expr,
                    sense: Sense::Eq,
                    rhs: 0.0,
                });
            }
        }
        ModelVariant::Strict => {
            for i in 0..lay.ni {
                let mut expr = LinearExpr::default();
                for j in 0..lay.nj {
                    expr.push(lay.xc(i, j), 1.0);
                }
                expr.push(lay.z(i), -1.0);
                constraints.push(Constraint {
                    name: format!("cryo_only_if_frozen_{i}"),
                    expr,
                    sense: Sense::Le,
                    rhs: 0.0,
                });
            }
        }
    }

    for i in 0..lay.ni {
        for j in 0..lay.nj {
            push_product(
                &mut constraints,
                &format!("def_xmz_{i}_{j}"),
                lay.xmz(i, j),
                lay.xm(i, j),
                lay.z(i),
            );
        }
    }
    for i in 0..lay.ni {
        for j in 0..lay.nj {
            for k in 0..lay.nk {
                push_product(
                    &mut constraints,
                    &format!("def_xmm_{i}_{j}_{k}"),
                    lay.xmm(i, j, k),
                    lay.xm(i, j),
                    lay.m(j, k),
                );
            }
        }
    }
    for i in 0..lay.ni {
        for j in 0..lay.nj {
            for k in 0..lay.nk {
                push_product(
                    &mut constraints,
                    &format!("def_xmzm_{i}_{j}_{k}"),
                    lay.xmzm(i, j, k),
                    lay.xmz(i, j),
                    lay.m(j, k),
                );
            }
        }
    }
    for i in 0..lay.ni {
        for j in 0..lay.nj {
            for jp in 0..lay.nj {
                push_product(
                    &mut constraints,
                    &format!("def_xmzc_{i}_{j}_{jp}"),
                    lay.xmzc(i, j, jp),
                    lay.xmz(i, j),
                    lay.xc(i, jp),
                );
            }
        }
    }
    for i in 0..lay.ni {
        for j in 0..lay.nj {
            for jp in 0..lay.nj {
                for k in 0..lay.nk {
                    push_product(
                        &mut constraints,
                        &format!("def_xmzmc_{i}_{j}_{jp}_{k}"),
                        lay.xmzmc(i, j, jp, k),
                        lay.xmzm(i, j, k),
                        lay.xc(i, jp),
                    );
                }
            }
        }
    }

    let wait = wait_dense(instance, lay);
    let cost = cost_dense(instance, lay);
    let cover = coverage_dense(lay);

    let objective = match scalarization {
        Scalarization::WeightedSum { wait_weight, cost_weight, coverage_weight } => {
            let mut dense = vec![0.0; lay.total()];
            for idx in 0..lay.total() {
                dense[idx] =
                    wait_weight * wait[idx] + cost_weight * cost[idx] + coverage_weight * cover[idx];
            }
            LinearExpr::from_dense(&dense)
        }
        Scalarization::Epsilon { objective, bounds } => {
            if let Some(max_wait) = bounds.max_wait {
                constraints.push(Constraint {
                    name: "eps_max_wait".to_string(),
                    expr: LinearExpr::from_dense(&wait),
                    sense: Sense::Le,
                    rhs: max_wait,
                });
            }
            if let Some(max_cost) = bounds.max_cost {
                constraints.push(Constraint {
                    name: "eps_max_cost".to_string(),
                    expr: LinearExpr::from_dense(&cost),
                    sense: Sense::Le,
                    rhs: max_cost,
                });
            }
            if let Some(min_coverage) = bounds.min_coverage {
                constraints.push(Constraint {
                    name: "eps_min_coverage".to_string(),
                    expr: LinearExpr::from_dense(&cover),
                    sense: Sense::Ge,
                    rhs: min_coverage as f64,
                });
            }
            match objective {
                Objective::WaitingTime => LinearExpr::from_dense(&wait),
                Objective::Cost => LinearExpr::from_dense(&cost),
                Objective::Coverage => {
                    let negated: Vec<f64> = cover.iter().map(|c| -c).collect();
                    LinearExpr::from_dense(&negated)
                }
            }
        }
    };

    Ok(LinearProgram { variables, objective, constraints, n_decision: lay.n_decision() })
}

/// The variable assignment a solution induces, in the encoding's variable
/// order, with every product auxiliary set to the product of its factors.
pub fn assignment_from_solution(instance: &Instance, solution: &Solution) -> Vec<f64> {
    let lay = VarLayout::of(instance);
    let bit = |b: bool| if b { 1.0 } else { 0.0 };
    let mut values = vec![0.0; lay.total()];
    for j in 0..lay.nj {
        values[lay.ym(j)] = bit(solution.y_m[j]);
        values[lay.yc(j)] = bit(solution.y_c[j]);
        for k in 0..lay.nk {
            values[lay.m(j, k)] = bit(solution.m[j][k]);
        }
    }
    for i in 0..lay.ni {
        values[lay.z(i)] = bit(solution.z[i]);
        for j in 0..lay.nj {
            values[lay.xm(i, j)] = bit(solution.x_m[i][j]);
            values[lay.xc(i, j)] = bit(solution.x_c[i][j]);
        }
    }
    for i in 0..lay.ni {
        for j in 0..lay.nj {
            let xm = solution.x_m[i][j];
            let xmz = xm && solution.z[i];
            values[lay.xmz(i, j)] = bit(xmz);
            for k in 0..lay.nk {
                values[lay.xmm(i, j, k)] = bit(xm && solution.m[j][k]);
                values[lay.xmzm(i, j, k)] = bit(xmz && solution.m[j][k]);
            }
            for jp in 0..lay.nj {
                let xmzc = xmz && solution.x_c[i][jp];
                values[lay.xmzc(i, j, jp)] = bit(xmzc);
                for k in 0..lay.nk {
                    values[lay.xmzmc(i, j, jp, k)] = bit(xmzc && solution.m[j][k]);
                }
            }
        }
    }
    values
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeError {
    WrongLength { expected: usize, found: usize },
    NonIntegral { name: String, value: f64 },
    /// An auxiliary's value disagrees with the product of its factors, which
    /// indicates the assignment never satisfied the product inequalities.
    InconsistentAuxiliary { name: String },
    InfeasibleSolution { violations: Vec<ConstraintViolation> },
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeError::WrongLength { expected, found } => {
                write!(f, "expected {expected} variable values, found {found}")
            }
            DecodeError::NonIntegral { name, value } => {
                write!(f, "variable {name} has non-integral value {value}")
            }
            DecodeError::InconsistentAuxiliary { name } => {
                write!(f, "auxiliary {name} disagrees with the product of its factors")
            }
            DecodeError::InfeasibleSolution { violations } => {
                write!(f, "decoded solution violates {} constraints", violations.len())
            }
        }
    }
}

impl std::error::Error for DecodeError {}

/// Maps an assignment in the encoding's variable order back to a
/// [`Solution`]. Values are rounded to binaries within
/// [`INTEGRALITY_TOLERANCE`]; auxiliaries must equal the product of their
/// factors and the decoded solution must pass the feasibility check.
pub fn decode(instance: &Instance, values: &[f64]) -> Result<Solution, DecodeError> {
    let lay = VarLayout::of(instance);
    if values.len() != lay.total() {
        return Err(DecodeError::WrongLength { expected: lay.total(), found: values.len() });
    }
    let names = lay.names();
    let mut bits = Vec::with_capacity(values.len());
    for (idx, &value) in values.iter().enumerate() {
        let rounded = value.round();
        if (value - rounded).abs() > INTEGRALITY_TOLERANCE || !(rounded == 0.0 || rounded == 1.0)
        {
            return Err(DecodeError::NonIntegral { name: names[idx].clone(), value });
        }
        bits.push(rounded == 1.0);
    }

    let mut solution = Solution::all_closed(lay.ni, lay.nj, lay.nk);
    for j in 0..lay.nj {
        solution.y_m[j] = bits[lay.ym(j)];
        solution.y_c[j] = bits[lay.yc(j)];
        for k in 0..lay.nk {
            solution.m[j][k] = bits[lay.m(j, k)];
        }
    }
    for i in 0..lay.ni {
        solution.z[i] = bits[lay.z(i)];
        for j in 0..lay.nj {
            solution.x_m[i][j] = bits[lay.xm(i, j)];
            solution.x_c[i][j] = bits[lay.xc(i, j)];
        }
    }

    for i in 0..lay.ni {
        for j in 0..lay.nj {
            let xm = bits[lay.xm(i, j)];
            let z = bits[lay.z(i)];
            let mut expected = vec![(lay.xmz(i, j), xm && z)];
            for k in 0..lay.nk {
                expected.push((lay.xmm(i, j, k), xm && bits[lay.m(j, k)]));
                expected.push((lay.xmzm(i, j, k), xm && z && bits[lay.m(j, k)]));
            }
            for jp in 0..lay.nj {
                expected.push((lay.xmzc(i, j, jp), xm && z && bits[lay.xc(i, jp)]));
                for k in 0..lay.nk {
                    expected.push((
                        lay.xmzmc(i, j, jp, k),
                        xm && z && bits[lay.m(j, k)] && bits[lay.xc(i, jp)],
                    ));
                }
            }
            for (idx, want) in expected {
                if bits[idx] != want {
                    return Err(DecodeError::InconsistentAuxiliary { name: names[idx].clone() });
                }
            }
        }
    }

    let violations = evaluator::check_feasible(instance, &solution)
        .expect("decoded solution has the instance's shape");
    let errors: Vec<ConstraintViolation> =
        violations.into_iter().filter(|v| v.severity == Severity::Error).collect();
    if !errors.is_empty() {
        return Err(DecodeError::InfeasibleSolution { violations: errors });
    }
    Ok(solution)
}
