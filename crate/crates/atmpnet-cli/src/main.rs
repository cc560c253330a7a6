//! Command-line front end: generate, validate and evaluate instances, run
//! the exact and heuristic solvers, sweep Pareto fronts, run the covering
//! and median baselines, and export the 0-1 linear program.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use atmpnet::classical::{self, BackupSpec, ClassicalError, CoverSpec};
use atmpnet::evaluator::{self, Severity};
use atmpnet::exact::{self, SolveError, SolveOptions};
use atmpnet::generate::{generate, GenParams, Geometry};
use atmpnet::heuristic::{self, SearchParams};
use atmpnet::instance::Instance;
use atmpnet::io::{self, ReadError};
use atmpnet::milp::{encode, EncodeError};
use atmpnet::pareto::{self, FrontGrid, ParetoFront};
use atmpnet::{ModelVariant, Objective, Scalarization};
use clap::{Args, Parser, Subcommand, ValueEnum};

const SCHEMA_HELP: &str = "\
Instance documents (schema version 1) are JSON objects with keys:
  orders            array of {id, shelf_life_hours}
  locations         array of {id, setup_cost_manufacturing, setup_cost_cryo}
  modes             array of {id, p_fresh_hours, p_frozen_hours}
  travel            row-major (|I|+|J|)^2 array of travel hours, orders first
  op_cost_fresh     [order][location][mode] operation costs, fresh route
  op_cost_frozen    [order][location][mode] operation costs, frozen route
  failure_rate      [order][mode] expected repeat fractions in [0, 1)
  big_t_hours       optional; defaults to max travel + 1
  cryo_leg_limit_hours  optional; defaults to 24

Solution documents hold the six 0/1 decision arrays y_m, y_c, x_m, x_c, z, m
under the same index conventions.

Exit codes: 0 ok, 1 infeasible or constraint violations, 2 bad input,
3 search budget exhausted (partial results are still written and flagged).";

#[derive(Parser)]
#[command(name = "atmpnet", about = "Facility location and order assignment for cell and gene therapy supply chains", after_help = SCHEMA_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags every subcommand accepts, used where they apply.
#[derive(Args)]
struct Common {
    /// Problem instance file.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Seed for anything randomized (generation, heuristic restarts).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance on the unit square.
    Gen {
        #[command(flatten)]
        common: Common,
        /// Number of patient orders.
        #[arg(long)]
        orders: usize,
        /// Number of candidate facility locations.
        #[arg(long)]
        locations: usize,
        /// Number of manufacturing modes.
        #[arg(long)]
        modes: usize,
    },
    /// Check an instance file against the schema and the model invariants.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a solution file: waiting time, cost, coverage.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Solution file with the six decision arrays.
        #[arg(long)]
        solution: PathBuf,
    },
    /// Minimize one scalarized objective over the full model.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[command(flatten)]
        search: SearchArgs,
        /// Solver: branch and bound, or multi-start local search.
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
    },
    /// Sweep the Pareto front over coverage levels and cost bounds.
    Front {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        search: SearchArgs,
        /// Solver: branch and bound, or multi-start local search.
        #[arg(long, value_enum, default_value_t = Method::Exact)]
        method: Method,
        /// Maximum cost levels per coverage level.
        #[arg(long, default_value_t = 16)]
        grid: usize,
    },
    /// Run a classical covering or median baseline.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// Which baseline model to run.
        #[arg(long, value_enum)]
        model: BaselineModel,
        /// Coverage radius in travel hours (lscp, mclp, backup).
        #[arg(long)]
        radius: Option<f64>,
        /// Number of facilities to open (mclp, pmedian, pcenter).
        #[arg(long)]
        p: Option<usize>,
        /// Backup coverage radius in travel hours (backup).
        #[arg(long)]
        backup_radius: Option<f64>,
        /// Per-order demand weights, comma separated (mclp, pmedian).
        #[arg(long, value_delimiter = ',')]
        demand_weights: Option<Vec<f64>>,
    },
    /// Write the linearized 0-1 program in LP text form.
    ExportLp {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        objective: ObjectiveArgs,
        /// Keep the verbatim cryopreservation constraint, which lets frozen
        /// orders skip the cryopreservation stop at zero travel time.
        #[arg(long)]
        paper_strict: bool,
    },
}

#[derive(Args)]
struct ObjectiveArgs {
    /// Weighted sum `w,c,v`: minimize w*W + c*C + v*V (v must be <= 0 since
    /// coverage is maximized).
    #[arg(long, value_delimiter = ',', conflicts_with = "objective")]
    weights: Option<Vec<f64>>,
    /// Epsilon form: minimize this objective subject to the bounds below.
    #[arg(long, value_enum)]
    objective: Option<ObjectiveArg>,
    /// Upper bound on total waiting time (epsilon form).
    #[arg(long, requires = "objective")]
    max_wait: Option<f64>,
    /// Upper bound on total cost (epsilon form).
    #[arg(long, requires = "objective")]
    max_cost: Option<f64>,
    /// Lower bound on coverage (epsilon form).
    #[arg(long, requires = "objective")]
    min_coverage: Option<usize>,
}

#[derive(Args)]
struct SearchArgs {
    /// Keep the verbatim cryopreservation constraint, which lets frozen
    /// orders skip the cryopreservation stop at zero travel time.
    #[arg(long)]
    paper_strict: bool,
    /// Branch-and-bound node budget.
    #[arg(long, default_value_t = 10_000_000)]
    max_nodes: u64,
    /// Wall-clock budget in seconds; unset keeps runs fully deterministic.
    #[arg(long)]
    max_seconds: Option<f64>,
    /// Heuristic restarts.
    #[arg(long, default_value_t = 8)]
    starts: usize,
    /// Heuristic perturbation rounds without improvement before a restart
    /// ends.
    #[arg(long, default_value_t = 3)]
    max_no_improve: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Exact,
    Heuristic,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    WaitingTime,
    Cost,
    Coverage,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Objective {
        match o {
            ObjectiveArg::WaitingTime => Objective::WaitingTime,
            ObjectiveArg::Cost => Objective::Cost,
            ObjectiveArg::Coverage => Objective::Coverage,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaselineModel {
    Lscp,
    Mclp,
    Pmedian,
    Pcenter,
    Backup,
}

#[derive(Debug)]
enum CliError {
    /// Unreadable files, schema errors, missing or contradictory flags.
    BadInput(String),
    /// Valid input whose constraints cannot be met.
    Infeasible(String),
    /// A search budget ran out; partial results were written where possible.
    Budget(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::BadInput(_) => 2,
            CliError::Infeasible(_) => 1,
            CliError::Budget(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::BadInput(msg) | CliError::Infeasible(msg) | CliError::Budget(msg) => {
                f.write_str(msg)
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Gen { common, orders, locations, modes } => {
            let params = GenParams {
                n_orders: orders,
                n_locations: locations,
                n_modes: modes,
                seed: common.seed,
                geometry: Geometry::UnitSquare,
            };
            let instance = generate(&params).map_err(|e| CliError::BadInput(e.to_string()))?;
            emit(&common.out, &io::instance_to_json(&instance))
        }
        Command::Validate { common } => {
            let path = require_instance_path(&common)?;
            let text = read_file(&path)?;
            match io::instance_from_json(&text) {
                Ok(_) => Ok(()),
                Err(ReadError::Parse(msg)) => {
                    Err(CliError::BadInput(format!("{}: parse error: {msg}", path.display())))
                }
                Err(ReadError::Invalid(violations)) => {
                    let mut report = String::new();
                    for v in &violations {
                        report.push_str(&format!("{}: {v}\n", path.display()));
                    }
                    match &common.out {
                        Some(_) => emit(&common.out, &report)?,
                        None => eprint!("{report}"),
                    }
                    Err(CliError::Infeasible(format!(
                        "{}: {} violations",
                        path.display(),
                        violations.len()
                    )))
                }
            }
        }
        Command::Eval { common, solution } => {
            let instance = load_instance(&common)?;
            let text = read_file(&solution)?;
            let sol = io::solution_from_json(&text).map_err(|e| {
                CliError::BadInput(format!("{}: {e}", solution.display()))
            })?;
            let violations = evaluator::check_feasible(&instance, &sol)
                .map_err(|e| CliError::BadInput(e.to_string()))?;
            let mut errors = Vec::new();
            for v in &violations {
                match v.severity {
                    Severity::Error => errors.push(v.to_string()),
                    Severity::Warning => eprintln!("warning: {v}"),
                }
            }
            if !errors.is_empty() {
                return Err(CliError::Infeasible(format!(
                    "solution is infeasible:\n{}",
                    errors.join("\n")
                )));
            }
            let vec = evaluator::evaluate(&instance, &sol)
                .map_err(|e| CliError::BadInput(e.to_string()))?;
            let doc = serde_json::json!({
                "waiting_time_hours": vec.waiting_time_hours,
                "cost": vec.cost,
                "coverage": vec.coverage,
            });
            emit(&common.out, &(doc.to_string() + "\n"))
        }
        Command::Solve { common, objective, search, method } => {
            let instance = load_instance(&common)?;
            let scal = scalarization_from(&objective)?;
            let variant = variant_from(search.paper_strict);
            match method {
                Method::Exact => {
                    let options = SolveOptions {
                        variant,
                        max_nodes: search.max_nodes,
                        max_seconds: search.max_seconds,
                        ..SolveOptions::default()
                    };
                    match exact::solve(&instance, &scal, &options) {
                        Ok(outcome) => {
                            print_stats(&serde_json::json!({
                                "method": "exact",
                                "value": outcome.value,
                                "waiting_time_hours": outcome.objectives.waiting_time_hours,
                                "cost": outcome.objectives.cost,
                                "coverage": outcome.objectives.coverage,
                                "nodes_explored": outcome.stats.nodes_explored,
                                "nodes_pruned": outcome.stats.nodes_pruned,
                                "configs_evaluated": outcome.stats.configs_evaluated,
                                "root_bound": outcome.stats.root_bound,
                                "proved_optimal": outcome.stats.proved_optimal,
                            }));
                            if !outcome.stats.proved_optimal {
                                emit(&common.out, &io::solution_to_json(&outcome.solution))?;
                                return Err(CliError::Budget(
                                    "budget exhausted; best-found solution written without an optimality proof"
                                        .to_string(),
                                ));
                            }
                            emit(&common.out, &io::solution_to_json(&outcome.solution))
                        }
                        Err(SolveError::Infeasible { stats }) => {
                            print_stats(&serde_json::json!({
                                "method": "exact",
                                "nodes_explored": stats.nodes_explored,
                                "proved_optimal": false,
                            }));
                            Err(CliError::Infeasible(
                                "no solution satisfies the bounds".to_string(),
                            ))
                        }
                        Err(SolveError::BudgetExhausted { stats }) => {
                            print_stats(&serde_json::json!({
                                "method": "exact",
                                "nodes_explored": stats.nodes_explored,
                                "proved_optimal": false,
                            }));
                            Err(CliError::Budget(
                                "search budget exhausted before any solution satisfied the bounds"
                                    .to_string(),
                            ))
                        }
                        Err(SolveError::Scalarization(e)) => {
                            Err(CliError::BadInput(e.to_string()))
                        }
                    }
                }
                Method::Heuristic => {
                    let params = search_params(&common, &search);
                    match heuristic::local_search(&instance, &scal, variant, &params) {
                        Ok((solution, objectives)) => {
                            print_stats(&serde_json::json!({
                                "method": "heuristic",
                                "value": scal.apply(&objectives),
                                "waiting_time_hours": objectives.waiting_time_hours,
                                "cost": objectives.cost,
                                "coverage": objectives.coverage,
                                "starts": params.starts,
                                "seed": params.seed,
                                "proved_optimal": false,
                            }));
                            emit(&common.out, &io::solution_to_json(&solution))
                        }
                        Err(heuristic::HeuristicError::Infeasible) => Err(CliError::Infeasible(
                            "no visited configuration satisfies the bounds".to_string(),
                        )),
                        Err(e) => Err(CliError::BadInput(e.to_string())),
                    }
                }
            }
        }
        Command::Front { common, search, method, grid } => {
            let instance = load_instance(&common)?;
            let variant = variant_from(search.paper_strict);
            let grid = FrontGrid { cost_levels: grid };
            let front = match method {
                Method::Exact => {
                    let options = SolveOptions {
                        variant,
                        max_nodes: search.max_nodes,
                        max_seconds: search.max_seconds,
                        ..SolveOptions::default()
                    };
                    pareto::front_exact(&instance, &grid, &options)
                }
                Method::Heuristic => {
                    let params = search_params(&common, &search);
                    heuristic::front_heuristic(&instance, &grid, variant, &params)
                        .map_err(|e| CliError::BadInput(e.to_string()))?
                }
            };
            print_stats(&serde_json::json!({
                "points": front.points.len(),
                "truncated": front.truncated,
            }));
            write_front(&common.out, &front)?;
            if front.truncated {
                return Err(CliError::Budget(
                    "some coverage level hit its cost-level cap or a solve budget; the front may be missing points"
                        .to_string(),
                ));
            }
            Ok(())
        }
        Command::Baseline { common, model, radius, p, backup_radius, demand_weights } => {
            let instance = load_instance(&common)?;
            let radius_for = |name: &str| {
                radius.ok_or_else(|| {
                    CliError::BadInput(format!("{name} requires --radius"))
                })
            };
            let p_for = |name: &str| {
                p.ok_or_else(|| CliError::BadInput(format!("{name} requires --p")))
            };
            let (name, open, value) = match model {
                BaselineModel::Lscp => {
                    let spec = CoverSpec {
                        coverage_radius_hours: radius_for("lscp")?,
                        p: 1,
                        demand_weights: None,
                    };
                    let (open, count) = classical::lscp(&instance, &spec).map_err(baseline_err)?;
                    ("lscp", open, count as f64)
                }
                BaselineModel::Mclp => {
                    let spec = CoverSpec {
                        coverage_radius_hours: radius_for("mclp")?,
                        p: p_for("mclp")?,
                        demand_weights: demand_weights.clone(),
                    };
                    let (open, weight) = classical::mclp(&instance, &spec).map_err(baseline_err)?;
                    ("mclp", open, weight)
                }
                BaselineModel::Pmedian => {
                    let spec = CoverSpec {
                        coverage_radius_hours: 0.0,
                        p: p_for("pmedian")?,
                        demand_weights: demand_weights.clone(),
                    };
                    let (open, total) =
                        classical::p_median(&instance, &spec).map_err(baseline_err)?;
                    ("pmedian", open, total)
                }
                BaselineModel::Pcenter => {
                    let spec = CoverSpec {
                        coverage_radius_hours: 0.0,
                        p: p_for("pcenter")?,
                        demand_weights: None,
                    };
                    let (open, worst) =
                        classical::p_center(&instance, &spec).map_err(baseline_err)?;
                    ("pcenter", open, worst)
                }
                BaselineModel::Backup => {
                    let spec = BackupSpec {
                        primary_radius_hours: radius_for("backup")?,
                        backup_radius_hours: backup_radius.ok_or_else(|| {
                            CliError::BadInput("backup requires --backup-radius".to_string())
                        })?,
                    };
                    let (open, count) =
                        classical::backup_lscp(&instance, &spec).map_err(baseline_err)?;
                    ("backup", open, count as f64)
                }
            };
            let doc = serde_json::json!({ "model": name, "open": open, "value": value });
            emit(&common.out, &(doc.to_string() + "\n"))
        }
        Command::ExportLp { common, objective, paper_strict } => {
            let instance = load_instance(&common)?;
            let scal = scalarization_from(&objective)?;
            let program = encode(&instance, &scal, variant_from(paper_strict)).map_err(|e| {
                match e {
                    EncodeError::Scalarization(s) => CliError::BadInput(s.to_string()),
                    EncodeError::ExclusiveCostBound => CliError::BadInput(e.to_string()),
                }
            })?;
            emit(&common.out, &program.lp_text())
        }
    }
}

fn require_instance_path(common: &Common) -> Result<PathBuf, CliError> {
    common
        .instance
        .clone()
        .ok_or_else(|| CliError::BadInput("--instance is required".to_string()))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))
}

fn load_instance(common: &Common) -> Result<Instance, CliError> {
    let path = require_instance_path(common)?;
    let text = read_file(&path)?;
    io::instance_from_json(&text).map_err(|e| match e {
        ReadError::Parse(msg) => {
            CliError::BadInput(format!("{}: parse error: {msg}", path.display()))
        }
        ReadError::Invalid(violations) => {
            let lines: Vec<String> =
                violations.iter().map(|v| format!("{}: {v}", path.display())).collect();
            CliError::Infeasible(lines.join("\n"))
        }
    })
}

fn scalarization_from(args: &ObjectiveArgs) -> Result<Scalarization, CliError> {
    let scal = match (&args.weights, args.objective) {
        (Some(w), None) => {
            if w.len() != 3 {
                return Err(CliError::BadInput(format!(
                    "--weights needs exactly three comma-separated values, found {}",
                    w.len()
                )));
            }
            Scalarization::weighted(w[0], w[1], w[2])
        }
        (None, Some(objective)) => Scalarization::epsilon(
            objective.into(),
            args.max_wait,
            args.max_cost,
            args.min_coverage,
        ),
        (None, None) => {
            return Err(CliError::BadInput(
                "pass either --weights w,c,v or --objective with bounds".to_string(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    scal.validate().map_err(|e| CliError::BadInput(e.to_string()))?;
    Ok(scal)
}

fn variant_from(paper_strict: bool) -> ModelVariant {
    if paper_strict {
        ModelVariant::Strict
    } else {
        ModelVariant::Canonical
    }
}

fn search_params(common: &Common, search: &SearchArgs) -> SearchParams {
    SearchParams {
        starts: search.starts,
        max_no_improve: search.max_no_improve,
        seed: common.seed,
        ..SearchParams::default()
    }
}

fn baseline_err(e: ClassicalError) -> CliError {
    match e {
        ClassicalError::InvalidSpec(_) => CliError::BadInput(e.to_string()),
        ClassicalError::Uncoverable { .. } => CliError::Infeasible(e.to_string()),
    }
}

fn print_stats(stats: &serde_json::Value) {
    eprintln!("{stats}");
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::BadInput(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Writes the front CSV to `out` (or stdout) and, when writing to a file,
/// the solutions sidecar next to it as `<stem>.solutions.json`.
fn write_front(out: &Option<PathBuf>, front: &ParetoFront) -> Result<(), CliError> {
    let csv = pareto::front_to_csv(front);
    emit(out, &csv)?;
    if let Some(path) = out {
        let sidecar = path.with_extension("solutions.json");
        fs::write(&sidecar, pareto::front_solutions_json(front))
            .map_err(|e| CliError::BadInput(format!("{}: {e}", sidecar.display())))?;
    }
    Ok(())
}
