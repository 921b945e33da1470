//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use topoecon::dynamics::{self, LinearSystem2D, DEFAULT_EPS};
use topoecon::optimize::{self, Domain, FirmSpec};
use topoecon::relations::{self, ChoiceSet, ConfidenceRelation};
use topoecon::topology::{self, Complex, ComplexSpec};
use topoecon::wormhole::{Region, Sink};
use topoecon::Polynomial;

use crate::error::{runtime, CliError, EXIT_PARSE, EXIT_USAGE};
use crate::exec;
use crate::report::*;
use crate::scenario::*;

#[derive(Debug, Parser)]
#[command(
    name = "topoecon",
    version,
    about = "Confidence preorders, aim-function optimization, market complexes, linear dynamics and capital leakage"
)]
pub struct Cli {
    /// Directory for report.json and any CSV/JSONL side files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for stochastic sections; overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// json embeds series in the report, csv writes them as files, both does both.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Confidence relations: axioms and influence levels.
    #[command(subcommand)]
    Relation(RelationCmd),
    /// Profit and aim maximization, Cobb-Douglas budget optimum.
    #[command(subcommand)]
    Optimize(OptimizeCmd),
    /// Euler characteristic and Betti numbers of market complexes.
    #[command(subcommand)]
    Topology(TopologyCmd),
    /// Linear output/influence dynamics.
    #[command(subcommand)]
    Dynamics(DynamicsCmd),
    /// Threshold-triggered capital leakage.
    #[command(subcommand)]
    Wormhole(WormholeCmd),
    /// Execute every section of a scenario file.
    Run { scenario: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum RelationCmd {
    /// Report reflexivity, completeness and transitivity with witnesses.
    Check(RelationArgs),
    /// Build canonical influence levels and verify they represent the relation.
    Represent(RelationArgs),
}

#[derive(Debug, Args)]
pub struct RelationArgs {
    /// Comma-separated element labels.
    #[arg(long)]
    pub elements: String,
    /// Comma-separated `x:y` pairs meaning x ≥ y.
    #[arg(long, default_value = "")]
    pub pairs: String,
}

#[derive(Debug, Subcommand)]
pub enum OptimizeCmd {
    /// Maximize TR - TC on the domain.
    Profit(CurveArgs),
    /// Maximize TR - TC + I and report the MR - MC gap at the optimum.
    Aim {
        #[command(flatten)]
        curves: CurveArgs,
        /// Influence coefficients, constant term first.
        #[arg(long, allow_hyphen_values = true)]
        infl: String,
    },
    /// Cobb-Douglas output maximum on the budget line.
    Lagrange(FirmArgs),
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Total revenue coefficients, constant term first.
    #[arg(long, allow_hyphen_values = true)]
    pub tr: String,
    /// Total cost coefficients, constant term first.
    #[arg(long, allow_hyphen_values = true)]
    pub tc: String,
    /// `lo,hi`
    #[arg(long, allow_hyphen_values = true)]
    pub domain: String,
}

#[derive(Debug, Args)]
pub struct FirmArgs {
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub output_price: f64,
    #[arg(long)]
    pub capital_price: f64,
    #[arg(long)]
    pub labor_price: f64,
    #[arg(long)]
    pub budget: f64,
}

#[derive(Debug, Subcommand)]
pub enum TopologyCmd {
    /// Alternating simplex count.
    Euler(ComplexArgs),
    /// Ranks of the homology groups.
    Betti(ComplexArgs),
    /// Compare the simplex and Betti alternating sums.
    Check(ComplexArgs),
}

#[derive(Debug, Args)]
pub struct ComplexArgs {
    /// tetrahedron, c3, two_c3 or torus7.
    #[arg(long, required_unless_present = "complex", conflicts_with = "complex")]
    pub fixture: Option<String>,
    /// JSON file with `vertices`, `edges` and `faces`.
    #[arg(long)]
    pub complex: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum DynamicsCmd {
    /// Fixed-point class from trace, determinant and discriminant.
    Classify {
        #[arg(long, allow_hyphen_values = true)]
        matrix: String,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Fixed-step RK4 trajectory.
    Simulate(SimArgs),
    /// Rate vectors on a regular grid.
    Field {
        #[arg(long, allow_hyphen_values = true)]
        matrix: String,
        #[arg(long, allow_hyphen_values = true, default_value = "-1,1")]
        q_range: String,
        #[arg(long, allow_hyphen_values = true, default_value = "-1,1")]
        i_range: String,
        #[arg(long, default_value_t = 21)]
        grid: usize,
    },
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// `a11,a12,a21,a22`
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: String,
    #[arg(long, allow_hyphen_values = true)]
    pub q0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub i0: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
}

#[derive(Debug, Subcommand)]
pub enum WormholeCmd {
    /// Integrate dynamics and move capital on each upward threshold crossing.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// Comma-separated `id=capital` entries.
        #[arg(long)]
        regions: String,
        #[arg(long, allow_hyphen_values = true)]
        threshold: f64,
        #[arg(long)]
        leak_fraction: f64,
        #[arg(long)]
        waste_fraction: f64,
        #[arg(long)]
        source: String,
        /// A region id or EXTERNAL.
        #[arg(long)]
        sink: String,
    },
}

/// Result of one invocation: what to print and how to exit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn execute<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Outcome { code: 0, stdout: text, stderr: String::new() }
                }
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: text }
                }
                _ => Outcome { code: EXIT_PARSE, stdout: String::new(), stderr: text },
            };
        }
    };
    let result = dispatch(&cli).and_then(|artifacts| {
        if let Some(dir) = &cli.out {
            artifacts.write_to(dir)?;
        }
        Ok(artifacts)
    });
    match result {
        Ok(artifacts) => Outcome { code: 0, stdout: artifacts.report, stderr: String::new() },
        Err(e) => Outcome { code: e.exit_code(), stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

fn dispatch(cli: &Cli) -> Result<Artifacts, CliError> {
    let seed = cli.seed.unwrap_or(0);
    let format = cli.format.unwrap_or_default();
    let single = |command: &str, params: Value, result: Value| {
        let header = Header::new(command, seed, format, params);
        Artifacts::new(Report::new(header, result).to_json())
    };

    match &cli.command {
        Command::Run { scenario } => {
            let text = fs::read_to_string(scenario)
                .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", scenario.display())))?;
            let mut scenario = parse_scenario(&text)?;
            if let Some(seed) = cli.seed {
                scenario.seed = seed;
            }
            if let Some(format) = cli.format {
                scenario.format = format;
            }
            exec::run_scenario(&scenario)
        }

        Command::Relation(cmd) => {
            let (name, args) = match cmd {
                RelationCmd::Check(a) => ("relation check", a),
                RelationCmd::Represent(a) => ("relation represent", a),
            };
            let rel = relation_from_flags(args)?;
            let params = json!({ "elements": rel.choice_set().elements(), "pairs": args.pairs });
            match cmd {
                RelationCmd::Check(_) => Ok(single(name, params, value(&relations::check_axioms(&rel)))),
                RelationCmd::Represent(_) => {
                    let inf = relations::build_influence(&rel).map_err(runtime("relations", "build_influence"))?;
                    let represents = relations::verify_representation(&rel, &inf)
                        .map_err(runtime("relations", "verify_representation"))?;
                    let influence: Vec<Level> =
                        inf.iter().map(|(e, level)| Level { element: e.to_string(), level }).collect();
                    Ok(single(name, params, json!({ "influence": influence, "represents": represents })))
                }
            }
        }

        Command::Optimize(OptimizeCmd::Profit(c)) => {
            let (tr, tc, dom) = curves_from_flags(c)?;
            let params = json!({ "tr": tr, "tc": tc, "domain": dom });
            let r = optimize::maximize_profit(&tr, &tc, dom).map_err(runtime("optimize", "maximize_profit"))?;
            Ok(single("optimize profit", params, value(&r)))
        }
        Command::Optimize(OptimizeCmd::Aim { curves, infl }) => {
            let (tr, tc, dom) = curves_from_flags(curves)?;
            let infl = Polynomial::new(parse_numbers("--infl", infl)?);
            let params = json!({ "tr": tr, "tc": tc, "infl": infl, "domain": dom });
            let aim = optimize::maximize_aim(&tr, &tc, &infl, dom).map_err(runtime("optimize", "maximize_aim"))?;
            let deviation = optimize::deviation_check(&tr, &tc, &infl, aim.q_star)
                .map_err(runtime("optimize", "deviation_check"))?;
            Ok(single("optimize aim", params, json!({ "aim": aim, "deviation": deviation })))
        }
        Command::Optimize(OptimizeCmd::Lagrange(f)) => {
            let firm = FirmSpec {
                scale: f.scale,
                alpha: f.alpha,
                beta: f.beta,
                output_price: f.output_price,
                capital_price: f.capital_price,
                labor_price: f.labor_price,
                budget: f.budget,
            };
            firm.validate().map_err(|e| CliError::validation("firm", e))?;
            let r = optimize::lagrange_optimize(&firm).map_err(runtime("optimize", "lagrange_optimize"))?;
            Ok(single("optimize lagrange", json!(firm), value(&r)))
        }

        Command::Topology(cmd) => {
            let (name, args) = match cmd {
                TopologyCmd::Euler(a) => ("topology euler", a),
                TopologyCmd::Betti(a) => ("topology betti", a),
                TopologyCmd::Check(a) => ("topology check", a),
            };
            let (cx, source) = complex_from_flags(args)?;
            let params = json!({ "source": source, "complex": cx.to_spec() });
            let result = match cmd {
                TopologyCmd::Euler(_) => json!({ "euler_characteristic": topology::euler_characteristic(&cx) }),
                TopologyCmd::Betti(_) => json!({ "betti": topology::betti_numbers(&cx) }),
                TopologyCmd::Check(_) => json!({ "euler_poincare": topology::check_euler_poincare(&cx) }),
            };
            Ok(single(name, params, value(&result)))
        }

        Command::Dynamics(DynamicsCmd::Classify { matrix, eps }) => {
            let sys = system_from_flag(matrix)?;
            if !(eps.is_finite() && *eps >= 0.0) {
                return Err(CliError::Validation(format!("--eps must be finite and non-negative, got {eps}")));
            }
            let params = json!({ "matrix": sys, "eps": eps });
            let result = json!({
                "classification": dynamics::classify(&sys, *eps),
                "characteristic": dynamics::characteristic(&sys),
            });
            Ok(single("dynamics classify", params, value(&result)))
        }
        Command::Dynamics(DynamicsCmd::Simulate(sim)) => {
            let scenario = sim_scenario(sim, format, None)?;
            let d = scenario.validate()?.dynamics.expect("dynamics section is set");
            let traj =
                dynamics::integrate(&d.system, d.initial, d.t_end, d.dt).map_err(runtime("dynamics", "integrate"))?;
            let params = serde_json::to_value(&scenario.dynamics).expect("section serializes");
            let result = json!({
                "steps": traj.len() - 1,
                "final_state": traj.last(),
                "trajectory": format.embeds_series().then_some(&traj),
            });
            let mut artifacts = single("dynamics simulate", params, value(&result));
            if format.writes_csv() {
                artifacts.files.push(("trajectory.csv".into(), trajectory_csv(&traj)));
            }
            Ok(artifacts)
        }
        Command::Dynamics(DynamicsCmd::Field { matrix, q_range, i_range, grid }) => {
            let sys = system_from_flag(matrix)?;
            let q_range = parse_pair("--q-range", q_range)?;
            let i_range = parse_pair("--i-range", i_range)?;
            for (flag, (lo, hi)) in [("--q-range", q_range), ("--i-range", i_range)] {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(CliError::Validation(format!("{flag} needs finite lo < hi")));
                }
            }
            if *grid < 2 {
                return Err(CliError::Validation("--grid needs at least 2 points per axis".into()));
            }
            let field =
                dynamics::phase_field(&sys, q_range, i_range, *grid).map_err(runtime("dynamics", "phase_field"))?;
            let params = json!({ "matrix": sys, "q_range": q_range, "i_range": i_range, "grid": grid });
            let result = json!({
                "samples": field.len(),
                "field": format.embeds_series().then_some(&field),
            });
            let mut artifacts = single("dynamics field", params, value(&result));
            if format.writes_csv() {
                artifacts.files.push(("phase_field.csv".into(), field_csv(&field)));
            }
            Ok(artifacts)
        }

        Command::Wormhole(WormholeCmd::Simulate {
            sim,
            regions,
            threshold,
            leak_fraction,
            waste_fraction,
            source,
            sink,
        }) => {
            let section = WormholeSection {
                regions: parse_regions(regions)?,
                threshold: *threshold,
                leak_fraction: *leak_fraction,
                waste_fraction: *waste_fraction,
                source: source.clone(),
                sink: Sink::from(sink.as_str()),
            };
            let scenario = sim_scenario(sim, format, Some(section))?;
            let valid = scenario.validate()?;
            let d = valid.dynamics.expect("dynamics section is set");
            let (spec, economy) = valid.wormhole.expect("wormhole section is set");
            let (result, events) = exec::wormhole_result(&d, &spec, &economy, format)?;
            let params = json!({ "dynamics": scenario.dynamics, "wormhole": scenario.wormhole });
            let mut artifacts = single("wormhole simulate", params, value(&result));
            artifacts.files.push(("wormhole_events.jsonl".into(), events_jsonl(&events)));
            Ok(artifacts)
        }
    }
}

fn value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("results always serialize")
}

fn sim_scenario(sim: &SimArgs, format: OutputFormat, wormhole: Option<WormholeSection>) -> Result<Scenario, CliError> {
    let matrix: [f64; 4] = parse_numbers("--matrix", &sim.matrix)?
        .try_into()
        .map_err(|_| CliError::Parse("--matrix needs exactly four numbers".into()))?;
    Ok(Scenario {
        name: "cli".into(),
        seed: 0,
        format,
        relation: None,
        optimize: None,
        topology: None,
        dynamics: Some(DynamicsSection {
            matrix,
            initial: InitialState { t: 0.0, q: sim.q0, i: sim.i0 },
            dt: sim.dt,
            t_end: sim.t_end,
            eps: None,
            field: None,
        }),
        supply_demand: None,
        wormhole,
    })
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

pub fn parse_numbers(flag: &str, s: &str) -> Result<Vec<f64>, CliError> {
    split_list(s)
        .map(|t| t.parse::<f64>().map_err(|_| CliError::Parse(format!("{flag}: {t:?} is not a number"))))
        .collect()
}

fn parse_pair(flag: &str, s: &str) -> Result<(f64, f64), CliError> {
    match parse_numbers(flag, s)?[..] {
        [a, b] => Ok((a, b)),
        _ => Err(CliError::Parse(format!("{flag} needs exactly two numbers"))),
    }
}

fn system_from_flag(s: &str) -> Result<LinearSystem2D, CliError> {
    match parse_numbers("--matrix", s)?[..] {
        [a11, a12, a21, a22] => {
            LinearSystem2D::new(a11, a12, a21, a22).map_err(|e| CliError::validation("--matrix", e))
        }
        _ => Err(CliError::Parse("--matrix needs exactly four numbers".into())),
    }
}

fn relation_from_flags(args: &RelationArgs) -> Result<ConfidenceRelation, CliError> {
    let cs = ChoiceSet::new(split_list(&args.elements)).map_err(|e| CliError::validation("--elements", e))?;
    let pairs = split_list(&args.pairs)
        .map(|p| p.split_once(':').ok_or_else(|| CliError::Parse(format!("--pairs: {p:?} is not of the form x:y"))))
        .collect::<Result<Vec<_>, _>>()?;
    ConfidenceRelation::from_pairs(cs, pairs).map_err(|e| CliError::validation("--pairs", e))
}

fn curves_from_flags(c: &CurveArgs) -> Result<(Polynomial, Polynomial, Domain), CliError> {
    let tr = Polynomial::new(parse_numbers("--tr", &c.tr)?);
    let tc = Polynomial::new(parse_numbers("--tc", &c.tc)?);
    let (lo, hi) = parse_pair("--domain", &c.domain)?;
    let dom = Domain::new(lo, hi).map_err(|e| CliError::validation("--domain", e))?;
    Ok((tr, tc, dom))
}

fn complex_from_flags(args: &ComplexArgs) -> Result<(Complex, String), CliError> {
    match (&args.fixture, &args.complex) {
        (Some(name), _) => {
            Ok((topology::fixture(name).map_err(|e| CliError::validation("--fixture", e))?, format!("fixture:{name}")))
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
            let spec: ComplexSpec = serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
            let cx = Complex::from_spec(&spec).map_err(|e| CliError::validation("--complex", e))?;
            Ok((cx, "file".into()))
        }
        (None, None) => Err(CliError::Parse("give --fixture or --complex".into())),
    }
}

fn parse_regions(s: &str) -> Result<Vec<Region>, CliError> {
    split_list(s)
        .map(|entry| {
            let (id, cap) = entry
                .split_once('=')
                .ok_or_else(|| CliError::Parse(format!("--regions: {entry:?} is not of the form id=capital")))?;
            let cap = cap
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::Parse(format!("--regions: {cap:?} is not a number")))?;
            Ok(Region::new(id.trim(), cap))
        })
        .collect()
}
