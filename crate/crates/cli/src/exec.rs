//! Runs a validated scenario section by section.

use topoecon::dynamics::{self, SupplyDemandSpec};
use topoecon::optimize;
use topoecon::relations::{self, ConfidenceRelation};
use topoecon::topology::{self, Complex, SurfaceModel};
use topoecon::wormhole::{self, EconomyState, WormholeSpec};

use crate::error::{runtime, CliError};
use crate::report::*;
use crate::scenario::{OutputFormat, Scenario, ValidDynamics, ValidOptimize};

/// Validates `scenario`, then executes the present sections in the fixed
/// order relation, optimize, topology, dynamics (with supply-demand), wormhole.
pub fn run_scenario(scenario: &Scenario) -> Result<Artifacts, CliError> {
    let valid = scenario.validate()?;
    let format = scenario.format;
    let mut files = Vec::new();

    let relation = valid.relation.as_ref().map(relation_result).transpose()?;
    let optimize = valid.optimize.as_ref().map(optimize_result).transpose()?;
    let topology = valid.topology.as_ref().map(|(cx, surface)| topology_result(cx, surface.as_ref())).transpose()?;

    let dynamics = match &valid.dynamics {
        None => None,
        Some(d) => {
            let (result, traj, field) = dynamics_result(d, format)?;
            if format.writes_csv() {
                files.push(("trajectory.csv".to_string(), trajectory_csv(&traj)));
                if let Some(field) = &field {
                    files.push(("phase_field.csv".to_string(), field_csv(field)));
                }
            }
            Some(result)
        }
    };
    let supply_demand = match &valid.supply_demand {
        None => None,
        Some((spec, q0, t_end, dt)) => {
            let (result, path) = supply_result(spec, *q0, *t_end, *dt, format)?;
            if format.writes_csv() {
                files.push(("supply_demand.csv".to_string(), supply_csv(&path)));
            }
            Some(result)
        }
    };
    let wormhole = match (&valid.wormhole, &valid.dynamics) {
        (Some((spec, economy)), Some(d)) => {
            let (result, events) = wormhole_result(d, spec, economy, format)?;
            files.push(("wormhole_events.jsonl".to_string(), events_jsonl(&events)));
            Some(result)
        }
        _ => None,
    };

    let params = serde_json::to_value(scenario).expect("scenario always serializes");
    let header = Header::new("run", scenario.seed, format, params);
    let report = Report::new(
        header,
        RunResult { scenario: scenario.name.clone(), relation, optimize, topology, dynamics, supply_demand, wormhole },
    );
    Ok(Artifacts { report: report.to_json(), files })
}

pub fn relation_result(rel: &ConfidenceRelation) -> Result<RelationResult, CliError> {
    let axioms = relations::check_axioms(rel);
    if !axioms.is_preorder() {
        return Ok(RelationResult { axioms, influence: None, represents: None });
    }
    let inf = relations::build_influence(rel).map_err(runtime("relations", "build_influence"))?;
    let represents =
        relations::verify_representation(rel, &inf).map_err(runtime("relations", "verify_representation"))?;
    let influence = inf.iter().map(|(element, level)| Level { element: element.to_string(), level }).collect();
    Ok(RelationResult { axioms, influence: Some(influence), represents: Some(represents) })
}

pub fn optimize_result(o: &ValidOptimize) -> Result<OptimizeResult, CliError> {
    let mut out = OptimizeResult { profit: None, aim: None, deviation: None, lagrange: None };
    if let Some((tr, tc, infl, dom)) = &o.curves {
        out.profit = Some(optimize::maximize_profit(tr, tc, *dom).map_err(runtime("optimize", "maximize_profit"))?);
        if let Some(infl) = infl {
            let aim = optimize::maximize_aim(tr, tc, infl, *dom).map_err(runtime("optimize", "maximize_aim"))?;
            out.deviation = Some(
                optimize::deviation_check(tr, tc, infl, aim.q_star).map_err(runtime("optimize", "deviation_check"))?,
            );
            out.aim = Some(aim);
        }
    }
    if let Some(firm) = &o.firm {
        out.lagrange = Some(optimize::lagrange_optimize(firm).map_err(runtime("optimize", "lagrange_optimize"))?);
    }
    Ok(out)
}

pub fn topology_result(cx: &Complex, surface: Option<&(SurfaceModel, u64)>) -> Result<TopologyResult, CliError> {
    let (vertices, edges, faces) = cx.counts();
    let surface = surface
        .map(|(model, edges)| topology::deficient_profit(model, *edges))
        .transpose()
        .map_err(runtime("topology", "deficient_profit"))?;
    Ok(TopologyResult {
        counts: Counts { vertices, edges, faces },
        euler_characteristic: topology::euler_characteristic(cx),
        betti: topology::betti_numbers(cx),
        euler_poincare: topology::check_euler_poincare(cx),
        surface,
    })
}

type DynamicsOutput = (DynamicsResult, Vec<dynamics::State>, Option<Vec<dynamics::FieldSample>>);

pub fn dynamics_result(d: &ValidDynamics, format: OutputFormat) -> Result<DynamicsOutput, CliError> {
    let traj = dynamics::integrate(&d.system, d.initial, d.t_end, d.dt).map_err(runtime("dynamics", "integrate"))?;
    let field = d
        .field
        .map(|f| dynamics::phase_field(&d.system, f.q_range, f.i_range, f.grid))
        .transpose()
        .map_err(runtime("dynamics", "phase_field"))?;
    let result = DynamicsResult {
        characteristic: dynamics::characteristic(&d.system),
        classification: dynamics::classify(&d.system, d.eps),
        steps: traj.len() - 1,
        final_state: *traj.last().expect("trajectory holds the initial state"),
        trajectory: format.embeds_series().then(|| traj.clone()),
        field: field.clone().filter(|_| format.embeds_series()),
    };
    Ok((result, traj, field))
}

pub fn supply_result(
    spec: &SupplyDemandSpec,
    q0: f64,
    t_end: f64,
    dt: f64,
    format: OutputFormat,
) -> Result<(SupplyDemandResult, Vec<dynamics::SupplyPoint>), CliError> {
    let path =
        dynamics::supply_demand_simulate(spec, q0, t_end, dt).map_err(runtime("dynamics", "supply_demand_simulate"))?;
    let result = SupplyDemandResult {
        seed: spec.seed,
        steps: path.len() - 1,
        final_point: *path.last().expect("path holds the initial point"),
        path: format.embeds_series().then(|| path.clone()),
    };
    Ok((result, path))
}

pub fn wormhole_result(
    d: &ValidDynamics,
    spec: &WormholeSpec,
    economy: &EconomyState,
    format: OutputFormat,
) -> Result<(WormholeResult, Vec<wormhole::WormholeEvent>), CliError> {
    let run = wormhole::simulate_with_leakage(&d.system, d.initial, spec, economy, d.t_end, d.dt)
        .map_err(runtime("wormhole", "simulate_with_leakage"))?;
    let initial_total = economy.conserved_total();
    let final_total = run.final_state.conserved_total();
    let result = WormholeResult {
        event_count: run.events.len(),
        events: format.embeds_series().then(|| run.events.clone()),
        final_state: run.final_state,
        audit: ConservationAudit { initial_total, final_total, drift: final_total - initial_total },
    };
    Ok((result, run.events))
}
