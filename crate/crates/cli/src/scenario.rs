//! Scenario files: one JSON document bundling any subset of the model sections.

use serde::{Deserialize, Serialize};
use topoecon::dynamics::{LinearSystem2D, State, SupplyDemandSpec, DEFAULT_EPS};
use topoecon::optimize::{Domain, FirmSpec};
use topoecon::relations::{ChoiceSet, ConfidenceRelation};
use topoecon::topology::{self, Complex, ComplexSpec, SurfaceModel};
use topoecon::wormhole::{EconomyState, Region, Sink, WormholeSpec};
use topoecon::Polynomial;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Both,
}

impl OutputFormat {
    pub fn embeds_series(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    pub fn writes_csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<RelationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supply_demand: Option<SupplyDemandSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wormhole: Option<WormholeSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationSection {
    pub elements: Vec<String>,
    /// Ordered pairs `[x, y]` meaning `x ≥ y`; absent pairs are false.
    #[serde(default)]
    pub pairs: Vec<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tr: Option<Polynomial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tc: Option<Polynomial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infl: Option<Polynomial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub firm: Option<FirmSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<String>>,
    #[serde(default)]
    pub edges: Vec<[String; 2]>,
    #[serde(default)]
    pub faces: Vec<[String; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    pub genus: u64,
    pub market_profit: f64,
    pub edges: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub matrix: [f64; 4],
    pub initial: InitialState,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default)]
    pub t: f64,
    pub q: f64,
    pub i: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub q_range: (f64, f64),
    pub i_range: (f64, f64),
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplyDemandSection {
    pub response: Polynomial,
    #[serde(default)]
    pub potential: f64,
    #[serde(default)]
    pub sigma: f64,
    pub q0: f64,
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WormholeSection {
    pub regions: Vec<Region>,
    pub threshold: f64,
    pub leak_fraction: f64,
    pub waste_fraction: f64,
    pub source: String,
    pub sink: Sink,
}

/// Parses scenario text. Any syntax or shape error is a parse error.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    if text.trim().is_empty() {
        return Err(CliError::Parse("scenario file is empty".into()));
    }
    serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

/// A scenario whose sections have been turned into checked model values.
#[derive(Debug, Clone)]
pub struct Validated {
    pub relation: Option<ConfidenceRelation>,
    pub optimize: Option<ValidOptimize>,
    pub topology: Option<(Complex, Option<(SurfaceModel, u64)>)>,
    pub dynamics: Option<ValidDynamics>,
    pub supply_demand: Option<(SupplyDemandSpec, f64, f64, f64)>,
    pub wormhole: Option<(WormholeSpec, EconomyState)>,
}

#[derive(Debug, Clone)]
pub struct ValidOptimize {
    pub curves: Option<(Polynomial, Polynomial, Option<Polynomial>, Domain)>,
    pub firm: Option<FirmSpec>,
}

#[derive(Debug, Clone)]
pub struct ValidDynamics {
    pub system: LinearSystem2D,
    pub initial: State,
    pub dt: f64,
    pub t_end: f64,
    pub eps: f64,
    pub field: Option<FieldSection>,
}

impl Scenario {
    pub fn validate(&self) -> Result<Validated, CliError> {
        if self.relation.is_none()
            && self.optimize.is_none()
            && self.topology.is_none()
            && self.dynamics.is_none()
            && self.supply_demand.is_none()
            && self.wormhole.is_none()
        {
            return Err(CliError::Validation("scenario has no sections".into()));
        }

        let relation = match &self.relation {
            None => None,
            Some(r) => {
                let cs = ChoiceSet::new(r.elements.iter().cloned()).map_err(|e| v("relation", e))?;
                let pairs = r.pairs.iter().map(|[a, b]| (a.as_str(), b.as_str()));
                Some(ConfidenceRelation::from_pairs(cs, pairs).map_err(|e| v("relation", e))?)
            }
        };

        let optimize = match &self.optimize {
            None => None,
            Some(o) => {
                let curves = match (&o.tr, &o.tc) {
                    (Some(tr), Some(tc)) => {
                        let (lo, hi) = o.domain.ok_or_else(|| v("optimize", "tr/tc given without a domain"))?;
                        let dom = Domain::new(lo, hi).map_err(|e| v("optimize.domain", e))?;
                        Some((tr.clone(), tc.clone(), o.infl.clone(), dom))
                    }
                    (None, None) if o.infl.is_none() && o.domain.is_none() => None,
                    _ => return Err(v("optimize", "tr, tc and domain must be given together")),
                };
                if let Some(firm) = &o.firm {
                    firm.validate().map_err(|e| v("optimize.firm", e))?;
                }
                if curves.is_none() && o.firm.is_none() {
                    return Err(v("optimize", "section needs tr/tc curves or a firm"));
                }
                Some(ValidOptimize { curves, firm: o.firm })
            }
        };

        let topology = match &self.topology {
            None => None,
            Some(t) => {
                let cx = match (&t.fixture, &t.vertices) {
                    (Some(name), None) if t.edges.is_empty() && t.faces.is_empty() => {
                        topology::fixture(name).map_err(|e| v("topology", e))?
                    }
                    (None, Some(vertices)) => Complex::from_spec(&ComplexSpec {
                        vertices: vertices.clone(),
                        edges: t.edges.clone(),
                        faces: t.faces.clone(),
                    })
                    .map_err(|e| v("topology", e))?,
                    _ => return Err(v("topology", "give either a fixture name or an explicit complex")),
                };
                let surface = match t.surface {
                    None => None,
                    Some(s) => Some((
                        SurfaceModel::new(s.genus, s.market_profit).map_err(|e| v("topology.surface", e))?,
                        s.edges,
                    )),
                };
                Some((cx, surface))
            }
        };

        let dynamics = match &self.dynamics {
            None => None,
            Some(d) => {
                let [a11, a12, a21, a22] = d.matrix;
                let system = LinearSystem2D::new(a11, a12, a21, a22).map_err(|e| v("dynamics.matrix", e))?;
                let initial =
                    State::new(d.initial.t, d.initial.q, d.initial.i).map_err(|e| v("dynamics.initial", e))?;
                check_step("dynamics", initial.t, d.t_end, d.dt)?;
                let eps = d.eps.unwrap_or(DEFAULT_EPS);
                if !(eps.is_finite() && eps >= 0.0) {
                    return Err(v("dynamics.eps", "must be finite and non-negative"));
                }
                if let Some(f) = d.field {
                    check_range("dynamics.field.q_range", f.q_range)?;
                    check_range("dynamics.field.i_range", f.i_range)?;
                    if f.grid < 2 {
                        return Err(v("dynamics.field.grid", "needs at least 2 points per axis"));
                    }
                }
                Some(ValidDynamics { system, initial, dt: d.dt, t_end: d.t_end, eps, field: d.field })
            }
        };

        let supply_demand = match &self.supply_demand {
            None => None,
            Some(s) => {
                let spec = SupplyDemandSpec {
                    response: s.response.clone(),
                    potential: s.potential,
                    sigma: s.sigma,
                    seed: self.seed,
                };
                spec.validate().map_err(|e| v("supply_demand", e))?;
                if !s.q0.is_finite() {
                    return Err(v("supply_demand.q0", "must be finite"));
                }
                check_step("supply_demand", 0.0, s.t_end, s.dt)?;
                Some((spec, s.q0, s.t_end, s.dt))
            }
        };

        let wormhole = match &self.wormhole {
            None => None,
            Some(w) => {
                if dynamics.is_none() {
                    return Err(v("wormhole", "needs a dynamics section to drive influence"));
                }
                let spec = WormholeSpec {
                    threshold: w.threshold,
                    leak_fraction: w.leak_fraction,
                    waste_fraction: w.waste_fraction,
                    source: w.source.clone(),
                    sink: w.sink.clone(),
                };
                spec.validate().map_err(|e| v("wormhole", e))?;
                let economy = EconomyState::new(w.regions.clone()).map_err(|e| v("wormhole.regions", e))?;
                if economy.region(&spec.source).is_none() {
                    return Err(v("wormhole.source", format!("unknown region {:?}", spec.source)));
                }
                if let Sink::Region(id) = &spec.sink {
                    if economy.region(id).is_none() {
                        return Err(v("wormhole.sink", format!("unknown region {id:?}")));
                    }
                }
                Some((spec, economy))
            }
        };

        Ok(Validated { relation, optimize, topology, dynamics, supply_demand, wormhole })
    }
}

fn v(context: &str, err: impl std::fmt::Display) -> CliError {
    CliError::validation(context, err)
}

fn check_step(context: &str, t0: f64, t_end: f64, dt: f64) -> Result<(), CliError> {
    if dt.is_finite() && dt > 0.0 && t_end.is_finite() && t_end > t0 {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{context}: need dt > 0 and t_end > t0 (dt={dt}, t0={t0}, t_end={t_end})")))
    }
}

fn check_range(context: &str, (lo, hi): (f64, f64)) -> Result<(), CliError> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{context}: need finite lo < hi, got ({lo}, {hi})")))
    }
}
