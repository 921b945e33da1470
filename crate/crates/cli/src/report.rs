//! Report envelopes and the files a command emits.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use topoecon::dynamics::{CharacteristicReport, FieldSample, FixedPointClass, State, SupplyPoint};
use topoecon::optimize::{DeviationReport, LagrangeSolution, OptimumReport};
use topoecon::relations::AxiomReport;
use topoecon::topology::{BettiVector, DeficientProfit, EulerPoincareCheck};
use topoecon::wormhole::{EconomyState, WormholeEvent};

use crate::error::CliError;
use crate::scenario::OutputFormat;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub format: OutputFormat,
    /// Every input that shaped the result, echoed verbatim.
    pub params: Value,
}

impl Header {
    pub fn new(command: &str, seed: u64, format: OutputFormat, params: Value) -> Self {
        Header {
            tool: "topoecon".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            format,
            params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub schema_version: u32,
    pub header: Header,
    pub result: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(header: Header, result: T) -> Self {
        Report { schema_version: SCHEMA_VERSION, header, result }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report types always serialize");
        s.push('\n');
        s
    }
}

/// Re-parses an emitted report and checks the envelope.
pub fn parse_report<T: DeserializeOwned>(text: &str) -> Result<Report<T>, CliError> {
    let report: Report<T> = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(CliError::Validation(format!("unsupported schema_version {}", report.schema_version)));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<RelationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologyResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supply_demand: Option<SupplyDemandResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wormhole: Option<WormholeResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub element: String,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationResult {
    pub axioms: AxiomReport,
    /// Present only when the relation is a complete preorder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub influence: Option<Vec<Level>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub represents: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profit: Option<OptimumReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aim: Option<OptimumReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<DeviationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lagrange: Option<LagrangeSolution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyResult {
    pub counts: Counts,
    pub euler_characteristic: i64,
    pub betti: BettiVector,
    pub euler_poincare: EulerPoincareCheck,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<DeficientProfit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsResult {
    pub characteristic: CharacteristicReport,
    pub classification: FixedPointClass,
    pub steps: usize,
    pub final_state: State,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<State>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<FieldSample>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupplyDemandResult {
    pub seed: u64,
    pub steps: usize,
    pub final_point: SupplyPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<SupplyPoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationAudit {
    pub initial_total: f64,
    pub final_total: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WormholeResult {
    pub event_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<WormholeEvent>>,
    pub final_state: EconomyState,
    pub audit: ConservationAudit,
}

/// Everything a command produces: the report text plus side files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub report: String,
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn new(report: String) -> Self {
        Artifacts { report, files: Vec::new() }
    }

    /// Writes `report.json` and the side files into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let report = dir.join("report.json");
        fs::write(&report, &self.report).map_err(io(&report))?;
        for (name, body) in &self.files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(io(&path))?;
        }
        Ok(())
    }
}

fn csv_table(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string())).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn trajectory_csv(traj: &[State]) -> String {
    csv_table(&["t", "Q", "I"], traj.iter().map(|s| vec![s.t, s.q, s.i]))
}

pub fn field_csv(field: &[FieldSample]) -> String {
    csv_table(&["Q", "I", "dQ", "dI"], field.iter().map(|f| vec![f.q, f.i, f.dq, f.di]))
}

pub fn supply_csv(path: &[SupplyPoint]) -> String {
    csv_table(&["t", "Q"], path.iter().map(|p| vec![p.t, p.q]))
}

pub fn events_jsonl(events: &[WormholeEvent]) -> String {
    events.iter().map(|e| serde_json::to_string(e).expect("events always serialize") + "\n").collect()
}
