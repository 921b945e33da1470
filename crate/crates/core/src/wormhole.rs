//! Threshold-triggered capital leakage between regions.
//!
//! When the influence level reaches a threshold, a fraction of a source
//! region's capital is moved out. Part of it is wasted and the rest lands
//! either in another region or outside the economy. Every unit is ledgered,
//! so total regional capital plus cumulative waste plus the external sink
//! never changes.
//!
//! The module also carries the polity/economy coupling potential
//! `U = 2aX²Y`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::dynamics::{self, DynamicsError, LinearSystem2D, State};

/// Reserved sink label for capital leaving the economy.
pub const EXTERNAL: &str = "EXTERNAL";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WormholeError {
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
    #[error("duplicate region `{0}`")]
    DuplicateRegion(String),
    #[error("`{EXTERNAL}` is reserved and cannot name a region")]
    ReservedRegionId,
    #[error("region `{id}` has invalid capital {capital}")]
    InvalidCapital { id: String, capital: f64 },
    #[error("{name} must lie in [0, 1], got {value}")]
    InvalidFraction { name: &'static str, value: f64 },
    #[error("threshold must be finite, got {0}")]
    InvalidThreshold(f64),
    #[error("ledger balances must be finite and non-negative")]
    InvalidLedger,
    #[error("coupling parameters must be finite")]
    NonFiniteCoupling,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub capital: f64,
}

impl Region {
    pub fn new(id: impl Into<String>, capital: f64) -> Self {
        Self { id: id.into(), capital }
    }
}

/// Destination of leaked capital.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sink {
    Region(String),
    External,
}

impl Sink {
    pub fn label(&self) -> &str {
        match self {
            Sink::Region(id) => id,
            Sink::External => EXTERNAL,
        }
    }
}

impl From<&str> for Sink {
    fn from(s: &str) -> Self {
        if s == EXTERNAL {
            Sink::External
        } else {
            Sink::Region(s.to_string())
        }
    }
}

impl fmt::Display for Sink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Sink {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Sink {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(Sink::from(s.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WormholeSpec {
    /// Influence level `I_c` at which the wormhole opens.
    pub threshold: f64,
    /// Share of source capital moved per event.
    pub leak_fraction: f64,
    /// Share of moved capital lost in transit.
    pub waste_fraction: f64,
    pub source: String,
    pub sink: Sink,
}

impl WormholeSpec {
    pub fn validate(&self) -> Result<(), WormholeError> {
        if !self.threshold.is_finite() {
            return Err(WormholeError::InvalidThreshold(self.threshold));
        }
        for (name, value) in [("leak_fraction", self.leak_fraction), ("waste_fraction", self.waste_fraction)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(WormholeError::InvalidFraction { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomyState {
    pub regions: Vec<Region>,
    pub cumulative_waste: f64,
    pub external_sink: f64,
}

impl EconomyState {
    pub fn new(regions: Vec<Region>) -> Result<Self, WormholeError> {
        let state = Self { regions, cumulative_waste: 0.0, external_sink: 0.0 };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<(), WormholeError> {
        let mut seen = BTreeSet::new();
        for r in &self.regions {
            if r.id == EXTERNAL {
                return Err(WormholeError::ReservedRegionId);
            }
            if !seen.insert(r.id.as_str()) {
                return Err(WormholeError::DuplicateRegion(r.id.clone()));
            }
            if !(r.capital.is_finite() && r.capital >= 0.0) {
                return Err(WormholeError::InvalidCapital { id: r.id.clone(), capital: r.capital });
            }
        }
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.cumulative_waste) || !ok(self.external_sink) {
            return Err(WormholeError::InvalidLedger);
        }
        Ok(())
    }

    pub fn region(&self, id: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    fn position(&self, id: &str) -> Result<usize, WormholeError> {
        self.regions.iter().position(|r| r.id == id).ok_or_else(|| WormholeError::UnknownRegion(id.to_string()))
    }

    pub fn regional_capital(&self) -> f64 {
        compensated_sum(self.regions.iter().map(|r| r.capital))
    }

    /// Regional capital plus waste plus external sink; invariant under every
    /// operation of this module.
    pub fn conserved_total(&self) -> f64 {
        compensated_sum(self.regions.iter().map(|r| r.capital).chain([self.cumulative_waste, self.external_sink]))
    }

    fn check_endpoints(&self, spec: &WormholeSpec) -> Result<(), WormholeError> {
        self.position(&spec.source)?;
        if let Sink::Region(id) = &spec.sink {
            self.position(id)?;
        }
        Ok(())
    }
}

/// Neumaier summation.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WormholeEvent {
    pub t: f64,
    pub source: String,
    pub sink: String,
    pub moved: f64,
    pub wasted: f64,
    pub delivered: f64,
}

/// Closed boundary: the wormhole opens once `influence ≥ threshold`.
pub fn threshold_check(influence: f64, spec: &WormholeSpec) -> bool {
    influence >= spec.threshold
}

/// Moves `leak_fraction` of the source's capital through the wormhole.
///
/// Amounts are rounded so that `moved == wasted + delivered` and the new
/// source balance plus `moved` equal the old balance exactly.
pub fn open_wormhole(
    state: &EconomyState,
    spec: &WormholeSpec,
    t: f64,
) -> Result<(EconomyState, WormholeEvent), WormholeError> {
    spec.validate()?;
    state.check_endpoints(spec)?;
    let mut next = state.clone();
    let src = next.position(&spec.source)?;

    let capital = next.regions[src].capital;
    let remaining = capital - spec.leak_fraction * capital;
    // Exact: for 0 ≤ x ≤ c, c - fl(c - x) is representable.
    let moved = capital - remaining;
    let delivered = moved - spec.waste_fraction * moved;
    let wasted = moved - delivered;

    next.regions[src].capital = remaining;
    next.cumulative_waste += wasted;
    match &spec.sink {
        Sink::External => next.external_sink += delivered,
        Sink::Region(id) => {
            let dst = next.position(id)?;
            next.regions[dst].capital += delivered;
        }
    }

    let event =
        WormholeEvent { t, source: spec.source.clone(), sink: spec.sink.label().to_string(), moved, wasted, delivered };
    Ok((next, event))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageRun {
    pub trajectory: Vec<State>,
    pub events: Vec<WormholeEvent>,
    pub final_state: EconomyState,
}

/// Integrates the product/influence system and opens the wormhole at each
/// grid time where the influence reaches the threshold. After firing, the
/// trigger re-arms only once the influence has dropped back below the
/// threshold. A run that starts at or above the threshold fires at `t0`.
pub fn simulate_with_leakage(
    sys: &LinearSystem2D,
    s0: State,
    spec: &WormholeSpec,
    economy: &EconomyState,
    t_end: f64,
    dt: f64,
) -> Result<LeakageRun, WormholeError> {
    spec.validate()?;
    economy.validate()?;
    economy.check_endpoints(spec)?;
    let trajectory = dynamics::integrate(sys, s0, t_end, dt)?;

    let mut state = economy.clone();
    let mut events = Vec::new();
    let mut armed = true;
    for s in &trajectory {
        if threshold_check(s.i, spec) {
            if armed {
                let (next, event) = open_wormhole(&state, spec, s.t)?;
                state = next;
                events.push(event);
                armed = false;
            }
        } else {
            armed = true;
        }
    }

    Ok(LeakageRun { trajectory, events, final_state: state })
}

/// Polity/economy coupling with confidence level `x` and benefit `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub a: f64,
    pub x: f64,
    pub y: f64,
}

impl CouplingSpec {
    pub fn new(a: f64, x: f64, y: f64) -> Result<Self, WormholeError> {
        if a.is_finite() && x.is_finite() && y.is_finite() {
            Ok(Self { a, x, y })
        } else {
            Err(WormholeError::NonFiniteCoupling)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingPotential {
    pub u: f64,
    pub du_dx: f64,
    pub du_dy: f64,
}

/// `U = 2aX²Y` and its partial derivatives.
pub fn coupling_potential(c: &CouplingSpec) -> CouplingPotential {
    CouplingPotential { u: 2.0 * c.a * c.x * c.x * c.y, du_dx: 4.0 * c.a * c.x * c.y, du_dy: 2.0 * c.a * c.x * c.x }
}

/// Signed residual `observed - U`.
pub fn theory_practice_gap(c: &CouplingSpec, observed: f64) -> f64 {
    observed - coupling_potential(c).u
}
