//! Grid case model: buses, branches, parsing and derived graph structure.
//!
//! All electrical quantities are stored in per-unit on the case's MVA base;
//! the case file declares the base. A [`GridCase`] is validated on
//! construction and immutable afterwards, so it can be shared freely across
//! worker threads.

mod adjacency;
mod line_graph;
mod parse;

pub use adjacency::{signed_adjacency, AdjacencyError, SignedAdjacency};
pub use line_graph::{line_graph, LineGraph};
pub use parse::ParseError;

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// External bus identifier as written in case files (1-based in the bundled
/// IEEE cases, but any unique nonzero integers are accepted).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BusId(pub usize);

/// External branch identifier as written in case files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BranchId(pub usize);

impl std::fmt::Display for BusId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::fmt::Display for BranchId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bus role in the power-flow problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    /// Reference bus: fixed voltage magnitude and angle, balances the system.
    Slack,
    /// Generator bus: fixed active injection and voltage magnitude.
    Pv,
    /// Load bus: fixed active and reactive injection.
    Pq,
}

impl BusKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BusKind::Slack => "slack",
            BusKind::Pv => "pv",
            BusKind::Pq => "pq",
        }
    }
}

/// One bus with its scheduled generation and demand (per-unit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub kind: BusKind,
    /// Scheduled active generation (pu). For the slack bus this is nominal
    /// only; the solved injection comes from the power balance.
    pub p_gen: f64,
    /// Scheduled reactive generation (pu); used directly only on PQ buses.
    pub q_gen: f64,
    pub p_load: f64,
    pub q_load: f64,
    /// Voltage magnitude setpoint (pu); meaningful for PV and slack buses.
    pub v_setpoint: f64,
}

impl Bus {
    /// Machine buses (slack and PV) form the generator set of the
    /// transmission-path enumeration.
    pub fn is_generator(&self) -> bool {
        matches!(self.kind, BusKind::Slack | BusKind::Pv)
    }

    /// Buses with active demand form the load set of the transmission-path
    /// enumeration.
    pub fn is_load(&self) -> bool {
        self.p_load > 0.0
    }
}

/// One branch π-model (per-unit) with its MVA rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: BranchId,
    pub from: BusId,
    pub to: BusId,
    pub r: f64,
    pub x: f64,
    /// Total line-charging susceptance, split half per end.
    pub b_shunt: f64,
    /// Transfer capability c (pu MVA).
    pub rating: f64,
}

/// A validated grid case. Construction checks every structural invariant;
/// afterwards the case is immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCase {
    base_mva: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    slack: usize,
    bus_index: HashMap<BusId, usize>,
    /// Per bus: (neighbor bus index, branch index), in branch order.
    neighbors: Vec<Vec<(usize, usize)>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("duplicate bus id {0}")]
    DuplicateBusId(BusId),
    #[error("duplicate branch id {0}")]
    DuplicateBranchId(BranchId),
    #[error("branch {branch} references unknown bus {bus}")]
    DanglingEndpoint { branch: BranchId, bus: BusId },
    #[error("branch {0} connects a bus to itself")]
    SelfLoop(BranchId),
    #[error("branch {0} has zero reactance")]
    ZeroReactance(BranchId),
    #[error("branch {0} has non-positive rating")]
    NonPositiveRating(BranchId),
    #[error("no slack bus declared")]
    NoSlack,
    #[error("more than one slack bus ({0} and {1})")]
    MultipleSlack(BusId, BusId),
    #[error("no pq bus present")]
    NoLoadBus,
    #[error("bus {0} ({kind}) needs a positive voltage setpoint", kind = .1.as_str())]
    InvalidSetpoint(BusId, BusKind),
    #[error("bus {0} has a non-finite quantity")]
    NonFinite(BusId),
    #[error("non-positive base mva")]
    InvalidBase,
}

impl GridCase {
    /// Validate and index a case. Every invariant that later stages rely on
    /// is checked here, so downstream code can index without re-validating.
    pub fn new(base_mva: f64, buses: Vec<Bus>, branches: Vec<Branch>) -> Result<Self, GridError> {
        if !(base_mva > 0.0) || !base_mva.is_finite() {
            return Err(GridError::InvalidBase);
        }
        let mut bus_index = HashMap::with_capacity(buses.len());
        let mut slack = None;
        for (i, bus) in buses.iter().enumerate() {
            if bus_index.insert(bus.id, i).is_some() {
                return Err(GridError::DuplicateBusId(bus.id));
            }
            if ![bus.p_gen, bus.q_gen, bus.p_load, bus.q_load, bus.v_setpoint]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(GridError::NonFinite(bus.id));
            }
            match bus.kind {
                BusKind::Slack => {
                    if let Some(prev) = slack {
                        return Err(GridError::MultipleSlack(buses[prev as usize].id, bus.id));
                    }
                    slack = Some(i);
                }
                BusKind::Pv | BusKind::Pq => {}
            }
            if bus.is_generator() && !(bus.v_setpoint > 0.0) {
                return Err(GridError::InvalidSetpoint(bus.id, bus.kind));
            }
        }
        let slack = slack.ok_or(GridError::NoSlack)?;
        if !buses.iter().any(|b| b.kind == BusKind::Pq) {
            return Err(GridError::NoLoadBus);
        }

        let mut branch_ids = HashMap::with_capacity(branches.len());
        let mut neighbors = vec![Vec::new(); buses.len()];
        for (e, br) in branches.iter().enumerate() {
            if branch_ids.insert(br.id, e).is_some() {
                return Err(GridError::DuplicateBranchId(br.id));
            }
            if br.from == br.to {
                return Err(GridError::SelfLoop(br.id));
            }
            if br.x == 0.0 || !br.x.is_finite() || !br.r.is_finite() || !br.b_shunt.is_finite() {
                return Err(GridError::ZeroReactance(br.id));
            }
            if !(br.rating > 0.0) || !br.rating.is_finite() {
                return Err(GridError::NonPositiveRating(br.id));
            }
            let f = *bus_index
                .get(&br.from)
                .ok_or(GridError::DanglingEndpoint { branch: br.id, bus: br.from })?;
            let t = *bus_index
                .get(&br.to)
                .ok_or(GridError::DanglingEndpoint { branch: br.id, bus: br.to })?;
            neighbors[f].push((t, e));
            neighbors[t].push((f, e));
        }

        Ok(GridCase { base_mva, buses, branches, slack, bus_index, neighbors })
    }

    /// Parse a case from its text form. See the book's grid-model chapter
    /// for the format.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse::parse_case(text)
    }

    /// Render the case back to its text form. `parse(serialize())` yields an
    /// identical case.
    pub fn serialize(&self) -> String {
        parse::serialize_case(self)
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    /// Dense index of the slack bus.
    pub fn slack_index(&self) -> usize {
        self.slack
    }

    pub fn slack_bus(&self) -> BusId {
        self.buses[self.slack].id
    }

    /// Dense index of a bus id, if present.
    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    /// Dense endpoint indices (from, to) of a branch.
    pub fn branch_endpoints(&self, e: usize) -> (usize, usize) {
        let br = &self.branches[e];
        (self.bus_index[&br.from], self.bus_index[&br.to])
    }

    /// Adjacent (bus index, branch index) pairs of a bus, in branch order.
    pub fn neighbors(&self, bus: usize) -> &[(usize, usize)] {
        &self.neighbors[bus]
    }

    /// Dense indices of the generator set (slack and PV buses).
    pub fn generator_indices(&self) -> Vec<usize> {
        (0..self.buses.len()).filter(|&i| self.buses[i].is_generator()).collect()
    }

    /// Dense indices of the load set (buses with active demand).
    pub fn load_indices(&self) -> Vec<usize> {
        (0..self.buses.len()).filter(|&i| self.buses[i].is_load()).collect()
    }

    /// Net scheduled injection (p, q) at a bus in pu.
    pub fn injection(&self, i: usize) -> (f64, f64) {
        let b = &self.buses[i];
        (b.p_gen - b.p_load, b.q_gen - b.q_load)
    }
}
