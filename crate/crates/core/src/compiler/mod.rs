//! Shuttling-aware compilation of syndrome schedules onto QCCD
//! topologies.
//!
//! The compiler maps program qubits onto traps, routes ancilla ions to
//! their data partners through shuttle paths and junctions, and prices
//! every atomic step (split, move, junction cross, merge, swap, gate,
//! measure) against a shared resource model:
//!
//! - each trap executes one gate-class operation (Gate, GateSwap,
//!   IonSwap, Measure) or shuttle endpoint (Split, Merge) at a time;
//! - each shuttle path and each junction carries one transit at a time;
//! - trap occupancy is bounded by capacity, with forced rebalances when
//!   a merge would overflow.
//!
//! Waits incurred by shuttle steps (split, move, junction cross, merge,
//! rebalance) are counted as roadblock stalls; waits of gates and
//! measurements on a busy trap are ordinary serialization and are not.

mod audit;
mod engine;
mod map;

use std::collections::BTreeMap;
use std::fmt::{self, Display, Formatter};

use serde::{Deserialize, Serialize};

use crate::hardware::{gate_time, OpTimes};

pub use audit::{replay, AuditViolation, ReplayReport};
pub use engine::{compile_dynamic, compile_static_ejf, shortest_route};
pub use map::{map_greedy_cluster, QubitMap};

/// Ion reordering mechanism inserted when a chain's end ion is not the
/// one that has to leave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwapPolicy {
    /// Three CX gates; works between arbitrary chain positions.
    GateSwap,
    /// Positional swap priced by the interaction distance `d_l`.
    IonSwap,
}

impl Default for SwapPolicy {
    fn default() -> Self {
        Self::GateSwap
    }
}

/// Cost of one swap under the given policy.
///
/// GateSwap costs three gates at the current chain length. IonSwap
/// costs `s*d_l + s*(d_l - 1) + swap_const` where `d_l` is the ion's
/// distance from the chain end and `s` defaults to the split time.
pub fn swap_cost(policy: SwapPolicy, times: &OpTimes, chain_len: usize, d_l: usize) -> f64 {
    match policy {
        SwapPolicy::GateSwap => 3.0 * gate_time(times, chain_len),
        SwapPolicy::IonSwap => {
            let s = times.ionswap_s.unwrap_or(times.split);
            let d = d_l.max(1) as f64;
            s * d + s * (d - 1.0) + times.swap_const
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Split,
    Move,
    Merge,
    JunctionCross,
    GateSwap,
    IonSwap,
    Rebalance,
    Gate,
    Measure,
}

impl EventKind {
    /// Shuttle steps, whose resource waits count as roadblocks.
    pub fn is_shuttle(self) -> bool {
        matches!(
            self,
            Self::Split | Self::Move | Self::Merge | Self::JunctionCross | Self::Rebalance
        )
    }
}

impl Display for EventKind {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Split => "Split",
            Self::Move => "Move",
            Self::Merge => "Merge",
            Self::JunctionCross => "JunctionCross",
            Self::GateSwap => "GateSwap",
            Self::IonSwap => "IonSwap",
            Self::Rebalance => "Rebalance",
            Self::Gate => "Gate",
            Self::Measure => "Measure",
        };
        write!(f, "{name}")
    }
}

/// Resource an event occupies for its duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceId {
    Trap(usize),
    Edge(usize),
    Junction(usize),
}

impl Display for ResourceId {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Self::Trap(id) => write!(f, "trap {id}"),
            Self::Edge(id) => write!(f, "path {id}"),
            Self::Junction(id) => write!(f, "junction {id}"),
        }
    }
}

/// One timed atomic step of the compiled schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuttleEvent {
    pub kind: EventKind,
    /// Participating ion ids (data qubits `0..n`, ancillas `n..n+m`).
    pub actors: Vec<u32>,
    pub location: ResourceId,
    pub start: f64,
    pub duration: f64,
}

impl ShuttleEvent {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

/// A wait incurred by a shuttle step on a contended resource.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stall {
    /// When the actor requested the resource.
    pub time: f64,
    pub resource: ResourceId,
    pub actor: u32,
    pub stall_us: f64,
}

/// Aggregate timing of one compiled schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecStats {
    pub total_time: f64,
    /// Summed durations per event kind (the unrolled, fully serialized
    /// component times).
    pub component_times: BTreeMap<EventKind, f64>,
    pub roadblock_count: usize,
    pub roadblock_us: f64,
    /// `total_time / sum(component_times)`; 1.0 means zero realized
    /// parallelism, smaller is more parallel.
    pub parallel_fraction: f64,
}

impl ExecStats {
    pub fn component(&self, kind: EventKind) -> f64 {
        *self.component_times.get(&kind).unwrap_or(&0.0)
    }

    pub fn serialized_total(&self) -> f64 {
        self.component_times.values().sum()
    }

    /// Split + move + merge + junction + rebalance.
    pub fn shuttle_us(&self) -> f64 {
        self.component_times
            .iter()
            .filter(|(k, _)| k.is_shuttle())
            .map(|(_, v)| v)
            .sum()
    }

    pub fn swap_us(&self) -> f64 {
        self.component(EventKind::GateSwap) + self.component(EventKind::IonSwap)
    }
}

/// A timed event trace plus its statistics and the initial placement
/// the trace started from (needed to audit occupancy).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledSchedule {
    pub events: Vec<ShuttleEvent>,
    pub stalls: Vec<Stall>,
    pub stats: ExecStats,
    /// Trap of each ion before the first event.
    pub initial_trap_of_ion: Vec<usize>,
}

impl CompiledSchedule {
    /// Event trace as JSON lines, one event per line, stable field order.
    pub fn trace_jsonl(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&serde_json::to_string(event).expect("event serializes"));
            out.push('\n');
        }
        out
    }
}

/// Roadblock report: every stall the compilation recorded, in time
/// order. The totals always match the stats counters.
pub fn detect_roadblocks(cs: &CompiledSchedule) -> Vec<Stall> {
    let mut report = cs.stalls.clone();
    report.sort_by(|a, b| a.time.total_cmp(&b.time));
    report
}

/// Build stats from a finished event trace.
pub(crate) fn finalize_stats(events: &[ShuttleEvent], stalls: &[Stall]) -> ExecStats {
    let total_time = events.iter().map(ShuttleEvent::end).fold(0.0, f64::max);
    let mut component_times = BTreeMap::new();
    for event in events {
        *component_times.entry(event.kind).or_insert(0.0) += event.duration;
    }
    let serialized: f64 = component_times.values().sum();
    let parallel_fraction = if serialized > 0.0 { total_time / serialized } else { 1.0 };
    ExecStats {
        total_time,
        component_times,
        roadblock_count: stalls.len(),
        roadblock_us: stalls.iter().map(|s| s.stall_us).sum(),
        parallel_fraction,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompileError {
    InsufficientCapacity { needed: usize, available: usize },
    Unroutable { gate: String },
    CapacityDeadlock { gate: String },
}

impl Display for CompileError {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Self::InsufficientCapacity { needed, available } => {
                write!(f, "{needed} ions exceed total trap capacity {available}")
            }
            Self::Unroutable { gate } => write!(f, "no shuttle route for gate {gate}"),
            Self::CapacityDeadlock { gate } => {
                write!(f, "rebalance budget exhausted while placing gate {gate}")
            }
        }
    }
}

impl std::error::Error for CompileError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gateswap_cost_is_three_gates() {
        let times = OpTimes::default();
        assert_eq!(swap_cost(SwapPolicy::GateSwap, &times, 8, 1), 120.0);
    }

    #[test]
    fn ionswap_cost_formula() {
        let times = OpTimes::default();
        assert_eq!(swap_cost(SwapPolicy::IonSwap, &times, 8, 1), 122.0);
        assert_eq!(swap_cost(SwapPolicy::IonSwap, &times, 8, 3), 442.0);
    }

    #[test]
    fn ionswap_s_override() {
        let times = OpTimes { ionswap_s: Some(10.0), ..OpTimes::default() };
        assert_eq!(swap_cost(SwapPolicy::IonSwap, &times, 8, 3), 10.0 * 3.0 + 10.0 * 2.0 + 42.0);
    }

    #[test]
    fn stats_of_empty_trace() {
        let stats = finalize_stats(&[], &[]);
        assert_eq!(stats.total_time, 0.0);
        assert_eq!(stats.parallel_fraction, 1.0);
    }

    #[test]
    fn component_sum_bounds_total() {
        let events = vec![
            ShuttleEvent {
                kind: EventKind::Gate,
                actors: vec![0, 2],
                location: ResourceId::Trap(0),
                start: 0.0,
                duration: 40.0,
            },
            ShuttleEvent {
                kind: EventKind::Gate,
                actors: vec![1, 3],
                location: ResourceId::Trap(1),
                start: 0.0,
                duration: 40.0,
            },
        ];
        let stats = finalize_stats(&events, &[]);
        assert_eq!(stats.total_time, 40.0);
        assert_eq!(stats.serialized_total(), 80.0);
        assert_eq!(stats.parallel_fraction, 0.5);
    }
}
