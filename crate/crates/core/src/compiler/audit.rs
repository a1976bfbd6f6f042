//! Trace replay: re-derive total time and re-check the resource and
//! capacity invariants from an emitted event trace alone. The replay
//! shares no state with the engine, so it catches engine bookkeeping
//! bugs rather than inheriting them.

use std::collections::BTreeMap;
use std::fmt::{self, Display, Formatter};

use crate::hardware::Topology;

use super::{CompiledSchedule, EventKind, ResourceId, ShuttleEvent};

#[derive(Debug, Clone, PartialEq)]
pub enum AuditViolation {
    /// Two exclusive events overlap on one resource.
    Overlap { resource: ResourceId, at: f64 },
    CapacityExceeded { trap: usize, at: f64, occupancy: usize, capacity: usize },
    NegativeOccupancy { trap: usize, at: f64 },
}

impl Display for AuditViolation {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Self::Overlap { resource, at } => write!(f, "overlapping events on {resource} at {at} us"),
            Self::CapacityExceeded { trap, at, occupancy, capacity } => {
                write!(f, "trap {trap} holds {occupancy} > {capacity} ions at {at} us")
            }
            Self::NegativeOccupancy { trap, at } => {
                write!(f, "trap {trap} occupancy went negative at {at} us")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    /// Latest event end, recomputed from the trace.
    pub total_time: f64,
    pub violations: Vec<AuditViolation>,
}

impl ReplayReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn gate_class(kind: EventKind) -> bool {
    matches!(kind, EventKind::Gate | EventKind::GateSwap | EventKind::IonSwap | EventKind::Measure)
}

/// Occupancy delta a trap sees when this event ends.
fn occupancy_delta(event: &ShuttleEvent) -> i64 {
    match event.kind {
        EventKind::Split | EventKind::Rebalance => -(event.actors.len() as i64),
        EventKind::Merge => event.actors.len() as i64,
        _ => 0,
    }
}

/// Replay a compiled schedule against its topology.
pub fn replay(cs: &CompiledSchedule, topo: &Topology) -> ReplayReport {
    let mut violations = Vec::new();
    let total_time = cs.events.iter().map(ShuttleEvent::end).fold(0.0, f64::max);

    // Exclusivity: gate-class events per trap, transits per edge and
    // per junction. Sort each resource's intervals and scan.
    let mut intervals: BTreeMap<(u8, ResourceId), Vec<(f64, f64)>> = BTreeMap::new();
    for event in &cs.events {
        let class = match (event.kind, event.location) {
            (kind, ResourceId::Trap(_)) if gate_class(kind) => Some(0u8),
            (EventKind::Move, ResourceId::Edge(_)) => Some(1),
            (EventKind::JunctionCross, ResourceId::Junction(_)) => Some(2),
            _ => None,
        };
        if let Some(class) = class {
            intervals.entry((class, event.location)).or_default().push((event.start, event.end()));
        }
    }
    for ((_, resource), mut spans) in intervals {
        spans.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        for pair in spans.windows(2) {
            if pair[1].0 < pair[0].1 - 1e-9 {
                violations.push(AuditViolation::Overlap { resource, at: pair[1].0 });
            }
        }
    }

    // Capacity: apply occupancy deltas at event ends, departures first
    // at equal instants.
    let mut occupancy = vec![0i64; topo.traps.len()];
    for &trap in &cs.initial_trap_of_ion {
        occupancy[trap] += 1;
    }
    for (trap, &occ) in occupancy.iter().enumerate() {
        let capacity = topo.traps[trap].capacity as i64;
        if occ > capacity {
            violations.push(AuditViolation::CapacityExceeded {
                trap,
                at: 0.0,
                occupancy: occ as usize,
                capacity: capacity as usize,
            });
        }
    }
    let mut changes: Vec<(f64, i64, usize)> = cs
        .events
        .iter()
        .filter_map(|e| {
            let delta = occupancy_delta(e);
            if delta == 0 {
                return None;
            }
            let ResourceId::Trap(trap) = e.location else { return None };
            Some((e.end(), delta, trap))
        })
        .collect();
    changes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (at, delta, trap) in changes {
        occupancy[trap] += delta;
        let capacity = topo.traps[trap].capacity as i64;
        if occupancy[trap] < 0 {
            violations.push(AuditViolation::NegativeOccupancy { trap, at });
        } else if occupancy[trap] > capacity {
            violations.push(AuditViolation::CapacityExceeded {
                trap,
                at,
                occupancy: occupancy[trap] as usize,
                capacity: capacity as usize,
            });
        }
    }

    ReplayReport { total_time, violations }
}
