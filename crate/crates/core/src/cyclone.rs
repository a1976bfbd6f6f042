//! The Cyclone ring codesign: data qubits balanced across a cycle of
//! traps, all ancillas rotating in lockstep one trap per step. Each
//! step runs three barrier-separated stages (gates, edge swaps,
//! shuttle); all X stabilizers complete over the first full rotation,
//! all Z stabilizers over the second. The lockstep structure makes the
//! compiled trace roadblock-free by construction, and a closed-form
//! worst case prices it:
//!
//! ```text
//! total <= 2x * (s + ceil(a/x) * (t + g * ceil(n/x))) + 2 * ceil(a/x) * measure
//! ```
//!
//! with `a = max(m_x, m_z)` ancillas, `s` the per-step shuttle cost
//! (split + move + corner crossing + merge, charged uniformly under the
//! lockstep barrier), `t` the swap cost, and `g` the gate time at the
//! fullest chain. Equality holds when the code's supports spread
//! perfectly evenly (every ancilla gates every resident data qubit in
//! every step).

use std::fmt::{self, Display, Formatter};

use crate::codes::CssCode;
use crate::compiler::{
    finalize_stats, swap_cost, CompiledSchedule, EventKind, ResourceId, ShuttleEvent, SwapPolicy,
};
use crate::hardware::{build_ring, gate_time, NodeRef, OpTimes, Topology};

#[derive(Debug, Clone)]
pub struct CycloneConfig<'a> {
    pub code: &'a CssCode,
    /// Trap count of the ring; the base form uses `max(m_x, m_z)`.
    pub x: usize,
    pub capacity: usize,
    pub times: OpTimes,
    pub swap_policy: SwapPolicy,
}

impl<'a> CycloneConfig<'a> {
    pub fn base(code: &'a CssCode, times: OpTimes, swap_policy: SwapPolicy) -> Self {
        let x = ancilla_count(code).max(1);
        let capacity = per_trap_load(code, x);
        Self { code, x, capacity, times, swap_policy }
    }

    pub fn ancilla_count(&self) -> usize {
        ancilla_count(self.code)
    }

    fn validate(&self) -> Result<(), CycloneError> {
        if self.x == 0 {
            return Err(CycloneError::ZeroTraps);
        }
        let load = per_trap_load(self.code, self.x);
        if load > self.capacity {
            return Err(CycloneError::CapacityViolation { needed: load, capacity: self.capacity });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CycloneError {
    ZeroTraps,
    CapacityViolation { needed: usize, capacity: usize },
}

impl Display for CycloneError {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Self::ZeroTraps => write!(f, "cyclone needs at least one trap"),
            Self::CapacityViolation { needed, capacity } => {
                write!(f, "per-trap load {needed} exceeds capacity {capacity}")
            }
        }
    }
}

impl std::error::Error for CycloneError {}

/// Ancillas needed: `max(m_x, m_z)`, reused between the two rotations.
pub fn ancilla_count(code: &CssCode) -> usize {
    code.m_x.max(code.m_z)
}

/// Worst-case ions per trap: data share plus ancilla share.
pub fn per_trap_load(code: &CssCode, x: usize) -> usize {
    code.n.div_ceil(x) + ancilla_count(code).div_ceil(x)
}

/// Tight capacity of the sensitivity sweep: data share plus a share of
/// the full stabilizer count `m = m_x + m_z`.
pub fn tight_capacity(code: &CssCode, x: usize) -> usize {
    code.n.div_ceil(x) + code.m().div_ceil(x)
}

/// Round-robin balanced partition of data qubits: qubit `q` lives in
/// trap `q mod x`. Cell sizes differ by at most one.
pub fn partition_data(n: usize, x: usize) -> Vec<Vec<usize>> {
    let mut cells = vec![Vec::new(); x];
    for q in 0..n {
        cells[q % x].push(q);
    }
    cells
}

/// Stabilizer served by each ancilla in each rotation: ancilla `i`
/// measures `X_i` in the first rotation and `Z_i` in the second; when
/// the counts differ, surplus ancillas idle through the short phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationAssignment {
    pub x_phase: Vec<Option<usize>>,
    pub z_phase: Vec<Option<usize>>,
}

pub fn assign_rotations(code: &CssCode) -> RotationAssignment {
    let a = ancilla_count(code);
    RotationAssignment {
        x_phase: (0..a).map(|i| (i < code.m_x).then_some(i)).collect(),
        z_phase: (0..a).map(|i| (i < code.m_z).then_some(i)).collect(),
    }
}

/// `traps * execution time * ancillas`, the combined efficiency metric.
pub fn spacetime_cost(total_us: f64, traps: usize, ancillas: usize) -> f64 {
    total_us * traps as f64 * ancillas as f64
}

/// The ring topology a config runs on.
pub fn cyclone_topology(cfg: &CycloneConfig) -> Topology {
    build_ring(cfg.x, cfg.capacity)
}

struct GapInfo {
    /// First edge of the trap-to-trap gap (the coordinated move).
    edge: usize,
    /// First corner junction in the gap, if any.
    junction: Option<usize>,
}

/// Per-trap outgoing gap of the ring cycle, following edge order.
fn ring_gaps(topo: &Topology, x: usize) -> Vec<GapInfo> {
    let mut gaps = Vec::with_capacity(x);
    let mut edge = 0usize;
    for _ in 0..x {
        let first_edge = edge;
        let mut junction = None;
        loop {
            let (_, to) = topo.edges[edge];
            edge += 1;
            match to {
                NodeRef::Trap(_) => break,
                NodeRef::Junction(j) => {
                    junction.get_or_insert(j);
                }
            }
        }
        gaps.push(GapInfo { edge: first_edge, junction });
    }
    gaps
}

/// Compile a Cyclone run into a timed event trace.
///
/// Per step and per trap: every resident ancilla gates its in-cell
/// support members (serialized, one gate per trap at a time), then one
/// edge swap per resident ancilla, then the global lockstep shuttle.
/// Merges wait for the corner crossing everywhere, so every shuttle
/// stage costs split + move + junction_cross(2) + merge uniformly.
/// Measurements close each rotation. No resource is ever contended, so
/// the trace is roadblock-free.
pub fn cyclone_compile(cfg: &CycloneConfig) -> Result<CompiledSchedule, CycloneError> {
    cfg.validate()?;
    let code = cfg.code;
    let times = &cfg.times;
    let x = cfg.x;
    let a = cfg.ancilla_count();
    let n = code.n;
    let topo = cyclone_topology(cfg);
    let gaps = if x >= 2 { ring_gaps(&topo, x) } else { Vec::new() };
    let partition = partition_data(n, x);
    let assignment = assign_rotations(code);

    // supports as sorted membership lists per stabilizer
    let x_support: Vec<Vec<usize>> = (0..code.m_x).map(|r| code.hx.row_support(r)).collect();
    let z_support: Vec<Vec<usize>> = (0..code.m_z).map(|r| code.hz.row_support(r)).collect();

    let mut initial_trap_of_ion = Vec::with_capacity(n + a);
    for q in 0..n {
        initial_trap_of_ion.push(q % x);
    }
    for j in 0..a {
        initial_trap_of_ion.push(j % x);
    }

    let shuttle_cost =
        times.split + times.move_ + times.junction_cross(2) + times.merge;
    let mut events: Vec<ShuttleEvent> = Vec::new();
    let mut clock = 0.0f64;

    for rotation in 0..2usize {
        let (phase, supports) = match rotation {
            0 => (&assignment.x_phase, &x_support),
            _ => (&assignment.z_phase, &z_support),
        };
        for step in 0..x {
            let global_step = rotation * x + step;
            // residents of trap t this step: ancilla j is at (j + global_step) mod x
            let mut residents: Vec<Vec<usize>> = vec![Vec::new(); x];
            for j in 0..a {
                residents[(j + global_step) % x].push(j);
            }

            // stage 1: gates, serialized per trap
            let mut stage_end = clock;
            for (trap, anc_list) in residents.iter().enumerate() {
                let chain_len = partition[trap].len() + anc_list.len();
                let mut cursor = clock;
                for &j in anc_list {
                    let Some(stab) = phase[j] else { continue };
                    for &q in &partition[trap] {
                        if !supports[stab].binary_search(&q).is_ok() {
                            continue;
                        }
                        let duration = gate_time(times, chain_len);
                        events.push(ShuttleEvent {
                            kind: EventKind::Gate,
                            actors: vec![q as u32, (n + j) as u32],
                            location: ResourceId::Trap(trap),
                            start: cursor,
                            duration,
                        });
                        cursor += duration;
                    }
                }
                stage_end = stage_end.max(cursor);
            }
            clock = stage_end;

            if x < 2 {
                continue;
            }

            // stage 2: one edge swap per resident ancilla, serialized per trap
            let mut stage_end = clock;
            for (trap, anc_list) in residents.iter().enumerate() {
                let chain_len = partition[trap].len() + anc_list.len();
                let mut cursor = clock;
                for &j in anc_list {
                    let d_l = chain_len.saturating_sub(1).max(1);
                    let duration = swap_cost(cfg.swap_policy, times, chain_len, d_l);
                    let kind = match cfg.swap_policy {
                        SwapPolicy::GateSwap => EventKind::GateSwap,
                        SwapPolicy::IonSwap => EventKind::IonSwap,
                    };
                    let mut actors = vec![(n + j) as u32];
                    if let Some(&edge_data) = partition[trap].last() {
                        if matches!(kind, EventKind::GateSwap) {
                            actors.push(edge_data as u32);
                        }
                    }
                    events.push(ShuttleEvent {
                        kind,
                        actors,
                        location: ResourceId::Trap(trap),
                        start: cursor,
                        duration,
                    });
                    cursor += duration;
                }
                stage_end = stage_end.max(cursor);
            }
            clock = stage_end;

            // stage 3: lockstep shuttle, batch per trap; merges wait for
            // the corner crossings so every trap advances in unison
            let split_start = clock;
            let move_start = split_start + times.split;
            let merge_start = move_start + times.move_ + times.junction_cross(2);
            for (trap, anc_list) in residents.iter().enumerate() {
                if anc_list.is_empty() {
                    continue;
                }
                let batch: Vec<u32> = anc_list.iter().map(|&j| (n + j) as u32).collect();
                let gap = &gaps[trap];
                events.push(ShuttleEvent {
                    kind: EventKind::Split,
                    actors: batch.clone(),
                    location: ResourceId::Trap(trap),
                    start: split_start,
                    duration: times.split,
                });
                events.push(ShuttleEvent {
                    kind: EventKind::Move,
                    actors: batch.clone(),
                    location: ResourceId::Edge(gap.edge),
                    start: move_start,
                    duration: times.move_,
                });
                if let Some(j) = gap.junction {
                    events.push(ShuttleEvent {
                        kind: EventKind::JunctionCross,
                        actors: batch.clone(),
                        location: ResourceId::Junction(j),
                        start: move_start + times.move_,
                        duration: times.junction_cross(2),
                    });
                }
                events.push(ShuttleEvent {
                    kind: EventKind::Merge,
                    actors: batch,
                    location: ResourceId::Trap((trap + 1) % x),
                    start: merge_start,
                    duration: times.merge,
                });
            }
            clock = split_start + shuttle_cost;
        }

        // measure the rotation's results, serialized per trap
        let mut stage_end = clock;
        let mut residents: Vec<Vec<usize>> = vec![Vec::new(); x];
        for j in 0..a {
            residents[(j + (rotation + 1) * x) % x].push(j);
        }
        for anc_list in residents.iter() {
            let mut cursor = clock;
            for &j in anc_list {
                if phase[j].is_none() {
                    continue;
                }
                let trap = (j + (rotation + 1) * x) % x;
                events.push(ShuttleEvent {
                    kind: EventKind::Measure,
                    actors: vec![(n + j) as u32],
                    location: ResourceId::Trap(trap),
                    start: cursor,
                    duration: times.measure,
                });
                cursor += times.measure;
            }
            stage_end = stage_end.max(cursor);
        }
        clock = stage_end;
    }

    let stats = finalize_stats(&events, &[]);
    Ok(CompiledSchedule { events, stalls: Vec::new(), stats, initial_trap_of_ion })
}

/// Closed-form worst-case execution time of a config, microseconds.
///
/// Dominates the simulated total for every valid config and matches it
/// exactly on codes with perfectly uniform support spread.
pub fn cyclone_bound(cfg: &CycloneConfig) -> f64 {
    let code = cfg.code;
    let x = cfg.x.max(1);
    let a_per_trap = cfg.ancilla_count().div_ceil(x);
    let d_per_trap = code.n.div_ceil(x);
    let chain = d_per_trap + a_per_trap;
    let g = gate_time(&cfg.times, chain);
    let t = swap_cost(cfg.swap_policy, &cfg.times, chain, chain.saturating_sub(1).max(1));
    let s = cfg.times.split + cfg.times.move_ + cfg.times.junction_cross(2) + cfg.times.merge;
    let per_step = s + a_per_trap as f64 * (t + g * d_per_trap as f64);
    2.0 * x as f64 * per_step + 2.0 * a_per_trap as f64 * cfg.times.measure
}

/// One row of the trap-count sensitivity sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub x: usize,
    pub capacity: usize,
    pub result: Result<SweepPoint, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub total_us: f64,
    pub bound_us: f64,
    pub spacetime: f64,
}

/// Compile the code once per trap count. In tight mode the capacity
/// follows `ceil(n/x) + ceil(m/x)`; otherwise `base_capacity` applies
/// (clamped up to the per-trap load so every x stays feasible).
pub fn sweep_traps(
    code: &CssCode,
    x_list: &[usize],
    tight: bool,
    base_capacity: usize,
    times: &OpTimes,
    swap_policy: SwapPolicy,
) -> Vec<SweepRow> {
    let mut rows = Vec::with_capacity(x_list.len());
    for &x in x_list {
        let capacity = if tight {
            tight_capacity(code, x.max(1))
        } else {
            base_capacity.max(per_trap_load(code, x.max(1)))
        };
        let cfg = CycloneConfig { code, x, capacity, times: times.clone(), swap_policy };
        let result = cyclone_compile(&cfg)
            .map(|cs| SweepPoint {
                total_us: cs.stats.total_time,
                bound_us: cyclone_bound(&cfg),
                spacetime: spacetime_cost(cs.stats.total_time, x, cfg.ancilla_count()),
            })
            .map_err(|e| e.to_string());
        rows.push(SweepRow { x, capacity, result });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{presets, CodeFamily, CssCode};
    use crate::compiler::{detect_roadblocks, replay};
    use crate::gf2::BinaryMatrix;

    fn defaults() -> OpTimes {
        OpTimes::default()
    }

    #[test]
    fn partition_is_balanced() {
        let cells = partition_data(225, 108);
        let sizes: Vec<usize> = cells.iter().map(Vec::len).collect();
        assert!(sizes.iter().all(|&s| s == 2 || s == 3));
        assert_eq!(sizes.iter().sum::<usize>(), 225);
        assert_eq!(sizes.iter().filter(|&&s| s == 3).count(), 9);
    }

    #[test]
    fn partition_edge_cases() {
        assert!(partition_data(8, 8).iter().all(|c| c.len() == 1));
        assert_eq!(partition_data(225, 1)[0].len(), 225);
    }

    #[test]
    fn rotation_assignment_covers_both_kinds() {
        let code = presets::hgp_225();
        let assignment = assign_rotations(&code);
        assert_eq!(assignment.x_phase.len(), 108);
        assert!(assignment.x_phase.iter().all(Option::is_some));
        assert!(assignment.z_phase.iter().all(Option::is_some));
    }

    #[test]
    fn rotation_assignment_pads_unbalanced_codes() {
        let hx = BinaryMatrix::from_rows(&[vec![1, 1, 0, 0], vec![0, 0, 1, 1], vec![1, 1, 1, 1]]);
        let hz = BinaryMatrix::from_rows(&[vec![1, 1, 1, 1], vec![1, 1, 0, 0]]);
        let code = CssCode::new(hx, hz, CodeFamily::Custom).unwrap();
        let assignment = assign_rotations(&code);
        assert_eq!(assignment.x_phase.len(), 3);
        assert_eq!(assignment.z_phase, vec![Some(0), Some(1), None]);
    }

    #[test]
    fn tight_capacity_formula() {
        let code = presets::hgp_225();
        assert_eq!(tight_capacity(&code, 64), 8);
        assert_eq!(tight_capacity(&code, 1), 441);
    }

    #[test]
    fn single_stabilizer_single_trap_is_gate_plus_measure() {
        let hx = BinaryMatrix::from_rows(&[vec![1]]);
        let hz = BinaryMatrix::zeros(0, 1);
        let code = CssCode::new(hx, hz, CodeFamily::Custom).unwrap();
        let cfg = CycloneConfig {
            code: &code,
            x: 1,
            capacity: 2,
            times: defaults(),
            swap_policy: SwapPolicy::GateSwap,
        };
        let cs = cyclone_compile(&cfg).unwrap();
        let times = defaults();
        assert_eq!(cs.stats.total_time, times.gate_base + times.measure);
        assert!(cs.events.iter().all(|e| !e.kind.is_shuttle()));
    }

    #[test]
    fn bound_dominates_and_roadblock_free_on_presets() {
        for code in [presets::hgp_5(), presets::bb_144()] {
            let cfg = CycloneConfig::base(&code, defaults(), SwapPolicy::GateSwap);
            let cs = cyclone_compile(&cfg).unwrap();
            assert!(detect_roadblocks(&cs).is_empty());
            assert!(cs.stats.total_time <= cyclone_bound(&cfg));
            let report = replay(&cs, &cyclone_topology(&cfg));
            assert!(report.is_clean(), "{:?}", report.violations);
            assert_eq!(report.total_time, cs.stats.total_time);
        }
    }

    #[test]
    fn uniform_synthetic_code_meets_bound_exactly() {
        // all-ones checks: every ancilla gates every data qubit in
        // every trap, the bound's worst case
        let n = 12;
        let rows = vec![vec![1u8; n]; 4];
        let hx = BinaryMatrix::from_rows(&rows);
        let hz = BinaryMatrix::from_rows(&rows);
        let code = CssCode::new(hx, hz, CodeFamily::Custom).unwrap();
        for x in [1, 2, 4] {
            let cfg = CycloneConfig {
                code: &code,
                x,
                capacity: per_trap_load(&code, x),
                times: defaults(),
                swap_policy: SwapPolicy::GateSwap,
            };
            let cs = cyclone_compile(&cfg).unwrap();
            if x >= 2 {
                assert_eq!(cs.stats.total_time, cyclone_bound(&cfg), "x = {x}");
            } else {
                assert!(cs.stats.total_time <= cyclone_bound(&cfg));
            }
        }
    }

    #[test]
    fn coverage_is_exact_on_bb_144() {
        let code = presets::bb_144();
        let cfg = CycloneConfig::base(&code, defaults(), SwapPolicy::GateSwap);
        let cs = cyclone_compile(&cfg).unwrap();
        let gates: Vec<&ShuttleEvent> =
            cs.events.iter().filter(|e| e.kind == EventKind::Gate).collect();
        assert_eq!(gates.len(), code.hx.popcount() + code.hz.popcount());
        // each (ancilla, data) pair at most twice (X and Z rotations)
        let mut seen = std::collections::BTreeMap::new();
        for g in gates {
            *seen.entry((g.actors[0], g.actors[1])).or_insert(0usize) += 1;
        }
        assert!(seen.values().all(|&c| c <= 2));
    }

    #[test]
    fn exactly_2x_shuttle_phases() {
        let code = presets::hgp_5();
        let cfg = CycloneConfig { code: &code, x: 3, capacity: 4, times: defaults(), swap_policy: SwapPolicy::GateSwap };
        let cs = cyclone_compile(&cfg).unwrap();
        let splits: std::collections::BTreeSet<u64> = cs
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Split)
            .map(|e| e.start.to_bits())
            .collect();
        assert_eq!(splits.len(), 2 * 3);
    }

    #[test]
    fn rejects_overfull_config() {
        let code = presets::hgp_5();
        let cfg = CycloneConfig { code: &code, x: 1, capacity: 3, times: defaults(), swap_policy: SwapPolicy::GateSwap };
        assert!(matches!(cyclone_compile(&cfg), Err(CycloneError::CapacityViolation { .. })));
    }

    #[test]
    fn spacetime_cost_is_a_product() {
        assert_eq!(spacetime_cost(100.0, 1, 1), 100.0);
        assert_eq!(spacetime_cost(0.0, 10, 10), 0.0);
    }

    #[test]
    fn sweep_x_equals_one_has_no_shuttles() {
        let code = presets::hgp_225();
        let rows = sweep_traps(&code, &[1], true, 0, &defaults(), SwapPolicy::GateSwap);
        assert_eq!(rows[0].capacity, 441);
        assert!(rows[0].result.is_ok());
        let cfg = CycloneConfig { code: &code, x: 1, capacity: 441, times: defaults(), swap_policy: SwapPolicy::GateSwap };
        let cs = cyclone_compile(&cfg).unwrap();
        assert!(!cs.events.iter().any(|e| e.kind.is_shuttle()));
    }
}
