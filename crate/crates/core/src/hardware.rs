//! QCCD physical topologies: traps (degree <= 2, finite capacity),
//! junctions (degree <= 4), shuttle paths, and the operation timing
//! table. Four layout families are generated:
//!
//! - `GridBaseline`: an l x l trap grid with columns of vertical
//!   junctions between trap columns.
//! - `AltGrid`: serpentine rows of trap corridors joined by L-shaped
//!   (degree-2) junctions, closed into one global cycle.
//! - `MeshJunction`: a q x q mesh of degree-4 junctions (q = ceil(n/4))
//!   with traps attached round-robin along the perimeter.
//! - `Ring`: x traps on a cycle with 4 corner L-junctions, shuttled in
//!   one fixed direction.

use std::collections::BTreeMap;
use std::fmt::{self, Display, Formatter};

use serde::{Deserialize, Serialize};

/// Operation timing table, microseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpTimes {
    pub split: f64,
    #[serde(rename = "move")]
    pub move_: f64,
    pub merge: f64,
    /// Junction crossing time by junction degree (2, 3, 4).
    pub junction_cross: BTreeMap<u8, f64>,
    /// Two-qubit gate time for chains at or below the cap threshold.
    pub gate_base: f64,
    /// Chain length up to which the gate time stays flat.
    pub gate_cap_threshold: usize,
    pub measure: f64,
    /// Additive constant of the IonSwap cost model.
    pub swap_const: f64,
    /// Per-step shuttle constant of the IonSwap model; defaults to the
    /// split time when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ionswap_s: Option<f64>,
}

impl Default for OpTimes {
    fn default() -> Self {
        Self {
            split: 80.0,
            move_: 10.0,
            merge: 80.0,
            junction_cross: BTreeMap::from([(2, 10.0), (3, 100.0), (4, 120.0)]),
            gate_base: 40.0,
            gate_cap_threshold: 12,
            measure: 150.0,
            swap_const: 42.0,
            ionswap_s: None,
        }
    }
}

impl OpTimes {
    pub fn junction_cross(&self, degree: usize) -> f64 {
        let degree = degree.clamp(2, 4) as u8;
        *self.junction_cross.get(&degree).unwrap_or(&0.0)
    }

    /// Scale gate time by `factor`, used by the reduction sweeps.
    pub fn scale_gate(&mut self, factor: f64) {
        self.gate_base *= factor;
    }

    /// Scale split/move/merge and junction crossings by `factor`.
    pub fn scale_shuttle(&mut self, factor: f64) {
        self.split *= factor;
        self.move_ *= factor;
        self.merge *= factor;
        for t in self.junction_cross.values_mut() {
            *t *= factor;
        }
    }

    pub fn scale_junctions(&mut self, factor: f64) {
        for t in self.junction_cross.values_mut() {
            *t *= factor;
        }
    }
}

/// Two-qubit gate time for a chain of `chain_len` ions: flat up to the
/// cap threshold, then quadratic in the excess ratio.
pub fn gate_time(times: &OpTimes, chain_len: usize) -> f64 {
    let chain_len = chain_len.max(1);
    if chain_len <= times.gate_cap_threshold {
        times.gate_base
    } else {
        let ratio = chain_len as f64 / times.gate_cap_threshold as f64;
        times.gate_base * ratio * ratio
    }
}

/// Node handle: traps and junctions are indexed separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRef {
    Trap(usize),
    Junction(usize),
}

impl Display for NodeRef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Self::Trap(id) => write!(f, "trap {id}"),
            Self::Junction(id) => write!(f, "junction {id}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trap {
    pub id: usize,
    pub capacity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Junction {
    pub id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayoutTag {
    GridBaseline,
    AltGrid,
    MeshJunction,
    Ring,
    Custom,
}

impl Display for LayoutTag {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::GridBaseline => "grid",
            Self::AltGrid => "altgrid",
            Self::MeshJunction => "mesh",
            Self::Ring => "ring",
            Self::Custom => "custom",
        };
        write!(f, "{name}")
    }
}

/// A shuttle-path graph over traps and junctions.
///
/// Edge order is meaningful: a trap's first incident edge is its
/// port 0 (chain front), the second its port 1 (chain back). For
/// rings, edges are stored in cycle order and shuttling follows it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub traps: Vec<Trap>,
    pub junctions: Vec<Junction>,
    pub edges: Vec<(NodeRef, NodeRef)>,
    pub layout_tag: LayoutTag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    TrapDegree { id: usize, degree: usize },
    JunctionDegree { id: usize, degree: usize },
    Disconnected,
    BadCapacity { id: usize },
}

impl Display for Violation {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Self::TrapDegree { id, degree } => write!(f, "trap degree: trap {id} has degree {degree} > 2"),
            Self::JunctionDegree { id, degree } => {
                write!(f, "junction degree: junction {id} has degree {degree} > 4")
            }
            Self::Disconnected => write!(f, "disconnected"),
            Self::BadCapacity { id } => write!(f, "trap {id} has capacity < 1"),
        }
    }
}

impl Topology {
    fn node_count(&self) -> usize {
        self.traps.len() + self.junctions.len()
    }

    /// Flat node index: traps first, then junctions.
    pub fn node_index(&self, node: NodeRef) -> usize {
        match node {
            NodeRef::Trap(id) => id,
            NodeRef::Junction(id) => self.traps.len() + id,
        }
    }

    pub fn node_of_index(&self, index: usize) -> NodeRef {
        if index < self.traps.len() {
            NodeRef::Trap(index)
        } else {
            NodeRef::Junction(index - self.traps.len())
        }
    }

    /// Incident edge ids per node, in edge insertion order.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut incident = vec![Vec::new(); self.node_count()];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            incident[self.node_index(a)].push(e);
            incident[self.node_index(b)].push(e);
        }
        incident
    }

    pub fn degree_of(&self, node: NodeRef) -> usize {
        let idx = self.node_index(node);
        self.edges
            .iter()
            .filter(|&&(a, b)| self.node_index(a) == idx || self.node_index(b) == idx)
            .count()
    }

    pub fn total_capacity(&self) -> usize {
        self.traps.iter().map(|t| t.capacity).sum()
    }

    /// JSON dump with per-node kind, capacity, and realized degree.
    pub fn dump_json(&self) -> String {
        #[derive(Serialize)]
        struct NodeDump {
            kind: &'static str,
            id: usize,
            #[serde(skip_serializing_if = "Option::is_none")]
            cap: Option<usize>,
            deg: usize,
        }
        #[derive(Serialize)]
        struct Dump<'a> {
            layout_tag: LayoutTag,
            nodes: Vec<NodeDump>,
            edges: &'a [(NodeRef, NodeRef)],
        }
        let incident = self.incidence();
        let mut nodes = Vec::with_capacity(self.node_count());
        for t in &self.traps {
            nodes.push(NodeDump {
                kind: "trap",
                id: t.id,
                cap: Some(t.capacity),
                deg: incident[self.node_index(NodeRef::Trap(t.id))].len(),
            });
        }
        for j in &self.junctions {
            nodes.push(NodeDump {
                kind: "junction",
                id: j.id,
                cap: None,
                deg: incident[self.node_index(NodeRef::Junction(j.id))].len(),
            });
        }
        serde_json::to_string_pretty(&Dump { layout_tag: self.layout_tag, nodes, edges: &self.edges })
            .expect("topology serializes")
    }
}

/// Check degree bounds, connectivity, and capacities. An empty list
/// means the topology is legal.
pub fn validate_topology(topo: &Topology) -> Vec<Violation> {
    let mut violations = Vec::new();
    let incident = topo.incidence();
    for trap in &topo.traps {
        let degree = incident[topo.node_index(NodeRef::Trap(trap.id))].len();
        if degree > 2 {
            violations.push(Violation::TrapDegree { id: trap.id, degree });
        }
        if trap.capacity < 1 {
            violations.push(Violation::BadCapacity { id: trap.id });
        }
    }
    for junction in &topo.junctions {
        let degree = incident[topo.node_index(NodeRef::Junction(junction.id))].len();
        if degree > 4 {
            violations.push(Violation::JunctionDegree { id: junction.id, degree });
        }
    }
    if topo.node_count() > 1 {
        let mut seen = vec![false; topo.node_count()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(node) = stack.pop() {
            for &e in &incident[node] {
                let (a, b) = topo.edges[e];
                let (a, b) = (topo.node_index(a), topo.node_index(b));
                let next = if a == node { b } else { a };
                if !seen[next] {
                    seen[next] = true;
                    stack.push(next);
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            violations.push(Violation::Disconnected);
        }
    }
    violations
}

fn side_length(n_data: usize) -> usize {
    (n_data as f64).sqrt().ceil() as usize
}

/// Baseline l x l trap grid (l = ceil(sqrt(n))) with a column of
/// junctions between adjacent trap columns. Junction columns carry the
/// vertical transport; trap rows carry the horizontal. Traps are
/// numbered in snake order (row 0 left to right, row 1 right to left,
/// ...), which is also the mapper's fill order.
pub fn build_grid_baseline(n_data: usize, capacity: usize) -> Topology {
    let l = side_length(n_data);
    let traps: Vec<Trap> = (0..l * l).map(|id| Trap { id, capacity }).collect();
    // trap id at (row, col) under snake numbering
    let trap_at = |row: usize, col: usize| -> usize {
        if row % 2 == 0 {
            row * l + col
        } else {
            row * l + (l - 1 - col)
        }
    };
    let mut junctions = Vec::new();
    let mut edges = Vec::new();
    // junction (row, between col and col+1) = row * (l-1) + col
    for row in 0..l {
        for col in 0..l.saturating_sub(1) {
            let j = row * (l - 1) + col;
            junctions.push(Junction { id: j });
            edges.push((NodeRef::Trap(trap_at(row, col)), NodeRef::Junction(j)));
            edges.push((NodeRef::Junction(j), NodeRef::Trap(trap_at(row, col + 1))));
            if row > 0 {
                edges.push((NodeRef::Junction((row - 1) * (l - 1) + col), NodeRef::Junction(j)));
            }
        }
    }
    Topology { traps, junctions, edges, layout_tag: LayoutTag::GridBaseline }
}

/// Alternate grid: l x l traps in serpentine rows of trap-to-trap
/// corridors, with an L-junction joining consecutive rows at the
/// turning side and a return corridor of L-junctions closing the
/// serpentine into one global cycle. Every junction has degree 2.
pub fn build_alt_grid(n_data: usize, capacity: usize) -> Topology {
    let l = side_length(n_data);
    let traps: Vec<Trap> = (0..l * l).map(|id| Trap { id, capacity }).collect();
    let mut junctions = Vec::new();
    let mut edges = Vec::new();
    if l == 1 {
        return Topology { traps, junctions, edges, layout_tag: LayoutTag::AltGrid };
    }
    let trap_at = |row: usize, col: usize| -> usize {
        if row % 2 == 0 {
            row * l + col
        } else {
            row * l + (l - 1 - col)
        }
    };
    for row in 0..l {
        for col in 0..l - 1 {
            edges.push((NodeRef::Trap(trap_at(row, col)), NodeRef::Trap(trap_at(row, col + 1))));
        }
    }
    // L-junction at the turn between row r and r+1, alternating sides
    for row in 0..l - 1 {
        let turn_col = if row % 2 == 0 { l - 1 } else { 0 };
        let j = junctions.len();
        junctions.push(Junction { id: j });
        edges.push((NodeRef::Trap(trap_at(row, turn_col)), NodeRef::Junction(j)));
        edges.push((NodeRef::Junction(j), NodeRef::Trap(trap_at(row + 1, turn_col))));
    }
    // Return corridor from the serpentine's tail back to trap (0, 0).
    // Even l ends on the left side (two corner junctions); odd l ends
    // on the right and needs a third corner to come around the top.
    let tail = trap_at(l - 1, if l % 2 == 0 { 0 } else { l - 1 });
    let corners = if l % 2 == 0 { 2 } else { 3 };
    let first = junctions.len();
    for offset in 0..corners {
        junctions.push(Junction { id: first + offset });
        if offset > 0 {
            edges.push((NodeRef::Junction(first + offset - 1), NodeRef::Junction(first + offset)));
        }
    }
    edges.push((NodeRef::Trap(tail), NodeRef::Junction(first)));
    edges.push((NodeRef::Junction(first + corners - 1), NodeRef::Trap(0)));
    Topology { traps, junctions, edges, layout_tag: LayoutTag::AltGrid }
}

/// Perfect junction mesh: q x q degree-4 junctions (q = ceil(n/4))
/// with the n traps attached round-robin to the free perimeter ports
/// (corners carry two traps, edge junctions one).
pub fn build_mesh_junction(n_data: usize, capacity: usize) -> Topology {
    let q = n_data.div_ceil(4).max(2);
    let traps: Vec<Trap> = (0..n_data).map(|id| Trap { id, capacity }).collect();
    let junctions: Vec<Junction> = (0..q * q).map(|id| Junction { id }).collect();
    let mut edges = Vec::new();
    let at = |row: usize, col: usize| row * q + col;
    for row in 0..q {
        for col in 0..q {
            if col + 1 < q {
                edges.push((NodeRef::Junction(at(row, col)), NodeRef::Junction(at(row, col + 1))));
            }
            if row + 1 < q {
                edges.push((NodeRef::Junction(at(row, col)), NodeRef::Junction(at(row + 1, col))));
            }
        }
    }
    // Perimeter ports clockwise from the top-left corner; corners
    // appear twice (their two outward faces).
    let mut ports = Vec::new();
    for col in 0..q {
        ports.push(at(0, col));
    }
    for row in 0..q {
        ports.push(at(row, q - 1));
    }
    for col in (0..q).rev() {
        ports.push(at(q - 1, col));
    }
    for row in (0..q).rev() {
        ports.push(at(row, 0));
    }
    for (trap, port) in (0..n_data).zip(ports.into_iter().cycle()) {
        edges.push((NodeRef::Trap(trap), NodeRef::Junction(port)));
    }
    Topology { traps, junctions, edges, layout_tag: LayoutTag::MeshJunction }
}

/// Ring of x traps with 4 corner L-junctions spliced into the cycle.
/// Shuttling direction follows edge order. `x = 1` degenerates to a
/// single trap with no shuttle paths.
pub fn build_ring(x: usize, capacity: usize) -> Topology {
    let traps: Vec<Trap> = (0..x).map(|id| Trap { id, capacity }).collect();
    if x == 1 {
        return Topology {
            traps,
            junctions: Vec::new(),
            edges: Vec::new(),
            layout_tag: LayoutTag::Ring,
        };
    }
    let junctions: Vec<Junction> = (0..4).map(|id| Junction { id }).collect();
    // corner i sits on the cycle edge leaving trap floor(x*i/4)
    let corner_after = |trap: usize| -> Vec<usize> {
        (0..4).filter(|&i| x * i / 4 == trap).collect()
    };
    let mut edges = Vec::new();
    for trap in 0..x {
        let next = (trap + 1) % x;
        let corners = corner_after(trap);
        let mut from = NodeRef::Trap(trap);
        for corner in corners {
            edges.push((from, NodeRef::Junction(corner)));
            from = NodeRef::Junction(corner);
        }
        edges.push((from, NodeRef::Trap(next)));
    }
    Topology { traps, junctions, edges, layout_tag: LayoutTag::Ring }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_baseline_trap_counts() {
        assert_eq!(build_grid_baseline(4, 2).traps.len(), 4);
        assert_eq!(build_grid_baseline(225, 5).traps.len(), 225);
    }

    #[test]
    fn grid_baseline_validates() {
        for n in [1, 2, 4, 10, 100, 225] {
            let topo = build_grid_baseline(n, 3);
            assert!(validate_topology(&topo).is_empty(), "n = {n}");
        }
    }

    #[test]
    fn alt_grid_small_is_all_degree_two_junctions() {
        let topo = build_alt_grid(4, 2);
        assert!(validate_topology(&topo).is_empty());
        for j in &topo.junctions {
            assert_eq!(topo.degree_of(NodeRef::Junction(j.id)), 2);
        }
    }

    #[test]
    fn alt_grid_225_golden_counts() {
        // 15x15 serpentine: 14 turn junctions plus a 3-corner return.
        let topo = build_alt_grid(225, 5);
        assert_eq!(topo.traps.len(), 225);
        assert_eq!(topo.junctions.len(), 17);
        assert!(validate_topology(&topo).is_empty());
    }

    #[test]
    fn mesh_junction_counts() {
        let topo = build_mesh_junction(16, 3);
        assert_eq!(topo.junctions.len(), 16);
        assert_eq!(topo.traps.len(), 16);
        assert!(validate_topology(&topo).is_empty());
        assert_eq!(build_mesh_junction(225, 3).junctions.len(), 57 * 57);
    }

    #[test]
    fn mesh_junction_degrees_at_most_four() {
        let topo = build_mesh_junction(100, 3);
        for j in &topo.junctions {
            assert!(topo.degree_of(NodeRef::Junction(j.id)) <= 4);
        }
        for t in &topo.traps {
            assert_eq!(topo.degree_of(NodeRef::Trap(t.id)), 1);
        }
    }

    #[test]
    fn ring_degenerate_single_trap() {
        let topo = build_ring(1, 441);
        assert!(topo.edges.is_empty());
        assert!(topo.junctions.is_empty());
        assert!(validate_topology(&topo).is_empty());
    }

    #[test]
    fn ring_traps_have_degree_two() {
        for x in [3, 4, 5, 108] {
            let topo = build_ring(x, 8);
            assert!(validate_topology(&topo).is_empty(), "x = {x}");
            for t in &topo.traps {
                assert_eq!(topo.degree_of(NodeRef::Trap(t.id)), 2, "x = {x}");
            }
            // contracting the 4 corner junctions leaves the x-edge
            // Hamiltonian trap cycle
            assert_eq!(topo.edges.len(), x + 4);
            assert_eq!(topo.junctions.len(), 4);
        }
    }

    #[test]
    fn validator_flags_trap_degree() {
        let mut topo = build_ring(4, 2);
        topo.edges.push((NodeRef::Trap(0), NodeRef::Trap(2)));
        let violations = validate_topology(&topo);
        assert!(violations.iter().any(|v| matches!(v, Violation::TrapDegree { .. })));
    }

    #[test]
    fn validator_flags_disconnection() {
        let a = build_ring(3, 2);
        let mut b = build_ring(3, 2);
        // second ring grafted in with shifted ids, no connecting edge
        let offset_t = a.traps.len();
        let offset_j = a.junctions.len();
        let mut topo = a;
        for t in &b.traps {
            topo.traps.push(Trap { id: t.id + offset_t, capacity: t.capacity });
        }
        for j in &b.junctions {
            topo.junctions.push(Junction { id: j.id + offset_j });
        }
        let shift = |n: NodeRef| match n {
            NodeRef::Trap(id) => NodeRef::Trap(id + offset_t),
            NodeRef::Junction(id) => NodeRef::Junction(id + offset_j),
        };
        topo.edges.extend(b.edges.drain(..).map(|(x, y)| (shift(x), shift(y))));
        assert!(validate_topology(&topo).contains(&Violation::Disconnected));
    }

    #[test]
    fn gate_time_flat_then_quadratic() {
        let times = OpTimes::default();
        assert_eq!(gate_time(&times, 5), 40.0);
        assert_eq!(gate_time(&times, 12), 40.0);
        assert_eq!(gate_time(&times, 24), 160.0);
    }

    #[test]
    fn gate_time_monotone_and_continuous() {
        let times = OpTimes::default();
        let mut prev = 0.0;
        for chain in 1..=60 {
            let t = gate_time(&times, chain);
            assert!(t >= prev);
            prev = t;
        }
        let at = gate_time(&times, times.gate_cap_threshold);
        let above = gate_time(&times, times.gate_cap_threshold + 1);
        assert!((above - at) / at < 0.2, "jump at threshold too large");
    }

    #[test]
    fn op_times_json_round_trip() {
        let times = OpTimes::default();
        let json = serde_json::to_string(&times).unwrap();
        let back: OpTimes = serde_json::from_str(&json).unwrap();
        assert_eq!(back, times);
        // missing fields take defaults
        let partial: OpTimes = serde_json::from_str(r#"{"gate_base": 25.0}"#).unwrap();
        assert_eq!(partial.gate_base, 25.0);
        assert_eq!(partial.split, 80.0);
        assert_eq!(partial.junction_cross(4), 120.0);
    }

    #[test]
    fn generators_validate_across_sizes() {
        for n in [4, 9, 30, 144, 225, 625, 700] {
            assert!(validate_topology(&build_grid_baseline(n, 5)).is_empty());
            assert!(validate_topology(&build_alt_grid(n, 5)).is_empty());
            assert!(validate_topology(&build_mesh_junction(n, 5)).is_empty());
            assert!(validate_topology(&build_ring(n, 5)).is_empty());
        }
    }

    #[test]
    fn dump_json_mentions_kinds() {
        let dump = build_ring(4, 2).dump_json();
        assert!(dump.contains(r#""kind": "trap""#));
        assert!(dump.contains(r#""kind": "junction""#));
        assert!(dump.contains(r#""layout_tag": "Ring""#));
    }
}
