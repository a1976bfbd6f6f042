//! Syndrome-extraction gate schedules at three parallelism levels.
//!
//! A schedule is a list of timeslices; within a slice every data qubit
//! and every ancilla appears at most once, so all gates of a slice can
//! run concurrently on hardware with enough connectivity. Three
//! policies are provided:
//!
//! - `Serial`: one gate per slice.
//! - `XThenZ`: all X stabilizers first, then all Z, each phase packed
//!   by repeated bipartite matching. Worst-case depth is
//!   `w_max(hx) + w_max(hz)` for codes whose qubit degrees do not
//!   exceed their check weights per phase.
//! - `EdgeColorable`: a proper edge coloring of the full Tanner graph,
//!   interleaving X and Z checks. Depth equals the Tanner-graph
//!   maximum degree (König). Restricted to hypergraph product codes;
//!   hook-error safety of the interleaving is not validated here.

use std::fmt::{self, Display, Formatter};

use num::rational::Ratio;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::codes::{stabilizers_of, CodeFamily, CssCode, StabKind, Stabilizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleKind {
    EdgeColorable,
    XThenZ,
    Serial,
}

impl Display for ScheduleKind {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Self::EdgeColorable => write!(f, "EdgeColorable"),
            Self::XThenZ => write!(f, "XThenZ"),
            Self::Serial => write!(f, "Serial"),
        }
    }
}

/// One CX between a data qubit and the ancilla of a stabilizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateOp {
    pub kind: StabKind,
    pub stab_index: usize,
    pub data: usize,
    pub ancilla: usize,
}

impl Serialize for GateOp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            stab: &'a str,
            data: usize,
            anc: usize,
        }
        let stab = format!("{}{}", self.kind, self.stab_index);
        Wire { stab: &stab, data: self.data, anc: self.ancilla }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GateOp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            stab: String,
            data: usize,
            anc: usize,
        }
        let wire = Wire::deserialize(deserializer)?;
        let (kind, index) = match wire.stab.split_at(1) {
            ("X", rest) => (StabKind::X, rest),
            ("Z", rest) => (StabKind::Z, rest),
            _ => return Err(D::Error::custom(format!("bad stabilizer tag {:?}", wire.stab))),
        };
        let stab_index = index
            .parse()
            .map_err(|_| D::Error::custom(format!("bad stabilizer tag {:?}", wire.stab)))?;
        Ok(GateOp { kind, stab_index, data: wire.data, ancilla: wire.anc })
    }
}

/// Gates that may execute concurrently.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timeslice {
    pub gates: Vec<GateOp>,
}

/// An ordered timeslice schedule covering every (stabilizer, data)
/// incidence of a code exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyndromeSchedule {
    pub kind: ScheduleKind,
    pub slices: Vec<Timeslice>,
    /// Label of the code this schedule was generated from.
    #[serde(default)]
    pub code_label: String,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub m_x: usize,
    #[serde(default)]
    pub m_z: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    /// Interleaved X/Z scheduling is only safe for edge-colorable
    /// families; everything else must use `XThenZ` or `Serial`.
    NotEdgeColorable { family: CodeFamily },
}

impl Display for ScheduleError {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotEdgeColorable { family } => {
                write!(f, "{family} codes are not edge-colorable; use the XThenZ or Serial schedule")
            }
        }
    }
}

impl std::error::Error for ScheduleError {}

impl SyndromeSchedule {
    pub fn depth(&self) -> usize {
        self.slices.len()
    }

    pub fn gate_count(&self) -> usize {
        self.slices.iter().map(|s| s.gates.len()).sum()
    }

    /// Dump format consumed by the compiler and external tools:
    /// `{"kind":"XThenZ","slices":[[{"stab":"X3","data":17,"anc":228},..],..]}`.
    pub fn to_dump_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            kind: &'a ScheduleKind,
            slices: &'a [Timeslice],
        }
        serde_json::to_string(&Dump { kind: &self.kind, slices: &self.slices })
            .expect("schedule serializes")
    }

    fn new(kind: ScheduleKind, code: &CssCode, slices: Vec<Timeslice>) -> Self {
        Self {
            kind,
            slices,
            code_label: code.label(),
            n: code.n,
            m_x: code.m_x,
            m_z: code.m_z,
        }
    }
}

/// Ancilla id of a stabilizer: data qubits take `0..n`, ancillas take
/// `n..n+m` in X-block-then-Z-block order.
pub fn ancilla_id(code: &CssCode, kind: StabKind, index: usize) -> usize {
    match kind {
        StabKind::X => code.n + index,
        StabKind::Z => code.n + code.m_x + index,
    }
}

fn gate(code: &CssCode, stab: &Stabilizer, data: usize) -> GateOp {
    GateOp {
        kind: stab.kind,
        stab_index: stab.index,
        data,
        ancilla: ancilla_id(code, stab.kind, stab.index),
    }
}

/// Fully serialized schedule: one gate per slice, X block first,
/// supports in ascending order.
pub fn schedule_serial(code: &CssCode) -> SyndromeSchedule {
    let mut slices = Vec::new();
    for stab in stabilizers_of(code) {
        for &data in &stab.support {
            slices.push(Timeslice { gates: vec![gate(code, &stab, data)] });
        }
    }
    SyndromeSchedule::new(ScheduleKind::Serial, code, slices)
}

/// All X stabilizers, then all Z. Each phase is packed greedily by
/// repeated maximum bipartite matching (lowest stabilizer index, then
/// lowest data id); if the greedy packing misses the per-phase optimum
/// it is recomputed as a proper edge coloring, which always achieves
/// the phase's Tanner degree.
pub fn schedule_x_then_z(code: &CssCode) -> SyndromeSchedule {
    let stabs = stabilizers_of(code);
    let mut slices = Vec::new();
    for kind in [StabKind::X, StabKind::Z] {
        let phase: Vec<&Stabilizer> = stabs.iter().filter(|s| s.kind == kind).collect();
        slices.extend(schedule_phase(code, &phase));
    }
    SyndromeSchedule::new(ScheduleKind::XThenZ, code, slices)
}

fn schedule_phase(code: &CssCode, phase: &[&Stabilizer]) -> Vec<Timeslice> {
    let greedy = phase_by_matching(code, phase);
    let optimum = phase_degree(code.n, phase);
    if greedy.len() <= optimum {
        return greedy;
    }
    // Matching fell short of the chromatic index; color exactly.
    let edges: Vec<(usize, usize)> = phase
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.support.iter().map(move |&d| (i, d)))
        .collect();
    let coloring = koenig_edge_coloring(phase.len(), code.n, &edges);
    let mut slices = vec![Timeslice::default(); coloring.colors];
    for (edge, &color) in edges.iter().zip(&coloring.color_of_edge) {
        slices[color].gates.push(gate(code, phase[edge.0], edge.1));
    }
    slices
}

/// Maximum degree of one phase's bipartite incidence graph.
fn phase_degree(n: usize, phase: &[&Stabilizer]) -> usize {
    let mut data_degree = vec![0usize; n];
    let mut max = 0;
    for stab in phase {
        max = max.max(stab.weight);
        for &d in &stab.support {
            data_degree[d] += 1;
            max = max.max(data_degree[d]);
        }
    }
    max
}

fn phase_by_matching(code: &CssCode, phase: &[&Stabilizer]) -> Vec<Timeslice> {
    let mut remaining: Vec<Vec<usize>> = phase.iter().map(|s| s.support.clone()).collect();
    let mut left = remaining.iter().map(Vec::len).sum::<usize>();
    let mut slices = Vec::new();
    while left > 0 {
        let matched = maximum_matching(&remaining, code.n);
        let mut slice = Timeslice::default();
        for (stab_pos, data) in matched {
            remaining[stab_pos].retain(|&d| d != data);
            left -= 1;
            slice.gates.push(gate(code, phase[stab_pos], data));
        }
        debug_assert!(!slice.gates.is_empty());
        slices.push(slice);
    }
    slices
}

/// Kuhn's augmenting-path maximum matching. Stabilizers are tried in
/// index order and data qubits in ascending id, which fixes the
/// tie-breaking.
fn maximum_matching(adjacency: &[Vec<usize>], n_data: usize) -> Vec<(usize, usize)> {
    let mut match_of_data: Vec<Option<usize>> = vec![None; n_data];
    let mut visited = vec![usize::MAX; n_data];
    for stab in 0..adjacency.len() {
        if !adjacency[stab].is_empty() {
            try_augment(stab, stab, adjacency, &mut match_of_data, &mut visited);
        }
    }
    let mut pairs: Vec<(usize, usize)> = match_of_data
        .iter()
        .enumerate()
        .filter_map(|(data, stab)| stab.map(|s| (s, data)))
        .collect();
    pairs.sort_unstable();
    pairs
}

fn try_augment(
    stab: usize,
    tag: usize,
    adjacency: &[Vec<usize>],
    match_of_data: &mut [Option<usize>],
    visited: &mut [usize],
) -> bool {
    for &data in &adjacency[stab] {
        if visited[data] == tag {
            continue;
        }
        visited[data] = tag;
        match match_of_data[data] {
            None => {
                match_of_data[data] = Some(stab);
                return true;
            }
            Some(other) => {
                if try_augment(other, tag, adjacency, match_of_data, visited) {
                    match_of_data[data] = Some(stab);
                    return true;
                }
            }
        }
    }
    false
}

/// Interleaved X/Z schedule from a proper edge coloring of the full
/// Tanner graph. Slice count equals the maximum Tanner degree.
pub fn schedule_edge_colorable(code: &CssCode) -> Result<SyndromeSchedule, ScheduleError> {
    if code.family != CodeFamily::Hgp {
        return Err(ScheduleError::NotEdgeColorable { family: code.family });
    }
    Ok(edge_colorable_unchecked(code))
}

/// The edge-coloring schedule without the family gate; used internally
/// and by tests that construct HGP-like Tanner graphs as `Custom`.
pub fn edge_colorable_unchecked(code: &CssCode) -> SyndromeSchedule {
    let stabs = stabilizers_of(code);
    let edges: Vec<(usize, usize)> = stabs
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.support.iter().map(move |&d| (i, d)))
        .collect();
    let coloring = koenig_edge_coloring(stabs.len(), code.n, &edges);
    let mut slices = vec![Timeslice::default(); coloring.colors];
    for (edge, &color) in edges.iter().zip(&coloring.color_of_edge) {
        slices[color].gates.push(gate(code, &stabs[edge.0], edge.1));
    }
    SyndromeSchedule::new(ScheduleKind::EdgeColorable, code, slices)
}

struct EdgeColoring {
    colors: usize,
    color_of_edge: Vec<usize>,
}

/// Proper edge coloring of a bipartite graph with exactly Δ colors.
///
/// For each edge, if no color is free at both endpoints, the classic
/// alternating-path (Kempe chain) swap frees one. The path cannot
/// close back on the other endpoint in a bipartite graph, so Δ colors
/// always suffice.
fn koenig_edge_coloring(n_left: usize, n_right: usize, edges: &[(usize, usize)]) -> EdgeColoring {
    let mut degree = vec![0usize; n_left + n_right];
    for &(l, r) in edges {
        degree[l] += 1;
        degree[n_left + r] += 1;
    }
    let max_degree = degree.iter().copied().max().unwrap_or(0);

    // color -> matched partner, per vertex; usize::MAX = free
    let mut at = vec![vec![usize::MAX; max_degree]; n_left + n_right];

    for &(l, r) in edges {
        let u = l;
        let v = n_left + r;
        let common = (0..max_degree).find(|&c| at[u][c] == usize::MAX && at[v][c] == usize::MAX);
        let color = match common {
            Some(c) => c,
            None => {
                let alpha = (0..max_degree).find(|&c| at[u][c] == usize::MAX).expect("degree bound");
                let beta = (0..max_degree).find(|&c| at[v][c] == usize::MAX).expect("degree bound");
                // Collect the alpha/beta alternating path from v, then
                // swap its colors. In a bipartite graph the path cannot
                // reach u, so alpha comes free at v.
                let mut path = Vec::new();
                let mut node = v;
                let mut want = alpha;
                while at[node][want] != usize::MAX {
                    let next = at[node][want];
                    path.push((node, next, want));
                    node = next;
                    want = if want == alpha { beta } else { alpha };
                }
                for &(a, b, c) in &path {
                    at[a][c] = usize::MAX;
                    at[b][c] = usize::MAX;
                }
                for &(a, b, c) in &path {
                    let swapped = if c == alpha { beta } else { alpha };
                    at[a][swapped] = b;
                    at[b][swapped] = a;
                }
                debug_assert_eq!(at[u][alpha], usize::MAX);
                debug_assert_eq!(at[v][alpha], usize::MAX);
                alpha
            }
        };
        at[u][color] = v;
        at[v][color] = u;
    }

    // Swaps recolor earlier edges, so read the final colors back from
    // the vertex tables.
    let color_of_edge = edges
        .iter()
        .map(|&(l, r)| {
            let (u, v) = (l, n_left + r);
            (0..max_degree)
                .find(|&c| at[u][c] == v && at[v][c] == u)
                .expect("edge keeps a color")
        })
        .collect();

    EdgeColoring { colors: max_degree, color_of_edge }
}

/// Serial slice count divided by the parallel slice count, exact.
pub fn ideal_speedup(code: &CssCode, kind: ScheduleKind) -> Result<Ratio<u64>, ScheduleError> {
    let parallel = match kind {
        ScheduleKind::EdgeColorable => schedule_edge_colorable(code)?.depth(),
        ScheduleKind::XThenZ => schedule_x_then_z(code).depth(),
        ScheduleKind::Serial => schedule_serial(code).depth(),
    };
    let serial = schedule_serial(code).depth();
    Ok(Ratio::new(serial as u64, parallel as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{presets, CssCode};
    use crate::gf2::BinaryMatrix;

    fn toy_code() -> CssCode {
        // hx = [1 1], hz = [1 1]
        let hx = BinaryMatrix::from_rows(&[vec![1, 1]]);
        let hz = BinaryMatrix::from_rows(&[vec![1, 1]]);
        CssCode::new(hx, hz, CodeFamily::Custom).unwrap()
    }

    #[test]
    fn serial_toy_code_has_four_slices() {
        let sched = schedule_serial(&toy_code());
        assert_eq!(sched.depth(), 4);
        assert_eq!(sched.gate_count(), 4);
    }

    #[test]
    fn serial_bb_144_has_864_slices() {
        assert_eq!(schedule_serial(&presets::bb_144()).depth(), 864);
    }

    #[test]
    fn serial_hgp_225_matches_popcount() {
        let code = presets::hgp_225();
        let expect = code.hx.popcount() + code.hz.popcount();
        assert_eq!(schedule_serial(&code).depth(), expect);
    }

    #[test]
    fn x_then_z_single_stabilizer_is_serial_chain() {
        let hx = BinaryMatrix::from_rows(&[vec![1, 1, 1]]);
        let hz = BinaryMatrix::zeros(0, 3);
        let code = CssCode::new(hx, hz, CodeFamily::Custom).unwrap();
        assert_eq!(schedule_x_then_z(&code).depth(), 3);
    }

    #[test]
    fn x_then_z_toy_code_depth_four() {
        // Two weight-2 stabilizers over the same data pair: the X and Z
        // phases cannot overlap, so depth is 2 + 2.
        assert_eq!(schedule_x_then_z(&toy_code()).depth(), 4);
    }

    #[test]
    fn x_then_z_shared_support_pair_permutes() {
        // Two X stabilizers both on {0,1}: 2 slices with permuted order.
        let hx = BinaryMatrix::from_rows(&[vec![1, 1], vec![1, 1]]);
        let hz = BinaryMatrix::zeros(0, 2);
        let code = CssCode::new(hx, hz, CodeFamily::Custom).unwrap();
        let sched = schedule_x_then_z(&code);
        assert_eq!(sched.depth(), 2);
        for slice in &sched.slices {
            assert_eq!(slice.gates.len(), 2);
        }
    }

    #[test]
    fn x_then_z_bb_144_meets_weight_bound_exactly() {
        let code = presets::bb_144();
        let sched = schedule_x_then_z(&code);
        assert_eq!(sched.depth(), 12);
        assert_eq!(sched.depth(), code.w_max_x() + code.w_max_z());
    }

    #[test]
    fn x_then_z_phase_purity_and_ordering() {
        let code = presets::bb_144();
        let sched = schedule_x_then_z(&code);
        let mut seen_z = false;
        for slice in &sched.slices {
            let kinds: Vec<StabKind> = slice.gates.iter().map(|g| g.kind).collect();
            assert!(kinds.windows(2).all(|w| w[0] == w[1]), "mixed slice");
            if kinds[0] == StabKind::Z {
                seen_z = true;
            } else {
                assert!(!seen_z, "X slice after Z began");
            }
        }
    }

    #[test]
    fn edge_colorable_star_needs_five_colors() {
        // One weight-5 X check plus disjoint weight-1 Z checks. Tanner
        // degree is 5, so the coloring uses 5 slices.
        let hx = BinaryMatrix::from_rows(&[vec![1, 1, 1, 1, 1]]);
        let hz = BinaryMatrix::zeros(0, 5);
        let code = CssCode::new(hx, hz, CodeFamily::Custom).unwrap();
        assert_eq!(edge_colorable_unchecked(&code).depth(), 5);
    }

    #[test]
    fn edge_colorable_rejects_bb() {
        let err = schedule_edge_colorable(&presets::bb_144()).unwrap_err();
        assert_eq!(err, ScheduleError::NotEdgeColorable { family: CodeFamily::Bb });
    }

    #[test]
    fn edge_colorable_hgp_225_matches_tanner_degree() {
        let code = presets::hgp_225();
        let sched = schedule_edge_colorable(&code).unwrap();
        let stabs = stabilizers_of(&code);
        let mut degree = vec![0usize; code.n];
        let mut max = 0;
        for s in &stabs {
            max = max.max(s.weight);
            for &d in &s.support {
                degree[d] += 1;
                max = max.max(degree[d]);
            }
        }
        assert_eq!(sched.depth(), max);
    }

    #[test]
    fn edge_colorable_not_deeper_than_x_then_z() {
        for code in [presets::hgp_5(), presets::hgp_225()] {
            let ec = schedule_edge_colorable(&code).unwrap().depth();
            let xz = schedule_x_then_z(&code).depth();
            assert!(ec <= xz, "{} > {}", ec, xz);
        }
    }

    #[test]
    fn speedup_toy_code_is_one() {
        let r = ideal_speedup(&toy_code(), ScheduleKind::XThenZ).unwrap();
        assert_eq!(r, Ratio::new(1, 1));
    }

    #[test]
    fn speedup_bb_144_is_72() {
        let r = ideal_speedup(&presets::bb_144(), ScheduleKind::XThenZ).unwrap();
        assert_eq!(r, Ratio::new(72, 1));
    }

    #[test]
    fn dump_json_round_trips() {
        let sched = schedule_x_then_z(&presets::hgp_5());
        let json = sched.to_dump_json();
        assert!(json.starts_with(r#"{"kind":"XThenZ","slices":"#));
        let back: SyndromeSchedule = serde_json::from_str(&json).unwrap();
        assert_eq!(back.kind, sched.kind);
        assert_eq!(back.slices, sched.slices);
    }
}
