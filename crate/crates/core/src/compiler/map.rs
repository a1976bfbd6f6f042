//! Greedy cluster mapping of program qubits onto traps.

use crate::codes::{stabilizers_of, CssCode};
use crate::hardware::Topology;

use super::CompileError;

/// Placement of every ion (data `0..n`, ancilla `n..n+m`) into a trap
/// and a chain slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitMap {
    pub trap_of: Vec<usize>,
    pub slot_of: Vec<usize>,
    /// Initial chain per trap, in slot order (front first).
    pub chains: Vec<Vec<u32>>,
}

impl QubitMap {
    /// Build a map from an explicit ion -> trap assignment; slots follow
    /// ion id order within each trap.
    pub fn from_assignment(trap_of: Vec<usize>, topo: &Topology) -> Self {
        let mut chains = vec![Vec::new(); topo.traps.len()];
        let mut slot_of = vec![0; trap_of.len()];
        for (ion, &trap) in trap_of.iter().enumerate() {
            slot_of[ion] = chains[trap].len();
            chains[trap].push(ion as u32);
        }
        Self { trap_of, slot_of, chains }
    }

    pub fn ion_count(&self) -> usize {
        self.trap_of.len()
    }
}

/// BFS over the code's interaction graph (data qubits and ancillas,
/// joined by stabilizer incidences), filling traps in their listed
/// order with a balanced quota of `ceil(total / traps)` ions each.
/// Interacting qubits land together; the remaining capacity is
/// headroom for visiting ancillas.
///
/// Grid generators list traps in snake order, so the BFS clusters wind
/// across the machine row by row.
pub fn map_greedy_cluster(code: &CssCode, topo: &Topology) -> Result<QubitMap, CompileError> {
    let total = code.n + code.m();
    let available = topo.total_capacity();
    if total > available {
        return Err(CompileError::InsufficientCapacity { needed: total, available });
    }

    // interaction adjacency over ion ids
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); total];
    for stab in stabilizers_of(code) {
        let ancilla = match stab.kind {
            crate::codes::StabKind::X => code.n + stab.index,
            crate::codes::StabKind::Z => code.n + code.m_x + stab.index,
        };
        for &data in &stab.support {
            adjacency[ancilla].push(data);
            adjacency[data].push(ancilla);
        }
    }
    for neighbors in &mut adjacency {
        neighbors.sort_unstable();
        neighbors.dedup();
    }

    // BFS visit order, lowest unvisited id seeds each component
    let mut order = Vec::with_capacity(total);
    let mut seen = vec![false; total];
    let mut queue = std::collections::VecDeque::new();
    for seed in 0..total {
        if seen[seed] {
            continue;
        }
        seen[seed] = true;
        queue.push_back(seed);
        while let Some(ion) = queue.pop_front() {
            order.push(ion);
            for &next in &adjacency[ion] {
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
    }

    // balanced quota first, capacity-bounded; spill into leftover
    // capacity in trap order if quotas were clipped
    let quota = total.div_ceil(topo.traps.len());
    let mut trap_of = vec![usize::MAX; total];
    let mut chains: Vec<Vec<u32>> = vec![Vec::new(); topo.traps.len()];
    let mut cursor = order.into_iter();
    'fill: for pass in 0..2 {
        for trap in &topo.traps {
            let limit = if pass == 0 { quota.min(trap.capacity) } else { trap.capacity };
            while chains[trap.id].len() < limit {
                let Some(ion) = cursor.next() else { break 'fill };
                trap_of[ion] = trap.id;
                chains[trap.id].push(ion as u32);
            }
        }
    }

    let mut slot_of = vec![0; total];
    for chain in &chains {
        for (slot, &ion) in chain.iter().enumerate() {
            slot_of[ion as usize] = slot;
        }
    }
    Ok(QubitMap { trap_of, slot_of, chains })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{presets, CodeFamily, CssCode};
    use crate::gf2::BinaryMatrix;
    use crate::hardware::{build_grid_baseline, build_ring};

    #[test]
    fn two_qubit_code_lands_in_one_trap() {
        let hx = BinaryMatrix::from_rows(&[vec![1, 1]]);
        let hz = BinaryMatrix::zeros(0, 2);
        let code = CssCode::new(hx, hz, CodeFamily::Custom).unwrap();
        let topo = build_ring(1, 3);
        let map = map_greedy_cluster(&code, &topo).unwrap();
        assert_eq!(map.trap_of, vec![0, 0, 0]);
        // BFS from data 0 reaches the ancilla before data 1
        assert_eq!(map.chains[0], vec![0, 2, 1]);
    }

    #[test]
    fn hgp_225_fits_grid_with_default_capacity() {
        let code = presets::hgp_225();
        let topo = build_grid_baseline(code.n, 5);
        let map = map_greedy_cluster(&code, &topo).unwrap();
        assert_eq!(map.ion_count(), 441);
        for chain in &map.chains {
            assert!(chain.len() <= 5);
        }
        // balanced quota: ceil(441/225) = 2
        assert!(map.chains.iter().all(|c| c.len() <= 2));
    }

    #[test]
    fn mapping_is_deterministic() {
        let code = presets::bb_144();
        let topo = build_grid_baseline(code.n, 5);
        let a = map_greedy_cluster(&code, &topo).unwrap();
        let b = map_greedy_cluster(&code, &topo).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_insufficient_capacity() {
        let code = presets::hgp_5();
        let topo = build_ring(2, 2);
        let err = map_greedy_cluster(&code, &topo).unwrap_err();
        assert_eq!(err, CompileError::InsufficientCapacity { needed: 9, available: 4 });
    }
}
