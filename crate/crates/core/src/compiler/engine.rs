//! The discrete-event compilation engine.
//!
//! Every pending gate is an actor stepping through a small state
//! machine (plan, swap/split out, move, cross, merge in, gate); a
//! global time-ordered queue drives all actors, so resources grant
//! first-come-first-served and trap state (chain order, occupancy)
//! mutates in time order. Route plans are congestion-aware: at
//! dispatch the planner charges each resource the wait expected at the
//! estimated arrival instant, so concurrent traffic spreads instead of
//! stacking on one shortest path. The emitted trace is replayable: the
//! audit in `audit.rs` re-derives total time and re-checks exclusivity
//! and capacity from the events alone.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::hardware::{gate_time, LayoutTag, NodeRef, OpTimes, Topology};
use crate::schedule::SyndromeSchedule;

use super::map::QubitMap;
use super::{
    finalize_stats, CompileError, CompiledSchedule, EventKind, ResourceId, ShuttleEvent, Stall,
    SwapPolicy,
};

/// f64 with a total order, for heaps and min-by keys.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cost(f64);

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Shortest-time route planning over the shuttle graph.
///
/// Edge relaxation prices: a move per path segment, a junction crossing
/// per junction passed, and merge + split (+ one GateSwap estimate if
/// the trap started occupied) per intermediate trap passed. On top of
/// these static costs the caller supplies a congestion penalty telling
/// how long each resource stays booked past a given instant.
struct Router {
    adjacency: Vec<Vec<(usize, usize)>>, // node -> (edge id, other node)
    pass_cost: Vec<f64>,
    move_time: f64,
}

/// Resource handle the congestion penalty is asked about.
enum PathResource {
    Node(usize),
    Edge(usize),
}

impl Router {
    fn new(topo: &Topology, times: &OpTimes, occupancy0: &[usize]) -> Self {
        let node_count = topo.traps.len() + topo.junctions.len();
        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); node_count];
        for (e, &(a, b)) in topo.edges.iter().enumerate() {
            let (a, b) = (topo.node_index(a), topo.node_index(b));
            adjacency[a].push((e, b));
            adjacency[b].push((e, a));
        }
        let mut pass_cost = vec![0.0; node_count];
        for node in 0..node_count {
            pass_cost[node] = match topo.node_of_index(node) {
                NodeRef::Junction(_) => times.junction_cross(adjacency[node].len()),
                NodeRef::Trap(id) => {
                    let swap_estimate =
                        if occupancy0[id] > 0 { 3.0 * times.gate_base } else { 0.0 };
                    times.merge + times.split + swap_estimate
                }
            };
        }
        Self { adjacency, pass_cost, move_time: times.move_ }
    }

    /// Steps from `src` to `dst` as (edge taken, node reached) pairs.
    ///
    /// Labels are elapsed times from `depart`; `penalty(resource, at)`
    /// reports how long the resource stays booked past the absolute
    /// instant `at`. Waiting is allowed and grants come in time order,
    /// so the label-setting search stays consistent for the estimated
    /// arrival times.
    fn path_with<F>(
        &self,
        src: usize,
        dst: usize,
        depart: f64,
        penalty: F,
    ) -> Option<Vec<(usize, usize)>>
    where
        F: Fn(PathResource, f64) -> f64,
    {
        let n = self.adjacency.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Reverse((Cost(0.0), src)));
        while let Some(Reverse((Cost(d), node))) = heap.pop() {
            if node == dst {
                break;
            }
            if d > dist[node] {
                continue;
            }
            let leave = if node == src {
                0.0
            } else {
                penalty(PathResource::Node(node), depart + d) + self.pass_cost[node]
            };
            for &(edge, next) in &self.adjacency[node] {
                let at_edge = depart + d + leave;
                let alt = d + leave + penalty(PathResource::Edge(edge), at_edge) + self.move_time;
                if alt < dist[next] {
                    dist[next] = alt;
                    parent[next] = Some((node, edge));
                    heap.push(Reverse((Cost(alt), next)));
                }
            }
        }
        if dist[dst].is_infinite() {
            return None;
        }
        let mut steps = Vec::new();
        let mut node = dst;
        while node != src {
            let (prev, edge) = parent[node].expect("finite distance has a parent");
            steps.push((edge, node));
            node = prev;
        }
        steps.reverse();
        Some(steps)
    }
}

/// Shortest route between two traps as the node sequence the engine
/// would shuttle through on an idle machine, endpoints included.
pub fn shortest_route(
    topo: &Topology,
    times: &OpTimes,
    map: &QubitMap,
    from_trap: usize,
    to_trap: usize,
) -> Option<Vec<NodeRef>> {
    let mut occupancy0 = vec![0; topo.traps.len()];
    for &trap in &map.trap_of {
        occupancy0[trap] += 1;
    }
    let router = Router::new(topo, times, &occupancy0);
    let steps =
        router.path_with(from_trap, topo.node_index(NodeRef::Trap(to_trap)), 0.0, |_, _| 0.0)?;
    let mut nodes = vec![NodeRef::Trap(from_trap)];
    nodes.extend(steps.iter().map(|&(_, node)| topo.node_of_index(node)));
    Some(nodes)
}

/// A junction-only hop to an adjacent trap, used by rebalances.
#[derive(Debug, Clone)]
struct NeighborPath {
    trap: usize,
    edges: Vec<usize>,
    junctions: Vec<usize>,
}

/// Traps reachable from each trap through junctions only.
fn neighbor_traps(topo: &Topology, incident: &[Vec<usize>]) -> Vec<Vec<NeighborPath>> {
    let mut out = Vec::with_capacity(topo.traps.len());
    for trap in 0..topo.traps.len() {
        let mut found = Vec::new();
        let mut seen_junctions = vec![false; topo.junctions.len()];
        let mut seen_traps = vec![false; topo.traps.len()];
        seen_traps[trap] = true;
        let mut queue: VecDeque<(usize, Vec<usize>, Vec<usize>)> = VecDeque::new();
        queue.push_back((topo.node_index(NodeRef::Trap(trap)), Vec::new(), Vec::new()));
        while let Some((node, edges, junctions)) = queue.pop_front() {
            for &e in &incident[node] {
                let (a, b) = topo.edges[e];
                let (a, b) = (topo.node_index(a), topo.node_index(b));
                let next = if a == node { b } else { a };
                let mut edges = edges.clone();
                edges.push(e);
                match topo.node_of_index(next) {
                    NodeRef::Trap(t) => {
                        if !seen_traps[t] {
                            seen_traps[t] = true;
                            found.push(NeighborPath { trap: t, edges, junctions: junctions.clone() });
                        }
                    }
                    NodeRef::Junction(j) => {
                        if !seen_junctions[j] {
                            seen_junctions[j] = true;
                            let mut junctions = junctions.clone();
                            junctions.push(j);
                            queue.push_back((next, edges, junctions));
                        }
                    }
                }
            }
        }
        found.sort_by_key(|np| np.trap);
        out.push(found);
    }
    out
}

/// Life-cycle phase of a gate task. `steps` is the planned route as
/// (edge, node) pairs; `leg` indexes the next one.
#[derive(Debug, Clone, PartialEq)]
enum Phase {
    Plan,
    SplitFrom { trap: usize },
    /// Atomic inter-trap corridor transit (greedy grid compilers):
    /// every edge and junction up to the next trap is held for the
    /// whole crossing.
    Segment,
    MoveLeg,
    Cross { junction: usize },
    MergeInto { trap: usize, budget: usize },
    Gate,
}

#[derive(Debug)]
struct GateTask {
    data: u32,
    anc: u32,
    label: String,
    phase: Phase,
    steps: Vec<(usize, usize)>,
    leg: usize,
    /// When the current phase first asked for its resource.
    first_request: Option<f64>,
    /// Unfinished same-qubit predecessors the gate itself must wait
    /// for (the route may already run).
    blockers: usize,
    /// Parked at the gate phase until the blockers clear.
    parked: bool,
    /// Times the route was re-planned after a rebalance moved one of
    /// its ions.
    replans: u8,
    /// Resource a blocked segment is waiting on, for stall reporting.
    blocked_on: Option<ResourceId>,
    finished: Option<f64>,
}

struct Engine<'a> {
    topo: &'a Topology,
    times: &'a OpTimes,
    policy: SwapPolicy,
    /// Coordinated compilers plan routes around live congestion; the
    /// greedy baseline and dynamic policies plan static shortest paths
    /// and discover contention during execution.
    coordinated: bool,
    /// Greedy grid compilers shuttle each inter-trap corridor as one
    /// atomic operation (trap roadblocks serialize whole shuttles);
    /// the mesh's conservative scheduler pipelines junction hops.
    segment_atomic: bool,
    router: Router,
    incident: Vec<Vec<usize>>,
    neighbors: Vec<Vec<NeighborPath>>,
    trap_free: Vec<f64>,
    edge_free: Vec<f64>,
    junction_free: Vec<f64>,
    chains: Vec<VecDeque<u32>>,
    trap_of: Vec<usize>,
    ion_free: Vec<f64>,
    ion_last_use: Vec<f64>,
    /// Ions with a planned route depending on their position; evicted
    /// only when nothing else is available (the route then re-plans).
    pinned: Vec<u32>,
    /// Data qubits take ids below this; ancillas above.
    n_data: usize,
    events: Vec<ShuttleEvent>,
    stalls: Vec<Stall>,
    queue: BinaryHeap<Reverse<(Cost, u64, usize)>>,
    seq: u64,
    tasks: Vec<GateTask>,
}

impl<'a> Engine<'a> {
    fn new(
        topo: &'a Topology,
        map: &QubitMap,
        times: &'a OpTimes,
        policy: SwapPolicy,
        coordinated: bool,
        n_data: usize,
    ) -> Self {
        let segment_atomic = !coordinated;
        let mut occupancy0 = vec![0; topo.traps.len()];
        for &trap in &map.trap_of {
            occupancy0[trap] += 1;
        }
        let router = Router::new(topo, times, &occupancy0);
        let incident = topo.incidence();
        let neighbors = neighbor_traps(topo, &incident);
        Self {
            topo,
            times,
            policy,
            coordinated,
            segment_atomic,
            router,
            incident,
            neighbors,
            trap_free: vec![0.0; topo.traps.len()],
            edge_free: vec![0.0; topo.edges.len()],
            junction_free: vec![0.0; topo.junctions.len()],
            chains: map.chains.iter().map(|c| c.iter().copied().collect()).collect(),
            trap_of: map.trap_of.clone(),
            ion_free: vec![0.0; map.ion_count()],
            ion_last_use: vec![0.0; map.ion_count()],
            pinned: vec![0; map.ion_count()],
            n_data,
            events: Vec::new(),
            stalls: Vec::new(),
            queue: BinaryHeap::new(),
            seq: 0,
            tasks: Vec::new(),
        }
    }

    fn emit(
        &mut self,
        kind: EventKind,
        actors: Vec<u32>,
        location: ResourceId,
        start: f64,
        duration: f64,
    ) -> f64 {
        let end = start + duration;
        for &actor in &actors {
            self.ion_free[actor as usize] = end;
            self.ion_last_use[actor as usize] = end;
        }
        self.events.push(ShuttleEvent { kind, actors, location, start, duration });
        end
    }

    fn push(&mut self, time: f64, task: usize) {
        self.seq += 1;
        self.queue.push(Reverse((Cost(time), self.seq, task)));
    }

    fn spawn(&mut self, data: u32, anc: u32, label: String, at: f64) {
        self.tasks.push(GateTask {
            data,
            anc,
            label,
            phase: Phase::Plan,
            steps: Vec::new(),
            leg: 0,
            first_request: None,
            blockers: 0,
            parked: false,
            replans: 0,
            blocked_on: None,
            finished: None,
        });
        let idx = self.tasks.len() - 1;
        self.push(at, idx);
    }

    /// Record the wait of a shuttle step once its resource grants.
    fn note_stall(&mut self, task: usize, resource: ResourceId, granted: f64) {
        if let Some(first) = self.tasks[task].first_request.take() {
            if granted > first {
                self.stalls.push(Stall {
                    time: first,
                    resource,
                    actor: self.tasks[task].anc,
                    stall_us: granted - first,
                });
            }
        }
    }

    fn first_request(&mut self, task: usize, now: f64) {
        if self.tasks[task].first_request.is_none() {
            self.tasks[task].first_request = Some(now);
        }
    }

    /// Which chain end (0 = front, 1 = back) the given edge is on.
    fn port_of(&self, trap: usize, edge: usize) -> usize {
        let ports = &self.incident[self.topo.node_index(NodeRef::Trap(trap))];
        ports.iter().position(|&e| e == edge).expect("edge is incident to trap")
    }

    /// Route plan departing at `depart`; coordinated engines penalize
    /// live congestion, uncoordinated ones take static shortest paths.
    fn plan_route(&self, src: usize, dst: usize, depart: f64) -> Option<Vec<(usize, usize)>> {
        let dst_node = self.topo.node_index(NodeRef::Trap(dst));
        if !self.coordinated {
            return self.router.path_with(src, dst_node, depart, |_, _| 0.0);
        }
        let trap_count = self.topo.traps.len();
        let penalty = |resource: PathResource, at: f64| -> f64 {
            let busy_until = match resource {
                PathResource::Edge(e) => self.edge_free[e],
                PathResource::Node(node) => {
                    if node < trap_count {
                        self.trap_free[node]
                    } else {
                        self.junction_free[node - trap_count]
                    }
                }
            };
            (busy_until - at).max(0.0)
        };
        self.router.path_with(src, dst_node, depart, penalty)
    }

    /// Advance one task popped at `now`. Returns the gate end when the
    /// task completed.
    fn step(&mut self, task: usize, now: f64) -> Result<Option<f64>, CompileError> {
        match self.tasks[task].phase.clone() {
            Phase::Plan => {
                let data = self.tasks[task].data;
                let anc = self.tasks[task].anc;
                // both ions are now load-bearing for this route: the
                // plan fixes the data trap as the destination, so
                // neither may be rebalanced away until the gate fires
                self.pinned[data as usize] += 1;
                self.pinned[anc as usize] += 1;
                let src = self.trap_of[anc as usize];
                let dst = self.trap_of[data as usize];
                if src == dst {
                    self.tasks[task].phase = Phase::Gate;
                    self.push(now.max(self.ion_free[anc as usize]), task);
                    return Ok(None);
                }
                let steps = self.plan_route(src, dst, now).ok_or_else(|| {
                    CompileError::Unroutable { gate: self.tasks[task].label.clone() }
                })?;
                self.tasks[task].steps = steps;
                self.tasks[task].leg = 0;
                self.tasks[task].phase = Phase::SplitFrom { trap: src };
                self.push(now.max(self.ion_free[anc as usize]), task);
                Ok(None)
            }
            Phase::SplitFrom { trap } => {
                let anc = self.tasks[task].anc;
                if self.trap_of[anc as usize] != trap {
                    // a rebalance moved the ancilla; plan a fresh route
                    return self.replan(task, now);
                }
                if self.trap_free[trap] > now {
                    self.first_request(task, now);
                    let at = self.trap_free[trap];
                    self.push(at, task);
                    return Ok(None);
                }
                let exit_edge = self.tasks[task].steps[self.tasks[task].leg].0;
                let port = self.port_of(trap, exit_edge);
                // reorder first if the ion is not at the exit end; the
                // swap books the trap and the split retries right after
                if let Some(duration) = self.swap_needed(trap, anc, port) {
                    self.note_stall(task, ResourceId::Trap(trap), now);
                    let kind = match self.policy {
                        SwapPolicy::GateSwap => EventKind::GateSwap,
                        SwapPolicy::IonSwap => EventKind::IonSwap,
                    };
                    let mut actors = vec![anc];
                    if kind == EventKind::GateSwap {
                        let chain = &self.chains[trap];
                        let end_pos = if port == 0 { 0 } else { chain.len() - 1 };
                        actors.push(chain[end_pos]);
                    }
                    let end = self.emit(kind, actors, ResourceId::Trap(trap), now, duration);
                    self.apply_swap(trap, anc, port);
                    self.trap_free[trap] = end;
                    self.push(end, task);
                    return Ok(None);
                }
                self.note_stall(task, ResourceId::Trap(trap), now);
                let end = self.emit(
                    EventKind::Split,
                    vec![anc],
                    ResourceId::Trap(trap),
                    now,
                    self.times.split,
                );
                let taken = if port == 0 {
                    self.chains[trap].pop_front()
                } else {
                    self.chains[trap].pop_back()
                };
                debug_assert_eq!(taken, Some(anc));
                self.trap_free[trap] = end;
                self.tasks[task].phase =
                    if self.segment_atomic { Phase::Segment } else { Phase::MoveLeg };
                self.push(end, task);
                Ok(None)
            }
            Phase::Segment => {
                // the corridor up to (and including the edge into) the
                // next trap, held atomically
                let start_leg = self.tasks[task].leg;
                let mut end_leg = start_leg;
                while !matches!(
                    self.topo.node_of_index(self.tasks[task].steps[end_leg].1),
                    NodeRef::Trap(_)
                ) {
                    end_leg += 1;
                }
                let segment: Vec<(usize, usize)> =
                    self.tasks[task].steps[start_leg..=end_leg].to_vec();
                let mut free_at = now;
                let mut blocking = None;
                for &(edge, node) in &segment {
                    if self.edge_free[edge] > free_at {
                        free_at = self.edge_free[edge];
                        blocking = Some(ResourceId::Edge(edge));
                    }
                    if let NodeRef::Junction(j) = self.topo.node_of_index(node) {
                        if self.junction_free[j] > free_at {
                            free_at = self.junction_free[j];
                            blocking = Some(ResourceId::Junction(j));
                        }
                    }
                }
                if free_at > now {
                    self.first_request(task, now);
                    if let Some(resource) = blocking {
                        self.tasks[task].blocked_on = Some(resource);
                    }
                    self.push(free_at, task);
                    return Ok(None);
                }
                let resource = self.tasks[task].blocked_on.take().unwrap_or_else(|| {
                    ResourceId::Edge(segment[0].0)
                });
                self.note_stall(task, resource, now);
                let anc = self.tasks[task].anc;
                let mut t = now;
                for &(edge, node) in &segment {
                    t = self.emit(EventKind::Move, vec![anc], ResourceId::Edge(edge), t, self.times.move_);
                    if let NodeRef::Junction(j) = self.topo.node_of_index(node) {
                        let degree = self.incident[self.topo.node_index(NodeRef::Junction(j))].len();
                        t = self.emit(
                            EventKind::JunctionCross,
                            vec![anc],
                            ResourceId::Junction(j),
                            t,
                            self.times.junction_cross(degree),
                        );
                    }
                }
                // the whole corridor stays booked until the crossing ends
                for &(edge, node) in &segment {
                    self.edge_free[edge] = t;
                    if let NodeRef::Junction(j) = self.topo.node_of_index(node) {
                        self.junction_free[j] = t;
                    }
                }
                let NodeRef::Trap(arrival) = self.topo.node_of_index(segment.last().unwrap().1)
                else {
                    unreachable!("segment ends at a trap")
                };
                self.tasks[task].leg = end_leg;
                self.tasks[task].phase = Phase::MergeInto { trap: arrival, budget: 3 };
                self.push(t, task);
                Ok(None)
            }
            Phase::MoveLeg => {
                let (edge, node) = self.tasks[task].steps[self.tasks[task].leg];
                if self.edge_free[edge] > now {
                    self.first_request(task, now);
                    let at = self.edge_free[edge];
                    self.push(at, task);
                    return Ok(None);
                }
                self.note_stall(task, ResourceId::Edge(edge), now);
                let anc = self.tasks[task].anc;
                let end =
                    self.emit(EventKind::Move, vec![anc], ResourceId::Edge(edge), now, self.times.move_);
                self.edge_free[edge] = end;
                self.tasks[task].phase = match self.topo.node_of_index(node) {
                    NodeRef::Junction(j) => Phase::Cross { junction: j },
                    NodeRef::Trap(t) => Phase::MergeInto { trap: t, budget: 3 },
                };
                self.push(end, task);
                Ok(None)
            }
            Phase::Cross { junction } => {
                if self.junction_free[junction] > now {
                    self.first_request(task, now);
                    let at = self.junction_free[junction];
                    self.push(at, task);
                    return Ok(None);
                }
                self.note_stall(task, ResourceId::Junction(junction), now);
                let anc = self.tasks[task].anc;
                let degree = self.incident[self.topo.node_index(NodeRef::Junction(junction))].len();
                let end = self.emit(
                    EventKind::JunctionCross,
                    vec![anc],
                    ResourceId::Junction(junction),
                    now,
                    self.times.junction_cross(degree),
                );
                self.junction_free[junction] = end;
                self.tasks[task].leg += 1;
                self.tasks[task].phase = Phase::MoveLeg;
                self.push(end, task);
                Ok(None)
            }
            Phase::MergeInto { trap, budget } => {
                if self.trap_free[trap] > now {
                    self.first_request(task, now);
                    let at = self.trap_free[trap];
                    self.push(at, task);
                    return Ok(None);
                }
                if self.chains[trap].len() + 1 > self.topo.traps[trap].capacity {
                    if budget == 0 {
                        return Err(CompileError::CapacityDeadlock {
                            gate: self.tasks[task].label.clone(),
                        });
                    }
                    self.first_request(task, now);
                    let mut visited = vec![false; self.topo.traps.len()];
                    let freed = self.rebalance(trap, now, &mut visited, 0).map_err(|e| match e {
                        CompileError::CapacityDeadlock { .. } => {
                            CompileError::CapacityDeadlock { gate: self.tasks[task].label.clone() }
                        }
                        other => other,
                    })?;
                    self.tasks[task].phase = Phase::MergeInto { trap, budget: budget - 1 };
                    self.push(freed.max(now), task);
                    return Ok(None);
                }
                self.note_stall(task, ResourceId::Trap(trap), now);
                let anc = self.tasks[task].anc;
                let entry_edge = self.tasks[task].steps[self.tasks[task].leg].0;
                let end =
                    self.emit(EventKind::Merge, vec![anc], ResourceId::Trap(trap), now, self.times.merge);
                if self.port_of(trap, entry_edge) == 0 {
                    self.chains[trap].push_front(anc);
                } else {
                    self.chains[trap].push_back(anc);
                }
                self.trap_of[anc as usize] = trap;
                self.trap_free[trap] = end;
                self.tasks[task].leg += 1;
                if self.tasks[task].leg == self.tasks[task].steps.len() {
                    self.tasks[task].phase = Phase::Gate;
                } else {
                    self.tasks[task].phase = Phase::SplitFrom { trap };
                }
                self.push(end, task);
                Ok(None)
            }
            Phase::Gate => {
                if self.tasks[task].blockers > 0 {
                    self.tasks[task].parked = true;
                    return Ok(None);
                }
                let data = self.tasks[task].data;
                let anc = self.tasks[task].anc;
                let trap = self.trap_of[data as usize];
                if self.trap_of[anc as usize] != trap {
                    // the data ion was rebalanced away mid-route
                    return self.replan(task, now);
                }
                let ready = self.ion_free[data as usize]
                    .max(self.ion_free[anc as usize])
                    .max(self.trap_free[trap]);
                if ready > now {
                    self.push(ready, task);
                    return Ok(None);
                }
                let duration = gate_time(self.times, self.chains[trap].len());
                let end =
                    self.emit(EventKind::Gate, vec![data, anc], ResourceId::Trap(trap), now, duration);
                self.trap_free[trap] = end;
                self.pinned[data as usize] -= 1;
                self.pinned[anc as usize] -= 1;
                self.tasks[task].finished = Some(end);
                Ok(Some(end))
            }
        }
    }

    /// Re-plan a task whose ions moved under it. The pins taken at the
    /// previous plan come off; the fresh plan re-takes them.
    fn replan(&mut self, task: usize, now: f64) -> Result<Option<f64>, CompileError> {
        self.tasks[task].replans += 1;
        if self.tasks[task].replans > 8 {
            return Err(CompileError::CapacityDeadlock { gate: self.tasks[task].label.clone() });
        }
        let data = self.tasks[task].data;
        let anc = self.tasks[task].anc;
        self.pinned[data as usize] -= 1;
        self.pinned[anc as usize] -= 1;
        self.tasks[task].first_request = None;
        self.tasks[task].phase = Phase::Plan;
        self.push(now, task);
        Ok(None)
    }

    /// Swap duration if `ion` is not at the `port` end of its chain.
    fn swap_needed(&self, trap: usize, ion: u32, port: usize) -> Option<f64> {
        let chain = &self.chains[trap];
        if chain.len() <= 1 {
            return None;
        }
        let end_pos = if port == 0 { 0 } else { chain.len() - 1 };
        let pos = chain.iter().position(|&i| i == ion).expect("ion is in trap");
        if pos == end_pos {
            return None;
        }
        let d_l = if port == 0 { pos } else { chain.len() - 1 - pos };
        Some(super::swap_cost(self.policy, self.times, chain.len(), d_l))
    }

    fn apply_swap(&mut self, trap: usize, ion: u32, port: usize) {
        let chain = &mut self.chains[trap];
        let end_pos = if port == 0 { 0 } else { chain.len() - 1 };
        let pos = chain.iter().position(|&i| i == ion).expect("ion is in trap");
        match self.policy {
            SwapPolicy::GateSwap => chain.swap(pos, end_pos),
            SwapPolicy::IonSwap => {
                chain.remove(pos);
                if port == 0 {
                    chain.push_front(ion);
                } else {
                    chain.push_back(ion);
                }
            }
        }
    }

    /// Evict the least-recently-used unpinned ion into the adjacent
    /// trap with the most headroom; cascade outward when every adjacent
    /// trap is full. Returns when the slot frees up.
    fn rebalance(
        &mut self,
        trap: usize,
        t: f64,
        visited: &mut [bool],
        depth: usize,
    ) -> Result<f64, CompileError> {
        if depth > 16 {
            return Err(CompileError::CapacityDeadlock { gate: String::new() });
        }
        visited[trap] = true;
        let with_headroom = self.neighbors[trap]
            .iter()
            .filter(|np| {
                !visited[np.trap] && self.chains[np.trap].len() < self.topo.traps[np.trap].capacity
            })
            .max_by_key(|np| {
                let headroom = self.topo.traps[np.trap].capacity - self.chains[np.trap].len();
                (headroom, Reverse(np.trap))
            })
            .cloned();
        let (choice, t) = match with_headroom {
            Some(np) => (np, t),
            None => {
                let candidate = self.neighbors[trap]
                    .iter()
                    .find(|np| !visited[np.trap])
                    .cloned()
                    .ok_or(CompileError::CapacityDeadlock { gate: String::new() })?;
                let t = self.rebalance(candidate.trap, t, visited, depth + 1)?;
                (candidate, t)
            }
        };

        // prefer ions no route depends on, then parked ancillas over
        // data ions (data stays with its cluster, ancillas move
        // anyway), then least recently used; mid-event ions are off
        // the table
        let n_data = self.n_data;
        let victim = self.chains[trap]
            .iter()
            .copied()
            .filter(|&ion| self.ion_free[ion as usize] <= t)
            .min_by_key(|&ion| {
                let is_data = (ion as usize) < n_data;
                (self.pinned[ion as usize] > 0, is_data, Cost(self.ion_last_use[ion as usize]), ion)
            })
            .ok_or(CompileError::CapacityDeadlock { gate: String::new() })?;

        let mut duration = self.times.split + choice.edges.len() as f64 * self.times.move_;
        for &j in &choice.junctions {
            let degree = self.incident[self.topo.node_index(NodeRef::Junction(j))].len();
            duration += self.times.junction_cross(degree);
        }
        let mut start = t.max(self.trap_free[trap]).max(self.ion_free[victim as usize]);
        for &e in &choice.edges {
            start = start.max(self.edge_free[e]);
        }
        for &j in &choice.junctions {
            start = start.max(self.junction_free[j]);
        }
        if start > t {
            self.stalls.push(Stall {
                time: t,
                resource: ResourceId::Trap(trap),
                actor: victim,
                stall_us: start - t,
            });
        }
        let end = self.emit(EventKind::Rebalance, vec![victim], ResourceId::Trap(trap), start, duration);
        self.trap_free[trap] = end;
        for &e in &choice.edges {
            self.edge_free[e] = end;
        }
        for &j in &choice.junctions {
            self.junction_free[j] = end;
        }
        let pos = self.chains[trap].iter().position(|&i| i == victim).expect("victim in chain");
        self.chains[trap].remove(pos);

        let entry_edge = *choice.edges.last().expect("neighbor path has an edge");
        let dest = choice.trap;
        let merge_start = end.max(self.trap_free[dest]);
        let merge_end = self.emit(
            EventKind::Merge,
            vec![victim],
            ResourceId::Trap(dest),
            merge_start,
            self.times.merge,
        );
        if self.port_of(dest, entry_edge) == 0 {
            self.chains[dest].push_front(victim);
        } else {
            self.chains[dest].push_back(victim);
        }
        self.trap_of[victim as usize] = dest;
        self.trap_free[dest] = merge_end;
        // the blocked merge only needs the slot freed, not the victim
        // landed
        Ok(end)
    }

    /// One Measure per ancilla in its final trap, ancilla id order.
    fn measure_epilogue(&mut self, n_data: usize) {
        for anc in n_data..self.ion_free.len() {
            let trap = self.trap_of[anc];
            let start = self.ion_free[anc].max(self.trap_free[trap]);
            let end = self.emit(
                EventKind::Measure,
                vec![anc as u32],
                ResourceId::Trap(trap),
                start,
                self.times.measure,
            );
            self.trap_free[trap] = end;
        }
    }

    fn finish(self, map: &QubitMap) -> CompiledSchedule {
        let stats = finalize_stats(&self.events, &self.stalls);
        CompiledSchedule {
            events: self.events,
            stalls: self.stalls,
            stats,
            initial_trap_of_ion: map.trap_of.clone(),
        }
    }
}

fn flatten(schedule: &SyndromeSchedule) -> Vec<(u32, u32, String)> {
    schedule
        .slices
        .iter()
        .flat_map(|slice| slice.gates.iter())
        .map(|g| (g.data as u32, g.ancilla as u32, format!("{}{}@d{}", g.kind, g.stab_index, g.data)))
        .collect()
}

/// Earliest-job-first compilation over the schedule's interaction DAG.
///
/// The schedule's gate order (slice-major) defines per-qubit dependency
/// chains. A gate's shuttling starts as soon as its ancilla finishes
/// the previous job (shuttles overlap with pending gates, which is the
/// point of the policy), while the gate itself stays blocked until its
/// data qubit's preceding gate completes, preserving the DAG order
/// exactly. Routes bring the ancilla to the data trap, never the other
/// way around.
pub fn compile_static_ejf(
    schedule: &SyndromeSchedule,
    topo: &Topology,
    map: &QubitMap,
    times: &OpTimes,
    policy: SwapPolicy,
) -> Result<CompiledSchedule, CompileError> {
    let gates = flatten(schedule);
    let mut engine = Engine::new(topo, map, times, policy, false, schedule.n);

    // per-qubit chains: the ancilla chain gates spawning, the data
    // chain blocks execution
    let mut last_on: HashMap<u32, usize> = HashMap::new();
    let mut anc_succ: Vec<Option<usize>> = vec![None; gates.len()];
    let mut data_succ: Vec<Option<usize>> = vec![None; gates.len()];
    let mut has_anc_pred = vec![false; gates.len()];
    let mut data_blockers = vec![0usize; gates.len()];
    for (g, &(data, anc, _)) in gates.iter().enumerate() {
        if let Some(&p) = last_on.get(&anc) {
            anc_succ[p] = Some(g);
            has_anc_pred[g] = true;
        }
        last_on.insert(anc, g);
        if let Some(&p) = last_on.get(&data) {
            data_succ[p] = Some(g);
            data_blockers[g] += 1;
        }
        last_on.insert(data, g);
    }

    // task index == gate index: spawn everything whose ancilla is free
    let mut task_of_gate = vec![usize::MAX; gates.len()];
    let mut gate_of_task: Vec<usize> = Vec::new();
    for (g, &(data, anc, ref label)) in gates.iter().enumerate() {
        if !has_anc_pred[g] {
            engine.spawn(data, anc, label.clone(), 0.0);
            engine.tasks.last_mut().expect("just spawned").blockers = data_blockers[g];
            task_of_gate[g] = engine.tasks.len() - 1;
            gate_of_task.push(g);
        }
    }

    while let Some(Reverse((Cost(now), _, task))) = engine.queue.pop() {
        if let Some(end) = engine.step(task, now)? {
            let g = gate_of_task[task];
            if let Some(s) = anc_succ[g] {
                let (data, anc, ref label) = gates[s];
                engine.spawn(data, anc, label.clone(), end);
                engine.tasks.last_mut().expect("just spawned").blockers = data_blockers[s];
                task_of_gate[s] = engine.tasks.len() - 1;
                gate_of_task.push(s);
            }
            if let Some(s) = data_succ[g] {
                // the successor may not have spawned yet; its blocker
                // count is consumed either way
                if task_of_gate[s] != usize::MAX {
                    let st = task_of_gate[s];
                    engine.tasks[st].blockers -= 1;
                    if engine.tasks[st].blockers == 0 && engine.tasks[st].parked {
                        engine.tasks[st].parked = false;
                        engine.push(end, st);
                    }
                } else {
                    data_blockers[s] -= 1;
                }
            }
        }
    }
    debug_assert!(engine.tasks.iter().all(|t| t.finished.is_some()), "all gates completed");

    if !gates.is_empty() {
        engine.measure_epilogue(schedule.n);
    }
    Ok(engine.finish(map))
}

/// Dynamic (maximally parallel) compilation: every gate of a timeslice
/// dispatches concurrently, and a barrier separates slices.
///
/// On grid-family hardware the dispatch is uncoordinated: colliding
/// shuttle operations serialize wholesale (one shuttling path blocks
/// another), which is what makes naive slice dispatch so expensive on
/// grids. The junction mesh instead runs its conservative coordinated
/// path scheduling, where junction conflicts pipeline hop by hop.
pub fn compile_dynamic(
    schedule: &SyndromeSchedule,
    topo: &Topology,
    map: &QubitMap,
    times: &OpTimes,
    policy: SwapPolicy,
) -> Result<CompiledSchedule, CompileError> {
    let coordinated = topo.layout_tag == LayoutTag::MeshJunction;
    let mut engine = Engine::new(topo, map, times, policy, coordinated, schedule.n);
    let node_count = topo.traps.len() + topo.junctions.len();
    let mut barrier = 0.0f64;
    for slice in &schedule.slices {
        if slice.gates.is_empty() {
            continue;
        }
        engine.tasks.clear();
        engine.queue.clear();
        // conflict-serialized release for uncoordinated dispatch: a
        // route departs once every earlier route it shares a resource
        // with has fully finished
        let mut edge_hold = vec![barrier; topo.edges.len()];
        let mut node_hold = vec![barrier; node_count];
        for g in &slice.gates {
            let label = format!("{}{}@d{}", g.kind, g.stab_index, g.data);
            let mut depart = barrier;
            if !coordinated {
                let anc = g.ancilla;
                let src = engine.trap_of[anc];
                let dst = engine.trap_of[g.data];
                if src != dst {
                    if let Some(steps) = engine.plan_route(src, dst, barrier) {
                        let mut own = engine.times.split + engine.times.merge;
                        for &(edge, node) in &steps {
                            own += engine.times.move_;
                            depart = depart.max(edge_hold[edge]).max(node_hold[node]);
                            own += match topo.node_of_index(node) {
                                NodeRef::Junction(_) => {
                                    engine.times.junction_cross(engine.incident[node].len())
                                }
                                NodeRef::Trap(_) if node != topo.node_index(NodeRef::Trap(dst)) => {
                                    engine.times.merge + engine.times.split
                                }
                                _ => 0.0,
                            };
                        }
                        depart = depart
                            .max(node_hold[topo.node_index(NodeRef::Trap(src))]);
                        let release = depart + own;
                        for &(edge, node) in &steps {
                            edge_hold[edge] = release;
                            node_hold[node] = release;
                        }
                        node_hold[topo.node_index(NodeRef::Trap(src))] = release;
                    }
                }
            }
            engine.spawn(g.data as u32, g.ancilla as u32, label, depart);
        }
        let mut slice_end = barrier;
        while let Some(Reverse((Cost(now), _, task))) = engine.queue.pop() {
            if let Some(end) = engine.step(task, now)? {
                slice_end = slice_end.max(end);
            }
        }
        barrier = slice_end;
    }
    if schedule.gate_count() > 0 {
        engine.measure_epilogue(schedule.n);
    }
    Ok(engine.finish(map))
}
