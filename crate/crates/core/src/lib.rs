//! Syndrome-extraction latency analysis for trapped-ion QCCD machines.
//!
//! The crate builds CSS codes (hypergraph product and bivariate
//! bicycle), generates their syndrome-extraction schedules at several
//! parallelism levels, models QCCD topologies with priced shuttling
//! primitives, compiles schedules into timed event traces under
//! earliest-job-first or dynamic-timeslice policies, implements the
//! Cyclone ring codesign with its closed-form worst-case bound, and
//! derives latency-coupled depolarizing noise parameters for external
//! decoder pipelines.
//!
//! Module map:
//!
//! - [`gf2`]: bit-packed GF(2) matrices, rank, the `.pcm` format
//! - [`codes`]: `CssCode`, HGP and BB constructions, shipped presets
//! - [`schedule`]: serial / X-then-Z / edge-colorable timeslicing
//! - [`hardware`]: topologies, generators, operation timing tables
//! - [`compiler`]: qubit mapping and the discrete-event engine
//! - [`cyclone`]: the ring codesign, its bound, and sensitivity sweeps
//! - [`noise`]: coherence fits and the Pauli-twirled idle channel
//! - [`config`]: the global JSON experiment configuration

pub mod codes;
pub mod compiler;
pub mod config;
pub mod cyclone;
pub mod gf2;
pub mod hardware;
pub mod noise;
pub mod schedule;

pub use codes::{
    bb_construct, hgp_construct, stabilizers_of, BbPreset, CodeFamily, CssCode, StabKind,
    Stabilizer,
};
pub use compiler::{
    compile_dynamic, compile_static_ejf, detect_roadblocks, map_greedy_cluster, replay,
    swap_cost, CompiledSchedule, EventKind, ExecStats, QubitMap, ResourceId, ShuttleEvent, Stall,
    SwapPolicy,
};
pub use config::Config;
pub use cyclone::{
    assign_rotations, cyclone_bound, cyclone_compile, partition_data, spacetime_cost, sweep_traps,
    CycloneConfig,
};
pub use gf2::{gf2_rank, BinaryMatrix};
pub use hardware::{
    build_alt_grid, build_grid_baseline, build_mesh_junction, build_ring, gate_time,
    validate_topology, LayoutTag, OpTimes, Topology,
};
pub use noise::{coherence_from_p, export_noise_model, twirl_depolarize, CoherenceFit, NoiseParams};
pub use schedule::{
    ideal_speedup, schedule_edge_colorable, schedule_serial, schedule_x_then_z, ScheduleKind,
    SyndromeSchedule,
};
