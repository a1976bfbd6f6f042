//! Experiment assembly: code specs, layout/mode combinations, CSV
//! emission, and the parallel sweep driver.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{anyhow, bail, Context, Result};
use qccd_core::codes::presets;
use qccd_core::compiler::{
    compile_dynamic, compile_static_ejf, map_greedy_cluster, CompiledSchedule, SwapPolicy,
};
use qccd_core::cyclone::{ancilla_count, cyclone_compile, per_trap_load, CycloneConfig};
use qccd_core::hardware::{
    build_alt_grid, build_grid_baseline, build_mesh_junction, build_ring, OpTimes, Topology,
};
use qccd_core::schedule::{
    schedule_edge_colorable, schedule_serial, schedule_x_then_z, SyndromeSchedule,
};
use qccd_core::{bb_construct, hgp_construct, BinaryMatrix, CodeFamily, Config, CssCode};

pub const STATS_HEADER: &str =
    "code,layout,mode,total_us,gate_us,shuttle_us,swap_us,measure_us,stalls,parallel_fraction";

/// Code selector: `hgp:<preset|path[,path]>`, `bb:<preset>`, or
/// `custom:<hx.pcm>,<hz.pcm>`.
#[derive(Debug, Clone)]
pub struct CodeSpec {
    pub name: String,
    raw: String,
}

impl CodeSpec {
    pub fn parse(raw: &str) -> Result<Self> {
        let (family, rest) = raw
            .split_once(':')
            .ok_or_else(|| anyhow!("code spec {raw:?} must look like family:args"))?;
        if !matches!(family, "hgp" | "bb" | "custom") {
            bail!("unknown code family {family:?} (expected hgp, bb, or custom)");
        }
        let name = match family {
            "hgp" | "bb" => {
                let tag = rest.split(',').next().unwrap_or(rest);
                let tag = Path::new(tag).file_stem().and_then(|s| s.to_str()).unwrap_or(tag);
                format!("{family}-{tag}")
            }
            _ => {
                let tag = Path::new(rest.split(',').next().unwrap_or(rest))
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("code");
                format!("custom-{tag}")
            }
        };
        Ok(Self { name, raw: raw.to_string() })
    }

    pub fn build(&self, config: &Config) -> Result<CssCode> {
        let (family, rest) = self.raw.split_once(':').expect("validated at parse");
        match family {
            "hgp" => match rest {
                "5" => Ok(presets::hgp_5()),
                "225" => Ok(presets::hgp_225()),
                "625" => Ok(presets::hgp_625()),
                paths => {
                    let mut parts = paths.split(',');
                    let h1 = load_pcm(parts.next().unwrap())?;
                    let h2 = match parts.next() {
                        Some(p) => load_pcm(p)?,
                        None => h1.clone(),
                    };
                    Ok(hgp_construct(&h1, &h2)?)
                }
            },
            "bb" => {
                let preset = config
                    .bb_presets
                    .get(rest)
                    .ok_or_else(|| anyhow!("no BB preset named {rest:?} in the config"))?;
                Ok(bb_construct(preset.l, preset.m, &preset.a, &preset.b)?)
            }
            "custom" => {
                let (hx_path, hz_path) = rest
                    .split_once(',')
                    .ok_or_else(|| anyhow!("custom codes need hx.pcm,hz.pcm"))?;
                let hx = load_pcm(hx_path)?;
                let hz = load_pcm(hz_path)?;
                Ok(CssCode::new(hx, hz, CodeFamily::Custom)?)
            }
            _ => unreachable!(),
        }
    }
}

fn load_pcm(path: &str) -> Result<BinaryMatrix> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    Ok(BinaryMatrix::parse_pcm(&text).with_context(|| format!("parsing {path}"))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Layout {
    Grid,
    Altgrid,
    Mesh,
    Ring,
}

impl std::fmt::Display for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::Grid => "grid",
            Self::Altgrid => "altgrid",
            Self::Mesh => "mesh",
            Self::Ring => "ring",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Ejf,
    Dynamic,
    Serial,
    Cyclone,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::Ejf => "ejf",
            Self::Dynamic => "dynamic",
            Self::Serial => "serial",
            Self::Cyclone => "cyclone",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub code: CodeSpec,
    pub layout: Layout,
    pub mode: Mode,
    /// Per-trap ion capacity; defaults to 5 for grid-family layouts and
    /// to the exact per-trap load for cyclone.
    pub capacity: Option<usize>,
    pub traps: Option<usize>,
    pub tight: bool,
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        if self.mode == Mode::Cyclone && self.layout != Layout::Ring {
            bail!("incompatible layout/mode: cyclone requires the ring layout");
        }
        if self.layout == Layout::Mesh && self.mode != Mode::Dynamic {
            bail!("incompatible layout/mode: mesh requires the dynamic mode");
        }
        Ok(())
    }
}

pub fn build_layout(layout: Layout, code: &CssCode, capacity: usize, traps: Option<usize>) -> Topology {
    match layout {
        Layout::Grid => build_grid_baseline(code.n, capacity),
        Layout::Altgrid => build_alt_grid(code.n, capacity),
        Layout::Mesh => build_mesh_junction(code.n, capacity),
        Layout::Ring => build_ring(traps.unwrap_or_else(|| ancilla_count(code).max(1)), capacity),
    }
}

/// Schedule each mode consumes: EJF reads the stabilizer-major serial
/// order as its DAG; dynamic takes the maximally parallel slicing for
/// the family (edge-colorable for HGP, X-then-Z otherwise).
pub fn schedule_for(mode: Mode, code: &CssCode) -> SyndromeSchedule {
    match mode {
        Mode::Ejf | Mode::Serial => schedule_serial(code),
        Mode::Dynamic | Mode::Cyclone => match code.family {
            CodeFamily::Hgp => schedule_edge_colorable(code).expect("HGP is edge-colorable"),
            _ => schedule_x_then_z(code),
        },
    }
}

/// Compile one experiment end to end.
pub fn compile_run(
    spec: &RunSpec,
    config: &Config,
    times: &OpTimes,
    swap: SwapPolicy,
) -> Result<(CssCode, CompiledSchedule)> {
    spec.validate()?;
    let code = spec.code.build(config)?;
    let cs = match spec.mode {
        Mode::Cyclone => {
            let x = spec.traps.unwrap_or_else(|| ancilla_count(&code).max(1));
            let capacity = if spec.tight {
                qccd_core::cyclone::tight_capacity(&code, x)
            } else {
                spec.capacity.unwrap_or_else(|| per_trap_load(&code, x))
            };
            let cfg = CycloneConfig { code: &code, x, capacity, times: times.clone(), swap_policy: swap };
            cyclone_compile(&cfg)?
        }
        mode => {
            let capacity = spec.capacity.unwrap_or(5);
            let topo = build_layout(spec.layout, &code, capacity, spec.traps);
            let schedule = schedule_for(mode, &code);
            let map = map_greedy_cluster(&code, &topo)?;
            match mode {
                Mode::Ejf => compile_static_ejf(&schedule, &topo, &map, times, swap)?,
                Mode::Dynamic => compile_dynamic(&schedule, &topo, &map, times, swap)?,
                Mode::Serial => {
                    // one gate per slice with barriers: fully serialized
                    compile_dynamic(&schedule, &topo, &map, times, swap)?
                }
                Mode::Cyclone => unreachable!(),
            }
        }
    };
    Ok((code, cs))
}

pub fn stats_csv_row(code: &str, layout: &str, mode: &str, cs: &CompiledSchedule) -> String {
    let s = &cs.stats;
    format!(
        "{code},{layout},{mode},{:.3},{:.3},{:.3},{:.3},{:.3},{},{:.6}",
        s.total_time,
        s.component(qccd_core::EventKind::Gate),
        s.shuttle_us(),
        s.swap_us(),
        s.component(qccd_core::EventKind::Measure),
        s.roadblock_count,
        s.parallel_fraction,
    )
}

pub fn write_file(out_dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let path = out_dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Run `work` over `items` on up to `jobs` threads, preserving input
/// order in the output.
pub fn parallel_map<T, R, F>(items: Vec<T>, jobs: usize, work: F) -> Vec<R>
where
    T: Send + Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(|item| work(item)).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= items.len() {
                    break;
                }
                let result = work(&items[index]);
                *results[index].lock().expect("result slot") = Some(result);
            });
        }
    });
    results
        .into_iter()
        .map(|slot| slot.into_inner().expect("slot").expect("worker filled slot"))
        .collect()
}
