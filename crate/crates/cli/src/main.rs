//! `qccd` — batch experiment driver: build codes, emit schedules and
//! topologies, compile under each scheduling mode, run the sensitivity
//! sweeps, and export noise records. Figures are emitted as CSV/JSON
//! data, never rendered.

mod experiments;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use qccd_core::compiler::SwapPolicy;
use qccd_core::cyclone::{
    ancilla_count, cyclone_bound, cyclone_compile, cyclone_topology, per_trap_load,
    spacetime_cost, sweep_traps, tight_capacity, CycloneConfig,
};
use qccd_core::noise::export_noise_model;
use qccd_core::schedule::ScheduleKind;
use qccd_core::Config;

use experiments::{
    build_layout, compile_run, parallel_map, stats_csv_row, write_file, CodeSpec, Layout, Mode,
    RunSpec, STATS_HEADER,
};

#[derive(Parser)]
#[command(name = "qccd", version, about = "QCCD syndrome-extraction latency experiments")]
struct Cli {
    /// Global JSON config (op_times, coherence_fit, swap_policy, seed,
    /// bb_presets).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed recorded with the run; the pipeline itself is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweep points.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CodeArg {
    /// Code spec: hgp:<5|225|625|path[,path]>, bb:<preset>, or
    /// custom:<hx.pcm>,<hz.pcm>.
    #[arg(long)]
    code: String,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a code and print its parameters.
    BuildCode {
        #[command(flatten)]
        code: CodeArg,
        /// Also write hx/hz in the .pcm text format.
        #[arg(long)]
        emit_pcm: bool,
    },
    /// Write a syndrome schedule in the JSON dump format.
    EmitSchedule {
        #[command(flatten)]
        code: CodeArg,
        #[arg(long, value_enum)]
        kind: KindArg,
    },
    /// Write a topology JSON dump.
    EmitTopology {
        #[command(flatten)]
        code: CodeArg,
        #[arg(long, value_enum)]
        layout: Layout,
        #[arg(long)]
        capacity: Option<usize>,
        #[arg(long)]
        traps: Option<usize>,
    },
    /// Compile one experiment and write its stats row (and trace).
    Compile {
        #[command(flatten)]
        code: CodeArg,
        #[arg(long, value_enum)]
        layout: Layout,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        capacity: Option<usize>,
        #[arg(long)]
        traps: Option<usize>,
        #[arg(long, value_enum)]
        swap: Option<SwapArg>,
        /// Also write the event trace as JSON lines.
        #[arg(long)]
        emit_trace: bool,
    },
    /// Compile the Cyclone codesign on its ring.
    Cyclone {
        #[command(flatten)]
        code: CodeArg,
        /// Ring trap count x; defaults to the base form max(|X|,|Z|).
        #[arg(long)]
        traps: Option<usize>,
        /// Per-trap capacity: a number, or "tight" for
        /// ceil(n/x)+ceil(m/x).
        #[arg(long)]
        capacity: Option<String>,
        #[arg(long, value_enum)]
        swap: Option<SwapArg>,
        /// What to write: trace, stats, or bound.
        #[arg(long, value_enum, default_value_t = CycloneEmit::Stats)]
        emit: CycloneEmit,
    },
    /// Cyclone trap-count sensitivity sweep.
    SweepTraps {
        #[command(flatten)]
        code: CodeArg,
        /// Comma-separated trap counts.
        #[arg(long, value_delimiter = ',')]
        x_list: Vec<usize>,
        /// Use the tight capacity formula per x.
        #[arg(long)]
        tight: bool,
        #[arg(long)]
        capacity: Option<usize>,
        #[arg(long, value_enum)]
        swap: Option<SwapArg>,
    },
    /// Scale gate and shuttle times down by r% and recompile baseline
    /// and Cyclone.
    SweepReduction {
        #[command(flatten)]
        code: CodeArg,
        /// Comma-separated reduction percentages in [0, 95].
        #[arg(long, value_delimiter = ',')]
        r_list: Vec<f64>,
    },
    /// Scale junction crossing times down and compare the mesh network
    /// against the baseline grid.
    SweepJunction {
        #[command(flatten)]
        code: CodeArg,
        /// Comma-separated reduction percentages in [0, 100].
        #[arg(long, value_delimiter = ',')]
        reductions: Vec<f64>,
    },
    /// Export latency-coupled noise records for external decoders.
    ExportNoise {
        #[command(flatten)]
        code: CodeArg,
        #[arg(long, value_enum)]
        layout: Layout,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Comma-separated physical error rates.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long)]
        traps: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum KindArg {
    Serial,
    XThenZ,
    EdgeColorable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum SwapArg {
    Gate,
    Ion,
}

impl From<SwapArg> for SwapPolicy {
    fn from(value: SwapArg) -> Self {
        match value {
            SwapArg::Gate => SwapPolicy::GateSwap,
            SwapArg::Ion => SwapPolicy::IonSwap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum CycloneEmit {
    Trace,
    Stats,
    Bound,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli.out.clone();
    let times = config.op_times.clone();
    let swap_default = config.swap_policy;

    match cli.command {
        Command::BuildCode { code, emit_pcm } => {
            let spec = CodeSpec::parse(&code.code)?;
            let built = spec.build(&config)?;
            let summary = serde_json::json!({
                "name": spec.name,
                "family": built.family.to_string(),
                "n": built.n,
                "m_x": built.m_x,
                "m_z": built.m_z,
                "k": built.k,
                "w_max_x": built.w_max_x(),
                "w_max_z": built.w_max_z(),
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if emit_pcm {
                write_file(&out, &format!("{}_hx.pcm", spec.name), &built.hx.to_pcm())?;
                write_file(&out, &format!("{}_hz.pcm", spec.name), &built.hz.to_pcm())?;
            }
        }
        Command::EmitSchedule { code, kind } => {
            let spec = CodeSpec::parse(&code.code)?;
            let built = spec.build(&config)?;
            let schedule = match kind {
                KindArg::Serial => qccd_core::schedule_serial(&built),
                KindArg::XThenZ => qccd_core::schedule_x_then_z(&built),
                KindArg::EdgeColorable => qccd_core::schedule_edge_colorable(&built)?,
            };
            let kind_tag = match schedule.kind {
                ScheduleKind::Serial => "serial",
                ScheduleKind::XThenZ => "xthenz",
                ScheduleKind::EdgeColorable => "edgecolorable",
            };
            let path = write_file(
                &out,
                &format!("schedule_{}_{}.json", spec.name, kind_tag),
                &schedule.to_dump_json(),
            )?;
            println!("wrote {} ({} slices)", path.display(), schedule.depth());
        }
        Command::EmitTopology { code, layout, capacity, traps } => {
            let spec = CodeSpec::parse(&code.code)?;
            let built = spec.build(&config)?;
            let topo = build_layout(layout, &built, capacity.unwrap_or(5), traps);
            let violations = qccd_core::validate_topology(&topo);
            if !violations.is_empty() {
                bail!("generated topology is invalid: {violations:?}");
            }
            let path =
                write_file(&out, &format!("topology_{}_{layout}.json", spec.name), &topo.dump_json())?;
            println!(
                "wrote {} ({} traps, {} junctions)",
                path.display(),
                topo.traps.len(),
                topo.junctions.len()
            );
        }
        Command::Compile { code, layout, mode, capacity, traps, swap, emit_trace } => {
            let spec = RunSpec {
                code: CodeSpec::parse(&code.code)?,
                layout,
                mode,
                capacity,
                traps,
                tight: false,
            };
            let swap = swap.map(SwapPolicy::from).unwrap_or(swap_default);
            let (_, cs) = compile_run(&spec, &config, &times, swap)?;
            let row = stats_csv_row(&spec.code.name, &layout.to_string(), &mode.to_string(), &cs);
            let path = write_file(
                &out,
                &format!("stats_{}_{layout}_{mode}.csv", spec.code.name),
                &format!("{STATS_HEADER}\n{row}\n"),
            )?;
            println!("{STATS_HEADER}");
            println!("{row}");
            println!("wrote {}", path.display());
            if emit_trace {
                let trace = write_file(
                    &out,
                    &format!("trace_{}_{layout}_{mode}.jsonl", spec.code.name),
                    &cs.trace_jsonl(),
                )?;
                println!("wrote {}", trace.display());
            }
        }
        Command::Cyclone { code, traps, capacity, swap, emit } => {
            let spec = CodeSpec::parse(&code.code)?;
            let built = spec.build(&config)?;
            let x = traps.unwrap_or_else(|| ancilla_count(&built).max(1));
            let capacity = match capacity.as_deref() {
                None => per_trap_load(&built, x),
                Some("tight") => tight_capacity(&built, x),
                Some(num) => num
                    .parse()
                    .with_context(|| format!("capacity must be a number or \"tight\", got {num:?}"))?,
            };
            let swap = swap.map(SwapPolicy::from).unwrap_or(swap_default);
            let cfg =
                CycloneConfig { code: &built, x, capacity, times: times.clone(), swap_policy: swap };
            let bound = cyclone_bound(&cfg);
            match emit {
                CycloneEmit::Bound => {
                    println!("x,capacity,bound_us");
                    println!("{x},{capacity},{bound:.3}");
                }
                CycloneEmit::Stats | CycloneEmit::Trace => {
                    let cs = cyclone_compile(&cfg)?;
                    let report = qccd_core::replay(&cs, &cyclone_topology(&cfg));
                    if !report.is_clean() {
                        bail!("trace audit failed: {:?}", report.violations);
                    }
                    let row = stats_csv_row(&spec.name, "ring", "cyclone", &cs);
                    let spacetime = spacetime_cost(cs.stats.total_time, x, cfg.ancilla_count());
                    println!("{STATS_HEADER},bound_us,spacetime");
                    println!("{row},{bound:.3},{spacetime:.3}");
                    if emit == CycloneEmit::Trace {
                        let path = write_file(
                            &out,
                            &format!("trace_{}_cyclone.jsonl", spec.name),
                            &cs.trace_jsonl(),
                        )?;
                        println!("wrote {}", path.display());
                    } else {
                        let path = write_file(
                            &out,
                            &format!("stats_{}_ring_cyclone.csv", spec.name),
                            &format!(
                                "{STATS_HEADER},bound_us,spacetime\n{row},{bound:.3},{spacetime:.3}\n"
                            ),
                        )?;
                        println!("wrote {}", path.display());
                    }
                }
            }
        }
        Command::SweepTraps { code, x_list, tight, capacity, swap } => {
            if x_list.is_empty() {
                bail!("--x-list must not be empty");
            }
            let spec = CodeSpec::parse(&code.code)?;
            let built = spec.build(&config)?;
            let swap = swap.map(SwapPolicy::from).unwrap_or(swap_default);
            let rows = sweep_traps(&built, &x_list, tight, capacity.unwrap_or(5), &times, swap);
            let mut csv = String::from("x,capacity,total_us,bound_us,spacetime\n");
            for row in &rows {
                match &row.result {
                    Ok(point) => csv.push_str(&format!(
                        "{},{},{:.3},{:.3},{:.3}\n",
                        row.x, row.capacity, point.total_us, point.bound_us, point.spacetime
                    )),
                    Err(err) => {
                        csv.push_str(&format!("{},{},error: {err},,\n", row.x, row.capacity))
                    }
                }
            }
            let path = write_file(&out, &format!("sweep_traps_{}.csv", spec.name), &csv)?;
            print!("{csv}");
            println!("wrote {}", path.display());
        }
        Command::SweepReduction { code, r_list } => {
            if r_list.is_empty() {
                bail!("--r-list must not be empty");
            }
            if r_list.iter().any(|&r| !(0.0..=95.0).contains(&r)) {
                bail!("reductions must lie in [0, 95]");
            }
            let spec = CodeSpec::parse(&code.code)?;
            let rows = parallel_map(r_list, cli.jobs, |&r| -> Result<String> {
                let mut scaled = times.clone();
                let factor = 1.0 - r / 100.0;
                scaled.scale_gate(factor);
                scaled.scale_shuttle(factor);
                let baseline = RunSpec {
                    code: spec.clone(),
                    layout: Layout::Grid,
                    mode: Mode::Ejf,
                    capacity: None,
                    traps: None,
                    tight: false,
                };
                let cyclone = RunSpec {
                    code: spec.clone(),
                    layout: Layout::Ring,
                    mode: Mode::Cyclone,
                    capacity: None,
                    traps: None,
                    tight: false,
                };
                let (_, base) = compile_run(&baseline, &config, &scaled, swap_default)?;
                let (_, cyc) = compile_run(&cyclone, &config, &scaled, swap_default)?;
                let (b, c) = (base.stats.total_time, cyc.stats.total_time);
                Ok(format!("{r},{b:.3},{c:.3},{:.3},{:.6}", b - c, b / c))
            });
            let mut csv =
                String::from("r_percent,baseline_total_us,cyclone_total_us,gap_us,ratio\n");
            for row in rows {
                csv.push_str(&row?);
                csv.push('\n');
            }
            let path = write_file(&out, &format!("sweep_reduction_{}.csv", spec.name), &csv)?;
            print!("{csv}");
            println!("wrote {}", path.display());
        }
        Command::SweepJunction { code, reductions } => {
            if reductions.is_empty() {
                bail!("--reductions must not be empty");
            }
            if reductions.iter().any(|&r| !(0.0..=100.0).contains(&r)) {
                bail!("reductions must lie in [0, 100]");
            }
            let spec = CodeSpec::parse(&code.code)?;
            // the reduction models optimistic junction hardware for the
            // mesh design under study; the baseline grid is the fixed
            // reference bar
            let rows = parallel_map(reductions, cli.jobs, |&r| -> Result<String> {
                let mut scaled = times.clone();
                scaled.scale_junctions(1.0 - r / 100.0);
                let mesh = RunSpec {
                    code: spec.clone(),
                    layout: Layout::Mesh,
                    mode: Mode::Dynamic,
                    capacity: None,
                    traps: None,
                    tight: false,
                };
                let baseline = RunSpec {
                    code: spec.clone(),
                    layout: Layout::Grid,
                    mode: Mode::Ejf,
                    capacity: None,
                    traps: None,
                    tight: false,
                };
                let (_, mesh_cs) = compile_run(&mesh, &config, &scaled, swap_default)?;
                let (_, base_cs) = compile_run(&baseline, &config, &times, swap_default)?;
                Ok(format!("{r},{:.3},{:.3}", mesh_cs.stats.total_time, base_cs.stats.total_time))
            });
            let mut csv = String::from("reduction,mesh_total_us,baseline_total_us\n");
            for row in rows {
                csv.push_str(&row?);
                csv.push('\n');
            }
            let path = write_file(&out, &format!("sweep_junction_{}.csv", spec.name), &csv)?;
            print!("{csv}");
            println!("wrote {}", path.display());
        }
        Command::ExportNoise { code, layout, mode, p, traps } => {
            if p.is_empty() {
                bail!("--p must list at least one physical error rate");
            }
            let spec = RunSpec {
                code: CodeSpec::parse(&code.code)?,
                layout,
                mode,
                capacity: None,
                traps,
                tight: false,
            };
            let (_, cs) = compile_run(&spec, &config, &times, swap_default)?;
            for &p_base in &p {
                let record = export_noise_model(
                    &spec.code.name,
                    &layout.to_string(),
                    &mode.to_string(),
                    &cs.stats,
                    p_base,
                    config.coherence_fit,
                )?;
                let path =
                    write_file(&out, &record.file_name(), &serde_json::to_string_pretty(&record)?)?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}
