//! Declarative run descriptions and their execution, single runs and sweep
//! grids. A `RunSpec` maps one to one onto a TOML config file.

use std::path::PathBuf;

use rayon::prelude::*;

use crate::metrics::{
    self, CostModel, IdealThroughputInputs, MetricsError, NodeArch, ThroughputInputs,
};
use crate::netsim::{
    run_iteration, CollisionPolicy, HalfIterationResult, IterationResult, RoutingAlgorithm,
    SimConfig, SimError,
};
use crate::report::{
    rate_label, CsvRow, HalfReport, LatencyReport, MemoryReport, RunReport, ThroughputReport,
    TopologyReport, TrafficReport,
};
use crate::routing::{self, RoutingError, RoutingTables};
use crate::routing_memory::{self, RoutingMemoryError};
use crate::topology::{self, Topology, TopologyError};
use crate::traffic::{self, InjectionOrder, Permutation, SisoTiming, TrafficError};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    RoutingMemory(#[from] RoutingMemoryError),
    #[error("bad run description: {0}")]
    BadSpec(String),
}

/// Which network to build.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologySpec {
    Ring { p: usize },
    Mesh { rows: usize, cols: usize },
    Honeycomb { rows: usize, cols: usize },
    DeBruijn { p: usize, d: usize },
    Kautz { p: usize, d: usize },
    File { path: PathBuf },
}

impl TopologySpec {
    pub fn build(&self) -> Result<Topology, TopologyError> {
        match self {
            TopologySpec::Ring { p } => topology::build_ring(*p),
            TopologySpec::Mesh { rows, cols } => topology::build_toroidal_mesh(*rows, *cols),
            TopologySpec::Honeycomb { rows, cols } => topology::build_honeycomb_torus(*rows, *cols),
            TopologySpec::DeBruijn { p, d } => topology::build_gen_de_bruijn(*p, *d),
            TopologySpec::Kautz { p, d } => topology::build_gen_kautz(*p, *d),
            TopologySpec::File { path } => topology::load_topology(path),
        }
    }
}

/// Which block permutation connects the two halves.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InterleaverSpec {
    Identity,
    CircularShifting { a: usize, s: usize },
    Random { seed: u64 },
    File { path: PathBuf },
}

fn sanitize_token(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

impl InterleaverSpec {
    /// Builds the permutation of length `n` plus its report label.
    pub fn build(&self, n: usize) -> Result<(Permutation, String), TrafficError> {
        Ok(match self {
            InterleaverSpec::Identity => (Permutation::identity(n), "identity".to_string()),
            InterleaverSpec::CircularShifting { a, s } => (
                traffic::gen_circular_shifting(n, *a, *s)?,
                format!("circular_a{a}_s{s}"),
            ),
            InterleaverSpec::Random { seed } => {
                (traffic::gen_random(n, *seed), format!("random_seed{seed}"))
            }
            InterleaverSpec::File { path } => {
                let perm = traffic::load_permutation(path, n)?;
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "file".to_string());
                (perm, format!("file_{}", sanitize_token(&stem)))
            }
        })
    }
}

/// Core output timing. `window = 0` means a single window covering the whole
/// half iteration; `inter_gap = 0` means window boundaries keep the
/// `intra_gap` cadence. `intra_gap` doubles as the cycles-per-step
/// reciprocal rate. Decoders emit extrinsic values in backward recursion
/// order, so that is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingSpec {
    pub window: usize,
    pub intra_gap: u64,
    pub inter_gap: u64,
    pub latency: u64,
    pub order: InjectionOrder,
}

impl Default for TimingSpec {
    fn default() -> Self {
        TimingSpec {
            window: 0,
            intra_gap: 1,
            inter_gap: 0,
            latency: 0,
            order: InjectionOrder::Backward,
        }
    }
}

impl TimingSpec {
    fn to_siso(self, steps: usize) -> SisoTiming {
        SisoTiming {
            window: if self.window == 0 {
                steps.max(1)
            } else {
                self.window
            },
            intra_gap: self.intra_gap,
            inter_gap: if self.inter_gap == 0 {
                self.intra_gap
            } else {
                self.inter_gap
            },
            latency: self.latency,
            order: self.order,
        }
    }
}

/// Simulator knobs, mirroring `netsim::SimConfig` with file-friendly defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSpec {
    pub routing: RoutingAlgorithm,
    pub collision: CollisionPolicy,
    pub guard_cycle_limit: u64,
    pub record_routing_trace: bool,
    pub record_asp_decisions: bool,
    pub asp_literal_tiebreak: bool,
}

impl Default for SimSpec {
    fn default() -> Self {
        let c = SimConfig::default();
        SimSpec {
            routing: c.routing,
            collision: c.collision,
            guard_cycle_limit: c.guard_cycle_limit,
            record_routing_trace: c.record_routing_trace,
            record_asp_decisions: c.record_asp_decisions,
            asp_literal_tiebreak: c.asp_literal_tiebreak,
        }
    }
}

impl SimSpec {
    pub fn to_config(self) -> SimConfig {
        SimConfig {
            routing: self.routing,
            collision: self.collision,
            guard_cycle_limit: self.guard_cycle_limit,
            record_routing_trace: self.record_routing_trace,
            record_asp_decisions: self.record_asp_decisions,
            asp_literal_tiebreak: self.asp_literal_tiebreak,
        }
    }
}

fn default_bits_per_step() -> u32 {
    1
}
fn default_payload_bits() -> u32 {
    24
}
fn default_iterations() -> u32 {
    8
}
fn default_f_clk() -> u64 {
    200_000_000
}
fn default_arch() -> NodeArch {
    NodeArch::C
}

/// Code and decoder parameters that scale the throughput and memory figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    /// Block length N; each half iteration moves one message per position.
    pub block_length: usize,
    #[serde(default = "default_bits_per_step")]
    pub bits_per_step: u32,
    #[serde(default = "default_payload_bits")]
    pub payload_bits: u32,
    #[serde(default = "default_iterations")]
    pub iterations: u32,
    #[serde(default = "default_f_clk")]
    pub f_clk_hz: u64,
    /// Node architecture the CSV area columns are computed for.
    #[serde(default = "default_arch")]
    pub arch: NodeArch,
}

/// One complete run description.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub topology: TopologySpec,
    pub interleaver: InterleaverSpec,
    #[serde(default)]
    pub timing: TimingSpec,
    #[serde(default)]
    pub sim: SimSpec,
    pub code: CodeSpec,
    #[serde(default)]
    pub cost: CostModel,
}

/// Everything a run produces. The raw simulation results stay available for
/// artifact dumps on top of the condensed report.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub row: CsvRow,
    pub topology: Topology,
    pub tables: RoutingTables,
    pub result: IterationResult,
}

fn half_report(half: &HalfIterationResult, ideal: u64, overhead: u64) -> HalfReport {
    let lat = metrics::latency_stats(&half.delivered)
        .global
        .map(|s| LatencyReport {
            min: s.min,
            avg: s.avg(),
            max: s.max,
        });
    HalfReport {
        cycles: half.cycles_to_complete,
        ideal_cycles: ideal,
        overhead_cycles: overhead,
        delivered_messages: half.delivered.iter().map(Vec::len).sum(),
        max_fifo_depth: half.max_fifo_depth(),
        latency: lat,
    }
}

/// Per-architecture storage, both halves of one iteration summed.
fn iteration_memory(
    arch: NodeArch,
    n: usize,
    p: usize,
    m: usize,
    payload_bits: u32,
    result: &IterationResult,
) -> Result<(Vec<u64>, u32), MetricsError> {
    let words = |half: &HalfIterationResult| half.routing_words.clone();
    let (int_words, deint_words) = (words(&result.interleave), words(&result.deinterleave));
    let a = metrics::memory_budget(arch, n, p, m, payload_bits, Some(&int_words))?;
    let b = metrics::memory_budget(arch, n, p, m, payload_bits, Some(&deint_words))?;
    let per_node: Vec<u64> = a
        .bits_per_node
        .iter()
        .zip(&b.bits_per_node)
        .map(|(x, y)| x + y)
        .collect();
    Ok((per_node, a.message_width_bits))
}

/// Runs one description end to end: topology, routing tables, traffic,
/// both halves, figures.
pub fn execute(spec: &RunSpec) -> Result<RunOutcome, RunError> {
    let n = spec.code.block_length;
    if n == 0 {
        return Err(RunError::BadSpec("block_length must be positive".into()));
    }
    if spec.timing.intra_gap == 0 {
        return Err(RunError::BadSpec(
            "timing.intra_gap must be positive".into(),
        ));
    }
    let topology = spec.topology.build()?;
    let p = topology.nodes();
    let m = topology.ports();
    if !n.is_multiple_of(p) {
        return Err(RunError::Traffic(TrafficError::IndivisibleBlock { n, p }));
    }
    let steps = n / p;
    let tables = RoutingTables::build(&topology)?;
    let diameter = routing::diameter(&tables.dist);
    let (perm, interleaver_label) = spec.interleaver.build(n)?;
    let timing = spec.timing.to_siso(steps);
    let cfg = spec.sim.to_config();

    let result = run_iteration(&topology, &tables, &perm, &timing, &cfg)?;

    let tau = spec.timing.intra_gap;
    let (ideal_cycles, oh_int) =
        metrics::half_iteration_decomposition(n, p, tau, result.interleave.cycles_to_complete)?;
    let (_, oh_deint) =
        metrics::half_iteration_decomposition(n, p, tau, result.deinterleave.cycles_to_complete)?;
    let worst = result
        .interleave
        .cycles_to_complete
        .max(result.deinterleave.cycles_to_complete);

    let measured_bps = metrics::throughput_bps(&ThroughputInputs {
        bits_per_step: spec.code.bits_per_step,
        n,
        f_clk_hz: spec.code.f_clk_hz,
        iterations: spec.code.iterations,
        worst_half_cycles: worst,
    })?;
    let ideal_bps = metrics::throughput_ideal_bps(&IdealThroughputInputs {
        bits_per_step: spec.code.bits_per_step,
        p,
        tau,
        f_clk_hz: spec.code.f_clk_hz,
        iterations: spec.code.iterations,
    })?;

    let mut mem_totals = [0u64; 3];
    let mut mem_reports = Vec::with_capacity(3);
    let mut area_inputs: Option<(Vec<u64>, u32)> = None;
    for arch in [NodeArch::A, NodeArch::B, NodeArch::C] {
        let (per_node, width) = iteration_memory(arch, n, p, m, spec.code.payload_bits, &result)?;
        let total: u64 = per_node.iter().sum();
        let max_node = per_node.iter().copied().max().unwrap_or(0);
        mem_totals[arch as usize] = total;
        mem_reports.push(MemoryReport {
            arch: arch.label().to_string(),
            message_width_bits: width,
            total_bits: total,
            max_bits_per_node: max_node,
        });
        if arch == spec.code.arch {
            area_inputs = Some((per_node, width));
        }
    }
    let (storage_bits, msg_width) = area_inputs.expect("arch loop covers all variants");

    // FIFOs are shared silicon across halves: size each to the deeper half.
    let fifo_max: Vec<Vec<usize>> = (0..p)
        .map(|i| {
            (0..m)
                .map(|j| result.interleave.fifo_max[i][j].max(result.deinterleave.fifo_max[i][j]))
                .collect()
        })
        .collect();
    let word_bits = routing_memory::word_bits(m)? as u64;
    let replay_bits: Vec<u64> = (0..p)
        .map(|i| {
            (result.interleave.routing_words[i] + result.deinterleave.routing_words[i]) * word_bits
        })
        .collect();
    let table_bits = p as u64 * metrics::ceil_log2(m) as u64;
    let area = metrics::area_estimate(
        &metrics::AreaInputs {
            ports: m,
            message_width_bits: msg_width,
            fifo_max: &fifo_max,
            storage_bits_per_node: &storage_bits,
            routing_memory_bits_per_node: (spec.code.arch == NodeArch::B)
                .then_some(replay_bits.as_slice()),
            routing_table_bits_per_node: table_bits,
        },
        &spec.cost,
    );

    let mut all_delivered: Vec<Vec<crate::netsim::Delivered>> = Vec::with_capacity(2 * p);
    all_delivered.extend_from_slice(&result.interleave.delivered);
    all_delivered.extend_from_slice(&result.deinterleave.delivered);
    let lat = metrics::latency_stats(&all_delivered).global;

    let row = CsvRow {
        topology: topology.kind().to_string(),
        p,
        d: topology.degree(),
        rate_label: rate_label(tau),
        routing: cfg.routing.label(),
        collision: cfg.collision.label(),
        interleaver: interleaver_label.clone(),
        n,
        cycles_interleave: result.interleave.cycles_to_complete,
        cycles_deinterleave: result.deinterleave.cycles_to_complete,
        overhead_cycles: worst - ideal_cycles,
        throughput_bps: measured_bps,
        ideal_bps,
        lat_min: lat.map_or(0, |s| s.min),
        lat_avg: lat.map_or(0.0, |s| s.avg()),
        lat_max: lat.map_or(0, |s| s.max),
        max_fifo_depth: result
            .interleave
            .max_fifo_depth()
            .max(result.deinterleave.max_fifo_depth()),
        mem_bits: mem_totals,
        area,
    };

    let report = RunReport {
        config: serde_json::to_value(spec).expect("spec serializes"),
        topology: TopologyReport {
            kind: topology.kind().to_string(),
            nodes: p,
            degree: topology.degree(),
            ports: m,
            diameter,
        },
        traffic: TrafficReport {
            block_length: n,
            steps_per_node: steps,
            interleaver: interleaver_label,
            total_messages: result.interleave.total_messages,
        },
        interleave: half_report(&result.interleave, ideal_cycles, oh_int),
        deinterleave: half_report(&result.deinterleave, ideal_cycles, oh_deint),
        throughput: ThroughputReport {
            measured_bps,
            ideal_bps,
            worst_half_cycles: worst,
        },
        memory: mem_reports,
        area: row.area,
    };

    Ok(RunOutcome {
        report,
        row,
        topology,
        tables,
        result,
    })
}

/// A topology family a sweep instantiates at each requested node count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TopologyFamily {
    Ring,
    Mesh,
    Honeycomb,
    DeBruijn { degree: usize },
    Kautz { degree: usize },
}

/// Largest divisor r of p with lo <= r <= sqrt(p) and p/r >= lo, i.e. the
/// squarest rows x cols split with both sides at least lo.
fn squarest_split(p: usize, lo: usize, rows_even: bool) -> Option<(usize, usize)> {
    let mut best = None;
    let mut r = 1;
    while r * r <= p {
        if p.is_multiple_of(r) && r >= lo && p / r >= lo && (!rows_even || r % 2 == 0) {
            best = Some((r, p / r));
        }
        r += 1;
    }
    best
}

impl TopologyFamily {
    pub fn label(self) -> &'static str {
        match self {
            TopologyFamily::Ring => "ring",
            TopologyFamily::Mesh => "mesh",
            TopologyFamily::Honeycomb => "honeycomb",
            TopologyFamily::DeBruijn { .. } => "de_bruijn",
            TopologyFamily::Kautz { .. } => "kautz",
        }
    }

    /// Concrete spec for `p` nodes, or the reason this point is infeasible.
    pub fn instantiate(self, p: usize) -> Result<TopologySpec, String> {
        match self {
            TopologyFamily::Ring => {
                if p < 3 {
                    Err(format!("ring needs at least 3 nodes, got {p}"))
                } else {
                    Ok(TopologySpec::Ring { p })
                }
            }
            TopologyFamily::Mesh => squarest_split(p, 3, false)
                .map(|(rows, cols)| TopologySpec::Mesh { rows, cols })
                .ok_or(format!("{p} has no rows x cols split with both sides >= 3")),
            TopologyFamily::Honeycomb => squarest_split(p, 2, true)
                .map(|(rows, cols)| TopologySpec::Honeycomb { rows, cols })
                .ok_or(format!(
                    "{p} has no even rows x cols split with both sides >= 2"
                )),
            TopologyFamily::DeBruijn { degree } => {
                if degree < 2 || p < degree {
                    Err(format!(
                        "de Bruijn needs p >= degree >= 2, got p={p} degree={degree}"
                    ))
                } else {
                    Ok(TopologySpec::DeBruijn { p, d: degree })
                }
            }
            TopologyFamily::Kautz { degree } => {
                if degree < 2 || p < degree {
                    Err(format!(
                        "Kautz needs p >= degree >= 2, got p={p} degree={degree}"
                    ))
                } else {
                    Ok(TopologySpec::Kautz { p, d: degree })
                }
            }
        }
    }
}

fn default_taus() -> Vec<u64> {
    vec![1]
}

/// A sweep grid: families x node counts x rates x routing x collision, run
/// with shared traffic and code parameters. Infeasible (family, p) points are
/// skipped and logged, never silently dropped.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub families: Vec<TopologyFamily>,
    pub p: Vec<usize>,
    #[serde(default = "default_taus")]
    pub tau: Vec<u64>,
    pub routing: Vec<RoutingAlgorithm>,
    pub collision: Vec<CollisionPolicy>,
    pub interleaver: InterleaverSpec,
    #[serde(default)]
    pub timing: TimingSpec,
    #[serde(default)]
    pub sim: SimSpec,
    pub code: CodeSpec,
    #[serde(default)]
    pub cost: CostModel,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct SkippedPoint {
    pub family: String,
    pub p: usize,
    pub reason: String,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<CsvRow>,
    pub skipped: Vec<SkippedPoint>,
}

/// Expands the grid in a fixed nesting order (family, p, tau, routing,
/// collision), validating feasibility up front.
fn expand(spec: &SweepSpec) -> (Vec<RunSpec>, Vec<SkippedPoint>) {
    let mut runs = Vec::new();
    let mut skipped = Vec::new();
    for &family in &spec.families {
        for &p in &spec.p {
            let point = if !spec.code.block_length.is_multiple_of(p) {
                Err(format!(
                    "block length {} is not divisible by {p}",
                    spec.code.block_length
                ))
            } else {
                family.instantiate(p)
            };
            let topo = match point {
                Ok(t) => t,
                Err(reason) => {
                    skipped.push(SkippedPoint {
                        family: family.label().to_string(),
                        p,
                        reason,
                    });
                    continue;
                }
            };
            for &tau in &spec.tau {
                for &routing in &spec.routing {
                    for &collision in &spec.collision {
                        runs.push(RunSpec {
                            topology: topo.clone(),
                            interleaver: spec.interleaver.clone(),
                            timing: TimingSpec {
                                intra_gap: tau,
                                ..spec.timing
                            },
                            sim: SimSpec {
                                routing,
                                collision,
                                ..spec.sim
                            },
                            code: spec.code,
                            cost: spec.cost,
                        });
                    }
                }
            }
        }
    }
    (runs, skipped)
}

/// Runs every grid point and collects one CSV row each, in grid order
/// regardless of `parallel`. Any run failure aborts the sweep.
pub fn run_sweep(spec: &SweepSpec, parallel: bool) -> Result<SweepOutcome, RunError> {
    let (runs, skipped) = expand(spec);
    let rows: Result<Vec<CsvRow>, RunError> = if parallel {
        runs.par_iter().map(|r| execute(r).map(|o| o.row)).collect()
    } else {
        runs.iter().map(|r| execute(r).map(|o| o.row)).collect()
    };
    Ok(SweepOutcome {
        rows: rows?,
        skipped,
    })
}
