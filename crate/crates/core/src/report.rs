//! Report shapes: one CSV row per run for sweeps, one JSON document for a
//! single run. Formatting is fixed so identical runs produce identical
//! bytes.

use std::io::{self, Write};

use crate::metrics::AreaBreakdown;

pub const CSV_HEADER: &str = "topology,P,D,R,routing,collision,interleaver,N,\
cycles_int,cycles_deint,overhead_cycles,throughput_bps,ideal_bps,\
lat_min,lat_avg,lat_max,max_fifo_depth,mem_bits_a,mem_bits_b,mem_bits_c,\
area_total,area_fifo,area_xbar,area_reg,area_route,area_mem";

/// "1" for one step per cycle, "1/tau" otherwise.
pub fn rate_label(tau: u64) -> String {
    if tau == 1 {
        "1".to_string()
    } else {
        format!("1/{tau}")
    }
}

/// One sweep result. Field order matches `CSV_HEADER`.
#[derive(Debug, Clone)]
pub struct CsvRow {
    pub topology: String,
    pub p: usize,
    pub d: usize,
    pub rate_label: String,
    pub routing: &'static str,
    pub collision: &'static str,
    pub interleaver: String,
    pub n: usize,
    pub cycles_interleave: u64,
    pub cycles_deinterleave: u64,
    pub overhead_cycles: u64,
    pub throughput_bps: f64,
    pub ideal_bps: f64,
    pub lat_min: u64,
    pub lat_avg: f64,
    pub lat_max: u64,
    pub max_fifo_depth: usize,
    /// Storage totals for architectures a, b, c, both halves summed.
    pub mem_bits: [u64; 3],
    pub area: AreaBreakdown,
}

impl CsvRow {
    pub fn to_line(&self) -> String {
        debug_assert!(!self.topology.contains(','));
        debug_assert!(!self.interleaver.contains(','));
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.3},{:.3},{},{:.4},{},{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
            self.topology,
            self.p,
            self.d,
            self.rate_label,
            self.routing,
            self.collision,
            self.interleaver,
            self.n,
            self.cycles_interleave,
            self.cycles_deinterleave,
            self.overhead_cycles,
            self.throughput_bps,
            self.ideal_bps,
            self.lat_min,
            self.lat_avg,
            self.lat_max,
            self.max_fifo_depth,
            self.mem_bits[0],
            self.mem_bits[1],
            self.mem_bits[2],
            self.area.total,
            self.area.fifo,
            self.area.crossbar,
            self.area.registers,
            self.area.routing,
            self.area.memories,
        )
    }
}

pub fn write_csv<W: Write>(mut w: W, rows: &[CsvRow]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(w, "{}", row.to_line())?;
    }
    Ok(())
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TopologyReport {
    pub kind: String,
    pub nodes: usize,
    pub degree: usize,
    pub ports: usize,
    pub diameter: u32,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TrafficReport {
    pub block_length: usize,
    pub steps_per_node: usize,
    pub interleaver: String,
    pub total_messages: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct LatencyReport {
    pub min: u64,
    pub avg: f64,
    pub max: u64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct HalfReport {
    pub cycles: u64,
    pub ideal_cycles: u64,
    pub overhead_cycles: u64,
    pub delivered_messages: usize,
    pub max_fifo_depth: usize,
    pub latency: Option<LatencyReport>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ThroughputReport {
    pub measured_bps: f64,
    pub ideal_bps: f64,
    pub worst_half_cycles: u64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct MemoryReport {
    pub arch: String,
    pub message_width_bits: u32,
    /// Both halves, all nodes.
    pub total_bits: u64,
    pub max_bits_per_node: u64,
}

/// Full single-run document. `config` echoes the resolved inputs so a report
/// is reproducible on its own.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RunReport {
    pub config: serde_json::Value,
    pub topology: TopologyReport,
    pub traffic: TrafficReport,
    pub interleave: HalfReport,
    pub deinterleave: HalfReport,
    pub throughput: ThroughputReport,
    pub memory: Vec<MemoryReport>,
    pub area: AreaBreakdown,
}

pub fn to_json_pretty(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}
