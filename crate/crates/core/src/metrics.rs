//! Decoder-level figures derived from simulated halves.
//!
//! Cycle counts come straight from the simulator; everything here is exact
//! integer or rational arithmetic except the explicitly approximate area
//! model and the parallelism bound (which rounds up by definition).
//!
//! The half-iteration rate R is handled as its reciprocal `tau`, the integer
//! number of cycles per produced step (R = 1, 1/2, 1/3 -> tau = 1, 2, 3), so
//! the ideal cycle count N/(P*R) = tau*N/P stays an exact integer.

use crate::netsim::Delivered;
use crate::routing_memory::{self, RoutingMemoryError};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error(
        "measured {measured} cycles is below the ideal {ideal}; the model cannot be consistent"
    )]
    ModelInconsistency { measured: u64, ideal: u64 },
    #[error("block length {n} is not divisible by node count {p}")]
    IndivisibleBlock { n: usize, p: usize },
    #[error("bits per trellis step must be 1 (binary) or 2 (double-binary), got {0}")]
    BadBitsPerStep(u32),
    #[error("{0} must be positive")]
    ZeroParameter(&'static str),
    #[error("architecture (b) needs per-node routing word counts from a traced run")]
    MissingRoutingWords,
    #[error(transparent)]
    RoutingMemory(#[from] RoutingMemoryError),
}

/// Ceiling of log2, with ceil_log2(1) = 0.
pub fn ceil_log2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}

/// Splits a measured half-iteration cycle count into the ideal part
/// tau*N/P (every core emits N/P steps, one per tau cycles) and the
/// interconnect overhead on top.
pub fn half_iteration_decomposition(
    n: usize,
    p: usize,
    tau: u64,
    measured: u64,
) -> Result<(u64, u64), MetricsError> {
    if p == 0 || tau == 0 {
        return Err(MetricsError::ZeroParameter("node count and tau"));
    }
    if !n.is_multiple_of(p) {
        return Err(MetricsError::IndivisibleBlock { n, p });
    }
    let ideal = (n / p) as u64 * tau;
    if measured < ideal {
        return Err(MetricsError::ModelInconsistency { measured, ideal });
    }
    Ok((ideal, measured - ideal))
}

/// Inputs of the measured-throughput formula.
#[derive(Debug, Clone, Copy)]
pub struct ThroughputInputs {
    /// Information bits decided per trellis step: 1 binary, 2 double-binary.
    pub bits_per_step: u32,
    /// Block length N.
    pub n: usize,
    pub f_clk_hz: u64,
    /// Full decoder iterations I (two halves each).
    pub iterations: u32,
    /// Cycle count of the slower half.
    pub worst_half_cycles: u64,
}

fn check_bits_per_step(d: u32) -> Result<(), MetricsError> {
    if d == 1 || d == 2 {
        Ok(())
    } else {
        Err(MetricsError::BadBitsPerStep(d))
    }
}

/// Decoded bits per second as an exact numerator/denominator pair:
/// d*N*f_clk / (2*I*worst_half_cycles).
pub fn throughput_rational(inp: &ThroughputInputs) -> Result<(u128, u128), MetricsError> {
    check_bits_per_step(inp.bits_per_step)?;
    if inp.iterations == 0 || inp.worst_half_cycles == 0 || inp.f_clk_hz == 0 {
        return Err(MetricsError::ZeroParameter(
            "iterations, cycles and clock frequency",
        ));
    }
    let num = inp.bits_per_step as u128 * inp.n as u128 * inp.f_clk_hz as u128;
    let den = 2 * inp.iterations as u128 * inp.worst_half_cycles as u128;
    Ok((num, den))
}

pub fn throughput_bps(inp: &ThroughputInputs) -> Result<f64, MetricsError> {
    let (num, den) = throughput_rational(inp)?;
    Ok(num as f64 / den as f64)
}

/// Inputs of the zero-overhead throughput bound.
#[derive(Debug, Clone, Copy)]
pub struct IdealThroughputInputs {
    pub bits_per_step: u32,
    pub p: usize,
    /// Cycles per emitted step (reciprocal of the rate R).
    pub tau: u64,
    pub f_clk_hz: u64,
    pub iterations: u32,
}

/// What the decoder would reach with a perfect interconnect:
/// d*P*R*f_clk / (2*I), with R = 1/tau.
pub fn throughput_ideal_rational(
    inp: &IdealThroughputInputs,
) -> Result<(u128, u128), MetricsError> {
    check_bits_per_step(inp.bits_per_step)?;
    if inp.iterations == 0 || inp.tau == 0 || inp.f_clk_hz == 0 || inp.p == 0 {
        return Err(MetricsError::ZeroParameter(
            "iterations, tau, node count and clock frequency",
        ));
    }
    let num = inp.bits_per_step as u128 * inp.p as u128 * inp.f_clk_hz as u128;
    let den = 2 * inp.iterations as u128 * inp.tau as u128;
    Ok((num, den))
}

pub fn throughput_ideal_bps(inp: &IdealThroughputInputs) -> Result<f64, MetricsError> {
    let (num, den) = throughput_ideal_rational(inp)?;
    Ok(num as f64 / den as f64)
}

/// Smallest node count that can reach `target_bps`: ceil(I*C*T/f_clk),
/// where C is the cycles one core spends per trellis step.
pub fn min_parallelism(
    iterations: u32,
    cycles_per_step: f64,
    target_bps: u64,
    f_clk_hz: u64,
) -> Result<u64, MetricsError> {
    if f_clk_hz == 0 {
        return Err(MetricsError::ZeroParameter("clock frequency"));
    }
    let p = iterations as f64 * cycles_per_step * target_bps as f64 / f_clk_hz as f64;
    Ok(p.ceil() as u64)
}

/// How a node stores destination knowledge.
///
/// * `A` keeps only the identifier sequence and ships the memory location
///   inside the payload.
/// * `B` replays precomputed routing words and precomputed write locations;
///   messages carry nothing but the payload.
/// * `C` precomputes write locations but routes algorithmically, so messages
///   still carry the destination identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeArch {
    A,
    B,
    C,
}

impl NodeArch {
    pub fn label(self) -> &'static str {
        match self {
            NodeArch::A => "a",
            NodeArch::B => "b",
            NodeArch::C => "c",
        }
    }
}

/// Per-node storage and the resulting message width for one half iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryBudget {
    pub bits_per_node: Vec<u64>,
    pub message_width_bits: u32,
}

impl MemoryBudget {
    pub fn total_bits(&self) -> u64 {
        self.bits_per_node.iter().sum()
    }
}

/// Storage a node needs for one half iteration under the given architecture.
/// `routing_words_per_node` comes from a traced run and is only consulted
/// for architecture `B`.
pub fn memory_budget(
    arch: NodeArch,
    n: usize,
    p: usize,
    ports: usize,
    payload_bits: u32,
    routing_words_per_node: Option<&[u64]>,
) -> Result<MemoryBudget, MetricsError> {
    if p == 0 {
        return Err(MetricsError::ZeroParameter("node count"));
    }
    if !n.is_multiple_of(p) {
        return Err(MetricsError::IndivisibleBlock { n, p });
    }
    let steps = (n / p) as u64;
    let header = ceil_log2(p) as u64;
    let loc = ceil_log2(n / p) as u64;
    let budget = match arch {
        NodeArch::A => MemoryBudget {
            bits_per_node: vec![steps * header; p],
            message_width_bits: payload_bits + loc as u32 + header as u32,
        },
        NodeArch::B => {
            let words = routing_words_per_node.ok_or(MetricsError::MissingRoutingWords)?;
            if words.len() != p {
                return Err(MetricsError::MissingRoutingWords);
            }
            let word_bits = routing_memory::word_bits(ports)? as u64;
            MemoryBudget {
                bits_per_node: words.iter().map(|&w| w * word_bits + steps * loc).collect(),
                message_width_bits: payload_bits,
            }
        }
        NodeArch::C => MemoryBudget {
            bits_per_node: vec![steps * (loc + header); p],
            message_width_bits: payload_bits + header as u32,
        },
    };
    Ok(budget)
}

/// Unitless per-bit area coefficients. The shipped defaults are illustrative
/// placeholders for relative comparisons, not a technology characterization.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CostModel {
    /// Register-based FIFO storage, per bit.
    pub fifo_bit: f64,
    /// RAM storage (tables, location/identifier/routing memories), per bit.
    pub ram_bit: f64,
    /// Crossbar crosspoint, per bit.
    pub crossbar_bit: f64,
    /// Output register, per bit.
    pub register_bit: f64,
    /// Routing algorithm logic, per node, times M^2.
    pub logic_port_sq: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            fifo_bit: 10.0,
            ram_bit: 1.0,
            crossbar_bit: 2.0,
            register_bit: 8.0,
            logic_port_sq: 50.0,
        }
    }
}

/// Everything the area model consumes. FIFO depths are the simulated maxima
/// (a FIFO is built exactly as deep as it ever got); `storage_bits_per_node`
/// is the identifier/location class; routing resources are either replayed
/// words (`routing_memory_bits_per_node`) or algorithm logic plus a next-hop
/// table (`routing_table_bits_per_node`, ignored in the memory case).
#[derive(Debug, Clone)]
pub struct AreaInputs<'a> {
    pub ports: usize,
    pub message_width_bits: u32,
    pub fifo_max: &'a [Vec<usize>],
    pub storage_bits_per_node: &'a [u64],
    pub routing_memory_bits_per_node: Option<&'a [u64]>,
    pub routing_table_bits_per_node: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AreaBreakdown {
    pub fifo: f64,
    pub crossbar: f64,
    pub registers: f64,
    pub routing: f64,
    pub memories: f64,
    pub total: f64,
}

/// Linear cost roll-up: every component is (bits or crosspoints) times its
/// coefficient, so the result is linear in each coefficient separately.
pub fn area_estimate(inp: &AreaInputs, cost: &CostModel) -> AreaBreakdown {
    let nodes = inp.fifo_max.len();
    debug_assert_eq!(inp.storage_bits_per_node.len(), nodes);
    let w = inp.message_width_bits as f64;
    let m = inp.ports as f64;

    let fifo_bits: u64 = inp
        .fifo_max
        .iter()
        .flat_map(|node| {
            node.iter()
                .map(|&d| d as u64 * inp.message_width_bits as u64)
        })
        .sum();
    let fifo = fifo_bits as f64 * cost.fifo_bit;
    let crossbar = nodes as f64 * m * m * w * cost.crossbar_bit;
    let registers = nodes as f64 * m * w * cost.register_bit;
    let routing = match inp.routing_memory_bits_per_node {
        Some(bits) => bits.iter().sum::<u64>() as f64 * cost.ram_bit,
        None => {
            nodes as f64
                * (cost.logic_port_sq * m * m
                    + inp.routing_table_bits_per_node as f64 * cost.ram_bit)
        }
    };
    let memories = inp.storage_bits_per_node.iter().sum::<u64>() as f64 * cost.ram_bit;
    AreaBreakdown {
        fifo,
        crossbar,
        registers,
        routing,
        memories,
        total: fifo + crossbar + registers + routing + memories,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct LatencyStats {
    pub count: usize,
    pub min: u64,
    pub max: u64,
    pub sum: u128,
}

impl LatencyStats {
    pub fn avg(&self) -> f64 {
        self.sum as f64 / self.count as f64
    }

    fn fold(acc: Option<LatencyStats>, lat: u64) -> Option<LatencyStats> {
        Some(match acc {
            None => LatencyStats {
                count: 1,
                min: lat,
                max: lat,
                sum: lat as u128,
            },
            Some(s) => LatencyStats {
                count: s.count + 1,
                min: s.min.min(lat),
                max: s.max.max(lat),
                sum: s.sum + lat as u128,
            },
        })
    }
}

#[derive(Debug, Clone)]
pub struct LatencySummary {
    pub global: Option<LatencyStats>,
    pub per_node: Vec<Option<LatencyStats>>,
}

/// Injection-to-delivery latency statistics, overall and per destination
/// node. Empty inputs yield `None` rather than fake zeros.
pub fn latency_stats(delivered: &[Vec<Delivered>]) -> LatencySummary {
    let mut global = None;
    let mut per_node = Vec::with_capacity(delivered.len());
    for node in delivered {
        let mut local = None;
        for d in node {
            local = LatencyStats::fold(local, d.latency());
            global = LatencyStats::fold(global, d.latency());
        }
        per_node.push(local);
    }
    LatencySummary { global, per_node }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decomposition_splits_measured_cycles() {
        assert_eq!(
            half_iteration_decomposition(2400, 8, 1, 306).unwrap(),
            (300, 6)
        );
        assert_eq!(
            half_iteration_decomposition(2400, 8, 3, 903).unwrap(),
            (900, 3)
        );
        assert!(matches!(
            half_iteration_decomposition(2400, 8, 1, 299),
            Err(MetricsError::ModelInconsistency {
                measured: 299,
                ideal: 300
            })
        ));
        assert!(half_iteration_decomposition(2401, 8, 1, 400).is_err());
    }

    #[test]
    fn throughput_at_the_ideal_point_reduces_to_the_bound() {
        let t = ThroughputInputs {
            bits_per_step: 2,
            n: 2400,
            f_clk_hz: 200_000_000,
            iterations: 8,
            worst_half_cycles: 300,
        };
        assert_eq!(throughput_bps(&t).unwrap(), 200_000_000.0);
        let ideal = IdealThroughputInputs {
            bits_per_step: 2,
            p: 8,
            tau: 1,
            f_clk_hz: 200_000_000,
            iterations: 8,
        };
        let (an, ad) = throughput_rational(&t).unwrap();
        let (bn, bd) = throughput_ideal_rational(&ideal).unwrap();
        assert_eq!(an * bd, bn * ad, "equal as exact rationals");
    }

    #[test]
    fn throughput_drops_with_overhead() {
        let t = ThroughputInputs {
            bits_per_step: 1,
            n: 24576,
            f_clk_hz: 200_000_000,
            iterations: 8,
            worst_half_cycles: 4806,
        };
        let bps = throughput_bps(&t).unwrap();
        assert!((bps - 63.92e6).abs() < 0.02e6);
    }

    #[test]
    fn ideal_throughput_examples() {
        let i = IdealThroughputInputs {
            bits_per_step: 1,
            p: 16,
            tau: 1,
            f_clk_hz: 200_000_000,
            iterations: 8,
        };
        assert_eq!(throughput_ideal_bps(&i).unwrap(), 200e6);
        let third = IdealThroughputInputs { tau: 3, ..i };
        let (num, den) = throughput_ideal_rational(&third).unwrap();
        assert_eq!(num, 16 * 200_000_000);
        assert_eq!(den, 2 * 8 * 3);
    }

    #[test]
    fn bits_per_step_is_validated() {
        let t = ThroughputInputs {
            bits_per_step: 3,
            n: 100,
            f_clk_hz: 1,
            iterations: 1,
            worst_half_cycles: 1,
        };
        assert!(matches!(
            throughput_rational(&t),
            Err(MetricsError::BadBitsPerStep(3))
        ));
    }

    #[test]
    fn parallelism_bounds_for_common_standards() {
        // (f_clk MHz, cycles per step, target Mb/s) -> nodes
        let rows = [
            (400, 2.35, 200, 6),
            (400, 1.75, 200, 5),
            (335, 6.5, 200, 20),
            (180, 6.5, 200, 37),
        ];
        for (f_mhz, c, t_mbps, want) in rows {
            let got = min_parallelism(5, c, t_mbps * 1_000_000, f_mhz * 1_000_000).unwrap();
            assert_eq!(got, want, "f={f_mhz}MHz C={c}");
        }
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(ceil_log2(300), 9);
    }

    #[test]
    fn memory_budgets_per_arch() {
        // N=2400, P=8: 300 steps, 9 location bits, 3 header bits
        let a = memory_budget(NodeArch::A, 2400, 8, 3, 24, None).unwrap();
        assert_eq!(a.bits_per_node, vec![300 * 3; 8]);
        assert_eq!(a.message_width_bits, 24 + 9 + 3);

        let c = memory_budget(NodeArch::C, 2400, 8, 3, 24, None).unwrap();
        assert_eq!(c.bits_per_node, vec![300 * 9 + 300 * 3; 8]);
        assert_eq!(c.message_width_bits, 24 + 3);

        let words: Vec<u64> = (0..8).map(|i| 100 + i).collect();
        let b = memory_budget(NodeArch::B, 2400, 8, 3, 24, Some(&words)).unwrap();
        // word width for M=3 is 6 bits
        assert_eq!(b.bits_per_node[0], 100 * 6 + 300 * 9);
        assert_eq!(b.bits_per_node[7], 107 * 6 + 300 * 9);
        assert_eq!(b.message_width_bits, 24);

        assert!(matches!(
            memory_budget(NodeArch::B, 2400, 8, 3, 24, None),
            Err(MetricsError::MissingRoutingWords)
        ));
    }

    #[test]
    fn message_widths_are_ordered() {
        for (n, p, payload) in [(2400usize, 8usize, 24u32), (24576, 64, 8), (48, 2, 8)] {
            let words = vec![1u64; p];
            let a = memory_budget(NodeArch::A, n, p, 5, payload, None).unwrap();
            let b = memory_budget(NodeArch::B, n, p, 5, payload, Some(&words)).unwrap();
            let c = memory_budget(NodeArch::C, n, p, 5, payload, None).unwrap();
            assert!(b.message_width_bits < c.message_width_bits);
            assert!(c.message_width_bits <= a.message_width_bits);
        }
    }

    #[test]
    fn degenerate_single_node_needs_no_identifiers() {
        let a = memory_budget(NodeArch::A, 16, 1, 3, 8, None).unwrap();
        assert_eq!(a.bits_per_node, vec![0]);
    }

    #[test]
    fn area_is_linear_and_traffic_driven() {
        let fifo_max = vec![vec![2, 0, 1]; 4];
        let storage = vec![100u64; 4];
        let inp = AreaInputs {
            ports: 3,
            message_width_bits: 10,
            fifo_max: &fifo_max,
            storage_bits_per_node: &storage,
            routing_memory_bits_per_node: None,
            routing_table_bits_per_node: 8,
        };
        let base = CostModel::default();
        let a = area_estimate(&inp, &base);
        assert!(a.total > 0.0);
        assert_eq!(
            a.total,
            a.fifo + a.crossbar + a.registers + a.routing + a.memories
        );

        // doubling one coefficient doubles exactly its component
        let mut c2 = base;
        c2.fifo_bit *= 2.0;
        let doubled = area_estimate(&inp, &c2);
        assert_eq!(doubled.fifo, 2.0 * a.fifo);
        assert_eq!(doubled.crossbar, a.crossbar);

        // no traffic, no FIFO silicon
        let idle = vec![vec![0, 0, 0]; 4];
        let quiet = area_estimate(
            &AreaInputs {
                fifo_max: &idle,
                ..inp.clone()
            },
            &base,
        );
        assert_eq!(quiet.fifo, 0.0);
    }

    #[test]
    fn latency_stats_summary() {
        use crate::netsim::{Delivered, Message};
        let msg = |inj: u64| Message {
            dest_node: 0,
            dest_loc: 0,
            source_node: 0,
            source_step: 0,
            injected_cycle: inj,
            hop_count: 0,
            path: vec![0],
        };
        let delivered = vec![
            vec![
                Delivered {
                    msg: msg(0),
                    cycle: 3,
                },
                Delivered {
                    msg: msg(1),
                    cycle: 2,
                },
            ],
            vec![],
        ];
        let s = latency_stats(&delivered);
        let g = s.global.unwrap();
        assert_eq!((g.count, g.min, g.max), (2, 1, 3));
        assert_eq!(g.avg(), 2.0);
        assert!(s.per_node[1].is_none());
        assert_eq!(s.per_node[0].unwrap().count, 2);
    }
}
