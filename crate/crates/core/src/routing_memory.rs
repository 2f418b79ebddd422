//! Control-word images for memory-driven nodes.
//!
//! A node that replays precomputed decisions instead of running a routing
//! algorithm stores one word per *active* cycle (a cycle in which at least
//! one of its input FIFOs is non-empty; equivalently, with a fresh
//! reservation mask, a cycle in which it reads at least one FIFO). Each word
//! holds M read-enable bits plus a crossbar configuration word: the
//! lexicographic rank of the input-to-output port assignment, extended to a
//! full permutation over unused ports, in ceil(log2(M!)) bits.

use std::io::{self, Write};

use crate::netsim::TraceEntry;

#[derive(Debug, thiserror::Error)]
pub enum RoutingMemoryError {
    #[error("crossbar words support at most 33 ports, got {0}")]
    TooManyPorts(usize),
    #[error("trace entry references node {node}, image built for {nodes} nodes")]
    NodeOutOfRange { node: usize, nodes: usize },
}

/// One replayed cycle: which FIFOs to read and how to set the crossbar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingWord {
    pub cycle: u64,
    /// Read-enable per input port, index 0 first.
    pub read_enable: Vec<bool>,
    /// Lexicographic rank of the full input-to-output permutation.
    pub crossbar_rank: u128,
}

/// Per-node control-word image for one half iteration.
#[derive(Debug, Clone)]
pub struct RoutingMemoryImage {
    pub ports: usize,
    pub crossbar_bits: u32,
    /// Words per node, in cycle order. Idle nodes have none.
    pub words: Vec<Vec<RoutingWord>>,
}

impl RoutingMemoryImage {
    /// Bits of one control word: M read enables plus the crossbar rank.
    pub fn word_bits(&self) -> u32 {
        self.ports as u32 + self.crossbar_bits
    }

    /// Total stored bits per node.
    pub fn bits_per_node(&self) -> Vec<u64> {
        self.words
            .iter()
            .map(|w| w.len() as u64 * self.word_bits() as u64)
            .collect()
    }

    pub fn words_per_node(&self) -> Vec<u64> {
        self.words.iter().map(|w| w.len() as u64).collect()
    }

    /// Renders one word as text: read enables MSB-first (port 0 first),
    /// then the crossbar rank, MSB-first.
    pub fn render_word(&self, word: &RoutingWord) -> String {
        let mut s = String::with_capacity(self.word_bits() as usize);
        for &re in &word.read_enable {
            s.push(if re { '1' } else { '0' });
        }
        for bit in (0..self.crossbar_bits).rev() {
            s.push(if word.crossbar_rank >> bit & 1 == 1 {
                '1'
            } else {
                '0'
            });
        }
        s
    }

    /// Writes one node's image, one binary word per line.
    pub fn write_node(&self, node: usize, w: &mut dyn Write) -> io::Result<()> {
        for word in &self.words[node] {
            writeln!(w, "{}", self.render_word(word))?;
        }
        Ok(())
    }
}

fn factorial(m: usize) -> u128 {
    (1..=m as u128).product()
}

fn ceil_log2_u128(x: u128) -> u32 {
    if x <= 1 {
        0
    } else {
        128 - (x - 1).leading_zeros()
    }
}

/// Width in bits of the crossbar configuration word for an M-port node.
pub fn crossbar_bits(ports: usize) -> Result<u32, RoutingMemoryError> {
    if ports > 33 {
        return Err(RoutingMemoryError::TooManyPorts(ports));
    }
    Ok(ceil_log2_u128(factorial(ports)))
}

/// Width in bits of one full control word.
pub fn word_bits(ports: usize) -> Result<u32, RoutingMemoryError> {
    Ok(ports as u32 + crossbar_bits(ports)?)
}

/// Lexicographic rank of a permutation of 0..m (Lehmer code).
fn permutation_rank(perm: &[usize]) -> u128 {
    let m = perm.len();
    let mut rank = 0u128;
    for i in 0..m {
        let smaller_later = perm[i + 1..].iter().filter(|&&x| x < perm[i]).count();
        rank += smaller_later as u128 * factorial(m - 1 - i);
    }
    rank
}

/// Completes the partial input-to-output assignment of one cycle into a full
/// permutation: unmatched inputs take the remaining outputs in ascending
/// order, which reduces to the identity whenever the port is untouched on
/// both sides.
fn full_assignment(pairs: &[(usize, usize)], m: usize) -> Vec<usize> {
    let mut out_of = vec![usize::MAX; m];
    let mut out_used = vec![false; m];
    for &(inp, outp) in pairs {
        out_of[inp] = outp;
        out_used[outp] = true;
    }
    let mut free_outs = (0..m).filter(|&o| !out_used[o]);
    for slot in out_of.iter_mut() {
        if *slot == usize::MAX {
            *slot = free_outs
                .next()
                .expect("as many free outputs as free inputs");
        }
    }
    out_of
}

/// Builds the per-node control-word images from a simulation trace.
pub fn dump_routing_memory(
    trace: &[TraceEntry],
    nodes: usize,
    ports: usize,
) -> Result<RoutingMemoryImage, RoutingMemoryError> {
    let crossbar = crossbar_bits(ports)?;
    let mut words: Vec<Vec<RoutingWord>> = vec![Vec::new(); nodes];
    // The trace is cycle-major, so per node the entries arrive in
    // nondecreasing cycle order; accumulate one word per (node, cycle).
    let mut pending: Vec<(u64, Vec<(usize, usize)>)> = vec![(0, Vec::new()); nodes];
    let flush = |node: usize,
                 pending: &mut Vec<(u64, Vec<(usize, usize)>)>,
                 words: &mut Vec<Vec<RoutingWord>>| {
        let (cycle, pairs) = &mut pending[node];
        if pairs.is_empty() {
            return;
        }
        let mut read_enable = vec![false; ports];
        for &(inp, _) in pairs.iter() {
            read_enable[inp] = true;
        }
        let rank = permutation_rank(&full_assignment(pairs, ports));
        words[node].push(RoutingWord {
            cycle: *cycle,
            read_enable,
            crossbar_rank: rank,
        });
        pairs.clear();
    };
    for e in trace {
        let node = e.node as usize;
        if node >= nodes {
            return Err(RoutingMemoryError::NodeOutOfRange { node, nodes });
        }
        if pending[node].0 != e.cycle {
            flush(node, &mut pending, &mut words);
            pending[node].0 = e.cycle;
        }
        pending[node]
            .1
            .push((e.in_port as usize, e.out_port as usize));
    }
    for node in 0..nodes {
        flush(node, &mut pending, &mut words);
    }
    Ok(RoutingMemoryImage {
        ports,
        crossbar_bits: crossbar,
        words,
    })
}
