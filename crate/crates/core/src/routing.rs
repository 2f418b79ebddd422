//! Hop distances and shortest-path routing structures.
//!
//! Distances count network links only; self-loop links are never part of a
//! shortest path and are excluded here even though the topology keeps them.
//! All structures are built with fixed iteration orders, so serializing them
//! twice yields identical bytes.

use std::collections::VecDeque;
use std::io::{self, Write};

use crate::topology::Topology;

/// Sentinel for an unreachable pair.
pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, thiserror::Error)]
pub enum RoutingError {
    #[error("no path from node {from} to node {to}; routing needs a strongly connected topology")]
    Unreachable { from: usize, to: usize },
}

/// P x P matrix of shortest hop counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<u32>,
}

impl DistanceMatrix {
    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn get(&self, from: usize, to: usize) -> u32 {
        self.d[from * self.n + to]
    }

    pub fn all_finite(&self) -> bool {
        self.d.iter().all(|&x| x != UNREACHABLE)
    }

    /// First unreachable (from, to) pair, if any.
    pub fn first_unreachable(&self) -> Option<(usize, usize)> {
        self.d
            .iter()
            .position(|&x| x == UNREACHABLE)
            .map(|i| (i / self.n, i % self.n))
    }
}

/// Breadth-first search from every source over non-self-loop links.
pub fn all_pairs_distances(t: &Topology) -> DistanceMatrix {
    let n = t.nodes();
    let mut d = vec![UNREACHABLE; n * n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        let row = &mut d[s * n..(s + 1) * n];
        row[s] = 0;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let du = row[u];
            for link in t.links_from(u) {
                if link.is_self_loop() || row[link.target] != UNREACHABLE {
                    continue;
                }
                row[link.target] = du + 1;
                queue.push_back(link.target);
            }
        }
    }
    DistanceMatrix { n, d }
}

/// Longest shortest path. Panics if some pair is unreachable.
pub fn diameter(dist: &DistanceMatrix) -> u32 {
    assert!(dist.all_finite(), "diameter of a disconnected topology");
    *dist.d.iter().max().expect("non-empty matrix")
}

/// One admissible first hop from a node toward a destination: the link's far
/// end, the input port it feeds there, and the output port it leaves through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AspEntry {
    pub neighbor: usize,
    pub in_port: usize,
    pub out_port: usize,
}

/// For every (node, destination) pair, the set of first hops that lie on a
/// shortest path. Entries are stored in ascending output-port order.
#[derive(Debug, Clone)]
pub struct AspSets {
    n: usize,
    sets: Vec<Vec<AspEntry>>,
}

impl AspSets {
    pub fn get(&self, node: usize, dest: usize) -> &[AspEntry] {
        &self.sets[node * self.n + dest]
    }
}

pub fn asp_sets(t: &Topology, dist: &DistanceMatrix) -> AspSets {
    let n = t.nodes();
    let mut sets = vec![Vec::new(); n * n];
    for i in 0..n {
        for k in 0..n {
            if i == k || dist.get(i, k) == UNREACHABLE {
                continue;
            }
            let set = &mut sets[i * n + k];
            for link in t.links_from(i) {
                if link.is_self_loop() {
                    continue;
                }
                let through = dist.get(link.target, k);
                if through != UNREACHABLE && 1 + through == dist.get(i, k) {
                    set.push(AspEntry {
                        neighbor: link.target,
                        in_port: link.target_port,
                        out_port: link.source_port,
                    });
                }
            }
        }
    }
    AspSets { n, sets }
}

/// Single-path next-hop table: for each (node, destination) one output port.
/// Ties between equally short first hops go to the lowest output port; the
/// destination itself maps to the local port M - 1.
#[derive(Debug, Clone)]
pub struct SspTable {
    n: usize,
    ports: Vec<usize>,
}

impl SspTable {
    pub fn port(&self, node: usize, dest: usize) -> usize {
        self.ports[node * self.n + dest]
    }
}

pub fn ssp_table(t: &Topology, asp: &AspSets) -> Result<SspTable, RoutingError> {
    let n = t.nodes();
    let mut ports = vec![0usize; n * n];
    for i in 0..n {
        for k in 0..n {
            ports[i * n + k] = if i == k {
                t.local_port()
            } else {
                asp.get(i, k)
                    .first()
                    .ok_or(RoutingError::Unreachable { from: i, to: k })?
                    .out_port
            };
        }
    }
    Ok(SspTable { n, ports })
}

/// The three routing structures bundled for the simulator.
#[derive(Debug, Clone)]
pub struct RoutingTables {
    pub dist: DistanceMatrix,
    pub asp: AspSets,
    pub ssp: SspTable,
}

impl RoutingTables {
    pub fn build(t: &Topology) -> Result<Self, RoutingError> {
        let dist = all_pairs_distances(t);
        if let Some((from, to)) = dist.first_unreachable() {
            return Err(RoutingError::Unreachable { from, to });
        }
        let asp = asp_sets(t, &dist);
        let ssp = ssp_table(t, &asp)?;
        Ok(RoutingTables { dist, asp, ssp })
    }
}

/// Dumps the next-hop table as `node,dest,port` CSV.
pub fn dump_ssp_csv(ssp: &SspTable, w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "node,dest,port")?;
    for i in 0..ssp.n {
        for k in 0..ssp.n {
            writeln!(w, "{i},{k},{}", ssp.port(i, k))?;
        }
    }
    Ok(())
}

/// Dumps every shortest first hop as `node,dest,neighbor,port` CSV.
pub fn dump_asp_csv(asp: &AspSets, w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "node,dest,neighbor,port")?;
    for i in 0..asp.n {
        for k in 0..asp.n {
            for e in asp.get(i, k) {
                writeln!(w, "{i},{k},{},{}", e.neighbor, e.out_port)?;
            }
        }
    }
    Ok(())
}
