//! Fixed-degree directed interconnect graphs.
//!
//! Every node drives exactly `D` outgoing network links through output ports
//! `0..D-1`; port `D` (the highest of the `M = D + 1` ports) is reserved for
//! the node's own decoder core. Incoming links are assigned input ports in a
//! fixed order so that a topology is fully determined by its successor lists.
//! Self-loops can occur in the algebraic families and are kept in the link
//! set; routing ignores them, and [`validate`] reports them.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::routing;

/// One directed network link. `source_port` is the output port at `source`,
/// `target_port` the input FIFO it feeds at `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub source: usize,
    pub source_port: usize,
    pub target: usize,
    pub target_port: usize,
}

impl Link {
    pub fn is_self_loop(&self) -> bool {
        self.source == self.target
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    Ring,
    ToroidalMesh { rows: usize, cols: usize },
    HoneycombTorus { rows: usize, cols: usize },
    GenDeBruijn,
    GenKautz,
    Custom,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyKind::Ring => write!(f, "ring"),
            TopologyKind::ToroidalMesh { rows, cols } => write!(f, "mesh{rows}x{cols}"),
            TopologyKind::HoneycombTorus { rows, cols } => write!(f, "honeycomb{rows}x{cols}"),
            TopologyKind::GenDeBruijn => write!(f, "de_bruijn"),
            TopologyKind::GenKautz => write!(f, "kautz"),
            TopologyKind::Custom => write!(f, "custom"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TopologyError {
    #[error("invalid topology parameters: {0}")]
    BadParameters(String),
    #[error("adjacency file {path}: {reason} (line {line})")]
    BadFile {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("adjacency file {path}: nodes {nodes:?} do not have out-degree {degree}")]
    NonRegular {
        path: String,
        degree: usize,
        nodes: Vec<usize>,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A directed graph with regular out-degree and labelled ports.
#[derive(Debug, Clone)]
pub struct Topology {
    kind: TopologyKind,
    nodes: usize,
    degree: usize,
    /// Sorted by (source, source_port): the link leaving `u` through port `p`
    /// sits at index `u * degree + p`.
    links: Vec<Link>,
    /// Flat in-map: `in_links[v * degree + q]` is the index into `links` of
    /// the link feeding input port `q` of `v`, or `usize::MAX` where the
    /// in-degree of `v` falls short of `degree`.
    in_links: Vec<usize>,
    in_regular: bool,
    undirected_origin: bool,
}

impl Topology {
    /// Number of nodes P.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Network degree D (output ports per node, local port excluded).
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Ports per node M = D + 1.
    pub fn ports(&self) -> usize {
        self.degree + 1
    }

    /// Index of the local (core-facing) port, M - 1.
    pub fn local_port(&self) -> usize {
        self.degree
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    /// True for families defined as undirected graphs (each link has a
    /// reverse companion).
    pub fn undirected_origin(&self) -> bool {
        self.undirected_origin
    }

    /// True when every node's in-degree equals D, which the simulator
    /// requires (one input FIFO per network port). Always true for the
    /// built-in families.
    pub fn in_regular(&self) -> bool {
        self.in_regular
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// The link leaving `node` through output port `port`.
    pub fn link_from(&self, node: usize, port: usize) -> &Link {
        &self.links[node * self.degree + port]
    }

    /// All links leaving `node`, in output-port order.
    pub fn links_from(&self, node: usize) -> &[Link] {
        &self.links[node * self.degree..(node + 1) * self.degree]
    }

    /// The link feeding input port `port` of `node`, if that port is wired
    /// (it always is when the graph is in-regular).
    pub fn link_into(&self, node: usize, port: usize) -> Option<&Link> {
        self.links
            .get(*self.in_links.get(node * self.degree + port)?)
    }

    /// Builds the port-labelled link set from successor lists (successor
    /// position = output port). Input ports at each node are handed out in
    /// (source, source port) order, which is the only rule needed to make
    /// the wiring deterministic.
    fn from_successors(
        kind: TopologyKind,
        undirected_origin: bool,
        degree: usize,
        succ: &[Vec<usize>],
    ) -> Self {
        let nodes = succ.len();
        let mut links: Vec<Link> = Vec::with_capacity(nodes * degree);
        for (u, row) in succ.iter().enumerate() {
            debug_assert_eq!(row.len(), degree);
            for (p, &v) in row.iter().enumerate() {
                links.push(Link {
                    source: u,
                    source_port: p,
                    target: v,
                    target_port: usize::MAX,
                });
            }
        }
        // Links are already in (source, source_port) order; walking them in
        // that order assigns each target's input ports deterministically.
        let mut next_in = vec![0usize; nodes];
        for link in &mut links {
            link.target_port = next_in[link.target];
            next_in[link.target] += 1;
        }
        let in_regular = next_in.iter().all(|&d| d == degree);
        let mut in_links = vec![usize::MAX; nodes * degree];
        for (idx, link) in links.iter().enumerate() {
            if link.target_port < degree {
                in_links[link.target * degree + link.target_port] = idx;
            }
        }
        Topology {
            kind,
            nodes,
            degree,
            links,
            in_links,
            in_regular,
            undirected_origin,
        }
    }
}

/// Bidirectional ring: port 0 goes clockwise (+1), port 1 counter-clockwise.
pub fn build_ring(p: usize) -> Result<Topology, TopologyError> {
    if p < 3 {
        return Err(TopologyError::BadParameters(format!(
            "ring needs at least 3 nodes, got {p}"
        )));
    }
    let succ: Vec<Vec<usize>> = (0..p).map(|u| vec![(u + 1) % p, (u + p - 1) % p]).collect();
    Ok(Topology::from_successors(
        TopologyKind::Ring,
        true,
        2,
        &succ,
    ))
}

/// Toroidal mesh on a rows x cols grid, ports ordered E, W, S, N.
/// Node (r, c) has index `r * cols + c`.
pub fn build_toroidal_mesh(rows: usize, cols: usize) -> Result<Topology, TopologyError> {
    if rows < 3 || cols < 3 {
        return Err(TopologyError::BadParameters(format!(
            "toroidal mesh needs rows, cols >= 3, got {rows}x{cols}"
        )));
    }
    let succ: Vec<Vec<usize>> = (0..rows * cols)
        .map(|id| {
            let (r, c) = (id / cols, id % cols);
            vec![
                r * cols + (c + 1) % cols,
                r * cols + (c + cols - 1) % cols,
                ((r + 1) % rows) * cols + c,
                ((r + rows - 1) % rows) * cols + c,
            ]
        })
        .collect();
    Ok(Topology::from_successors(
        TopologyKind::ToroidalMesh { rows, cols },
        true,
        4,
        &succ,
    ))
}

/// Honeycomb torus in brick-wall form: every node links east, west, and
/// vertically, up when (r + c) is even and down otherwise. Wraps in both
/// directions, so rows and cols must be even for the vertical links to pair.
pub fn build_honeycomb_torus(rows: usize, cols: usize) -> Result<Topology, TopologyError> {
    if rows < 2 || cols < 2 || !rows.is_multiple_of(2) || !cols.is_multiple_of(2) {
        return Err(TopologyError::BadParameters(format!(
            "honeycomb torus needs even rows, cols >= 2, got {rows}x{cols}"
        )));
    }
    let succ: Vec<Vec<usize>> = (0..rows * cols)
        .map(|id| {
            let (r, c) = (id / cols, id % cols);
            let vr = if (r + c) % 2 == 0 {
                (r + rows - 1) % rows
            } else {
                (r + 1) % rows
            };
            vec![
                r * cols + (c + 1) % cols,
                r * cols + (c + cols - 1) % cols,
                vr * cols + c,
            ]
        })
        .collect();
    Ok(Topology::from_successors(
        TopologyKind::HoneycombTorus { rows, cols },
        true,
        3,
        &succ,
    ))
}

/// Generalized de Bruijn digraph: node u links to (D*u + r) mod P through
/// port r, for r in 0..D. Directed; self-loops possible (node 0 always).
pub fn build_gen_de_bruijn(p: usize, d: usize) -> Result<Topology, TopologyError> {
    if d < 2 || p < d {
        return Err(TopologyError::BadParameters(format!(
            "generalized de Bruijn needs P >= D >= 2, got P={p} D={d}"
        )));
    }
    let succ: Vec<Vec<usize>> = (0..p)
        .map(|u| (0..d).map(|r| (d * u + r) % p).collect())
        .collect();
    Ok(Topology::from_successors(
        TopologyKind::GenDeBruijn,
        false,
        d,
        &succ,
    ))
}

/// Generalized Kautz digraph: node u links to (-D*u - r) mod P through port
/// r - 1, for r in 1..=D. Directed; self-loops possible at some sizes.
pub fn build_gen_kautz(p: usize, d: usize) -> Result<Topology, TopologyError> {
    if d < 2 || p < d {
        return Err(TopologyError::BadParameters(format!(
            "generalized Kautz needs P >= D >= 2, got P={p} D={d}"
        )));
    }
    let succ: Vec<Vec<usize>> = (0..p)
        .map(|u| (1..=d).map(|r| (p - (d * u + r) % p) % p).collect())
        .collect();
    Ok(Topology::from_successors(
        TopologyKind::GenKautz,
        false,
        d,
        &succ,
    ))
}

/// Reads an adjacency file: a `P D` header line, then P lines of D successor
/// indices in output-port order.
pub fn load_topology(path: &Path) -> Result<Topology, TopologyError> {
    let text = fs::read_to_string(path)?;
    let name = path.display().to_string();
    let bad = |line: usize, reason: String| TopologyError::BadFile {
        path: name.clone(),
        line,
        reason,
    };

    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    let mut parts = header.split_whitespace();
    let p: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad(1, format!("bad header {header:?}, expected \"P D\"")))?;
    let d: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad(1, format!("bad header {header:?}, expected \"P D\"")))?;
    if parts.next().is_some() {
        return Err(bad(1, format!("bad header {header:?}, expected \"P D\"")));
    }
    if p == 0 || d == 0 {
        return Err(bad(1, format!("P and D must be positive, got P={p} D={d}")));
    }

    let mut succ: Vec<Vec<usize>> = Vec::with_capacity(p);
    let mut irregular: Vec<usize> = Vec::new();
    for (node, line) in lines.by_ref().take(p).enumerate() {
        let lineno = node + 2;
        let mut row = Vec::with_capacity(d);
        for tok in line.split_whitespace() {
            let v: usize = tok
                .parse()
                .map_err(|_| bad(lineno, format!("bad node index {tok:?}")))?;
            if v >= p {
                return Err(bad(lineno, format!("target {v} out of range for P={p}")));
            }
            row.push(v);
        }
        if row.len() != d {
            irregular.push(node);
        }
        succ.push(row);
    }
    if succ.len() != p {
        return Err(bad(
            succ.len() + 1,
            format!("expected {p} adjacency lines, found {}", succ.len()),
        ));
    }
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(bad(p + 2, format!("trailing content {extra:?}")));
    }
    if !irregular.is_empty() {
        return Err(TopologyError::NonRegular {
            path: name,
            degree: d,
            nodes: irregular,
        });
    }
    Ok(Topology::from_successors(
        TopologyKind::Custom,
        false,
        d,
        &succ,
    ))
}

/// Writes the adjacency format read by [`load_topology`].
pub fn write_topology(t: &Topology, w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "{} {}", t.nodes(), t.degree())?;
    for u in 0..t.nodes() {
        let row: Vec<String> = t
            .links_from(u)
            .iter()
            .map(|l| l.target.to_string())
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Structural summary of a topology, self-loops and reachability included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    /// Nodes with at least one self-loop link.
    pub self_loop_nodes: Vec<usize>,
    /// (in-degree, node count), ascending by in-degree.
    pub in_degree_histogram: Vec<(usize, usize)>,
    /// True when every ordered pair is connected by non-self-loop links.
    pub strongly_connected: bool,
    /// Longest shortest path; None when not strongly connected.
    pub diameter: Option<u32>,
}

pub fn validate(t: &Topology) -> ValidationReport {
    let mut self_loop_nodes: Vec<usize> = t
        .links
        .iter()
        .filter(|l| l.is_self_loop())
        .map(|l| l.source)
        .collect();
    self_loop_nodes.dedup();

    let mut in_deg = vec![0usize; t.nodes()];
    for l in &t.links {
        in_deg[l.target] += 1;
    }
    let mut counts: Vec<(usize, usize)> = Vec::new();
    let mut sorted = in_deg.clone();
    sorted.sort_unstable();
    for d in sorted {
        match counts.last_mut() {
            Some((deg, n)) if *deg == d => *n += 1,
            _ => counts.push((d, 1)),
        }
    }

    let dist = routing::all_pairs_distances(t);
    let strongly_connected = dist.all_finite();
    ValidationReport {
        self_loop_nodes,
        in_degree_histogram: counts,
        strongly_connected,
        diameter: if strongly_connected {
            Some(routing::diameter(&dist))
        } else {
            None
        },
    }
}
