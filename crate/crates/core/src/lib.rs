//! Cycle-accurate simulator and analysis toolkit for the message-passing
//! networks that connect parallel iterative decoder cores.
//!
//! A decoder is split across `P` nodes, each owning `N/P` trellis steps of an
//! `N`-step codeword. After every half iteration each node must hand its
//! extrinsic values to the nodes that need them next, as dictated by the
//! permutation; this crate models that exchange on fixed-degree directed
//! interconnects, cycle by cycle, and derives throughput, latency, FIFO depth,
//! memory and area figures from the simulated traffic.
//!
//! Modules follow the pipeline order:
//!
//! * [`topology`]: fixed-degree graph generators and adjacency-file I/O
//! * [`routing`]: hop distances, shortest-path sets and next-hop tables
//! * [`traffic`]: permutations, per-node target maps, injection timetables
//! * [`netsim`]: the per-cycle network simulation itself
//! * [`routing_memory`]: node control-word images replayed from a trace
//! * [`metrics`]: throughput, parallelism, memory and area models
//! * [`report`]: one-run report document and CSV row assembly
//! * [`runner`]: configured single runs and sweep grids

pub mod metrics;
pub mod netsim;
pub mod report;
pub mod routing;
pub mod routing_memory;
pub mod runner;
pub mod topology;
pub mod traffic;
