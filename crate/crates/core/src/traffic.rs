//! Traffic for one half iteration: who sends what where, and when.
//!
//! A codeword of `N` steps is striped over `P` nodes, node `i` owning global
//! indices `i*(N/P) .. (i+1)*(N/P)`. The permutation decides where each
//! produced value is consumed next; the timetable decides when the local core
//! hands it to the network. Both halves of an iteration use the same
//! machinery, one with the permutation and one with its inverse.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error)]
pub enum TrafficError {
    #[error("invalid traffic parameters: {0}")]
    BadParameters(String),
    #[error("multiplier {a} is not coprime with block length {n}")]
    NotCoprime { a: usize, n: usize },
    #[error(
        "{origin}: not a permutation, value {value} at index {index} repeats or is out of range"
    )]
    NotAPermutation {
        origin: String,
        index: usize,
        value: usize,
    },
    #[error("{origin}: expected {expected} entries, found {got}")]
    LengthMismatch {
        origin: String,
        expected: usize,
        got: usize,
    },
    #[error("permutation file {path}: {reason} (line {line})")]
    BadFile {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("block length {n} is not divisible by node count {p}")]
    IndivisibleBlock { n: usize, p: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A bijection on 0..N with its inverse precomputed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
    inv: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        let map: Vec<usize> = (0..n).collect();
        Permutation {
            inv: map.clone(),
            map,
        }
    }

    /// Validates that `map` is a bijection on 0..len and builds the inverse.
    pub fn from_map(map: Vec<usize>, source: &str) -> Result<Self, TrafficError> {
        let n = map.len();
        let mut inv = vec![usize::MAX; n];
        for (index, &value) in map.iter().enumerate() {
            if value >= n || inv[value] != usize::MAX {
                return Err(TrafficError::NotAPermutation {
                    origin: source.to_string(),
                    index,
                    value,
                });
            }
            inv[value] = index;
        }
        Ok(Permutation { map, inv })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn apply_inverse(&self, x: usize) -> usize {
        self.inv[x]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Circular-shifting permutation x -> (a*x + s) mod n; bijective iff
/// gcd(a, n) = 1.
pub fn gen_circular_shifting(n: usize, a: usize, s: usize) -> Result<Permutation, TrafficError> {
    if n == 0 {
        return Err(TrafficError::BadParameters(
            "block length must be positive".into(),
        ));
    }
    if gcd(a % n, n) != 1 {
        return Err(TrafficError::NotCoprime { a, n });
    }
    let map: Vec<usize> = (0..n).map(|x| (a % n * x + s) % n).collect();
    Ok(Permutation::from_map(map, "circular-shifting").expect("coprime multiplier is bijective"))
}

/// Uniform random permutation via Fisher-Yates over a seeded ChaCha8 stream.
/// Same seed, same permutation, on every platform.
pub fn gen_random(n: usize, seed: u64) -> Permutation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        map.swap(i, j);
    }
    Permutation::from_map(map, "random").expect("shuffle of identity is bijective")
}

/// Reads one destination index per line, exactly `expected` lines.
pub fn load_permutation(path: &Path, expected: usize) -> Result<Permutation, TrafficError> {
    let text = fs::read_to_string(path)?;
    let name = path.display().to_string();
    let mut map = Vec::with_capacity(expected);
    for (i, line) in text.lines().enumerate() {
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        let value: usize = tok.parse().map_err(|_| TrafficError::BadFile {
            path: name.clone(),
            line: i + 1,
            reason: format!("bad index {tok:?}"),
        })?;
        map.push(value);
    }
    if map.len() != expected {
        return Err(TrafficError::LengthMismatch {
            origin: name,
            expected,
            got: map.len(),
        });
    }
    Permutation::from_map(map, &name)
}

/// Writes the format read by [`load_permutation`].
pub fn write_permutation(perm: &Permutation, w: &mut dyn Write) -> io::Result<()> {
    for &v in perm.as_slice() {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

/// Which half of the iteration the permutation is applied for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Interleave,
    Deinterleave,
}

/// Destination (node, memory location) for every (node, local step) pair.
#[derive(Debug, Clone)]
pub struct TargetMap {
    p: usize,
    steps: usize,
    dest: Vec<(u32, u32)>,
}

impl TargetMap {
    pub fn nodes(&self) -> usize {
        self.p
    }

    /// Steps per node, N/P.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Destination of the value produced at `node` local step `j`.
    pub fn dest(&self, node: usize, j: usize) -> (usize, usize) {
        let (k, t) = self.dest[node * self.steps + j];
        (k as usize, t as usize)
    }
}

/// Derives the per-node destination map from a permutation: the value at
/// global index g lands in global slot perm(g) (or its inverse when
/// de-interleaving), i.e. node perm(g)/(N/P), location perm(g) mod N/P.
pub fn target_map(perm: &Permutation, p: usize, dir: Direction) -> Result<TargetMap, TrafficError> {
    let n = perm.len();
    if p == 0 {
        return Err(TrafficError::BadParameters(
            "node count must be positive".into(),
        ));
    }
    if !n.is_multiple_of(p) {
        return Err(TrafficError::IndivisibleBlock { n, p });
    }
    let steps = n / p;
    let mut dest = Vec::with_capacity(n);
    for g in 0..n {
        let gp = match dir {
            Direction::Interleave => perm.apply(g),
            Direction::Deinterleave => perm.apply_inverse(g),
        };
        dest.push(((gp / steps) as u32, (gp % steps) as u32));
    }
    Ok(TargetMap { p, steps, dest })
}

/// Order in which a core walks the steps of one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionOrder {
    Forward,
    Backward,
}

/// Core output timing: steps are produced window by window, `intra_gap`
/// cycles apart inside a window and `inter_gap` across a window boundary,
/// the first one `latency` cycles into the half iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SisoTiming {
    pub window: usize,
    pub intra_gap: u64,
    pub inter_gap: u64,
    pub latency: u64,
    pub order: InjectionOrder,
}

/// Emission timetable shared by all nodes: (cycle, local step) pairs in
/// strictly increasing cycle order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectionSchedule {
    entries: Vec<(u64, usize)>,
}

impl InjectionSchedule {
    pub fn entries(&self) -> &[(u64, usize)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_cycle(&self) -> Option<u64> {
        self.entries.last().map(|&(c, _)| c)
    }
}

/// Expands the timing parameters over `steps` local steps. The last window
/// may be shorter when the window size does not divide `steps`.
pub fn injection_schedule(
    timing: &SisoTiming,
    steps: usize,
) -> Result<InjectionSchedule, TrafficError> {
    if timing.window == 0 {
        return Err(TrafficError::BadParameters(
            "window size must be positive".into(),
        ));
    }
    if timing.intra_gap == 0 || timing.inter_gap == 0 {
        return Err(TrafficError::BadParameters(
            "emission gaps must be at least one cycle".into(),
        ));
    }
    let mut entries = Vec::with_capacity(steps);
    let mut cycle = timing.latency;
    let mut start = 0;
    while start < steps {
        let end = (start + timing.window).min(steps);
        let window: Vec<usize> = match timing.order {
            InjectionOrder::Forward => (start..end).collect(),
            InjectionOrder::Backward => (start..end).rev().collect(),
        };
        for (pos, j) in window.iter().enumerate() {
            entries.push((cycle, *j));
            cycle += if pos + 1 == window.len() {
                timing.inter_gap
            } else {
                timing.intra_gap
            };
        }
        start = end;
    }
    Ok(InjectionSchedule { entries })
}

/// Everything the simulator needs to drive one half iteration.
#[derive(Debug, Clone)]
pub struct TrafficPlan {
    pub schedule: InjectionSchedule,
    pub targets: TargetMap,
}

impl TrafficPlan {
    pub fn new(schedule: InjectionSchedule, targets: TargetMap) -> Result<Self, TrafficError> {
        if schedule.len() != targets.steps() {
            return Err(TrafficError::LengthMismatch {
                origin: "injection schedule".into(),
                expected: targets.steps(),
                got: schedule.len(),
            });
        }
        Ok(TrafficPlan { schedule, targets })
    }

    /// Total messages of the half iteration, P * N/P.
    pub fn total_messages(&self) -> usize {
        self.targets.nodes() * self.targets.steps()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circular_shifting_small_block() {
        let p = gen_circular_shifting(8, 3, 1).unwrap();
        assert_eq!(p.as_slice(), &[1, 4, 7, 2, 5, 0, 3, 6]);
        assert_eq!(p.apply_inverse(1), 0);
    }

    #[test]
    fn circular_shifting_requires_coprime_multiplier() {
        assert!(matches!(
            gen_circular_shifting(8, 4, 1),
            Err(TrafficError::NotCoprime { a: 4, n: 8 })
        ));
        assert!(gen_circular_shifting(8, 9, 0).is_ok()); // 9 mod 8 = 1
    }

    #[test]
    fn random_permutation_is_seed_stable() {
        let a = gen_random(100, 7);
        let b = gen_random(100, 7);
        let c = gen_random(100, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn from_map_rejects_duplicates() {
        match Permutation::from_map(vec![0, 2, 2, 1], "test") {
            Err(TrafficError::NotAPermutation { index, value, .. }) => {
                assert_eq!((index, value), (2, 2));
            }
            other => panic!("expected NotAPermutation, got {other:?}"),
        }
    }

    #[test]
    fn permutation_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("perm.txt");
        let p = gen_circular_shifting(16, 5, 3).unwrap();
        let mut buf = Vec::new();
        write_permutation(&p, &mut buf).unwrap();
        fs::write(&path, &buf).unwrap();
        assert_eq!(load_permutation(&path, 16).unwrap(), p);

        let err = load_permutation(&path, 17);
        match err {
            Err(TrafficError::LengthMismatch { expected, got, .. }) => {
                assert_eq!((expected, got), (17, 16));
            }
            other => panic!("expected LengthMismatch, got {other:?}"),
        }
    }

    #[test]
    fn target_map_follows_the_permutation() {
        let perm = gen_circular_shifting(8, 3, 1).unwrap();
        let fwd = target_map(&perm, 2, Direction::Interleave).unwrap();
        // node 0, step 1: g=1, perm(1)=4 -> node 1, location 0
        assert_eq!(fwd.dest(0, 1), (1, 0));
        let back = target_map(&perm, 2, Direction::Deinterleave).unwrap();
        // perm(0)=1, so de-interleaving sends g=1 back to slot 0
        assert_eq!(back.dest(0, 1), (0, 0));
    }

    #[test]
    fn target_map_covers_every_slot() {
        let perm = gen_random(48, 3);
        for dir in [Direction::Interleave, Direction::Deinterleave] {
            let tm = target_map(&perm, 8, dir).unwrap();
            let mut hit = [false; 48];
            for i in 0..8 {
                for j in 0..6 {
                    let (k, t) = tm.dest(i, j);
                    assert!(!hit[k * 6 + t]);
                    hit[k * 6 + t] = true;
                }
            }
            assert!(hit.iter().all(|&h| h));
        }
    }

    #[test]
    fn halves_compose_to_identity() {
        let perm = gen_circular_shifting(24, 7, 5).unwrap();
        for g in 0..24 {
            assert_eq!(perm.apply_inverse(perm.apply(g)), g);
        }
    }

    #[test]
    fn target_map_requires_divisible_block() {
        let perm = Permutation::identity(10);
        assert!(matches!(
            target_map(&perm, 4, Direction::Interleave),
            Err(TrafficError::IndivisibleBlock { n: 10, p: 4 })
        ));
    }

    #[test]
    fn schedule_backward_two_windows() {
        let timing = SisoTiming {
            window: 4,
            intra_gap: 1,
            inter_gap: 1,
            latency: 4,
            order: InjectionOrder::Backward,
        };
        let s = injection_schedule(&timing, 8).unwrap();
        assert_eq!(
            s.entries(),
            &[
                (4, 3),
                (5, 2),
                (6, 1),
                (7, 0),
                (8, 7),
                (9, 6),
                (10, 5),
                (11, 4)
            ]
        );
    }

    #[test]
    fn schedule_forward_spread_gaps() {
        let timing = SisoTiming {
            window: 4,
            intra_gap: 3,
            inter_gap: 3,
            latency: 12,
            order: InjectionOrder::Forward,
        };
        let s = injection_schedule(&timing, 4).unwrap();
        assert_eq!(s.entries(), &[(12, 0), (15, 1), (18, 2), (21, 3)]);
    }

    #[test]
    fn schedule_partial_last_window() {
        let timing = SisoTiming {
            window: 3,
            intra_gap: 2,
            inter_gap: 5,
            latency: 0,
            order: InjectionOrder::Forward,
        };
        let s = injection_schedule(&timing, 7).unwrap();
        // windows [0,1,2] [3,4,5] [6]; boundary gap 5, inner gap 2
        assert_eq!(
            s.entries(),
            &[(0, 0), (2, 1), (4, 2), (9, 3), (11, 4), (13, 5), (18, 6)]
        );
        let windows = 3u64;
        let expected_last = (2 * (7 - windows)) + 5 * (windows - 1);
        assert_eq!(s.last_cycle(), Some(expected_last));
    }

    #[test]
    fn schedule_rejects_zero_gaps() {
        let timing = SisoTiming {
            window: 4,
            intra_gap: 0,
            inter_gap: 1,
            latency: 0,
            order: InjectionOrder::Forward,
        };
        assert!(injection_schedule(&timing, 8).is_err());
    }

    #[test]
    fn schedule_covers_each_step_once() {
        let timing = SisoTiming {
            window: 38,
            intra_gap: 2,
            inter_gap: 2,
            latency: 76,
            order: InjectionOrder::Backward,
        };
        let s = injection_schedule(&timing, 300).unwrap();
        assert_eq!(s.len(), 300);
        let mut seen = vec![false; 300];
        let mut prev = None;
        for &(c, j) in s.entries() {
            assert!(!seen[j]);
            seen[j] = true;
            if let Some(p) = prev {
                assert!(c > p, "cycles strictly increase");
            }
            prev = Some(c);
        }
        assert!(seen.iter().all(|&x| x));
        assert_eq!(s.entries()[0].0, 76);
    }
}
