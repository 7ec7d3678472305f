//! Enumeration of regular triangulations up to symmetry.
//!
//! Regular triangulations are the vertices of the secondary polytope
//! and flips are its edges, so the whole set is connected under flips
//! and a graph search from any regular seed finds every orbit. Nodes
//! are symmetry-orbit representatives; each neighbor is canonicalized
//! first and only the representative is tested for regularity.
//!
//! Two drivers share all the node logic: a sequential breadth-first
//! loop, and a coordinator with depth-budgeted DFS workers where
//! unexplored nodes beyond the budget flow back to the coordinator's
//! queue. Output is a set; scheduling, worker count, and interruption
//! via checkpoints must not change it.

use std::collections::{HashMap, HashSet, VecDeque};
use std::hash::{Hash, Hasher};
use std::sync::mpsc;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::config::{ConfigError, HullFaceLattice, Mask, PointConfiguration};
use crate::io::{self, IoError};
use crate::regularity;
use crate::symmetry::PermutationGroup;
use crate::triang::{self, GkzVector, Triangulation, TriangError};

#[derive(Debug, Error)]
pub enum EnumerateError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Triang(#[from] TriangError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("seed triangulation failed the regularity check")]
    SeedNotRegular,
    #[error("fingerprint collision on {0:?}: two distinct orbits share a GKZ vector")]
    Collision(Vec<i64>),
    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),
}

/// Counters carried through checkpoints.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Stats {
    /// Orbit representatives emitted.
    pub orbits: u64,
    /// Emitted representatives whose GKZ vector is zero-free.
    pub full: u64,
    /// Flips evaluated.
    pub flips: u64,
    /// Regularity programs actually solved (cache hits excluded).
    pub regularity_checks: u64,
    /// Nodes expanded.
    pub expansions: u64,
}

/// Search state: pending representatives and the fingerprints of
/// every orbit found so far. The cell hash alongside each fingerprint
/// catches fingerprint collisions; entries restored from a checkpoint
/// carry no hash and are trusted.
#[derive(Debug, Default)]
pub struct EnumerationState {
    pub frontier: VecDeque<Box<[Mask]>>,
    visited: HashMap<Box<[i64]>, Option<u64>>,
    pub stats: Stats,
}

impl EnumerationState {
    pub fn visited_count(&self) -> u64 {
        self.visited.len() as u64
    }
}

/// Shared verdict cache keyed by exact cell masks. Regularity of a
/// triangulation does not depend on which run asks, so one cache can
/// serve many enumerations of the same configuration.
#[derive(Debug, Default)]
pub struct RegularityCache {
    verdicts: Mutex<HashMap<Box<[Mask]>, bool>>,
}

impl RegularityCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.verdicts.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cached regularity verdict; `solves` is incremented only when
    /// the program actually runs.
    fn is_regular(
        &self,
        cfg: &PointConfiguration,
        t: &Triangulation,
        solves: &mut u64,
    ) -> Result<bool, ConfigError> {
        let key: Box<[Mask]> = t.cell_masks().into_boxed_slice();
        if let Some(&v) = self.verdicts.lock().unwrap().get(&key) {
            return Ok(v);
        }
        *solves += 1;
        let verdict = regularity::is_regular(cfg, t)?.is_some();
        self.verdicts.lock().unwrap().insert(key, verdict);
        Ok(verdict)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Bfs,
    Budgeted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cadence {
    Expansions(u64),
    Seconds(u64),
}

pub struct Options {
    pub mode: Mode,
    pub budget: usize,
    pub workers: usize,
    /// Soft cap on visited orbits; dispatch stops once reached.
    pub limit: Option<u64>,
    /// Checkpoint file to maintain, written at every cadence tick and
    /// at the end of the run.
    pub checkpoint: Option<String>,
    pub cadence: Option<Cadence>,
    pub resume: Option<EnumerationState>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            mode: Mode::Bfs,
            budget: 1,
            workers: 1,
            limit: None,
            checkpoint: None,
            cadence: None,
            resume: None,
        }
    }
}

pub struct RunOutput {
    pub state: EnumerationState,
    /// False when the run stopped at the orbit limit with work left.
    pub complete: bool,
}

/// The placing triangulation, confirmed regular.
pub fn seed_triangulation(cfg: &PointConfiguration) -> Result<Triangulation, EnumerateError> {
    let t = triang::placing_triangulation(cfg);
    match regularity::is_regular(cfg, &t)? {
        Some(_) => Ok(t),
        None => Err(EnumerateError::SeedNotRegular),
    }
}

fn cells_hash(masks: &[Mask]) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    masks.hash(&mut h);
    h.finish()
}

/// A representative found by a worker, plus whether the worker already
/// expanded it (generated all its flips).
struct Found {
    cells: Box<[Mask]>,
    fp: Box<[i64]>,
    full: bool,
    expanded: bool,
}

#[derive(Default)]
struct Report {
    found: Vec<Found>,
    flips: u64,
    regularity_checks: u64,
    expansions: u64,
}

/// Depth-budgeted DFS from one node. The node itself is always
/// expanded; discovered representatives at depths below the budget are
/// expanded too, the rest are handed back unexplored. A task-local
/// seen set keeps the walk finite; global dedup is the coordinator's.
fn explore(
    cfg: &PointConfiguration,
    group: &PermutationGroup,
    cache: &RegularityCache,
    node: &[Mask],
    node_fp: &[i64],
    budget: usize,
) -> Result<Report, EnumerateError> {
    let mut report = Report::default();
    let mut seen: HashSet<Box<[i64]>> = HashSet::new();
    seen.insert(node_fp.into());
    let mut stack: Vec<(Box<[Mask]>, usize)> = vec![(node.into(), 0)];
    while let Some((masks, depth)) = stack.pop() {
        let t = Triangulation::from_masks_unchecked(&masks);
        report.expansions += 1;
        for flip in triang::flips(cfg, &t)? {
            report.flips += 1;
            let (rep, phi) = group.canonical_representative(cfg, &flip.result);
            let fp: Box<[i64]> = phi.entries().into();
            if !seen.insert(fp.clone()) {
                continue;
            }
            if !cache.is_regular(cfg, &rep, &mut report.regularity_checks)? {
                continue;
            }
            let cells: Box<[Mask]> = rep.cell_masks().into_boxed_slice();
            let expanded = depth + 1 < budget;
            if expanded {
                stack.push((cells.clone(), depth + 1));
            }
            report.found.push(Found {
                cells,
                fp,
                full: phi.is_zero_free(),
                expanded,
            });
        }
    }
    Ok(report)
}

/// Enumerates every regular orbit representative reachable from the
/// seed, invoking `emit` exactly once per orbit (resumed runs do not
/// re-emit earlier finds).
pub fn enumerate_regular(
    cfg: &PointConfiguration,
    group: &PermutationGroup,
    cache: &RegularityCache,
    mut options: Options,
    mut emit: impl FnMut(&Triangulation, &GkzVector),
) -> Result<RunOutput, EnumerateError> {
    let budget = match options.mode {
        Mode::Bfs => 1,
        Mode::Budgeted => options.budget.max(1),
    };
    let workers = match options.mode {
        Mode::Bfs => 1,
        Mode::Budgeted => options.workers.max(1),
    };
    let mut state = match options.resume.take() {
        Some(s) => s,
        None => {
            let mut s = EnumerationState::default();
            let seed = seed_triangulation(cfg)?;
            let (rep, phi) = group.canonical_representative(cfg, &seed);
            let masks: Box<[Mask]> = rep.cell_masks().into_boxed_slice();
            s.visited
                .insert(phi.entries().into(), Some(cells_hash(&masks)));
            s.stats.orbits = 1;
            s.stats.full = u64::from(phi.is_zero_free());
            emit(&rep, &phi);
            s.frontier.push_back(masks);
            s
        }
    };

    let started = Instant::now();
    let mut last_tick_expansions = state.stats.expansions;
    let mut last_tick_time = started;
    let over_limit = |st: &EnumerationState| match options.limit {
        Some(l) => st.visited_count() >= l,
        None => false,
    };

    // Ingests one worker report; returns a collision error if two
    // orbits ever share a fingerprint.
    let absorb = |state: &mut EnumerationState,
                      report: Report,
                      emit: &mut dyn FnMut(&Triangulation, &GkzVector)|
     -> Result<(), EnumerateError> {
        state.stats.flips += report.flips;
        state.stats.regularity_checks += report.regularity_checks;
        state.stats.expansions += report.expansions;
        for f in report.found {
            let h = cells_hash(&f.cells);
            match state.visited.get(&f.fp) {
                Some(Some(prev)) if *prev != h => {
                    return Err(EnumerateError::Collision(f.fp.to_vec()));
                }
                Some(_) => continue,
                None => {}
            }
            state.visited.insert(f.fp.clone(), Some(h));
            state.stats.orbits += 1;
            state.stats.full += u64::from(f.full);
            emit(
                &Triangulation::from_masks_unchecked(&f.cells),
                &GkzVector(f.fp.to_vec()),
            );
            if !f.expanded {
                state.frontier.push_back(f.cells);
            }
        }
        Ok(())
    };

    if workers == 1 {
        while let Some(masks) = {
            if over_limit(&state) {
                None
            } else {
                state.frontier.pop_front()
            }
        } {
            let t = Triangulation::from_masks_unchecked(&masks);
            let fp = triang::gkz_vector(cfg, &t);
            let report = explore(cfg, group, cache, &masks, fp.entries(), budget)?;
            absorb(&mut state, report, &mut emit)?;
            maybe_checkpoint(
                cfg,
                group,
                &options,
                &state,
                &mut last_tick_expansions,
                &mut last_tick_time,
            )?;
        }
    } else {
        std::thread::scope(|scope| -> Result<(), EnumerateError> {
            let (report_tx, report_rx) = mpsc::channel::<(usize, Result<Report, EnumerateError>)>();
            let mut task_txs = Vec::with_capacity(workers);
            for w in 0..workers {
                let (task_tx, task_rx) = mpsc::channel::<(Box<[Mask]>, Box<[i64]>)>();
                task_txs.push(task_tx);
                let report_tx = report_tx.clone();
                scope.spawn(move || {
                    while let Ok((masks, fp)) = task_rx.recv() {
                        let out = explore(cfg, group, cache, &masks, &fp, budget);
                        if report_tx.send((w, out)).is_err() {
                            return;
                        }
                    }
                });
            }
            drop(report_tx);
            let mut idle: Vec<usize> = (0..workers).collect();
            let mut in_flight = 0usize;
            loop {
                while !idle.is_empty() && !over_limit(&state) {
                    match state.frontier.pop_front() {
                        Some(masks) => {
                            let t = Triangulation::from_masks_unchecked(&masks);
                            let fp: Box<[i64]> =
                                triang::gkz_vector(cfg, &t).entries().into();
                            let w = idle.pop().unwrap();
                            task_txs[w].send((masks, fp)).expect("worker alive");
                            in_flight += 1;
                        }
                        None => break,
                    }
                }
                if in_flight == 0 {
                    break;
                }
                let (w, out) = report_rx.recv().expect("workers alive");
                in_flight -= 1;
                idle.push(w);
                absorb(&mut state, out?, &mut emit)?;
                // Cadence ticks only at quiescence so the checkpoint
                // sees a consistent frontier.
                if in_flight == 0 {
                    maybe_checkpoint(
                        cfg,
                        group,
                        &options,
                        &state,
                        &mut last_tick_expansions,
                        &mut last_tick_time,
                    )?;
                }
            }
            drop(task_txs);
            Ok(())
        })?;
    }

    let complete = state.frontier.is_empty();
    if let Some(path) = &options.checkpoint {
        checkpoint_write(&state, cfg, group, path)?;
    }
    Ok(RunOutput { state, complete })
}

fn maybe_checkpoint(
    cfg: &PointConfiguration,
    group: &PermutationGroup,
    options: &Options,
    state: &EnumerationState,
    last_expansions: &mut u64,
    last_time: &mut Instant,
) -> Result<(), EnumerateError> {
    let path = match &options.checkpoint {
        Some(p) => p,
        None => return Ok(()),
    };
    let due = match options.cadence {
        Some(Cadence::Expansions(k)) => state.stats.expansions.saturating_sub(*last_expansions) >= k,
        Some(Cadence::Seconds(s)) => last_time.elapsed() >= Duration::from_secs(s),
        None => false,
    };
    if due {
        checkpoint_write(state, cfg, group, path)?;
        *last_expansions = state.stats.expansions;
        *last_time = Instant::now();
    }
    Ok(())
}

/// Budgeted-DFS entry point with the same contract as
/// enumerate_regular.
pub fn run_budgeted(
    cfg: &PointConfiguration,
    group: &PermutationGroup,
    cache: &RegularityCache,
    budget: usize,
    workers: usize,
    emit: impl FnMut(&Triangulation, &GkzVector),
) -> Result<RunOutput, EnumerateError> {
    enumerate_regular(
        cfg,
        group,
        cache,
        Options {
            mode: Mode::Budgeted,
            budget,
            workers,
            ..Options::default()
        },
        emit,
    )
}

const CHECKPOINT_VERSION: &str = "secfan-checkpoint v1";

/// Serializes a quiescent state.
pub fn checkpoint_serialize(
    state: &EnumerationState,
    cfg: &PointConfiguration,
    group: &PermutationGroup,
) -> String {
    let s = &state.stats;
    let mut out = String::new();
    out.push_str(CHECKPOINT_VERSION);
    out.push('\n');
    out.push_str(&format!("config-digest {}\n", io::config_digest(cfg)));
    out.push_str(&format!(
        "group-digest {}\n",
        io::group_digest(group.elements())
    ));
    out.push_str(&format!(
        "stats orbits={} full={} flips={} regchecks={} expansions={}\n",
        s.orbits, s.full, s.flips, s.regularity_checks, s.expansions
    ));
    out.push_str("frontier:\n");
    for masks in &state.frontier {
        out.push_str(&Triangulation::from_masks_unchecked(masks).to_string());
        out.push('\n');
    }
    out.push_str("visited:\n");
    let mut fps: Vec<&Box<[i64]>> = state.visited.keys().collect();
    fps.sort();
    for fp in fps {
        out.push_str(&io::format_vector(fp));
        out.push('\n');
    }
    out
}

pub fn checkpoint_write(
    state: &EnumerationState,
    cfg: &PointConfiguration,
    group: &PermutationGroup,
    path: &str,
) -> Result<(), EnumerateError> {
    let text = checkpoint_serialize(state, cfg, group);
    std::fs::write(path, text).map_err(|source| {
        EnumerateError::Io(IoError::File {
            path: path.to_string(),
            source,
        })
    })
}

/// Parses and validates a checkpoint against the inputs it will
/// resume.
pub fn checkpoint_parse(
    text: &str,
    cfg: &PointConfiguration,
    lat: &HullFaceLattice,
    group: &PermutationGroup,
) -> Result<EnumerationState, EnumerateError> {
    let reject = |msg: &str| EnumerateError::Checkpoint(msg.to_string());
    let mut lines = text.lines();
    if lines.next() != Some(CHECKPOINT_VERSION) {
        return Err(reject("unknown version line"));
    }
    let config_line = lines.next().unwrap_or("");
    let got = config_line
        .strip_prefix("config-digest ")
        .ok_or_else(|| reject("missing config digest"))?;
    if got != io::config_digest(cfg) {
        return Err(reject("checkpoint belongs to a different point set"));
    }
    let group_line = lines.next().unwrap_or("");
    let got = group_line
        .strip_prefix("group-digest ")
        .ok_or_else(|| reject("missing group digest"))?;
    if got != io::group_digest(group.elements()) {
        return Err(reject("checkpoint belongs to a different group"));
    }
    let stats_line = lines.next().unwrap_or("");
    let body = stats_line
        .strip_prefix("stats ")
        .ok_or_else(|| reject("missing stats line"))?;
    let mut stats = Stats::default();
    for kv in body.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| reject("malformed stats entry"))?;
        let v: u64 = v.parse().map_err(|_| reject("malformed stats value"))?;
        match k {
            "orbits" => stats.orbits = v,
            "full" => stats.full = v,
            "flips" => stats.flips = v,
            "regchecks" => stats.regularity_checks = v,
            "expansions" => stats.expansions = v,
            other => return Err(reject(&format!("unknown stats key {other}"))),
        }
    }
    if lines.next() != Some("frontier:") {
        return Err(reject("missing frontier section"));
    }
    let mut frontier = VecDeque::new();
    let mut visited = HashMap::new();
    let mut in_visited = false;
    for line in lines {
        if line == "visited:" {
            in_visited = true;
            continue;
        }
        if in_visited {
            let v = io::parse_vector(line)?;
            visited.insert(v.into_boxed_slice(), None);
        } else {
            let cells = io::parse_triangulation(line)?;
            let t = Triangulation::validate(cfg, lat, cells)?;
            frontier.push_back(t.cell_masks().into_boxed_slice());
        }
    }
    if !in_visited {
        return Err(reject("missing visited section"));
    }
    // Frontier members must already be known orbits.
    for masks in &frontier {
        let t = Triangulation::from_masks_unchecked(masks);
        let fp = triang::gkz_vector(cfg, &t);
        if !visited.contains_key(fp.entries()) {
            return Err(reject("frontier member missing from visited set"));
        }
    }
    Ok(EnumerationState {
        frontier,
        visited,
        stats,
    })
}

pub fn checkpoint_resume(
    path: &str,
    cfg: &PointConfiguration,
    lat: &HullFaceLattice,
    group: &PermutationGroup,
) -> Result<EnumerationState, EnumerateError> {
    checkpoint_parse(&io::read_file(path)?, cfg, lat, group)
}

/// Cumulative full-triangulation curve over an emission stream:
/// element i is the number of zero-free GKZ vectors among the first
/// i+1 emissions.
pub fn full_stats<'a>(phis: impl Iterator<Item = &'a GkzVector>) -> Vec<u64> {
    let mut out = Vec::new();
    let mut full = 0u64;
    for phi in phis {
        full += u64::from(phi.is_zero_free());
        out.push(full);
    }
    out
}

/// All representatives reachable from `start` without expanding any
/// member of `target`; target nodes are reported when touched but
/// never expanded. Flip targets failing regularity are skipped, as in
/// the main search.
pub fn recover_gap(
    cfg: &PointConfiguration,
    group: &PermutationGroup,
    cache: &RegularityCache,
    start: &[Triangulation],
    target: &[Triangulation],
) -> Result<Vec<Triangulation>, EnumerateError> {
    let mut solves = 0u64;
    let target_fps: HashSet<Box<[i64]>> = target
        .iter()
        .map(|t| {
            let (_, phi) = group.canonical_representative(cfg, t);
            phi.entries().into()
        })
        .collect();
    let mut seen: HashMap<Box<[i64]>, Box<[Mask]>> = HashMap::new();
    let mut stack: Vec<Box<[Mask]>> = Vec::new();
    for t in start {
        let (rep, phi) = group.canonical_representative(cfg, t);
        let fp: Box<[i64]> = phi.entries().into();
        let masks: Box<[Mask]> = rep.cell_masks().into_boxed_slice();
        if seen.insert(fp.clone(), masks.clone()).is_none() && !target_fps.contains(&fp) {
            stack.push(masks);
        }
    }
    while let Some(masks) = stack.pop() {
        let t = Triangulation::from_masks_unchecked(&masks);
        for flip in triang::flips(cfg, &t)? {
            let (rep, phi) = group.canonical_representative(cfg, &flip.result);
            let fp: Box<[i64]> = phi.entries().into();
            if seen.contains_key(&fp) {
                continue;
            }
            if !cache.is_regular(cfg, &rep, &mut solves)? {
                continue;
            }
            let cells: Box<[Mask]> = rep.cell_masks().into_boxed_slice();
            seen.insert(fp.clone(), cells.clone());
            if !target_fps.contains(&fp) {
                stack.push(cells);
            }
        }
    }
    let mut out: Vec<Triangulation> = seen
        .values()
        .map(|m| Triangulation::from_masks_unchecked(m))
        .collect();
    out.sort();
    Ok(out)
}
