//! Reachability graphs of marked object systems.
//!
//! All explorations share one breadth-first driver. What differs is how a
//! freshly fired marking is classified: by itself (full graph), by its
//! canonical representative (automorphism reduction), by its projections
//! (projection reduction, experimental), or by the smallest projection over
//! its orbit (both).

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::canonical::{canonicalize, marking_key, min_proj_image, proj_key, MarkingKey};
use crate::eos::{enabled_events, fire, Eos, EosEvent, Mode, ModeCaps, NestedMarking};
use crate::symmetry::AutGroup;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Reduction {
    None,
    Aut,
    Proj,
    AutProj,
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reduction::None => "none",
            Reduction::Aut => "aut",
            Reduction::Proj => "proj",
            Reduction::AutProj => "aut+proj",
        })
    }
}

impl FromStr for Reduction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(Reduction::None),
            "aut" => Ok(Reduction::Aut),
            "proj" => Ok(Reduction::Proj),
            "aut+proj" | "proj+aut" => Ok(Reduction::AutProj),
            other => Err(format!(
                "unknown reduction `{other}` (expected none, aut, proj or aut+proj)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub max_states: usize,
    pub max_depth: Option<usize>,
    pub caps: ModeCaps,
    /// Store full modes on edges, not only their digests.
    pub keep_modes: bool,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_states: 100_000,
            max_depth: None,
            caps: ModeCaps::default(),
            keep_modes: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub source: usize,
    pub event: EosEvent,
    pub mode_digest: u64,
    pub mode: Option<Mode>,
    pub target: usize,
}

/// The JSON stats record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub states: usize,
    pub edges: usize,
    pub truncated: bool,
    pub group_order: usize,
    pub reduction: String,
    pub wall_ms: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct ReachGraph {
    /// States in BFS discovery order: markings, representatives or class witnesses.
    pub states: Vec<NestedMarking>,
    pub edges: Vec<Edge>,
    pub initial: usize,
    pub truncated: bool,
    pub reduction: Reduction,
    pub group_order: usize,
    /// Set for projection-reduced graphs until checked by [`verify_quotient`].
    pub heuristic: bool,
    pub model_digest: u64,
    pub wall: Duration,
}

impl ReachGraph {
    /// Stats with `wall_ms` left empty, so the record is a function of the inputs only.
    pub fn stats(&self) -> Stats {
        Stats {
            states: self.states.len(),
            edges: self.edges.len(),
            truncated: self.truncated,
            group_order: self.group_order,
            reduction: self.reduction.to_string(),
            wall_ms: None,
        }
    }

    pub fn timed_stats(&self) -> Stats {
        Stats {
            wall_ms: Some(self.wall.as_millis() as u64),
            ..self.stats()
        }
    }

    pub fn successors(&self, s: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.source == s)
    }
}

fn digest64(bytes: &[u8]) -> u64 {
    let d = Sha256::digest(bytes);
    let mut b = [0u8; 8];
    b.copy_from_slice(&d[..8]);
    u64::from_le_bytes(b)
}

fn key_bytes(key: &MarkingKey, out: &mut Vec<u8>) {
    out.extend_from_slice(&(key.0.len() as u64).to_le_bytes());
    for (p, v) in &key.0 {
        out.extend_from_slice(&(*p as u64).to_le_bytes());
        out.extend_from_slice(&(v.len() as u64).to_le_bytes());
        for c in v {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
}

/// Stable 64-bit digest of a mode's `(lambda, rho)` keys.
pub fn mode_digest(eos: &Eos, mode: &Mode) -> u64 {
    let mut bytes = Vec::new();
    key_bytes(&marking_key(eos, &mode.lambda), &mut bytes);
    key_bytes(&marking_key(eos, &mode.rho), &mut bytes);
    digest64(&bytes)
}

/// Stable digest identifying a model, used to refuse comparing graphs of different models.
pub fn model_digest(eos: &Eos) -> u64 {
    digest64(format!("{eos:?}").as_bytes())
}

fn explore_with<K, F>(
    eos: &Eos,
    mu0: &NestedMarking,
    bounds: &Bounds,
    reduction: Reduction,
    group_order: usize,
    classify: F,
) -> ReachGraph
where
    K: Hash + Eq,
    F: Fn(&NestedMarking) -> (K, NestedMarking),
{
    let start = Instant::now();
    let max_states = bounds.max_states.max(1);
    let (k0, s0) = classify(mu0);
    let mut index: HashMap<K, usize> = HashMap::from([(k0, 0)]);
    let mut states = vec![s0];
    let mut depth = vec![0usize];
    let mut edges = Vec::new();
    let mut truncated = false;
    let mut queue = VecDeque::from([0usize]);

    'bfs: while let Some(s) = queue.pop_front() {
        let current = states[s].clone();
        let firings = enabled_events(eos, &current, bounds.caps);
        truncated |= firings.truncated;
        if bounds.max_depth.is_some_and(|d| depth[s] >= d) {
            truncated |= !firings.firings.is_empty();
            continue;
        }
        for (event, mode) in firings.firings {
            let next = fire(eos, &current, &event, &mode).expect("enumerated modes are enabled");
            let (k, rep) = classify(&next);
            let target = match index.get(&k) {
                Some(&t) => t,
                None => {
                    if states.len() >= max_states {
                        truncated = true;
                        break 'bfs;
                    }
                    let t = states.len();
                    index.insert(k, t);
                    states.push(rep);
                    depth.push(depth[s] + 1);
                    queue.push_back(t);
                    t
                }
            };
            edges.push(Edge {
                source: s,
                mode_digest: mode_digest(eos, &mode),
                mode: bounds.keep_modes.then_some(mode),
                event,
                target,
            });
        }
    }

    ReachGraph {
        states,
        edges,
        initial: 0,
        truncated,
        reduction,
        group_order,
        heuristic: matches!(reduction, Reduction::Proj | Reduction::AutProj),
        model_digest: model_digest(eos),
        wall: start.elapsed(),
    }
}

/// Full reachability graph; states are deduplicated by [`MarkingKey`].
pub fn explore_full(eos: &Eos, mu0: &NestedMarking, bounds: &Bounds) -> ReachGraph {
    explore_with(eos, mu0, bounds, Reduction::None, 1, |m| {
        (marking_key(eos, m), m.clone())
    })
}

/// Reachability graph over canonical representatives under `g`.
pub fn explore_reduced(eos: &Eos, mu0: &NestedMarking, g: &AutGroup, bounds: &Bounds) -> ReachGraph {
    explore_with(eos, mu0, bounds, Reduction::Aut, g.order(), |m| {
        let c = canonicalize(eos, m, g);
        (marking_key(eos, &c), c)
    })
}

/// Reachability graph over projection-equivalence classes, each stored with the
/// first concrete marking found in it. Flagged heuristic: successors are
/// computed from the witness only.
pub fn explore_proj(eos: &Eos, mu0: &NestedMarking, bounds: &Bounds) -> ReachGraph {
    explore_with(eos, mu0, bounds, Reduction::Proj, 1, |m| {
        (proj_key(eos, m), m.clone())
    })
}

/// Automorphism reduction composed with projection equivalence.
pub fn explore_aut_proj(
    eos: &Eos,
    mu0: &NestedMarking,
    g: &AutGroup,
    bounds: &Bounds,
) -> ReachGraph {
    explore_with(eos, mu0, bounds, Reduction::AutProj, g.order(), |m| {
        min_proj_image(eos, m, g)
    })
}

/// Dispatches on `reduction`. `g` is ignored by `none` and `proj`.
pub fn explore(
    eos: &Eos,
    mu0: &NestedMarking,
    reduction: Reduction,
    g: &AutGroup,
    bounds: &Bounds,
) -> ReachGraph {
    match reduction {
        Reduction::None => explore_full(eos, mu0, bounds),
        Reduction::Aut => explore_reduced(eos, mu0, g, bounds),
        Reduction::Proj => explore_proj(eos, mu0, bounds),
        Reduction::AutProj => explore_aut_proj(eos, mu0, g, bounds),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExploreError {
    #[error("graphs were built from different models or initial markings")]
    IncomparableGraphs,
    #[error("the reference graph must be a complete, unreduced exploration")]
    ReferenceNotFull,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// A full state whose class has no reduced state.
    UnmappedState { full: usize },
    /// A reduced state that no full state maps to.
    UnreachedReducedState { reduced: usize },
    /// (b): a full edge without a corresponding reduced edge.
    MissingReducedEdge { source: usize, target: usize, event: String },
    /// (c): a reduced edge that no full edge maps onto.
    UnmatchedReducedEdge { source: usize, target: usize, event: String },
    /// The initial states do not correspond.
    InitialMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuotientReport {
    pub full_states: usize,
    pub reduced_states: usize,
    pub full_edges: usize,
    pub reduced_edges: usize,
    pub violations: Vec<Violation>,
}

impl QuotientReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that `reduced` is the quotient of `full`: every full state and edge maps
/// onto a reduced one and every reduced state and edge has a preimage. Edge labels
/// are compared up to the orbit of the event under `g`.
///
/// For projection-reduced graphs this is an empirical check of the quotient; for
/// automorphism-reduced graphs it should always pass.
pub fn verify_quotient(
    eos: &Eos,
    full: &ReachGraph,
    reduced: &ReachGraph,
    g: &AutGroup,
) -> Result<QuotientReport, ExploreError> {
    if full.reduction != Reduction::None || full.truncated {
        return Err(ExploreError::ReferenceNotFull);
    }
    if full.model_digest != reduced.model_digest || full.model_digest != model_digest(eos) {
        return Err(ExploreError::IncomparableGraphs);
    }
    match reduced.reduction {
        Reduction::None => Ok(check_quotient(
            eos,
            full,
            reduced,
            |m| marking_key(eos, m),
            |m| marking_key(eos, m),
            |e| e.clone(),
        )),
        Reduction::Aut => Ok(check_quotient(
            eos,
            full,
            reduced,
            |m| marking_key(eos, &canonicalize(eos, m, g)),
            |m| marking_key(eos, m),
            |e| event_class(g, e),
        )),
        Reduction::Proj => Ok(check_quotient(
            eos,
            full,
            reduced,
            |m| proj_key(eos, m),
            |m| proj_key(eos, m),
            |e| e.clone(),
        )),
        Reduction::AutProj => Ok(check_quotient(
            eos,
            full,
            reduced,
            |m| min_proj_image(eos, m, g).0,
            |m| min_proj_image(eos, m, g).0,
            |e| event_class(g, e),
        )),
    }
}

/// Smallest image of an event over the group: a label for its orbit.
fn event_class(g: &AutGroup, e: &EosEvent) -> EosEvent {
    g.elements
        .iter()
        .map(|a| a.event_image(e))
        .min()
        .unwrap_or_else(|| e.clone())
}

fn check_quotient<K, FC, FR, FE>(
    eos: &Eos,
    full: &ReachGraph,
    reduced: &ReachGraph,
    class_of_full: FC,
    key_of_reduced: FR,
    event_label: FE,
) -> QuotientReport
where
    K: Hash + Eq,
    FC: Fn(&NestedMarking) -> K,
    FR: Fn(&NestedMarking) -> K,
    FE: Fn(&EosEvent) -> EosEvent,
{
    let mut violations = Vec::new();
    let index: HashMap<K, usize> = reduced
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (key_of_reduced(s), i))
        .collect();
    let map: Vec<Option<usize>> = full
        .states
        .iter()
        .map(|s| index.get(&class_of_full(s)).copied())
        .collect();
    let mut hit = vec![false; reduced.states.len()];
    for (i, m) in map.iter().enumerate() {
        match m {
            Some(r) => hit[*r] = true,
            None => violations.push(Violation::UnmappedState { full: i }),
        }
    }
    if map.get(full.initial).copied().flatten() != Some(reduced.initial) {
        violations.push(Violation::InitialMismatch);
    }
    // Reduced states beyond a truncation point may legitimately lack preimages.
    for (r, h) in hit.iter().enumerate() {
        if !h {
            violations.push(Violation::UnreachedReducedState { reduced: r });
        }
    }

    let reduced_edges: HashSet<(usize, usize, EosEvent)> = reduced
        .edges
        .iter()
        .map(|e| (e.source, e.target, event_label(&e.event)))
        .collect();
    let mut images: HashSet<(usize, usize, EosEvent)> = HashSet::new();
    for e in &full.edges {
        let (Some(s), Some(t)) = (map[e.source], map[e.target]) else {
            continue;
        };
        let key = (s, t, event_label(&e.event));
        if !reduced_edges.contains(&key) {
            violations.push(Violation::MissingReducedEdge {
                source: e.source,
                target: e.target,
                event: eos.render_event(&e.event),
            });
        }
        images.insert(key);
    }
    let mut reported = HashSet::new();
    for e in &reduced.edges {
        let key = (e.source, e.target, event_label(&e.event));
        if !images.contains(&key) && reported.insert(key) {
            violations.push(Violation::UnmatchedReducedEdge {
                source: e.source,
                target: e.target,
                event: eos.render_event(&e.event),
            });
        }
    }

    QuotientReport {
        full_states: full.states.len(),
        reduced_states: reduced.states.len(),
        full_edges: full.edges.len(),
        reduced_edges: reduced.edges.len(),
        violations,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DotOptions {
    pub show_markings: bool,
    pub max_label_len: Option<usize>,
}

impl Default for DotOptions {
    fn default() -> Self {
        DotOptions {
            show_markings: true,
            max_label_len: None,
        }
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn clip(s: String, max: Option<usize>) -> String {
    match max {
        Some(n) if s.chars().count() > n => {
            let mut out: String = s.chars().take(n.saturating_sub(3)).collect();
            out.push_str("...");
            out
        }
        _ => s,
    }
}

/// Renders the graph as a DOT digraph. The initial state is drawn with a double border.
pub fn export_dot(eos: &Eos, graph: &ReachGraph, opts: &DotOptions) -> String {
    let mut out = String::new();
    out.push_str("digraph reachability {\n");
    out.push_str("  node [shape=box, fontname=\"monospace\"];\n");
    for (i, s) in graph.states.iter().enumerate() {
        let label = if opts.show_markings {
            clip(eos.render_marking(s), opts.max_label_len)
        } else {
            format!("s{i}")
        };
        let extra = if i == graph.initial { ", peripheries=2" } else { "" };
        out.push_str(&format!(
            "  s{i} [label=\"{}\"{extra}];\n",
            dot_escape(&label)
        ));
    }
    for e in &graph.edges {
        let label = clip(eos.render_event(&e.event), opts.max_label_len);
        out.push_str(&format!(
            "  s{} -> s{} [label=\"{}\"];\n",
            e.source,
            e.target,
            dot_escape(&label)
        ));
    }
    out.push_str("}\n");
    out
}
