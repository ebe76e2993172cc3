//! Automorphisms of p/t nets and of whole object systems.
//!
//! [`pt_automorphisms`] finds every node permutation of a net commuting with
//! `pre`/`post`: places are refined by iterated colour refinement over the
//! weighted bipartite graph, then assigned by backtracking; transitions follow
//! from the place map up to permutations of transitions with equal arcs.
//!
//! [`eos_automorphisms`] combines component automorphisms into the group of
//! EOS-automorphisms: typing is preserved by construction (it seeds the colour
//! of every system place) and event preservation is checked net by net.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::eos::{Eos, EosEvent, NestedMarking, NetId, SysTrans, Token};
use crate::multiset::Multiset;
use crate::ptnet::{Place, PtMarking, PtNet, Trans};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymmetryError {
    #[error("candidate is not a bijection on {0}")]
    NotBijective(&'static str),
    #[error("image of event `{0}` is not an event of the system")]
    ImageNotInTheta(String),
}

/// A permutation of `0..n`; `self.0[i]` is the image of `i`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Perm(pub Vec<usize>);

impl Perm {
    pub fn identity(n: usize) -> Self {
        Perm((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.0.len()];
        self.0.iter().all(|&j| {
            if j >= seen.len() || seen[j] {
                return false;
            }
            seen[j] = true;
            true
        })
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm(other.0.iter().map(|&j| self.0[j]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.0.len()];
        for (i, &j) in self.0.iter().enumerate() {
            inv[j] = i;
        }
        Perm(inv)
    }

    /// Non-trivial cycles, each starting at its smallest element, ordered by that element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.0.len()];
        let mut out = Vec::new();
        for start in 0..self.0.len() {
            if seen[start] || self.0[start] == start {
                continue;
            }
            let mut cyc = vec![start];
            seen[start] = true;
            let mut j = self.0[start];
            while j != start {
                seen[j] = true;
                cyc.push(j);
                j = self.0[j];
            }
            out.push(cyc);
        }
        out
    }
}

/// A p/t automorphism: place and transition permutations commuting with `pre` and `post`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PtAutomorphism {
    pub places: Perm,
    pub transitions: Perm,
}

impl PtAutomorphism {
    pub fn identity(net: &PtNet) -> Self {
        PtAutomorphism {
            places: Perm::identity(net.place_count()),
            transitions: Perm::identity(net.trans_count()),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.places.is_identity() && self.transitions.is_identity()
    }

    pub fn place(&self, p: Place) -> Place {
        Place(self.places.apply(p.0))
    }

    pub fn trans(&self, t: Trans) -> Trans {
        Trans(self.transitions.apply(t.0))
    }

    pub fn marking(&self, m: &PtMarking) -> PtMarking {
        m.map_hom(|p| self.place(*p))
    }

    pub fn transitions_ms(&self, ts: &Multiset<Trans>) -> Multiset<Trans> {
        ts.map_hom(|t| self.trans(*t))
    }

    pub fn compose(&self, other: &Self) -> Self {
        PtAutomorphism {
            places: self.places.compose(&other.places),
            transitions: self.transitions.compose(&other.transitions),
        }
    }

    pub fn inverse(&self) -> Self {
        PtAutomorphism {
            places: self.places.inverse(),
            transitions: self.transitions.inverse(),
        }
    }
}

/// Checks the commuting condition `pre(φ(t)) = φ(pre(t))`, `post(φ(t)) = φ(post(t))`.
pub fn check_pt_automorphism(net: &PtNet, cand: &PtAutomorphism) -> Result<bool, SymmetryError> {
    if cand.places.len() != net.place_count() || !cand.places.is_bijection() {
        return Err(SymmetryError::NotBijective("places"));
    }
    if cand.transitions.len() != net.trans_count() || !cand.transitions.is_bijection() {
        return Err(SymmetryError::NotBijective("transitions"));
    }
    Ok(net.transitions().all(|t| {
        let img = cand.trans(t);
        net.pre(img) == &cand.marking(net.pre(t)) && net.post(img) == &cand.marking(net.post(t))
    }))
}

/// Result of an automorphism search.
#[derive(Clone, Debug)]
pub struct AutSearch {
    /// Automorphisms sorted by their permutation vectors; the identity comes first.
    pub auts: Vec<PtAutomorphism>,
    pub truncated: bool,
}

/// All automorphisms of `net`, at most `cap` of them.
pub fn pt_automorphisms(net: &PtNet, cap: usize) -> AutSearch {
    pt_automorphisms_colored(net, None, None, cap)
}

/// Like [`pt_automorphisms`], restricted to permutations preserving the given
/// node colours.
pub fn pt_automorphisms_colored(
    net: &PtNet,
    place_colors: Option<&[u64]>,
    trans_colors: Option<&[u64]>,
    cap: usize,
) -> AutSearch {
    let (pc, tc) = refine_colors(net, place_colors, trans_colors);
    let mut search = Search::new(net, pc, tc, cap.max(1));
    search.run();
    let mut auts = search.found;
    auts.sort();
    AutSearch {
        auts,
        truncated: search.truncated,
    }
}

/// Iterated colour refinement on the place/transition graph with arc weights.
fn refine_colors(
    net: &PtNet,
    place_colors: Option<&[u64]>,
    trans_colors: Option<&[u64]>,
) -> (Vec<usize>, Vec<usize>) {
    fn dense<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
        let ids: BTreeMap<K, usize> = keys
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, k)| (k, i))
            .collect();
        keys.iter().map(|k| ids[k]).collect()
    }
    let np = net.place_count();
    let nt = net.trans_count();
    let mut pc = dense(&(0..np).map(|i| place_colors.map_or(0, |c| c[i])).collect::<Vec<_>>());
    let mut tc = dense(&(0..nt).map(|i| trans_colors.map_or(0, |c| c[i])).collect::<Vec<_>>());
    // place -> (transition, weight) arcs
    let mut consumers: Vec<Vec<(usize, u32)>> = vec![Vec::new(); np];
    let mut producers: Vec<Vec<(usize, u32)>> = vec![Vec::new(); np];
    for t in net.transitions() {
        for (p, &w) in net.pre(t) {
            consumers[p.0].push((t.0, w));
        }
        for (p, &w) in net.post(t) {
            producers[p.0].push((t.0, w));
        }
    }
    let classes = |c: &[usize]| c.iter().collect::<BTreeSet<_>>().len();
    loop {
        let before = classes(&pc) + classes(&tc);
        type Sig = (usize, Vec<(usize, u32)>, Vec<(usize, u32)>);
        let psig: Vec<Sig> = (0..np)
            .map(|p| {
                let mut ins: Vec<_> = producers[p].iter().map(|&(t, w)| (tc[t], w)).collect();
                let mut outs: Vec<_> = consumers[p].iter().map(|&(t, w)| (tc[t], w)).collect();
                ins.sort();
                outs.sort();
                (pc[p], ins, outs)
            })
            .collect();
        let tsig: Vec<Sig> = net
            .transitions()
            .map(|t| {
                let mut ins: Vec<_> = net.pre(t).iter().map(|(p, &w)| (pc[p.0], w)).collect();
                let mut outs: Vec<_> = net.post(t).iter().map(|(p, &w)| (pc[p.0], w)).collect();
                ins.sort();
                outs.sort();
                (tc[t.0], ins, outs)
            })
            .collect();
        pc = dense(&psig);
        tc = dense(&tsig);
        if classes(&pc) + classes(&tc) == before {
            return (pc, tc);
        }
    }
}

struct Search<'a> {
    net: &'a PtNet,
    pc: Vec<usize>,
    tc: Vec<usize>,
    cap: usize,
    /// Place assignment order.
    order: Vec<usize>,
    /// Transitions to check once `order[i]` has been assigned.
    check_at: Vec<Vec<usize>>,
    /// (pre, post, colour) -> transitions with exactly these arcs.
    by_arcs: HashMap<(PtMarking, PtMarking, usize), Vec<usize>>,
    image: Vec<Option<usize>>,
    used: Vec<bool>,
    found: Vec<PtAutomorphism>,
    truncated: bool,
}

impl<'a> Search<'a> {
    fn new(net: &'a PtNet, pc: Vec<usize>, tc: Vec<usize>, cap: usize) -> Self {
        let np = net.place_count();
        let mut class_size = HashMap::new();
        for &c in &pc {
            *class_size.entry(c).or_insert(0usize) += 1;
        }
        let mut order: Vec<usize> = (0..np).collect();
        order.sort_by_key(|&p| (class_size[&pc[p]], pc[p], p));
        let pos: Vec<usize> = {
            let mut pos = vec![0; np];
            for (i, &p) in order.iter().enumerate() {
                pos[p] = i;
            }
            pos
        };
        let mut check_at = vec![Vec::new(); np];
        let mut by_arcs: HashMap<_, Vec<usize>> = HashMap::new();
        for t in net.transitions() {
            let last = net
                .pre(t)
                .support()
                .chain(net.post(t).support())
                .map(|p| pos[p.0])
                .max();
            if let Some(i) = last {
                check_at[i].push(t.0);
            }
            by_arcs
                .entry((net.pre(t).clone(), net.post(t).clone(), tc[t.0]))
                .or_default()
                .push(t.0);
        }
        Search {
            net,
            pc,
            tc,
            cap,
            order,
            check_at,
            by_arcs,
            image: vec![None; np],
            used: vec![false; np],
            found: Vec::new(),
            truncated: false,
        }
    }

    fn run(&mut self) {
        self.assign(0);
    }

    fn map_marking(&self, m: &PtMarking) -> PtMarking {
        m.map_hom(|p| Place(self.image[p.0].expect("assigned")))
    }

    fn consistent(&self, depth: usize) -> bool {
        self.check_at[depth].iter().all(|&t| {
            let t = Trans(t);
            let key = (
                self.map_marking(self.net.pre(t)),
                self.map_marking(self.net.post(t)),
                self.tc[t.0],
            );
            self.by_arcs.get(&key).map_or(0, Vec::len)
                == self.by_arcs[&(self.net.pre(t).clone(), self.net.post(t).clone(), self.tc[t.0])]
                    .len()
        })
    }

    fn assign(&mut self, depth: usize) {
        if self.truncated {
            return;
        }
        if depth == self.order.len() {
            self.complete();
            return;
        }
        let p = self.order[depth];
        for q in 0..self.pc.len() {
            if self.used[q] || self.pc[q] != self.pc[p] {
                continue;
            }
            self.image[p] = Some(q);
            self.used[q] = true;
            if self.consistent(depth) {
                self.assign(depth + 1);
            }
            self.used[q] = false;
            self.image[p] = None;
            if self.truncated {
                return;
            }
        }
    }

    /// Extends a full place map to every compatible transition map.
    fn complete(&mut self) {
        let places = Perm(self.image.iter().map(|x| x.expect("assigned")).collect());
        let mut classes: Vec<(&Vec<usize>, &Vec<usize>)> = Vec::new();
        let mut keys: Vec<_> = self.by_arcs.keys().collect();
        keys.sort();
        for key in keys {
            let src = &self.by_arcs[key];
            let img_key = (self.map_marking(&key.0), self.map_marking(&key.1), key.2);
            match self.by_arcs.get(&img_key) {
                Some(dst) if dst.len() == src.len() => classes.push((src, dst)),
                _ => return,
            }
        }
        let per_class: Vec<Vec<Vec<usize>>> = classes
            .iter()
            .map(|(src, _)| permutations(src.len()))
            .collect();
        let mut idx = vec![0usize; classes.len()];
        loop {
            if self.found.len() >= self.cap {
                self.truncated = true;
                return;
            }
            let mut trans = vec![0; self.net.trans_count()];
            for (c, (src, dst)) in classes.iter().enumerate() {
                for (k, &j) in per_class[c][idx[c]].iter().enumerate() {
                    trans[src[k]] = dst[j];
                }
            }
            self.found.push(PtAutomorphism {
                places: places.clone(),
                transitions: Perm(trans),
            });
            let mut k = classes.len();
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < per_class[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}

/// All permutations of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("pivot");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

/// An EOS-automorphism: one p/t automorphism per component, preserving typing and events.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EosAutomorphism {
    pub system: PtAutomorphism,
    /// Indexed by [`NetId`]; entry 0 is the (empty) black-token net.
    pub objects: Vec<PtAutomorphism>,
}

impl EosAutomorphism {
    pub fn identity(eos: &Eos) -> Self {
        EosAutomorphism {
            system: PtAutomorphism::identity(eos.system()),
            objects: eos.nets().iter().map(PtAutomorphism::identity).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.system.is_identity() && self.objects.iter().all(PtAutomorphism::is_identity)
    }

    pub fn object(&self, net: NetId) -> &PtAutomorphism {
        &self.objects[net.0]
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        EosAutomorphism {
            system: self.system.compose(&other.system),
            objects: self
                .objects
                .iter()
                .zip(&other.objects)
                .map(|(a, b)| a.compose(b))
                .collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        EosAutomorphism {
            system: self.system.inverse(),
            objects: self.objects.iter().map(PtAutomorphism::inverse).collect(),
        }
    }

    pub fn sys_trans(&self, s: SysTrans) -> SysTrans {
        match s {
            SysTrans::Transition(t) => SysTrans::Transition(self.system.trans(t)),
            SysTrans::Idle(p) => SysTrans::Idle(self.system.place(p)),
        }
    }

    /// `φ(τ)[θ']` with `θ'(N) = φ_N(θ(N))`, without checking membership in `Θ`.
    pub fn event_image(&self, e: &EosEvent) -> EosEvent {
        let mut out = EosEvent::new(self.sys_trans(e.system));
        for (net, ts) in &e.sync {
            out.set_sync(*net, self.object(*net).transitions_ms(ts));
        }
        out
    }
}

/// Applies an automorphism to a nested marking: `p[M] ↦ φ(p)[φ_{d(p)}(M)]`.
pub fn apply_to_marking(eos: &Eos, aut: &EosAutomorphism, mu: &NestedMarking) -> NestedMarking {
    NestedMarking(mu.tokens().map_hom(|tok| {
        let d = eos.type_of(tok.place);
        Token::new(aut.system.place(tok.place), aut.object(d).marking(&tok.marking))
    }))
}

/// Applies an automorphism to an event of the system. Fails when the image is not
/// an event, i.e. when `aut` is not an EOS-automorphism.
pub fn apply_to_event(
    eos: &Eos,
    aut: &EosAutomorphism,
    e: &EosEvent,
) -> Result<EosEvent, SymmetryError> {
    let img = aut.event_image(e);
    if eos.contains_event(&img) {
        Ok(img)
    } else {
        Err(SymmetryError::ImageNotInTheta(eos.render_event(e)))
    }
}

/// Checks both clauses of the EOS-automorphism definition, plus bijectivity of the
/// induced map on events.
pub fn is_eos_automorphism(eos: &Eos, aut: &EosAutomorphism) -> bool {
    if aut.objects.len() != eos.nets().len() {
        return false;
    }
    let components_ok = check_pt_automorphism(eos.system(), &aut.system).unwrap_or(false)
        && eos
            .nets()
            .iter()
            .zip(&aut.objects)
            .all(|(n, a)| check_pt_automorphism(n, a).unwrap_or(false));
    if !components_ok {
        return false;
    }
    let typing_ok = eos
        .system()
        .places()
        .all(|p| eos.type_of(aut.system.place(p)) == eos.type_of(p));
    if !typing_ok {
        return false;
    }
    let mut images = HashSet::new();
    eos.events().iter().all(|e| {
        let img = aut.event_image(e);
        eos.contains_event(&img) && images.insert(img)
    })
}

/// A finite group of EOS-automorphisms.
#[derive(Clone, Debug)]
pub struct AutGroup {
    /// All elements, sorted; the identity is first.
    pub elements: Vec<EosAutomorphism>,
    pub generators: Vec<EosAutomorphism>,
    /// Set when a search or the closure hit its cap. The elements are then a
    /// subset of the full group and need not be closed.
    pub truncated: bool,
}

impl AutGroup {
    pub fn trivial(eos: &Eos) -> Self {
        AutGroup {
            elements: vec![EosAutomorphism::identity(eos)],
            generators: Vec::new(),
            truncated: false,
        }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.elements.len() <= 1
    }

    pub fn contains(&self, a: &EosAutomorphism) -> bool {
        self.elements.binary_search(a).is_ok()
    }

    /// Builds a group from arbitrary elements by closing under composition, up to `cap` elements.
    pub fn generated_by(eos: &Eos, gens: Vec<EosAutomorphism>, cap: usize) -> Self {
        let (elements, truncated) = closure(EosAutomorphism::identity(eos), &gens, cap);
        let generators = minimal_generators(eos, &elements, cap);
        AutGroup {
            elements,
            generators,
            truncated,
        }
    }
}

/// BFS closure of `{id}` under right multiplication by `gens`.
fn closure(
    id: EosAutomorphism,
    gens: &[EosAutomorphism],
    cap: usize,
) -> (Vec<EosAutomorphism>, bool) {
    let mut seen: HashSet<EosAutomorphism> = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    let mut truncated = false;
    'outer: while let Some(a) = queue.pop_front() {
        for g in gens {
            let b = a.compose(g);
            if seen.contains(&b) {
                continue;
            }
            if seen.len() >= cap {
                truncated = true;
                break 'outer;
            }
            seen.insert(b.clone());
            queue.push_back(b);
        }
    }
    let mut elements: Vec<_> = seen.into_iter().collect();
    elements.sort();
    (elements, truncated)
}

/// Greedy generating set: scan elements in order, keep those outside the span so far.
fn minimal_generators(eos: &Eos, elements: &[EosAutomorphism], cap: usize) -> Vec<EosAutomorphism> {
    let mut gens: Vec<EosAutomorphism> = Vec::new();
    let mut span: HashSet<EosAutomorphism> = HashSet::from([EosAutomorphism::identity(eos)]);
    for e in elements {
        if span.contains(e) {
            continue;
        }
        gens.push(e.clone());
        let (els, _) = closure(EosAutomorphism::identity(eos), &gens, cap);
        span = els.into_iter().collect();
        if span.len() >= elements.len() {
            break;
        }
    }
    gens
}

/// Default cap on automorphism searches and group materialisation.
pub const DEFAULT_AUT_CAP: usize = 10_000;

/// Colours invariant under every EOS-automorphism: the typing and idle-event
/// profile of system places, the event profile of system transitions, and the
/// synchronisation profile of object transitions.
struct EventProfiles {
    sys_places: Vec<u64>,
    sys_trans: Vec<u64>,
    objects: Vec<Vec<u64>>,
}

fn event_profiles(eos: &Eos) -> EventProfiles {
    // profile of one event: per synchronised net, the size of theta(N)
    let profile = |e: &EosEvent| -> Vec<(usize, u64)> {
        e.sync.iter().map(|(n, ts)| (n.0, ts.card())).collect()
    };
    let sys = eos.system();
    let mut place_sig: Vec<(usize, Vec<Vec<(usize, u64)>>)> = sys
        .places()
        .map(|p| (eos.type_of(p).0, Vec::new()))
        .collect();
    let mut trans_sig: Vec<Vec<Vec<(usize, u64)>>> = vec![Vec::new(); sys.trans_count()];
    let mut obj_sig: Vec<Vec<Vec<u32>>> = eos
        .nets()
        .iter()
        .map(|n| vec![Vec::new(); n.trans_count()])
        .collect();
    for e in eos.events() {
        match e.system {
            SysTrans::Transition(t) => trans_sig[t.0].push(profile(e)),
            SysTrans::Idle(p) => place_sig[p.0].1.push(profile(e)),
        }
        for (n, ts) in &e.sync {
            for (t, &c) in ts {
                obj_sig[n.0][t.0].push(c);
            }
        }
    }
    fn ids<K: Ord + Clone>(mut keys: Vec<K>, sort_inner: impl Fn(&mut K)) -> Vec<u64> {
        for k in keys.iter_mut() {
            sort_inner(k);
        }
        let distinct: BTreeMap<K, u64> = keys
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .zip(0..)
            .collect();
        keys.iter().map(|k| distinct[k]).collect()
    }
    EventProfiles {
        sys_places: ids(place_sig, |(_, v)| v.sort()),
        sys_trans: ids(trans_sig, |v| v.sort()),
        objects: obj_sig.into_iter().map(|s| ids(s, |v| v.sort())).collect(),
    }
}

/// The EOS-automorphism group, searching at most `cap` automorphisms per component
/// and materialising at most `cap` group elements.
pub fn eos_automorphisms(eos: &Eos, cap: usize) -> AutGroup {
    let prof = event_profiles(eos);
    let sys = pt_automorphisms_colored(
        eos.system(),
        Some(&prof.sys_places),
        Some(&prof.sys_trans),
        cap,
    );
    let objs: Vec<AutSearch> = eos
        .nets()
        .iter()
        .zip(&prof.objects)
        .map(|(n, colors)| pt_automorphisms_colored(n, None, Some(colors), cap))
        .collect();
    let mut truncated = sys.truncated || objs.iter().any(|s| s.truncated);

    let mut by_sys: HashMap<SysTrans, Vec<&EosEvent>> = HashMap::new();
    for e in eos.events() {
        by_sys.entry(e.system).or_default().push(e);
    }

    let mut elements = Vec::new();
    'sys: for s in &sys.auts {
        if elements.len() >= cap {
            truncated = true;
            break;
        }
        // Typing is part of the colouring, checked again here.
        if !eos
            .system()
            .places()
            .all(|p| eos.type_of(s.place(p)) == eos.type_of(p))
        {
            continue;
        }
        let mut partial = EosAutomorphism {
            system: s.clone(),
            objects: eos.nets().iter().map(PtAutomorphism::identity).collect(),
        };
        // Every event must have a candidate image system transition at all.
        for e in eos.events() {
            let img = partial.sys_trans(e.system);
            if !by_sys.contains_key(&img) {
                continue 'sys;
            }
        }
        let mut ctx = Combine {
            eos,
            objs: &objs,
            by_sys: &by_sys,
            cap,
            out: &mut elements,
            truncated: false,
        };
        ctx.extend(&mut partial, 1);
        truncated |= ctx.truncated;
    }

    let mut group = if truncated {
        let g = AutGroup::generated_by(eos, elements, cap);
        AutGroup {
            truncated: true,
            ..g
        }
    } else {
        elements.sort();
        let generators = minimal_generators(eos, &elements, cap);
        AutGroup {
            elements,
            generators,
            truncated: false,
        }
    };
    if group.elements.is_empty() {
        group.elements.push(EosAutomorphism::identity(eos));
    }
    group
}

struct Combine<'a, 'o> {
    eos: &'a Eos,
    objs: &'a [AutSearch],
    by_sys: &'a HashMap<SysTrans, Vec<&'a EosEvent>>,
    cap: usize,
    out: &'o mut Vec<EosAutomorphism>,
    truncated: bool,
}

impl Combine<'_, '_> {
    /// Events are checked on nets `1..=assigned` only.
    fn partial_ok(&self, aut: &EosAutomorphism, assigned: usize) -> bool {
        self.eos.events().iter().all(|e| {
            let img_sys = aut.sys_trans(e.system);
            let Some(cands) = self.by_sys.get(&img_sys) else {
                return false;
            };
            cands.iter().any(|c| {
                (1..=assigned).all(|n| {
                    let n = NetId(n);
                    c.theta(n) == aut.object(n).transitions_ms(&e.theta(n))
                })
            })
        })
    }

    fn extend(&mut self, aut: &mut EosAutomorphism, net: usize) {
        if self.truncated {
            return;
        }
        if net == self.objs.len() {
            if self.out.len() >= self.cap {
                self.truncated = true;
                return;
            }
            debug_assert!(is_eos_automorphism(self.eos, aut));
            self.out.push(aut.clone());
            return;
        }
        for cand in &self.objs[net].auts {
            aut.objects[net] = cand.clone();
            if self.partial_ok(aut, net) {
                self.extend(aut, net + 1);
            }
            if self.truncated {
                break;
            }
        }
        aut.objects[net] = PtAutomorphism::identity(&self.eos.nets()[net]);
    }
}

/// Cycle notation: system places, object places, system transitions, object
/// transitions, e.g. `(S1 S2)(p1 p2)(p3 p4)(move12 move21)(b c)`. The identity is `()`.
pub fn render_cycles(eos: &Eos, aut: &EosAutomorphism) -> String {
    let mut s = String::new();
    let mut push = |perm: &Perm, name: &dyn Fn(usize) -> String| {
        for cyc in perm.cycles() {
            s.push('(');
            let names: Vec<String> = cyc.iter().map(|&i| name(i)).collect();
            s.push_str(&names.join(" "));
            s.push(')');
        }
    };
    let sys = eos.system();
    push(&aut.system.places, &|i| sys.place_name(Place(i)).to_owned());
    for (n, a) in eos.nets().iter().zip(&aut.objects) {
        push(&a.places, &|i| n.place_name(Place(i)).to_owned());
    }
    push(&aut.system.transitions, &|i| sys.trans_name(Trans(i)).to_owned());
    for (n, a) in eos.nets().iter().zip(&aut.objects) {
        push(&a.transitions, &|i| n.trans_name(Trans(i)).to_owned());
    }
    if s.is_empty() {
        s.push_str("()");
    }
    s
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return f.write_str("()");
        }
        for c in cycles {
            let items: Vec<String> = c.iter().map(usize::to_string).collect();
            write!(f, "({})", items.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiset::Multiset;

    fn chain(n: usize) -> PtNet {
        let mut net = PtNet::new("chain");
        let ps: Vec<Place> = (0..n).map(|i| net.add_place(format!("c{i}")).unwrap()).collect();
        for i in 1..n {
            net.add_transition(
                format!("u{i}"),
                Multiset::singleton(ps[i - 1]),
                Multiset::singleton(ps[i]),
            )
            .unwrap();
        }
        net
    }

    #[test]
    fn perm_algebra() {
        let a = Perm(vec![1, 2, 0]);
        assert!(a.compose(&a.inverse()).is_identity());
        assert_eq!(a.cycles(), vec![vec![0, 1, 2]]);
        assert_eq!(a.to_string(), "(0 1 2)");
        assert_eq!(Perm::identity(3).to_string(), "()");
        assert!(!Perm(vec![0, 0]).is_bijection());
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn identity_is_always_an_automorphism() {
        let net = chain(4);
        assert!(check_pt_automorphism(&net, &PtAutomorphism::identity(&net)).unwrap());
    }

    #[test]
    fn degree_breaking_swap_is_rejected() {
        let net = chain(3);
        let cand = PtAutomorphism {
            places: Perm(vec![1, 0, 2]),
            transitions: Perm::identity(2),
        };
        assert!(!check_pt_automorphism(&net, &cand).unwrap());
        let bad = PtAutomorphism {
            places: Perm(vec![0, 0, 2]),
            transitions: Perm::identity(2),
        };
        assert_eq!(
            check_pt_automorphism(&net, &bad),
            Err(SymmetryError::NotBijective("places"))
        );
    }

    #[test]
    fn asymmetric_chain_has_trivial_group() {
        let s = pt_automorphisms(&chain(5), 100);
        assert_eq!(s.auts.len(), 1);
        assert!(s.auts[0].is_identity());
    }

    #[test]
    fn isolated_places_permute_freely() {
        let mut net = PtNet::new("iso");
        for i in 0..3 {
            net.add_place(format!("q{i}")).unwrap();
        }
        let s = pt_automorphisms(&net, 100);
        assert_eq!(s.auts.len(), 6);
        assert!(!s.truncated);
        let capped = pt_automorphisms(&net, 4);
        assert_eq!(capped.auts.len(), 4);
        assert!(capped.truncated);
    }

    #[test]
    fn parallel_transitions_permute() {
        let mut net = PtNet::new("par");
        let p = net.add_place("p").unwrap();
        for i in 0..3 {
            net.add_transition(format!("s{i}"), Multiset::singleton(p), Multiset::singleton(p))
                .unwrap();
        }
        assert_eq!(pt_automorphisms(&net, 100).auts.len(), 6);
    }
}
