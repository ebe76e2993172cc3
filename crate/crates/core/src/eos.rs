//! Elementary Object Systems.
//!
//! An [`Eos`] is a system net whose places carry net-tokens: marked copies of
//! typed object nets. Markings are [`NestedMarking`]s, events synchronise a
//! system transition (or an implicit idle transition) with multisets of object
//! transitions, and a firing consumes a nested sub-marking `lambda` and
//! produces `rho`, subject to the enabling predicate [`phi`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canonical::{marking_key, proj_key};
use crate::multiset::{sub_multisets_of_card, Multiset};
use crate::ptnet::{Node, Place, PtMarking, PtNet, Trans};

/// Index of an object net. Index 0 is always the black-token net `•`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NetId(pub usize);

/// The built-in black-token net: no places, no transitions.
pub const BLACK: NetId = NetId(0);

/// Name of the black-token net.
pub const BLACK_NAME: &str = "•";

/// The system half of an event: a system transition, or the idle transition
/// `id_p`, which has `p` as its only side condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SysTrans {
    Transition(Trans),
    Idle(Place),
}

/// An event `tau[theta]`. `sync` never stores an empty multiset, so events with
/// equal meaning are structurally equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EosEvent {
    pub system: SysTrans,
    pub sync: BTreeMap<NetId, Multiset<Trans>>,
}

impl EosEvent {
    pub fn new(system: SysTrans) -> Self {
        EosEvent {
            system,
            sync: BTreeMap::new(),
        }
    }

    pub fn with(mut self, net: NetId, ts: Multiset<Trans>) -> Self {
        self.set_sync(net, ts);
        self
    }

    pub fn set_sync(&mut self, net: NetId, ts: Multiset<Trans>) {
        if ts.is_empty() {
            self.sync.remove(&net);
        } else {
            self.sync.insert(net, ts);
        }
    }

    /// `theta(N)`, empty when the event does not synchronise with `N`.
    pub fn theta(&self, net: NetId) -> Multiset<Trans> {
        self.sync.get(&net).cloned().unwrap_or_default()
    }

    pub fn is_system_autonomous(&self) -> bool {
        matches!(self.system, SysTrans::Transition(_)) && self.sync.is_empty()
    }
}

/// A net-token `p[M]`: a system place together with the marking of its object net.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Token {
    pub place: Place,
    pub marking: PtMarking,
}

impl Token {
    pub fn new(place: Place, marking: PtMarking) -> Self {
        Token { place, marking }
    }

    pub fn black(place: Place) -> Self {
        Token::new(place, PtMarking::new())
    }
}

/// A nested marking `sum_k p_k[M_k]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NestedMarking(pub Multiset<Token>);

impl NestedMarking {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tokens<I: IntoIterator<Item = Token>>(tokens: I) -> Self {
        NestedMarking(tokens.into_iter().collect())
    }

    pub fn tokens(&self) -> &Multiset<Token> {
        &self.0
    }

    pub fn add_token(&mut self, token: Token, count: u32) {
        self.0.insert_n(token, count);
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of net-tokens.
    pub fn card(&self) -> u64 {
        self.0.card()
    }

    pub fn plus(&self, other: &NestedMarking) -> NestedMarking {
        NestedMarking(&self.0 + &other.0)
    }

    pub fn minus(&self, other: &NestedMarking) -> NestedMarking {
        NestedMarking(self.0.sub(&other.0))
    }

    /// Net-tokens residing on `p`, as a multiset of object markings.
    pub fn tokens_at(&self, p: Place) -> Multiset<PtMarking> {
        self.0
            .iter()
            .filter(|(t, _)| t.place == p)
            .map(|(t, &c)| (t.marking.clone(), c))
            .collect()
    }
}

/// A firing mode `(lambda, rho)`: the consumed and produced nested sub-markings.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub lambda: NestedMarking,
    pub rho: NestedMarking,
}

/// Channel inscriptions from which events can be generated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Labels {
    /// `l(t)(N)`: channels a system transition demands from object net `N`.
    pub system: BTreeMap<(Trans, NetId), Multiset<String>>,
    /// `l_N(t)`: the channel of an object transition, if labelled.
    pub object: BTreeMap<(NetId, Trans), String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EosError {
    #[error("unknown object net #{0}")]
    UnknownNet(usize),
    #[error("label-generated event candidates exceed the cap of {cap}")]
    LabelBlowup { cap: usize },
    #[error("the model has no channel labels")]
    NoLabels,
    #[error("event not enabled: {0}")]
    NotEnabled(Clause),
}

/// The condition that made a firing attempt fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    /// `lambda` is not a sub-marking of the current marking.
    NotSubMarking,
    /// `Pi1(lambda) != pre(tau)`.
    SystemPre,
    /// `Pi1(rho) != post(tau)`.
    SystemPost,
    /// `Pi2_N(lambda)` does not cover `pre_N(theta(N))`.
    ObjectEnabling(NetId),
    /// `Pi2_N(rho)` differs from the object marking distribution target.
    Distribution(NetId),
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Clause::NotSubMarking => write!(f, "lambda is not a sub-marking of the marking"),
            Clause::SystemPre => write!(f, "Pi1(lambda) differs from pre(tau)"),
            Clause::SystemPost => write!(f, "Pi1(rho) differs from post(tau)"),
            Clause::ObjectEnabling(n) => write!(f, "object net #{} is not enabled", n.0),
            Clause::Distribution(n) => {
                write!(f, "object marking distribution violated for net #{}", n.0)
            }
        }
    }
}

/// A structural problem found by [`Eos::validate`] or [`Eos::validate_marking`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Issue {
    TypingIncomplete { expected: usize, found: usize },
    UnknownObjectNet { place: String, net: usize },
    NodeNameClash { name: String },
    NetNameClash { name: String },
    UnknownSystemNode { event: usize },
    UnknownSyncNet { event: usize, net: usize },
    UnknownObjectTransition { event: usize, net: String, trans: usize },
    SyncWithBlackNet { event: usize },
    IdleTypeMismatch { event: usize, place: String },
    DuplicateEvent { event: usize },
    UnknownMarkingPlace { place: usize },
    TokenTypeMismatch { place: String },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::TypingIncomplete { expected, found } => {
                write!(f, "typing covers {found} of {expected} system places")
            }
            Issue::UnknownObjectNet { place, net } => {
                write!(f, "place `{place}` is typed by unknown object net #{net}")
            }
            Issue::NodeNameClash { name } => {
                write!(f, "node name `{name}` is used in more than one net")
            }
            Issue::NetNameClash { name } => write!(f, "net name `{name}` is used twice"),
            Issue::UnknownSystemNode { event } => {
                write!(f, "event #{event} references an unknown system node")
            }
            Issue::UnknownSyncNet { event, net } => {
                write!(f, "event #{event} synchronises with unknown net #{net}")
            }
            Issue::UnknownObjectTransition { event, net, trans } => write!(
                f,
                "event #{event} references unknown transition #{trans} of `{net}`"
            ),
            Issue::SyncWithBlackNet { event } => {
                write!(f, "event #{event} synchronises with the black-token net")
            }
            Issue::IdleTypeMismatch { event, place } => write!(
                f,
                "idle event #{event} on `{place}` must synchronise exactly with the type of `{place}`"
            ),
            Issue::DuplicateEvent { event } => write!(f, "event #{event} is declared twice"),
            Issue::UnknownMarkingPlace { place } => {
                write!(f, "marking uses unknown system place #{place}")
            }
            Issue::TokenTypeMismatch { place } => write!(
                f,
                "net-token on `{place}` is not a marking of the place's object net"
            ),
        }
    }
}

/// Bounds on mode enumeration for a single event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeCaps {
    pub max_lambda: usize,
    pub max_distributions: usize,
    /// Keep one mode per projection-equivalence class of `(lambda, rho)`.
    pub proj_modes: bool,
}

impl Default for ModeCaps {
    fn default() -> Self {
        ModeCaps {
            max_lambda: 10_000,
            max_distributions: 10_000,
            proj_modes: false,
        }
    }
}

/// Result of [`enumerate_modes`].
#[derive(Clone, Debug, Default)]
pub struct ModeSet {
    pub modes: Vec<Mode>,
    pub truncated: bool,
}

/// Result of [`enabled_events`].
#[derive(Clone, Debug, Default)]
pub struct Firings {
    pub firings: Vec<(EosEvent, Mode)>,
    pub truncated: bool,
}

/// Default cap on label-generated event candidates.
pub const DEFAULT_LABEL_CAP: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Eos {
    system: PtNet,
    nets: Vec<PtNet>,
    typing: Vec<NetId>,
    events: Vec<EosEvent>,
    labels: Option<Labels>,
}

impl Eos {
    /// Creates a system with every place typed by `•` and no events.
    /// `object_nets` are numbered from 1; the black-token net takes index 0.
    pub fn new(system: PtNet, object_nets: Vec<PtNet>) -> Self {
        let mut nets = Vec::with_capacity(object_nets.len() + 1);
        nets.push(PtNet::new(BLACK_NAME));
        nets.extend(object_nets);
        let typing = vec![BLACK; system.place_count()];
        Eos {
            system,
            nets,
            typing,
            events: Vec::new(),
            labels: None,
        }
    }

    pub fn system(&self) -> &PtNet {
        &self.system
    }

    /// All nets, the black-token net first.
    pub fn nets(&self) -> &[PtNet] {
        &self.nets
    }

    pub fn net_ids(&self) -> impl ExactSizeIterator<Item = NetId> {
        (0..self.nets.len()).map(NetId)
    }

    pub fn net(&self, id: NetId) -> Result<&PtNet, EosError> {
        self.nets.get(id.0).ok_or(EosError::UnknownNet(id.0))
    }

    pub fn net_by_name(&self, name: &str) -> Option<NetId> {
        if name == "dot" || name == BLACK_NAME {
            return Some(BLACK);
        }
        self.nets.iter().position(|n| n.name() == name).map(NetId)
    }

    pub fn typing(&self) -> &[NetId] {
        &self.typing
    }

    /// `d(p)`.
    pub fn type_of(&self, p: Place) -> NetId {
        self.typing.get(p.0).copied().unwrap_or(BLACK)
    }

    pub fn set_type(&mut self, p: Place, net: NetId) {
        if p.0 >= self.typing.len() {
            self.typing.resize(p.0 + 1, BLACK);
        }
        self.typing[p.0] = net;
    }

    /// Events in their canonical (sorted, duplicate-free) order.
    pub fn events(&self) -> &[EosEvent] {
        &self.events
    }

    pub fn set_events(&mut self, mut events: Vec<EosEvent>) {
        events.sort();
        events.dedup();
        self.events = events;
    }

    /// Replaces the events without normalising them. Used to keep faulty input
    /// observable by [`Eos::validate`].
    pub fn set_events_raw(&mut self, events: Vec<EosEvent>) {
        self.events = events;
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    pub fn set_labels(&mut self, labels: Labels) {
        self.labels = Some(labels);
    }

    pub fn contains_event(&self, e: &EosEvent) -> bool {
        self.events.binary_search(e).is_ok()
    }

    /// `pre(tau)`; `pre(id_p) = p`.
    pub fn sys_pre(&self, s: SysTrans) -> PtMarking {
        match s {
            SysTrans::Transition(t) => self.system.pre(t).clone(),
            SysTrans::Idle(p) => PtMarking::singleton(p),
        }
    }

    /// `post(tau)`; `post(id_p) = p`.
    pub fn sys_post(&self, s: SysTrans) -> PtMarking {
        match s {
            SysTrans::Transition(t) => self.system.post(t).clone(),
            SysTrans::Idle(p) => PtMarking::singleton(p),
        }
    }

    /// Checks the structural invariants. An empty list means the system is well formed.
    pub fn validate(&self) -> Vec<Issue> {
        let mut issues = Vec::new();
        let sys = &self.system;
        if self.typing.len() != sys.place_count() {
            issues.push(Issue::TypingIncomplete {
                expected: sys.place_count(),
                found: self.typing.len(),
            });
        }
        for p in sys.places() {
            let d = self.type_of(p);
            if d.0 >= self.nets.len() {
                issues.push(Issue::UnknownObjectNet {
                    place: sys.place_name(p).to_owned(),
                    net: d.0,
                });
            }
        }

        let mut net_names = HashSet::new();
        for n in std::iter::once(sys).chain(&self.nets) {
            if !net_names.insert(n.name()) {
                issues.push(Issue::NetNameClash {
                    name: n.name().to_owned(),
                });
            }
        }
        let mut node_names: HashSet<&str> = HashSet::new();
        let mut reported = BTreeSet::new();
        for n in std::iter::once(sys).chain(&self.nets) {
            let names = n
                .places()
                .map(|p| n.place_name(p))
                .chain(n.transitions().map(|t| n.trans_name(t)));
            for name in names {
                if !node_names.insert(name) && reported.insert(name) {
                    issues.push(Issue::NodeNameClash {
                        name: name.to_owned(),
                    });
                }
            }
        }

        let mut seen = HashSet::new();
        for (i, e) in self.events.iter().enumerate() {
            if !seen.insert(e) {
                issues.push(Issue::DuplicateEvent { event: i });
            }
            let node_ok = match e.system {
                SysTrans::Transition(t) => t.0 < sys.trans_count(),
                SysTrans::Idle(p) => p.0 < sys.place_count(),
            };
            if !node_ok {
                issues.push(Issue::UnknownSystemNode { event: i });
                continue;
            }
            let mut sync_ok = true;
            for (net, ts) in &e.sync {
                let Some(n) = self.nets.get(net.0) else {
                    issues.push(Issue::UnknownSyncNet {
                        event: i,
                        net: net.0,
                    });
                    sync_ok = false;
                    continue;
                };
                if *net == BLACK {
                    issues.push(Issue::SyncWithBlackNet { event: i });
                    sync_ok = false;
                }
                for t in ts.support() {
                    if t.0 >= n.trans_count() {
                        issues.push(Issue::UnknownObjectTransition {
                            event: i,
                            net: n.name().to_owned(),
                            trans: t.0,
                        });
                        sync_ok = false;
                    }
                }
            }
            if let (SysTrans::Idle(p), true) = (e.system, sync_ok) {
                let d = self.type_of(p);
                let ok = e.sync.keys().all(|n| *n == d) && e.sync.contains_key(&d);
                if !ok {
                    issues.push(Issue::IdleTypeMismatch {
                        event: i,
                        place: sys.place_name(p).to_owned(),
                    });
                }
            }
        }
        issues
    }

    /// Checks that every net-token fits the typing: `mu` lies in the set of
    /// syntactically consistent markings.
    pub fn validate_marking(&self, mu: &NestedMarking) -> Vec<Issue> {
        let mut issues = Vec::new();
        for (tok, _) in mu.tokens() {
            if tok.place.0 >= self.system.place_count() {
                issues.push(Issue::UnknownMarkingPlace { place: tok.place.0 });
                continue;
            }
            let places = self
                .nets
                .get(self.type_of(tok.place).0)
                .map_or(0, |n| n.place_count());
            if tok.marking.support().any(|q| q.0 >= places) {
                issues.push(Issue::TokenTypeMismatch {
                    place: self.system.place_name(tok.place).to_owned(),
                });
            }
        }
        issues
    }

    /// Conservative typing: `d(•t) ∪ {•} ⊆ d(t•) ∪ {•}` for every system transition.
    pub fn is_conservative(&self) -> bool {
        self.system.transitions().all(|t| {
            let types = |x: Result<BTreeSet<Node>, _>| -> BTreeSet<NetId> {
                x.unwrap_or_default()
                    .into_iter()
                    .filter_map(|n| match n {
                        Node::Place(p) => Some(self.type_of(p)),
                        Node::Trans(_) => None,
                    })
                    .chain(std::iter::once(BLACK))
                    .collect()
            };
            let pre = types(self.system.preset(Node::Trans(t)));
            let post = types(self.system.postset(Node::Trans(t)));
            pre.is_subset(&post)
        })
    }

    /// Only black-token places.
    pub fn is_pt_like(&self) -> bool {
        self.typing.iter().all(|d| *d == BLACK)
    }

    /// Renders an event as `t[N1:t1,N2:t2]`, `t[]` or `id@p[N:t]`.
    pub fn render_event(&self, e: &EosEvent) -> String {
        let mut s = match e.system {
            SysTrans::Transition(t) => self.system.trans_name(t).to_owned(),
            SysTrans::Idle(p) => format!("id@{}", self.system.place_name(p)),
        };
        s.push('[');
        for (i, (net, ts)) in e.sync.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let n = &self.nets[net.0];
            s.push_str(n.name());
            s.push(':');
            for (j, (t, &c)) in ts.iter().enumerate() {
                if j > 0 {
                    s.push('+');
                }
                if c != 1 {
                    s.push_str(&format!("{c}'"));
                }
                s.push_str(n.trans_name(*t));
            }
        }
        s.push(']');
        s
    }

    /// Renders a nested marking as `1'p1[] + 1'p4[a1+2'b1]`; the empty marking is `0`.
    pub fn render_marking(&self, mu: &NestedMarking) -> String {
        mu.tokens()
            .display_with(|tok, f| {
                let net = &self.nets[self.type_of(tok.place).0];
                write!(
                    f,
                    "{}[{}]",
                    self.system.place_name(tok.place),
                    net.render_marking(&tok.marking)
                )
            })
            .to_string()
    }

    /// Looks up an event by its rendering (whitespace-insensitive) or, when
    /// unambiguous, by the name of its system transition.
    pub fn find_event(&self, label: &str) -> Option<&EosEvent> {
        let want: String = label.chars().filter(|c| !c.is_whitespace()).collect();
        if let Some(e) = self.events.iter().find(|e| self.render_event(e) == want) {
            return Some(e);
        }
        let mut by_name = self.events.iter().filter(|e| {
            let name = match e.system {
                SysTrans::Transition(t) => self.system.trans_name(t).to_owned(),
                SysTrans::Idle(p) => format!("id@{}", self.system.place_name(p)),
            };
            name == want
        });
        match (by_name.next(), by_name.next()) {
            (Some(e), None) => Some(e),
            _ => None,
        }
    }
}

/// `Pi1`: the system places of all net-tokens.
pub fn pi1(mu: &NestedMarking) -> PtMarking {
    mu.tokens().map_hom(|t| t.place)
}

/// `Pi2_N`: the sum of the markings of all net-tokens of type `N`.
pub fn pi2(eos: &Eos, mu: &NestedMarking, net: NetId) -> Result<PtMarking, EosError> {
    eos.net(net)?;
    let mut out = PtMarking::new();
    for (tok, &c) in mu.tokens() {
        if eos.type_of(tok.place) == net {
            out += &tok.marking.scale(c);
        }
    }
    Ok(out)
}

/// `Pi2_N` for every net at once, indexed by [`NetId`].
pub fn pi2_all(eos: &Eos, mu: &NestedMarking) -> Vec<PtMarking> {
    let mut out = vec![PtMarking::new(); eos.nets().len()];
    for (tok, &c) in mu.tokens() {
        let d = eos.type_of(tok.place);
        if let Some(slot) = out.get_mut(d.0) {
            *slot += &tok.marking.scale(c);
        }
    }
    out
}

/// The order `a ⊑ b`: `b = a + mu` for some nested marking `mu`.
pub fn nested_leq(a: &NestedMarking, b: &NestedMarking) -> bool {
    a.tokens().leq(b.tokens())
}

/// Witness of `alpha ≼ beta`: `map[i]` is the index in `beta`'s formal sum that the
/// `i`-th net-token of `alpha`'s formal sum is sent to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Injection {
    pub map: Vec<usize>,
}

impl Injection {
    /// The sub-marking of `beta` selected by the injection.
    pub fn image(&self, beta: &NestedMarking) -> NestedMarking {
        let tokens: Vec<&Token> = beta.tokens().formal_sum().collect();
        NestedMarking::from_tokens(self.map.iter().map(|&j| tokens[j].clone()))
    }
}

/// The liberal order `alpha ≼ beta`: an injection of net-tokens preserving places
/// and growing object markings. Returns a witness when one exists.
pub fn liberal_leq(alpha: &NestedMarking, beta: &NestedMarking) -> Option<Injection> {
    let a: Vec<&Token> = alpha.tokens().formal_sum().collect();
    let b: Vec<&Token> = beta.tokens().formal_sum().collect();
    if a.len() > b.len() {
        return None;
    }
    let adj: Vec<Vec<usize>> = a
        .iter()
        .map(|x| {
            (0..b.len())
                .filter(|&j| b[j].place == x.place && x.marking.leq(&b[j].marking))
                .collect()
        })
        .collect();
    // Kuhn's augmenting paths.
    let mut owner: Vec<Option<usize>> = vec![None; b.len()];
    fn augment(
        i: usize,
        adj: &[Vec<usize>],
        owner: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        for &j in &adj[i] {
            if visited[j] {
                continue;
            }
            visited[j] = true;
            if owner[j].is_none_or(|k| augment(k, adj, owner, visited)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    for i in 0..a.len() {
        let mut visited = vec![false; b.len()];
        if !augment(i, &adj, &mut owner, &mut visited) {
            return None;
        }
    }
    let mut map = vec![0; a.len()];
    for (j, o) in owner.iter().enumerate() {
        if let Some(i) = o {
            map[*i] = j;
        }
    }
    Some(Injection { map })
}

/// The enabling predicate, reporting the first violated clause.
pub fn check_phi(
    eos: &Eos,
    event: &EosEvent,
    lambda: &NestedMarking,
    rho: &NestedMarking,
) -> Result<(), Clause> {
    if pi1(lambda) != eos.sys_pre(event.system) {
        return Err(Clause::SystemPre);
    }
    if pi1(rho) != eos.sys_post(event.system) {
        return Err(Clause::SystemPost);
    }
    let pl = pi2_all(eos, lambda);
    let pr = pi2_all(eos, rho);
    for net in eos.net_ids() {
        let theta = event.theta(net);
        let n = &eos.nets()[net.0];
        let pre = n.pre_of(&theta);
        if !pre.leq(&pl[net.0]) {
            return Err(Clause::ObjectEnabling(net));
        }
        let target = &pl[net.0].sub(&pre) + &n.post_of(&theta);
        if pr[net.0] != target {
            return Err(Clause::Distribution(net));
        }
    }
    Ok(())
}

/// `phi(tau[theta], lambda, rho)`.
pub fn phi(eos: &Eos, event: &EosEvent, lambda: &NestedMarking, rho: &NestedMarking) -> bool {
    check_phi(eos, event, lambda, rho).is_ok()
}

/// Fires `event` in `mode`: `mu' = mu - lambda + rho`.
pub fn fire(
    eos: &Eos,
    mu: &NestedMarking,
    event: &EosEvent,
    mode: &Mode,
) -> Result<NestedMarking, EosError> {
    if !nested_leq(&mode.lambda, mu) {
        return Err(EosError::NotEnabled(Clause::NotSubMarking));
    }
    check_phi(eos, event, &mode.lambda, &mode.rho).map_err(EosError::NotEnabled)?;
    Ok(mu.minus(&mode.lambda).plus(&mode.rho))
}

/// All weak compositions of `total` into `parts` ordered parts.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(parts);
    fn rec(left: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() + 1 == parts {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in (0..=left).rev() {
            cur.push(k);
            rec(left - k, parts, cur, out);
            cur.pop();
        }
    }
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(total, parts, &mut cur, &mut out);
    out
}

/// Every way to distribute the object marking `target` over `slots` net-tokens
/// on the given places, deduplicated as nested multisets. `budget` counts raw
/// ordered splits; exceeding it sets the returned flag.
fn distributions(
    slots: &[Place],
    target: &PtMarking,
    budget: &mut usize,
) -> (Vec<NestedMarking>, bool) {
    if slots.is_empty() {
        return if target.is_empty() {
            (vec![NestedMarking::new()], false)
        } else {
            (Vec::new(), false)
        };
    }
    // Per object place, the ways to split its count across slots.
    let per_place: Vec<(Place, Vec<Vec<u32>>)> = target
        .iter()
        .map(|(q, &c)| (*q, compositions(c, slots.len())))
        .collect();
    let mut out = BTreeSet::new();
    let mut truncated = false;
    let mut idx = vec![0usize; per_place.len()];
    'outer: loop {
        if *budget == 0 {
            truncated = true;
            break;
        }
        *budget -= 1;
        let mut markings = vec![PtMarking::new(); slots.len()];
        for (k, (q, comps)) in per_place.iter().enumerate() {
            for (s, &c) in comps[idx[k]].iter().enumerate() {
                markings[s].insert_n(*q, c);
            }
        }
        out.insert(NestedMarking::from_tokens(
            slots
                .iter()
                .zip(markings)
                .map(|(p, m)| Token::new(*p, m)),
        ));
        // Odometer increment.
        for k in (0..per_place.len()).rev() {
            idx[k] += 1;
            if idx[k] < per_place[k].1.len() {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    (out.into_iter().collect(), truncated)
}

fn cartesian<T: Clone>(
    factors: &[Vec<T>],
    cap: usize,
    mut combine: impl FnMut(&[&T]) -> T,
) -> (Vec<T>, bool) {
    if factors.iter().any(|f| f.is_empty()) {
        return (Vec::new(), false);
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; factors.len()];
    loop {
        if out.len() >= cap {
            return (out, true);
        }
        let picked: Vec<&T> = factors.iter().zip(&idx).map(|(f, &i)| &f[i]).collect();
        out.push(combine(&picked));
        let mut k = factors.len();
        loop {
            if k == 0 {
                return (out, false);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < factors[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// All modes `(lambda, rho)` with `lambda ⊑ mu` that satisfy the enabling
/// predicate for `event`, in marking-key order.
///
/// `lambda` picks, for each place in `pre(tau)`, that many net-tokens from `mu`;
/// `rho` ranges over every distribution of the resulting object markings onto the
/// net-tokens produced in `post(tau)`.
pub fn enumerate_modes(eos: &Eos, mu: &NestedMarking, event: &EosEvent, caps: ModeCaps) -> ModeSet {
    let pre = eos.sys_pre(event.system);
    let post = eos.sys_post(event.system);
    let mut truncated = false;

    if !pre.leq(&pi1(mu)) {
        return ModeSet::default();
    }
    let per_place: Vec<Vec<NestedMarking>> = pre
        .iter()
        .map(|(p, &k)| {
            sub_multisets_of_card(&mu.tokens_at(*p), k as u64)
                .into_iter()
                .map(|ms| {
                    NestedMarking(
                        ms.iter()
                            .map(|(m, &c)| (Token::new(*p, m.clone()), c))
                            .collect(),
                    )
                })
                .collect()
        })
        .collect();
    let (lambdas, lambda_cut) = cartesian(&per_place, caps.max_lambda, |parts| {
        parts
            .iter()
            .fold(NestedMarking::new(), |acc, m| acc.plus(m))
    });
    truncated |= lambda_cut;

    // Post places grouped by object-net type, one slot per produced net-token.
    let mut slots: BTreeMap<NetId, Vec<Place>> = BTreeMap::new();
    for (p, &c) in &post {
        let d = eos.type_of(*p);
        slots
            .entry(d)
            .or_default()
            .extend(std::iter::repeat_n(*p, c as usize));
    }
    let pre_n: Vec<PtMarking> = eos
        .net_ids()
        .map(|n| eos.nets()[n.0].pre_of(&event.theta(n)))
        .collect();
    let post_n: Vec<PtMarking> = eos
        .net_ids()
        .map(|n| eos.nets()[n.0].post_of(&event.theta(n)))
        .collect();

    let mut budget = caps.max_distributions;
    let mut modes = Vec::new();
    'lambda: for lambda in lambdas {
        let proj = pi2_all(eos, &lambda);
        let mut factors = Vec::new();
        for net in eos.net_ids() {
            if !pre_n[net.0].leq(&proj[net.0]) {
                continue 'lambda;
            }
            let target = &proj[net.0].sub(&pre_n[net.0]) + &post_n[net.0];
            let empty = Vec::new();
            let net_slots = slots.get(&net).unwrap_or(&empty);
            let (dists, cut) = distributions(net_slots, &target, &mut budget);
            truncated |= cut;
            if dists.is_empty() {
                continue 'lambda;
            }
            factors.push(dists);
        }
        let (rhos, cut) = cartesian(&factors, usize::MAX, |parts| {
            parts
                .iter()
                .fold(NestedMarking::new(), |acc, m| acc.plus(m))
        });
        truncated |= cut;
        for rho in rhos {
            debug_assert!(phi(eos, event, &lambda, &rho));
            modes.push(Mode {
                lambda: lambda.clone(),
                rho,
            });
        }
        if truncated && budget == 0 {
            break;
        }
    }

    let mut keyed: Vec<_> = modes
        .into_iter()
        .map(|m| ((marking_key(eos, &m.lambda), marking_key(eos, &m.rho)), m))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    let mut modes: Vec<Mode> = keyed.into_iter().map(|(_, m)| m).collect();
    if caps.proj_modes {
        let mut seen = HashSet::new();
        modes.retain(|m| seen.insert((proj_key(eos, &m.lambda), proj_key(eos, &m.rho))));
    }
    ModeSet { modes, truncated }
}

/// Every enabled `(event, mode)` pair in `mu`, events in their declared order.
pub fn enabled_events(eos: &Eos, mu: &NestedMarking, caps: ModeCaps) -> Firings {
    let mut out = Firings::default();
    for e in eos.events() {
        let set = enumerate_modes(eos, mu, e, caps);
        out.truncated |= set.truncated;
        out.firings
            .extend(set.modes.into_iter().map(|m| (e.clone(), m)));
    }
    out
}

/// Generates events from channel inscriptions.
///
/// For each system transition `t`, `theta(N)` ranges over transition multisets of
/// `N` whose channels add up to `l(t)(N)`; a transition without inscriptions yields
/// the system-autonomous event `t[0]`. Every typed place `p` also gets idle events
/// `id_p[d(p) -> theta]` for each non-empty multiset `theta` of unlabelled
/// transitions of `d(p)` with `|theta| <= max_sync`. Synchronisations demanding
/// more than `max_sync` transitions from one net are not generated.
pub fn events_from_labels(eos: &Eos, max_sync: u32, cap: usize) -> Result<Vec<EosEvent>, EosError> {
    let labels = eos.labels().ok_or(EosError::NoLabels)?;
    let mut events = Vec::new();
    let mut budget = cap;
    let mut take = |n: usize| -> Result<(), EosError> {
        if n > budget {
            return Err(EosError::LabelBlowup { cap });
        }
        budget -= n;
        Ok(())
    };

    for t in eos.system().transitions() {
        let mut factors: Vec<Vec<(NetId, Multiset<Trans>)>> = Vec::new();
        let mut feasible = true;
        for net in eos.net_ids().skip(1) {
            let Some(demand) = labels.system.get(&(t, net)) else {
                continue;
            };
            if demand.is_empty() {
                continue;
            }
            if demand.card() > max_sync as u64 {
                feasible = false;
                break;
            }
            // Per channel: multisets of same-channel transitions of the demanded size.
            let mut per_channel: Vec<Vec<Multiset<Trans>>> = Vec::new();
            for (ch, &k) in demand {
                let carriers: Multiset<Trans> = eos.nets()[net.0]
                    .transitions()
                    .filter(|ot| labels.object.get(&(net, *ot)) == Some(ch))
                    .map(|ot| (ot, k))
                    .collect();
                let choices = sub_multisets_of_card(&carriers, k as u64);
                take(choices.len())?;
                per_channel.push(choices);
            }
            let (thetas, _) = cartesian(&per_channel, usize::MAX, |parts| {
                parts.iter().fold(Multiset::new(), |acc, m| &acc + *m)
            });
            if thetas.is_empty() {
                feasible = false;
                break;
            }
            factors.push(thetas.into_iter().map(|th| (net, th)).collect());
        }
        if !feasible {
            continue;
        }
        if factors.is_empty() {
            take(1)?;
            events.push(EosEvent::new(SysTrans::Transition(t)));
            continue;
        }
        let mut idx = vec![0usize; factors.len()];
        loop {
            take(1)?;
            let mut e = EosEvent::new(SysTrans::Transition(t));
            for (f, &i) in factors.iter().zip(&idx) {
                let (net, th) = &f[i];
                e.set_sync(*net, th.clone());
            }
            events.push(e);
            let mut k = factors.len();
            let done = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < factors[k].len() {
                    break false;
                }
                idx[k] = 0;
            };
            if done {
                break;
            }
        }
    }

    for p in eos.system().places() {
        let d = eos.type_of(p);
        if d == BLACK {
            continue;
        }
        let net = eos.net(d)?;
        let free: Multiset<Trans> = net
            .transitions()
            .filter(|ot| !labels.object.contains_key(&(d, *ot)))
            .map(|ot| (ot, max_sync))
            .collect();
        for k in 1..=max_sync as u64 {
            let thetas = sub_multisets_of_card(&free, k);
            take(thetas.len())?;
            events.extend(
                thetas
                    .into_iter()
                    .map(|th| EosEvent::new(SysTrans::Idle(p)).with(d, th)),
            );
        }
    }
    events.sort();
    events.dedup();
    Ok(events)
}
