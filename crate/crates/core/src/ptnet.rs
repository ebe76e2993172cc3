//! Place/transition nets.
//!
//! Nodes are interned in declaration order, so [`Place`] and [`Trans`] indices
//! double as the total node order used for canonical representatives.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::multiset::Multiset;

/// Index of a place within its net.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Place(pub usize);

/// Index of a transition within its net.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Trans(pub usize);

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p#{}", self.0)
    }
}

impl fmt::Display for Trans {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Place(Place),
    Trans(Trans),
}

/// A marking is a multiset of places.
pub type PtMarking = Multiset<Place>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("unknown node {0:?}")]
    UnknownNode(Node),
    #[error("duplicate node name `{0}`")]
    Duplicate(String),
    #[error("transition {transition} is not enabled (sequence index {index})")]
    NotEnabled { transition: String, index: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PtNet {
    name: String,
    places: Vec<String>,
    transitions: Vec<String>,
    pre: Vec<PtMarking>,
    post: Vec<PtMarking>,
}

/// Result of a bounded reachability search.
#[derive(Clone, Debug)]
pub struct Reachable {
    /// Markings in BFS discovery order.
    pub markings: Vec<PtMarking>,
    pub truncated: bool,
}

impl Reachable {
    pub fn as_set(&self) -> BTreeSet<PtMarking> {
        self.markings.iter().cloned().collect()
    }
}

impl PtNet {
    pub fn new(name: impl Into<String>) -> Self {
        PtNet {
            name: name.into(),
            places: Vec::new(),
            transitions: Vec::new(),
            pre: Vec::new(),
            post: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn add_place(&mut self, name: impl Into<String>) -> Result<Place, NetError> {
        let name = name.into();
        if self.has_name(&name) {
            return Err(NetError::Duplicate(name));
        }
        self.places.push(name);
        Ok(Place(self.places.len() - 1))
    }

    /// Adds a transition. Every place in `pre`/`post` must already be declared.
    pub fn add_transition(
        &mut self,
        name: impl Into<String>,
        pre: PtMarking,
        post: PtMarking,
    ) -> Result<Trans, NetError> {
        let name = name.into();
        if self.has_name(&name) {
            return Err(NetError::Duplicate(name));
        }
        for p in pre.support().chain(post.support()) {
            if p.0 >= self.places.len() {
                return Err(NetError::UnknownNode(Node::Place(*p)));
            }
        }
        self.transitions.push(name);
        self.pre.push(pre);
        self.post.push(post);
        Ok(Trans(self.transitions.len() - 1))
    }

    fn has_name(&self, name: &str) -> bool {
        self.places.iter().chain(&self.transitions).any(|n| n == name)
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn trans_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn places(&self) -> impl ExactSizeIterator<Item = Place> {
        (0..self.places.len()).map(Place)
    }

    pub fn transitions(&self) -> impl ExactSizeIterator<Item = Trans> {
        (0..self.transitions.len()).map(Trans)
    }

    pub fn place_name(&self, p: Place) -> &str {
        &self.places[p.0]
    }

    pub fn trans_name(&self, t: Trans) -> &str {
        &self.transitions[t.0]
    }

    pub fn place_by_name(&self, name: &str) -> Option<Place> {
        self.places.iter().position(|n| n == name).map(Place)
    }

    pub fn trans_by_name(&self, name: &str) -> Option<Trans> {
        self.transitions.iter().position(|n| n == name).map(Trans)
    }

    pub fn pre(&self, t: Trans) -> &PtMarking {
        &self.pre[t.0]
    }

    pub fn post(&self, t: Trans) -> &PtMarking {
        &self.post[t.0]
    }

    /// `pre` extended to transition multisets: `pre(t_1 + ... + t_n) = pre(t_1) + ... + pre(t_n)`.
    pub fn pre_of(&self, ts: &Multiset<Trans>) -> PtMarking {
        let mut out = PtMarking::new();
        for (t, &k) in ts {
            out += &self.pre(*t).scale(k);
        }
        out
    }

    pub fn post_of(&self, ts: &Multiset<Trans>) -> PtMarking {
        let mut out = PtMarking::new();
        for (t, &k) in ts {
            out += &self.post(*t).scale(k);
        }
        out
    }

    fn check_node(&self, x: Node) -> Result<(), NetError> {
        let ok = match x {
            Node::Place(p) => p.0 < self.places.len(),
            Node::Trans(t) => t.0 < self.transitions.len(),
        };
        if ok {
            Ok(())
        } else {
            Err(NetError::UnknownNode(x))
        }
    }

    /// `•x`: input places of a transition, input transitions of a place.
    pub fn preset(&self, x: Node) -> Result<BTreeSet<Node>, NetError> {
        self.check_node(x)?;
        Ok(match x {
            Node::Trans(t) => self.pre(t).support().map(|p| Node::Place(*p)).collect(),
            Node::Place(p) => self
                .transitions()
                .filter(|t| self.post(*t).contains(&p))
                .map(Node::Trans)
                .collect(),
        })
    }

    /// `x•`: output places of a transition, output transitions of a place.
    pub fn postset(&self, x: Node) -> Result<BTreeSet<Node>, NetError> {
        self.check_node(x)?;
        Ok(match x {
            Node::Trans(t) => self.post(t).support().map(|p| Node::Place(*p)).collect(),
            Node::Place(p) => self
                .transitions()
                .filter(|t| self.pre(*t).contains(&p))
                .map(Node::Trans)
                .collect(),
        })
    }

    pub fn is_enabled(&self, m: &PtMarking, t: Trans) -> Result<bool, NetError> {
        self.check_node(Node::Trans(t))?;
        Ok(self.pre(t).leq(m))
    }

    /// `m' = m - pre(t) + post(t)`.
    pub fn fire(&self, m: &PtMarking, t: Trans) -> Result<PtMarking, NetError> {
        self.fire_at(m, t, 0)
    }

    fn fire_at(&self, m: &PtMarking, t: Trans, index: usize) -> Result<PtMarking, NetError> {
        if !self.is_enabled(m, t)? {
            return Err(NetError::NotEnabled {
                transition: self.trans_name(t).to_owned(),
                index,
            });
        }
        Ok(&m.sub(self.pre(t)) + self.post(t))
    }

    pub fn fire_sequence(&self, m: &PtMarking, w: &[Trans]) -> Result<PtMarking, NetError> {
        w.iter()
            .enumerate()
            .try_fold(m.clone(), |cur, (i, &t)| self.fire_at(&cur, t, i))
    }

    pub fn enabled(&self, m: &PtMarking) -> impl Iterator<Item = Trans> + '_ {
        let m = m.clone();
        self.transitions().filter(move |t| self.pre(*t).leq(&m))
    }

    /// Breadth-first reachability from `m0`, stopping once `max_states` markings are known.
    pub fn reach(&self, m0: &PtMarking, max_states: usize) -> Reachable {
        let max_states = max_states.max(1);
        let mut seen: HashSet<PtMarking> = HashSet::new();
        let mut order = vec![m0.clone()];
        let mut queue = VecDeque::from([0usize]);
        seen.insert(m0.clone());
        let mut truncated = false;
        'outer: while let Some(i) = queue.pop_front() {
            let m = order[i].clone();
            for t in self.transitions() {
                if !self.pre(t).leq(&m) {
                    continue;
                }
                let next = &m.sub(self.pre(t)) + self.post(t);
                if seen.contains(&next) {
                    continue;
                }
                if order.len() >= max_states {
                    truncated = true;
                    break 'outer;
                }
                seen.insert(next.clone());
                order.push(next);
                queue.push_back(order.len() - 1);
            }
        }
        Reachable {
            markings: order,
            truncated,
        }
    }

    /// Renders a marking of this net as `a1+2'b1` (weights omitted when 1, `0` never
    /// written: the empty marking renders as the empty string).
    pub fn render_marking(&self, m: &PtMarking) -> String {
        let mut s = String::new();
        for (i, (p, &c)) in m.iter().enumerate() {
            if i > 0 {
                s.push('+');
            }
            if c != 1 {
                s.push_str(&format!("{c}'"));
            }
            s.push_str(self.place_name(*p));
        }
        s
    }
}

/// Builds a marking from `(place name, count)` pairs. Panics on unknown names;
/// intended for tests and fixtures.
pub fn marking_of(net: &PtNet, items: &[(&str, u32)]) -> PtMarking {
    items
        .iter()
        .map(|(n, c)| {
            let p = net
                .place_by_name(n)
                .unwrap_or_else(|| panic!("no place `{n}` in {}", net.name()));
            (p, *c)
        })
        .collect()
}
