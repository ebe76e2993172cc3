//! Fixtures and brute-force oracles shared by the integration tests.
//!
//! The oracles deliberately avoid the library's search code: they enumerate
//! candidates exhaustively and filter by the defining conditions.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use eosym_core::eos::{Eos, EosEvent, Mode, NestedMarking, NetId, SysTrans, Token};
use eosym_core::model::{parse, ModelDocument};
use eosym_core::multiset::Multiset;
use eosym_core::ptnet::{Place, PtMarking, PtNet, Trans};
use eosym_core::random::{random_model, Envelope};
use eosym_core::symmetry::{EosAutomorphism, Perm, PtAutomorphism};

pub const FIXTURES: [&str; 3] = ["eos-s8.eos", "kitchen.eos", "kitchen-idle.eos"];

pub fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

pub fn load(name: &str) -> ModelDocument {
    let path = models_dir().join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse(&text).unwrap_or_else(|e| panic!("{name}:\n{e}"))
}

pub fn all_fixtures() -> Vec<(String, ModelDocument)> {
    FIXTURES.iter().map(|n| (n.to_string(), load(n))).collect()
}

pub fn random_models(count: usize) -> Vec<(u64, Eos, NestedMarking)> {
    let env = Envelope::default();
    (0..count as u64)
        .map(|seed| {
            let (eos, mu) = random_model(seed, &env);
            (seed, eos, mu)
        })
        .collect()
}

/// Builds a marking from `(place, [(object place, count)])` pairs.
pub fn marking(eos: &Eos, tokens: &[(&str, &[(&str, u32)])]) -> NestedMarking {
    let mut mu = NestedMarking::new();
    for (p, m) in tokens {
        let place = eos.system().place_by_name(p).expect("system place");
        let net = &eos.nets()[eos.type_of(place).0];
        let mut inner = PtMarking::new();
        for (q, k) in *m {
            inner.insert_n(net.place_by_name(q).expect("object place"), *k);
        }
        mu.add_token(Token::new(place, inner), 1);
    }
    mu
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for i in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(i, n - 1);
            out.push(p);
        }
    }
    out
}

fn image(sigma: &[usize], m: &PtMarking) -> PtMarking {
    m.iter().map(|(p, &k)| (Place(sigma[p.0]), k)).collect()
}

/// Every pair of place and transition permutations satisfying the arc condition.
/// Exponential in both node counts; meant for nets of at most seven nodes.
pub fn naive_pt_automorphisms(net: &PtNet) -> BTreeSet<PtAutomorphism> {
    let mut out = BTreeSet::new();
    let tperms = permutations(net.trans_count());
    for sigma in permutations(net.place_count()) {
        for tau in &tperms {
            let ok = net.transitions().all(|t| {
                let u = Trans(tau[t.0]);
                net.pre(u) == &image(&sigma, net.pre(t)) && net.post(u) == &image(&sigma, net.post(t))
            });
            if ok {
                out.insert(PtAutomorphism {
                    places: Perm(sigma.clone()),
                    transitions: Perm(tau.clone()),
                });
            }
        }
    }
    out
}

/// All automorphisms: every place permutation, then every bijection of transitions
/// onto transitions with the permuted arcs. Exhaustive, and cheaper than
/// [`naive_pt_automorphisms`] when there are many parallel transitions.
pub fn brute_pt_automorphisms(net: &PtNet) -> BTreeSet<PtAutomorphism> {
    let mut out = BTreeSet::new();
    let n = net.trans_count();
    for sigma in permutations(net.place_count()) {
        let cands: Vec<Vec<usize>> = net
            .transitions()
            .map(|t| {
                let pre = image(&sigma, net.pre(t));
                let post = image(&sigma, net.post(t));
                net.transitions()
                    .filter(|u| net.pre(*u) == &pre && net.post(*u) == &post)
                    .map(|u| u.0)
                    .collect()
            })
            .collect();
        let mut tau = vec![usize::MAX; n];
        let mut used = vec![false; n];
        bijections(0, &cands, &mut tau, &mut used, &mut |tau| {
            out.insert(PtAutomorphism {
                places: Perm(sigma.clone()),
                transitions: Perm(tau.to_vec()),
            });
        });
    }
    out
}

fn bijections(
    i: usize,
    cands: &[Vec<usize>],
    tau: &mut Vec<usize>,
    used: &mut Vec<bool>,
    emit: &mut dyn FnMut(&[usize]),
) {
    if i == cands.len() {
        emit(tau);
        return;
    }
    for &u in &cands[i] {
        if !used[u] {
            used[u] = true;
            tau[i] = u;
            bijections(i + 1, cands, tau, used, emit);
            used[u] = false;
        }
    }
}

/// The product of all component automorphism sets, filtered by typing and event
/// preservation (with an injective event map).
pub fn brute_eos_automorphisms(eos: &Eos) -> BTreeSet<EosAutomorphism> {
    let sys: Vec<PtAutomorphism> = brute_pt_automorphisms(eos.system()).into_iter().collect();
    let objs: Vec<Vec<PtAutomorphism>> = eos
        .nets()
        .iter()
        .map(|n| brute_pt_automorphisms(n).into_iter().collect())
        .collect();
    let events: BTreeSet<&EosEvent> = eos.events().iter().collect();
    let mut out = BTreeSet::new();
    for s in &sys {
        let typing_ok = eos
            .system()
            .places()
            .all(|p| eos.type_of(Place(s.places.0[p.0])) == eos.type_of(p));
        if !typing_ok {
            continue;
        }
        let mut idx = vec![0usize; objs.len()];
        loop {
            let cand = EosAutomorphism {
                system: s.clone(),
                objects: idx.iter().zip(&objs).map(|(&i, o)| o[i].clone()).collect(),
            };
            let images: BTreeSet<EosEvent> = eos.events().iter().map(|e| event_image(&cand, e)).collect();
            if images.len() == events.len() && images.iter().all(|e| events.contains(e)) {
                out.insert(cand);
            }
            let mut k = objs.len();
            let done = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < objs[k].len() {
                    break false;
                }
                idx[k] = 0;
            };
            if done {
                break;
            }
        }
    }
    out
}

/// Event image computed from the raw permutations.
pub fn event_image(a: &EosAutomorphism, e: &EosEvent) -> EosEvent {
    let system = match e.system {
        SysTrans::Transition(t) => SysTrans::Transition(Trans(a.system.transitions.0[t.0])),
        SysTrans::Idle(p) => SysTrans::Idle(Place(a.system.places.0[p.0])),
    };
    let mut out = EosEvent::new(system);
    for (n, ts) in &e.sync {
        let perm = &a.objects[n.0].transitions.0;
        out.set_sync(*n, ts.iter().map(|(t, &k)| (Trans(perm[t.0]), k)).collect());
    }
    out
}

/// Marking image computed from the raw permutations.
pub fn marking_image(eos: &Eos, a: &EosAutomorphism, mu: &NestedMarking) -> NestedMarking {
    let mut out = NestedMarking::new();
    for (tok, &c) in mu.tokens() {
        let d = eos.type_of(tok.place);
        let sigma = &a.objects[d.0].places.0;
        out.add_token(
            Token::new(Place(a.system.places.0[tok.place.0]), image(sigma, &tok.marking)),
            c,
        );
    }
    out
}

fn places_of(mu: &NestedMarking) -> PtMarking {
    let mut m = PtMarking::new();
    for (tok, &c) in mu.tokens() {
        m.insert_n(tok.place, c);
    }
    m
}

fn objects_of(eos: &Eos, mu: &NestedMarking, net: NetId) -> PtMarking {
    let mut m = PtMarking::new();
    for (tok, &c) in mu.tokens() {
        if eos.type_of(tok.place) == net {
            for (q, &k) in &tok.marking {
                m.insert_n(*q, k * c);
            }
        }
    }
    m
}

fn weighted(net: &PtNet, ts: &Multiset<Trans>, arcs: impl Fn(&PtNet, Trans) -> PtMarking) -> PtMarking {
    let mut m = PtMarking::new();
    for (t, &k) in ts {
        for (p, &w) in &arcs(net, *t) {
            m.insert_n(*p, w * k);
        }
    }
    m
}

/// The four enabling clauses, written out directly.
pub fn phi_oracle(eos: &Eos, e: &EosEvent, lambda: &NestedMarking, rho: &NestedMarking) -> bool {
    let (pre, post) = match e.system {
        SysTrans::Transition(t) => (eos.system().pre(t).clone(), eos.system().post(t).clone()),
        SysTrans::Idle(p) => (PtMarking::singleton(p), PtMarking::singleton(p)),
    };
    if places_of(lambda) != pre || places_of(rho) != post {
        return false;
    }
    for n in 1..eos.nets().len() {
        let id = NetId(n);
        let net = &eos.nets()[n];
        let theta = e.sync.get(&id).cloned().unwrap_or_default();
        let need = weighted(net, &theta, |n, t| n.pre(t).clone());
        let give = weighted(net, &theta, |n, t| n.post(t).clone());
        let have = objects_of(eos, lambda, id);
        if !need.leq(&have) {
            return false;
        }
        let mut target = have.sub(&need);
        for (p, &k) in &give {
            target.insert_n(*p, k);
        }
        if objects_of(eos, rho, id) != target {
            return false;
        }
    }
    true
}

/// Every multiset over `0..places` of cardinality at most `max`.
pub fn markings_up_to(places: usize, max: u32) -> Vec<PtMarking> {
    let mut out = vec![PtMarking::new()];
    for p in 0..places {
        let mut next = Vec::new();
        for m in &out {
            let used = m.card() as u32;
            for k in 0..=(max - used) {
                let mut m2 = m.clone();
                m2.insert_n(Place(p), k);
                next.push(m2);
            }
        }
        out = next;
    }
    out
}

/// Every sub-marking of `mu` (with multiplicities).
pub fn sub_markings(mu: &NestedMarking) -> Vec<NestedMarking> {
    let mut out = vec![NestedMarking::new()];
    for (tok, &c) in mu.tokens() {
        let mut next = Vec::new();
        for m in &out {
            for k in 0..=c {
                let mut m2 = m.clone();
                if k > 0 {
                    m2.add_token(tok.clone(), k);
                }
                next.push(m2);
            }
        }
        out = next;
    }
    out
}

/// All modes of `e` at `mu`: every sub-marking as lambda, every placement of
/// object markings of bounded size on the post slots as rho, filtered by
/// [`phi_oracle`]. `None` when the candidate space exceeds `budget`.
pub fn brute_modes(eos: &Eos, mu: &NestedMarking, e: &EosEvent, budget: usize) -> Option<BTreeSet<Mode>> {
    let post = match e.system {
        SysTrans::Transition(t) => eos.system().post(t).clone(),
        SysTrans::Idle(p) => PtMarking::singleton(p),
    };
    let slots: Vec<Place> = post.formal_sum().copied().collect();
    let pre = match e.system {
        SysTrans::Transition(t) => eos.system().pre(t).clone(),
        SysTrans::Idle(p) => PtMarking::singleton(p),
    };
    let mut out = BTreeSet::new();
    let mut spent = 0usize;
    for lambda in sub_markings(mu) {
        if places_of(&lambda) != pre {
            continue;
        }
        let per_slot: Vec<Vec<PtMarking>> = slots
            .iter()
            .map(|p| {
                let d = eos.type_of(*p);
                let net = &eos.nets()[d.0];
                let theta = e.sync.get(&d).cloned().unwrap_or_default();
                let bound = objects_of(eos, &lambda, d).card()
                    + weighted(net, &theta, |n, t| n.post(t).clone()).card();
                markings_up_to(net.place_count(), bound as u32)
            })
            .collect();
        let total = per_slot.iter().map(Vec::len).product::<usize>();
        spent += total;
        if spent > budget {
            return None;
        }
        let mut idx = vec![0usize; per_slot.len()];
        loop {
            let mut rho = NestedMarking::new();
            for (j, (s, &i)) in slots.iter().zip(&idx).enumerate() {
                rho.add_token(Token::new(*s, per_slot[j][i].clone()), 1);
            }
            if phi_oracle(eos, e, &lambda, &rho) {
                out.insert(Mode {
                    lambda: lambda.clone(),
                    rho,
                });
            }
            let mut k = per_slot.len();
            let done = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < per_slot[k].len() {
                    break false;
                }
                idx[k] = 0;
            };
            if done {
                break;
            }
        }
    }
    Some(out)
}
