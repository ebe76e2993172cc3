//! Seeded generators of small valid systems and markings.
//!
//! System nets are built from two mirrored halves sharing their object nets, so
//! most generated models have a non-trivial automorphism group. Every generated
//! transition consumes at least as many tokens as it produces, at both levels,
//! which keeps reachability finite.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eos::{Eos, EosEvent, NestedMarking, NetId, SysTrans, Token, BLACK};
use crate::multiset::Multiset;
use crate::ptnet::{Place, PtMarking, PtNet, Trans};

pub type ModelRng = ChaCha8Rng;

pub fn rng(seed: u64) -> ModelRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Size envelope of generated models.
#[derive(Clone, Copy, Debug)]
pub struct Envelope {
    pub max_system_places: usize,
    pub max_nets: usize,
    pub max_object_places: usize,
    pub max_tokens: usize,
}

impl Default for Envelope {
    fn default() -> Self {
        Envelope {
            max_system_places: 6,
            max_nets: 2,
            max_object_places: 5,
            max_tokens: 5,
        }
    }
}

fn pick_places(rng: &mut ModelRng, places: &[Place], lo: usize, hi: usize) -> PtMarking {
    let k = rng.gen_range(lo..=hi);
    (0..k).filter_map(|_| places.choose(rng).copied()).collect()
}

/// A p/t net with `places` places and `transitions` transitions; arc weights are at most 2.
/// Presets are never smaller than postsets.
pub fn random_pt_net(rng: &mut ModelRng, name: &str, places: usize, transitions: usize) -> PtNet {
    let mut net = PtNet::new(name);
    let ps: Vec<Place> = (0..places)
        .map(|i| net.add_place(format!("{name}p{i}")).expect("fresh name"))
        .collect();
    for i in 0..transitions {
        let pre = if ps.is_empty() {
            PtMarking::new()
        } else {
            pick_places(rng, &ps, 1, 2)
        };
        let post = if ps.is_empty() {
            PtMarking::new()
        } else {
            pick_places(rng, &ps, 0, pre.card() as usize)
        };
        net.add_transition(format!("{name}t{i}"), pre, post)
            .expect("fresh name");
    }
    net
}

/// A p/t net with arbitrary (possibly token-creating) arcs, for structural tests.
pub fn random_structure(rng: &mut ModelRng, places: usize, transitions: usize) -> PtNet {
    let mut net = PtNet::new("n");
    let ps: Vec<Place> = (0..places)
        .map(|i| net.add_place(format!("p{i}")).expect("fresh name"))
        .collect();
    for i in 0..transitions {
        let pre = if ps.is_empty() { PtMarking::new() } else { pick_places(rng, &ps, 0, 2) };
        let post = if ps.is_empty() { PtMarking::new() } else { pick_places(rng, &ps, 0, 2) };
        net.add_transition(format!("t{i}"), pre, post).expect("fresh name");
    }
    net
}

/// A random object marking with at most `max` tokens.
pub fn random_pt_marking(rng: &mut ModelRng, net: &PtNet, max: usize) -> PtMarking {
    let ps: Vec<Place> = net.places().collect();
    if ps.is_empty() {
        return PtMarking::new();
    }
    pick_places(rng, &ps, 0, max)
}

/// A random valid system together with an initial marking.
pub fn random_model(seed: u64, env: &Envelope) -> (Eos, NestedMarking) {
    let mut rng = rng(seed);
    let nets_n = rng.gen_range(1..=env.max_nets.max(1));
    let objects: Vec<PtNet> = (0..nets_n)
        .map(|i| {
            let places = rng.gen_range(2..=env.max_object_places.max(2));
            let trans = rng.gen_range(1..=3);
            random_pt_net(&mut rng, &format!("N{}", i + 1), places, trans)
        })
        .collect();

    let half = rng.gen_range(1..=(env.max_system_places / 2).max(1));
    let mut sys = PtNet::new("sys");
    let left: Vec<Place> = (0..half)
        .map(|i| sys.add_place(format!("L{i}")).expect("fresh name"))
        .collect();
    let right: Vec<Place> = (0..half)
        .map(|i| sys.add_place(format!("R{i}")).expect("fresh name"))
        .collect();
    let mirror = |m: &PtMarking| m.map_hom(|p| Place((p.0 + half) % (2 * half)));

    let mut local = Vec::new();
    for i in 0..rng.gen_range(1..=2) {
        let pre = pick_places(&mut rng, &left, 1, 2);
        let post = pick_places(&mut rng, &left, 0, pre.card() as usize);
        let tl = sys
            .add_transition(format!("l{i}"), pre.clone(), post.clone())
            .expect("fresh name");
        let tr = sys
            .add_transition(format!("r{i}"), mirror(&pre), mirror(&post))
            .expect("fresh name");
        local.push((tl, tr));
    }
    let mut moves = Vec::new();
    for i in 0..rng.gen_range(0..=half) {
        let from = left[i % half];
        let to = right[rng.gen_range(0..half)];
        let a = sys
            .add_transition(
                format!("m{i}"),
                PtMarking::singleton(from),
                PtMarking::singleton(to),
            )
            .expect("fresh name");
        let b = sys
            .add_transition(
                format!("w{i}"),
                PtMarking::singleton(Place((to.0 + half) % (2 * half))),
                PtMarking::singleton(Place((from.0 + half) % (2 * half))),
            )
            .expect("fresh name");
        moves.push((a, b));
    }

    let mut eos = Eos::new(sys, objects);
    for i in 0..half {
        let d = NetId(rng.gen_range(0..=nets_n));
        eos.set_type(left[i], d);
        eos.set_type(right[i], d);
    }
    // One asymmetric typing now and then, for models with a trivial group.
    if rng.gen_bool(0.15) {
        let p = right[rng.gen_range(0..half)];
        eos.set_type(p, NetId(rng.gen_range(0..=nets_n)));
    }

    let mut events = Vec::new();
    let pairs: Vec<(Trans, Trans)> = local.iter().chain(&moves).copied().collect();
    for (a, b) in pairs {
        let base = random_sync(&mut rng, &eos, a);
        let mirrored = if rng.gen_bool(0.9) {
            base.iter().map(|e| with_system(e, SysTrans::Transition(b))).collect()
        } else {
            random_sync(&mut rng, &eos, b)
        };
        events.extend(base);
        events.extend(mirrored);
    }
    for i in 0..half {
        let d = eos.type_of(left[i]);
        if d == BLACK || !rng.gen_bool(0.4) || eos.nets()[d.0].trans_count() == 0 {
            continue;
        }
        let t = Trans(rng.gen_range(0..eos.nets()[d.0].trans_count()));
        for p in [left[i], right[i]] {
            if eos.type_of(p) == d {
                events.push(EosEvent::new(SysTrans::Idle(p)).with(d, Multiset::singleton(t)));
            }
        }
    }
    eos.set_events(events);

    let initial = random_marking(&mut rng, &eos, env.max_tokens);
    (eos, initial)
}

fn with_system(e: &EosEvent, system: SysTrans) -> EosEvent {
    let mut out = EosEvent::new(system);
    for (n, ts) in &e.sync {
        out.set_sync(*n, ts.clone());
    }
    out
}

/// One or two events for `t`: system-autonomous, or synchronised with one object
/// transition of a net typing its preset.
fn random_sync(rng: &mut ModelRng, eos: &Eos, t: Trans) -> Vec<EosEvent> {
    let types: Vec<NetId> = eos
        .system()
        .pre(t)
        .support()
        .map(|p| eos.type_of(*p))
        .filter(|d| *d != BLACK && eos.nets()[d.0].trans_count() > 0)
        .collect();
    let mut out = Vec::new();
    if types.is_empty() || rng.gen_bool(0.3) {
        out.push(EosEvent::new(SysTrans::Transition(t)));
    }
    if let Some(&d) = types.choose(rng) {
        let k = eos.nets()[d.0].trans_count();
        out.push(EosEvent::new(SysTrans::Transition(t)).with(d, Multiset::singleton(Trans(rng.gen_range(0..k)))));
    }
    out
}

/// A random marking of at most `max_tokens` net-tokens, each holding at most two object tokens.
pub fn random_marking(rng: &mut ModelRng, eos: &Eos, max_tokens: usize) -> NestedMarking {
    let places: Vec<Place> = eos.system().places().collect();
    let mut mu = NestedMarking::new();
    if places.is_empty() {
        return mu;
    }
    for _ in 0..rng.gen_range(1..=max_tokens.max(1)) {
        let p = *places.choose(rng).expect("non-empty");
        let net = &eos.nets()[eos.type_of(p).0];
        let m = random_pt_marking(rng, net, 2);
        mu.add_token(Token::new(p, m), 1);
    }
    mu
}

/// A marking with the same projections as `mu`: the net-tokens stay on their
/// places while the object tokens of each type are dealt out again at random.
pub fn redistribute(rng: &mut ModelRng, eos: &Eos, mu: &NestedMarking) -> NestedMarking {
    let mut slots: Vec<(Place, NetId)> = Vec::new();
    for (tok, &c) in mu.tokens() {
        for _ in 0..c {
            slots.push((tok.place, eos.type_of(tok.place)));
        }
    }
    let mut contents: Vec<PtMarking> = vec![PtMarking::new(); slots.len()];
    for (tok, &c) in mu.tokens() {
        let d = eos.type_of(tok.place);
        let same: Vec<usize> = (0..slots.len()).filter(|&i| slots[i].1 == d).collect();
        for (q, &k) in &tok.marking {
            for _ in 0..k * c {
                let i = *same.choose(rng).expect("the token's own slot");
                contents[i].insert(*q);
            }
        }
    }
    NestedMarking::from_tokens(
        slots
            .into_iter()
            .zip(contents)
            .map(|((p, _), m)| Token::new(p, m)),
    )
}

/// A random sub-marking of `mu`.
pub fn random_sub_marking(rng: &mut ModelRng, mu: &NestedMarking) -> NestedMarking {
    let mut out = NestedMarking::new();
    for (tok, &c) in mu.tokens() {
        let k = rng.gen_range(0..=c);
        if k > 0 {
            out.add_token(tok.clone(), k);
        }
    }
    out
}
