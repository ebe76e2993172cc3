mod common;

use std::collections::BTreeSet;

use common::load;
use eosym_core::ptnet::{marking_of, Node, Place, PtMarking, PtNet, Trans};
use eosym_core::random::{random_structure, rng};
use proptest::prelude::*;

fn recipe() -> PtNet {
    let doc = load("kitchen.eos");
    doc.eos.nets()[doc.eos.net_by_name("recipe").unwrap().0].clone()
}

/// Depth-first closure under firing, independent of the BFS in the library.
fn reach_oracle(net: &PtNet, m0: &PtMarking, limit: usize) -> Option<BTreeSet<PtMarking>> {
    let mut seen = BTreeSet::from([m0.clone()]);
    let mut stack = vec![m0.clone()];
    while let Some(m) = stack.pop() {
        for t in net.transitions() {
            if net.pre(t).leq(&m) {
                let mut next = m.sub(net.pre(t));
                for (p, &k) in net.post(t) {
                    next.insert_n(*p, k);
                }
                if seen.insert(next.clone()) {
                    if seen.len() > limit {
                        return None;
                    }
                    stack.push(next);
                }
            }
        }
    }
    Some(seen)
}

#[test]
fn object_nets_of_the_worked_example() {
    let doc = load("eos-s8.eos");
    let n1 = &doc.eos.nets()[1];
    let n2 = &doc.eos.nets()[2];
    let t1 = n1.trans_by_name("t1").unwrap();
    let t2 = n2.trans_by_name("t2").unwrap();
    assert!(n1.is_enabled(&marking_of(n1, &[("a1", 1)]), t1).unwrap());
    assert!(!n1.is_enabled(&marking_of(n1, &[("b1", 1)]), t1).unwrap());
    assert_eq!(
        n2.fire(&marking_of(n2, &[("a2", 1), ("b2", 1)]), t2).unwrap(),
        marking_of(n2, &[("c2", 1)])
    );
    assert_eq!(
        n1.fire(&marking_of(n1, &[("a1", 1), ("b1", 1)]), t1).unwrap(),
        marking_of(n1, &[("b1", 2)])
    );
    assert_eq!(
        n2.fire_sequence(&marking_of(n2, &[("a2", 1), ("b2", 1)]), &[t2]).unwrap(),
        marking_of(n2, &[("c2", 1)])
    );
}

#[test]
fn recipe_structure_and_runs() {
    let net = recipe();
    let a = net.trans_by_name("a").unwrap();
    let post: BTreeSet<Node> = net.postset(Node::Trans(a)).unwrap();
    let split: BTreeSet<Node> = ["p1", "p2"]
        .iter()
        .map(|p| Node::Place(net.place_by_name(p).unwrap()))
        .collect();
    assert_eq!(post, split);

    let run: Vec<Trans> = ["a", "b", "c", "d"]
        .iter()
        .map(|t| net.trans_by_name(t).unwrap())
        .collect();
    let m0 = marking_of(&net, &[("p0", 1)]);
    assert_eq!(net.fire_sequence(&m0, &run).unwrap(), marking_of(&net, &[("p5", 1)]));
    assert_eq!(net.fire_sequence(&m0, &[]).unwrap(), m0);
    assert!(net.fire_sequence(&m0, &run[1..]).is_err());
}

#[test]
fn recipe_reachability_matches_the_oracle() {
    let net = recipe();
    let m0 = marking_of(&net, &[("p0", 1)]);
    let r = net.reach(&m0, 1000);
    assert!(!r.truncated);
    // init, split, b done, c done, both done, final
    assert_eq!(r.markings.len(), 6);
    assert_eq!(r.as_set(), reach_oracle(&net, &m0, 1000).unwrap());

    let r = net.reach(&m0, 1);
    assert!(r.truncated);
    assert_eq!(r.markings, vec![m0]);
}

#[test]
fn net_without_transitions_reaches_only_the_start() {
    let mut net = PtNet::new("n");
    let p = net.add_place("p").unwrap();
    let m0 = PtMarking::singleton(p);
    assert_eq!(net.reach(&m0, 10).markings, vec![m0.clone()]);
    assert!(net.preset(Node::Place(p)).unwrap().is_empty());
    assert!(net.preset(Node::Place(Place(7))).is_err());
}

#[test]
fn empty_preset_is_always_enabled() {
    let mut net = PtNet::new("n");
    let p = net.add_place("p").unwrap();
    let t = net.add_transition("t", PtMarking::new(), PtMarking::singleton(p)).unwrap();
    assert!(net.is_enabled(&PtMarking::new(), t).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reach_matches_the_oracle_on_random_nets(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_structure(&mut r, 3, 3);
        let m0: PtMarking = [(Place(0), 1), (Place(1), 1)].into_iter().collect();
        let lib = net.reach(&m0, 200);
        match reach_oracle(&net, &m0, 200) {
            Some(set) => {
                prop_assert!(!lib.truncated);
                prop_assert_eq!(lib.as_set(), set);
            }
            None => prop_assert!(lib.truncated),
        }
    }

    #[test]
    fn firing_changes_card_by_the_arc_difference(seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_structure(&mut r, 3, 4);
        let m: PtMarking = [(Place(0), 2), (Place(1), 1), (Place(2), 1)].into_iter().collect();
        for t in net.enabled(&m).collect::<Vec<_>>() {
            let next = net.fire(&m, t).unwrap();
            prop_assert_eq!(
                next.card() as i64 - m.card() as i64,
                net.post(t).card() as i64 - net.pre(t).card() as i64
            );
        }
    }
}
