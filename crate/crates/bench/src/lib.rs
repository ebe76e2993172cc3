//! Inputs shared by the benchmarks in `benches/`.

use eosym_core::{parse, Eos, NestedMarking};

pub const KITCHEN: &str = include_str!("../../../models/kitchen.eos");
pub const S8: &str = include_str!("../../../models/eos-s8.eos");

/// The kitchen with `k` copies of its initial recipe token.
pub fn kitchen(k: u32) -> (Eos, NestedMarking) {
    let doc = parse(KITCHEN).expect("kitchen fixture parses");
    let token = doc.initial.tokens().support().next().expect("one token").clone();
    let mut mu = NestedMarking::new();
    mu.add_token(token, k);
    (doc.eos, mu)
}

pub fn s8() -> (Eos, NestedMarking) {
    let doc = parse(S8).expect("s8 fixture parses");
    (doc.eos, doc.initial)
}
