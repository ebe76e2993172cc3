//! Canonical representatives of nested markings.
//!
//! The representative of a marking is the image with the smallest
//! [`MarkingKey`] over all elements of an automorphism group. Keys use the
//! declaration order of places in every net, so the representative depends on
//! that order and on nothing else.

use serde::Serialize;

use crate::eos::{pi1, pi2_all, Eos, NestedMarking};
use crate::ptnet::PtMarking;
use crate::symmetry::{apply_to_marking, AutGroup, EosAutomorphism};

/// Linearisation of a nested marking: one `(place index, count vector)` entry per
/// net-token, sorted. Count vectors are indexed by the declared places of the
/// token's object net.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct MarkingKey(pub Vec<(usize, Vec<u32>)>);

impl MarkingKey {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// The projections `(Pi1(mu), (Pi2_N(mu))_N)`; equal keys mean projection-equivalent markings.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProjKey {
    pub system: PtMarking,
    /// Indexed by net id, the black-token net first.
    pub per_net: Vec<PtMarking>,
}

pub fn marking_key(eos: &Eos, mu: &NestedMarking) -> MarkingKey {
    let mut entries = Vec::with_capacity(mu.card() as usize);
    for (tok, &c) in mu.tokens() {
        let width = eos
            .nets()
            .get(eos.type_of(tok.place).0)
            .map_or(0, |n| n.place_count());
        let mut v = vec![0u32; width];
        for (q, &k) in &tok.marking {
            if let Some(slot) = v.get_mut(q.0) {
                *slot = k;
            }
        }
        for _ in 0..c {
            entries.push((tok.place.0, v.clone()));
        }
    }
    entries.sort();
    MarkingKey(entries)
}

pub fn proj_key(eos: &Eos, mu: &NestedMarking) -> ProjKey {
    ProjKey {
        system: pi1(mu),
        per_net: pi2_all(eos, mu),
    }
}

/// The representative of `mu`'s orbit under `g`, together with the index of a
/// group element mapping `mu` onto it. Ties go to the first element in group order.
pub fn canonicalize_with_witness(eos: &Eos, mu: &NestedMarking, g: &AutGroup) -> (NestedMarking, usize) {
    let mut best: Option<(MarkingKey, NestedMarking, usize)> = None;
    for (i, a) in g.elements.iter().enumerate() {
        let img = if a.is_identity() {
            mu.clone()
        } else {
            apply_to_marking(eos, a, mu)
        };
        let key = marking_key(eos, &img);
        if best.as_ref().is_none_or(|(k, _, _)| key < *k) {
            best = Some((key, img, i));
        }
    }
    match best {
        Some((_, m, i)) => (m, i),
        None => (mu.clone(), 0),
    }
}

/// `argmin_{a in g} key(a(mu))`.
pub fn canonicalize(eos: &Eos, mu: &NestedMarking, g: &AutGroup) -> NestedMarking {
    canonicalize_with_witness(eos, mu, g).0
}

/// Smallest projection key over the orbit of `mu`, with the marking attaining it.
/// Automorphisms commute with the projections, so this classifies markings up to
/// automorphism followed by projection equivalence.
pub fn min_proj_image(eos: &Eos, mu: &NestedMarking, g: &AutGroup) -> (ProjKey, NestedMarking) {
    let mut best: Option<(ProjKey, NestedMarking)> = None;
    for a in &g.elements {
        let img = apply_to_marking(eos, a, mu);
        let key = proj_key(eos, &img);
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, img));
        }
    }
    best.unwrap_or_else(|| (proj_key(eos, mu), mu.clone()))
}

/// Whether some element of `g` maps `a` onto `b`; returns the first such element.
pub fn equivalence_witness<'g>(
    eos: &Eos,
    a: &NestedMarking,
    b: &NestedMarking,
    g: &'g AutGroup,
) -> Option<&'g EosAutomorphism> {
    g.elements
        .iter()
        .find(|x| apply_to_marking(eos, x, a) == *b)
}
