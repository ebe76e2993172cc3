//! Finite multisets over totally ordered element domains.
//!
//! A [`Multiset`] is stored in normal form: a sorted map from elements to
//! strictly positive multiplicities. Structural equality, ordering and hashing
//! therefore coincide with multiset equality, which is what state-space
//! exploration relies on.

use std::collections::btree_map::{self, BTreeMap};
use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

/// A finite multiset `m: D -> N` with no zero entries stored.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Multiset<E: Ord> {
    entries: BTreeMap<E, u32>,
}

impl<E: Ord> Default for Multiset<E> {
    fn default() -> Self {
        Multiset {
            entries: BTreeMap::new(),
        }
    }
}

impl<E: Ord> Multiset<E> {
    /// The empty multiset `0`.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(e: E) -> Self {
        Self::with_count(e, 1)
    }

    pub fn with_count(e: E, count: u32) -> Self {
        let mut m = Self::new();
        m.insert_n(e, count);
        m
    }

    /// Adds `count` copies of `e`. Adding zero copies is a no-op.
    pub fn insert_n(&mut self, e: E, count: u32) {
        if count == 0 {
            return;
        }
        *self.entries.entry(e).or_insert(0) += count;
    }

    pub fn insert(&mut self, e: E) {
        self.insert_n(e, 1);
    }

    /// Removes up to `count` copies of `e`, returning how many were removed.
    pub fn remove_n(&mut self, e: &E, count: u32) -> u32 {
        match self.entries.get_mut(e) {
            None => 0,
            Some(c) if *c > count => {
                *c -= count;
                count
            }
            Some(_) => self.entries.remove(e).unwrap_or(0),
        }
    }

    /// Multiplicity of `e` (zero when absent).
    pub fn count(&self, e: &E) -> u32 {
        self.entries.get(e).copied().unwrap_or(0)
    }

    pub fn contains(&self, e: &E) -> bool {
        self.entries.contains_key(e)
    }

    /// `|m|`, the sum of all multiplicities.
    pub fn card(&self) -> u64 {
        self.entries.values().map(|&c| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct elements.
    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    /// Distinct elements with their multiplicities, in element order.
    pub fn iter(&self) -> btree_map::Iter<'_, E, u32> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &E> {
        self.entries.keys()
    }

    /// Every element repeated by its multiplicity: the formal-sum view `x_1 + ... + x_n`.
    pub fn formal_sum(&self) -> impl Iterator<Item = &E> {
        self.entries
            .iter()
            .flat_map(|(e, &c)| std::iter::repeat(e).take(c as usize))
    }

    /// Truncated difference: `(a - b)(d) = max(a(d) - b(d), 0)`.
    pub fn sub(&self, other: &Self) -> Self
    where
        E: Clone,
    {
        let mut out = self.clone();
        for (e, &c) in &other.entries {
            out.remove_n(e, c);
        }
        out
    }

    /// Pointwise order `a <= b`.
    pub fn leq(&self, other: &Self) -> bool {
        self.entries.len() <= other.entries.len()
            && self.entries.iter().all(|(e, &c)| other.count(e) >= c)
    }

    /// Extends `f` to the multiset homomorphism `f#`.
    pub fn map_hom<F, E2>(&self, mut f: F) -> Multiset<E2>
    where
        F: FnMut(&E) -> E2,
        E2: Ord,
    {
        let mut out = Multiset::new();
        for (e, &c) in &self.entries {
            out.insert_n(f(e), c);
        }
        out
    }

    /// `k · m`.
    pub fn scale(&self, k: u32) -> Self
    where
        E: Clone,
    {
        if k == 0 {
            return Self::new();
        }
        Multiset {
            entries: self.entries.iter().map(|(e, &c)| (e.clone(), c * k)).collect(),
        }
    }

    /// Renders as `k'e + ...` in element order, with a caller-supplied element formatter.
    /// The empty multiset renders as `0`.
    pub fn display_with<'a, F>(&'a self, f: F) -> impl fmt::Display + 'a
    where
        F: Fn(&E, &mut fmt::Formatter<'_>) -> fmt::Result + 'a,
    {
        DisplayWith { ms: self, f }
    }
}

struct DisplayWith<'a, E: Ord, F> {
    ms: &'a Multiset<E>,
    f: F,
}

impl<E: Ord, F> fmt::Display for DisplayWith<'_, E, F>
where
    F: Fn(&E, &mut fmt::Formatter<'_>) -> fmt::Result,
{
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ms.is_empty() {
            return out.write_str("0");
        }
        for (i, (e, c)) in self.ms.iter().enumerate() {
            if i > 0 {
                out.write_str(" + ")?;
            }
            write!(out, "{c}'")?;
            (self.f)(e, out)?;
        }
        Ok(())
    }
}

impl<E: Ord + fmt::Display> fmt::Display for Multiset<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.display_with(|e, f| write!(f, "{e}")).fmt(f)
    }
}

impl<E: Ord + fmt::Debug> fmt::Debug for Multiset<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}

impl<E: Ord> FromIterator<E> for Multiset<E> {
    fn from_iter<I: IntoIterator<Item = E>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for e in iter {
            m.insert(e);
        }
        m
    }
}

impl<E: Ord> FromIterator<(E, u32)> for Multiset<E> {
    fn from_iter<I: IntoIterator<Item = (E, u32)>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for (e, c) in iter {
            m.insert_n(e, c);
        }
        m
    }
}

impl<E: Ord> Extend<E> for Multiset<E> {
    fn extend<I: IntoIterator<Item = E>>(&mut self, iter: I) {
        for e in iter {
            self.insert(e);
        }
    }
}

impl<E: Ord + Clone> AddAssign<&Multiset<E>> for Multiset<E> {
    fn add_assign(&mut self, rhs: &Multiset<E>) {
        for (e, &c) in &rhs.entries {
            self.insert_n(e.clone(), c);
        }
    }
}

impl<E: Ord + Clone> Add<&Multiset<E>> for &Multiset<E> {
    type Output = Multiset<E>;

    fn add(self, rhs: &Multiset<E>) -> Multiset<E> {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<E: Ord + Clone> Add for Multiset<E> {
    type Output = Multiset<E>;

    fn add(mut self, rhs: Multiset<E>) -> Multiset<E> {
        self += &rhs;
        self
    }
}

impl<'a, E: Ord + 'a> IntoIterator for &'a Multiset<E> {
    type Item = (&'a E, &'a u32);
    type IntoIter = btree_map::Iter<'a, E, u32>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

/// Every sub-multiset of `m` with cardinality exactly `k`, in lexicographic order
/// of the per-element counts. Identical elements are never distinguished, so each
/// sub-multiset appears once.
pub fn sub_multisets_of_card<E: Ord + Clone>(m: &Multiset<E>, k: u64) -> Vec<Multiset<E>> {
    let items: Vec<(&E, u32)> = m.iter().map(|(e, &c)| (e, c)).collect();
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(items.len());
    fn rec<E: Ord + Clone>(
        items: &[(&E, u32)],
        i: usize,
        left: u64,
        chosen: &mut Vec<u32>,
        out: &mut Vec<Multiset<E>>,
    ) {
        if i == items.len() {
            if left == 0 {
                out.push(
                    items
                        .iter()
                        .zip(chosen.iter())
                        .map(|((e, _), &c)| ((*e).clone(), c))
                        .collect(),
                );
            }
            return;
        }
        let rest: u64 = items[i + 1..].iter().map(|(_, c)| *c as u64).sum();
        let max = (items[i].1 as u64).min(left);
        for take in 0..=max {
            if left - take > rest {
                continue;
            }
            chosen.push(take as u32);
            rec(items, i + 1, left - take, chosen, out);
            chosen.pop();
        }
    }
    rec(&items, 0, k, &mut chosen, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(items: &[(&'static str, u32)]) -> Multiset<&'static str> {
        items.iter().copied().collect()
    }

    #[test]
    fn add_is_componentwise() {
        assert_eq!(
            &ms(&[("a1", 1), ("b1", 1)]) + &ms(&[("b1", 1)]),
            ms(&[("a1", 1), ("b1", 2)])
        );
        assert_eq!(&ms(&[("x", 2)]) + &ms(&[("x", 3)]), ms(&[("x", 5)]));
        let m = ms(&[("x", 1), ("y", 4)]);
        assert_eq!(&m + &Multiset::new(), m);
    }

    #[test]
    fn sub_truncates_at_zero() {
        assert_eq!(ms(&[("x", 3)]).sub(&ms(&[("x", 1)])), ms(&[("x", 2)]));
        let d = ms(&[("x", 1)]).sub(&ms(&[("x", 4)]));
        assert!(d.is_empty());
        assert_eq!(d.support_len(), 0);
        let m = ms(&[("x", 1), ("y", 4)]);
        assert_eq!(m.sub(&Multiset::new()), m);
    }

    #[test]
    fn leq_is_pointwise() {
        assert!(ms(&[("x", 1)]).leq(&ms(&[("x", 2), ("y", 1)])));
        assert!(!ms(&[("x", 3)]).leq(&ms(&[("x", 2)])));
        assert!(Multiset::new().leq(&ms(&[("x", 2)])));
        assert!(!ms(&[("z", 1)]).leq(&ms(&[("x", 2), ("y", 1)])));
    }

    #[test]
    fn map_hom_sums_counts() {
        let m = ms(&[("x", 1), ("y", 2)]);
        assert_eq!(m.map_hom(|e| *e), m);
        assert_eq!(m.map_hom(|_| "z"), ms(&[("z", 3)]));
        let p = ms(&[("p1", 2), ("p2", 1)]);
        let swapped = p.map_hom(|e| if *e == "p1" { "p2" } else { "p1" });
        assert_eq!(swapped, ms(&[("p2", 2), ("p1", 1)]));
        assert!(Multiset::<u8>::new().map_hom(|e| *e).is_empty());
    }

    #[test]
    fn display_uses_element_order() {
        let m: Multiset<u32> = [(2, 1), (1, 2)].into_iter().collect();
        assert_eq!(m.to_string(), "2'1 + 1'2");
        let names = ["b1", "a1"];
        let m: Multiset<usize> = [(0, 2), (1, 1)].into_iter().collect();
        let s = m.display_with(|e, f| f.write_str(names[*e])).to_string();
        assert_eq!(s, "2'b1 + 1'a1");
        assert_eq!(Multiset::<u8>::new().to_string(), "0");
    }

    #[test]
    fn sub_multisets_enumerates_each_once() {
        let m = ms(&[("x", 2), ("y", 1)]);
        let subs = sub_multisets_of_card(&m, 2);
        assert_eq!(subs, vec![ms(&[("x", 1), ("y", 1)]), ms(&[("x", 2)])]);
        assert_eq!(sub_multisets_of_card(&m, 0), vec![Multiset::new()]);
        assert!(sub_multisets_of_card(&m, 4).is_empty());
    }
}
