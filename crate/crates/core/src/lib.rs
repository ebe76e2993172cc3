//! Elementary Object Systems (nets-within-nets) with symmetry reduction.
//!
//! The crate is organised bottom-up:
//!
//! * [`multiset`]: finite multisets, the state algebra of every net.
//! * [`ptnet`]: place/transition nets, markings, firing and bounded reachability.
//! * [`eos`]: the two-level system: typing, nested markings, events, the
//!   enabling predicate, mode enumeration and the firing rule.
//! * [`symmetry`]: p/t automorphisms, EOS-automorphism groups and their action
//!   on markings and events.
//! * [`canonical`]: marking keys, canonical representatives and projection keys.
//! * [`explorer`]: full and reduced reachability graphs, quotient verification
//!   and DOT export.
//! * [`model`]: the `.eos` text format.
//! * [`random`]: seeded generators of small valid models, used by property suites
//!   and benchmarks.

pub mod canonical;
pub mod eos;
pub mod explorer;
pub mod model;
pub mod multiset;
pub mod ptnet;
pub mod random;
pub mod symmetry;

pub use canonical::{canonicalize, marking_key, proj_key, MarkingKey, ProjKey};
pub use eos::{Eos, EosEvent, Mode, ModeCaps, NestedMarking, NetId, SysTrans, Token};
pub use explorer::{Bounds, ReachGraph, Reduction};
pub use model::{parse, ModelDocument};
pub use multiset::Multiset;
pub use ptnet::{Place, PtMarking, PtNet, Trans};
pub use symmetry::{AutGroup, EosAutomorphism, Perm, PtAutomorphism};
