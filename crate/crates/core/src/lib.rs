//! Multipartite entanglement structure toolkit.
//!
//! The crate answers structural questions about multipartite quantum states
//! with dense numerics at desk scale:
//!
//! * detect and construct generalized (all-parties) Schmidt decompositions of
//!   pure states ([`schmidt`]);
//! * report positivity under partial transposition and one-sided
//!   separability/entanglement certificates ([`separability`]);
//! * purify mixed states, steer purifications onto target ensembles, and
//!   build layered product forms with explicit separability witnesses
//!   ([`purification`]);
//! * run the pairwise projection / partial-transpose certificate machinery
//!   that ties multiseparability to Schmidt decomposability ([`proofcheck`]).
//!
//! Everything is deterministic given a seed: randomized searches use an
//! explicit SplitMix64 stream ([`rng`]) with counter-derived substreams.
//! All operations are pure functions of immutable inputs with no global
//! state, so corpus runs parallelize safely from many threads.
//!
//! The `multisep` binary exposes the same analyses on JSON state files; see
//! [`cli`] and the README.

pub mod cli;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod numerics;
pub mod proofcheck;
pub mod purification;
pub mod report;
pub mod rng;
pub mod schmidt;
pub mod separability;
pub mod states;

pub use error::{Error, Result};
pub use numerics::{CMatrix, Cplx, Tolerance};
pub use states::{Bipartition, DensityMatrix, PartyDims, PureState};
