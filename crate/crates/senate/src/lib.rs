//! Deterministic, seeded simulator for a permissionless byzantine consensus
//! protocol over an abstract wireless broadcast medium.
//!
//! The protocol runs in three phases per episode:
//!
//! 1. **Sortition** ([`sortition`]) — a chorus procedure estimates the
//!    population from overheard transmitters, then a selfish slotted-ALOHA
//!    lottery seats `S` candidates. Faulty nodes may take several seats
//!    (pseudonyms), but no strategy beats the symmetric mixed equilibrium.
//! 2. **Senator selection** ([`selection`]) — candidates exchange pairwise
//!    ranging estimates, cross-check them for symmetry, embed the survivors
//!    into the plane with a robust spring relaxation that evicts the
//!    worst-fitting candidate each round (the seesaw test), and elect one
//!    senator per K-means cluster.
//! 3. **Agreement** ([`agreement`]) — the `K` senators run a rotating-leader
//!    byzantine agreement with median validity, then broadcast the decision
//!    to the whole network.
//!
//! Everything is a pure function of `(config, seed)`: repeated runs produce
//! byte-identical results, including under parallel sweep execution.
//!
//! The [`harness`] module orchestrates whole episodes and experiment sweeps;
//! [`geometry`] holds the distance-geometry kernel (EDM/Gram conversions,
//! low-rank leakage and its Monte-Carlo oracle); [`adversary`] collects every
//! faulty-node strategy behind one pluggable profile.
//!
//! See the `examples/` directory for one runnable walkthrough per capability.

pub mod adversary;
pub mod agreement;
pub mod config;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod rng;
pub mod selection;
pub mod sortition;
pub mod world;

pub use config::{RangingModel, ScenarioConfig};
pub use error::{Error, Result};
pub use world::{NodeId, NodeTruth};
