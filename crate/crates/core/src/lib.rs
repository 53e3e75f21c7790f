//! Positional games on graphs: Maker-Breaker, Connector-Breaker and
//! Walker-Breaker engines, an exact solver for small boards, the auxiliary
//! box games, the layered structure `S_k` and a randomized Walker strategy
//! for `G(n, p)` built on top of them.

pub mod boxgames;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod solver;
pub mod strategies;
pub mod structure;
pub mod suites;
pub mod techlemma;

pub use error::{Error, Result};
pub use graph::{Graph, Seed};
