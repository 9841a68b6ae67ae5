//! Synthesis of solver-ready transmission models from GeoJSON power
//! infrastructure, and DC/AC optimal power flow on them.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`ingest`] parses feature collections and fixture tables.
//! 2. [`topology`] reconstructs the bus-branch network.
//! 3. [`parameters`] assigns impedances, ratings and generator economics.
//! 4. [`demand`] allocates load and dispatches generation.
//! 5. [`opf`] solves DC and AC optimal power flow under a relaxation ladder.
//!
//! [`pipeline`] wires the stages together and writes run artifacts.

pub mod demand;
pub mod geo;
pub mod ingest;
pub mod model;
pub mod opf;
pub mod parameters;
pub mod pipeline;
pub mod topology;
pub mod union_find;

pub use model::NetworkModel;
