//! Simulation of pedestrian counter-flow on cross-bar path networks.
//!
//! A small process-calculus kernel ([`kernel`]) drives a kinetic Monte-Carlo
//! engine ([`engine`]) over spatial graphs ([`spatial`]). [`model`] builds the
//! pedestrian system, [`codegen`] reads and writes graph specifications and
//! model text, [`stats`] aggregates replications and [`cli`] wires it together.

pub mod cli;
pub mod codegen;
pub mod engine;
pub mod kernel;
pub mod model;
pub mod spatial;
pub mod stats;

pub use engine::{run, run_replications, RunConfig, RunOutput, Simulation};
pub use model::{Model, RouteTable};
pub use spatial::{generate_crossbar, CrossbarSpec, PedType, RateParams, SpatialGraph};
