//! Simulation and analytic evaluation of cache-enabled two-tier cellular
//! networks with backhaul rate splitting.

pub mod analytic;
pub mod cli;
pub mod montecarlo;
pub mod params;
pub mod pointprocess;
pub mod rng;
pub mod specfun;

pub use params::{NetworkParams, Tier, Topology, Variant};
