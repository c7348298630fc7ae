//! Foliated sparse quantum codes: construction, trellis decoding and simulation.

pub mod bicycle;
pub mod builtin;
pub mod cli;
pub mod code;
pub mod delay;
pub mod foliated;
pub mod gf2;
pub mod montecarlo;
pub mod schedule;
pub mod siso;
pub mod specfile;
pub mod trellis;
pub mod turbo;
