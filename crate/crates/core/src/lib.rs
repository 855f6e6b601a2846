//! Simulator and verification harness for an entanglement-based quantum
//! coin-flipping protocol built on lie detection.

pub mod adversary;
pub mod bits;
pub mod codes;
pub mod harness;
pub mod liedetect;
pub mod protocol;
pub mod quantum;
pub mod rng;
