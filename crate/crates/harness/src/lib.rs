//! Workload generation, oracle-checked replay, benchmarks and acceptance
//! checks for the dynamic MSF and HAC crates.

pub mod bench;
pub mod checks;
pub mod run;
pub mod workload;
