//! Exact and approximate graph HAC over rational similarities, with the
//! dynamic-subset gadgets and dendrogram-instability families built on it.

pub mod counterexamples;
pub mod dendrogram;
pub mod engine;
pub mod linkage;
pub mod policy;
pub mod rational;
pub mod reductions;

pub use dendrogram::{dendrogram_diff, Dendrogram};
pub use engine::{clusters_at, run_hac, HacGraph, HacRun};
pub use linkage::{linkage_by_name, Linkage};
pub use policy::{policy_by_name, MergePolicy};
pub use rational::Rational;
pub use reductions::{reduction_by_name, Reduction};
