//! Batch-dynamic minimum spanning forests with single-linkage clustering queries.

pub mod dynamic_msf;
pub mod euler_forest;
pub mod graph;
pub mod level_structure;
pub mod oracle;
pub mod path_forest;
pub mod quantile;
pub mod slhac;

pub use dynamic_msf::DynamicMsf;
pub use graph::{Batch, BatchError, Pair, VertexId, WeightedEdge};
