//! Graph analytics and graph neural network benchmarking.
//!
//! Classical algorithms (traversal, centrality, community detection, random
//! walk embeddings) and GCN / GraphSAGE models share one graph type and one
//! seeding scheme so that every benchmark run is reproducible.

pub mod baselines;
pub mod bench;
pub mod community;
pub mod dataset;
pub mod embeddings;
pub mod error;
pub mod features;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod partition;
pub mod projection;
pub mod rng;
pub mod serde_util;
pub mod traversal;

pub use error::{Error, Result};
pub use graph::Graph;
pub use linalg::Matrix;
pub use partition::Partition;
