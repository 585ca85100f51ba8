//! Per-timestep multiresolution graph network: message-passing encoder,
//! learnable clustering, pooling, hierarchy construction and readout.

mod config;
mod hierarchy;
mod network;

pub use config::MgnConfig;
pub use hierarchy::{
    build_hierarchy, mgn_regression_loss, HierarchyVars, LevelVars, MgnRegressor, ResolutionHierarchy,
};
pub use network::{
    assign, cluster_logits, coarse_adjacency, encode, pool, pool_partition, propagation, readout, readout_values,
    AssignMode, Assignment, Clusterer, Encoder, LevelParams, MgnParams, Sampling,
};
