//! Graph storage, candidate extraction and feature preparation.

mod features;
mod graph;
mod instance;

pub use features::{fit_transform, standardize_features, FeatureTransform};
pub use graph::{Graph, GraphBuilder, NodeId};
pub use instance::{
    add_common_friends_feature, reachable_instance, two_hop_instance, two_hop_neighborhood,
    EdgeType, TrainingInstance, TwoHopNeighborhood,
};
