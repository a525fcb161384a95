//! Hierarchical community detection on hierarchical stochastic block models.
//!
//! The crate covers the full loop of a synthetic study:
//!
//! * [`model`]: community trees, block-model parameters, graphs, partitions
//!   and dendrograms, plus their text formats.
//! * [`generator`]: seeded samplers for HSBM graphs and label corruption.
//! * [`linkage`]: bottom-up recovery: average-linkage agglomeration of
//!   edge densities, with exact integer similarity bookkeeping.
//! * [`spectral`]: the flat Bethe-Hessian clusterer, recursive spectral
//!   bipartitioning, and the eigensolver / k-means plumbing they share.
//! * [`theory`]: Rényi / Chernoff-Hellinger divergences, feasibility scores
//!   for both recovery directions, and label-noise robustness conditions.
//! * [`metrics`]: clustering loss, per-depth accuracy, tree similarity
//!   error and dendrogram inversion counts.
//! * [`experiments`]: reproducible batch drivers (phase diagram,
//!   robustness sweep, single runs, threshold tables) used by the `hcd`
//!   binary.
//!
//! All randomized operations take explicit 64-bit seeds and are
//! deterministic across runs and thread counts.

pub mod experiments;
pub mod generator;
pub mod linkage;
pub mod metrics;
pub mod model;
mod rng;
pub mod spectral;
pub mod theory;

pub use model::{ClusterTree, CommunityTree, Dendrogram, Graph, HsbmParams, Merge, Partition, TreeNode};
pub use spectral::{SpectrumEnd, SymmetricMatrix};
pub use theory::{DepthRecord, ThresholdReport};
