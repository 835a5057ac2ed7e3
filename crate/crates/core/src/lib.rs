//! Partial label clustering.
//!
//! A small transductive dataset carries partial labels on a fraction of its
//! rows: each labeled row has a candidate set that contains the true class
//! plus a few false positives, and the remaining rows carry every class as a
//! candidate. This crate learns a sparse reconstruction graph over the rows
//! jointly with
//!
//! * a label-confidence matrix disambiguated over the graph,
//! * must-link / cannot-link constraints derived from the disambiguated
//!   labels, propagated into dense similarity and dissimilarity codings that
//!   suppress each other,
//!
//! by alternating block minimization, and finally clusters the symmetrized
//! graph spectrally.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the
//! experiment harness and the command line live in the `plc` crate.
//!
//! Indices are 0-based everywhere: class labels, cluster ids and neighbor
//! indices. The file formats in the `plc` crate are 1-based.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod clustering;
pub mod data;
pub mod dense;
pub mod disambiguation;
pub mod error;
pub mod eval;
pub mod graph;
pub mod propagation;
pub mod solver;

pub use clustering::{kmeans_baseline, sc_baseline, spectral_cluster, Assignment, SpectralResult};
pub use data::{
    make_blobs, split_transductive, synthesize_candidates, Dataset, PartialLabelProblem,
    SplitWarning,
};
pub use dense::{
    eig_sym_smallest, kmeans, project_capped_simplex, solve_simplex_box_qp,
    solve_simplex_box_qp_from, Matrix, SimplexBoxQp,
};
pub use disambiguation::{init_confidence, pseudo_labels, update_confidence, ConfidenceMatrix};
pub use error::{DataError, EigenError, PlcError, QpError};
pub use eval::{acc, evaluate, nmi, theorem_bound_check, BoundReport, MetricReport, Scope};
pub use graph::{
    build_knn, init_weights, laplacian, symmetric_laplacian, update_weights, LaplacianPair, NeighborSet,
    WeightGraph,
};
pub use propagation::{build_constraints, init_sd, pcp_objective, update_sd, warm_up, ConstraintState, Warmup};
pub use solver::{finalize, joint_objective, run_plc, run_plc_observed, PlcConfig, PlcState, Variant};
