//! Dense numerical primitives shared by every other module.

pub mod eigen;
pub mod kmeans;
mod matrix;
pub mod qp;

pub use eigen::{eig_sym, eig_sym_smallest, SymmetricEigen};
pub use kmeans::{kmeans, KMeansResult};
pub use matrix::Matrix;
pub(crate) use matrix::{dot, sq_dist, SparsePattern};
pub use qp::{project_capped_simplex, solve_simplex_box_qp, solve_simplex_box_qp_from, QpSolution, SimplexBoxQp};
