use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("infeasible bounds: upper bounds sum to {sum}, need at least 1")]
    Infeasible { sum: f64 },
    #[error("gram matrix is not symmetric at ({row}, {col}): difference {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("no convergence after {iterations} iterations (kkt residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("matrix is not symmetric at ({row}, {col}): difference {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("requested {requested} eigenpairs of a {n}x{n} matrix")]
    Count { requested: usize, n: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("eigensolver did not converge for eigenvalue {index} after {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("labeled proportion {0} is outside (0, 1)")]
    Rho(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlcError {
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("non-finite value in {what} at ({row}, {col})")]
    NonFinite { what: &'static str, row: usize, col: usize },
    #[error("non-finite objective at outer iteration {iteration}")]
    NonFiniteObjective { iteration: usize },
}
