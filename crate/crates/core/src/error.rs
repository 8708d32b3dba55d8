use thiserror::Error;

use crate::modular::H0Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("exponent `{name}` has minimum {min} < 1")]
    ExponentBelowOne { name: &'static str, min: f64 },

    #[error("exponents are not conjugate at node {node}: 1/m + 1/m' = {sum}")]
    NotConjugate { node: usize, sum: f64 },

    #[error("hypothesis H0 violated: {}", format_violations(.0))]
    H0(Vec<H0Violation>),

    #[error(
        "nonlocal coefficient A(x, t) = {value} is not positive at node {node}, t = {t} \
         (A must be positive on the order-interval bracket)"
    )]
    NonPositiveCoefficient { node: usize, t: f64, value: f64 },

    #[error("inner p(x)-Laplacian solve did not converge: {0}")]
    SolverFailed(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("construction failed: {0}")]
    Construction(String),
}

fn format_violations(v: &[H0Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
