//! Error type shared by the solver modules.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("density {rho} outside the validity domain ({lo}, {hi})")]
    Domain { rho: f64, lo: f64, hi: f64 },
    #[error("invalid pressure {p} (reference pressure {p0})")]
    Pressure { p: f64, p0: f64 },
    #[error("operation not supported for EOS family {0}")]
    UnsupportedFamily(&'static str),
    #[error("EOS law missing: {0}")]
    MissingLaw(&'static str),
    #[error("invalid EOS parameters: {0}")]
    InvalidParameters(String),
    #[error("singular point at xi = {xi}: |X (X^2 - C^2)| = {value:e}")]
    SingularPoint { xi: f64, value: f64 },
    #[error("non-physical state at xi = {xi}: {what}")]
    NonPhysical { xi: f64, what: &'static str },
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("no compression ratio satisfies the jump relations")]
    NoRoot,
    #[error("post-jump state is not subsonic: |X1| = {x1}, C1 = {c1}")]
    EntropyViolation { x1: f64, c1: f64 },
    #[error("constraint error: {0}")]
    Constraint(String),
    #[error("bracket endpoints give the same numerator sign ({lo_sign} at {lo}, {hi_sign} at {hi})")]
    NoSignChange { lo: f64, hi: f64, lo_sign: i8, hi_sign: i8 },
    #[error("bisection did not converge in {0} iterations")]
    MaxIterations(usize),
    #[error("sonic crossing failed: {0}")]
    CrossingFailure(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("point xi = {xi} lies outside the disturbed region (xi_s = {xi_s})")]
    OutsideRegion { xi: f64, xi_s: f64 },
    #[error("integration failed: {0}")]
    Integration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
