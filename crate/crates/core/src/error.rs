use thiserror::Error;

/// Errors raised by the geometric, analytic and numerical layers.
///
/// Nonconvergence of the continuation solver is deliberately *not* an error:
/// it is reported through [`crate::solver::SolveReport`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point ({x:.6}, {y:.6}) is outside the chart domain")]
    OutsideChart { x: f64, y: f64 },

    #[error("point ({x:.6}, {y:.6}) is outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("direction is not unit length (norm {norm:.9})")]
    NotUnit { norm: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate boundary parametrization at s = {s:.6} (|γ'| = {speed:.3e})")]
    DegenerateCurve { s: f64, speed: f64 },

    #[error("boundary curve is not simple: segments {first} and {second} intersect")]
    SelfIntersecting { first: usize, second: usize },

    #[error("syntax error at position {position}: expected one of [{}], found {found}", expected.join(", "))]
    Syntax {
        position: usize,
        expected: Vec<String>,
        found: String,
    },

    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },

    #[error("∂H/∂z = {dz:.6e} < 0 at (x1, x2, z) = ({x1:.4}, {x2:.4}, {z:.4}); H must be non-decreasing in z")]
    NonMonotone { x1: f64, x2: f64, z: f64, dz: f64 },

    #[error("focal point: parallel curvature blows up at t = {t_critical:.9}")]
    FocalPoint { t_critical: f64 },

    #[error("non-finite value at node {node}: {what}")]
    NonFinite { node: usize, what: String },

    #[error("point ({x:.6}, {y:.6}) lies outside the validated collar (d = {d:.6}, limit {limit:.6})")]
    OutsideCollar { x: f64, y: f64, d: f64, limit: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
