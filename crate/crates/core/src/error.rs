use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("unknown edge set `{0}`")]
    UnknownEdgeSet(String),

    #[error("interface {index}: edge sets do not overlap within tolerance {tolerance:e}")]
    NonOverlappingInterface { index: usize, tolerance: f64 },

    #[error("interface {index}: slave edges already used by interface {other}")]
    SlaveCollision { index: usize, other: usize },

    #[error("interface coverage: slave edge {edge} has no overlap with the master side")]
    InterfaceCoverage { edge: usize },

    #[error("degenerate interface edge of length {0:e}")]
    DegenerateEdge(f64),

    #[error("mortar matrix D has non-positive diagonal entry {value:e} at slave node {node}")]
    NonPositiveMortarDiagonal { node: usize, value: f64 },

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("element {element} inverted (det F = {det:e})")]
    ElementInversion { element: usize, det: f64 },

    #[error("singular or indefinite system: pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("Newton did not converge at load factor {load_factor}: last residual norm {residual:e}")]
    NonConvergence { load_factor: f64, residual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
