use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("degenerate polygon in cell {cell}: {reason}")]
    DegeneratePolygon { cell: i64, reason: String },

    #[error("non-manifold face between nodes {0} and {1}: shared by more than two cells")]
    NonManifoldFace(i64, i64),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error(
        "interface too brittle: H = {h:.4} <= 0 (elastic energy at onset t_c^2/(2 alpha) = {onset:.4e} \
         exceeds G_c = {g_c:.4e}); raise the penalty parameter lambda"
    )]
    Brittleness { h: f64, onset: f64, g_c: f64 },

    #[error("boundary condition error: {0}")]
    BoundaryCondition(String),

    #[error("Newton-Raphson did not converge after {iterations} iterations ({reason})")]
    NonConvergence {
        iterations: usize,
        reason: String,
        /// Face with the largest sub-unity damage at the last trial state.
        critical_face: Option<usize>,
    },

    #[error("no peak load within the load schedule (max load factor {0})")]
    NoPeak(f64),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("crack event {event}: {source}")]
    CrackEvent {
        event: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Format(String),
}

impl Error {
    /// Coarse category used for exit codes and machine-readable reports.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parse { .. }
            | Error::DegeneratePolygon { .. }
            | Error::NonManifoldFace(..)
            | Error::InvalidMesh(_) => "mesh",
            Error::InvalidMaterial(_) | Error::Brittleness { .. } | Error::BoundaryCondition(_) => {
                "config"
            }
            Error::NonConvergence { .. }
            | Error::NoPeak(_)
            | Error::LinearSolve(_)
            | Error::Invariant(_) => "solver",
            Error::CrackEvent { source, .. } => source.category(),
            Error::Io { .. } | Error::Format(_) => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
