use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("degenerate tetrahedra (volume below {threshold:e}): {tets:?}")]
    DegenerateElements { tets: Vec<usize>, threshold: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),

    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("clustering: {0}")]
    Clustering(String),

    #[error("no vertices within pin radius {radius}; the system would be singular")]
    NoPins { radius: f64 },

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("non-orthonormal rotation for bone {bone}: deviation {deviation:e}")]
    NonOrthonormalRotation { bone: usize, deviation: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("factorization failed, non-positive pivot at elimination step {pivot} of {dim}; check pinning and material Hessian")]
    Factorization { pivot: usize, dim: usize },

    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("frame {frame}: non-finite solution")]
    NonFinite { frame: usize },

    #[error("no scene loaded")]
    NoScene,

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_frame(self, frame: usize) -> Error {
        match self {
            e @ (Error::Frame { .. } | Error::NonFinite { .. }) => e,
            e => Error::Frame {
                frame,
                source: Box::new(e),
            },
        }
    }

    /// True for failures of the numerical solve, as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SingularSystem(_)
            | Error::Factorization { .. }
            | Error::NonFinite { .. }
            | Error::NonOrthonormalRotation { .. } => true,
            Error::Frame { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
