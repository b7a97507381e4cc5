//! Relational feature learning on image pairs with factored gated models.
//!
//! The crate covers the whole experimental pipeline:
//!
//! * [`math`]: dense matrices, seeded random streams, the 2-D DFT and PCA
//!   whitening;
//! * [`datagen`]: labeled translation / rotation pairs of random-dot images
//!   and frame-pair ingestion from image sequences;
//! * [`model`]: the gated autoencoder with diagonal, grouped, asymmetric and
//!   topographic core structures, and the square-pooling baseline;
//! * [`classifier`]: logistic regression on mapping-unit activations;
//! * [`analysis`]: frequency / orientation / phase extraction from learned
//!   filters and image rendering;
//! * [`io`]: the binary dataset, whitening and model file formats;
//! * [`experiment`]: the end-to-end commands behind the `groupgate` binary.

pub mod analysis;
pub mod classifier;
pub mod config;
pub mod datagen;
pub mod experiment;
pub mod io;
pub mod math;
pub mod model;

pub use io::FormatError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("training diverged at epoch {epoch}, minibatch {batch}: loss {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
