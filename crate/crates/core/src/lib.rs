//! Circle-aware link prediction between egos of interaction-weighted social
//! graphs.
//!
//! The pipeline builds an [`graph::InteractionGraph`], splits every ego's
//! alters into concentric circles by contact frequency ([`egonet`]),
//! restricts neighborhoods to a chosen circle ([`slicing`]), scores ego pairs
//! with neighborhood-overlap heuristics ([`similarity`]) and evaluates top-K
//! ([`unsupervised`]) or cross-validated classifier ([`supervised`])
//! predictions with Bayesian credible intervals ([`evalstats`]).

pub mod bench;
pub mod egonet;
pub mod evalstats;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod similarity;
pub mod slicing;
pub mod supervised;
pub mod synth;
pub mod unsupervised;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::IoError),
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Egonet(#[from] egonet::EgonetError),
    #[error(transparent)]
    Slice(#[from] slicing::SliceError),
    #[error(transparent)]
    Similarity(#[from] similarity::SimilarityError),
    #[error(transparent)]
    Predict(#[from] unsupervised::PredictError),
    #[error(transparent)]
    Supervised(#[from] supervised::SupervisedError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code: 1 for configuration errors, 2 for data errors and
    /// 3 for internal errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Synth(_) => 1,
            Error::Io(_) | Error::Graph(_) | Error::Egonet(_) | Error::Predict(_) | Error::Supervised(_) => 2,
            Error::Slice(_) | Error::Similarity(_) | Error::Internal(_) => 3,
        }
    }
}
