//! Self-supervised objectives and the encoder training loop.

mod heads;
mod losses;
mod train;

pub use heads::{Mlp, PairDiscriminator};
pub use losses::{dgi_loss, info_nce, infograph_loss, js_mi_estimate};
pub use train::{
    adgcl_losses, train_encoder, write_loss_log, EpochRecord, Objective, ObjectiveKind,
    TrainConfig, TrainOutcome,
};

use thiserror::Error;

use crate::augment::AugmentError;
use crate::autodiff::AutodiffError;
use crate::encoders::EncoderError;

#[derive(Debug, Error)]
pub enum ContrastiveError {
    #[error("contrastive loss needs at least two items per batch, got {0}")]
    NeedNegatives(usize),
    #[error("score vector is empty")]
    EmptyScores,
    #[error("training diverged at epoch {epoch} (non-finite loss)")]
    TrainingDiverged { epoch: usize },
    #[error("{objective} does not support {task} datasets")]
    ObjectiveTaskMismatch {
        objective: &'static str,
        task: &'static str,
    },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
}

pub type Result<T> = std::result::Result<T, ContrastiveError>;
