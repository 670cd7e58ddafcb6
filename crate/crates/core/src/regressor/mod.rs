//! 2D + FBI → 3D pose regressor: network, losses, training and checkpoints.

mod checkpoint;
mod gradcheck;
mod layers;
mod loss;
mod network;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, StoredTensor, CHECKPOINT_FORMAT};
pub use gradcheck::{gradient_check, GradCheck};
pub use layers::{BatchMoments, BatchNorm, DenseUnit, Linear};
pub use loss::{
    fixed_weight_fbi_loss, focal_fbi_loss, focal_term, focal_term_grad, pose_l2_loss, status_weight, FbiLossConfig,
    LossBreakdown, LossWeights, PROB_FLOOR,
};
pub use network::{
    dropout_masks, encode_input, forward, normalize_pose2d, BatchOutput, FbiHead, ModelConfig, Mode, ParamGroup,
    Prediction, RegressorParams, TensorKind, TensorMut, TensorRef, INPUT_WIDTH, POSE2D_WIDTH, POSE_WIDTH, PROB_WIDTH,
};
pub use train::{
    backward, classify_poses, finetune_weak, objective, predict, pretrain_fbi_head, train_supervised,
    validation_loss, Batch, EpochLoss, HeadPretrainConfig, LossHistory, TrainConfig, TrainSample,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegressorError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training diverged at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("non-finite values in {tensor}")]
    NonFinite { tensor: String },
    #[error("non-finite network input")]
    NonFiniteInput,
    #[error("objective needs {0} that the batch does not carry")]
    MissingTargets(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("checkpoint topology {found:?} does not match {expected:?}")]
    TopologyMismatch { expected: String, found: String },
}
