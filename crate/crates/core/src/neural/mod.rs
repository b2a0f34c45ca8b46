//! Dense networks trained from scratch: affine layers with batch
//! normalization and rectifiers, softmax cross-entropy and squared-error
//! heads, Adam, binary checkpoints, and an exact cosine k-NN index.

mod adam;
mod checkpoint;
mod knn;
mod loss;
mod mlp;
mod policy;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use knn::KnnIndex;
pub use loss::{accuracy, argmax, cross_entropy, dense_rows, masked_softmax, mse, softmax};
pub use mlp::{Cache, Grads, HeadKind, Hidden, HiddenGrads, Input, Mlp, Mode, BN_EPS, BN_MOMENTUM};
pub use policy::{train_policy, EpochStats, Policy, PolicyDims, TrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NeuralError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("no candidates left after masking")]
    EmptyCandidateSet,
    #[error("non-finite loss in {network} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss {
        network: &'static str,
        epoch: usize,
        batch: usize,
    },
    #[error("checkpoint format error: {0}")]
    Format(String),
    #[error("checkpoint incompatible: {0}")]
    Compatibility(String),
    #[error("{0}")]
    Io(String),
}
