//! Radiation-zone segmentation with U-Net and Attention U-Net, trained on
//! ENet-weighted cross-entropy.

mod iou;
mod loss;
mod mask;
mod model;
mod spec;
mod train;

pub use iou::{mean_iou, IouCounts};
pub use loss::{class_counts, compute_class_weights, weighted_cross_entropy, ClassWeightScheme, ENET_C};
pub use mask::{default_class_names, RadiationMask};
pub use model::{SegOutput, SegmentationModel};
pub use spec::{SegTrainConfig, SegmentationModelSpec, Variant};
pub use train::{
    argmax_labels, train_segmenter, write_history, EarlyStopping, SegBatch, SegEpochRecord, SegEvaluation, SegTrainer,
    SegmentationRun, Segmenter, StopDecision, CHECKPOINT_FILE, CHECKPOINT_FORMAT, HISTORY_FILE,
};
