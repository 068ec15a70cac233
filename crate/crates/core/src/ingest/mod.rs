//! Frame loading, timestamp pairing, reference-point alignment, canvas
//! padding, augmentation and dataset splitting.

mod align;
mod augment;
mod canvas;
mod frames;
mod manifest;
mod pairing;
mod split;

pub use align::{align_frames, fit_similarity, warp_affine, Affine2, SimilarityFit};
pub use augment::{
    augment, augment_with, augmentation_plan, mirror, rotate, AugmentConfig, AugmentKind, AUGMENTATION_FACTOR,
};
pub use canvas::{pad_to_canvas, remove_padding, CanvasSpec};
pub use frames::{load_stream, normalize_u16, validate_stream, FrameRecord, StreamIndexRow, STREAM_INDEX_FILE};
pub use manifest::{DatasetManifest, ManifestEntry, SplitLabel};
pub use pairing::{default_tolerance, pair_by_timestamp, pair_streams, Modality, PairedSample, PairingOptions};
pub use split::{split_counts, split_dataset};

mod dataset;
pub use dataset::{
    augment_manifest, build_paired_dataset, entry_seed, load_pair, pad_manifest, PairDatasetOptions, ReferencePoints,
};
