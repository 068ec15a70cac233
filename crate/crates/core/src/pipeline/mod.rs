//! End-to-end orchestration and the synthetic scene generator used for
//! desk-scale verification.

mod config;
mod run;
mod synthetic;

pub use config::{
    CharacterizationStage, EvaluationStage, IngestStage, PathsConfig, PipelineConfig, SegmentationStage, SynthStage,
    TranslationStage,
};
pub use run::{
    characterize_masks, list_masks, run_pipeline, segment_images, translate_frames, GeometryOutput, PipelineRun,
    TranslatedFrame, STAGES,
};
pub use synthetic::{
    generate_synthetic_dataset, Colormap, FlameParams, RenderedScene, SyntheticDataset, SyntheticSceneSpec,
    SYNTH_GROUND_TRUTH, SYNTH_MANIFEST, SYNTH_SCENE,
};
