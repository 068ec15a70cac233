//! Visible-to-IR translation: conditional GAN with a U-Net generator and a
//! patch discriminator, plus the RMS brightness correction applied to its
//! output.

mod brightness;
mod discriminator;
mod generator;
mod loss;
mod spec;
mod train;

pub use brightness::{adjust_brightness, rms_brightness, BrightnessPolicy, ReferenceMode};
pub use discriminator::Discriminator;
pub use generator::Generator;
pub use loss::{discriminator_loss, gan_loss, generator_loss, l1_loss};
pub use spec::{DiscriminatorSpec, GeneratorSpec, TranslationTrainConfig};
pub use train::{
    train_translator, write_history, EpochRecord, PairBatch, Pix2PixTrainer, StepLosses, TranslationRun, Translator,
    CHECKPOINT_FILE, CHECKPOINT_FORMAT, HISTORY_FILE,
};
