//! Jet-flame characterization from visible footage.
//!
//! The pipeline pairs visible and infrared frames, learns a visible-to-IR
//! translator (a conditional GAN with a U-Net generator and patch
//! discriminator), segments radiation zones with U-Net or Attention U-Net,
//! extracts flame length and area from the mask contour, and scores every
//! stage.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characterization;
pub mod error;
pub mod evaluation;
pub mod image;
pub mod ingest;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod point;
pub mod segmentation;
pub mod translation;

pub use error::{Error, Result};
pub use image::Image;
pub use point::Point;
