//! Pose-image retrieval core: grid-segmented color histograms, four
//! similarity metrics, a searchable image index, and a small from-scratch
//! GAN lab for generating new poses from retrieved ones.
//!
//! The numeric layers are generic over the scalar type via [`Real`]
//! (`f64` by default, `f32` available through the aliases at the crate
//! root); file formats and the index pin `f64`.

mod fsutil;

pub mod ganlab;
pub mod histogram;
pub mod imaging;
pub mod index;
pub mod metrics;
pub mod scalar;

pub use ganlab::{GanConfig, GanError, GanModel, LossRecord, SplitDatasets, TrainingSchedule};
pub use histogram::HistogramFeature;
pub use imaging::{ColorSpace, ImageBuffer, RegionGrid};
pub use index::{ImageIndex, IndexConfig, RankedResult, DEFAULT_K};
pub use metrics::{MetricKind, Polarity, Score};
pub use scalar::Real;

/// Single-precision histogram feature.
pub type HistogramFeature32 = histogram::HistogramFeature<f32>;
/// Single-precision metric score.
pub type Score32 = metrics::Score<f32>;
/// Single-precision GAN model.
pub type GanModel32 = ganlab::GanModel<f32>;
