//! Grid-segmented color histogram features.
//!
//! An image is cut into a rectangular grid of regions and each region
//! contributes one histogram per channel. The concatenated vector is
//! L1-normalized as a whole — every sample (one channel byte of one pixel)
//! carries weight `1 / (width·height·channels)` — so the feature is a single
//! probability vector, which is exactly what the similarity metrics in
//! [`crate::metrics`] expect. Larger regions thus carry proportionally more
//! mass; no per-region reweighting happens.

use thiserror::Error;

use crate::imaging::{segment_regions, ImageBuffer, ImagingError, RegionGrid};
use crate::scalar::Real;

/// Smallest accepted histogram resolution.
pub const MIN_BINS: usize = 2;
/// Largest accepted histogram resolution (one bin per possible byte value).
pub const MAX_BINS: usize = 256;
/// Default bins per channel.
pub const DEFAULT_BINS: usize = 32;

/// Errors from feature construction.
#[derive(Debug, Error)]
pub enum HistogramError {
    /// Bin count outside `MIN_BINS..=MAX_BINS`.
    #[error("bin count {0} is outside {MIN_BINS}..={MAX_BINS}")]
    InvalidBinCount(usize),
    /// A raw feature vector that violates the histogram invariants.
    #[error("invalid feature: {0}")]
    InvalidFeature(String),
    /// Failure while preparing the image (e.g. grid finer than the image).
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

/// Flat, L1-normalized histogram feature of one image.
///
/// Layout is region-major, then channel, then bin: the value at
/// `(region * channels + channel) * bins_per_channel + bin` is the fraction
/// of the image's samples that are a pixel of that region whose `channel`
/// byte falls in `bin`. Values are non-negative and the whole vector sums
/// to 1 (within 1e-9 for `f64`).
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramFeature<T = f64> {
    bins_per_channel: usize,
    channels: usize,
    regions: usize,
    values: Vec<T>,
}

impl<T: Real> HistogramFeature<T> {
    /// Builds a feature from raw parts, validating the invariants:
    /// consistent length, non-negative values, and the full vector summing
    /// to 1 within a width-appropriate tolerance.
    pub fn from_parts(
        bins_per_channel: usize,
        channels: usize,
        regions: usize,
        values: Vec<T>,
    ) -> Result<Self, HistogramError> {
        if !(MIN_BINS..=MAX_BINS).contains(&bins_per_channel) {
            return Err(HistogramError::InvalidBinCount(bins_per_channel));
        }
        if channels == 0 || regions == 0 {
            return Err(HistogramError::InvalidFeature(format!(
                "channels ({channels}) and regions ({regions}) must be nonzero"
            )));
        }
        let expected = bins_per_channel * channels * regions;
        if values.len() != expected {
            return Err(HistogramError::InvalidFeature(format!(
                "expected {expected} values ({regions} regions x {channels} channels x \
                 {bins_per_channel} bins), got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(HistogramError::InvalidFeature(
                "values must be finite and non-negative".into(),
            ));
        }
        // Tolerance scales with the scalar's epsilon and vector length so an
        // f32 feature is held to a proportionally looser bound; in f64 the
        // 1e-9 floor is the binding constraint.
        let tolerance = 1e-9_f64.max(2.0 * T::epsilon().as_f64() * expected as f64);
        let sum: f64 = values.iter().map(|v| v.as_f64()).sum();
        if (sum - 1.0).abs() > tolerance {
            return Err(HistogramError::InvalidFeature(format!(
                "vector sums to {sum}, expected 1"
            )));
        }
        Ok(Self {
            bins_per_channel,
            channels,
            regions,
            values,
        })
    }

    pub fn bins_per_channel(&self) -> usize {
        self.bins_per_channel
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn regions(&self) -> usize {
        self.regions
    }

    /// The flat feature vector (length `regions * channels * bins_per_channel`).
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Byte value to bin index: `⌊v · bins / 256⌋`, computed in integers.
fn bin_of(value: u8, bins: usize) -> usize {
    value as usize * bins / 256
}

/// Computes the grid-segmented histogram feature of an image.
///
/// The image is segmented by `grid` (row-major), every region yields one
/// histogram per channel of the image's current color space, and the blocks
/// are concatenated region-major. Bin edges are uniform over the byte range
/// (value `v` lands in bin `⌊v · bins / 256⌋`) and every count is divided by
/// the image-wide sample total `width · height · channels`, normalizing the
/// concatenated vector as a whole.
pub fn compute_histogram<T: Real>(
    image: &ImageBuffer,
    grid: &RegionGrid,
    bins_per_channel: usize,
) -> Result<HistogramFeature<T>, HistogramError> {
    if !(MIN_BINS..=MAX_BINS).contains(&bins_per_channel) {
        return Err(HistogramError::InvalidBinCount(bins_per_channel));
    }
    let regions = segment_regions(image, grid)?;
    let channels = image.channels();
    let total = T::from_f64(image.width() as f64 * image.height() as f64 * channels as f64);
    let mut values = Vec::with_capacity(regions.len() * channels * bins_per_channel);
    let mut counts = vec![0u32; bins_per_channel];
    for region in &regions {
        for channel in 0..channels {
            counts.fill(0);
            for pixel in region.pixels().chunks_exact(channels) {
                counts[bin_of(pixel[channel], bins_per_channel)] += 1;
            }
            values.extend(counts.iter().map(|&c| T::from_f64(f64::from(c)) / total));
        }
    }
    HistogramFeature::from_parts(bins_per_channel, channels, regions.len(), values)
}

/// Whether two features are directly comparable: same bin count, channel
/// count and region count (and therefore the same length).
pub fn feature_distance_ready<T: Real>(a: &HistogramFeature<T>, b: &HistogramFeature<T>) -> bool {
    a.bins_per_channel == b.bins_per_channel && a.channels == b.channels && a.regions == b.regions
}
