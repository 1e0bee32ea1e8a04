//! A small, fully-deterministic GAN trainer built from scratch.
//!
//! The top twelve retrieved images are split into two six-image datasets
//! ([`split_datasets`]); every epoch walks the full 6×6 cross-product of
//! pairs ([`TrainingSchedule`]), and each scheduled pair performs one
//! discriminator and one generator update: the discriminator sees the two
//! real images (label 1) and two generated images (label 0) under binary
//! cross-entropy, then the generator is trained against labels of 1 on its
//! own fakes — the non-saturating objective. Backpropagation is written by
//! hand ([`net`]), the optimizer is Adam ([`adam`]), and every random draw
//! comes from one seeded stream, so a seed fully determines the run.
//!
//! Networks are multilayer perceptrons: the generator expands a latent
//! vector to an image (tanh output in [−1,1]), the discriminator reduces an
//! image to a probability (sigmoid output strictly inside (0,1)).

pub mod adam;
pub mod io;
pub mod loss;
pub mod net;
pub mod train;

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::ImagingError;
use crate::scalar::Real;
use net::{Activation, Mlp};

pub use adam::{adam_step, adam_step_mlp, AdamHyper, AdamState};
pub use io::{
    generate_samples, load_model, load_split, save_model, save_split, MODEL_FORMAT_VERSION,
};
pub use loss::bce_loss;
pub use train::{train_from_tensors, train_gan, write_loss_csv, TrainOutcome};

/// Number of images in each of the two training datasets.
pub const SPLIT_SIZE: usize = 6;

/// Scheduled pairs per epoch: the full cross-product of the two datasets.
pub const PAIRS_PER_EPOCH: usize = SPLIT_SIZE * SPLIT_SIZE;

/// Everything that can go wrong while splitting, training, or persisting.
#[derive(Debug, Error)]
pub enum GanError {
    /// The split needs exactly 12 distinct image ids.
    #[error("expected exactly {expected} distinct ids, got {got}", expected = 2 * SPLIT_SIZE)]
    WrongCardinality { got: usize },

    /// Predictions and labels of a loss batch differ in length.
    #[error("prediction batch of {predictions} does not match {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },

    /// A network was fed a vector of the wrong length.
    #[error("input of length {got} does not match the expected dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Parameters, gradients, and optimizer state disagree in shape.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A configuration field is out of its valid range.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Training produced a NaN or infinite loss and aborted.
    #[error(
        "non-finite loss at epoch {epoch}, iteration {iteration} \
         (d_loss={d_loss}, g_loss={g_loss})"
    )]
    NonFiniteLoss {
        epoch: u32,
        iteration: u32,
        d_loss: f64,
        g_loss: f64,
    },

    /// A model or split file was written by an unknown format version.
    #[error("file format version {found} is not supported (this build reads version {expected})",
            expected = MODEL_FORMAT_VERSION)]
    VersionMismatch { found: u64 },

    /// A model file is malformed or internally inconsistent.
    #[error("corrupt model: {0}")]
    CorruptModel(String),

    /// A split file is malformed or violates the 6+6 contract.
    #[error("corrupt split file: {0}")]
    CorruptSplit(String),

    /// A split references an image id with no known source path.
    #[error("no source path recorded for image id '{0}'")]
    MissingSource(String),

    /// An image failed to load or decode.
    #[error(transparent)]
    Imaging(#[from] ImagingError),

    /// Filesystem failure, with the path that caused it.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn io_err(path: impl Into<PathBuf>, source: std::io::Error) -> GanError {
    GanError::Io {
        path: path.into(),
        source,
    }
}

/// Training hyperparameters. The defaults train a 16×16 grayscale model from
/// a 64-dimensional latent for 2000 epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanConfig {
    /// Side length of the (square) training images in pixels.
    pub image_side: u32,
    /// Train on RGB pixels instead of grayscale.
    pub rgb: bool,
    /// Dimension of the generator's latent input.
    pub latent_dim: usize,
    /// Hidden-layer widths of the generator.
    pub generator_hidden: Vec<usize>,
    /// Hidden-layer widths of the discriminator.
    pub discriminator_hidden: Vec<usize>,
    /// Adam step size α.
    pub learning_rate: f64,
    /// Adam first-moment decay β₁.
    pub beta1: f64,
    /// Adam second-moment decay β₂.
    pub beta2: f64,
    /// Adam denominator fuzz ε.
    pub epsilon: f64,
    /// Number of passes over the 36-pair schedule.
    pub epochs: u32,
    /// Seed for initialization and every latent draw.
    pub seed: u64,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            image_side: 16,
            rgb: false,
            latent_dim: 64,
            generator_hidden: vec![128],
            discriminator_hidden: vec![128],
            learning_rate: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 2000,
            seed: 0,
        }
    }
}

impl GanConfig {
    /// Color channels per pixel (1 for grayscale, 3 for RGB).
    pub fn channels(&self) -> u32 {
        if self.rgb {
            3
        } else {
            1
        }
    }

    /// Flattened image dimension: side² × channels.
    pub fn image_dim(&self) -> usize {
        (self.image_side as usize) * (self.image_side as usize) * self.channels() as usize
    }

    /// Generator layer widths: latent → hidden… → image.
    pub fn generator_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.latent_dim];
        dims.extend_from_slice(&self.generator_hidden);
        dims.push(self.image_dim());
        dims
    }

    /// Discriminator layer widths: image → hidden… → 1.
    pub fn discriminator_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.image_dim()];
        dims.extend_from_slice(&self.discriminator_hidden);
        dims.push(1);
        dims
    }

    pub(crate) fn adam_hyper(&self) -> AdamHyper {
        AdamHyper {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    /// Rejects configurations no training run can execute.
    pub fn validate(&self) -> Result<(), GanError> {
        let fail = |msg: String| Err(GanError::InvalidConfig(msg));
        if self.image_side == 0 {
            return fail("image_side must be at least 1".into());
        }
        if self.latent_dim == 0 {
            return fail("latent_dim must be at least 1".into());
        }
        if self.generator_hidden.contains(&0) || self.discriminator_hidden.contains(&0) {
            return fail("hidden layer widths must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return fail(format!("beta1 must lie in [0,1), got {}", self.beta1));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return fail(format!("beta2 must lie in [0,1), got {}", self.beta2));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        Ok(())
    }
}

/// The twelve retrieved ids divided into two six-image datasets.
///
/// Constructed by [`split_datasets`] (or rebuilt from a saved split file);
/// the 6+6/distinct invariants always hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitDatasets {
    seed: u64,
    set_a: Vec<String>,
    set_b: Vec<String>,
}

impl SplitDatasets {
    /// Assembles a split from already-separated halves, enforcing the
    /// 6-per-set and all-distinct invariants.
    pub fn from_parts(seed: u64, set_a: Vec<String>, set_b: Vec<String>) -> Result<Self, GanError> {
        let distinct: BTreeSet<&String> = set_a.iter().chain(&set_b).collect();
        if set_a.len() != SPLIT_SIZE
            || set_b.len() != SPLIT_SIZE
            || distinct.len() != 2 * SPLIT_SIZE
        {
            return Err(GanError::WrongCardinality {
                got: distinct.len(),
            });
        }
        Ok(Self { seed, set_a, set_b })
    }

    /// Seed the shuffle was drawn with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn set_a(&self) -> &[String] {
        &self.set_a
    }

    pub fn set_b(&self) -> &[String] {
        &self.set_b
    }

    /// All twelve ids, set A first.
    pub fn all_ids(&self) -> impl Iterator<Item = &str> {
        self.set_a.iter().chain(&self.set_b).map(String::as_str)
    }
}

/// Shuffles exactly twelve distinct image ids with a seeded uniform shuffle
/// and deals the first six into set A, the rest into set B.
pub fn split_datasets(ids: &[String], seed: u64) -> Result<SplitDatasets, GanError> {
    let distinct: BTreeSet<&String> = ids.iter().collect();
    if ids.len() != 2 * SPLIT_SIZE || distinct.len() != ids.len() {
        return Err(GanError::WrongCardinality {
            got: distinct.len().min(ids.len()),
        });
    }
    let mut shuffled = ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let set_b = shuffled.split_off(SPLIT_SIZE);
    SplitDatasets::from_parts(seed, shuffled, set_b)
}

/// One entry of the per-epoch cross-product: train on real pair
/// (A[a_index], B[b_index]) at the given 0-based epoch and iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduledPair {
    pub epoch: u32,
    /// Position within the epoch, 0..36, row-major over (a_index, b_index).
    pub iteration: u32,
    pub a_index: usize,
    pub b_index: usize,
}

/// The full training schedule: `epochs` passes over the 6×6 cross-product,
/// row-major — (0,0), (0,1), … (0,5), (1,0), … (5,5) — each epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingSchedule {
    epochs: u32,
}

impl TrainingSchedule {
    pub fn epochs(&self) -> u32 {
        self.epochs
    }

    /// Total scheduled iterations: epochs × 36.
    pub fn total_iterations(&self) -> u64 {
        u64::from(self.epochs) * PAIRS_PER_EPOCH as u64
    }

    /// The dataset indices trained at a position within an epoch (0..36).
    ///
    /// # Panics
    /// If `position` is 36 or more.
    pub fn pair_at(position: usize) -> (usize, usize) {
        assert!(position < PAIRS_PER_EPOCH, "schedule position out of range");
        (position / SPLIT_SIZE, position % SPLIT_SIZE)
    }

    /// All scheduled pairs, in execution order.
    pub fn iter(&self) -> impl Iterator<Item = ScheduledPair> {
        let epochs = self.epochs;
        (0..epochs).flat_map(|epoch| {
            (0..PAIRS_PER_EPOCH as u32).map(move |iteration| {
                let (a_index, b_index) = Self::pair_at(iteration as usize);
                ScheduledPair {
                    epoch,
                    iteration,
                    a_index,
                    b_index,
                }
            })
        })
    }
}

/// Builds the schedule for the given number of epochs (at least 1).
pub fn build_schedule(epochs: u32) -> Result<TrainingSchedule, GanError> {
    if epochs == 0 {
        return Err(GanError::InvalidConfig(
            "a schedule needs at least one epoch".into(),
        ));
    }
    Ok(TrainingSchedule { epochs })
}

/// Both losses observed at one scheduled iteration (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: u32,
    pub iteration: u32,
    pub d_loss: f64,
    pub g_loss: f64,
}

/// A generator/discriminator pair with its optimizer state and the
/// configuration it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct GanModel<T = f64> {
    pub config: GanConfig,
    pub generator: Mlp<T>,
    pub discriminator: Mlp<T>,
    pub adam_generator: AdamState<T>,
    pub adam_discriminator: AdamState<T>,
}

impl<T: Real> GanModel<T> {
    /// A freshly initialized model: generator weights drawn first, then
    /// discriminator weights, both N(0, 0.02) with zero biases.
    pub fn init<R: Rng>(config: &GanConfig, rng: &mut R) -> Result<Self, GanError> {
        config.validate()?;
        let generator = Mlp::new(&config.generator_dims(), Activation::Tanh, rng);
        let discriminator = Mlp::new(&config.discriminator_dims(), Activation::Sigmoid, rng);
        let adam_generator = AdamState::for_mlp(&generator);
        let adam_discriminator = AdamState::for_mlp(&discriminator);
        Ok(Self {
            config: config.clone(),
            generator,
            discriminator,
            adam_generator,
            adam_discriminator,
        })
    }

    /// Runs the generator on a latent vector, yielding pixels in [−1,1].
    pub fn generate(&self, latent: &[T]) -> Result<Vec<T>, GanError> {
        self.generator.forward(latent)
    }

    /// Runs the discriminator on a flattened image, yielding a probability
    /// strictly inside (0,1).
    pub fn discriminate(&self, image: &[T]) -> Result<T, GanError> {
        Ok(self.discriminator.forward(image)?[0])
    }
}
