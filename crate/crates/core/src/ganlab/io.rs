//! On-disk artifacts: the versioned model file, the split file, and PNG
//! sample sheets.
//!
//! Both JSON formats are written with round-trip-exact float formatting and
//! land via temp file + rename, so saving the same state twice produces
//! byte-identical files and an interrupted write never leaves a torn one.
//! Loading re-validates every structural invariant — a hand-edited file
//! cannot smuggle inconsistent shapes or non-finite weights into a run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::net::{Activation, Dense, Mlp};
use super::train::draw_latent;
use super::{io_err, GanConfig, GanError, GanModel, SplitDatasets};
use crate::scalar::Real;

/// Format version of model and split files this build reads and writes.
pub const MODEL_FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u64,
    config: GanConfig,
    generator: MlpDto,
    discriminator: MlpDto,
    adam_generator: AdamDto,
    adam_discriminator: AdamDto,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpDto {
    dims: Vec<usize>,
    output_activation: Activation,
    layers: Vec<LayerDto>,
}

/// Row-major weights (`weights[o*in + i]`) and per-output biases.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDto {
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdamDto {
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

fn mlp_to_dto<T: Real>(mlp: &Mlp<T>) -> MlpDto {
    MlpDto {
        dims: mlp.dims(),
        output_activation: mlp.output_activation,
        layers: mlp
            .layers
            .iter()
            .map(|l| LayerDto {
                weights: l.weights.iter().map(|w| w.as_f64()).collect(),
                bias: l.bias.iter().map(|b| b.as_f64()).collect(),
            })
            .collect(),
    }
}

fn adam_to_dto<T: Real>(state: &AdamState<T>) -> AdamDto {
    let narrow = |tensors: &[Vec<T>]| {
        tensors
            .iter()
            .map(|t| t.iter().map(|v| v.as_f64()).collect())
            .collect()
    };
    AdamDto {
        t: state.t,
        m: narrow(&state.m),
        v: narrow(&state.v),
    }
}

fn corrupt(msg: impl Into<String>) -> GanError {
    GanError::CorruptModel(msg.into())
}

/// Rebuilds one network from its DTO, checking shape consistency against the
/// expected layer dims and output activation.
fn mlp_from_dto<T: Real>(
    dto: &MlpDto,
    expected_dims: &[usize],
    expected_activation: Activation,
    role: &str,
) -> Result<Mlp<T>, GanError> {
    if dto.dims != expected_dims {
        return Err(corrupt(format!(
            "{role} dims {:?} do not match the configuration's {expected_dims:?}",
            dto.dims
        )));
    }
    if dto.output_activation != expected_activation {
        return Err(corrupt(format!(
            "{role} output activation {:?} should be {expected_activation:?}",
            dto.output_activation
        )));
    }
    if dto.layers.len() + 1 != dto.dims.len() {
        return Err(corrupt(format!(
            "{role} has {} layers for {} dims",
            dto.layers.len(),
            dto.dims.len()
        )));
    }
    let mut layers = Vec::with_capacity(dto.layers.len());
    for (i, layer) in dto.layers.iter().enumerate() {
        let (in_dim, out_dim) = (dto.dims[i], dto.dims[i + 1]);
        if layer.weights.len() != in_dim * out_dim || layer.bias.len() != out_dim {
            return Err(corrupt(format!(
                "{role} layer {i} should hold {}×{} weights and {} biases, found {} and {}",
                out_dim,
                in_dim,
                out_dim,
                layer.weights.len(),
                layer.bias.len()
            )));
        }
        if layer
            .weights
            .iter()
            .chain(&layer.bias)
            .any(|v| !v.is_finite())
        {
            return Err(corrupt(format!(
                "{role} layer {i} contains non-finite values"
            )));
        }
        layers.push(Dense {
            in_dim,
            out_dim,
            weights: layer.weights.iter().map(|&w| T::from_f64(w)).collect(),
            bias: layer.bias.iter().map(|&b| T::from_f64(b)).collect(),
        });
    }
    Ok(Mlp {
        layers,
        output_activation: dto.output_activation,
    })
}

/// Rebuilds optimizer state, checking its tensors mirror the network's.
fn adam_from_dto<T: Real>(
    dto: &AdamDto,
    mlp: &Mlp<T>,
    role: &str,
) -> Result<AdamState<T>, GanError> {
    let expected: Vec<usize> = mlp
        .layers
        .iter()
        .flat_map(|l| [l.weights.len(), l.bias.len()])
        .collect();
    for (name, tensors) in [("m", &dto.m), ("v", &dto.v)] {
        let found: Vec<usize> = tensors.iter().map(Vec::len).collect();
        if found != expected {
            return Err(corrupt(format!(
                "{role} adam {name} tensors {found:?} do not mirror parameter shapes {expected:?}"
            )));
        }
        if tensors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(corrupt(format!(
                "{role} adam {name} contains non-finite values"
            )));
        }
    }
    let widen = |tensors: &[Vec<f64>]| {
        tensors
            .iter()
            .map(|t| t.iter().map(|&v| T::from_f64(v)).collect())
            .collect()
    };
    Ok(AdamState {
        t: dto.t,
        m: widen(&dto.m),
        v: widen(&dto.v),
    })
}

fn write_json_atomically<S: Serialize>(value: &S, path: &Path) -> Result<(), GanError> {
    let mut json = serde_json::to_string_pretty(value)
        .map_err(|e| corrupt(format!("serialization failed: {e}")))?;
    json.push('\n');
    crate::fsutil::write_atomic(path, json.as_bytes()).map_err(|e| io_err(path, e))
}

/// Reads a JSON file and checks its `version` field before typed parsing.
/// `on_corrupt` chooses the malformed-file error (model vs split).
fn read_versioned_json(
    path: &Path,
    on_corrupt: fn(String) -> GanError,
) -> Result<serde_json::Value, GanError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| on_corrupt(format!("not valid JSON: {e}")))?;
    let version = value
        .get("version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| on_corrupt("missing or non-integer version field".into()))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(GanError::VersionMismatch { found: version });
    }
    Ok(value)
}

/// Saves a model — configuration, both networks' weights, and full Adam
/// state — as version-1 JSON.
pub fn save_model<T: Real>(model: &GanModel<T>, path: &Path) -> Result<(), GanError> {
    let file = ModelFile {
        version: MODEL_FORMAT_VERSION,
        config: model.config.clone(),
        generator: mlp_to_dto(&model.generator),
        discriminator: mlp_to_dto(&model.discriminator),
        adam_generator: adam_to_dto(&model.adam_generator),
        adam_discriminator: adam_to_dto(&model.adam_discriminator),
    };
    write_json_atomically(&file, path)
}

/// Loads a model saved by [`save_model`], re-validating configuration,
/// network shapes, activations, optimizer-state shapes, and finiteness.
pub fn load_model<T: Real>(path: &Path) -> Result<GanModel<T>, GanError> {
    let value = read_versioned_json(path, GanError::CorruptModel)?;
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| corrupt(format!("unexpected structure: {e}")))?;
    file.config
        .validate()
        .map_err(|e| corrupt(format!("stored configuration is invalid: {e}")))?;
    let generator = mlp_from_dto(
        &file.generator,
        &file.config.generator_dims(),
        Activation::Tanh,
        "generator",
    )?;
    let discriminator = mlp_from_dto(
        &file.discriminator,
        &file.config.discriminator_dims(),
        Activation::Sigmoid,
        "discriminator",
    )?;
    let adam_generator = adam_from_dto(&file.adam_generator, &generator, "generator")?;
    let adam_discriminator =
        adam_from_dto(&file.adam_discriminator, &discriminator, "discriminator")?;
    Ok(GanModel {
        config: file.config,
        generator,
        discriminator,
        adam_generator,
        adam_discriminator,
    })
}

/// The saved form of a split: which ids landed in which dataset, the seed
/// that shuffled them, and where each id's source image lives.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitFile {
    version: u64,
    seed: u64,
    set_a: Vec<String>,
    set_b: Vec<String>,
    sources: BTreeMap<String, String>,
}

/// Saves a split plus the id → source-image mapping later training runs
/// need. Every id must have a source path.
pub fn save_split(
    split: &SplitDatasets,
    sources: &BTreeMap<String, PathBuf>,
    path: &Path,
) -> Result<(), GanError> {
    let mut stored = BTreeMap::new();
    for id in split.all_ids() {
        let source = sources
            .get(id)
            .ok_or_else(|| GanError::MissingSource(id.to_owned()))?;
        stored.insert(id.to_owned(), source.to_string_lossy().into_owned());
    }
    let file = SplitFile {
        version: MODEL_FORMAT_VERSION,
        seed: split.seed(),
        set_a: split.set_a().to_vec(),
        set_b: split.set_b().to_vec(),
        sources: stored,
    };
    write_json_atomically(&file, path)
}

/// Loads a split file, re-validating the 6+6/distinct contract and that
/// every id still has a source path.
pub fn load_split(path: &Path) -> Result<(SplitDatasets, BTreeMap<String, PathBuf>), GanError> {
    let value = read_versioned_json(path, GanError::CorruptSplit)?;
    let file: SplitFile = serde_json::from_value(value)
        .map_err(|e| GanError::CorruptSplit(format!("unexpected structure: {e}")))?;
    let split = SplitDatasets::from_parts(file.seed, file.set_a, file.set_b)
        .map_err(|e| GanError::CorruptSplit(e.to_string()))?;
    for id in split.all_ids() {
        if !file.sources.contains_key(id) {
            return Err(GanError::MissingSource(id.to_owned()));
        }
    }
    let sources = file
        .sources
        .into_iter()
        .map(|(id, p)| (id, PathBuf::from(p)))
        .collect();
    Ok((split, sources))
}

/// Runs the generator on `n` fresh seeded latents and writes each output as
/// `sample_001.png`, `sample_002.png`, … under `out_dir` (created if
/// needed). Pixels map from [−1,1] to bytes via `round((v+1)·127.5)`.
///
/// Returns the written paths in order. Same model + seed + n → byte-identical
/// files.
pub fn generate_samples<T: Real>(
    model: &GanModel<T>,
    n: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, GanError> {
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = model.config.image_side;
    let mut written = Vec::with_capacity(n);
    for k in 1..=n {
        let latent: Vec<T> = draw_latent(&mut rng, model.config.latent_dim);
        let pixels = model.generate(&latent)?;
        let bytes: Vec<u8> = pixels
            .iter()
            .map(|v| ((v.as_f64() + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8)
            .collect();
        let path = out_dir.join(format!("sample_{k:03}.png"));
        let encode_err = |path: &Path, e: image::ImageError| io_err(path, std::io::Error::other(e));
        if model.config.rgb {
            image::RgbImage::from_raw(side, side, bytes)
                .expect("generator output length matches side²·3")
                .save(&path)
                .map_err(|e| encode_err(&path, e))?;
        } else {
            image::GrayImage::from_raw(side, side, bytes)
                .expect("generator output length matches side²")
                .save(&path)
                .map_err(|e| encode_err(&path, e))?;
        }
        written.push(path);
    }
    Ok(written)
}
