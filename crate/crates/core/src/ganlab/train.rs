//! The training loop: preprocessing, the per-pair update step, and the
//! loss log.
//!
//! Everything here is strictly sequential and draws from a single
//! `ChaCha8Rng` seeded with `config.seed` (generator init, then
//! discriminator init, then two latent vectors per scheduled iteration), so
//! a seed determines every float of the run bit-for-bit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::loss::bce_loss;
use super::net::MlpGrad;
use super::{
    adam_step_mlp, build_schedule, io_err, GanConfig, GanError, GanModel, LossRecord,
    SplitDatasets, SPLIT_SIZE,
};
use crate::imaging::{center_crop_square, load_image, resize_area, to_color_space, ColorSpace};
use crate::scalar::Real;

/// What a training run produces: the final model and one loss record per
/// scheduled iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<T = f64> {
    pub model: GanModel<T>,
    pub losses: Vec<LossRecord>,
}

/// Loads one source image and turns it into a training tensor: decode →
/// grayscale (or RGB when configured) → largest centered square crop → box
/// downscale to `image_side` → bytes mapped to [−1,1] via `v/127.5 − 1`.
pub fn preprocess_image<T: Real>(path: &Path, config: &GanConfig) -> Result<Vec<T>, GanError> {
    let target = if config.rgb {
        ColorSpace::Rgb
    } else {
        ColorSpace::Gray
    };
    let image = to_color_space(&load_image(path)?, target);
    let square = center_crop_square(&image);
    let resized = resize_area(&square, config.image_side, config.image_side)?;
    Ok(resized
        .pixels()
        .iter()
        .map(|&v| T::from_f64(f64::from(v) / 127.5 - 1.0))
        .collect())
}

/// Draws one latent vector from the standard normal distribution.
///
/// Samples are drawn as f64 and narrowed, so f32 and f64 runs consume the
/// identical random stream.
pub(crate) fn draw_latent<T: Real, R: Rng>(rng: &mut R, dim: usize) -> Vec<T> {
    (0..dim)
        .map(|_| T::from_f64(rng.sample(StandardNormal)))
        .collect()
}

/// Trains a GAN on twelve already-preprocessed tensors (six per dataset).
///
/// Each scheduled pair `(i, j)` performs exactly one update of each network:
///
/// 1. Two latent vectors are drawn and run through the generator (traced).
/// 2. The discriminator sees `[A_i, B_j, fake₁, fake₂]` with labels
///    `[1, 1, 0, 0]`; its BCE gradients are backpropagated and applied with
///    one Adam step.
/// 3. The *updated* discriminator is re-run on the same two fakes with
///    labels `[1, 1]` — the non-saturating generator objective — and the
///    gradient is chained through the discriminator's input back into the
///    generator, which takes its own Adam step.
///
/// The recorded `d_loss`/`g_loss` are the batch means from steps 2 and 3.
pub fn train_from_tensors<T: Real>(
    set_a: &[Vec<T>],
    set_b: &[Vec<T>],
    config: &GanConfig,
) -> Result<TrainOutcome<T>, GanError> {
    config.validate()?;
    if set_a.len() != SPLIT_SIZE || set_b.len() != SPLIT_SIZE {
        return Err(GanError::WrongCardinality {
            got: set_a.len() + set_b.len(),
        });
    }
    let dim = config.image_dim();
    for tensor in set_a.iter().chain(set_b) {
        if tensor.len() != dim {
            return Err(GanError::DimensionMismatch {
                expected: dim,
                got: tensor.len(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model: GanModel<T> = GanModel::init(config, &mut rng)?;
    let hyper = config.adam_hyper();
    let schedule = build_schedule(config.epochs)?;
    let mut losses = Vec::with_capacity(schedule.total_iterations() as usize);
    let real_label = T::one();
    let fake_label = T::zero();

    for pair in schedule.iter() {
        // One noise batch per iteration, shared by both phases.
        let latents: [Vec<T>; 2] = [
            draw_latent(&mut rng, config.latent_dim),
            draw_latent(&mut rng, config.latent_dim),
        ];
        let g_traces = [
            model.generator.forward_trace(&latents[0])?,
            model.generator.forward_trace(&latents[1])?,
        ];

        // Discriminator phase: reals labeled 1, fakes labeled 0.
        let d_inputs: [&[T]; 4] = [
            &set_a[pair.a_index],
            &set_b[pair.b_index],
            &g_traces[0].output,
            &g_traces[1].output,
        ];
        let labels = [real_label, real_label, fake_label, fake_label];
        let mut d_traces = Vec::with_capacity(4);
        let mut predictions = Vec::with_capacity(4);
        for input in d_inputs {
            let trace = model.discriminator.forward_trace(input)?;
            predictions.push(trace.output[0]);
            d_traces.push(trace);
        }
        let (d_loss, d_upstream) = bce_loss(&predictions, &labels)?;
        let mut d_grads = MlpGrad::zeros_like(&model.discriminator);
        for (trace, &up) in d_traces.iter().zip(&d_upstream) {
            let (grad, _) = model.discriminator.backward(trace, &[up]);
            d_grads.accumulate(&grad);
        }
        adam_step_mlp(
            &mut model.discriminator,
            &d_grads,
            &mut model.adam_discriminator,
            &hyper,
        )?;

        // Generator phase: re-forward the updated discriminator on the same
        // fakes, labeled as real.
        let mut fake_traces = Vec::with_capacity(2);
        let mut fake_predictions = Vec::with_capacity(2);
        for trace in &g_traces {
            let d_trace = model.discriminator.forward_trace(&trace.output)?;
            fake_predictions.push(d_trace.output[0]);
            fake_traces.push(d_trace);
        }
        let (g_loss, g_upstream) = bce_loss(&fake_predictions, &[real_label, real_label])?;
        let mut g_grads = MlpGrad::zeros_like(&model.generator);
        for ((d_trace, g_trace), &up) in fake_traces.iter().zip(&g_traces).zip(&g_upstream) {
            let (_, d_input_grad) = model.discriminator.backward(d_trace, &[up]);
            let (grad, _) = model.generator.backward(g_trace, &d_input_grad);
            g_grads.accumulate(&grad);
        }
        adam_step_mlp(
            &mut model.generator,
            &g_grads,
            &mut model.adam_generator,
            &hyper,
        )?;

        // The probability clamp bounds each BCE term by −ln(1e-7), so a
        // non-finite loss should be impossible; the abort is kept as cheap
        // insurance on that argument.
        let record = LossRecord {
            epoch: pair.epoch,
            iteration: pair.iteration,
            d_loss: d_loss.as_f64(),
            g_loss: g_loss.as_f64(),
        };
        if !record.d_loss.is_finite() || !record.g_loss.is_finite() {
            return Err(GanError::NonFiniteLoss {
                epoch: record.epoch,
                iteration: record.iteration,
                d_loss: record.d_loss,
                g_loss: record.g_loss,
            });
        }
        losses.push(record);
    }

    Ok(TrainOutcome { model, losses })
}

/// Trains from a split plus an id → file mapping, preprocessing each source
/// image per the config.
pub fn train_gan<T: Real>(
    split: &SplitDatasets,
    sources: &BTreeMap<String, PathBuf>,
    config: &GanConfig,
) -> Result<TrainOutcome<T>, GanError> {
    config.validate()?;
    let load_set = |ids: &[String]| -> Result<Vec<Vec<T>>, GanError> {
        ids.iter()
            .map(|id| {
                let path = sources
                    .get(id)
                    .ok_or_else(|| GanError::MissingSource(id.clone()))?;
                preprocess_image(path, config)
            })
            .collect()
    };
    let set_a = load_set(split.set_a())?;
    let set_b = load_set(split.set_b())?;
    train_from_tensors(&set_a, &set_b, config)
}

/// Writes the loss log as CSV with header `epoch,iteration,d_loss,g_loss`.
///
/// Floats are rendered by Rust's shortest round-trip formatting, so
/// identical loss sequences produce byte-identical files.
pub fn write_loss_csv(records: &[LossRecord], path: &Path) -> Result<(), GanError> {
    let mut out = String::from("epoch,iteration,d_loss,g_loss\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.epoch, r.iteration, r.d_loss, r.g_loss
        ));
    }
    crate::fsutil::write_atomic(path, out.as_bytes()).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ganlab::split_datasets;
    use crate::imaging::ImageBuffer;

    fn tiny_config() -> GanConfig {
        GanConfig {
            image_side: 4,
            latent_dim: 3,
            generator_hidden: vec![8],
            discriminator_hidden: vec![8],
            epochs: 1,
            seed: 0,
            ..GanConfig::default()
        }
    }

    /// Six deterministic pseudo-image tensors of the given flat dimension.
    fn tensors(dim: usize, salt: u64) -> Vec<Vec<f64>> {
        (0..6)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        let x = (salt + 1) as f64 * (i as f64 + 1.3) * (j as f64 + 0.7);
                        (x.sin() * 0.8).clamp(-1.0, 1.0)
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn one_epoch_yields_exactly_thirty_six_loss_records() {
        let config = tiny_config();
        let out = train_from_tensors(&tensors(16, 0), &tensors(16, 1), &config).unwrap();
        assert_eq!(out.losses.len(), 36);
        for (i, r) in out.losses.iter().enumerate() {
            assert_eq!(r.epoch, 0);
            assert_eq!(r.iteration, i as u32);
            assert!(r.d_loss.is_finite() && r.d_loss >= 0.0);
            assert!(r.g_loss.is_finite() && r.g_loss >= 0.0);
        }
    }

    #[test]
    fn same_seed_trains_bitwise_identically() {
        let config = GanConfig {
            epochs: 3,
            ..tiny_config()
        };
        let a = train_from_tensors(&tensors(16, 0), &tensors(16, 1), &config).unwrap();
        let b = train_from_tensors(&tensors(16, 0), &tensors(16, 1), &config).unwrap();
        assert_eq!(a.losses, b.losses);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn different_seeds_train_differently() {
        let base = tiny_config();
        let other = GanConfig {
            seed: 1,
            ..base.clone()
        };
        let a = train_from_tensors(&tensors(16, 0), &tensors(16, 1), &base).unwrap();
        let b = train_from_tensors(&tensors(16, 0), &tensors(16, 1), &other).unwrap();
        assert_ne!(a.losses, b.losses);
    }

    #[test]
    fn epochs_and_iterations_are_numbered_from_zero() {
        let config = GanConfig {
            epochs: 2,
            ..tiny_config()
        };
        let out = train_from_tensors(&tensors(16, 0), &tensors(16, 1), &config).unwrap();
        assert_eq!(out.losses.len(), 72);
        assert_eq!(out.losses[36].epoch, 1);
        assert_eq!(out.losses[36].iteration, 0);
        assert_eq!(out.losses[71].epoch, 1);
        assert_eq!(out.losses[71].iteration, 35);
    }

    #[test]
    fn training_updates_both_networks_and_their_step_counters() {
        let config = tiny_config();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let fresh: GanModel = GanModel::init(&config, &mut rng).unwrap();
        let out = train_from_tensors(&tensors(16, 0), &tensors(16, 1), &config).unwrap();
        assert_ne!(out.model.generator, fresh.generator);
        assert_ne!(out.model.discriminator, fresh.discriminator);
        assert_eq!(out.model.adam_generator.t, 36);
        assert_eq!(out.model.adam_discriminator.t, 36);
    }

    #[test]
    fn wrong_set_sizes_are_rejected() {
        let config = tiny_config();
        let five = tensors(16, 0)[..5].to_vec();
        let six = tensors(16, 1);
        assert!(matches!(
            train_from_tensors(&five, &six, &config),
            Err(GanError::WrongCardinality { got: 11 })
        ));
    }

    #[test]
    fn wrong_tensor_dimension_is_rejected() {
        let config = tiny_config();
        assert!(matches!(
            train_from_tensors(&tensors(15, 0), &tensors(15, 1), &config),
            Err(GanError::DimensionMismatch {
                expected: 16,
                got: 15
            })
        ));
    }

    fn write_png(dir: &Path, name: &str, side: u32, value: u8) -> PathBuf {
        let pixels: Vec<u8> = (0..side * side)
            .flat_map(|i| {
                let v = value.wrapping_add((i % 7) as u8);
                [v, v, v]
            })
            .collect();
        let path = dir.join(name);
        let img = image::RgbImage::from_raw(side, side, pixels).unwrap();
        img.save(&path).unwrap();
        path
    }

    #[test]
    fn preprocess_maps_bytes_into_tanh_range() {
        let dir = tempfile::tempdir().unwrap();
        // Solid mid-gray: every preprocessed value is 128/127.5 − 1.
        let solid: Vec<u8> = vec![128; 6 * 6 * 3];
        let path = dir.path().join("solid.png");
        image::RgbImage::from_raw(6, 6, solid)
            .unwrap()
            .save(&path)
            .unwrap();
        let config = tiny_config();
        let tensor: Vec<f64> = preprocess_image(&path, &config).unwrap();
        assert_eq!(tensor.len(), 16);
        let expected = 128.0 / 127.5 - 1.0;
        for v in &tensor {
            assert!((v - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn preprocess_crops_nonsquare_images_and_honors_rgb() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_png(dir.path(), "wide.png", 9, 40);
        let gray = tiny_config();
        let tensor: Vec<f64> = preprocess_image(&path, &gray).unwrap();
        assert_eq!(tensor.len(), 16);
        assert!(tensor.iter().all(|v| (-1.0..=1.0).contains(v)));

        let rgb = GanConfig { rgb: true, ..gray };
        let tensor: Vec<f64> = preprocess_image(&path, &rgb).unwrap();
        assert_eq!(tensor.len(), 48);
    }

    #[test]
    fn preprocess_matches_the_imaging_pipeline_exactly() {
        // The tensor must equal load → gray → crop → area-resize → affine map,
        // value for value.
        let dir = tempfile::tempdir().unwrap();
        let path = write_png(dir.path(), "ref.png", 5, 90);
        let config = tiny_config();
        let tensor: Vec<f64> = preprocess_image(&path, &config).unwrap();
        let manual: ImageBuffer = resize_area(
            &center_crop_square(&to_color_space(
                &load_image(&path).unwrap(),
                ColorSpace::Gray,
            )),
            4,
            4,
        )
        .unwrap();
        let expected: Vec<f64> = manual
            .pixels()
            .iter()
            .map(|&v| f64::from(v) / 127.5 - 1.0)
            .collect();
        assert_eq!(tensor, expected);
    }

    #[test]
    fn train_gan_runs_end_to_end_from_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut ids = Vec::new();
        let mut sources = BTreeMap::new();
        for i in 0..12 {
            let name = format!("img_{i:02}.png");
            let path = write_png(dir.path(), &name, 6, (i * 17) as u8);
            sources.insert(name.clone(), path);
            ids.push(name);
        }
        let split = split_datasets(&ids, 3).unwrap();
        let config = tiny_config();
        let out: TrainOutcome = train_gan(&split, &sources, &config).unwrap();
        assert_eq!(out.losses.len(), 36);
    }

    #[test]
    fn train_gan_reports_an_id_with_no_source_path() {
        let dir = tempfile::tempdir().unwrap();
        let mut ids = Vec::new();
        let mut sources = BTreeMap::new();
        for i in 0..12 {
            let name = format!("img_{i:02}.png");
            let path = write_png(dir.path(), &name, 6, (i * 11) as u8);
            sources.insert(name.clone(), path);
            ids.push(name);
        }
        sources.remove("img_05.png");
        let split = split_datasets(&ids, 3).unwrap();
        let err = train_gan::<f64>(&split, &sources, &tiny_config()).unwrap_err();
        assert!(matches!(err, GanError::MissingSource(id) if id == "img_05.png"));
    }

    #[test]
    fn loss_csv_has_the_expected_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("losses.csv");
        let records = [
            LossRecord {
                epoch: 0,
                iteration: 0,
                d_loss: 1.5,
                g_loss: 0.25,
            },
            LossRecord {
                epoch: 0,
                iteration: 1,
                d_loss: std::f64::consts::LN_2,
                g_loss: 2.0,
            },
        ];
        write_loss_csv(&records, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "epoch,iteration,d_loss,g_loss\n0,0,1.5,0.25\n0,1,0.6931471805599453,2\n"
        );
    }

    #[test]
    fn f32_training_runs_with_the_same_schedule() {
        let config = tiny_config();
        let a32: Vec<Vec<f32>> = tensors(16, 0)
            .into_iter()
            .map(|t| t.into_iter().map(|v| v as f32).collect())
            .collect();
        let b32: Vec<Vec<f32>> = tensors(16, 1)
            .into_iter()
            .map(|t| t.into_iter().map(|v| v as f32).collect())
            .collect();
        let out = train_from_tensors(&a32, &b32, &config).unwrap();
        assert_eq!(out.losses.len(), 36);
        assert!(out.losses.iter().all(|r| r.d_loss.is_finite()));
    }
}
