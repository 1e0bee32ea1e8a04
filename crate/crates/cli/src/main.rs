//! `poserec` — the pipeline as one binary: index a directory of images,
//! query the index for the most similar ones, split an exported result set
//! into two training datasets, train the small GAN on them, and sample
//! images from a trained model.
//!
//! Standard output carries a short human-readable report; everything meant
//! for machines (index, manifest, split, model, loss log, samples) goes to
//! the files and directories named by flags. Exit codes: 0 on success, 2
//! when the request itself is invalid (bad flag values, empty dataset,
//! wrong split cardinality, rejected hyperparameters), 1 when the
//! environment fails the request (missing or unreadable files, corrupt or
//! wrong-version artifacts, write errors).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use poserec_core::ganlab::{
    generate_samples, load_model, load_split, save_model, save_split, split_datasets, train_gan,
    write_loss_csv, GanError,
};
use poserec_core::histogram::{MAX_BINS, MIN_BINS};
use poserec_core::imaging::load_image;
use poserec_core::index::{
    build_index, export_results, load_index, query_top_k, save_index, IndexError, Manifest,
};
use poserec_core::{ColorSpace, GanConfig, IndexConfig, MetricKind, DEFAULT_K};

/// Exit code for failures of the environment: missing or unreadable files,
/// corrupt or wrong-version artifacts, failed writes.
const EXIT_ENVIRONMENT: u8 = 1;
/// Exit code for invalid requests: bad flag values or violated domain rules
/// (empty dataset, wrong split cardinality, rejected hyperparameters).
const EXIT_VALIDATION: u8 = 2;

#[derive(Parser)]
#[command(name = "poserec", version)]
/// Image recommendation by grid-histogram similarity, plus a small GAN
/// trained on the recommended images.
struct Cli {
    /// Seed for every randomized step (splitting, training, sampling).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Print extra diagnostics to stderr.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a directory recursively and write a searchable index file.
    Index(IndexArgs),
    /// Rank indexed images against a query image and export the top k.
    Query(QueryArgs),
    /// Split an exported 12-result manifest into two 6-image datasets.
    Split(SplitArgs),
    /// Train the GAN on a saved split.
    GanTrain(GanTrainArgs),
    /// Generate PNG samples from a trained model.
    GanSample(GanSampleArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// Directory scanned (recursively) for images.
    #[arg(long, value_name = "DIR")]
    dir: PathBuf,

    /// Where the index file is written.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Histogram bins per channel.
    #[arg(long, default_value_t = 32,
          value_parser = clap::value_parser!(u64).range(MIN_BINS as u64..=MAX_BINS as u64))]
    bins: u64,

    /// Color space features are computed in (rgb, hsv or gray).
    #[arg(long, default_value_t = ColorSpace::Hsv)]
    color_space: ColorSpace,

    /// Grid side: every image is segmented into grid x grid regions.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    grid: u32,
}

#[derive(Args)]
struct QueryArgs {
    /// Index file produced by `poserec index`.
    #[arg(long, value_name = "FILE")]
    index: PathBuf,

    /// Query image.
    #[arg(long, value_name = "IMAGE")]
    input: PathBuf,

    /// Directory receiving the ranked copies and results.json.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,

    /// Comparison metric (correlation, chi-squared, intersection or
    /// bhattacharyya).
    #[arg(long, default_value_t = MetricKind::Bhattacharyya)]
    metric: MetricKind,

    /// How many results to return.
    #[arg(long, default_value_t = DEFAULT_K as u64,
          value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
}

#[derive(Args)]
struct SplitArgs {
    /// results.json manifest written by `poserec query`.
    #[arg(long, value_name = "FILE")]
    results: PathBuf,

    /// Where the split file is written.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct GanTrainArgs {
    /// Split file produced by `poserec split`.
    #[arg(long, value_name = "FILE")]
    split: PathBuf,

    /// Passes over the 6x6 iteration schedule.
    #[arg(long)]
    epochs: u32,

    /// Training image side; inputs are center-cropped and scaled to
    /// size x size.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    size: u32,

    /// Where the trained model is written.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,

    /// Where the per-iteration loss CSV is written.
    #[arg(long, value_name = "FILE")]
    loss_log: PathBuf,

    /// Train on RGB pixels instead of grayscale.
    #[arg(long)]
    rgb: bool,

    /// Latent vector length.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    latent_dim: u64,

    /// Generator hidden-layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "128")]
    g_hidden: Vec<u64>,

    /// Discriminator hidden-layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "128")]
    d_hidden: Vec<u64>,

    /// Adam learning rate.
    #[arg(long, default_value_t = 2e-4)]
    learning_rate: f64,

    /// Adam first-moment decay.
    #[arg(long, default_value_t = 0.9)]
    beta1: f64,

    /// Adam second-moment decay.
    #[arg(long, default_value_t = 0.999)]
    beta2: f64,

    /// Adam denominator offset.
    #[arg(long, default_value_t = 1e-8)]
    epsilon: f64,
}

#[derive(Args)]
struct GanSampleArgs {
    /// Trained model file.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,

    /// Number of samples to generate.
    #[arg(long)]
    n: u64,

    /// Directory receiving sample_001.png, sample_002.png, ...
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

/// A subcommand failure: the message to print and its exit-code class.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn environment(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_ENVIRONMENT,
            message: message.into(),
        }
    }
}

impl From<IndexError> for Failure {
    fn from(error: IndexError) -> Self {
        let code = match &error {
            IndexError::EmptyDataset
            | IndexError::InvalidK
            | IndexError::Histogram(_)
            | IndexError::Metrics(_) => EXIT_VALIDATION,
            IndexError::VersionMismatch { .. }
            | IndexError::CorruptIndex(_)
            | IndexError::UnknownId(_)
            | IndexError::Imaging(_)
            | IndexError::Io { .. } => EXIT_ENVIRONMENT,
        };
        Failure {
            code,
            message: error.to_string(),
        }
    }
}

impl From<GanError> for Failure {
    fn from(error: GanError) -> Self {
        let code = match &error {
            GanError::WrongCardinality { .. }
            | GanError::LengthMismatch { .. }
            | GanError::DimensionMismatch { .. }
            | GanError::ShapeMismatch(_)
            | GanError::InvalidConfig(_) => EXIT_VALIDATION,
            GanError::NonFiniteLoss { .. }
            | GanError::VersionMismatch { .. }
            | GanError::CorruptModel(_)
            | GanError::CorruptSplit(_)
            | GanError::MissingSource(_)
            | GanError::Imaging(_)
            | GanError::Io { .. } => EXIT_ENVIRONMENT,
        };
        Failure {
            code,
            message: error.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Index(args) => cmd_index(args, cli.verbose),
        Command::Query(args) => cmd_query(args),
        Command::Split(args) => cmd_split(args, cli.seed),
        Command::GanTrain(args) => cmd_gan_train(args, cli.seed, cli.verbose),
        Command::GanSample(args) => cmd_gan_sample(args, cli.seed, cli.verbose),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn cmd_index(args: &IndexArgs, verbose: bool) -> Result<(), Failure> {
    require_dir(&args.dir)?;
    ensure_parent_dir(&args.out)?;
    let config = IndexConfig {
        bins: args.bins as usize,
        color_space: args.color_space,
        grid_rows: args.grid,
        grid_cols: args.grid,
    };
    let build = build_index(&args.dir, &config)?;
    if verbose {
        for skip in &build.skipped {
            eprintln!("skipped {}: {}", skip.path.display(), skip.reason);
        }
    }
    save_index(&build.index, &args.out)?;
    println!(
        "indexed {} images ({} skipped)",
        build.index.len(),
        build.skipped.len()
    );
    Ok(())
}

fn cmd_query(args: &QueryArgs) -> Result<(), Failure> {
    require_file(&args.index)?;
    require_file(&args.input)?;
    let index = load_index(&args.index)?;
    let image = load_image(&args.input).map_err(IndexError::from)?;
    let result = query_top_k(&index, &image, args.metric, args.k as usize)?;
    export_results(&result, &index, &args.out_dir)?;
    println!("rank  score           id");
    for (position, item) in result.items.iter().enumerate() {
        println!("{:>4}  {:<14.9}  {}", position + 1, item.score, item.id);
    }
    println!(
        "exported {} results to {}",
        result.items.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_split(args: &SplitArgs, seed: u64) -> Result<(), Failure> {
    require_file(&args.results)?;
    ensure_parent_dir(&args.out)?;
    let manifest = Manifest::load(&args.results)?;
    let ids: Vec<String> = manifest.items.iter().map(|item| item.id.clone()).collect();
    let sources: BTreeMap<String, PathBuf> = manifest
        .items
        .iter()
        .map(|item| (item.id.clone(), PathBuf::from(&item.source_path)))
        .collect();
    let split = split_datasets(&ids, seed)?;
    save_split(&split, &sources, &args.out)?;
    println!("set A: {}", split.set_a().join(", "));
    println!("set B: {}", split.set_b().join(", "));
    println!("split written to {}", args.out.display());
    Ok(())
}

fn cmd_gan_train(args: &GanTrainArgs, seed: u64, verbose: bool) -> Result<(), Failure> {
    require_file(&args.split)?;
    ensure_parent_dir(&args.out)?;
    ensure_parent_dir(&args.loss_log)?;
    let (split, sources) = load_split(&args.split)?;
    let config = GanConfig {
        image_side: args.size,
        rgb: args.rgb,
        latent_dim: args.latent_dim as usize,
        generator_hidden: args.g_hidden.iter().map(|&w| w as usize).collect(),
        discriminator_hidden: args.d_hidden.iter().map(|&w| w as usize).collect(),
        learning_rate: args.learning_rate,
        beta1: args.beta1,
        beta2: args.beta2,
        epsilon: args.epsilon,
        epochs: args.epochs,
        seed,
    };
    if verbose {
        eprintln!(
            "training {side}x{side} {space}, latent {latent}, G {g:?}, D {d:?}, \
             {epochs} epochs, seed {seed}",
            side = config.image_side,
            space = if config.rgb { "rgb" } else { "gray" },
            latent = config.latent_dim,
            g = config.generator_hidden,
            d = config.discriminator_hidden,
            epochs = config.epochs,
            seed = config.seed,
        );
    }
    let outcome = train_gan::<f64>(&split, &sources, &config)?;
    save_model(&outcome.model, &args.out)?;
    write_loss_csv(&outcome.losses, &args.loss_log)?;
    let last = outcome
        .losses
        .last()
        .expect("a validated config trains at least one iteration");
    println!(
        "trained {} epochs ({} iterations); final d_loss {:.6}, g_loss {:.6}",
        config.epochs,
        outcome.losses.len(),
        last.d_loss,
        last.g_loss
    );
    println!("model written to {}", args.out.display());
    println!("loss log written to {}", args.loss_log.display());
    Ok(())
}

fn cmd_gan_sample(args: &GanSampleArgs, seed: u64, verbose: bool) -> Result<(), Failure> {
    require_file(&args.model)?;
    let model = load_model::<f64>(&args.model)?;
    let paths = generate_samples(&model, args.n as usize, seed, &args.out_dir)?;
    if verbose {
        for path in &paths {
            eprintln!("wrote {}", path.display());
        }
    }
    println!(
        "wrote {} samples to {}",
        paths.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn require_dir(path: &Path) -> Result<(), Failure> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Failure::environment(format!(
            "not a directory: {}",
            path.display()
        )))
    }
}

fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::environment(format!(
            "no such file: {}",
            path.display()
        )))
    }
}

/// Creates the missing parents of an output file path, so `--out runs/x.json`
/// works without a prior mkdir.
fn ensure_parent_dir(path: &Path) -> Result<(), Failure> {
    match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => std::fs::create_dir_all(parent)
            .map_err(|e| Failure::environment(format!("cannot create {}: {e}", parent.display()))),
        _ => Ok(()),
    }
}
