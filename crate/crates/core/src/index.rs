//! The searchable image index: build, persist, query, export.
//!
//! An index is a flat list of entries — one per decodable image under a
//! directory — each carrying the image's histogram feature under a shared
//! [`IndexConfig`]. Queries score every entry against the query feature
//! (brute force; desk scale needs nothing cleverer), order by
//! [`more_similar`] with ascending-id tie-breaking, and truncate to `k`.
//! Results can be exported as `rank_NN_*` file copies plus a `results.json`
//! manifest.
//!
//! Persistence is versioned JSON with a fixed field layout; loading
//! re-validates every invariant so a hand-edited file cannot smuggle an
//! invalid feature into the process.

use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil::temp_sibling;
use crate::histogram::{compute_histogram, HistogramError, HistogramFeature, DEFAULT_BINS};
use crate::imaging::{
    has_supported_extension, load_image, to_color_space, ColorSpace, ImageBuffer, ImagingError,
    RegionGrid,
};
use crate::metrics::{more_similar, score, MetricKind, MetricsError, Score};

/// Default number of results a query returns.
pub const DEFAULT_K: usize = 12;
/// Index file format version this build reads and writes.
pub const INDEX_FORMAT_VERSION: u32 = 1;
/// Name of the manifest file written next to exported results.
pub const MANIFEST_FILE_NAME: &str = "results.json";

/// Errors from index construction, persistence, queries and export.
#[derive(Debug, Error)]
pub enum IndexError {
    /// The scanned directory holds no decodable image, or a query ran
    /// against an index with no entries.
    #[error("no decodable images in the dataset")]
    EmptyDataset,
    /// The index file declares a format version this build does not speak.
    #[error("index format version {found} not supported (expected {INDEX_FORMAT_VERSION})")]
    VersionMismatch { found: u64 },
    /// The index file is malformed or violates an index invariant.
    #[error("corrupt index: {0}")]
    CorruptIndex(String),
    /// Queries must request at least one result.
    #[error("k must be at least 1")]
    InvalidK,
    /// A ranked item referenced an id the index does not contain.
    #[error("id not present in index: {0}")]
    UnknownId(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Histogram(#[from] HistogramError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> IndexError {
    IndexError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Feature parameters shared by every entry of an index.
///
/// Serialized verbatim into the index file (`bins`, `color_space`,
/// `grid_rows`, `grid_cols`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexConfig {
    pub bins: usize,
    pub color_space: ColorSpace,
    pub grid_rows: u32,
    pub grid_cols: u32,
}

impl Default for IndexConfig {
    /// 32 bins over HSV with a 3x3 grid.
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            color_space: ColorSpace::Hsv,
            grid_rows: 3,
            grid_cols: 3,
        }
    }
}

impl IndexConfig {
    /// The segmentation grid described by this config.
    pub fn grid(&self) -> Result<RegionGrid, ImagingError> {
        RegionGrid::new(self.grid_rows, self.grid_cols)
    }

    /// Expected feature length under this config.
    pub fn feature_len(&self) -> usize {
        self.bins
            * self.color_space.channels()
            * (self.grid_rows as usize * self.grid_cols as usize)
    }
}

/// One indexed image: a stable id (its path relative to the indexed root),
/// where the file lives, its pixel dimensions, and its feature.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub id: String,
    pub path: PathBuf,
    pub width: u32,
    pub height: u32,
    pub feature: HistogramFeature<f64>,
}

/// An immutable, queryable set of indexed images.
///
/// Entries are sorted ascending by id (byte-lexicographic), ids are unique,
/// and every feature's shape matches the config — enforced on construction
/// and therefore on load.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageIndex {
    config: IndexConfig,
    entries: Vec<IndexEntry>,
}

impl ImageIndex {
    /// Assembles an index, validating the entry invariants.
    pub fn new(config: IndexConfig, entries: Vec<IndexEntry>) -> Result<Self, IndexError> {
        let grid = config.grid()?;
        let regions = grid.regions();
        let channels = config.color_space.channels();
        for pair in entries.windows(2) {
            match pair[0].id.cmp(&pair[1].id) {
                Ordering::Less => {}
                Ordering::Equal => {
                    return Err(IndexError::CorruptIndex(format!(
                        "duplicate id '{}'",
                        pair[0].id
                    )))
                }
                Ordering::Greater => {
                    return Err(IndexError::CorruptIndex(format!(
                        "entries not sorted by id: '{}' before '{}'",
                        pair[0].id, pair[1].id
                    )))
                }
            }
        }
        for entry in &entries {
            let f = &entry.feature;
            if f.bins_per_channel() != config.bins
                || f.channels() != channels
                || f.regions() != regions
            {
                return Err(IndexError::CorruptIndex(format!(
                    "feature shape of '{}' does not match the index config",
                    entry.id
                )));
            }
        }
        Ok(Self { config, entries })
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Looks an entry up by id (binary search over the sorted entries).
    pub fn get(&self, id: &str) -> Option<&IndexEntry> {
        self.entries
            .binary_search_by(|e| e.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// A file the index build could not use, and why.
#[derive(Debug, Clone)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

/// Outcome of [`build_index`]: the index plus a report of skipped files.
#[derive(Debug)]
pub struct IndexBuild {
    pub index: ImageIndex,
    pub skipped: Vec<SkippedFile>,
}

/// Converts an image into the config's color space and computes its feature.
///
/// Build and query both go through this function, so a file indexed and then
/// used as a query produces the bit-identical feature vector.
pub fn compute_feature(
    image: &ImageBuffer,
    config: &IndexConfig,
) -> Result<HistogramFeature<f64>, IndexError> {
    let converted = to_color_space(image, config.color_space);
    let grid = config.grid()?;
    Ok(compute_histogram(&converted, &grid, config.bins)?)
}

/// Recursively scans `dir` for images and indexes every decodable one.
///
/// Candidates are files with a `.png`/`.jpg`/`.jpeg`/`.bmp` extension
/// (case-insensitive); other files are not image candidates and are ignored.
/// Candidates that fail to decode or to featurize are skipped with a
/// recorded reason — a dirty corpus never aborts the build. Entry features
/// are computed in parallel; entries are sorted by id so the result is
/// identical for a fixed directory tree regardless of scheduling.
pub fn build_index(dir: &Path, config: &IndexConfig) -> Result<IndexBuild, IndexError> {
    config.grid()?; // surface an invalid grid before walking
    let mut candidates: Vec<(String, PathBuf)> = Vec::new();
    for entry in walkdir::WalkDir::new(dir) {
        let entry = entry.map_err(|e| {
            let path = e
                .path()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| dir.to_path_buf());
            match e.into_io_error() {
                Some(io) => io_err(&path, io),
                None => IndexError::CorruptIndex("filesystem loop while scanning".into()),
            }
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.into_path();
        if !has_supported_extension(&path) {
            continue;
        }
        let id = path
            .strip_prefix(dir)
            .unwrap_or(&path)
            .to_string_lossy()
            .into_owned();
        candidates.push((id, path));
    }
    candidates.sort_by(|a, b| a.0.cmp(&b.0));

    let results: Vec<Result<IndexEntry, SkippedFile>> = candidates
        .into_par_iter()
        .map(|(id, path)| {
            let build = |path: &Path| -> Result<IndexEntry, IndexError> {
                let image = load_image(path)?;
                let feature = compute_feature(&image, config)?;
                Ok(IndexEntry {
                    id: id.clone(),
                    path: path.to_path_buf(),
                    width: image.width(),
                    height: image.height(),
                    feature,
                })
            };
            build(&path).map_err(|e| SkippedFile {
                path,
                reason: e.to_string(),
            })
        })
        .collect();

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(entry) => entries.push(entry),
            Err(skip) => skipped.push(skip),
        }
    }
    if entries.is_empty() {
        return Err(IndexError::EmptyDataset);
    }
    Ok(IndexBuild {
        index: ImageIndex::new(config.clone(), entries)?,
        skipped,
    })
}

// ---------------------------------------------------------------------------
// Persistence: versioned JSON with a fixed field layout.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexFile {
    version: u32,
    config: IndexConfig,
    entries: Vec<IndexEntryDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexEntryDto {
    id: String,
    path: String,
    width: u32,
    height: u32,
    feature: Vec<f64>,
}

/// Serializes JSON prettily and lands it via a temp file + rename, so an
/// interrupted write can never leave a half-written artifact in place.
fn write_json_atomically<S: Serialize>(value: &S, path: &Path) -> Result<(), IndexError> {
    let mut json = serde_json::to_string_pretty(value)
        .map_err(|e| IndexError::CorruptIndex(format!("serialization failed: {e}")))?;
    json.push('\n');
    crate::fsutil::write_atomic(path, json.as_bytes()).map_err(|e| io_err(path, e))
}

/// Writes the index to `path` as version-1 JSON.
///
/// Field layout: `version`, `config{bins, color_space, grid_rows,
/// grid_cols}`, `entries[{id, path, width, height, feature[]}]`. Floats are
/// serialized in round-trip-exact decimal form, so save → load reproduces
/// every feature value bit-for-bit, and the same index always produces
/// byte-identical files.
pub fn save_index(index: &ImageIndex, path: &Path) -> Result<(), IndexError> {
    let file = IndexFile {
        version: INDEX_FORMAT_VERSION,
        config: index.config.clone(),
        entries: index
            .entries
            .iter()
            .map(|e| IndexEntryDto {
                id: e.id.clone(),
                path: e.path.to_string_lossy().into_owned(),
                width: e.width,
                height: e.height,
                feature: e.feature.values().to_vec(),
            })
            .collect(),
    };
    write_json_atomically(&file, path)
}

/// Loads an index file, checking the format version first and then every
/// index invariant (feature normalization and shape, id order, uniqueness).
pub fn load_index(path: &Path) -> Result<ImageIndex, IndexError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| IndexError::CorruptIndex(format!("malformed JSON: {e}")))?;
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| IndexError::CorruptIndex("missing or non-integer version field".into()))?;
    if version != u64::from(INDEX_FORMAT_VERSION) {
        return Err(IndexError::VersionMismatch { found: version });
    }
    let file: IndexFile =
        serde_json::from_value(value).map_err(|e| IndexError::CorruptIndex(e.to_string()))?;

    let regions = file.config.grid()?.regions();
    let channels = file.config.color_space.channels();
    let mut entries = Vec::with_capacity(file.entries.len());
    for dto in file.entries {
        let feature =
            HistogramFeature::from_parts(file.config.bins, channels, regions, dto.feature)
                .map_err(|e| IndexError::CorruptIndex(format!("entry '{}': {e}", dto.id)))?;
        entries.push(IndexEntry {
            id: dto.id,
            path: PathBuf::from(dto.path),
            width: dto.width,
            height: dto.height,
            feature,
        });
    }
    ImageIndex::new(file.config, entries)
}

// ---------------------------------------------------------------------------
// Queries and export.

/// One ranked query result.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedItem {
    pub id: String,
    pub score: f64,
}

/// Ordered query results, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub metric: MetricKind,
    /// The requested result count (items may be fewer on a small index).
    pub k: usize,
    pub items: Vec<RankedItem>,
}

/// Scores every entry against the query image and returns the top `k`.
///
/// The query feature is computed with the index's own config. The query
/// feature is always the first argument of the metric (relevant for the
/// asymmetric chi-squared). Ordering is [`more_similar`] with exact ties
/// broken by ascending id; the top-k list is therefore a prefix of the
/// top-(k+1) list for every k.
pub fn query_top_k(
    index: &ImageIndex,
    query: &ImageBuffer,
    metric: MetricKind,
    k: usize,
) -> Result<RankedResult, IndexError> {
    if k == 0 {
        return Err(IndexError::InvalidK);
    }
    if index.is_empty() {
        return Err(IndexError::EmptyDataset);
    }
    let query_feature = compute_feature(query, &index.config)?;

    let mut scored: Vec<(&IndexEntry, Score<f64>)> = Vec::with_capacity(index.len());
    for entry in &index.entries {
        // Features share the index config by construction, so the metrics'
        // compatibility check cannot fire here.
        let s = score(metric, &query_feature, &entry.feature)?;
        scored.push((entry, s));
    }
    scored.sort_by(|(ea, sa), (eb, sb)| {
        more_similar(sa, sb)
            .expect("all scores carry the same metric")
            .then_with(|| ea.id.cmp(&eb.id))
    });
    scored.truncate(k);
    Ok(RankedResult {
        metric,
        k,
        items: scored
            .into_iter()
            .map(|(entry, s)| RankedItem {
                id: entry.id.clone(),
                score: s.value,
            })
            .collect(),
    })
}

/// `results.json` document: the metric, requested `k`, and one row per
/// exported file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub metric: MetricKind,
    pub k: usize,
    pub items: Vec<ManifestItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestItem {
    /// 1-based position in the ranking.
    pub rank: usize,
    pub id: String,
    pub score: f64,
    pub source_path: String,
}

impl Manifest {
    /// Reads a manifest back, e.g. to inspect a previous export.
    pub fn load(path: &Path) -> Result<Self, IndexError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| IndexError::CorruptIndex(format!("malformed manifest: {e}")))
    }
}

/// Copies the ranked files into `out_dir` as `rank_01_<basename>`,
/// `rank_02_…`, … and writes the `results.json` manifest.
///
/// Any `rank_*` files from a previous run are removed first, so the
/// directory never accumulates stale results; each copy and the manifest
/// land via temp file + rename.
pub fn export_results(
    result: &RankedResult,
    index: &ImageIndex,
    out_dir: &Path,
) -> Result<(), IndexError> {
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    for dir_entry in std::fs::read_dir(out_dir).map_err(|e| io_err(out_dir, e))? {
        let dir_entry = dir_entry.map_err(|e| io_err(out_dir, e))?;
        let name = dir_entry.file_name();
        let is_stale_rank_file = name.to_string_lossy().starts_with("rank_")
            && dir_entry.file_type().map(|t| t.is_file()).unwrap_or(false);
        if is_stale_rank_file {
            std::fs::remove_file(dir_entry.path()).map_err(|e| io_err(&dir_entry.path(), e))?;
        }
    }

    let mut manifest_items = Vec::with_capacity(result.items.len());
    for (i, item) in result.items.iter().enumerate() {
        let rank = i + 1;
        let entry = index
            .get(&item.id)
            .ok_or_else(|| IndexError::UnknownId(item.id.clone()))?;
        let basename = entry
            .path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| entry.id.replace(std::path::MAIN_SEPARATOR, "_"));
        let dest = out_dir.join(format!("rank_{rank:02}_{basename}"));
        let tmp = temp_sibling(&dest);
        std::fs::copy(&entry.path, &tmp).map_err(|e| io_err(&entry.path, e))?;
        std::fs::rename(&tmp, &dest).map_err(|e| io_err(&dest, e))?;
        manifest_items.push(ManifestItem {
            rank,
            id: item.id.clone(),
            score: item.score,
            source_path: entry.path.to_string_lossy().into_owned(),
        });
    }
    let manifest = Manifest {
        metric: result.metric,
        k: result.k,
        items: manifest_items,
    };
    write_json_atomically(&manifest, &out_dir.join(MANIFEST_FILE_NAME))
}
