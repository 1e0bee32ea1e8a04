//! Image loading, color-space conversion and geometric prep.
//!
//! Everything downstream (histograms, the GAN trainer) consumes the
//! [`ImageBuffer`] produced here: an 8-bit, interleaved, row-major pixel
//! buffer tagged with its [`ColorSpace`]. Decoding goes through the `image`
//! crate; the numeric conversions are implemented by hand so their rounding
//! is pinned down and identical on every platform.

use std::fmt;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from loading or manipulating images.
#[derive(Debug, Error)]
pub enum ImagingError {
    /// The path does not exist or is not readable as a file.
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    /// The extension or the decoded content is not PNG, JPEG or BMP.
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(PathBuf),
    /// The bytes claim a supported format but fail to decode.
    #[error("corrupt image {path}: {reason}")]
    CorruptImage { path: PathBuf, reason: String },
    /// More grid rows/columns than the image has pixels to fill them.
    #[error("grid {rows}x{cols} is too fine for a {width}x{height} image")]
    GridTooFine {
        rows: u32,
        cols: u32,
        width: u32,
        height: u32,
    },
    /// Zero-sized images carry no pixels and are rejected outright.
    #[error("image dimensions {width}x{height} must be nonzero")]
    InvalidDimensions { width: u32, height: u32 },
    /// A raw pixel buffer whose length disagrees with its dimensions.
    #[error("buffer of {got} bytes does not match {width}x{height} with {channels} channel(s)")]
    BufferSizeMismatch {
        width: u32,
        height: u32,
        channels: usize,
        got: usize,
    },
    /// I/O failure other than the file being absent.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Pixel interpretation of an [`ImageBuffer`].
///
/// All three spaces store channel values in `0..=255`. `Hsv` follows the
/// byte-scaled hexcone convention (hue compressed from degrees onto
/// `0..=255`), `Gray` is single-channel BT.601 luma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    Rgb,
    Hsv,
    Gray,
}

impl ColorSpace {
    /// Number of interleaved channels per pixel.
    pub fn channels(self) -> usize {
        match self {
            ColorSpace::Rgb | ColorSpace::Hsv => 3,
            ColorSpace::Gray => 1,
        }
    }

    /// Canonical lowercase name, matching the CLI flag and JSON spelling.
    pub fn name(self) -> &'static str {
        match self {
            ColorSpace::Rgb => "rgb",
            ColorSpace::Hsv => "hsv",
            ColorSpace::Gray => "gray",
        }
    }
}

impl fmt::Display for ColorSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ColorSpace {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rgb" => Ok(ColorSpace::Rgb),
            "hsv" => Ok(ColorSpace::Hsv),
            "gray" | "grey" => Ok(ColorSpace::Gray),
            other => Err(format!(
                "unknown color space '{other}' (expected rgb, hsv or gray)"
            )),
        }
    }
}

/// Decoded image: row-major, interleaved, 8 bits per channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    color_space: ColorSpace,
    pixels: Vec<u8>,
}

impl ImageBuffer {
    /// Wraps a raw pixel buffer, checking that its length matches
    /// `width * height * channels` and that both dimensions are nonzero.
    pub fn new(
        width: u32,
        height: u32,
        color_space: ColorSpace,
        pixels: Vec<u8>,
    ) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvalidDimensions { width, height });
        }
        let expected = width as usize * height as usize * color_space.channels();
        if pixels.len() != expected {
            return Err(ImagingError::BufferSizeMismatch {
                width,
                height,
                channels: color_space.channels(),
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            color_space,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn color_space(&self) -> ColorSpace {
        self.color_space
    }

    /// Channels per pixel (3 for rgb/hsv, 1 for gray).
    pub fn channels(&self) -> usize {
        self.color_space.channels()
    }

    /// The full interleaved pixel buffer.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Channel values of the pixel at `(x, y)`.
    ///
    /// # Panics
    /// If `x >= width` or `y >= height`.
    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        let c = self.channels();
        let start = (y as usize * self.width as usize + x as usize) * c;
        &self.pixels[start..start + c]
    }
}

/// Extensions [`load_image`] accepts, lowercase.
const SUPPORTED_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];

/// Whether a path carries one of the supported image extensions.
pub fn has_supported_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| SUPPORTED_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

/// Decodes a PNG, JPEG or BMP file into an RGB [`ImageBuffer`].
///
/// Source bit depths are narrowed to 8 bits and an alpha channel, if present,
/// is dropped. The extension is checked first so obviously foreign files
/// (e.g. text) report [`ImagingError::UnsupportedFormat`] without being read.
pub fn load_image(path: &Path) -> Result<ImageBuffer, ImagingError> {
    if !has_supported_extension(path) {
        return Err(ImagingError::UnsupportedFormat(path.to_path_buf()));
    }
    let bytes = std::fs::read(path).map_err(|e| {
        if e.kind() == ErrorKind::NotFound {
            ImagingError::FileNotFound(path.to_path_buf())
        } else {
            ImagingError::Io {
                path: path.to_path_buf(),
                source: e,
            }
        }
    })?;
    let decoded = image::load_from_memory(&bytes).map_err(|e| match e {
        image::ImageError::Unsupported(_) => ImagingError::UnsupportedFormat(path.to_path_buf()),
        other => ImagingError::CorruptImage {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })?;
    let rgb = decoded.to_rgb8();
    ImageBuffer::new(rgb.width(), rgb.height(), ColorSpace::Rgb, rgb.into_raw())
}

/// BT.601 luma of an RGB pixel, rounded half-up.
fn rgb_to_luma(r: u8, g: u8, b: u8) -> u8 {
    let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    y.round() as u8
}

/// Hexcone HSV of an RGB pixel, all channels byte-scaled.
///
/// Hue in degrees is compressed onto `0..=255` via `round(h * 255 / 360)`;
/// saturation is `round(255 * (max - min) / max)` (zero for black); value is
/// `max(r, g, b)` untouched.
fn rgb_to_hsv(r: u8, g: u8, b: u8) -> [u8; 3] {
    let rf = f64::from(r);
    let gf = f64::from(g);
    let bf = f64::from(b);
    let max = rf.max(gf).max(bf);
    let min = rf.min(gf).min(bf);
    let delta = max - min;

    let v = max as u8;
    if max == 0.0 {
        return [0, 0, 0];
    }
    let s = (255.0 * delta / max).round() as u8;
    if delta == 0.0 {
        return [0, 0, v];
    }

    let mut h_deg = if max == rf {
        60.0 * ((gf - bf) / delta)
    } else if max == gf {
        60.0 * ((bf - rf) / delta + 2.0)
    } else {
        60.0 * ((rf - gf) / delta + 4.0)
    };
    if h_deg < 0.0 {
        h_deg += 360.0;
    }
    let h = (h_deg * 255.0 / 360.0).round() as u8;
    [h, s, v]
}

/// Inverse of [`rgb_to_hsv`] up to byte rounding.
fn hsv_to_rgb(h: u8, s: u8, v: u8) -> [u8; 3] {
    let h_deg = f64::from(h) * 360.0 / 255.0;
    let sf = f64::from(s) / 255.0;
    let vf = f64::from(v);

    let c = vf * sf;
    let sector = h_deg / 60.0;
    let x = c * (1.0 - (sector % 2.0 - 1.0).abs());
    let m = vf - c;
    let (rf, gf, bf) = match sector {
        s if s < 1.0 => (c, x, 0.0),
        s if s < 2.0 => (x, c, 0.0),
        s if s < 3.0 => (0.0, c, x),
        s if s < 4.0 => (0.0, x, c),
        s if s < 5.0 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [
        (rf + m).round() as u8,
        (gf + m).round() as u8,
        (bf + m).round() as u8,
    ]
}

/// Converts an image between the three supported color spaces.
///
/// Defined for every `(source, target)` pair; converting to the image's own
/// space returns a copy. Gray pixels widen to RGB by channel replication and
/// to HSV as `(0, 0, v)`; HSV narrows to gray through RGB.
pub fn to_color_space(image: &ImageBuffer, target: ColorSpace) -> ImageBuffer {
    use ColorSpace::*;

    if image.color_space == target {
        return image.clone();
    }
    let n = image.width as usize * image.height as usize;
    let mut out = Vec::with_capacity(n * target.channels());
    for i in 0..n {
        let src = &image.pixels[i * image.channels()..(i + 1) * image.channels()];
        let rgb: [u8; 3] = match image.color_space {
            Rgb => [src[0], src[1], src[2]],
            Hsv => hsv_to_rgb(src[0], src[1], src[2]),
            Gray => [src[0], src[0], src[0]],
        };
        match target {
            Rgb => out.extend_from_slice(&rgb),
            Hsv => out.extend_from_slice(&rgb_to_hsv(rgb[0], rgb[1], rgb[2])),
            Gray => out.push(rgb_to_luma(rgb[0], rgb[1], rgb[2])),
        }
    }
    ImageBuffer {
        width: image.width,
        height: image.height,
        color_space: target,
        pixels: out,
    }
}

/// Rectangular grid used to cut an image into regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionGrid {
    rows: u32,
    cols: u32,
}

impl RegionGrid {
    /// A grid with at least one row and one column.
    pub fn new(rows: u32, cols: u32) -> Result<Self, ImagingError> {
        if rows == 0 || cols == 0 {
            return Err(ImagingError::InvalidDimensions {
                width: cols,
                height: rows,
            });
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    /// Total number of regions (`rows * cols`).
    pub fn regions(&self) -> usize {
        self.rows as usize * self.cols as usize
    }
}

/// Boundary of stripe `i` of `n` over an axis of length `len`: `⌊i·len/n⌋`.
fn stripe_start(i: u32, n: u32, len: u32) -> u32 {
    ((u64::from(i) * u64::from(len)) / u64::from(n)) as u32
}

/// Cuts an image into `rows x cols` regions, returned row-major.
///
/// Region boundaries follow `⌊i·len/n⌋`, so every pixel lands in exactly one
/// region and region extents along an axis differ by at most one pixel.
/// Fails with [`ImagingError::GridTooFine`] when the image has fewer pixel
/// rows or columns than the grid asks for.
pub fn segment_regions(
    image: &ImageBuffer,
    grid: &RegionGrid,
) -> Result<Vec<ImageBuffer>, ImagingError> {
    if grid.rows > image.height || grid.cols > image.width {
        return Err(ImagingError::GridTooFine {
            rows: grid.rows,
            cols: grid.cols,
            width: image.width,
            height: image.height,
        });
    }
    let c = image.channels();
    let mut regions = Vec::with_capacity(grid.regions());
    for r in 0..grid.rows {
        let y0 = stripe_start(r, grid.rows, image.height);
        let y1 = stripe_start(r + 1, grid.rows, image.height);
        for col in 0..grid.cols {
            let x0 = stripe_start(col, grid.cols, image.width);
            let x1 = stripe_start(col + 1, grid.cols, image.width);
            let mut pixels = Vec::with_capacity(((y1 - y0) * (x1 - x0)) as usize * c);
            for y in y0..y1 {
                let row_start = (y as usize * image.width as usize + x0 as usize) * c;
                let row_end = (y as usize * image.width as usize + x1 as usize) * c;
                pixels.extend_from_slice(&image.pixels[row_start..row_end]);
            }
            regions.push(ImageBuffer {
                width: x1 - x0,
                height: y1 - y0,
                color_space: image.color_space,
                pixels,
            });
        }
    }
    Ok(regions)
}

/// Largest centered square crop of an image.
///
/// The crop side is `min(width, height)` and offsets round down, so a 5x3
/// image keeps columns 1..=3. Already-square images come back as a copy.
pub fn center_crop_square(image: &ImageBuffer) -> ImageBuffer {
    let side = image.width.min(image.height);
    let x0 = (image.width - side) / 2;
    let y0 = (image.height - side) / 2;
    let c = image.channels();
    let mut pixels = Vec::with_capacity(side as usize * side as usize * c);
    for y in y0..y0 + side {
        let row_start = (y as usize * image.width as usize + x0 as usize) * c;
        let row_end = row_start + side as usize * c;
        pixels.extend_from_slice(&image.pixels[row_start..row_end]);
    }
    ImageBuffer {
        width: side,
        height: side,
        color_space: image.color_space,
        pixels,
    }
}

/// Resizes by box averaging: target pixel `(tx, ty)` is the mean of the
/// source rectangle `⌊t·len/new⌋ ..< ⌊(t+1)·len/new⌋` on each axis (widened
/// to at least one source pixel, which also covers upscaling), rounded
/// half-up per channel.
pub fn resize_area(
    image: &ImageBuffer,
    new_width: u32,
    new_height: u32,
) -> Result<ImageBuffer, ImagingError> {
    if new_width == 0 || new_height == 0 {
        return Err(ImagingError::InvalidDimensions {
            width: new_width,
            height: new_height,
        });
    }
    let c = image.channels();
    let mut pixels = Vec::with_capacity(new_width as usize * new_height as usize * c);
    let mut acc = vec![0.0_f64; c];
    for ty in 0..new_height {
        let y0 = stripe_start(ty, new_height, image.height);
        let y1 = stripe_start(ty + 1, new_height, image.height).max(y0 + 1);
        for tx in 0..new_width {
            let x0 = stripe_start(tx, new_width, image.width);
            let x1 = stripe_start(tx + 1, new_width, image.width).max(x0 + 1);
            acc.fill(0.0);
            for y in y0..y1 {
                for x in x0..x1 {
                    let p = (y as usize * image.width as usize + x as usize) * c;
                    for (k, a) in acc.iter_mut().enumerate() {
                        *a += f64::from(image.pixels[p + k]);
                    }
                }
            }
            let count = f64::from((y1 - y0) * (x1 - x0));
            for a in &acc {
                pixels.push((a / count).round() as u8);
            }
        }
    }
    ImageBuffer::new(new_width, new_height, image.color_space, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// 4x2 RGB test image, row-major:
    /// (255,0,0) (0,255,0) (0,0,255) (255,255,0)
    /// (0,255,255) (255,0,255) (17,34,51) (204,153,102)
    const FIXTURE_PIXELS: [u8; 24] = [
        255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 0, //
        0, 255, 255, 255, 0, 255, 17, 34, 51, 204, 153, 102,
    ];

    fn fixture_path() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/rgb_4x2.png")
    }

    fn fixture_image() -> ImageBuffer {
        ImageBuffer::new(4, 2, ColorSpace::Rgb, FIXTURE_PIXELS.to_vec()).unwrap()
    }

    #[test]
    fn loads_png_pixels_exactly() {
        let img = load_image(&fixture_path()).unwrap();
        assert_eq!(img.width(), 4);
        assert_eq!(img.height(), 2);
        assert_eq!(img.color_space(), ColorSpace::Rgb);
        assert_eq!(img.pixels(), &FIXTURE_PIXELS);
    }

    #[test]
    fn missing_file_is_reported_as_such() {
        let err = load_image(Path::new("/nonexistent/nowhere.png")).unwrap_err();
        assert!(matches!(err, ImagingError::FileNotFound(_)), "{err:?}");
    }

    #[test]
    fn foreign_extension_is_unsupported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("notes.txt");
        std::fs::write(&path, "not an image").unwrap();
        let err = load_image(&path).unwrap_err();
        assert!(matches!(err, ImagingError::UnsupportedFormat(_)), "{err:?}");
    }

    #[test]
    fn truncated_png_is_corrupt() {
        let bytes = std::fs::read(fixture_path()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cut.png");
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        let err = load_image(&path).unwrap_err();
        assert!(matches!(err, ImagingError::CorruptImage { .. }), "{err:?}");
    }

    #[test]
    fn buffer_length_is_checked() {
        let err = ImageBuffer::new(2, 2, ColorSpace::Rgb, vec![0; 11]).unwrap_err();
        assert!(matches!(err, ImagingError::BufferSizeMismatch { .. }));
        assert!(ImageBuffer::new(2, 2, ColorSpace::Gray, vec![0; 4]).is_ok());
    }

    #[test]
    fn zero_dimensions_are_rejected() {
        assert!(matches!(
            ImageBuffer::new(0, 3, ColorSpace::Rgb, vec![]),
            Err(ImagingError::InvalidDimensions { .. })
        ));
    }

    #[test]
    fn hsv_of_reference_colors() {
        // Hue bytes: round(h_deg * 255 / 360).
        assert_eq!(rgb_to_hsv(255, 0, 0), [0, 255, 255]); // red, 0°
        assert_eq!(rgb_to_hsv(0, 255, 0), [85, 255, 255]); // green, 120°
        assert_eq!(rgb_to_hsv(0, 0, 255), [170, 255, 255]); // blue, 240°
        assert_eq!(rgb_to_hsv(255, 255, 0), [43, 255, 255]); // yellow, 60° -> 42.5
        assert_eq!(rgb_to_hsv(255, 255, 255), [0, 0, 255]); // white
        assert_eq!(rgb_to_hsv(0, 0, 0), [0, 0, 0]); // black
        assert_eq!(rgb_to_hsv(128, 128, 128), [0, 0, 128]); // gray
                                                            // Orange: h = 60 * (128/255) = 30.118° -> round(21.33) = 21.
        assert_eq!(rgb_to_hsv(255, 128, 0), [21, 255, 255]);
    }

    #[test]
    fn gray_of_reference_colors() {
        assert_eq!(rgb_to_luma(255, 0, 0), 76); // 76.245
        assert_eq!(rgb_to_luma(0, 255, 0), 150); // 149.685
        assert_eq!(rgb_to_luma(0, 0, 255), 29); // 29.07
        assert_eq!(rgb_to_luma(255, 255, 255), 255);
        assert_eq!(rgb_to_luma(0, 0, 0), 0);
    }

    #[test]
    fn primary_colors_survive_hsv_round_trip() {
        for rgb in [[255, 0, 0], [0, 255, 0], [0, 0, 255], [255, 255, 255]] {
            let [h, s, v] = rgb_to_hsv(rgb[0], rgb[1], rgb[2]);
            assert_eq!(hsv_to_rgb(h, s, v), rgb);
        }
    }

    #[test]
    fn conversion_is_total_over_all_space_pairs() {
        use ColorSpace::*;
        let img = fixture_image();
        for src in [Rgb, Hsv, Gray] {
            let in_src = to_color_space(&img, src);
            for dst in [Rgb, Hsv, Gray] {
                let out = to_color_space(&in_src, dst);
                assert_eq!(out.color_space(), dst);
                assert_eq!(out.width(), 4);
                assert_eq!(out.height(), 2);
                assert_eq!(out.pixels().len(), 8 * dst.channels());
            }
        }
    }

    #[test]
    fn same_space_conversion_is_a_copy() {
        let img = fixture_image();
        assert_eq!(to_color_space(&img, ColorSpace::Rgb), img);
    }

    #[test]
    fn gray_widens_by_replication() {
        let g = ImageBuffer::new(2, 1, ColorSpace::Gray, vec![10, 200]).unwrap();
        let rgb = to_color_space(&g, ColorSpace::Rgb);
        assert_eq!(rgb.pixels(), &[10, 10, 10, 200, 200, 200]);
        let hsv = to_color_space(&g, ColorSpace::Hsv);
        assert_eq!(hsv.pixels(), &[0, 0, 10, 0, 0, 200]);
    }

    #[test]
    fn segmentation_covers_without_overlap() {
        let img = fixture_image();
        let grid = RegionGrid::new(2, 2).unwrap();
        let regions = segment_regions(&img, &grid).unwrap();
        assert_eq!(regions.len(), 4);
        // Row-major: top-left, top-right, bottom-left, bottom-right.
        assert_eq!(regions[0].pixels(), &[255, 0, 0, 0, 255, 0]);
        assert_eq!(regions[1].pixels(), &[0, 0, 255, 255, 255, 0]);
        assert_eq!(regions[2].pixels(), &[0, 255, 255, 255, 0, 255]);
        assert_eq!(regions[3].pixels(), &[17, 34, 51, 204, 153, 102]);
        let total: usize = regions.iter().map(|r| r.pixels().len()).sum();
        assert_eq!(total, img.pixels().len());
    }

    #[test]
    fn uneven_axis_splits_differ_by_at_most_one() {
        let img = ImageBuffer::new(5, 5, ColorSpace::Gray, vec![7; 25]).unwrap();
        let grid = RegionGrid::new(2, 3).unwrap();
        let regions = segment_regions(&img, &grid).unwrap();
        let heights: Vec<u32> = regions.iter().map(|r| r.height()).collect();
        let widths: Vec<u32> = regions.iter().map(|r| r.width()).collect();
        // ⌊i·5/2⌋ boundaries: rows of height 2 then 3; ⌊i·5/3⌋: widths 1,2,2.
        assert_eq!(heights, vec![2, 2, 2, 3, 3, 3]);
        assert_eq!(widths, vec![1, 2, 2, 1, 2, 2]);
    }

    #[test]
    fn too_fine_grid_is_rejected() {
        let img = fixture_image(); // 4x2
        let grid = RegionGrid::new(3, 3).unwrap();
        assert!(matches!(
            segment_regions(&img, &grid),
            Err(ImagingError::GridTooFine { .. })
        ));
    }

    #[test]
    fn center_crop_takes_middle_columns() {
        let img = fixture_image(); // 4x2 -> 2x2 starting at x=1
        let crop = center_crop_square(&img);
        assert_eq!((crop.width(), crop.height()), (2, 2));
        assert_eq!(
            crop.pixels(),
            &[0, 255, 0, 0, 0, 255, 255, 0, 255, 17, 34, 51]
        );
    }

    #[test]
    fn square_crop_is_identity() {
        let img = ImageBuffer::new(3, 3, ColorSpace::Gray, vec![1; 9]).unwrap();
        assert_eq!(center_crop_square(&img), img);
    }

    #[test]
    fn area_resize_averages_boxes() {
        let img = fixture_image();
        let small = resize_area(&img, 2, 1).unwrap();
        // Left 2x2 block {(255,0,0),(0,255,0),(0,255,255),(255,0,255)}:
        // every channel averages 127.5 and rounds half-up to 128.
        // Right 2x2 block {(0,0,255),(255,255,0),(17,34,51),(204,153,102)}:
        // R=119, G=110.5->111, B=102.
        assert_eq!(small.pixels(), &[128, 128, 128, 119, 111, 102]);
    }

    #[test]
    fn area_resize_upscales_by_replication() {
        let img = ImageBuffer::new(1, 1, ColorSpace::Rgb, vec![9, 8, 7]).unwrap();
        let big = resize_area(&img, 2, 2).unwrap();
        assert_eq!(big.pixels(), &[9, 8, 7, 9, 8, 7, 9, 8, 7, 9, 8, 7]);
    }

    #[test]
    fn solid_image_resizes_to_same_value() {
        let img = ImageBuffer::new(7, 5, ColorSpace::Gray, vec![123; 35]).unwrap();
        let out = resize_area(&img, 3, 3).unwrap();
        assert!(out.pixels().iter().all(|&p| p == 123));
    }

    proptest! {
        #[test]
        fn hsv_conversion_never_panics_and_v_is_max(r in 0u8.., g in 0u8.., b in 0u8..) {
            let [_, _, v] = rgb_to_hsv(r, g, b);
            prop_assert_eq!(v, r.max(g).max(b));
        }

        #[test]
        fn luma_is_within_channel_range(r in 0u8.., g in 0u8.., b in 0u8..) {
            let y = rgb_to_luma(r, g, b);
            prop_assert!(y >= r.min(g).min(b));
            prop_assert!(y <= r.max(g).max(b));
        }

        #[test]
        fn segmentation_partitions_pixel_count(
            w in 1u32..20, h in 1u32..20, rows in 1u32..6, cols in 1u32..6
        ) {
            prop_assume!(rows <= h && cols <= w);
            let img = ImageBuffer::new(w, h, ColorSpace::Gray, vec![0; (w * h) as usize]).unwrap();
            let grid = RegionGrid::new(rows, cols).unwrap();
            let regions = segment_regions(&img, &grid).unwrap();
            prop_assert_eq!(regions.len(), grid.regions());
            let total: u32 = regions.iter().map(|r| r.width() * r.height()).sum();
            prop_assert_eq!(total, w * h);
            for r in &regions {
                prop_assert!(r.width() >= 1 && r.height() >= 1);
            }
        }
    }
}
