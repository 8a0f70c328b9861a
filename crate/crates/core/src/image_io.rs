//! PGM decoding, unit normalization, bilinear resizing and dataset loading.
//!
//! Datasets are laid out as `root/<class>/<image>.pgm`. Classes and files are
//! visited in lexicographic order so every run sees the same entry order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

/// Errors produced while decoding a PGM byte stream. Every variant carries the
/// byte offset at which the problem was detected.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PgmError {
    #[error("bad magic number at byte offset {offset}: expected P2 or P5")]
    BadMagic { offset: usize },
    #[error("non-numeric token at byte offset {offset}")]
    InvalidToken { offset: usize },
    #[error("invalid {field} value {value} at byte offset {offset}")]
    InvalidHeader {
        field: &'static str,
        value: u64,
        offset: usize,
    },
    #[error("truncated pixel data at byte offset {offset}: expected {expected} samples, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("sample {value} exceeds max gray {max_gray} at byte offset {offset}")]
    SampleOutOfRange {
        value: u64,
        max_gray: u16,
        offset: usize,
    },
}

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("pixel buffer has {actual} values, expected {width}x{height}")]
    SizeMismatch {
        width: usize,
        height: usize,
        actual: usize,
    },
    #[error("image dimensions must be non-zero, got {width}x{height}")]
    ZeroDimension { width: usize, height: usize },
    #[error("max gray must be in 1..=65535")]
    BadMaxGray,
    #[error("pixel {index} = {value} is out of range")]
    PixelOutOfRange { index: usize, value: f64 },
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {}: {source}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: PgmError,
    },
    #[error("resize target {width}x{height} is invalid: both sides must be positive multiples of 3")]
    InvalidResize { width: usize, height: usize },
}

/// A decoded PGM raster before normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    width: usize,
    height: usize,
    max_gray: u16,
    pixels: Vec<u16>,
}

impl RawImage {
    pub fn new(
        width: usize,
        height: usize,
        max_gray: u16,
        pixels: Vec<u16>,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        if max_gray == 0 {
            return Err(ImageError::BadMaxGray);
        }
        if pixels.len() != width * height {
            return Err(ImageError::SizeMismatch {
                width,
                height,
                actual: pixels.len(),
            });
        }
        if let Some((index, &v)) = pixels.iter().enumerate().find(|(_, &v)| v > max_gray) {
            return Err(ImageError::PixelOutOfRange {
                index,
                value: f64::from(v),
            });
        }
        Ok(Self {
            width,
            height,
            max_gray,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn max_gray(&self) -> u16 {
        self.max_gray
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }
}

/// A grayscale raster with every value in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        if pixels.len() != width * height {
            return Err(ImageError::SizeMismatch {
                width,
                height,
                actual: pixels.len(),
            });
        }
        if let Some((index, &value)) = pixels
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(ImageError::PixelOutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// Header/raster tokenizer shared by the P2 and P5 paths.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Skips whitespace and `#` comments (which run to end of line).
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    /// Reads the next decimal token. `Ok(None)` means end of input.
    fn next_number(&mut self) -> Result<Option<(u64, usize)>, PgmError> {
        self.skip_separators();
        let start = self.pos;
        if start >= self.bytes.len() {
            return Ok(None);
        }
        let mut value: u64 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_digit() {
                value = value
                    .checked_mul(10)
                    .and_then(|v| v.checked_add(u64::from(b - b'0')))
                    .ok_or(PgmError::InvalidToken { offset: start })?;
                self.pos += 1;
            } else if b.is_ascii_whitespace() || b == b'#' {
                break;
            } else {
                return Err(PgmError::InvalidToken { offset: self.pos });
            }
        }
        if self.pos == start {
            return Err(PgmError::InvalidToken { offset: start });
        }
        Ok(Some((value, start)))
    }

    fn header_field(&mut self, field: &'static str, max: u64) -> Result<u64, PgmError> {
        let offset = self.pos;
        let (value, at) = self.next_number()?.ok_or(PgmError::Truncated {
            offset,
            expected: 1,
            found: 0,
        })?;
        if value == 0 || value > max {
            return Err(PgmError::InvalidHeader {
                field,
                value,
                offset: at,
            });
        }
        Ok(value)
    }
}

/// Decodes a plain (P2) or binary (P5) PGM image.
///
/// Binary images with `max_gray > 255` use big-endian two-byte samples.
pub fn parse_pgm(bytes: &[u8]) -> Result<RawImage, PgmError> {
    let binary = match bytes.get(..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(PgmError::BadMagic { offset: 0 }),
    };
    // The magic must be followed by a separator, otherwise e.g. "P23" would parse.
    if let Some(&b) = bytes.get(2) {
        if !b.is_ascii_whitespace() && b != b'#' {
            return Err(PgmError::BadMagic { offset: 2 });
        }
    }
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.header_field("width", u32::MAX as u64)? as usize;
    let height = cur.header_field("height", u32::MAX as u64)? as usize;
    let max_gray = cur.header_field("max gray", 65535)? as u16;
    let expected = width
        .checked_mul(height)
        .ok_or(PgmError::InvalidHeader {
            field: "height",
            value: height as u64,
            offset: cur.pos,
        })?;

    let mut pixels = Vec::with_capacity(expected.min(bytes.len()));
    if binary {
        // Exactly one whitespace byte separates max gray from the raster.
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => {
                return Err(PgmError::Truncated {
                    offset: cur.pos,
                    expected,
                    found: 0,
                })
            }
        }
        let sample_len = if max_gray > 255 { 2 } else { 1 };
        let raster = &bytes[cur.pos..];
        let found = raster.len() / sample_len;
        if found < expected {
            return Err(PgmError::Truncated {
                offset: bytes.len(),
                expected,
                found,
            });
        }
        for (i, chunk) in raster.chunks_exact(sample_len).take(expected).enumerate() {
            let value = if sample_len == 2 {
                u16::from_be_bytes([chunk[0], chunk[1]])
            } else {
                u16::from(chunk[0])
            };
            if value > max_gray {
                return Err(PgmError::SampleOutOfRange {
                    value: u64::from(value),
                    max_gray,
                    offset: cur.pos + i * sample_len,
                });
            }
            pixels.push(value);
        }
    } else {
        while pixels.len() < expected {
            match cur.next_number()? {
                Some((value, offset)) => {
                    if value > u64::from(max_gray) {
                        return Err(PgmError::SampleOutOfRange {
                            value,
                            max_gray,
                            offset,
                        });
                    }
                    pixels.push(value as u16);
                }
                None => {
                    return Err(PgmError::Truncated {
                        offset: bytes.len(),
                        expected,
                        found: pixels.len(),
                    })
                }
            }
        }
    }

    Ok(RawImage {
        width,
        height,
        max_gray,
        pixels,
    })
}

/// Serializes an image as plain (P2) PGM, one raster row per line.
pub fn write_pgm_plain(img: &RawImage) -> Vec<u8> {
    let mut out = format!("P2\n{} {}\n{}\n", img.width, img.height, img.max_gray);
    for row in img.pixels.chunks(img.width) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// Serializes an image as binary (P5) PGM.
pub fn write_pgm_binary(img: &RawImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.max_gray).into_bytes();
    if img.max_gray > 255 {
        for v in &img.pixels {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(img.pixels.iter().map(|&v| v as u8));
    }
    out
}

/// Divides every pixel by the brightest pixel of this image (not the header
/// max gray). An all-zero image stays all zero.
pub fn normalize_unit(raw: &RawImage) -> GrayImage {
    let peak = raw.pixels.iter().copied().max().unwrap_or(0);
    let pixels = if peak == 0 {
        vec![0.0; raw.pixels.len()]
    } else {
        let peak = f64::from(peak);
        raw.pixels.iter().map(|&v| f64::from(v) / peak).collect()
    };
    GrayImage {
        width: raw.width,
        height: raw.height,
        pixels,
    }
}

/// Bilinear resampling with pixel-center alignment: output pixel `x` samples
/// source coordinate `(x + 0.5) * in_w / out_w - 0.5`, clamped to the image.
pub fn resize_bilinear(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage, ImageError> {
    if out_w == 0 || out_h == 0 {
        return Err(ImageError::ZeroDimension {
            width: out_w,
            height: out_h,
        });
    }
    if out_w == img.width && out_h == img.height {
        return Ok(img.clone());
    }

    let taps = |out: usize, input: usize| -> Vec<(usize, usize, f64)> {
        let scale = input as f64 / out as f64;
        (0..out)
            .map(|o| {
                let src = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (input - 1) as f64);
                let lo = src.floor() as usize;
                let hi = (lo + 1).min(input - 1);
                (lo, hi, src - lo as f64)
            })
            .collect()
    };
    let xs = taps(out_w, img.width);
    let ys = taps(out_h, img.height);

    let mut pixels = Vec::with_capacity(out_w * out_h);
    for &(y0, y1, ty) in &ys {
        for &(x0, x1, tx) in &xs {
            let top = lerp(img.get(x0, y0), img.get(x1, y0), tx);
            let bottom = lerp(img.get(x0, y1), img.get(x1, y1), tx);
            pixels.push(lerp(top, bottom, ty).clamp(0.0, 1.0));
        }
    }
    Ok(GrayImage {
        width: out_w,
        height: out_h,
        pixels,
    })
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t == 0.0 {
        a
    } else {
        a + (b - a) * t
    }
}

/// One loaded image together with its class and position within the class.
#[derive(Debug, Clone)]
pub struct DatasetEntry {
    pub class_label: String,
    pub image_index: usize,
    pub image: GrayImage,
    /// Path relative to the dataset root, `/`-separated.
    pub source_path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    /// Target `(width, height)`; `None` keeps native sizes.
    pub resize_to: Option<(usize, usize)>,
    /// Downgrade unreadable or malformed files to a warning instead of failing.
    pub skip_on_error: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            resize_to: Some((63, 63)),
            skip_on_error: false,
        }
    }
}

/// Loads `root/<class>/*.pgm`, sorted by (class name, file name). Each image
/// is parsed, unit-normalized and resized.
pub fn load_dataset(root: &Path, opts: &LoadOptions) -> Result<Vec<DatasetEntry>, DatasetError> {
    if let Some((w, h)) = opts.resize_to {
        if w == 0 || h == 0 || w % 3 != 0 || h % 3 != 0 {
            return Err(DatasetError::InvalidResize {
                width: w,
                height: h,
            });
        }
    }

    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DatasetError::Io { path, source }
    };

    let mut classes = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let entry = entry.map_err(io_err(root))?;
        if entry.file_type().map_err(io_err(&entry.path()))?.is_dir() {
            classes.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    classes.sort();

    let mut files = Vec::new();
    for class in &classes {
        let dir = root.join(class);
        let mut names = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let entry = entry.map_err(io_err(&dir))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            let is_pgm = Path::new(&name)
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
            if is_pgm && entry.file_type().map_err(io_err(&entry.path()))?.is_file() {
                names.push(name);
            }
        }
        names.sort();
        files.extend(names.into_iter().map(|n| (class.clone(), n)));
    }

    if files.is_empty() {
        log::warn!("no PGM images found under {}", root.display());
        return Ok(Vec::new());
    }

    let loaded: Vec<Result<GrayImage, DatasetError>> = files
        .par_iter()
        .map(|(class, name)| {
            let path = root.join(class).join(name);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            let raw = parse_pgm(&bytes).map_err(|source| DatasetError::Parse {
                path: path.clone(),
                source,
            })?;
            let gray = normalize_unit(&raw);
            match opts.resize_to {
                Some((w, h)) => Ok(resize_bilinear(&gray, w, h).expect("validated resize target")),
                None => Ok(gray),
            }
        })
        .collect();

    let mut entries = Vec::with_capacity(files.len());
    let mut next_index: Option<(&str, usize)> = None;
    for ((class, name), result) in files.iter().zip(loaded) {
        let image = match result {
            Ok(img) => img,
            Err(e) if opts.skip_on_error => {
                log::warn!("skipping: {e}");
                continue;
            }
            Err(e) => return Err(e),
        };
        let image_index = match next_index {
            Some((c, i)) if c == class => i,
            _ => 0,
        };
        next_index = Some((class, image_index + 1));
        entries.push(DatasetEntry {
            class_label: class.clone(),
            image_index,
            image,
            source_path: format!("{class}/{name}"),
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(w: usize, h: usize, max: u16, px: &[u16]) -> RawImage {
        RawImage::new(w, h, max, px.to_vec()).unwrap()
    }

    #[test]
    fn parses_plain_pgm() {
        let img = parse_pgm(b"P2\n2 2\n255\n0 128 255 64").unwrap();
        assert_eq!(img, raw(2, 2, 255, &[0, 128, 255, 64]));
    }

    #[test]
    fn parses_single_byte_p5() {
        let img = parse_pgm(b"P5 1 1 255 \x7f").unwrap();
        assert_eq!(img, raw(1, 1, 255, &[127]));
    }

    #[test]
    fn p5_wide_samples_are_big_endian() {
        let img = parse_pgm(b"P5\n2 1\n65535\n\x01\x02\xff\xfe").unwrap();
        assert_eq!(img.pixels(), &[0x0102, 0xfffe]);
    }

    #[test]
    fn comments_allowed_between_tokens() {
        let img = parse_pgm(b"P2 # magic\n# size next\n2 # w\n1\n# max\n9\n3 # first\n 4\n").unwrap();
        assert_eq!(img, raw(2, 1, 9, &[3, 4]));
    }

    #[test]
    fn p5_raster_may_start_with_hash_byte() {
        // 0x23 is '#', which must be read as a sample once the header ended.
        let img = parse_pgm(b"P5\n1 1\n255\n#").unwrap();
        assert_eq!(img.pixels(), &[0x23]);
    }

    #[test]
    fn truncated_plain_data() {
        let err = parse_pgm(b"P2\n2 2\n255\n0 128 255").unwrap_err();
        assert!(matches!(
            err,
            PgmError::Truncated {
                expected: 4,
                found: 3,
                ..
            }
        ));
    }

    #[test]
    fn truncated_binary_data() {
        let err = parse_pgm(b"P5\n2 2\n255\n\x00\x01").unwrap_err();
        assert!(matches!(err, PgmError::Truncated { found: 2, .. }));
    }

    #[test]
    fn bad_magic() {
        assert_eq!(parse_pgm(b"P6\n1 1\n255\n0"), Err(PgmError::BadMagic { offset: 0 }));
        assert_eq!(parse_pgm(b""), Err(PgmError::BadMagic { offset: 0 }));
        assert_eq!(parse_pgm(b"P25 1 1"), Err(PgmError::BadMagic { offset: 2 }));
    }

    #[test]
    fn sample_exceeding_max_gray() {
        let err = parse_pgm(b"P2\n2 1\n100\n5 101").unwrap_err();
        assert_eq!(
            err,
            PgmError::SampleOutOfRange {
                value: 101,
                max_gray: 100,
                offset: 13
            }
        );
        let err = parse_pgm(b"P5\n1 1\n100\n\xff").unwrap_err();
        assert!(matches!(err, PgmError::SampleOutOfRange { offset: 11, .. }));
    }

    #[test]
    fn non_numeric_header_token() {
        assert_eq!(
            parse_pgm(b"P2\n2 x\n255\n0 0"),
            Err(PgmError::InvalidToken { offset: 5 })
        );
        assert!(matches!(
            parse_pgm(b"P2\n2 2\n25a\n0 0 0 0"),
            Err(PgmError::InvalidToken { offset: 9 })
        ));
    }

    #[test]
    fn header_value_limits() {
        assert!(matches!(
            parse_pgm(b"P2\n0 2\n255\n"),
            Err(PgmError::InvalidHeader { field: "width", .. })
        ));
        assert!(matches!(
            parse_pgm(b"P2\n1 1\n65536\n0"),
            Err(PgmError::InvalidHeader {
                field: "max gray",
                ..
            })
        ));
    }

    #[test]
    fn normalizes_by_image_max() {
        let g = normalize_unit(&raw(4, 1, 255, &[0, 128, 255, 64]));
        assert_eq!(g.pixels(), &[0.0, 128.0 / 255.0, 1.0, 64.0 / 255.0]);
        let g = normalize_unit(&raw(3, 1, 255, &[10, 20, 40]));
        assert_eq!(g.pixels(), &[0.25, 0.5, 1.0]);
        let g = normalize_unit(&raw(3, 1, 255, &[0, 0, 0]));
        assert_eq!(g.pixels(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn resize_identity_is_bit_exact() {
        let px: Vec<f64> = (0..63 * 63).map(|i| (i % 97) as f64 / 96.0).collect();
        let img = GrayImage::new(63, 63, px).unwrap();
        assert_eq!(resize_bilinear(&img, 63, 63).unwrap(), img);
    }

    #[test]
    fn resize_constant_stays_constant() {
        let img = GrayImage::new(7, 5, vec![0.5; 35]).unwrap();
        let out = resize_bilinear(&img, 12, 9).unwrap();
        assert_eq!(out.width(), 12);
        assert_eq!(out.height(), 9);
        assert!(out.pixels().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn resize_two_to_three() {
        let img = GrayImage::new(2, 1, vec![0.0, 1.0]).unwrap();
        let out = resize_bilinear(&img, 3, 1).unwrap();
        assert_eq!(out.pixels(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn resize_rejects_zero_dims() {
        let img = GrayImage::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(resize_bilinear(&img, 0, 3).is_err());
        assert!(resize_bilinear(&img, 3, 0).is_err());
    }

    #[test]
    fn gray_image_rejects_out_of_range() {
        assert!(GrayImage::new(1, 1, vec![1.5]).is_err());
        assert!(GrayImage::new(1, 1, vec![f64::NAN]).is_err());
        assert!(GrayImage::new(2, 1, vec![0.5]).is_err());
    }

    #[test]
    fn raw_image_invariants() {
        assert!(RawImage::new(1, 1, 10, vec![11]).is_err());
        assert!(RawImage::new(1, 1, 0, vec![0]).is_err());
        assert!(RawImage::new(2, 2, 10, vec![0; 3]).is_err());
    }
}
