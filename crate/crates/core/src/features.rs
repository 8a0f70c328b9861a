//! Block partitioning and the per-block entropy feature.
//!
//! An image is cut into non-overlapping 3x3 blocks (row-major block order).
//! Each block contributes `F_w = -mu_w * G * ln(G)`, where `G` is the selected
//! gradient contour and `mu_w = center / f_h` the center-pixel membership.

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::contours::{contour, ContourVariant};
use crate::infoset::{membership_center, FuzzifierRef, Window3x3};
use crate::image_io::GrayImage;
use crate::numfmt::fmt_sig;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeatureError {
    #[error("image size {width}x{height} is not a multiple of 3 in both directions")]
    NotMultipleOfThree { width: usize, height: usize },
}

/// Concatenated block features of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub variant: ContourVariant,
    pub reference: FuzzifierRef,
    /// `(rows, cols)` of the block grid.
    pub block_grid: (usize, usize),
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Splits `img` into 3x3 blocks in row-major block order.
pub fn partition_blocks(img: &GrayImage) -> Result<Vec<Window3x3>, FeatureError> {
    let (w, h) = (img.width(), img.height());
    if w % 3 != 0 || h % 3 != 0 {
        return Err(FeatureError::NotMultipleOfThree {
            width: w,
            height: h,
        });
    }
    let mut blocks = Vec::with_capacity((w / 3) * (h / 3));
    for by in (0..h).step_by(3) {
        for bx in (0..w).step_by(3) {
            let mut v = [0.0; 9];
            for dy in 0..3 {
                for dx in 0..3 {
                    v[dy * 3 + dx] = img.get(bx + dx, by + dy);
                }
            }
            blocks.push(Window3x3::from_raster(v));
        }
    }
    Ok(blocks)
}

/// `-mu_w * G * ln(G)`, taken as 0 when `G = 0` or `mu_w = 0`.
pub fn block_feature(win: &Window3x3, variant: ContourVariant, reference: FuzzifierRef) -> f64 {
    entropy_term(membership_center(win, reference), contour(win, variant))
}

/// `-mu * g * ln(g)` with the `g ln g -> 0` limit at `g = 0`.
#[inline]
pub fn entropy_term(mu: f64, g: f64) -> f64 {
    if g == 0.0 || mu == 0.0 {
        return 0.0;
    }
    -mu * g * g.ln()
}

pub fn extract(
    img: &GrayImage,
    variant: ContourVariant,
    reference: FuzzifierRef,
) -> Result<FeatureVector, FeatureError> {
    let blocks = partition_blocks(img)?;
    let values = blocks
        .iter()
        .map(|b| block_feature(b, variant, reference))
        .collect();
    Ok(FeatureVector {
        values,
        variant,
        reference,
        block_grid: (img.height() / 3, img.width() / 3),
    })
}

/// Extracts many images in parallel; output order follows input order.
pub fn extract_all(
    images: &[&GrayImage],
    variant: ContourVariant,
    reference: FuzzifierRef,
) -> Result<Vec<FeatureVector>, FeatureError> {
    images
        .par_iter()
        .map(|img| extract(img, variant, reference))
        .collect()
}

/// Per-dimension z-score scaling fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    /// Fits mean and standard deviation per dimension. Zero-variance
    /// dimensions are centered but not scaled.
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Option<Self> {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        let dim = rows.first()?.len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in &rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Some(Self { mean, scale })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// One row of the feature CSV.
pub struct FeatureRow<'a> {
    pub path: &'a str,
    pub class: &'a str,
    pub features: &'a FeatureVector,
}

/// Writes `path,class,variant,ref,v0,...` rows with 12 significant digits.
///
/// `dim` fixes the header width so an empty dataset still gets a header row.
pub fn write_feature_csv<W: Write>(mut out: W, dim: usize, rows: &[FeatureRow<'_>]) -> io::Result<()> {
    let mut header = String::from("path,class,variant,ref");
    for i in 0..dim {
        header.push_str(&format!(",v{i}"));
    }
    writeln!(out, "{header}")?;
    for row in rows {
        let mut line = format!(
            "{},{},{},{}",
            csv_field(row.path),
            csv_field(row.class),
            row.features.variant,
            row.features.reference
        );
        for v in &row.features.values {
            line.push(',');
            line.push_str(&fmt_sig(*v, 12));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Quotes a CSV field when it contains a delimiter, quote or newline.
pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
