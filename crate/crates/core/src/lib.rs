//! Non-binary local gradient contour (NBLGC) texture descriptor.
//!
//! Images are unit-normalized, cut into non-overlapping 3x3 blocks, and each
//! block is summarised by `-mu_w * G * ln(G)`: a gradient-contour value `G`
//! weighted by the Hanman-fuzzifier membership of the center pixel. The
//! resulting vectors are classified with a log-distance nearest-neighbour
//! rule or a one-vs-one polynomial SVM, and evaluated with train/test splits,
//! stratified k-fold cross-validation and FAR/GAR sweeps.
//!
//! ```
//! use nblgc::{extract, ContourVariant, FuzzifierRef, GrayImage};
//!
//! let img = GrayImage::new(6, 6, (0..36).map(|i| i as f64 / 35.0).collect()).unwrap();
//! let fv = extract(&img, ContourVariant::G1, FuzzifierRef::Average).unwrap();
//! assert_eq!(fv.len(), 4);
//! ```

pub mod classify;
pub mod cli;
pub mod contours;
pub mod eval;
pub mod features;
pub mod image_io;
pub mod infoset;
pub mod numfmt;

pub use classify::{Distance, KnnModel, LabeledSample, SvmModel, SvmParams};
pub use contours::{ContourValues, ContourVariant};
pub use eval::{ClassifierConfig, EvalReport};
pub use features::{block_feature, extract, partition_blocks, FeatureVector};
pub use image_io::{load_dataset, normalize_unit, parse_pgm, resize_bilinear, GrayImage, RawImage};
pub use infoset::{fuzzifier, membership_center, FuzzifierRef, Window3x3};
