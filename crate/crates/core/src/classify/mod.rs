//! Nearest-neighbour and support-vector classification of feature vectors.

pub mod distance;
pub mod knn;
pub mod model_io;
pub mod svm;

use thiserror::Error;

pub use distance::{distance_euclidean, distance_log, Distance};
pub use knn::{KnnModel, KnnPrediction};
pub use svm::{kernel_poly, svm_train, BinaryMachine, SvmModel, SvmParams, SvmPrediction};

/// A feature vector with its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub vector: Vec<f64>,
    pub label: String,
}

impl LabeledSample {
    pub fn new(vector: Vec<f64>, label: impl Into<String>) -> Self {
        Self {
            vector,
            label: label.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("training set is empty")]
    EmptyTraining,
    #[error("neighbors k = {k} must be between 1 and the training size {n}")]
    InvalidNeighbors { k: usize, n: usize },
    #[error("at least two classes are required, found {0}")]
    SingleClass(usize),
    #[error("non-finite feature value in sample {sample}, dimension {dim}")]
    NonFinite { sample: usize, dim: usize },
    #[error("invalid SVM parameter: {0}")]
    InvalidParam(String),
    #[error("model has no binary machines")]
    EmptyModel,
}

pub(crate) fn check_dims(samples: &[LabeledSample]) -> Result<usize, ClassifyError> {
    let dim = samples.first().ok_or(ClassifyError::EmptyTraining)?.vector.len();
    for s in samples {
        if s.vector.len() != dim {
            return Err(ClassifyError::LengthMismatch {
                left: dim,
                right: s.vector.len(),
            });
        }
    }
    Ok(dim)
}
