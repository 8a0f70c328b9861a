//! Train/test splits, accuracy, stratified k-fold cross-validation and ROC sweeps.

pub mod report;
pub mod roc;
pub mod split;

use rayon::prelude::*;
use thiserror::Error;

use crate::classify::model_io::Model;
use crate::classify::{svm_train, ClassifyError, Distance, KnnModel, LabeledSample, SvmParams};
use crate::features::Standardizer;
use crate::numfmt::fmt_exact;

pub use report::{ClassCount, EvalReport, FoldResult};
pub use roc::{roc_far_gar, RocPoint};
pub use split::{split_per_class, stratified_folds, SplitMode, SplitSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("class '{class}' has {count} images, needs at least {needed}")]
    TooFewImages {
        class: String,
        count: usize,
        needed: usize,
    },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid fold setup: {0}")]
    InvalidFolds(String),
    #[error("ROC needs genuine and impostor trials, got {genuine} genuine and {impostor} impostor")]
    NoTrials { genuine: usize, impostor: usize },
    #[error("at least two classes are required, found {0}")]
    SingleClass(usize),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifierKind {
    Knn { neighbors_k: usize, distance: Distance },
    Svm(SvmParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    /// Standardize each dimension with training-set statistics first.
    pub zscore: bool,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::Knn {
                neighbors_k: 1,
                distance: Distance::Log,
            },
            zscore: false,
        }
    }
}

impl ClassifierConfig {
    pub fn knn(neighbors_k: usize, distance: Distance) -> Self {
        Self {
            kind: ClassifierKind::Knn { neighbors_k, distance },
            zscore: false,
        }
    }

    pub fn svm(params: SvmParams) -> Self {
        Self {
            kind: ClassifierKind::Svm(params),
            zscore: false,
        }
    }

    /// Hyperparameters as `(key, value)` pairs for report headers.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        match self.kind {
            ClassifierKind::Knn { neighbors_k, distance } => {
                push("classifier", "knn".into());
                push("k", neighbors_k.to_string());
                push("distance", distance.to_string());
            }
            ClassifierKind::Svm(p) => {
                push("classifier", "svm".into());
                push("degree", p.degree.to_string());
                push("C", fmt_exact(p.c));
                push("offset", fmt_exact(p.offset));
                push("tol", fmt_exact(p.tol));
                push("max_passes", p.max_passes.to_string());
            }
        }
        push("zscore", self.zscore.to_string());
        out
    }
}

/// A fitted classifier together with its optional feature scaling.
#[derive(Debug, Clone)]
pub struct TrainedClassifier {
    pub model: Model,
    pub scaler: Option<Standardizer>,
}

impl TrainedClassifier {
    pub fn fit(train: &[LabeledSample], config: &ClassifierConfig) -> Result<Self, EvalError> {
        let scaler = if config.zscore {
            Standardizer::fit(train.iter().map(|s| s.vector.as_slice()))
        } else {
            None
        };
        let scaled: Vec<LabeledSample>;
        let data = match &scaler {
            Some(sc) => {
                scaled = train
                    .iter()
                    .map(|s| LabeledSample::new(sc.apply(&s.vector), s.label.clone()))
                    .collect();
                &scaled[..]
            }
            None => train,
        };
        let model = match config.kind {
            ClassifierKind::Knn { neighbors_k, distance } => {
                Model::Knn(KnnModel::new(data.to_vec(), neighbors_k, distance)?)
            }
            ClassifierKind::Svm(params) => Model::Svm(svm_train(data, &params)?),
        };
        Ok(Self { model, scaler })
    }

    pub fn predict(&self, query: &[f64]) -> Result<String, ClassifyError> {
        let scaled;
        let q = match &self.scaler {
            Some(sc) => {
                scaled = sc.apply(query);
                &scaled[..]
            }
            None => query,
        };
        Ok(match &self.model {
            Model::Knn(m) => m.predict(q)?.label,
            Model::Svm(m) => m.predict(q)?.label,
        })
    }
}

fn score(
    model: &TrainedClassifier,
    test: &[LabeledSample],
) -> Result<Vec<ClassCount>, EvalError> {
    let predictions: Vec<String> = test
        .par_iter()
        .map(|s| model.predict(&s.vector))
        .collect::<Result<_, _>>()?;
    let mut counts: std::collections::BTreeMap<&str, (usize, usize)> = Default::default();
    for (s, p) in test.iter().zip(&predictions) {
        let e = counts.entry(s.label.as_str()).or_default();
        e.1 += 1;
        if *p == s.label {
            e.0 += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(label, (correct, total))| ClassCount {
            label: label.to_string(),
            correct,
            total,
        })
        .collect())
}

/// Trains on `train`, classifies every sample of `test`, and reports
/// per-class and overall accuracy.
pub fn evaluate(
    train: &[LabeledSample],
    test: &[LabeledSample],
    config: &ClassifierConfig,
) -> Result<EvalReport, EvalError> {
    let model = TrainedClassifier::fit(train, config)?;
    evaluate_with(&model, test, config)
}

/// Like [`evaluate`] with an already fitted model.
pub fn evaluate_with(
    model: &TrainedClassifier,
    test: &[LabeledSample],
    config: &ClassifierConfig,
) -> Result<EvalReport, EvalError> {
    Ok(EvalReport {
        config: config.echo(),
        per_class: score(model, test)?,
        folds: None,
        roc: None,
    })
}

/// Stratified k-fold cross-validation. Per-class counts are pooled over folds.
pub fn kfold(
    data: &[LabeledSample],
    k: usize,
    mode: SplitMode,
    config: &ClassifierConfig,
) -> Result<EvalReport, EvalError> {
    let folds = stratified_folds(data, k, mode)?;
    let mut in_fold = vec![0usize; data.len()];
    for (f, members) in folds.iter().enumerate() {
        for &i in members {
            in_fold[i] = f;
        }
    }
    let per_fold: Vec<Vec<ClassCount>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let (train, test): (Vec<_>, Vec<_>) = data
                .iter()
                .zip(&in_fold)
                .partition(|(_, &fold)| fold != f);
            let train: Vec<LabeledSample> = train.into_iter().map(|(s, _)| s.clone()).collect();
            let test: Vec<LabeledSample> = test.into_iter().map(|(s, _)| s.clone()).collect();
            let model = TrainedClassifier::fit(&train, config)?;
            score(&model, &test)
        })
        .collect::<Result<_, _>>()?;

    let mut pooled: std::collections::BTreeMap<String, (usize, usize)> = Default::default();
    let mut fold_results = Vec::with_capacity(k);
    for counts in &per_fold {
        let mut fr = FoldResult { correct: 0, total: 0 };
        for c in counts {
            let e = pooled.entry(c.label.clone()).or_default();
            e.0 += c.correct;
            e.1 += c.total;
            fr.correct += c.correct;
            fr.total += c.total;
        }
        fold_results.push(fr);
    }
    let mut echo = config.echo();
    echo.push(("folds".into(), k.to_string()));
    Ok(EvalReport {
        config: echo,
        per_class: pooled
            .into_iter()
            .map(|(label, (correct, total))| ClassCount { label, correct, total })
            .collect(),
        folds: Some(fold_results),
        roc: None,
    })
}
