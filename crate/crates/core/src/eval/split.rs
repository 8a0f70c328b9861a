use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::classify::LabeledSample;

/// How images are ordered within a class before splitting or folding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Keep load order.
    ByIndex,
    /// Shuffle each class with a seeded ChaCha8 generator first.
    SeededShuffle(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub n_train: usize,
    pub mode: SplitMode,
}

/// Groups sample indices by label. Groups are ordered by label; indices
/// within a group keep input order.
pub fn group_by_class(data: &[LabeledSample]) -> Vec<(String, Vec<usize>)> {
    let mut groups: std::collections::BTreeMap<&str, Vec<usize>> = Default::default();
    for (i, s) in data.iter().enumerate() {
        groups.entry(s.label.as_str()).or_default().push(i);
    }
    groups.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Orders each class's members according to `mode`. With a seed, every
/// class gets its own stream derived from the seed and the class position.
pub(crate) fn ordered_groups(data: &[LabeledSample], mode: SplitMode) -> Vec<(String, Vec<usize>)> {
    let mut groups = group_by_class(data);
    if let SplitMode::SeededShuffle(seed) = mode {
        for (pos, (_, members)) in groups.iter_mut().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(pos as u64);
            members.shuffle(&mut rng);
        }
    }
    groups
}

/// Splits sample indices into `(train, test)`: `n_train` per class for
/// training and the rest for testing. Both lists are sorted ascending.
pub fn split_per_class(
    data: &[LabeledSample],
    spec: &SplitSpec,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if spec.n_train == 0 {
        return Err(EvalError::InvalidSplit("n_train must be positive".into()));
    }
    let groups = ordered_groups(data, spec.mode);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (label, members) in groups {
        if members.len() <= spec.n_train {
            return Err(EvalError::TooFewImages {
                class: label,
                count: members.len(),
                needed: spec.n_train + 1,
            });
        }
        train.extend_from_slice(&members[..spec.n_train]);
        test.extend_from_slice(&members[spec.n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Assigns every sample to one of `k` folds, stratified by class.
///
/// Classes are walked in label order and their (optionally shuffled) members
/// dealt round-robin with one running counter, so equal-sized classes put
/// exactly `count / k` samples of each class into every fold and unequal
/// classes are spread proportionally.
pub fn stratified_folds(
    data: &[LabeledSample],
    k: usize,
    mode: SplitMode,
) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidFolds(format!("k must be at least 2, got {k}")));
    }
    if data.len() < k {
        return Err(EvalError::InvalidFolds(format!(
            "dataset has {} samples, fewer than k = {k}",
            data.len()
        )));
    }
    let mut folds = vec![Vec::new(); k];
    let mut counter = 0usize;
    for (_, members) in ordered_groups(data, mode) {
        for idx in members {
            folds[counter % k].push(idx);
            counter += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}
