//! Verification scores and FAR/GAR sweeps.
//!
//! Each test sample is scored against every enrolled class by its minimum
//! distance to that class's training vectors (nearest-template matching).
//! The score against its own class is a genuine trial; scores against every
//! other class are impostor trials. A trial is accepted when `score <= t`.

use super::EvalError;
use crate::classify::{Distance, LabeledSample};
use crate::eval::split::group_by_class;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationScores {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    /// Percentage of impostor trials accepted.
    pub far: f64,
    /// Percentage of genuine trials accepted.
    pub gar: f64,
}

/// Number of evenly spaced thresholds in a sweep, before adding the observed scores.
pub const SWEEP_STEPS: usize = 200;

pub fn verification_scores(
    train: &[LabeledSample],
    test: &[LabeledSample],
    distance: Distance,
) -> VerificationScores {
    let classes = group_by_class(train);
    let mut scores = VerificationScores::default();
    for sample in test {
        for (label, members) in &classes {
            let best = members
                .iter()
                .map(|&i| distance.eval(&train[i].vector, &sample.vector))
                .fold(f64::INFINITY, f64::min);
            if *label == sample.label {
                scores.genuine.push(best);
            } else {
                scores.impostor.push(best);
            }
        }
    }
    scores
}

/// Thresholds: `SWEEP_STEPS` evenly spaced values on `[0, max score]` merged
/// with every distinct observed score, ascending. When some score is `<= 0`
/// a reject-everything threshold of -1 is prepended.
pub fn threshold_sweep(scores: &VerificationScores) -> Vec<f64> {
    let all = || scores.genuine.iter().chain(&scores.impostor).copied();
    let max = all().fold(0.0f64, f64::max);
    let min = all().fold(f64::INFINITY, f64::min);
    let mut t: Vec<f64> = (0..SWEEP_STEPS)
        .map(|i| max * i as f64 / (SWEEP_STEPS - 1) as f64)
        .chain(all())
        .collect();
    if min <= 0.0 {
        t.push(-1.0);
    }
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// Fraction (as a percentage) of `sorted` values `<= t`.
fn accept_rate(sorted: &[f64], t: f64) -> f64 {
    100.0 * sorted.partition_point(|&s| s <= t) as f64 / sorted.len() as f64
}

pub fn roc_points(scores: &VerificationScores, thresholds: &[f64]) -> Result<Vec<RocPoint>, EvalError> {
    if scores.genuine.is_empty() || scores.impostor.is_empty() {
        return Err(EvalError::NoTrials {
            genuine: scores.genuine.len(),
            impostor: scores.impostor.len(),
        });
    }
    let mut genuine = scores.genuine.clone();
    let mut impostor = scores.impostor.clone();
    genuine.sort_by(f64::total_cmp);
    impostor.sort_by(f64::total_cmp);
    let mut thresholds = thresholds.to_vec();
    thresholds.sort_by(f64::total_cmp);
    Ok(thresholds
        .into_iter()
        .map(|t| RocPoint {
            threshold: t,
            far: accept_rate(&impostor, t),
            gar: accept_rate(&genuine, t),
        })
        .collect())
}

/// Scores `test` against `train` and sweeps the default thresholds.
pub fn roc_far_gar(
    train: &[LabeledSample],
    test: &[LabeledSample],
    distance: Distance,
) -> Result<Vec<RocPoint>, EvalError> {
    let classes = group_by_class(train).len();
    if classes < 2 {
        return Err(EvalError::SingleClass(classes));
    }
    let scores = verification_scores(train, test, distance);
    let thresholds = threshold_sweep(&scores);
    roc_points(&scores, &thresholds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64, l: &str) -> LabeledSample {
        LabeledSample::new(vec![v], l)
    }

    #[test]
    fn scores_use_class_minimum() {
        let train = vec![s(0.0, "A"), s(2.0, "A"), s(10.0, "B")];
        let test = vec![s(1.5, "A")];
        let sc = verification_scores(&train, &test, Distance::Euclidean);
        assert_eq!(sc.genuine, vec![0.5]);
        assert_eq!(sc.impostor, vec![8.5]);
    }

    #[test]
    fn extremes() {
        let sc = VerificationScores {
            genuine: vec![1.0, 2.0],
            impostor: vec![3.0, 4.0, 5.0],
        };
        let pts = roc_points(&sc, &[0.5, 10.0]).unwrap();
        assert_eq!((pts[0].far, pts[0].gar), (0.0, 0.0));
        assert_eq!((pts[1].far, pts[1].gar), (100.0, 100.0));
        let mid = roc_points(&sc, &[3.0]).unwrap();
        assert_eq!(mid[0].gar, 100.0);
        assert!((mid[0].far - 100.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_covers_range_and_scores() {
        let sc = VerificationScores {
            genuine: vec![0.3],
            impostor: vec![2.0, 0.77],
        };
        let t = threshold_sweep(&sc);
        assert_eq!(t[0], 0.0);
        assert_eq!(*t.last().unwrap(), 2.0);
        assert!(t.contains(&0.3) && t.contains(&0.77));
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(t.len(), SWEEP_STEPS + 2);
    }

    #[test]
    fn zero_scores_get_reject_all_threshold() {
        let train = vec![s(0.0, "A"), s(5.0, "B")];
        let pts = roc_far_gar(&train, &train, Distance::Log).unwrap();
        assert_eq!(pts[0].threshold, -1.0);
        assert_eq!((pts[0].far, pts[0].gar), (0.0, 0.0));
        let last = pts.last().unwrap();
        assert_eq!((last.far, last.gar), (100.0, 100.0));
    }

    #[test]
    fn degenerate_inputs() {
        let train = vec![s(0.0, "A"), s(1.0, "A")];
        assert!(matches!(roc_far_gar(&train, &train, Distance::Log), Err(EvalError::SingleClass(1))));
        let sc = VerificationScores {
            genuine: vec![],
            impostor: vec![1.0],
        };
        assert!(roc_points(&sc, &[0.0]).is_err());
    }
}
