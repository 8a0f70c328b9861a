use std::collections::BTreeMap;

use super::{check_dims, ClassifyError, Distance, LabeledSample};

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    training: Vec<LabeledSample>,
    neighbors_k: usize,
    distance: Distance,
    dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnPrediction {
    pub label: String,
    /// `(training index, distance)` of the k nearest neighbours, nearest first.
    pub neighbors: Vec<(usize, f64)>,
}

impl KnnModel {
    pub fn new(
        training: Vec<LabeledSample>,
        neighbors_k: usize,
        distance: Distance,
    ) -> Result<Self, ClassifyError> {
        let dim = check_dims(&training)?;
        if neighbors_k == 0 || neighbors_k > training.len() {
            return Err(ClassifyError::InvalidNeighbors {
                k: neighbors_k,
                n: training.len(),
            });
        }
        Ok(Self {
            training,
            neighbors_k,
            distance,
            dim,
        })
    }

    pub fn training(&self) -> &[LabeledSample] {
        &self.training
    }

    pub fn neighbors_k(&self) -> usize {
        self.neighbors_k
    }

    pub fn distance(&self) -> Distance {
        self.distance
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Majority vote among the k nearest training vectors. Ties in the vote go
    /// to the class with the smallest summed neighbour distance, then to the
    /// lexicographically smallest label. Equal distances are ordered by
    /// training index.
    pub fn predict(&self, query: &[f64]) -> Result<KnnPrediction, ClassifyError> {
        if query.len() != self.dim {
            return Err(ClassifyError::LengthMismatch {
                left: self.dim,
                right: query.len(),
            });
        }
        let mut scored: Vec<(usize, f64)> = self
            .training
            .iter()
            .enumerate()
            .map(|(i, s)| (i, self.distance.eval(&s.vector, query)))
            .collect();
        let k = self.neighbors_k;
        let by_distance = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, by_distance);
            scored.truncate(k);
        }
        scored.sort_by(by_distance);

        // label -> (votes, summed distance)
        let mut tally: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
        for &(i, d) in &scored {
            let e = tally.entry(self.training[i].label.as_str()).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += d;
        }
        // BTreeMap iterates in label order, so keeping the first best wins the final tie.
        let mut best: Option<(&str, usize, f64)> = None;
        for (&label, &(votes, dsum)) in &tally {
            let better = match best {
                None => true,
                Some((_, bv, bd)) => votes > bv || (votes == bv && dsum < bd),
            };
            if better {
                best = Some((label, votes, dsum));
            }
        }
        let label = best.expect("k >= 1").0.to_string();
        Ok(KnnPrediction {
            label,
            neighbors: scored,
        })
    }
}
