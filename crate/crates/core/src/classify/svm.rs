//! One-vs-one polynomial-kernel SVM trained by sequential minimal optimization.
//!
//! Each binary machine solves the C-SVC dual
//!
//! ```text
//! min_a  1/2 a'Qa - e'a   s.t.  0 <= a_i <= C,  y'a = 0,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! picking the maximal violating pair at every step. Selection is
//! deterministic, so training needs no seed.

use rayon::prelude::*;

use super::{check_dims, ClassifyError, LabeledSample};

/// `(a . b + offset)^degree`.
#[inline]
pub fn kernel_poly(a: &[f64], b: &[f64], degree: u32, offset: f64) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (dot + offset).powi(degree as i32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    /// Polynomial degree, 1 or 2.
    pub degree: u32,
    pub c: f64,
    pub offset: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    /// Iteration budget per machine, in units of the machine's sample count.
    pub max_passes: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            degree: 1,
            c: 1.0,
            offset: 1.0,
            tol: 1e-3,
            max_passes: 100,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        if !(1..=2).contains(&self.degree) {
            return Err(ClassifyError::InvalidParam(format!(
                "degree must be 1 or 2, got {}",
                self.degree
            )));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(ClassifyError::InvalidParam(format!("C must be positive, got {}", self.c)));
        }
        if !self.offset.is_finite() {
            return Err(ClassifyError::InvalidParam("offset must be finite".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(ClassifyError::InvalidParam(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_passes == 0 {
            return Err(ClassifyError::InvalidParam("max_passes must be positive".into()));
        }
        Ok(())
    }
}

/// A binary machine separating `classes[positive]` (decision > 0) from
/// `classes[negative]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMachine {
    pub positive: usize,
    pub negative: usize,
    pub support_vectors: Vec<Vec<f64>>,
    /// `y_i * alpha_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

impl BinaryMachine {
    pub fn decision(&self, x: &[f64], degree: u32, offset: f64) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * kernel_poly(sv, x, degree, offset))
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// Class labels in sorted order; machines refer to them by index.
    pub classes: Vec<String>,
    pub params: SvmParams,
    pub dim: usize,
    /// One machine per class pair `(i, j)`, `i < j`, in lexicographic pair order.
    pub machines: Vec<BinaryMachine>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmPrediction {
    pub label: String,
    /// Votes per class, aligned with `SvmModel::classes`.
    pub votes: Vec<usize>,
    /// Summed |decision| of the machines won by each class.
    pub margins: Vec<f64>,
}

/// Result of one binary dual solve.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    /// Decision function is `sum_i alpha_i y_i K(x_i, x) - rho`.
    pub rho: f64,
    /// Maximal KKT violation `m(a) - M(a)` at exit.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

const TAU: f64 = 1e-12;

/// Solves the binary dual for a precomputed kernel matrix (row-major `n x n`)
/// and labels in `{-1, +1}`.
pub fn solve_binary(kernel: &[f64], y: &[f64], c: f64, tol: f64, max_iter: usize) -> BinarySolution {
    let n = y.len();
    debug_assert_eq!(kernel.len(), n * n);
    let k = |i: usize, j: usize| kernel[i * n + j];
    let mut alpha = vec![0.0; n];
    // gradient of the dual objective: G = Q a - e
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut gap = f64::INFINITY;

    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
            if in_up && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        gap = gmax - gmin;
        if i == usize::MAX || j == usize::MAX || gap < tol {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
        if quad <= 0.0 {
            quad = TAU;
        }
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;

        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(t, i) * di + y[j] * k(t, j) * dj);
        }
    }

    // rho: mean of y G over free vectors, else midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    };

    BinarySolution {
        alpha,
        rho,
        gap,
        iterations,
        converged: gap < tol,
    }
}

fn train_pair(
    pos: &[&[f64]],
    neg: &[&[f64]],
    positive: usize,
    negative: usize,
    params: &SvmParams,
) -> BinaryMachine {
    let xs: Vec<&[f64]> = pos.iter().chain(neg).copied().collect();
    let y: Vec<f64> = std::iter::repeat_n(1.0, pos.len())
        .chain(std::iter::repeat_n(-1.0, neg.len()))
        .collect();
    let n = xs.len();
    let mut kernel = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let v = kernel_poly(xs[a], xs[b], params.degree, params.offset);
            kernel[a * n + b] = v;
            kernel[b * n + a] = v;
        }
    }
    let sol = solve_binary(&kernel, &y, params.c, params.tol, params.max_passes * n);
    if !sol.converged {
        log::warn!(
            "SVM pair ({positive}, {negative}) stopped after {} iterations with KKT gap {:.3e}",
            sol.iterations,
            sol.gap
        );
    }
    let (mut support_vectors, mut coefficients) = (Vec::new(), Vec::new());
    for t in 0..n {
        if sol.alpha[t] > 0.0 {
            support_vectors.push(xs[t].to_vec());
            coefficients.push(y[t] * sol.alpha[t]);
        }
    }
    BinaryMachine {
        positive,
        negative,
        support_vectors,
        coefficients,
        bias: -sol.rho,
    }
}

/// Trains one binary machine per class pair. Pairs are trained in parallel and
/// assembled in pair order.
pub fn svm_train(data: &[LabeledSample], params: &SvmParams) -> Result<SvmModel, ClassifyError> {
    params.validate()?;
    let dim = check_dims(data)?;
    for (i, s) in data.iter().enumerate() {
        if let Some(d) = s.vector.iter().position(|v| !v.is_finite()) {
            return Err(ClassifyError::NonFinite { sample: i, dim: d });
        }
    }
    let mut classes: Vec<String> = data.iter().map(|s| s.label.clone()).collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(ClassifyError::SingleClass(classes.len()));
    }
    let mut by_class: Vec<Vec<&[f64]>> = vec![Vec::new(); classes.len()];
    for s in data {
        let idx = classes.binary_search(&s.label).expect("label present");
        by_class[idx].push(&s.vector);
    }

    let pairs: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|i| (i + 1..classes.len()).map(move |j| (i, j)))
        .collect();
    let machines = pairs
        .par_iter()
        .map(|&(i, j)| train_pair(&by_class[i], &by_class[j], i, j, params))
        .collect();

    Ok(SvmModel {
        classes,
        params: *params,
        dim,
        machines,
    })
}

impl SvmModel {
    /// One-vs-one vote. A decision of exactly 0 counts for the positive class.
    /// Vote ties go to the larger summed |decision| over won machines, then to
    /// the earlier class.
    pub fn predict(&self, query: &[f64]) -> Result<SvmPrediction, ClassifyError> {
        if self.machines.is_empty() || self.classes.len() < 2 {
            return Err(ClassifyError::EmptyModel);
        }
        if query.len() != self.dim {
            return Err(ClassifyError::LengthMismatch {
                left: self.dim,
                right: query.len(),
            });
        }
        let mut votes = vec![0usize; self.classes.len()];
        let mut margins = vec![0.0; self.classes.len()];
        for m in &self.machines {
            let f = m.decision(query, self.params.degree, self.params.offset);
            let winner = if f >= 0.0 { m.positive } else { m.negative };
            votes[winner] += 1;
            margins[winner] += f.abs();
        }
        let mut best = 0;
        for c in 1..self.classes.len() {
            if votes[c] > votes[best] || (votes[c] == votes[best] && margins[c] > margins[best]) {
                best = c;
            }
        }
        Ok(SvmPrediction {
            label: self.classes[best].clone(),
            votes,
            margins,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(points: &[(&[f64], &str)]) -> Vec<LabeledSample> {
        points
            .iter()
            .map(|(v, l)| LabeledSample::new(v.to_vec(), *l))
            .collect()
    }

    fn train_accuracy(model: &SvmModel, data: &[LabeledSample]) -> f64 {
        let ok = data
            .iter()
            .filter(|s| model.predict(&s.vector).unwrap().label == s.label)
            .count();
        ok as f64 / data.len() as f64
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kernel_poly(&[1.0, 2.0], &[3.0, 4.0], 1, 0.0), 11.0);
        assert_eq!(kernel_poly(&[1.0, 1.0], &[1.0, 1.0], 2, 1.0), 9.0);
    }

    #[test]
    fn linearly_separable_toy_set() {
        let data = samples(&[
            (&[0.0, 0.0], "A"),
            (&[0.0, 1.0], "A"),
            (&[5.0, 5.0], "B"),
            (&[5.0, 6.0], "B"),
        ]);
        let model = svm_train(&data, &SvmParams::default()).unwrap();
        assert_eq!(model.machines.len(), 1);
        assert_eq!(train_accuracy(&model, &data), 1.0);
    }

    #[test]
    fn xor_needs_degree_two() {
        let data = samples(&[
            (&[1.0, 1.0], "A"),
            (&[-1.0, -1.0], "A"),
            (&[1.0, -1.0], "B"),
            (&[-1.0, 1.0], "B"),
        ]);
        let params = SvmParams {
            degree: 2,
            ..SvmParams::default()
        };
        let model = svm_train(&data, &params).unwrap();
        assert_eq!(train_accuracy(&model, &data), 1.0);
        let linear = svm_train(&data, &SvmParams::default()).unwrap();
        assert!(train_accuracy(&linear, &data) < 1.0);
    }

    #[test]
    fn dual_feasibility_and_gap() {
        let data = samples(&[
            (&[0.0, 0.0], "A"),
            (&[1.0, 0.2], "A"),
            (&[0.4, 0.9], "A"),
            (&[1.1, 1.0], "B"),
            (&[0.3, 0.5], "B"),
            (&[2.0, 1.5], "B"),
        ]);
        let params = SvmParams {
            c: 0.5,
            ..SvmParams::default()
        };
        let n = data.len();
        let mut kernel = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                kernel[a * n + b] = kernel_poly(&data[a].vector, &data[b].vector, 1, 1.0);
            }
        }
        let y: Vec<f64> = data.iter().map(|s| if s.label == "A" { 1.0 } else { -1.0 }).collect();
        let sol = solve_binary(&kernel, &y, params.c, params.tol, 10_000);
        assert!(sol.converged);
        assert!(sol.gap < params.tol);
        assert!(sol.alpha.iter().all(|&a| (0.0..=params.c).contains(&a)));
        let balance: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(balance.abs() < 1e-9);
    }

    #[test]
    fn vote_tie_uses_margin() {
        let machine = |positive, negative, bias| BinaryMachine {
            positive,
            negative,
            support_vectors: Vec::new(),
            coefficients: Vec::new(),
            bias,
        };
        // A beats B by 1, B beats C by 2, C beats A by 3: one vote each.
        let model = SvmModel {
            classes: vec!["A".into(), "B".into(), "C".into()],
            params: SvmParams::default(),
            dim: 1,
            machines: vec![machine(0, 1, 1.0), machine(0, 2, -3.0), machine(1, 2, 2.0)],
        };
        let p = model.predict(&[0.0]).unwrap();
        assert_eq!(p.votes, vec![1, 1, 1]);
        assert_eq!(p.margins, vec![1.0, 2.0, 3.0]);
        assert_eq!(p.label, "C");
    }

    #[test]
    fn error_paths() {
        let one = samples(&[(&[0.0], "A"), (&[1.0], "A")]);
        assert_eq!(
            svm_train(&one, &SvmParams::default()),
            Err(ClassifyError::SingleClass(1))
        );
        let bad = samples(&[(&[f64::NAN], "A"), (&[1.0], "B")]);
        assert!(matches!(
            svm_train(&bad, &SvmParams::default()),
            Err(ClassifyError::NonFinite { sample: 0, dim: 0 })
        ));
        let ok = samples(&[(&[0.0], "A"), (&[1.0], "B")]);
        let params = SvmParams {
            degree: 3,
            ..SvmParams::default()
        };
        assert!(matches!(svm_train(&ok, &params), Err(ClassifyError::InvalidParam(_))));
        let empty = SvmModel {
            classes: Vec::new(),
            params: SvmParams::default(),
            dim: 1,
            machines: Vec::new(),
        };
        assert_eq!(empty.predict(&[0.0]), Err(ClassifyError::EmptyModel));
    }
}
