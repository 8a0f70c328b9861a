use std::fmt;
use std::str::FromStr;

use super::ClassifyError;

/// Distance used to rank neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Distance {
    /// `sum ln(1 + |a_i - b_i|)`
    #[default]
    Log,
    Euclidean,
}

impl Distance {
    /// Evaluates the distance; lengths must already match.
    #[inline]
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Distance::Log => a.iter().zip(b).map(|(x, y)| (x - y).abs().ln_1p()).sum(),
            Distance::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Distance::Log => "log",
            Distance::Euclidean => "euclidean",
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Distance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "log" => Ok(Distance::Log),
            "euclidean" | "l2" => Ok(Distance::Euclidean),
            other => Err(format!("unknown distance '{other}' (expected log or euclidean)")),
        }
    }
}

fn same_len(a: &[f64], b: &[f64]) -> Result<(), ClassifyError> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(ClassifyError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        })
    }
}

/// `sum_i ln(1 + |a_i - b_i|)`.
pub fn distance_log(a: &[f64], b: &[f64]) -> Result<f64, ClassifyError> {
    same_len(a, b)?;
    Ok(Distance::Log.eval(a, b))
}

pub fn distance_euclidean(a: &[f64], b: &[f64]) -> Result<f64, ClassifyError> {
    same_len(a, b)?;
    Ok(Distance::Euclidean.eval(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn log_distance_values() {
        assert_eq!(distance_log(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 0.0);
        assert_relative_eq!(
            distance_log(&[1.0, 2.0], &[2.0, 4.0]).unwrap(),
            2f64.ln() + 3f64.ln(),
            epsilon = 1e-15
        );
        assert_relative_eq!(distance_log(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 1.7918, epsilon = 1e-4);
    }

    #[test]
    fn euclidean_values() {
        assert_eq!(distance_euclidean(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(distance_euclidean(&[0.0, 3.0], &[4.0, 0.0]).unwrap(), 5.0);
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(
            distance_log(&[1.0], &[1.0, 2.0]),
            Err(ClassifyError::LengthMismatch { left: 1, right: 2 })
        );
        assert!(distance_euclidean(&[], &[1.0]).is_err());
    }

    fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..32).prop_flat_map(|n| {
            (
                proptest::collection::vec(-100.0f64..100.0, n),
                proptest::collection::vec(-100.0f64..100.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn symmetric((a, b) in vec_pair()) {
            prop_assert_eq!(distance_log(&a, &b).unwrap(), distance_log(&b, &a).unwrap());
            prop_assert_eq!(distance_euclidean(&a, &b).unwrap(), distance_euclidean(&b, &a).unwrap());
        }

        #[test]
        fn euclidean_matches_direct((a, b) in vec_pair()) {
            let mut acc = 0.0;
            for i in 0..a.len() {
                acc += (a[i] - b[i]).powi(2);
            }
            prop_assert!((distance_euclidean(&a, &b).unwrap() - acc.sqrt()).abs() <= 1e-9);
        }

        #[test]
        fn widening_one_gap_increases((a, b) in vec_pair(), i in 0usize..32, extra in 0.01f64..10.0) {
            let i = i % a.len();
            let mut c = b.clone();
            c[i] = if b[i] >= a[i] { b[i] + extra } else { b[i] - extra };
            prop_assert!(distance_log(&a, &c).unwrap() > distance_log(&a, &b).unwrap());
        }
    }
}
