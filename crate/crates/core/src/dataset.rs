use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("dataset is empty")]
    Empty,
    #[error("input points must have at least one coordinate")]
    ZeroDimension,
    #[error("row {row} has {found} inputs, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{inputs} input rows but {targets} targets")]
    LengthMismatch { inputs: usize, targets: usize },
    #[error("non-finite value in row {0}")]
    NonFinite(usize),
}

/// Training data `{(x_l, t_l)}` in raw physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self, DataError> {
        if inputs.len() != targets.len() {
            return Err(DataError::LengthMismatch {
                inputs: inputs.len(),
                targets: targets.len(),
            });
        }
        let Some(first) = inputs.first() else {
            return Err(DataError::Empty);
        };
        let dim = first.len();
        if dim == 0 {
            return Err(DataError::ZeroDimension);
        }
        for (row, (x, t)) in inputs.iter().zip(&targets).enumerate() {
            if x.len() != dim {
                return Err(DataError::Ragged {
                    row,
                    expected: dim,
                    found: x.len(),
                });
            }
            if !t.is_finite() || x.iter().any(|v| !v.is_finite()) {
                return Err(DataError::NonFinite(row));
            }
        }
        Ok(Self { inputs, targets })
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// `(min, max)` of the `j`-th input coordinate.
    pub fn input_range(&self, j: usize) -> (f64, f64) {
        min_max(self.inputs.iter().map(|x| x[j]))
    }

    pub fn target_range(&self) -> (f64, f64) {
        min_max(self.targets.iter().copied())
    }

    pub fn target_mean(&self) -> f64 {
        self.targets.iter().sum::<f64>() / self.len() as f64
    }

    /// Rows whose `j`-th input equals `value` exactly.
    pub fn filter(&self, j: usize, value: f64) -> Option<Dataset> {
        let (inputs, targets): (Vec<_>, Vec<_>) = self
            .inputs
            .iter()
            .zip(&self.targets)
            .filter(|(x, _)| x[j] == value)
            .map(|(x, t)| (x.clone(), *t))
            .unzip();
        Dataset::new(inputs, targets).ok()
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// `sqrt(mean((prediction - target)^2))`.
pub fn rmse(predictions: &[f64], targets: &[f64]) -> f64 {
    assert_eq!(predictions.len(), targets.len());
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    (sum / targets.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert_eq!(Dataset::new(vec![], vec![]), Err(DataError::Empty));
        assert_eq!(
            Dataset::new(vec![vec![1.0]], vec![]),
            Err(DataError::LengthMismatch {
                inputs: 1,
                targets: 0
            })
        );
        assert!(matches!(
            Dataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0.0, 0.0]),
            Err(DataError::Ragged { row: 1, .. })
        ));
        assert_eq!(
            Dataset::new(vec![vec![1.0]], vec![f64::NAN]),
            Err(DataError::NonFinite(0))
        );
        assert_eq!(
            Dataset::new(vec![vec![]], vec![1.0]),
            Err(DataError::ZeroDimension)
        );
    }

    #[test]
    fn ranges_and_filter() {
        let d = Dataset::new(
            vec![vec![1.0, 5.0], vec![3.0, 5.0], vec![2.0, 4.0]],
            vec![10.0, 0.0, 2.0],
        )
        .unwrap();
        assert_eq!(d.input_range(0), (1.0, 3.0));
        assert_eq!(d.target_range(), (0.0, 10.0));
        assert_eq!(d.target_mean(), 4.0);
        let sub = d.filter(1, 5.0).unwrap();
        assert_eq!(sub.len(), 2);
        assert!(d.filter(1, 7.0).is_none());
    }

    #[test]
    fn rmse_definition() {
        assert_eq!(rmse(&[1.0, 3.0], &[1.0, 1.0]), 2.0f64.sqrt());
    }
}
