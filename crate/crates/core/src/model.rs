use serde::{Deserialize, Serialize};

use crate::basis::{BasisError, BasisSpec, Polynomial};
use crate::dataset::{self, Dataset};
use crate::scaling::{AffineMap, InputScaling};

/// Polynomial `w' phi(x)` in scaled coordinates, with the affine maps that
/// translate raw inputs and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialModel {
    basis: BasisSpec,
    coefficients: Vec<f64>,
    input_scaling: InputScaling,
    target_scaling: AffineMap,
}

impl PolynomialModel {
    pub fn new(
        basis: BasisSpec,
        coefficients: Vec<f64>,
        input_scaling: InputScaling,
        target_scaling: AffineMap,
    ) -> Result<Self, BasisError> {
        if coefficients.len() != basis.len() {
            return Err(BasisError::DimensionMismatch {
                expected: basis.len(),
                found: coefficients.len(),
            });
        }
        if input_scaling.dim() != basis.dim() {
            return Err(BasisError::DimensionMismatch {
                expected: basis.dim(),
                found: input_scaling.dim(),
            });
        }
        Ok(Self {
            basis,
            coefficients,
            input_scaling,
            target_scaling,
        })
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn degree(&self) -> u32 {
        self.basis.degree()
    }

    /// Coefficients in scaled coordinates.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn input_scaling(&self) -> &InputScaling {
        &self.input_scaling
    }

    pub fn target_scaling(&self) -> AffineMap {
        self.target_scaling
    }

    /// The model as a polynomial in scaled inputs with scaled output.
    pub fn scaled_polynomial(&self) -> Polynomial {
        Polynomial::from_basis(&self.basis, &self.coefficients)
    }

    fn check(&self, x: &[f64]) -> Result<(), BasisError> {
        if x.len() != self.dim() {
            return Err(BasisError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn predict_scaled(&self, x_scaled: &[f64]) -> f64 {
        let phi = self.basis.eval(x_scaled).expect("dimension checked");
        phi.iter().zip(&self.coefficients).map(|(p, w)| p * w).sum()
    }

    /// Prediction in raw target units at a raw input point.
    pub fn predict(&self, x: &[f64]) -> Result<f64, BasisError> {
        self.check(x)?;
        let xs = self.input_scaling.forward(x);
        Ok(self.target_scaling.inverse(self.predict_scaled(&xs)))
    }

    pub fn predict_many(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, BasisError> {
        points.iter().map(|x| self.predict(x)).collect()
    }

    /// `d^order y / dx_direction^order` in raw units at a raw input point.
    pub fn derivative(&self, x: &[f64], direction: usize, order: u32) -> Result<f64, BasisError> {
        self.check(x)?;
        let xs = self.input_scaling.forward(x);
        let col = self.basis.eval_partial(&xs, direction, order)?;
        let scaled: f64 = col.iter().zip(&self.coefficients).map(|(c, w)| c * w).sum();
        Ok(scaled * self.derivative_factor(direction, order))
    }

    /// Factor converting a scaled-coordinate derivative into raw units.
    pub fn derivative_factor(&self, direction: usize, order: u32) -> f64 {
        self.target_scaling.scale / self.input_scaling.scale(direction).powi(order as i32)
    }

    pub fn rmse(&self, data: &Dataset) -> Result<f64, BasisError> {
        let predictions = self.predict_many(data.inputs())?;
        Ok(dataset::rmse(&predictions, data.targets()))
    }
}
