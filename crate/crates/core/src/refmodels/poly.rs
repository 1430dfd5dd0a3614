use nalgebra::{DMatrix, DVector};

use super::RefModelError;
use crate::basis::BasisSpec;
use crate::dataset::Dataset;
use crate::model::PolynomialModel;
use crate::scaling::{target_scaling, InputScaling};

/// Singular values below this fraction of the largest are treated as zero.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

struct Scaled {
    basis: BasisSpec,
    input_scaling: InputScaling,
    design: DMatrix<f64>,
    targets: DVector<f64>,
}

fn scaled_problem(data: &Dataset, degree: u32) -> Result<Scaled, RefModelError> {
    let basis = BasisSpec::new(data.dim(), degree)?;
    let input_scaling = InputScaling::from_dataset(data);
    let ts = target_scaling(data);
    let xs: Vec<Vec<f64>> = data.inputs().iter().map(|x| input_scaling.forward(x)).collect();
    let design = basis.design_matrix(&xs)?;
    let targets = DVector::from_iterator(data.len(), data.targets().iter().map(|&t| ts.forward(t)));
    Ok(Scaled {
        basis,
        input_scaling,
        design,
        targets,
    })
}

fn into_model(s: Scaled, w: DVector<f64>, data: &Dataset) -> PolynomialModel {
    PolynomialModel::new(s.basis, w.as_slice().to_vec(), s.input_scaling, target_scaling(data))
        .expect("shapes agree")
}

/// Minimum-norm least-squares polynomial of total degree `degree`.
pub fn fit_unconstrained_poly(data: &Dataset, degree: u32) -> Result<PolynomialModel, RefModelError> {
    let s = scaled_problem(data, degree)?;
    let svd = s.design.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = PINV_RELATIVE_CUTOFF * sigma_max;
    let w = if sigma_max > 0.0 {
        svd.solve(&s.targets, cutoff).map_err(|_| RefModelError::Svd)?
    } else {
        DVector::zeros(s.basis.len())
    };
    Ok(into_model(s, w, data))
}

/// Ridge-regularized polynomial: minimizes `1/2 |Phi w - t|^2 + lambda |w|^2`
/// in scaled coordinates.
pub fn fit_ridge_poly(
    data: &Dataset,
    degree: u32,
    lambda: f64,
) -> Result<PolynomialModel, RefModelError> {
    let s = scaled_problem(data, degree)?;
    let w = ridge_solve(&s.design, &s.targets, lambda)?;
    Ok(into_model(s, w, data))
}

/// Solves `(Phi' Phi + 2 lambda I) w = Phi' t`. With `lambda = 0` a rank-deficient
/// system falls back to the minimum-norm solution.
pub fn ridge_solve(
    design: &DMatrix<f64>,
    targets: &DVector<f64>,
    lambda: f64,
) -> Result<DVector<f64>, RefModelError> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(RefModelError::InvalidRidge(lambda));
    }
    let mut normal = design.tr_mul(design);
    for i in 0..normal.nrows() {
        normal[(i, i)] += 2.0 * lambda;
    }
    let rhs = design.tr_mul(targets);
    if lambda > 0.0 {
        if let Some(chol) = normal.clone().cholesky() {
            return Ok(chol.solve(&rhs));
        }
    }
    let svd = design.clone().svd(true, true);
    let cutoff = PINV_RELATIVE_CUTOFF * svd.singular_values.max();
    if lambda == 0.0 {
        return svd.solve(targets, cutoff).map_err(|_| RefModelError::Svd);
    }
    // Cholesky lost to rounding: w = V diag(s / (s^2 + 2 lambda)) U' t
    let u = svd.u.as_ref().ok_or(RefModelError::Svd)?;
    let vt = svd.v_t.as_ref().ok_or(RefModelError::Svd)?;
    let ut = u.tr_mul(targets);
    let scaled = DVector::from_iterator(
        ut.len(),
        ut.iter()
            .zip(svd.singular_values.iter())
            .map(|(c, &s)| c * s / (s * s + 2.0 * lambda)),
    );
    Ok(vt.tr_mul(&scaled))
}
