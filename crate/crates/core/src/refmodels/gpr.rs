use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::RefModelError;
use crate::dataset::Dataset;
use crate::exec::Execution;
use crate::globalopt::{minimize_box, MultistartOptions, SearchBox};
use crate::scaling::{target_scaling, AffineMap, InputScaling};

/// Noise level used for the reference GPR, in scaled target units.
pub const GPR_NOISE: f64 = 1e-5;

const LOG_LENGTHSCALE_MIN: f64 = -2.995_732_273_553_991; // ln 0.05
const LOG_LENGTHSCALE_MAX: f64 = std::f64::consts::LN_10;
const LOG_VARIANCE_MIN: f64 = -4.0;
const LOG_VARIANCE_MAX: f64 = 4.0;
const HYPER_RESTARTS: usize = 32;
/// Objective returned where the kernel matrix cannot be factorized.
const FAILED_NLML: f64 = 1e30;

/// `s^2 exp(-1/2 sum_j (x_j - x'_j)^2 / l_j^2)` on scaled inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GprKernel {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
}

impl GprKernel {
    fn validate(&self, dim: usize) -> Result<(), RefModelError> {
        if self.lengthscales.len() != dim {
            return Err(RefModelError::InvalidKernel(format!(
                "{} length scales for {dim} inputs",
                self.lengthscales.len()
            )));
        }
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !self.lengthscales.iter().all(|&l| ok(l)) || !ok(self.signal_variance) {
            return Err(RefModelError::InvalidKernel(
                "length scales and signal variance must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a
            .iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| ((x - y) / l).powi(2))
            .sum();
        self.signal_variance * (-0.5 * r2).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LengthscalePolicy {
    Fixed(GprKernel),
    /// Maximize the log marginal likelihood over the length scales and signal variance.
    MaximizeLikelihood,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GprModel {
    kernel: GprKernel,
    noise: f64,
    inputs: Vec<Vec<f64>>,
    input_scaling: InputScaling,
    target_scaling: AffineMap,
    /// `(K + noise I)^{-1} t` for the scaled targets.
    dual_weights: Vec<f64>,
    /// Row-major lower Cholesky factor of `K + noise I`.
    cholesky: Vec<f64>,
    log_marginal_likelihood: f64,
}

impl GprModel {
    pub fn kernel(&self) -> &GprKernel {
        &self.kernel
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn dim(&self) -> usize {
        self.input_scaling.dim()
    }

    pub fn dual_weights(&self) -> &[f64] {
        &self.dual_weights
    }

    pub fn input_scaling(&self) -> &InputScaling {
        &self.input_scaling
    }

    pub fn target_scaling(&self) -> AffineMap {
        self.target_scaling
    }

    /// Cholesky factor of the regularized kernel matrix, row-major.
    pub fn cholesky_factor(&self) -> &[f64] {
        &self.cholesky
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    /// Posterior mean in scaled target units at a scaled input point.
    pub fn predict_scaled(&self, xs: &[f64]) -> f64 {
        self.inputs
            .iter()
            .zip(&self.dual_weights)
            .map(|(xi, a)| self.kernel.eval(xs, xi) * a)
            .sum()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, RefModelError> {
        if x.len() != self.dim() {
            return Err(RefModelError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let xs = self.input_scaling.forward(x);
        Ok(self.target_scaling.inverse(self.predict_scaled(&xs)))
    }

    pub fn predict_many(&self, points: &[Vec<f64>]) -> Result<Vec<f64>, RefModelError> {
        points.iter().map(|x| self.predict(x)).collect()
    }
}

fn kernel_matrix(kernel: &GprKernel, xs: &[Vec<f64>], noise: f64) -> DMatrix<f64> {
    let n = xs.len();
    DMatrix::from_fn(n, n, |i, j| {
        kernel.eval(&xs[i], &xs[j]) + if i == j { noise } else { 0.0 }
    })
}

fn nlml_value(chol: &Cholesky<f64, Dyn>, t: &DVector<f64>, alpha: &DVector<f64>) -> f64 {
    let n = t.len() as f64;
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    0.5 * t.dot(alpha) + log_det_half + 0.5 * n * (2.0 * std::f64::consts::PI).ln()
}

/// Negative log marginal likelihood and its gradient in
/// `theta = (ln l_1, ..., ln l_d, ln s^2)`.
pub(crate) fn nlml_with_gradient(
    theta: &[f64],
    xs: &[Vec<f64>],
    t: &DVector<f64>,
    noise: f64,
    grad: &mut [f64],
) -> f64 {
    let d = theta.len() - 1;
    let kernel = GprKernel {
        lengthscales: theta[..d].iter().map(|v| v.exp()).collect(),
        signal_variance: theta[d].exp(),
    };
    let k = kernel_matrix(&kernel, xs, noise);
    let Some(chol) = k.clone().cholesky() else {
        grad.iter_mut().for_each(|g| *g = 0.0);
        return FAILED_NLML;
    };
    let alpha = chol.solve(t);
    let value = nlml_value(&chol, t, &alpha);
    // dNLML/dtheta = 1/2 tr((K^{-1} - alpha alpha') dK/dtheta)
    let kinv = chol.inverse();
    let n = xs.len();
    let mut w = kinv;
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] -= alpha[i] * alpha[j];
        }
    }
    grad.iter_mut().for_each(|g| *g = 0.0);
    for i in 0..n {
        for j in 0..n {
            let signal = k[(i, j)] - if i == j { noise } else { 0.0 };
            let wij = 0.5 * w[(i, j)] * signal;
            grad[d] += wij;
            for (q, g) in grad[..d].iter_mut().enumerate() {
                let r = (xs[i][q] - xs[j][q]) / kernel.lengthscales[q];
                *g += wij * r * r;
            }
        }
    }
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        return FAILED_NLML;
    }
    value
}

/// Fits the posterior mean `k(x, X) (K + noise I)^{-1} t` on centered, range-scaled
/// targets. `noise` is in scaled target units.
pub fn gpr_fit(
    data: &Dataset,
    noise: f64,
    policy: &LengthscalePolicy,
) -> Result<GprModel, RefModelError> {
    gpr_fit_with(data, noise, policy, Execution::Sequential)
}

/// As [`gpr_fit`], with the hyperparameter restarts run under `execution`.
pub fn gpr_fit_with(
    data: &Dataset,
    noise: f64,
    policy: &LengthscalePolicy,
    execution: Execution,
) -> Result<GprModel, RefModelError> {
    if !(noise.is_finite() && noise > 0.0) {
        return Err(RefModelError::InvalidNoise(noise));
    }
    let dim = data.dim();
    let input_scaling = InputScaling::from_dataset(data);
    let ts = target_scaling(data);
    let xs: Vec<Vec<f64>> = data.inputs().iter().map(|x| input_scaling.forward(x)).collect();
    let t = DVector::from_iterator(data.len(), data.targets().iter().map(|&v| ts.forward(v)));

    let kernel = match policy {
        LengthscalePolicy::Fixed(k) => {
            k.validate(dim)?;
            k.clone()
        }
        LengthscalePolicy::MaximizeLikelihood => {
            let mut lower = vec![LOG_LENGTHSCALE_MIN; dim];
            let mut upper = vec![LOG_LENGTHSCALE_MAX; dim];
            lower.push(LOG_VARIANCE_MIN);
            upper.push(LOG_VARIANCE_MAX);
            let bounds = SearchBox::new(lower, upper)?;
            let options = MultistartOptions {
                restarts: HYPER_RESTARTS,
                execution,
                ..MultistartOptions::default()
            };
            let best = minimize_box(
                |theta, grad| nlml_with_gradient(theta, &xs, &t, noise, grad),
                &bounds,
                &options,
            )?;
            GprKernel {
                lengthscales: best.argmin[..dim].iter().map(|v| v.exp()).collect(),
                signal_variance: best.argmin[dim].exp(),
            }
        }
    };

    let k = kernel_matrix(&kernel, &xs, noise);
    let chol = k.cholesky().ok_or(RefModelError::Factorization)?;
    let alpha = chol.solve(&t);
    let lml = -nlml_value(&chol, &t, &alpha);
    let l = chol.l();
    let n = xs.len();
    let cholesky = (0..n * n).map(|idx| l[(idx / n, idx % n)]).collect();
    Ok(GprModel {
        kernel,
        noise,
        inputs: xs,
        input_scaling,
        target_scaling: ts,
        dual_weights: alpha.as_slice().to_vec(),
        cholesky,
        log_marginal_likelihood: lml,
    })
}

pub fn gpr_predict(model: &GprModel, x: &[f64]) -> Result<f64, RefModelError> {
    model.predict(x)
}
