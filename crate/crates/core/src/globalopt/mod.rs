//! Approximate global minimization of smooth functions over a box.
//!
//! Multistart from a Sobol point set, each start refined by a projected
//! limited-memory quasi-Newton descent using the caller's analytic gradient.
//! Restarts are independent and run through [`Execution`]; the best result is
//! chosen afterwards in Sobol order, so the outcome does not depend on scheduling.

mod local;
pub mod sobol;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;

pub use local::projected_gradient_norm;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlobalOptError {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("objective is not finite at {point:?}")]
    NonFiniteObjective { point: Vec<f64> },
    #[error("Sobol sequence supports dimensions 1..={max}, got {dim}")]
    SobolDimension { dim: usize, max: usize },
    #[error("too many Sobol points requested ({0})")]
    TooManyPoints(usize),
    #[error("at least one restart is required")]
    NoRestarts,
}

/// Axis-aligned box `[lower_1, upper_1] x ... x [lower_d, upper_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GlobalOptError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(GlobalOptError::InvalidBox(format!(
                "bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l <= u) {
                return Err(GlobalOptError::InvalidBox(format!(
                    "direction {j}: [{l}, {u}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| l <= v && v <= u)
    }
}

/// Deterministic Sobol points mapped affinely into `bounds`.
pub fn sobol_points(n: usize, bounds: &SearchBox) -> Result<Vec<Vec<f64>>, GlobalOptError> {
    let unit = sobol::sobol_unit(n, bounds.dim())?;
    Ok(unit
        .into_iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(j, &u)| {
                    let (l, h) = (bounds.lower[j], bounds.upper[j]);
                    (l + u * (h - l)).clamp(l, h)
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultistartOptions {
    pub restarts: usize,
    /// Stop a local run once the projected-gradient infinity norm drops below this.
    pub gradient_tolerance: f64,
    pub max_local_iterations: usize,
    pub execution: Execution,
}

impl MultistartOptions {
    /// 100 starts per dimension.
    pub fn for_dim(dim: usize) -> Self {
        Self {
            restarts: 100 * dim.max(1),
            ..Self::default()
        }
    }
}

impl Default for MultistartOptions {
    fn default() -> Self {
        Self {
            restarts: 100,
            gradient_tolerance: 1e-8,
            max_local_iterations: 200,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalMinResult {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub local_restarts: usize,
    pub converged_restarts: usize,
}

/// Best local minimum over all restarts.
///
/// `objective(x, grad)` returns `f(x)` and writes `grad f(x)`; it is evaluated
/// concurrently when the execution mode is parallel.
pub fn minimize_box<F>(
    objective: F,
    bounds: &SearchBox,
    options: &MultistartOptions,
) -> Result<GlobalMinResult, GlobalOptError>
where
    F: Fn(&[f64], &mut [f64]) -> f64 + Sync,
{
    if options.restarts == 0 {
        return Err(GlobalOptError::NoRestarts);
    }
    let starts = sobol_points(options.restarts, bounds)?;
    let runs = options.execution.map_range(starts.len(), |i| {
        local::minimize_local(
            &objective,
            &starts[i],
            &bounds.lower,
            &bounds.upper,
            options.gradient_tolerance,
            options.max_local_iterations,
        )
    });

    let mut best: Option<local::LocalResult> = None;
    let mut converged = 0;
    for run in runs {
        let run = run?;
        if run.converged {
            converged += 1;
        }
        // Strict comparison keeps the earliest start among ties.
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let mut grad = vec![0.0; bounds.dim()];
    let value = objective(&best.x, &mut grad);
    if !value.is_finite() {
        return Err(GlobalOptError::NonFiniteObjective { point: best.x });
    }
    Ok(GlobalMinResult {
        argmin: best.x,
        value,
        local_restarts: options.restarts,
        converged_restarts: converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(restarts: usize) -> MultistartOptions {
        MultistartOptions {
            restarts,
            ..MultistartOptions::default()
        }
    }

    #[test]
    fn sobol_points_in_box_and_deterministic() {
        let b = SearchBox::unit(1);
        let p = sobol_points(1, &b).unwrap();
        assert_eq!(p, sobol_points(1, &b).unwrap());
        assert!(b.contains(&p[0]));

        let b = SearchBox::unit(2);
        let p = sobol_points(4, &b).unwrap();
        for (i, a) in p.iter().enumerate() {
            assert!(b.contains(a));
            for c in &p[i + 1..] {
                assert_ne!(a, c);
            }
        }

        let b = SearchBox::new(vec![-1.0, 5.0], vec![1.0, 5.0]).unwrap();
        for x in sobol_points(16, &b).unwrap() {
            assert!(b.contains(&x));
            assert_eq!(x[1], 5.0);
        }
    }

    #[test]
    fn invalid_boxes() {
        assert!(SearchBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(SearchBox::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(SearchBox::new(vec![], vec![]).is_err());
        assert!(SearchBox::new(vec![f64::NAN], vec![1.0]).is_err());
    }

    #[test]
    fn interior_quadratic() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 0.3);
            (x[0] - 0.3).powi(2)
        };
        let r = minimize_box(f, &SearchBox::unit(1), &opts(100)).unwrap();
        assert!((r.argmin[0] - 0.3).abs() < 1e-6);
        assert!(r.value.abs() < 1e-6);
        assert_eq!(r.local_restarts, 100);
    }

    #[test]
    fn linear_objective_hits_boundary() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            x[0]
        };
        let r = minimize_box(f, &SearchBox::unit(1), &opts(100)).unwrap();
        assert_eq!(r.argmin, vec![0.0]);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn double_well() {
        // f' = 4x^3 - 2x vanishes at 0 and +-1/sqrt(2), where f = -1/4.
        let f = |x: &[f64], g: &mut [f64]| {
            let v = x[0];
            g[0] = 4.0 * v.powi(3) - 2.0 * v;
            v.powi(4) - v * v
        };
        let b = SearchBox::new(vec![-1.5], vec![1.5]).unwrap();
        let r = minimize_box(f, &b, &opts(100)).unwrap();
        assert!((r.value + 0.25).abs() < 1e-10);
        assert!((r.argmin[0].abs() - 0.5f64.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn zero_restarts_rejected() {
        let f = |_: &[f64], g: &mut [f64]| {
            g[0] = 0.0;
            0.0
        };
        assert_eq!(
            minimize_box(f, &SearchBox::unit(1), &opts(0)).unwrap_err(),
            GlobalOptError::NoRestarts
        );
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 5.0 * (5.0 * x[0]).cos();
            g[1] = 2.0 * x[1] - 3.0 * (3.0 * x[1]).sin();
            (5.0 * x[0]).sin() + x[1] * x[1] + (3.0 * x[1]).cos()
        };
        let b = SearchBox::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let mut o = opts(64);
        o.execution = Execution::Sequential;
        let a = minimize_box(f, &b, &o).unwrap();
        o.execution = Execution::Parallel;
        let c = minimize_box(f, &b, &o).unwrap();
        assert_eq!(a, c);
    }
}
