//! Shape-constrained polynomial regression as a semi-infinite program.
//!
//! The regression `min 1/2 ||Phi w - t||^2` subject to `sign * D y_w(x) >= 0` for
//! every `x` in the input box has infinitely many constraints. [`fit`] solves it
//! with an adaptive discretization (exchange) scheme:
//!
//! 1. start from a coarse tensor grid of constraint locations per constraint entry;
//! 2. solve the finite QP over the current locations;
//! 3. for every entry, globally minimize the constrained derivative of the current
//!    model over the box and add the minimizer wherever the violation exceeds the
//!    entry's tolerance; repeat from 2 if anything was added;
//! 4. otherwise scan a fixed reference grid; stop if it is clean, else add the worst
//!    grid point of every violating entry and repeat from 2.
//!
//! Everything runs in scaled coordinates (see [`crate::scaling`]). Tolerances are
//! 1 % of the target range per unit of input range, converted to scaled units.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{BasisError, BasisSpec, Polynomial};
use crate::constraints::{ConstraintError, ShapeConstraint, ShapeConstraintSpec};
use crate::dataset::{DataError, Dataset};
use crate::exec::Execution;
use crate::globalopt::{minimize_box, GlobalOptError, MultistartOptions, SearchBox};
use crate::model::PolynomialModel;
use crate::qp::{solve_qp, QpError, QuadraticProgram};
use crate::scaling::{target_scaling, InputScaling};

/// Relative size of the ridge added to `Phi' Phi`: `1e-8 * trace / N_m`.
pub const HESSIAN_JITTER: f64 = 1e-8;
/// Scaled distance below which a new constraint location duplicates an old one.
pub const DUPLICATE_DISTANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum FitError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("upper-level problem: {0}")]
    Qp(#[from] QpError),
    #[error("lower-level problem: {0}")]
    GlobalOpt(#[from] GlobalOptError),
    #[error("direction {direction} carries a constraint but the data has no spread in it")]
    ZeroRange { direction: usize },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

/// Violation tolerance of one constraint entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// In raw units of the constrained derivative.
    pub raw: f64,
    /// In scaled units (scaled target per scaled input^order).
    pub scaled: f64,
}

/// 1 % of the target range divided by the input range of the constrained
/// direction (raised to the derivative order).
pub fn epsilon_tolerances(
    data: &Dataset,
    spec: &ShapeConstraintSpec,
) -> Result<Vec<Tolerance>, FitError> {
    spec.validate_dim(data.dim())?;
    let (t_lo, t_hi) = data.target_range();
    let t_range = t_hi - t_lo;
    let t_scale = target_scaling(data).scale;
    spec.entries()
        .iter()
        .map(|e| {
            let (lo, hi) = data.input_range(e.direction);
            let width = hi - lo;
            if !(width > 0.0) {
                return Err(FitError::ZeroRange {
                    direction: e.direction,
                });
            }
            let per_unit = width.powi(e.order as i32);
            let raw = 0.01 * t_range / per_unit;
            Ok(Tolerance {
                raw,
                scaled: raw * per_unit / t_scale,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    InitialGrid,
    Adaptive,
    ReferenceGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationPoint {
    /// Scaled coordinates.
    pub point: Vec<f64>,
    pub provenance: Provenance,
}

/// Finite constraint-location sets, one per constraint entry. Sets only grow.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiscretizationState {
    sets: Vec<Vec<DiscretizationPoint>>,
}

impl DiscretizationState {
    /// The same tensor grid for every entry.
    pub fn initial(entries: usize, bounds: &SearchBox, resolution: usize) -> Self {
        let grid = tensor_grid(bounds, resolution);
        let set: Vec<DiscretizationPoint> = grid
            .into_iter()
            .map(|point| DiscretizationPoint {
                point,
                provenance: Provenance::InitialGrid,
            })
            .collect();
        Self {
            sets: vec![set; entries],
        }
    }

    pub fn sets(&self) -> &[Vec<DiscretizationPoint>] {
        &self.sets
    }

    pub fn total(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    /// Non-initial points per entry.
    pub fn added_counts(&self) -> Vec<usize> {
        self.sets
            .iter()
            .map(|s| {
                s.iter()
                    .filter(|p| p.provenance != Provenance::InitialGrid)
                    .count()
            })
            .collect()
    }

    /// Adds `point` to the set of `entry` unless it duplicates an existing location.
    pub fn try_add(&mut self, entry: usize, point: Vec<f64>, provenance: Provenance) -> bool {
        let set = &mut self.sets[entry];
        let duplicate = set.iter().any(|p| {
            p.point
                .iter()
                .zip(&point)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                <= DUPLICATE_DISTANCE
        });
        if duplicate {
            return false;
        }
        set.push(DiscretizationPoint { point, provenance });
        true
    }
}

/// Equidistant tensor grid with `resolution` values per non-degenerate direction,
/// first coordinate most significant. Degenerate directions contribute one value.
pub fn tensor_grid(bounds: &SearchBox, resolution: usize) -> Vec<Vec<f64>> {
    let axes = grid_axes(bounds, resolution);
    let total: usize = axes.iter().map(Vec::len).product();
    (0..total).map(|i| grid_point(&axes, i)).collect()
}

pub(crate) fn grid_axes(bounds: &SearchBox, resolution: usize) -> Vec<Vec<f64>> {
    bounds
        .lower()
        .iter()
        .zip(bounds.upper())
        .map(|(&lo, &hi)| {
            if hi > lo && resolution > 1 {
                let h = (hi - lo) / (resolution - 1) as f64;
                (0..resolution)
                    .map(|i| if i + 1 == resolution { hi } else { lo + h * i as f64 })
                    .collect()
            } else {
                vec![lo]
            }
        })
        .collect()
}

pub(crate) fn grid_point(axes: &[Vec<f64>], mut index: usize) -> Vec<f64> {
    let mut point = vec![0.0; axes.len()];
    for j in (0..axes.len()).rev() {
        let n = axes[j].len();
        point[j] = axes[j][index % n];
        index /= n;
    }
    point
}

/// Least-squares part of the upper-level problems, shared across iterations.
#[derive(Debug, Clone)]
struct LeastSquares {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
}

impl LeastSquares {
    fn new(basis: &BasisSpec, inputs: &[Vec<f64>], targets: &[f64]) -> Result<Self, FitError> {
        let phi = basis.design_matrix(inputs)?;
        let t = DVector::from_column_slice(targets);
        let mut hessian = phi.tr_mul(&phi);
        let n = hessian.nrows();
        let jitter = HESSIAN_JITTER * hessian.trace() / n as f64;
        // An all-zero design (impossible with a constant term) would leave no ridge.
        let jitter = if jitter > 0.0 { jitter } else { HESSIAN_JITTER };
        for i in 0..n {
            hessian[(i, i)] += jitter;
        }
        // Exact symmetry for the QP's check.
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (hessian[(i, j)] + hessian[(j, i)]);
                hessian[(i, j)] = v;
                hessian[(j, i)] = v;
            }
        }
        Ok(Self {
            hessian,
            linear: phi.tr_mul(&t),
        })
    }

    fn program(
        &self,
        basis: &BasisSpec,
        spec: &ShapeConstraintSpec,
        state: &DiscretizationState,
    ) -> Result<QuadraticProgram, FitError> {
        let n = basis.len();
        let p = state.total();
        let mut c = DMatrix::zeros(n, p);
        let mut col = 0;
        for (entry, set) in spec.entries().iter().zip(state.sets()) {
            let sign = entry.sign.value();
            for loc in set {
                let d = basis.eval_partial(&loc.point, entry.direction, entry.order)?;
                for (i, v) in d.into_iter().enumerate() {
                    c[(i, col)] = sign * v;
                }
                col += 1;
            }
        }
        Ok(QuadraticProgram::new(
            self.hessian.clone(),
            self.linear.clone(),
            c,
            DVector::zeros(p),
        )?)
    }
}

/// Inputs and targets of `data` in scaled coordinates.
fn scaled_data(data: &Dataset) -> (InputScaling, Vec<Vec<f64>>, Vec<f64>) {
    let scaling = InputScaling::from_dataset(data);
    let t_map = target_scaling(data);
    let inputs = data.inputs().iter().map(|x| scaling.forward(x)).collect();
    let targets = data.targets().iter().map(|&t| t_map.forward(t)).collect();
    (scaling, inputs, targets)
}

/// The `k`-th discretized upper-level QP: jittered least squares in scaled
/// coordinates plus one constraint column `sign * D phi(x)` per location.
pub fn assemble_upper_level(
    data: &Dataset,
    spec: &ShapeConstraintSpec,
    basis: &BasisSpec,
    state: &DiscretizationState,
) -> Result<QuadraticProgram, FitError> {
    spec.validate_dim(data.dim())?;
    if state.sets().len() != spec.len() {
        return Err(FitError::InvalidOptions(format!(
            "discretization has {} sets for {} constraint entries",
            state.sets().len(),
            spec.len()
        )));
    }
    let (_, inputs, targets) = scaled_data(data);
    LeastSquares::new(basis, &inputs, &targets)?.program(basis, spec, state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerLevelResult {
    pub point: Vec<f64>,
    /// `min_x sign * D y(x)`; negative means the constraint is violated somewhere.
    pub value: f64,
}

/// The constrained quantity `sign * D y_w` as a polynomial in scaled inputs.
pub fn constraint_polynomial(basis: &BasisSpec, weights: &[f64], entry: &ShapeConstraint) -> Polynomial {
    Polynomial::from_basis(basis, weights)
        .derivative(entry.direction, entry.order)
        .scaled(entry.sign.value())
}

/// Approximate global minimizer of `sign * D y_w` over `bounds`.
pub fn lower_level_search(
    basis: &BasisSpec,
    weights: &[f64],
    entry: &ShapeConstraint,
    bounds: &SearchBox,
    options: &MultistartOptions,
) -> Result<LowerLevelResult, GlobalOptError> {
    let g = constraint_polynomial(basis, weights, entry);
    let r = minimize_box(|x, grad| g.eval_with_gradient(x, grad), bounds, options)?;
    Ok(LowerLevelResult {
        point: r.argmin,
        value: r.value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridViolation {
    /// Index into the constraint spec.
    pub entry: usize,
    pub point: Vec<f64>,
    /// Value of `sign * D y` at `point`; below `-tolerance`.
    pub value: f64,
}

/// Worst violation per entry on a tensor grid, in the coordinates of `bounds`.
/// Ties go to the lexicographically smallest grid index.
fn scan_grid(
    polys: &[Polynomial],
    tolerances: &[f64],
    bounds: &SearchBox,
    resolution: usize,
    execution: Execution,
) -> Vec<GridViolation> {
    let axes = grid_axes(bounds, resolution);
    let total: usize = axes.iter().map(Vec::len).product();
    let mut out = Vec::new();
    for (entry, (poly, &tol)) in polys.iter().zip(tolerances).enumerate() {
        let values = execution.map_range(total, |i| poly.eval(&grid_point(&axes, i)));
        let mut worst: Option<(usize, f64)> = None;
        for (i, &v) in values.iter().enumerate() {
            if v < -tol && worst.is_none_or(|(_, w)| v < w) {
                worst = Some((i, v));
            }
        }
        if let Some((i, value)) = worst {
            out.push(GridViolation {
                entry,
                point: grid_point(&axes, i),
                value,
            });
        }
    }
    out
}

/// Reference-grid audit of a fitted model in raw units.
///
/// `tolerances` are raw-unit tolerances, one per entry. Returns, for each entry
/// with some grid value below `-tolerance`, the grid point of largest violation.
pub fn reference_grid_check(
    model: &PolynomialModel,
    spec: &ShapeConstraintSpec,
    tolerances: &[f64],
    resolution: usize,
    execution: Execution,
) -> Result<Vec<GridViolation>, FitError> {
    spec.validate_dim(model.dim())?;
    if tolerances.len() != spec.len() {
        return Err(FitError::InvalidOptions(format!(
            "{} tolerances for {} constraint entries",
            tolerances.len(),
            spec.len()
        )));
    }
    if resolution < 2 {
        return Err(FitError::InvalidOptions("grid resolution must be at least 2".into()));
    }
    let factors: Vec<f64> = spec
        .entries()
        .iter()
        .map(|e| model.derivative_factor(e.direction, e.order))
        .collect();
    let polys: Vec<Polynomial> = spec
        .entries()
        .iter()
        .zip(&factors)
        .map(|(e, f)| constraint_polynomial(model.basis(), model.coefficients(), e).scaled(*f))
        .collect();
    let scaling = model.input_scaling();
    let found = scan_grid(&polys, tolerances, &scaling.unit_box(), resolution, execution);
    Ok(found
        .into_iter()
        .map(|v| GridViolation {
            point: scaling.inverse(&v.point),
            ..v
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Initial grid values per direction; `None` picks 5 for `d <= 2` and 4 otherwise.
    pub initial_grid: Option<usize>,
    pub reference_grid: usize,
    /// Lower-level multistart settings; `None` uses `100 * d` Sobol starts.
    pub multistart: Option<MultistartOptions>,
    pub max_iterations: usize,
    /// Raw-unit tolerances overriding the 1 % rule, one per constraint entry.
    pub epsilon: Option<Vec<f64>>,
    pub execution: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            initial_grid: None,
            reference_grid: 20,
            multistart: None,
            max_iterations: 500,
            epsilon: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitStatus {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// Lower-level search added points (or nothing was violated).
    LowerLevel,
    /// The reference-grid check ran.
    ReferenceGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    /// Optimal value of `1/2 ||Phi w - t||^2 + jitter` in scaled units.
    pub objective: f64,
    /// Lower-level minimum per entry (scaled units).
    pub worst: Vec<f64>,
    pub phase: Phase,
    pub added: usize,
    pub constraints: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Index of the last outer iteration (0 for the first QP solve).
    pub iterations: usize,
    /// Size of the final discretization. When the iteration cap stops the loop
    /// this includes violators found after the last QP solve.
    pub total_constraints: usize,
    /// Non-initial constraint locations per entry.
    pub added_points: Vec<usize>,
    /// Training RMSE in raw target units.
    pub rmse: f64,
    pub status: FitStatus,
    pub tolerances: Vec<Tolerance>,
    pub log: Vec<IterationLog>,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: PolynomialModel,
    pub report: FitReport,
    pub discretization: DiscretizationState,
}

/// Fits a degree-`degree` polynomial under the constraints in `spec`.
///
/// Hitting `max_iterations` is not an error: the outcome carries the last iterate
/// and `FitStatus::MaxIterations`. The same status is reported if the reference
/// grid keeps flagging locations that are already in the discretization, which
/// can only happen when a tolerance is below the QP's feasibility resolution.
pub fn fit(
    data: &Dataset,
    spec: &ShapeConstraintSpec,
    degree: u32,
    options: &FitOptions,
) -> Result<FitOutcome, FitError> {
    if degree == 0 {
        return Err(FitError::InvalidOptions("degree must be at least 1".into()));
    }
    if options.reference_grid < 2 {
        return Err(FitError::InvalidOptions(
            "reference grid resolution must be at least 2".into(),
        ));
    }
    let d = data.dim();
    let init_res = options.initial_grid.unwrap_or(if d <= 2 { 5 } else { 4 });
    if init_res < 2 {
        return Err(FitError::InvalidOptions(
            "initial grid resolution must be at least 2".into(),
        ));
    }
    let mut tolerances = epsilon_tolerances(data, spec)?;
    if let Some(eps) = &options.epsilon {
        if eps.len() != spec.len() {
            return Err(FitError::InvalidOptions(format!(
                "{} tolerance overrides for {} constraint entries",
                eps.len(),
                spec.len()
            )));
        }
        let t_scale = target_scaling(data).scale;
        for ((tol, &raw), e) in tolerances.iter_mut().zip(eps).zip(spec.entries()) {
            if !(raw >= 0.0) {
                return Err(FitError::InvalidOptions(format!("tolerance {raw} is negative")));
            }
            let (lo, hi) = data.input_range(e.direction);
            *tol = Tolerance {
                raw,
                scaled: raw * (hi - lo).powi(e.order as i32) / t_scale,
            };
        }
    }
    let scaled_eps: Vec<f64> = tolerances.iter().map(|t| t.scaled).collect();
    let multistart = options.multistart.unwrap_or(MultistartOptions {
        execution: options.execution,
        ..MultistartOptions::for_dim(d)
    });

    let basis = BasisSpec::new(d, degree)?;
    let (scaling, inputs, targets) = scaled_data(data);
    let t_map = target_scaling(data);
    let bounds = scaling.unit_box();
    let lsq = LeastSquares::new(&basis, &inputs, &targets)?;
    let mut state = DiscretizationState::initial(spec.len(), &bounds, init_res);
    let mut log = Vec::new();
    let mut iteration = 0usize;

    let (weights, status) = loop {
        let program = lsq.program(&basis, spec, &state)?;
        let solution = solve_qp(&program)?;
        let w: Vec<f64> = solution.w.iter().copied().collect();

        // Lower-level problems: worst violator per entry.
        let mut worst = Vec::with_capacity(spec.len());
        let mut added = 0;
        for (k, entry) in spec.entries().iter().enumerate() {
            let r = lower_level_search(&basis, &w, entry, &bounds, &multistart)?;
            worst.push(r.value);
            if r.value < -scaled_eps[k] && state.try_add(k, r.point, Provenance::Adaptive) {
                added += 1;
            }
        }
        let mut phase = Phase::LowerLevel;
        let mut done = false;
        if added == 0 {
            phase = Phase::ReferenceGrid;
            let polys: Vec<Polynomial> = spec
                .entries()
                .iter()
                .map(|e| constraint_polynomial(&basis, &w, e))
                .collect();
            let violations = scan_grid(
                &polys,
                &scaled_eps,
                &bounds,
                options.reference_grid,
                options.execution,
            );
            if violations.is_empty() {
                done = true;
            }
            for v in violations {
                if state.try_add(v.entry, v.point, Provenance::ReferenceGrid) {
                    added += 1;
                }
            }
        }
        log.push(IterationLog {
            iteration,
            objective: solution.objective,
            worst,
            phase,
            added,
            constraints: state.total(),
        });
        if done {
            break (w, FitStatus::Converged);
        }
        if added == 0 || iteration >= options.max_iterations {
            break (w, FitStatus::MaxIterations);
        }
        iteration += 1;
    };

    let model = PolynomialModel::new(basis, weights, scaling, t_map)?;
    let rmse = model.rmse(data)?;
    let report = FitReport {
        iterations: iteration,
        total_constraints: state.total(),
        added_points: state.added_counts(),
        rmse,
        status,
        tolerances,
        log,
    };
    Ok(FitOutcome {
        model,
        report,
        discretization: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::AffineMap;

    fn data_1d(points: &[(f64, f64)]) -> Dataset {
        Dataset::new(
            points.iter().map(|p| vec![p.0]).collect(),
            points.iter().map(|p| p.1).collect(),
        )
        .unwrap()
    }

    fn increasing() -> ShapeConstraintSpec {
        ShapeConstraintSpec::from_signature(&[1]).unwrap()
    }

    #[test]
    fn tolerance_formula() {
        let d = data_1d(&[(0.0, 0.0), (5.0, 10.0), (2.0, 3.0)]);
        let eps = epsilon_tolerances(&d, &increasing()).unwrap();
        assert!((eps[0].raw - 0.02).abs() < 1e-15);
        assert!((eps[0].scaled - 0.01).abs() < 1e-15);

        let d = data_1d(&[(0.0, 3.0), (5.0, 3.0)]);
        assert_eq!(epsilon_tolerances(&d, &increasing()).unwrap()[0].raw, 0.0);

        let d = data_1d(&[(871.0, 100.0), (933.0, 200.0)]);
        let eps = epsilon_tolerances(&d, &increasing()).unwrap();
        assert!((eps[0].raw - 0.01 * 100.0 / 62.0).abs() < 1e-15);
        assert!((eps[0].raw - 0.016129).abs() < 1e-6);

        let concave = ShapeConstraintSpec::new(vec![ShapeConstraint::concave(0)]).unwrap();
        let eps = epsilon_tolerances(&d, &concave).unwrap();
        assert!((eps[0].raw - 0.01 * 100.0 / (62.0 * 62.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_range_rejected() {
        let d = Dataset::new(vec![vec![1.0, 2.0], vec![1.0, 3.0]], vec![0.0, 1.0]).unwrap();
        let spec = ShapeConstraintSpec::from_signature(&[1, 1]).unwrap();
        assert!(matches!(
            epsilon_tolerances(&d, &spec),
            Err(FitError::ZeroRange { direction: 0 })
        ));
    }

    #[test]
    fn upper_level_column_counts() {
        let d = Dataset::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![0.3, 1.0]],
            vec![0.0, 1.0, 2.0],
        )
        .unwrap();
        let basis = BasisSpec::new(2, 2).unwrap();
        let unit = SearchBox::unit(2);

        let empty = ShapeConstraintSpec::unconstrained();
        let qp = assemble_upper_level(&d, &empty, &basis, &DiscretizationState::initial(0, &unit, 5))
            .unwrap();
        assert_eq!(qp.num_constraints(), 0);

        let one = ShapeConstraintSpec::from_signature(&[1, 0]).unwrap();
        let state = DiscretizationState {
            sets: vec![tensor_grid(&SearchBox::unit(1), 5)
                .into_iter()
                .map(|x| DiscretizationPoint {
                    point: vec![x[0], 0.5],
                    provenance: Provenance::InitialGrid,
                })
                .collect()],
        };
        assert_eq!(
            assemble_upper_level(&d, &one, &basis, &state).unwrap().num_constraints(),
            5
        );

        let both = ShapeConstraintSpec::from_signature(&[1, 1]).unwrap();
        let state = DiscretizationState::initial(2, &unit, 5);
        let qp = assemble_upper_level(&d, &both, &basis, &state).unwrap();
        assert_eq!(qp.num_constraints(), 50);
        // Column = sign * d/dx_j phi at the location.
        let loc = &state.sets()[1][7].point;
        let expected = basis.eval_partial(loc, 1, 1).unwrap();
        for (i, v) in expected.iter().enumerate() {
            assert_eq!(qp.constraints()[(i, 25 + 7)], *v);
        }
    }

    #[test]
    fn lower_level_examples() {
        let basis = BasisSpec::new(1, 3).unwrap();
        let opts = MultistartOptions::for_dim(1);
        let inc = ShapeConstraint::increasing(0);

        // y = x^2 on [0,1]
        let r = lower_level_search(&basis, &[0.0, 0.0, 1.0, 0.0], &inc, &SearchBox::unit(1), &opts)
            .unwrap();
        assert_eq!(r.point, vec![0.0]);
        assert_eq!(r.value, 0.0);

        // y = -x
        let r = lower_level_search(&basis, &[0.0, -1.0, 0.0, 0.0], &inc, &SearchBox::unit(1), &opts)
            .unwrap();
        assert_eq!(r.value, -1.0);

        // y = x^3 - x on [-1, 1]: min of 3x^2 - 1 is -1 at 0
        let b = SearchBox::new(vec![-1.0], vec![1.0]).unwrap();
        let r = lower_level_search(&basis, &[0.0, -1.0, 0.0, 1.0], &inc, &b, &opts).unwrap();
        assert!((r.value + 1.0).abs() < 1e-12);
        assert!(r.point[0].abs() < 1e-6);
    }

    fn raw_model(coefficients: Vec<f64>) -> PolynomialModel {
        let basis = BasisSpec::new(1, coefficients.len() as u32 - 1).unwrap();
        PolynomialModel::new(basis, coefficients, InputScaling::identity(1), AffineMap::IDENTITY)
            .unwrap()
    }

    #[test]
    fn reference_grid_examples() {
        let spec = increasing();
        let exec = Execution::Sequential;
        let up = raw_model(vec![0.0, 1.0, 1.0]);
        assert!(reference_grid_check(&up, &spec, &[0.0], 20, exec).unwrap().is_empty());

        let down = raw_model(vec![0.0, -1.0]);
        let v = reference_grid_check(&down, &spec, &[0.5], 20, exec).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].value, -1.0);
        // all grid values tie, the first grid point wins
        assert_eq!(v[0].point, vec![0.0]);

        // y' = -eps/2 everywhere stays within tolerance
        let slight = raw_model(vec![0.0, -0.25]);
        assert!(reference_grid_check(&slight, &spec, &[0.5], 20, exec).unwrap().is_empty());

        assert!(reference_grid_check(&slight, &spec, &[0.5], 1, exec).is_err());
    }

    #[test]
    fn feasible_line_is_kept() {
        // least squares line through (0,1),(0.5,0),(1,2): slope 1, intercept 0.5
        let d = data_1d(&[(0.0, 1.0), (0.5, 0.0), (1.0, 2.0)]);
        let out = fit(&d, &increasing(), 1, &FitOptions::default()).unwrap();
        assert_eq!(out.report.status, FitStatus::Converged);
        assert_eq!(out.report.added_points, vec![0]);
        assert_eq!(out.report.iterations, 0);
        let m = &out.model;
        assert!((m.predict(&[0.0]).unwrap() - 0.5).abs() < 1e-6);
        assert!((m.derivative(&[0.3], 0, 1).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn decreasing_data_gives_constant_mean() {
        let d = data_1d(&[(0.0, 1.0), (1.0, 0.0)]);
        let out = fit(&d, &increasing(), 1, &FitOptions::default()).unwrap();
        assert_eq!(out.report.status, FitStatus::Converged);
        for x in [0.0, 0.4, 1.0] {
            assert!((out.model.predict(&[x]).unwrap() - 0.5).abs() < 1e-6);
        }
        // brute force over slope >= 0: best intercept for each slope is the mean residual
        let best = (0..=1000)
            .map(|i| {
                let s = i as f64 * 1e-3;
                let c = 0.5 - s * 0.5;
                (c - 1.0).powi(2) + (c + s).powi(2)
            })
            .fold(f64::INFINITY, f64::min);
        let rmse_brute = (best / 2.0).sqrt();
        assert!((out.report.rmse - rmse_brute).abs() < 1e-6);
    }

    #[test]
    fn constant_targets() {
        let d = Dataset::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5], vec![1.0, 1.0]],
            vec![7.0; 4],
        )
        .unwrap();
        let spec = ShapeConstraintSpec::from_signature(&[1, -1]).unwrap();
        let out = fit(&d, &spec, 4, &FitOptions::default()).unwrap();
        assert_eq!(out.report.status, FitStatus::Converged);
        assert_eq!(out.report.iterations, 0);
        assert_eq!(out.report.added_points, vec![0, 0]);
        assert!(out.model.coefficients().iter().all(|&w| w == 0.0));
        assert_eq!(out.model.predict(&[0.3, 0.9]).unwrap(), 7.0);
    }

    #[test]
    fn zero_iteration_cap_stops_early() {
        let d = data_1d(&[(0.0, 0.0), (0.2, 1.0), (0.4, 0.2), (0.6, 0.3), (1.0, 1.0)]);
        let opts = FitOptions {
            max_iterations: 0,
            ..FitOptions::default()
        };
        let out = fit(&d, &increasing(), 6, &opts).unwrap();
        assert_eq!(out.report.status, FitStatus::MaxIterations);
        assert_eq!(out.report.iterations, 0);
    }

    #[test]
    fn options_validated() {
        let d = data_1d(&[(0.0, 0.0), (1.0, 1.0)]);
        assert!(fit(&d, &increasing(), 0, &FitOptions::default()).is_err());
        let bad = FitOptions {
            reference_grid: 1,
            ..FitOptions::default()
        };
        assert!(fit(&d, &increasing(), 2, &bad).is_err());
        let bad = FitOptions {
            epsilon: Some(vec![0.1, 0.2]),
            ..FitOptions::default()
        };
        assert!(fit(&d, &increasing(), 2, &bad).is_err());
        let out_of_range = ShapeConstraintSpec::from_signature(&[0, 1]).unwrap();
        assert!(matches!(
            fit(&d, &out_of_range, 2, &FitOptions::default()),
            Err(FitError::Constraint(_))
        ));
    }

    #[test]
    fn tensor_grid_layout() {
        let b = SearchBox::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let g = tensor_grid(&b, 3);
        assert_eq!(g, vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]]);
        let g = tensor_grid(&SearchBox::unit(2), 2);
        assert_eq!(
            g,
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]
        );
    }
}
