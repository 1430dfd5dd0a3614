//! Dense strictly convex quadratic programming.
//!
//! Solves
//!
//! ```text
//!     minimize    1/2 w' G w - a' w
//!     subject to  C' w >= b
//! ```
//!
//! with the dual active-set method of Goldfarb and Idnani (1983). The method starts
//! at the unconstrained minimizer and adds violated constraints one at a time while
//! keeping dual feasibility, so it is well suited to the upper-level problems of the
//! adaptive fit, where only a small fraction of the discretization points end up
//! active.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("hessian is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("constraints are infeasible")]
    Infeasible,
    #[error("active-set iteration limit of {0} reached")]
    MaxIterations(usize),
}

/// Strictly convex QP `min 1/2 w'Gw - a'w  s.t.  C'w >= b`.
#[derive(Debug, Clone)]
pub struct QuadraticProgram {
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    constraints: DMatrix<f64>,
    bounds: DVector<f64>,
    chol_lower: DMatrix<f64>,
}

impl QuadraticProgram {
    /// `constraints` is `n x p` with one constraint normal per column.
    pub fn new(
        hessian: DMatrix<f64>,
        linear: DVector<f64>,
        constraints: DMatrix<f64>,
        bounds: DVector<f64>,
    ) -> Result<Self, QpError> {
        let n = linear.len();
        if hessian.nrows() != n || hessian.ncols() != n {
            return Err(QpError::DimensionMismatch(format!(
                "hessian is {}x{}, linear term has length {n}",
                hessian.nrows(),
                hessian.ncols()
            )));
        }
        if constraints.nrows() != n || constraints.ncols() != bounds.len() {
            return Err(QpError::DimensionMismatch(format!(
                "constraint matrix is {}x{}, expected {n}x{}",
                constraints.nrows(),
                constraints.ncols(),
                bounds.len()
            )));
        }
        let scale = hessian.amax().max(f64::MIN_POSITIVE);
        let mut asym: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                asym = asym.max((hessian[(i, j)] - hessian[(j, i)]).abs());
            }
        }
        if asym > 1e-12 * scale {
            return Err(QpError::NotSymmetric(asym));
        }
        let chol = nalgebra::Cholesky::new(hessian.clone()).ok_or(QpError::NotPositiveDefinite)?;
        let chol_lower = chol.unpack();
        if (0..n).any(|i| !(chol_lower[(i, i)] > 0.0)) {
            return Err(QpError::NotPositiveDefinite);
        }
        Ok(Self {
            hessian,
            linear,
            constraints,
            bounds,
            chol_lower,
        })
    }

    /// QP without constraints.
    pub fn unconstrained(hessian: DMatrix<f64>, linear: DVector<f64>) -> Result<Self, QpError> {
        let n = linear.len();
        Self::new(hessian, linear, DMatrix::zeros(n, 0), DVector::zeros(0))
    }

    pub fn num_variables(&self) -> usize {
        self.linear.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.bounds.len()
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    pub fn constraints(&self) -> &DMatrix<f64> {
        &self.constraints
    }

    pub fn bounds(&self) -> &DVector<f64> {
        &self.bounds
    }

    pub fn objective(&self, w: &DVector<f64>) -> f64 {
        0.5 * w.dot(&(&self.hessian * w)) - self.linear.dot(w)
    }

    /// Componentwise `C'w - b`.
    pub fn slacks(&self, w: &DVector<f64>) -> DVector<f64> {
        self.constraints.tr_mul(w) - &self.bounds
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub w: DVector<f64>,
    /// Indices of the active constraints, in the order they were added.
    pub active_set: Vec<usize>,
    /// One multiplier per constraint; zero off the active set.
    pub multipliers: DVector<f64>,
    pub objective: f64,
    /// Number of active-set changes (additions plus drops).
    pub iterations: usize,
}

impl QpSolution {
    /// Largest constraint violation `max(0, b - C'w)`.
    pub fn infeasibility(&self, qp: &QuadraticProgram) -> f64 {
        qp.slacks(&self.w)
            .iter()
            .fold(0.0f64, |acc, &s| acc.max(-s))
    }

    /// `|| G w - a - C lambda ||_inf`.
    pub fn stationarity(&self, qp: &QuadraticProgram) -> f64 {
        let r = &qp.hessian * &self.w - &qp.linear - &qp.constraints * &self.multipliers;
        r.amax()
    }
}

// Rotation (c, s) with c*a + s*b = h and -s*a + c*b = 0.
fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let h = a.hypot(b);
    if h == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        (a / h, b / h, h)
    }
}

fn rotate_columns(m: &mut DMatrix<f64>, i: usize, k: usize, c: f64, s: f64) {
    for row in 0..m.nrows() {
        let a = m[(row, i)];
        let b = m[(row, k)];
        m[(row, i)] = c * a + s * b;
        m[(row, k)] = -s * a + c * b;
    }
}

/// Factorization state of the active set: `J = L^{-T} Q` and the triangular `R`.
struct ActiveFactors {
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    q: usize,
}

impl ActiveFactors {
    fn new(chol_lower: &DMatrix<f64>) -> Self {
        let n = chol_lower.nrows();
        let j = chol_lower
            .transpose()
            .solve_upper_triangular(&DMatrix::identity(n, n))
            .expect("cholesky factor has a positive diagonal");
        Self {
            j,
            r: DMatrix::zeros(n, n),
            q: 0,
        }
    }

    /// Returns `(d, z, r)` for a candidate normal.
    fn directions(&self, normal: &[f64]) -> (DVector<f64>, DVector<f64>, Vec<f64>) {
        let n = self.j.nrows();
        let normal = DVector::from_column_slice(normal);
        let d = self.j.tr_mul(&normal);
        let mut z = DVector::zeros(n);
        for col in self.q..n {
            let dc = d[col];
            if dc != 0.0 {
                z.axpy(dc, &self.j.column(col), 1.0);
            }
        }
        let mut r = vec![0.0; self.q];
        for i in (0..self.q).rev() {
            let mut acc = d[i];
            for (k, rk) in r.iter().enumerate().skip(i + 1) {
                acc -= self.r[(i, k)] * rk;
            }
            r[i] = acc / self.r[(i, i)];
        }
        (d, z, r)
    }

    fn add(&mut self, mut d: DVector<f64>) {
        let n = self.j.nrows();
        for i in (self.q + 1..n).rev() {
            if d[i] == 0.0 {
                continue;
            }
            let (c, s, h) = givens(d[i - 1], d[i]);
            d[i - 1] = h;
            d[i] = 0.0;
            rotate_columns(&mut self.j, i - 1, i, c, s);
        }
        for i in 0..=self.q {
            self.r[(i, self.q)] = d[i];
        }
        self.q += 1;
    }

    fn drop(&mut self, k: usize) {
        // Shift columns k+1.. of R left, then restore triangularity.
        for col in k..self.q - 1 {
            for row in 0..=col + 1 {
                self.r[(row, col)] = self.r[(row, col + 1)];
            }
        }
        for row in 0..self.q {
            self.r[(row, self.q - 1)] = 0.0;
        }
        for i in k..self.q - 1 {
            let (c, s, h) = givens(self.r[(i, i)], self.r[(i + 1, i)]);
            self.r[(i, i)] = h;
            self.r[(i + 1, i)] = 0.0;
            for col in i + 1..self.q - 1 {
                let a = self.r[(i, col)];
                let b = self.r[(i + 1, col)];
                self.r[(i, col)] = c * a + s * b;
                self.r[(i + 1, col)] = -s * a + c * b;
            }
            rotate_columns(&mut self.j, i, i + 1, c, s);
        }
        self.q -= 1;
    }
}

/// Global minimizer of a strictly convex QP.
pub fn solve_qp(qp: &QuadraticProgram) -> Result<QpSolution, QpError> {
    let n = qp.num_variables();
    let p = qp.num_constraints();
    let max_changes = 50 * (n + p);

    let chol = nalgebra::Cholesky::new(qp.hessian.clone()).ok_or(QpError::NotPositiveDefinite)?;
    let mut w = chol.solve(&qp.linear);

    let normals: Vec<Vec<f64>> = (0..p)
        .map(|i| qp.constraints.column(i).iter().copied().collect())
        .collect();
    let norms: Vec<f64> = normals
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let norms_l1: Vec<f64> = normals
        .iter()
        .map(|c| c.iter().map(|v| v.abs()).sum())
        .collect();
    let b_scale = 1.0 + qp.bounds.amax();

    let mut factors = ActiveFactors::new(&qp.chol_lower);
    let mut active: Vec<usize> = Vec::new();
    let mut is_active = vec![false; p];
    let mut u: Vec<f64> = Vec::new();
    let mut changes = 0usize;

    loop {
        // Step 1: pick the most violated constraint (scaled by its normal length).
        let slacks = qp.slacks(&w);
        let w_scale = w.amax();
        let mut chosen: Option<(usize, f64)> = None;
        for i in 0..p {
            if is_active[i] || norms[i] == 0.0 {
                if norms[i] == 0.0 && slacks[i] < -1e-10 * b_scale {
                    return Err(QpError::Infeasible);
                }
                continue;
            }
            let tol = 1e-10 * b_scale + 1e-14 * norms_l1[i] * w_scale;
            if slacks[i] < -tol {
                let score = slacks[i] / norms[i];
                if chosen.is_none_or(|(_, best)| score < best) {
                    chosen = Some((i, score));
                }
            }
        }
        let Some((cp, _)) = chosen else {
            break;
        };
        let normal = &normals[cp];
        u.push(0.0);

        // Step 2: move primal and dual until constraint `cp` becomes active.
        loop {
            if changes >= max_changes {
                return Err(QpError::MaxIterations(max_changes));
            }
            let (d, z, r) = factors.directions(normal);
            let d_norm = d.norm();
            let z_dot = z.dot(&DVector::from_column_slice(normal));

            let mut partial: Option<(usize, f64)> = None;
            for (k, &rk) in r.iter().enumerate() {
                if rk > 0.0 {
                    let ratio = u[k] / rk;
                    if partial.is_none_or(|(_, best)| ratio < best) {
                        partial = Some((k, ratio));
                    }
                }
            }
            let dependent = z_dot <= 1e-24 * d_norm * d_norm || z.amax() == 0.0;
            let slack = {
                let mut s = -qp.bounds[cp];
                for (ni, wi) in normal.iter().zip(w.iter()) {
                    s += ni * wi;
                }
                s
            };
            let full = if dependent {
                None
            } else {
                Some(-slack / z_dot)
            };

            match (partial, full) {
                (None, None) => return Err(QpError::Infeasible),
                (Some((k, t)), None) => {
                    // Dual step only: the candidate is dependent on the active set.
                    let q = factors.q;
                    for i in 0..q {
                        u[i] -= t * r[i];
                    }
                    u[q] += t;
                    remove_active(&mut factors, &mut active, &mut is_active, &mut u, k);
                    changes += 1;
                }
                (partial, Some(t_full)) => {
                    let (t, drop) = match partial {
                        Some((k, t_part)) if t_part < t_full => (t_part, Some(k)),
                        _ => (t_full, None),
                    };
                    w.axpy(t, &z, 1.0);
                    let q = factors.q;
                    for i in 0..q {
                        u[i] -= t * r[i];
                    }
                    u[q] += t;
                    changes += 1;
                    match drop {
                        None => {
                            factors.add(d);
                            active.push(cp);
                            is_active[cp] = true;
                            break;
                        }
                        Some(k) => {
                            remove_active(&mut factors, &mut active, &mut is_active, &mut u, k);
                        }
                    }
                }
            }
        }
    }

    let mut multipliers = DVector::zeros(p);
    for (&idx, &lambda) in active.iter().zip(&u) {
        multipliers[idx] = lambda.max(0.0);
    }
    let objective = qp.objective(&w);
    Ok(QpSolution {
        w,
        active_set: active,
        multipliers,
        objective,
        iterations: changes,
    })
}

fn remove_active(
    factors: &mut ActiveFactors,
    active: &mut Vec<usize>,
    is_active: &mut [bool],
    u: &mut Vec<f64>,
    k: usize,
) {
    factors.drop(k);
    is_active[active[k]] = false;
    active.remove(k);
    u.remove(k);
}
