//! Multivariate monomial bases.
//!
//! Monomials of total degree at most `m` in `d` variables are enumerated in graded
//! lexicographic order: total degree ascending, ties broken lexicographically on
//! `(a_1, ..., a_d)` with `a_1` most significant. The ordering is part of the model
//! file format, so it must never change.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BasisError {
    #[error("basis dimension must be at least 1")]
    ZeroDimension,
    #[error("point has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("direction {direction} out of range for dimension {dim}")]
    InvalidDirection { direction: usize, dim: usize },
    #[error("derivative order {0} not supported (expected 1 or 2)")]
    InvalidOrder(u32),
    #[error("number of basis terms for d={dim}, m={degree} overflows")]
    Overflow { dim: usize, degree: u32 },
    #[error("design matrix requested for an empty point list")]
    NoPoints,
}

/// Exponent vector of a single monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Number of monomials of degree `<= m` in `d` variables, `C(m + d, m)`.
pub fn num_terms(d: usize, m: u32) -> Result<usize, BasisError> {
    if d == 0 {
        return Err(BasisError::ZeroDimension);
    }
    let overflow = || BasisError::Overflow { dim: d, degree: m };
    // C(d + i, i) = C(d + i - 1, i - 1) * (d + i) / i, exact at every step.
    let mut acc: u128 = 1;
    for i in 1..=u128::from(m) {
        let factor = (d as u128).checked_add(i).ok_or_else(overflow)?;
        acc = acc.checked_mul(factor).ok_or_else(overflow)? / i;
        if acc > usize::MAX as u128 {
            return Err(overflow());
        }
    }
    usize::try_from(acc).map_err(|_| overflow())
}

/// All multi-indices of total degree `<= m` in graded lexicographic order.
pub fn enumerate_multi_indices(d: usize, m: u32) -> Result<Vec<MultiIndex>, BasisError> {
    let count = num_terms(d, m)?;
    let mut out = Vec::with_capacity(count);
    let mut scratch = vec![0u32; d];
    for degree in 0..=m {
        compositions(degree, 0, &mut scratch, &mut out);
    }
    debug_assert_eq!(out.len(), count);
    Ok(out)
}

// Writes every split of `remaining` over scratch[pos..] in lexicographic order.
fn compositions(remaining: u32, pos: usize, scratch: &mut [u32], out: &mut Vec<MultiIndex>) {
    if pos + 1 == scratch.len() {
        scratch[pos] = remaining;
        out.push(MultiIndex(scratch.to_vec()));
        return;
    }
    for first in 0..=remaining {
        scratch[pos] = first;
        compositions(remaining - first, pos + 1, scratch, out);
    }
}

/// Table of `x_j^k` for `k <= max_power`, built by repeated multiplication.
fn power_table(x: &[f64], max_power: u32) -> Vec<f64> {
    let stride = max_power as usize + 1;
    let mut table = vec![1.0; x.len() * stride];
    for (j, &xj) in x.iter().enumerate() {
        let row = &mut table[j * stride..(j + 1) * stride];
        for k in 1..stride {
            row[k] = row[k - 1] * xj;
        }
    }
    table
}

/// `e (e-1) ... (e-order+1)`, the factor produced by differentiating `x^e` `order` times.
fn falling_factorial(e: u32, order: u32) -> f64 {
    if order > e {
        return 0.0;
    }
    (0..order).map(|i| f64::from(e - i)).product()
}

/// Full monomial basis for a given dimension and degree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BasisSpecRepr", into = "BasisSpecRepr")]
pub struct BasisSpec {
    dim: usize,
    degree: u32,
    indices: Vec<MultiIndex>,
}

/// Name of the enumeration rule, recorded in model files.
pub const ORDERING_NAME: &str = "graded-lex";

#[derive(Serialize, Deserialize)]
struct BasisSpecRepr {
    dim: usize,
    degree: u32,
    ordering: String,
}

impl TryFrom<BasisSpecRepr> for BasisSpec {
    type Error = String;

    fn try_from(repr: BasisSpecRepr) -> Result<Self, Self::Error> {
        if repr.ordering != ORDERING_NAME {
            return Err(format!("unsupported basis ordering '{}'", repr.ordering));
        }
        BasisSpec::new(repr.dim, repr.degree).map_err(|e| e.to_string())
    }
}

impl From<BasisSpec> for BasisSpecRepr {
    fn from(spec: BasisSpec) -> Self {
        Self {
            dim: spec.dim,
            degree: spec.degree,
            ordering: ORDERING_NAME.to_string(),
        }
    }
}

impl BasisSpec {
    pub fn new(dim: usize, degree: u32) -> Result<Self, BasisError> {
        let indices = enumerate_multi_indices(dim, degree)?;
        Ok(Self {
            dim,
            degree,
            indices,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    fn check_point(&self, x: &[f64]) -> Result<(), BasisError> {
        if x.len() != self.dim {
            return Err(BasisError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `phi(x)`: every monomial evaluated at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, BasisError> {
        self.check_point(x)?;
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        Ok(out)
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let stride = self.degree as usize + 1;
        let powers = power_table(x, self.degree);
        for (slot, alpha) in out.iter_mut().zip(&self.indices) {
            *slot = alpha
                .0
                .iter()
                .enumerate()
                .map(|(j, &e)| powers[j * stride + e as usize])
                .product();
        }
    }

    /// `d^order/dx_j^order phi(x)` with `order` in {1, 2}; `direction` is zero-based.
    pub fn eval_partial(
        &self,
        x: &[f64],
        direction: usize,
        order: u32,
    ) -> Result<Vec<f64>, BasisError> {
        if direction >= self.dim {
            return Err(BasisError::InvalidDirection {
                direction,
                dim: self.dim,
            });
        }
        if !(1..=2).contains(&order) {
            return Err(BasisError::InvalidOrder(order));
        }
        let mut orders = vec![0u32; self.dim];
        orders[direction] = order;
        self.eval_derivative(x, &orders)
    }

    /// Mixed partial derivative of every monomial; `orders[j]` is the order in `x_j`.
    pub fn eval_derivative(&self, x: &[f64], orders: &[u32]) -> Result<Vec<f64>, BasisError> {
        self.check_point(x)?;
        self.check_point_len(orders.len())?;
        let stride = self.degree as usize + 1;
        let powers = power_table(x, self.degree);
        Ok(self
            .indices
            .iter()
            .map(|alpha| {
                alpha
                    .0
                    .iter()
                    .zip(orders)
                    .enumerate()
                    .map(|(j, (&e, &o))| {
                        if o > e {
                            0.0
                        } else {
                            falling_factorial(e, o) * powers[j * stride + (e - o) as usize]
                        }
                    })
                    .product()
            })
            .collect())
    }

    fn check_point_len(&self, len: usize) -> Result<(), BasisError> {
        if len != self.dim {
            return Err(BasisError::DimensionMismatch {
                expected: self.dim,
                found: len,
            });
        }
        Ok(())
    }

    /// Design matrix with one row `phi(x_l)` per point.
    pub fn design_matrix(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>, BasisError> {
        if points.is_empty() {
            return Err(BasisError::NoPoints);
        }
        let mut phi = DMatrix::zeros(points.len(), self.len());
        let mut row = vec![0.0; self.len()];
        for (l, x) in points.iter().enumerate() {
            self.check_point(x)?;
            self.eval_into(x, &mut row);
            for (i, v) in row.iter().enumerate() {
                phi[(l, i)] = *v;
            }
        }
        Ok(phi)
    }
}

/// Sparse polynomial `sum_k c_k x^{alpha_k}` with value and gradient evaluation.
///
/// Used for lower-level objectives, where a fitted model is differentiated once
/// or twice and the result minimized over a box.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    max_power: u32,
    exponents: Vec<u32>,
    coefficients: Vec<f64>,
}

impl Polynomial {
    /// `w^T phi(x)` collapsed to its nonzero terms.
    pub fn from_basis(basis: &BasisSpec, weights: &[f64]) -> Self {
        assert_eq!(basis.len(), weights.len(), "weight vector length");
        let mut exponents = Vec::with_capacity(basis.len() * basis.dim());
        let mut coefficients = Vec::with_capacity(basis.len());
        for (alpha, &w) in basis.indices().iter().zip(weights) {
            if w != 0.0 {
                exponents.extend_from_slice(alpha.exponents());
                coefficients.push(w);
            }
        }
        Self {
            dim: basis.dim(),
            max_power: basis.degree(),
            exponents,
            coefficients,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_terms(&self) -> usize {
        self.coefficients.len()
    }

    fn term(&self, k: usize) -> &[u32] {
        &self.exponents[k * self.dim..(k + 1) * self.dim]
    }

    /// Exact `order`-th partial derivative in `direction`.
    pub fn derivative(&self, direction: usize, order: u32) -> Self {
        assert!(direction < self.dim, "direction out of range");
        let mut exponents = Vec::with_capacity(self.exponents.len());
        let mut coefficients = Vec::with_capacity(self.coefficients.len());
        for (k, &c) in self.coefficients.iter().enumerate() {
            let alpha = self.term(k);
            let e = alpha[direction];
            if e < order {
                continue;
            }
            let mut beta = alpha.to_vec();
            beta[direction] -= order;
            exponents.extend_from_slice(&beta);
            coefficients.push(c * falling_factorial(e, order));
        }
        Self {
            dim: self.dim,
            max_power: self.max_power.saturating_sub(order),
            exponents,
            coefficients,
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for c in &mut self.coefficients {
            *c *= factor;
        }
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let stride = self.max_power as usize + 1;
        let powers = power_table(x, self.max_power);
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let mut v = c;
                for (j, &e) in self.term(k).iter().enumerate() {
                    v *= powers[j * stride + e as usize];
                }
                v
            })
            .sum()
    }

    /// Value and gradient in one pass; `grad` must have length `dim`.
    pub fn eval_with_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(grad.len(), self.dim);
        let stride = self.max_power as usize + 1;
        let powers = power_table(x, self.max_power);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        for (k, &c) in self.coefficients.iter().enumerate() {
            let alpha = self.term(k);
            let mut v = c;
            for (j, &e) in alpha.iter().enumerate() {
                v *= powers[j * stride + e as usize];
            }
            value += v;
            for (i, g) in grad.iter_mut().enumerate() {
                let e = alpha[i];
                if e == 0 {
                    continue;
                }
                let mut d = c * f64::from(e);
                for (j, &ej) in alpha.iter().enumerate() {
                    let p = if j == i { ej - 1 } else { ej };
                    d *= powers[j * stride + p as usize];
                }
                *g += d;
            }
        }
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn graded_lex_order_small() {
        let list = enumerate_multi_indices(2, 1).unwrap();
        assert_eq!(list, vec![idx(&[0, 0]), idx(&[0, 1]), idx(&[1, 0])]);
        let list = enumerate_multi_indices(2, 2).unwrap();
        assert_eq!(
            list,
            vec![
                idx(&[0, 0]),
                idx(&[0, 1]),
                idx(&[1, 0]),
                idx(&[0, 2]),
                idx(&[1, 1]),
                idx(&[2, 0])
            ]
        );
    }

    #[test]
    fn term_counts() {
        assert_eq!(num_terms(1, 0).unwrap(), 1);
        assert_eq!(num_terms(2, 7).unwrap(), 36);
        assert_eq!(num_terms(4, 6).unwrap(), 210);
        assert_eq!(enumerate_multi_indices(2, 7).unwrap().len(), 36);
        assert_eq!(enumerate_multi_indices(4, 6).unwrap().len(), 210);
    }

    #[test]
    fn closed_forms_agree() {
        fn binom(n: u64, k: u64) -> u64 {
            (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
        }
        for d in 1..=5u64 {
            for m in 0..=8u64 {
                let summed: u64 = (0..=m).map(|k| binom(k + d - 1, d - 1)).sum();
                assert_eq!(num_terms(d as usize, m as u32).unwrap() as u64, summed);
            }
        }
    }

    #[test]
    fn zero_dimension_rejected() {
        assert_eq!(num_terms(0, 3), Err(BasisError::ZeroDimension));
        assert_eq!(enumerate_multi_indices(0, 1), Err(BasisError::ZeroDimension));
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(
            num_terms(usize::MAX / 2, 40),
            Err(BasisError::Overflow { .. })
        ));
    }

    #[test]
    fn enumeration_has_no_duplicates_and_respects_degree() {
        let list = enumerate_multi_indices(3, 5).unwrap();
        let mut sorted = list.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), list.len());
        assert!(list.iter().all(|a| a.degree() <= 5));
        assert!(list.windows(2).all(|w| w[0].degree() <= w[1].degree()));
        assert_eq!(list, enumerate_multi_indices(3, 5).unwrap());
    }

    #[test]
    fn basis_values() {
        let b = BasisSpec::new(1, 2).unwrap();
        assert_eq!(b.eval(&[2.0]).unwrap(), vec![1.0, 2.0, 4.0]);
        let b = BasisSpec::new(2, 1).unwrap();
        assert_eq!(b.eval(&[3.0, 5.0]).unwrap(), vec![1.0, 5.0, 3.0]);
        let b = BasisSpec::new(2, 2).unwrap();
        assert_eq!(b.eval(&[0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            b.eval(&[1.0]),
            Err(BasisError::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn basis_partials() {
        let b = BasisSpec::new(2, 2).unwrap();
        let pos = b.indices().iter().position(|a| a == &idx(&[1, 1])).unwrap();
        let d = b.eval_partial(&[7.0, 4.0], 0, 1).unwrap();
        assert_eq!(d[pos], 4.0);
        assert_eq!(d[0], 0.0);

        let b = BasisSpec::new(1, 3).unwrap();
        let d2 = b.eval_partial(&[2.0], 0, 2).unwrap();
        assert_eq!(d2, vec![0.0, 0.0, 2.0, 12.0]);

        assert!(matches!(
            b.eval_partial(&[2.0], 1, 1),
            Err(BasisError::InvalidDirection { .. })
        ));
        assert_eq!(b.eval_partial(&[2.0], 0, 3), Err(BasisError::InvalidOrder(3)));
        assert_eq!(b.eval_partial(&[2.0], 0, 0), Err(BasisError::InvalidOrder(0)));
    }

    #[test]
    fn design_matrices() {
        let b = BasisSpec::new(1, 1).unwrap();
        let phi = b.design_matrix(&[vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(phi, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]));
        let b = BasisSpec::new(1, 2).unwrap();
        let phi = b.design_matrix(&[vec![2.0]]).unwrap();
        assert_eq!(phi, DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 4.0]));
        let b = BasisSpec::new(2, 0).unwrap();
        let phi = b
            .design_matrix(&[vec![0.3, 1.0], vec![-2.0, 4.0], vec![9.0, 9.0]])
            .unwrap();
        assert_eq!(phi, DMatrix::from_element(3, 1, 1.0));
        assert_eq!(b.design_matrix(&[]), Err(BasisError::NoPoints));
        assert!(b.design_matrix(&[vec![1.0]]).is_err());
    }

    #[test]
    fn polynomial_matches_basis_route() {
        let b = BasisSpec::new(2, 3).unwrap();
        let w: Vec<f64> = (0..b.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let p = Polynomial::from_basis(&b, &w);
        let x = [0.3, 0.8];
        let via_basis: f64 = b.eval(&x).unwrap().iter().zip(&w).map(|(a, c)| a * c).sum();
        assert!((p.eval(&x) - via_basis).abs() < 1e-14);

        for (dir, order) in [(0, 1), (1, 1), (0, 2), (1, 2)] {
            let dp = p.derivative(dir, order);
            let col = b.eval_partial(&x, dir, order).unwrap();
            let via_basis: f64 = col.iter().zip(&w).map(|(a, c)| a * c).sum();
            assert!((dp.eval(&x) - via_basis).abs() < 1e-13);
        }

        let mut grad = [0.0; 2];
        let v = p.eval_with_gradient(&x, &mut grad);
        assert!((v - p.eval(&x)).abs() < 1e-14);
        assert!((grad[0] - p.derivative(0, 1).eval(&x)).abs() < 1e-13);
        assert!((grad[1] - p.derivative(1, 1).eval(&x)).abs() < 1e-13);
    }

    #[test]
    fn serde_roundtrip_keeps_ordering_name() {
        let b = BasisSpec::new(3, 4).unwrap();
        let text = serde_json::to_string(&b).unwrap();
        assert!(text.contains(ORDERING_NAME));
        let back: BasisSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, b);
        let bad = text.replace(ORDERING_NAME, "lex");
        assert!(serde_json::from_str::<BasisSpec>(&bad).is_err());
    }
}
