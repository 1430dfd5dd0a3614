//! Sign requirements on first and second partial derivatives.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstraintError {
    #[error("derivative order {0} not supported (expected 1 or 2)")]
    InvalidOrder(u32),
    #[error("duplicate constraint on direction {direction} with order {order}")]
    Duplicate { direction: usize, order: u32 },
    #[error("constraint direction {direction} out of range for {dim}-dimensional inputs")]
    DirectionOutOfRange { direction: usize, dim: usize },
    #[error("signature entries must be -1, 0 or 1, got {0}")]
    InvalidSign(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

/// `sign * d^order y / dx_direction^order >= 0` on the whole input box.
///
/// `direction` is zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShapeConstraint {
    pub direction: usize,
    pub order: u32,
    pub sign: Sign,
}

impl ShapeConstraint {
    pub fn increasing(direction: usize) -> Self {
        Self {
            direction,
            order: 1,
            sign: Sign::Positive,
        }
    }

    pub fn decreasing(direction: usize) -> Self {
        Self {
            direction,
            order: 1,
            sign: Sign::Negative,
        }
    }

    pub fn concave(direction: usize) -> Self {
        Self {
            direction,
            order: 2,
            sign: Sign::Negative,
        }
    }

    pub fn convex(direction: usize) -> Self {
        Self {
            direction,
            order: 2,
            sign: Sign::Positive,
        }
    }
}

impl fmt::Display for ShapeConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match (self.order, self.sign) {
            (1, Sign::Positive) => "increasing",
            (1, Sign::Negative) => "decreasing",
            (_, Sign::Positive) => "convex",
            (_, Sign::Negative) => "concave",
        };
        write!(f, "{what} in x{}", self.direction + 1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ShapeConstraint>", into = "Vec<ShapeConstraint>")]
pub struct ShapeConstraintSpec {
    entries: Vec<ShapeConstraint>,
}

impl TryFrom<Vec<ShapeConstraint>> for ShapeConstraintSpec {
    type Error = ConstraintError;

    fn try_from(entries: Vec<ShapeConstraint>) -> Result<Self, Self::Error> {
        Self::new(entries)
    }
}

impl From<ShapeConstraintSpec> for Vec<ShapeConstraint> {
    fn from(spec: ShapeConstraintSpec) -> Self {
        spec.entries
    }
}

impl ShapeConstraintSpec {
    pub fn new(entries: Vec<ShapeConstraint>) -> Result<Self, ConstraintError> {
        for (i, e) in entries.iter().enumerate() {
            if !(1..=2).contains(&e.order) {
                return Err(ConstraintError::InvalidOrder(e.order));
            }
            if entries[..i]
                .iter()
                .any(|o| o.direction == e.direction && o.order == e.order)
            {
                return Err(ConstraintError::Duplicate {
                    direction: e.direction,
                    order: e.order,
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn unconstrained() -> Self {
        Self::default()
    }

    /// First-order constraints from a monotonicity signature in `{-1, 0, 1}^d`.
    pub fn from_signature(signature: &[i64]) -> Result<Self, ConstraintError> {
        let mut entries = Vec::new();
        for (j, &s) in signature.iter().enumerate() {
            match s {
                1 => entries.push(ShapeConstraint::increasing(j)),
                -1 => entries.push(ShapeConstraint::decreasing(j)),
                0 => {}
                other => return Err(ConstraintError::InvalidSign(other)),
            }
        }
        Self::new(entries)
    }

    pub fn with(mut self, entry: ShapeConstraint) -> Result<Self, ConstraintError> {
        self.entries.push(entry);
        Self::new(self.entries)
    }

    pub fn entries(&self) -> &[ShapeConstraint] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate_dim(&self, dim: usize) -> Result<(), ConstraintError> {
        match self.entries.iter().find(|e| e.direction >= dim) {
            Some(e) => Err(ConstraintError::DirectionOutOfRange {
                direction: e.direction,
                dim,
            }),
            None => Ok(()),
        }
    }

    pub fn has_second_order(&self) -> bool {
        self.entries.iter().any(|e| e.order == 2)
    }
}
