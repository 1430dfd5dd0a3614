//! Shape-constrained polynomial regression.
//!
//! A polynomial least-squares fit is constrained to have sign-definite first or
//! second partial derivatives over the whole input box. The infinitely many
//! pointwise constraints are handled by adaptive discretization: solve a finite
//! QP, search the box for the worst violation of each constraint with a global
//! optimizer, add those points, and repeat ([`sip::fit`]).
//!
//! Alongside sit the post-training monotonizers ([`shapeops`]) and unconstrained
//! reference models ([`refmodels`]).

pub mod basis;
pub mod constraints;
pub mod dataset;
pub mod exec;
pub mod globalopt;
pub mod model;
pub mod qp;
pub mod refmodels;
pub mod scaling;
pub mod shapeops;
pub mod sip;

pub use basis::{num_terms, BasisSpec, MultiIndex, Polynomial};
pub use constraints::{ShapeConstraint, ShapeConstraintSpec, Sign};
pub use dataset::Dataset;
pub use exec::Execution;
pub use model::PolynomialModel;
pub use sip::{fit, FitOptions, FitOutcome, FitReport, FitStatus};
