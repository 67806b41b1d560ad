//! Exact solvers for optimal randomized group-fair classification and fair
//! representations with zero cost of fairness.
//!
//! Given a finite joint distribution over features, protected groups, and
//! binary labels, this crate computes the most accurate randomized classifier
//! satisfying demographic parity, predictive equality, or equal opportunity,
//! exactly, in arbitrary-precision rational arithmetic. It also constructs
//! randomized representations over which every downstream classifier is fair
//! and the best one loses no accuracy against the fair optimum.
//!
//! The optimum for each notion is a mass-threshold classifier found by
//! minimizing a convex piecewise-linear loss curve over a finite boundary
//! set ([`solvers`]). Independent brute-force searches ([`oracle`]) and an
//! exhaustive representation audit ([`representation`]) verify the results
//! on any instance small enough to enumerate.

pub mod cells;
pub mod classifier;
pub mod distribution;
pub mod error;
pub mod oracle;
pub mod rat;
pub mod representation;
pub mod solvers;

pub use cells::{BoundaryKind, BoundarySet, GroupCell, MassPrefix, SortedGroupCells};
pub use classifier::{FairnessReport, Notion, RandomizedClassifier};
pub use distribution::{FeatureId, GroupId, InputRecord, JointDistribution};
pub use error::{Error, ErrorKind, Result};
pub use oracle::{OracleResult, DEFAULT_ORACLE_CAP};
pub use rat::Rat;
pub use representation::{Representation, RepresentationAudit, DEFAULT_AUDIT_CAP};
pub use solvers::{PiecewiseLinearCurve, Solution};
