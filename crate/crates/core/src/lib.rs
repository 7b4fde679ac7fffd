//! Exact finite-alphabet large-deviation computations for empirical types.
//!
//! For an i.i.d. source `P` on `{0, ..., k-1}`, a sample size `n` and a set
//! `A` of distributions cut out by linear constraints, the crate computes
//! `P(P̂_n ∈ A)` by enumerating types, the conditional law `μ_A` of the sample
//! given the event, its marginal `ω_A`, and the information projection `P*`
//! of `P` onto `A`. These feed the exact decomposition
//! `-ln P(A) = n D(ω_A‖P) + D(μ_A‖ω_A^n)` and the bounds derived from it.

pub mod bounds;
pub mod conditional;
pub mod constraints;
pub mod error;
pub mod iprojection;
pub mod measures;
pub mod montecarlo;
pub mod numeric;
pub mod polytope;
pub mod typespace;
pub mod verify;

pub use bounds::{full_report, subset_report, sweep, BoundsReport, SubsetBound, SweepEntry};
pub use conditional::{summarize, ConditionalModel, ConditionalSummary};
pub use constraints::{ConstraintSet, LinearConstraint, Relation};
pub use error::{Error, Result};
pub use iprojection::{project, IProjection};
pub use measures::{cross_entropy, entropy, relative_entropy, Dist, InfoValue};
pub use montecarlo::{estimate, estimate_partitioned, McEstimate};
pub use typespace::{TypeVector, DEFAULT_TYPE_BUDGET};
pub use verify::{verify, VerifyOptions, VerifyReport};
