//! Problem specification files.

use std::path::Path;

use sanov_core::constraints::DEFAULT_BOUNDARY_TOLERANCE;
use sanov_core::{ConstraintSet, Dist, LinearConstraint};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// On-disk JSON problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    /// Source distribution.
    pub p: Vec<f64>,
    /// Rescale `p` to sum to one instead of rejecting it.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub normalize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<u64>>,
    pub constraints: Vec<LinearConstraint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset_constraints: Option<Vec<LinearConstraint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_tolerance: Option<f64>,
    /// Reference distribution for the core identity in `verify`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    /// Points at which `iproject` evaluates the Pythagorean residual.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partitions: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

/// A spec whose distributions and constraint sets passed validation.
#[derive(Debug, Clone)]
pub struct Problem {
    pub spec: ProblemSpec,
    pub p: Dist,
    pub a: ConstraintSet,
    pub b: Option<ConstraintSet>,
    pub q: Option<Dist>,
    pub test_points: Vec<Vec<f64>>,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self, Failure> {
        serde_json::from_str(text).map_err(|e| {
            Failure::validation(
                None,
                format!("line {} column {}: {e}", e.line(), e.column()),
            )
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::validation(Some("--spec".into()), format!("{}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    pub fn validate(self) -> Result<Problem, Failure> {
        let p = if self.normalize {
            Dist::normalized(self.p.clone())
        } else {
            Dist::new(self.p.clone())
        }
        .map_err(|e| Failure::validation(Some("p".into()), e.to_string()))?;
        let k = p.len();
        let tolerance = self
            .boundary_tolerance
            .unwrap_or(DEFAULT_BOUNDARY_TOLERANCE);
        if !(tolerance.is_finite() && tolerance >= 0.0) {
            return Err(Failure::validation(
                Some("boundary_tolerance".into()),
                format!("must be finite and nonnegative, got {tolerance}"),
            ));
        }
        let a = constraint_set("constraints", &self.constraints, k, tolerance)?;
        let b = self
            .subset_constraints
            .as_deref()
            .map(|cs| constraint_set("subset_constraints", cs, k, tolerance))
            .transpose()?;
        let q = self
            .q
            .clone()
            .map(|q| {
                check_len("q", q.len(), k)?;
                Dist::new(q).map_err(|e| Failure::validation(Some("q".into()), e.to_string()))
            })
            .transpose()?;
        let test_points = self.test_points.clone().unwrap_or_default();
        for (i, t) in test_points.iter().enumerate() {
            let field = format!("test_points[{i}]");
            check_len(&field, t.len(), k)?;
            Dist::new(t.clone()).map_err(|e| Failure::validation(Some(field), e.to_string()))?;
        }
        if self.n == Some(0) {
            return Err(Failure::validation(
                Some("n".into()),
                "must be positive".into(),
            ));
        }
        if let Some(i) = self.n_values.iter().flatten().position(|&n| n == 0) {
            return Err(Failure::validation(
                Some(format!("n_values[{i}]")),
                "must be positive".into(),
            ));
        }
        if self.trials == Some(0) {
            return Err(Failure::validation(
                Some("trials".into()),
                "must be positive".into(),
            ));
        }
        if self.partitions == Some(0) {
            return Err(Failure::validation(
                Some("partitions".into()),
                "must be positive".into(),
            ));
        }
        Ok(Problem {
            p,
            a,
            b,
            q,
            test_points,
            spec: self,
        })
    }
}

impl Problem {
    pub fn n(&self) -> Result<u64, Failure> {
        self.spec
            .n
            .ok_or_else(|| Failure::validation(Some("n".into()), "required by this command".into()))
    }

    /// `n_values` if present, otherwise the single `n`.
    pub fn n_values(&self) -> Result<Vec<u64>, Failure> {
        match (&self.spec.n_values, self.spec.n) {
            (Some(v), _) if !v.is_empty() => Ok(v.clone()),
            (_, Some(n)) => Ok(vec![n]),
            _ => Err(Failure::validation(
                Some("n_values".into()),
                "required by this command (or give n)".into(),
            )),
        }
    }
}

fn check_len(field: &str, found: usize, k: usize) -> Result<(), Failure> {
    if found == k {
        Ok(())
    } else {
        Err(Failure::validation(
            Some(field.to_string()),
            format!("length {found} does not match the alphabet size {k} of p"),
        ))
    }
}

fn constraint_set(
    field: &str,
    rows: &[LinearConstraint],
    k: usize,
    tolerance: f64,
) -> Result<ConstraintSet, Failure> {
    if rows.is_empty() {
        return Err(Failure::validation(
            Some(field.to_string()),
            "at least one constraint is required".into(),
        ));
    }
    for (i, c) in rows.iter().enumerate() {
        check_len(&format!("{field}[{i}].f"), c.f.len(), k)?;
        LinearConstraint::new(c.f.clone(), c.relation, c.alpha)
            .map_err(|e| Failure::validation(Some(format!("{field}[{i}]")), e.to_string()))?;
    }
    ConstraintSet::with_tolerance(rows.to_vec(), tolerance)
        .map_err(|e| Failure::validation(Some(field.to_string()), e.to_string()))
}
