//! Sets of distributions cut out by linear equalities and inequalities on
//! expectations, `E_Q[f_i] (=|>=|<=) α_i`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::measures::Dist;
use crate::typespace::{counts_as_dist, TypeVector};

/// Default closed-set slack for membership tests.
pub const DEFAULT_BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Eq,
    Ge,
    Le,
}

impl Relation {
    pub fn is_inequality(self) -> bool {
        self != Relation::Eq
    }
}

/// `⟨f, Q⟩ relation alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConstraint {
    pub f: Vec<f64>,
    pub relation: Relation,
    pub alpha: f64,
}

impl LinearConstraint {
    pub fn new(f: Vec<f64>, relation: Relation, alpha: f64) -> Result<Self> {
        let c = Self { f, relation, alpha };
        c.validate()?;
        Ok(c)
    }

    pub fn eq(f: Vec<f64>, alpha: f64) -> Result<Self> {
        Self::new(f, Relation::Eq, alpha)
    }

    pub fn ge(f: Vec<f64>, alpha: f64) -> Result<Self> {
        Self::new(f, Relation::Ge, alpha)
    }

    pub fn le(f: Vec<f64>, alpha: f64) -> Result<Self> {
        Self::new(f, Relation::Le, alpha)
    }

    /// Constraint on the probability of a single symbol: `Q(symbol) rel alpha`.
    pub fn symbol(k: usize, symbol: usize, relation: Relation, alpha: f64) -> Result<Self> {
        if symbol >= k {
            return Err(Error::InvalidConstraint(format!(
                "symbol {symbol} outside alphabet of size {k}"
            )));
        }
        let mut f = vec![0.0; k];
        f[symbol] = 1.0;
        Self::new(f, relation, alpha)
    }

    fn validate(&self) -> Result<()> {
        if let Some(v) = self.f.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidConstraint(format!(
                "f has non-finite value {v}"
            )));
        }
        if !self.alpha.is_finite() {
            return Err(Error::InvalidConstraint(format!(
                "alpha must be finite, got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.f.len()
    }

    /// `⟨f, q⟩`.
    pub fn evaluate(&self, q: &[f64]) -> f64 {
        self.f.iter().zip(q).map(|(a, b)| a * b).sum()
    }

    /// Signed violation: positive means the constraint is violated by that much.
    pub fn violation(&self, q: &[f64]) -> f64 {
        let v = self.evaluate(q);
        match self.relation {
            Relation::Eq => (v - self.alpha).abs(),
            Relation::Ge => self.alpha - v,
            Relation::Le => v - self.alpha,
        }
    }

    pub fn holds(&self, q: &[f64], tolerance: f64) -> bool {
        self.violation(q) <= tolerance
    }

    /// `(min f, max f)` over the given symbols.
    pub fn range_over(&self, symbols: &[usize]) -> (f64, f64) {
        symbols
            .iter()
            .map(|&x| self.f[x])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// A nonempty intersection of linear constraints on a common alphabet.
/// Always convex and closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintSet {
    constraints: Vec<LinearConstraint>,
    boundary_tolerance: f64,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<LinearConstraint>) -> Result<Self> {
        Self::with_tolerance(constraints, DEFAULT_BOUNDARY_TOLERANCE)
    }

    pub fn with_tolerance(
        constraints: Vec<LinearConstraint>,
        boundary_tolerance: f64,
    ) -> Result<Self> {
        let first = constraints
            .first()
            .ok_or_else(|| Error::InvalidConstraint("constraint set must be nonempty".into()))?;
        let k = first.k();
        if k < 2 {
            return Err(Error::InvalidConstraint(format!(
                "alphabet size must be at least 2, got {k}"
            )));
        }
        for (i, c) in constraints.iter().enumerate() {
            c.validate()
                .map_err(|e| Error::InvalidConstraint(format!("constraint {i}: {e}")))?;
            if c.k() != k {
                return Err(Error::InvalidConstraint(format!(
                    "constraint {i} has length {}, expected {k}",
                    c.k()
                )));
            }
        }
        if !(boundary_tolerance.is_finite() && boundary_tolerance >= 0.0) {
            return Err(Error::InvalidConstraint(format!(
                "boundary tolerance must be finite and nonnegative, got {boundary_tolerance}"
            )));
        }
        Ok(Self {
            constraints,
            boundary_tolerance,
        })
    }

    /// The whole simplex, written as the vacuous constraint `⟨0, Q⟩ >= 0`.
    pub fn full_simplex(k: usize) -> Result<Self> {
        Self::new(vec![LinearConstraint::ge(vec![0.0; k], 0.0)?])
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn boundary_tolerance(&self) -> f64 {
        self.boundary_tolerance
    }

    pub fn k(&self) -> usize {
        self.constraints[0].k()
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// True when every relation is an equality.
    pub fn is_linear_family(&self) -> bool {
        self.constraints.iter().all(|c| c.relation == Relation::Eq)
    }

    /// Membership of a raw probability vector, no dimension check.
    pub(crate) fn contains_slice(&self, q: &[f64]) -> bool {
        self.constraints
            .iter()
            .all(|c| c.holds(q, self.boundary_tolerance))
    }

    pub fn contains(&self, q: &Dist) -> Result<bool> {
        check_dim(self.k(), q.len())?;
        Ok(self.contains_slice(q.probs()))
    }

    pub fn contains_type(&self, t: &TypeVector) -> Result<bool> {
        check_dim(self.k(), t.k())?;
        Ok(self.contains_counts(t.counts(), t.n()))
    }

    /// Membership of the empirical measure `counts / n`.
    pub fn contains_counts(&self, counts: &[u64], n: u64) -> bool {
        self.contains_slice(counts_as_dist(counts, n).probs())
    }
}

/// `false` if some sample lies in `b` but not in `a`, refuting `b ⊆ a`.
/// `true` only means no sample refuted it.
pub fn is_subset_witness(b: &ConstraintSet, a: &ConstraintSet, samples: &[Dist]) -> Result<bool> {
    check_dim(a.k(), b.k())?;
    for q in samples {
        if b.contains(q)? && !a.contains(q)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The lattice `{c / m : c a composition of m}` with the largest resolution
/// `m <= 100` that keeps at most `max_points` points.
pub fn simplex_grid(k: usize, max_points: u64) -> Result<Vec<Dist>> {
    let resolution = (1..=100u64)
        .rev()
        .find(|&m| crate::typespace::type_count(k, m).is_some_and(|c| c <= max_points as u128))
        .ok_or_else(|| {
            Error::InvalidArgument(format!("no grid over {k} symbols fits {max_points} points"))
        })?;
    Ok(
        crate::typespace::enumerate_types(k, resolution, max_points)?
            .map(|t| t.as_dist())
            .collect(),
    )
}
