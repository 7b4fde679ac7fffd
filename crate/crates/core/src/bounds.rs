//! Finite-sample bounds on `(1/n) ln P(P̂_n ∈ A)` assembled into one report:
//!
//! ```text
//! -max_{Q∈A} H(Q,P) <= -H(ω,P) <= (1/n) ln P(A) = -D(ω‖P) - TC/n <= -D(ω‖P) <= -D(P*‖P)
//! ```

use serde::{Deserialize, Serialize};

use crate::conditional::{ConditionalModel, ConditionalSummary};
use crate::constraints::{is_subset_witness, simplex_grid, ConstraintSet};
use crate::error::{check_dim, Error, Result};
use crate::iprojection::{project, IProjection};
use crate::measures::{cross_entropy, entropy, relative_entropy, Dist, InfoValue};
use crate::polytope::feasible_vertices;

/// Grid size used to spot-check `B ⊆ A`.
pub const SUBSET_WITNESS_POINTS: u64 = 10_000;

/// Serializes `f64` as a JSON number when finite, else as `"inf"` / `"-inf"`.
pub mod extended_f64 {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = f64;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number, \"inf\" or \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "nan" => Ok(f64::NAN),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Upper bound on the rate of a subset `B ⊆ A` through the projection onto `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetBound {
    /// `(1/n) ln P(P̂_n ∈ B)`.
    pub lhs: f64,
    /// `-D(P*_A‖P) - (1/n) D(μ_B‖P*_A^n)`.
    pub rhs: f64,
    /// `lhs - rhs`; nonpositive up to round-off, zero for `B = A` a linear family.
    pub residual: f64,
    /// `D(μ_B‖P*_A^n)` via `D(μ_B‖ω_B^n) + n D(ω_B‖P*_A)`.
    pub divergence_mu_b: f64,
    /// `D(μ_B‖P*_A^n)` summed directly over the member types of `B`.
    pub divergence_mu_b_direct: f64,
    pub log_prob_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsReport {
    pub n: u64,
    pub log_prob_event: f64,
    pub log10_prob_event: f64,
    /// `(1/n) ln P(P̂_n ∈ A)`.
    pub exact_rate: f64,
    /// `-D(ω_A‖P)`.
    pub ub_marginal: f64,
    /// `-D(P*_A‖P)`.
    pub ub_iproj: f64,
    /// `-H(ω_A, P)`.
    pub lb_cross: f64,
    /// `-max_{Q∈A} H(Q, P)`; `-inf` when some member of `A` charges a null symbol of `P`.
    #[serde(with = "extended_f64")]
    pub lb_maxcross: f64,
    /// `(1/n) D(μ_A‖ω_A^n)`.
    pub tc_slack: f64,
    /// `H(ω_A) / H(ω_A, P)`; absent when the cross entropy is zero.
    pub ratio_diag: Option<f64>,
    /// `exact_rate + D(P*_A‖P)`.
    pub asymptote_gap: f64,
    pub omega: Dist,
    pub q_star: Dist,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub subset: Option<SubsetBound>,
}

impl BoundsReport {
    /// Largest violation of the ordering chain (`<= 0` when it holds).
    pub fn ordering_violation(&self) -> f64 {
        let chain = [
            self.lb_maxcross,
            self.lb_cross,
            self.exact_rate,
            self.ub_marginal,
            self.ub_iproj,
        ];
        chain
            .windows(2)
            .map(|w| {
                if w[0] == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    w[0] - w[1]
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `exact_rate - (ub_marginal - tc_slack)`.
    pub fn exactness_residual(&self) -> f64 {
        self.exact_rate - (self.ub_marginal - self.tc_slack)
    }

    /// `|upper / lower - 1|` from the marginal upper and cross-entropy lower bounds.
    pub fn relative_gap(&self) -> Option<f64> {
        (self.lb_cross != 0.0).then(|| (self.ub_marginal / self.lb_cross - 1.0).abs())
    }
}

/// `max_{Q ∈ A} H(Q, P)`, attained at a vertex of `A`.
pub fn max_cross_entropy(p: &Dist, a: &ConstraintSet) -> Result<InfoValue> {
    check_dim(a.k(), p.len())?;
    let vertices = feasible_vertices(a)?;
    let mut best = f64::NEG_INFINITY;
    for v in &vertices {
        let mut h = 0.0;
        for (&q, &px) in v.iter().zip(p.probs()) {
            if q > 0.0 {
                if px == 0.0 {
                    return Ok(InfoValue::Infinite);
                }
                h -= q * px.ln();
            }
        }
        best = best.max(h);
    }
    Ok(InfoValue::Finite(best))
}

/// Quantities that do not depend on `n`.
#[derive(Debug, Clone)]
pub struct AsymptoticTerms {
    pub projection: IProjection,
    pub max_cross_entropy: InfoValue,
}

impl AsymptoticTerms {
    pub fn new(p: &Dist, a: &ConstraintSet) -> Result<Self> {
        Ok(Self {
            projection: project(p, a)?,
            max_cross_entropy: max_cross_entropy(p, a)?,
        })
    }
}

pub(crate) fn assemble(p: &Dist, s: &ConditionalSummary, terms: &AsymptoticTerms) -> BoundsReport {
    let nf = s.n as f64;
    let exact_rate = s.log_prob_event / nf;
    let kl_star = terms.projection.divergence.value();
    let h_omega = entropy(&s.omega).value();
    let cross = cross_entropy(&s.omega, p)
        .expect("dimensions agree")
        .value();
    BoundsReport {
        n: s.n,
        log_prob_event: s.log_prob_event,
        log10_prob_event: s.log_prob_event / std::f64::consts::LN_10,
        exact_rate,
        ub_marginal: -s.kl_omega_p.value(),
        ub_iproj: -kl_star,
        lb_cross: -cross,
        lb_maxcross: -terms.max_cross_entropy.value(),
        tc_slack: s.total_correlation.value() / nf,
        ratio_diag: (cross > 0.0).then(|| h_omega / cross),
        asymptote_gap: exact_rate + kl_star,
        omega: s.omega.clone(),
        q_star: terms.projection.q_star.clone(),
        subset: None,
    }
}

/// Report for one `n`, reusing precomputed `n`-independent terms.
pub fn report_with(
    p: &Dist,
    n: u64,
    a: &ConstraintSet,
    terms: &AsymptoticTerms,
    budget: u64,
) -> Result<BoundsReport> {
    let model = ConditionalModel::new(p, n, a, budget)?;
    Ok(assemble(p, &model.summary(), terms))
}

pub fn full_report(p: &Dist, n: u64, a: &ConstraintSet, budget: u64) -> Result<BoundsReport> {
    check_dim(a.k(), p.len())?;
    let model = ConditionalModel::new(p, n, a, budget)?;
    let terms = AsymptoticTerms::new(p, a)?;
    Ok(assemble(p, &model.summary(), &terms))
}

/// Subset bound for `B ⊆ A` given the projection onto `A`.
pub fn subset_bound_with(
    p: &Dist,
    n: u64,
    a: &ConstraintSet,
    b: &ConstraintSet,
    projection: &IProjection,
    budget: u64,
) -> Result<SubsetBound> {
    check_dim(a.k(), b.k())?;
    let grid = simplex_grid(a.k(), SUBSET_WITNESS_POINTS)?;
    if !is_subset_witness(b, a, &grid)? {
        return Err(Error::Precondition(
            "subset constraints admit a distribution outside the main constraint set".into(),
        ));
    }
    let model = ConditionalModel::new(p, n, b, budget)?;
    let s = model.summary();
    let nf = n as f64;
    let q_star = &projection.q_star;
    let d_omega_star = relative_entropy(&s.omega, q_star)?;
    let divergence_mu_b = s.total_correlation.value() + nf * d_omega_star.value();
    let divergence_mu_b_direct = model.divergence_from_product(q_star)?.value();
    let lhs = s.log_prob_event / nf;
    let rhs = -projection.divergence.value() - divergence_mu_b / nf;
    Ok(SubsetBound {
        lhs,
        rhs,
        residual: lhs - rhs,
        divergence_mu_b,
        divergence_mu_b_direct,
        log_prob_b: s.log_prob_event,
    })
}

pub fn subset_report(
    p: &Dist,
    n: u64,
    a: &ConstraintSet,
    b: &ConstraintSet,
    budget: u64,
) -> Result<SubsetBound> {
    check_dim(a.k(), p.len())?;
    let projection = project(p, a)?;
    subset_bound_with(p, n, a, b, &projection, budget)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SweepEntry {
    Ok(Box<BoundsReport>),
    Skipped { n: u64, reason: String },
}

impl SweepEntry {
    pub fn n(&self) -> u64 {
        match self {
            SweepEntry::Ok(r) => r.n,
            SweepEntry::Skipped { n, .. } => *n,
        }
    }

    pub fn report(&self) -> Option<&BoundsReport> {
        match self {
            SweepEntry::Ok(r) => Some(r),
            SweepEntry::Skipped { .. } => None,
        }
    }
}

/// One report per `n`; empty events are skipped rather than fatal.
pub fn sweep(
    p: &Dist,
    a: &ConstraintSet,
    n_values: &[u64],
    budget: u64,
) -> Result<Vec<SweepEntry>> {
    check_dim(a.k(), p.len())?;
    let terms = AsymptoticTerms::new(p, a)?;
    n_values
        .iter()
        .map(|&n| match report_with(p, n, a, &terms, budget) {
            Ok(r) => Ok(SweepEntry::Ok(Box::new(r))),
            Err(e @ Error::EmptyEvent { .. }) => Ok(SweepEntry::Skipped {
                n,
                reason: e.to_string(),
            }),
            Err(e) => Err(e),
        })
        .collect()
}
