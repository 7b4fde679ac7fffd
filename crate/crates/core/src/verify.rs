//! Runs every identity and bound on one problem instance and reports each
//! residual against its tolerance.

use serde::{Deserialize, Serialize};

use crate::bounds::{assemble, extended_f64, subset_bound_with, AsymptoticTerms};
use crate::conditional::{core_identity_check, ConditionalModel, CoreIdentityCheck};
use crate::constraints::ConstraintSet;
use crate::error::{check_dim, Result};
use crate::iprojection::PythagoreanResidual;
use crate::measures::{relative_entropy, Dist};
use crate::typespace::SequenceOracle;

/// Relative tolerance for the exact identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;
/// Largest `k^n` for which the sequence-level oracle is consulted.
pub const ORACLE_CAP: u64 = 100_000;

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Reference distribution for the core identity; uniform when absent.
    pub reference: Option<Dist>,
    /// Subset `B ⊆ A` for the subset bound; `A` itself when absent.
    pub subset: Option<ConstraintSet>,
    /// Test hook: moves this much mass of `ω` from symbol 1 to symbol 0
    /// before the checks run. Zero in normal use.
    pub omega_perturbation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub skipped: bool,
    #[serde(with = "extended_f64")]
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, residual: f64, tolerance: f64, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            skipped: false,
            residual,
            tolerance,
            detail,
        }
    }

    fn within(name: &str, residual: f64, tolerance: f64, detail: String) -> Self {
        Self::new(
            name,
            residual,
            tolerance,
            residual.abs() <= tolerance,
            detail,
        )
    }

    fn skipped(name: &str, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            skipped: true,
            residual: 0.0,
            tolerance: 0.0,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyReport {
    pub n: u64,
    pub all_passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn verify(
    p: &Dist,
    n: u64,
    a: &ConstraintSet,
    budget: u64,
    options: &VerifyOptions,
) -> Result<VerifyReport> {
    check_dim(a.k(), p.len())?;
    let model = ConditionalModel::new(p, n, a, budget)?;
    let mut summary = model.summary();
    if options.omega_perturbation != 0.0 {
        let mut w = summary.omega.probs().to_vec();
        w[0] += options.omega_perturbation;
        w[1] -= options.omega_perturbation;
        summary.omega = Dist::normalized(w.into_iter().map(|v| v.max(0.0)).collect())?;
        summary.kl_omega_p = relative_entropy(&summary.omega, p)?;
    }
    let terms = AsymptoticTerms::new(p, a)?;
    let projection = &terms.projection;
    let report = assemble(p, &summary, &terms);
    let mut checks = Vec::new();

    let scale = summary.identity_scale();
    checks.push(Check::within(
        "exact_identity",
        summary.identity_residual(),
        IDENTITY_TOLERANCE * scale,
        "-ln P(A) = n D(ω‖P) + D(μ‖ω^n)".into(),
    ));

    let tc = summary.total_correlation.value();
    let tc_direct = model.divergence_from_product(&summary.omega)?.value();
    checks.push(Check::within(
        "total_correlation_decomposition",
        tc - tc_direct,
        IDENTITY_TOLERANCE * tc.abs().max(1.0),
        "n H(ω) - H(μ) = D(μ‖ω^n)".into(),
    ));

    let reference = match &options.reference {
        Some(q) => {
            check_dim(p.len(), q.len())?;
            q.clone()
        }
        None => Dist::uniform(p.len())?,
    };
    checks.push(match core_identity_check(&model, &summary, &reference)? {
        CoreIdentityCheck::Finite {
            residual,
            relative_residual,
            ..
        } => Check::new(
            "core_identity",
            residual,
            IDENTITY_TOLERANCE,
            relative_residual <= IDENTITY_TOLERANCE,
            "D(μ‖Q^n) - D(μ‖ω^n) = n D(ω‖Q)".into(),
        ),
        CoreIdentityCheck::MatchedInfinity => Check::new(
            "core_identity",
            0.0,
            IDENTITY_TOLERANCE,
            true,
            "both sides infinite".into(),
        ),
    });

    let omega_violation = a
        .constraints()
        .iter()
        .map(|c| c.violation(summary.omega.probs()).max(0.0))
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "omega_in_set",
        omega_violation,
        a.boundary_tolerance(),
        a.contains(&summary.omega)?,
        "ω_A ∈ A".into(),
    ));

    let linear = a.is_linear_family();
    checks.push(if a.contains(&summary.omega)? {
        match projection.pythagorean_residual(p, a, &summary.omega)? {
            PythagoreanResidual::Finite(r) => {
                let passed = if linear {
                    r.abs() <= IDENTITY_TOLERANCE
                } else {
                    r >= -IDENTITY_TOLERANCE
                };
                Check::new(
                    "pythagorean_at_omega",
                    r,
                    IDENTITY_TOLERANCE,
                    passed,
                    if linear {
                        "equality (linear family)"
                    } else {
                        "inequality"
                    }
                    .into(),
                )
            }
            PythagoreanResidual::MatchedInfinity => Check::new(
                "pythagorean_at_omega",
                0.0,
                IDENTITY_TOLERANCE,
                true,
                "all divergences infinite".into(),
            ),
        }
    } else {
        Check::skipped("pythagorean_at_omega", "ω is not in A".into())
    });

    let (subset, same) = match &options.subset {
        Some(b) => (b, b == a),
        None => (a, true),
    };
    checks.push(
        match subset_bound_with(p, n, a, subset, projection, budget) {
            Ok(s) => {
                let equality = same && linear;
                let passed = if equality {
                    s.residual.abs() <= IDENTITY_TOLERANCE
                } else {
                    s.residual <= IDENTITY_TOLERANCE
                };
                Check::new(
                    "subset_bound",
                    s.residual,
                    IDENTITY_TOLERANCE,
                    passed,
                    if equality {
                        "equality (B = A, linear family)"
                    } else {
                        "upper bound"
                    }
                    .into(),
                )
            }
            Err(e) => Check::new(
                "subset_bound",
                f64::NAN,
                IDENTITY_TOLERANCE,
                false,
                e.to_string(),
            ),
        },
    );

    checks.push(Check::within(
        "rate_exactness",
        report.exactness_residual(),
        IDENTITY_TOLERANCE * report.exact_rate.abs().max(1.0),
        "(1/n) ln P(A) = -D(ω‖P) - TC/n".into(),
    ));

    let violation = report.ordering_violation();
    checks.push(Check::new(
        "bound_ordering",
        violation.max(0.0),
        IDENTITY_TOLERANCE,
        violation <= IDENTITY_TOLERANCE,
        "-max H(Q,P) <= -H(ω,P) <= rate <= -D(ω‖P) <= -D(P*‖P)".into(),
    ));

    let k = p.len() as u64;
    let small = u32::try_from(n)
        .ok()
        .and_then(|e| k.checked_pow(e))
        .is_some_and(|s| s <= ORACLE_CAP);
    checks.push(if small {
        let oracle =
            SequenceOracle::new(p, n, ORACLE_CAP, |t| a.contains_type(t).unwrap_or(false))?;
        let ow = oracle.omega();
        let diffs = [
            (oracle.prob_event() - summary.log_prob_event.exp()).abs(),
            ow.iter()
                .zip(summary.omega.probs())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
            (oracle.entropy_mu() - summary.entropy_mu.value()).abs(),
            (oracle.total_correlation() - tc).abs(),
        ];
        let worst = diffs.iter().copied().fold(0.0, f64::max);
        Check::within(
            "oracle_agreement",
            worst,
            IDENTITY_TOLERANCE,
            "type-level P(A), ω, H(μ), TC match sequence enumeration".into(),
        )
    } else {
        Check::skipped("oracle_agreement", format!("k^n exceeds {ORACLE_CAP}"))
    });

    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        n,
        all_passed,
        checks,
    })
}
