//! The conditional law `μ_A` of an n-sample given that its empirical
//! measure lies in `A`, and the functionals of it that appear in the exact
//! tail identity.
//!
//! `μ_A` is never stored over `𝒳^n`. It is exchangeable and uniform inside
//! each type class, so each functional reduces to a sum over member types
//! weighted by `Pr(t | A) = exp(ln P^n(t) - ln P(A))`. The first pass over
//! the type stream accumulates `ln P(A)`; later passes accumulate the
//! weighted sums.

use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSet;
use crate::error::{check_dim, Error, Result};
use crate::measures::{entropy, relative_entropy, Dist, InfoValue};
use crate::numeric::{CompensatedSum, LogSumExp};
use crate::typespace::{enumerate_types, TypeScorer};

/// Everything about `μ_A` needed by the identity and the bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalSummary {
    pub n: u64,
    /// `ln P(P̂_n ∈ A)`.
    pub log_prob_event: f64,
    /// Single-coordinate marginal `ω_A` of `μ_A`.
    pub omega: Dist,
    /// `D(μ_A ‖ ω_A^n)`, computed as `n H(ω_A) - H(μ_A)`.
    pub total_correlation: InfoValue,
    /// `H(μ_A)`.
    pub entropy_mu: InfoValue,
    /// `D(ω_A ‖ P)`.
    pub kl_omega_p: InfoValue,
    /// Number of type classes inside `A` with positive probability.
    pub member_types: u64,
}

impl ConditionalSummary {
    /// `-ln P(A) - n D(ω‖P) - TC`; zero by the exact identity.
    pub fn identity_residual(&self) -> f64 {
        -self.log_prob_event
            - self.n as f64 * self.kl_omega_p.value()
            - self.total_correlation.value()
    }

    /// Tolerance scale for the identity: `max(1, |ln P(A)|)`.
    pub fn identity_scale(&self) -> f64 {
        self.log_prob_event.abs().max(1.0)
    }
}

/// A resolved conditioning problem `(P, n, A)` with `ln P(A)` already known.
#[derive(Debug, Clone)]
pub struct ConditionalModel {
    p: Dist,
    a: ConstraintSet,
    scorer: TypeScorer,
    budget: u64,
    log_prob_event: f64,
    member_types: u64,
}

impl ConditionalModel {
    pub fn new(p: &Dist, n: u64, a: &ConstraintSet, budget: u64) -> Result<Self> {
        check_dim(a.k(), p.len())?;
        let scorer = TypeScorer::new(p, n);
        let mut iter = enumerate_types(p.len(), n, budget)?;
        let mut acc = LogSumExp::new();
        let mut member_types = 0u64;
        while let Some(c) = iter.next_counts() {
            if a.contains_counts(c, n) {
                let lp = scorer.log_prob(c);
                if lp > f64::NEG_INFINITY {
                    acc.push(lp);
                    member_types += 1;
                }
            }
        }
        if member_types == 0 {
            return Err(Error::EmptyEvent { n });
        }
        Ok(Self {
            p: p.clone(),
            a: a.clone(),
            scorer,
            budget,
            // A probability: round-off in the sum must not push it above one.
            log_prob_event: acc.value().min(0.0),
            member_types,
        })
    }

    pub fn n(&self) -> u64 {
        self.scorer.n()
    }

    pub fn log_prob_event(&self) -> f64 {
        self.log_prob_event
    }

    /// Calls `f(counts, weight, ln_mu)` for each member type, where `weight`
    /// is `Pr(t | A)` and `ln_mu` is `ln μ_A(y)` for any sequence `y` of type `t`.
    fn for_each_member(&self, mut f: impl FnMut(&[u64], f64, f64)) {
        let n = self.n();
        let mut iter = enumerate_types(self.p.len(), n, self.budget)
            .expect("budget was checked at construction");
        while let Some(c) = iter.next_counts() {
            if !self.a.contains_counts(c, n) {
                continue;
            }
            let ln_seq = self.scorer.ln_sequence_prob(c);
            if ln_seq == f64::NEG_INFINITY {
                continue;
            }
            let ln_mu = ln_seq - self.log_prob_event;
            let weight = (self.scorer.ln_multinomial(c) + ln_mu).exp();
            if weight > 0.0 {
                f(c, weight, ln_mu);
            }
        }
    }

    pub fn summary(&self) -> ConditionalSummary {
        let k = self.p.len();
        let n = self.n();
        let nf = n as f64;
        let mut omega: Vec<CompensatedSum> = vec![CompensatedSum::new(); k];
        let mut total = CompensatedSum::new();
        let mut entropy_mu = CompensatedSum::new();
        self.for_each_member(|c, w, ln_mu| {
            total.add(w);
            for (o, &cu) in omega.iter_mut().zip(c) {
                if cu > 0 {
                    o.add(w * cu as f64 / nf);
                }
            }
            entropy_mu.add(-w * ln_mu);
        });
        let total = total.value();
        let omega = Dist::normalized(omega.iter().map(|o| o.value() / total).collect())
            .expect("member weights are positive");
        let entropy_mu = entropy_mu.value();
        let tc = nf * entropy(&omega).value() - entropy_mu;
        let kl = relative_entropy(&omega, &self.p).expect("dimensions agree");
        ConditionalSummary {
            n,
            log_prob_event: self.log_prob_event,
            omega,
            total_correlation: InfoValue::Finite(tc),
            entropy_mu: InfoValue::Finite(entropy_mu),
            kl_omega_p: kl,
            member_types: self.member_types,
        }
    }

    /// `D(μ_A ‖ q^n)`, summed type by type.
    pub fn divergence_from_product(&self, q: &Dist) -> Result<InfoValue> {
        check_dim(self.p.len(), q.len())?;
        let ln_q: Vec<f64> = q.probs().iter().map(|v| v.ln()).collect();
        let mut d = CompensatedSum::new();
        let mut infinite = false;
        self.for_each_member(|c, w, ln_mu| {
            let mut ln_qn = 0.0;
            for (&cu, &lq) in c.iter().zip(&ln_q) {
                if cu > 0 {
                    ln_qn += cu as f64 * lq;
                }
            }
            if ln_qn == f64::NEG_INFINITY {
                infinite = true;
            } else {
                d.add(w * (ln_mu - ln_qn));
            }
        });
        Ok(if infinite {
            InfoValue::Infinite
        } else {
            InfoValue::Finite(d.value())
        })
    }
}

/// Type-level summary of `μ_A`.
pub fn summarize(p: &Dist, n: u64, a: &ConstraintSet, budget: u64) -> Result<ConditionalSummary> {
    Ok(ConditionalModel::new(p, n, a, budget)?.summary())
}

/// Both sides of `D(μ‖Q^n) - D(μ‖ω^n) = n D(ω‖Q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CoreIdentityCheck {
    Finite {
        lhs: f64,
        rhs: f64,
        /// `|lhs - rhs|`.
        residual: f64,
        /// `residual / max(1, |lhs|)`.
        relative_residual: f64,
    },
    /// `q` misses part of the support of `ω`, so both sides are `+∞`.
    MatchedInfinity,
}

impl CoreIdentityCheck {
    pub fn relative_residual(&self) -> f64 {
        match self {
            CoreIdentityCheck::Finite {
                relative_residual, ..
            } => *relative_residual,
            CoreIdentityCheck::MatchedInfinity => 0.0,
        }
    }
}

/// Checks the core identity for an arbitrary reference distribution `q`.
pub fn core_identity_check(
    model: &ConditionalModel,
    summary: &ConditionalSummary,
    q: &Dist,
) -> Result<CoreIdentityCheck> {
    let d_mu_q = model.divergence_from_product(q)?;
    let d_omega_q = relative_entropy(&summary.omega, q)?;
    match (d_mu_q, d_omega_q) {
        (InfoValue::Finite(d_mu_q), InfoValue::Finite(d_omega_q)) => {
            let lhs = d_mu_q - summary.total_correlation.value();
            let rhs = summary.n as f64 * d_omega_q;
            let residual = (lhs - rhs).abs();
            Ok(CoreIdentityCheck::Finite {
                lhs,
                rhs,
                residual,
                relative_residual: residual / lhs.abs().max(1.0),
            })
        }
        (InfoValue::Infinite, InfoValue::Infinite) => Ok(CoreIdentityCheck::MatchedInfinity),
        _ => Err(Error::Precondition(
            "divergences from q disagree on finiteness".into(),
        )),
    }
}

/// Convenience form of [`core_identity_check`] from raw inputs.
pub fn core_identity_residual(
    p: &Dist,
    n: u64,
    a: &ConstraintSet,
    q: &Dist,
    budget: u64,
) -> Result<CoreIdentityCheck> {
    let model = ConditionalModel::new(p, n, a, budget)?;
    let summary = model.summary();
    core_identity_check(&model, &summary, q)
}
