//! I-projection `P*_A = argmin_{Q ∈ A} D(Q‖P)` onto polyhedral sets.
//!
//! The minimizer is an exponential tilt `Q_λ(x) ∝ p(x) exp(Σ_i λ_i f_i(x))`
//! on the largest support any member of `A` can have inside `supp(P)`.
//! The multipliers maximize the concave dual
//!
//! ```text
//! g(λ) = Σ_i λ_i α_i - ln Σ_x p(x) exp(Σ_i λ_i f_i(x))
//! ```
//!
//! with `λ_i >= 0` for `>=` rows and `λ_i <= 0` for `<=` rows. Each working
//! set of inequality rows held at equality is solved by damped Newton with a
//! pseudo-inverse step; an outer active-set loop adds violated rows and drops
//! rows whose multiplier has the wrong sign.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintSet, LinearConstraint, Relation};
use crate::error::{check_dim, Error, Result};
use crate::measures::{relative_entropy, Dist, InfoValue};
use crate::polytope::feasible_vertices;

pub const MAX_NEWTON_ITERATIONS: usize = 200;
/// Dual gradient max-norm required at the solution.
pub const GRADIENT_TOLERANCE: f64 = 1e-10;
/// Multiplier magnitude beyond which the dual is treated as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

const GRADIENT_TARGET: f64 = 1e-15;
const SIGN_TOLERANCE: f64 = 1e-10;
const VIOLATION_TOLERANCE: f64 = 1e-11;
const RESIDUAL_TOLERANCE: f64 = 1e-9;
const SUPPORT_THRESHOLD: f64 = 1e-12;
const MAX_EXHAUSTIVE_INEQUALITIES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IProjection {
    pub q_star: Dist,
    /// One multiplier per constraint, zero for inactive inequalities.
    pub duals: Vec<f64>,
    /// `D(P*‖P)`.
    pub divergence: InfoValue,
    /// Equalities are always active; inequalities when held at equality.
    pub active: Vec<bool>,
    /// Symbols where `q_star` may be positive.
    pub support: Vec<usize>,
    /// Max-norm of the dual gradient on the active rows.
    pub dual_gradient_norm: f64,
    /// Max violation of any constraint by `q_star`.
    pub max_constraint_residual: f64,
    pub newton_iterations: usize,
}

/// `g(λ)` and `∇g(λ)` treating every row as an equality.
pub fn dual_value_and_gradient(
    p: &Dist,
    a: &ConstraintSet,
    lambdas: &[f64],
) -> Result<(f64, Vec<f64>)> {
    check_dim(a.k(), p.len())?;
    if lambdas.len() != a.len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} multipliers, got {}",
            a.len(),
            lambdas.len()
        )));
    }
    let rows: Vec<&LinearConstraint> = a.constraints().iter().collect();
    let tilt = Tilt::new(p, &p.support(), &rows);
    let eval = tilt.evaluate(lambdas);
    Ok((eval.value, eval.gradient))
}

/// Exponential tilts of `p` restricted to `support`, driven by a subset of rows.
struct Tilt {
    ln_p: Vec<f64>,
    /// `features[j][i] = f_i(support[j])`.
    features: Vec<Vec<f64>>,
    alphas: Vec<f64>,
}

struct Evaluation {
    value: f64,
    gradient: Vec<f64>,
    /// Tilted law on the support.
    q: Vec<f64>,
    ln_z: f64,
}

impl Tilt {
    fn new(p: &Dist, support: &[usize], rows: &[&LinearConstraint]) -> Self {
        Self {
            ln_p: support.iter().map(|&x| p[x].ln()).collect(),
            features: support
                .iter()
                .map(|&x| rows.iter().map(|r| r.f[x]).collect())
                .collect(),
            alphas: rows.iter().map(|r| r.alpha).collect(),
        }
    }

    fn m(&self) -> usize {
        self.alphas.len()
    }

    fn evaluate(&self, lambdas: &[f64]) -> Evaluation {
        let logits: Vec<f64> = self
            .ln_p
            .iter()
            .zip(&self.features)
            .map(|(lp, f)| lp + f.iter().zip(lambdas).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let ln_z = crate::numeric::log_sum_exp(&logits);
        let q: Vec<f64> = logits.iter().map(|l| (l - ln_z).exp()).collect();
        let mut gradient = self.alphas.clone();
        for (qx, f) in q.iter().zip(&self.features) {
            for (g, fi) in gradient.iter_mut().zip(f) {
                *g -= qx * fi;
            }
        }
        let value = lambdas
            .iter()
            .zip(&self.alphas)
            .map(|(l, a)| l * a)
            .sum::<f64>()
            - ln_z;
        Evaluation {
            value,
            gradient,
            q,
            ln_z,
        }
    }

    /// `Cov_q(f)`, the negated Hessian of the dual.
    fn covariance(&self, q: &[f64]) -> DMatrix<f64> {
        let m = self.m();
        let mean: Vec<f64> = (0..m)
            .map(|i| q.iter().zip(&self.features).map(|(qx, f)| qx * f[i]).sum())
            .collect();
        let mut cov = DMatrix::zeros(m, m);
        for (qx, f) in q.iter().zip(&self.features) {
            for i in 0..m {
                let di = f[i] - mean[i];
                for j in 0..=i {
                    cov[(i, j)] += qx * di * (f[j] - mean[j]);
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                cov[(j, i)] = cov[(i, j)];
            }
        }
        cov
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pseudo-inverse solve of a symmetric positive semidefinite system.
fn pinv_solve(cov: DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    let eig = SymmetricEigen::new(cov);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = 1e-12 * top.max(f64::MIN_POSITIVE);
    let b = DVector::from_column_slice(rhs);
    let coeffs = eig.eigenvectors.transpose() * b;
    let mut scaled = DVector::zeros(rhs.len());
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev > cutoff {
            scaled[i] = coeffs[i] / ev;
        }
    }
    (eig.eigenvectors * scaled).iter().copied().collect()
}

enum DualSolve {
    Converged {
        lambdas: Vec<f64>,
        q: Vec<f64>,
        gradient_norm: f64,
        iterations: usize,
    },
    Diverged,
    Stalled {
        gradient_norm: f64,
        iterations: usize,
    },
}

/// Maximizes the equality-constrained dual by damped Newton.
fn solve_dual(tilt: &Tilt) -> DualSolve {
    let m = tilt.m();
    let scale = tilt
        .features
        .iter()
        .flatten()
        .chain(&tilt.alphas)
        .fold(1.0f64, |s, v| s.max(v.abs()));
    let target = GRADIENT_TARGET * scale;
    let mut lambdas = vec![0.0; m];
    let mut eval = tilt.evaluate(&lambdas);
    for iteration in 0..MAX_NEWTON_ITERATIONS {
        let gnorm = max_abs(&eval.gradient);
        if gnorm <= target || m == 0 {
            return DualSolve::Converged {
                lambdas,
                q: eval.q,
                gradient_norm: gnorm,
                iterations: iteration,
            };
        }
        if max_abs(&lambdas) > DIVERGENCE_THRESHOLD {
            return DualSolve::Diverged;
        }
        let newton = pinv_solve(tilt.covariance(&eval.q), &eval.gradient);
        let mut next = line_search(tilt, &lambdas, &eval, &newton);
        if next.is_none() {
            // Fall back to a scaled gradient step.
            next = line_search(tilt, &lambdas, &eval, &eval.gradient.clone());
        }
        match next {
            Some((l, e)) => {
                lambdas = l;
                eval = e;
            }
            None => {
                return if gnorm <= GRADIENT_TOLERANCE {
                    DualSolve::Converged {
                        lambdas,
                        q: eval.q,
                        gradient_norm: gnorm,
                        iterations: iteration,
                    }
                } else {
                    DualSolve::Stalled {
                        gradient_norm: gnorm,
                        iterations: iteration,
                    }
                };
            }
        }
    }
    let gnorm = max_abs(&eval.gradient);
    if gnorm <= GRADIENT_TOLERANCE {
        DualSolve::Converged {
            lambdas,
            q: eval.q,
            gradient_norm: gnorm,
            iterations: MAX_NEWTON_ITERATIONS,
        }
    } else if max_abs(&lambdas) > DIVERGENCE_THRESHOLD / 10.0 {
        DualSolve::Diverged
    } else {
        DualSolve::Stalled {
            gradient_norm: gnorm,
            iterations: MAX_NEWTON_ITERATIONS,
        }
    }
}

/// Backtracking on the dual value; in the round-off regime a step that only
/// shrinks the gradient is also accepted.
fn line_search(
    tilt: &Tilt,
    lambdas: &[f64],
    eval: &Evaluation,
    direction: &[f64],
) -> Option<(Vec<f64>, Evaluation)> {
    let slope = dot(&eval.gradient, direction);
    if slope.is_nan() || slope <= 0.0 {
        return None;
    }
    let gnorm = max_abs(&eval.gradient);
    let mut step = 1.0;
    for _ in 0..60 {
        let trial: Vec<f64> = lambdas
            .iter()
            .zip(direction)
            .map(|(l, d)| l + step * d)
            .collect();
        let e = tilt.evaluate(&trial);
        let flat = (e.value - eval.value).abs() <= 1e-14 * (1.0 + eval.value.abs());
        if e.value >= eval.value + 1e-4 * step * slope || (flat && max_abs(&e.gradient) < gnorm) {
            return Some((trial, e));
        }
        step *= 0.5;
    }
    None
}

/// Largest support inside `supp(p)` available to members of `a`.
fn maximal_support(p: &Dist, a: &ConstraintSet) -> Result<Vec<usize>> {
    let vertices = feasible_vertices(a)?;
    let mut support = vec![false; p.len()];
    let mut reachable = false;
    for v in &vertices {
        if v.iter()
            .zip(p.probs())
            .all(|(&q, &px)| q <= SUPPORT_THRESHOLD || px > 0.0)
        {
            reachable = true;
            for (s, &q) in support.iter_mut().zip(v) {
                *s |= q > SUPPORT_THRESHOLD;
            }
        }
    }
    if !reachable {
        return Err(Error::InfiniteDivergence);
    }
    Ok((0..p.len()).filter(|&x| support[x]).collect())
}

struct WorkingSolution {
    working: Vec<bool>,
    lambdas: Vec<f64>,
    q: Vec<f64>,
    gradient_norm: f64,
    iterations: usize,
}

struct Projector<'a> {
    p: &'a Dist,
    a: &'a ConstraintSet,
    support: Vec<usize>,
}

impl Projector<'_> {
    fn rows_in(&self, working: &[bool]) -> Vec<usize> {
        self.a
            .constraints()
            .iter()
            .enumerate()
            .filter(|(i, c)| c.relation == Relation::Eq || working[*i])
            .map(|(i, _)| i)
            .collect()
    }

    fn solve(&self, working: &[bool]) -> std::result::Result<WorkingSolution, Error> {
        let idx = self.rows_in(working);
        let rows: Vec<&LinearConstraint> = idx.iter().map(|&i| &self.a.constraints()[i]).collect();
        let tilt = Tilt::new(self.p, &self.support, &rows);
        match solve_dual(&tilt) {
            DualSolve::Converged {
                lambdas: sub,
                q: q_support,
                gradient_norm,
                iterations,
            } => {
                let mut lambdas = vec![0.0; self.a.len()];
                for (&i, l) in idx.iter().zip(sub) {
                    lambdas[i] = l;
                }
                let mut q = vec![0.0; self.p.len()];
                for (&x, v) in self.support.iter().zip(q_support) {
                    q[x] = v;
                }
                Ok(WorkingSolution {
                    working: working.to_vec(),
                    lambdas,
                    q,
                    gradient_norm,
                    iterations,
                })
            }
            DualSolve::Diverged => Err(Error::Precondition(
                "dual diverged for this working set".into(),
            )),
            DualSolve::Stalled {
                gradient_norm,
                iterations,
            } => Err(Error::NotConverged {
                iterations,
                gradient_norm,
            }),
        }
    }

    fn violation_scale(c: &LinearConstraint) -> f64 {
        1.0 + c.alpha.abs() + max_abs(&c.f)
    }

    fn active_set(&self) -> Option<WorkingSolution> {
        let m = self.a.len();
        let mut working = vec![false; m];
        let mut seen = HashSet::new();
        for _ in 0..(4 * m + 8) {
            if !seen.insert(working.clone()) {
                return None;
            }
            let sol = self.solve(&working).ok()?;
            let wrong_sign = self
                .a
                .constraints()
                .iter()
                .enumerate()
                .filter(|(i, _)| working[*i])
                .map(|(i, c)| {
                    let l = sol.lambdas[i];
                    let bad = match c.relation {
                        Relation::Ge => -l,
                        Relation::Le => l,
                        Relation::Eq => 0.0,
                    };
                    (i, bad)
                })
                .filter(|&(_, bad)| bad > SIGN_TOLERANCE)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((i, _)) = wrong_sign {
                working[i] = false;
                continue;
            }
            let violated = self
                .a
                .constraints()
                .iter()
                .enumerate()
                .filter(|(i, c)| c.relation.is_inequality() && !working[*i])
                .map(|(i, c)| (i, c.violation(&sol.q) / Self::violation_scale(c)))
                .filter(|&(_, v)| v > VIOLATION_TOLERANCE)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match violated {
                Some((i, _)) => working[i] = true,
                None => return Some(sol),
            }
        }
        None
    }

    /// Every working set; the feasible candidate of least divergence is `P*`.
    fn exhaustive(&self) -> Result<WorkingSolution> {
        let ineq: Vec<usize> = (0..self.a.len())
            .filter(|&i| self.a.constraints()[i].relation.is_inequality())
            .collect();
        if ineq.len() > MAX_EXHAUSTIVE_INEQUALITIES {
            return Err(Error::Capacity {
                what: "active-set search",
                required: 1u128 << ineq.len(),
                budget: 1u128 << MAX_EXHAUSTIVE_INEQUALITIES,
            });
        }
        let mut best: Option<(f64, WorkingSolution)> = None;
        let mut last_err = None;
        for mask in 0u64..(1u64 << ineq.len()) {
            let mut working = vec![false; self.a.len()];
            for (b, &i) in ineq.iter().enumerate() {
                working[i] = mask >> b & 1 == 1;
            }
            let sol = match self.solve(&working) {
                Ok(s) => s,
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            };
            let feasible = self
                .a
                .constraints()
                .iter()
                .all(|c| c.violation(&sol.q) <= RESIDUAL_TOLERANCE * Self::violation_scale(c));
            if !feasible {
                continue;
            }
            let div: f64 = sol
                .q
                .iter()
                .zip(self.p.probs())
                .filter(|(q, _)| **q > 0.0)
                .map(|(q, p)| q * (q / p).ln())
                .sum();
            if best.as_ref().is_none_or(|(d, _)| div < *d) {
                best = Some((div, sol));
            }
        }
        best.map(|(_, s)| s).ok_or_else(|| {
            last_err.unwrap_or(Error::NotConverged {
                iterations: MAX_NEWTON_ITERATIONS,
                gradient_norm: f64::NAN,
            })
        })
    }
}

/// Computes the I-projection of `p` onto `a`.
pub fn project(p: &Dist, a: &ConstraintSet) -> Result<IProjection> {
    check_dim(a.k(), p.len())?;
    let support = maximal_support(p, a)?;
    let projector = Projector { p, a, support };
    let sol = match projector.active_set() {
        Some(s) => s,
        None => projector.exhaustive()?,
    };
    let q_star = Dist::new(sol.q.clone()).or_else(|_| Dist::normalized(sol.q.clone()))?;
    let max_constraint_residual = a
        .constraints()
        .iter()
        .map(|c| c.violation(q_star.probs()).max(0.0))
        .fold(0.0, f64::max);
    if max_constraint_residual > RESIDUAL_TOLERANCE {
        return Err(Error::NotConverged {
            iterations: sol.iterations,
            gradient_norm: sol.gradient_norm,
        });
    }
    let divergence = relative_entropy(&q_star, p)?;
    let active = a
        .constraints()
        .iter()
        .zip(&sol.working)
        .map(|(c, &w)| c.relation == Relation::Eq || w)
        .collect();
    Ok(IProjection {
        q_star,
        duals: sol.lambdas,
        divergence,
        active,
        support: projector.support,
        dual_gradient_norm: sol.gradient_norm,
        max_constraint_residual,
        newton_iterations: sol.iterations,
    })
}

/// `D(q‖p) - D(q‖P*) - D(P*‖p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "residual", rename_all = "snake_case")]
pub enum PythagoreanResidual {
    Finite(f64),
    /// `D(q‖p)` and `D(q‖P*)` are both infinite.
    MatchedInfinity,
}

impl IProjection {
    /// Log-normalizer of the tilt, `ln Σ_{x ∈ support} p(x) exp(λ·f(x))`.
    pub fn log_normalizer(&self, p: &Dist, a: &ConstraintSet) -> f64 {
        let rows: Vec<&LinearConstraint> = a.constraints().iter().collect();
        Tilt::new(p, &self.support, &rows)
            .evaluate(&self.duals)
            .ln_z
    }

    pub fn pythagorean_residual(
        &self,
        p: &Dist,
        a: &ConstraintSet,
        q: &Dist,
    ) -> Result<PythagoreanResidual> {
        check_dim(p.len(), q.len())?;
        if !a.contains(q)? {
            return Err(Error::Precondition(
                "q is not a member of the constraint set".into(),
            ));
        }
        let d_qp = relative_entropy(q, p)?;
        let d_qs = relative_entropy(q, &self.q_star)?;
        match (d_qp, d_qs, self.divergence) {
            (InfoValue::Finite(a), InfoValue::Finite(b), InfoValue::Finite(c)) => {
                Ok(PythagoreanResidual::Finite(a - b - c))
            }
            _ => Ok(PythagoreanResidual::MatchedInfinity),
        }
    }
}

/// Projects and evaluates the Pythagorean residual at `q`.
pub fn pythagorean_residual(p: &Dist, a: &ConstraintSet, q: &Dist) -> Result<PythagoreanResidual> {
    project(p, a)?.pythagorean_residual(p, a, q)
}
