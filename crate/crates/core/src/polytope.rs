//! Vertex enumeration for `{Q in the simplex : Q satisfies a ConstraintSet}`.
//!
//! The alphabets in scope are small, so every vertex is found as a basic
//! feasible solution: pick `k` linearly independent rows among the
//! normalization row, the constraint rows and the `Q(x) >= 0` rows, solve,
//! and keep the point if it satisfies everything.

use nalgebra::{DMatrix, DVector};

use crate::constraints::{ConstraintSet, LinearConstraint, Relation};
use crate::error::{Error, Result};

/// Cap on the number of candidate bases examined.
pub const MAX_BASES: u128 = 5_000_000;

const FEASIBILITY_TOLERANCE: f64 = 1e-9;
const DEDUP_TOLERANCE: f64 = 1e-9;
const RANK_TOLERANCE: f64 = 1e-10;

struct Row {
    a: Vec<f64>,
    b: f64,
    equality: bool,
}

impl Row {
    fn slack(&self, q: &[f64]) -> f64 {
        self.a.iter().zip(q).map(|(x, y)| x * y).sum::<f64>() - self.b
    }

    fn satisfied(&self, q: &[f64]) -> bool {
        let scale = 1.0 + self.b.abs() + self.a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let s = self.slack(q);
        if self.equality {
            s.abs() <= FEASIBILITY_TOLERANCE * scale
        } else {
            s >= -FEASIBILITY_TOLERANCE * scale
        }
    }
}

fn rows_for(k: usize, constraints: &[LinearConstraint]) -> Vec<Row> {
    let mut rows = vec![Row {
        a: vec![1.0; k],
        b: 1.0,
        equality: true,
    }];
    for c in constraints {
        let (a, b) = match c.relation {
            Relation::Le => (c.f.iter().map(|v| -v).collect(), -c.alpha),
            Relation::Eq | Relation::Ge => (c.f.clone(), c.alpha),
        };
        rows.push(Row {
            a,
            b,
            equality: c.relation == Relation::Eq,
        });
    }
    for x in 0..k {
        let mut a = vec![0.0; k];
        a[x] = 1.0;
        rows.push(Row {
            a,
            b: 0.0,
            equality: false,
        });
    }
    rows
}

fn binomial(n: usize, r: usize) -> u128 {
    (0..r as u128).fold(1u128, |acc, i| acc.saturating_mul(n as u128 - i) / (i + 1))
}

/// Advances `idx` to the next `r`-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let r = idx.len();
    for i in (0..r).rev() {
        if idx[i] < n - r + i {
            idx[i] += 1;
            for j in i + 1..r {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn solve_basis(rows: &[Row], basis: &[usize], k: usize) -> Option<Vec<f64>> {
    let m = DMatrix::from_fn(k, k, |i, j| rows[basis[i]].a[j]);
    let sv = m.singular_values();
    let max = sv.max();
    if max == 0.0 || sv.min() <= RANK_TOLERANCE * max {
        return None;
    }
    let rhs = DVector::from_iterator(k, basis.iter().map(|&i| rows[i].b));
    m.full_piv_lu()
        .solve(&rhs)
        .map(|x| x.iter().copied().collect())
}

fn vertices_of(k: usize, constraints: &[LinearConstraint]) -> Result<Vec<Vec<f64>>> {
    let rows = rows_for(k, constraints);
    let required = binomial(rows.len(), k);
    if required > MAX_BASES {
        return Err(Error::Capacity {
            what: "vertex enumeration",
            required,
            budget: MAX_BASES,
        });
    }
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut basis: Vec<usize> = (0..k).collect();
    loop {
        if let Some(mut q) = solve_basis(&rows, &basis, k) {
            if rows.iter().all(|r| r.satisfied(&q)) {
                q.iter_mut().for_each(|v| {
                    if *v < DEDUP_TOLERANCE {
                        *v = v.max(0.0);
                    }
                });
                let duplicate = vertices.iter().any(|w| {
                    w.iter()
                        .zip(&q)
                        .all(|(a, b)| (a - b).abs() <= DEDUP_TOLERANCE)
                });
                if !duplicate {
                    vertices.push(q);
                }
            }
        }
        if !next_combination(&mut basis, rows.len()) {
            break;
        }
    }
    Ok(vertices)
}

/// All vertices of the feasible polytope. Empty when the set is infeasible.
pub fn enumerate_vertices(cs: &ConstraintSet) -> Result<Vec<Vec<f64>>> {
    vertices_of(cs.k(), cs.constraints())
}

/// Vertices of a nonempty polytope, or an infeasibility error naming the
/// first constraint that empties it.
pub fn feasible_vertices(cs: &ConstraintSet) -> Result<Vec<Vec<f64>>> {
    let vertices = enumerate_vertices(cs)?;
    if vertices.is_empty() {
        Err(infeasibility_certificate(cs)?)
    } else {
        Ok(vertices)
    }
}

fn infeasibility_certificate(cs: &ConstraintSet) -> Result<Error> {
    let k = cs.k();
    let all: Vec<usize> = (0..k).collect();
    for (i, c) in cs.constraints().iter().enumerate() {
        let (lo, hi) = c.range_over(&all);
        let tol = FEASIBILITY_TOLERANCE * (1.0 + c.alpha.abs());
        let outside = match c.relation {
            Relation::Eq => c.alpha < lo - tol || c.alpha > hi + tol,
            Relation::Ge => c.alpha > hi + tol,
            Relation::Le => c.alpha < lo - tol,
        };
        if outside {
            return Ok(Error::Infeasible {
                index: i,
                detail: format!(
                    "alpha = {} is outside the achievable range [{lo}, {hi}] of f",
                    c.alpha
                ),
            });
        }
    }
    for i in 1..cs.len() {
        if vertices_of(k, &cs.constraints()[..=i])?.is_empty() {
            return Ok(Error::Infeasible {
                index: i,
                detail: format!("constraint {i} is incompatible with constraints 0..{i}"),
            });
        }
    }
    Ok(Error::Infeasible {
        index: 0,
        detail: "the constraint set is empty".into(),
    })
}

/// `max ⟨objective, Q⟩` over the polytope, with the maximizing vertex.
pub fn maximize_linear(cs: &ConstraintSet, objective: &[f64]) -> Result<(f64, Vec<f64>)> {
    crate::error::check_dim(cs.k(), objective.len())?;
    let vertices = feasible_vertices(cs)?;
    let value = |v: &[f64]| -> f64 { v.iter().zip(objective).map(|(a, b)| a * b).sum() };
    let best = vertices
        .into_iter()
        .max_by(|a, b| value(a).total_cmp(&value(b)))
        .expect("feasible polytope has a vertex");
    Ok((value(&best), best))
}
