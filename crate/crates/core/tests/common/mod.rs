#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sanov_core::{ConstraintSet, Dist, LinearConstraint, Relation};

pub fn dist(v: &[f64]) -> Dist {
    Dist::new(v.to_vec()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly positive random distribution.
pub fn random_positive(rng: &mut impl Rng, k: usize) -> Dist {
    Dist::normalized((0..k).map(|_| rng.random_range(0.05..1.0)).collect()).unwrap()
}

/// Six constraint-set shapes available for every alphabet size.
pub fn shapes(k: usize) -> Vec<(&'static str, ConstraintSet)> {
    let ramp: Vec<f64> = (0..k).map(|x| x as f64).collect();
    let top = (k - 1) as f64;
    let set = |rows: Vec<LinearConstraint>| ConstraintSet::new(rows).unwrap();
    vec![
        (
            "first_symbol_ge",
            set(vec![
                LinearConstraint::symbol(k, 0, Relation::Ge, 0.5).unwrap()
            ]),
        ),
        (
            "last_symbol_le",
            set(vec![
                LinearConstraint::symbol(k, k - 1, Relation::Le, 0.2).unwrap()
            ]),
        ),
        (
            "mean_eq",
            set(vec![LinearConstraint::eq(ramp.clone(), top / 2.0).unwrap()]),
        ),
        (
            "mean_band",
            set(vec![
                LinearConstraint::ge(ramp.clone(), 0.6 * top).unwrap(),
                LinearConstraint::le(ramp, 0.8 * top).unwrap(),
            ]),
        ),
        (
            "two_symbols_ge",
            set(vec![
                LinearConstraint::symbol(k, 0, Relation::Ge, 0.3).unwrap(),
                LinearConstraint::symbol(k, 1, Relation::Ge, 0.3).unwrap(),
            ]),
        ),
        ("full_simplex", ConstraintSet::full_simplex(k).unwrap()),
    ]
}

/// Random constraint set with one or two rows, built around an interior
/// point so equalities stay feasible.
pub fn random_constraints(rng: &mut impl Rng, k: usize) -> ConstraintSet {
    let m = rng.random_range(1..=2);
    let center = random_positive(rng, k);
    let rows = (0..m)
        .map(|_| {
            let f: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mean = center.expect(&f).unwrap();
            let (relation, alpha) = match rng.random_range(0..3) {
                0 => (Relation::Eq, mean),
                1 => (Relation::Ge, mean + rng.random_range(-0.2..0.2)),
                _ => (Relation::Le, mean + rng.random_range(-0.2..0.2)),
            };
            LinearConstraint::new(f, relation, alpha).unwrap()
        })
        .collect();
    ConstraintSet::new(rows).unwrap()
}
