mod common;

use common::{dist, random_constraints, random_positive, rng};
use rand::Rng;
use sanov_core::constraints::simplex_grid;
use sanov_core::iprojection::{dual_value_and_gradient, PythagoreanResidual};
use sanov_core::{project, ConstraintSet, Error, LinearConstraint, Relation};

/// Independent reference for the three-symbol tilt: `q ∝ (1, t, t²)` with
/// `t² - t - 3 = 0`.
const TILT_Q: [f64; 3] = [
    0.116_204_060_378_000_86,
    0.267_591_879_243_998_2,
    0.616_204_060_378_000_9,
];
const TILT_DIVERGENCE: f64 = 0.197_377_588_033_948_34;

fn tilt_family(relation: Relation) -> ConstraintSet {
    ConstraintSet::new(vec![LinearConstraint::new(
        vec![0.0, 1.0, 2.0],
        relation,
        1.5,
    )
    .unwrap()])
    .unwrap()
}

#[test]
fn tilt_family_matches_reference() {
    let p = dist(&[1.0 / 3.0; 3]);
    let r = project(&p, &tilt_family(Relation::Eq)).unwrap();
    for (q, e) in r.q_star.probs().iter().zip(TILT_Q) {
        assert!((q - e).abs() < 1e-12, "{q} vs {e}");
    }
    assert!((r.divergence.value() - TILT_DIVERGENCE).abs() < 1e-12);
    let t = (1.0 + 13f64.sqrt()) / 2.0;
    assert!((r.duals[0] - t.ln()).abs() < 1e-10);
}

#[test]
fn pythagorean_equality_on_linear_family() {
    let p = dist(&[1.0 / 3.0; 3]);
    let a = tilt_family(Relation::Eq);
    let proj = project(&p, &a).unwrap();
    // The feasible segment is (t - 0.5, 1.5 - 2t, t) for t in [0.5, 0.75].
    for i in 0..20 {
        let t = 0.5 + 0.25 * i as f64 / 19.0;
        let q = dist(&[t - 0.5, 1.5 - 2.0 * t, t]);
        match proj.pythagorean_residual(&p, &a, &q).unwrap() {
            PythagoreanResidual::Finite(r) => assert!(r.abs() <= 1e-9, "t={t}: {r}"),
            PythagoreanResidual::MatchedInfinity => panic!("p is strictly positive"),
        }
    }
}

#[test]
fn pythagorean_inequality_on_half_spaces() {
    let mut g = rng(5);
    for _ in 0..20 {
        let k = g.random_range(2..=4);
        let p = random_positive(&mut g, k);
        let f: Vec<f64> = (0..k).map(|_| g.random_range(-1.0..1.0)).collect();
        let mean = p.expect(&f).unwrap();
        let hi = f.iter().copied().fold(f64::MIN, f64::max);
        let alpha = mean + 0.5 * (hi - mean);
        let a = ConstraintSet::new(vec![LinearConstraint::ge(f, alpha).unwrap()]).unwrap();
        let proj = project(&p, &a).unwrap();
        for q in simplex_grid(k, 2_000).unwrap() {
            if !a.contains(&q).unwrap() {
                continue;
            }
            if let PythagoreanResidual::Finite(r) = proj.pythagorean_residual(&p, &a, &q).unwrap() {
                assert!(r >= -1e-9, "{r}");
            }
        }
    }
}

#[test]
fn dual_gradient_matches_finite_differences() {
    let mut g = rng(17);
    let h = 1e-5;
    for _ in 0..50 {
        let k = g.random_range(2..=4);
        let p = random_positive(&mut g, k);
        let a = random_constraints(&mut g, k);
        let lambdas: Vec<f64> = (0..a.len()).map(|_| g.random_range(-2.0..2.0)).collect();
        let (_, grad) = dual_value_and_gradient(&p, &a, &lambdas).unwrap();
        for i in 0..lambdas.len() {
            let mut up = lambdas.clone();
            let mut down = lambdas.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (dual_value_and_gradient(&p, &a, &up).unwrap().0
                - dual_value_and_gradient(&p, &a, &down).unwrap().0)
                / (2.0 * h);
            assert!((fd - grad[i]).abs() <= 1e-6, "{fd} vs {}", grad[i]);
        }
    }
}

#[test]
fn kkt_conditions_and_rescaling() {
    let mut g = rng(23);
    let mut solved = 0;
    while solved < 50 {
        let k = g.random_range(2..=4);
        let p = random_positive(&mut g, k);
        let a = random_constraints(&mut g, k);
        let r = match project(&p, &a) {
            Ok(r) => r,
            Err(Error::Infeasible { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        solved += 1;
        assert!(r.max_constraint_residual <= 1e-10);
        for ((c, &l), &active) in a.constraints().iter().zip(&r.duals).zip(&r.active) {
            match c.relation {
                Relation::Ge => assert!(l >= -1e-10, "{l}"),
                Relation::Le => assert!(l <= 1e-10, "{l}"),
                Relation::Eq => {}
            }
            let slack = c.evaluate(r.q_star.probs()) - c.alpha;
            assert!(
                (l * slack).abs() <= 1e-10,
                "complementary slackness {l} * {slack}"
            );
            if !active {
                assert_eq!(l, 0.0);
            }
        }
        // Stationarity: ln(q/p) - λ·f is constant on the support.
        let offsets: Vec<f64> = r
            .support
            .iter()
            .map(|&x| {
                let tilt: f64 = a
                    .constraints()
                    .iter()
                    .zip(&r.duals)
                    .map(|(c, l)| l * c.f[x])
                    .sum();
                (r.q_star[x] / p[x]).ln() - tilt
            })
            .collect();
        for o in &offsets {
            assert!((o - offsets[0]).abs() <= 1e-9);
        }

        for scale in [0.01, 7.5, 100.0] {
            let rescaled = ConstraintSet::new(
                a.constraints()
                    .iter()
                    .map(|c| {
                        LinearConstraint::new(
                            c.f.iter().map(|v| v * scale).collect(),
                            c.relation,
                            c.alpha * scale,
                        )
                        .unwrap()
                    })
                    .collect(),
            )
            .unwrap();
            let s = project(&p, &rescaled).unwrap();
            for (x, y) in s.q_star.probs().iter().zip(r.q_star.probs()) {
                assert!((x - y).abs() <= 1e-9, "scale {scale}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn infeasible_alpha_has_certificate() {
    let p = dist(&[0.2, 0.3, 0.5]);
    let a = ConstraintSet::new(vec![
        LinearConstraint::symbol(3, 0, Relation::Ge, 0.1).unwrap(),
        LinearConstraint::eq(vec![0.0, 1.0, 2.0], 2.5).unwrap(),
    ])
    .unwrap();
    match project(&p, &a) {
        Err(Error::Infeasible { index, .. }) => assert_eq!(index, 1),
        other => panic!("{other:?}"),
    }
}
