use std::sync::Arc;

use condrisk::fixtures::{s4, seeded_payoffs, seeded_space};
use condrisk::{BuiltinMeasure, CondRiskMeasure, ConditionalValue, RandomVariable, SpaceRef};

/// `min_s { s + E[(−x − s)^+] / λ }`; the minimum sits at one of the losses.
fn avar_oracle(cp: &[f64], xi: &[f64], lambda: f64) -> f64 {
    xi.iter()
        .map(|&v| {
            let s = -v;
            let excess: f64 = cp.iter().zip(xi).map(|(c, x)| c * (-x - s).max(0.0)).sum();
            s + excess / lambda
        })
        .fold(f64::INFINITY, f64::min)
}

fn entropic_oracle(cp: &[f64], xi: &[f64], gamma: f64) -> f64 {
    cp.iter().zip(xi).map(|(c, x)| c * (-gamma * x).exp()).sum::<f64>().ln() / gamma
}

#[test]
fn avar_matches_minimization_formula() {
    let space: SpaceRef = Arc::new(seeded_space(9, 3, 5));
    for lambda in [0.1, 0.25, 0.5, 0.8, 1.0] {
        let rho = BuiltinMeasure::avar(space.clone(), &ConditionalValue::constant(3, lambda)).unwrap();
        for x in seeded_payoffs(&space, 30, 4.0, 6) {
            let v = rho.evaluate(&x).unwrap();
            for j in 0..3 {
                let want = avar_oracle(&space.block_cond_probs(j), &space.restrict(&x, j), lambda);
                assert!(
                    (v.get(j) - want).abs() <= 1e-12,
                    "λ = {lambda}, block {j}: {} vs {want}",
                    v.get(j)
                );
            }
        }
    }
}

#[test]
fn entropic_matches_log_moment() {
    let space: SpaceRef = Arc::new(seeded_space(9, 3, 5));
    for gamma in [0.3, 1.0, 4.0] {
        let rho = BuiltinMeasure::entropic(space.clone(), &ConditionalValue::constant(3, gamma)).unwrap();
        for x in seeded_payoffs(&space, 30, 3.0, 7) {
            let v = rho.evaluate(&x).unwrap();
            for j in 0..3 {
                let want = entropic_oracle(&space.block_cond_probs(j), &space.restrict(&x, j), gamma);
                assert!((v.get(j) - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }
}

#[test]
fn s4_hand_values() {
    let space: SpaceRef = Arc::new(s4());
    let ln2 = 2f64.ln();
    let x = RandomVariable::new(vec![-ln2, -ln2, 0.0, 0.0]).unwrap();
    let e = BuiltinMeasure::entropic(space.clone(), &ConditionalValue::constant(2, 1.0)).unwrap();
    let v = e.evaluate(&x).unwrap();
    assert!((v.get(0) - ln2).abs() < 1e-15 && v.get(1) == 0.0);

    let x = RandomVariable::new(vec![1.0, 3.0, 2.0, 6.0]).unwrap();
    assert_eq!(space.cond_expect(&x).unwrap().values(), &[2.0, 4.0]);
    let w = BuiltinMeasure::worst_case(space.clone()).evaluate(&x).unwrap();
    assert_eq!(w.values(), &[-1.0, -2.0]);
    let half = BuiltinMeasure::avar(space, &ConditionalValue::constant(2, 0.5)).unwrap();
    assert_eq!(half.evaluate(&x).unwrap().values(), &[-1.0, -2.0]);
}
