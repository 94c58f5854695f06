use std::sync::Arc;

use condrisk::bvm::interp::verify_interp_props;
use condrisk::duality::{fenchel, DualVariable, FenchelMethod};
use condrisk::fixtures::{random_formula, random_name_literal, s4, seeded_space};
use condrisk::formula::{collapsed_truth, evaluate, Env, Formula};
use condrisk::modelspaces::{module_gauge, uniform_grid, young_conjugate, ModuleSpec, YoungFunction};
use condrisk::transfer::scalarize;
use condrisk::{
    BoolElem, BooleanAlgebra, BuiltinMeasure, CondRiskMeasure, ConditionalValue, FiniteProbSpace, NameLit,
    PartitionOfUnity, RandomVariable, SpaceRef, Universe,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rv(v: Vec<f64>) -> RandomVariable {
    RandomVariable::new(v).unwrap()
}

fn payoff(n: usize) -> impl Strategy<Value = RandomVariable> {
    prop::collection::vec(-10.0..10.0f64, n).prop_map(rv)
}

/// A conditional density as a dual variable `y = −q / c` blockwise.
fn density(space: &FiniteProbSpace) -> impl Strategy<Value = DualVariable> {
    let space = space.clone();
    prop::collection::vec(0.01..1.0f64, space.atom_count()).prop_map(move |w| {
        let mut y = vec![0.0; space.atom_count()];
        for j in 0..space.block_count() {
            let total: f64 = space.block(j).iter().map(|&i| w[i]).sum();
            for &i in space.block(j) {
                y[i] = -(w[i] / total) / space.cond_prob(i);
            }
        }
        DualVariable::new(y).unwrap()
    })
}

fn catalog(space: &FiniteProbSpace) -> Vec<BuiltinMeasure> {
    BuiltinMeasure::catalog(&Arc::new(space.clone()))
}

fn entropic(space: SpaceRef, g: f64) -> BuiltinMeasure {
    let m = space.block_count();
    BuiltinMeasure::entropic(space, &ConditionalValue::constant(m, g)).unwrap()
}

fn avar(space: SpaceRef, l: f64) -> BuiltinMeasure {
    let m = space.block_count();
    BuiltinMeasure::avar(space, &ConditionalValue::constant(m, l)).unwrap()
}

#[test]
fn boolean_laws_exhaustive() {
    for m in 1..=5 {
        let alg = BooleanAlgebra::new(m).unwrap();
        let all: Vec<BoolElem> = alg.elements().collect();
        for &a in &all {
            assert_eq!(!!a, a);
            for &b in &all {
                assert_eq!(!(a & b), !a | !b);
                assert_eq!(!(a | b), !a & !b);
                assert_eq!(a.implies(b), !a | b);
                for &c in &all {
                    assert_eq!(a & (b | c), (a & b) | (a & c));
                    assert_eq!(a | (b & c), (a | b) & (a | c));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_cardinalities_sum_to_atom_count(m in 1usize..10, labels in prop::collection::vec(0usize..4, 10)) {
        let alg = BooleanAlgebra::new(m).unwrap();
        let parts: Vec<BoolElem> = (0..4)
            .map(|k| alg.from_atoms((0..m).filter(|&b| labels[b] == k)).unwrap())
            .collect();
        let p = PartitionOfUnity::new(parts).unwrap();
        prop_assert_eq!(p.parts().iter().map(|a| a.cardinality()).sum::<usize>(), m);
    }

    #[test]
    fn tower_property(x in payoff(8), seed in 0u64..50) {
        let space = seeded_space(8, 3, seed);
        let inner = space.lift(&space.cond_expect(&x).unwrap()).unwrap();
        let global = FiniteProbSpace::new(space.probs().to_vec(), vec![(0..8).collect()]).unwrap();
        let lhs = global.cond_expect(&inner).unwrap().get(0);
        let rhs = global.cond_expect(&x).unwrap().get(0);
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn conditional_expectation_commutes_with_mixing(xs in prop::collection::vec(payoff(8), 2), bits in 0u64..8) {
        let space = seeded_space(8, 3, 11);
        let alg = space.algebra();
        let a = alg.from_bits(bits);
        let parts = PartitionOfUnity::new(vec![a, !a]).unwrap();
        let kept: Vec<RandomVariable> = [a, !a].iter().zip(&xs).filter(|(p, _)| !p.is_zero()).map(|(_, x)| x.clone()).collect();
        let mixed = space.indicator_mix(&parts, &kept).unwrap();
        let ces: Vec<ConditionalValue> = kept.iter().map(|x| space.cond_expect(x).unwrap()).collect();
        prop_assert_eq!(space.cond_expect(&mixed).unwrap(), space.paste_conditional(&parts, &ces).unwrap());
    }

    #[test]
    fn esssup_dominates_conditional_mean(x in payoff(8)) {
        let space = seeded_space(8, 3, 5);
        let (s, e) = (space.esssup_cond(&x).unwrap(), space.cond_expect(&x).unwrap());
        for j in 0..3 {
            prop_assert!(s.get(j) >= e.get(j));
        }
    }

    #[test]
    fn lp_gauge_is_local(x in payoff(4), bits in 0u64..4, p in prop::sample::select(vec![1.0, 2.0, 4.0, f64::INFINITY])) {
        let space = s4();
        let a = space.algebra().from_bits(bits);
        let spec = ModuleSpec::lp(p).unwrap();
        let local = module_gauge(&spec, &space.indicator(a).mul(&x), &space).unwrap();
        let full = module_gauge(&spec, &x, &space).unwrap();
        for j in 0..2 {
            let want = if a.contains_atom(j) { full.get(j) } else { 0.0 };
            prop_assert_eq!(local.get(j), want);
        }
    }

    #[test]
    fn gauges_match_classical_norms_per_block(x in payoff(8), seed in 0u64..20) {
        let space = seeded_space(8, 3, seed);
        for p in [1.0, 2.0, 3.0] {
            let g = module_gauge(&ModuleSpec::lp(p).unwrap(), &x, &space).unwrap();
            for j in 0..3 {
                let norm: f64 = space.block(j).iter()
                    .map(|&i| space.probs()[i] / space.block_mass(j) * x.values()[i].abs().powf(p))
                    .sum::<f64>()
                    .powf(1.0 / p);
                prop_assert!((g.get(j) - norm).abs() <= 1e-12 * norm.max(1.0));
            }
        }
        // For φ(t) = t²/2 the Luxemburg gauge is the conditional L² norm over √2.
        let lux = module_gauge(&ModuleSpec::orlicz(YoungFunction::quadratic()), &x, &space).unwrap();
        let l2 = module_gauge(&ModuleSpec::lp(2.0).unwrap(), &x, &space).unwrap();
        for j in 0..3 {
            prop_assert!((lux.get(j) - l2.get(j) / 2f64.sqrt()).abs() <= 1e-8 * l2.get(j).max(1.0));
        }
    }

    #[test]
    fn weak_duality(x in payoff(4), y in density(&s4())) {
        let space = s4();
        for rho in catalog(&space) {
            let pen = fenchel(&rho, &y, FenchelMethod::ClosedForm).unwrap();
            let pairing = space.cond_expect(&x.mul(y.as_rv())).unwrap();
            let value = rho.evaluate(&x).unwrap();
            for j in 0..2 {
                prop_assert!(pairing.get(j) - pen.get(j) <= value.get(j) + 1e-9, "{}", rho.label());
            }
        }
    }

    #[test]
    fn penalty_is_local(y in density(&s4()), bits in 0u64..4) {
        let space = s4();
        let a = space.algebra().from_bits(bits);
        let ind = space.indicator(a);
        let mixed = ind.mul(y.as_rv()).add(&ind.map(|t| 1.0 - t).scale(-1.0));
        let mixed = DualVariable::new(mixed.into_values()).unwrap();
        for rho in catalog(&space) {
            let (full, local) = (
                fenchel(&rho, &y, FenchelMethod::ClosedForm).unwrap(),
                fenchel(&rho, &mixed, FenchelMethod::ClosedForm).unwrap(),
            );
            for j in a.atom_indices() {
                prop_assert_eq!(full.get(j), local.get(j));
            }
        }
    }

    #[test]
    fn normalization_and_avar_limits(x in payoff(4)) {
        let space: SpaceRef = Arc::new(s4());
        for rho in catalog(&space) {
            let zero = rho.evaluate(&RandomVariable::zeros(4)).unwrap();
            prop_assert_eq!(zero.values(), &[0.0, 0.0]);
        }
        let neg = BuiltinMeasure::neg_expectation(space.clone()).evaluate(&x).unwrap();
        prop_assert_eq!(avar(space.clone(), 1.0).evaluate(&x).unwrap(), neg);
        let wc = BuiltinMeasure::worst_case(space.clone()).evaluate(&x).unwrap();
        prop_assert_eq!(avar(space, 0.5).evaluate(&x).unwrap(), wc);
    }

    #[test]
    fn scalarization_is_exact(x in payoff(8), seed in 0u64..10) {
        let space = seeded_space(8, 3, seed);
        for rho in catalog(&space) {
            let value = rho.evaluate(&x).unwrap();
            for j in 0..3 {
                let s = scalarize(&rho, j).unwrap();
                let got = s.evaluate(&space.restrict(&x, j)).unwrap();
                prop_assert!((got - value.get(j)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn mixture_coherence(xs in prop::collection::vec(payoff(8), 3), labels in prop::collection::vec(0usize..3, 3)) {
        let space = seeded_space(8, 3, 2);
        let alg = space.algebra();
        let parts: Vec<BoolElem> = (0..3).map(|k| alg.from_atoms((0..3).filter(|&b| labels[b] == k)).unwrap()).collect();
        let kept: Vec<RandomVariable> = parts.iter().zip(&xs).filter(|(p, _)| !p.is_zero()).map(|(_, x)| x.clone()).collect();
        let parts = PartitionOfUnity::new(parts).unwrap();
        let mixed = space.indicator_mix(&parts, &kept).unwrap();
        for rho in catalog(&space) {
            let values: Vec<ConditionalValue> = kept.iter().map(|x| rho.evaluate(x).unwrap()).collect();
            prop_assert_eq!(rho.evaluate(&mixed).unwrap(), space.paste_conditional(&parts, &values).unwrap());
        }
    }

    #[test]
    fn grid_refine_matches_closed_form_for_entropic(y in density(&s4())) {
        let rho = entropic(Arc::new(s4()), 1.0);
        let closed = fenchel(&rho, &y, FenchelMethod::ClosedForm).unwrap();
        let grid = fenchel(&rho, &y, FenchelMethod::GridRefine).unwrap();
        prop_assert!(closed.max_abs_diff(&grid) <= 1e-5, "{:?} vs {:?}", closed, grid);
    }

    #[test]
    fn equality_is_an_equivalence(seed in 0u64..1000, m in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Universe::new(BooleanAlgebra::new(m).unwrap());
        let names: Vec<_> = (0..3).map(|_| u.realize(&random_name_literal(&mut rng, m, 3)).unwrap()).collect();
        let (a, b, c) = (names[0], names[1], names[2]);
        prop_assert!(u.eq(a, a).unwrap().is_one());
        prop_assert_eq!(u.eq(a, b).unwrap(), u.eq(b, a).unwrap());
        prop_assert!((u.eq(a, b).unwrap() & u.eq(b, c).unwrap()).le(u.eq(a, c).unwrap()));
        prop_assert!((u.eq(a, b).unwrap() & u.elem(a, c).unwrap()).le(u.elem(b, c).unwrap()));
    }

    #[test]
    fn equivalent_children_do_not_change_truth(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Universe::new(BooleanAlgebra::new(2).unwrap());
        let child = random_name_literal(&mut rng, 2, 2);
        let same = NameLit::Mix(vec![([1].into(), child.clone()), ([2].into(), child.clone())]);
        let atoms = [1].into();
        let n1 = u.realize(&NameLit::Entries(vec![(child, atoms)])).unwrap();
        let n2 = u.realize(&NameLit::Entries(vec![(same, [1].into())])).unwrap();
        prop_assert_eq!(n1, n2);
        let other = u.realize(&random_name_literal(&mut rng, 2, 3)).unwrap();
        prop_assert_eq!(u.eq(n1, other).unwrap(), u.eq(n2, other).unwrap());
        prop_assert_eq!(u.elem(other, n1).unwrap(), u.elem(other, n2).unwrap());
    }

    #[test]
    fn connective_identities(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Universe::new(BooleanAlgebra::new(3).unwrap());
        let f = random_formula(&mut rng, 3, 2, &[]);
        let g = random_formula(&mut rng, 3, 1, &[]);
        let env = Env::new();
        let v = evaluate(&u, &f, &env).unwrap();
        prop_assert_eq!(evaluate(&u, &Formula::Not(Box::new(Formula::Not(Box::new(f.clone())))), &env).unwrap(), v);
        let imp = Formula::Implies(Box::new(f.clone()), Box::new(g.clone()));
        let or = Formula::Or(Box::new(Formula::Not(Box::new(f.clone()))), Box::new(g));
        prop_assert_eq!(evaluate(&u, &imp, &env).unwrap(), evaluate(&u, &or, &env).unwrap());
        prop_assert_eq!(v, collapsed_truth(&u, &f, &env).unwrap());
    }

    #[test]
    fn print_then_parse_is_identity(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_formula(&mut rng, 3, 2, &["u".to_string()]);
        prop_assert_eq!(Formula::parse_with(&f.print(), &["u"]).unwrap(), f);
    }

    #[test]
    fn substituting_equivalent_literals(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Universe::new(BooleanAlgebra::new(2).unwrap());
        let lit = random_name_literal(&mut rng, 2, 2);
        let twin = NameLit::Mix(vec![([2].into(), lit.clone()), ([1].into(), lit.clone())]);
        let g = random_formula(&mut rng, 2, 2, &["v".to_string()]);
        let mut e1 = Env::new();
        e1.insert("v".into(), u.realize(&lit).unwrap());
        let mut e2 = Env::new();
        e2.insert("v".into(), u.realize(&twin).unwrap());
        prop_assert_eq!(evaluate(&u, &g, &e1).unwrap(), evaluate(&u, &g, &e2).unwrap());
    }
}

#[test]
fn double_conjugate_reproduces_quadratic() {
    let phi = YoungFunction::quadratic();
    let psi = young_conjugate(&phi, uniform_grid(20.0, 400));
    let back = young_conjugate(&psi, uniform_grid(10.0, 200));
    for s in uniform_grid(10.0, 200) {
        assert!((back.eval(s) - s * s / 2.0).abs() <= 2e-6, "s = {s}");
    }
}

#[test]
fn interpretation_identities_on_seeded_space() {
    let rep = verify_interp_props(&seeded_space(8, 3, 9), 50, 3).unwrap();
    assert!(rep.all_passed, "{:?}", rep.checks);
}

#[test]
fn entropic_tends_to_worst_case() {
    let space: SpaceRef = Arc::new(s4());
    let x = rv(vec![1.0, -3.0, 2.0, 0.5]);
    let e = entropic(space.clone(), 1e3).evaluate(&x).unwrap();
    let w = BuiltinMeasure::worst_case(space).evaluate(&x).unwrap();
    assert!(e.max_abs_diff(&w) <= 1e-2);
}
