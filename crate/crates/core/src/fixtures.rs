//! Standard test fixtures: the symmetric space `S4`, seeded random spaces,
//! and seeded generators for names and formulas.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bvm::{AtomSet, HfSet, NameLit};
use crate::formula::{Formula, Term};
use crate::probspace::{FiniteProbSpace, RandomVariable};

/// Four atoms with probability 1/4, blocks `{ω1, ω2}` and `{ω3, ω4}`.
pub fn s4() -> FiniteProbSpace {
    FiniteProbSpace::uniform(4, vec![vec![0, 1], vec![2, 3]]).expect("S4 is valid")
}

/// A seeded space with `n` atoms split into `m` nonempty blocks and random
/// strictly positive probabilities.
pub fn seeded_space(n: usize, m: usize, seed: u64) -> FiniteProbSpace {
    assert!(m >= 1 && n >= m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
    let head: f64 = probs[..n - 1].iter().sum();
    probs[n - 1] = 1.0 - head;

    let mut atoms: Vec<usize> = (0..n).collect();
    atoms.shuffle(&mut rng);
    let mut blocks: Vec<Vec<usize>> = (0..m).map(|j| vec![atoms[j]]).collect();
    for &a in &atoms[m..] {
        let j = rng.gen_range(0..m);
        blocks[j].push(a);
    }
    for b in &mut blocks {
        b.sort_unstable();
    }
    FiniteProbSpace::new(probs, blocks).expect("seeded space is valid")
}

/// Payoffs with entries uniform in `[-range, range]`.
pub fn seeded_payoffs(space: &FiniteProbSpace, count: usize, range: f64, seed: u64) -> Vec<RandomVariable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            RandomVariable::new((0..space.atom_count()).map(|_| rng.gen_range(-range..range)).collect())
                .expect("finite")
        })
        .collect()
}

/// Hereditarily finite set of rank at most `rank` with at most two members per level.
pub fn random_hf(rng: &mut impl Rng, rank: usize) -> HfSet {
    if rank == 0 {
        return HfSet::empty();
    }
    (0..rng.gen_range(0..=2)).map(|_| random_hf(rng, rank - 1)).collect()
}

fn random_atoms(rng: &mut impl Rng, atoms: usize) -> AtomSet {
    (1..=atoms).filter(|_| rng.gen_bool(0.5)).collect()
}

/// Name literal over `atoms` atoms of rank at most `rank`.
pub fn random_name_literal(rng: &mut impl Rng, atoms: usize, rank: usize) -> NameLit {
    if rank == 0 || rng.gen_bool(0.15) {
        return NameLit::Empty;
    }
    match rng.gen_range(0..4) {
        0 => NameLit::Check(random_hf(rng, rank)),
        1 => {
            let mut order: Vec<usize> = (1..=atoms).collect();
            order.shuffle(rng);
            let cut = rng.gen_range(1..=atoms);
            let (a, b) = order.split_at(cut);
            let mut parts = vec![(a.iter().copied().collect(), random_name_literal(rng, atoms, rank))];
            if !b.is_empty() {
                parts.push((b.iter().copied().collect(), random_name_literal(rng, atoms, rank)));
            }
            NameLit::Mix(parts)
        }
        _ => NameLit::Entries(
            (0..rng.gen_range(1..=3))
                .map(|_| (random_name_literal(rng, atoms, rank - 1), random_atoms(rng, atoms)))
                .collect(),
        ),
    }
}

fn random_term(rng: &mut impl Rng, atoms: usize, vars: &[String]) -> Term {
    if !vars.is_empty() && rng.gen_bool(0.6) {
        Term::Var(vars[rng.gen_range(0..vars.len())].clone())
    } else {
        Term::Lit(random_name_literal(rng, atoms, 2))
    }
}

/// Formula with quantifier depth at most `depth` whose free variables are
/// among `vars`; literals have rank at most 2.
pub fn random_formula<R: Rng>(rng: &mut R, atoms: usize, depth: usize, vars: &[String]) -> Formula {
    formula_sized(rng, atoms, depth, vars, 4)
}

fn formula_sized<R: Rng>(rng: &mut R, atoms: usize, depth: usize, vars: &[String], fuel: usize) -> Formula {
    let choice = if fuel == 0 {
        rng.gen_range(0..2)
    } else {
        rng.gen_range(0..8)
    };
    let sub = |rng: &mut R| Box::new(formula_sized(rng, atoms, depth, vars, fuel - 1));
    match choice {
        0 => Formula::Eq(random_term(rng, atoms, vars), random_term(rng, atoms, vars)),
        1 => Formula::In(random_term(rng, atoms, vars), random_term(rng, atoms, vars)),
        2 => Formula::Not(sub(rng)),
        3 => Formula::And(sub(rng), sub(rng)),
        4 => Formula::Or(sub(rng), sub(rng)),
        5 => Formula::Implies(sub(rng), sub(rng)),
        _ if depth == 0 => Formula::Eq(random_term(rng, atoms, vars), random_term(rng, atoms, vars)),
        c => {
            let var = format!("x{}", vars.len());
            let domain = random_term(rng, atoms, vars);
            let mut inner = vars.to_vec();
            inner.push(var.clone());
            let body = Box::new(formula_sized(rng, atoms, depth - 1, &inner, fuel - 1));
            if c == 6 {
                Formula::ForallIn { var, domain, body }
            } else {
                Formula::ExistsIn { var, domain, body }
            }
        }
    }
}
