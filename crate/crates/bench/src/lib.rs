//! Benchmark fixtures shared by the `engine` benches.

use std::sync::Arc;

use condrisk::fixtures::{seeded_payoffs, seeded_space};
use condrisk::formula::{Env, Formula};
use condrisk::{
    BooleanAlgebra, BuiltinMeasure, DualVariable, FiniteProbSpace, Name, RandomVariable, SpaceRef, Universe,
};

pub const SEED: u64 = 7;

/// A seeded space with `n` atoms in `m` blocks.
pub fn space(n: usize, m: usize) -> SpaceRef {
    Arc::new(seeded_space(n, m, SEED))
}

pub fn payoffs(space: &FiniteProbSpace, count: usize) -> Vec<RandomVariable> {
    seeded_payoffs(space, count, 5.0, SEED)
}

/// The four built-ins with unit parameters.
pub fn measures(space: &SpaceRef) -> Vec<BuiltinMeasure> {
    BuiltinMeasure::catalog(space)
}

/// A dual variable on the density simplex: `y = −1` scaled unevenly inside each block.
pub fn density(space: &FiniteProbSpace) -> DualVariable {
    let mut y = vec![0.0; space.atom_count()];
    for j in 0..space.block_count() {
        let block = space.block(j);
        let w: Vec<f64> = (1..=block.len()).map(|k| k as f64).collect();
        let total: f64 = w.iter().sum();
        for (&i, wk) in block.iter().zip(&w) {
            y[i] = -(wk / total) / space.cond_prob(i);
        }
    }
    DualVariable::new(y).expect("nonpositive")
}

/// Two names of rank 3 over `atoms` atoms, built by nesting mixes.
pub fn name_pair(universe: &Universe) -> (Name, Name) {
    let u = universe
        .parse_name("name{check({{},{{}}}): {1}, name{empty: {2}}: {1,2}, check({{{}}}): {3}}")
        .expect("valid literal");
    let v = universe
        .parse_name("mix[{1}: check({{{},{{}}},{}}); {2,3}: name{check({{}}): {2}, empty: {1,3}}]")
        .expect("valid literal");
    (u, v)
}

pub fn universe(atoms: usize) -> Universe {
    Universe::new(BooleanAlgebra::new(atoms).expect("atom count in range"))
}

/// A depth-2 closed formula over the names of [`name_pair`].
pub fn formula() -> (Formula, Env) {
    let f = Formula::parse_with("forall x in u . exists y in v . (x = y) | (y in x)", &["u", "v"]).expect("parses");
    (f, Env::new())
}
