//! The interpretation maps `ι: L^0(F) → ℝ_A↓` and `ȷ: L^1_F(E) → L^1(Σ)_A↓`.
//!
//! Reals and random variables are carried directly, one value (resp. one
//! block restriction) per atom, rather than encoded as sets; the identities
//! relating truth values, arithmetic and mixing are exposed as checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{BvmError, HfSet, Name, Universe};
use crate::boolalg::{BoolElem, BooleanAlgebra, PartitionOfUnity};
use crate::probspace::{ConditionalValue, FiniteProbSpace, RandomVariable};

/// `η•`: one real per atom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealName(Vec<f64>);

/// `x•`: the restriction of `x` to each block, read under the conditional
/// probabilities of that block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L1Name {
    blocks: Vec<Vec<f64>>,
    #[serde(skip)]
    cond_probs: Vec<Vec<f64>>,
}

/// `𝔫•` for `𝔫 ∈ L^0(F, ℕ)`: one natural number per atom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NatName(Vec<usize>);

fn atoms_where(alg: BooleanAlgebra, pred: impl Fn(usize) -> bool) -> BoolElem {
    alg.from_bits(
        (0..alg.atom_count())
            .filter(|&b| pred(b))
            .fold(0u64, |acc, b| acc | (1 << b)),
    )
}

pub fn iota(eta: &ConditionalValue) -> Result<RealName, BvmError> {
    if let Some((atom, &value)) = eta.values().iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(BvmError::NonFinite { atom: atom + 1, value });
    }
    Ok(RealName(eta.values().to_vec()))
}

pub fn iota_inv(r: &RealName) -> ConditionalValue {
    ConditionalValue::finite(r.0.clone()).expect("real names are finite")
}

impl RealName {
    pub fn constant(m: usize, c: f64) -> Self {
        Self(vec![c; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    /// `⟦η• = ξ•⟧`, evaluated atom by atom.
    pub fn eq_truth(&self, other: &Self, alg: BooleanAlgebra) -> BoolElem {
        atoms_where(alg, |b| self.0[b] == other.0[b])
    }

    /// `⟦η• ≤ ξ•⟧`, evaluated atom by atom.
    pub fn le_truth(&self, other: &Self, alg: BooleanAlgebra) -> BoolElem {
        atoms_where(alg, |b| self.0[b] <= other.0[b])
    }

    /// `Σ η_k• a_k`.
    pub fn mix(parts: &PartitionOfUnity, names: &[RealName]) -> Result<Self, BvmError> {
        if names.len() != parts.len() {
            return Err(BvmError::CountMismatch {
                expected: parts.len(),
                got: names.len(),
            });
        }
        Ok(Self(
            (0..parts.algebra().atom_count())
                .map(|b| names[parts.part_of_atom(b)].0[b])
                .collect(),
        ))
    }
}

pub fn jmath(space: &FiniteProbSpace, x: &RandomVariable) -> Result<L1Name, BvmError> {
    space.check_len(x.len()).map_err(|_| BvmError::Length {
        expected: space.atom_count(),
        got: x.len(),
    })?;
    Ok(L1Name {
        blocks: (0..space.block_count()).map(|j| space.restrict(x, j)).collect(),
        cond_probs: (0..space.block_count()).map(|j| space.block_cond_probs(j)).collect(),
    })
}

pub fn jmath_inv(space: &FiniteProbSpace, x: &L1Name) -> RandomVariable {
    let mut out = vec![0.0; space.atom_count()];
    for (j, vals) in x.blocks.iter().enumerate() {
        for (&i, &v) in space.block(j).iter().zip(vals) {
            out[i] = v;
        }
    }
    RandomVariable::new(out).expect("finite")
}

impl L1Name {
    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
                .collect(),
            cond_probs: self.cond_probs.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    /// `E_Q[x•]` at every atom.
    pub fn expectation_q(&self) -> RealName {
        RealName(
            self.blocks
                .iter()
                .zip(&self.cond_probs)
                .map(|(v, c)| c.iter().zip(v).map(|(p, x)| p * x).sum())
                .collect(),
        )
    }

    pub fn eq_truth(&self, other: &Self, alg: BooleanAlgebra) -> BoolElem {
        atoms_where(alg, |b| self.blocks[b] == other.blocks[b])
    }

    pub fn le_truth(&self, other: &Self, alg: BooleanAlgebra) -> BoolElem {
        atoms_where(alg, |b| {
            self.blocks[b].iter().zip(&other.blocks[b]).all(|(x, y)| x <= y)
        })
    }

    pub fn mix(parts: &PartitionOfUnity, names: &[L1Name]) -> Result<Self, BvmError> {
        if names.len() != parts.len() || names.is_empty() {
            return Err(BvmError::CountMismatch {
                expected: parts.len(),
                got: names.len(),
            });
        }
        Ok(Self {
            blocks: (0..parts.algebra().atom_count())
                .map(|b| names[parts.part_of_atom(b)].blocks[b].clone())
                .collect(),
            cond_probs: names[0].cond_probs.clone(),
        })
    }

    /// Whether `x•` is a constant real at every atom, and which.
    pub fn as_real(&self) -> Option<RealName> {
        self.blocks
            .iter()
            .map(|v| v.iter().all(|x| *x == v[0]).then_some(v[0]))
            .collect::<Option<Vec<_>>>()
            .map(RealName)
    }
}

impl NatName {
    pub fn new(values: Vec<usize>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    /// `Σ ň_b b`: the mix of von Neumann canonical names along the atoms.
    pub fn to_name(&self, universe: &Universe) -> Result<Name, BvmError> {
        let alg = universe.algebra();
        if self.0.len() != alg.atom_count() {
            return Err(BvmError::Length {
                expected: alg.atom_count(),
                got: self.0.len(),
            });
        }
        let names: Vec<Name> = self
            .0
            .iter()
            .map(|&n| universe.canonical_name(&HfSet::von_neumann(n)))
            .collect();
        universe.mix_names(&PartitionOfUnity::atoms(alg), &names)
    }

    /// Decodes a name that collapses to a natural number at every atom.
    pub fn from_name(universe: &Universe, u: Name) -> Result<Option<Self>, BvmError> {
        Ok(universe
            .profile(u)?
            .iter()
            .map(HfSet::as_von_neumann)
            .collect::<Option<Vec<_>>>()
            .map(Self))
    }
}

/// `x_𝔫 = Σ_k 1_{𝔫 = k} x_k` with 1-based indices.
pub fn seq_index(space: &FiniteProbSpace, xs: &[RandomVariable], n: &NatName) -> Result<RandomVariable, BvmError> {
    if n.0.len() != space.block_count() {
        return Err(BvmError::Length {
            expected: space.block_count(),
            got: n.0.len(),
        });
    }
    let mut out = vec![0.0; space.atom_count()];
    for (j, &k) in n.0.iter().enumerate() {
        if k == 0 || k > xs.len() {
            return Err(BvmError::IndexOutOfRange {
                block: j + 1,
                index: k,
                len: xs.len(),
            });
        }
        let x = &xs[k - 1];
        for &i in space.block(j) {
            out[i] = x.values()[i];
        }
    }
    Ok(RandomVariable::new(out).expect("finite"))
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyCheck {
    pub property: &'static str,
    pub samples: usize,
    pub failures: usize,
    pub max_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct InterpReport {
    pub checks: Vec<PropertyCheck>,
    pub all_passed: bool,
}

struct Tally {
    property: &'static str,
    samples: usize,
    failures: usize,
    max_error: f64,
}

impl Tally {
    fn new(property: &'static str) -> Self {
        Self {
            property,
            samples: 0,
            failures: 0,
            max_error: 0.0,
        }
    }

    fn record(&mut self, ok: bool) {
        self.samples += 1;
        if !ok {
            self.failures += 1;
        }
    }

    fn record_err(&mut self, err: f64, tol: f64) {
        self.max_error = self.max_error.max(err);
        self.record(err <= tol);
    }

    fn finish(self) -> PropertyCheck {
        PropertyCheck {
            property: self.property,
            samples: self.samples,
            failures: self.failures,
            max_error: self.max_error,
            passed: self.failures == 0,
        }
    }
}

/// Join over all `a ∈ A` with `pred(a)`.
fn brute_join(alg: BooleanAlgebra, pred: impl Fn(BoolElem) -> bool) -> BoolElem {
    alg.elements().filter(|&a| pred(a)).fold(alg.zero(), |acc, a| acc | a)
}

fn random_partition(alg: BooleanAlgebra, rng: &mut ChaCha8Rng) -> PartitionOfUnity {
    let k = rng.gen_range(1..=alg.atom_count());
    let mut parts = vec![alg.zero(); k];
    for b in 0..alg.atom_count() {
        let p = rng.gen_range(0..k);
        parts[p] = parts[p] | alg.atom(b).expect("in range");
    }
    PartitionOfUnity::new(parts).expect("disjoint cover")
}

/// Seeded check of the identities of `ι` (properties (i)–(iv)) and `ȷ`
/// (items 1–6). Values are drawn from small integer sets so that equalities
/// occur on proper sub-elements of the algebra.
pub fn verify_interp_props(space: &FiniteProbSpace, samples: usize, seed: u64) -> Result<InterpReport, BvmError> {
    let alg = space.algebra();
    let (n, m) = (space.atom_count(), space.block_count());
    let universe = Universe::new(alg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let small_cv = |rng: &mut ChaCha8Rng| {
        ConditionalValue::finite((0..m).map(|_| rng.gen_range(-1..=2) as f64).collect()).expect("finite")
    };
    let small_rv = |rng: &mut ChaCha8Rng| {
        RandomVariable::new((0..n).map(|_| rng.gen_range(-1..=1) as f64).collect()).expect("finite")
    };

    let mut nat = Tally::new("(i) naturals and mixing of canonical naturals");
    let mut arith = Tally::new("(ii) constants, sums and products commute with ι");
    let mut order = Tally::new("(iii) equality and order truth values are the stated joins");
    let mut mixing = Tally::new("(iv) mixing commutes with ι");
    let mut extends = Tally::new("item 1: ȷ extends ι");
    let mut expect = Tally::new("item 2: E[x|F]• = E_Q[x•]");
    let mut l1_eq = Tally::new("item 3: ⟦x• = y•⟧ is the stated join");
    let mut l1_le = Tally::new("item 4: ⟦x• ≤ y•⟧ is the stated join");
    let mut l1_add = Tally::new("item 5: (x + y)• = x• + y•");
    let mut l1_mix = Tally::new("item 6: mixing commutes with ȷ");

    for _ in 0..samples {
        let ks: Vec<usize> = (0..m).map(|_| rng.gen_range(0..5)).collect();
        let nn = NatName::new(ks.clone());
        let name = nn.to_name(&universe)?;
        nat.record(NatName::from_name(&universe, name)? == Some(nn.clone()));
        let bound = universe.canonical_name(&HfSet::von_neumann(ks.iter().max().copied().unwrap_or(0) + 1));
        nat.record(universe.elem(name, bound)?.is_one());
        let parts = random_partition(alg, &mut rng);
        let consts: Vec<usize> = (0..parts.len()).map(|_| rng.gen_range(0..5)).collect();
        let pasted = NatName::new((0..m).map(|b| consts[parts.part_of_atom(b)]).collect());
        let checks: Vec<Name> = consts
            .iter()
            .map(|&c| universe.canonical_name(&HfSet::von_neumann(c)))
            .collect();
        nat.record(pasted.to_name(&universe)? == universe.mix_names(&parts, &checks)?);

        let (eta, xi) = (small_cv(&mut rng), small_cv(&mut rng));
        let (ie, ix) = (iota(&eta)?, iota(&xi)?);
        arith.record(iota(&ConditionalValue::constant(m, 0.0))? == RealName::constant(m, 0.0));
        arith.record(iota(&ConditionalValue::constant(m, 1.0))? == RealName::constant(m, 1.0));
        arith.record(iota(&eta.zip_with(&xi, |a, b| a + b))? == ie.add(&ix));
        arith.record(iota(&eta.zip_with(&xi, |a, b| a * b))? == ie.mul(&ix));
        arith.record(iota_inv(&ie) == eta);

        let agree = |a: BoolElem, pred: &dyn Fn(f64, f64) -> bool| {
            a.atom_indices().into_iter().all(|b| pred(eta.get(b), xi.get(b)))
        };
        order.record(ie.eq_truth(&ix, alg) == brute_join(alg, |a| agree(a, &|p, q| p == q)));
        order.record(ie.le_truth(&ix, alg) == brute_join(alg, |a| agree(a, &|p, q| p <= q)));

        let parts = random_partition(alg, &mut rng);
        let etas: Vec<ConditionalValue> = (0..parts.len()).map(|_| small_cv(&mut rng)).collect();
        let pasted = space.paste_conditional(&parts, &etas).expect("consistent");
        let reals = etas.iter().map(iota).collect::<Result<Vec<_>, _>>()?;
        mixing.record(iota(&pasted)? == RealName::mix(&parts, &reals)?);

        extends.record(jmath(space, &space.lift(&eta).expect("finite"))?.as_real() == Some(ie.clone()));

        let (x, y) = (small_rv(&mut rng), small_rv(&mut rng));
        let (jx, jy) = (jmath(space, &x)?, jmath(space, &y)?);
        let ce = space.cond_expect(&x).expect("same space");
        let eq_vals = jx.expectation_q();
        let err = ce
            .values()
            .iter()
            .zip(eq_vals.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        expect.record_err(err, 1e-12);

        let restricted_agree = |a: BoolElem, pred: &dyn Fn(f64, f64) -> bool| {
            a.atom_indices()
                .into_iter()
                .all(|b| space.block(b).iter().all(|&i| pred(x.values()[i], y.values()[i])))
        };
        l1_eq.record(jx.eq_truth(&jy, alg) == brute_join(alg, |a| restricted_agree(a, &|p, q| p == q)));
        l1_le.record(jx.le_truth(&jy, alg) == brute_join(alg, |a| restricted_agree(a, &|p, q| p <= q)));
        l1_add.record(jmath(space, &x.add(&y))? == jx.add(&jy));
        l1_add.record(jmath_inv(space, &jx) == x);

        let parts = random_partition(alg, &mut rng);
        let xs: Vec<RandomVariable> = (0..parts.len()).map(|_| small_rv(&mut rng)).collect();
        let mixed = space.indicator_mix(&parts, &xs).expect("consistent");
        let names = xs.iter().map(|x| jmath(space, x)).collect::<Result<Vec<_>, _>>()?;
        l1_mix.record(jmath(space, &mixed)? == L1Name::mix(&parts, &names)?);
    }

    let checks: Vec<PropertyCheck> = [nat, arith, order, mixing, extends, expect, l1_eq, l1_le, l1_add, l1_mix]
        .into_iter()
        .map(Tally::finish)
        .collect();
    Ok(InterpReport {
        all_passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
