//! Finite probability spaces with a sub-σ-algebra generated by a block
//! partition of the sample atoms.
//!
//! Every sample atom has strictly positive probability, so almost-sure
//! identities are plain identities and `L^0(F)` is just one value per block.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::boolalg::{BoolAlgError, BoolElem, BooleanAlgebra, PartitionOfUnity};
use crate::report::ext_vec;

/// Tolerance on `Σ p_i = 1` accepted by [`FiniteProbSpace::new`].
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Tolerance used when comparing conditional distribution functions.
const CDF_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbSpaceError {
    #[error("probs must be nonempty")]
    NoAtoms,
    #[error("probs[{index}] = {value} must be finite and strictly positive")]
    NonPositiveProb { index: usize, value: f64 },
    #[error("probs sum {sum} (expected 1)")]
    ProbSum { sum: f64 },
    #[error("blocks must be nonempty")]
    NoBlocks,
    #[error("blocks[{block}] is empty")]
    EmptyBlock { block: usize },
    #[error("blocks[{block}] references atom {atom} of {atoms}")]
    AtomIndex { block: usize, atom: usize, atoms: usize },
    #[error("atom {atom} appears in more than one block")]
    DuplicateAtom { atom: usize },
    #[error("atom {atom} is not covered by any block")]
    UncoveredAtom { atom: usize },
    #[error("length mismatch: expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("value at index {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("expected {expected} random variables (one per part), got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("empty family")]
    EmptyFamily,
    #[error("extended-real arithmetic ∞ - ∞ at block {block}")]
    InfiniteDifference { block: usize },
    #[error(transparent)]
    Algebra(#[from] BoolAlgError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteProbSpace {
    probs: Vec<f64>,
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    block_mass: Vec<f64>,
    cond_probs: Vec<f64>,
    algebra: BooleanAlgebra,
}

impl FiniteProbSpace {
    /// `blocks` holds 0-based atom indices.
    pub fn new(probs: Vec<f64>, blocks: Vec<Vec<usize>>) -> Result<Self, ProbSpaceError> {
        let n = probs.len();
        if n == 0 {
            return Err(ProbSpaceError::NoAtoms);
        }
        for (index, &value) in probs.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(ProbSpaceError::NonPositiveProb { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(ProbSpaceError::ProbSum { sum });
        }
        if blocks.is_empty() {
            return Err(ProbSpaceError::NoBlocks);
        }
        let mut block_of = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(ProbSpaceError::EmptyBlock { block: b });
            }
            for &atom in block {
                if atom >= n {
                    return Err(ProbSpaceError::AtomIndex {
                        block: b,
                        atom: atom + 1,
                        atoms: n,
                    });
                }
                if block_of[atom] != usize::MAX {
                    return Err(ProbSpaceError::DuplicateAtom { atom: atom + 1 });
                }
                block_of[atom] = b;
            }
        }
        if let Some(atom) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(ProbSpaceError::UncoveredAtom { atom: atom + 1 });
        }
        let algebra = BooleanAlgebra::new(blocks.len())?;
        let block_mass: Vec<f64> = blocks.iter().map(|b| b.iter().map(|&i| probs[i]).sum()).collect();
        let cond_probs = (0..n).map(|i| probs[i] / block_mass[block_of[i]]).collect();
        Ok(Self {
            probs,
            blocks,
            block_of,
            block_mass,
            cond_probs,
            algebra,
        })
    }

    /// Uniform probabilities over `n` atoms.
    pub fn uniform(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self, ProbSpaceError> {
        Self::new(vec![1.0 / n as f64; n], blocks)
    }

    pub fn atom_count(&self) -> usize {
        self.probs.len()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> &[usize] {
        &self.blocks[j]
    }

    pub fn block_of(&self, atom: usize) -> usize {
        self.block_of[atom]
    }

    pub fn block_mass(&self, j: usize) -> f64 {
        self.block_mass[j]
    }

    /// `P(ω_i | B_j)` for the block `B_j` containing atom `i`.
    pub fn cond_prob(&self, atom: usize) -> f64 {
        self.cond_probs[atom]
    }

    /// Conditional probabilities of the atoms of block `j`, in block order.
    pub fn block_cond_probs(&self, j: usize) -> Vec<f64> {
        self.blocks[j].iter().map(|&i| self.cond_probs[i]).collect()
    }

    /// The Boolean algebra whose atoms are the blocks.
    pub fn algebra(&self) -> BooleanAlgebra {
        self.algebra
    }

    /// The one-block space of the conditional probabilities on `B_j`.
    pub fn block_space(&self, j: usize) -> FiniteProbSpace {
        let probs = self.block_cond_probs(j);
        let k = probs.len();
        let sum: f64 = probs.iter().sum();
        let probs = probs.into_iter().map(|p| p / sum).collect();
        FiniteProbSpace::new(probs, vec![(0..k).collect()]).expect("conditional probabilities form a space")
    }

    pub fn check_len(&self, len: usize) -> Result<(), ProbSpaceError> {
        if len != self.atom_count() {
            return Err(ProbSpaceError::Length {
                expected: self.atom_count(),
                got: len,
            });
        }
        Ok(())
    }

    pub fn check_block_len(&self, len: usize) -> Result<(), ProbSpaceError> {
        if len != self.block_count() {
            return Err(ProbSpaceError::Length {
                expected: self.block_count(),
                got: len,
            });
        }
        Ok(())
    }

    /// Values of `x` on block `j`, in block order.
    pub fn restrict(&self, x: &RandomVariable, j: usize) -> Vec<f64> {
        self.blocks[j].iter().map(|&i| x.0[i]).collect()
    }

    /// The random variable equal to `values` on block `j` and `fill` elsewhere.
    pub fn extend(&self, j: usize, values: &[f64], fill: f64) -> RandomVariable {
        let mut out = vec![fill; self.atom_count()];
        for (&i, &v) in self.blocks[j].iter().zip(values) {
            out[i] = v;
        }
        RandomVariable(out)
    }

    /// Lifts an F-measurable value to a random variable (constant on blocks).
    pub fn lift(&self, eta: &ConditionalValue) -> Result<RandomVariable, ProbSpaceError> {
        self.check_block_len(eta.len())?;
        RandomVariable::new((0..self.atom_count()).map(|i| eta.0[self.block_of[i]]).collect())
    }

    /// The indicator `1_a` as a random variable.
    pub fn indicator(&self, a: BoolElem) -> RandomVariable {
        RandomVariable(
            (0..self.atom_count())
                .map(|i| if a.contains_atom(self.block_of[i]) { 1.0 } else { 0.0 })
                .collect(),
        )
    }

    pub fn cond_expect(&self, x: &RandomVariable) -> Result<ConditionalValue, ProbSpaceError> {
        self.check_len(x.len())?;
        Ok(ConditionalValue(
            self.blocks
                .iter()
                .map(|b| b.iter().map(|&i| self.cond_probs[i] * x.0[i]).sum())
                .collect(),
        ))
    }

    /// `Σ 1_{a_k} x_k`: agrees with `xs[k]` on every block below `parts[k]`.
    pub fn indicator_mix(
        &self,
        partition: &PartitionOfUnity,
        xs: &[RandomVariable],
    ) -> Result<RandomVariable, ProbSpaceError> {
        self.check_partition(partition)?;
        if xs.len() != partition.len() {
            return Err(ProbSpaceError::CountMismatch {
                expected: partition.len(),
                got: xs.len(),
            });
        }
        for x in xs {
            self.check_len(x.len())?;
        }
        Ok(RandomVariable(
            (0..self.atom_count())
                .map(|i| xs[partition.part_of_atom(self.block_of[i])].0[i])
                .collect(),
        ))
    }

    /// Blockwise paste of F-measurable values along a partition.
    pub fn paste_conditional(
        &self,
        partition: &PartitionOfUnity,
        values: &[ConditionalValue],
    ) -> Result<ConditionalValue, ProbSpaceError> {
        self.check_partition(partition)?;
        if values.len() != partition.len() {
            return Err(ProbSpaceError::CountMismatch {
                expected: partition.len(),
                got: values.len(),
            });
        }
        for v in values {
            self.check_block_len(v.len())?;
        }
        Ok(ConditionalValue(
            (0..self.block_count())
                .map(|j| values[partition.part_of_atom(j)].0[j])
                .collect(),
        ))
    }

    fn check_partition(&self, partition: &PartitionOfUnity) -> Result<(), ProbSpaceError> {
        let alg = partition.algebra();
        if alg != self.algebra {
            return Err(BoolAlgError::Mismatch {
                left: self.block_count(),
                right: alg.atom_count(),
            }
            .into());
        }
        Ok(())
    }

    /// Per-block maximum of `x`.
    pub fn esssup_cond(&self, x: &RandomVariable) -> Result<ConditionalValue, ProbSpaceError> {
        self.check_len(x.len())?;
        Ok(ConditionalValue(
            self.blocks
                .iter()
                .map(|b| b.iter().map(|&i| x.0[i]).fold(f64::NEG_INFINITY, f64::max))
                .collect(),
        ))
    }

    /// `P(x ≤ η | F)` per block.
    pub fn cond_cdf(&self, x: &RandomVariable, eta: &ConditionalValue) -> Result<ConditionalValue, ProbSpaceError> {
        self.check_len(x.len())?;
        self.check_block_len(eta.len())?;
        Ok(ConditionalValue(
            self.blocks
                .iter()
                .enumerate()
                .map(|(j, b)| {
                    b.iter()
                        .filter(|&&i| x.0[i] <= eta.0[j])
                        .map(|&i| self.cond_probs[i])
                        .sum()
                })
                .collect(),
        ))
    }

    /// Blocks on which `x` and `y` have the same conditional law.
    ///
    /// Conditional distribution functions are step functions jumping only at
    /// observed values, so comparing them on the observed values of `x` and
    /// `y` within each block decides equality.
    pub fn same_law_blocks(&self, x: &RandomVariable, y: &RandomVariable) -> Result<BoolElem, ProbSpaceError> {
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        let mut agree = self.algebra.zero();
        for (j, b) in self.blocks.iter().enumerate() {
            let cdf = |v: &RandomVariable, t: f64| -> f64 {
                b.iter().filter(|&&i| v.0[i] <= t).map(|&i| self.cond_probs[i]).sum()
            };
            let same = b
                .iter()
                .flat_map(|&i| [x.0[i], y.0[i]])
                .all(|t| (cdf(x, t) - cdf(y, t)).abs() <= CDF_TOL);
            if same {
                agree = agree | self.algebra.from_bits(1 << j);
            }
        }
        Ok(agree)
    }

    pub fn same_conditional_law(&self, x: &RandomVariable, y: &RandomVariable) -> Result<bool, ProbSpaceError> {
        Ok(self.same_law_blocks(x, y)?.is_one())
    }
}

/// Componentwise maximum over a nonempty family of conditional values.
pub fn esssup_family(values: &[ConditionalValue]) -> Result<ConditionalValue, ProbSpaceError> {
    let first = values.first().ok_or(ProbSpaceError::EmptyFamily)?;
    let mut out = first.clone();
    for v in &values[1..] {
        if v.len() != out.len() {
            return Err(ProbSpaceError::Length {
                expected: out.len(),
                got: v.len(),
            });
        }
        for (o, &x) in out.0.iter_mut().zip(&v.0) {
            *o = o.max(x);
        }
    }
    Ok(out)
}

/// An element of `L^0(E)`: one finite real per sample atom.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RandomVariable(Vec<f64>);

impl RandomVariable {
    pub fn new(values: Vec<f64>) -> Result<Self, ProbSpaceError> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(ProbSpaceError::NonFinite { index, value });
        }
        Ok(Self(values))
    }

    pub fn constant(n: usize, c: f64) -> Self {
        assert!(c.is_finite());
        Self(vec![c; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len(), "random variables of different lengths");
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn le(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

/// A blockwise extended real: one value in `[-∞, +∞]` per block.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ConditionalValue(#[serde(serialize_with = "ext_vec")] Vec<f64>);

impl ConditionalValue {
    /// Rejects NaN; infinities are allowed.
    pub fn new(values: Vec<f64>) -> Result<Self, ProbSpaceError> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| v.is_nan()) {
            return Err(ProbSpaceError::NonFinite { index, value });
        }
        Ok(Self(values))
    }

    /// Requires every entry to be finite.
    pub fn finite(values: Vec<f64>) -> Result<Self, ProbSpaceError> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(ProbSpaceError::NonFinite { index, value });
        }
        Ok(Self(values))
    }

    pub fn constant(m: usize, c: f64) -> Self {
        Self(vec![c; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0[j]
    }

    /// Whether this is an element of `L^0(F)` (all entries finite).
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len(), "conditional values of different lengths");
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    /// Extended-real difference; `(+∞) - (+∞)` and `(-∞) - (-∞)` are errors.
    pub fn ext_sub(&self, other: &Self) -> Result<Self, ProbSpaceError> {
        let mut out = Vec::with_capacity(self.len());
        for (j, (&a, &b)) in self.0.iter().zip(&other.0).enumerate() {
            if a.is_infinite() && b.is_infinite() && a.signum() == b.signum() {
                return Err(ProbSpaceError::InfiniteDifference { block: j });
            }
            out.push(a - b);
        }
        Ok(Self(out))
    }

    /// Blocks where `self ≤ other`.
    pub fn le_blocks(&self, other: &Self, algebra: BooleanAlgebra) -> BoolElem {
        let bits = self
            .0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter(|(_, (a, b))| a <= b)
            .fold(0u64, |acc, (j, _)| acc | (1 << j));
        algebra.from_bits(bits)
    }

    /// Blocks where `self == other`.
    pub fn eq_blocks(&self, other: &Self, algebra: BooleanAlgebra) -> BoolElem {
        let bits = self
            .0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter(|(_, (a, b))| a == b)
            .fold(0u64, |acc, (j, _)| acc | (1 << j));
        algebra.from_bits(bits)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, f64::max)
    }
}

/// A shared handle to a space; measures and checkers hold one of these.
pub type SpaceRef = Arc<FiniteProbSpace>;
