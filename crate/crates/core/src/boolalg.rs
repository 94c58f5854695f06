//! Finite complete Boolean algebras generated by the blocks of a partition.
//!
//! An algebra with `m` atoms is represented by its atom count; elements are
//! bitsets over the atoms. Two algebras with the same atom count are the same
//! algebra, which is what lets elements serve as plain memoization keys.

use std::fmt;
use std::ops::{BitAnd, BitOr, Not};

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Largest supported number of atoms (one bit per atom in a `u64`).
pub const MAX_ATOMS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoolAlgError {
    #[error("algebra must have between 1 and {MAX_ATOMS} atoms, got {0}")]
    AtomCount(usize),
    #[error("algebra mismatch: element over {left} atoms combined with element over {right} atoms")]
    Mismatch { left: usize, right: usize },
    #[error("atom index {index} out of range for an algebra with {atoms} atoms")]
    AtomOutOfRange { index: usize, atoms: usize },
    #[error("partition is empty")]
    EmptyPartition,
    #[error("partition parts {first} and {second} overlap")]
    NotDisjoint { first: usize, second: usize },
    #[error("partition parts do not join to the unity (missing atoms {missing:?})")]
    NotCovering { missing: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BooleanAlgebra {
    atoms: u8,
}

impl BooleanAlgebra {
    pub fn new(atom_count: usize) -> Result<Self, BoolAlgError> {
        if atom_count == 0 || atom_count > MAX_ATOMS {
            return Err(BoolAlgError::AtomCount(atom_count));
        }
        Ok(Self {
            atoms: atom_count as u8,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms as usize
    }

    fn full_mask(&self) -> u64 {
        if self.atoms as usize == MAX_ATOMS {
            u64::MAX
        } else {
            (1u64 << self.atoms) - 1
        }
    }

    pub fn zero(&self) -> BoolElem {
        BoolElem {
            atoms: self.atoms,
            bits: 0,
        }
    }

    pub fn one(&self) -> BoolElem {
        BoolElem {
            atoms: self.atoms,
            bits: self.full_mask(),
        }
    }

    /// The atom with 0-based index `index`.
    pub fn atom(&self, index: usize) -> Result<BoolElem, BoolAlgError> {
        self.from_atoms([index])
    }

    pub fn from_atoms<I: IntoIterator<Item = usize>>(&self, atoms: I) -> Result<BoolElem, BoolAlgError> {
        let mut bits = 0u64;
        for index in atoms {
            if index >= self.atom_count() {
                return Err(BoolAlgError::AtomOutOfRange {
                    index,
                    atoms: self.atom_count(),
                });
            }
            bits |= 1 << index;
        }
        Ok(BoolElem {
            atoms: self.atoms,
            bits,
        })
    }

    /// Builds the element from a raw bitmask; bits above the atom count are discarded.
    pub fn from_bits(&self, bits: u64) -> BoolElem {
        BoolElem {
            atoms: self.atoms,
            bits: bits & self.full_mask(),
        }
    }

    /// All `2^m` elements in bitmask order. Only sensible for small `m`.
    pub fn elements(&self) -> impl Iterator<Item = BoolElem> + '_ {
        assert!(
            self.atom_count() < 32,
            "refusing to enumerate 2^{} elements",
            self.atom_count()
        );
        (0..(1u64 << self.atoms)).map(|bits| self.from_bits(bits))
    }

    pub fn atoms(&self) -> impl Iterator<Item = BoolElem> + '_ {
        (0..self.atom_count()).map(|i| self.from_bits(1 << i))
    }

    pub fn contains(&self, elem: &BoolElem) -> bool {
        elem.atoms == self.atoms
    }

    /// Checked binary operation. `Complement` ignores `b` apart from the algebra check.
    pub fn lattice_op(&self, a: BoolElem, b: BoolElem, op: LatticeOp) -> Result<BoolElem, BoolAlgError> {
        for e in [a, b] {
            if e.atoms != self.atoms {
                return Err(BoolAlgError::Mismatch {
                    left: self.atom_count(),
                    right: e.atom_count(),
                });
            }
        }
        Ok(match op {
            LatticeOp::Meet => a.meet(b),
            LatticeOp::Join => a.join(b),
            LatticeOp::Complement => a.complement(),
            LatticeOp::Implies => a.implies(b),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeOp {
    Meet,
    Join,
    Complement,
    Implies,
}

/// An element of a finite Boolean algebra: a set of atoms.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoolElem {
    atoms: u8,
    bits: u64,
}

impl BoolElem {
    pub fn algebra(&self) -> BooleanAlgebra {
        BooleanAlgebra { atoms: self.atoms }
    }

    pub fn atom_count(&self) -> usize {
        self.atoms as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn is_one(&self) -> bool {
        self.bits == self.algebra().full_mask()
    }

    pub fn contains_atom(&self, index: usize) -> bool {
        index < self.atom_count() && self.bits & (1 << index) != 0
    }

    /// 0-based indices of the atoms below this element, ascending.
    pub fn atom_indices(&self) -> Vec<usize> {
        (0..self.atom_count()).filter(|&i| self.contains_atom(i)).collect()
    }

    pub fn cardinality(&self) -> usize {
        self.bits.count_ones() as usize
    }

    fn same_algebra(&self, other: &BoolElem) {
        assert_eq!(
            self.atoms, other.atoms,
            "combining elements of algebras with {} and {} atoms",
            self.atoms, other.atoms
        );
    }

    pub fn meet(self, other: BoolElem) -> BoolElem {
        self.same_algebra(&other);
        BoolElem {
            atoms: self.atoms,
            bits: self.bits & other.bits,
        }
    }

    pub fn join(self, other: BoolElem) -> BoolElem {
        self.same_algebra(&other);
        BoolElem {
            atoms: self.atoms,
            bits: self.bits | other.bits,
        }
    }

    pub fn complement(self) -> BoolElem {
        BoolElem {
            atoms: self.atoms,
            bits: !self.bits & self.algebra().full_mask(),
        }
    }

    /// `a ⇒ b := aᶜ ∨ b`
    pub fn implies(self, other: BoolElem) -> BoolElem {
        self.complement().join(other)
    }

    pub fn le(self, other: BoolElem) -> bool {
        self.same_algebra(&other);
        self.bits & !other.bits == 0
    }

    pub fn is_disjoint(self, other: BoolElem) -> bool {
        self.meet(other).is_zero()
    }
}

impl BitAnd for BoolElem {
    type Output = BoolElem;
    fn bitand(self, rhs: BoolElem) -> BoolElem {
        self.meet(rhs)
    }
}

impl BitOr for BoolElem {
    type Output = BoolElem;
    fn bitor(self, rhs: BoolElem) -> BoolElem {
        self.join(rhs)
    }
}

impl Not for BoolElem {
    type Output = BoolElem;
    fn not(self) -> BoolElem {
        self.complement()
    }
}

impl fmt::Debug for BoolElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BoolElem{self}")
    }
}

/// Prints the 1-based atom set, e.g. `{1,3}`.
impl fmt::Display for BoolElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.atom_indices().into_iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str("}")
    }
}

/// Serialized as the sorted array of 1-based atom indices.
impl Serialize for BoolElem {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let atoms: Vec<usize> = self.atom_indices().into_iter().map(|i| i + 1).collect();
        atoms.serialize(serializer)
    }
}

/// A finite partition of the unity into pairwise disjoint nonzero elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionOfUnity {
    parts: Vec<BoolElem>,
}

impl PartitionOfUnity {
    /// Validates `parts`, dropping zero parts.
    pub fn new(parts: Vec<BoolElem>) -> Result<Self, BoolAlgError> {
        let first = parts.first().ok_or(BoolAlgError::EmptyPartition)?;
        let algebra = first.algebra();
        for p in &parts {
            if p.atoms != first.atoms {
                return Err(BoolAlgError::Mismatch {
                    left: first.atom_count(),
                    right: p.atom_count(),
                });
            }
        }
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                if !parts[i].is_disjoint(parts[j]) {
                    return Err(BoolAlgError::NotDisjoint { first: i, second: j });
                }
            }
        }
        let join = parts.iter().fold(algebra.zero(), |acc, p| acc | *p);
        if !join.is_one() {
            return Err(BoolAlgError::NotCovering {
                missing: join.complement().atom_indices().into_iter().map(|i| i + 1).collect(),
            });
        }
        Ok(Self {
            parts: parts.into_iter().filter(|p| !p.is_zero()).collect(),
        })
    }

    /// The partition into single atoms `{b_1}, …, {b_m}`.
    pub fn atoms(algebra: BooleanAlgebra) -> Self {
        Self {
            parts: algebra.atoms().collect(),
        }
    }

    pub fn trivial(algebra: BooleanAlgebra) -> Self {
        Self {
            parts: vec![algebra.one()],
        }
    }

    pub fn parts(&self) -> &[BoolElem] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn algebra(&self) -> BooleanAlgebra {
        self.parts[0].algebra()
    }

    /// Index of the part containing the given atom.
    pub fn part_of_atom(&self, atom: usize) -> usize {
        self.parts
            .iter()
            .position(|p| p.contains_atom(atom))
            .expect("a partition of unity covers every atom")
    }
}
