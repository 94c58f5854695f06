use std::collections::BTreeSet;
use std::fmt;

/// A hereditarily finite set, the two-valued value of a name at an atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HfSet(BTreeSet<HfSet>);

impl HfSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The von Neumann ordinal `n = {0, …, n−1}`.
    pub fn von_neumann(n: usize) -> Self {
        let mut members = BTreeSet::new();
        let mut current = Self::empty();
        for _ in 0..n {
            members.insert(current.clone());
            current = Self(members.clone());
        }
        current
    }

    /// Inverse of [`HfSet::von_neumann`].
    pub fn as_von_neumann(&self) -> Option<usize> {
        let n = self.0.len();
        (*self == Self::von_neumann(n)).then_some(n)
    }

    pub fn members(&self) -> impl Iterator<Item = &HfSet> {
        self.0.iter()
    }

    pub fn contains(&self, x: &HfSet) -> bool {
        self.0.contains(x)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.0.iter().map(|m| m.rank() + 1).max().unwrap_or(0)
    }

    pub fn insert(&mut self, x: HfSet) -> bool {
        self.0.insert(x)
    }
}

impl FromIterator<HfSet> for HfSet {
    fn from_iter<I: IntoIterator<Item = HfSet>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for HfSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("}")
    }
}
