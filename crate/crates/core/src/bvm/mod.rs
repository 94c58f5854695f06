//! Boolean-valued model engine over a finite atomic algebra.
//!
//! Names are interned in a [`Universe`]. Over a finite atomic algebra a name
//! is determined up to `⟦u = v⟧ = I` by its collapse at every atom, so the
//! universe keys names by their collapse profile (one hereditarily finite set
//! per atom) and stores the canonical entries `{x̌ ↦ {b : x ∈ profile[b]}}`.
//! Equivalent names therefore share one canonical id.

mod hf;
pub mod interp;
mod literal;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Mutex, MutexGuard};

use serde::Serialize;
use thiserror::Error;

use crate::boolalg::{BoolAlgError, BoolElem, BooleanAlgebra, PartitionOfUnity};

pub use hf::HfSet;
pub(crate) use literal::{is_literal_keyword, Cursor};
pub use literal::{parse_atom_set, AtomSet, LiteralError, NameLit};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BvmError {
    #[error("name belongs to another universe")]
    ForeignName,
    #[error(transparent)]
    Algebra(#[from] BoolAlgError),
    #[error("expected {expected} names (one per part), got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("atom {atom} is out of range for an algebra with {atoms} atoms")]
    AtomRange { atom: usize, atoms: usize },
    #[error(transparent)]
    Literal(#[from] LiteralError),
    #[error("map is not extensional on pair ({first}, {second}): ⟦w = t⟧ = {lhs} but ⟦f(w) = f(t)⟧ = {rhs}")]
    NotExtensional {
        first: usize,
        second: usize,
        lhs: BoolElem,
        rhs: BoolElem,
    },
    #[error("index {index} at block {block} is outside 1..={len}")]
    IndexOutOfRange { block: usize, index: usize, len: usize },
    #[error("real values must be finite (atom {atom} has {value})")]
    NonFinite { atom: usize, value: f64 },
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomicKind {
    Elem,
    Eq,
}

/// Handle to an interned name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name {
    universe: u32,
    id: u32,
}

impl Name {
    pub fn canonical_id(&self) -> u32 {
        self.id
    }
}

type HfId = u32;

struct NameData {
    profile: Vec<HfId>,
    entries: Vec<(u32, u64)>,
    rank: usize,
}

struct State {
    atoms: usize,
    hf_children: Vec<Vec<HfId>>,
    hf_index: HashMap<Vec<HfId>, HfId>,
    names: Vec<NameData>,
    name_index: HashMap<Vec<HfId>, u32>,
    eq_memo: HashMap<(u32, u32), u64>,
    in_memo: HashMap<(u32, u32), u64>,
}

impl State {
    fn new(atoms: usize) -> Self {
        let mut s = Self {
            atoms,
            hf_children: Vec::new(),
            hf_index: HashMap::new(),
            names: Vec::new(),
            name_index: HashMap::new(),
            eq_memo: HashMap::new(),
            in_memo: HashMap::new(),
        };
        let empty = s.hf(Vec::new());
        s.intern(vec![empty; atoms]);
        s
    }

    fn one(&self) -> u64 {
        if self.atoms == 64 {
            u64::MAX
        } else {
            (1u64 << self.atoms) - 1
        }
    }

    fn hf(&mut self, mut children: Vec<HfId>) -> HfId {
        children.sort_unstable();
        children.dedup();
        if let Some(&id) = self.hf_index.get(&children) {
            return id;
        }
        let id = self.hf_children.len() as HfId;
        self.hf_children.push(children.clone());
        self.hf_index.insert(children, id);
        id
    }

    fn hf_from_set(&mut self, h: &HfSet) -> HfId {
        let children = h.members().map(|m| self.hf_from_set(m)).collect();
        self.hf(children)
    }

    fn hf_to_set(&self, id: HfId) -> HfSet {
        self.hf_children[id as usize]
            .iter()
            .map(|&c| self.hf_to_set(c))
            .collect()
    }

    /// Name with the given collapse profile, created with canonical entries if new.
    fn intern(&mut self, profile: Vec<HfId>) -> u32 {
        if let Some(&id) = self.name_index.get(&profile) {
            return id;
        }
        let mut members: BTreeMap<HfId, u64> = BTreeMap::new();
        for (b, &h) in profile.iter().enumerate() {
            for &e in &self.hf_children[h as usize].clone() {
                *members.entry(e).or_insert(0) |= 1 << b;
            }
        }
        let mut entries = Vec::with_capacity(members.len());
        let mut rank = 0;
        for (e, bits) in members {
            let child = self.intern(vec![e; self.atoms]);
            rank = rank.max(self.names[child as usize].rank + 1);
            entries.push((child, bits));
        }
        entries.sort_unstable();
        let id = self.names.len() as u32;
        self.names.push(NameData {
            profile: profile.clone(),
            entries,
            rank,
        });
        self.name_index.insert(profile, id);
        id
    }

    fn profile_of_entries(&mut self, entries: &[(u32, u64)]) -> Vec<HfId> {
        (0..self.atoms)
            .map(|b| {
                let children = entries
                    .iter()
                    .filter(|(_, bits)| bits >> b & 1 == 1)
                    .map(|(c, _)| self.names[*c as usize].profile[b])
                    .collect();
                self.hf(children)
            })
            .collect()
    }

    fn eq(&mut self, u: u32, v: u32) -> u64 {
        if u == v {
            return self.one();
        }
        let key = (u.min(v), u.max(v));
        if let Some(&r) = self.eq_memo.get(&key) {
            return r;
        }
        let mut r = self.one();
        for (t, a) in self.names[u as usize].entries.clone() {
            r &= !a | self.member(t, v);
        }
        for (t, a) in self.names[v as usize].entries.clone() {
            r &= !a | self.member(t, u);
        }
        r &= self.one();
        self.eq_memo.insert(key, r);
        r
    }

    fn member(&mut self, u: u32, v: u32) -> u64 {
        if let Some(&r) = self.in_memo.get(&(u, v)) {
            return r;
        }
        let mut r = 0;
        for (t, a) in self.names[v as usize].entries.clone() {
            r |= a & self.eq(t, u);
        }
        self.in_memo.insert((u, v), r);
        r
    }
}

static NEXT_UNIVERSE: AtomicU32 = AtomicU32::new(1);

/// The separated universe of names over one finite algebra.
///
/// All interning and memoization goes through a single lock, so a universe can
/// be shared across threads; memo entries are deterministic functions of
/// their keys.
pub struct Universe {
    id: u32,
    algebra: BooleanAlgebra,
    state: Mutex<State>,
}

impl std::fmt::Debug for Universe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Universe")
            .field("atoms", &self.algebra.atom_count())
            .field("names", &self.name_count())
            .finish()
    }
}

impl Universe {
    pub fn new(algebra: BooleanAlgebra) -> Self {
        Self {
            id: NEXT_UNIVERSE.fetch_add(1, Ordering::Relaxed),
            algebra,
            state: Mutex::new(State::new(algebra.atom_count())),
        }
    }

    pub fn algebra(&self) -> BooleanAlgebra {
        self.algebra
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn own(&self, n: Name) -> Result<u32, BvmError> {
        if n.universe == self.id {
            Ok(n.id)
        } else {
            Err(BvmError::ForeignName)
        }
    }

    fn handle(&self, id: u32) -> Name {
        Name { universe: self.id, id }
    }

    fn check_elem(&self, a: BoolElem) -> Result<u64, BvmError> {
        if a.algebra() != self.algebra {
            return Err(BoolAlgError::Mismatch {
                left: self.algebra.atom_count(),
                right: a.atom_count(),
            }
            .into());
        }
        Ok(a.bits())
    }

    pub fn name_count(&self) -> usize {
        self.lock().names.len()
    }

    /// `∅̌`, the name with no entries.
    pub fn empty(&self) -> Name {
        self.handle(0)
    }

    /// `x̌`: every child canonical name with value `I`.
    pub fn canonical_name(&self, h: &HfSet) -> Name {
        let mut s = self.lock();
        let id = s.hf_from_set(h);
        let profile = vec![id; self.algebra.atom_count()];
        self.handle(s.intern(profile))
    }

    /// The name `{child ↦ value}`; zero-valued entries contribute nothing.
    pub fn name(&self, entries: &[(Name, BoolElem)]) -> Result<Name, BvmError> {
        let raw = entries
            .iter()
            .map(|&(c, a)| Ok((self.own(c)?, self.check_elem(a)?)))
            .collect::<Result<Vec<_>, BvmError>>()?;
        let mut s = self.lock();
        let profile = s.profile_of_entries(&raw);
        Ok(self.handle(s.intern(profile)))
    }

    /// Canonical entries of `u`.
    pub fn entries(&self, u: Name) -> Result<Vec<(Name, BoolElem)>, BvmError> {
        let id = self.own(u)?;
        let s = self.lock();
        Ok(s.names[id as usize]
            .entries
            .iter()
            .map(|&(c, bits)| (self.handle(c), self.algebra.from_bits(bits)))
            .collect())
    }

    pub fn rank(&self, u: Name) -> Result<usize, BvmError> {
        let id = self.own(u)?;
        Ok(self.lock().names[id as usize].rank)
    }

    /// The two-valued set denoted by `u` at atom `atom` (0-based).
    pub fn atom_collapse(&self, u: Name, atom: usize) -> Result<HfSet, BvmError> {
        let id = self.own(u)?;
        if atom >= self.algebra.atom_count() {
            return Err(BvmError::AtomRange {
                atom: atom + 1,
                atoms: self.algebra.atom_count(),
            });
        }
        let s = self.lock();
        Ok(s.hf_to_set(s.names[id as usize].profile[atom]))
    }

    pub fn profile(&self, u: Name) -> Result<Vec<HfSet>, BvmError> {
        let id = self.own(u)?;
        let s = self.lock();
        Ok(s.names[id as usize].profile.iter().map(|&h| s.hf_to_set(h)).collect())
    }

    /// `⟦u ∈ v⟧` or `⟦u = v⟧` by the mutual recursion of the truth-value
    /// definition, memoized per canonical id pair.
    pub fn truth_atomic(&self, u: Name, v: Name, kind: AtomicKind) -> Result<BoolElem, BvmError> {
        let (u, v) = (self.own(u)?, self.own(v)?);
        let mut s = self.lock();
        let bits = match kind {
            AtomicKind::Elem => s.member(u, v),
            AtomicKind::Eq => s.eq(u, v),
        };
        Ok(self.algebra.from_bits(bits))
    }

    pub fn eq(&self, u: Name, v: Name) -> Result<BoolElem, BvmError> {
        self.truth_atomic(u, v, AtomicKind::Eq)
    }

    pub fn elem(&self, u: Name, v: Name) -> Result<BoolElem, BvmError> {
        self.truth_atomic(u, v, AtomicKind::Elem)
    }

    /// The unique (up to canonical id) name agreeing with `names[k]` on `parts[k]`.
    pub fn mix_names(&self, parts: &PartitionOfUnity, names: &[Name]) -> Result<Name, BvmError> {
        if parts.algebra() != self.algebra {
            return Err(BoolAlgError::Mismatch {
                left: self.algebra.atom_count(),
                right: parts.algebra().atom_count(),
            }
            .into());
        }
        if names.len() != parts.len() {
            return Err(BvmError::CountMismatch {
                expected: parts.len(),
                got: names.len(),
            });
        }
        let ids = names.iter().map(|&n| self.own(n)).collect::<Result<Vec<_>, _>>()?;
        let mut s = self.lock();
        let profile = (0..self.algebra.atom_count())
            .map(|b| s.names[ids[parts.part_of_atom(b)] as usize].profile[b])
            .collect();
        Ok(self.handle(s.intern(profile)))
    }

    fn atom_elem(&self, atoms: &AtomSet) -> Result<BoolElem, BvmError> {
        let m = self.algebra.atom_count();
        if let Some(&bad) = atoms.iter().find(|&&a| a > m) {
            return Err(BvmError::AtomRange { atom: bad, atoms: m });
        }
        Ok(self.algebra.from_atoms(atoms.iter().map(|a| a - 1))?)
    }

    /// Interns the name denoted by a literal.
    pub fn realize(&self, lit: &NameLit) -> Result<Name, BvmError> {
        match lit {
            NameLit::Empty => Ok(self.empty()),
            NameLit::Check(h) => Ok(self.canonical_name(h)),
            NameLit::Entries(entries) => {
                let resolved = entries
                    .iter()
                    .map(|(child, atoms)| Ok((self.realize(child)?, self.atom_elem(atoms)?)))
                    .collect::<Result<Vec<_>, BvmError>>()?;
                self.name(&resolved)
            }
            NameLit::Mix(parts) => {
                let elems = parts
                    .iter()
                    .map(|(atoms, _)| self.atom_elem(atoms))
                    .collect::<Result<Vec<_>, _>>()?;
                let names = parts
                    .iter()
                    .map(|(_, child)| self.realize(child))
                    .collect::<Result<Vec<_>, _>>()?;
                let partition = PartitionOfUnity::new(elems.clone())?;
                let kept: Vec<Name> = elems
                    .iter()
                    .zip(names)
                    .filter(|(a, _)| !a.is_zero())
                    .map(|(_, n)| n)
                    .collect();
                self.mix_names(&partition, &kept)
            }
        }
    }

    pub fn parse_name(&self, text: &str) -> Result<Name, BvmError> {
        self.realize(&NameLit::parse(text)?)
    }

    /// Literal for the canonical form of `u`.
    pub fn to_literal(&self, u: Name) -> Result<NameLit, BvmError> {
        let profile = self.profile(u)?;
        if profile.iter().all(|h| *h == profile[0]) {
            return Ok(if profile[0].is_empty() {
                NameLit::Empty
            } else {
                NameLit::Check(profile[0].clone())
            });
        }
        let entries = self
            .entries(u)?
            .into_iter()
            .map(|(c, a)| {
                let atoms = a.atom_indices().into_iter().map(|i| i + 1).collect();
                Ok((self.to_literal(c)?, atoms))
            })
            .collect::<Result<Vec<_>, BvmError>>()?;
        Ok(NameLit::Entries(entries))
    }

    /// `{a}` as a name.
    pub fn singleton(&self, a: Name) -> Result<Name, BvmError> {
        self.name(&[(a, self.algebra.one())])
    }

    /// `{a, b}` as a name.
    pub fn pair_set(&self, a: Name, b: Name) -> Result<Name, BvmError> {
        let one = self.algebra.one();
        self.name(&[(a, one), (b, one)])
    }

    /// Kuratowski pair `{{a}, {a, b}}`.
    pub fn ordered_pair(&self, a: Name, b: Name) -> Result<Name, BvmError> {
        let s = self.singleton(a)?;
        let p = self.pair_set(a, b)?;
        self.pair_set(s, p)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    #[serde(skip)]
    pub witness: Name,
    pub witness_literal: String,
    /// `⟦∃x∈v φ(x)⟧`.
    pub exists_value: BoolElem,
    /// `⟦φ(u)⟧` for the returned witness.
    pub phi_value: BoolElem,
    /// `⟦u ∈ v ∧ φ(u)⟧`.
    pub member_and_phi: BoolElem,
    /// `⟦φ(u)⟧ = ⟦∃x∈v φ(x)⟧`.
    pub verified: bool,
}

/// Witness for `∃x∈v φ(x)` built atom by atom and mixed.
///
/// Below `⟦∃x∈v φ⟧` each atom takes the smallest-id entry of `v` satisfying
/// `φ` there. Elsewhere it takes the smallest-id member of `v` at that atom,
/// falling back to `∅̌` where `v` is empty.
pub fn maximum_witness_by<E>(
    universe: &Universe,
    v: Name,
    phi: &dyn Fn(Name) -> Result<BoolElem, E>,
) -> Result<WitnessReport, E>
where
    E: From<BvmError>,
{
    let alg = universe.algebra();
    let entries = universe.entries(v)?;
    let phis = entries.iter().map(|&(t, _)| phi(t)).collect::<Result<Vec<_>, E>>()?;
    let exists_value = entries
        .iter()
        .zip(&phis)
        .fold(alg.zero(), |acc, ((_, a), p)| acc | (*a & *p));
    let picks: Vec<Name> = (0..alg.atom_count())
        .map(|b| {
            let satisfying = entries
                .iter()
                .zip(&phis)
                .find(|((_, a), p)| a.contains_atom(b) && p.contains_atom(b))
                .map(|((t, _), _)| *t);
            satisfying
                .or_else(|| entries.iter().find(|(_, a)| a.contains_atom(b)).map(|(t, _)| *t))
                .unwrap_or_else(|| universe.empty())
        })
        .collect();
    let witness = universe.mix_names(&PartitionOfUnity::atoms(alg), &picks)?;
    let phi_value = phi(witness)?;
    let member_and_phi = universe.elem(witness, v)? & phi_value;
    Ok(WitnessReport {
        witness,
        witness_literal: universe.to_literal(witness)?.to_string(),
        exists_value,
        phi_value,
        member_and_phi,
        verified: phi_value == exists_value,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtensionalLift {
    #[serde(skip)]
    pub graph: Name,
    pub graph_literal: String,
    /// `⟦(t, f(t)) ∈ f↑⟧` for each given pair.
    pub pair_truth: Vec<BoolElem>,
    /// The collapse of `f↑` at every atom is the graph of a function.
    pub functional_at_every_atom: bool,
    pub verified: bool,
}

fn kuratowski_parts(p: &HfSet) -> Option<(HfSet, HfSet)> {
    let members: Vec<&HfSet> = p.members().collect();
    match members.as_slice() {
        [single] if single.len() == 1 => {
            let a = single.members().next()?.clone();
            Some((a.clone(), a))
        }
        [x, y] => {
            let (small, big) = if x.len() == 1 { (x, y) } else { (y, x) };
            if small.len() != 1 || big.len() != 2 {
                return None;
            }
            let a = small.members().next()?.clone();
            let b = big.members().find(|m| **m != a)?.clone();
            Some((a, b))
        }
        _ => None,
    }
}

/// `f↑` for an extensional finite map given by `pairs = [(w, f(w))]`: the name of
/// the graph `{(w, f(w))}` with every pair at value `I`.
pub fn extensional_lift(universe: &Universe, pairs: &[(Name, Name)]) -> Result<ExtensionalLift, BvmError> {
    for (i, &(w, fw)) in pairs.iter().enumerate() {
        for (j, &(t, ft)) in pairs.iter().enumerate().skip(i + 1) {
            let lhs = universe.eq(w, t)?;
            let rhs = universe.eq(fw, ft)?;
            if !lhs.le(rhs) {
                return Err(BvmError::NotExtensional {
                    first: i + 1,
                    second: j + 1,
                    lhs,
                    rhs,
                });
            }
        }
    }
    let one = universe.algebra().one();
    let kpairs = pairs
        .iter()
        .map(|&(w, fw)| universe.ordered_pair(w, fw))
        .collect::<Result<Vec<_>, _>>()?;
    let graph = universe.name(&kpairs.iter().map(|&p| (p, one)).collect::<Vec<_>>())?;
    let pair_truth = kpairs
        .iter()
        .map(|&p| universe.elem(p, graph))
        .collect::<Result<Vec<_>, _>>()?;

    let mut functional = true;
    let mut contains_all = true;
    for b in 0..universe.algebra().atom_count() {
        let g = universe.atom_collapse(graph, b)?;
        let mut seen: BTreeMap<HfSet, HfSet> = BTreeMap::new();
        for p in g.members() {
            match kuratowski_parts(p) {
                Some((a, v)) => {
                    if let Some(prev) = seen.insert(a, v.clone()) {
                        functional &= prev == v;
                    }
                }
                None => functional = false,
            }
        }
        for &(w, fw) in pairs {
            let (wb, fb) = (universe.atom_collapse(w, b)?, universe.atom_collapse(fw, b)?);
            contains_all &= seen.get(&wb) == Some(&fb);
        }
    }
    Ok(ExtensionalLift {
        graph,
        graph_literal: universe.to_literal(graph)?.to_string(),
        verified: functional && contains_all && pair_truth.iter().all(|t| t.is_one()),
        pair_truth,
        functional_at_every_atom: functional,
    })
}
