//! Scalarization of a conditional risk measure to one classical measure per
//! atom, and cross-checks of conditional properties against their classical
//! counterparts at every atom.
//!
//! A function-level name `ρ↑` is represented by its atom collapses, the
//! [`ScalarRiskMeasure`] family, rather than as a set-level name.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::boolalg::BoolElem;
use crate::duality::{
    dual_representation, fenchel, numeric_penalty_block, penalty_function, stable_sublevel_check, DualError,
    DualSearchConfig, DualVariable, FenchelMethod, PenaltyEstimate, PenaltySearch,
};
use crate::probspace::{ConditionalValue, FiniteProbSpace, ProbSpaceError, RandomVariable, SpaceRef};
use crate::riskcore::{
    check_axiom, check_convergence_property, Axiom, CondRiskMeasure, ConvergenceProperty, Counterexample, FnMeasure,
    RiskError, SequenceSpec, ADMISSIBLE_TOL,
};

const LOCAL_TRIALS: usize = 200;
const LAW_TRIALS: usize = 200;
const LAW_TOL: f64 = 1e-9;
const SEQUENCES: usize = 5;
const N_MAX: usize = 1000;
const SUBLEVEL: f64 = 1.0;
const RAY_BOUND: f64 = 1e6;
const SEED: u64 = 0x7a5f;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransferError {
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error(transparent)]
    Space(#[from] ProbSpaceError),
    #[error("measure lacks the local property at block {}: {}", .0.block + 1, .0.detail)]
    NotLocal(Box<Counterexample>),
    #[error("block {block} value depends on the extension: {fill_zero} (fill 0) vs {fill_one} (fill 1)")]
    NotWellDefined {
        block: usize,
        fill_zero: f64,
        fill_one: f64,
    },
    #[error("block {block} is out of range for {blocks} blocks")]
    BlockRange { block: usize, blocks: usize },
    #[error("item {0} is not one of 1..=7")]
    UnknownItem(u8),
    #[error("at least one payoff is required")]
    NoPayoffs,
    #[error("tilt weights must be nonnegative, sum to 1 and match the block size")]
    BadWeights,
}

/// `ρ_j`: the classical measure at atom `j`, on the block with its
/// conditional probabilities.
pub struct ScalarRiskMeasure<'a> {
    rho: &'a dyn CondRiskMeasure,
    block: usize,
    cond_probs: Vec<f64>,
}

impl std::fmt::Debug for ScalarRiskMeasure<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarRiskMeasure")
            .field("measure", &self.rho.label())
            .field("block", &self.block)
            .field("cond_probs", &self.cond_probs)
            .finish()
    }
}

/// Restricts `ρ` to block `j` (0-based). Refused when the local property fails.
pub fn scalarize(rho: &dyn CondRiskMeasure, j: usize) -> Result<ScalarRiskMeasure<'_>, TransferError> {
    let space = rho.space();
    if j >= space.block_count() {
        return Err(TransferError::BlockRange {
            block: j + 1,
            blocks: space.block_count(),
        });
    }
    let local = check_axiom(rho, Axiom::LocalProperty, LOCAL_TRIALS, SEED)?;
    if let Some(c) = local.counterexample {
        return Err(TransferError::NotLocal(Box::new(c)));
    }
    Ok(ScalarRiskMeasure {
        rho,
        block: j,
        cond_probs: space.block_cond_probs(j),
    })
}

impl ScalarRiskMeasure<'_> {
    pub fn block(&self) -> usize {
        self.block
    }

    pub fn cond_probs(&self) -> &[f64] {
        &self.cond_probs
    }

    fn value(&self, xi: &[f64]) -> Result<f64, TransferError> {
        let x = self.rho.space().extend(self.block, xi, 0.0);
        Ok(self.rho.evaluate(&x)?.get(self.block))
    }

    /// `ρ_j(ξ)`, evaluated through two different extensions of `ξ` which
    /// must agree exactly.
    pub fn evaluate(&self, xi: &[f64]) -> Result<f64, TransferError> {
        let space = self.rho.space();
        if xi.len() != self.cond_probs.len() {
            return Err(ProbSpaceError::Length {
                expected: self.cond_probs.len(),
                got: xi.len(),
            }
            .into());
        }
        let fill_zero = self.value(xi)?;
        let fill_one = self.rho.evaluate(&space.extend(self.block, xi, 1.0))?.get(self.block);
        if fill_zero.to_bits() != fill_one.to_bits() {
            return Err(TransferError::NotWellDefined {
                block: self.block + 1,
                fill_zero,
                fill_one,
            });
        }
        Ok(fill_zero)
    }

    /// Classical penalty `sup_ξ { E[ξ y] − ρ_j(ξ) }` under the conditional
    /// probabilities, computed numerically from `ρ_j` alone.
    pub fn penalty(&self, y: &[f64]) -> PenaltyEstimate {
        if y.iter().any(|&v| v > 0.0) {
            return PenaltyEstimate {
                value: f64::INFINITY,
                divergent_ray: None,
                maximizer: None,
                final_range: 0.0,
            };
        }
        let eval = |xi: &[f64]| self.value(xi).unwrap_or(f64::NAN);
        numeric_penalty_block(&eval, &self.cond_probs, y, &PenaltySearch::default())
    }

    /// Seeded permutation test of law invariance under the conditional probabilities.
    pub fn law_invariant(&self, trials: usize, seed: u64) -> Result<bool, TransferError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = self.cond_probs.len();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..k {
            match groups.iter_mut().find(|g| self.cond_probs[g[0]] == self.cond_probs[i]) {
                Some(g) => g.push(i),
                None => groups.push(vec![i]),
            }
        }
        for _ in 0..trials {
            let xi: Vec<f64> = (0..k).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let mut permuted = xi.clone();
            for g in &groups {
                let mut perm = g.clone();
                perm.shuffle(&mut rng);
                for (&dst, &src) in g.iter().zip(&perm) {
                    permuted[dst] = xi[src];
                }
            }
            let (a, b) = (self.value(&xi)?, self.value(&permuted)?);
            if (a - b).abs() > LAW_TOL * a.abs().max(b.abs()).max(1.0) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `−E_Q[x | F]` where `Q` reweights block `block` by `weights` and agrees
/// with `P` elsewhere. Law invariant only off that block (for nonuniform weights).
pub fn tilted_neg_expectation(space: SpaceRef, block: usize, weights: Vec<f64>) -> Result<FnMeasure, TransferError> {
    if block >= space.block_count() {
        return Err(TransferError::BlockRange {
            block: block + 1,
            blocks: space.block_count(),
        });
    }
    let total: f64 = weights.iter().sum();
    if weights.len() != space.block(block).len() || weights.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(TransferError::BadWeights);
    }
    let label = format!("tilted_neg_expectation(block {})", block + 1);
    Ok(FnMeasure::new(space, label, move |s, x| {
        (0..s.block_count())
            .map(|j| {
                let cp = if j == block {
                    weights.clone()
                } else {
                    s.block_cond_probs(j)
                };
                -s.restrict(x, j).iter().zip(&cp).map(|(v, c)| v * c).sum::<f64>()
            })
            .collect()
    }))
}

fn preferred_method(rho: &dyn CondRiskMeasure) -> FenchelMethod {
    let k = rho.space().block(0).len();
    if rho.closed_form_penalty_block(0, &vec![-1.0; k]).is_some() {
        FenchelMethod::ClosedForm
    } else {
        FenchelMethod::GridRefine
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ItemReport {
    pub item: u8,
    pub property: &'static str,
    pub conditional: bool,
    pub classical: Vec<bool>,
    /// Atoms whose classical verdict holds.
    pub classical_holds_on: BoolElem,
    pub equivalence_holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qualifier: Option<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferReport {
    pub measure: String,
    pub tol: f64,
    pub items: Vec<ItemReport>,
    pub all_equivalences_hold: bool,
}

fn item(space: &FiniteProbSpace, n: u8, property: &'static str, conditional: bool, classical: Vec<bool>) -> ItemReport {
    let alg = space.algebra();
    let holds_on = alg.from_bits(
        classical
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .fold(0u64, |acc, (j, _)| acc | (1 << j)),
    );
    ItemReport {
        item: n,
        property,
        conditional,
        equivalence_holds: conditional == classical.iter().all(|&c| c),
        classical,
        classical_holds_on: holds_on,
        qualifier: None,
    }
}

fn abs_max(xs: &[&RandomVariable]) -> RandomVariable {
    let n = xs[0].len();
    RandomVariable::new(
        (0..n)
            .map(|i| xs.iter().map(|x| x.values()[i].abs()).fold(0.0, f64::max))
            .collect(),
    )
    .expect("finite")
}

fn sup_norm(x: &RandomVariable) -> f64 {
    x.values().iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Dual probe: `−1`, every vertex density blockwise, and two inadmissible scalings.
fn dual_probe(space: &FiniteProbSpace) -> Vec<RandomVariable> {
    let n = space.atom_count();
    let mut out = vec![RandomVariable::constant(n, -1.0)];
    for j in 0..space.block_count() {
        for &i in space.block(j) {
            let mut y = vec![-1.0; n];
            for &l in space.block(j) {
                y[l] = 0.0;
            }
            y[i] = -1.0 / space.cond_prob(i);
            out.push(RandomVariable::new(y).expect("finite"));
        }
    }
    out.push(RandomVariable::constant(n, -2.0));
    out.push(RandomVariable::constant(n, -0.5));
    out
}

struct Sequences {
    perturbed: Vec<(RandomVariable, RandomVariable, RandomVariable)>,
    constant: Vec<SequenceSpec>,
}

fn sequences(payoffs: &[RandomVariable]) -> Sequences {
    let len = payoffs.len();
    let count = len.min(SEQUENCES);
    let mut perturbed = Vec::with_capacity(count);
    let mut constant = Vec::with_capacity(count);
    for k in 0..count {
        let base = payoffs[k].clone();
        let (p1, p2) = (&payoffs[(k + 1) % len], &payoffs[(k + 2) % len]);
        let direction = p1.sub(&base);
        let dom = abs_max(&[&base, &base.add(&direction)]).map(|v| v + 1.0);
        perturbed.push((base.clone(), direction, dom));
        constant.push(SequenceSpec::EventuallyConstant {
            prefix: vec![p1.clone(), p2.clone()],
            dominator: abs_max(&[&base, p1, p2]),
            tail: base,
        });
    }
    Sequences { perturbed, constant }
}

fn convergence_item(
    rho: &dyn CondRiskMeasure,
    scalars: &[ScalarRiskMeasure<'_>],
    property: ConvergenceProperty,
    seqs: &Sequences,
    tol: f64,
) -> Result<(bool, Vec<bool>), TransferError> {
    let space = rho.space();
    let mut conditional = true;
    let mut classical = vec![true; scalars.len()];
    for spec in &seqs.constant {
        conditional &= check_convergence_property(rho, property, spec, tol)?.holds;
        if let SequenceSpec::EventuallyConstant { tail, .. } = spec {
            for (j, s) in scalars.iter().enumerate() {
                let xi = space.restrict(tail, j);
                let (limit, seq) = (s.value(&xi)?, s.value(&xi)?);
                classical[j] &= match property {
                    ConvergenceProperty::Fatou => seq >= limit,
                    ConvergenceProperty::Lebesgue => seq == limit,
                };
            }
        }
    }
    for (base, direction, dominator) in &seqs.perturbed {
        // A monotone cash-invariant measure moves by at most ‖x − y‖∞.
        let window = tol + sup_norm(direction) / (N_MAX / 2) as f64;
        let spec = SequenceSpec::Perturbed {
            base: base.clone(),
            direction: direction.clone(),
            n_max: N_MAX,
            dominator: dominator.clone(),
        };
        conditional &= check_convergence_property(rho, property, &spec, window)?.holds;
        for (j, s) in scalars.iter().enumerate() {
            let (b, d) = (space.restrict(base, j), space.restrict(direction, j));
            let term = |n: usize| -> Vec<f64> { b.iter().zip(&d).map(|(x, v)| x + v / n as f64).collect() };
            let limit = s.value(&b)?;
            classical[j] &= match property {
                ConvergenceProperty::Lebesgue => (s.value(&term(N_MAX))? - limit).abs() <= window,
                ConvergenceProperty::Fatou => {
                    let mut inf = f64::INFINITY;
                    for n in N_MAX / 2..=N_MAX {
                        inf = inf.min(s.value(&term(n))?);
                    }
                    inf >= limit - window
                }
            };
        }
    }
    Ok((conditional, classical))
}

fn representation_items(
    rho: &dyn CondRiskMeasure,
    scalars: &[ScalarRiskMeasure<'_>],
    payoffs: &[RandomVariable],
    tol: f64,
) -> Result<[(bool, Vec<bool>); 2], TransferError> {
    let space = rho.space();
    let m = space.block_count();
    let (mut rep_cond, mut att_cond) = (true, true);
    let (mut rep_cl, mut att_cl) = (vec![true; m], vec![true; m]);
    let cfg = DualSearchConfig::default();
    for x in payoffs {
        let direct = rho.evaluate(x)?;
        let rep = dual_representation(rho, x, &cfg)?;
        let gap_ok = (0..m).all(|j| (direct.get(j) - rep.value.get(j)).abs() <= tol);
        rep_cond &= gap_ok;
        att_cond &= gap_ok && rep.maximizer.is_admissible(space)?;
        // The conditional maximizer serves as a certificate on each atom:
        // sup_Q {E_Q[−ξ] − α_j(Q)} ≤ ρ_j(ξ) always, so equality at one density
        // proves representation and attainment classically.
        for (j, s) in scalars.iter().enumerate() {
            let xi = space.restrict(x, j);
            let yb = space.restrict(rep.maximizer.as_rv(), j);
            let q: Vec<f64> = yb.iter().zip(s.cond_probs()).map(|(y, c)| -y * c).collect();
            let density = q.iter().all(|&v| v >= 0.0) && (q.iter().sum::<f64>() - 1.0).abs() <= ADMISSIBLE_TOL;
            let alpha = s.penalty(&yb).value;
            let lower = -q.iter().zip(&xi).map(|(a, b)| a * b).sum::<f64>() - alpha;
            let ok = alpha.is_finite() && (s.value(&xi)? - lower).abs() <= tol;
            rep_cl[j] &= ok;
            att_cl[j] &= ok && density;
        }
    }
    Ok([(rep_cond, rep_cl), (att_cond, att_cl)])
}

fn compactness_item(
    rho: &dyn CondRiskMeasure,
    scalars: &[ScalarRiskMeasure<'_>],
) -> Result<(bool, Vec<bool>), TransferError> {
    let space = rho.space();
    let m = space.block_count();
    let probe = dual_probe(space);
    let f = penalty_function(rho, preferred_method(rho));
    let eta = ConditionalValue::constant(m, SUBLEVEL);
    let conditional = stable_sublevel_check(space, &f, &eta, &probe, SEED)?
        .compact_on
        .is_one();

    let mut classical = Vec::with_capacity(m);
    for (j, s) in scalars.iter().enumerate() {
        let mut points: Vec<Vec<f64>> = Vec::new();
        for p in &probe {
            let r = space.restrict(p, j);
            if !points.contains(&r) {
                points.push(r);
            }
        }
        let inside = |y: &[f64]| s.penalty(y).value <= SUBLEVEL;
        let members: Vec<&Vec<f64>> = points.iter().filter(|y| inside(y)).collect();
        let mut bounded = true;
        if let Some(base) = members.first() {
            let mut directions: Vec<Vec<f64>> = Vec::new();
            for (i, p) in members.iter().enumerate() {
                directions.push((*p).clone());
                for q in &members[i + 1..] {
                    directions.push(p.iter().zip(q.iter()).map(|(a, b)| a - b).collect());
                }
            }
            'dirs: for d in directions.iter().filter(|d| d.iter().any(|&v| v != 0.0)) {
                for sign in [1.0, -1.0] {
                    let mut t = 1.0;
                    let mut escaped = false;
                    while t <= RAY_BOUND {
                        let y: Vec<f64> = base.iter().zip(d).map(|(b, v)| b + sign * t * v).collect();
                        if !inside(&y) {
                            escaped = true;
                            break;
                        }
                        t *= 2.0;
                    }
                    if !escaped {
                        bounded = false;
                        break 'dirs;
                    }
                }
            }
        }
        classical.push(bounded);
    }
    Ok((conditional, classical))
}

/// Cross-checks the requested items (1..=7) on both sides:
/// 1 representability, 2 attainment, 3 Fatou, 4 Lebesgue, 5 law invariance,
/// 6 lower semicontinuity, 7 stable compactness of penalty sublevels.
pub fn transfer_verify(
    rho: &dyn CondRiskMeasure,
    items: &[u8],
    payoffs: &[RandomVariable],
    tol: f64,
) -> Result<TransferReport, TransferError> {
    if payoffs.is_empty() {
        return Err(TransferError::NoPayoffs);
    }
    if let Some(&bad) = items.iter().find(|&&i| !(1..=7).contains(&i)) {
        return Err(TransferError::UnknownItem(bad));
    }
    let space = rho.space().clone();
    for x in payoffs {
        space.check_len(x.len())?;
    }
    let m = space.block_count();
    let scalars = (0..m).map(|j| scalarize(rho, j)).collect::<Result<Vec<_>, _>>()?;
    let mut wanted: Vec<u8> = items.to_vec();
    wanted.sort_unstable();
    wanted.dedup();

    let representation = if wanted.iter().any(|&i| i <= 2) {
        Some(representation_items(rho, &scalars, payoffs, tol)?)
    } else {
        None
    };
    let seqs = sequences(payoffs);
    let mut reports = Vec::with_capacity(wanted.len());
    for &n in &wanted {
        let report = match n {
            1 | 2 => {
                let (c, cl) = representation.as_ref().expect("computed above")[n as usize - 1].clone();
                let name = if n == 1 { "representable" } else { "supremum attained" };
                item(&space, n, name, c, cl)
            }
            3 => {
                let (c, cl) = convergence_item(rho, &scalars, ConvergenceProperty::Fatou, &seqs, tol)?;
                item(&space, n, "fatou", c, cl)
            }
            4 => {
                let (c, cl) = convergence_item(rho, &scalars, ConvergenceProperty::Lebesgue, &seqs, tol)?;
                item(&space, n, "lebesgue", c, cl)
            }
            5 => {
                let c = check_axiom(rho, Axiom::ConditionalLawInvariance, LAW_TRIALS, SEED)?.passed;
                let cl = scalars
                    .iter()
                    .map(|s| s.law_invariant(LAW_TRIALS, SEED))
                    .collect::<Result<Vec<_>, _>>()?;
                item(&space, n, "law invariant", c, cl)
            }
            6 => {
                let mut r = item(&space, n, "lower semicontinuous", true, vec![true; m]);
                r.qualifier = Some("vacuous at finite scale");
                r
            }
            7 => {
                let (c, cl) = compactness_item(rho, &scalars)?;
                let mut r = item(&space, n, "penalty sublevels stably compact", c, cl);
                r.qualifier = Some("at probe resolution");
                r
            }
            _ => unreachable!("checked above"),
        };
        reports.push(report);
    }
    Ok(TransferReport {
        measure: rho.label(),
        tol,
        all_equivalences_hold: reports.iter().all(|r| r.equivalence_holds),
        items: reports,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FenchelEntry {
    pub y: DualVariable,
    #[serde(serialize_with = "crate::report::ext_vec")]
    pub conditional: Vec<f64>,
    #[serde(serialize_with = "crate::report::ext_vec")]
    pub classical: Vec<f64>,
    pub agree: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FenchelConsistency {
    pub measure: String,
    pub tol: f64,
    pub entries: Vec<FenchelEntry>,
    /// Largest deviation over blocks where both sides are finite.
    pub max_deviation: f64,
    /// Blocks where exactly one side is `+∞`.
    pub infinity_mismatches: usize,
    pub all_agree: bool,
}

/// Blockwise `ρ^#(y)` against the classical penalty of each `ρ_j` at the
/// block restriction of `y`.
pub fn fenchel_consistency(
    rho: &dyn CondRiskMeasure,
    duals: &[DualVariable],
    tol: f64,
) -> Result<FenchelConsistency, TransferError> {
    let space = rho.space();
    let m = space.block_count();
    let scalars = (0..m).map(|j| scalarize(rho, j)).collect::<Result<Vec<_>, _>>()?;
    let method = preferred_method(rho);
    let mut entries = Vec::with_capacity(duals.len());
    let mut max_deviation: f64 = 0.0;
    let mut infinity_mismatches = 0;
    for y in duals {
        let conditional = fenchel(rho, y, method)?;
        let classical: Vec<f64> = scalars
            .iter()
            .enumerate()
            .map(|(j, s)| s.penalty(&space.restrict(y.as_rv(), j)).value)
            .collect();
        let mut agree = true;
        for (&c, &s) in conditional.values().iter().zip(&classical) {
            match (c.is_finite(), s.is_finite()) {
                (true, true) => {
                    max_deviation = max_deviation.max((c - s).abs());
                    agree &= (c - s).abs() <= tol;
                }
                (false, false) => agree &= c == s,
                _ => {
                    infinity_mismatches += 1;
                    agree = false;
                }
            }
        }
        entries.push(FenchelEntry {
            y: y.clone(),
            conditional: conditional.values().to_vec(),
            classical,
            agree,
        });
    }
    Ok(FenchelConsistency {
        measure: rho.label(),
        tol,
        all_agree: entries.iter().all(|e| e.agree),
        entries,
        max_deviation,
        infinity_mismatches,
    })
}
