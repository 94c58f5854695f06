//! Conditional risk measures `ρ: L^0(E) → L^0(F)`: the trait, the built-in
//! catalog, and seeded checkers for the axioms and convergence properties.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::boolalg::BoolElem;
use crate::probspace::{ConditionalValue, FiniteProbSpace, ProbSpaceError, RandomVariable, SpaceRef};

/// Tolerance for treating a dual variable as a conditional density.
pub const ADMISSIBLE_TOL: f64 = 1e-10;
const AXIOM_TOL: f64 = 1e-9;
const PAYOFF_RANGE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error(transparent)]
    Space(#[from] ProbSpaceError),
    #[error("measure is defined on a different space")]
    SpaceMismatch,
    #[error("{name} must be strictly positive blockwise (block {block} has {value})")]
    Parameter {
        name: &'static str,
        block: usize,
        value: f64,
    },
    #[error("lambda must lie in (0, 1] (block {block} has {value})")]
    Lambda { block: usize, value: f64 },
    #[error("measure returned a non-finite value {value} at block {block}")]
    NonFiniteValue { block: usize, value: f64 },
    #[error("sequence is not dominated: |x_{n}[{atom}]| = {value} exceeds the dominator {bound}")]
    Undominated {
        n: usize,
        atom: usize,
        value: f64,
        bound: f64,
    },
    #[error("sequence specification is empty")]
    EmptySequence,
    #[error("trials must be at least 1")]
    NoTrials,
}

/// A conditional risk measure on a fixed finite space.
///
/// `evaluate` must be side-effect-free. Implementors that know their
/// blockwise structure can override [`CondRiskMeasure::evaluate_block`]
/// and supply closed-form penalties.
pub trait CondRiskMeasure: Send + Sync {
    fn space(&self) -> &SpaceRef;

    fn label(&self) -> String;

    fn evaluate(&self, x: &RandomVariable) -> Result<ConditionalValue, RiskError>;

    /// Block-`j` value of `ρ` at any payoff equal to `xi` on block `j`.
    /// The default extends by 0, which is sound for measures with the local property.
    fn evaluate_block(&self, j: usize, xi: &[f64]) -> Result<f64, RiskError> {
        let x = self.space().extend(j, xi, 0.0);
        Ok(self.evaluate(&x)?.get(j))
    }

    /// Closed-form block value of the penalty `ρ^#` at the block restriction of `y`.
    fn closed_form_penalty_block(&self, _j: usize, _y_block: &[f64]) -> Option<f64> {
        None
    }

    fn closed_form_penalty(&self, y: &RandomVariable) -> Option<ConditionalValue> {
        let space = self.space();
        let values: Option<Vec<f64>> = (0..space.block_count())
            .map(|j| self.closed_form_penalty_block(j, &space.restrict(y, j)))
            .collect();
        values.map(|v| ConditionalValue::new(v).expect("penalties are never NaN"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Builtin {
    NegExpectation,
    WorstCase,
    Entropic { gamma: Vec<f64> },
    Avar { lambda: Vec<f64> },
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NegExpectation => "neg_expectation",
            Self::WorstCase => "worst_case",
            Self::Entropic { .. } => "entropic",
            Self::Avar { .. } => "avar",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuiltinMeasure {
    space: SpaceRef,
    kind: Builtin,
}

impl BuiltinMeasure {
    /// `ρ(x) = −E[x|F]`.
    pub fn neg_expectation(space: SpaceRef) -> Self {
        Self {
            space,
            kind: Builtin::NegExpectation,
        }
    }

    /// `ρ(x) = esssup(−x | F)`.
    pub fn worst_case(space: SpaceRef) -> Self {
        Self {
            space,
            kind: Builtin::WorstCase,
        }
    }

    /// `ρ(x) = γ^{-1} log E[exp(−γx) | F]`.
    pub fn entropic(space: SpaceRef, gamma: &ConditionalValue) -> Result<Self, RiskError> {
        space.check_block_len(gamma.len())?;
        for (block, &value) in gamma.values().iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(RiskError::Parameter {
                    name: "gamma",
                    block,
                    value,
                });
            }
        }
        Ok(Self {
            space,
            kind: Builtin::Entropic {
                gamma: gamma.values().to_vec(),
            },
        })
    }

    /// Average of the worst `λ`-tail of `−x` under the conditional law.
    pub fn avar(space: SpaceRef, lambda: &ConditionalValue) -> Result<Self, RiskError> {
        space.check_block_len(lambda.len())?;
        for (block, &value) in lambda.values().iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) {
                return Err(RiskError::Lambda { block, value });
            }
        }
        Ok(Self {
            space,
            kind: Builtin::Avar {
                lambda: lambda.values().to_vec(),
            },
        })
    }

    pub fn kind(&self) -> &Builtin {
        &self.kind
    }

    /// The four built-ins with unit parameters (`γ = 1`, `λ = 1/2`).
    pub fn catalog(space: &SpaceRef) -> Vec<BuiltinMeasure> {
        let m = space.block_count();
        vec![
            Self::neg_expectation(space.clone()),
            Self::worst_case(space.clone()),
            Self::entropic(space.clone(), &ConditionalValue::constant(m, 1.0)).expect("valid"),
            Self::avar(space.clone(), &ConditionalValue::constant(m, 0.5)).expect("valid"),
        ]
    }

    fn block_value(&self, j: usize, cp: &[f64], xi: &[f64]) -> f64 {
        match &self.kind {
            Builtin::NegExpectation => -cp.iter().zip(xi).map(|(c, x)| c * x).sum::<f64>(),
            Builtin::WorstCase => xi.iter().map(|x| -x).fold(f64::NEG_INFINITY, f64::max),
            Builtin::Entropic { gamma } => {
                let g = gamma[j];
                let m = xi.iter().map(|x| -g * x).fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = cp.iter().zip(xi).map(|(c, x)| c * (-g * x - m).exp()).sum();
                (m + s.ln()) / g
            }
            Builtin::Avar { lambda } => avar_block(cp, xi, lambda[j]),
        }
    }
}

/// Tail average with the boundary atom split fractionally. Weights are
/// assigned in loss order and summed in index order, so `λ = 1` reproduces
/// `−E[x|F]` bit for bit.
fn avar_block(cp: &[f64], xi: &[f64], lambda: f64) -> f64 {
    let mut order: Vec<usize> = (0..xi.len()).collect();
    order.sort_by(|&a, &b| xi[a].total_cmp(&xi[b]));
    let mut weights = vec![0.0; xi.len()];
    let mut remaining = lambda;
    for &i in &order {
        if remaining <= 0.0 {
            break;
        }
        let w = if cp[i] <= remaining || (cp[i] - remaining) <= 1e-12 * cp[i] {
            cp[i]
        } else {
            remaining
        };
        weights[i] = w;
        remaining -= w;
    }
    -weights.iter().zip(xi).map(|(w, x)| w * x).sum::<f64>() / lambda
}

/// Pointwise constraints are exact; only the conditional mean carries the
/// tolerance, since pairwise mass transfers move it by rounding alone.
fn is_admissible_block(cp: &[f64], y: &[f64]) -> bool {
    y.iter().all(|&v| v.is_finite() && v <= 0.0)
        && (cp.iter().zip(y).map(|(c, v)| c * v).sum::<f64>() + 1.0).abs() <= ADMISSIBLE_TOL
}

impl CondRiskMeasure for BuiltinMeasure {
    fn space(&self) -> &SpaceRef {
        &self.space
    }

    fn label(&self) -> String {
        match &self.kind {
            Builtin::Entropic { gamma } => format!("entropic(gamma={gamma:?})"),
            Builtin::Avar { lambda } => format!("avar(lambda={lambda:?})"),
            k => k.name().to_string(),
        }
    }

    fn evaluate(&self, x: &RandomVariable) -> Result<ConditionalValue, RiskError> {
        self.space.check_len(x.len())?;
        let values = (0..self.space.block_count())
            .map(|j| self.block_value(j, &self.space.block_cond_probs(j), &self.space.restrict(x, j)))
            .collect();
        Ok(ConditionalValue::finite(values)?)
    }

    fn evaluate_block(&self, j: usize, xi: &[f64]) -> Result<f64, RiskError> {
        if xi.len() != self.space.block(j).len() {
            return Err(ProbSpaceError::Length {
                expected: self.space.block(j).len(),
                got: xi.len(),
            }
            .into());
        }
        Ok(self.block_value(j, &self.space.block_cond_probs(j), xi))
    }

    fn closed_form_penalty_block(&self, j: usize, y: &[f64]) -> Option<f64> {
        let cp = self.space.block_cond_probs(j);
        let admissible = is_admissible_block(&cp, y);
        let value = match &self.kind {
            Builtin::NegExpectation => {
                if y.iter().all(|&v| v == -1.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Builtin::WorstCase => {
                if admissible {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Builtin::Avar { lambda } => {
                if admissible && y.iter().all(|v| -v <= 1.0 / lambda[j]) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Builtin::Entropic { gamma } => {
                if admissible {
                    let s: f64 = cp
                        .iter()
                        .zip(y)
                        .map(|(c, v)| {
                            let d = (-v).max(0.0);
                            if d == 0.0 {
                                0.0
                            } else {
                                c * d * d.ln()
                            }
                        })
                        .sum();
                    s / gamma[j]
                } else {
                    f64::INFINITY
                }
            }
        };
        Some(value)
    }
}

type Evaluator = Arc<dyn Fn(&FiniteProbSpace, &RandomVariable) -> Vec<f64> + Send + Sync>;

/// A user-supplied measure given by a closure returning one value per block.
#[derive(Clone)]
pub struct FnMeasure {
    space: SpaceRef,
    label: String,
    f: Evaluator,
}

impl fmt::Debug for FnMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnMeasure").field("label", &self.label).finish()
    }
}

impl FnMeasure {
    pub fn new(
        space: SpaceRef,
        label: impl Into<String>,
        f: impl Fn(&FiniteProbSpace, &RandomVariable) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            space,
            label: label.into(),
            f: Arc::new(f),
        }
    }
}

impl CondRiskMeasure for FnMeasure {
    fn space(&self) -> &SpaceRef {
        &self.space
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn evaluate(&self, x: &RandomVariable) -> Result<ConditionalValue, RiskError> {
        self.space.check_len(x.len())?;
        let values = (self.f)(&self.space, x);
        self.space.check_block_len(values.len())?;
        if let Some((block, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(RiskError::NonFiniteValue { block, value });
        }
        Ok(ConditionalValue::finite(values)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    Convexity,
    Monotonicity,
    CashInvariance,
    LocalProperty,
    ConditionalLawInvariance,
}

impl Axiom {
    pub const ALL: [Axiom; 5] = [
        Axiom::Convexity,
        Axiom::Monotonicity,
        Axiom::CashInvariance,
        Axiom::LocalProperty,
        Axiom::ConditionalLawInvariance,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "convexity" => Self::Convexity,
            "monotonicity" => Self::Monotonicity,
            "cash_invariance" => Self::CashInvariance,
            "local_property" => Self::LocalProperty,
            "conditional_law_invariance" => Self::ConditionalLawInvariance,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub trial: usize,
    pub block: usize,
    pub x: RandomVariable,
    pub y: Option<RandomVariable>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub measure: String,
    pub trials: usize,
    pub seed: u64,
    pub violations: usize,
    pub passed: bool,
    pub counterexample: Option<Counterexample>,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= AXIOM_TOL * a.abs().max(b.abs()).max(1.0)
}

fn le_tol(a: f64, b: f64) -> bool {
    a <= b + AXIOM_TOL * a.abs().max(b.abs()).max(1.0)
}

fn random_rv(rng: &mut ChaCha8Rng, n: usize) -> RandomVariable {
    RandomVariable::new((0..n).map(|_| rng.gen_range(-PAYOFF_RANGE..PAYOFF_RANGE)).collect()).expect("finite")
}

/// Permutes atoms within each block among atoms of equal probability, which
/// preserves the conditional law.
fn law_preserving_shuffle(space: &FiniteProbSpace, x: &RandomVariable, rng: &mut ChaCha8Rng) -> RandomVariable {
    let mut out = x.values().to_vec();
    for block in space.blocks() {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &i in block {
            match groups.iter_mut().find(|g| space.probs()[g[0]] == space.probs()[i]) {
                Some(g) => g.push(i),
                None => groups.push(vec![i]),
            }
        }
        for g in groups {
            let mut perm = g.clone();
            perm.shuffle(rng);
            for (&dst, &src) in g.iter().zip(&perm) {
                out[dst] = x.values()[src];
            }
        }
    }
    RandomVariable::new(out).expect("finite")
}

/// Seeded check of one axiom. Violations are report content; the first
/// counterexample (by trial index) is retained.
pub fn check_axiom(
    rho: &dyn CondRiskMeasure,
    axiom: Axiom,
    trials: usize,
    seed: u64,
) -> Result<AxiomReport, RiskError> {
    if trials == 0 {
        return Err(RiskError::NoTrials);
    }
    let space = rho.space().clone();
    let (n, m) = (space.atom_count(), space.block_count());
    let alg = space.algebra();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut first: Option<Counterexample> = None;

    for trial in 0..trials {
        let x = random_rv(&mut rng, n);
        let found: Option<(usize, Option<RandomVariable>, String)> = match axiom {
            Axiom::Convexity => {
                let y = random_rv(&mut rng, n);
                let eta = ConditionalValue::finite((0..m).map(|_| rng.gen_range(0.0..=1.0)).collect())?;
                let e = space.lift(&eta)?;
                let z = e.mul(&x).add(&e.map(|t| 1.0 - t).mul(&y));
                let (rx, ry, rz) = (rho.evaluate(&x)?, rho.evaluate(&y)?, rho.evaluate(&z)?);
                (0..m).find_map(|j| {
                    let t = eta.get(j);
                    let rhs = t * rx.get(j) + (1.0 - t) * ry.get(j);
                    (!le_tol(rz.get(j), rhs)).then(|| {
                        (
                            j,
                            Some(y.clone()),
                            format!("eta = {t}: rho(mix) = {} > {rhs}", rz.get(j)),
                        )
                    })
                })
            }
            Axiom::Monotonicity => {
                let bump = RandomVariable::new((0..n).map(|_| rng.gen_range(0.0..PAYOFF_RANGE)).collect())?;
                let y = x.add(&bump);
                let (rx, ry) = (rho.evaluate(&x)?, rho.evaluate(&y)?);
                (0..m).find_map(|j| {
                    (!le_tol(ry.get(j), rx.get(j))).then(|| {
                        (
                            j,
                            Some(y.clone()),
                            format!("x <= y but rho(y) = {} > rho(x) = {}", ry.get(j), rx.get(j)),
                        )
                    })
                })
            }
            Axiom::CashInvariance => {
                let eta =
                    ConditionalValue::finite((0..m).map(|_| rng.gen_range(-PAYOFF_RANGE..PAYOFF_RANGE)).collect())?;
                let y = x.add(&space.lift(&eta)?);
                let (rx, ry) = (rho.evaluate(&x)?, rho.evaluate(&y)?);
                (0..m).find_map(|j| {
                    let want = rx.get(j) - eta.get(j);
                    (!close(ry.get(j), want)).then(|| {
                        (
                            j,
                            Some(y.clone()),
                            format!("rho(x + eta) = {} but rho(x) - eta = {want}", ry.get(j)),
                        )
                    })
                })
            }
            Axiom::LocalProperty => {
                let bits = rng.gen_range(0..=alg.one().bits());
                let a: BoolElem = alg.from_bits(bits);
                let y = space.indicator(a).mul(&x);
                let (rx, ry) = (rho.evaluate(&x)?, rho.evaluate(&y)?);
                a.atom_indices().into_iter().find_map(|j| {
                    (!close(rx.get(j), ry.get(j))).then(|| {
                        (
                            j,
                            Some(y.clone()),
                            format!("a = {a}: rho(x) = {} but rho(1_a x) = {}", rx.get(j), ry.get(j)),
                        )
                    })
                })
            }
            Axiom::ConditionalLawInvariance => {
                let y = law_preserving_shuffle(&space, &x, &mut rng);
                let (rx, ry) = (rho.evaluate(&x)?, rho.evaluate(&y)?);
                (0..m).find_map(|j| {
                    (!close(rx.get(j), ry.get(j))).then(|| {
                        (
                            j,
                            Some(y.clone()),
                            format!("same conditional law but rho = {} vs {}", rx.get(j), ry.get(j)),
                        )
                    })
                })
            }
        };
        if let Some((block, y, detail)) = found {
            violations += 1;
            if first.is_none() {
                first = Some(Counterexample {
                    trial,
                    block,
                    x: x.clone(),
                    y,
                    detail,
                });
            }
        }
    }
    Ok(AxiomReport {
        axiom,
        measure: rho.label(),
        trials,
        seed,
        violations,
        passed: violations == 0,
        counterexample: first,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceProperty {
    Fatou,
    Lebesgue,
}

/// A finitely describable dominated sequence converging to a known limit.
#[derive(Debug, Clone)]
pub enum SequenceSpec {
    /// `x_1, …, x_k` = `prefix`, then `x_n = tail` for `n > k`; the limit is `tail`.
    EventuallyConstant {
        prefix: Vec<RandomVariable>,
        tail: RandomVariable,
        dominator: RandomVariable,
    },
    /// `x_n = base + direction / n` for `n = 1..=n_max`; the limit is `base`.
    Perturbed {
        base: RandomVariable,
        direction: RandomVariable,
        n_max: usize,
        dominator: RandomVariable,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub property: ConvergenceProperty,
    pub exact: bool,
    pub limit_value: ConditionalValue,
    /// `liminf` (Fatou) or `lim` (Lebesgue) of `ρ(x_n)`, as computed.
    pub sequence_value: ConditionalValue,
    pub max_deviation: f64,
    pub extrapolation_order: Option<f64>,
    pub holds_on: BoolElem,
    pub holds: bool,
}

fn check_dominated(n: usize, x: &RandomVariable, dom: &RandomVariable) -> Result<(), RiskError> {
    for (atom, (&v, &b)) in x.values().iter().zip(dom.values()).enumerate() {
        if v.abs() > b {
            return Err(RiskError::Undominated {
                n,
                atom: atom + 1,
                value: v.abs(),
                bound: b,
            });
        }
    }
    Ok(())
}

/// Checks Fatou (`liminf ρ(x_n) ≥ ρ(x)`) or Lebesgue (`lim ρ(x_n) = ρ(x)`)
/// along a finitely described sequence. Eventually-constant sequences give
/// exact verdicts; truncated ones are judged at `tol`.
pub fn check_convergence_property(
    rho: &dyn CondRiskMeasure,
    property: ConvergenceProperty,
    seq: &SequenceSpec,
    tol: f64,
) -> Result<ConvergenceReport, RiskError> {
    let space = rho.space().clone();
    let alg = space.algebra();
    match seq {
        SequenceSpec::EventuallyConstant {
            prefix,
            tail,
            dominator,
        } => {
            space.check_len(tail.len())?;
            space.check_len(dominator.len())?;
            for (k, x) in prefix.iter().enumerate() {
                space.check_len(x.len())?;
                check_dominated(k + 1, x, dominator)?;
            }
            check_dominated(prefix.len() + 1, tail, dominator)?;
            let limit = rho.evaluate(tail)?;
            let tail_value = rho.evaluate(tail)?;
            let holds_on = match property {
                ConvergenceProperty::Fatou => limit.le_blocks(&tail_value, alg),
                ConvergenceProperty::Lebesgue => limit.eq_blocks(&tail_value, alg),
            };
            Ok(ConvergenceReport {
                property,
                exact: true,
                max_deviation: limit.max_abs_diff(&tail_value),
                limit_value: limit,
                sequence_value: tail_value,
                extrapolation_order: None,
                holds: holds_on.is_one(),
                holds_on,
            })
        }
        SequenceSpec::Perturbed {
            base,
            direction,
            n_max,
            dominator,
        } => {
            if *n_max == 0 {
                return Err(RiskError::EmptySequence);
            }
            space.check_len(base.len())?;
            space.check_len(direction.len())?;
            space.check_len(dominator.len())?;
            let term = |n: usize| base.add(&direction.scale(1.0 / n as f64));
            check_dominated(1, &term(1), dominator)?;
            check_dominated(*n_max, base, dominator)?;
            let limit = rho.evaluate(base)?;
            let last = rho.evaluate(&term(*n_max))?;
            let m = space.block_count();
            let sequence_value = match property {
                ConvergenceProperty::Lebesgue => last.clone(),
                ConvergenceProperty::Fatou => {
                    let mut inf = last.values().to_vec();
                    for n in (*n_max / 2).max(1)..*n_max {
                        let v = rho.evaluate(&term(n))?;
                        for (lo, &x) in inf.iter_mut().zip(v.values()) {
                            *lo = lo.min(x);
                        }
                    }
                    ConditionalValue::finite(inf)?
                }
            };
            let mut holds_on = alg.zero();
            for j in 0..m {
                let (s, l) = (sequence_value.get(j), limit.get(j));
                let ok = match property {
                    ConvergenceProperty::Lebesgue => (s - l).abs() <= tol,
                    ConvergenceProperty::Fatou => s >= l - tol,
                };
                if ok {
                    holds_on = holds_on | alg.atom(j).expect("in range");
                }
            }
            let err_at = |n: usize| -> Result<f64, RiskError> { Ok(rho.evaluate(&term(n))?.max_abs_diff(&limit)) };
            let e_full = limit.max_abs_diff(&last);
            let extrapolation_order = if *n_max >= 2 {
                let e_half = err_at(*n_max / 2)?;
                (e_full > 0.0 && e_half > 0.0 && e_full.is_finite()).then(|| (e_half / e_full).log2())
            } else {
                None
            };
            Ok(ConvergenceReport {
                property,
                exact: false,
                limit_value: limit,
                max_deviation: sequence_value.max_abs_diff(&rho.evaluate(base)?),
                sequence_value,
                extrapolation_order,
                holds: holds_on.is_one(),
                holds_on,
            })
        }
    }
}
