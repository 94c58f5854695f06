//! Module Fenchel transform `ρ^#(y) = esssup_x { E[xy|F] − ρ(x) }`, the dual
//! representation over conditional densities, σ_s base neighbourhoods and
//! stable sublevel sets, all at finite scale.
//!
//! Every computation factorizes over the F-blocks, so searches run block by
//! block on the conditional probabilities of that block.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::boolalg::{BoolElem, PartitionOfUnity};
use crate::probspace::{ConditionalValue, FiniteProbSpace, ProbSpaceError, RandomVariable};
use crate::riskcore::{CondRiskMeasure, RiskError, ADMISSIBLE_TOL};

/// Slopes below this are treated as flat by the divergence certificate.
pub const SLOPE_MIN: f64 = 1e-10;
const RAY_DOUBLINGS: usize = 40;
const LINEAR_RUN: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DualError {
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Space(#[from] ProbSpaceError),
    #[error("dual variable entry {index} = {value} must be finite and ≤ 0")]
    Positive { index: usize, value: f64 },
    #[error("measure {0} has no closed-form penalty")]
    NoClosedForm(String),
    #[error("F_{0} is empty")]
    EmptyFamily(usize),
    #[error("expected {expected} families (one per part), got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("eps must be strictly positive (block {block} has {value})")]
    NonPositiveEps { block: usize, value: f64 },
    #[error("payoff list is empty")]
    NoPayoffs,
    #[error("probe set is empty")]
    EmptyProbe,
}

/// `y ≤ 0` per sample atom; admissible on the blocks where `E[y|F] = −1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualVariable(RandomVariable);

impl DualVariable {
    pub fn new(values: Vec<f64>) -> Result<Self, DualError> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v <= 0.0)) {
            return Err(DualError::Positive { index, value });
        }
        Ok(Self(RandomVariable::new(values)?))
    }

    /// `y = −d` for a conditional density `d ≥ 0`.
    pub fn from_density(d: &RandomVariable) -> Result<Self, DualError> {
        Self::new(d.values().iter().map(|v| -v).collect())
    }

    pub fn minus_one(n: usize) -> Self {
        Self(RandomVariable::constant(n, -1.0))
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn as_rv(&self) -> &RandomVariable {
        &self.0
    }

    /// Blocks on which `E[y|F] = −1` within `1e-10`.
    pub fn admissible_on(&self, space: &FiniteProbSpace) -> Result<BoolElem, DualError> {
        let e = space.cond_expect(&self.0)?;
        let alg = space.algebra();
        Ok(alg.from_bits(
            (0..space.block_count())
                .filter(|&j| (e.get(j) + 1.0).abs() <= ADMISSIBLE_TOL)
                .fold(0u64, |acc, j| acc | (1 << j)),
        ))
    }

    pub fn is_admissible(&self, space: &FiniteProbSpace) -> Result<bool, DualError> {
        Ok(self.admissible_on(space)?.is_one())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FenchelMethod {
    ClosedForm,
    GridRefine,
}

#[derive(Debug, Clone, Copy)]
pub struct PenaltySearch {
    pub initial_range: f64,
    pub max_range: f64,
    pub min_step: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PenaltySearch {
    fn default() -> Self {
        Self {
            initial_range: 1.0,
            max_range: 1048576.0,
            min_step: 1e-9,
            tol: 1e-12,
            max_iters: 200_000,
        }
    }
}

/// Numeric penalty on one block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltyEstimate {
    #[serde(serialize_with = "crate::report::ext")]
    pub value: f64,
    /// Direction along which linear growth certified `+∞`.
    pub divergent_ray: Option<Vec<f64>>,
    pub maximizer: Option<Vec<f64>>,
    pub final_range: f64,
}

fn normalized(v: Vec<f64>) -> Option<Vec<f64>> {
    let top = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    (top > 0.0).then(|| v.into_iter().map(|x| x / top).collect())
}

/// Doubling along `t·d`; `true` when the last [`LINEAR_RUN`] slope ratios
/// stay at least 1/2 with slopes above [`SLOPE_MIN`], i.e. the increments
/// over successive doublings do not shrink.
fn ray_diverges(h: &dyn Fn(&[f64]) -> f64, d: &[f64]) -> bool {
    let at = |t: f64| -> f64 {
        let p: Vec<f64> = d.iter().map(|v| t * v).collect();
        h(&p)
    };
    let mut t = 1.0;
    let mut prev = at(t);
    let mut prev_slope: Option<f64> = None;
    let mut run = 0;
    for _ in 0..RAY_DOUBLINGS {
        let next = at(2.0 * t);
        let slope = (next - prev) / t;
        if slope.is_nan() || slope <= SLOPE_MIN {
            return false;
        }
        match prev_slope {
            Some(p) if slope >= 0.5 * p => run += 1,
            Some(_) => run = 0,
            None => {}
        }
        prev_slope = Some(slope);
        prev = next;
        t *= 2.0;
    }
    run >= LINEAR_RUN
}

fn pattern_search_box(
    h: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    range: f64,
    dirs: &[Vec<f64>],
    cfg: &PenaltySearch,
) -> (Vec<f64>, f64) {
    let clamp = |v: f64| v.clamp(-range, range);
    let mut x: Vec<f64> = start.iter().map(|&v| clamp(v)).collect();
    let mut value = h(&x);
    let mut step = range / 2.0;
    let mut iters = 0;
    while step >= cfg.min_step && iters < cfg.max_iters {
        let mut improved = false;
        for d in dirs {
            let cand: Vec<f64> = x.iter().zip(d).map(|(a, b)| clamp(a + step * b)).collect();
            if cand == x {
                continue;
            }
            let v = h(&cand);
            if v > value {
                x = cand;
                value = v;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
        iters += 1;
    }
    (x, value)
}

/// `sup_ξ { Σ_i c_i ξ_i y_i − ρ_B(ξ) }` for a single block with conditional
/// probabilities `cp`, where `rho_block` evaluates the block risk.
///
/// Rays along `±1`, `±e_i` and `±(y+1)` are tested for linear growth first,
/// which certifies `+∞`. Otherwise a pattern search runs in boxes `[−R, R]^k`
/// with `R` doubling until the improvement falls below `tol`.
pub fn numeric_penalty_block(
    rho_block: &dyn Fn(&[f64]) -> f64,
    cp: &[f64],
    y: &[f64],
    cfg: &PenaltySearch,
) -> PenaltyEstimate {
    let k = cp.len();
    let h = |xi: &[f64]| -> f64 {
        let pairing: f64 = cp.iter().zip(xi).zip(y).map(|((c, a), b)| c * a * b).sum();
        pairing - rho_block(xi)
    };

    let mut rays: Vec<Vec<f64>> = Vec::new();
    rays.push(vec![1.0; k]);
    rays.extend((0..k).map(|i| (0..k).map(|l| if l == i { 1.0 } else { 0.0 }).collect()));
    if let Some(v) = normalized(y.iter().map(|v| v + 1.0).collect()) {
        rays.push(v);
    }
    let rays: Vec<Vec<f64>> = rays
        .into_iter()
        .flat_map(|d| {
            let neg = d.iter().map(|v| -v).collect();
            [d, neg]
        })
        .collect();
    for d in &rays {
        if ray_diverges(&h, d) {
            return PenaltyEstimate {
                value: f64::INFINITY,
                divergent_ray: Some(d.clone()),
                maximizer: None,
                final_range: 0.0,
            };
        }
    }

    let mut dirs: Vec<Vec<f64>> = (0..k)
        .flat_map(|i| {
            let e: Vec<f64> = (0..k).map(|l| if l == i { 1.0 } else { 0.0 }).collect();
            let neg = e.iter().map(|v| -v).collect();
            [e, neg]
        })
        .collect();
    if k > 1 {
        dirs.push(vec![1.0; k]);
        dirs.push(vec![-1.0; k]);
    }

    let mut best_x = vec![0.0; k];
    let mut best = h(&best_x);
    let mut range = cfg.initial_range;
    let mut prev_slope: Option<f64> = None;
    let mut run = 0;
    let mut rounds = 0;
    loop {
        let (x, v) = pattern_search_box(&h, &best_x, range, &dirs, cfg);
        let inc = v - best;
        if v > best {
            best = v;
            best_x = x;
        }
        rounds += 1;
        if rounds >= 2 && inc <= cfg.tol * best.abs().max(1.0) {
            break;
        }
        let slope = inc / range;
        match prev_slope {
            Some(p) if slope > SLOPE_MIN && slope >= 0.5 * p => run += 1,
            _ => run = 0,
        }
        if run >= LINEAR_RUN {
            return PenaltyEstimate {
                value: f64::INFINITY,
                divergent_ray: normalized(best_x),
                maximizer: None,
                final_range: range,
            };
        }
        prev_slope = Some(slope);
        if range >= cfg.max_range {
            break;
        }
        range *= 2.0;
    }
    PenaltyEstimate {
        value: best,
        divergent_ray: None,
        maximizer: Some(best_x),
        final_range: range,
    }
}

/// Block-`j` penalty of `ρ` at the block values `y_block`.
pub fn penalty_block(
    rho: &dyn CondRiskMeasure,
    j: usize,
    y_block: &[f64],
    method: FenchelMethod,
) -> Result<f64, DualError> {
    match method {
        FenchelMethod::ClosedForm => rho
            .closed_form_penalty_block(j, y_block)
            .ok_or_else(|| DualError::NoClosedForm(rho.label())),
        FenchelMethod::GridRefine => {
            let cp = rho.space().block_cond_probs(j);
            let eval = |xi: &[f64]| rho.evaluate_block(j, xi).unwrap_or(f64::NAN);
            Ok(numeric_penalty_block(&eval, &cp, y_block, &PenaltySearch::default()).value)
        }
    }
}

/// `ρ^#(y)` blockwise; `+∞` entries mark blocks where `y` is inadmissible.
pub fn fenchel(
    rho: &dyn CondRiskMeasure,
    y: &DualVariable,
    method: FenchelMethod,
) -> Result<ConditionalValue, DualError> {
    let space = rho.space();
    space.check_len(y.values().len())?;
    let values = (0..space.block_count())
        .map(|j| penalty_block(rho, j, &space.restrict(y.as_rv(), j), method))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConditionalValue::new(values)?)
}

#[derive(Debug, Clone, Copy)]
pub struct DualSearchConfig {
    pub max_iters: usize,
    pub min_step: f64,
    pub multistart: bool,
}

impl Default for DualSearchConfig {
    fn default() -> Self {
        Self {
            max_iters: 200_000,
            min_step: 1e-13,
            multistart: true,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Representation {
    pub value: ConditionalValue,
    pub maximizer: DualVariable,
    pub iterations: usize,
    pub warning: Option<String>,
}

struct BlockDual {
    value: f64,
    q: Vec<f64>,
    iterations: usize,
    capped: bool,
}

/// Maximizes `−Σ q_i x_i − ρ^#(−q/c)` over the simplex by pairwise mass
/// transfers `q_i += s, q_j −= s` with `s ≤ q_j`, halving `s` when no
/// transfer improves.
fn block_dual(penalty: &dyn Fn(&[f64]) -> f64, cp: &[f64], xi: &[f64], cfg: &DualSearchConfig) -> BlockDual {
    let k = cp.len();
    let objective = |q: &[f64]| -> f64 {
        let y: Vec<f64> = q.iter().zip(cp).map(|(a, c)| -a / c).collect();
        let p = penalty(&y);
        if p == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        -q.iter().zip(xi).map(|(a, x)| a * x).sum::<f64>() - p
    };
    let mut starts: Vec<Vec<f64>> = vec![cp.to_vec()];
    if cfg.multistart && k > 1 {
        starts.extend((0..k).map(|i| (0..k).map(|l| if l == i { 1.0 } else { 0.0 }).collect()));
    }
    let mut best = BlockDual {
        value: f64::NEG_INFINITY,
        q: cp.to_vec(),
        iterations: 0,
        capped: false,
    };
    let mut total_iters = 0;
    let mut capped = false;
    for start in starts {
        let mut q = start;
        let mut value = objective(&q);
        let mut step = 0.5;
        let mut iters = 0;
        while step >= cfg.min_step {
            if iters >= cfg.max_iters {
                capped = true;
                break;
            }
            let mut improved = false;
            for i in 0..k {
                for j in 0..k {
                    if i == j || q[j] <= 0.0 {
                        continue;
                    }
                    let s = step.min(q[j]);
                    let mut cand = q.clone();
                    cand[i] += s;
                    cand[j] = if s == q[j] { 0.0 } else { q[j] - s };
                    let v = objective(&cand);
                    if v > value {
                        q = cand;
                        value = v;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
            iters += 1;
        }
        total_iters += iters;
        if value > best.value {
            best.value = value;
            best.q = q;
        }
    }
    best.iterations = total_iters;
    best.capped = capped;
    best
}

/// Blockwise `sup_y { E[xy|F] − ρ^#(y) }` over conditional densities, with
/// the best density found.
pub fn dual_representation(
    rho: &dyn CondRiskMeasure,
    x: &RandomVariable,
    cfg: &DualSearchConfig,
) -> Result<Representation, DualError> {
    let space = rho.space();
    space.check_len(x.len())?;
    let method = if rho
        .closed_form_penalty_block(0, &vec![-1.0; space.block(0).len()])
        .is_some()
    {
        FenchelMethod::ClosedForm
    } else {
        FenchelMethod::GridRefine
    };
    let mut values = Vec::with_capacity(space.block_count());
    let mut y = vec![0.0; space.atom_count()];
    let mut iterations = 0;
    let mut capped_blocks = Vec::new();
    for j in 0..space.block_count() {
        let cp = space.block_cond_probs(j);
        let penalty = |yb: &[f64]| penalty_block(rho, j, yb, method).unwrap_or(f64::INFINITY);
        let res = block_dual(&penalty, &cp, &space.restrict(x, j), cfg);
        for ((&atom, &q), &c) in space.block(j).iter().zip(&res.q).zip(&cp) {
            y[atom] = -q / c;
        }
        values.push(res.value);
        iterations += res.iterations;
        if res.capped {
            capped_blocks.push(j + 1);
        }
    }
    let warning = (!capped_blocks.is_empty())
        .then(|| format!("max_iters reached on blocks {capped_blocks:?}; best-so-far reported"));
    Ok(Representation {
        value: ConditionalValue::new(values)?,
        maximizer: DualVariable::new(y)?,
        iterations,
        warning,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RepresentationEntry {
    pub payoff: RandomVariable,
    pub direct: ConditionalValue,
    pub dual: ConditionalValue,
    pub gap: ConditionalValue,
    pub maximizer: DualVariable,
    pub admissible: bool,
    pub attained: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RepresentationReport {
    pub measure: String,
    pub tol: f64,
    pub entries: Vec<RepresentationEntry>,
    pub all_attained: bool,
    pub warnings: Vec<String>,
    pub note: &'static str,
}

/// Compares `ρ(x)` with its dual value for every payoff.
pub fn verify_representation(
    rho: &dyn CondRiskMeasure,
    payoffs: &[RandomVariable],
    tol: f64,
    cfg: &DualSearchConfig,
) -> Result<RepresentationReport, DualError> {
    if payoffs.is_empty() {
        return Err(DualError::NoPayoffs);
    }
    let space = rho.space();
    let mut entries = Vec::with_capacity(payoffs.len());
    let mut warnings = Vec::new();
    for x in payoffs {
        let direct = rho.evaluate(x)?;
        let rep = dual_representation(rho, x, cfg)?;
        let gap = direct.ext_sub(&rep.value)?;
        let admissible = rep.maximizer.is_admissible(space)?;
        let attained = admissible && gap.values().iter().all(|g| g.abs() <= tol);
        if let Some(w) = rep.warning {
            warnings.push(w);
        }
        entries.push(RepresentationEntry {
            payoff: x.clone(),
            direct,
            dual: rep.value,
            gap,
            maximizer: rep.maximizer,
            admissible,
            attained,
        });
    }
    Ok(RepresentationReport {
        measure: rho.label(),
        tol,
        all_attained: entries.iter().all(|e| e.attained),
        entries,
        warnings,
        note: "lower semicontinuity holds automatically on finite spaces and is not tested",
    })
}

/// Whether `x` lies in the base neighbourhood of 0 given by `(F_k)`, `(a_k)`
/// and `ε`: `Σ 1_{a_k} esssup_{y∈F_k} |E[xy|F]| < ε` in every block, compared
/// exactly.
pub fn sigma_s_membership(
    space: &FiniteProbSpace,
    x: &RandomVariable,
    fks: &[Vec<RandomVariable>],
    parts: &PartitionOfUnity,
    eps: &ConditionalValue,
) -> Result<bool, DualError> {
    space.check_len(x.len())?;
    space.check_block_len(eps.len())?;
    if fks.len() != parts.len() {
        return Err(DualError::CountMismatch {
            expected: parts.len(),
            got: fks.len(),
        });
    }
    if let Some((block, &value)) = eps.values().iter().enumerate().find(|(_, e)| e.is_nan() || **e <= 0.0) {
        return Err(DualError::NonPositiveEps { block, value });
    }
    let mut sups = Vec::with_capacity(fks.len());
    for (k, fk) in fks.iter().enumerate() {
        if fk.is_empty() {
            return Err(DualError::EmptyFamily(k + 1));
        }
        let pairings = fk
            .iter()
            .map(|y| Ok(space.cond_expect(&x.mul(y))?.map(f64::abs)))
            .collect::<Result<Vec<_>, DualError>>()?;
        sups.push(crate::probspace::esssup_family(&pairings)?);
    }
    let value = space.paste_conditional(parts, &sups)?;
    Ok(value.values().iter().zip(eps.values()).all(|(v, e)| v < e))
}

/// The penalty `y ↦ ρ^#(y)` as a map on random variables; blocks where `y`
/// has a positive entry get `+∞`.
pub fn penalty_function<'a>(
    rho: &'a dyn CondRiskMeasure,
    method: FenchelMethod,
) -> impl Fn(&RandomVariable) -> ConditionalValue + 'a {
    move |y: &RandomVariable| {
        let space = rho.space();
        let values = (0..space.block_count())
            .map(|j| {
                let yb = space.restrict(y, j);
                if yb.iter().any(|&v| v > 0.0) {
                    f64::INFINITY
                } else {
                    penalty_block(rho, j, &yb, method).unwrap_or(f64::INFINITY)
                }
            })
            .collect();
        ConditionalValue::new(values).expect("penalties are never NaN")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingViolation {
    pub assignment: Vec<usize>,
    pub block: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockCompactness {
    pub bounded: bool,
    pub unbounded_direction: Option<RandomVariable>,
    pub compact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SublevelReport {
    pub probe_size: usize,
    pub members: usize,
    pub mixtures_checked: usize,
    pub mixing_closed: bool,
    pub mixing_violation: Option<MixingViolation>,
    pub blocks: Vec<BlockCompactness>,
    pub compact_on: BoolElem,
    pub qualifier: &'static str,
}

const MAX_MIXTURES: usize = 4096;
const RAY_BOUND: f64 = 1e6;

/// Stability and boundedness of `V_η(f) = {x : f(x) ≤ η}` as seen through a
/// finite probe set.
///
/// (i) every mixture of probe members in `V_η(f)` along the atoms must stay
/// in `V_η(f)`; (ii) from a member, rays along probe-spanned directions
/// localized to one block are shot with doubling steps up to `1e6`. A block
/// is reported compact when mixing is closed and every ray leaves the set.
pub fn stable_sublevel_check(
    space: &FiniteProbSpace,
    f: &dyn Fn(&RandomVariable) -> ConditionalValue,
    eta: &ConditionalValue,
    probe: &[RandomVariable],
    seed: u64,
) -> Result<SublevelReport, DualError> {
    if probe.is_empty() {
        return Err(DualError::EmptyProbe);
    }
    space.check_block_len(eta.len())?;
    for p in probe {
        space.check_len(p.len())?;
    }
    let m = space.block_count();
    let alg = space.algebra();
    let inside = |x: &RandomVariable| -> Vec<bool> {
        let v = f(x);
        (0..m).map(|j| v.get(j) <= eta.get(j)).collect()
    };
    let members: Vec<&RandomVariable> = probe.iter().filter(|p| inside(p).iter().all(|&b| b)).collect();

    let atoms = PartitionOfUnity::atoms(alg);
    let mut mixtures_checked = 0;
    let mut violation = None;
    if !members.is_empty() {
        let total = (members.len() as f64).powi(m as i32);
        let assignments: Vec<Vec<usize>> = if total <= MAX_MIXTURES as f64 {
            (0..total as usize)
                .map(|mut code| {
                    (0..m)
                        .map(|_| {
                            let c = code % members.len();
                            code /= members.len();
                            c
                        })
                        .collect()
                })
                .collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..MAX_MIXTURES)
                .map(|_| (0..m).map(|_| rng.gen_range(0..members.len())).collect())
                .collect()
        };
        for a in assignments {
            let xs: Vec<RandomVariable> = a.iter().map(|&i| members[i].clone()).collect();
            let mix = space.indicator_mix(&atoms, &xs)?;
            mixtures_checked += 1;
            if let Some(block) = inside(&mix).iter().position(|&b| !b) {
                violation = Some(MixingViolation {
                    assignment: a.iter().map(|i| i + 1).collect(),
                    block: block + 1,
                });
                break;
            }
        }
    }
    let mixing_closed = violation.is_none();

    let mut directions: Vec<RandomVariable> = Vec::new();
    for (i, p) in members.iter().enumerate() {
        directions.push((*p).clone());
        for q in &members[i + 1..] {
            directions.push(p.sub(q));
        }
    }
    let mut blocks = Vec::with_capacity(m);
    for j in 0..m {
        let mut unbounded = None;
        if let Some(base) = members.first() {
            let local = space.indicator(alg.atom(j).expect("in range"));
            'dirs: for d in &directions {
                let v = local.mul(d);
                if v.values().iter().all(|&c| c == 0.0) {
                    continue;
                }
                for sign in [1.0, -1.0] {
                    let mut t = 1.0;
                    let mut escaped = false;
                    while t <= RAY_BOUND {
                        let x = base.add(&v.scale(sign * t));
                        if !inside(&x)[j] {
                            escaped = true;
                            break;
                        }
                        t *= 2.0;
                    }
                    if !escaped {
                        unbounded = Some(v.scale(sign));
                        break 'dirs;
                    }
                }
            }
        }
        let bounded = unbounded.is_none();
        blocks.push(BlockCompactness {
            bounded,
            unbounded_direction: unbounded,
            compact: bounded && mixing_closed,
        });
    }
    let compact_on = alg.from_bits(
        blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.compact)
            .fold(0u64, |acc, (j, _)| acc | (1 << j)),
    );
    Ok(SublevelReport {
        probe_size: probe.len(),
        members: members.len(),
        mixtures_checked,
        mixing_closed,
        mixing_violation: violation,
        blocks,
        compact_on,
        qualifier: "at probe resolution",
    })
}
