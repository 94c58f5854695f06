//! Model-space gauges: `L^p`, Orlicz and Orlicz-heart type modules over a
//! finite space, Young functions with their conjugates, and the blockwise
//! Hölder / Young inequalities behind the dual pairings.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::probspace::{ConditionalValue, FiniteProbSpace, ProbSpaceError, RandomVariable};

const GOLDEN_TOL: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 60;
const SLOPE_MIN: f64 = 1e-12;
const GAUGE_TOL: f64 = 1e-10;
const INEQ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelSpaceError {
    #[error("sample grid must be nonempty, strictly increasing and positive")]
    BadGrid,
    #[error("Young function must vanish at 0 (got {0})")]
    NonzeroAtOrigin(f64),
    #[error("Young function must be finite near 0 (value {value} at s = {at})")]
    InfiniteNearOrigin { at: f64, value: f64 },
    #[error("Young function is decreasing between s = {from} and s = {to}")]
    Decreasing { from: f64, to: f64 },
    #[error("Young function violates midpoint convexity between s = {left} and s = {right}")]
    NotConvex { left: f64, right: f64 },
    #[error("Young function flagged finite-valued takes the value +∞ at s = {0}")]
    NotFinite(f64),
    #[error("Young function is negative ({value}) at s = {at}")]
    Negative { at: f64, value: f64 },
    #[error("exponent p = {0} must lie in [1, ∞]")]
    Exponent(f64),
    #[error("Orlicz-heart module requires a finite-valued Young function")]
    HeartNeedsFinite,
    #[error("spaces are not a conjugate pair: {0}")]
    NonConjugate(String),
    #[error(transparent)]
    Space(#[from] ProbSpaceError),
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A Young function `φ: [0,∞) → [0,∞]` together with a sample grid used for
/// numerical work (conjugation, validation, pointwise checks).
#[derive(Clone)]
pub struct YoungFunction {
    eval: Evaluator,
    finite_valued: bool,
    grid: Vec<f64>,
    label: String,
}

impl fmt::Debug for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("YoungFunction")
            .field("label", &self.label)
            .field("finite_valued", &self.finite_valued)
            .field("grid_len", &self.grid.len())
            .finish()
    }
}

/// `n` equally spaced points on `(0, upper]`.
pub fn uniform_grid(upper: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| upper * i as f64 / n as f64).collect()
}

impl YoungFunction {
    /// Validates `φ(0) = 0`, finiteness near 0, monotonicity and midpoint
    /// convexity on the grid.
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        finite_valued: bool,
        grid: Vec<f64>,
    ) -> Result<Self, ModelSpaceError> {
        let phi = Self {
            eval: Arc::new(eval),
            finite_valued,
            grid,
            label: label.into(),
        };
        phi.validate()?;
        Ok(phi)
    }

    fn validate(&self) -> Result<(), ModelSpaceError> {
        let g = &self.grid;
        if g.is_empty() || g[0] <= 0.0 || g.windows(2).any(|w| w[1] <= w[0]) || g.iter().any(|s| !s.is_finite()) {
            return Err(ModelSpaceError::BadGrid);
        }
        let at0 = self.eval(0.0);
        if at0 != 0.0 {
            return Err(ModelSpaceError::NonzeroAtOrigin(at0));
        }
        let values: Vec<f64> = g.iter().map(|&s| self.eval(s)).collect();
        if !values[0].is_finite() {
            return Err(ModelSpaceError::InfiniteNearOrigin {
                at: g[0],
                value: values[0],
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if v.is_nan() || v < 0.0 {
                return Err(ModelSpaceError::Negative { at: g[i], value: v });
            }
            if self.finite_valued && v.is_infinite() {
                return Err(ModelSpaceError::NotFinite(g[i]));
            }
        }
        let mut prev = 0.0;
        let mut prev_s = 0.0;
        for (&s, &v) in g.iter().zip(&values) {
            if v < prev {
                return Err(ModelSpaceError::Decreasing { from: prev_s, to: s });
            }
            prev = v;
            prev_s = s;
        }
        let pts: Vec<(f64, f64)> = std::iter::once((0.0, 0.0))
            .chain(g.iter().copied().zip(values))
            .collect();
        let stride = (pts.len() / 128).max(1);
        for i in (0..pts.len()).step_by(stride) {
            for j in (i + 1..pts.len()).step_by(stride) {
                let (si, vi) = pts[i];
                let (sj, vj) = pts[j];
                if !(vi.is_finite() && vj.is_finite()) {
                    continue;
                }
                let rhs = 0.5 * (vi + vj);
                let mid = self.eval(0.5 * (si + sj));
                if mid > rhs + 1e-9 * (1.0 + rhs.abs()) {
                    return Err(ModelSpaceError::NotConvex { left: si, right: sj });
                }
            }
        }
        Ok(())
    }

    /// `φ(t) = t`.
    pub fn linear() -> Self {
        Self::new("t", |t| t, true, uniform_grid(20.0, 200)).expect("valid")
    }

    /// `φ(t) = t²/2`, its own conjugate.
    pub fn quadratic() -> Self {
        Self::new("t^2/2", |t| 0.5 * t * t, true, uniform_grid(20.0, 200)).expect("valid")
    }

    /// `φ(t) = t^p / p` for `1 < p < ∞`.
    pub fn power(p: f64) -> Result<Self, ModelSpaceError> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(ModelSpaceError::Exponent(p));
        }
        Self::new(
            format!("t^{p}/{p}"),
            move |t| t.powf(p) / p,
            true,
            uniform_grid(20.0, 200),
        )
    }

    /// `φ = 0` on `[0, 1]` and `+∞` beyond.
    pub fn unit_indicator() -> Self {
        Self::new(
            "0 on [0,1], +inf after",
            |t| if t <= 1.0 { 0.0 } else { f64::INFINITY },
            false,
            uniform_grid(4.0, 40),
        )
        .expect("valid")
    }

    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    pub fn is_finite_valued(&self) -> bool {
        self.finite_valued
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Result<Self, ModelSpaceError> {
        self.grid = grid;
        self.validate()?;
        Ok(self)
    }

    /// `sup_{s ≥ 0} { r s − φ(s) }` by grid scan, range doubling past the end
    /// of the grid, and golden-section refinement around the best point.
    pub fn conjugate_value(&self, r: f64) -> f64 {
        sup_affine_minus(|s| self.eval(s), &self.grid, r)
    }
}

fn sup_affine_minus(phi: impl Fn(f64) -> f64, grid: &[f64], r: f64) -> f64 {
    let g = |s: f64| -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        let v = phi(s);
        if v == f64::INFINITY {
            f64::NEG_INFINITY
        } else {
            r * s - v
        }
    };
    let pts: Vec<f64> = std::iter::once(0.0).chain(grid.iter().copied()).collect();
    let vals: Vec<f64> = pts.iter().map(|&s| g(s)).collect();
    let mut k = 0;
    for i in 1..vals.len() {
        if vals[i] > vals[k] {
            k = i;
        }
    }
    let last = pts.len() - 1;
    if k < last {
        let lo = if k == 0 { 0.0 } else { pts[k - 1] };
        let (_, v) = golden_max(&g, lo, pts[k + 1]);
        return v.max(vals[k]);
    }

    let mut prev = pts[last - 1];
    let mut s = pts[last];
    let mut gv = vals[last];
    let mut prev_slope: Option<f64> = None;
    let mut linear_run = 0;
    for _ in 0..MAX_DOUBLINGS {
        let s2 = 2.0 * s;
        let g2 = g(s2);
        if g2 <= gv {
            let (_, v) = golden_max(&g, prev, s2);
            return v.max(gv);
        }
        let slope = (g2 - gv) / (s2 - s);
        if let Some(p) = prev_slope {
            if slope > SLOPE_MIN && slope >= 0.5 * p {
                linear_run += 1;
            } else {
                linear_run = 0;
            }
        }
        if linear_run >= 3 {
            return f64::INFINITY;
        }
        prev_slope = Some(slope);
        prev = s;
        s = s2;
        gv = g2;
    }
    f64::INFINITY
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while (b - a).abs() > GOLDEN_TOL * (1.0 + a.abs().max(b.abs())) && iters < 200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iters += 1;
    }
    let (fa, fb) = (f(a), f(b));
    [(a, fa), (b, fb), (c, fc), (d, fd)]
        .into_iter()
        .fold(
            (a, f64::NEG_INFINITY),
            |best, cand| if cand.1 > best.1 { cand } else { best },
        )
}

/// The conjugate Young function `ψ(r) = sup_{s≥0} { r s − φ(s) }`, sampled on
/// `r_grid`. Entries that evaluate to `+∞` on the grid clear the
/// finite-valued flag.
pub fn young_conjugate(phi: &YoungFunction, r_grid: Vec<f64>) -> YoungFunction {
    let inner = phi.clone();
    let eval = move |r: f64| if r == 0.0 { 0.0 } else { inner.conjugate_value(r) };
    let finite_valued = r_grid.iter().all(|&r| eval(r).is_finite());
    YoungFunction {
        eval: Arc::new(eval),
        finite_valued,
        grid: r_grid,
        label: format!("conj({})", phi.label),
    }
}

/// `q` with `1/p + 1/q = 1`, using `1 ↔ ∞`.
pub fn holder_conjugate(p: f64) -> Result<f64, ModelSpaceError> {
    if p.is_nan() || p < 1.0 {
        return Err(ModelSpaceError::Exponent(p));
    }
    Ok(if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    })
}

#[derive(Debug, Clone)]
pub enum ModuleSpec {
    Lp(f64),
    Orlicz(YoungFunction),
    OrliczHeart(YoungFunction),
}

impl ModuleSpec {
    pub fn lp(p: f64) -> Result<Self, ModelSpaceError> {
        if p.is_nan() || p < 1.0 {
            return Err(ModelSpaceError::Exponent(p));
        }
        Ok(Self::Lp(p))
    }

    pub fn orlicz(phi: YoungFunction) -> Self {
        Self::Orlicz(phi)
    }

    pub fn orlicz_heart(phi: YoungFunction) -> Result<Self, ModelSpaceError> {
        if !phi.is_finite_valued() {
            return Err(ModelSpaceError::HeartNeedsFinite);
        }
        Ok(Self::OrliczHeart(phi))
    }

    pub fn young(&self) -> Option<&YoungFunction> {
        match self {
            Self::Lp(_) => None,
            Self::Orlicz(phi) | Self::OrliczHeart(phi) => Some(phi),
        }
    }
}

/// Gauge of a single block given its conditional probabilities and values.
pub fn block_gauge(spec: &ModuleSpec, cond_probs: &[f64], values: &[f64]) -> f64 {
    match spec {
        ModuleSpec::Lp(p) if p.is_infinite() => values.iter().map(|v| v.abs()).fold(0.0, f64::max),
        ModuleSpec::Lp(p) => {
            let s: f64 = cond_probs.iter().zip(values).map(|(c, v)| c * v.abs().powf(*p)).sum();
            s.powf(1.0 / p)
        }
        ModuleSpec::Orlicz(phi) | ModuleSpec::OrliczHeart(phi) => luxemburg(phi, cond_probs, values),
    }
}

/// `inf { λ > 0 : Σ c_i φ(|x_i| / λ) ≤ 1 }` by bisection.
fn luxemburg(phi: &YoungFunction, cond_probs: &[f64], values: &[f64]) -> f64 {
    let top = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    let modular = |lambda: f64| -> f64 {
        cond_probs
            .iter()
            .zip(values)
            .map(|(c, v)| {
                let a = v.abs();
                if a == 0.0 {
                    0.0
                } else {
                    c * phi.eval(a / lambda)
                }
            })
            .sum()
    };
    let mut hi = top;
    let mut guard = 0;
    while modular(hi) > 1.0 && guard < 2000 {
        hi *= 2.0;
        guard += 1;
    }
    let mut lo = hi;
    guard = 0;
    while modular(lo) <= 1.0 && guard < 2000 {
        lo *= 0.5;
        guard += 1;
    }
    if modular(lo) <= 1.0 {
        return 0.0;
    }
    while hi - lo > GAUGE_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if modular(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Blockwise gauge: conditional `L^p` norm, or Luxemburg gauge for Orlicz-type modules.
pub fn module_gauge(
    spec: &ModuleSpec,
    x: &RandomVariable,
    space: &FiniteProbSpace,
) -> Result<ConditionalValue, ModelSpaceError> {
    space.check_len(x.len())?;
    let values = (0..space.block_count())
        .map(|j| block_gauge(spec, &space.block_cond_probs(j), &space.restrict(x, j)))
        .collect();
    Ok(ConditionalValue::new(values)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockInequality {
    #[serde(serialize_with = "crate::report::ext")]
    pub lhs: f64,
    #[serde(serialize_with = "crate::report::ext")]
    pub rhs: f64,
    pub holds: bool,
    pub equality: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    /// Multiplicative constant on the right-hand side: 1 (Hölder) or 2 (Orlicz).
    pub constant: f64,
    pub blocks: Vec<BlockInequality>,
    pub pointwise_checked: usize,
    pub pointwise_violations: usize,
    pub holds: bool,
}

/// Pointwise Young inequality `s t ≤ φ(s) + ψ(t)`; returns `(st, φ(s) + ψ(t))`.
pub fn young_pointwise(phi: &YoungFunction, psi: &YoungFunction, s: f64, t: f64) -> (f64, f64) {
    (s * t, phi.eval(s) + psi.eval(t))
}

fn subsample(grid: &[f64], max: usize) -> Vec<f64> {
    let stride = grid.len().div_ceil(max).max(1);
    grid.iter().step_by(stride).copied().collect()
}

fn check_young_conjugacy(phi: &YoungFunction, psi: &YoungFunction) -> Result<(), ModelSpaceError> {
    for r in subsample(psi.grid(), 16) {
        let expected = phi.conjugate_value(r);
        let got = psi.eval(r);
        let ok = if expected.is_infinite() || got.is_infinite() {
            expected == got
        } else {
            (expected - got).abs() <= 1e-6 * (1.0 + got.abs())
        };
        if !ok {
            return Err(ModelSpaceError::NonConjugate(format!(
                "ψ({r}) = {got} but sup_s(rs − φ(s)) = {expected}"
            )));
        }
    }
    Ok(())
}

/// Blockwise `E[|xy| | F] ≤ C · gauge(x) · gauge(y)` for a conjugate pair of
/// module specs, plus the pointwise Young inequality on sample grids.
pub fn inequality_check(
    x: &RandomVariable,
    y: &RandomVariable,
    pair: (&ModuleSpec, &ModuleSpec),
    space: &FiniteProbSpace,
) -> Result<InequalityReport, ModelSpaceError> {
    space.check_len(x.len())?;
    space.check_len(y.len())?;
    let (constant, young_pair) = match pair {
        (ModuleSpec::Lp(p), ModuleSpec::Lp(q)) => {
            let inv = |e: f64| if e.is_infinite() { 0.0 } else { 1.0 / e };
            if (inv(*p) + inv(*q) - 1.0).abs() > 1e-12 {
                return Err(ModelSpaceError::NonConjugate(format!("1/{p} + 1/{q} ≠ 1")));
            }
            let young = if *p > 1.0 && p.is_finite() {
                Some((YoungFunction::power(*p)?, YoungFunction::power(*q)?))
            } else {
                None
            };
            (1.0, young)
        }
        (ModuleSpec::Orlicz(phi) | ModuleSpec::OrliczHeart(phi), ModuleSpec::Orlicz(psi)) => {
            check_young_conjugacy(phi, psi)?;
            (2.0, Some((phi.clone(), psi.clone())))
        }
        _ => {
            return Err(ModelSpaceError::NonConjugate(
                "expected (Lp, Lq) or (Orlicz φ, Orlicz ψ)".to_string(),
            ))
        }
    };

    let lhs = space.cond_expect(&x.mul(y).map(f64::abs))?;
    let gx = module_gauge(pair.0, x, space)?;
    let gy = module_gauge(pair.1, y, space)?;
    let blocks: Vec<BlockInequality> = (0..space.block_count())
        .map(|j| {
            let l = lhs.get(j);
            let r = constant * gx.get(j) * gy.get(j);
            BlockInequality {
                lhs: l,
                rhs: r,
                holds: l <= r * (1.0 + INEQ_TOL) + INEQ_TOL,
                equality: (l - r).abs() <= INEQ_TOL * (1.0 + r.abs()),
            }
        })
        .collect();

    let (mut checked, mut violations) = (0, 0);
    if let Some((phi, psi)) = young_pair {
        for s in subsample(phi.grid(), 48) {
            for t in subsample(psi.grid(), 48) {
                let (l, r) = young_pointwise(&phi, &psi, s, t);
                checked += 1;
                if l > r + 1e-9 * (1.0 + l.abs()) {
                    violations += 1;
                }
            }
        }
    }
    let holds = violations == 0 && blocks.iter().all(|b| b.holds);
    Ok(InequalityReport {
        constant,
        blocks,
        pointwise_checked: checked,
        pointwise_violations: violations,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::s4;

    fn rv(v: &[f64]) -> RandomVariable {
        RandomVariable::new(v.to_vec()).unwrap()
    }

    #[test]
    fn conjugate_of_linear_is_indicator() {
        let psi = young_conjugate(&YoungFunction::linear(), uniform_grid(3.0, 30));
        for r in [0.0, 0.25, 0.5, 1.0] {
            assert!(psi.eval(r).abs() < 1e-12, "ψ({r}) = {}", psi.eval(r));
        }
        for r in [1.01, 1.5, 3.0] {
            assert_eq!(psi.eval(r), f64::INFINITY);
        }
        assert!(!psi.is_finite_valued());
    }

    #[test]
    fn quadratic_is_self_conjugate() {
        let psi = young_conjugate(&YoungFunction::quadratic(), uniform_grid(10.0, 100));
        for i in 0..=100 {
            let r = 0.1 * i as f64;
            assert!((psi.eval(r) - 0.5 * r * r).abs() < 1e-6, "r = {r}");
        }
    }

    #[test]
    fn conjugate_of_unit_indicator_is_identity() {
        let psi = young_conjugate(&YoungFunction::unit_indicator(), uniform_grid(5.0, 50));
        for r in [0.0, 0.3, 1.0, 2.5, 5.0] {
            assert!((psi.eval(r) - r).abs() < 1e-9, "r = {r}, ψ = {}", psi.eval(r));
        }
    }

    #[test]
    fn holder_examples() {
        assert_eq!(holder_conjugate(2.0).unwrap(), 2.0);
        assert_eq!(holder_conjugate(1.0).unwrap(), f64::INFINITY);
        assert_eq!(holder_conjugate(f64::INFINITY).unwrap(), 1.0);
        assert_eq!(holder_conjugate(4.0).unwrap(), 4.0 / 3.0);
        assert!(holder_conjugate(0.5).is_err());
    }

    #[test]
    fn gauge_examples() {
        let s = s4();
        let g = module_gauge(&ModuleSpec::lp(2.0).unwrap(), &RandomVariable::constant(4, 1.0), &s).unwrap();
        assert_eq!(g.values(), &[1.0, 1.0]);
        let g = module_gauge(&ModuleSpec::lp(f64::INFINITY).unwrap(), &rv(&[1.0, 3.0, 2.0, 6.0]), &s).unwrap();
        assert_eq!(g.values(), &[3.0, 6.0]);
        let g = module_gauge(
            &ModuleSpec::orlicz(YoungFunction::quadratic()),
            &RandomVariable::constant(4, 2.0),
            &s,
        )
        .unwrap();
        for v in g.values() {
            assert!((v - 2f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn heart_requires_finite_young_function() {
        assert!(matches!(
            ModuleSpec::orlicz_heart(YoungFunction::unit_indicator()),
            Err(ModelSpaceError::HeartNeedsFinite)
        ));
        assert!(ModuleSpec::orlicz_heart(YoungFunction::quadratic()).is_ok());
    }

    #[test]
    fn young_function_validation() {
        assert!(matches!(
            YoungFunction::new("bad", |t| 1.0 + t, true, uniform_grid(1.0, 10)),
            Err(ModelSpaceError::NonzeroAtOrigin(_))
        ));
        assert!(matches!(
            YoungFunction::new("concave", |t: f64| t.sqrt(), true, uniform_grid(4.0, 40)),
            Err(ModelSpaceError::NotConvex { .. })
        ));
        assert!(matches!(
            YoungFunction::new(
                "dec",
                |t: f64| if t < 1.0 { t } else { 0.5 },
                true,
                uniform_grid(2.0, 20)
            ),
            Err(ModelSpaceError::Decreasing { .. } | ModelSpaceError::NotConvex { .. })
        ));
        assert!(matches!(
            YoungFunction::new("grid", |t| t, true, vec![1.0, 0.5]),
            Err(ModelSpaceError::BadGrid)
        ));
    }

    #[test]
    fn inequality_examples() {
        let s = s4();
        let ones = RandomVariable::constant(4, 1.0);
        let l2 = ModuleSpec::lp(2.0).unwrap();
        let rep = inequality_check(&ones, &ones, (&l2, &l2), &s).unwrap();
        assert!(rep.holds && rep.blocks.iter().all(|b| b.equality));

        let x = rv(&[1.0, 3.0, 2.0, 6.0]);
        let l1 = ModuleSpec::lp(1.0).unwrap();
        let linf = ModuleSpec::lp(f64::INFINITY).unwrap();
        let rep = inequality_check(&x, &ones, (&l1, &linf), &s).unwrap();
        assert_eq!(rep.blocks[0].lhs, 2.0);
        assert_eq!(rep.blocks[1].lhs, 4.0);
        assert!(rep.holds && rep.blocks.iter().all(|b| b.equality));

        let phi = YoungFunction::quadratic();
        let (l, r) = young_pointwise(&phi, &phi, 1.0, 1.0);
        assert_eq!((l, r), (1.0, 1.0));

        let l3 = ModuleSpec::lp(3.0).unwrap();
        assert!(matches!(
            inequality_check(&x, &ones, (&l2, &l3), &s),
            Err(ModelSpaceError::NonConjugate(_))
        ));
    }

    #[test]
    fn orlicz_pair_checks_conjugacy() {
        let s = s4();
        let phi = YoungFunction::quadratic();
        let psi = young_conjugate(&phi, uniform_grid(10.0, 50));
        let x = rv(&[1.0, -2.0, 0.5, 3.0]);
        let y = rv(&[0.3, 0.1, -1.0, 2.0]);
        let rep = inequality_check(&x, &y, (&ModuleSpec::orlicz(phi.clone()), &ModuleSpec::orlicz(psi)), &s).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.constant, 2.0);
        let wrong = ModuleSpec::orlicz(YoungFunction::linear());
        assert!(inequality_check(&x, &y, (&ModuleSpec::orlicz(phi), &wrong), &s).is_err());
    }
}
