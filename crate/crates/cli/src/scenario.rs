//! Scenario files: a finite probability space, risk-measure descriptors and payoffs.

use std::path::Path;
use std::sync::Arc;

use condrisk::report::round_sig;
use condrisk::riskcore::{BuiltinMeasure, CondRiskMeasure};
use condrisk::transfer::tilted_neg_expectation;
use condrisk::{ConditionalValue, FiniteProbSpace, RandomVariable, SpaceRef};
use serde::{Deserialize, Serialize};

/// Probabilities within this distance of summing to 1 are renormalized.
pub const INGEST_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Scalar(f64),
    PerBlock(Vec<f64>),
}

impl Param {
    fn per_block(&self, m: usize, field: &str) -> Result<ConditionalValue, String> {
        let values = match self {
            Self::Scalar(v) => vec![*v; m],
            Self::PerBlock(v) if v.len() == m => v.clone(),
            Self::PerBlock(v) => return Err(format!("{field} has {} values, expected {m}", v.len())),
        };
        ConditionalValue::finite(values).map_err(|e| format!("{field}: {e}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    NegExpectation,
    WorstCase,
    Entropic {
        gamma: Param,
    },
    Avar {
        lambda: Param,
    },
    /// `−E_Q[x|F]` with `Q` reweighted on one block (1-based).
    TiltedNegExpectation {
        block: usize,
        weights: Vec<f64>,
    },
}

impl MeasureSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::NegExpectation => "neg_expectation",
            Self::WorstCase => "worst_case",
            Self::Entropic { .. } => "entropic",
            Self::Avar { .. } => "avar",
            Self::TiltedNegExpectation { .. } => "tilted_neg_expectation",
        }
    }

    /// Built-in kinds with their default parameters (`γ = 1`, `λ = 0.5`).
    pub fn default_for(kind: &str) -> Option<Self> {
        Some(match kind {
            "neg_expectation" => Self::NegExpectation,
            "worst_case" => Self::WorstCase,
            "entropic" => Self::Entropic {
                gamma: Param::Scalar(1.0),
            },
            "avar" => Self::Avar {
                lambda: Param::Scalar(0.5),
            },
            _ => return None,
        })
    }

    pub fn build(&self, space: &SpaceRef, field: &str) -> Result<Box<dyn CondRiskMeasure>, String> {
        let m = space.block_count();
        let err = |e: &dyn std::fmt::Display| format!("{field}: {e}");
        Ok(match self {
            Self::NegExpectation => Box::new(BuiltinMeasure::neg_expectation(space.clone())),
            Self::WorstCase => Box::new(BuiltinMeasure::worst_case(space.clone())),
            Self::Entropic { gamma } => {
                let g = gamma.per_block(m, &format!("{field}.gamma"))?;
                Box::new(BuiltinMeasure::entropic(space.clone(), &g).map_err(|e| err(&e))?)
            }
            Self::Avar { lambda } => {
                let l = lambda.per_block(m, &format!("{field}.lambda"))?;
                Box::new(BuiltinMeasure::avar(space.clone(), &l).map_err(|e| err(&e))?)
            }
            Self::TiltedNegExpectation { block, weights } => {
                if *block == 0 || *block > m {
                    return Err(format!("{field}.block = {block} is outside 1..={m}"));
                }
                Box::new(tilted_neg_expectation(space.clone(), block - 1, weights.clone()).map_err(|e| err(&e))?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub probs: Vec<f64>,
    /// 1-based atom indices.
    pub blocks: Vec<Vec<usize>>,
    #[serde(default)]
    pub measures: Vec<MeasureSpec>,
    #[serde(default)]
    pub payoffs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub space: SpaceRef,
    pub payoffs: Vec<RandomVariable>,
}

impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.file == other.file
    }
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self, String> {
        let n = file.probs.len();
        let sum: f64 = file.probs.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > INGEST_SUM_TOL {
            return Err(format!(
                "probs sum {} (expected 1 within {INGEST_SUM_TOL:e})",
                round_sig(sum)
            ));
        }
        let probs: Vec<f64> = file.probs.iter().map(|p| p / sum).collect();
        let mut blocks = Vec::with_capacity(file.blocks.len());
        for (b, block) in file.blocks.iter().enumerate() {
            let mut zero_based = Vec::with_capacity(block.len());
            for &a in block {
                if a == 0 || a > n {
                    return Err(format!("blocks[{b}] references atom {a} of {n} (indices are 1-based)"));
                }
                zero_based.push(a - 1);
            }
            blocks.push(zero_based);
        }
        let space: SpaceRef = Arc::new(FiniteProbSpace::new(probs, blocks).map_err(|e| e.to_string())?);
        let payoffs = file
            .payoffs
            .iter()
            .enumerate()
            .map(|(k, p)| {
                if p.len() != n {
                    return Err(format!("payoffs[{k}] has {} values, expected {n}", p.len()));
                }
                RandomVariable::new(p.clone()).map_err(|e| format!("payoffs[{k}]: {e}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (k, m) in file.measures.iter().enumerate() {
            m.build(&space, &format!("measures[{k}]"))?;
        }
        Ok(Self { file, space, payoffs })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| format!("scenario JSON: {e}"))?;
        Self::from_file(file)
    }

    pub fn print(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("scenario serializes")
    }

    /// A measure by index into `measures`, by kind (first match), or a
    /// built-in kind with default parameters.
    pub fn measure(&self, selector: &str) -> Result<Box<dyn CondRiskMeasure>, String> {
        if let Ok(k) = selector.parse::<usize>() {
            let spec = self
                .file
                .measures
                .get(k)
                .ok_or_else(|| format!("--measure {k}: scenario has {} measures", self.file.measures.len()))?;
            return spec.build(&self.space, &format!("measures[{k}]"));
        }
        if let Some((k, spec)) = self
            .file
            .measures
            .iter()
            .enumerate()
            .find(|(_, m)| m.kind() == selector)
        {
            return spec.build(&self.space, &format!("measures[{k}]"));
        }
        MeasureSpec::default_for(selector)
            .ok_or_else(|| format!("--measure: unknown measure '{selector}'"))?
            .build(&self.space, "--measure")
    }

    pub fn payoff(&self, k: usize) -> Result<&RandomVariable, String> {
        self.payoffs
            .get(k)
            .ok_or_else(|| format!("--payoff {k}: scenario has {} payoffs", self.payoffs.len()))
    }
}

pub fn ingest(path: &Path) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Scenario::parse(&text)
}
