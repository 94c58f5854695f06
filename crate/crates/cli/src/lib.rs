//! Command dispatch for the `condrisk` binary.
//!
//! Every command writes one JSON document on standard output. Exit codes:
//! 0 when every check in the report passes, 1 when a check fails (the report
//! is still written), 2 on input errors.

pub mod scenario;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use condrisk::bvm::{parse_atom_set, LiteralError, NameLit};
use condrisk::duality::{fenchel, verify_representation, DualSearchConfig, DualVariable, FenchelMethod};
use condrisk::formula::{evaluate, Env, Formula};
use condrisk::report::round_sig;
use condrisk::riskcore::{check_axiom, Axiom};
use condrisk::transfer::transfer_verify;
use condrisk::{BooleanAlgebra, PartitionOfUnity, Universe};
use serde::Serialize;
use serde_json::{json, Value};

pub use scenario::{ingest, MeasureSpec, Param, Scenario, ScenarioFile};

#[derive(Debug, Parser)]
#[command(
    name = "condrisk",
    version,
    about = "Conditional risk measures and a finite Boolean-valued model engine"
)]
pub struct Cli {
    /// Scenario JSON file.
    #[arg(long, short, global = true)]
    pub scenario: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probability space commands.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Risk measure evaluation and axiom checks.
    #[command(subcommand)]
    Risk(RiskCmd),
    /// Penalties and dual representations.
    #[command(subcommand)]
    Dual(DualCmd),
    /// Conditional versus per-atom classical cross-checks.
    #[command(subcommand)]
    Transfer(TransferCmd),
    /// Names and formulas.
    #[command(subcommand)]
    Bvm(BvmCmd),
}

#[derive(Debug, Subcommand)]
pub enum SpaceCmd {
    Validate,
}

#[derive(Debug, Subcommand)]
pub enum RiskCmd {
    Eval {
        #[arg(long)]
        measure: String,
        #[arg(long)]
        payoff: usize,
    },
    CheckAxioms {
        #[arg(long)]
        measure: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restrict to these axioms (snake_case names); all five by default.
        #[arg(long, value_delimiter = ',')]
        axioms: Vec<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum DualCmd {
    Penalty {
        #[arg(long)]
        measure: String,
        /// JSON array with one entry per atom.
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        /// closed_form or grid_refine; closed form when available by default.
        #[arg(long)]
        method: Option<String>,
    },
    Represent {
        #[arg(long)]
        measure: String,
        #[arg(long)]
        payoff: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum TransferCmd {
    Verify {
        #[arg(long)]
        measure: String,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7")]
        items: Vec<u8>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
pub struct AlgebraArg {
    /// Number of atoms; taken from the scenario's blocks when omitted.
    #[arg(long)]
    pub atoms: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum BvmCmd {
    Eval {
        formula: String,
        /// NAME=<literal>
        #[arg(long = "bind")]
        binds: Vec<String>,
        #[command(flatten)]
        algebra: AlgebraArg,
    },
    Mix {
        /// Atom sets such as {1} {2,3}; one per name.
        #[arg(long, num_args = 1.., required = true)]
        parts: Vec<String>,
        /// Name literals; one per part.
        #[arg(long, num_args = 1.., required = true)]
        names: Vec<String>,
        #[command(flatten)]
        algebra: AlgebraArg,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Report {
    body: Value,
    passed: bool,
}

fn report(body: impl Serialize, passed: bool) -> Result<Report, String> {
    Ok(Report {
        body: serde_json::to_value(body).map_err(|e| e.to_string())?,
        passed,
    })
}

/// Rounds every number to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round_sig(x)))
            .map_or(Value::Number(n), Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn load(cli: &Cli) -> Result<Scenario, String> {
    let path = cli.scenario.as_ref().ok_or("this command needs --scenario <FILE>")?;
    ingest(path)
}

fn algebra(cli: &Cli, arg: &AlgebraArg) -> Result<BooleanAlgebra, String> {
    let atoms = match (arg.atoms, &cli.scenario) {
        (Some(n), _) => n,
        (None, Some(_)) => load(cli)?.space.block_count(),
        (None, None) => return Err("give --atoms <N> or --scenario <FILE>".into()),
    };
    BooleanAlgebra::new(atoms).map_err(|e| format!("--atoms: {e}"))
}

fn literal_error(what: &str, text: &str, e: LiteralError) -> String {
    format!("{what} '{text}': {e}")
}

fn dispatch(cli: &Cli) -> Result<Report, String> {
    match &cli.command {
        Command::Space(SpaceCmd::Validate) => {
            let s = load(cli)?;
            report(
                json!({"atoms": s.space.atom_count(), "blocks": s.space.block_count()}),
                true,
            )
        }
        Command::Risk(RiskCmd::Eval { measure, payoff }) => {
            let s = load(cli)?;
            let rho = s.measure(measure)?;
            let value = rho.evaluate(s.payoff(*payoff)?).map_err(|e| e.to_string())?;
            report(json!({"measure": rho.label(), "payoff": payoff, "value": value}), true)
        }
        Command::Risk(RiskCmd::CheckAxioms {
            measure,
            trials,
            seed,
            axioms,
        }) => {
            let s = load(cli)?;
            let rho = s.measure(measure)?;
            let list = if axioms.is_empty() {
                Axiom::ALL.to_vec()
            } else {
                axioms
                    .iter()
                    .map(|a| Axiom::parse(a).ok_or_else(|| format!("--axioms: unknown axiom '{a}'")))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let reports = list
                .into_iter()
                .map(|a| check_axiom(rho.as_ref(), a, *trials, *seed))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            let passed = reports.iter().all(|r| r.passed);
            report(
                json!({"measure": rho.label(), "passed": passed, "reports": reports}),
                passed,
            )
        }
        Command::Dual(DualCmd::Penalty { measure, y, method }) => {
            let s = load(cli)?;
            let rho = s.measure(measure)?;
            let values: Vec<f64> = serde_json::from_str(y).map_err(|e| format!("--y: {e}"))?;
            let y = DualVariable::new(values).map_err(|e| format!("--y: {e}"))?;
            let admissible = y.admissible_on(&s.space).map_err(|e| format!("--y: {e}"))?;
            let method = match method.as_deref() {
                Some("closed_form") => FenchelMethod::ClosedForm,
                Some("grid_refine") => FenchelMethod::GridRefine,
                Some(other) => return Err(format!("--method: unknown method '{other}'")),
                None => {
                    if rho.closed_form_penalty(y.as_rv()).is_some() {
                        FenchelMethod::ClosedForm
                    } else {
                        FenchelMethod::GridRefine
                    }
                }
            };
            let penalty = fenchel(rho.as_ref(), &y, method).map_err(|e| e.to_string())?;
            report(
                json!({"measure": rho.label(), "method": method, "penalty": penalty, "admissible_on": admissible}),
                true,
            )
        }
        Command::Dual(DualCmd::Represent { measure, payoff, tol }) => {
            let s = load(cli)?;
            let rho = s.measure(measure)?;
            let payoffs = match payoff {
                Some(k) => vec![s.payoff(*k)?.clone()],
                None => s.payoffs.clone(),
            };
            let rep = verify_representation(rho.as_ref(), &payoffs, *tol, &DualSearchConfig::default())
                .map_err(|e| e.to_string())?;
            let passed = rep.all_attained;
            report(rep, passed)
        }
        Command::Transfer(TransferCmd::Verify { measure, items, tol }) => {
            let s = load(cli)?;
            let rho = s.measure(measure)?;
            let rep = transfer_verify(rho.as_ref(), items, &s.payoffs, *tol).map_err(|e| e.to_string())?;
            let passed = rep.all_equivalences_hold;
            report(rep, passed)
        }
        Command::Bvm(BvmCmd::Eval {
            formula,
            binds,
            algebra: arg,
        }) => {
            let u = Universe::new(algebra(cli, arg)?);
            let mut env = Env::new();
            let mut lits = BTreeMap::new();
            for b in binds {
                let (name, text) = b
                    .split_once('=')
                    .ok_or_else(|| format!("--bind '{b}': expected NAME=<literal>"))?;
                let lit = NameLit::parse(text).map_err(|e| literal_error("--bind", b, e))?;
                env.insert(
                    name.to_string(),
                    u.realize(&lit).map_err(|e| format!("--bind '{b}': {e}"))?,
                );
                lits.insert(name.to_string(), lit);
            }
            let free: Vec<&str> = env.keys().map(String::as_str).collect();
            let f = Formula::parse_with(formula, &free).map_err(|e| format!("formula: {e}"))?;
            let truth = evaluate(&u, &f, &env).map_err(|e| e.to_string())?;
            report(json!({"formula": f.print(), "truth": truth}), true)
        }
        Command::Bvm(BvmCmd::Mix {
            parts,
            names,
            algebra: arg,
        }) => {
            let alg = algebra(cli, arg)?;
            if parts.len() != names.len() {
                return Err(format!(
                    "--parts has {} entries but --names has {}",
                    parts.len(),
                    names.len()
                ));
            }
            let u = Universe::new(alg);
            let mut elems = Vec::with_capacity(parts.len());
            for p in parts {
                let atoms = parse_atom_set(p).map_err(|e| literal_error("--parts", p, e))?;
                if let Some(&bad) = atoms.iter().find(|&&a| a > alg.atom_count()) {
                    return Err(format!("--parts '{p}': atom {bad} of {}", alg.atom_count()));
                }
                elems.push(alg.from_atoms(atoms.iter().map(|a| a - 1)).map_err(|e| e.to_string())?);
            }
            let named = names
                .iter()
                .map(|n| {
                    let lit = NameLit::parse(n).map_err(|e| literal_error("--names", n, e))?;
                    u.realize(&lit).map_err(|e| format!("--names '{n}': {e}"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let partition = PartitionOfUnity::new(elems.clone()).map_err(|e| format!("--parts: {e}"))?;
            let kept: Vec<_> = elems
                .iter()
                .zip(&named)
                .filter(|(a, _)| !a.is_zero())
                .map(|(_, n)| *n)
                .collect();
            let mix = u.mix_names(&partition, &kept).map_err(|e| e.to_string())?;
            let mut checks = Vec::with_capacity(elems.len());
            let mut verified = true;
            for (&a, n) in elems.iter().zip(&named) {
                let eq = u.eq(mix, *n).map_err(|e| e.to_string())?;
                verified &= a.le(eq);
                checks.push(json!({"part": a, "eq": eq, "holds": a.le(eq)}));
            }
            let literal = u.to_literal(mix).map_err(|e| e.to_string())?.to_string();
            report(
                json!({"mix": literal, "checks": checks, "verified": verified}),
                verified,
            )
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    match dispatch(&cli) {
        Ok(r) => Outcome {
            code: if r.passed { 0 } else { 1 },
            stdout: serde_json::to_string_pretty(&round_json(r.body)).expect("JSON values serialize") + "\n",
            stderr: String::new(),
        },
        Err(message) => Outcome {
            code: 2,
            stdout: serde_json::to_string_pretty(&json!({"error": message})).expect("JSON values serialize") + "\n",
            stderr: format!("error: {message}\n"),
        },
    }
}
