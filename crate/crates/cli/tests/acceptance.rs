//! Acceptance suite. Runs every criterion in order, prints one line each and
//! exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use condrisk::bvm::interp::verify_interp_props;
use condrisk::bvm::AtomicKind;
use condrisk::duality::{verify_representation, DualSearchConfig, DualVariable};
use condrisk::fixtures::{random_formula, random_name_literal, s4, seeded_payoffs, seeded_space};
use condrisk::formula::{collapsed_truth, evaluate, Env, Formula};
use condrisk::modelspaces::{
    holder_conjugate, inequality_check, uniform_grid, young_conjugate, ModuleSpec, YoungFunction,
};
use condrisk::riskcore::{check_axiom, Axiom};
use condrisk::transfer::{fenchel_consistency, tilted_neg_expectation, transfer_verify};
use condrisk::{
    BooleanAlgebra, BuiltinMeasure, CondRiskMeasure, FiniteProbSpace, FnMeasure, PartitionOfUnity, RandomVariable,
    SpaceRef, Universe,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn spaces() -> Vec<(&'static str, SpaceRef)> {
    vec![
        ("S4", Arc::new(s4())),
        ("seeded(8,3)", Arc::new(seeded_space(8, 3, 2024))),
    ]
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    if took > limit {
        Err(format!("took {took:.2?}, limit {limit:?}"))
    } else {
        Ok(took)
    }
}

fn seeded_duals(space: &FiniteProbSpace, count: usize, seed: u64) -> Vec<DualVariable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let mut y = vec![0.0; space.atom_count()];
            for j in 0..space.block_count() {
                let w: Vec<f64> = space
                    .block(j)
                    .iter()
                    .map(|_| rng.gen_range(0.0..1.0f64).powi(2))
                    .collect();
                let total: f64 = w.iter().sum::<f64>().max(1e-12);
                // every fourth dual is off the density simplex somewhere
                let scale = if k % 4 == 3 && rng.gen_bool(0.5) {
                    rng.gen_range(0.5..1.5)
                } else {
                    1.0
                };
                for (&i, wi) in space.block(j).iter().zip(&w) {
                    y[i] = -scale * (wi / total) / space.cond_prob(i);
                }
            }
            DualVariable::new(y).unwrap()
        })
        .collect()
}

fn duality_closure() -> Verdict {
    let start = Instant::now();
    let mut worst_gap: f64 = 0.0;
    let mut runs = 0;
    for (label, space) in spaces() {
        let payoffs = seeded_payoffs(&space, 20, 5.0, 11);
        for rho in BuiltinMeasure::catalog(&space) {
            let rep =
                verify_representation(&rho, &payoffs, 1e-6, &DualSearchConfig::default()).map_err(|e| e.to_string())?;
            for e in &rep.entries {
                let direct = rho.evaluate(&e.payoff).map_err(|e| e.to_string())?;
                let gap = direct.max_abs_diff(&e.dual);
                worst_gap = worst_gap.max(gap);
                if gap > 1e-6 {
                    return Err(format!("{label} {}: gap {gap:e}", rho.label()));
                }
                let e_y = space.cond_expect(e.maximizer.as_rv()).map_err(|e| e.to_string())?;
                let off = e_y.values().iter().map(|v| (v + 1.0).abs()).fold(0.0, f64::max);
                if off > 1e-10 || e.maximizer.values().iter().any(|&v| v > 0.0) {
                    return Err(format!("{label} {}: maximizer off the simplex by {off:e}", rho.label()));
                }
                runs += 1;
            }
            if !rep.all_attained {
                return Err(format!("{label} {}: not all attained", rho.label()));
            }
        }
    }
    let took = within(Duration::from_secs(5), start)?;
    Ok(format!(
        "{runs} payoff/measure pairs, max gap {worst_gap:.1e}, {took:.2?}"
    ))
}

fn fenchel_agreement() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut infinite = 0;
    for (label, space) in spaces() {
        let duals = seeded_duals(&space, 50, 21);
        for rho in BuiltinMeasure::catalog(&space) {
            let rep = fenchel_consistency(&rho, &duals, 1e-6).map_err(|e| e.to_string())?;
            if rep.infinity_mismatches > 0 {
                return Err(format!(
                    "{label} {}: {} infinity mismatches",
                    rho.label(),
                    rep.infinity_mismatches
                ));
            }
            if !rep.all_agree {
                return Err(format!(
                    "{label} {}: max deviation {:e}",
                    rho.label(),
                    rep.max_deviation
                ));
            }
            worst = worst.max(rep.max_deviation);
            infinite += rep
                .entries
                .iter()
                .flat_map(|e| &e.conditional)
                .filter(|v| v.is_infinite())
                .count();
        }
    }
    if infinite == 0 {
        return Err("no +inf penalties were exercised".into());
    }
    let took = within(Duration::from_secs(5), start)?;
    Ok(format!(
        "max deviation {worst:.1e}, {infinite} matching +inf entries, {took:.2?}"
    ))
}

fn factorization() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut mismatches = 0;
    let mut compared = 0;
    for _ in 0..50 {
        let m = rng.gen_range(1..=3);
        let u = Universe::new(BooleanAlgebra::new(m).unwrap());
        let a = u.realize(&random_name_literal(&mut rng, m, 3)).unwrap();
        let b = u.realize(&random_name_literal(&mut rng, m, 3)).unwrap();
        assert!(u.rank(a).unwrap() <= 3 && u.rank(b).unwrap() <= 3);
        let eq = u.truth_atomic(a, b, AtomicKind::Eq).unwrap();
        let el = u.truth_atomic(a, b, AtomicKind::Elem).unwrap();
        for j in 0..m {
            let (ca, cb) = (u.atom_collapse(a, j).unwrap(), u.atom_collapse(b, j).unwrap());
            mismatches += usize::from(eq.contains_atom(j) != (ca == cb));
            mismatches += usize::from(el.contains_atom(j) != cb.contains(&ca));
            compared += 2;
        }
    }
    let took = within(Duration::from_secs(1), start)?;
    if mismatches > 0 {
        return Err(format!("{mismatches} mismatches of {compared}"));
    }
    Ok(format!("0 mismatches over {compared} atom verdicts, {took:.2?}"))
}

fn mixing() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for case in 0..20 {
        let m = rng.gen_range(1..=4);
        let alg = BooleanAlgebra::new(m).unwrap();
        let u = Universe::new(alg);
        let k = rng.gen_range(1..=m);
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut rng);
        let mut groups: Vec<Vec<usize>> = order[..k].iter().map(|&a| vec![a]).collect();
        for &a in &order[k..] {
            groups[rng.gen_range(0..k)].push(a);
        }
        let parts: Vec<_> = groups
            .iter()
            .map(|g| alg.from_atoms(g.iter().copied()).unwrap())
            .collect();
        let partition = PartitionOfUnity::new(parts.clone()).unwrap();
        let names: Vec<_> = (0..k)
            .map(|_| u.realize(&random_name_literal(&mut rng, m, 3)).unwrap())
            .collect();
        let mix = u.mix_names(&partition, &names).unwrap();
        for (&a, n) in parts.iter().zip(&names) {
            let eq = u.eq(mix, *n).unwrap();
            if !a.le(eq) {
                return Err(format!("case {case}: [[mix = u_k]] = {eq:?} does not cover part {a:?}"));
            }
        }
        let again = u.mix_names(&partition, &vec![mix; k]).unwrap();
        if again.canonical_id() != mix.canonical_id() {
            return Err(format!("case {case}: remixing changed the canonical id"));
        }
    }
    Ok("20 partitions, every part below its equality value, remix idempotent".into())
}

fn interpretation() -> Verdict {
    let rep = verify_interp_props(&s4(), 100, 51).map_err(|e| e.to_string())?;
    let failing: Vec<_> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.property).collect();
    if !failing.is_empty() || !rep.all_passed {
        return Err(format!("failing: {failing:?}"));
    }
    let worst = rep.checks.iter().map(|c| c.max_error).fold(0.0, f64::max);
    if worst > 1e-12 {
        return Err(format!("max error {worst:e}"));
    }
    Ok(format!("{} properties, max error {worst:.1e}", rep.checks.len()))
}

/// `−max` of each block: monotone and cash invariant, but concave.
fn best_case(space: SpaceRef) -> FnMeasure {
    FnMeasure::new(space, "best_case", |s, x| {
        (0..s.block_count())
            .map(|j| {
                -s.block(j)
                    .iter()
                    .map(|&i| x.values()[i])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    })
}

fn axioms() -> Verdict {
    let space: SpaceRef = Arc::new(s4());
    let mut checked = 0;
    for rho in BuiltinMeasure::catalog(&space) {
        for axiom in Axiom::ALL {
            let r = check_axiom(&rho, axiom, 1000, 61).map_err(|e| e.to_string())?;
            if !r.passed || r.violations > 0 {
                return Err(format!("{} fails {axiom:?}: {:?}", rho.label(), r.counterexample));
            }
            checked += 1;
        }
    }
    let broken = best_case(space);
    let r = check_axiom(&broken, Axiom::Convexity, 1000, 61).map_err(|e| e.to_string())?;
    let Some(cx) = r.counterexample else {
        return Err("non-convex measure was not flagged".into());
    };
    if r.passed {
        return Err("non-convex measure passed convexity".into());
    }
    Ok(format!(
        "{checked} built-in checks clean; best_case flagged at trial {} block {}",
        cx.trial,
        cx.block + 1
    ))
}

fn young_holder() -> Verdict {
    let phi = YoungFunction::quadratic();
    let psi = young_conjugate(&phi, uniform_grid(20.0, 400));
    let back = young_conjugate(&psi, uniform_grid(10.0, 200));
    let dev = uniform_grid(10.0, 200)
        .into_iter()
        .map(|s| (back.eval(s) - s * s / 2.0).abs())
        .fold(0.0, f64::max);
    if dev > 2e-6 {
        return Err(format!("double conjugate deviates by {dev:e}"));
    }
    let space = seeded_space(8, 3, 71);
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut cases = 0;
    for p in [1.0, 2.0, 4.0] {
        let q = holder_conjugate(p).map_err(|e| e.to_string())?;
        let pair = (ModuleSpec::lp(p).unwrap(), ModuleSpec::lp(q).unwrap());
        for _ in 0..100 {
            let draw = |rng: &mut ChaCha8Rng| {
                RandomVariable::new((0..space.atom_count()).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap()
            };
            let (x, y) = (draw(&mut rng), draw(&mut rng));
            let rep = inequality_check(&x, &y, (&pair.0, &pair.1), &space).map_err(|e| e.to_string())?;
            if !rep.holds {
                return Err(format!("Hölder fails for p = {p}: {:?}", rep.blocks));
            }
            cases += 1;
        }
    }
    Ok(format!("double conjugate within {dev:.1e}; Hölder on {cases} pairs"))
}

fn transfer() -> Verdict {
    let space: SpaceRef = Arc::new(s4());
    let payoffs = seeded_payoffs(&space, 20, 5.0, 81);
    let items = [1, 2, 3, 4, 5, 7];
    for rho in BuiltinMeasure::catalog(&space) {
        let rep = transfer_verify(&rho, &items, &payoffs, 1e-6).map_err(|e| e.to_string())?;
        if let Some(bad) = rep.items.iter().find(|i| !i.equivalence_holds) {
            return Err(format!("{}: item {} ({}) breaks", rho.label(), bad.item, bad.property));
        }
        if !rep
            .items
            .iter()
            .all(|i| i.conditional && i.classical.iter().all(|&c| c))
        {
            return Err(format!("{}: some property fails on both sides", rho.label()));
        }
    }
    let tilt = tilted_neg_expectation(space.clone(), 0, vec![0.75, 0.25]).unwrap();
    let rep = transfer_verify(&tilt, &[5], &payoffs, 1e-6).map_err(|e| e.to_string())?;
    let item = &rep.items[0];
    if item.conditional || item.classical != [false, true] || !item.equivalence_holds {
        return Err(format!(
            "tilt item 5: conditional {} classical {:?}",
            item.conditional, item.classical
        ));
    }
    Ok("4 built-ins hold items 1-5,7; tilt fails item 5 exactly on atom 1".into())
}

const CORPUS: [&str; 20] = [
    "empty = empty",
    "empty in check({{}})",
    "!(empty = check({{}}))",
    "(empty = empty) & (empty in check({{}}))",
    "(empty = empty) | !(empty = empty)",
    "(empty in empty) -> (empty = check({}))",
    "forall x in check({{},{{}}}) . x in check({{},{{}}})",
    "exists x in name{empty: {1}} . x = empty",
    "forall x in name{empty: {1}, check({{}}): {2}} . exists y in check({{},{{}}}) . x = y",
    "exists x in mix[{1}: check({{}}); {2}: empty] . !(x = check({}))",
    "forall x in empty . x in x",
    "!(forall x in check({{}}) . !(x = empty))",
    "exists x in check({{{}}}) . exists y in x . y = empty",
    "(forall x in name{empty: {2}} . x = empty) -> (empty in name{empty: {2}})",
    "name{empty: {1}} = mix[{1}: check({{}}); {2}: empty]",
    "name{empty: {1,2}} in check({{{}},{}})",
    "forall x in check({{},{{}}}) . (x = empty) | (empty in x)",
    "!(!(empty = empty))",
    "exists x in name{name{empty: {1}}: {2}} . forall y in x . y = empty",
    "(empty = empty) & ((empty in empty) | (check({{}}) = check({{}})))",
];

fn formulas() -> Verdict {
    let u = Universe::new(BooleanAlgebra::new(2).unwrap());
    let env = Env::new();
    for text in CORPUS {
        let f = Formula::parse(text).map_err(|e| format!("{text}: {e}"))?;
        let printed = f.print();
        let again = Formula::parse(&printed).map_err(|e| format!("{printed}: {e}"))?;
        if again != f || again.print() != printed {
            return Err(format!("round trip changed {text}"));
        }
        if evaluate(&u, &f, &env).unwrap() != collapsed_truth(&u, &f, &env).unwrap() {
            return Err(format!("corpus formula {text} breaks factorization"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let mut mismatches = 0;
    for _ in 0..100 {
        let m = rng.gen_range(1..=3);
        let u = Universe::new(BooleanAlgebra::new(m).unwrap());
        let f = random_formula(&mut rng, m, 2, &[]);
        assert!(f.quantifier_depth() <= 2);
        mismatches += usize::from(evaluate(&u, &f, &env).unwrap() != collapsed_truth(&u, &f, &env).unwrap());
    }
    if mismatches > 0 {
        return Err(format!("{mismatches} factorization mismatches"));
    }
    Ok("100 random formulas, 0 mismatches; 20-formula corpus round-trips".into())
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn keys(v: &Value) -> Vec<String> {
    v.as_object().map(|o| o.keys().cloned().collect()).unwrap_or_default()
}

fn sv(args: &[&str]) -> Vec<String> {
    args.iter().map(|a| a.to_string()).collect()
}

fn cli() -> Verdict {
    let s4 = fixture("s4.json");
    let tilted = fixture("s4_tilted.json");
    let validate = |file: &str| sv(&["-s", &fixture(file), "space", "validate"]);
    let cases: Vec<(Vec<String>, i32, &[&str])> = vec![
        (validate("s4.json"), 0, &["atoms", "blocks"]),
        (validate("probs_sum_0_9.json"), 2, &["error"]),
        (validate("atom_out_of_range.json"), 2, &["error"]),
        (validate("bad_kind.json"), 2, &["error"]),
        (validate("malformed.json"), 2, &["error"]),
        (
            sv(&["-s", &s4, "risk", "eval", "--measure", "entropic", "--payoff", "0"]),
            0,
            &["measure", "payoff", "value"],
        ),
        (
            sv(&[
                "-s",
                &s4,
                "risk",
                "check-axioms",
                "--measure",
                "avar",
                "--trials",
                "300",
            ]),
            0,
            &["measure", "passed", "reports"],
        ),
        (
            sv(&[
                "-s",
                &tilted,
                "risk",
                "check-axioms",
                "--measure",
                "0",
                "--trials",
                "300",
            ]),
            1,
            &["measure", "passed", "reports"],
        ),
        (
            sv(&[
                "-s",
                &s4,
                "dual",
                "penalty",
                "--measure",
                "entropic",
                "--y",
                "[-2,0,-1,-1]",
            ]),
            0,
            &["admissible_on", "measure", "method", "penalty"],
        ),
        (
            sv(&[
                "-s",
                &s4,
                "dual",
                "represent",
                "--measure",
                "worst_case",
                "--payoff",
                "1",
            ]),
            0,
            &["all_attained", "entries", "measure", "note", "tol", "warnings"],
        ),
        (
            sv(&[
                "-s",
                &tilted,
                "transfer",
                "verify",
                "--measure",
                "0",
                "--items",
                "1,2,5",
            ]),
            0,
            &["all_equivalences_hold", "items", "measure", "tol"],
        ),
        (
            sv(&[
                "bvm",
                "eval",
                "forall x in u . x = empty",
                "--bind",
                "u=name{empty: {1}}",
                "--atoms",
                "2",
            ]),
            0,
            &["formula", "truth"],
        ),
        (sv(&["bvm", "eval", "empty = ", "--atoms", "2"]), 2, &["error"]),
        (
            sv(&[
                "bvm",
                "mix",
                "--parts",
                "{1}",
                "{2}",
                "--names",
                "empty",
                "check({{}})",
                "--atoms",
                "2",
            ]),
            0,
            &["checks", "mix", "verified"],
        ),
    ];
    for (args, code, shape) in &cases {
        let out = Command::new(env!("CARGO_BIN_EXE_condrisk"))
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        let got = out.status.code().unwrap_or(-1);
        let json: Value =
            serde_json::from_slice(&out.stdout).map_err(|e| format!("{args:?}: stdout is not JSON: {e}"))?;
        if got != *code || keys(&json) != *shape {
            return Err(format!("{args:?}: exit {got}, keys {:?}", keys(&json)));
        }
    }
    Ok(format!("{} invocations with exact exit codes and shapes", cases.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("duality closure", duality_closure),
        ("fenchel consistency", fenchel_agreement),
        ("factorization oracle", factorization),
        ("mixing principle", mixing),
        ("interpretation properties", interpretation),
        ("axiom suite", axioms),
        ("young and hoelder", young_holder),
        ("transfer equivalences", transfer),
        ("formula evaluator", formulas),
        ("cli fixtures", cli),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match verdict {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
