//! Bounded first-order formulas over names.
//!
//! ```text
//! formula := disj ('->' disj)?
//! disj    := conj ('|' conj)*
//! conj    := atom ('&' atom)*
//! atom    := '!' atom | '(' formula ')' | term '=' term | term 'in' term
//!          | ('forall' | 'exists') IDENT 'in' term '.' formula
//! term    := IDENT | name literal
//! ```
//!
//! Quantifiers are evaluated relative to the canonical entries of the
//! domain: `⟦∀x∈v φ⟧ = ⋀_t (v(t) ⇒ ⟦φ(t)⟧)` and `⟦∃x∈v φ⟧ = ⋁_t (v(t) ∧ ⟦φ(t)⟧)`.
//! For domains with `⟦v ≠ ∅⟧ < I` this is an extension of the descent form,
//! which is only stated for nonempty domains.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::boolalg::BoolElem;
use crate::bvm::{
    is_literal_keyword, maximum_witness_by, BvmError, Cursor, HfSet, Name, NameLit, Universe, WitnessReport,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Lit(NameLit),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Eq(Term, Term),
    In(Term, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    ForallIn {
        var: String,
        domain: Term,
        body: Box<Formula>,
    },
    ExistsIn {
        var: String,
        domain: Term,
        body: Box<Formula>,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulaError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unbound variable '{name}' at position {position}")]
    Unbound { name: String, position: usize },
    #[error("no binding for free variable '{0}'")]
    MissingBinding(String),
    #[error("expected exactly one free variable, found {0:?}")]
    FreeVariables(Vec<String>),
    #[error(transparent)]
    Bvm(#[from] BvmError),
}

/// Name bindings for free variables.
pub type Env = BTreeMap<String, Name>;

const RESERVED: [&str; 3] = ["forall", "exists", "in"];

fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word) || is_literal_keyword(word)
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
    bound: Vec<String>,
    free: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        self.pos = self.text.len() - self.rest().trim_start().len();
    }

    fn syntax(&self, message: impl Into<String>) -> FormulaError {
        FormulaError::Syntax {
            position: self.pos,
            message: message.into(),
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), FormulaError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.syntax(format!("expected '{token}'")))
        }
    }

    fn peek_ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let first = rest.chars().next()?;
        if !(first.is_ascii_alphabetic() || first == '_') {
            return None;
        }
        let len = rest
            .char_indices()
            .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
            .map_or(rest.len(), |(i, _)| i);
        Some(&rest[..len])
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_ident() == Some(kw) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn variable(&mut self) -> Result<String, FormulaError> {
        match self.peek_ident() {
            Some(word) if !is_reserved(word) => {
                self.pos += word.len();
                Ok(word.to_string())
            }
            Some(word) => Err(self.syntax(format!("'{word}' is reserved"))),
            None => Err(self.syntax("expected a variable")),
        }
    }

    fn term(&mut self) -> Result<Term, FormulaError> {
        match self.peek_ident() {
            Some(word) if is_literal_keyword(word) => {
                let mut c = Cursor::new(self.text, self.pos);
                let lit = c.name_lit().map_err(|e| FormulaError::Syntax {
                    position: e.position,
                    message: e.message,
                })?;
                self.pos = c.pos();
                Ok(Term::Lit(lit))
            }
            Some(word) if !RESERVED.contains(&word) => {
                let position = self.pos;
                self.pos += word.len();
                if self.bound.iter().any(|b| b == word) || self.free.contains(&word) {
                    Ok(Term::Var(word.to_string()))
                } else {
                    Err(FormulaError::Unbound {
                        name: word.to_string(),
                        position,
                    })
                }
            }
            _ => Err(self.syntax("expected a variable or name literal")),
        }
    }

    fn formula(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.disj()?;
        if self.eat("->") {
            let rhs = self.disj()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> Result<Formula, FormulaError> {
        let mut f = self.conj()?;
        while self.eat("|") {
            f = Formula::Or(Box::new(f), Box::new(self.conj()?));
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<Formula, FormulaError> {
        let mut f = self.atom()?;
        while self.eat("&") {
            f = Formula::And(Box::new(f), Box::new(self.atom()?));
        }
        Ok(f)
    }

    fn quantifier(&mut self, forall: bool) -> Result<Formula, FormulaError> {
        let var = self.variable()?;
        if !self.eat_keyword("in") {
            return Err(self.syntax("expected 'in'"));
        }
        let domain = self.term()?;
        self.expect(".")?;
        self.bound.push(var.clone());
        let body = Box::new(self.formula()?);
        self.bound.pop();
        Ok(if forall {
            Formula::ForallIn { var, domain, body }
        } else {
            Formula::ExistsIn { var, domain, body }
        })
    }

    fn atom(&mut self) -> Result<Formula, FormulaError> {
        if self.eat("!") {
            return Ok(Formula::Not(Box::new(self.atom()?)));
        }
        if self.eat("(") {
            let f = self.formula()?;
            self.expect(")")?;
            return Ok(f);
        }
        if self.eat_keyword("forall") {
            return self.quantifier(true);
        }
        if self.eat_keyword("exists") {
            return self.quantifier(false);
        }
        let lhs = self.term()?;
        if self.eat("=") {
            return Ok(Formula::Eq(lhs, self.term()?));
        }
        if self.eat_keyword("in") {
            return Ok(Formula::In(lhs, self.term()?));
        }
        Err(self.syntax("expected '=' or 'in'"))
    }
}

impl Formula {
    /// Parses a closed formula.
    pub fn parse(text: &str) -> Result<Self, FormulaError> {
        Self::parse_with(text, &[])
    }

    /// Parses a formula whose free variables are among `free`.
    pub fn parse_with(text: &str, free: &[&str]) -> Result<Self, FormulaError> {
        let mut p = Parser {
            text,
            pos: 0,
            bound: Vec::new(),
            free,
        };
        let f = p.formula()?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(p.syntax("unexpected trailing input"));
        }
        Ok(f)
    }

    /// Fully parenthesized text.
    pub fn print(&self) -> String {
        self.to_string()
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        fn term(t: &Term, bound: &[&str], out: &mut BTreeSet<String>) {
            if let Term::Var(v) = t {
                if !bound.contains(&v.as_str()) {
                    out.insert(v.clone());
                }
            }
        }
        fn go<'a>(f: &'a Formula, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
            match f {
                Formula::Eq(a, b) | Formula::In(a, b) => {
                    term(a, bound, out);
                    term(b, bound, out);
                }
                Formula::Not(g) => go(g, bound, out),
                Formula::And(g, h) | Formula::Or(g, h) | Formula::Implies(g, h) => {
                    go(g, bound, out);
                    go(h, bound, out);
                }
                Formula::ForallIn { var, domain, body } | Formula::ExistsIn { var, domain, body } => {
                    term(domain, bound, out);
                    bound.push(var);
                    go(body, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn quantifier_depth(&self) -> usize {
        match self {
            Self::Eq(..) | Self::In(..) => 0,
            Self::Not(g) => g.quantifier_depth(),
            Self::And(g, h) | Self::Or(g, h) | Self::Implies(g, h) => g.quantifier_depth().max(h.quantifier_depth()),
            Self::ForallIn { body, .. } | Self::ExistsIn { body, .. } => 1 + body.quantifier_depth(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Var(v) => f.write_str(v),
            Self::Lit(l) => write!(f, "{l}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Eq(a, b) => write!(f, "({a} = {b})"),
            Self::In(a, b) => write!(f, "({a} in {b})"),
            Self::Not(g) => write!(f, "(!{g})"),
            Self::And(g, h) => write!(f, "({g} & {h})"),
            Self::Or(g, h) => write!(f, "({g} | {h})"),
            Self::Implies(g, h) => write!(f, "({g} -> {h})"),
            Self::ForallIn { var, domain, body } => write!(f, "(forall {var} in {domain} . {body})"),
            Self::ExistsIn { var, domain, body } => write!(f, "(exists {var} in {domain} . {body})"),
        }
    }
}

struct Evaluator<'a> {
    universe: &'a Universe,
    env: &'a Env,
    scope: Vec<(&'a str, Name)>,
}

impl<'a> Evaluator<'a> {
    fn term(&self, t: &Term) -> Result<Name, FormulaError> {
        match t {
            Term::Lit(l) => Ok(self.universe.realize(l)?),
            Term::Var(v) => self
                .scope
                .iter()
                .rev()
                .find(|(n, _)| n == v)
                .map(|(_, name)| *name)
                .or_else(|| self.env.get(v).copied())
                .ok_or_else(|| FormulaError::MissingBinding(v.clone())),
        }
    }

    fn eval(&mut self, f: &'a Formula) -> Result<BoolElem, FormulaError> {
        let alg = self.universe.algebra();
        Ok(match f {
            Formula::Eq(a, b) => self.universe.eq(self.term(a)?, self.term(b)?)?,
            Formula::In(a, b) => self.universe.elem(self.term(a)?, self.term(b)?)?,
            Formula::Not(g) => !self.eval(g)?,
            Formula::And(g, h) => self.eval(g)? & self.eval(h)?,
            Formula::Or(g, h) => self.eval(g)? | self.eval(h)?,
            Formula::Implies(g, h) => self.eval(g)?.implies(self.eval(h)?),
            Formula::ForallIn { var, domain, body } => {
                let mut acc = alg.one();
                for (t, a) in self.universe.entries(self.term(domain)?)? {
                    acc = acc & a.implies(self.with(var, t, body)?);
                }
                acc
            }
            Formula::ExistsIn { var, domain, body } => {
                let mut acc = alg.zero();
                for (t, a) in self.universe.entries(self.term(domain)?)? {
                    acc = acc | (a & self.with(var, t, body)?);
                }
                acc
            }
        })
    }

    fn with(&mut self, var: &'a str, t: Name, body: &'a Formula) -> Result<BoolElem, FormulaError> {
        self.scope.push((var, t));
        let r = self.eval(body);
        self.scope.pop();
        r
    }
}

/// `⟦f⟧` with free variables bound by `env`.
pub fn evaluate(universe: &Universe, f: &Formula, env: &Env) -> Result<BoolElem, FormulaError> {
    Evaluator {
        universe,
        env,
        scope: Vec::new(),
    }
    .eval(f)
}

struct Collapsed<'a> {
    universe: &'a Universe,
    env: &'a Env,
    atom: usize,
    scope: Vec<(&'a str, HfSet)>,
}

impl<'a> Collapsed<'a> {
    fn term(&self, t: &Term) -> Result<HfSet, FormulaError> {
        match t {
            Term::Lit(l) => Ok(self.universe.atom_collapse(self.universe.realize(l)?, self.atom)?),
            Term::Var(v) => {
                if let Some((_, h)) = self.scope.iter().rev().find(|(n, _)| n == v) {
                    return Ok(h.clone());
                }
                let name = self.env.get(v).ok_or_else(|| FormulaError::MissingBinding(v.clone()))?;
                Ok(self.universe.atom_collapse(*name, self.atom)?)
            }
        }
    }

    fn eval(&mut self, f: &'a Formula) -> Result<bool, FormulaError> {
        Ok(match f {
            Formula::Eq(a, b) => self.term(a)? == self.term(b)?,
            Formula::In(a, b) => self.term(b)?.contains(&self.term(a)?),
            Formula::Not(g) => !self.eval(g)?,
            Formula::And(g, h) => self.eval(g)? & self.eval(h)?,
            Formula::Or(g, h) => self.eval(g)? | self.eval(h)?,
            Formula::Implies(g, h) => !self.eval(g)? | self.eval(h)?,
            Formula::ForallIn { var, domain, body } => {
                let dom = self.term(domain)?;
                let mut all = true;
                for x in dom.members() {
                    all &= self.with(var, x.clone(), body)?;
                }
                all
            }
            Formula::ExistsIn { var, domain, body } => {
                let dom = self.term(domain)?;
                let mut any = false;
                for x in dom.members() {
                    any |= self.with(var, x.clone(), body)?;
                }
                any
            }
        })
    }

    fn with(&mut self, var: &'a str, x: HfSet, body: &'a Formula) -> Result<bool, FormulaError> {
        self.scope.push((var, x));
        let r = self.eval(body);
        self.scope.pop();
        r
    }
}

/// Two-valued evaluation in the collapse at `atom` (0-based).
pub fn evaluate_collapsed(universe: &Universe, f: &Formula, env: &Env, atom: usize) -> Result<bool, FormulaError> {
    Collapsed {
        universe,
        env,
        atom,
        scope: Vec::new(),
    }
    .eval(f)
}

/// Atoms at which the collapsed formula holds.
pub fn collapsed_truth(universe: &Universe, f: &Formula, env: &Env) -> Result<BoolElem, FormulaError> {
    let alg = universe.algebra();
    let mut atoms = Vec::new();
    for b in 0..alg.atom_count() {
        if evaluate_collapsed(universe, f, env, b)? {
            atoms.push(b);
        }
    }
    Ok(alg.from_atoms(atoms).map_err(BvmError::from)?)
}

/// Witness for `∃x∈v φ(x)`, where `x` is the one free variable of `phi` not
/// bound in `env`.
pub fn maximum_witness(universe: &Universe, phi: &Formula, v: Name, env: &Env) -> Result<WitnessReport, FormulaError> {
    let free: Vec<String> = phi.free_vars().into_iter().filter(|x| !env.contains_key(x)).collect();
    let [x] = free.as_slice() else {
        return Err(FormulaError::FreeVariables(free));
    };
    let eval_at = |t: Name| {
        let mut e = env.clone();
        e.insert(x.clone(), t);
        evaluate(universe, phi, &e)
    };
    maximum_witness_by(universe, v, &eval_at)
}
