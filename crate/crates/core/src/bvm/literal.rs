//! Text format for names:
//! `empty`, `check({{},{{}}})`, `name{empty: {1}, ...}`, `mix[{1}: empty; {2}: check({{}})]`.
//! Atom sets are 1-based.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::hf::HfSet;

pub type AtomSet = BTreeSet<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NameLit {
    Empty,
    Check(HfSet),
    Entries(Vec<(NameLit, AtomSet)>),
    Mix(Vec<(AtomSet, NameLit)>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at position {position}")]
pub struct LiteralError {
    pub position: usize,
    pub message: String,
}

pub(crate) struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(text: &'a str, pos: usize) -> Self {
        Self { text, pos }
    }

    pub(crate) fn pos(&self) -> usize {
        self.pos
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    pub(crate) fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn error(&self, message: impl Into<String>) -> LiteralError {
        LiteralError {
            position: self.pos,
            message: message.into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), LiteralError> {
        match self.peek() {
            Some(got) if got == c => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(got) => Err(self.error(format!("expected '{c}', found '{got}'"))),
            None => Err(self.error(format!("expected '{c}', found end of input"))),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn keyword(&mut self) -> &'a str {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
            .map_or(rest.len(), |(i, _)| i);
        self.pos += len;
        &rest[..len]
    }

    fn hf(&mut self) -> Result<HfSet, LiteralError> {
        self.expect('{')?;
        let mut set = HfSet::empty();
        if self.eat('}') {
            return Ok(set);
        }
        loop {
            set.insert(self.hf()?);
            if self.eat('}') {
                return Ok(set);
            }
            self.expect(',')?;
        }
    }

    fn atoms(&mut self) -> Result<AtomSet, LiteralError> {
        self.expect('{')?;
        let mut atoms = AtomSet::new();
        if self.eat('}') {
            return Ok(atoms);
        }
        loop {
            self.skip_ws();
            let start = self.pos;
            let digits = self.rest().chars().take_while(char::is_ascii_digit).count();
            if digits == 0 {
                return Err(self.error("expected a 1-based atom index"));
            }
            self.pos += digits;
            let n: usize = self.text[start..self.pos].parse().map_err(|_| LiteralError {
                position: start,
                message: "atom index out of range".into(),
            })?;
            if n == 0 {
                return Err(LiteralError {
                    position: start,
                    message: "atom indices are 1-based".into(),
                });
            }
            atoms.insert(n);
            if self.eat('}') {
                return Ok(atoms);
            }
            self.expect(',')?;
        }
    }

    pub(crate) fn name_lit(&mut self) -> Result<NameLit, LiteralError> {
        self.skip_ws();
        let start = self.pos;
        match self.keyword() {
            "empty" => Ok(NameLit::Empty),
            "check" => {
                self.expect('(')?;
                let h = self.hf()?;
                self.expect(')')?;
                Ok(NameLit::Check(h))
            }
            "name" => {
                self.expect('{')?;
                let mut entries = Vec::new();
                if !self.eat('}') {
                    loop {
                        let child = self.name_lit()?;
                        self.expect(':')?;
                        entries.push((child, self.atoms()?));
                        if self.eat('}') {
                            break;
                        }
                        self.expect(',')?;
                    }
                }
                Ok(NameLit::Entries(entries))
            }
            "mix" => {
                self.expect('[')?;
                let mut parts = Vec::new();
                loop {
                    let atoms = self.atoms()?;
                    self.expect(':')?;
                    parts.push((atoms, self.name_lit()?));
                    if self.eat(']') {
                        break;
                    }
                    self.expect(';')?;
                }
                Ok(NameLit::Mix(parts))
            }
            "" => {
                self.pos = start;
                Err(self.error("expected a name literal"))
            }
            other => Err(LiteralError {
                position: start,
                message: format!("unknown literal form '{other}'"),
            }),
        }
    }
}

/// Whether an identifier starts a name literal.
pub(crate) fn is_literal_keyword(word: &str) -> bool {
    matches!(word, "empty" | "check" | "name" | "mix")
}

impl NameLit {
    pub fn parse(text: &str) -> Result<Self, LiteralError> {
        let mut c = Cursor::new(text, 0);
        let lit = c.name_lit()?;
        c.skip_ws();
        if c.pos() != text.len() {
            return Err(c.error("trailing input after name literal"));
        }
        Ok(lit)
    }
}

/// Parses a 1-based atom set such as `{1,3}`.
pub fn parse_atom_set(text: &str) -> Result<AtomSet, LiteralError> {
    let mut c = Cursor::new(text, 0);
    let atoms = c.atoms()?;
    c.skip_ws();
    if c.pos() != text.len() {
        return Err(c.error("trailing input after atom set"));
    }
    Ok(atoms)
}

fn write_atoms(f: &mut fmt::Formatter<'_>, atoms: &AtomSet) -> fmt::Result {
    f.write_str("{")?;
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{a}")?;
    }
    f.write_str("}")
}

impl fmt::Display for NameLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => f.write_str("empty"),
            Self::Check(h) => write!(f, "check({h})"),
            Self::Entries(entries) => {
                f.write_str("name{")?;
                for (i, (child, atoms)) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{child}: ")?;
                    write_atoms(f, atoms)?;
                }
                f.write_str("}")
            }
            Self::Mix(parts) => {
                f.write_str("mix[")?;
                for (i, (atoms, child)) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str("; ")?;
                    }
                    write_atoms(f, atoms)?;
                    write!(f, ": {child}")?;
                }
                f.write_str("]")
            }
        }
    }
}
