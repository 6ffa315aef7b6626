//! Concrete syntax: lexer, parser, printer, substitution and alpha-equivalence.

mod alpha;
mod ast;
mod lexer;
mod parser;
mod print;
mod subst;

use std::fmt;

use thiserror::Error;

pub use alpha::{alpha_eq, alpha_eq_type, uniquify};
pub use ast::{Expr, ExprKind, HighSet, Span, Type};
pub use parser::{is_keyword, KEYWORDS};
pub use subst::{fresh, map_children, subst, subst_type, subst_type_in_expr};

use crate::lattice::Principal;
use parser::Parser;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: expected {}, found {}", self.line, self.col, self.expected.join(" or "), self.found)
    }
}

/// Which runtime-only forms a parse accepts.
#[derive(Clone, Copy, Debug)]
pub struct ParseOptions {
    pub allow_etav: bool,
    pub allow_brackets: bool,
    pub allow_holes: bool,
}

impl ParseOptions {
    /// Source programs: holes only.
    pub const SOURCE: ParseOptions = ParseOptions { allow_etav: false, allow_brackets: false, allow_holes: true };
    /// Everything, for fixtures and tests.
    pub const ALL: ParseOptions = ParseOptions { allow_etav: true, allow_brackets: true, allow_holes: true };
}

/// Parses a source program. Rejects `etav` and brackets.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with(text, ParseOptions::SOURCE)
}

pub fn parse_with(text: &str, opts: ParseOptions) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.finish()?;
    let reject = |what: &str, pred: &dyn Fn(&Expr) -> bool| match first_match(&e, pred) {
        Some(s) => Err(ParseError { line: s.line, col: s.col, expected: vec![format!("no {what}")], found: what.into() }),
        None => Ok(()),
    };
    if !opts.allow_etav {
        reject("etav", &|x| matches!(x.kind, ExprKind::EtaV { .. }))?;
    }
    if !opts.allow_brackets {
        reject("bracket", &|x| matches!(x.kind, ExprKind::Bracket { .. }))?;
    }
    if !opts.allow_holes {
        reject("hole", &|x| matches!(x.kind, ExprKind::Hole { .. }))?;
    }
    Ok(uniquify(&e))
}

fn first_match(e: &Expr, pred: &dyn Fn(&Expr) -> bool) -> Option<Span> {
    if pred(e) {
        return Some(e.span);
    }
    e.children().into_iter().find_map(|c| first_match(c, pred))
}

pub fn parse_type(text: &str) -> Result<Type, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.ty()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_principal(text: &str) -> Result<Principal, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.principal()?;
    p.finish()?;
    Ok(t)
}

/// Exactly `n` principals written one after another, as in `flows (a^->) b`.
pub fn parse_principals(text: &str, n: usize) -> Result<Vec<Principal>, ParseError> {
    let mut p = Parser::new(text)?;
    let out = (0..n).map(|_| p.principal()).collect::<Result<Vec<_>, _>>()?;
    p.finish()?;
    Ok(out)
}

pub fn parse_high_set(text: &str) -> Result<HighSet, ParseError> {
    let mut p = Parser::new(text)?;
    let h = p.high_set()?;
    p.finish()?;
    Ok(h)
}

/// Nonempty identifier that is not a keyword.
pub fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !is_keyword(s)
}
