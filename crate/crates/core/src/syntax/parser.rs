use super::ast::{Expr, ExprKind, HighSet, Span, Type};
use super::lexer::{lex, Tok};
use super::ParseError;
use crate::lattice::{Aspect, Principal};

pub const KEYWORDS: &[&str] = &[
    "lam", "tlam", "bind", "in", "case", "of", "inj1", "inj2", "proj1", "proj2", "eta", "etav", "decl", "endorse", "to",
    "top", "bot", "tt", "ff", "unit", "bool", "forall", "says", "hole", "bracket",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let s = self.span();
        ParseError {
            line: s.line,
            col: s.col,
            expected: expected.iter().map(|e| e.to_string()).collect(),
            found: self.peek().describe(),
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.error(&[&t.describe()]))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[&format!("`{kw}`")]))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    pub fn finish(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    fn close(&self, start: Span) -> Span {
        let prev = self.toks[self.pos.saturating_sub(1)].1;
        Span { end: prev.end.max(start.start), ..start }
    }

    // ---- principals ----

    pub fn principal(&mut self) -> Result<Principal, ParseError> {
        let mut p = self.principal_or()?;
        loop {
            if self.eat(&Tok::Join) {
                p = p.join(self.principal_or()?);
            } else if self.eat(&Tok::Meet) {
                p = p.meet(self.principal_or()?);
            } else {
                return Ok(p);
            }
        }
    }

    fn principal_or(&mut self) -> Result<Principal, ParseError> {
        let mut p = self.principal_and()?;
        while self.eat(&Tok::Bar) {
            p = p.or(self.principal_and()?);
        }
        Ok(p)
    }

    fn principal_and(&mut self) -> Result<Principal, ParseError> {
        let mut p = self.principal_postfix()?;
        while self.eat(&Tok::Amp) {
            p = p.and(self.principal_postfix()?);
        }
        Ok(p)
    }

    pub fn principal_postfix(&mut self) -> Result<Principal, ParseError> {
        let mut p = match self.peek().clone() {
            Tok::Ident(s) if s == "top" => {
                self.bump();
                Principal::Top
            }
            Tok::Ident(s) if s == "bot" => {
                self.bump();
                Principal::Bot
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Principal::Atom(s)
            }
            Tok::LParen => {
                self.bump();
                let p = self.principal()?;
                self.expect(Tok::RParen)?;
                p
            }
            _ => return Err(self.error(&["principal"])),
        };
        loop {
            if self.eat(&Tok::ConfProj) {
                p = p.proj(Aspect::Conf);
            } else if self.eat(&Tok::IntegProj) {
                p = p.proj(Aspect::Integ);
            } else {
                return Ok(p);
            }
        }
    }

    fn bracketed_principal(&mut self) -> Result<Principal, ParseError> {
        self.expect(Tok::LBrack)?;
        let p = self.principal()?;
        self.expect(Tok::RBrack)?;
        Ok(p)
    }

    // ---- types ----

    pub fn ty(&mut self) -> Result<Type, ParseError> {
        if self.is_kw("forall") {
            self.bump();
            let x = self.ident()?;
            let pc = self.bracketed_principal()?;
            self.expect(Tok::Dot)?;
            return Ok(Type::Forall(x, pc, Box::new(self.ty()?)));
        }
        let lhs = self.ty_sum()?;
        if self.eat(&Tok::ArrowOpen) {
            let pc = self.principal()?;
            self.expect(Tok::RBrack)?;
            self.expect(Tok::Arrow)?;
            return Ok(Type::fun(lhs, pc, self.ty()?));
        }
        Ok(lhs)
    }

    fn ty_sum(&mut self) -> Result<Type, ParseError> {
        let mut t = self.ty_prod()?;
        while self.eat(&Tok::Plus) {
            t = Type::sum(t, self.ty_prod()?);
        }
        Ok(t)
    }

    fn ty_prod(&mut self) -> Result<Type, ParseError> {
        let mut t = self.ty_atom()?;
        while self.eat(&Tok::Star) {
            t = Type::prod(t, self.ty_atom()?);
        }
        Ok(t)
    }

    pub fn ty_atom(&mut self) -> Result<Type, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "unit" => {
                self.bump();
                Ok(Type::Unit)
            }
            Tok::Ident(s) if s == "bool" => {
                self.bump();
                Ok(Type::bool())
            }
            Tok::Ident(s) if s == "says" => {
                self.bump();
                let l = self.bracketed_principal()?;
                Ok(Type::says(l, self.ty_atom()?))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(Type::Var(s))
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => Err(self.error(&["type"])),
        }
    }

    // ---- high sets ----

    pub fn high_set(&mut self) -> Result<HighSet, ParseError> {
        let kind = match self.peek().clone() {
            Tok::Ident(s) if matches!(s.as_str(), "untrusted" | "secret" | "both" | "above") => {
                self.bump();
                s
            }
            _ => return Err(self.error(&["`untrusted`", "`secret`", "`both`", "`above`"])),
        };
        self.expect(Tok::LParen)?;
        let h = if kind == "above" {
            HighSet::Above(self.principal()?)
        } else {
            let mut atoms = vec![self.ident()?];
            while self.eat(&Tok::Comma) {
                atoms.push(self.ident()?);
            }
            match kind.as_str() {
                "untrusted" => HighSet::Untrusted(atoms),
                "secret" => HighSet::Secret(atoms),
                _ => HighSet::Both(atoms),
            }
        };
        self.expect(Tok::RParen)?;
        Ok(h)
    }

    // ---- expressions ----

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Ident(k) if k == "lam" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let var = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                self.expect(Tok::RParen)?;
                let pc = self.bracketed_principal()?;
                self.expect(Tok::Dot)?;
                ExprKind::Lam { var, ty, pc, body: Box::new(self.expr()?) }
            }
            Tok::Ident(k) if k == "tlam" => {
                self.bump();
                let var = self.ident()?;
                let pc = self.bracketed_principal()?;
                self.expect(Tok::Dot)?;
                ExprKind::TLam { var, pc, body: Box::new(self.expr()?) }
            }
            Tok::Ident(k) if k == "bind" => {
                self.bump();
                let var = self.ident()?;
                self.expect(Tok::Eq)?;
                let bound = Box::new(self.expr()?);
                self.expect_kw("in")?;
                ExprKind::Bind { var, bound, body: Box::new(self.expr()?) }
            }
            Tok::Ident(k) if k == "case" => {
                self.bump();
                let scrut = Box::new(self.expr()?);
                self.expect_kw("of")?;
                self.expect_kw("inj1")?;
                let left_var = self.ident()?;
                self.expect(Tok::Dot)?;
                let left = Box::new(self.expr()?);
                self.expect(Tok::Bar)?;
                self.expect_kw("inj2")?;
                let right_var = self.ident()?;
                self.expect(Tok::Dot)?;
                ExprKind::Case { scrut, left_var, left, right_var, right: Box::new(self.expr()?) }
            }
            Tok::Ident(k) if k == "decl" || k == "endorse" => {
                self.bump();
                let body = Box::new(self.expr()?);
                self.expect_kw("to")?;
                let label = self.principal_postfix()?;
                if k == "decl" {
                    ExprKind::Decl { body, label }
                } else {
                    ExprKind::Endorse { body, label }
                }
            }
            _ => return self.app(),
        };
        Ok(Expr::at(kind, self.close(start)))
    }

    fn starts_operand(&self) -> bool {
        match self.peek() {
            Tok::LParen | Tok::LBrack => true,
            Tok::Ident(s) => {
                !is_keyword(s) || matches!(s.as_str(), "tt" | "ff" | "inj1" | "inj2" | "proj1" | "proj2" | "eta" | "etav")
            }
            _ => false,
        }
    }

    fn app(&mut self) -> Result<Expr, ParseError> {
        let start = self.span();
        let mut e = self.prefix()?;
        loop {
            if self.eat(&Tok::At) {
                let ty = self.ty_atom()?;
                e = Expr::at(ExprKind::TApp { fun: Box::new(e), ty }, self.close(start));
            } else if self.starts_operand() {
                let arg = self.prefix()?;
                e = Expr::at(ExprKind::App { fun: Box::new(e), arg: Box::new(arg) }, self.close(start));
            } else {
                return Ok(e);
            }
        }
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Ident(k) if k == "inj1" || k == "inj2" => {
                self.bump();
                let index = if k == "inj1" { 1 } else { 2 };
                let is_atom_bracket =
                    matches!(self.peek_at(1), Tok::Ident(s) if s == "hole" || s == "bracket");
                let ann = if *self.peek() == Tok::LBrack && !is_atom_bracket {
                    self.bump();
                    let t = self.ty()?;
                    self.expect(Tok::RBrack)?;
                    Some(t)
                } else {
                    None
                };
                ExprKind::Inj { index, ann, body: Box::new(self.prefix()?) }
            }
            Tok::Ident(k) if k == "proj1" || k == "proj2" => {
                self.bump();
                let index = if k == "proj1" { 1 } else { 2 };
                ExprKind::Proj { index, body: Box::new(self.prefix()?) }
            }
            Tok::Ident(k) if k == "eta" || k == "etav" => {
                self.bump();
                let label = self.bracketed_principal()?;
                let body = Box::new(self.prefix()?);
                if k == "eta" {
                    ExprKind::Eta { label, body }
                } else {
                    ExprKind::EtaV { label, body }
                }
            }
            _ => return self.atom(),
        };
        Ok(Expr::at(kind, self.close(start)))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Ident(k) if k == "tt" || k == "ff" => {
                self.bump();
                let mut e = if k == "tt" { Expr::tt() } else { Expr::ff() };
                e.span = self.close(start);
                Ok(e)
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(Expr::at(ExprKind::Var { name: s }, self.close(start)))
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(Expr::at(ExprKind::Unit, self.close(start)));
                }
                let a = self.expr()?;
                if self.eat(&Tok::Comma) {
                    let c = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::at(ExprKind::Pair { fst: Box::new(a), snd: Box::new(c) }, self.close(start)));
                }
                self.expect(Tok::RParen)?;
                Ok(a)
            }
            Tok::LBrack => {
                self.bump();
                if self.is_kw("hole") {
                    self.bump();
                    let index = match self.bump() {
                        Tok::Num(n) => n,
                        _ => {
                            self.pos -= 1;
                            return Err(self.error(&["hole index"]));
                        }
                    };
                    self.expect(Tok::Colon)?;
                    let high = self.high_set()?;
                    let ty = if self.eat(&Tok::Colon) { Some(self.ty()?) } else { None };
                    self.expect(Tok::RBrack)?;
                    Ok(Expr::at(ExprKind::Hole { index, high, ty }, self.close(start)))
                } else if self.is_kw("bracket") {
                    self.bump();
                    let body = Box::new(self.expr()?);
                    self.expect(Tok::Colon)?;
                    let high = self.high_set()?;
                    self.expect(Tok::RBrack)?;
                    Ok(Expr::at(ExprKind::Bracket { body, high }, self.close(start)))
                } else {
                    Err(self.error(&["`hole`", "`bracket`"]))
                }
            }
            _ => Err(self.error(&["expression"])),
        }
    }
}
