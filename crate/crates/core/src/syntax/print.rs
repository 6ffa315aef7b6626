use std::fmt::{self, Display, Formatter};

use super::ast::{Expr, ExprKind, HighSet, Type};
use crate::lattice::Principal;

fn principal_at_postfix(p: &Principal) -> String {
    match p {
        Principal::Atom(_) | Principal::Top | Principal::Bot | Principal::Proj(..) => p.to_string(),
        _ => format!("({p})"),
    }
}

impl Type {
    fn level(&self) -> u8 {
        match self {
            Type::Fun(..) | Type::Forall(..) => 0,
            Type::Sum(..) => 1,
            Type::Prod(..) => 2,
            _ => 3,
        }
    }

    fn fmt_at(&self, f: &mut Formatter<'_>, min: u8) -> fmt::Result {
        if *self == Type::bool() {
            return write!(f, "bool");
        }
        if self.level() < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Type::Unit => write!(f, "unit"),
            Type::Var(x) => write!(f, "{x}"),
            Type::Sum(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " + ")?;
                b.fmt_at(f, 2)
            }
            Type::Prod(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, " * ")?;
                b.fmt_at(f, 3)
            }
            Type::Fun(a, pc, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " -[{pc}]-> ")?;
                b.fmt_at(f, 0)
            }
            Type::Forall(x, pc, t) => {
                write!(f, "forall {x} [{pc}]. ")?;
                t.fmt_at(f, 0)
            }
            Type::Says(l, t) => {
                write!(f, "says[{l}] ")?;
                t.fmt_at(f, 3)
            }
        }
    }
}

impl Display for Type {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl Display for HighSet {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            HighSet::Untrusted(a) => write!(f, "untrusted({})", a.join(", ")),
            HighSet::Secret(a) => write!(f, "secret({})", a.join(", ")),
            HighSet::Both(a) => write!(f, "both({})", a.join(", ")),
            HighSet::Above(l) => write!(f, "above({l})"),
        }
    }
}

impl Expr {
    /// 0: binder forms, 1: application, 2: prefix forms, 3: atoms.
    fn level(&self) -> u8 {
        match &self.kind {
            ExprKind::Lam { .. }
            | ExprKind::TLam { .. }
            | ExprKind::Bind { .. }
            | ExprKind::Case { .. }
            | ExprKind::Decl { .. }
            | ExprKind::Endorse { .. } => 0,
            ExprKind::App { .. } | ExprKind::TApp { .. } => 1,
            ExprKind::Inj { .. } | ExprKind::Proj { .. } | ExprKind::Eta { .. } | ExprKind::EtaV { .. } => {
                if self.is_bool_literal().is_some() {
                    3
                } else {
                    2
                }
            }
            _ => 3,
        }
    }

    fn is_bool_literal(&self) -> Option<&'static str> {
        match &self.kind {
            ExprKind::Inj { index, ann: Some(t), body } if *t == Type::bool() && body.kind == ExprKind::Unit => {
                Some(if *index == 1 { "tt" } else { "ff" })
            }
            _ => None,
        }
    }

    fn fmt_at(&self, f: &mut Formatter<'_>, min: u8) -> fmt::Result {
        if self.level() < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        if let Some(lit) = self.is_bool_literal() {
            return write!(f, "{lit}");
        }
        match &self.kind {
            ExprKind::Var { name } => write!(f, "{name}"),
            ExprKind::Unit => write!(f, "()"),
            ExprKind::Pair { fst, snd } => write!(f, "({fst}, {snd})"),
            ExprKind::Inj { index, ann, body } => {
                write!(f, "inj{index}")?;
                if let Some(t) = ann {
                    write!(f, "[{t}]")?;
                }
                write!(f, " ")?;
                body.fmt_at(f, 2)
            }
            ExprKind::Proj { index, body } => {
                write!(f, "proj{index} ")?;
                body.fmt_at(f, 2)
            }
            ExprKind::Lam { var, ty, pc, body } => write!(f, "lam ({var} : {ty}) [{pc}]. {body}"),
            ExprKind::TLam { var, pc, body } => write!(f, "tlam {var} [{pc}]. {body}"),
            ExprKind::App { fun, arg } => {
                fun.fmt_at(f, 1)?;
                write!(f, " ")?;
                arg.fmt_at(f, 2)
            }
            ExprKind::TApp { fun, ty } => {
                fun.fmt_at(f, 1)?;
                write!(f, " @")?;
                ty.fmt_at(f, 3)
            }
            ExprKind::Case { scrut, left_var, left, right_var, right } => {
                write!(f, "case ")?;
                scrut.fmt_at(f, 1)?;
                write!(f, " of inj1 {left_var}. ")?;
                left.fmt_at(f, 1)?;
                write!(f, " | inj2 {right_var}. {right}")
            }
            ExprKind::Eta { label, body } => {
                write!(f, "eta[{label}] ")?;
                body.fmt_at(f, 2)
            }
            ExprKind::EtaV { label, body } => {
                write!(f, "etav[{label}] ")?;
                body.fmt_at(f, 2)
            }
            ExprKind::Bind { var, bound, body } => write!(f, "bind {var} = {bound} in {body}"),
            ExprKind::Decl { body, label } => {
                write!(f, "decl ")?;
                body.fmt_at(f, 1)?;
                write!(f, " to {}", principal_at_postfix(label))
            }
            ExprKind::Endorse { body, label } => {
                write!(f, "endorse ")?;
                body.fmt_at(f, 1)?;
                write!(f, " to {}", principal_at_postfix(label))
            }
            ExprKind::Bracket { body, high } => write!(f, "[bracket {body} : {high}]"),
            ExprKind::Hole { index, high, ty } => {
                write!(f, "[hole {index} : {high}")?;
                if let Some(t) = ty {
                    write!(f, " : {t}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}
