use std::collections::BTreeSet;

use serde::{Serialize, Serializer};

use crate::lattice::Principal;

/// Byte range plus the line/column of its start, both 1-based.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Serialize for Span {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&format_args!("{}:{}", self.line, self.col))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Unit,
    Var(String),
    Sum(Box<Type>, Box<Type>),
    Prod(Box<Type>, Box<Type>),
    /// `t1 -[pc]-> t2`
    Fun(Box<Type>, Principal, Box<Type>),
    /// `forall X [pc]. t`
    Forall(String, Principal, Box<Type>),
    Says(Principal, Box<Type>),
}

impl Type {
    pub fn bool() -> Type {
        Type::Sum(Box::new(Type::Unit), Box::new(Type::Unit))
    }

    pub fn sum(a: Type, b: Type) -> Type {
        Type::Sum(Box::new(a), Box::new(b))
    }

    pub fn prod(a: Type, b: Type) -> Type {
        Type::Prod(Box::new(a), Box::new(b))
    }

    pub fn fun(a: Type, pc: Principal, b: Type) -> Type {
        Type::Fun(Box::new(a), pc, Box::new(b))
    }

    pub fn says(l: Principal, t: Type) -> Type {
        Type::Says(l, Box::new(t))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Type::Unit => {}
            Type::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Type::Sum(a, b) | Type::Prod(a, b) | Type::Fun(a, _, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Type::Forall(x, _, t) => {
                bound.push(x.clone());
                t.collect_free(bound, out);
                bound.pop();
            }
            Type::Says(_, t) => t.collect_free(bound, out),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Type::Unit | Type::Var(_) => 1,
            Type::Sum(a, b) | Type::Prod(a, b) | Type::Fun(a, _, b) => 1 + a.size() + b.size(),
            Type::Forall(_, _, t) | Type::Says(_, t) => 1 + t.size(),
        }
    }
}

impl Serialize for Type {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Description of an upward-closed set of labels, resolved against a lattice
/// when membership is asked.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HighSet {
    /// Labels whose integrity the attacker atoms act for.
    Untrusted(Vec<String>),
    /// Labels whose confidentiality the attacker atoms do not act for.
    Secret(Vec<String>),
    /// Intersection of the two above.
    Both(Vec<String>),
    /// Everything at or above a label.
    Above(Principal),
}

impl Serialize for HighSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Expr {
    #[serde(flatten)]
    pub kind: ExprKind,
    #[serde(skip)]
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, o: &Expr) -> bool {
        self.kind == o.kind
    }
}

impl Eq for Expr {}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum ExprKind {
    Var { name: String },
    Unit,
    Pair { fst: Box<Expr>, snd: Box<Expr> },
    /// `inj1`/`inj2`, with an optional sum-type annotation.
    Inj { index: u8, ann: Option<Type>, body: Box<Expr> },
    Proj { index: u8, body: Box<Expr> },
    Lam { var: String, ty: Type, pc: Principal, body: Box<Expr> },
    TLam { var: String, pc: Principal, body: Box<Expr> },
    App { fun: Box<Expr>, arg: Box<Expr> },
    TApp { fun: Box<Expr>, ty: Type },
    Case { scrut: Box<Expr>, left_var: String, left: Box<Expr>, right_var: String, right: Box<Expr> },
    /// Source-level protection, steps to `EtaV`.
    Eta { label: Principal, body: Box<Expr> },
    /// Protected value.
    EtaV { label: Principal, body: Box<Expr> },
    Bind { var: String, bound: Box<Expr>, body: Box<Expr> },
    Decl { body: Box<Expr>, label: Principal },
    Endorse { body: Box<Expr>, label: Principal },
    Bracket { body: Box<Expr>, high: HighSet },
    Hole { index: usize, high: HighSet, ty: Option<Type> },
}

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

impl Expr {
    pub fn new(kind: ExprKind) -> Expr {
        Expr { kind, span: Span::default() }
    }

    pub fn at(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::new(ExprKind::Var { name: name.into() })
    }

    pub fn unit() -> Expr {
        Expr::new(ExprKind::Unit)
    }

    pub fn pair(a: Expr, c: Expr) -> Expr {
        Expr::new(ExprKind::Pair { fst: b(a), snd: b(c) })
    }

    pub fn inj(index: u8, ann: Option<Type>, e: Expr) -> Expr {
        Expr::new(ExprKind::Inj { index, ann, body: b(e) })
    }

    pub fn proj(index: u8, e: Expr) -> Expr {
        Expr::new(ExprKind::Proj { index, body: b(e) })
    }

    pub fn lam(var: impl Into<String>, ty: Type, pc: Principal, body: Expr) -> Expr {
        Expr::new(ExprKind::Lam { var: var.into(), ty, pc, body: b(body) })
    }

    pub fn tlam(var: impl Into<String>, pc: Principal, body: Expr) -> Expr {
        Expr::new(ExprKind::TLam { var: var.into(), pc, body: b(body) })
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::new(ExprKind::App { fun: b(f), arg: b(a) })
    }

    pub fn tapp(f: Expr, ty: Type) -> Expr {
        Expr::new(ExprKind::TApp { fun: b(f), ty })
    }

    pub fn case(s: Expr, x: impl Into<String>, l: Expr, y: impl Into<String>, r: Expr) -> Expr {
        Expr::new(ExprKind::Case { scrut: b(s), left_var: x.into(), left: b(l), right_var: y.into(), right: b(r) })
    }

    pub fn eta(label: Principal, e: Expr) -> Expr {
        Expr::new(ExprKind::Eta { label, body: b(e) })
    }

    pub fn etav(label: Principal, e: Expr) -> Expr {
        Expr::new(ExprKind::EtaV { label, body: b(e) })
    }

    pub fn bind(var: impl Into<String>, e: Expr, body: Expr) -> Expr {
        Expr::new(ExprKind::Bind { var: var.into(), bound: b(e), body: b(body) })
    }

    pub fn decl(e: Expr, label: Principal) -> Expr {
        Expr::new(ExprKind::Decl { body: b(e), label })
    }

    pub fn endorse(e: Expr, label: Principal) -> Expr {
        Expr::new(ExprKind::Endorse { body: b(e), label })
    }

    pub fn bracket(e: Expr, high: HighSet) -> Expr {
        Expr::new(ExprKind::Bracket { body: b(e), high })
    }

    pub fn tt() -> Expr {
        Expr::inj(1, Some(Type::bool()), Expr::unit())
    }

    pub fn ff() -> Expr {
        Expr::inj(2, Some(Type::bool()), Expr::unit())
    }

    pub fn is_value(&self) -> bool {
        match &self.kind {
            ExprKind::Unit | ExprKind::Lam { .. } | ExprKind::TLam { .. } => true,
            ExprKind::Inj { body, .. } | ExprKind::EtaV { body, .. } | ExprKind::Bracket { body, .. } => body.is_value(),
            ExprKind::Pair { fst, snd } => fst.is_value() && snd.is_value(),
            _ => false,
        }
    }

    /// Immediate subexpressions, left to right.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Var { .. } | ExprKind::Unit | ExprKind::Hole { .. } => vec![],
            ExprKind::Pair { fst, snd } => vec![fst, snd],
            ExprKind::App { fun, arg } => vec![fun, arg],
            ExprKind::Bind { bound, body, .. } => vec![bound, body],
            ExprKind::Case { scrut, left, right, .. } => vec![scrut, left, right],
            ExprKind::Inj { body, .. }
            | ExprKind::Proj { body, .. }
            | ExprKind::Lam { body, .. }
            | ExprKind::TLam { body, .. }
            | ExprKind::Eta { body, .. }
            | ExprKind::EtaV { body, .. }
            | ExprKind::Decl { body, .. }
            | ExprKind::Endorse { body, .. }
            | ExprKind::Bracket { body, .. } => vec![body],
            ExprKind::TApp { fun, .. } => vec![fun],
        }
    }

    /// True if any node satisfies `f`.
    pub fn any(&self, f: &dyn Fn(&Expr) -> bool) -> bool {
        f(self) || self.children().into_iter().any(|c| c.any(f))
    }

    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Expr::size).sum::<usize>()
    }

    pub fn contains_decl(&self) -> bool {
        self.any(&|e| matches!(e.kind, ExprKind::Decl { .. }))
    }

    pub fn contains_endorse(&self) -> bool {
        self.any(&|e| matches!(e.kind, ExprKind::Endorse { .. }))
    }

    pub fn contains_etav(&self) -> bool {
        self.any(&|e| matches!(e.kind, ExprKind::EtaV { .. }))
    }

    pub fn contains_bracket(&self) -> bool {
        self.any(&|e| matches!(e.kind, ExprKind::Bracket { .. }))
    }

    pub fn holes(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn go<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            if let ExprKind::Hole { .. } = e.kind {
                out.push(e);
            }
            for c in e.children() {
                go(c, out);
            }
        }
        go(self, &mut out);
        out
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let under = |x: &String, e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>| {
            bound.push(x.clone());
            e.collect_free(bound, out);
            bound.pop();
        };
        match &self.kind {
            ExprKind::Var { name } => {
                if !bound.contains(name) {
                    out.insert(name.clone());
                }
            }
            ExprKind::Lam { var, body, .. } => under(var, body, bound, out),
            ExprKind::Bind { var, bound: e, body } => {
                e.collect_free(bound, out);
                under(var, body, bound, out);
            }
            ExprKind::Case { scrut, left_var, left, right_var, right } => {
                scrut.collect_free(bound, out);
                under(left_var, left, bound, out);
                under(right_var, right, bound, out);
            }
            _ => {
                for c in self.children() {
                    c.collect_free(bound, out);
                }
            }
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_names(&self, out: &mut BTreeSet<String>) {
        match &self.kind {
            ExprKind::Var { name } => {
                out.insert(name.clone());
            }
            ExprKind::Lam { var, .. } | ExprKind::Bind { var, .. } => {
                out.insert(var.clone());
            }
            ExprKind::Case { left_var, right_var, .. } => {
                out.insert(left_var.clone());
                out.insert(right_var.clone());
            }
            _ => {}
        }
        for c in self.children() {
            c.all_names(out);
        }
    }
}
