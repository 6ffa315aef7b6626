//! Protection relation, high types, and the typing judgment `G; pc |- e : t`.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::lattice::{flow_join, flow_meet, project, view, voice, Aspect, Lattice, Principal};
use crate::syntax::{alpha_eq_type, subst_type, Expr, ExprKind, HighSet, Span, Type};

/// `top-> & bot<-`, the top of the flow ordering.
pub fn flow_top() -> Principal {
    Principal::Top.conf().and(Principal::Bot.integ())
}

/// `top<-`, the bottom of the flow ordering.
pub fn flow_bottom() -> Principal {
    Principal::Top.integ()
}

fn conj(atoms: &[String]) -> Principal {
    Principal::and_all(atoms.iter().map(|a| Principal::atom(a.clone())))
}

impl HighSet {
    pub fn member(&self, lat: &Lattice, l: &Principal) -> bool {
        match self {
            HighSet::Untrusted(a) => lat.acts_for(&conj(a), &project(l, Aspect::Integ)),
            HighSet::Secret(a) => !lat.acts_for(&conj(a), &project(l, Aspect::Conf)),
            HighSet::Both(a) => {
                HighSet::Untrusted(a.clone()).member(lat, l) && HighSet::Secret(a.clone()).member(lat, l)
            }
            HighSet::Above(l0) => lat.flows_to(l0, l),
        }
    }

    pub fn is_empty(&self, lat: &Lattice) -> bool {
        !self.member(lat, &flow_top())
    }

    /// Attacker atoms, if this set is attacker-induced.
    pub fn attacker_atoms(&self) -> Option<&[String]> {
        match self {
            HighSet::Untrusted(a) | HighSet::Secret(a) | HighSet::Both(a) => Some(a),
            HighSet::Above(_) => None,
        }
    }

    /// Candidate bracket pcs above `pc` that lie in the set, least-looking first.
    /// `hints` are labels occurring in the bracketed term.
    pub fn candidates_above(&self, lat: &Lattice, pc: &Principal, hints: &[Principal]) -> Vec<Principal> {
        let mut confs = vec![Principal::Bot];
        let mut integs = vec![Principal::Bot];
        for n in lat.atoms() {
            confs.push(Principal::atom(n.clone()).conf());
            integs.push(Principal::atom(n.clone()).integ());
        }
        if let Some(a) = self.attacker_atoms() {
            integs.push(conj(a).integ());
        }
        confs.push(Principal::Top.conf());
        integs.push(Principal::Bot.integ());
        let mut extra: Vec<Principal> = hints.to_vec();
        if let HighSet::Above(l0) = self {
            extra.insert(0, l0.clone());
        }
        let mut out: Vec<Principal> = Vec::new();
        let mut push = |c: Principal| {
            let cand = flow_join(pc, &c);
            if self.member(lat, &cand) && !out.iter().any(|o| lat.equiv(o, &cand)) {
                out.push(cand);
            }
        };
        for c in extra {
            push(c);
        }
        for c in &confs {
            for i in &integs {
                push(c.clone().and(i.clone()));
            }
        }
        out
    }
}

/// Variables and type variables in scope. Copy-on-extend.
#[derive(Clone, Debug, Default)]
pub struct Ctx {
    vars: Vec<(String, Type)>,
    tvars: Vec<String>,
}

impl Ctx {
    pub fn new() -> Ctx {
        Ctx::default()
    }

    pub fn with_var(&self, x: &str, t: Type) -> Ctx {
        let mut c = self.clone();
        c.vars.push((x.to_string(), t));
        c
    }

    pub fn with_tvar(&self, x: &str) -> Ctx {
        let mut c = self.clone();
        c.tvars.push(x.to_string());
        c
    }

    pub fn lookup(&self, x: &str) -> Option<&Type> {
        self.vars.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    /// Variables in scope, outermost first, shadowed entries dropped.
    pub fn vars(&self) -> Vec<(String, Type)> {
        let mut seen = BTreeSet::new();
        let mut out: Vec<(String, Type)> =
            self.vars.iter().rev().filter(|(x, _)| seen.insert(x.clone())).cloned().collect();
        out.reverse();
        out
    }

    fn well_formed(&self, t: &Type) -> bool {
        t.free_vars().iter().all(|x| self.tvars.contains(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ErrorKind {
    UnboundVar,
    PcMismatch,
    ProtectFail,
    DeclPremise,
    EndorsePremise,
    Shape,
    HoleContext,
}

#[derive(Clone, Debug, Serialize)]
pub struct Labels {
    pub from: Option<String>,
    pub to: Option<String>,
    pub pc: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TypeError {
    pub kind: ErrorKind,
    pub premise: String,
    pub labels: Labels,
    pub span: Span,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {:?}: {}", self.span.line, self.span.col, self.kind, self.premise)?;
        let l = &self.labels;
        let parts: Vec<String> = [("from", &l.from), ("to", &l.to), ("pc", &l.pc)]
            .iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| format!("{k} = {v}")))
            .collect();
        if !parts.is_empty() {
            write!(f, " [{}]", parts.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for TypeError {}

fn err(kind: ErrorKind, premise: impl Into<String>, span: Span) -> TypeError {
    TypeError { kind, premise: premise.into(), labels: Labels { from: None, to: None, pc: None }, span }
}

pub fn protects(lat: &Lattice, l: &Principal, t: &Type) -> bool {
    match t {
        Type::Unit => true,
        Type::Says(l2, _) => lat.flows_to(l, l2),
        Type::Prod(a, b) => protects(lat, l, a) && protects(lat, l, b),
        _ => false,
    }
}

/// Outer `says` labels of a type built from units, products and `says`;
/// `None` if some leaf can never be protected.
fn outer_labels(t: &Type, out: &mut Vec<Principal>) -> bool {
    match t {
        Type::Unit => true,
        Type::Says(l, _) => {
            out.push(l.clone());
            true
        }
        Type::Prod(a, b) => outer_labels(a, out) && outer_labels(b, out),
        _ => false,
    }
}

/// Some member of `h` protects `t`. The least witness needed is the flow meet
/// of the outer labels, so membership of that meet decides it.
pub fn high_type(lat: &Lattice, h: &HighSet, t: &Type) -> bool {
    let mut labels = Vec::new();
    if !outer_labels(t, &mut labels) {
        return false;
    }
    match labels.into_iter().reduce(|a, b| flow_meet(&a, &b)) {
        None => !h.is_empty(lat),
        Some(m) => h.member(lat, &m),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Downgrade {
    Decl,
    Endorse,
}

/// Which premise of a downgrade rule failed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum DowngradeFailure {
    /// The untouched aspect differs.
    AspectEq,
    /// `pc` does not flow to the target.
    PcFlows,
    /// The robustness (decl) or transparency (endorse) bound.
    Final,
}

impl DowngradeFailure {
    pub fn describe(&self, kind: Downgrade) -> &'static str {
        match (kind, self) {
            (Downgrade::Decl, DowngradeFailure::AspectEq) => "l'<- = l<-",
            (Downgrade::Endorse, DowngradeFailure::AspectEq) => "l'-> = l->",
            (_, DowngradeFailure::PcFlows) => "pc <= l",
            (Downgrade::Decl, DowngradeFailure::Final) => "l'-> <= l-> \\/ view((l' \\/ pc)<-)",
            (Downgrade::Endorse, DowngradeFailure::Final) => "l'<- <= l<- \\/ voice((l' \\/ pc)->)",
        }
    }
}

/// Evaluates the three premises of Decl or Endorse in order.
pub fn downgrade_ok(
    lat: &Lattice,
    kind: Downgrade,
    from: &Principal,
    to: &Principal,
    pc: &Principal,
) -> Result<(), DowngradeFailure> {
    let (kept, moved) = match kind {
        Downgrade::Decl => (Aspect::Integ, Aspect::Conf),
        Downgrade::Endorse => (Aspect::Conf, Aspect::Integ),
    };
    if !lat.equiv(&project(from, kept), &project(to, kept)) {
        return Err(DowngradeFailure::AspectEq);
    }
    if !lat.flows_to(pc, to) {
        return Err(DowngradeFailure::PcFlows);
    }
    let joined = flow_join(from, pc);
    let bound = match kind {
        Downgrade::Decl => view(&project(&joined, Aspect::Integ)),
        Downgrade::Endorse => voice(&project(&joined, Aspect::Conf)),
    };
    let rhs = flow_join(&project(to, moved), &bound);
    if !lat.flows_to(&project(from, moved), &rhs) {
        return Err(DowngradeFailure::Final);
    }
    Ok(())
}

/// Type equality: structural, labels up to equivalence, quantifiers up to renaming.
pub fn type_equiv(lat: &Lattice, a: &Type, b: &Type) -> bool {
    fn go(lat: &Lattice, a: &Type, b: &Type, env: &mut Vec<(String, String)>) -> bool {
        match (a, b) {
            (Type::Unit, Type::Unit) => true,
            (Type::Var(x), Type::Var(y)) => {
                let i = env.iter().rposition(|(l, _)| l == x);
                let j = env.iter().rposition(|(_, r)| r == y);
                match (i, j) {
                    (Some(i), Some(j)) => i == j,
                    (None, None) => x == y,
                    _ => false,
                }
            }
            (Type::Sum(a1, a2), Type::Sum(b1, b2)) | (Type::Prod(a1, a2), Type::Prod(b1, b2)) => {
                go(lat, a1, b1, env) && go(lat, a2, b2, env)
            }
            (Type::Fun(a1, p, a2), Type::Fun(b1, q, b2)) => {
                lat.equiv(p, q) && go(lat, a1, b1, env) && go(lat, a2, b2, env)
            }
            (Type::Says(p, a), Type::Says(q, b)) => lat.equiv(p, q) && go(lat, a, b, env),
            (Type::Forall(x, p, a), Type::Forall(y, q, b)) => {
                if !lat.equiv(p, q) {
                    return false;
                }
                env.push((x.clone(), y.clone()));
                let r = go(lat, a, b, env);
                env.pop();
                r
            }
            _ => false,
        }
    }
    if alpha_eq_type(a, b) {
        return true;
    }
    go(lat, a, b, &mut Vec::new())
}

/// Labels mentioned anywhere in an expression, used as bracket pc hints.
fn labels_in(e: &Expr, out: &mut Vec<Principal>) {
    fn ty_labels(t: &Type, out: &mut Vec<Principal>) {
        match t {
            Type::Unit | Type::Var(_) => {}
            Type::Sum(a, b) | Type::Prod(a, b) => {
                ty_labels(a, out);
                ty_labels(b, out);
            }
            Type::Fun(a, pc, b) => {
                out.push(pc.clone());
                ty_labels(a, out);
                ty_labels(b, out);
            }
            Type::Forall(_, pc, t) => {
                out.push(pc.clone());
                ty_labels(t, out);
            }
            Type::Says(l, t) => {
                out.push(l.clone());
                ty_labels(t, out);
            }
        }
    }
    match &e.kind {
        ExprKind::Eta { label, .. }
        | ExprKind::EtaV { label, .. }
        | ExprKind::Decl { label, .. }
        | ExprKind::Endorse { label, .. } => out.push(label.clone()),
        ExprKind::Lam { ty, pc, .. } => {
            out.push(pc.clone());
            ty_labels(ty, out);
        }
        ExprKind::TLam { pc, .. } => out.push(pc.clone()),
        ExprKind::TApp { ty, .. } => ty_labels(ty, out),
        _ => {}
    }
    for c in e.children() {
        labels_in(c, out);
    }
}

/// Type checker over a fixed lattice. Brackets and holes are accepted only in
/// harness mode.
pub struct Checker<'a> {
    pub lat: &'a Lattice,
    pub harness: bool,
    sites: Option<&'a RefCell<Vec<HoleSite>>>,
}

/// Where a hole sits: its index, the variables in scope, the pc, and its type.
#[derive(Clone, Debug)]
pub struct HoleSite {
    pub index: usize,
    pub high: HighSet,
    pub scope: Vec<(String, Type)>,
    pub pc: Principal,
    pub ty: Type,
}

impl<'a> Checker<'a> {
    pub fn new(lat: &'a Lattice) -> Checker<'a> {
        Checker { lat, harness: false, sites: None }
    }

    pub fn harness(lat: &'a Lattice) -> Checker<'a> {
        Checker { lat, harness: true, sites: None }
    }

    /// Records every hole typed successfully into `sites`.
    pub fn recording(self, sites: &'a RefCell<Vec<HoleSite>>) -> Checker<'a> {
        Checker { sites: Some(sites), ..self }
    }

    fn flows(&self, a: &Principal, b: &Principal) -> bool {
        self.lat.flows_to(a, b)
    }

    fn pc_flow(&self, pc: &Principal, pc2: &Principal, span: Span, what: &str) -> Result<(), TypeError> {
        if self.flows(pc, pc2) {
            return Ok(());
        }
        let mut e = err(ErrorKind::PcMismatch, format!("{what}: pc <= pc'"), span);
        e.labels = Labels { from: Some(pc.to_string()), to: Some(pc2.to_string()), pc: Some(pc.to_string()) };
        Err(e)
    }

    fn mismatch(&self, expected: &Type, found: &Type, span: Span) -> TypeError {
        err(ErrorKind::Shape, format!("expected {expected}, found {found}"), span)
    }

    /// Synthesizes the type of `e`.
    pub fn infer(&self, ctx: &Ctx, pc: &Principal, e: &Expr) -> Result<Type, TypeError> {
        use ExprKind::*;
        let sp = e.span;
        match &e.kind {
            Var { name } => ctx
                .lookup(name)
                .cloned()
                .ok_or_else(|| err(ErrorKind::UnboundVar, format!("unbound variable {name}"), sp)),
            Unit => Ok(Type::Unit),
            Pair { fst, snd } => Ok(Type::prod(self.infer(ctx, pc, fst)?, self.infer(ctx, pc, snd)?)),
            Inj { ann: Some(t), .. } => {
                self.check(ctx, pc, e, t)?;
                Ok(t.clone())
            }
            Inj { index, ann: None, .. } => {
                Err(err(ErrorKind::Shape, format!("cannot infer the sum type of inj{index}; annotate it"), sp))
            }
            Proj { index, body } => match self.infer(ctx, pc, body)? {
                Type::Prod(a, b) => Ok(if *index == 1 { *a } else { *b }),
                t => Err(err(ErrorKind::Shape, format!("proj{index} of non-product {t}"), sp)),
            },
            Lam { var, ty, pc: pc2, body } => {
                if !ctx.well_formed(ty) {
                    return Err(err(ErrorKind::Shape, format!("ill-formed type {ty}"), sp));
                }
                let res = self.infer(&ctx.with_var(var, ty.clone()), pc2, body)?;
                Ok(Type::fun(ty.clone(), pc2.clone(), res))
            }
            TLam { var, pc: pc2, body } => {
                let res = self.infer(&ctx.with_tvar(var), pc2, body)?;
                Ok(Type::Forall(var.clone(), pc2.clone(), Box::new(res)))
            }
            App { fun, arg } => match self.infer(ctx, pc, fun)? {
                Type::Fun(a, pc2, b) => {
                    self.check(ctx, pc, arg, &a)?;
                    self.pc_flow(pc, &pc2, sp, "App")?;
                    Ok(*b)
                }
                t => Err(err(ErrorKind::Shape, format!("application of non-function {t}"), sp)),
            },
            TApp { fun, ty } => match self.infer(ctx, pc, fun)? {
                Type::Forall(x, pc2, b) => {
                    if !ctx.well_formed(ty) {
                        return Err(err(ErrorKind::Shape, format!("ill-formed type {ty}"), sp));
                    }
                    self.pc_flow(pc, &pc2, sp, "TApp")?;
                    Ok(subst_type(&b, &x, ty))
                }
                t => Err(err(ErrorKind::Shape, format!("type application of non-polymorphic {t}"), sp)),
            },
            Case { scrut, left_var, left, right_var, right } => {
                let (a, b) = self.scrutinee(ctx, pc, scrut)?;
                let t = self.infer(&ctx.with_var(left_var, a), pc, left)?;
                self.case_protects(pc, &t, sp)?;
                self.check(&ctx.with_var(right_var, b), pc, right, &t)?;
                Ok(t)
            }
            Eta { label, body } => {
                let t = self.infer(ctx, pc, body)?;
                self.eta_pc(pc, label, sp)?;
                Ok(Type::says(label.clone(), t))
            }
            EtaV { label, body } => Ok(Type::says(label.clone(), self.infer(ctx, pc, body)?)),
            Bind { var, bound, body } => {
                let (l, inner) = self.bound(ctx, pc, bound)?;
                let t = self.infer(&ctx.with_var(var, inner), &flow_join(pc, &l), body)?;
                self.bind_protects(&l, &t, sp)?;
                Ok(t)
            }
            Decl { body, label } => self.downgrade(ctx, pc, Downgrade::Decl, body, label, sp),
            Endorse { body, label } => self.downgrade(ctx, pc, Downgrade::Endorse, body, label, sp),
            Bracket { body, high } => self.bracket(ctx, pc, body, high, None, sp),
            Hole { index, high, ty } => match ty {
                Some(t) => self.hole(ctx, pc, *index, high, t, sp).map(|_| t.clone()),
                None => Err(err(ErrorKind::HoleContext, "hole needs a type annotation here", sp)),
            },
        }
    }

    /// Checks `e` against `t`.
    pub fn check(&self, ctx: &Ctx, pc: &Principal, e: &Expr, t: &Type) -> Result<(), TypeError> {
        use ExprKind::*;
        let sp = e.span;
        match (&e.kind, t) {
            (Inj { index, ann, body }, _) => {
                if let Some(a) = ann {
                    if !type_equiv(self.lat, a, t) {
                        return Err(self.mismatch(t, a, sp));
                    }
                }
                match t {
                    Type::Sum(a, b) => self.check(ctx, pc, body, if *index == 1 { a } else { b }),
                    _ => Err(err(ErrorKind::Shape, format!("inj{index} checked against non-sum {t}"), sp)),
                }
            }
            (Pair { fst, snd }, Type::Prod(a, b)) => {
                self.check(ctx, pc, fst, a)?;
                self.check(ctx, pc, snd, b)
            }
            (Lam { var, ty, pc: pc2, body }, Type::Fun(a, q, b)) if type_equiv(self.lat, ty, a) && self.lat.equiv(pc2, q) => {
                if !ctx.well_formed(ty) {
                    return Err(err(ErrorKind::Shape, format!("ill-formed type {ty}"), sp));
                }
                self.check(&ctx.with_var(var, ty.clone()), pc2, body, b)
            }
            (Case { scrut, left_var, left, right_var, right }, _) => {
                let (a, b) = self.scrutinee(ctx, pc, scrut)?;
                self.case_protects(pc, t, sp)?;
                self.check(&ctx.with_var(left_var, a), pc, left, t)?;
                self.check(&ctx.with_var(right_var, b), pc, right, t)
            }
            (Eta { label, body }, Type::Says(l, inner)) if self.lat.equiv(label, l) => {
                self.check(ctx, pc, body, inner)?;
                self.eta_pc(pc, label, sp)
            }
            (EtaV { label, body }, Type::Says(l, inner)) if self.lat.equiv(label, l) => self.check(ctx, pc, body, inner),
            (Bind { var, bound, body }, _) => {
                let (l, inner) = self.bound(ctx, pc, bound)?;
                self.bind_protects(&l, t, sp)?;
                self.check(&ctx.with_var(var, inner), &flow_join(pc, &l), body, t)
            }
            (Bracket { body, high }, _) => self.bracket(ctx, pc, body, high, Some(t), sp).map(|_| ()),
            (Hole { index, high, ty }, _) => {
                if let Some(a) = ty {
                    if !type_equiv(self.lat, a, t) {
                        return Err(self.mismatch(t, a, sp));
                    }
                }
                self.hole(ctx, pc, *index, high, t, sp)
            }
            _ => {
                let found = self.infer(ctx, pc, e)?;
                if type_equiv(self.lat, &found, t) {
                    Ok(())
                } else {
                    Err(self.mismatch(t, &found, sp))
                }
            }
        }
    }

    fn scrutinee(&self, ctx: &Ctx, pc: &Principal, s: &Expr) -> Result<(Type, Type), TypeError> {
        match self.infer(ctx, pc, s)? {
            Type::Sum(a, b) => Ok((*a, *b)),
            t => Err(err(ErrorKind::Shape, format!("case on non-sum {t}"), s.span)),
        }
    }

    fn case_protects(&self, pc: &Principal, t: &Type, sp: Span) -> Result<(), TypeError> {
        if protects(self.lat, pc, t) {
            return Ok(());
        }
        let mut e = err(ErrorKind::ProtectFail, format!("Case: pc protects {t}"), sp);
        e.labels.pc = Some(pc.to_string());
        Err(e)
    }

    fn bind_protects(&self, l: &Principal, t: &Type, sp: Span) -> Result<(), TypeError> {
        if protects(self.lat, l, t) {
            return Ok(());
        }
        let mut e = err(ErrorKind::ProtectFail, format!("BindM: {l} protects {t}"), sp);
        e.labels.from = Some(l.to_string());
        Err(e)
    }

    fn eta_pc(&self, pc: &Principal, l: &Principal, sp: Span) -> Result<(), TypeError> {
        if self.flows(pc, l) {
            return Ok(());
        }
        let mut e = err(ErrorKind::PcMismatch, "UnitM: pc <= l", sp);
        e.labels = Labels { from: None, to: Some(l.to_string()), pc: Some(pc.to_string()) };
        Err(e)
    }

    fn bound(&self, ctx: &Ctx, pc: &Principal, e: &Expr) -> Result<(Principal, Type), TypeError> {
        match self.infer(ctx, pc, e)? {
            Type::Says(l, t) => Ok((l, *t)),
            t => Err(err(ErrorKind::Shape, format!("bind of non-says type {t}"), e.span)),
        }
    }

    fn downgrade(
        &self,
        ctx: &Ctx,
        pc: &Principal,
        kind: Downgrade,
        body: &Expr,
        to: &Principal,
        sp: Span,
    ) -> Result<Type, TypeError> {
        let (from, t) = self.bound(ctx, pc, body)?;
        downgrade_ok(self.lat, kind, &from, to, pc).map_err(|f| {
            let (ek, rule) = match kind {
                Downgrade::Decl => (ErrorKind::DeclPremise, "Decl"),
                Downgrade::Endorse => (ErrorKind::EndorsePremise, "Endorse"),
            };
            let which = if f == DowngradeFailure::Final { "final premise " } else { "premise " };
            TypeError {
                kind: ek,
                premise: format!("{rule} {which}{}", f.describe(kind)),
                labels: Labels { from: Some(from.to_string()), to: Some(to.to_string()), pc: Some(pc.to_string()) },
                span: sp,
            }
        })?;
        Ok(Type::says(to.clone(), t))
    }

    fn bracket(
        &self,
        ctx: &Ctx,
        pc: &Principal,
        body: &Expr,
        high: &HighSet,
        expected: Option<&Type>,
        sp: Span,
    ) -> Result<Type, TypeError> {
        if !self.harness {
            return Err(err(ErrorKind::Shape, "brackets are only allowed in harness mode", sp));
        }
        let mut hints = Vec::new();
        labels_in(body, &mut hints);
        if let Some(t) = expected {
            let mut ls = Vec::new();
            outer_labels(t, &mut ls);
            hints.extend(ls);
        }
        let mut last = None;
        for pc2 in high.candidates_above(self.lat, pc, &hints) {
            let r = match expected {
                Some(t) => self.check(ctx, &pc2, body, t).map(|_| t.clone()),
                None => self.infer(ctx, &pc2, body),
            };
            match r {
                Ok(t) => {
                    if high_type(self.lat, high, &t) {
                        return Ok(t);
                    }
                    let mut e = err(ErrorKind::ProtectFail, format!("Bracket: {t} is a high type of {high}"), sp);
                    e.labels.pc = Some(pc2.to_string());
                    last = Some(e);
                }
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| {
            let mut e = err(ErrorKind::PcMismatch, format!("Bracket: no pc' above pc in {high}"), sp);
            e.labels.pc = Some(pc.to_string());
            e
        }))
    }

    fn hole(
        &self,
        ctx: &Ctx,
        pc: &Principal,
        index: usize,
        high: &HighSet,
        t: &Type,
        sp: Span,
    ) -> Result<(), TypeError> {
        if !self.harness {
            return Err(err(ErrorKind::HoleContext, "holes are only allowed in harness mode", sp));
        }
        if !high.member(self.lat, pc) {
            let mut e = err(ErrorKind::HoleContext, format!("Hole: pc in {high}"), sp);
            e.labels.pc = Some(pc.to_string());
            return Err(e);
        }
        if !high_type(self.lat, high, t) {
            return Err(err(ErrorKind::HoleContext, format!("Hole: {t} is a high type of {high}"), sp));
        }
        if let Some(sites) = self.sites {
            let site = HoleSite { index, high: high.clone(), scope: ctx.vars(), pc: pc.clone(), ty: t.clone() };
            sites.borrow_mut().push(site);
        }
        Ok(())
    }
}

/// `G; pc |- e : t` for a source program (no brackets or holes).
pub fn type_of(lat: &Lattice, ctx: &Ctx, pc: &Principal, e: &Expr) -> Result<Type, TypeError> {
    Checker::new(lat).infer(ctx, pc, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, parse_principal, parse_type};

    fn p(s: &str) -> Principal {
        parse_principal(s).unwrap()
    }

    fn t(s: &str) -> Type {
        parse_type(s).unwrap()
    }

    fn tu() -> Lattice {
        Lattice::from_json(r#"{"atoms":["T","U"],"delegations":[{"who":"T","actsFor":"U"}]}"#).unwrap()
    }

    #[test]
    fn protection_rules() {
        let l = Lattice::empty();
        assert!(protects(&l, &p("a"), &Type::Unit));
        assert!(protects(&l, &p("a"), &t("says[a] unit * says[a] unit")));
        assert!(!protects(&l, &p("a"), &t("unit + unit")));
        assert!(!protects(&l, &p("a"), &t("X")));
        assert!(protects(&l, &p("top^<-"), &t("says[a] unit")));
        assert!(protects(&l, &p("a"), &t("says[a^->] unit")));
        assert!(!protects(&l, &p("a^->"), &t("says[a] unit")));
    }

    #[test]
    fn high_types() {
        let l = tu();
        let h = HighSet::Untrusted(vec!["U".into()]);
        assert!(high_type(&l, &h, &t("says[U^<-] unit")));
        assert!(high_type(&l, &h, &Type::Unit));
        assert!(!high_type(&l, &h, &t("bool")));
        assert!(!high_type(&l, &h, &t("says[T] unit")));
    }

    #[test]
    fn endorse_final_premise() {
        let l = tu();
        assert_eq!(
            downgrade_ok(&l, Downgrade::Endorse, &p("T^->"), &p("T"), &p("T^<-")),
            Err(DowngradeFailure::Final)
        );
        assert_eq!(downgrade_ok(&l, Downgrade::Endorse, &p("U^<-"), &p("T^<-"), &p("T^<-")), Ok(()));
    }

    #[test]
    fn decl_aspect_equality() {
        let l = Lattice::empty();
        assert_eq!(
            downgrade_ok(&l, Downgrade::Decl, &p("a"), &p("b^->"), &p("bot")),
            Err(DowngradeFailure::AspectEq)
        );
    }

    #[test]
    fn eta_requires_pc() {
        let l = Lattice::empty();
        let e = parse("eta[a] ()").unwrap();
        assert_eq!(type_of(&l, &Ctx::new(), &p("b"), &e).unwrap_err().kind, ErrorKind::PcMismatch);
        assert!(type_of(&l, &Ctx::new(), &p("top^<-"), &e).is_ok());
    }

    #[test]
    fn bind_raises_pc() {
        let l = Lattice::empty();
        let ctx = Ctx::new().with_var("x", t("says[a] unit"));
        let ok = parse("bind y = x in eta[a] y").unwrap();
        assert!(type_of(&l, &ctx, &p("top^<-"), &ok).is_ok());
        let bad = parse("bind y = x in eta[b] y").unwrap();
        assert!(type_of(&l, &ctx, &p("top^<-"), &bad).is_err());
    }

    #[test]
    fn case_needs_protected_result() {
        let l = Lattice::empty();
        let ctx = Ctx::new().with_var("b", t("bool"));
        let e = parse("case b of inj1 u. tt | inj2 u. ff").unwrap();
        let err = type_of(&l, &ctx, &p("top^<-"), &e).unwrap_err();
        assert_eq!(err.kind, ErrorKind::ProtectFail);
        let e2 = parse("case b of inj1 u. eta[a] tt | inj2 u. eta[a] ff").unwrap();
        assert!(type_of(&l, &ctx, &p("top^<-"), &e2).is_ok());
    }

    #[test]
    fn brackets_need_harness() {
        let l = tu();
        let e = crate::syntax::parse_with("[bracket etav[U^<-] () : untrusted(U)]", crate::syntax::ParseOptions::ALL)
            .unwrap();
        assert_eq!(type_of(&l, &Ctx::new(), &p("top^<-"), &e).unwrap_err().kind, ErrorKind::Shape);
        let ty = Checker::harness(&l).infer(&Ctx::new(), &p("top^<-"), &e).unwrap();
        assert_eq!(ty.to_string(), "says[U^<-] unit");
    }

    #[test]
    fn high_set_upward_closed_on_samples() {
        let l = tu();
        let h = HighSet::Secret(vec!["U".into()]);
        assert!(h.member(&l, &p("T^->")));
        assert!(h.member(&l, &flow_top()));
        assert!(!h.member(&l, &p("U")));
        assert!(!h.member(&l, &flow_bottom()));
    }
}
