use std::collections::BTreeSet;

use super::ast::{Expr, ExprKind, Type};
use super::subst::{fresh, subst};

struct Env<'a> {
    left: Vec<&'a str>,
    right: Vec<&'a str>,
}

impl<'a> Env<'a> {
    fn same(&self, a: &str, b: &str) -> bool {
        let i = self.left.iter().rposition(|x| *x == a);
        let j = self.right.iter().rposition(|x| *x == b);
        match (i, j) {
            (Some(i), Some(j)) => i == j,
            (None, None) => a == b,
            _ => false,
        }
    }

    fn push(&mut self, a: &'a str, b: &'a str) {
        self.left.push(a);
        self.right.push(b);
    }

    fn pop(&mut self) {
        self.left.pop();
        self.right.pop();
    }
}

pub fn alpha_eq_type(a: &Type, b: &Type) -> bool {
    ty_eq(a, b, &mut Env { left: vec![], right: vec![] })
}

fn ty_eq<'a>(a: &'a Type, b: &'a Type, env: &mut Env<'a>) -> bool {
    match (a, b) {
        (Type::Unit, Type::Unit) => true,
        (Type::Var(x), Type::Var(y)) => env.same(x, y),
        (Type::Sum(a1, a2), Type::Sum(b1, b2)) | (Type::Prod(a1, a2), Type::Prod(b1, b2)) => {
            ty_eq(a1, b1, env) && ty_eq(a2, b2, env)
        }
        (Type::Fun(a1, p, a2), Type::Fun(b1, q, b2)) => p == q && ty_eq(a1, b1, env) && ty_eq(a2, b2, env),
        (Type::Says(p, a), Type::Says(q, b)) => p == q && ty_eq(a, b, env),
        (Type::Forall(x, p, a), Type::Forall(y, q, b)) => {
            if p != q {
                return false;
            }
            env.push(x, y);
            let r = ty_eq(a, b, env);
            env.pop();
            r
        }
        _ => false,
    }
}

/// Structural equality up to renaming of term and type binders.
pub fn alpha_eq(a: &Expr, b: &Expr) -> bool {
    let mut vars = Env { left: vec![], right: vec![] };
    let mut tys = Env { left: vec![], right: vec![] };
    ex_eq(a, b, &mut vars, &mut tys)
}

fn opt_ty_eq<'a>(a: &'a Option<Type>, b: &'a Option<Type>, tys: &mut Env<'a>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => ty_eq(a, b, tys),
        _ => false,
    }
}

fn ex_eq<'a>(a: &'a Expr, b: &'a Expr, vars: &mut Env<'a>, tys: &mut Env<'a>) -> bool {
    use ExprKind::*;
    let under = |x: &'a str, y: &'a str, e1: &'a Expr, e2: &'a Expr, tys: &mut Env<'a>, vars: &mut Env<'a>| {
        vars.push(x, y);
        let r = ex_eq(e1, e2, vars, tys);
        vars.pop();
        r
    };
    match (&a.kind, &b.kind) {
        (Var { name: x }, Var { name: y }) => vars.same(x, y),
        (Unit, Unit) => true,
        (Pair { fst: a1, snd: a2 }, Pair { fst: b1, snd: b2 }) | (App { fun: a1, arg: a2 }, App { fun: b1, arg: b2 }) => {
            ex_eq(a1, b1, vars, tys) && ex_eq(a2, b2, vars, tys)
        }
        (Inj { index: i, ann: s, body: a1 }, Inj { index: j, ann: t, body: b1 }) => {
            i == j && opt_ty_eq(s, t, tys) && ex_eq(a1, b1, vars, tys)
        }
        (Proj { index: i, body: a1 }, Proj { index: j, body: b1 }) => i == j && ex_eq(a1, b1, vars, tys),
        (Lam { var: x, ty: s, pc: p, body: a1 }, Lam { var: y, ty: t, pc: q, body: b1 }) => {
            p == q && ty_eq(s, t, tys) && under(x, y, a1, b1, tys, vars)
        }
        (TLam { var: x, pc: p, body: a1 }, TLam { var: y, pc: q, body: b1 }) => {
            if p != q {
                return false;
            }
            tys.push(x, y);
            let r = ex_eq(a1, b1, vars, tys);
            tys.pop();
            r
        }
        (TApp { fun: a1, ty: s }, TApp { fun: b1, ty: t }) => ty_eq(s, t, tys) && ex_eq(a1, b1, vars, tys),
        (
            Case { scrut: s1, left_var: x1, left: l1, right_var: y1, right: r1 },
            Case { scrut: s2, left_var: x2, left: l2, right_var: y2, right: r2 },
        ) => ex_eq(s1, s2, vars, tys) && under(x1, x2, l1, l2, tys, vars) && under(y1, y2, r1, r2, tys, vars),
        (Eta { label: p, body: a1 }, Eta { label: q, body: b1 })
        | (EtaV { label: p, body: a1 }, EtaV { label: q, body: b1 })
        | (Decl { body: a1, label: p }, Decl { body: b1, label: q })
        | (Endorse { body: a1, label: p }, Endorse { body: b1, label: q }) => p == q && ex_eq(a1, b1, vars, tys),
        (Bind { var: x, bound: a1, body: a2 }, Bind { var: y, bound: b1, body: b2 }) => {
            ex_eq(a1, b1, vars, tys) && under(x, y, a2, b2, tys, vars)
        }
        (Bracket { body: a1, high: h }, Bracket { body: b1, high: k }) => h == k && ex_eq(a1, b1, vars, tys),
        (Hole { index: i, high: h, ty: s }, Hole { index: j, high: k, ty: t }) => {
            i == j && h == k && opt_ty_eq(s, t, tys)
        }
        _ => false,
    }
}

/// Renames binders so that no two binders share a name and no binder shares
/// a name with a free variable.
pub fn uniquify(e: &Expr) -> Expr {
    let mut taken = e.free_vars();
    let mut all = BTreeSet::new();
    e.all_names(&mut all);
    go(e, &mut taken, &mut all)
}

fn claim(x: &str, body: &Expr, taken: &mut BTreeSet<String>, all: &mut BTreeSet<String>) -> (String, Expr) {
    if taken.insert(x.to_string()) {
        return (x.to_string(), body.clone());
    }
    let z = fresh(x, all);
    all.insert(z.clone());
    taken.insert(z.clone());
    (z.clone(), subst(body, x, &Expr::var(z)))
}

fn go(e: &Expr, taken: &mut BTreeSet<String>, all: &mut BTreeSet<String>) -> Expr {
    use ExprKind::*;
    let kind = match &e.kind {
        Lam { var, ty, pc, body } => {
            let (var, body) = claim(var, body, taken, all);
            Lam { var, ty: ty.clone(), pc: pc.clone(), body: Box::new(go(&body, taken, all)) }
        }
        Bind { var, bound, body } => {
            let bound = go(bound, taken, all);
            let (var, body) = claim(var, body, taken, all);
            Bind { var, bound: Box::new(bound), body: Box::new(go(&body, taken, all)) }
        }
        Case { scrut, left_var, left, right_var, right } => {
            let scrut = go(scrut, taken, all);
            let (left_var, left) = claim(left_var, left, taken, all);
            let left = go(&left, taken, all);
            let (right_var, right) = claim(right_var, right, taken, all);
            let right = go(&right, taken, all);
            Case { scrut: Box::new(scrut), left_var, left: Box::new(left), right_var, right: Box::new(right) }
        }
        _ => return super::subst::map_children(e, &mut |c| go(c, taken, all)),
    };
    Expr { kind, span: e.span }
}
