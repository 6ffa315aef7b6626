use std::collections::BTreeSet;

use super::ast::{Expr, ExprKind, Type};

/// First `base_N` (N = 1, 2, ...) not in `avoid`.
pub fn fresh(base: &str, avoid: &BTreeSet<String>) -> String {
    let stem = match base.rfind('_') {
        Some(i) if i > 0 && base[i + 1..].chars().all(|c| c.is_ascii_digit()) && i + 1 < base.len() => &base[..i],
        _ => base,
    };
    (1..).map(|n| format!("{stem}_{n}")).find(|c| !avoid.contains(c)).unwrap()
}

/// `t[X := s]`, renaming quantifiers that would capture.
pub fn subst_type(t: &Type, x: &str, s: &Type) -> Type {
    match t {
        Type::Unit => Type::Unit,
        Type::Var(y) => {
            if y == x {
                s.clone()
            } else {
                t.clone()
            }
        }
        Type::Sum(a, b) => Type::sum(subst_type(a, x, s), subst_type(b, x, s)),
        Type::Prod(a, b) => Type::prod(subst_type(a, x, s), subst_type(b, x, s)),
        Type::Fun(a, pc, b) => Type::fun(subst_type(a, x, s), pc.clone(), subst_type(b, x, s)),
        Type::Says(l, a) => Type::says(l.clone(), subst_type(a, x, s)),
        Type::Forall(y, pc, body) => {
            if y == x {
                return t.clone();
            }
            let fv = s.free_vars();
            if fv.contains(y) {
                let mut avoid = fv;
                avoid.extend(body.free_vars());
                avoid.insert(x.to_string());
                let z = fresh(y, &avoid);
                let body = subst_type(body, y, &Type::Var(z.clone()));
                Type::Forall(z, pc.clone(), Box::new(subst_type(&body, x, s)))
            } else {
                Type::Forall(y.clone(), pc.clone(), Box::new(subst_type(body, x, s)))
            }
        }
    }
}

fn rebuild(e: &Expr, kind: ExprKind) -> Expr {
    Expr { kind, span: e.span }
}

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

/// Applies `f` to every immediate child, keeping binders and annotations.
pub fn map_children(e: &Expr, f: &mut dyn FnMut(&Expr) -> Expr) -> Expr {
    use ExprKind::*;
    let kind = match &e.kind {
        Var { .. } | Unit | Hole { .. } => e.kind.clone(),
        Pair { fst, snd } => Pair { fst: bx(f(fst)), snd: bx(f(snd)) },
        Inj { index, ann, body } => Inj { index: *index, ann: ann.clone(), body: bx(f(body)) },
        Proj { index, body } => Proj { index: *index, body: bx(f(body)) },
        Lam { var, ty, pc, body } => Lam { var: var.clone(), ty: ty.clone(), pc: pc.clone(), body: bx(f(body)) },
        TLam { var, pc, body } => TLam { var: var.clone(), pc: pc.clone(), body: bx(f(body)) },
        App { fun, arg } => App { fun: bx(f(fun)), arg: bx(f(arg)) },
        TApp { fun, ty } => TApp { fun: bx(f(fun)), ty: ty.clone() },
        Case { scrut, left_var, left, right_var, right } => Case {
            scrut: bx(f(scrut)),
            left_var: left_var.clone(),
            left: bx(f(left)),
            right_var: right_var.clone(),
            right: bx(f(right)),
        },
        Eta { label, body } => Eta { label: label.clone(), body: bx(f(body)) },
        EtaV { label, body } => EtaV { label: label.clone(), body: bx(f(body)) },
        Bind { var, bound, body } => Bind { var: var.clone(), bound: bx(f(bound)), body: bx(f(body)) },
        Decl { body, label } => Decl { body: bx(f(body)), label: label.clone() },
        Endorse { body, label } => Endorse { body: bx(f(body)), label: label.clone() },
        Bracket { body, high } => Bracket { body: bx(f(body)), high: high.clone() },
    };
    rebuild(e, kind)
}

/// Renames free occurrences of variable `from` to `to`.
fn rename(e: &Expr, from: &str, to: &str) -> Expr {
    subst(e, from, &Expr::var(to))
}

/// Capture-avoiding `e[x := v]`.
pub fn subst(e: &Expr, x: &str, v: &Expr) -> Expr {
    let fv = v.free_vars();
    subst_with(e, x, v, &fv)
}

fn under_binder(y: &str, body: &Expr, x: &str, v: &Expr, fv: &BTreeSet<String>) -> (String, Expr) {
    if y == x {
        return (y.to_string(), body.clone());
    }
    if fv.contains(y) {
        let mut avoid = fv.clone();
        body.all_names(&mut avoid);
        avoid.insert(x.to_string());
        let z = fresh(y, &avoid);
        let body = rename(body, y, &z);
        (z, subst_with(&body, x, v, fv))
    } else {
        (y.to_string(), subst_with(body, x, v, fv))
    }
}

fn subst_with(e: &Expr, x: &str, v: &Expr, fv: &BTreeSet<String>) -> Expr {
    use ExprKind::*;
    match &e.kind {
        Var { name } if name == x => v.clone(),
        Lam { var, ty, pc, body } => {
            let (var, body) = under_binder(var, body, x, v, fv);
            rebuild(e, Lam { var, ty: ty.clone(), pc: pc.clone(), body: bx(body) })
        }
        Bind { var, bound, body } => {
            let bound = subst_with(bound, x, v, fv);
            let (var, body) = under_binder(var, body, x, v, fv);
            rebuild(e, Bind { var, bound: bx(bound), body: bx(body) })
        }
        Case { scrut, left_var, left, right_var, right } => {
            let scrut = subst_with(scrut, x, v, fv);
            let (left_var, left) = under_binder(left_var, left, x, v, fv);
            let (right_var, right) = under_binder(right_var, right, x, v, fv);
            rebuild(e, Case { scrut: bx(scrut), left_var, left: bx(left), right_var, right: bx(right) })
        }
        _ => map_children(e, &mut |c| subst_with(c, x, v, fv)),
    }
}

/// Every type-variable name occurring in an expression's annotations or binders.
fn type_names(e: &Expr, out: &mut BTreeSet<String>) {
    fn ty_names(t: &Type, out: &mut BTreeSet<String>) {
        match t {
            Type::Unit => {}
            Type::Var(x) => {
                out.insert(x.clone());
            }
            Type::Sum(a, b) | Type::Prod(a, b) | Type::Fun(a, _, b) => {
                ty_names(a, out);
                ty_names(b, out);
            }
            Type::Forall(x, _, t) => {
                out.insert(x.clone());
                ty_names(t, out);
            }
            Type::Says(_, t) => ty_names(t, out),
        }
    }
    match &e.kind {
        ExprKind::Lam { ty, .. } | ExprKind::TApp { ty, .. } => ty_names(ty, out),
        ExprKind::Inj { ann: Some(t), .. } | ExprKind::Hole { ty: Some(t), .. } => ty_names(t, out),
        ExprKind::TLam { var, .. } => {
            out.insert(var.clone());
        }
        _ => {}
    }
    for c in e.children() {
        type_names(c, out);
    }
}

/// Capture-avoiding `e[X := s]` over all type annotations.
pub fn subst_type_in_expr(e: &Expr, x: &str, s: &Type) -> Expr {
    use ExprKind::*;
    let st = |t: &Type| subst_type(t, x, s);
    let recur = |c: &Expr| subst_type_in_expr(c, x, s);
    match &e.kind {
        TLam { var, pc, body } => {
            if var == x {
                return e.clone();
            }
            let fv = s.free_vars();
            if fv.contains(var) {
                let mut avoid = fv;
                type_names(body, &mut avoid);
                avoid.insert(x.to_string());
                let z = fresh(var, &avoid);
                let body = subst_type_in_expr(body, var, &Type::Var(z.clone()));
                rebuild(e, TLam { var: z, pc: pc.clone(), body: bx(recur(&body)) })
            } else {
                rebuild(e, TLam { var: var.clone(), pc: pc.clone(), body: bx(recur(body)) })
            }
        }
        Lam { var, ty, pc, body } => rebuild(e, Lam { var: var.clone(), ty: st(ty), pc: pc.clone(), body: bx(recur(body)) }),
        TApp { fun, ty } => rebuild(e, TApp { fun: bx(recur(fun)), ty: st(ty) }),
        Inj { index, ann, body } => rebuild(e, Inj { index: *index, ann: ann.as_ref().map(st), body: bx(recur(body)) }),
        Hole { index, high, ty } => rebuild(e, Hole { index: *index, high: high.clone(), ty: ty.as_ref().map(st) }),
        _ => map_children(e, &mut |c| recur(c)),
    }
}
