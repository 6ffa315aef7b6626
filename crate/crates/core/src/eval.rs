//! Small-step evaluation with event traces, bracket rules and bracket
//! projection, plus hole desugaring.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{Aspect, Lattice, Principal};
use crate::syntax::{fresh, map_children, subst, subst_type_in_expr, Expr, ExprKind, Type};
pub use crate::typecheck::HoleSite;
use crate::typecheck::{Checker, Ctx, TypeError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    /// Initial-configuration input marker; never produced by `step`.
    Input { value: Expr },
    Bullet,
    Protect { label: Principal, value: Expr },
    Downgrade { aspect: Aspect, from: Principal, to: Principal, value: Expr },
}

impl Event {
    pub fn is_bullet(&self) -> bool {
        matches!(self, Event::Bullet)
    }

    pub fn map_value(&self, f: impl Fn(&Expr) -> Expr) -> Event {
        match self {
            Event::Input { value } => Event::Input { value: f(value) },
            Event::Bullet => Event::Bullet,
            Event::Protect { label, value } => Event::Protect { label: label.clone(), value: f(value) },
            Event::Downgrade { aspect, from, to, value } => {
                Event::Downgrade { aspect: *aspect, from: from.clone(), to: to.clone(), value: f(value) }
            }
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Input { value } => write!(f, "input {value}"),
            Event::Bullet => write!(f, "."),
            Event::Protect { label, value } => write!(f, "protect [{label}] {value}"),
            Event::Downgrade { aspect, from, to, value } => {
                let name = match aspect {
                    Aspect::Conf => "decl",
                    Aspect::Integ => "endorse",
                };
                write!(f, "{name} [{from}] -> [{to}] {value}")
            }
        }
    }
}

impl Serialize for Event {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        match self {
            Event::Input { value } => {
                m.serialize_entry("ev", "input")?;
                m.serialize_entry("value", value)?;
            }
            Event::Bullet => m.serialize_entry("ev", "bullet")?,
            Event::Protect { label, value } => {
                m.serialize_entry("ev", "protect")?;
                m.serialize_entry("label", &label.to_string())?;
                m.serialize_entry("value", value)?;
            }
            Event::Downgrade { aspect, from, to, value } => {
                m.serialize_entry("ev", "downgrade")?;
                m.serialize_entry("aspect", aspect.json_name())?;
                m.serialize_entry("from", &from.to_string())?;
                m.serialize_entry("to", &to.to_string())?;
                m.serialize_entry("value", value)?;
            }
        }
        m.end()
    }
}

pub type Trace = Vec<Event>;

/// Outcome of one top-level step.
#[derive(Clone, Debug)]
pub enum Step {
    Next(Expr, Event),
    Value,
    Stuck(String),
}

fn stuck<T>(why: impl Into<String>) -> Result<T, String> {
    Err(why.into())
}

/// Rebuilds `e` with the child selected by `pick` replaced.
fn in_ctx(e: &Expr, target: &Expr, new: Expr) -> Expr {
    let mut new = Some(new);
    map_children(e, &mut |c| if std::ptr::eq(c, target) { new.take().unwrap_or_else(|| c.clone()) } else { c.clone() })
}

/// Steps `e` under the left-to-right call-by-value context grammar.
/// `Ok(None)` means `e` is a value.
fn reduce(lat: &Lattice, e: &Expr) -> Result<Option<(Expr, Event)>, String> {
    use ExprKind::*;
    if e.is_value() {
        return Ok(None);
    }
    // Congruence: step the leftmost non-value child in an evaluation position.
    let eval_children: Vec<&Expr> = match &e.kind {
        App { fun, arg } => vec![fun, arg],
        TApp { fun, .. } => vec![fun],
        Pair { fst, snd } => vec![fst, snd],
        Eta { body, .. }
        | EtaV { body, .. }
        | Proj { body, .. }
        | Inj { body, .. }
        | Decl { body, .. }
        | Endorse { body, .. }
        | Bracket { body, .. } => vec![body],
        Bind { bound, .. } => vec![bound],
        Case { scrut, .. } => vec![scrut],
        Var { name } => return stuck(format!("free variable {name}")),
        Hole { index, .. } => return stuck(format!("unfilled hole {index}")),
        Unit | Lam { .. } | TLam { .. } => return Ok(None),
    };
    for c in eval_children {
        if !c.is_value() {
            return match reduce(lat, c)? {
                Some((c2, ev)) => Ok(Some((in_ctx(e, c, c2), ev))),
                None => stuck("non-value did not step"),
            };
        }
    }
    let bullet = |x: Expr| Ok(Some((x, Event::Bullet)));
    let keep_span = |x: Expr| Expr { kind: x.kind, span: e.span };
    match &e.kind {
        App { fun, arg } => match &fun.kind {
            Lam { var, body, .. } => bullet(subst(body, var, arg)),
            _ => stuck(format!("application of {fun}")),
        },
        TApp { fun, ty } => match &fun.kind {
            TLam { var, body, .. } => bullet(subst_type_in_expr(body, var, ty)),
            _ => stuck(format!("type application of {fun}")),
        },
        Eta { label, body } => {
            let v = (**body).clone();
            Ok(Some((keep_span(Expr::etav(label.clone(), v.clone())), Event::Protect { label: label.clone(), value: v })))
        }
        Proj { index, body } => match &body.kind {
            Pair { fst, snd } => bullet(if *index == 1 { (**fst).clone() } else { (**snd).clone() }),
            Bracket { body: v, high } => bullet(Expr::bracket(Expr::proj(*index, (**v).clone()), high.clone())),
            _ => stuck(format!("projection of {body}")),
        },
        Bind { var, bound, body } => match &bound.kind {
            EtaV { body: v, .. } => bullet(subst(body, var, v)),
            Bracket { body: v, high } => {
                let inner = Expr::bind(var.clone(), (**v).clone(), (**body).clone());
                bullet(Expr::bracket(inner, high.clone()))
            }
            _ => stuck(format!("bind of {bound}")),
        },
        Case { scrut, left_var, left, right_var, right } => match &scrut.kind {
            Inj { index: 1, body: v, .. } => bullet(subst(left, left_var, v)),
            Inj { index: 2, body: v, .. } => bullet(subst(right, right_var, v)),
            _ => stuck(format!("case of {scrut}")),
        },
        Decl { body, label } | Endorse { body, label } => {
            let aspect = if matches!(e.kind, Decl { .. }) { Aspect::Conf } else { Aspect::Integ };
            let rebuild = |v: Expr| match aspect {
                Aspect::Conf => Expr::decl(v, label.clone()),
                Aspect::Integ => Expr::endorse(v, label.clone()),
            };
            match &body.kind {
                EtaV { label: from, body: v } => {
                    let ev = Event::Downgrade { aspect, from: from.clone(), to: label.clone(), value: (**v).clone() };
                    Ok(Some((keep_span(Expr::etav(label.clone(), (**v).clone())), ev)))
                }
                Bracket { body: v, high } => {
                    if high.member(lat, label) {
                        bullet(Expr::bracket(rebuild((**v).clone()), high.clone()))
                    } else {
                        bullet(rebuild((**v).clone()))
                    }
                }
                _ => stuck(format!("downgrade of {body}")),
            }
        }
        _ => stuck(format!("no rule for {e}")),
    }
}

pub fn step(lat: &Lattice, e: &Expr) -> Step {
    match reduce(lat, e) {
        Ok(Some((e2, ev))) => Step::Next(e2, ev),
        Ok(None) => Step::Value,
        Err(why) => Step::Stuck(why),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub value: Expr,
    pub trace: Trace,
}

#[derive(Clone, Debug, Error)]
pub enum EvalError {
    #[error("out of fuel after {steps} steps")]
    OutOfFuel { steps: usize, trace: Trace },
    #[error("stuck after {steps} steps: {reason}")]
    Stuck { steps: usize, reason: String, expr: Expr, trace: Trace },
}

pub const DEFAULT_FUEL: usize = 10_000;

/// Runs `e` to a value, at most `fuel` steps.
pub fn eval(lat: &Lattice, e: &Expr, fuel: usize) -> Result<Outcome, EvalError> {
    eval_observed(lat, e, fuel, &mut |_, _, _| {})
}

/// As [`eval`], calling `observe(before, event, after)` on every step.
pub fn eval_observed(
    lat: &Lattice,
    e: &Expr,
    fuel: usize,
    observe: &mut dyn FnMut(&Expr, &Event, &Expr),
) -> Result<Outcome, EvalError> {
    let mut cur = e.clone();
    let mut trace = Vec::new();
    loop {
        match step(lat, &cur) {
            Step::Value => return Ok(Outcome { value: cur, trace }),
            Step::Stuck(reason) => return Err(EvalError::Stuck { steps: trace.len(), reason, expr: cur, trace }),
            Step::Next(next, ev) => {
                if trace.len() >= fuel {
                    return Err(EvalError::OutOfFuel { steps: trace.len(), trace });
                }
                observe(&cur, &ev, &next);
                trace.push(ev);
                cur = next;
            }
        }
    }
}

/// Removes every bracket.
pub fn bracket_project(e: &Expr) -> Expr {
    match &e.kind {
        ExprKind::Bracket { body, .. } => bracket_project(body),
        _ => map_children(e, &mut |c| bracket_project(c)),
    }
}

pub fn project_event(ev: &Event) -> Event {
    ev.map_value(bracket_project)
}

#[derive(Debug, Error)]
pub enum DesugarError {
    #[error("program has {holes} holes but {attacks} attacks were given")]
    Arity { holes: usize, attacks: usize },
    #[error("hole program must be `lam (x : t) [pc]. e`")]
    Shape,
    #[error("hole typing failed: {0}")]
    Type(TypeError),
    #[error("attack for hole {index} rejected: {err}")]
    Attack { index: usize, err: TypeError },
}

/// Result of replacing holes with an attacker-supplied function input.
#[derive(Clone, Debug)]
pub struct Desugared {
    /// `lam (x : tx) [pc]. lam (y : ty) [pc]. e'`
    pub program: Expr,
    pub y_type: Type,
    pub sites: Vec<HoleSite>,
}

/// Finds every hole of `lam (x : tx) [pc]. e` with its typing context.
pub fn hole_sites(lat: &Lattice, prog: &Expr) -> Result<Vec<HoleSite>, DesugarError> {
    let sites = std::cell::RefCell::new(Vec::new());
    let checker = Checker::harness(lat).recording(&sites);
    checker.infer(&Ctx::new(), &crate::typecheck::flow_bottom(), prog).map_err(DesugarError::Type)?;
    let mut by_index: Vec<HoleSite> = Vec::new();
    for s in sites.into_inner() {
        match by_index.iter_mut().find(|o| o.index == s.index) {
            Some(o) => *o = s,
            None => by_index.push(s),
        }
    }
    by_index.sort_by_key(|s| s.index);
    Ok(by_index)
}

fn site_fun_type(site: &HoleSite) -> Type {
    site.scope.iter().rev().fold(site.ty.clone(), |acc, (_, t)| Type::fun(t.clone(), site.pc.clone(), acc))
}

/// `y`'s type for a site: the curried function over the hole's scope, protected at its pc.
fn site_y_type(site: &HoleSite) -> Type {
    Type::says(site.pc.clone(), site_fun_type(site))
}

fn nest_types(ts: Vec<Type>) -> Type {
    ts.into_iter().rev().reduce(|acc, t| Type::prod(t, acc)).unwrap_or(Type::Unit)
}

fn nest_exprs(es: Vec<Expr>) -> Expr {
    es.into_iter().rev().reduce(|acc, e| Expr::pair(e, acc)).unwrap_or_else(Expr::unit)
}

/// Path of projections selecting component `k` of `n` right-nested pairs.
fn select(y: &str, k: usize, n: usize) -> Expr {
    let mut e = Expr::var(y);
    for _ in 0..k {
        e = Expr::proj(2, e);
    }
    if k + 1 < n {
        e = Expr::proj(1, e);
    }
    e
}

/// Replaces each hole with `bind y' = y_k in (y' z1 .. zk)` and wraps the
/// body in a new binder for `y`.
pub fn desugar_program(lat: &Lattice, prog: &Expr) -> Result<Desugared, DesugarError> {
    let (x, tx, pc, body) = match &prog.kind {
        ExprKind::Lam { var, ty, pc, body } => (var.clone(), ty.clone(), pc.clone(), body),
        _ => return Err(DesugarError::Shape),
    };
    let sites = hole_sites(lat, prog)?;
    let n = sites.len();
    let mut names = BTreeSet::new();
    prog.all_names(&mut names);
    let y = if names.contains("y") { fresh("y", &names) } else { "y".to_string() };
    names.insert(y.clone());
    let mut replaced = (**body).clone();
    for (k, site) in sites.iter().enumerate() {
        let yk = fresh("y", &names);
        names.insert(yk.clone());
        let call = site.scope.iter().fold(Expr::var(yk.clone()), |acc, (z, _)| Expr::app(acc, Expr::var(z.clone())));
        let rep = Expr::bind(yk, select(&y, k, n), call);
        replaced = fill_hole(&replaced, site.index, &rep);
    }
    let y_type = nest_types(sites.iter().map(site_y_type).collect());
    let program = Expr::lam(x, tx, pc.clone(), Expr::lam(y, y_type.clone(), pc, replaced));
    Ok(Desugared { program, y_type, sites })
}

fn fill_hole(e: &Expr, index: usize, rep: &Expr) -> Expr {
    match &e.kind {
        ExprKind::Hole { index: i, .. } if *i == index => rep.clone(),
        _ => map_children(e, &mut |c| fill_hole(c, index, rep)),
    }
}

/// Builds the value for `y` from one attack per hole:
/// `etav[pc'] (lam z1 .. lam zk. a)` per site, nested in pairs.
pub fn attack_value(lat: &Lattice, d: &Desugared, attacks: &[Expr]) -> Result<Expr, DesugarError> {
    if attacks.len() != d.sites.len() {
        return Err(DesugarError::Arity { holes: d.sites.len(), attacks: attacks.len() });
    }
    let checker = Checker::harness(lat);
    let mut ws = Vec::new();
    for (site, a) in d.sites.iter().zip(attacks) {
        let ctx = site.scope.iter().fold(Ctx::new(), |c, (z, t)| c.with_var(z, t.clone()));
        checker.check(&ctx, &site.pc, a, &site.ty).map_err(|err| DesugarError::Attack { index: site.index, err })?;
        let f = site
            .scope
            .iter()
            .rev()
            .fold(a.clone(), |acc, (z, t)| Expr::lam(z.clone(), t.clone(), site.pc.clone(), acc));
        ws.push(Expr::etav(site.pc.clone(), f));
    }
    Ok(nest_exprs(ws))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, parse_principal, parse_with, ParseOptions};

    fn run(src: &str) -> Outcome {
        eval(&Lattice::empty(), &parse_with(src, ParseOptions::ALL).unwrap(), DEFAULT_FUEL).unwrap()
    }

    #[test]
    fn eta_emits_protect() {
        let o = run("eta[a] ()");
        assert_eq!(o.value.to_string(), "etav[a] ()");
        assert_eq!(o.trace, vec![Event::Protect { label: parse_principal("a").unwrap(), value: Expr::unit() }]);
    }

    #[test]
    fn decl_emits_downgrade() {
        let o = run("decl (etav[a] ()) to (a^<-)");
        assert_eq!(o.value.to_string(), "etav[a^<-] ()");
        match &o.trace[..] {
            [Event::Downgrade { aspect: Aspect::Conf, from, to, .. }] => {
                assert_eq!(from.to_string(), "a");
                assert_eq!(to.to_string(), "a^<-");
            }
            t => panic!("{t:?}"),
        }
    }

    #[test]
    fn beta_emits_bullet() {
        let o = run("(lam (x : unit) [top^<-]. x) ()");
        assert_eq!(o.value, Expr::unit());
        assert_eq!(o.trace, vec![Event::Bullet]);
    }

    #[test]
    fn bracket_expands_over_bind() {
        let lat = Lattice::empty();
        let e = parse_with("bind x = [bracket etav[h] () : above(h)] in eta[h] x", ParseOptions::ALL).unwrap();
        match step(&lat, &e) {
            Step::Next(e2, Event::Bullet) => {
                assert_eq!(e2.to_string(), "[bracket bind x = etav[h] () in eta[h] x : above(h)]")
            }
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn bracket_low_decl_drops_bracket() {
        let lat = Lattice::empty();
        let e = parse_with("decl [bracket etav[h] () : above(h)] to (h^<-)", ParseOptions::ALL).unwrap();
        match step(&lat, &e) {
            Step::Next(e2, Event::Bullet) => assert_eq!(e2.to_string(), "decl etav[h] () to h^<-"),
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn out_of_fuel_is_reported() {
        let e = parse("(lam (x : unit) [top^<-]. x) ((lam (x : unit) [top^<-]. x) ())").unwrap();
        match eval(&Lattice::empty(), &e, 1) {
            Err(EvalError::OutOfFuel { steps: 1, .. }) => {}
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn projection_strips_nested_brackets() {
        let e = parse_with("([bracket [bracket () : above(a)] : above(b)], ())", ParseOptions::ALL).unwrap();
        assert_eq!(bracket_project(&e).to_string(), "((), ())");
    }

    #[test]
    fn one_hole_desugars() {
        let lat = Lattice::from_json(r#"{"atoms":["T","U"],"delegations":[]}"#).unwrap();
        let prog = parse("lam (x : says[U^<-] unit) [U^<-]. [hole 0 : untrusted(U) : says[U^<-] unit]").unwrap();
        let d = desugar_program(&lat, &prog).unwrap();
        assert_eq!(
            d.program.to_string(),
            "lam (x : says[U^<-] unit) [U^<-]. lam (y : says[U^<-] (says[U^<-] unit -[U^<-]-> says[U^<-] unit)) [U^<-]. bind y_1 = y in y_1 x"
        );
        let w = attack_value(&lat, &d, &[parse("x").unwrap()]).unwrap();
        assert_eq!(w.to_string(), "etav[U^<-] (lam (x : says[U^<-] unit) [U^<-]. x)");
        assert!(crate::typecheck::type_of(&lat, &Ctx::new(), &parse_principal("U^<-").unwrap(), &d.program).is_ok());
    }
}
