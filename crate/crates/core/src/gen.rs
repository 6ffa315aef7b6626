//! Seeded random generation of well-typed programs and values.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lattice::{flow_join, Lattice, Principal};
use crate::syntax::{alpha_eq_type, Expr, Type};
use crate::typecheck::{downgrade_ok, flow_bottom, protects, type_of, Ctx, Downgrade};

/// A closed program together with its type and the pc it was checked at.
#[derive(Clone, Debug)]
pub struct Generated {
    pub expr: Expr,
    pub ty: Type,
    pub pc: Principal,
}

/// `lam (x : tx) [pc]. lam (y : ty) [pc]. body`, typed at the flow bottom.
#[derive(Clone, Debug)]
pub struct TwoInput {
    pub program: Expr,
    pub tx: Type,
    pub ty: Type,
    pub pc: Principal,
}

pub struct Gen<'a> {
    lat: &'a Lattice,
    rng: ChaCha8Rng,
    labels: Vec<Principal>,
    next_var: usize,
}

impl<'a> Gen<'a> {
    pub fn new(lat: &'a Lattice, seed: u64) -> Gen<'a> {
        let mut labels = vec![Principal::Bot, Principal::Top, flow_bottom(), Principal::Top.conf()];
        let atoms: Vec<Principal> = lat.atoms().iter().map(|a| Principal::atom(a.clone())).collect();
        for a in &atoms {
            labels.push(a.clone());
            labels.push(a.clone().conf());
            labels.push(a.clone().integ());
        }
        for (i, a) in atoms.iter().enumerate() {
            for b in &atoms[i + 1..] {
                labels.push(a.clone().and(b.clone()));
                labels.push(a.clone().or(b.clone()));
                labels.push(a.clone().conf().and(b.clone().integ()));
                labels.push(b.clone().conf().and(a.clone().integ()));
            }
        }
        Gen { lat, rng: ChaCha8Rng::seed_from_u64(seed), labels, next_var: 0 }
    }

    pub fn labels(&self) -> &[Principal] {
        &self.labels
    }

    pub fn label(&mut self) -> Principal {
        self.labels.choose(&mut self.rng).unwrap().clone()
    }

    fn var(&mut self) -> String {
        self.next_var += 1;
        format!("v{}", self.next_var)
    }

    /// Random first-order type; `says` nesting and products are bounded by `depth`.
    pub fn ty(&mut self, depth: u32) -> Type {
        let k = if depth == 0 { self.rng.gen_range(0..2) } else { self.rng.gen_range(0..6) };
        match k {
            0 => Type::Unit,
            1 => Type::bool(),
            2 | 3 => {
                let l = self.label();
                Type::says(l, self.ty(depth - 1))
            }
            4 => Type::prod(self.ty(depth - 1), self.ty(depth - 1)),
            _ => {
                let pc = self.label();
                Type::fun(self.ty(depth - 1), pc, self.ty(depth - 1))
            }
        }
    }

    /// Random `says`-type, so that it is protected by its outer label.
    pub fn says_ty(&mut self, depth: u32) -> Type {
        let l = self.label();
        Type::says(l, self.ty(depth))
    }

    /// A closed value of type `t`. Function bodies are generated at their own pc.
    pub fn value(&mut self, t: &Type) -> Expr {
        match t {
            Type::Unit | Type::Var(_) | Type::Forall(..) => Expr::unit(),
            Type::Sum(a, b) => {
                if self.rng.gen_bool(0.5) {
                    Expr::inj(1, Some(t.clone()), self.value(a))
                } else {
                    Expr::inj(2, Some(t.clone()), self.value(b))
                }
            }
            Type::Prod(a, b) => Expr::pair(self.value(a), self.value(b)),
            Type::Says(l, a) => Expr::etav(l.clone(), self.value(a)),
            Type::Fun(a, pc, b) => {
                let x = self.var();
                let ctx = Ctx::new().with_var(&x, (**a).clone());
                let body = self.expr(&ctx, pc, b, 4).unwrap_or_else(|| self.value(b));
                Expr::lam(x, (**a).clone(), pc.clone(), body)
            }
        }
    }

    /// Type-directed term of type `t` at `pc`, using roughly `fuel` nodes.
    pub fn expr(&mut self, ctx: &Ctx, pc: &Principal, t: &Type, fuel: usize) -> Option<Expr> {
        let vars: Vec<String> = ctx.vars().into_iter().filter(|(_, vt)| alpha_eq_type(vt, t)).map(|(x, _)| x).collect();
        if fuel <= 1 || self.rng.gen_bool(0.15) {
            if let Some(x) = vars.choose(&mut self.rng) {
                if self.rng.gen_bool(0.7) {
                    return Some(Expr::var(x.clone()));
                }
            }
            return self.intro(ctx, pc, t, 0);
        }
        for _ in 0..4 {
            let k = self.rng.gen_range(0..10);
            let got = match k {
                0..=2 => self.intro(ctx, pc, t, fuel - 1),
                3 => self.app(ctx, pc, t, fuel - 1),
                4 => self.proj(ctx, pc, t, fuel - 1),
                5 => self.case(ctx, pc, t, fuel - 1),
                6 | 7 => self.bind(ctx, pc, t, fuel - 1),
                8 => self.downgrade(ctx, pc, t, fuel - 1),
                _ => self.tapp(ctx, pc, t, fuel - 1),
            };
            if got.is_some() {
                return got;
            }
        }
        self.intro(ctx, pc, t, 0)
    }

    fn intro(&mut self, ctx: &Ctx, pc: &Principal, t: &Type, fuel: usize) -> Option<Expr> {
        let half = fuel / 2;
        match t {
            Type::Unit => Some(Expr::unit()),
            Type::Sum(a, b) => {
                if self.rng.gen_bool(0.5) {
                    Some(Expr::inj(1, Some(t.clone()), self.expr(ctx, pc, a, fuel)?))
                } else {
                    Some(Expr::inj(2, Some(t.clone()), self.expr(ctx, pc, b, fuel)?))
                }
            }
            Type::Prod(a, b) => Some(Expr::pair(self.expr(ctx, pc, a, half)?, self.expr(ctx, pc, b, half)?)),
            Type::Fun(a, pc2, b) => {
                let x = self.var();
                let body = self.expr(&ctx.with_var(&x, (**a).clone()), pc2, b, fuel)?;
                Some(Expr::lam(x, (**a).clone(), pc2.clone(), body))
            }
            Type::Says(l, a) => {
                if !self.lat.flows_to(pc, l) {
                    return None;
                }
                Some(Expr::eta(l.clone(), self.expr(ctx, pc, a, fuel)?))
            }
            Type::Var(_) | Type::Forall(..) => None,
        }
    }

    fn app(&mut self, ctx: &Ctx, pc: &Principal, t: &Type, fuel: usize) -> Option<Expr> {
        let a = self.ty(1);
        let pc2 = flow_join(pc, &self.label());
        let f = self.expr(ctx, pc, &Type::fun(a.clone(), pc2, t.clone()), fuel / 2)?;
        let arg = self.expr(ctx, pc, &a, fuel / 2)?;
        Some(Expr::app(f, arg))
    }

    fn proj(&mut self, ctx: &Ctx, pc: &Principal, t: &Type, fuel: usize) -> Option<Expr> {
        let other = self.ty(0);
        if self.rng.gen_bool(0.5) {
            Some(Expr::proj(1, self.expr(ctx, pc, &Type::prod(t.clone(), other), fuel)?))
        } else {
            Some(Expr::proj(2, self.expr(ctx, pc, &Type::prod(other, t.clone()), fuel)?))
        }
    }

    fn case(&mut self, ctx: &Ctx, pc: &Principal, t: &Type, fuel: usize) -> Option<Expr> {
        if !protects(self.lat, pc, t) {
            return None;
        }
        let (a, b) = (self.ty(0), self.ty(0));
        let scrut = self.expr(ctx, pc, &Type::sum(a.clone(), b.clone()), fuel / 3)?;
        let (x, y) = (self.var(), self.var());
        let l = self.expr(&ctx.with_var(&x, a), pc, t, fuel / 3)?;
        let r = self.expr(&ctx.with_var(&y, b), pc, t, fuel / 3)?;
        Some(Expr::case(scrut, x, l, y, r))
    }

    fn bind(&mut self, ctx: &Ctx, pc: &Principal, t: &Type, fuel: usize) -> Option<Expr> {
        let usable: Vec<(String, Principal, Type)> = ctx
            .vars()
            .into_iter()
            .filter_map(|(x, vt)| match vt {
                Type::Says(l, a) if protects(self.lat, &l, t) => Some((x, l, *a)),
                _ => None,
            })
            .collect();
        let (bound, l, a) = match usable.choose(&mut self.rng) {
            Some((x, l, a)) if self.rng.gen_bool(0.6) => (Expr::var(x.clone()), l.clone(), a.clone()),
            _ => {
                let cands: Vec<Principal> = self.labels.iter().filter(|l| protects(self.lat, l, t)).cloned().collect();
                let l = cands.choose(&mut self.rng)?.clone();
                let a = self.ty(1);
                (self.expr(ctx, pc, &Type::says(l.clone(), a.clone()), fuel / 2)?, l, a)
            }
        };
        let x = self.var();
        let body = self.expr(&ctx.with_var(&x, a), &flow_join(pc, &l), t, fuel / 2)?;
        Some(Expr::bind(x, bound, body))
    }

    fn downgrade(&mut self, ctx: &Ctx, pc: &Principal, t: &Type, fuel: usize) -> Option<Expr> {
        let Type::Says(to, a) = t else { return None };
        let kind = if self.rng.gen_bool(0.5) { Downgrade::Decl } else { Downgrade::Endorse };
        let usable: Vec<String> = ctx
            .vars()
            .into_iter()
            .filter_map(|(x, vt)| match vt {
                Type::Says(from, b)
                    if alpha_eq_type(&b, a) && downgrade_ok(self.lat, kind, &from, to, pc).is_ok() =>
                {
                    Some(x)
                }
                _ => None,
            })
            .collect();
        let body = match usable.choose(&mut self.rng) {
            Some(x) if self.rng.gen_bool(0.6) => Expr::var(x.clone()),
            _ => {
                let cands: Vec<Principal> = self
                    .labels
                    .iter()
                    .filter(|from| downgrade_ok(self.lat, kind, from, to, pc).is_ok())
                    .cloned()
                    .collect();
                let from = cands.choose(&mut self.rng)?.clone();
                self.expr(ctx, pc, &Type::says(from, (**a).clone()), fuel)?
            }
        };
        Some(match kind {
            Downgrade::Decl => Expr::decl(body, to.clone()),
            Downgrade::Endorse => Expr::endorse(body, to.clone()),
        })
    }

    /// `(tlam X [pc']. lam (z : X) [pc']. z) @t e`.
    fn tapp(&mut self, ctx: &Ctx, pc: &Principal, t: &Type, fuel: usize) -> Option<Expr> {
        if matches!(t, Type::Fun(..) | Type::Forall(..)) {
            return None;
        }
        let pc2 = flow_join(pc, &self.label());
        let z = self.var();
        let id = Expr::tlam("X", pc2.clone(), Expr::lam(z.clone(), Type::Var("X".into()), pc2, Expr::var(z)));
        let arg = self.expr(ctx, pc, t, fuel)?;
        Some(Expr::app(Expr::tapp(id, t.clone()), arg))
    }

    /// A closed well-typed program of at most `max_size` nodes.
    pub fn program(&mut self, max_size: usize) -> Generated {
        loop {
            let pc = if self.rng.gen_bool(0.5) { flow_bottom() } else { self.label() };
            let t = self.ty(2);
            let fuel = self.rng.gen_range(2..=max_size / 2);
            let Some(e) = self.expr(&Ctx::new(), &pc, &t, fuel) else { continue };
            if e.size() > max_size {
                continue;
            }
            if let Ok(got) = type_of(self.lat, &Ctx::new(), &pc, &e) {
                return Generated { expr: e, ty: got, pc };
            }
        }
    }

    /// A two-input program whose inputs have `says` types.
    pub fn two_input(&mut self, max_size: usize) -> TwoInput {
        loop {
            let pc = if self.rng.gen_bool(0.5) { flow_bottom() } else { self.label() };
            let tx = self.says_ty(0);
            let ty = self.says_ty(0);
            let t = self.ty(1);
            let ctx = Ctx::new().with_var("x", tx.clone()).with_var("y", ty.clone());
            let fuel = self.rng.gen_range(3..=max_size / 2);
            let Some(body) = self.expr(&ctx, &pc, &t, fuel) else { continue };
            let inner = Expr::lam("y", ty.clone(), pc.clone(), body);
            let program = Expr::lam("x", tx.clone(), pc.clone(), inner);
            if program.size() > max_size {
                continue;
            }
            if type_of(self.lat, &Ctx::new(), &flow_bottom(), &program).is_ok() {
                return TwoInput { program, tx, ty, pc };
            }
        }
    }

    /// Up to `n` distinct values of type `t`.
    pub fn values(&mut self, t: &Type, n: usize) -> Vec<Expr> {
        let mut out: Vec<Expr> = Vec::new();
        for _ in 0..n * 4 {
            if out.len() == n {
                break;
            }
            let v = self.value(t);
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn programs_are_small_and_typed() {
        let lat = Lattice::new(vec!["a".into(), "b".into()], vec![]);
        let mut g = Gen::new(&lat, 7);
        for _ in 0..50 {
            let p = g.program(30);
            assert!(p.expr.size() <= 30);
            assert!(type_of(&lat, &Ctx::new(), &p.pc, &p.expr).is_ok());
        }
    }

    #[test]
    fn seeded_is_deterministic() {
        let lat = Lattice::new(vec!["a".into()], vec![]);
        let a: Vec<String> = (0..5).map(|_| 0).scan(Gen::new(&lat, 3), |g, _| Some(g.program(30).expr.to_string())).collect();
        let b: Vec<String> = (0..5).map(|_| 0).scan(Gen::new(&lat, 3), |g, _| Some(g.program(30).expr.to_string())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn values_check_against_their_type() {
        let lat = Lattice::new(vec!["a".into(), "b".into()], vec![]);
        let mut g = Gen::new(&lat, 11);
        for _ in 0..100 {
            let t = g.ty(2);
            let v = g.value(&t);
            assert!(v.is_value());
            let got = type_of(&lat, &Ctx::new(), &flow_bottom(), &v);
            if !matches!(t, Type::Fun(..)) {
                assert!(got.is_ok(), "{v} : {t}");
            }
        }
    }
}
