//! Attackers, low equivalence over events and traces, and executable checks
//! for the noninterference, robust declassification, transparent endorsement
//! and nonmalleable information flow conditions.

mod conditions;
mod experiment;
mod hyper;

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::eval::Event;
use crate::lattice::{Lattice, Principal};
use crate::syntax::{Expr, ExprKind, HighSet};

pub use conditions::{
    check_nmif, check_noninterference, check_robust_declassification, check_transparent_endorsement,
    irrelevant_input, verify_irrelevance_witness, Condition, IrrelevanceWitness, NiVariant, Relevance, Report,
    Verdict, Witness,
};
pub use experiment::{Experiment, HarnessError, Options, PoolError, Pools, Runs};
pub use hyper::{nmif_hyper_member, rd_hyper_member, rd_hyper_member_at, te_hyper_member};

/// A coalition of atomic principals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Attacker {
    atoms: Vec<String>,
}

impl Attacker {
    /// `None` when `atoms` is empty.
    pub fn new<S: Into<String>>(atoms: impl IntoIterator<Item = S>) -> Option<Attacker> {
        let mut atoms: Vec<String> = atoms.into_iter().map(Into::into).collect();
        atoms.sort();
        atoms.dedup();
        (!atoms.is_empty()).then_some(Attacker { atoms })
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn principal(&self) -> Principal {
        Principal::and_all(self.atoms.iter().map(|a| Principal::atom(a.clone())))
    }

    /// `l` is in the attacker's power.
    pub fn member(&self, lat: &Lattice, l: &Principal) -> bool {
        lat.acts_for(&self.principal(), l)
    }

    pub fn untrusted(&self) -> HighSet {
        HighSet::Untrusted(self.atoms.clone())
    }

    pub fn secret(&self) -> HighSet {
        HighSet::Secret(self.atoms.clone())
    }

    pub fn both(&self) -> HighSet {
        HighSet::Both(self.atoms.clone())
    }

    /// Trusted labels: the complement of the untrusted set.
    pub fn trusted_low(&self) -> LowSet {
        LowSet::complement(self.untrusted())
    }

    /// Public labels: the complement of the secret set.
    pub fn public_low(&self) -> LowSet {
        LowSet::complement(self.secret())
    }

    /// Public and trusted labels.
    pub fn low(&self) -> LowSet {
        LowSet { highs: vec![self.untrusted(), self.secret()] }
    }
}

impl fmt::Display for Attacker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.atoms.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HighKind {
    Untrusted,
    Secret,
}

pub fn induced_high_set(a: &Attacker, kind: HighKind) -> HighSet {
    match kind {
        HighKind::Untrusted => a.untrusted(),
        HighKind::Secret => a.secret(),
    }
}

/// Labels outside every listed high set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LowSet {
    highs: Vec<HighSet>,
}

impl LowSet {
    pub fn complement(h: HighSet) -> LowSet {
        LowSet { highs: vec![h] }
    }

    pub fn intersect(&self, o: &LowSet) -> LowSet {
        let mut highs = self.highs.clone();
        highs.extend(o.highs.iter().cloned());
        LowSet { highs }
    }

    pub fn member(&self, lat: &Lattice, l: &Principal) -> bool {
        self.highs.iter().all(|h| !h.member(lat, l))
    }
}

/// What a low observer sees of a value or event.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Obs {
    Bullet,
    Node(String, Vec<Obs>),
}

fn head(e: &Expr) -> String {
    use ExprKind::*;
    match &e.kind {
        Var { name } => format!("var {name}"),
        Unit => "()".into(),
        Pair { .. } => "pair".into(),
        Inj { index, ann: Some(t), .. } => format!("inj{index}[{t}]"),
        Inj { index, ann: None, .. } => format!("inj{index}"),
        Proj { index, .. } => format!("proj{index}"),
        Lam { var, ty, pc, .. } => format!("lam {var}:{ty}[{pc}]"),
        TLam { var, pc, .. } => format!("tlam {var}[{pc}]"),
        App { .. } => "app".into(),
        TApp { ty, .. } => format!("tapp {ty}"),
        Case { left_var, right_var, .. } => format!("case {left_var} {right_var}"),
        Eta { label, .. } => format!("eta[{label}]"),
        EtaV { label, .. } => format!("etav[{label}]"),
        Bind { var, .. } => format!("bind {var}"),
        Decl { label, .. } => format!("decl {label}"),
        Endorse { label, .. } => format!("endorse {label}"),
        Bracket { high, .. } => format!("bracket {high}"),
        Hole { index, high, .. } => format!("hole {index} {high}"),
    }
}

/// Interns observations under one low set so that equivalence is id equality.
pub struct Observer<'a> {
    lat: &'a Lattice,
    low: LowSet,
    labels: HashMap<Principal, bool>,
    elems: HashMap<Obs, u32>,
    prefixes: HashMap<(u32, u32), u32>,
}

/// Per-trace observation ids: `elem[n-1]` for `t[n]` (`None` when it is
/// equivalent to a bullet), `prefix[n]` for `t..n`.
#[derive(Clone, Debug)]
pub struct TraceView {
    pub elem: Vec<Option<u32>>,
    pub prefix: Vec<u32>,
}

impl TraceView {
    /// 1-based indices whose element is not equivalent to a bullet.
    pub fn visible(&self) -> Vec<usize> {
        (1..=self.elem.len()).filter(|&n| self.elem[n - 1].is_some()).collect()
    }
}

impl<'a> Observer<'a> {
    pub fn new(lat: &'a Lattice, low: LowSet) -> Observer<'a> {
        Observer { lat, low, labels: HashMap::new(), elems: HashMap::new(), prefixes: HashMap::new() }
    }

    fn is_low(&mut self, l: &Principal) -> bool {
        if let Some(b) = self.labels.get(l) {
            return *b;
        }
        let b = self.low.member(self.lat, l);
        self.labels.insert(l.clone(), b);
        b
    }

    /// A value with every high `etav` subterm collapsed.
    pub fn value(&mut self, v: &Expr) -> Obs {
        if let ExprKind::EtaV { label, .. } = &v.kind {
            if !self.is_low(label) {
                return Obs::Bullet;
            }
        }
        Obs::Node(head(v), v.children().into_iter().map(|c| self.value(c)).collect())
    }

    /// `None` when the event is equivalent to a bullet.
    pub fn event(&mut self, c: &Event) -> Option<Obs> {
        match c {
            Event::Bullet => None,
            Event::Input { value } => match self.value(value) {
                Obs::Bullet => None,
                o => Some(o),
            },
            Event::Protect { label, value } => {
                if !self.is_low(label) {
                    return None;
                }
                Some(Obs::Node(format!("protect {label}"), vec![self.value(value)]))
            }
            Event::Downgrade { aspect, from, to, value } => {
                if !self.is_low(to) {
                    return None;
                }
                Some(Obs::Node(format!("{} {from} {to}", aspect.json_name()), vec![self.value(value)]))
            }
        }
    }

    fn intern(&mut self, o: Obs) -> u32 {
        let n = self.elems.len() as u32;
        *self.elems.entry(o).or_insert(n)
    }

    pub fn view(&mut self, t: &[Event]) -> TraceView {
        let mut elem = Vec::with_capacity(t.len());
        let mut prefix = Vec::with_capacity(t.len() + 1);
        prefix.push(0);
        for c in t {
            let id = self.event(c).map(|o| self.intern(o));
            let last = *prefix.last().unwrap();
            let next = match id {
                None => last,
                Some(id) => {
                    let n = self.prefixes.len() as u32 + 1;
                    *self.prefixes.entry((last, id)).or_insert(n)
                }
            };
            elem.push(id);
            prefix.push(next);
        }
        TraceView { elem, prefix }
    }
}

/// `c ≈ c2` under `low`.
pub fn event_equiv(lat: &Lattice, low: &LowSet, c: &Event, c2: &Event) -> bool {
    let mut o = Observer::new(lat, low.clone());
    o.event(c) == o.event(c2)
}

/// `t ≈ t2` under `low`: equal after dropping events equivalent to a bullet.
pub fn trace_equiv(lat: &Lattice, low: &LowSet, t: &[Event], t2: &[Event]) -> bool {
    let mut o = Observer::new(lat, low.clone());
    let a: Vec<Obs> = t.iter().filter_map(|c| o.event(c)).collect();
    let b: Vec<Obs> = t2.iter().filter_map(|c| o.event(c)).collect();
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Aspect;
    use crate::syntax::parse_principal;

    fn p(s: &str) -> Principal {
        parse_principal(s).unwrap()
    }

    fn lat() -> Lattice {
        Lattice::from_json(r#"{"atoms":["T","U"],"delegations":[{"who":"T","actsFor":"U"}]}"#).unwrap()
    }

    #[test]
    fn induced_sets() {
        let l = lat();
        let a = Attacker::new(["U"]).unwrap();
        assert!(a.untrusted().member(&l, &p("U^<-")));
        assert!(!a.untrusted().member(&l, &p("T^<-")));
        assert!(a.secret().member(&l, &p("T^->")));
        assert!(!a.secret().member(&l, &p("U^->")));
        assert!(a.secret().member(&l, &p("top^->")));
    }

    #[test]
    fn high_protect_is_bullet() {
        let l = lat();
        let low = Attacker::new(["U"]).unwrap().public_low();
        let c = Event::Protect { label: p("T^->"), value: Expr::unit() };
        assert!(event_equiv(&l, &low, &c, &Event::Bullet));
        let d = Event::Downgrade { aspect: Aspect::Conf, from: p("T"), to: p("T^->"), value: Expr::unit() };
        assert!(event_equiv(&l, &low, &d, &Event::Bullet));
    }

    #[test]
    fn low_protects_compare_values() {
        let l = lat();
        let low = Attacker::new(["U"]).unwrap().public_low();
        let a = Event::Protect { label: p("U"), value: Expr::inj(1, None, Expr::unit()) };
        let b = Event::Protect { label: p("U"), value: Expr::inj(2, None, Expr::unit()) };
        assert!(!event_equiv(&l, &low, &a, &b));
        assert!(trace_equiv(&l, &low, &[a.clone(), Event::Bullet], &[a.clone()]));
        assert!(!trace_equiv(&l, &low, &[a], &[]));
    }

    #[test]
    fn nested_high_values_collapse() {
        let l = lat();
        let low = Attacker::new(["U"]).unwrap().public_low();
        let v1 = Expr::pair(Expr::etav(p("T^->"), Expr::tt()), Expr::unit());
        let v2 = Expr::pair(Expr::etav(p("T^->"), Expr::ff()), Expr::unit());
        let a = Event::Protect { label: p("U"), value: v1 };
        let b = Event::Protect { label: p("U"), value: v2 };
        assert!(event_equiv(&l, &low, &a, &b));
    }
}
