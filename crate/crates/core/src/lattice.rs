//! Principals, their conjunctive normal form, and the acts-for / flows-to
//! decision procedures under static delegations.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::syntax;

/// Security aspect selected by a projection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    /// `->`
    Conf,
    /// `<-`
    Integ,
}

impl Aspect {
    pub fn opposite(self) -> Aspect {
        match self {
            Aspect::Conf => Aspect::Integ,
            Aspect::Integ => Aspect::Conf,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Aspect::Conf => "^->",
            Aspect::Integ => "^<-",
        }
    }

    /// Name used in trace JSON.
    pub fn json_name(self) -> &'static str {
        match self {
            Aspect::Conf => "conf",
            Aspect::Integ => "integ",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Principal {
    Atom(String),
    Top,
    Bot,
    Proj(Box<Principal>, Aspect),
    And(Box<Principal>, Box<Principal>),
    Or(Box<Principal>, Box<Principal>),
    /// Information-flow join.
    Join(Box<Principal>, Box<Principal>),
    /// Information-flow meet.
    Meet(Box<Principal>, Box<Principal>),
}

impl Principal {
    pub fn atom(name: impl Into<String>) -> Principal {
        Principal::Atom(name.into())
    }

    pub fn proj(self, a: Aspect) -> Principal {
        Principal::Proj(Box::new(self), a)
    }

    pub fn conf(self) -> Principal {
        self.proj(Aspect::Conf)
    }

    pub fn integ(self) -> Principal {
        self.proj(Aspect::Integ)
    }

    pub fn and(self, q: Principal) -> Principal {
        Principal::And(Box::new(self), Box::new(q))
    }

    pub fn or(self, q: Principal) -> Principal {
        Principal::Or(Box::new(self), Box::new(q))
    }

    pub fn join(self, q: Principal) -> Principal {
        Principal::Join(Box::new(self), Box::new(q))
    }

    pub fn meet(self, q: Principal) -> Principal {
        Principal::Meet(Box::new(self), Box::new(q))
    }

    /// Conjunction of a nonempty list; `Bot` when empty.
    pub fn and_all(ps: impl IntoIterator<Item = Principal>) -> Principal {
        ps.into_iter().reduce(Principal::and).unwrap_or(Principal::Bot)
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Principal::Atom(_) | Principal::Top | Principal::Bot => 1,
            Principal::Proj(p, _) => 1 + p.size(),
            Principal::And(p, q) | Principal::Or(p, q) | Principal::Join(p, q) | Principal::Meet(p, q) => {
                1 + p.size() + q.size()
            }
        }
    }

    pub fn atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Principal::Atom(n) => {
                out.insert(n.clone());
            }
            Principal::Top | Principal::Bot => {}
            Principal::Proj(p, _) => p.atoms(out),
            Principal::And(p, q) | Principal::Or(p, q) | Principal::Join(p, q) | Principal::Meet(p, q) => {
                p.atoms(out);
                q.atoms(out);
            }
        }
    }

    fn level(&self) -> u8 {
        match self {
            Principal::Join(..) | Principal::Meet(..) => 0,
            Principal::Or(..) => 1,
            Principal::And(..) => 2,
            Principal::Proj(..) => 3,
            _ => 4,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.level() < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Principal::Atom(n) => write!(f, "{n}"),
            Principal::Top => write!(f, "top"),
            Principal::Bot => write!(f, "bot"),
            Principal::Proj(p, a) => {
                p.fmt_at(f, 3)?;
                write!(f, "{}", a.suffix())
            }
            Principal::And(p, q) => bin(f, p, q, " & ", 2),
            Principal::Or(p, q) => bin(f, p, q, " | ", 1),
            Principal::Join(p, q) => bin(f, p, q, " \\/ ", 0),
            Principal::Meet(p, q) => bin(f, p, q, " /\\_ ", 0),
        }
    }
}

fn bin(f: &mut fmt::Formatter<'_>, p: &Principal, q: &Principal, op: &str, lvl: u8) -> fmt::Result {
    p.fmt_at(f, lvl)?;
    write!(f, "{op}")?;
    q.fmt_at(f, lvl + 1)
}

impl fmt::Display for Principal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

impl Serialize for Principal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub type Clause = BTreeSet<String>;

/// A conjunction of clauses, each clause a disjunction of atom names.
///
/// No clauses at all is `bot` (no authority); a single empty clause is `top`.
/// Clauses form an antichain under inclusion.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Cnf {
    clauses: BTreeSet<Clause>,
}

impl Cnf {
    pub fn bot() -> Cnf {
        Cnf::default()
    }

    pub fn top() -> Cnf {
        let mut clauses = BTreeSet::new();
        clauses.insert(Clause::new());
        Cnf { clauses }
    }

    pub fn atom(n: &str) -> Cnf {
        let mut c = Clause::new();
        c.insert(n.to_string());
        let mut clauses = BTreeSet::new();
        clauses.insert(c);
        Cnf { clauses }
    }

    pub fn from_clauses(cs: impl IntoIterator<Item = Clause>) -> Cnf {
        absorb(cs.into_iter().collect())
    }

    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter()
    }

    pub fn is_bot(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn is_top(&self) -> bool {
        self.clauses.iter().any(|c| c.is_empty())
    }

    pub fn and(&self, o: &Cnf) -> Cnf {
        absorb(self.clauses.union(&o.clauses).cloned().collect())
    }

    pub fn or(&self, o: &Cnf) -> Cnf {
        if self.is_bot() || o.is_bot() {
            return Cnf::bot();
        }
        let mut out = BTreeSet::new();
        for c in &self.clauses {
            for d in &o.clauses {
                out.insert(c.union(d).cloned().collect());
            }
        }
        absorb(out)
    }

    /// Principal expression denoting this component, unprojected.
    pub fn to_principal(&self) -> Principal {
        let clause = |c: &Clause| {
            c.iter()
                .map(|n| Principal::atom(n.clone()))
                .reduce(Principal::or)
                .unwrap_or(Principal::Top)
        };
        Principal::and_all(self.clauses.iter().map(clause))
    }
}

fn absorb(set: BTreeSet<Clause>) -> Cnf {
    if set.iter().any(|c| c.is_empty()) {
        return Cnf::top();
    }
    let clauses = set
        .iter()
        .filter(|c| !set.iter().any(|d| d.len() < c.len() && d.is_subset(c)))
        .cloned()
        .collect();
    Cnf { clauses }
}

/// Canonical `p-> & q<-` with both components in CNF.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalForm {
    pub conf: Cnf,
    pub integ: Cnf,
}

impl NormalForm {
    pub fn component(&self, a: Aspect) -> &Cnf {
        match a {
            Aspect::Conf => &self.conf,
            Aspect::Integ => &self.integ,
        }
    }

    /// Re-denote as a principal expression.
    pub fn to_principal(&self) -> Principal {
        if self.conf == self.integ {
            return self.conf.to_principal();
        }
        let mut parts = Vec::new();
        if !self.conf.is_bot() {
            parts.push(self.conf.to_principal().conf());
        }
        if !self.integ.is_bot() {
            parts.push(self.integ.to_principal().integ());
        }
        Principal::and_all(parts)
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_principal())
    }
}

pub fn normalize(p: &Principal) -> NormalForm {
    match p {
        Principal::Atom(n) => NormalForm { conf: Cnf::atom(n), integ: Cnf::atom(n) },
        Principal::Top => NormalForm { conf: Cnf::top(), integ: Cnf::top() },
        Principal::Bot => NormalForm { conf: Cnf::bot(), integ: Cnf::bot() },
        Principal::Proj(p, a) => {
            let n = normalize(p);
            match a {
                Aspect::Conf => NormalForm { conf: n.conf, integ: Cnf::bot() },
                Aspect::Integ => NormalForm { conf: Cnf::bot(), integ: n.integ },
            }
        }
        Principal::And(p, q) => {
            let (p, q) = (normalize(p), normalize(q));
            NormalForm { conf: p.conf.and(&q.conf), integ: p.integ.and(&q.integ) }
        }
        Principal::Or(p, q) => {
            let (p, q) = (normalize(p), normalize(q));
            NormalForm { conf: p.conf.or(&q.conf), integ: p.integ.or(&q.integ) }
        }
        Principal::Join(p, q) => {
            let (p, q) = (normalize(p), normalize(q));
            NormalForm { conf: p.conf.and(&q.conf), integ: p.integ.or(&q.integ) }
        }
        Principal::Meet(p, q) => {
            let (p, q) = (normalize(p), normalize(q));
            NormalForm { conf: p.conf.or(&q.conf), integ: p.integ.and(&q.integ) }
        }
    }
}

pub fn flow_join(l: &Principal, l2: &Principal) -> Principal {
    normalize(&l.clone().join(l2.clone())).to_principal()
}

pub fn flow_meet(l: &Principal, l2: &Principal) -> Principal {
    normalize(&l.clone().meet(l2.clone())).to_principal()
}

/// Normal-form component `pi` of `p`, projected.
pub fn project(p: &Principal, pi: Aspect) -> Principal {
    let n = normalize(p);
    let c = n.component(pi).clone();
    let nf = match pi {
        Aspect::Conf => NormalForm { conf: c, integ: Cnf::bot() },
        Aspect::Integ => NormalForm { conf: Cnf::bot(), integ: c },
    };
    nf.to_principal()
}

/// `voice(p-> & q<-) = p<-`
pub fn voice(l: &Principal) -> Principal {
    NormalForm { conf: Cnf::bot(), integ: normalize(l).conf }.to_principal()
}

/// `view(p-> & q<-) = q->`
pub fn view(l: &Principal) -> Principal {
    NormalForm { conf: normalize(l).integ, integ: Cnf::bot() }.to_principal()
}

/// Delegation axiom `who >= acts_for`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Delegation {
    pub who: String,
    pub acts_for: Principal,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read lattice config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed lattice config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad principal in delegation for {who}: {msg}")]
    Principal { who: String, msg: String },
    #[error("delegation head {0:?} is not an identifier")]
    Head(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    atoms: Vec<String>,
    #[serde(default)]
    delegations: Vec<RawDelegation>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelegation {
    who: String,
    #[serde(rename = "actsFor")]
    acts_for: String,
}

/// A set of atomic principals together with their static delegations.
#[derive(Clone, Debug, Default)]
pub struct Lattice {
    atoms: Vec<String>,
    delegations: Vec<Delegation>,
    conf_axioms: Vec<(String, Cnf)>,
    integ_axioms: Vec<(String, Cnf)>,
}

/// Per-clause record of an acts-for decision, used by `--explain`.
#[derive(Clone, Debug)]
pub struct ClauseCheck {
    pub aspect: Aspect,
    pub clause: Clause,
    pub closure: Clause,
    pub covered_by: Option<Clause>,
}

impl Lattice {
    pub fn new(atoms: Vec<String>, delegations: Vec<Delegation>) -> Lattice {
        let mut all: BTreeSet<String> = atoms.iter().cloned().collect();
        let mut ordered = atoms;
        for d in &delegations {
            let mut names = BTreeSet::new();
            names.insert(d.who.clone());
            d.acts_for.atoms(&mut names);
            for n in names {
                if all.insert(n.clone()) {
                    ordered.push(n);
                }
            }
        }
        let mut conf_axioms = Vec::new();
        let mut integ_axioms = Vec::new();
        for d in &delegations {
            let nf = normalize(&d.acts_for);
            conf_axioms.push((d.who.clone(), nf.conf));
            integ_axioms.push((d.who.clone(), nf.integ));
        }
        Lattice { atoms: ordered, delegations, conf_axioms, integ_axioms }
    }

    pub fn empty() -> Lattice {
        Lattice::default()
    }

    pub fn from_json(text: &str) -> Result<Lattice, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text)?;
        let mut dels = Vec::new();
        for d in raw.delegations {
            if !syntax::is_ident(&d.who) {
                return Err(ConfigError::Head(d.who));
            }
            let p = syntax::parse_principal(&d.acts_for)
                .map_err(|e| ConfigError::Principal { who: d.who.clone(), msg: e.to_string() })?;
            dels.push(Delegation { who: d.who, acts_for: p });
        }
        Ok(Lattice::new(raw.atoms, dels))
    }

    pub fn load(path: &Path) -> Result<Lattice, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Lattice::from_json(&text)
    }

    /// Declared atoms followed by any further atoms mentioned in delegations.
    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn delegations(&self) -> &[Delegation] {
        &self.delegations
    }

    fn axioms(&self, a: Aspect) -> &[(String, Cnf)] {
        match a {
            Aspect::Conf => &self.conf_axioms,
            Aspect::Integ => &self.integ_axioms,
        }
    }

    /// Atoms forced into any falsifying assignment once `d` is: saturation of
    /// `d` under the axioms `n >= phi` whose `phi` has a clause inside it.
    fn closure(&self, a: Aspect, d: &Clause) -> Clause {
        let mut f = d.clone();
        loop {
            let mut grew = false;
            for (n, phi) in self.axioms(a) {
                if !f.contains(n) && phi.clauses().any(|c| c.is_subset(&f)) {
                    f.insert(n.clone());
                    grew = true;
                }
            }
            if !grew {
                return f;
            }
        }
    }

    /// `p >= q` on one CNF component.
    pub fn cnf_acts_for(&self, a: Aspect, p: &Cnf, q: &Cnf) -> bool {
        q.clauses().all(|d| {
            let f = self.closure(a, d);
            p.clauses().any(|c| c.is_subset(&f))
        })
    }

    pub fn nf_acts_for(&self, p: &NormalForm, q: &NormalForm) -> bool {
        self.cnf_acts_for(Aspect::Conf, &p.conf, &q.conf) && self.cnf_acts_for(Aspect::Integ, &p.integ, &q.integ)
    }

    pub fn acts_for(&self, p: &Principal, q: &Principal) -> bool {
        self.nf_acts_for(&normalize(p), &normalize(q))
    }

    /// Mutual acts-for.
    pub fn equiv(&self, p: &Principal, q: &Principal) -> bool {
        let (p, q) = (normalize(p), normalize(q));
        self.nf_acts_for(&p, &q) && self.nf_acts_for(&q, &p)
    }

    pub fn nf_flows_to(&self, l: &NormalForm, l2: &NormalForm) -> bool {
        self.cnf_acts_for(Aspect::Conf, &l2.conf, &l.conf) && self.cnf_acts_for(Aspect::Integ, &l.integ, &l2.integ)
    }

    /// `l` flows to `l2`: `l2-> >= l->` and `l<- >= l2<-`.
    pub fn flows_to(&self, l: &Principal, l2: &Principal) -> bool {
        self.nf_flows_to(&normalize(l), &normalize(l2))
    }

    /// Clause-by-clause account of `p >= q`.
    pub fn explain_acts_for(&self, p: &Principal, q: &Principal) -> Vec<ClauseCheck> {
        let (p, q) = (normalize(p), normalize(q));
        let mut out = Vec::new();
        for a in [Aspect::Conf, Aspect::Integ] {
            for d in q.component(a).clauses() {
                let closure = self.closure(a, d);
                let covered_by = p.component(a).clauses().find(|c| c.is_subset(&closure)).cloned();
                out.push(ClauseCheck { aspect: a, clause: d.clone(), closure, covered_by });
            }
        }
        out
    }
}

/// Renders a clause as a disjunction, `top` when empty.
pub fn show_clause(c: &Clause) -> String {
    if c.is_empty() {
        return "top".into();
    }
    let v: Vec<&str> = c.iter().map(String::as_str).collect();
    if v.len() == 1 {
        v[0].to_string()
    } else {
        format!("({})", v.join(" | "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Principal {
        syntax::parse_principal(s).unwrap()
    }

    fn clauses(c: &Cnf) -> Vec<Vec<&str>> {
        c.clauses().map(|c| c.iter().map(String::as_str).collect()).collect()
    }

    #[test]
    fn atom_normal_form() {
        let n = normalize(&p("alice"));
        assert_eq!(clauses(&n.conf), vec![vec!["alice"]]);
        assert_eq!(clauses(&n.integ), vec![vec!["alice"]]);
    }

    #[test]
    fn top_integ_normal_form() {
        let n = normalize(&p("top^<-"));
        assert!(n.conf.is_bot());
        assert!(n.integ.is_top());
    }

    #[test]
    fn join_distributes_per_aspect() {
        let n = normalize(&p("(a & b) \\/ c"));
        assert_eq!(clauses(&n.conf), vec![vec!["a"], vec!["b"], vec!["c"]]);
        assert_eq!(clauses(&n.integ), vec![vec!["a", "c"], vec!["b", "c"]]);
    }

    #[test]
    fn absorption_keeps_antichain() {
        let n = normalize(&p("a & (a | b)"));
        assert_eq!(clauses(&n.conf), vec![vec!["a"]]);
    }

    #[test]
    fn basic_acts_for() {
        let l = Lattice::empty();
        assert!(l.acts_for(&p("top"), &p("alice & bob")));
        assert!(l.acts_for(&p("alice & bob"), &p("alice")));
        assert!(l.acts_for(&p("alice"), &p("alice | bob")));
        assert!(!l.acts_for(&p("alice"), &p("bob")));
        assert!(l.acts_for(&p("alice"), &p("bot")));
    }

    #[test]
    fn delegation_through_projection() {
        let l = Lattice::new(vec![], vec![Delegation { who: "T".into(), acts_for: p("U") }]);
        assert!(l.acts_for(&p("T^->"), &p("U^->")));
        assert!(l.flows_to(&p("U^->"), &p("T^->")));
        assert!(l.flows_to(&p("T^<-"), &p("U^<-")));
        assert!(!l.flows_to(&p("U^<-"), &p("T^<-")));
    }

    #[test]
    fn delegation_cycle_terminates() {
        let l = Lattice::new(
            vec![],
            vec![
                Delegation { who: "a".into(), acts_for: p("b") },
                Delegation { who: "b".into(), acts_for: p("a") },
            ],
        );
        assert!(l.equiv(&p("a"), &p("b")));
        assert!(!l.acts_for(&p("a"), &p("c")));
    }

    #[test]
    fn voice_and_view() {
        assert_eq!(voice(&p("T^->")).to_string(), "T^<-");
        assert_eq!(voice(&p("(A & B)^->")).to_string(), "(A & B)^<-");
        assert_eq!(voice(&p("bot")), Principal::Bot);
        assert_eq!(view(&p("T^<-")).to_string(), "T^->");
        assert_eq!(view(&p("alice^-> & bob^<-")).to_string(), "bob^->");
    }

    #[test]
    fn projections() {
        assert_eq!(project(&p("a & b^<-"), Aspect::Conf).to_string(), "a^->");
        assert_eq!(project(&p("top"), Aspect::Integ).to_string(), "top^<-");
        let q = p("(a | b) & c^<-");
        let once = project(&q, Aspect::Integ);
        assert_eq!(project(&once, Aspect::Integ), once);
    }

    #[test]
    fn flow_extremes() {
        let l = Lattice::empty();
        assert!(l.flows_to(&p("top^<-"), &p("alice^->")));
        assert!(l.flows_to(&p("alice"), &p("top^->")));
        assert!(l.equiv(&flow_meet(&p("top^->"), &p("a & b^<-")), &p("a & b^<-")));
    }

    #[test]
    fn config_json() {
        let l = Lattice::from_json(r#"{"atoms":["T","U"],"delegations":[{"who":"T","actsFor":"U"}]}"#).unwrap();
        assert_eq!(l.atoms(), ["T", "U"]);
        assert!(l.acts_for(&p("T"), &p("U")));
        assert!(Lattice::from_json(r#"{"atoms":[],"delegations":[{"who":"a b","actsFor":"U"}]}"#).is_err());
    }
}
