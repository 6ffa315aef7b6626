use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use super::experiment::{Experiment, HarnessError, Pools, Runs};
use super::{trace_equiv, Attacker, LowSet, Observer, TraceView};
use crate::eval::{Event, Trace};
use crate::lattice::Aspect;
use crate::syntax::{Expr, HighSet};
use crate::typecheck::{high_type, Checker, Ctx};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    Rd,
    Te,
    Nmif,
    Ni1,
    Ni2,
    Ni3,
}

impl Condition {
    pub const ALL: [Condition; 6] =
        [Condition::Rd, Condition::Te, Condition::Nmif, Condition::Ni1, Condition::Ni2, Condition::Ni3];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Rd => "rd",
            Condition::Te => "te",
            Condition::Nmif => "nmif",
            Condition::Ni1 => "ni-1",
            Condition::Ni2 => "ni-2",
            Condition::Ni3 => "ni-3",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Condition, String> {
        Condition::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown condition `{s}` (expected rd, te, nmif, ni-1, ni-2 or ni-3)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NiVariant {
    /// Noninterference modulo downgrading, for any high set.
    ModuloDowngrade,
    /// High-pc programs, for an attacker-induced high set.
    HighPc,
    /// Secret and untrusted inputs.
    SecretUntrusted,
}

/// A counterexample or downgrade witness.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clause: Option<u8>,
    pub v1: String,
    pub v2: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w2: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub indices: Option<[usize; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event: Option<Event>,
    pub traces: Vec<Trace>,
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Pass,
    Violation(Box<Witness>),
    DowngradeWitness(Box<Witness>),
    Skip(String),
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Violation(_) => "violation",
            Verdict::DowngradeWitness(_) => "downgrade-witness",
            Verdict::Skip(_) => "skip",
        }
    }

    pub fn is_violation(&self) -> bool {
        matches!(self, Verdict::Violation(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Violation(w) | Verdict::DowngradeWitness(w) => Some(w),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub condition: Condition,
    pub attacker: Option<Attacker>,
    pub high: Option<HighSet>,
    pub secrets: usize,
    pub attacks: usize,
    pub well_typed: bool,
    pub verdict: Verdict,
}

impl Report {
    /// Violations on well-typed programs indicate an implementation bug.
    pub fn label(&self) -> Option<&'static str> {
        (self.verdict.is_violation() && self.well_typed).then_some("IMPLEMENTATION-BUG")
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Pass | Verdict::DowngradeWitness(_) => 0,
            Verdict::Violation(_) => 1,
            Verdict::Skip(_) => 5,
        }
    }
}

impl Serialize for Report {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("condition", self.condition.name())?;
        if let Some(a) = &self.attacker {
            m.serialize_entry("attacker", a.atoms())?;
        }
        if let Some(h) = &self.high {
            m.serialize_entry("high", h)?;
        }
        m.serialize_entry("pools", &serde_json::json!({"secrets": self.secrets, "attacks": self.attacks}))?;
        m.serialize_entry("verdict", self.verdict.name())?;
        if let Some(l) = self.label() {
            m.serialize_entry("label", l)?;
        }
        if let Verdict::Skip(r) = &self.verdict {
            m.serialize_entry("reason", r)?;
        }
        if let Some(w) = self.verdict.witness() {
            m.serialize_entry("witness", w)?;
        }
        m.end()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.condition, self.verdict.name())?;
        if let Some(l) = self.label() {
            write!(f, " [{l}]")?;
        }
        match &self.verdict {
            Verdict::Skip(r) => write!(f, " ({r})")?,
            Verdict::Violation(w) | Verdict::DowngradeWitness(w) => {
                if let Some(c) = w.clause {
                    write!(f, "\n  clause {c}")?;
                }
                write!(f, "\n  v1 = {}\n  v2 = {}", w.v1, w.v2)?;
                if let (Some(w1), Some(w2)) = (&w.w1, &w.w2) {
                    write!(f, "\n  w1 = {w1}\n  w2 = {w2}")?;
                }
                if let Some(n) = w.indices {
                    write!(f, "\n  indices = {n:?}")?;
                }
                if let Some(e) = &w.event {
                    write!(f, "\n  event = {e}")?;
                }
            }
            Verdict::Pass => {}
        }
        Ok(())
    }
}

/// Observations of every run under the three attacker-derived low sets.
struct Views {
    low: Vec<Vec<TraceView>>,
    public: Vec<Vec<TraceView>>,
    trusted: Vec<Vec<TraceView>>,
}

fn views_of(exp: &Experiment, a: &Attacker, runs: &Runs) -> Views {
    let mk = |low: LowSet| {
        let mut o = Observer::new(exp.lat, low);
        runs.traces.iter().map(|row| row.iter().map(|t| o.view(t)).collect()).collect()
    };
    Views { low: mk(a.low()), public: mk(a.public_low()), trusted: mk(a.trusted_low()) }
}

fn capped(v: &TraceView, cap: Option<usize>) -> Vec<usize> {
    let mut vis = v.visible();
    if let Some(c) = cap {
        vis.truncate(c);
    }
    vis
}

/// Index search for the irrelevance conditions on four fixed runs
/// `[t11, t12, t21, t22]`, with `pi` the observer of the classifying aspect.
fn irrelevance_indices(low: [&TraceView; 4], pi: [&TraceView; 4], cap: Option<usize>) -> Option<[usize; 4]> {
    let ks: Vec<Vec<usize>> = low.iter().map(|v| capped(v, cap)).collect();
    for &n11 in &ks[0] {
        let l = low[0].prefix[n11];
        for &n12 in &ks[1] {
            if low[1].prefix[n12] != l || pi[0].prefix[n11] != pi[1].prefix[n12] {
                continue;
            }
            for &n21 in &ks[2] {
                if low[2].prefix[n21] != l {
                    continue;
                }
                for &n22 in &ks[3] {
                    if low[3].prefix[n22] == l && pi[2].prefix[n21] != pi[3].prefix[n22] {
                        return Some([n11, n12, n21, n22]);
                    }
                }
            }
        }
    }
    None
}

/// Choices `(c2, o1, o2, indices)` showing classified input `c` irrelevant.
fn find_irrelevance(
    views: &Views,
    aspect: Aspect,
    c: usize,
    ns: usize,
    na: usize,
    cap: Option<usize>,
) -> Option<(usize, usize, usize, [usize; 4])> {
    // Integrity relevance classifies attacks; confidentiality relevance classifies secrets.
    let (ncls, noth) = if aspect == Aspect::Integ { (na, ns) } else { (ns, na) };
    let cell = |cls: usize, oth: usize| if aspect == Aspect::Integ { (oth, cls) } else { (cls, oth) };
    let pi = if aspect == Aspect::Integ { &views.public } else { &views.trusted };
    for c2 in 0..ncls {
        for o1 in 0..noth {
            for o2 in 0..noth {
                let cells = [cell(c, o1), cell(c, o2), cell(c2, o1), cell(c2, o2)];
                let low = cells.map(|(i, j)| &views.low[i][j]);
                let piv = cells.map(|(i, j)| &pi[i][j]);
                if let Some(n) = irrelevance_indices(low, piv, cap) {
                    return Some((c2, o1, o2, n));
                }
            }
        }
    }
    None
}

/// Witness that an input is irrelevant. Roles follow the definition: `v1`
/// and `v2` are the classified inputs, and run `(i, j)` uses `v_i` and `w_j`.
#[derive(Clone, Debug, Serialize)]
pub struct IrrelevanceWitness {
    /// The aspect of relevance: `Integ` classifies attacks, `Conf` secrets.
    pub aspect: Aspect,
    pub v1: Expr,
    pub v2: Expr,
    pub w1: Expr,
    pub w2: Expr,
    pub indices: [usize; 4],
    /// `[t11, t12, t21, t22]`
    pub traces: [Trace; 4],
}

#[derive(Clone, Debug)]
pub enum Relevance {
    Relevant,
    Irrelevant(Box<IrrelevanceWitness>),
}

impl Relevance {
    pub fn is_relevant(&self) -> bool {
        matches!(self, Relevance::Relevant)
    }
}

fn run_cell(exp: &Experiment, aspect: Aspect, cls: &Expr, oth: &Expr) -> Result<Trace, HarnessError> {
    match aspect {
        Aspect::Integ => exp.run(oth, cls),
        Aspect::Conf => exp.run(cls, oth),
    }
}

/// Searches the pools for a witness that `v1` is an irrelevant input. With
/// `aspect = Integ`, `v1` is an attack and the other inputs are secrets.
pub fn irrelevant_input(
    exp: &Experiment,
    a: &Attacker,
    aspect: Aspect,
    v1: &Expr,
    pools: &Pools,
) -> Result<Relevance, HarnessError> {
    let mut secrets = exp.secret_values(pools)?;
    let mut attacks = exp.attack_values(pools)?;
    let classified = if aspect == Aspect::Integ { &mut attacks } else { &mut secrets };
    let c = match classified.iter().position(|v| v == v1) {
        Some(c) => c,
        None => {
            classified.insert(0, v1.clone());
            0
        }
    };
    let (ns, na) = (secrets.len(), attacks.len());
    let runs = exp.run_all(secrets, attacks)?;
    let views = views_of(exp, a, &runs);
    let Some((c2, o1, o2, indices)) = find_irrelevance(&views, aspect, c, ns, na, exp.opts.index_cap) else {
        return Ok(Relevance::Relevant);
    };
    let (cls, oth) = if aspect == Aspect::Integ { (&runs.attacks, &runs.secrets) } else { (&runs.secrets, &runs.attacks) };
    let (v1, v2, w1, w2) = (cls[c].clone(), cls[c2].clone(), oth[o1].clone(), oth[o2].clone());
    let traces = [
        run_cell(exp, aspect, &v1, &w1)?,
        run_cell(exp, aspect, &v1, &w2)?,
        run_cell(exp, aspect, &v2, &w1)?,
        run_cell(exp, aspect, &v2, &w2)?,
    ];
    Ok(Relevance::Irrelevant(Box::new(IrrelevanceWitness { aspect, v1, v2, w1, w2, indices, traces })))
}

/// Re-checks conditions 1 to 6 of an irrelevance witness from scratch, by
/// re-running the four experiments and comparing prefixes directly.
pub fn verify_irrelevance_witness(exp: &Experiment, a: &Attacker, w: &IrrelevanceWitness) -> Result<(), String> {
    let (tx, ty) = match &exp.y {
        Some((_, ty)) => (exp.tx.clone(), ty.clone()),
        None => return Err("program has no attacker input".into()),
    };
    let (cls_ty, oth_ty) = if w.aspect == Aspect::Integ { (ty, tx) } else { (tx, ty) };
    let checker = Checker::new(exp.lat);
    for (v, t) in [(&w.v1, &cls_ty), (&w.v2, &cls_ty), (&w.w1, &oth_ty), (&w.w2, &oth_ty)] {
        if !exp.opts.unchecked {
            checker.check(&Ctx::new(), &crate::typecheck::flow_bottom(), v, t).map_err(|e| format!("1: {v}: {e}"))?;
        }
    }
    let pairs = [(&w.v1, &w.w1), (&w.v1, &w.w2), (&w.v2, &w.w1), (&w.v2, &w.w2)];
    let mut traces = Vec::new();
    for (k, (v, o)) in pairs.into_iter().enumerate() {
        let t = run_cell(exp, w.aspect, v, o).map_err(|e| format!("2: {e}"))?;
        if t != w.traces[k] {
            return Err(format!("2: trace {k} differs from the recorded one"));
        }
        traces.push(t);
    }
    let n = w.indices;
    let low = a.low();
    for k in 0..4 {
        if n[k] == 0 || n[k] > traces[k].len() {
            return Err(format!("3: index {} out of range", n[k]));
        }
        if super::event_equiv(exp.lat, &low, &traces[k][n[k] - 1], &Event::Bullet) {
            return Err(format!("3: element {} of trace {k} is a bullet", n[k]));
        }
    }
    let pre = |k: usize| &traces[k][..n[k]];
    for k in 0..4 {
        for l in 0..4 {
            if !trace_equiv(exp.lat, &low, pre(k), pre(l)) {
                return Err(format!("4: prefixes {k} and {l} differ"));
            }
        }
    }
    let pi = if w.aspect == Aspect::Integ { a.public_low() } else { a.trusted_low() };
    if !trace_equiv(exp.lat, &pi, pre(0), pre(1)) {
        return Err("5: t11 and t12 prefixes differ".into());
    }
    if trace_equiv(exp.lat, &pi, pre(2), pre(3)) {
        return Err("6: t21 and t22 prefixes agree".into());
    }
    Ok(())
}

struct Grid {
    runs: Runs,
    views: Views,
    /// Per attack: relevant as an integrity input.
    rel_attack: Vec<bool>,
    /// Per secret: relevant as a confidentiality input.
    rel_secret: Vec<bool>,
}

fn grid(exp: &Experiment, a: &Attacker, pools: &Pools) -> Result<Grid, HarnessError> {
    let runs = exp.run_all(exp.secret_values(pools)?, exp.attack_values(pools)?)?;
    let views = views_of(exp, a, &runs);
    let (ns, na) = (runs.secrets.len(), runs.attacks.len());
    let cap = exp.opts.index_cap;
    let rel_attack =
        (0..na).into_par_iter().map(|c| find_irrelevance(&views, Aspect::Integ, c, ns, na, cap).is_none()).collect();
    let rel_secret =
        (0..ns).into_par_iter().map(|c| find_irrelevance(&views, Aspect::Conf, c, ns, na, cap).is_none()).collect();
    Ok(Grid { runs, views, rel_attack, rel_secret })
}

/// `(s1, s2, a1, a2)` in lexicographic order.
fn quadruples(ns: usize, na: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(ns * ns * na * na);
    for s1 in 0..ns {
        for s2 in 0..ns {
            for a1 in 0..na {
                for a2 in 0..na {
                    out.push([s1, s2, a1, a2]);
                }
            }
        }
    }
    out
}

/// The four runs `t^ij = run(v_i, w_j)` of a quadruple, as `[t11, t12, t21, t22]` cells.
fn cells(q: [usize; 4]) -> [(usize, usize); 4] {
    let [s1, s2, a1, a2] = q;
    [(s1, a1), (s1, a2), (s2, a1), (s2, a2)]
}

fn witness(g: &Grid, q: [usize; 4], clause: Option<u8>, indices: Option<[usize; 4]>) -> Witness {
    let [s1, s2, a1, a2] = q;
    Witness {
        clause,
        v1: g.runs.secrets[s1].to_string(),
        v2: g.runs.secrets[s2].to_string(),
        w1: Some(g.runs.attacks[a1].to_string()),
        w2: Some(g.runs.attacks[a2].to_string()),
        indices,
        event: None,
        traces: cells(q).iter().map(|&(i, j)| g.runs.traces[i][j].clone()).collect(),
    }
}

fn first_violation(g: &Grid, f: impl Fn([usize; 4]) -> Option<Witness> + Sync) -> Verdict {
    let qs = quadruples(g.runs.secrets.len(), g.runs.attacks.len());
    let found: Vec<Option<Witness>> = qs.par_iter().map(|&q| f(q)).collect();
    match found.into_iter().flatten().next() {
        Some(w) => Verdict::Violation(Box::new(w)),
        None => Verdict::Pass,
    }
}

fn report(exp: &Experiment, condition: Condition, a: Option<&Attacker>, pools: &Pools, verdict: Verdict) -> Report {
    Report {
        condition,
        attacker: a.cloned(),
        high: None,
        secrets: pools.secrets.len(),
        attacks: pools.attacks.len(),
        well_typed: exp.well_typed,
        verdict,
    }
}

fn precondition(
    exp: &Experiment,
    condition: Condition,
    a: &Attacker,
    pools: &Pools,
    r: Result<Grid, HarnessError>,
) -> Result<Result<Grid, Report>, HarnessError> {
    match r {
        Ok(g) => Ok(Ok(g)),
        Err(e) if e.is_precondition() => Ok(Err(report(exp, condition, Some(a), pools, Verdict::Skip(e.to_string())))),
        Err(e) => Err(e),
    }
}

fn attacks_contain(pools: &Pools, pred: fn(&Expr) -> bool) -> bool {
    pools.attacks.iter().flatten().any(pred)
}

fn full(v: &TraceView) -> u32 {
    *v.prefix.last().unwrap()
}

/// Robust declassification over the pool grid, full traces.
pub fn check_robust_declassification(exp: &Experiment, a: &Attacker, pools: &Pools) -> Result<Report, HarnessError> {
    if exp.program.contains_endorse() || attacks_contain(pools, Expr::contains_endorse) {
        return Ok(report(exp, Condition::Rd, Some(a), pools, Verdict::Skip("program contains endorse".into())));
    }
    let g = match precondition(exp, Condition::Rd, a, pools, grid(exp, a, pools))? {
        Ok(g) => g,
        Err(r) => return Ok(r),
    };
    let verdict = first_violation(&g, |q| {
        let [t11, t12, t21, t22] = cells(q).map(|(i, j)| &g.views.public[i][j]);
        let bad = g.rel_attack[q[2]] && full(t11) == full(t21) && full(t12) != full(t22);
        bad.then(|| witness(&g, q, None, None))
    });
    Ok(report(exp, Condition::Rd, Some(a), pools, verdict))
}

/// Transparent endorsement over the pool grid, full traces.
pub fn check_transparent_endorsement(exp: &Experiment, a: &Attacker, pools: &Pools) -> Result<Report, HarnessError> {
    if exp.program.contains_decl() || attacks_contain(pools, Expr::contains_decl) {
        return Ok(report(exp, Condition::Te, Some(a), pools, Verdict::Skip("program contains decl".into())));
    }
    let g = match precondition(exp, Condition::Te, a, pools, grid(exp, a, pools))? {
        Ok(g) => g,
        Err(r) => return Ok(r),
    };
    let verdict = first_violation(&g, |q| {
        let [t11, t12, t21, t22] = cells(q).map(|(i, j)| &g.views.trusted[i][j]);
        let bad = g.rel_secret[q[0]] && full(t11) == full(t12) && full(t21) != full(t22);
        bad.then(|| witness(&g, q, None, None))
    });
    Ok(report(exp, Condition::Te, Some(a), pools, verdict))
}

/// Clause 1 (`clause = 1`) or clause 2 search over all index quadruples.
fn nmif_clause(g: &Grid, q: [usize; 4], clause: u8, cap: Option<usize>) -> Option<[usize; 4]> {
    let cs = cells(q);
    let low = cs.map(|(i, j)| &g.views.low[i][j]);
    let p = cs.map(|(i, j)| &g.views.public[i][j]);
    let t = cs.map(|(i, j)| &g.views.trusted[i][j]);
    // Clause 1: prefixes trusted-equivalent across attacks, public release compared across secrets.
    // Clause 2 swaps the roles of the two observers and of the pairs.
    let (pre, post, pairs) = if clause == 1 { (t, p, [(0, 1), (2, 3), (0, 2), (1, 3)]) } else { (p, t, [(0, 2), (1, 3), (0, 1), (2, 3)]) };
    let ks: Vec<Vec<usize>> = low.iter().map(|v| capped(v, cap)).collect();
    let [(a1, b1), (a2, b2), (c1, d1), (c2, d2)] = pairs;
    let mut n = [0usize; 4];
    // Lexicographic over (n11, n12, n21, n22).
    for &n11 in &ks[0] {
        n[0] = n11;
        for &n12 in &ks[1] {
            n[1] = n12;
            for &n21 in &ks[2] {
                n[2] = n21;
                for &n22 in &ks[3] {
                    n[3] = n22;
                    let eq = |v: [&TraceView; 4], x: usize, y: usize, off: usize| {
                        v[x].prefix[n[x] - off] == v[y].prefix[n[y] - off]
                    };
                    if eq(pre, a1, b1, 1) && eq(pre, a2, b2, 1) && eq(post, c1, d1, 0) && !eq(post, c2, d2, 0) {
                        return Some(n);
                    }
                }
            }
        }
    }
    None
}

/// Nonmalleable information flow over the pool grid and every index quadruple.
pub fn check_nmif(exp: &Experiment, a: &Attacker, pools: &Pools) -> Result<Report, HarnessError> {
    let g = match precondition(exp, Condition::Nmif, a, pools, grid(exp, a, pools))? {
        Ok(g) => g,
        Err(r) => return Ok(r),
    };
    let cap = exp.opts.index_cap;
    let verdict = first_violation(&g, |q| {
        if g.rel_attack[q[2]] {
            if let Some(n) = nmif_clause(&g, q, 1, cap) {
                return Some(witness(&g, q, Some(1), Some(n)));
            }
        }
        if g.rel_secret[q[0]] {
            if let Some(n) = nmif_clause(&g, q, 2, cap) {
                return Some(witness(&g, q, Some(2), Some(n)));
            }
        }
        None
    });
    Ok(report(exp, Condition::Nmif, Some(a), pools, verdict))
}

/// Noninterference of `x` for one of the three variants. Two-input
/// programs are checked with `y` fixed to each attack in turn.
pub fn check_noninterference(
    exp: &Experiment,
    variant: NiVariant,
    high: &HighSet,
    pools: &Pools,
) -> Result<Report, HarnessError> {
    let condition = match variant {
        NiVariant::ModuloDowngrade => Condition::Ni1,
        NiVariant::HighPc => Condition::Ni2,
        NiVariant::SecretUntrusted => Condition::Ni3,
    };
    let attacker = high.attacker_atoms().and_then(|a| Attacker::new(a.iter().cloned()));
    let mk = |verdict: Verdict| Report { high: Some(high.clone()), ..report(exp, condition, attacker.as_ref(), pools, verdict) };
    let skip = |why: String| Ok(mk(Verdict::Skip(why)));
    match (variant, high) {
        (NiVariant::HighPc, HighSet::Untrusted(_) | HighSet::Secret(_)) => {
            let a = attacker.as_ref().unwrap();
            if !a.untrusted().member(exp.lat, &exp.pc) && !a.secret().member(exp.lat, &exp.pc) {
                return skip(format!("pc {} is neither untrusted nor secret", exp.pc));
            }
        }
        (NiVariant::HighPc, _) => return skip("high set must be untrusted(..) or secret(..)".into()),
        (NiVariant::SecretUntrusted, HighSet::Both(_)) => {}
        (NiVariant::SecretUntrusted, _) => return skip("high set must be both(..)".into()),
        (NiVariant::ModuloDowngrade, _) => {}
    }
    if !high_type(exp.lat, high, &exp.tx) {
        return skip(format!("{} is not a high type of {high}", exp.tx));
    }
    let secrets = match exp.secret_values(pools) {
        Ok(s) => s,
        Err(e) if e.is_precondition() => return skip(e.to_string()),
        Err(e) => return Err(e),
    };
    let attacks: Vec<Option<Expr>> = if exp.y.is_some() {
        match exp.attack_values(pools) {
            Ok(ws) if ws.is_empty() => return skip("two-input program needs at least one attack".into()),
            Ok(ws) => ws.into_iter().map(Some).collect(),
            Err(e) if e.is_precondition() => return skip(e.to_string()),
            Err(e) => return Err(e),
        }
    } else {
        vec![None]
    };
    let cells: Vec<(usize, usize)> =
        (0..secrets.len()).flat_map(|i| (0..attacks.len()).map(move |j| (i, j))).collect();
    let flat: Vec<Trace> =
        cells.par_iter().map(|&(i, j)| exp.run_single(&secrets[i], attacks[j].as_ref())).collect::<Result<_, _>>()?;
    let trace = |i: usize, j: usize| &flat[i * attacks.len() + j];
    let low = LowSet::complement(high.clone());
    let mut obs = Observer::new(exp.lat, low);
    let views: Vec<TraceView> = flat.iter().map(|t| obs.view(t)).collect();
    let view = |i: usize, j: usize| &views[i * attacks.len() + j];
    let mut downgrade: Option<Witness> = None;
    for j in 0..attacks.len() {
        for i1 in 0..secrets.len() {
            for i2 in i1 + 1..secrets.len() {
                if full(view(i1, j)) == full(view(i2, j)) {
                    continue;
                }
                let w = |event: Option<Event>| Witness {
                    clause: None,
                    v1: secrets[i1].to_string(),
                    v2: secrets[i2].to_string(),
                    w1: attacks[j].as_ref().map(|w| w.to_string()),
                    w2: None,
                    indices: None,
                    event,
                    traces: vec![trace(i1, j).clone(), trace(i2, j).clone()],
                };
                let released = [trace(i1, j), trace(i2, j)].into_iter().flatten().find(|c| match c {
                    Event::Downgrade { from, to, .. } => high.member(exp.lat, from) && !high.member(exp.lat, to),
                    _ => false,
                });
                match (variant, released) {
                    (NiVariant::ModuloDowngrade, Some(c)) => {
                        if downgrade.is_none() {
                            downgrade = Some(w(Some(c.clone())));
                        }
                    }
                    _ => return Ok(mk(Verdict::Violation(Box::new(w(None))))),
                }
            }
        }
    }
    Ok(mk(match downgrade {
        Some(w) => Verdict::DowngradeWitness(Box::new(w)),
        None => Verdict::Pass,
    }))
}
