//! Test oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use nmifc::gen::Gen;
use nmifc::lattice::{Aspect, Delegation, Lattice, Principal};
use nmifc::program::Program;
use nmifc::security::{Attacker, Pools};
use nmifc::syntax::Expr;
use nmifc::typecheck::flow_bottom;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Deserialize;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Accept,
    Reject,
    Unsafe,
}

#[derive(Deserialize)]
struct ManifestEntry {
    file: String,
    expect: Expect,
    #[serde(default)]
    premise: Option<String>,
    #[serde(default)]
    attacker: Vec<String>,
    #[serde(default)]
    pools: Option<String>,
}

/// One corpus program with its lattice, pc, pools and expected typing outcome.
pub struct Entry {
    pub name: String,
    pub lat: Lattice,
    pub pc: Principal,
    pub expr: Expr,
    pub expect: Expect,
    pub premise: Option<String>,
    pub attacker: Option<Attacker>,
    pub pools: Option<Pools>,
}

/// The hand-written corpus listed in `corpus/manifest.json`.
pub fn hand_corpus() -> Vec<Entry> {
    let dir = corpus_dir();
    let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    let entries: Vec<ManifestEntry> = serde_json::from_str(&text).unwrap();
    entries
        .into_iter()
        .map(|m| {
            let prog = Program::load(&dir.join(&m.file)).unwrap_or_else(|e| panic!("{}: {e}", m.file));
            Entry {
                name: m.file.clone(),
                lat: prog.load_lattice().unwrap(),
                pc: prog.pc.clone().unwrap_or_else(flow_bottom),
                expr: prog.expr,
                expect: m.expect,
                premise: m.premise,
                attacker: Attacker::new(m.attacker),
                pools: m.pools.map(|p| Pools::load(&dir.join(p)).unwrap()),
            }
        })
        .collect()
}

/// The two lattices generated programs are drawn from.
pub fn gen_lattices() -> Vec<Lattice> {
    vec![
        lattice(&["a", "b"], vec![]),
        lattice(&["a", "b"], vec![Delegation { who: "a".into(), acts_for: Principal::atom("b") }]),
    ]
}

/// Seeded two-input programs with pools of at most `pool` values per input,
/// attacked by `b`.
pub fn generated_corpus(lats: &[Lattice], per_lattice: usize, pool: usize, seed: u64) -> Vec<Entry> {
    let mut out = Vec::new();
    for (k, lat) in lats.iter().enumerate() {
        let mut g = Gen::new(lat, seed.wrapping_add(k as u64));
        for i in 0..per_lattice {
            let p = g.two_input(30);
            let secrets = g.values(&p.tx, pool);
            let attacks = g.values(&p.ty, pool);
            out.push(Entry {
                name: format!("gen-{k}-{i}"),
                lat: lat.clone(),
                pc: flow_bottom(),
                expr: p.program,
                expect: Expect::Accept,
                premise: None,
                attacker: Attacker::new(["b"]),
                pools: Some(Pools::new(secrets, attacks)),
            });
        }
    }
    out
}

/// One projection of a principal as a positive propositional formula.
/// Variables are the atoms of the lattice followed by `top`. `Weak` is `bot`,
/// the principal every principal acts for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum F {
    Weak,
    Var(usize),
    And(Box<F>, Box<F>),
    Or(Box<F>, Box<F>),
}

fn and(a: F, b: F) -> F {
    F::And(Box::new(a), Box::new(b))
}

fn or(a: F, b: F) -> F {
    F::Or(Box::new(a), Box::new(b))
}

/// Vocabulary: the atom names, with `top` as one extra variable after them.
#[derive(Clone, Debug)]
pub struct Vocab {
    pub atoms: Vec<String>,
}

impl Vocab {
    pub fn new(lat: &Lattice) -> Vocab {
        Vocab { atoms: lat.atoms().to_vec() }
    }

    pub fn top(&self) -> usize {
        self.atoms.len()
    }

    fn index(&self, n: &str) -> usize {
        self.atoms.iter().position(|a| a == n).unwrap_or_else(|| panic!("atom {n} not in vocabulary"))
    }

    /// The `pi` component of `p`, read directly off the syntax.
    pub fn formula(&self, p: &Principal, pi: Aspect) -> F {
        match p {
            Principal::Atom(n) => F::Var(self.index(n)),
            Principal::Top => F::Var(self.top()),
            Principal::Bot => F::Weak,
            Principal::Proj(q, a) => {
                if *a == pi {
                    self.formula(q, pi)
                } else {
                    F::Weak
                }
            }
            Principal::And(a, b) => and(self.formula(a, pi), self.formula(b, pi)),
            Principal::Or(a, b) => or(self.formula(a, pi), self.formula(b, pi)),
            Principal::Join(a, b) => match pi {
                Aspect::Conf => and(self.formula(a, pi), self.formula(b, pi)),
                Aspect::Integ => or(self.formula(a, pi), self.formula(b, pi)),
            },
            Principal::Meet(a, b) => match pi {
                Aspect::Conf => or(self.formula(a, pi), self.formula(b, pi)),
                Aspect::Integ => and(self.formula(a, pi), self.formula(b, pi)),
            },
        }
    }

    fn axioms(&self, dels: &[Delegation], pi: Aspect) -> Vec<(usize, F)> {
        dels.iter().map(|d| (self.index(&d.who), self.formula(&d.acts_for, pi))).collect()
    }
}

/// Sequent proof search for `/\ gamma >= \/ delta`. Every rule is invertible in a
/// distributive lattice, so the search is a single deterministic decomposition.
/// Each delegation axiom fires at most once per branch, which bounds the search.
fn prove(mut gamma: Vec<F>, mut delta: Vec<F>, top: usize, axioms: &[(usize, F)], used: u64) -> bool {
    if delta.iter().any(|f| *f == F::Weak) {
        return true;
    }
    if let Some(i) = gamma.iter().position(|f| matches!(f, F::And(..) | F::Or(..) | F::Weak)) {
        return match gamma.swap_remove(i) {
            F::Weak => prove(gamma, delta, top, axioms, used),
            F::And(a, b) => {
                gamma.push(*a);
                gamma.push(*b);
                prove(gamma, delta, top, axioms, used)
            }
            F::Or(a, b) => {
                let mut g2 = gamma.clone();
                gamma.push(*a);
                g2.push(*b);
                prove(gamma, delta.clone(), top, axioms, used) && prove(g2, delta, top, axioms, used)
            }
            F::Var(_) => unreachable!(),
        };
    }
    if let Some(i) = delta.iter().position(|f| matches!(f, F::And(..) | F::Or(..))) {
        return match delta.swap_remove(i) {
            F::Or(a, b) => {
                delta.push(*a);
                delta.push(*b);
                prove(gamma, delta, top, axioms, used)
            }
            F::And(a, b) => {
                let mut d2 = delta.clone();
                delta.push(*a);
                d2.push(*b);
                prove(gamma.clone(), delta, top, axioms, used) && prove(gamma, d2, top, axioms, used)
            }
            _ => unreachable!(),
        };
    }
    let has = |fs: &[F], v: usize| fs.iter().any(|f| *f == F::Var(v));
    if gamma.iter().any(|f| matches!(f, F::Var(v) if has(&delta, *v))) {
        return true;
    }
    // Top acts for every atom.
    if has(&gamma, top) && !delta.is_empty() {
        return true;
    }
    for (k, (who, r)) in axioms.iter().enumerate() {
        if used & (1 << k) == 0 && has(&gamma, *who) {
            let mut g = gamma.clone();
            g.push(r.clone());
            return prove(g, delta, top, axioms, used | (1 << k));
        }
    }
    false
}

/// `p >= q` by proof search, one projection at a time.
pub fn proof_acts_for(lat: &Lattice, p: &Principal, q: &Principal) -> bool {
    let v = Vocab::new(lat);
    [Aspect::Conf, Aspect::Integ].into_iter().all(|pi| {
        let ax = v.axioms(lat.delegations(), pi);
        prove(vec![v.formula(p, pi)], vec![v.formula(q, pi)], v.top(), &ax, 0)
    })
}

/// Truth tables over every two-valued valuation. `p >= q` holds iff every
/// valuation that satisfies the delegations and makes `p` true makes `q` true.
pub struct Valuations {
    vocab: Vocab,
    /// Per aspect, the mask of valuations satisfying the axioms.
    valid: [u128; 2],
    width: usize,
}

impl Valuations {
    pub fn new(lat: &Lattice) -> Valuations {
        let vocab = Vocab::new(lat);
        let width = vocab.atoms.len() + 1;
        assert!(width <= 7, "too many atoms for a 128-bit table");
        let mut valid = [0u128; 2];
        for (k, pi) in [Aspect::Conf, Aspect::Integ].into_iter().enumerate() {
            let ax = vocab.axioms(lat.delegations(), pi);
            let mut m = full(width);
            for (who, r) in &ax {
                m &= !var(*who) | table(r, width);
            }
            // Top implies every atom.
            for a in 0..vocab.atoms.len() {
                m &= !var(vocab.top()) | var(a);
            }
            valid[k] = m & full(width);
        }
        Valuations { vocab, valid, width }
    }

    pub fn acts_for(&self, p: &Principal, q: &Principal) -> bool {
        [Aspect::Conf, Aspect::Integ].into_iter().enumerate().all(|(k, pi)| {
            let tp = table(&self.vocab.formula(p, pi), self.width);
            let tq = table(&self.vocab.formula(q, pi), self.width);
            tp & !tq & self.valid[k] == 0
        })
    }
}

fn full(width: usize) -> u128 {
    let n = 1u32 << width;
    if n == 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    }
}

/// Mask of valuations (indexed by bit pattern) in which variable `i` is true.
fn var(i: usize) -> u128 {
    let mut m = 0u128;
    for v in 0..128u32 {
        if v & (1 << i) != 0 {
            m |= 1 << v;
        }
    }
    m
}

fn table(f: &F, width: usize) -> u128 {
    match f {
        F::Weak => full(width),
        F::Var(i) => var(*i),
        F::And(a, b) => table(a, width) & table(b, width),
        F::Or(a, b) => table(a, width) | table(b, width),
    }
}

/// Every principal over `atoms` with exactly `size` AST nodes.
pub fn principals_of_size(atoms: &[&str], size: usize, memo: &mut Vec<Vec<Principal>>) -> Vec<Principal> {
    while memo.len() <= size {
        let s = memo.len();
        let mut out = Vec::new();
        if s == 1 {
            out.extend(atoms.iter().map(|a| Principal::atom(*a)));
            out.push(Principal::Top);
            out.push(Principal::Bot);
        } else if s >= 2 {
            for p in &memo[s - 1] {
                out.push(p.clone().conf());
                out.push(p.clone().integ());
            }
            for i in 1..s - 1 {
                let j = s - 1 - i;
                for a in &memo[i] {
                    for b in &memo[j] {
                        out.push(a.clone().and(b.clone()));
                        out.push(a.clone().or(b.clone()));
                        out.push(a.clone().join(b.clone()));
                        out.push(a.clone().meet(b.clone()));
                    }
                }
            }
        }
        memo.push(out);
    }
    memo[size].clone()
}

/// Random principal of at most `size` nodes.
pub fn random_principal<R: Rng>(rng: &mut R, atoms: &[&str], size: usize) -> Principal {
    if size <= 1 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..atoms.len() + 2) {
            i if i < atoms.len() => Principal::atom(atoms[i]),
            i if i == atoms.len() => Principal::Top,
            _ => Principal::Bot,
        };
    }
    let k = if size >= 3 { rng.gen_range(0..7) } else { rng.gen_range(0..2) };
    match k {
        0 => random_principal(rng, atoms, size - 1).conf(),
        1 => random_principal(rng, atoms, size - 1).integ(),
        k => {
            let left = rng.gen_range(1..size - 1);
            let a = random_principal(rng, atoms, left);
            let b = random_principal(rng, atoms, size - 1 - left);
            match k {
                2 | 3 => a.and(b),
                4 | 5 => a.or(b),
                _ => {
                    if rng.gen_bool(0.5) {
                        a.join(b)
                    } else {
                        a.meet(b)
                    }
                }
            }
        }
    }
}

/// Up to `n` random delegations whose heads are atoms.
pub fn random_delegations<R: Rng>(rng: &mut R, atoms: &[&str], n: usize) -> Vec<Delegation> {
    (0..rng.gen_range(0..=n))
        .map(|_| Delegation { who: atoms.choose(rng).unwrap().to_string(), acts_for: random_principal(rng, atoms, 4) })
        .collect()
}

pub fn lattice(atoms: &[&str], dels: Vec<Delegation>) -> Lattice {
    Lattice::new(atoms.iter().map(|a| a.to_string()).collect(), dels)
}

/// The five attacker properties on the sample pair `p`, `q`, for both
/// projections. `Err` names the first property that fails.
pub fn attacker_properties(lat: &Lattice, a: &Attacker, p: &Principal, q: &Principal) -> Result<(), String> {
    use nmifc::lattice::{project, view, voice};
    let n = a.principal();
    for pi in [Aspect::Conf, Aspect::Integ] {
        let inside = |x: &Principal| lat.acts_for(&n, &project(x, pi));
        let (ip, iq) = (inside(p), inside(q));
        let conj = p.clone().and(q.clone());
        let disj = p.clone().or(q.clone());
        if ip && iq && !inside(&conj) {
            return Err(format!("1 ({pi:?}): {conj}"));
        }
        if ip && !inside(&disj) {
            return Err(format!("2 ({pi:?}): {disj}"));
        }
        if !ip && !iq && inside(&disj) {
            return Err(format!("3 ({pi:?}): {disj}"));
        }
        if !iq && inside(&conj) {
            return Err(format!("4 ({pi:?}): {conj}"));
        }
    }
    if a.member(lat, p) {
        let sym = voice(&project(p, Aspect::Conf)).and(view(&project(p, Aspect::Integ)));
        if !a.member(lat, &sym) {
            return Err(format!("5: {sym}"));
        }
    }
    Ok(())
}

/// Delegations `atom >= conjunction of atoms`, the shape under which every
/// attacker property holds.
pub fn conjunctive_delegations<R: Rng>(rng: &mut R, atoms: &[&str], n: usize) -> Vec<Delegation> {
    (0..rng.gen_range(0..=n))
        .map(|_| {
            let k = rng.gen_range(1..=2);
            let rhs = Principal::and_all(atoms.choose_multiple(rng, k).map(|a| Principal::atom(*a)));
            Delegation { who: atoms.choose(rng).unwrap().to_string(), acts_for: rhs }
        })
        .collect()
}

/// A sample principal biased towards the attacker's reach: half the time it
/// is weakened by a disjunction with an attacker atom.
pub fn attacker_sample<R: Rng>(rng: &mut R, atoms: &[&str], a: &Attacker) -> Principal {
    let p = random_principal(rng, atoms, 7);
    if rng.gen_bool(0.5) {
        let n = a.atoms().choose(rng).unwrap();
        p.or(Principal::atom(n.clone()))
    } else {
        p
    }
}

/// Result of comparing a bracketed run with its projection.
#[derive(Debug, PartialEq, Eq)]
pub enum BracketCheck {
    /// Both runs terminated and correspond.
    Holds,
    /// The bracketed term does not type in harness mode.
    Untyped,
}

/// Runs `e` (which contains brackets) and its projection. Soundness: the
/// non-bullet events and final values agree after projection. Completeness:
/// when the projection terminates, the bracketed run is not stuck.
pub fn bracket_lemmas(lat: &Lattice, pc: &Principal, e: &Expr, fuel: usize) -> Result<BracketCheck, String> {
    use nmifc::eval::{bracket_project, eval, project_event, EvalError};
    use nmifc::typecheck::{Checker, Ctx};
    if Checker::harness(lat).infer(&Ctx::new(), pc, e).is_err() {
        return Ok(BracketCheck::Untyped);
    }
    let plain = bracket_project(e);
    let p = eval(lat, &plain, fuel).map_err(|err| format!("projection of {e} failed: {err}"))?;
    let b = match eval(lat, e, fuel) {
        Ok(b) => b,
        Err(EvalError::Stuck { reason, expr, .. }) => return Err(format!("completeness: {e} stuck at {expr}: {reason}")),
        Err(err) => return Err(format!("completeness: {e}: {err}")),
    };
    let visible = |t: &[nmifc::eval::Event]| -> Vec<nmifc::eval::Event> {
        t.iter().filter(|c| !c.is_bullet()).map(project_event).collect()
    };
    if visible(&b.trace) != visible(&p.trace) {
        return Err(format!("soundness: traces of {e} and its projection differ"));
    }
    if bracket_project(&b.value) != p.value {
        return Err(format!("soundness: {} projects to {}, expected {}", b.value, bracket_project(&b.value), p.value));
    }
    Ok(BracketCheck::Holds)
}
