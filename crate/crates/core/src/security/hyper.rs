//! 4-safety membership predicates over trace quadruples `[t11, t12, t21, t22]`.

use super::{Attacker, Observer, TraceView};
use crate::eval::Trace;
use crate::lattice::Lattice;

/// Input-agreement pattern on the first two elements: both present and not
/// bullets, first agreeing across `j`, second agreeing across `i`.
fn input_pattern(t: [&Trace; 4]) -> bool {
    let ok = |x: &Trace| x.len() >= 2 && !x[0].is_bullet() && !x[1].is_bullet();
    t.iter().all(|x| ok(x)) && t[0][0] == t[1][0] && t[2][0] == t[3][0] && t[0][1] == t[2][1] && t[1][1] == t[3][1]
}

struct Quad {
    low: [TraceView; 4],
    public: [TraceView; 4],
    trusted: [TraceView; 4],
}

fn quad(lat: &Lattice, a: &Attacker, t: [&Trace; 4]) -> Quad {
    let mut low = Observer::new(lat, a.low());
    let mut public = Observer::new(lat, a.public_low());
    let mut trusted = Observer::new(lat, a.trusted_low());
    Quad { low: t.map(|x| low.view(x)), public: t.map(|x| public.view(x)), trusted: t.map(|x| trusted.view(x)) }
}

fn indices(q: &Quad) -> impl Iterator<Item = [usize; 4]> {
    let ks: Vec<Vec<usize>> = q.low.iter().map(|v| v.visible()).collect();
    let mut out = Vec::new();
    for &a in &ks[0] {
        for &b in &ks[1] {
            for &c in &ks[2] {
                for &d in &ks[3] {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out.into_iter()
}

fn eq(v: &[TraceView; 4], n: [usize; 4], x: usize, y: usize, off: usize) -> bool {
    v[x].prefix[n[x] - off] == v[y].prefix[n[y] - off]
}

fn rd_at(q: &Quad, n: [usize; 4]) -> bool {
    let pre = eq(&q.trusted, n, 0, 1, 1) && eq(&q.trusted, n, 2, 3, 1);
    let ante = pre && eq(&q.public, n, 0, 2, 0) && !eq(&q.public, n, 1, 3, 0);
    !ante || eq(&q.low, n, 1, 3, 0)
}

/// Membership in the robust-declassification 4-safety property for `a`.
pub fn rd_hyper_member(lat: &Lattice, a: &Attacker, t: [&Trace; 4]) -> bool {
    if !input_pattern(t) {
        return true;
    }
    let q = quad(lat, a, t);
    indices(&q).all(|n| rd_at(&q, n))
}

/// The robust-declassification implication at the single index quadruple
/// `n` (1-based event counts), without requiring those events to be visible.
pub fn rd_hyper_member_at(lat: &Lattice, a: &Attacker, t: [&Trace; 4], n: [usize; 4]) -> bool {
    if !input_pattern(t) {
        return true;
    }
    let q = quad(lat, a, t);
    rd_at(&q, n)
}

/// Membership in the transparent-endorsement 4-safety property for `a`.
pub fn te_hyper_member(lat: &Lattice, a: &Attacker, t: [&Trace; 4]) -> bool {
    if !input_pattern(t) {
        return true;
    }
    let q = quad(lat, a, t);
    indices(&q).all(|n| {
        let pre = eq(&q.public, n, 0, 2, 1) && eq(&q.public, n, 1, 3, 1);
        let ante = pre && eq(&q.trusted, n, 0, 1, 0) && !eq(&q.trusted, n, 2, 3, 0);
        !ante || eq(&q.low, n, 2, 3, 0)
    })
}

/// Membership in the nonmalleable-information-flow 4-safety property,
/// decided directly with one pass over the index quadruples.
pub fn nmif_hyper_member(lat: &Lattice, a: &Attacker, t: [&Trace; 4]) -> bool {
    if !input_pattern(t) {
        return true;
    }
    let q = quad(lat, a, t);
    let (l, p, tr) = (&q.low, &q.public, &q.trusted);
    for n in indices(&q) {
        let same = |v: &[TraceView; 4], x: usize, y: usize| v[x].prefix[n[x]] == v[y].prefix[n[y]];
        let before = |v: &[TraceView; 4], x: usize, y: usize| v[x].prefix[n[x] - 1] == v[y].prefix[n[y] - 1];
        if before(tr, 0, 1) && before(tr, 2, 3) && same(p, 0, 2) && !same(p, 1, 3) && !same(l, 1, 3) {
            return false;
        }
        if before(p, 0, 2) && before(p, 1, 3) && same(tr, 0, 1) && !same(tr, 2, 3) && !same(l, 2, 3) {
            return false;
        }
    }
    true
}

