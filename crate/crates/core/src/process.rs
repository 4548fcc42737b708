//! Process syntax and the binding-aware operations everything else builds on.
//!
//! Outputs and selections are complete processes rather than prefixes: a send
//! carries a payload name and a continuation name and has no body, so only
//! inputs and branches block. Restriction binds a pair of names that form the
//! two ends of one link, and may carry the session type of its first end.

use std::collections::{BTreeMap, BTreeSet};

use crate::name::{Label, Name};
use crate::types::{dual, SessionType};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Process {
    Inact,
    /// `send x[a,b]`: emit payload `a` and continuation `b` on `x`.
    Send { subject: Name, payload: Name, cont: Name },
    /// `recv x(y,z). P`: receive a payload and a continuation on `x`.
    Recv {
        subject: Name,
        payload: Name,
        cont: Name,
        body: Box<Process>,
    },
    /// `sel x[b] < l`: emit label `l` and continuation `b` on `x`.
    Sel { subject: Name, cont: Name, label: Label },
    /// `bra x(z) > { l: P, ... }`: offer the labelled branches on `x`,
    /// binding the received continuation to `z` in each branch.
    Bra {
        subject: Name,
        binder: Name,
        branches: BTreeMap<Label, Process>,
    },
    Par(Box<Process>, Box<Process>),
    /// `new (x y) P` or `new (x:A y) P`: bind the linked pair `x`,`y`;
    /// `ann` types `x`, and `y` is typed by its dual.
    Res {
        a: Name,
        b: Name,
        ann: Option<SessionType>,
        body: Box<Process>,
    },
    /// `fwd [x<>y]`: link `x` and `y`.
    Fwd(Name, Name),
}

impl Process {
    pub fn send(subject: Name, payload: Name, cont: Name) -> Process {
        Process::Send { subject, payload, cont }
    }

    pub fn recv(subject: Name, payload: Name, cont: Name, body: Process) -> Process {
        Process::Recv {
            subject,
            payload,
            cont,
            body: Box::new(body),
        }
    }

    pub fn sel(subject: Name, cont: Name, label: Label) -> Process {
        Process::Sel { subject, cont, label }
    }

    pub fn bra(subject: Name, binder: Name, branches: Vec<(Label, Process)>) -> Process {
        Process::Bra {
            subject,
            binder,
            branches: branches.into_iter().collect(),
        }
    }

    pub fn par(left: Process, right: Process) -> Process {
        Process::Par(Box::new(left), Box::new(right))
    }

    /// Right-nested parallel composition of all arguments; `Inact` if empty.
    pub fn par_all(mut procs: Vec<Process>) -> Process {
        match procs.len() {
            0 => Process::Inact,
            1 => procs.pop().unwrap(),
            _ => {
                let mut acc = procs.pop().unwrap();
                while let Some(p) = procs.pop() {
                    acc = Process::par(p, acc);
                }
                acc
            }
        }
    }

    pub fn res(a: Name, b: Name, body: Process) -> Process {
        Process::Res {
            a,
            b,
            ann: None,
            body: Box::new(body),
        }
    }

    pub fn res_ann(a: Name, b: Name, ann: SessionType, body: Process) -> Process {
        Process::Res {
            a,
            b,
            ann: Some(ann),
            body: Box::new(body),
        }
    }

    pub fn fwd(a: Name, b: Name) -> Process {
        Process::Fwd(a, b)
    }

    pub fn is_inact(&self) -> bool {
        matches!(self, Process::Inact)
    }
}

/// The free names of `p`.
pub fn free_names(p: &Process) -> BTreeSet<Name> {
    fn go(p: &Process, bound: &mut Vec<Name>, acc: &mut BTreeSet<Name>) {
        let note = |n: Name, bound: &Vec<Name>, acc: &mut BTreeSet<Name>| {
            if !bound.contains(&n) {
                acc.insert(n);
            }
        };
        match p {
            Process::Inact => {}
            Process::Send { subject, payload, cont } => {
                note(*subject, bound, acc);
                note(*payload, bound, acc);
                note(*cont, bound, acc);
            }
            Process::Recv { subject, payload, cont, body } => {
                note(*subject, bound, acc);
                bound.push(*payload);
                bound.push(*cont);
                go(body, bound, acc);
                bound.pop();
                bound.pop();
            }
            Process::Sel { subject, cont, .. } => {
                note(*subject, bound, acc);
                note(*cont, bound, acc);
            }
            Process::Bra { subject, binder, branches } => {
                note(*subject, bound, acc);
                bound.push(*binder);
                for body in branches.values() {
                    go(body, bound, acc);
                }
                bound.pop();
            }
            Process::Par(l, r) => {
                go(l, bound, acc);
                go(r, bound, acc);
            }
            Process::Res { a, b, body, .. } => {
                bound.push(*a);
                bound.push(*b);
                go(body, bound, acc);
                bound.pop();
                bound.pop();
            }
            Process::Fwd(a, b) => {
                note(*a, bound, acc);
                note(*b, bound, acc);
            }
        }
    }
    let mut acc = BTreeSet::new();
    go(p, &mut Vec::new(), &mut acc);
    acc
}

fn apply(map: &BTreeMap<Name, Name>, n: Name) -> Name {
    map.get(&n).copied().unwrap_or(n)
}

/// Capture-avoiding simultaneous renaming of free names. Binders that would
/// capture a substituted name are renamed to fresh names first.
pub fn substitute(p: &Process, map: &BTreeMap<Name, Name>) -> Process {
    if map.is_empty() {
        return p.clone();
    }
    // Refreshes one binder if it collides with any name the map introduces.
    // Returns the possibly renamed binder and the extra renaming to apply to
    // the scope body.
    fn guard(binder: Name, map: &BTreeMap<Name, Name>) -> (Name, Option<(Name, Name)>) {
        if map.values().any(|v| *v == binder) {
            let fresh = Name::fresh(&binder.origin());
            (fresh, Some((binder, fresh)))
        } else {
            (binder, None)
        }
    }
    fn narrow(map: &BTreeMap<Name, Name>, binders: &[Name]) -> BTreeMap<Name, Name> {
        map.iter()
            .filter(|(k, _)| !binders.contains(k))
            .map(|(k, v)| (*k, *v))
            .collect()
    }
    match p {
        Process::Inact => Process::Inact,
        Process::Send { subject, payload, cont } => Process::Send {
            subject: apply(map, *subject),
            payload: apply(map, *payload),
            cont: apply(map, *cont),
        },
        Process::Sel { subject, cont, label } => Process::Sel {
            subject: apply(map, *subject),
            cont: apply(map, *cont),
            label: label.clone(),
        },
        Process::Fwd(a, b) => Process::Fwd(apply(map, *a), apply(map, *b)),
        Process::Recv { subject, payload, cont, body } => {
            let subject = apply(map, *subject);
            let inner = narrow(map, &[*payload, *cont]);
            let (payload2, r1) = guard(*payload, &inner);
            let (cont2, r2) = guard(*cont, &inner);
            let mut inner = inner;
            for (from, to) in [r1, r2].into_iter().flatten() {
                inner.insert(from, to);
            }
            Process::Recv {
                subject,
                payload: payload2,
                cont: cont2,
                body: Box::new(substitute(body, &inner)),
            }
        }
        Process::Bra { subject, binder, branches } => {
            let subject = apply(map, *subject);
            let inner = narrow(map, &[*binder]);
            let (binder2, r) = guard(*binder, &inner);
            let mut inner = inner;
            if let Some((from, to)) = r {
                inner.insert(from, to);
            }
            Process::Bra {
                subject,
                binder: binder2,
                branches: branches
                    .iter()
                    .map(|(l, body)| (l.clone(), substitute(body, &inner)))
                    .collect(),
            }
        }
        Process::Par(l, r) => Process::par(substitute(l, map), substitute(r, map)),
        Process::Res { a, b, ann, body } => {
            let inner = narrow(map, &[*a, *b]);
            let (a2, r1) = guard(*a, &inner);
            let (b2, r2) = guard(*b, &inner);
            let mut inner = inner;
            for (from, to) in [r1, r2].into_iter().flatten() {
                inner.insert(from, to);
            }
            Process::Res {
                a: a2,
                b: b2,
                ann: ann.clone(),
                body: Box::new(substitute(body, &inner)),
            }
        }
    }
}

/// Renames every binder to a canonical name determined by its position in a
/// fixed traversal: alpha-equivalent processes map to structurally equal
/// trees, and the pass is idempotent. Free names are untouched; numbering
/// starts above any canonical name occurring free, so a binder can never
/// collide with one left free by an enclosing scope.
pub fn alpha_canonical(p: &Process) -> Process {
    fn go(p: &Process, env: &mut Vec<(Name, Name)>, next: &mut u64) -> Process {
        let resolve = |n: Name, env: &Vec<(Name, Name)>| {
            env.iter().rev().find(|(from, _)| *from == n).map(|(_, to)| *to).unwrap_or(n)
        };
        let bind = |n: Name, env: &mut Vec<(Name, Name)>, next: &mut u64| {
            let canon = Name::canonical(*next);
            *next += 1;
            env.push((n, canon));
            canon
        };
        match p {
            Process::Inact => Process::Inact,
            Process::Send { subject, payload, cont } => Process::Send {
                subject: resolve(*subject, env),
                payload: resolve(*payload, env),
                cont: resolve(*cont, env),
            },
            Process::Sel { subject, cont, label } => Process::Sel {
                subject: resolve(*subject, env),
                cont: resolve(*cont, env),
                label: label.clone(),
            },
            Process::Fwd(a, b) => Process::Fwd(resolve(*a, env), resolve(*b, env)),
            Process::Recv { subject, payload, cont, body } => {
                let subject = resolve(*subject, env);
                let payload2 = bind(*payload, env, next);
                let cont2 = bind(*cont, env, next);
                let body = go(body, env, next);
                env.pop();
                env.pop();
                Process::Recv {
                    subject,
                    payload: payload2,
                    cont: cont2,
                    body: Box::new(body),
                }
            }
            Process::Bra { subject, binder, branches } => {
                let subject = resolve(*subject, env);
                let binder2 = bind(*binder, env, next);
                let branches = branches
                    .iter()
                    .map(|(l, body)| (l.clone(), go(body, env, next)))
                    .collect();
                env.pop();
                Process::Bra {
                    subject,
                    binder: binder2,
                    branches,
                }
            }
            Process::Par(l, r) => {
                let l = go(l, env, next);
                let r = go(r, env, next);
                Process::par(l, r)
            }
            Process::Res { a, b, ann, body } => {
                let a2 = bind(*a, env, next);
                let b2 = bind(*b, env, next);
                let body = go(body, env, next);
                env.pop();
                env.pop();
                Process::Res {
                    a: a2,
                    b: b2,
                    ann: ann.clone(),
                    body: Box::new(body),
                }
            }
        }
    }
    let mut start = 0;
    for n in free_names(p) {
        if let Some(k) = n.canonical_index() {
            start = start.max(k + 1);
        }
    }
    go(p, &mut Vec::new(), &mut start)
}

/// Alpha equivalence: equality of canonical forms.
pub fn alpha_eq(p: &Process, q: &Process) -> bool {
    alpha_canonical(p) == alpha_canonical(q)
}

/// Replaces the annotation direction when a restriction's binders swap:
/// the first binder is typed by the annotation, so swapping dualizes it.
pub fn flip_ann(ann: &Option<SessionType>) -> Option<SessionType> {
    ann.as_ref().map(dual)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> Name {
        Name::intern(s)
    }

    #[test]
    fn free_names_of_restricted_pair() {
        let (x, y, a, b, v, w) = (n("x"), n("y"), n("a"), n("b"), n("v"), n("w"));
        let p = Process::res(
            x,
            y,
            Process::par(
                Process::send(x, a, b),
                Process::recv(y, v, w, Process::Inact),
            ),
        );
        let fns = free_names(&p);
        assert_eq!(fns, [a, b].into_iter().collect());
    }

    #[test]
    fn substitute_avoids_capture() {
        // Substituting a -> y under a binder named y must rename the binder.
        let (x, y, z, a, b) = (n("x"), n("y"), n("z"), n("a"), n("b"));
        let p = Process::recv(x, y, z, Process::send(y, a, b));
        let map = [(a, y)].into_iter().collect();
        let q = substitute(&p, &map);
        match q {
            Process::Recv { subject, payload, cont, body } => {
                assert_eq!(subject, x);
                assert_ne!(payload, y);
                assert_eq!(payload.origin(), "y");
                assert_eq!(cont, z);
                match *body {
                    Process::Send { subject, payload: pl, cont } => {
                        assert_eq!(subject, payload);
                        assert_eq!(pl, y);
                        assert_eq!(cont, b);
                    }
                    other => panic!("unexpected body {other:?}"),
                }
            }
            other => panic!("unexpected result {other:?}"),
        }
    }

    #[test]
    fn substitute_respects_shadowing() {
        let (x, y, z, a) = (n("x"), n("y"), n("z"), n("a"));
        // y is rebound, so the outer map must not reach the body occurrence.
        let p = Process::recv(x, y, z, Process::fwd(y, a));
        let map = [(y, a)].into_iter().collect();
        let q = substitute(&p, &map);
        assert_eq!(q, p);
    }

    #[test]
    fn alpha_canonical_identifies_renamings() {
        let (x, y, u, w, a) = (n("x"), n("y"), n("u"), n("w"), n("a"));
        let p = Process::res(x, y, Process::recv(x, u, w, Process::send(y, u, a)));
        let (x2, y2, u2, w2) = (n("x2"), n("y2"), n("u2"), n("w2"));
        let q = Process::res(x2, y2, Process::recv(x2, u2, w2, Process::send(y2, u2, a)));
        assert!(alpha_eq(&p, &q));
        let canon = alpha_canonical(&p);
        assert_eq!(canon, alpha_canonical(&canon));
        // Free names survive canonicalization.
        assert!(free_names(&canon).contains(&a));
    }

    #[test]
    fn alpha_distinguishes_binding_structure() {
        let (x, y, a, b) = (n("x"), n("y"), n("a"), n("b"));
        let p = Process::res(x, y, Process::send(x, a, b));
        let q = Process::res(x, y, Process::send(y, a, b));
        assert!(!alpha_eq(&p, &q));
    }
}
