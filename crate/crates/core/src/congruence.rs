//! Structural congruence: canonical normal forms, the congruence decision
//! procedures for the full relation and for the cut-restricted variant, and
//! scope extrusion.
//!
//! Normalization works level by level, where a level is the region of a
//! process reachable without crossing an input prefix. Within a level all
//! restrictions are lifted to the top (binders freshened first, so lifting
//! never captures), parallel children are flattened into one list, inert
//! material is dropped, and children and restriction pairs are put into a
//! canonical order that does not depend on bound-name identity.

use std::collections::{BTreeMap, BTreeSet};

use crate::name::Name;
use crate::print::{occurrence_order, print_process_with};
use crate::process::{alpha_canonical, flip_ann, free_names, substitute, Process};
use crate::types::SessionType;

/// Result of `normalize`: a canonical representative of the congruence class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    pub residual: Process,
    pub zero_flag: bool,
}

struct Level {
    pairs: Vec<(Name, Name, Option<SessionType>)>,
    children: Vec<Process>,
}

/// Lifts every restriction of the current level to the top and flattens
/// parallel composition, recursing into input-guarded bodies. Binder pairs
/// are renamed to fresh names first, so the lift can never capture.
fn flatten(p: &Process, level: &mut Level) {
    match p {
        Process::Inact => {}
        Process::Par(l, r) => {
            flatten(l, level);
            flatten(r, level);
        }
        Process::Res { a, b, ann, body } => {
            let fa = Name::fresh(&a.origin());
            let fb = Name::fresh(&b.origin());
            let mut map = BTreeMap::new();
            map.insert(*a, fa);
            map.insert(*b, fb);
            let body = substitute(body, &map);
            level.pairs.push((fa, fb, ann.clone()));
            flatten(&body, level);
        }
        Process::Recv { subject, payload, cont, body } => {
            level.children.push(Process::recv(
                *subject,
                *payload,
                *cont,
                normalize(body).residual,
            ));
        }
        Process::Bra { subject, binder, branches } => {
            level.children.push(Process::Bra {
                subject: *subject,
                binder: *binder,
                branches: branches
                    .iter()
                    .map(|(l, b)| (l.clone(), normalize(b).residual))
                    .collect(),
            });
        }
        other => level.children.push(other.clone()),
    }
}

/// Drops inert material: restriction pairs no child mentions, and forwarders
/// that only connect the two ends of an otherwise unused restriction.
fn simplify(level: &mut Level) {
    loop {
        let mut changed = false;
        let uses: Vec<BTreeSet<Name>> = level.children.iter().map(free_names).collect();
        let mut drop_pair = None;
        for (i, (a, b, _)) in level.pairs.iter().enumerate() {
            if uses.iter().all(|u| !u.contains(a) && !u.contains(b)) {
                drop_pair = Some((i, None));
                break;
            }
            let mut fwd_child = None;
            let mut used_elsewhere = false;
            for (j, child) in level.children.iter().enumerate() {
                let touches = uses[j].contains(a) || uses[j].contains(b);
                match child {
                    Process::Fwd(x, y)
                        if (x == a && y == b) || (x == b && y == a) =>
                    {
                        if fwd_child.is_some() {
                            used_elsewhere = true;
                        } else {
                            fwd_child = Some(j);
                        }
                    }
                    _ if touches => used_elsewhere = true,
                    _ => {}
                }
            }
            if let (Some(j), false) = (fwd_child, used_elsewhere) {
                drop_pair = Some((i, Some(j)));
                break;
            }
        }
        if let Some((i, maybe_child)) = drop_pair {
            level.pairs.remove(i);
            if let Some(j) = maybe_child {
                level.children.remove(j);
            }
            changed = true;
        }
        if !changed {
            break;
        }
    }
}

/// Canonical ordering of children and indexing of level-bound names by
/// iterative refinement: render each child with bound names replaced by
/// their current index (or a hole), sort, re-derive indices from first
/// occurrence in the new order, and repeat to a fixed point.
struct Refined {
    order: Vec<usize>,
    index_of: BTreeMap<Name, usize>,
}

fn refine(children: &[Process], bound: &BTreeSet<Name>) -> Refined {
    let canon: Vec<Process> = children.iter().map(alpha_canonical).collect();
    let occs: Vec<Vec<Name>> = canon
        .iter()
        .map(|c| {
            let mut v = Vec::new();
            occurrence_order(c, &mut v);
            v
        })
        .collect();
    let key = |i: usize, index_of: &BTreeMap<Name, usize>| -> String {
        let rendered = oriented_for_key(&canon[i], bound, index_of);
        print_process_with(&rendered, &|n| {
            if bound.contains(&n) {
                match index_of.get(&n) {
                    Some(k) => format!("?L{k}"),
                    None => "?L".to_string(),
                }
            } else {
                n.hash_text()
            }
        })
    };
    let mut order: Vec<usize> = (0..children.len()).collect();
    let mut index_of: BTreeMap<Name, usize> = BTreeMap::new();
    for _ in 0..8 {
        let keys: Vec<String> = (0..children.len()).map(|i| key(i, &index_of)).collect();
        let mut new_order = order.clone();
        new_order.sort_by(|&i, &j| keys[i].cmp(&keys[j]));
        let mut new_index: BTreeMap<Name, usize> = BTreeMap::new();
        let mut next = 0usize;
        for &i in &new_order {
            for n in &occs[i] {
                if bound.contains(n) && !new_index.contains_key(n) {
                    new_index.insert(*n, next);
                    next += 1;
                }
            }
        }
        if new_order == order && new_index == index_of {
            break;
        }
        order = new_order;
        index_of = new_index;
    }
    Refined { order, index_of }
}

/// Forwarder endpoints are symmetric; orient them by the canonical key of
/// their names so `[x<>y]` and `[y<>x]` render identically.
fn oriented_for_key(
    p: &Process,
    bound: &BTreeSet<Name>,
    index_of: &BTreeMap<Name, usize>,
) -> Process {
    if let Process::Fwd(x, y) = p {
        let rank = |n: &Name| -> (u8, String) {
            if bound.contains(n) {
                match index_of.get(n) {
                    Some(k) => (0, format!("{k:020}")),
                    None => (1, String::new()),
                }
            } else {
                (2, n.hash_text())
            }
        };
        if rank(y) < rank(x) {
            return Process::Fwd(*y, *x);
        }
    }
    p.clone()
}

fn pair_index(n: &Name, index_of: &BTreeMap<Name, usize>) -> usize {
    index_of.get(n).copied().unwrap_or(usize::MAX)
}

/// Canonical representative of the congruence class of `p`.
pub fn normalize(p: &Process) -> CanonicalForm {
    let mut level = Level { pairs: Vec::new(), children: Vec::new() };
    flatten(p, &mut level);
    simplify(&mut level);
    let bound: BTreeSet<Name> = level
        .pairs
        .iter()
        .flat_map(|(a, b, _)| [*a, *b])
        .collect();
    let refined = refine(&level.children, &bound);
    let children: Vec<Process> = refined
        .order
        .iter()
        .map(|&i| oriented_for_key(&level.children[i], &bound, &refined.index_of))
        .collect();
    let mut pairs = level.pairs.clone();
    for (a, b, ann) in pairs.iter_mut() {
        if pair_index(b, &refined.index_of) < pair_index(a, &refined.index_of) {
            std::mem::swap(a, b);
            *ann = flip_ann(ann);
        }
    }
    pairs.sort_by_key(|(a, b, _)| {
        (pair_index(a, &refined.index_of), pair_index(b, &refined.index_of))
    });
    let mut residual = Process::par_all(children);
    for (a, b, ann) in pairs.into_iter().rev() {
        residual = Process::Res { a, b, ann, body: Box::new(residual) };
    }
    let residual = alpha_canonical(&residual);
    CanonicalForm { zero_flag: residual.is_inact(), residual }
}

/// Full structural congruence, decided by comparing canonical forms.
pub fn congruent(p: &Process, q: &Process) -> bool {
    normalize(p).residual == normalize(q).residual
}

/// Lifts restrictions outward (prenex per level) without reordering or
/// dropping anything; used to expose redexes.
pub fn scope_extrude(p: &Process) -> Process {
    fn peel(p: Process, pairs: &mut Vec<(Name, Name, Option<SessionType>)>) -> Process {
        let mut cur = p;
        loop {
            match cur {
                Process::Res { a, b, ann, body } => {
                    let fa = Name::fresh(&a.origin());
                    let fb = Name::fresh(&b.origin());
                    let mut map = BTreeMap::new();
                    map.insert(a, fa);
                    map.insert(b, fb);
                    pairs.push((fa, fb, ann));
                    cur = substitute(&body, &map);
                }
                other => return other,
            }
        }
    }
    match p {
        Process::Par(l, r) => {
            let l = scope_extrude(l);
            let r = scope_extrude(r);
            let mut pairs = Vec::new();
            let l = peel(l, &mut pairs);
            let r = peel(r, &mut pairs);
            let mut out = Process::par(l, r);
            for (a, b, ann) in pairs.into_iter().rev() {
                out = Process::Res { a, b, ann, body: Box::new(out) };
            }
            out
        }
        Process::Res { a, b, ann, body } => Process::Res {
            a: *a,
            b: *b,
            ann: ann.clone(),
            body: Box::new(scope_extrude(body)),
        },
        Process::Recv { subject, payload, cont, body } => {
            Process::recv(*subject, *payload, *cont, scope_extrude(body))
        }
        Process::Bra { subject, binder, branches } => Process::Bra {
            subject: *subject,
            binder: *binder,
            branches: branches
                .iter()
                .map(|(l, b)| (l.clone(), scope_extrude(b)))
                .collect(),
        },
        other => other.clone(),
    }
}

/// Decomposition of the top level into restriction pairs and flat children,
/// with binders freshened. Unlike `normalize` this drops nothing.
#[allow(clippy::type_complexity)]
pub(crate) fn top_level(p: &Process) -> (Vec<(Name, Name, Option<SessionType>)>, Vec<Process>) {
    fn walk(
        p: &Process,
        pairs: &mut Vec<(Name, Name, Option<SessionType>)>,
        children: &mut Vec<Process>,
    ) {
        match p {
            Process::Inact => {}
            Process::Par(l, r) => {
                walk(l, pairs, children);
                walk(r, pairs, children);
            }
            Process::Res { a, b, ann, body } => {
                let fa = Name::fresh(&a.origin());
                let fb = Name::fresh(&b.origin());
                let mut map = BTreeMap::new();
                map.insert(*a, fa);
                map.insert(*b, fb);
                let body = substitute(body, &map);
                pairs.push((fa, fb, ann.clone()));
                walk(&body, pairs, children);
            }
            other => children.push(other.clone()),
        }
    }
    let mut pairs = Vec::new();
    let mut children = Vec::new();
    walk(p, &mut pairs, &mut children);
    (pairs, children)
}

/// Reassembles the top level of `p` as a nest of cuts: one restriction over
/// one parallel composition at every node. Succeeds only when the connection
/// structure is a tree with every restricted name in exactly one child.
pub fn cut_rebuild(p: &Process) -> Option<Process> {
    let (pairs, children) = top_level(p);
    if children.is_empty() {
        return if pairs.is_empty() { Some(Process::Inact) } else { None };
    }
    if pairs.len() + 1 != children.len() {
        return None;
    }
    let uses: Vec<BTreeSet<Name>> = children.iter().map(free_names).collect();
    let locate = |n: &Name| -> Option<usize> {
        let mut found = None;
        for (i, u) in uses.iter().enumerate() {
            if u.contains(n) {
                if found.is_some() {
                    return None;
                }
                found = Some(i);
            }
        }
        found
    };
    // Edges of the connection graph; reject when names are shared or missing.
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); children.len()];
    let mut edges = Vec::new();
    for (e, (a, b, ann)) in pairs.iter().enumerate() {
        let i = locate(a)?;
        let j = locate(b)?;
        if i == j {
            return None;
        }
        edges.push((*a, *b, ann.clone(), i, j));
        adj[i].push((e, j));
        adj[j].push((e, i));
    }
    // Spanning-tree fold: every edge must be crossed exactly once.
    fn build(
        node: usize,
        children: &[Process],
        adj: &[Vec<(usize, usize)>],
        edges: &[(Name, Name, Option<SessionType>, usize, usize)],
        done_edges: &mut Vec<bool>,
        done_nodes: &mut Vec<bool>,
    ) -> Option<Process> {
        done_nodes[node] = true;
        let mut acc = children[node].clone();
        for &(e, other) in &adj[node] {
            if done_edges[e] {
                continue;
            }
            done_edges[e] = true;
            if done_nodes[other] {
                return None;
            }
            let sub = build(other, children, adj, edges, done_edges, done_nodes)?;
            // The first binder must occur on the accumulated side.
            let (a, b, ann, i, _) = &edges[e];
            let (x, y, ann) = if *i == node {
                (*a, *b, ann.clone())
            } else {
                (*b, *a, flip_ann(ann))
            };
            acc = Process::Res {
                a: x,
                b: y,
                ann,
                body: Box::new(Process::par(acc, sub)),
            };
        }
        Some(acc)
    }
    let mut done_edges = vec![false; edges.len()];
    let mut done_nodes = vec![false; children.len()];
    let built = build(0, &children, &adj, &edges, &mut done_edges, &mut done_nodes)?;
    if done_nodes.iter().all(|d| *d) {
        Some(built)
    } else {
        None
    }
}

/// Congruence for the cut-restricted relation: binder swap on cuts,
/// forwarder symmetry, and cut commutativity/associativity, decided by a
/// canonical rebuild of the cut tree. Falls back to plain alpha-equivalence
/// when either side is not a tree of cuts.
pub fn congruent_acp(p: &Process, q: &Process) -> bool {
    match (canonical_cut(p), canonical_cut(q)) {
        (Some(cp), Some(cq)) => cp == cq,
        _ => alpha_canonical(p) == alpha_canonical(q),
    }
}

fn canonical_cut(p: &Process) -> Option<Process> {
    // Decompose the nest of cuts; a node is a cut only when the restriction
    // sits directly over a parallel composition.
    fn decompose(
        p: &Process,
        pairs: &mut Vec<(Name, Name, Option<SessionType>)>,
        leaves: &mut Vec<Process>,
    ) {
        match p {
            Process::Res { a, b, ann, body } if matches!(**body, Process::Par(..)) => {
                let fa = Name::fresh(&a.origin());
                let fb = Name::fresh(&b.origin());
                let mut map = BTreeMap::new();
                map.insert(*a, fa);
                map.insert(*b, fb);
                let body = substitute(body, &map);
                pairs.push((fa, fb, ann.clone()));
                if let Process::Par(l, r) = body {
                    decompose(&l, pairs, leaves);
                    decompose(&r, pairs, leaves);
                }
            }
            other => leaves.push(other.clone()),
        }
    }
    let mut pairs = Vec::new();
    let mut leaves = Vec::new();
    decompose(p, &mut pairs, &mut leaves);
    if pairs.len() + 1 != leaves.len() {
        return None;
    }
    let bound: BTreeSet<Name> = pairs.iter().flat_map(|(a, b, _)| [*a, *b]).collect();
    let refined = refine(&leaves, &bound);
    let ordered: Vec<Process> = refined
        .order
        .iter()
        .map(|&i| oriented_for_key(&leaves[i], &bound, &refined.index_of))
        .collect();
    let mut oriented = pairs.clone();
    for (a, b, ann) in oriented.iter_mut() {
        if pair_index(b, &refined.index_of) < pair_index(a, &refined.index_of) {
            std::mem::swap(a, b);
            *ann = flip_ann(ann);
        }
    }
    oriented.sort_by_key(|(a, b, _)| {
        (pair_index(a, &refined.index_of), pair_index(b, &refined.index_of))
    });
    let mut prenex = Process::par_all(ordered);
    for (a, b, ann) in oriented.into_iter().rev() {
        prenex = Process::Res { a, b, ann, body: Box::new(prenex) };
    }
    cut_rebuild(&prenex).map(|r| alpha_canonical(&r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::Label;
    use crate::parser::parse_process;

    fn p(src: &str) -> Process {
        parse_process(src).unwrap()
    }

    #[test]
    fn unit_laws() {
        let form = normalize(&p("(0 | 0)"));
        assert!(form.zero_flag);
        assert!(form.residual.is_inact());
        assert!(congruent(&p("(send x[a,b] | 0)"), &p("send x[a,b]")));
    }

    #[test]
    fn matched_forwarder_vanishes() {
        let form = normalize(&p("new (x y) fwd [x<>y]"));
        assert!(form.zero_flag);
    }

    #[test]
    fn unused_restriction_over_unit() {
        assert!(congruent(
            &p("new (x y) (send u[a,b] | 0)"),
            &p("send u[a,b]")
        ));
    }

    #[test]
    fn par_comm_assoc() {
        let a = p("((send x[a,b] | recv y(v,w). 0) | fwd [u<>z])");
        let b = p("(fwd [u<>z] | (recv y(v,w). 0 | send x[a,b]))");
        assert!(congruent(&a, &b));
    }

    #[test]
    fn res_comm_and_symm() {
        let a = p("new (x y) new (u w) (send x[u,a] | recv y(v,z). 0)");
        let b = p("new (w u) new (y x) (recv y(v,z). 0 | send x[u,a])");
        assert!(congruent(&a, &b));
        let ann_a = p("new (x: end *[1] end y) (send x[a,b] | recv y(v,w). 0)");
        let ann_b = p("new (y: end %[1] end x) (recv y(v,w). 0 | send x[a,b])");
        assert_eq!(
            normalize(&ann_a).residual,
            normalize(&ann_b).residual,
            "binder swap flips the annotation"
        );
    }

    #[test]
    fn scope_extrusion_is_congruent() {
        let nested = p("(recv q(v,w). 0 | new (x y) (send x[a,b] | recv y(c,d). 0))");
        let flat = p("new (x y) (recv q(v,w). 0 | (send x[a,b] | recv y(c,d). 0))");
        assert!(congruent(&nested, &flat));
        let extruded = scope_extrude(&nested);
        assert!(matches!(extruded, Process::Res { .. }));
        assert!(congruent(&extruded, &nested));
    }

    #[test]
    fn distinct_processes_stay_distinct() {
        assert!(!congruent(&p("send x[a,b]"), &p("recv x(a,b). 0")));
        assert!(!congruent(&p("send x[a,b]"), &p("send x[b,a]")));
        assert!(!congruent(&p("0"), &p("send x[a,b]")));
    }

    #[test]
    fn normalize_is_idempotent_and_sound() {
        let samples = [
            "new (x y) (send x[a,b] | (recv y(v,w). send v[c,w2] | 0))",
            "(new (x y) fwd [x<>y] | send u[a,b])",
            "bra x(z) > { go: new (u w) (send u[z,a] | recv w(c,d). 0), halt: 0 }",
        ];
        for src in samples {
            let q = p(src);
            let once = normalize(&q).residual;
            let twice = normalize(&once).residual;
            assert_eq!(once, twice, "idempotence for {src}");
            assert!(congruent(&q, &once), "soundness for {src}");
        }
    }

    #[test]
    fn fwd_symmetry() {
        assert!(congruent(&p("fwd [x<>y]"), &p("fwd [y<>x]")));
        assert!(congruent_acp(&p("fwd [x<>y]"), &p("fwd [y<>x]")));
    }

    #[test]
    fn acp_cut_symmetry_and_assoc() {
        let a = p("new (x y) (send x[a,b] | recv y(v,w). 0)");
        let b = p("new (y x) (recv y(v,w). 0 | send x[a,b])");
        assert!(congruent_acp(&a, &b));
        let l = p("new (x y) (send x[a,b] | new (u w) (recv y(v,z2). send u[c,d] | recv w(v2,z3). 0))");
        let r = p("new (u w) (new (x y) (send x[a,b] | recv y(v,z2). send u[c,d]) | recv w(v2,z3). 0)");
        assert!(congruent_acp(&l, &r));
        assert!(!congruent_acp(&a, &p("new (x y) (send x[a,b] | recv y(v,w). send v[c,c2])")));
    }

    #[test]
    fn cut_rebuild_produces_cut_shape() {
        let prenex = p("new (x y) new (u w) ((send x[a,u] | recv y(v,z). 0) | recv w(c,d). 0)");
        let rebuilt = cut_rebuild(&prenex).expect("tree-shaped");
        fn cut_shaped(q: &Process) -> bool {
            match q {
                Process::Res { body, .. } => match &**body {
                    Process::Par(l, r) => cut_shaped(l) && cut_shaped(r),
                    _ => false,
                },
                Process::Par(..) => false,
                _ => true,
            }
        }
        assert!(cut_shaped(&rebuilt));
        assert!(congruent(&rebuilt, &prenex));
        let cyclic = p("new (x y) new (u w) (recv x(v,z). send u[a,b] | recv w(v2,z2). send y[c,d])");
        assert!(cut_rebuild(&cyclic).is_none());
    }

    #[test]
    fn zero_flag_matches_congruence_with_inact() {
        for src in ["0", "(0 | 0)", "new (x y) fwd [x<>y]", "send x[a,b]"] {
            let q = p(src);
            assert_eq!(normalize(&q).zero_flag, congruent(&q, &Process::Inact), "{src}");
        }
    }

    #[test]
    fn branch_bodies_normalize() {
        let a = p("bra x(z) > { go: (0 | send z[a,b]) }");
        let b = Process::bra(
            Name::intern("x"),
            Name::intern("z"),
            vec![(Label::new("go"), p("send z[a,b]"))],
        );
        assert!(congruent(&a, &b));
    }
}
