//! Small-step reduction: redex enumeration on the canonical prenex form,
//! single-trace execution, and breadth-first exploration of the reduction
//! graph quotiented by structural congruence.
//!
//! Closure under congruence is obtained by searching the canonical form
//! rather than by rule inference: every state is normalized before its
//! redexes are listed, so a redex is a position in a deterministic
//! decomposition and `step` is a pure function of that form.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::congruence::{normalize, CanonicalForm};
use crate::name::{Label, Name};
use crate::print::{assign_display, occurrence_order, print_process};
use crate::process::{free_names, substitute, Process};
use crate::types::SessionType;

pub const DEFAULT_MAX_STEPS: usize = 10_000;
pub const DEFAULT_MAX_STATES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RedexKind {
    SendRecv,
    SelBra,
    Fwd,
}

impl fmt::Display for RedexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RedexKind::SendRecv => "send-recv",
            RedexKind::SelBra => "sel-bra",
            RedexKind::Fwd => "fwd",
        })
    }
}

/// A position in the canonical prenex form at which one reduction axiom
/// applies: the restriction pair it consumes and the children involved.
/// Names are those of the canonical form, so a redex is only meaningful
/// for the state it was enumerated from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Redex {
    pub kind: RedexKind,
    pub pair_index: usize,
    pub pair: (Name, Name),
    /// Child holding the output particle (send, selection, or forwarder).
    pub out_child: usize,
    /// Child holding the blocked input (receive or branching); none for fwd.
    pub in_child: Option<usize>,
    /// Selected label for sel-bra.
    pub label: Option<Label>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("redex does not match the current state")]
    RedexStale,
}

/// A maximal (or step-bounded) run: the chosen redex and the canonical
/// state after it, for each step taken.
#[derive(Debug, Clone)]
pub struct Trace {
    pub initial: Process,
    pub steps: Vec<(Redex, Process)>,
    pub terminal: CanonicalForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    First,
    Random(u64),
}

#[derive(Debug, Clone)]
pub struct ExplorationReport {
    pub states_visited: usize,
    pub terminals: Vec<CanonicalForm>,
    pub deadlocked: Vec<CanonicalForm>,
    pub truncated: bool,
}

type Pairs = Vec<(Name, Name, Option<SessionType>)>;

/// Decomposes the canonical form of `p` into its restriction chain and the
/// flat list of parallel children. Deterministic in the congruence class.
fn view(p: &Process) -> (Pairs, Vec<Process>) {
    let mut cur = normalize(p).residual;
    let mut pairs = Vec::new();
    while let Process::Res { a, b, ann, body } = cur {
        pairs.push((a, b, ann));
        cur = *body;
    }
    let mut children = Vec::new();
    fn spine(p: Process, out: &mut Vec<Process>) {
        match p {
            Process::Par(l, r) => {
                spine(*l, out);
                spine(*r, out);
            }
            Process::Inact => {}
            other => out.push(other),
        }
    }
    spine(cur, &mut children);
    (pairs, children)
}

/// Occurrences of pair endpoints in a child outside its own subject
/// position. A synchronization on (a,b) is enabled only when the two
/// subjects are the sole uses of the pair, otherwise the restriction
/// cannot be narrowed onto the two particles.
fn stray_uses(child: &Process, a: Name, b: Name) -> bool {
    let touches = |n: Name| n == a || n == b;
    match child {
        Process::Send { payload, cont, .. } => touches(*payload) || touches(*cont),
        Process::Sel { cont, .. } => touches(*cont),
        Process::Recv { body, .. } => {
            let fv = free_names(body);
            fv.contains(&a) || fv.contains(&b)
        }
        Process::Bra { branches, .. } => branches.values().any(|body| {
            let fv = free_names(body);
            fv.contains(&a) || fv.contains(&b)
        }),
        _ => true,
    }
}

fn redexes_in(pairs: &Pairs, children: &[Process]) -> Vec<Redex> {
    let uses: Vec<BTreeSet<Name>> = children.iter().map(free_names).collect();
    let mut out = Vec::new();
    for (k, (a, b, _)) in pairs.iter().enumerate() {
        let holders: Vec<usize> = (0..children.len())
            .filter(|&i| uses[i].contains(a) || uses[i].contains(b))
            .collect();
        // Forwarders absorb the rest of the level, so they need no
        // exclusivity; the other axioms consume exactly two children.
        for &i in &holders {
            if let Process::Fwd(u, v) = &children[i] {
                for (end, z) in [(*u, *v), (*v, *u)] {
                    let partner = if end == *a {
                        *b
                    } else if end == *b {
                        *a
                    } else {
                        continue;
                    };
                    if z != partner {
                        out.push(Redex {
                            kind: RedexKind::Fwd,
                            pair_index: k,
                            pair: (end, partner),
                            out_child: i,
                            in_child: None,
                            label: None,
                        });
                    }
                }
            }
        }
        if holders.len() != 2 {
            continue;
        }
        if holders
            .iter()
            .any(|&i| stray_uses(&children[i], *a, *b))
        {
            continue;
        }
        for &i in &holders {
            let (subj_out, label) = match &children[i] {
                Process::Send { subject, .. } => (*subject, None),
                Process::Sel { subject, label, .. } => (*subject, Some(label.clone())),
                _ => continue,
            };
            let partner = if subj_out == *a {
                *b
            } else if subj_out == *b {
                *a
            } else {
                continue;
            };
            for &j in &holders {
                if j == i {
                    continue;
                }
                let matches = match (&children[i], &children[j]) {
                    (Process::Send { .. }, Process::Recv { subject, .. }) => *subject == partner,
                    (Process::Sel { label, .. }, Process::Bra { subject, branches, .. }) => {
                        *subject == partner && branches.contains_key(label)
                    }
                    _ => false,
                };
                if matches {
                    out.push(Redex {
                        kind: if label.is_some() { RedexKind::SelBra } else { RedexKind::SendRecv },
                        pair_index: k,
                        pair: (subj_out, partner),
                        out_child: i,
                        in_child: Some(j),
                        label: label.clone(),
                    });
                }
            }
        }
    }
    out
}

/// Every redex enabled in `p` up to structural congruence.
pub fn find_redexes(p: &Process) -> Vec<Redex> {
    let (pairs, children) = view(p);
    redexes_in(&pairs, &children)
}

/// Applies one redex found by `find_redexes` on (the congruence class of)
/// the same state. The result is not itself canonical.
pub fn step(p: &Process, r: &Redex) -> Result<Process, StepError> {
    let (pairs, children) = view(p);
    if !redexes_in(&pairs, &children).contains(r) {
        return Err(StepError::RedexStale);
    }
    let mut rest: Vec<Process> = Vec::new();
    let mut body = Process::Inact;
    match r.kind {
        RedexKind::SendRecv => {
            let j = r.in_child.expect("send-recv has an input child");
            let (payload, cont) = match &children[r.out_child] {
                Process::Send { payload, cont, .. } => (*payload, *cont),
                _ => unreachable!("validated above"),
            };
            if let Process::Recv { payload: py, cont: cy, body: b, .. } = &children[j] {
                let mut map = BTreeMap::new();
                map.insert(*py, payload);
                map.insert(*cy, cont);
                body = substitute(b, &map);
            }
            for (idx, c) in children.iter().enumerate() {
                if idx != r.out_child && idx != j {
                    rest.push(c.clone());
                }
            }
        }
        RedexKind::SelBra => {
            let j = r.in_child.expect("sel-bra has an input child");
            let cont = match &children[r.out_child] {
                Process::Sel { cont, .. } => *cont,
                _ => unreachable!("validated above"),
            };
            if let Process::Bra { binder, branches, .. } = &children[j] {
                let chosen = &branches[r.label.as_ref().expect("sel-bra carries a label")];
                let mut map = BTreeMap::new();
                map.insert(*binder, cont);
                body = substitute(chosen, &map);
            }
            for (idx, c) in children.iter().enumerate() {
                if idx != r.out_child && idx != j {
                    rest.push(c.clone());
                }
            }
        }
        RedexKind::Fwd => {
            let (end, partner) = r.pair;
            let z = match &children[r.out_child] {
                Process::Fwd(u, v) if *u == end => *v,
                Process::Fwd(u, _) => *u,
                _ => unreachable!("validated above"),
            };
            let mut map = BTreeMap::new();
            map.insert(partner, z);
            for (idx, c) in children.iter().enumerate() {
                if idx != r.out_child {
                    rest.push(substitute(c, &map));
                }
            }
        }
    }
    rest.push(body);
    let mut result = Process::par_all(rest);
    for (idx, (a, b, ann)) in pairs.into_iter().enumerate().rev() {
        if idx == r.pair_index {
            continue;
        }
        result = Process::Res { a, b, ann, body: Box::new(result) };
    }
    Ok(result)
}

/// Runs `p` under the given strategy until stuck or `max_steps` reductions.
pub fn run(p: &Process, max_steps: usize, strategy: Strategy) -> Trace {
    let mut rng = match strategy {
        Strategy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Strategy::First => None,
    };
    let mut cur = normalize(p);
    let mut steps = Vec::new();
    for _ in 0..max_steps {
        let rs = find_redexes(&cur.residual);
        if rs.is_empty() {
            break;
        }
        let idx = match &mut rng {
            Some(rng) => rng.gen_range(0..rs.len()),
            None => 0,
        };
        let next = step(&cur.residual, &rs[idx]).expect("redex from the same state");
        cur = normalize(&next);
        steps.push((rs[idx].clone(), cur.residual.clone()));
    }
    Trace { initial: p.clone(), steps, terminal: cur }
}

/// Breadth-first exploration of the reduction graph modulo congruence, with
/// states identified by their canonical printed form.
pub fn explore(p: &Process, max_states: usize) -> ExplorationReport {
    let root = normalize(p);
    let mut visited: BTreeSet<String> = BTreeSet::new();
    visited.insert(crate::print::hash_print(&root.residual));
    let mut queue: VecDeque<CanonicalForm> = VecDeque::new();
    queue.push_back(root);
    let mut terminals: Vec<CanonicalForm> = Vec::new();
    let mut truncated = false;
    while let Some(state) = queue.pop_front() {
        let rs = find_redexes(&state.residual);
        if rs.is_empty() {
            terminals.push(state);
            continue;
        }
        for r in rs {
            let next = step(&state.residual, &r).expect("redex from the same state");
            let succ = normalize(&next);
            let key = crate::print::hash_print(&succ.residual);
            if visited.contains(&key) {
                continue;
            }
            if visited.len() >= max_states {
                truncated = true;
                continue;
            }
            visited.insert(key);
            queue.push_back(succ);
        }
    }
    terminals.sort_by_key(|c| crate::print::hash_print(&c.residual));
    let deadlocked = terminals.iter().filter(|c| !c.zero_flag).cloned().collect();
    ExplorationReport {
        states_visited: visited.len(),
        terminals,
        deadlocked,
        truncated,
    }
}

/// One line per step: `step <n>: <kind> on (x,y) -> <state>`, with the pair
/// rendered using the display names of the state the step was taken from.
pub fn render_trace(t: &Trace) -> String {
    let mut out = String::new();
    let mut pre = normalize(&t.initial).residual;
    for (i, (r, post)) in t.steps.iter().enumerate() {
        let mut order = Vec::new();
        occurrence_order(&pre, &mut order);
        let disp = assign_display(order);
        out.push_str(&format!(
            "step {}: {} on ({},{}) -> {}\n",
            i + 1,
            r.kind,
            disp(r.pair.0),
            disp(r.pair.1),
            print_process(post),
        ));
        pre = post.clone();
    }
    out
}
