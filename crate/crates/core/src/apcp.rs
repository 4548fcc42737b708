//! Priority constraint generation and solving for the priority-aware
//! discipline.
//!
//! Outputs must act before anything they carry or continue with, and inputs
//! must be ready before everything else their continuation still owes; dual
//! endpoints share priorities connective by connective. Collecting these
//! requirements over a well-typed process yields a strict order problem: a
//! solution assigns a number to every priority variable, and an
//! unsatisfiable core (a cycle, or a chain that overruns a pinned constant)
//! witnesses the blocking dependency.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::checker::{
    finish, leftover_failure, prepare, walk_process, CheckFailure, CheckVerdict, Discipline,
};
use crate::process::Process;
use crate::types::{Priority, SessionType, TypingContext};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Constraint {
    /// Strictly below: lhs < rhs.
    Lt(Priority, Priority),
    /// Unified: lhs = rhs.
    Eq(Priority, Priority),
    /// Strictly below every element of the set.
    LtMin(Priority, BTreeSet<Priority>),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Lt(a, b) => write!(f, "{a} < {b}"),
            Constraint::Eq(a, b) => write!(f, "{a} = {b}"),
            Constraint::LtMin(a, set) => {
                write!(f, "{a} < min(")?;
                for (i, p) in set.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Flattens every bound-by-minimum constraint into plain inequalities and
/// returns the result sorted and deduplicated.
pub fn expand(cs: &[Constraint]) -> Vec<Constraint> {
    let mut out = Vec::new();
    for c in cs {
        match c {
            Constraint::LtMin(l, rs) => {
                for r in rs {
                    out.push(Constraint::Lt(l.clone(), r.clone()));
                }
            }
            other => out.push(other.clone()),
        }
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrioritySolution {
    /// A value for every variable mentioned by the constraints.
    Assignment(BTreeMap<String, u64>),
    /// A minimal unsatisfiable subset of the expanded constraints.
    Infeasible(Vec<Constraint>),
}

/// Output of constraint generation over a structurally well-typed process.
#[derive(Debug, Clone)]
pub struct Generated {
    pub constraints: Vec<Constraint>,
    /// The checked process with every connective annotated (fresh variables
    /// fill the gaps the source left open).
    pub process: Process,
    /// The context in the same fully-annotated form.
    pub context: TypingContext,
    pub residual: TypingContext,
}

#[derive(Debug, Clone)]
pub struct ApcpReport {
    pub verdict: CheckVerdict,
    pub constraints: Vec<Constraint>,
    /// Absent when the structural check already failed.
    pub solution: Option<PrioritySolution>,
    /// On acceptance, annotations carry the solved constants.
    pub process: Process,
    pub context: TypingContext,
}

struct FreshPri {
    used: BTreeSet<String>,
    next: u64,
}

impl FreshPri {
    fn new() -> Self {
        FreshPri { used: BTreeSet::new(), next: 0 }
    }

    fn scan_type(&mut self, t: &SessionType) {
        match t {
            SessionType::Tensor { pri, payload, cont }
            | SessionType::Par { pri, payload, cont } => {
                if let Some(Priority::Var(v)) = pri {
                    self.used.insert(v.clone());
                }
                self.scan_type(payload);
                self.scan_type(cont);
            }
            SessionType::Plus { pri, branches } | SessionType::With { pri, branches } => {
                if let Some(Priority::Var(v)) = pri {
                    self.used.insert(v.clone());
                }
                for t in branches.values() {
                    self.scan_type(t);
                }
            }
            SessionType::Closed | SessionType::Opaque { .. } => {}
        }
    }

    fn scan_process(&mut self, p: &Process) {
        match p {
            Process::Res { ann, body, .. } => {
                if let Some(t) = ann {
                    self.scan_type(t);
                }
                self.scan_process(body);
            }
            Process::Recv { body, .. } => self.scan_process(body),
            Process::Bra { branches, .. } => {
                for b in branches.values() {
                    self.scan_process(b);
                }
            }
            Process::Par(l, r) => {
                self.scan_process(l);
                self.scan_process(r);
            }
            _ => {}
        }
    }

    fn next_var(&mut self) -> Priority {
        loop {
            let name = format!("p{}", self.next);
            self.next += 1;
            if self.used.insert(name.clone()) {
                return Priority::Var(name);
            }
        }
    }

    fn fill(&mut self, pri: &Option<Priority>) -> Result<Option<Priority>, String> {
        match pri {
            None => Ok(Some(self.next_var())),
            Some(Priority::Omega) => {
                Err("the top priority cannot annotate a connective".to_string())
            }
            Some(p) => Ok(Some(p.clone())),
        }
    }

    fn annotate_type(&mut self, t: &SessionType) -> Result<SessionType, String> {
        Ok(match t {
            SessionType::Closed => SessionType::Closed,
            SessionType::Opaque { .. } => t.clone(),
            SessionType::Tensor { pri, payload, cont } => SessionType::Tensor {
                pri: self.fill(pri)?,
                payload: Box::new(self.annotate_type(payload)?),
                cont: Box::new(self.annotate_type(cont)?),
            },
            SessionType::Par { pri, payload, cont } => SessionType::Par {
                pri: self.fill(pri)?,
                payload: Box::new(self.annotate_type(payload)?),
                cont: Box::new(self.annotate_type(cont)?),
            },
            SessionType::Plus { pri, branches } => SessionType::Plus {
                pri: self.fill(pri)?,
                branches: self.annotate_branches(branches)?,
            },
            SessionType::With { pri, branches } => SessionType::With {
                pri: self.fill(pri)?,
                branches: self.annotate_branches(branches)?,
            },
        })
    }

    fn annotate_branches(
        &mut self,
        branches: &BTreeMap<crate::name::Label, SessionType>,
    ) -> Result<BTreeMap<crate::name::Label, SessionType>, String> {
        branches
            .iter()
            .map(|(l, t)| Ok((l.clone(), self.annotate_type(t)?)))
            .collect()
    }

    fn annotate_process(&mut self, p: &Process) -> Result<Process, String> {
        Ok(match p {
            Process::Res { a, b, ann, body } => Process::Res {
                a: *a,
                b: *b,
                ann: match ann {
                    Some(t) => Some(self.annotate_type(t)?),
                    None => None,
                },
                body: Box::new(self.annotate_process(body)?),
            },
            Process::Recv { subject, payload, cont, body } => Process::Recv {
                subject: *subject,
                payload: *payload,
                cont: *cont,
                body: Box::new(self.annotate_process(body)?),
            },
            Process::Bra { subject, binder, branches } => Process::Bra {
                subject: *subject,
                binder: *binder,
                branches: branches
                    .iter()
                    .map(|(l, b)| Ok((l.clone(), self.annotate_process(b)?)))
                    .collect::<Result<_, String>>()?,
            },
            Process::Par(l, r) => Process::Par(
                Box::new(self.annotate_process(l)?),
                Box::new(self.annotate_process(r)?),
            ),
            other => other.clone(),
        })
    }
}

/// Annotates every connective (fresh variables where the source omitted a
/// priority), runs the structural check, and collects the ordering
/// requirements it encounters.
pub fn generate_constraints(
    p: &Process,
    g: &TypingContext,
) -> Result<Generated, CheckFailure> {
    let q = prepare(p, g);
    let mut fresh = FreshPri::new();
    for (_, t) in g.iter() {
        fresh.scan_type(t);
    }
    fresh.scan_process(&q);
    let reject = |message: String| CheckFailure {
        rule: "priority-domain".to_string(),
        path: "root".to_string(),
        message,
    };
    let context = {
        let mut entries = Vec::new();
        for (n, t) in g.iter() {
            entries.push((*n, fresh.annotate_type(t).map_err(&reject)?));
        }
        TypingContext::from_entries(entries).expect("context had no duplicates")
    };
    let q = fresh.annotate_process(&q).map_err(&reject)?;
    let mut constraints = Vec::new();
    let residual = walk_process(&q, context.clone(), false, Some(&mut constraints))?;
    if let Some(f) = leftover_failure(&residual) {
        return Err(f);
    }
    Ok(Generated { constraints, process: q, context, residual })
}

/// Checks `p` against `g` and decides whether the collected priority
/// constraints admit an assignment.
pub fn check_apcp(p: &Process, g: &TypingContext) -> ApcpReport {
    let gen = match generate_constraints(p, g) {
        Err(f) => {
            return ApcpReport {
                verdict: finish(Discipline::Apcp, Err(f)),
                constraints: Vec::new(),
                solution: None,
                process: p.clone(),
                context: g.clone(),
            }
        }
        Ok(gen) => gen,
    };
    let solution = solve(&gen.constraints);
    match &solution {
        PrioritySolution::Assignment(asg) => ApcpReport {
            verdict: CheckVerdict {
                accepted: true,
                discipline: Discipline::Apcp,
                residual: gen.residual,
                failure: None,
            },
            process: apply_assignment_process(&gen.process, asg),
            context: apply_assignment_context(&gen.context, asg),
            constraints: gen.constraints,
            solution: Some(solution),
        },
        PrioritySolution::Infeasible(witness) => {
            let listed: Vec<String> = witness.iter().map(|c| c.to_string()).collect();
            ApcpReport {
                verdict: finish(
                    Discipline::Apcp,
                    Err(CheckFailure {
                        rule: "priority".to_string(),
                        path: "root".to_string(),
                        message: format!(
                            "no priority assignment satisfies {{{}}}",
                            listed.join(", ")
                        ),
                    }),
                ),
                constraints: gen.constraints,
                solution: Some(solution),
                process: gen.process,
                context: gen.context,
            }
        }
    }
}

fn apply_assignment_pri(pri: &Option<Priority>, asg: &BTreeMap<String, u64>) -> Option<Priority> {
    match pri {
        Some(Priority::Var(v)) => {
            Some(Priority::Const(asg.get(v).copied().unwrap_or(0)))
        }
        other => other.clone(),
    }
}

/// Replaces solved variables by their constants; variables the constraints
/// never mention are free and take 0.
pub fn apply_assignment_type(t: &SessionType, asg: &BTreeMap<String, u64>) -> SessionType {
    match t {
        SessionType::Closed => SessionType::Closed,
        SessionType::Opaque { .. } => t.clone(),
        SessionType::Tensor { pri, payload, cont } => SessionType::Tensor {
            pri: apply_assignment_pri(pri, asg),
            payload: Box::new(apply_assignment_type(payload, asg)),
            cont: Box::new(apply_assignment_type(cont, asg)),
        },
        SessionType::Par { pri, payload, cont } => SessionType::Par {
            pri: apply_assignment_pri(pri, asg),
            payload: Box::new(apply_assignment_type(payload, asg)),
            cont: Box::new(apply_assignment_type(cont, asg)),
        },
        SessionType::Plus { pri, branches } => SessionType::Plus {
            pri: apply_assignment_pri(pri, asg),
            branches: branches
                .iter()
                .map(|(l, t)| (l.clone(), apply_assignment_type(t, asg)))
                .collect(),
        },
        SessionType::With { pri, branches } => SessionType::With {
            pri: apply_assignment_pri(pri, asg),
            branches: branches
                .iter()
                .map(|(l, t)| (l.clone(), apply_assignment_type(t, asg)))
                .collect(),
        },
    }
}

pub fn apply_assignment_context(
    g: &TypingContext,
    asg: &BTreeMap<String, u64>,
) -> TypingContext {
    let entries: Vec<_> = g
        .iter()
        .map(|(n, t)| (*n, apply_assignment_type(t, asg)))
        .collect();
    TypingContext::from_entries(entries).expect("names unchanged")
}

pub fn apply_assignment_process(p: &Process, asg: &BTreeMap<String, u64>) -> Process {
    match p {
        Process::Res { a, b, ann, body } => Process::Res {
            a: *a,
            b: *b,
            ann: ann.as_ref().map(|t| apply_assignment_type(t, asg)),
            body: Box::new(apply_assignment_process(body, asg)),
        },
        Process::Recv { subject, payload, cont, body } => Process::Recv {
            subject: *subject,
            payload: *payload,
            cont: *cont,
            body: Box::new(apply_assignment_process(body, asg)),
        },
        Process::Bra { subject, binder, branches } => Process::Bra {
            subject: *subject,
            binder: *binder,
            branches: branches
                .iter()
                .map(|(l, b)| (l.clone(), apply_assignment_process(b, asg)))
                .collect(),
        },
        Process::Par(l, r) => Process::Par(
            Box::new(apply_assignment_process(l, asg)),
            Box::new(apply_assignment_process(r, asg)),
        ),
        other => other.clone(),
    }
}

/// Decides satisfiability of a constraint set over naturals with a top
/// element: equalities merge variables, strict bounds with the top element
/// on the right are vacuous and with it on the left impossible, and what
/// remains is acyclicity of the strict order. Satisfiable sets get the
/// least assignment (longest incoming chain, shifted by pinned constants);
/// unsatisfiable ones get a witness subset.
pub fn solve(cs: &[Constraint]) -> PrioritySolution {
    let expanded = expand(cs);

    let mut nodes: BTreeSet<Priority> = BTreeSet::new();
    let mut eq_edges: BTreeMap<Priority, Vec<(Priority, Constraint)>> = BTreeMap::new();
    for c in &expanded {
        match c {
            Constraint::Eq(a, b) => {
                if a == b {
                    continue;
                }
                if *a == Priority::Omega || *b == Priority::Omega {
                    // Annotation filling forbids the top element, so a
                    // unification against it cannot arise from user input.
                    panic!("internal invariant violation: unification with the top priority");
                }
                nodes.insert(a.clone());
                nodes.insert(b.clone());
                eq_edges.entry(a.clone()).or_default().push((b.clone(), c.clone()));
                eq_edges.entry(b.clone()).or_default().push((a.clone(), c.clone()));
            }
            Constraint::Lt(a, b) => {
                if *a == Priority::Omega {
                    return PrioritySolution::Infeasible(vec![c.clone()]);
                }
                nodes.insert(a.clone());
                if *b != Priority::Omega {
                    nodes.insert(b.clone());
                }
            }
            Constraint::LtMin(..) => unreachable!("expand removed these"),
        }
    }

    // Unify into components; each node maps to its least member.
    let mut rep: BTreeMap<Priority, Priority> = BTreeMap::new();
    let mut members: BTreeMap<Priority, Vec<Priority>> = BTreeMap::new();
    for n in &nodes {
        if rep.contains_key(n) {
            continue;
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([n.clone()]);
        seen.insert(n.clone());
        while let Some(u) = queue.pop_front() {
            for (v, _) in eq_edges.get(&u).into_iter().flatten() {
                if seen.insert(v.clone()) {
                    queue.push_back(v.clone());
                }
            }
        }
        let r = seen.iter().next().expect("component is nonempty").clone();
        for m in &seen {
            rep.insert(m.clone(), r.clone());
        }
        members.insert(r, seen.into_iter().collect());
    }

    // A component pinned to two different constants is already absurd; the
    // witness is the equality path between them.
    let mut pin: BTreeMap<Priority, (u64, Priority)> = BTreeMap::new();
    for (r, ms) in &members {
        let consts: Vec<(u64, Priority)> = ms
            .iter()
            .filter_map(|m| match m {
                Priority::Const(v) => Some((*v, m.clone())),
                _ => None,
            })
            .collect();
        for (v, node) in &consts {
            if let Some((v0, node0)) = pin.get(r) {
                if v != v0 {
                    return PrioritySolution::Infeasible(eq_path(node0, node, &eq_edges));
                }
            } else {
                pin.insert(r.clone(), (*v, node.clone()));
            }
        }
    }

    // Strict order over component representatives.
    let mut adj: BTreeMap<Priority, Vec<(Priority, Constraint)>> = BTreeMap::new();
    let mut indeg: BTreeMap<Priority, usize> = members.keys().map(|r| (r.clone(), 0)).collect();
    for c in &expanded {
        if let Constraint::Lt(a, b) = c {
            if *b == Priority::Omega {
                continue;
            }
            let ra = rep[a].clone();
            let rb = rep[b].clone();
            *indeg.get_mut(&rb).unwrap() += 1;
            adj.entry(ra).or_default().push((rb, c.clone()));
        }
    }

    let mut queue: VecDeque<Priority> = indeg
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(r, _)| r.clone())
        .collect();
    let mut topo: Vec<Priority> = Vec::new();
    {
        let mut indeg = indeg.clone();
        while let Some(u) = queue.pop_front() {
            topo.push(u.clone());
            for (v, _) in adj.get(&u).into_iter().flatten() {
                let d = indeg.get_mut(v).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push_back(v.clone());
                }
            }
        }
    }
    if topo.len() < members.len() {
        let in_topo: BTreeSet<&Priority> = topo.iter().collect();
        let remaining: BTreeSet<Priority> = members
            .keys()
            .filter(|r| !in_topo.contains(r))
            .cloned()
            .collect();
        return PrioritySolution::Infeasible(shortest_cycle(&remaining, &adj, &eq_edges));
    }

    // Longest-path values; pinned components take exactly their constant.
    let mut val: BTreeMap<Priority, u64> = members.keys().map(|r| (r.clone(), 0)).collect();
    let mut pred: BTreeMap<Priority, (Priority, Constraint)> = BTreeMap::new();
    for u in &topo {
        if let Some((pv, node)) = pin.get(u) {
            if *pv < val[u] {
                return PrioritySolution::Infeasible(forcing_chain(u, node, &pred, &eq_edges));
            }
            *val.get_mut(u).unwrap() = *pv;
        }
        let base = val[u];
        for (v, c) in adj.get(u).into_iter().flatten() {
            if base + 1 > val[v] {
                *val.get_mut(v).unwrap() = base + 1;
                pred.insert(v.clone(), (u.clone(), c.clone()));
            }
        }
    }

    let mut asg: BTreeMap<String, u64> = BTreeMap::new();
    for n in &nodes {
        if let Priority::Var(v) = n {
            asg.insert(v.clone(), val[&rep[n]]);
        }
    }
    PrioritySolution::Assignment(asg)
}

/// Shortest equality path between two members of one component.
fn eq_path(
    from: &Priority,
    to: &Priority,
    eq_edges: &BTreeMap<Priority, Vec<(Priority, Constraint)>>,
) -> Vec<Constraint> {
    if from == to {
        return Vec::new();
    }
    let mut parent: BTreeMap<Priority, (Priority, Constraint)> = BTreeMap::new();
    let mut queue = VecDeque::from([from.clone()]);
    while let Some(u) = queue.pop_front() {
        for (v, c) in eq_edges.get(&u).into_iter().flatten() {
            if *v == *from || parent.contains_key(v) {
                continue;
            }
            parent.insert(v.clone(), (u.clone(), c.clone()));
            if v == to {
                let mut path = Vec::new();
                let mut cur = to.clone();
                while cur != *from {
                    let (p, c) = parent[&cur].clone();
                    path.push(c);
                    cur = p;
                }
                path.reverse();
                return path;
            }
            queue.push_back(v.clone());
        }
    }
    unreachable!("both nodes lie in one equality component");
}

/// Interleaves strict hops with the equality constraints gluing one hop's
/// endpoint to the next hop's start (they may be different members of the
/// same component).
fn glue_hops(
    hops: &[Constraint],
    cyclic: bool,
    eq_edges: &BTreeMap<Priority, Vec<(Priority, Constraint)>>,
) -> Vec<Constraint> {
    let endpoint = |c: &Constraint| match c {
        Constraint::Lt(a, b) => (a.clone(), b.clone()),
        _ => unreachable!("hops are strict bounds"),
    };
    let mut out = Vec::new();
    for (i, hop) in hops.iter().enumerate() {
        out.push(hop.clone());
        let (_, y) = endpoint(hop);
        let next = if i + 1 < hops.len() {
            Some(&hops[i + 1])
        } else if cyclic {
            Some(&hops[0])
        } else {
            None
        };
        if let Some(next) = next {
            let (x, _) = endpoint(next);
            if y != x {
                out.extend(eq_path(&y, &x, eq_edges));
            }
        }
    }
    out
}

/// Shortest strict cycle among the representatives Kahn's algorithm could
/// not order, spelled out in the original constraints.
fn shortest_cycle(
    remaining: &BTreeSet<Priority>,
    adj: &BTreeMap<Priority, Vec<(Priority, Constraint)>>,
    eq_edges: &BTreeMap<Priority, Vec<(Priority, Constraint)>>,
) -> Vec<Constraint> {
    let mut best: Option<Vec<Constraint>> = None;
    for start in remaining {
        let mut parent: BTreeMap<Priority, (Priority, Constraint)> = BTreeMap::new();
        let mut queue = VecDeque::from([start.clone()]);
        'bfs: while let Some(u) = queue.pop_front() {
            for (v, c) in adj.get(&u).into_iter().flatten() {
                if !remaining.contains(v) {
                    continue;
                }
                if v == start {
                    let mut hops = vec![c.clone()];
                    let mut cur = u.clone();
                    while cur != *start {
                        let (p, pc) = parent[&cur].clone();
                        hops.push(pc);
                        cur = p;
                    }
                    hops.reverse();
                    if best.as_ref().is_none_or(|b| hops.len() < b.len()) {
                        best = Some(hops);
                    }
                    break 'bfs;
                }
                if !parent.contains_key(v) {
                    parent.insert(v.clone(), (u.clone(), c.clone()));
                    queue.push_back(v.clone());
                }
            }
        }
    }
    let hops = best.expect("a cycle exists among the unordered nodes");
    glue_hops(&hops, true, eq_edges)
}

/// The chain of strict bounds that forces a component's value past its
/// pinned constant.
fn forcing_chain(
    u: &Priority,
    pin_node: &Priority,
    pred: &BTreeMap<Priority, (Priority, Constraint)>,
    eq_edges: &BTreeMap<Priority, Vec<(Priority, Constraint)>>,
) -> Vec<Constraint> {
    let mut hops = Vec::new();
    let mut cur = u.clone();
    while let Some((p, c)) = pred.get(&cur) {
        hops.push(c.clone());
        cur = p.clone();
    }
    hops.reverse();
    let mut out = glue_hops(&hops, false, eq_edges);
    if let Some(Constraint::Lt(_, y)) = hops.last().cloned() {
        out.extend(eq_path(&y, pin_node, eq_edges));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_context, parse_process};

    fn var(v: &str) -> Priority {
        Priority::Var(v.to_string())
    }

    fn lt(a: Priority, b: Priority) -> Constraint {
        Constraint::Lt(a, b)
    }

    fn p(src: &str) -> Process {
        parse_process(src).expect("test process parses")
    }

    fn ctx(src: &str) -> TypingContext {
        parse_context(src).expect("test context parses")
    }

    fn assignment(sol: PrioritySolution) -> BTreeMap<String, u64> {
        match sol {
            PrioritySolution::Assignment(a) => a,
            PrioritySolution::Infeasible(w) => panic!("expected a solution, got witness {w:?}"),
        }
    }

    fn witness(sol: PrioritySolution) -> Vec<Constraint> {
        match sol {
            PrioritySolution::Infeasible(w) => w,
            PrioritySolution::Assignment(a) => panic!("expected infeasibility, got {a:?}"),
        }
    }

    #[test]
    fn empty_set_is_trivially_satisfiable() {
        assert_eq!(assignment(solve(&[])), BTreeMap::new());
    }

    #[test]
    fn chains_get_the_least_assignment() {
        let asg = assignment(solve(&[lt(var("a"), var("b")), lt(var("b"), var("c"))]));
        assert_eq!(asg["a"], 0);
        assert_eq!(asg["b"], 1);
        assert_eq!(asg["c"], 2);
    }

    #[test]
    fn two_cycle_yields_both_constraints_as_witness() {
        let w = witness(solve(&[lt(var("a"), var("b")), lt(var("b"), var("a"))]));
        assert_eq!(w.len(), 2);
        assert!(w.contains(&lt(var("a"), var("b"))));
        assert!(w.contains(&lt(var("b"), var("a"))));
    }

    #[test]
    fn equalities_merge_variables() {
        let asg = assignment(solve(&[
            Constraint::Eq(var("a"), var("b")),
            lt(var("b"), var("c")),
        ]));
        assert_eq!(asg["a"], 0);
        assert_eq!(asg["b"], 0);
        assert_eq!(asg["c"], 1);
        // Merging makes the self-loop visible.
        let w = witness(solve(&[
            Constraint::Eq(var("a"), var("b")),
            lt(var("a"), var("b")),
        ]));
        assert!(w.contains(&lt(var("a"), var("b"))));
    }

    #[test]
    fn constants_pin_their_component() {
        let asg = assignment(solve(&[lt(var("a"), Priority::Const(5))]));
        assert_eq!(asg["a"], 0);
        let asg = assignment(solve(&[lt(Priority::Const(3), var("a"))]));
        assert_eq!(asg["a"], 4);
        let asg = assignment(solve(&[Constraint::Eq(var("a"), Priority::Const(7))]));
        assert_eq!(asg["a"], 7);
    }

    #[test]
    fn overrunning_a_constant_is_infeasible() {
        let w = witness(solve(&[
            lt(Priority::Const(3), var("a")),
            lt(var("a"), var("b")),
            lt(var("b"), Priority::Const(4)),
        ]));
        assert!(!w.is_empty());
        let w = witness(solve(&[lt(Priority::Const(5), Priority::Const(3))]));
        assert_eq!(w, vec![lt(Priority::Const(5), Priority::Const(3))]);
    }

    #[test]
    fn conflicting_constants_in_one_component() {
        let w = witness(solve(&[
            Constraint::Eq(var("a"), Priority::Const(1)),
            Constraint::Eq(var("a"), Priority::Const(2)),
        ]));
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn top_element_bounds() {
        let asg = assignment(solve(&[lt(var("a"), Priority::Omega)]));
        assert_eq!(asg["a"], 0);
        let w = witness(solve(&[lt(Priority::Omega, var("a"))]));
        assert_eq!(w, vec![lt(Priority::Omega, var("a"))]);
    }

    #[test]
    fn expansion_flattens_minimums() {
        let c = Constraint::LtMin(
            var("a"),
            [var("b"), var("c"), Priority::Omega].into_iter().collect(),
        );
        let flat = expand(&[c]);
        assert_eq!(
            flat,
            vec![
                lt(var("a"), var("b")),
                lt(var("a"), var("c")),
                lt(var("a"), Priority::Omega),
            ]
        );
    }

    #[test]
    fn send_constraints_on_an_annotated_pair() {
        let gen = generate_constraints(
            &p("send x[a,b]"),
            &ctx("x : end *[pi] end, a : end, b : end"),
        )
        .expect("structurally fine");
        assert_eq!(
            gen.constraints,
            vec![
                lt(var("pi"), Priority::Omega),
                lt(var("pi"), Priority::Omega),
            ]
        );
        let report = check_apcp(&p("send x[a,b]"), &ctx("x : end *[pi] end, a : end, b : end"));
        assert!(report.verdict.accepted);
    }

    #[test]
    fn omega_annotations_are_rejected_up_front() {
        let err = generate_constraints(
            &p("send x[a,b]"),
            &ctx("x : end *[omega] end, a : end, b : end"),
        )
        .expect_err("the top priority is not a legal annotation");
        assert_eq!(err.rule, "priority-domain");
    }

    #[test]
    fn deadlocked_pair_of_receives_is_infeasible() {
        let proc = p(concat!(
            "new (x : end %[pi] end y) new (u : end *[rho] end w) ",
            "(recv x(v,x2). send u[a,b] | recv w(z,w2). send y[c,d])"
        ));
        let g = ctx("a : end, b : end, c : end, d : end");
        let report = check_apcp(&proc, &g);
        assert!(!report.verdict.accepted);
        let w = witness(report.solution.expect("constraints were generated"));
        assert_eq!(w.len(), 2);
        assert!(w.contains(&lt(var("pi"), var("rho"))));
        assert!(w.contains(&lt(var("rho"), var("pi"))));
    }

    #[test]
    fn fixed_variant_requires_only_one_direction() {
        let proc = p(concat!(
            "new (x : end %[pi] end y) ",
            "(new (u : end *[rho] end w) (recv x(v,x2). send u[a,b] | recv w(z,w2). 0) ",
            "| send y[c,d])"
        ));
        let g = ctx("a : end, b : end, c : end, d : end");
        let report = check_apcp(&proc, &g);
        assert!(report.verdict.accepted, "{}", report.verdict.render());
        let flat = expand(&report.constraints);
        assert!(flat.contains(&lt(var("pi"), var("rho"))));
        assert!(!flat.contains(&lt(var("rho"), var("pi"))));
        let asg = assignment(report.solution.unwrap());
        assert!(asg["pi"] < asg["rho"]);
    }

    #[test]
    fn inference_fills_missing_annotations_with_fresh_variables() {
        let proc = p(concat!(
            "new (x : end % end y) ",
            "(new (u : end * end w) (recv x(v,x2). send u[a,b] | recv w(z,w2). 0) ",
            "| send y[c,d])"
        ));
        let g = ctx("a : end, b : end, c : end, d : end");
        let report = check_apcp(&proc, &g);
        assert!(report.verdict.accepted, "{}", report.verdict.render());
        // Solved annotations are concrete numbers.
        fn all_const(t: &SessionType) -> bool {
            match t {
                SessionType::Closed | SessionType::Opaque { .. } => true,
                SessionType::Tensor { pri, payload, cont }
                | SessionType::Par { pri, payload, cont } => {
                    matches!(pri, Some(Priority::Const(_)))
                        && all_const(payload)
                        && all_const(cont)
                }
                SessionType::Plus { pri, branches } | SessionType::With { pri, branches } => {
                    matches!(pri, Some(Priority::Const(_)))
                        && branches.values().all(all_const)
                }
            }
        }
        fn anns_const(p: &Process) -> bool {
            match p {
                Process::Res { ann, body, .. } => {
                    ann.as_ref().is_some_and(all_const) && anns_const(body)
                }
                Process::Recv { body, .. } => anns_const(body),
                Process::Bra { branches, .. } => branches.values().all(anns_const),
                Process::Par(l, r) => anns_const(l) && anns_const(r),
                _ => true,
            }
        }
        assert!(anns_const(&report.process));
    }

    #[test]
    fn dual_endpoints_share_priorities_through_forwarders() {
        // fwd [x<>y] with independently annotated types forces pi = rho.
        let g = ctx("x : end *[pi] end, y : end %[rho] end");
        let gen = generate_constraints(&p("fwd [x<>y]"), &g).expect("structurally fine");
        assert!(gen
            .constraints
            .contains(&Constraint::Eq(var("rho"), var("pi"))));
        let report = check_apcp(&p("fwd [x<>y]"), &g);
        let asg = assignment(report.solution.unwrap());
        assert_eq!(asg["pi"], asg["rho"]);
    }
}
