//! Leftover-style linear type checking for the plain discipline and its
//! cut-restricted variant, plus the shared walker that the priority-aware
//! discipline layers constraint generation onto.
//!
//! The context is threaded through the term: each leaf removes the
//! assignments it consumes and returns the rest, parallel composition hands
//! the right component whatever the left one did not use, and binders are
//! pushed into the context for the scope of their subterm. An entry of type
//! `end` may be left over anywhere; any other leftover is a linearity
//! violation at the point it is finally discharged.

use std::collections::BTreeSet;
use std::fmt;

use crate::apcp::Constraint;
use crate::name::{Label, Name};
use crate::print::print_type;
use crate::process::{free_names, Process};
use crate::types::{dual, priority_of, Priority, SessionType, TypingContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discipline {
    Ap,
    Acp,
    Apcp,
}

impl fmt::Display for Discipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Discipline::Ap => "AP",
            Discipline::Acp => "ACP",
            Discipline::Apcp => "APCP",
        })
    }
}

/// Rejection diagnostic: the violated rule (or shape precondition), the
/// path of the offending subterm, and a human-readable explanation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckFailure {
    pub rule: String,
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct CheckVerdict {
    pub accepted: bool,
    pub discipline: Discipline,
    /// Entries of the input context not consumed by the process; all
    /// `end` on acceptance.
    pub residual: TypingContext,
    pub failure: Option<CheckFailure>,
}

impl CheckVerdict {
    pub fn render(&self) -> String {
        match &self.failure {
            None => format!("ACCEPT {}", self.discipline),
            Some(f) => format!(
                "REJECT {}: {} at {}: {}",
                self.discipline, f.rule, f.path, f.message
            ),
        }
    }
}

fn render_path(path: &[String]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.join("/")
    }
}

/// Renames just enough binders to make every binder distinct from all free
/// names, context names, and other binders, keeping user-written names
/// wherever possible so diagnostics stay readable.
pub(crate) fn prepare(p: &Process, g: &TypingContext) -> Process {
    let mut taken: BTreeSet<Name> = free_names(p);
    taken.extend(g.names());
    let mut env = Vec::new();
    uniquify(p, &mut taken, &mut env)
}

fn rebind(n: Name, taken: &mut BTreeSet<Name>, env: &mut Vec<(Name, Name)>) -> Name {
    let n2 = if taken.contains(&n) { Name::fresh(&n.origin()) } else { n };
    taken.insert(n2);
    env.push((n, n2));
    n2
}

fn uniquify(p: &Process, taken: &mut BTreeSet<Name>, env: &mut Vec<(Name, Name)>) -> Process {
    let resolve = |n: Name, env: &Vec<(Name, Name)>| {
        env.iter().rev().find(|(f, _)| *f == n).map(|(_, t)| *t).unwrap_or(n)
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
            let payload = rebind(*payload, taken, env);
            let cont = rebind(*cont, taken, env);
            let body = uniquify(body, taken, env);
            env.pop();
            env.pop();
            Process::Recv { subject, payload, cont, body: Box::new(body) }
        }
        Process::Bra { subject, binder, branches } => {
            let subject = resolve(*subject, env);
            let binder = rebind(*binder, taken, env);
            let branches = branches
                .iter()
                .map(|(l, b)| (l.clone(), uniquify(b, taken, env)))
                .collect();
            env.pop();
            Process::Bra { subject, binder, branches }
        }
        Process::Par(l, r) => {
            let l = uniquify(l, taken, env);
            let r = uniquify(r, taken, env);
            Process::Par(Box::new(l), Box::new(r))
        }
        Process::Res { a, b, ann, body } => {
            let a = rebind(*a, taken, env);
            let b = rebind(*b, taken, env);
            let body = uniquify(body, taken, env);
            env.pop();
            env.pop();
            Process::Res { a, b, ann: ann.clone(), body: Box::new(body) }
        }
    }
}

/// Syntactic precondition for the cut-restricted discipline: every parallel
/// composition sits directly under a restriction and every restriction
/// wraps a parallel composition, at any depth.
fn cut_shape(p: &Process, path: &mut Vec<String>) -> Result<(), CheckFailure> {
    let shape_err = |path: &[String], message: &str| CheckFailure {
        rule: "NotCutShape".to_string(),
        path: render_path(path),
        message: message.to_string(),
    };
    match p {
        Process::Par(..) => Err(shape_err(path, "parallel composition not directly under a restriction")),
        Process::Res { body, .. } => match body.as_ref() {
            Process::Par(l, r) => {
                path.push("res.body".into());
                path.push("par.0".into());
                cut_shape(l, path)?;
                path.pop();
                path.push("par.1".into());
                cut_shape(r, path)?;
                path.pop();
                path.pop();
                Ok(())
            }
            _ => {
                path.push("res.body".into());
                let e = shape_err(path, "restriction over a non-parallel body");
                path.pop();
                Err(e)
            }
        },
        Process::Recv { body, .. } => {
            path.push("recv.body".into());
            let r = cut_shape(body, path);
            path.pop();
            r
        }
        Process::Bra { branches, .. } => {
            for (l, b) in branches {
                path.push(format!("bra.{l}"));
                cut_shape(b, path)?;
                path.pop();
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

struct Walker<'a> {
    cut: bool,
    sink: Option<&'a mut Vec<Constraint>>,
    path: Vec<String>,
}

impl Walker<'_> {
    fn fail(&self, rule: &str, message: String) -> CheckFailure {
        CheckFailure {
            rule: rule.to_string(),
            path: render_path(&self.path),
            message,
        }
    }

    fn emit(&mut self, c: Constraint) {
        if let Some(sink) = self.sink.as_deref_mut() {
            sink.push(c);
        }
    }

    /// Priority of the outermost connective, required only in sink mode
    /// where the annotation pass has filled every connective.
    fn head_priority(&self, t: &SessionType, rule: &str) -> Result<Priority, CheckFailure> {
        priority_of(t).map_err(|_| {
            self.fail(rule, format!("type {} carries no priority", print_type(t)))
        })
    }

    fn req_pri(&self, pri: &Option<Priority>, rule: &str) -> Result<Priority, CheckFailure> {
        pri.clone()
            .ok_or_else(|| self.fail(rule, "connective lacks a priority annotation".to_string()))
    }

    fn consume(
        &self,
        ctx: &mut TypingContext,
        n: Name,
        rule: &str,
    ) -> Result<SessionType, CheckFailure> {
        ctx.remove(n).ok_or_else(|| {
            self.fail(rule, format!("{} is not assigned in the context", n.origin()))
        })
    }

    fn consume_matching(
        &mut self,
        ctx: &mut TypingContext,
        n: Name,
        want: &SessionType,
        rule: &str,
    ) -> Result<(), CheckFailure> {
        let got = self.consume(ctx, n, rule)?;
        if !got.eq_modulo_pri(want) {
            return Err(self.fail(
                rule,
                format!(
                    "{} has type {}, expected {}",
                    n.origin(),
                    print_type(&got),
                    print_type(want)
                ),
            ));
        }
        self.match_priorities(&got, want);
        Ok(())
    }

    /// Equates priorities pointwise between two types already known equal
    /// modulo priorities. No-op without a sink.
    fn match_priorities(&mut self, got: &SessionType, want: &SessionType) {
        if let Some(sink) = self.sink.as_deref_mut() {
            match_pri_rec(got, want, sink);
        }
    }

    fn bind(
        &self,
        ctx: &mut TypingContext,
        n: Name,
        t: SessionType,
        rule: &str,
    ) -> Result<(), CheckFailure> {
        ctx.insert(n, t).map_err(|dup| {
            self.fail(
                rule,
                format!("binder {} collides with an existing assignment", dup.origin()),
            )
        })
    }

    /// A binder (or restriction endpoint) leaving scope must have been
    /// consumed, or be discardable as `end`.
    fn discharge(
        &self,
        ctx: &mut TypingContext,
        n: Name,
        rule: &str,
        role: &str,
    ) -> Result<(), CheckFailure> {
        match ctx.remove(n) {
            None => Ok(()),
            Some(SessionType::Closed) => Ok(()),
            Some(t) => Err(self.fail(
                rule,
                format!("{role} {} of type {} is never used", n.origin(), print_type(&t)),
            )),
        }
    }

    /// Emits the input-readiness constraint: the input's priority must be
    /// strictly below the priority of everything else its subtree consumes.
    fn emit_input_bound(
        &mut self,
        pri: &Option<Priority>,
        consumed: &[(Name, SessionType)],
        rule: &str,
    ) -> Result<(), CheckFailure> {
        if self.sink.is_none() || consumed.is_empty() {
            return Ok(());
        }
        let pri = self.req_pri(pri, rule)?;
        let mut set = BTreeSet::new();
        for (_, t) in consumed {
            set.insert(self.head_priority(t, rule)?);
        }
        self.emit(Constraint::LtMin(pri, set));
        Ok(())
    }

    fn check(&mut self, p: &Process, mut ctx: TypingContext) -> Result<TypingContext, CheckFailure> {
        match p {
            Process::Inact => Ok(ctx),
            Process::Send { subject, payload, cont } => {
                let st = self.consume(&mut ctx, *subject, "typ-send")?;
                let SessionType::Tensor { pri, payload: a, cont: b } = st else {
                    return Err(self.fail(
                        "typ-send",
                        format!(
                            "{} has type {}, expected to send a pair",
                            subject.origin(),
                            print_type(&st)
                        ),
                    ));
                };
                if self.sink.is_some() {
                    let pi = self.req_pri(&pri, "typ-send")?;
                    let pa = self.head_priority(&a, "typ-send")?;
                    let pb = self.head_priority(&b, "typ-send")?;
                    self.emit(Constraint::Lt(pi.clone(), pa));
                    self.emit(Constraint::Lt(pi, pb));
                }
                self.consume_matching(&mut ctx, *payload, &dual(&a), "typ-send")?;
                self.consume_matching(&mut ctx, *cont, &dual(&b), "typ-send")?;
                Ok(ctx)
            }
            Process::Sel { subject, cont, label } => {
                let st = self.consume(&mut ctx, *subject, "typ-sel")?;
                let SessionType::Plus { pri, branches } = st else {
                    return Err(self.fail(
                        "typ-sel",
                        format!(
                            "{} has type {}, expected an internal choice",
                            subject.origin(),
                            print_type(&st)
                        ),
                    ));
                };
                let Some(aj) = branches.get(label) else {
                    return Err(self.fail(
                        "typ-sel",
                        format!(
                            "label {} is not offered by {}",
                            label,
                            print_type(&SessionType::Plus { pri, branches: branches.clone() })
                        ),
                    ));
                };
                if self.sink.is_some() {
                    let pi = self.req_pri(&pri, "typ-sel")?;
                    let pj = self.head_priority(aj, "typ-sel")?;
                    self.emit(Constraint::Lt(pi, pj));
                }
                self.consume_matching(&mut ctx, *cont, &dual(aj), "typ-sel")?;
                Ok(ctx)
            }
            Process::Fwd(x, y) => {
                let tx = self.consume(&mut ctx, *x, "typ-fwd")?;
                let ty = self.consume(&mut ctx, *y, "typ-fwd")?;
                let want = dual(&tx);
                if !ty.eq_modulo_pri(&want) {
                    return Err(self.fail(
                        "typ-fwd",
                        format!(
                            "{} and {} must carry dual types, found {} and {}",
                            x.origin(),
                            y.origin(),
                            print_type(&tx),
                            print_type(&ty)
                        ),
                    ));
                }
                self.match_priorities(&ty, &want);
                Ok(ctx)
            }
            Process::Recv { subject, payload, cont, body } => {
                let st = self.consume(&mut ctx, *subject, "typ-recv")?;
                let SessionType::Par { pri, payload: a, cont: b } = st else {
                    return Err(self.fail(
                        "typ-recv",
                        format!(
                            "{} has type {}, expected to receive a pair",
                            subject.origin(),
                            print_type(&st)
                        ),
                    ));
                };
                let snapshot: Vec<(Name, SessionType)> = if self.sink.is_some() {
                    ctx.iter().cloned().collect()
                } else {
                    Vec::new()
                };
                let mut inner = ctx;
                self.bind(&mut inner, *payload, *a, "typ-recv")?;
                self.bind(&mut inner, *cont, *b, "typ-recv")?;
                self.path.push("recv.body".into());
                let mut left = self.check(body, inner)?;
                self.path.pop();
                self.discharge(&mut left, *payload, "typ-recv", "payload binder")?;
                self.discharge(&mut left, *cont, "typ-recv", "continuation binder")?;
                let consumed: Vec<(Name, SessionType)> = snapshot
                    .into_iter()
                    .filter(|(n, _)| left.lookup(*n).is_none())
                    .collect();
                self.emit_input_bound(&pri, &consumed, "typ-recv")?;
                Ok(left)
            }
            Process::Bra { subject, binder, branches } => {
                let st = self.consume(&mut ctx, *subject, "typ-bra")?;
                let SessionType::With { pri, branches: tys } = st else {
                    return Err(self.fail(
                        "typ-bra",
                        format!(
                            "{} has type {}, expected an external choice",
                            subject.origin(),
                            print_type(&st)
                        ),
                    ));
                };
                let plabels: Vec<&Label> = branches.keys().collect();
                let tlabels: Vec<&Label> = tys.keys().collect();
                if plabels != tlabels {
                    return Err(self.fail(
                        "typ-bra",
                        format!(
                            "offered branches {{{}}} do not match the type's branches {{{}}}",
                            join_labels(&plabels),
                            join_labels(&tlabels)
                        ),
                    ));
                }
                let rest = ctx;
                let snapshot: Vec<(Name, SessionType)> = rest.iter().cloned().collect();
                let mut leftovers: Vec<(Label, TypingContext)> = Vec::new();
                for (l, body) in branches {
                    let mut inner = rest.clone();
                    self.bind(&mut inner, *binder, tys[l].clone(), "typ-bra")?;
                    self.path.push(format!("bra.{l}"));
                    let mut left = self.check(body, inner)?;
                    self.path.pop();
                    self.discharge(&mut left, *binder, "typ-bra", "branch binder")?;
                    leftovers.push((l.clone(), left));
                }
                let mut kept: Vec<(Name, SessionType)> = Vec::new();
                let mut consumed: Vec<(Name, SessionType)> = Vec::new();
                for (n, t) in snapshot {
                    let consumers: Vec<&Label> = leftovers
                        .iter()
                        .filter(|(_, lv)| lv.lookup(n).is_none())
                        .map(|(l, _)| l)
                        .collect();
                    if consumers.is_empty() {
                        kept.push((n, t));
                    } else if consumers.len() == leftovers.len()
                        || matches!(t, SessionType::Closed)
                    {
                        consumed.push((n, t));
                    } else {
                        return Err(self.fail(
                            "typ-bra",
                            format!(
                                "branch {} uses {} but the other branches do not",
                                consumers[0],
                                n.origin()
                            ),
                        ));
                    }
                }
                self.emit_input_bound(&pri, &consumed, "typ-bra")?;
                Ok(TypingContext::from_entries(kept).expect("entries come from one context"))
            }
            Process::Par(l, r) => {
                if self.cut {
                    return Err(self.fail(
                        "NotCutShape",
                        "parallel composition not directly under a restriction".to_string(),
                    ));
                }
                self.path.push("par.0".into());
                let left = self.check(l, ctx)?;
                self.path.pop();
                self.path.push("par.1".into());
                let right = self.check(r, left)?;
                self.path.pop();
                Ok(right)
            }
            Process::Res { a, b, ann, body } => {
                let Some(t) = ann else {
                    return Err(self.fail(
                        "MissingAnnotation",
                        format!(
                            "restriction on ({},{}) lacks a type annotation",
                            a.origin(),
                            b.origin()
                        ),
                    ));
                };
                if self.cut {
                    let Process::Par(l, r) = body.as_ref() else {
                        return Err(self.fail(
                            "NotCutShape",
                            "restriction over a non-parallel body".to_string(),
                        ));
                    };
                    // The side that uses an endpoint receives it; sides of a
                    // symmetric cut may be written in either order.
                    let fl = free_names(l);
                    let (lend, lty, rend, rty) = if fl.contains(a) {
                        (*a, t.clone(), *b, dual(t))
                    } else if fl.contains(b) {
                        (*b, dual(t), *a, t.clone())
                    } else {
                        (*a, t.clone(), *b, dual(t))
                    };
                    self.path.push("res.body".into());
                    let mut lctx = ctx;
                    self.bind(&mut lctx, lend, lty, "typ-cut")?;
                    self.path.push("par.0".into());
                    let mut left = self.check(l, lctx)?;
                    self.path.pop();
                    self.discharge(&mut left, lend, "typ-cut", "endpoint")?;
                    self.bind(&mut left, rend, rty, "typ-cut")?;
                    self.path.push("par.1".into());
                    let mut right = self.check(r, left)?;
                    self.path.pop();
                    self.discharge(&mut right, rend, "typ-cut", "endpoint")?;
                    self.path.pop();
                    Ok(right)
                } else {
                    let mut inner = ctx;
                    self.bind(&mut inner, *a, t.clone(), "typ-res")?;
                    self.bind(&mut inner, *b, dual(t), "typ-res")?;
                    self.path.push("res.body".into());
                    let mut left = self.check(body, inner)?;
                    self.path.pop();
                    self.discharge(&mut left, *a, "typ-res", "endpoint")?;
                    self.discharge(&mut left, *b, "typ-res", "endpoint")?;
                    Ok(left)
                }
            }
        }
    }
}

fn join_labels(ls: &[&Label]) -> String {
    ls.iter().map(|l| l.0.as_str()).collect::<Vec<_>>().join(", ")
}

fn match_pri_rec(a: &SessionType, b: &SessionType, out: &mut Vec<Constraint>) {
    let eq_push = |pa: &Option<Priority>, pb: &Option<Priority>, out: &mut Vec<Constraint>| {
        if let (Some(pa), Some(pb)) = (pa, pb) {
            if pa != pb {
                out.push(Constraint::Eq(pa.clone(), pb.clone()));
            }
        }
    };
    match (a, b) {
        (
            SessionType::Tensor { pri: pa, payload: qa, cont: ca },
            SessionType::Tensor { pri: pb, payload: qb, cont: cb },
        )
        | (
            SessionType::Par { pri: pa, payload: qa, cont: ca },
            SessionType::Par { pri: pb, payload: qb, cont: cb },
        ) => {
            eq_push(pa, pb, out);
            match_pri_rec(qa, qb, out);
            match_pri_rec(ca, cb, out);
        }
        (
            SessionType::Plus { pri: pa, branches: ba },
            SessionType::Plus { pri: pb, branches: bb },
        )
        | (
            SessionType::With { pri: pa, branches: ba },
            SessionType::With { pri: pb, branches: bb },
        ) => {
            eq_push(pa, pb, out);
            for ((_, ta), (_, tb)) in ba.iter().zip(bb.iter()) {
                match_pri_rec(ta, tb, out);
            }
        }
        _ => {}
    }
}

pub(crate) fn walk_process(
    p: &Process,
    ctx: TypingContext,
    cut: bool,
    sink: Option<&mut Vec<Constraint>>,
) -> Result<TypingContext, CheckFailure> {
    Walker { cut, sink, path: Vec::new() }.check(p, ctx)
}

/// The all-`end` condition on what survives checking; a violation names the
/// first offending entry.
pub(crate) fn leftover_failure(left: &TypingContext) -> Option<CheckFailure> {
    left.iter()
        .find(|(_, t)| !matches!(t, SessionType::Closed))
        .map(|(n, t)| CheckFailure {
            rule: "typ-end".to_string(),
            path: "root".to_string(),
            message: format!(
                "context entry {} : {} is never used",
                n.origin(),
                print_type(t)
            ),
        })
}

pub(crate) fn finish(d: Discipline, res: Result<TypingContext, CheckFailure>) -> CheckVerdict {
    match res {
        Err(f) => CheckVerdict {
            accepted: false,
            discipline: d,
            residual: TypingContext::new(),
            failure: Some(f),
        },
        Ok(left) => match leftover_failure(&left) {
            Some(f) => CheckVerdict {
                accepted: false,
                discipline: d,
                residual: left,
                failure: Some(f),
            },
            None => CheckVerdict {
                accepted: true,
                discipline: d,
                residual: left,
                failure: None,
            },
        },
    }
}

/// Checks `p` against `g` with independent parallel components and
/// free-standing restrictions.
pub fn check_ap(p: &Process, g: &TypingContext) -> CheckVerdict {
    let q = prepare(p, g);
    finish(Discipline::Ap, walk_process(&q, g.clone(), false, None))
}

/// Checks `p` against `g` with composition and restriction fused: every
/// parallel pair must share exactly one restricted channel.
pub fn check_acp(p: &Process, g: &TypingContext) -> CheckVerdict {
    let q = prepare(p, g);
    let res = cut_shape(&q, &mut Vec::new()).and_then(|()| walk_process(&q, g.clone(), true, None));
    finish(Discipline::Acp, res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_context, parse_process};

    fn p(src: &str) -> Process {
        parse_process(src).expect("test process parses")
    }

    fn ctx(src: &str) -> TypingContext {
        parse_context(src).expect("test context parses")
    }

    fn deadlock() -> Process {
        p(concat!(
            "new (x : end % end y) new (u : end * end w) ",
            "(recv x(v,x2). send u[a,b] | recv w(z,w2). send y[c,d])"
        ))
    }

    fn fixed() -> Process {
        p(concat!(
            "new (x : end % end y) ",
            "(new (u : end * end w) (recv x(v,x2). send u[a,b] | recv w(z,w2). 0) ",
            "| send y[c,d])"
        ))
    }

    #[test]
    fn inact_accepts_empty_and_closed_contexts() {
        let v = check_ap(&Process::Inact, &TypingContext::new());
        assert!(v.accepted);
        assert_eq!(v.render(), "ACCEPT AP");
        let v = check_ap(&Process::Inact, &ctx("x : end"));
        assert!(v.accepted);
        assert_eq!(v.residual.len(), 1);
    }

    #[test]
    fn send_consumes_subject_payload_and_continuation() {
        let v = check_ap(&p("send x[a,b]"), &ctx("x : end * end, a : end, b : end"));
        assert!(v.accepted);
        assert!(v.residual.is_empty());
        let v = check_ap(&p("send x[a,b]"), &ctx("x : end * end, a : end"));
        assert!(!v.accepted);
        assert_eq!(v.failure.as_ref().unwrap().rule, "typ-send");
    }

    #[test]
    fn recv_binds_the_component_types() {
        let v = check_ap(
            &p("recv x(y,z). send y[a,z]"),
            &ctx("x : (end * end) % end, a : end"),
        );
        assert!(v.accepted);
        let v = check_ap(&p("recv x(y,z). 0"), &ctx("x : (end * end) % end"));
        assert!(!v.accepted);
        assert_eq!(v.failure.as_ref().unwrap().rule, "typ-recv");
        let v = check_ap(&p("recv x(y,z). 0"), &ctx("x : end % end"));
        assert!(v.accepted);
    }

    #[test]
    fn deadlock_example_is_typable_only_without_cut() {
        let g = ctx("a : end, b : end, c : end, d : end");
        let v = check_ap(&deadlock(), &g);
        assert!(v.accepted, "{}", v.render());
        let v = check_acp(&deadlock(), &g);
        assert!(!v.accepted);
        assert_eq!(v.failure.as_ref().unwrap().rule, "NotCutShape");
    }

    #[test]
    fn fixed_variant_is_typable_under_both() {
        let g = ctx("a : end, b : end, c : end, d : end");
        let v = check_ap(&fixed(), &g);
        assert!(v.accepted, "{}", v.render());
        let v = check_acp(&fixed(), &g);
        assert!(v.accepted, "{}", v.render());
    }

    #[test]
    fn forwarder_requires_dual_endpoint_types() {
        let v = check_ap(&p("fwd [x<>y]"), &ctx("x : end * end, y : end % end"));
        assert!(v.accepted);
        let v = check_ap(&p("fwd [x<>y]"), &ctx("x : end * end, y : end * end"));
        assert!(!v.accepted);
        assert_eq!(v.failure.as_ref().unwrap().rule, "typ-fwd");
    }

    #[test]
    fn cut_over_forwarder_and_send() {
        let g = ctx("z : end * end, a : end, b : end");
        let v = check_acp(&p("new (x : end % end y) (fwd [x<>z] | send y[a,b])"), &g);
        assert!(v.accepted, "{}", v.render());
        // Sides written the other way round: the endpoints swap roles.
        let v = check_acp(&p("new (x : end % end y) (send y[a,b] | fwd [x<>z])"), &g);
        assert!(v.accepted, "{}", v.render());
    }

    #[test]
    fn bare_parallel_is_not_cut_shaped() {
        let g = ctx("x : end * end, a : end, b : end, y : end * end, c : end, d : end");
        let v = check_acp(&p("(send x[a,b] | send y[c,d])"), &g);
        assert!(!v.accepted);
        assert_eq!(v.failure.as_ref().unwrap().rule, "NotCutShape");
        assert!(check_ap(&p("(send x[a,b] | send y[c,d])"), &g).accepted);
    }

    #[test]
    fn selection_and_branching() {
        let g = ctx("x : +{go: end * end, stop: end}, b : end % end");
        let v = check_ap(&p("sel x[b] < go"), &g);
        assert!(v.accepted, "{}", v.render());
        let v = check_ap(&p("sel x[b] < quit"), &g);
        assert!(!v.accepted);
        assert_eq!(v.failure.as_ref().unwrap().rule, "typ-sel");

        let g = ctx("x : &{go: end, stop: end}, c : end");
        let v = check_ap(&p("bra x(z) > { go: fwd [z<>c], stop: 0 }"), &g);
        assert!(v.accepted, "{}", v.render());
    }

    #[test]
    fn branches_must_agree_on_linear_consumption() {
        let g = ctx("x : &{go: end, stop: end}, c : end * end, a : end, b : end");
        let v = check_ap(&p("bra x(z) > { go: send c[a,b], stop: 0 }"), &g);
        assert!(!v.accepted);
        assert_eq!(v.failure.as_ref().unwrap().rule, "typ-bra");
    }

    #[test]
    fn branch_labels_must_match_the_type() {
        let g = ctx("x : &{go: end}");
        let v = check_ap(&p("bra x(z) > { go: 0, stop: 0 }"), &g);
        assert!(!v.accepted);
        assert_eq!(v.failure.as_ref().unwrap().rule, "typ-bra");
    }

    #[test]
    fn missing_annotation_is_reported() {
        let v = check_ap(&p("new (x y) 0"), &TypingContext::new());
        assert!(!v.accepted);
        assert_eq!(v.failure.as_ref().unwrap().rule, "MissingAnnotation");
    }

    #[test]
    fn unused_restriction_endpoint_is_rejected() {
        let v = check_ap(&p("new (x : end * end y) 0"), &TypingContext::new());
        assert!(!v.accepted);
        assert_eq!(v.failure.as_ref().unwrap().rule, "typ-res");
        let v = check_ap(&p("new (x : end y) 0"), &TypingContext::new());
        assert!(v.accepted);
    }

    #[test]
    fn non_closed_leftover_is_rejected() {
        let v = check_ap(&p("0"), &ctx("x : end * end"));
        assert!(!v.accepted);
        let f = v.failure.as_ref().unwrap();
        assert_eq!(f.rule, "typ-end");
        assert!(v.render().starts_with("REJECT AP: typ-end at root"));
    }

    #[test]
    fn shadowed_binders_are_renamed_not_confused() {
        // The receive binder reuses the context name a; the context entry
        // must still be dischargeable as a leftover.
        let v = check_ap(&p("recv x(a,z). 0"), &ctx("x : end % end, a : end"));
        assert!(v.accepted, "{}", v.render());
        let v = check_ap(
            &p("new (x : end y) new (x : end y) 0"),
            &TypingContext::new(),
        );
        assert!(v.accepted, "{}", v.render());
    }

    #[test]
    fn linear_entries_cannot_be_shared_across_parallel() {
        let g = ctx("x : end * end, y : end % end, z : end % end");
        let v = check_ap(&p("(fwd [x<>y] | fwd [x<>z])"), &g);
        assert!(!v.accepted);
        assert_eq!(v.failure.as_ref().unwrap().rule, "typ-fwd");
    }
}
