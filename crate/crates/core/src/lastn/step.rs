//! Call-by-name small steps for terms.
//!
//! Applying an abstraction creates an explicit substitution frame at once;
//! the frame fires only when its variable reaches head position. A frame
//! whose body is otherwise stuck migrates one level toward the occurrence
//! of its variable, which counts as a structural rearrangement rather than
//! a reduction; the two kinds are reported separately. Channel actions and
//! `new`/`spawn` are configuration business and leave the term stuck here.

use crate::name::Name;

use super::term::{free_vars, print_term, rename_free_var, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermStepKind {
    /// A reduction: an application collapsing into a frame, a frame firing
    /// on its variable, or a pair being destructured.
    Red,
    /// A structural rearrangement: a frame migrating toward its variable or
    /// discarding itself when the variable is gone.
    Cong,
}

impl std::fmt::Display for TermStepKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TermStepKind::Red => "=>M",
            TermStepKind::Cong => "==M",
        })
    }
}

/// One deterministic head step, if any.
pub fn step_term(t: &Term) -> Option<(Term, TermStepKind)> {
    match t {
        Term::App(f, a) => {
            if let Term::Abs { param, body, .. } = f.as_ref() {
                return Some((
                    Term::subst_frame((**body).clone(), *param, (**a).clone()),
                    TermStepKind::Red,
                ));
            }
            let (f2, k) = step_term(f)?;
            Some((Term::app(f2, (**a).clone()), k))
        }
        Term::ExplSub { body, var, arg } => {
            if matches!(body.as_ref(), Term::Var(x) if x == var) {
                return Some(((**arg).clone(), TermStepKind::Red));
            }
            if let Some((b2, k)) = step_term(body) {
                return Some((Term::subst_frame(b2, *var, (**arg).clone()), k));
            }
            Some((push_frame(body, *var, arg), TermStepKind::Cong))
        }
        Term::LetPair { left, left_ann, right, right_ann, pair, body } => {
            if let Term::Pair(l, r) = pair.as_ref() {
                let inner = Term::subst_frame((**body).clone(), *left, (**l).clone());
                return Some((
                    Term::subst_frame(inner, *right, (**r).clone()),
                    TermStepKind::Red,
                ));
            }
            let (p2, k) = step_term(pair)?;
            Some((
                Term::LetPair {
                    left: *left,
                    left_ann: left_ann.clone(),
                    right: *right,
                    right_ann: right_ann.clone(),
                    pair: Box::new(p2),
                    body: body.clone(),
                },
                k,
            ))
        }
        Term::SendTm { payload, channel } => {
            let (c2, k) = step_term(channel)?;
            Some((Term::send((**payload).clone(), c2), k))
        }
        Term::RecvTm(c) => {
            let (c2, k) = step_term(c)?;
            Some((Term::recv(c2), k))
        }
        Term::SelectTm(l, c) => {
            let (c2, k) = step_term(c)?;
            Some((Term::select(l.clone(), c2), k))
        }
        Term::CaseTm { subject, branches } => {
            let (s2, k) = step_term(subject)?;
            Some((
                Term::CaseTm { subject: Box::new(s2), branches: branches.clone() },
                k,
            ))
        }
        Term::CloseTm { subject, cont } => {
            let (s2, k) = step_term(subject)?;
            Some((Term::close(s2, (**cont).clone()), k))
        }
        Term::Var(_)
        | Term::Abs { .. }
        | Term::UnitVal
        | Term::Pair(..)
        | Term::New
        | Term::Spawn { .. }
        | Term::Chan(_) => None,
    }
}

/// Moves the frame one level into the unique position holding its variable,
/// or drops it when the variable no longer occurs. The caller guarantees
/// the body is stuck and is not the bare variable.
fn push_frame(body: &Term, var: Name, arg: &Term) -> Term {
    if !free_vars(body).contains(&var) {
        return body.clone();
    }
    let has = |t: &Term| free_vars(t).contains(&var);
    let wrap = |sub: &Term| Term::subst_frame(sub.clone(), var, arg.clone());
    match body {
        Term::App(f, a) => {
            if has(f) {
                Term::app(wrap(f), (**a).clone())
            } else {
                Term::app((**f).clone(), wrap(a))
            }
        }
        Term::Pair(l, r) => {
            if has(l) {
                Term::pair(wrap(l), (**r).clone())
            } else {
                Term::pair((**l).clone(), wrap(r))
            }
        }
        Term::Abs { param, ann, body: b } => {
            let (param, b) = avoid_capture(*param, b, arg);
            Term::Abs { param, ann: ann.clone(), body: Box::new(wrap(&b)) }
        }
        Term::ExplSub { body: b, var: v, arg: a } => {
            if has(a) {
                Term::subst_frame((**b).clone(), *v, wrap(a))
            } else {
                let (v, b) = avoid_capture(*v, b, arg);
                Term::subst_frame(wrap(&b), v, (**a).clone())
            }
        }
        Term::LetPair { left, left_ann, right, right_ann, pair, body: b } => {
            if has(pair) {
                Term::LetPair {
                    left: *left,
                    left_ann: left_ann.clone(),
                    right: *right,
                    right_ann: right_ann.clone(),
                    pair: Box::new(wrap(pair)),
                    body: b.clone(),
                }
            } else {
                let (left, b) = avoid_capture(*left, b, arg);
                let (right, b) = avoid_capture(*right, &b, arg);
                Term::LetPair {
                    left,
                    left_ann: left_ann.clone(),
                    right,
                    right_ann: right_ann.clone(),
                    pair: pair.clone(),
                    body: Box::new(wrap(&b)),
                }
            }
        }
        Term::Spawn { child, cont } => {
            if has(child) {
                Term::spawn(wrap(child), (**cont).clone())
            } else {
                Term::spawn((**child).clone(), wrap(cont))
            }
        }
        Term::SendTm { payload, channel } => {
            if has(payload) {
                Term::send(wrap(payload), (**channel).clone())
            } else {
                Term::send((**payload).clone(), wrap(channel))
            }
        }
        Term::RecvTm(c) => Term::recv(wrap(c)),
        Term::SelectTm(l, c) => Term::select(l.clone(), wrap(c)),
        Term::CaseTm { subject, branches } => {
            if has(subject) {
                Term::CaseTm { subject: Box::new(wrap(subject)), branches: branches.clone() }
            } else {
                Term::CaseTm {
                    subject: subject.clone(),
                    branches: branches
                        .iter()
                        .map(|(l, b)| (l.clone(), if has(b) { wrap(b) } else { b.clone() }))
                        .collect(),
                }
            }
        }
        Term::CloseTm { subject, cont } => {
            if has(subject) {
                Term::close(wrap(subject), (**cont).clone())
            } else {
                Term::close((**subject).clone(), wrap(cont))
            }
        }
        Term::Var(_) | Term::UnitVal | Term::New | Term::Chan(_) => {
            unreachable!("leaves either fired or were collected earlier")
        }
    }
}

/// Freshens a binder that would capture a free variable of the incoming
/// frame argument.
fn avoid_capture(binder: Name, body: &Term, arg: &Term) -> (Name, Term) {
    if free_vars(arg).contains(&binder) {
        let fresh = Name::fresh(&binder.origin());
        (fresh, rename_free_var(body, binder, fresh))
    } else {
        (binder, body.clone())
    }
}

/// Full head-reduction history of a term.
#[derive(Debug, Clone)]
pub struct TermTrace {
    pub initial: Term,
    pub steps: Vec<(TermStepKind, Term)>,
}

impl TermTrace {
    pub fn terminal(&self) -> &Term {
        self.steps.last().map(|(_, t)| t).unwrap_or(&self.initial)
    }

    pub fn render(&self) -> String {
        let mut out = print_term(&self.initial);
        for (k, t) in &self.steps {
            out.push_str("\n  ");
            out.push_str(&k.to_string());
            out.push(' ');
            out.push_str(&print_term(t));
        }
        out
    }
}

/// Steps until stuck or the bound runs out.
pub fn run_term(t: &Term, max_steps: usize) -> TermTrace {
    let mut steps = Vec::new();
    let mut cur = t.clone();
    while steps.len() < max_steps {
        match step_term(&cur) {
            None => break,
            Some((next, k)) => {
                steps.push((k, next.clone()));
                cur = next;
            }
        }
    }
    TermTrace { initial: t.clone(), steps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::Name;

    fn n(s: &str) -> Name {
        Name::intern(s)
    }

    fn id(v: &str) -> Term {
        Term::abs(n(v), Term::var(n(v)))
    }

    #[test]
    fn the_worked_reduction_sequence() {
        let x = n("x");
        let t0 = Term::app(
            Term::abs(x, Term::app(Term::var(x), id("y"))),
            Term::app(id("w"), id("z")),
        );
        let trace = run_term(&t0, 100);
        let rendered: Vec<(TermStepKind, String)> = trace
            .steps
            .iter()
            .map(|(k, t)| (*k, print_term(t)))
            .collect();
        use TermStepKind::*;
        assert_eq!(print_term(&trace.initial), "(\\x. x (\\y. y)) ((\\w. w) (\\z. z))");
        assert_eq!(
            rendered,
            vec![
                (Red, "(x (\\y. y))[x := (\\w. w) (\\z. z)]".to_string()),
                (Cong, "x[x := (\\w. w) (\\z. z)] (\\y. y)".to_string()),
                (Red, "(\\w. w) (\\z. z) (\\y. y)".to_string()),
                (Red, "w[w := \\z. z] (\\y. y)".to_string()),
                (Red, "(\\z. z) (\\y. y)".to_string()),
                (Red, "z[z := \\y. y]".to_string()),
                (Red, "\\y. y".to_string()),
            ]
        );
    }

    #[test]
    fn values_are_stuck() {
        assert!(step_term(&id("y")).is_none());
        assert!(step_term(&Term::UnitVal).is_none());
        assert!(step_term(&Term::pair(Term::UnitVal, Term::UnitVal)).is_none());
    }

    #[test]
    fn identity_applied_to_unit() {
        let t = Term::app(id("x"), Term::UnitVal);
        let trace = run_term(&t, 10);
        assert_eq!(trace.steps.len(), 2);
        assert_eq!(*trace.terminal(), Term::UnitVal);
    }

    #[test]
    fn unused_frame_is_collected() {
        let t = Term::subst_frame(Term::UnitVal, n("x"), id("y"));
        let (t2, k) = step_term(&t).unwrap();
        assert_eq!(t2, Term::UnitVal);
        assert_eq!(k, TermStepKind::Cong);
    }

    #[test]
    fn frame_push_respects_binders() {
        // (\y. x)[x := y] must not capture the frame's free y.
        let (x, y) = (n("x"), n("y"));
        let t = Term::subst_frame(Term::abs(y, Term::var(x)), x, Term::var(y));
        let (t2, k) = step_term(&t).unwrap();
        assert_eq!(k, TermStepKind::Cong);
        let Term::Abs { param, body, .. } = t2 else {
            panic!("expected an abstraction, got {}", print_term(&t2));
        };
        assert_ne!(param, y);
        assert_eq!(
            *body,
            Term::subst_frame(Term::var(x), x, Term::var(y))
        );
    }

    #[test]
    fn let_pair_destructures_values() {
        let (a, b) = (n("a"), n("b"));
        let t = Term::let_pair(
            a,
            b,
            Term::pair(Term::UnitVal, id("y")),
            Term::app(Term::var(b), Term::var(a)),
        );
        let trace = run_term(&t, 20);
        assert_eq!(*trace.terminal(), Term::UnitVal);
    }

    #[test]
    fn rendered_trace_lists_the_arrows() {
        let t = Term::app(id("x"), Term::UnitVal);
        let r = run_term(&t, 10).render();
        assert_eq!(r, "(\\x. x) ()\n  =>M x[x := ()]\n  =>M ()");
    }
}
