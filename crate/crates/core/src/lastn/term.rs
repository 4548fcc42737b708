//! Terms and types of the functional layer.
//!
//! Evaluation is call-by-name with explicit substitutions: applying an
//! abstraction creates an `ExplSub` frame instead of substituting eagerly,
//! and frames migrate toward the variable they bind. Channel endpoints that
//! arise at runtime are a separate leaf (`Chan`) so renaming at the
//! configuration level never has to care about variable binders.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::name::{Label, Name};

/// Types of the functional layer. Session forms live in the same enum;
/// `is_session` picks them out where the grammar demands one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunType {
    Unit,
    Prod(Box<FunType>, Box<FunType>),
    Arrow(Box<FunType>, Box<FunType>),
    /// Named type variable; stands for an arbitrary type and translates to
    /// an opaque leaf.
    TVar(String),
    /// Send `payload`, continue as `cont`.
    Out(Box<FunType>, Box<FunType>),
    /// Receive `payload`, continue as `cont`.
    In(Box<FunType>, Box<FunType>),
    /// Internal choice: this side selects.
    Choice(BTreeMap<Label, FunType>),
    /// External choice: this side offers.
    Offer(BTreeMap<Label, FunType>),
    End,
}

impl FunType {
    pub fn prod(l: FunType, r: FunType) -> FunType {
        FunType::Prod(Box::new(l), Box::new(r))
    }

    pub fn arrow(l: FunType, r: FunType) -> FunType {
        FunType::Arrow(Box::new(l), Box::new(r))
    }

    pub fn out(payload: FunType, cont: FunType) -> FunType {
        FunType::Out(Box::new(payload), Box::new(cont))
    }

    pub fn inp(payload: FunType, cont: FunType) -> FunType {
        FunType::In(Box::new(payload), Box::new(cont))
    }

    pub fn tvar(name: &str) -> FunType {
        FunType::TVar(name.to_string())
    }
}

/// True for the session fragment. Type variables count as sessions so that
/// symbolic types can stand in either position.
pub fn is_session(t: &FunType) -> bool {
    matches!(
        t,
        FunType::Out(..)
            | FunType::In(..)
            | FunType::Choice(_)
            | FunType::Offer(_)
            | FunType::End
            | FunType::TVar(_)
    )
}

/// Dual of a session form: sends and receives swap, the two choices swap,
/// `end` is self-dual. Fails on non-sessions and on type variables, whose
/// dual has no representation.
pub fn fun_dual(t: &FunType) -> Result<FunType, String> {
    match t {
        FunType::Out(p, s) => Ok(FunType::inp((**p).clone(), fun_dual(s)?)),
        FunType::In(p, s) => Ok(FunType::out((**p).clone(), fun_dual(s)?)),
        FunType::Choice(bs) => {
            let mut out = BTreeMap::new();
            for (l, s) in bs {
                out.insert(l.clone(), fun_dual(s)?);
            }
            Ok(FunType::Offer(out))
        }
        FunType::Offer(bs) => {
            let mut out = BTreeMap::new();
            for (l, s) in bs {
                out.insert(l.clone(), fun_dual(s)?);
            }
            Ok(FunType::Choice(out))
        }
        FunType::End => Ok(FunType::End),
        FunType::TVar(n) => Err(format!("cannot dualize type variable {n}")),
        other => Err(format!("not a session type: {}", print_funtype(other))),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(Name),
    Abs {
        param: Name,
        ann: Option<FunType>,
        body: Box<Term>,
    },
    App(Box<Term>, Box<Term>),
    /// `body` with the delayed binding `var := arg`.
    ExplSub {
        body: Box<Term>,
        var: Name,
        arg: Box<Term>,
    },
    UnitVal,
    Pair(Box<Term>, Box<Term>),
    LetPair {
        left: Name,
        left_ann: Option<FunType>,
        right: Name,
        right_ann: Option<FunType>,
        pair: Box<Term>,
        body: Box<Term>,
    },
    /// Fresh channel pair; the value is a pair of the two endpoints.
    New,
    /// Run `child` (unit-typed) concurrently, continue as `cont`.
    Spawn { child: Box<Term>, cont: Box<Term> },
    /// Send `payload` over `channel`; the value is the continued channel.
    SendTm {
        payload: Box<Term>,
        channel: Box<Term>,
    },
    /// Receive over the channel; the value is a payload/continuation pair.
    RecvTm(Box<Term>),
    SelectTm(Label, Box<Term>),
    CaseTm {
        subject: Box<Term>,
        branches: BTreeMap<Label, Term>,
    },
    /// Await the peer's close on `subject`, continue as `cont`.
    CloseTm { subject: Box<Term>, cont: Box<Term> },
    /// Runtime channel endpoint; never written in source programs.
    Chan(Name),
}

impl Term {
    pub fn var(n: Name) -> Term {
        Term::Var(n)
    }

    pub fn abs(param: Name, body: Term) -> Term {
        Term::Abs { param, ann: None, body: Box::new(body) }
    }

    pub fn abs_ann(param: Name, ann: FunType, body: Term) -> Term {
        Term::Abs { param, ann: Some(ann), body: Box::new(body) }
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn subst_frame(body: Term, var: Name, arg: Term) -> Term {
        Term::ExplSub { body: Box::new(body), var, arg: Box::new(arg) }
    }

    pub fn pair(l: Term, r: Term) -> Term {
        Term::Pair(Box::new(l), Box::new(r))
    }

    pub fn let_pair(left: Name, right: Name, pair: Term, body: Term) -> Term {
        Term::LetPair {
            left,
            left_ann: None,
            right,
            right_ann: None,
            pair: Box::new(pair),
            body: Box::new(body),
        }
    }

    pub fn spawn(child: Term, cont: Term) -> Term {
        Term::Spawn { child: Box::new(child), cont: Box::new(cont) }
    }

    pub fn send(payload: Term, channel: Term) -> Term {
        Term::SendTm { payload: Box::new(payload), channel: Box::new(channel) }
    }

    pub fn recv(channel: Term) -> Term {
        Term::RecvTm(Box::new(channel))
    }

    pub fn select(label: Label, channel: Term) -> Term {
        Term::SelectTm(label, Box::new(channel))
    }

    pub fn case(subject: Term, branches: Vec<(Label, Term)>) -> Term {
        Term::CaseTm {
            subject: Box::new(subject),
            branches: branches.into_iter().collect(),
        }
    }

    pub fn close(subject: Term, cont: Term) -> Term {
        Term::CloseTm { subject: Box::new(subject), cont: Box::new(cont) }
    }

    /// Values: the forms a thread can hand over or finish on.
    pub fn is_value(&self) -> bool {
        matches!(
            self,
            Term::Abs { .. } | Term::UnitVal | Term::Pair(..) | Term::Chan(_)
        )
    }
}

/// Free term variables (`Var` leaves only; channel endpoints are tracked
/// separately).
pub fn free_vars(t: &Term) -> BTreeSet<Name> {
    fn walk(t: &Term, bound: &mut Vec<Name>, acc: &mut BTreeSet<Name>) {
        match t {
            Term::Var(x) => {
                if !bound.contains(x) {
                    acc.insert(*x);
                }
            }
            Term::Abs { param, body, .. } => {
                bound.push(*param);
                walk(body, bound, acc);
                bound.pop();
            }
            Term::App(f, a) => {
                walk(f, bound, acc);
                walk(a, bound, acc);
            }
            Term::ExplSub { body, var, arg } => {
                bound.push(*var);
                walk(body, bound, acc);
                bound.pop();
                walk(arg, bound, acc);
            }
            Term::UnitVal | Term::New | Term::Chan(_) => {}
            Term::Pair(l, r) => {
                walk(l, bound, acc);
                walk(r, bound, acc);
            }
            Term::LetPair { left, right, pair, body, .. } => {
                walk(pair, bound, acc);
                bound.push(*left);
                bound.push(*right);
                walk(body, bound, acc);
                bound.pop();
                bound.pop();
            }
            Term::Spawn { child, cont } => {
                walk(child, bound, acc);
                walk(cont, bound, acc);
            }
            Term::SendTm { payload, channel } => {
                walk(payload, bound, acc);
                walk(channel, bound, acc);
            }
            Term::RecvTm(c) => walk(c, bound, acc),
            Term::SelectTm(_, c) => walk(c, bound, acc),
            Term::CaseTm { subject, branches } => {
                walk(subject, bound, acc);
                for b in branches.values() {
                    walk(b, bound, acc);
                }
            }
            Term::CloseTm { subject, cont } => {
                walk(subject, bound, acc);
                walk(cont, bound, acc);
            }
        }
    }
    let mut acc = BTreeSet::new();
    walk(t, &mut Vec::new(), &mut acc);
    acc
}

/// Channel endpoints occurring in the term. Endpoints have no term-level
/// binders, so this is a plain leaf collection.
pub fn free_chans(t: &Term) -> BTreeSet<Name> {
    fn walk(t: &Term, acc: &mut BTreeSet<Name>) {
        match t {
            Term::Chan(c) => {
                acc.insert(*c);
            }
            Term::Var(_) | Term::UnitVal | Term::New => {}
            Term::Abs { body, .. } => walk(body, acc),
            Term::App(f, a) => {
                walk(f, acc);
                walk(a, acc);
            }
            Term::ExplSub { body, arg, .. } => {
                walk(body, acc);
                walk(arg, acc);
            }
            Term::Pair(l, r) => {
                walk(l, acc);
                walk(r, acc);
            }
            Term::LetPair { pair, body, .. } => {
                walk(pair, acc);
                walk(body, acc);
            }
            Term::Spawn { child, cont } => {
                walk(child, acc);
                walk(cont, acc);
            }
            Term::SendTm { payload, channel } => {
                walk(payload, acc);
                walk(channel, acc);
            }
            Term::RecvTm(c) => walk(c, acc),
            Term::SelectTm(_, c) => walk(c, acc),
            Term::CaseTm { subject, branches } => {
                walk(subject, acc);
                for b in branches.values() {
                    walk(b, acc);
                }
            }
            Term::CloseTm { subject, cont } => {
                walk(subject, acc);
                walk(cont, acc);
            }
        }
    }
    let mut acc = BTreeSet::new();
    walk(t, &mut acc);
    acc
}

/// Replaces free occurrences of `Var(old)` with `Var(new)`. `new` must be
/// fresh for the term, which rules out capture.
pub fn rename_free_var(t: &Term, old: Name, new: Name) -> Term {
    fn go(t: &Term, old: Name, new: Name) -> Term {
        match t {
            Term::Var(x) => Term::Var(if *x == old { new } else { *x }),
            Term::Abs { param, ann, body } => {
                if *param == old {
                    t.clone()
                } else {
                    Term::Abs {
                        param: *param,
                        ann: ann.clone(),
                        body: Box::new(go(body, old, new)),
                    }
                }
            }
            Term::App(f, a) => Term::app(go(f, old, new), go(a, old, new)),
            Term::ExplSub { body, var, arg } => {
                let body = if *var == old { (**body).clone() } else { go(body, old, new) };
                Term::subst_frame(body, *var, go(arg, old, new))
            }
            Term::UnitVal => Term::UnitVal,
            Term::New => Term::New,
            Term::Chan(c) => Term::Chan(*c),
            Term::Pair(l, r) => Term::pair(go(l, old, new), go(r, old, new)),
            Term::LetPair { left, left_ann, right, right_ann, pair, body } => {
                let body = if *left == old || *right == old {
                    (**body).clone()
                } else {
                    go(body, old, new)
                };
                Term::LetPair {
                    left: *left,
                    left_ann: left_ann.clone(),
                    right: *right,
                    right_ann: right_ann.clone(),
                    pair: Box::new(go(pair, old, new)),
                    body: Box::new(body),
                }
            }
            Term::Spawn { child, cont } => Term::spawn(go(child, old, new), go(cont, old, new)),
            Term::SendTm { payload, channel } => {
                Term::send(go(payload, old, new), go(channel, old, new))
            }
            Term::RecvTm(c) => Term::recv(go(c, old, new)),
            Term::SelectTm(l, c) => Term::select(l.clone(), go(c, old, new)),
            Term::CaseTm { subject, branches } => Term::CaseTm {
                subject: Box::new(go(subject, old, new)),
                branches: branches
                    .iter()
                    .map(|(l, b)| (l.clone(), go(b, old, new)))
                    .collect(),
            },
            Term::CloseTm { subject, cont } => {
                Term::close(go(subject, old, new), go(cont, old, new))
            }
        }
    }
    go(t, old, new)
}

/// Replaces a channel endpoint everywhere; endpoints have no binders.
pub fn rename_chan(t: &Term, old: Name, new: Name) -> Term {
    fn go(t: &Term, old: Name, new: Name) -> Term {
        match t {
            Term::Chan(c) => Term::Chan(if *c == old { new } else { *c }),
            Term::Var(x) => Term::Var(*x),
            Term::Abs { param, ann, body } => Term::Abs {
                param: *param,
                ann: ann.clone(),
                body: Box::new(go(body, old, new)),
            },
            Term::App(f, a) => Term::app(go(f, old, new), go(a, old, new)),
            Term::ExplSub { body, var, arg } => {
                Term::subst_frame(go(body, old, new), *var, go(arg, old, new))
            }
            Term::UnitVal => Term::UnitVal,
            Term::New => Term::New,
            Term::Pair(l, r) => Term::pair(go(l, old, new), go(r, old, new)),
            Term::LetPair { left, left_ann, right, right_ann, pair, body } => Term::LetPair {
                left: *left,
                left_ann: left_ann.clone(),
                right: *right,
                right_ann: right_ann.clone(),
                pair: Box::new(go(pair, old, new)),
                body: Box::new(go(body, old, new)),
            },
            Term::Spawn { child, cont } => Term::spawn(go(child, old, new), go(cont, old, new)),
            Term::SendTm { payload, channel } => {
                Term::send(go(payload, old, new), go(channel, old, new))
            }
            Term::RecvTm(c) => Term::recv(go(c, old, new)),
            Term::SelectTm(l, c) => Term::select(l.clone(), go(c, old, new)),
            Term::CaseTm { subject, branches } => Term::CaseTm {
                subject: Box::new(go(subject, old, new)),
                branches: branches
                    .iter()
                    .map(|(l, b)| (l.clone(), go(b, old, new)))
                    .collect(),
            },
            Term::CloseTm { subject, cont } => {
                Term::close(go(subject, old, new), go(cont, old, new))
            }
        }
    }
    go(t, old, new)
}

/// Canonical renaming of all binders, for structural comparison up to
/// alpha-equivalence. Free variables and endpoints are untouched.
pub fn term_alpha_canonical(t: &Term) -> Term {
    fn go(t: &Term, env: &mut Vec<(Name, Name)>, next: &mut u64) -> Term {
        let bind = |n: Name, env: &mut Vec<(Name, Name)>, next: &mut u64| -> Name {
            let fresh = Name::canonical(*next);
            *next += 1;
            env.push((n, fresh));
            fresh
        };
        let resolve = |n: Name, env: &Vec<(Name, Name)>| -> Name {
            env.iter().rev().find(|(o, _)| *o == n).map(|(_, f)| *f).unwrap_or(n)
        };
        match t {
            Term::Var(x) => Term::Var(resolve(*x, env)),
            Term::Chan(c) => Term::Chan(*c),
            Term::UnitVal => Term::UnitVal,
            Term::New => Term::New,
            Term::Abs { param, ann, body } => {
                let p = bind(*param, env, next);
                let body = go(body, env, next);
                env.pop();
                Term::Abs { param: p, ann: ann.clone(), body: Box::new(body) }
            }
            Term::App(f, a) => Term::app(go(f, env, next), go(a, env, next)),
            Term::ExplSub { body, var, arg } => {
                let arg = go(arg, env, next);
                let v = bind(*var, env, next);
                let body = go(body, env, next);
                env.pop();
                Term::subst_frame(body, v, arg)
            }
            Term::Pair(l, r) => Term::pair(go(l, env, next), go(r, env, next)),
            Term::LetPair { left, left_ann, right, right_ann, pair, body } => {
                let pair = go(pair, env, next);
                let l = bind(*left, env, next);
                let r = bind(*right, env, next);
                let body = go(body, env, next);
                env.pop();
                env.pop();
                Term::LetPair {
                    left: l,
                    left_ann: left_ann.clone(),
                    right: r,
                    right_ann: right_ann.clone(),
                    pair: Box::new(pair),
                    body: Box::new(body),
                }
            }
            Term::Spawn { child, cont } => {
                Term::spawn(go(child, env, next), go(cont, env, next))
            }
            Term::SendTm { payload, channel } => {
                Term::send(go(payload, env, next), go(channel, env, next))
            }
            Term::RecvTm(c) => Term::recv(go(c, env, next)),
            Term::SelectTm(l, c) => Term::select(l.clone(), go(c, env, next)),
            Term::CaseTm { subject, branches } => Term::CaseTm {
                subject: Box::new(go(subject, env, next)),
                branches: branches
                    .iter()
                    .map(|(l, b)| (l.clone(), go(b, env, next)))
                    .collect(),
            },
            Term::CloseTm { subject, cont } => {
                Term::close(go(subject, env, next), go(cont, env, next))
            }
        }
    }
    go(t, &mut Vec::new(), &mut 0)
}

pub fn term_alpha_eq(a: &Term, b: &Term) -> bool {
    term_alpha_canonical(a) == term_alpha_canonical(b)
}

fn ftype_level(t: &FunType) -> u8 {
    match t {
        FunType::Arrow(..) => 0,
        FunType::Prod(..) => 1,
        _ => 2,
    }
}

fn render_funtype(t: &FunType, min: u8, out: &mut String) {
    let wrap = ftype_level(t) < min;
    if wrap {
        out.push('(');
    }
    match t {
        FunType::Unit => out.push('1'),
        FunType::End => out.push_str("end"),
        FunType::TVar(n) => out.push_str(n),
        FunType::Arrow(l, r) => {
            render_funtype(l, 1, out);
            out.push_str(" -o ");
            render_funtype(r, 0, out);
        }
        FunType::Prod(l, r) => {
            render_funtype(l, 2, out);
            out.push_str(" * ");
            render_funtype(r, 1, out);
        }
        FunType::Out(p, s) => {
            out.push('!');
            render_funtype(p, 2, out);
            out.push('.');
            render_funtype(s, 2, out);
        }
        FunType::In(p, s) => {
            out.push('?');
            render_funtype(p, 2, out);
            out.push('.');
            render_funtype(s, 2, out);
        }
        FunType::Choice(bs) | FunType::Offer(bs) => {
            out.push(if matches!(t, FunType::Choice(_)) { '+' } else { '&' });
            out.push('{');
            let mut first = true;
            for (l, s) in bs {
                if !first {
                    out.push_str(", ");
                }
                first = false;
                out.push_str(&l.0);
                out.push_str(": ");
                render_funtype(s, 0, out);
            }
            out.push('}');
        }
    }
    if wrap {
        out.push(')');
    }
}

pub fn print_funtype(t: &FunType) -> String {
    let mut out = String::new();
    render_funtype(t, 0, &mut out);
    out
}

impl fmt::Display for FunType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_funtype(self))
    }
}

fn term_level(t: &Term) -> u8 {
    match t {
        Term::Abs { .. }
        | Term::LetPair { .. }
        | Term::Spawn { .. }
        | Term::CloseTm { .. } => 0,
        Term::App(..)
        | Term::SendTm { .. }
        | Term::RecvTm(_)
        | Term::SelectTm(..)
        | Term::CaseTm { .. } => 1,
        _ => 2,
    }
}

fn render_term(t: &Term, min: u8, out: &mut String, disp: &dyn Fn(Name) -> String) {
    let wrap = term_level(t) < min;
    if wrap {
        out.push('(');
    }
    match t {
        Term::Var(x) => out.push_str(&disp(*x)),
        Term::Chan(c) => out.push_str(&disp(*c)),
        Term::UnitVal => out.push_str("()"),
        Term::New => out.push_str("new"),
        Term::Abs { param, ann, body } => {
            out.push('\\');
            out.push_str(&disp(*param));
            if let Some(t) = ann {
                out.push(':');
                out.push_str(&print_funtype(t));
            }
            out.push_str(". ");
            render_term(body, 0, out, disp);
        }
        Term::App(f, a) => {
            render_term(f, 1, out, disp);
            out.push(' ');
            render_term(a, 2, out, disp);
        }
        Term::ExplSub { body, var, arg } => {
            render_term(body, 2, out, disp);
            out.push('[');
            out.push_str(&disp(*var));
            out.push_str(" := ");
            render_term(arg, 0, out, disp);
            out.push(']');
        }
        Term::Pair(l, r) => {
            out.push('(');
            render_term(l, 0, out, disp);
            out.push_str(", ");
            render_term(r, 0, out, disp);
            out.push(')');
        }
        Term::LetPair { left, left_ann, right, right_ann, pair, body } => {
            out.push_str("let (");
            out.push_str(&disp(*left));
            if let Some(t) = left_ann {
                out.push(':');
                out.push_str(&print_funtype(t));
            }
            out.push_str(", ");
            out.push_str(&disp(*right));
            if let Some(t) = right_ann {
                out.push(':');
                out.push_str(&print_funtype(t));
            }
            out.push_str(") = ");
            render_term(pair, 1, out, disp);
            out.push_str(" in ");
            render_term(body, 0, out, disp);
        }
        Term::Spawn { child, cont } => {
            out.push_str("spawn ");
            render_term(child, 1, out, disp);
            out.push_str("; ");
            render_term(cont, 0, out, disp);
        }
        Term::SendTm { payload, channel } => {
            out.push_str("send ");
            render_term(payload, 2, out, disp);
            out.push(' ');
            render_term(channel, 2, out, disp);
        }
        Term::RecvTm(c) => {
            out.push_str("recv ");
            render_term(c, 2, out, disp);
        }
        Term::SelectTm(l, c) => {
            out.push_str("select ");
            out.push_str(&l.0);
            out.push(' ');
            render_term(c, 2, out, disp);
        }
        Term::CaseTm { subject, branches } => {
            out.push_str("case ");
            render_term(subject, 2, out, disp);
            out.push_str(" { ");
            let mut first = true;
            for (l, b) in branches {
                if !first {
                    out.push_str(", ");
                }
                first = false;
                out.push_str(&l.0);
                out.push_str(": ");
                render_term(b, 0, out, disp);
            }
            out.push_str(" }");
        }
        Term::CloseTm { subject, cont } => {
            out.push_str("close ");
            render_term(subject, 1, out, disp);
            out.push_str("; ");
            render_term(cont, 0, out, disp);
        }
    }
    if wrap {
        out.push(')');
    }
}

fn term_occurrences(t: &Term, acc: &mut Vec<Name>) {
    let note = |n: Name, acc: &mut Vec<Name>| {
        if !acc.contains(&n) {
            acc.push(n);
        }
    };
    match t {
        Term::Var(x) => note(*x, acc),
        Term::Chan(c) => note(*c, acc),
        Term::UnitVal | Term::New => {}
        Term::Abs { param, body, .. } => {
            note(*param, acc);
            term_occurrences(body, acc);
        }
        Term::App(f, a) => {
            term_occurrences(f, acc);
            term_occurrences(a, acc);
        }
        Term::ExplSub { body, var, arg } => {
            term_occurrences(body, acc);
            note(*var, acc);
            term_occurrences(arg, acc);
        }
        Term::Pair(l, r) => {
            term_occurrences(l, acc);
            term_occurrences(r, acc);
        }
        Term::LetPair { left, right, pair, body, .. } => {
            note(*left, acc);
            note(*right, acc);
            term_occurrences(pair, acc);
            term_occurrences(body, acc);
        }
        Term::Spawn { child, cont } => {
            term_occurrences(child, acc);
            term_occurrences(cont, acc);
        }
        Term::SendTm { payload, channel } => {
            term_occurrences(payload, acc);
            term_occurrences(channel, acc);
        }
        Term::RecvTm(c) => term_occurrences(c, acc),
        Term::SelectTm(_, c) => term_occurrences(c, acc),
        Term::CaseTm { subject, branches } => {
            term_occurrences(subject, acc);
            for b in branches.values() {
                term_occurrences(b, acc);
            }
        }
        Term::CloseTm { subject, cont } => {
            term_occurrences(subject, acc);
            term_occurrences(cont, acc);
        }
    }
}

pub fn print_term(t: &Term) -> String {
    let mut order = Vec::new();
    term_occurrences(t, &mut order);
    let disp = crate::print::assign_display(order);
    let mut out = String::new();
    render_term(t, 0, &mut out, &disp);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(s: &str) -> Name {
        Name::intern(s)
    }

    #[test]
    fn prints_with_precedence() {
        let (x, y) = (n("x"), n("y"));
        let id = Term::abs(y, Term::var(y));
        let t = Term::app(Term::abs(x, Term::var(x)), id.clone());
        assert_eq!(print_term(&t), "(\\x. x) (\\y. y)");
        let nested = Term::app(Term::app(Term::var(x), Term::var(y)), Term::UnitVal);
        assert_eq!(print_term(&nested), "x y ()");
        let frame = Term::subst_frame(Term::var(x), x, id);
        assert_eq!(print_term(&frame), "x[x := \\y. y]");
    }

    #[test]
    fn dual_swaps_directions() {
        let s = FunType::out(FunType::Unit, FunType::End);
        assert_eq!(fun_dual(&s).unwrap(), FunType::inp(FunType::Unit, FunType::End));
        assert_eq!(fun_dual(&fun_dual(&s).unwrap()).unwrap(), s);
        assert!(fun_dual(&FunType::tvar("T")).is_err());
    }

    #[test]
    fn alpha_identifies_renamed_binders() {
        let (x, y) = (n("x"), n("y"));
        let a = Term::abs(x, Term::var(x));
        let b = Term::abs(y, Term::var(y));
        assert!(term_alpha_eq(&a, &b));
        assert!(!term_alpha_eq(&a, &Term::abs(x, Term::var(y))));
    }

    #[test]
    fn rename_respects_shadowing() {
        let (x, z) = (n("x"), n("z"));
        let t = Term::app(Term::var(x), Term::abs(x, Term::var(x)));
        let r = rename_free_var(&t, x, z);
        assert_eq!(r, Term::app(Term::var(z), Term::abs(x, Term::var(x))));
    }

    #[test]
    fn funtype_rendering() {
        let t = FunType::arrow(
            FunType::prod(FunType::tvar("T"), FunType::tvar("S")),
            FunType::out(FunType::tvar("T"), FunType::tvar("S")),
        );
        assert_eq!(print_funtype(&t), "T * S -o !T.S");
        let u = FunType::prod(FunType::prod(FunType::Unit, FunType::Unit), FunType::Unit);
        assert_eq!(print_funtype(&u), "(1 * 1) * 1");
    }
}
