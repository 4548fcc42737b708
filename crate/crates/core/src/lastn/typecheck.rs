//! Linear typing for terms and configurations.
//!
//! Terms are checked in leftover style: the context flows through the term
//! and every entry must be consumed exactly once, unit-typed entries
//! included. Parallel threads split the context implicitly by threading the
//! leftover from one side into the other. A buffered channel is consistent
//! when each endpoint can consume its pending queue and the two stripped
//! types are dual.

use std::collections::{BTreeSet, VecDeque};

use crate::checker::CheckFailure;
use crate::lastn::config::{BufItem, Configuration};
use crate::lastn::term::{fun_dual, print_funtype, FunType, Term};
use crate::name::Name;

/// Typing verdict for a configuration: whether the main thread is present
/// and the type observed at it (the unit type when only children remain).
#[derive(Debug, Clone)]
pub struct ConfigVerdict {
    pub accepted: bool,
    pub main: bool,
    pub return_type: Option<FunType>,
    pub failure: Option<CheckFailure>,
}

impl ConfigVerdict {
    pub fn render(&self) -> String {
        match &self.failure {
            None => format!(
                "ACCEPT {} : {}",
                if self.main { "main" } else { "children" },
                self.return_type.as_ref().map(print_funtype).unwrap_or_default(),
            ),
            Some(f) => format!("REJECT: {} at {}: {}", f.rule, f.path, f.message),
        }
    }
}

struct Lin {
    entries: Vec<(Name, FunType)>,
    path: Vec<String>,
}

impl Lin {
    fn fail(&self, rule: &str, message: String) -> CheckFailure {
        CheckFailure {
            rule: rule.to_string(),
            path: if self.path.is_empty() { "root".to_string() } else { self.path.join("/") },
            message,
        }
    }

    fn at<T>(
        &mut self,
        seg: &str,
        f: impl FnOnce(&mut Self) -> Result<T, CheckFailure>,
    ) -> Result<T, CheckFailure> {
        self.path.push(seg.to_string());
        let out = f(self);
        self.path.pop();
        out
    }

    fn take(&mut self, n: Name) -> Option<FunType> {
        let i = self.entries.iter().position(|(m, _)| *m == n)?;
        Some(self.entries.remove(i).1)
    }

    fn consume(&mut self, n: Name, role: &str) -> Result<FunType, CheckFailure> {
        match self.take(n) {
            Some(t) => Ok(t),
            None => Err(self.fail(
                "typ-var",
                format!("{role} {} is unbound or already consumed", n.origin()),
            )),
        }
    }

    /// Introduce a binder, displacing any shadowed entry of the same name.
    fn bind(&mut self, n: Name, t: FunType) -> Option<FunType> {
        let displaced = self.take(n);
        self.entries.push((n, t));
        displaced
    }

    /// Retire a binder: it must have been consumed. Restores the displaced
    /// entry afterwards.
    fn unbind(
        &mut self,
        n: Name,
        displaced: Option<FunType>,
        role: &str,
    ) -> Result<(), CheckFailure> {
        if let Some(t) = self.take(n) {
            return Err(self.fail(
                "linearity",
                format!("{role} {} : {} is never used", n.origin(), print_funtype(&t)),
            ));
        }
        if let Some(t) = displaced {
            self.entries.push((n, t));
        }
        Ok(())
    }

    /// Like unbind, but a completed endpoint may go unused: its close
    /// already fired and left the session at `end`.
    fn unbind_endpoint(
        &mut self,
        n: Name,
        displaced: Option<FunType>,
    ) -> Result<(), CheckFailure> {
        match self.take(n) {
            None | Some(FunType::End) => {
                if let Some(t) = displaced {
                    self.entries.push((n, t));
                }
                Ok(())
            }
            Some(t) => Err(self.fail(
                "linearity",
                format!("endpoint {} : {} is never used", n.origin(), print_funtype(&t)),
            )),
        }
    }

    fn leftover_empty(&self) -> Result<(), CheckFailure> {
        match self.entries.first() {
            None => Ok(()),
            Some((n, t)) => Err(self.fail(
                "linearity",
                format!("context entry {} : {} is never used", n.origin(), print_funtype(t)),
            )),
        }
    }

    fn term(&mut self, t: &Term) -> Result<FunType, CheckFailure> {
        match t {
            Term::Var(x) => self.consume(*x, "variable"),
            Term::Chan(x) => self.consume(*x, "endpoint"),
            Term::UnitVal => Ok(FunType::Unit),
            Term::Abs { param, ann, body } => {
                let Some(pt) = ann else {
                    return Err(self.fail(
                        "typ-abs",
                        format!("parameter {} needs a type ascription", param.origin()),
                    ));
                };
                let displaced = self.bind(*param, pt.clone());
                let bt = self.at("abs.body", |s| s.term(body))?;
                self.unbind(*param, displaced, "parameter")?;
                Ok(FunType::arrow(pt.clone(), bt))
            }
            Term::App(f, a) => {
                let ft = self.at("app.fun", |s| s.term(f))?;
                let FunType::Arrow(dom, cod) = ft else {
                    return Err(self.fail(
                        "typ-app",
                        format!("applied term has type {}, not a function", print_funtype(&ft)),
                    ));
                };
                let at = self.at("app.arg", |s| s.term(a))?;
                if at != *dom {
                    return Err(self.fail(
                        "typ-app",
                        format!(
                            "argument has type {}, the function expects {}",
                            print_funtype(&at),
                            print_funtype(&dom)
                        ),
                    ));
                }
                Ok(*cod)
            }
            Term::ExplSub { body, var, arg } => {
                let at = self.at("sub.arg", |s| s.term(arg))?;
                let displaced = self.bind(*var, at);
                let bt = self.at("sub.body", |s| s.term(body))?;
                self.unbind(*var, displaced, "substituted variable")?;
                Ok(bt)
            }
            Term::Pair(l, r) => {
                let lt = self.at("pair.0", |s| s.term(l))?;
                let rt = self.at("pair.1", |s| s.term(r))?;
                Ok(FunType::prod(lt, rt))
            }
            Term::LetPair { left, left_ann, right, right_ann, pair, body } => {
                if left == right {
                    return Err(self.fail(
                        "typ-let",
                        format!("the binders must be distinct, both are {}", left.origin()),
                    ));
                }
                let (lt, rt) = if **pair == Term::New {
                    self.endpoint_types(left_ann, right_ann)?
                } else {
                    let pt = self.at("let.pair", |s| s.term(pair))?;
                    let FunType::Prod(a, b) = pt else {
                        return Err(self.fail(
                            "typ-let",
                            format!(
                                "destructured term has type {}, not a pair",
                                print_funtype(&pt)
                            ),
                        ));
                    };
                    for (ann, actual, side) in
                        [(left_ann, &*a, "left"), (right_ann, &*b, "right")]
                    {
                        if let Some(want) = ann {
                            if want != actual {
                                return Err(self.fail(
                                    "typ-let",
                                    format!(
                                        "the {side} binder is ascribed {}, the pair provides {}",
                                        print_funtype(want),
                                        print_funtype(actual)
                                    ),
                                ));
                            }
                        }
                    }
                    (*a, *b)
                };
                let dl = self.bind(*left, lt);
                let dr = self.bind(*right, rt);
                let bt = self.at("let.body", |s| s.term(body))?;
                self.unbind(*right, dr, "binder")?;
                self.unbind(*left, dl, "binder")?;
                Ok(bt)
            }
            Term::New => Err(self.fail(
                "typ-new",
                "a fresh channel must be destructured by a let pair".to_string(),
            )),
            Term::Spawn { child, cont } => {
                let ct = self.at("spawn.child", |s| s.term(child))?;
                if ct != FunType::Unit {
                    return Err(self.fail(
                        "typ-spawn",
                        format!(
                            "spawned term has type {}, child threads return the unit value",
                            print_funtype(&ct)
                        ),
                    ));
                }
                self.at("spawn.cont", |s| s.term(cont))
            }
            Term::SendTm { payload, channel } => {
                let pt = self.at("send.payload", |s| s.term(payload))?;
                let st = self.at("send.channel", |s| s.term(channel))?;
                let FunType::Out(want, cont) = st else {
                    return Err(self.fail(
                        "typ-send",
                        format!(
                            "send subject has type {}, not an output session",
                            print_funtype(&st)
                        ),
                    ));
                };
                if pt != *want {
                    return Err(self.fail(
                        "typ-send",
                        format!(
                            "payload has type {}, the session sends {}",
                            print_funtype(&pt),
                            print_funtype(&want)
                        ),
                    ));
                }
                Ok(*cont)
            }
            Term::RecvTm(subject) => {
                let st = self.at("recv.subject", |s| s.term(subject))?;
                let FunType::In(payload, cont) = st else {
                    return Err(self.fail(
                        "typ-recv",
                        format!(
                            "receive subject has type {}, not an input session",
                            print_funtype(&st)
                        ),
                    ));
                };
                Ok(FunType::prod(*payload, *cont))
            }
            Term::SelectTm(label, subject) => {
                let st = self.at("select.subject", |s| s.term(subject))?;
                let FunType::Choice(branches) = st else {
                    return Err(self.fail(
                        "typ-select",
                        format!(
                            "selection subject has type {}, not an internal choice",
                            print_funtype(&st)
                        ),
                    ));
                };
                match branches.get(label) {
                    Some(s) => Ok(s.clone()),
                    None => Err(self.fail(
                        "typ-select",
                        format!("label {label} is not offered by the session"),
                    )),
                }
            }
            Term::CaseTm { subject, branches } => {
                let st = self.at("case.subject", |s| s.term(subject))?;
                let FunType::Offer(offered) = st else {
                    return Err(self.fail(
                        "typ-case",
                        format!(
                            "case subject has type {}, not an external choice",
                            print_funtype(&st)
                        ),
                    ));
                };
                let have: Vec<_> = branches.keys().map(|l| l.to_string()).collect();
                let want: Vec<_> = offered.keys().map(|l| l.to_string()).collect();
                if have != want {
                    return Err(self.fail(
                        "typ-case",
                        format!(
                            "the branches handle {{{}}}, the session offers {{{}}}",
                            have.join(", "),
                            want.join(", ")
                        ),
                    ));
                }
                let snapshot = self.entries.clone();
                let mut out: Option<FunType> = None;
                let mut leftover: Option<Vec<(Name, FunType)>> = None;
                for (l, n) in branches {
                    self.entries = snapshot.clone();
                    let bt = self.at(&format!("case.{l}"), |s| s.term(n))?;
                    let FunType::Arrow(dom, cod) = bt else {
                        return Err(self.fail(
                            "typ-case",
                            format!(
                                "branch {l} has type {}, a branch consumes the continued session",
                                print_funtype(&bt)
                            ),
                        ));
                    };
                    let cont = &offered[l];
                    if *dom != *cont {
                        return Err(self.fail(
                            "typ-case",
                            format!(
                                "branch {l} consumes {}, the session continues as {}",
                                print_funtype(&dom),
                                print_funtype(cont)
                            ),
                        ));
                    }
                    match &out {
                        None => out = Some(*cod),
                        Some(t) if *t == *cod => {}
                        Some(t) => {
                            return Err(self.fail(
                                "typ-case",
                                format!(
                                    "branch {l} returns {}, earlier branches return {}",
                                    print_funtype(&cod),
                                    print_funtype(t)
                                ),
                            ));
                        }
                    }
                    let mut now = self.entries.clone();
                    now.sort_by_key(|(n, _)| *n);
                    match &leftover {
                        None => leftover = Some(now),
                        Some(lo) if *lo == now => {}
                        Some(_) => {
                            return Err(self.fail(
                                "typ-case",
                                format!(
                                    "branch {l} consumes a different set of names than earlier branches"
                                ),
                            ));
                        }
                    }
                }
                match out {
                    Some(t) => Ok(t),
                    None => Err(self.fail("typ-case", "a case needs at least one branch".to_string())),
                }
            }
            Term::CloseTm { subject, cont } => {
                let st = self.at("close.subject", |s| s.term(subject))?;
                if st != FunType::End {
                    return Err(self.fail(
                        "typ-close",
                        format!(
                            "close subject has type {}, not a completed session",
                            print_funtype(&st)
                        ),
                    ));
                }
                self.at("close.cont", |s| s.term(cont))
            }
        }
    }

    /// Endpoint types for a let-bound fresh channel: at least one binder must
    /// carry a session ascription, the other side is its dual.
    fn endpoint_types(
        &self,
        left_ann: &Option<FunType>,
        right_ann: &Option<FunType>,
    ) -> Result<(FunType, FunType), CheckFailure> {
        match (left_ann, right_ann) {
            (Some(l), Some(r)) => {
                let want = fun_dual(l).map_err(|e| self.fail("typ-new", e))?;
                if want != *r {
                    return Err(self.fail(
                        "typ-new",
                        format!(
                            "the endpoint ascriptions are not dual: {} vs {}",
                            print_funtype(l),
                            print_funtype(r)
                        ),
                    ));
                }
                Ok((l.clone(), r.clone()))
            }
            (Some(l), None) => {
                let r = fun_dual(l).map_err(|e| self.fail("typ-new", e))?;
                Ok((l.clone(), r))
            }
            (None, Some(r)) => {
                let l = fun_dual(r).map_err(|e| self.fail("typ-new", e))?;
                Ok((l, r.clone()))
            }
            (None, None) => Err(self.fail(
                "typ-new",
                "a fresh channel needs a session ascription on one binder".to_string(),
            )),
        }
    }

    /// Advance an endpoint's type past its pending queue, consuming buffered
    /// payload values from the context and checking them against both the
    /// protocol and the type recorded at enqueue time.
    fn strip(
        &mut self,
        ep: Name,
        t: &FunType,
        q: &VecDeque<BufItem>,
    ) -> Result<FunType, CheckFailure> {
        let mut cur = t.clone();
        for (i, item) in q.iter().enumerate() {
            cur = match (item, cur) {
                (BufItem::Val(v, recorded), FunType::In(want, cont)) => {
                    let vt =
                        self.at(&format!("queue.{}.{i}", ep.origin()), |s| s.term(v))?;
                    if vt != *want {
                        return Err(self.fail(
                            "typ-buf",
                            format!(
                                "queued value for {} has type {}, the session delivers {}",
                                ep.origin(),
                                print_funtype(&vt),
                                print_funtype(&want)
                            ),
                        ));
                    }
                    if let Some(r) = recorded {
                        if *r != vt {
                            return Err(self.fail(
                                "typ-buf",
                                format!(
                                    "queued value for {} was recorded at {}, it has type {}",
                                    ep.origin(),
                                    print_funtype(r),
                                    print_funtype(&vt)
                                ),
                            ));
                        }
                    }
                    *cont
                }
                (BufItem::Label(l), FunType::Offer(branches)) => match branches.get(l) {
                    Some(s) => s.clone(),
                    None => {
                        return Err(self.fail(
                            "typ-buf",
                            format!("queued label #{l} is not offered by {}", ep.origin()),
                        ));
                    }
                },
                (item, cur) => {
                    let what = match item {
                        BufItem::Val(..) => "a value".to_string(),
                        BufItem::Label(l) => format!("label #{l}"),
                    };
                    return Err(self.fail(
                        "typ-buf",
                        format!(
                            "endpoint {} at {} cannot consume the queued {what}",
                            ep.origin(),
                            print_funtype(&cur)
                        ),
                    ));
                }
            };
        }
        Ok(cur)
    }

    fn config(&mut self, c: &Configuration) -> Result<(bool, FunType), CheckFailure> {
        match c {
            Configuration::Thread { main, term } => {
                let seg = if *main { "main" } else { "child" };
                let t = self.at(seg, |s| s.term(term))?;
                if !*main && t != FunType::Unit {
                    return Err(self.fail(
                        "typ-child",
                        format!(
                            "child thread returns {}, children return the unit value",
                            print_funtype(&t)
                        ),
                    ));
                }
                Ok((*main, t))
            }
            Configuration::ParC(l, r) => {
                let (ml, tl) = self.at("par.0", |s| s.config(l))?;
                let (mr, tr) = self.at("par.1", |s| s.config(r))?;
                if ml && mr {
                    return Err(self.fail("typ-par", "two main threads".to_string()));
                }
                Ok((ml || mr, if ml { tl } else if mr { tr } else { FunType::Unit }))
            }
            Configuration::ResC { a, b, a_type, b_type, buf, body } => {
                let (Some(ta), Some(tb)) = (a_type, b_type) else {
                    return Err(self.fail(
                        "typ-chan",
                        format!(
                            "channel ({}, {}) lacks a recorded session type",
                            a.origin(),
                            b.origin()
                        ),
                    ));
                };
                let da = self.bind(*a, ta.clone());
                let db = self.bind(*b, tb.clone());
                let ra = self.strip(*a, ta, &buf.to_a)?;
                let rb = self.strip(*b, tb, &buf.to_b)?;
                let want = fun_dual(&ra).map_err(|e| self.fail("typ-chan", e))?;
                if want != rb {
                    return Err(self.fail(
                        "typ-chan",
                        format!(
                            "after pending messages the endpoints are not dual: {} at {}, {} at {}",
                            a.origin(),
                            print_funtype(&ra),
                            b.origin(),
                            print_funtype(&rb)
                        ),
                    ));
                }
                let out = self.at("chan.body", |s| s.config(body))?;
                self.unbind_endpoint(*b, db)?;
                self.unbind_endpoint(*a, da)?;
                Ok(out)
            }
        }
    }
}

fn context_entries(g: &[(Name, FunType)]) -> Result<Vec<(Name, FunType)>, CheckFailure> {
    let mut seen = BTreeSet::new();
    for (n, _) in g {
        if !seen.insert(*n) {
            return Err(CheckFailure {
                rule: "context".to_string(),
                path: "root".to_string(),
                message: format!("the context lists {} twice", n.origin()),
            });
        }
    }
    Ok(g.to_vec())
}

/// Type of a closed-context term; the whole context must be consumed.
pub fn typecheck_term(t: &Term, g: &[(Name, FunType)]) -> Result<FunType, CheckFailure> {
    let mut lin = Lin { entries: context_entries(g)?, path: Vec::new() };
    let ty = lin.term(t)?;
    lin.leftover_empty()?;
    Ok(ty)
}

pub fn typecheck_config(c: &Configuration, g: &[(Name, FunType)]) -> ConfigVerdict {
    let reject = |f: CheckFailure| ConfigVerdict {
        accepted: false,
        main: false,
        return_type: None,
        failure: Some(f),
    };
    let entries = match context_entries(g) {
        Ok(e) => e,
        Err(f) => return reject(f),
    };
    let mut lin = Lin { entries, path: Vec::new() };
    let checked = lin.config(c).and_then(|out| {
        lin.leftover_empty()?;
        Ok(out)
    });
    match checked {
        Ok((main, t)) => ConfigVerdict {
            accepted: true,
            main,
            return_type: Some(if main { t } else { FunType::Unit }),
            failure: None,
        },
        Err(f) => reject(f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lastn::config::{config_key, is_finished, print_config, step_config};
    use crate::name::Label;

    fn n(s: &str) -> Name {
        Name::intern(s)
    }

    fn unit_id() -> Term {
        Term::abs_ann(n("y"), FunType::Unit, Term::var(n("y")))
    }

    /// let (s : !1.end, r) = new in
    ///   spawn (close (send () s); ());
    ///   let (v, r2) = recv r in close r2; v
    fn ping_term() -> Term {
        let send = Term::send(Term::UnitVal, Term::var(n("s")));
        let child = Term::close(send, Term::UnitVal);
        let read = Term::let_pair(
            n("v"),
            n("r2"),
            Term::recv(Term::var(n("r"))),
            Term::close(Term::var(n("r2")), Term::var(n("v"))),
        );
        let body = Term::spawn(child, read);
        Term::LetPair {
            left: n("s"),
            left_ann: Some(FunType::out(FunType::Unit, FunType::End)),
            right: n("r"),
            right_ann: None,
            pair: Box::new(Term::New),
            body: Box::new(body),
        }
    }

    #[test]
    fn unit_main_thread_accepts() {
        let v = typecheck_config(&Configuration::main(Term::UnitVal), &[]);
        assert!(v.accepted, "{}", v.render());
        assert!(v.main);
        assert_eq!(v.return_type, Some(FunType::Unit));
    }

    #[test]
    fn two_main_threads_reject() {
        let c = Configuration::par(
            Configuration::main(Term::UnitVal),
            Configuration::main(Term::UnitVal),
        );
        let v = typecheck_config(&c, &[]);
        assert!(!v.accepted);
        assert_eq!(v.failure.unwrap().rule, "typ-par");
    }

    #[test]
    fn identity_types_at_arrow() {
        let ty = typecheck_term(&unit_id(), &[]).unwrap();
        assert_eq!(ty, FunType::arrow(FunType::Unit, FunType::Unit));
    }

    #[test]
    fn the_worked_term_types_with_ascriptions() {
        // (\x. x (\y.y)) ((\w. w) (\z. z)) with each identity at its own type.
        let a = FunType::arrow(FunType::Unit, FunType::Unit);
        let b = FunType::arrow(a.clone(), a.clone());
        let term = Term::app(
            Term::abs_ann(
                n("x"),
                b.clone(),
                Term::app(Term::var(n("x")), unit_id()),
            ),
            Term::app(
                Term::abs_ann(n("w"), b.clone(), Term::var(n("w"))),
                Term::abs_ann(n("z"), a.clone(), Term::var(n("z"))),
            ),
        );
        assert_eq!(typecheck_term(&term, &[]).unwrap(), a);
        // Every step of its reduction keeps the type.
        let mut cur = term;
        while let Some((next, _)) = crate::lastn::step::step_term(&cur) {
            cur = next;
            let ty = typecheck_term(&cur, &[]).expect("reduct stays typed");
            assert_eq!(ty, a);
        }
    }

    #[test]
    fn unused_parameter_rejects() {
        let t = Term::abs_ann(n("x"), FunType::Unit, Term::UnitVal);
        let f = typecheck_term(&t, &[]).unwrap_err();
        assert_eq!(f.rule, "linearity");
    }

    #[test]
    fn reuse_rejects() {
        let t = Term::abs_ann(
            n("x"),
            FunType::Unit,
            Term::pair(Term::var(n("x")), Term::var(n("x"))),
        );
        let f = typecheck_term(&t, &[]).unwrap_err();
        assert_eq!(f.rule, "typ-var");
    }

    #[test]
    fn leftover_context_rejects() {
        let f = typecheck_term(&Term::UnitVal, &[(n("a"), FunType::Unit)]).unwrap_err();
        assert_eq!(f.rule, "linearity");
        assert!(f.message.contains("never used"), "{}", f.message);
    }

    #[test]
    fn unascribed_new_rejects() {
        let t = Term::let_pair(n("x"), n("y"), Term::New, Term::UnitVal);
        let f = typecheck_term(&t, &[]).unwrap_err();
        assert_eq!(f.rule, "typ-new");
    }

    #[test]
    fn bare_new_rejects() {
        let f = typecheck_term(&Term::New, &[]).unwrap_err();
        assert_eq!(f.rule, "typ-new");
    }

    #[test]
    fn ping_term_types_at_unit() {
        assert_eq!(typecheck_term(&ping_term(), &[]).unwrap(), FunType::Unit);
    }

    #[test]
    fn session_misuse_rejects() {
        // Sending over the receiving endpoint.
        let t = Term::LetPair {
            left: n("s"),
            left_ann: Some(FunType::out(FunType::Unit, FunType::End)),
            right: n("r"),
            right_ann: None,
            pair: Box::new(Term::New),
            body: Box::new(Term::close(
                Term::send(Term::UnitVal, Term::var(n("r"))),
                Term::close(Term::var(n("s")), Term::UnitVal),
            )),
        };
        let f = typecheck_term(&t, &[]).unwrap_err();
        assert_eq!(f.rule, "typ-send");
    }

    #[test]
    fn case_branches_must_agree() {
        let offer = FunType::Offer(
            [
                (Label::new("go"), FunType::End),
                (Label::new("stop"), FunType::End),
            ]
            .into_iter()
            .collect(),
        );
        let done = |c: &str| {
            Term::abs_ann(
                n(c),
                FunType::End,
                Term::close(Term::var(n(c)), Term::UnitVal),
            )
        };
        let good = Term::CaseTm {
            subject: Box::new(Term::var(n("o"))),
            branches: [
                (Label::new("go"), done("c")),
                (Label::new("stop"), done("d")),
            ]
            .into_iter()
            .collect(),
        };
        let g = [(n("o"), offer.clone())];
        assert_eq!(typecheck_term(&good, &g).unwrap(), FunType::Unit);

        // One branch consumes a context entry the other leaves alone.
        let grabby = Term::abs_ann(
            n("c"),
            FunType::End,
            Term::close(
                Term::var(n("c")),
                Term::app(
                    Term::abs_ann(n("u"), FunType::Unit, Term::var(n("u"))),
                    Term::var(n("extra")),
                ),
            ),
        );
        let bad = Term::CaseTm {
            subject: Box::new(Term::var(n("o"))),
            branches: [
                (Label::new("go"), grabby),
                (Label::new("stop"), done("d")),
            ]
            .into_iter()
            .collect(),
        };
        let g2 = [(n("o"), offer), (n("extra"), FunType::Unit)];
        let f = typecheck_term(&bad, &g2).unwrap_err();
        assert_eq!(f.rule, "typ-case");
    }

    #[test]
    fn select_advances_the_choice() {
        let choice = FunType::Choice(
            [(Label::new("go"), FunType::out(FunType::Unit, FunType::End))]
                .into_iter()
                .collect(),
        );
        let t = Term::close(
            Term::send(Term::UnitVal, Term::select(Label::new("go"), Term::var(n("x")))),
            Term::UnitVal,
        );
        let ty = typecheck_term(&t, &[(n("x"), choice)]).unwrap();
        assert_eq!(ty, FunType::Unit);
    }

    #[test]
    fn child_thread_must_be_unit() {
        let c = Configuration::child(unit_id());
        let v = typecheck_config(&c, &[]);
        assert!(!v.accepted);
        assert_eq!(v.failure.unwrap().rule, "typ-child");
    }

    #[test]
    fn stepping_preserves_typing() {
        // Every configuration reachable from ping typechecks at the unit
        // type, buffered states included.
        let start = Configuration::main(ping_term());
        let v = typecheck_config(&start, &[]);
        assert!(v.accepted, "{}", v.render());
        let mut seen = std::collections::BTreeSet::new();
        let mut queue = vec![start];
        let mut finished = false;
        while let Some(cur) = queue.pop() {
            if !seen.insert(config_key(&cur)) {
                continue;
            }
            let v = typecheck_config(&cur, &[]);
            assert!(
                v.accepted,
                "state {} fails: {}",
                print_config(&cur),
                v.render()
            );
            assert!(v.main);
            assert_eq!(v.return_type, Some(FunType::Unit));
            let succs = step_config(&cur);
            if succs.is_empty() {
                assert!(is_finished(&cur), "stuck at {}", print_config(&cur));
                finished = true;
            }
            queue.extend(succs);
        }
        assert!(finished);
    }
}
