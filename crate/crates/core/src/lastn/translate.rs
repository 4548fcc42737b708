//! Compilation of the functional layer into processes.
//!
//! Every functional value is delivered as process behaviour at a dedicated
//! name, typed by `trans_type`. A context entry is instead a *trigger*,
//! typed by `trans_ctx_type`: the holder announces demand by sending an
//! empty token together with the name where the value must appear, and the
//! provider answers at that name. Evaluation stays by-name this way: a
//! provider runs only once its trigger fires.
//!
//! Channels need more than a trigger because the two endpoints evolve
//! independently. Each endpoint is served by a `relay` that answers the
//! owning term's triggers step by step; payloads and labels crossing the
//! channel ride a `feed` connecting the two relays, one feed per direction,
//! renewed at every hop so delivery order is fixed by the chain itself.
//! Items already queued in a configuration's buffer are handed to the
//! receiving relay up front and leave the feeds untouched.

use std::collections::VecDeque;

use crate::checker::CheckFailure;
use crate::lastn::config::{BufItem, Configuration};
use crate::lastn::term::{fun_dual, FunType, Term};
use crate::name::{Label, Name};
use crate::process::{free_names, Process};
use crate::types::{dual, SessionType, TypingContext};

/// Image of a configuration: the emitted process, the name its result is
/// observable at, and the translated types of the context entries.
#[derive(Debug, Clone)]
pub struct TransResult {
    pub process: Process,
    pub result_name: Name,
    pub context_image: TypingContext,
}

/// Behaviour a value of type `t` exposes at its delivery name.
pub fn trans_type(t: &FunType) -> SessionType {
    match t {
        FunType::Unit => SessionType::Closed,
        FunType::TVar(n) => SessionType::Opaque {
            name: n.clone(),
            dualized: false,
        },
        FunType::Prod(l, r) => SessionType::tensor(
            dual(&trans_ctx_type(l)),
            dual(&trans_ctx_type(r)),
        ),
        FunType::Arrow(p, q) => SessionType::par(trans_ctx_type(p), trans_type(q)),
        FunType::Out(p, s) => SessionType::tensor(
            SessionType::Closed,
            SessionType::par(trans_ctx_type(p), dual(&trans_ctx_type(s))),
        ),
        FunType::In(p, s) => SessionType::tensor(
            dual(&trans_ctx_type(p)),
            dual(&trans_ctx_type(s)),
        ),
        FunType::Choice(bs) => SessionType::tensor(
            SessionType::Closed,
            SessionType::with(
                bs.iter()
                    .map(|(l, s)| (l.clone(), dual(&trans_ctx_type(s))))
                    .collect(),
            ),
        ),
        FunType::Offer(bs) => SessionType::plus(
            bs.iter()
                .map(|(l, s)| (l.clone(), dual(&trans_ctx_type(s))))
                .collect(),
        ),
        FunType::End => SessionType::tensor(SessionType::Closed, SessionType::Closed),
    }
}

/// Behaviour of a context entry of type `t`: a trigger that emits an empty
/// token and the delivery name, expecting the value's dual there.
pub fn trans_ctx_type(t: &FunType) -> SessionType {
    SessionType::tensor(SessionType::Closed, dual(&trans_type(t)))
}

/// Receiving end of the feed that carries one endpoint's outputs to its
/// peer, indexed by the emitting endpoint's remaining protocol. Every
/// payload hop also delivers the renewed feed end; at a branch the chosen
/// arm additionally delivers a rebuilt feed for the opposite direction,
/// since both directions' futures depend on the label.
fn feed_type(s: &FunType) -> Result<SessionType, String> {
    match s {
        FunType::End | FunType::Offer(_) => Ok(SessionType::Closed),
        FunType::Out(p, s2) => Ok(SessionType::par(trans_ctx_type(p), feed_type(s2)?)),
        FunType::In(_, s2) => feed_type(s2),
        FunType::Choice(bs) => {
            let mut branches = Vec::new();
            for (l, s2) in bs {
                let back = fun_dual(s2)?;
                branches.push((
                    l.clone(),
                    SessionType::par(feed_type(s2)?, dual(&feed_type(&back)?)),
                ));
            }
            Ok(SessionType::with(branches))
        }
        other => Err(format!(
            "feed over a non-protocol type {}",
            crate::lastn::term::print_funtype(other)
        )),
    }
}

/// Deterministic name supply; one counter per translation call keeps the
/// printed output reproducible.
struct Fresh {
    n: u64,
}

impl Fresh {
    fn name(&mut self, base: &str) -> Name {
        let n = Name::fresh(&format!("{base}{}", self.n));
        self.n += 1;
        n
    }

    fn pair(&mut self, base: &str) -> (Name, Name) {
        (self.name(base), self.name(base))
    }
}

/// Source binders in scope, mapped to the process name that triggers their
/// provider. Plain variables and channel endpoints are used identically.
struct Scope {
    binds: Vec<(Name, Name, FunType)>,
}

impl Scope {
    fn lookup(&self, n: Name) -> Option<(Name, FunType)> {
        self.binds
            .iter()
            .rev()
            .find(|(src, _, _)| *src == n)
            .map(|(_, proc, t)| (*proc, t.clone()))
    }
}

/// A buffered item the relay already holds: either a payload provider
/// reachable through `handle`, or a label picked by the peer.
enum QItem {
    Val(Name),
    Pick(Label),
}

/// Advance a protocol past the items queued toward its endpoint.
fn strip_queue(s: &FunType, q: &VecDeque<BufItem>) -> Result<FunType, String> {
    let mut cur = s.clone();
    for item in q {
        cur = match (item, cur) {
            (BufItem::Val(..), FunType::In(_, s2)) => *s2,
            (BufItem::Label(l), FunType::Offer(bs)) => bs
                .get(l)
                .cloned()
                .ok_or_else(|| format!("queued label #{l} is not offered"))?,
            (_, other) => {
                return Err(format!(
                    "queued item does not match the endpoint protocol {}",
                    crate::lastn::term::print_funtype(&other)
                ))
            }
        };
    }
    Ok(cur)
}

struct Emit {
    fr: Fresh,
}

impl Emit {
    /// Emit the provider of `t`'s value at `z`, returning the synthesized
    /// type. The configuration is assumed already accepted by the checker,
    /// so type errors here indicate an internal inconsistency.
    fn term(&mut self, t: &Term, z: Name, env: &mut Scope) -> Result<(FunType, Process), String> {
        match t {
            Term::Var(x) | Term::Chan(x) => {
                let (proc_name, ty) = env
                    .lookup(*x)
                    .ok_or_else(|| format!("unbound name {}", x.origin()))?;
                let (a, ab) = self.fr.pair("t");
                Ok((
                    ty,
                    Process::res_ann(
                        a,
                        ab,
                        SessionType::Closed,
                        Process::send(proc_name, a, z),
                    ),
                ))
            }
            Term::UnitVal => Ok((FunType::Unit, Process::Inact)),
            Term::Abs { param, ann, body } => {
                let pt = ann
                    .clone()
                    .ok_or_else(|| format!("parameter {} lacks a type ascription", param.origin()))?;
                let xh = self.fr.name("x");
                let r = self.fr.name("r");
                env.binds.push((*param, xh, pt.clone()));
                let (bt, pb) = self.term(body, r, env)?;
                env.binds.pop();
                Ok((
                    FunType::arrow(pt, bt),
                    Process::recv(z, xh, r, pb),
                ))
            }
            Term::App(f, arg) => {
                let fh = self.fr.name("f");
                let (ft, pf) = self.term(f, fh, env)?;
                let FunType::Arrow(dom, cod) = ft.clone() else {
                    return Err("application of a non-function".into());
                };
                let fh2 = self.fr.name("f");
                let (x, xb) = self.fr.pair("x");
                let tok = self.fr.name("t");
                let w = self.fr.name("w");
                let (_, parg) = self.term(arg, w, env)?;
                // The function receives the argument trigger and the result
                // name; the argument's provider waits behind the trigger.
                let body = Process::res_ann(
                    x,
                    xb,
                    trans_ctx_type(&dom),
                    Process::par(
                        Process::send(fh2, x, z),
                        Process::recv(xb, tok, w, parg),
                    ),
                );
                Ok((
                    *cod,
                    Process::res_ann(fh, fh2, trans_type(&ft), Process::par(pf, body)),
                ))
            }
            Term::ExplSub { body, var, arg } => {
                let tok = self.fr.name("t");
                let w = self.fr.name("w");
                let (at, parg) = self.term(arg, w, env)?;
                let (x, xb) = self.fr.pair("x");
                env.binds.push((*var, x, at.clone()));
                let (bt, pb) = self.term(body, z, env)?;
                env.binds.pop();
                Ok((
                    bt,
                    Process::res_ann(
                        x,
                        xb,
                        trans_ctx_type(&at),
                        Process::par(pb, Process::recv(xb, tok, w, parg)),
                    ),
                ))
            }
            Term::Pair(l, r) => {
                let wl = self.fr.name("w");
                let (lt, pl) = self.term(l, wl, env)?;
                let wr = self.fr.name("w");
                let (rt, pr) = self.term(r, wr, env)?;
                let (p, pb) = self.fr.pair("p");
                let (q, qb) = self.fr.pair("q");
                let t1 = self.fr.name("t");
                let t2 = self.fr.name("t");
                // Both components sit behind their own triggers so the
                // consumer decides which to force.
                let body = Process::par_all(vec![
                    Process::send(z, p, q),
                    Process::recv(pb, t1, wl, pl),
                    Process::recv(qb, t2, wr, pr),
                ]);
                Ok((
                    FunType::prod(lt.clone(), rt.clone()),
                    Process::res_ann(
                        p,
                        pb,
                        trans_ctx_type(&lt),
                        Process::res_ann(q, qb, trans_ctx_type(&rt), body),
                    ),
                ))
            }
            Term::LetPair {
                left,
                left_ann,
                right,
                right_ann,
                pair,
                body,
            } => {
                if matches!(**pair, Term::New) {
                    let (lt, rt) = endpoint_types(left_ann, right_ann)?;
                    return self.fresh_channel(*left, lt, *right, rt, body, z, env);
                }
                let ph = self.fr.name("p");
                let (pt, pp) = self.term(pair, ph, env)?;
                let FunType::Prod(lt, rt) = pt.clone() else {
                    return Err("destructuring a non-pair".into());
                };
                let ph2 = self.fr.name("p");
                let xh = self.fr.name("x");
                let yh = self.fr.name("y");
                env.binds.push((*left, xh, *lt));
                env.binds.push((*right, yh, *rt));
                let (bt, pb) = self.term(body, z, env)?;
                env.binds.pop();
                env.binds.pop();
                Ok((
                    bt,
                    Process::res_ann(
                        ph,
                        ph2,
                        trans_type(&pt),
                        Process::par(pp, Process::recv(ph2, xh, yh, pb)),
                    ),
                ))
            }
            Term::New => Err("a bare channel allocation must be destructured".into()),
            Term::Spawn { child, cont } => {
                let (u, ub) = self.fr.pair("u");
                let (ct, pc) = self.term(child, u, env)?;
                if ct != FunType::Unit {
                    return Err("spawned thread must have unit type".into());
                }
                let (kt, pk) = self.term(cont, z, env)?;
                Ok((
                    kt,
                    Process::par(
                        Process::res_ann(u, ub, SessionType::Closed, pc),
                        pk,
                    ),
                ))
            }
            Term::SendTm { payload, channel } => {
                let gh = self.fr.name("g");
                let (ct, pc) = self.term(channel, gh, env)?;
                let FunType::Out(pt, st) = ct.clone() else {
                    return Err("send on a non-output protocol".into());
                };
                let gh2 = self.fr.name("g");
                let tok = self.fr.name("t");
                let k = self.fr.name("k");
                let (p, pb) = self.fr.pair("p");
                let (s, sb) = self.fr.pair("s");
                let t2 = self.fr.name("t");
                let w = self.fr.name("w");
                let (_, ppay) = self.term(payload, w, env)?;
                let (a, ab) = self.fr.pair("t");
                // Ship the payload trigger and a fresh continuation slot,
                // then immediately demand the continued protocol at z.
                let after = Process::res_ann(
                    p,
                    pb,
                    trans_ctx_type(&pt),
                    Process::res_ann(
                        s,
                        sb,
                        dual(&trans_ctx_type(&st)),
                        Process::par_all(vec![
                            Process::send(k, p, s),
                            Process::recv(pb, t2, w, ppay),
                            Process::res_ann(
                                a,
                                ab,
                                SessionType::Closed,
                                Process::send(sb, a, z),
                            ),
                        ]),
                    ),
                );
                Ok((
                    *st.clone(),
                    Process::res_ann(
                        gh,
                        gh2,
                        trans_type(&ct),
                        Process::par(pc, Process::recv(gh2, tok, k, after)),
                    ),
                ))
            }
            Term::RecvTm(channel) => {
                // A channel ready to receive already behaves as the pair of
                // payload and continuation triggers, at the very type the
                // pair value has; delivery needs no extra step.
                let (ct, pc) = self.term(channel, z, env)?;
                let FunType::In(pt, st) = ct else {
                    return Err("receive on a non-input protocol".into());
                };
                Ok((FunType::prod(*pt, *st), pc))
            }
            Term::SelectTm(label, channel) => {
                let gh = self.fr.name("g");
                let (ct, pc) = self.term(channel, gh, env)?;
                let FunType::Choice(bs) = ct.clone() else {
                    return Err("select on a non-choice protocol".into());
                };
                let st = bs
                    .get(label)
                    .cloned()
                    .ok_or_else(|| format!("label #{label} is not offered"))?;
                let gh2 = self.fr.name("g");
                let tok = self.fr.name("t");
                let k = self.fr.name("k");
                let (c, cb) = self.fr.pair("c");
                let (a, ab) = self.fr.pair("t");
                let after = Process::res_ann(
                    c,
                    cb,
                    dual(&trans_ctx_type(&st)),
                    Process::par(
                        Process::sel(k, c, label.clone()),
                        Process::res_ann(a, ab, SessionType::Closed, Process::send(cb, a, z)),
                    ),
                );
                Ok((
                    st,
                    Process::res_ann(
                        gh,
                        gh2,
                        trans_type(&ct),
                        Process::par(pc, Process::recv(gh2, tok, k, after)),
                    ),
                ))
            }
            Term::CaseTm { subject, branches } => {
                let gh = self.fr.name("g");
                let (ct, pc) = self.term(subject, gh, env)?;
                let FunType::Offer(bs) = ct.clone() else {
                    return Err("case on a non-offer protocol".into());
                };
                let gh2 = self.fr.name("g");
                let yh = self.fr.name("y");
                let mut arms = Vec::new();
                let mut result = None;
                for (l, arm) in branches {
                    let st = bs
                        .get(l)
                        .cloned()
                        .ok_or_else(|| format!("label #{l} is not offered"))?;
                    // Each arm is a function of the continued endpoint; the
                    // relay hands the endpoint trigger straight to it.
                    let src = Name::fresh("arm");
                    env.binds.push((src, yh, st));
                    let applied = Term::app(arm.clone(), Term::var(src));
                    let (at, pa) = self.term(&applied, z, env)?;
                    env.binds.pop();
                    match &result {
                        None => result = Some(at),
                        Some(prev) if *prev == at => {}
                        Some(_) => return Err("case arms disagree on the result type".into()),
                    }
                    arms.push((l.clone(), pa));
                }
                let rt = result.ok_or("empty case")?;
                Ok((
                    rt,
                    Process::res_ann(
                        gh,
                        gh2,
                        trans_type(&ct),
                        Process::par(pc, Process::bra(gh2, yh, arms)),
                    ),
                ))
            }
            Term::CloseTm { subject, cont } => {
                let gh = self.fr.name("g");
                let (ct, pc) = self.term(subject, gh, env)?;
                if ct != FunType::End {
                    return Err("close on an unfinished protocol".into());
                }
                let gh2 = self.fr.name("g");
                let tok = self.fr.name("t");
                let u = self.fr.name("u");
                let (kt, pk) = self.term(cont, z, env)?;
                Ok((
                    kt,
                    Process::res_ann(
                        gh,
                        gh2,
                        trans_type(&FunType::End),
                        Process::par(pc, Process::recv(gh2, tok, u, pk)),
                    ),
                ))
            }
        }
    }

    /// Channel allocation: two endpoint triggers, two relays, and one feed
    /// per direction connecting them.
    #[allow(clippy::too_many_arguments)]
    fn fresh_channel(
        &mut self,
        left: Name,
        lt: FunType,
        right: Name,
        rt: FunType,
        body: &Term,
        z: Name,
        env: &mut Scope,
    ) -> Result<(FunType, Process), String> {
        let (xh, xr) = self.fr.pair("ch");
        let (yh, yr) = self.fr.pair("ch");
        let (fa, fab) = self.fr.pair("fd");
        let (fb, fbb) = self.fr.pair("fd");
        env.binds.push((left, xh, lt.clone()));
        env.binds.push((right, yh, rt.clone()));
        let (bt, pb) = self.term(body, z, env)?;
        env.binds.pop();
        env.binds.pop();
        let relay_l = self.relay(xr, &lt, &[], fa, fbb)?;
        let relay_r = self.relay(yr, &rt, &[], fb, fab)?;
        let proc = Process::res_ann(
            xh,
            xr,
            trans_ctx_type(&lt),
            Process::res_ann(
                yh,
                yr,
                trans_ctx_type(&rt),
                Process::res_ann(
                    fa,
                    fab,
                    dual(&feed_type(&lt)?),
                    Process::res_ann(
                        fb,
                        fbb,
                        dual(&feed_type(&rt)?),
                        Process::par_all(vec![pb, relay_l, relay_r]),
                    ),
                ),
            ),
        );
        Ok((bt, proc))
    }

    /// One endpoint's server: wait for the owning term's trigger, then
    /// provide the next protocol step at the name the trigger carried.
    fn relay(
        &mut self,
        handle: Name,
        s: &FunType,
        pending: &[QItem],
        feed_out: Name,
        feed_in: Name,
    ) -> Result<Process, String> {
        let tok = self.fr.name("t");
        let site = self.fr.name("z");
        let body = self.provide(site, s, pending, feed_out, feed_in)?;
        Ok(Process::recv(handle, tok, site, body))
    }

    fn provide(
        &mut self,
        z: Name,
        s: &FunType,
        pending: &[QItem],
        feed_out: Name,
        feed_in: Name,
    ) -> Result<Process, String> {
        if let Some(front) = pending.first() {
            return match (front, s) {
                (QItem::Val(handle), FunType::In(_, s2)) => {
                    let (c, cb) = self.fr.pair("c");
                    let cont = self.relay(cb, s2, &pending[1..], feed_out, feed_in)?;
                    Ok(Process::res_ann(
                        c,
                        cb,
                        trans_ctx_type(s2),
                        Process::par(Process::send(z, *handle, c), cont),
                    ))
                }
                (QItem::Pick(l), FunType::Offer(bs)) => {
                    let s2 = bs
                        .get(l)
                        .ok_or_else(|| format!("queued label #{l} is not offered"))?;
                    let (c, cb) = self.fr.pair("c");
                    let cont = self.relay(cb, s2, &pending[1..], feed_out, feed_in)?;
                    Ok(Process::res_ann(
                        c,
                        cb,
                        trans_ctx_type(s2),
                        Process::par(Process::sel(z, c, l.clone()), cont),
                    ))
                }
                _ => Err("buffered item does not match the endpoint protocol".into()),
            };
        }
        match s {
            FunType::End => {
                let (t, t2) = self.fr.pair("t");
                let (u, u2) = self.fr.pair("u");
                // Completion is announced with two empty tokens; the peer
                // relay needs no notification, closing is one-sided here.
                Ok(Process::res_ann(
                    t,
                    t2,
                    SessionType::Closed,
                    Process::res_ann(u, u2, SessionType::Closed, Process::send(z, t, u)),
                ))
            }
            FunType::Out(pt, s2) => {
                let (t, t2) = self.fr.pair("t");
                let (k, kb) = self.fr.pair("k");
                let p = self.fr.name("p");
                let snew = self.fr.name("h");
                let (n, nb) = self.fr.pair("fd");
                // Collect the payload trigger from the term, push it down
                // the feed with the renewed feed end, keep serving.
                let after = Process::res_ann(
                    n,
                    nb,
                    dual(&feed_type(s2)?),
                    Process::par(
                        Process::send(feed_out, p, nb),
                        self.relay(snew, s2, &[], n, feed_in)?,
                    ),
                );
                let k_ty = SessionType::tensor(dual(&trans_ctx_type(pt)), trans_ctx_type(s2));
                Ok(Process::res_ann(
                    t,
                    t2,
                    SessionType::Closed,
                    Process::res_ann(
                        k,
                        kb,
                        k_ty,
                        Process::par(
                            Process::send(z, t, k),
                            Process::recv(kb, p, snew, after),
                        ),
                    ),
                ))
            }
            FunType::In(_, s2) => {
                let p = self.fr.name("p");
                let w = self.fr.name("fd");
                let (c, cb) = self.fr.pair("c");
                // Nothing buffered: the next payload arrives on the feed,
                // then it is handed over with the continuation trigger.
                let deliver = Process::res_ann(
                    c,
                    cb,
                    trans_ctx_type(s2),
                    Process::par(
                        Process::send(z, p, c),
                        self.relay(cb, s2, &[], feed_out, w)?,
                    ),
                );
                Ok(Process::recv(feed_in, p, w, deliver))
            }
            FunType::Choice(bs) => {
                let (t, t2) = self.fr.pair("t");
                let (k, kb) = self.fr.pair("k");
                let y = self.fr.name("y");
                let mut arms = Vec::new();
                for (l, s2) in bs {
                    let back = fun_dual(s2)?;
                    let (c, cb) = self.fr.pair("c");
                    let (n, nb) = self.fr.pair("fd");
                    let (m, mb) = self.fr.pair("fd");
                    // The label crosses on the feed together with renewed
                    // feeds for both directions: the branch decides what
                    // both ends may carry from here on.
                    let arm = Process::res_ann(
                        c,
                        cb,
                        SessionType::par(feed_type(s2)?, dual(&feed_type(&back)?)),
                        Process::res_ann(
                            n,
                            nb,
                            dual(&feed_type(s2)?),
                            Process::res_ann(
                                m,
                                mb,
                                dual(&feed_type(&back)?),
                                Process::par_all(vec![
                                    Process::sel(feed_out, c, l.clone()),
                                    Process::send(cb, nb, m),
                                    self.relay(y, s2, &[], n, mb)?,
                                ]),
                            ),
                        ),
                    );
                    arms.push((l.clone(), arm));
                }
                let k_ty = SessionType::plus(
                    bs.iter()
                        .map(|(l, s2)| (l.clone(), trans_ctx_type(s2)))
                        .collect(),
                );
                Ok(Process::res_ann(
                    t,
                    t2,
                    SessionType::Closed,
                    Process::res_ann(
                        k,
                        kb,
                        k_ty,
                        Process::par(Process::send(z, t, k), Process::bra(kb, y, arms)),
                    ),
                ))
            }
            FunType::Offer(bs) => {
                let y = self.fr.name("y");
                let mut arms = Vec::new();
                for (l, s2) in bs {
                    let w2 = self.fr.name("fd");
                    let f2 = self.fr.name("fd");
                    let (c, cb) = self.fr.pair("c");
                    // The peer picked a label: unpack the renewed feeds,
                    // then forward the label to the owning term.
                    let arm = Process::recv(
                        y,
                        w2,
                        f2,
                        Process::res_ann(
                            c,
                            cb,
                            trans_ctx_type(s2),
                            Process::par(
                                Process::sel(z, c, l.clone()),
                                self.relay(cb, s2, &[], f2, w2)?,
                            ),
                        ),
                    );
                    arms.push((l.clone(), arm));
                }
                Ok(Process::bra(feed_in, y, arms))
            }
            other => Err(format!(
                "relay over a non-protocol type {}",
                crate::lastn::term::print_funtype(other)
            )),
        }
    }

    fn config(
        &mut self,
        c: &Configuration,
        z: Name,
        env: &mut Scope,
    ) -> Result<(Option<FunType>, Process), String> {
        match c {
            Configuration::Thread { main: true, term } => {
                let (ty, p) = self.term(term, z, env)?;
                Ok((Some(ty), p))
            }
            Configuration::Thread { main: false, term } => {
                let (u, ub) = self.fr.pair("u");
                let (ty, p) = self.term(term, u, env)?;
                if ty != FunType::Unit {
                    return Err("child thread must have unit type".into());
                }
                Ok((None, Process::res_ann(u, ub, SessionType::Closed, p)))
            }
            Configuration::ParC(l, r) => {
                let (tl, pl) = self.config(l, z, env)?;
                let (tr, pr) = self.config(r, z, env)?;
                if tl.is_some() && tr.is_some() {
                    return Err("two main threads".into());
                }
                Ok((tl.or(tr), Process::par(pl, pr)))
            }
            Configuration::ResC {
                a,
                b,
                a_type,
                b_type,
                buf,
                body,
            } => {
                let at = a_type
                    .clone()
                    .ok_or_else(|| format!("endpoint {} lacks a recorded type", a.origin()))?;
                let bt = b_type
                    .clone()
                    .ok_or_else(|| format!("endpoint {} lacks a recorded type", b.origin()))?;
                let (ah, ar) = self.fr.pair("ch");
                let (bh, br) = self.fr.pair("ch");
                env.binds.push((*a, ah, at.clone()));
                env.binds.push((*b, bh, bt.clone()));
                let (pend_a, prov_a) = self.queue_items(&buf.to_a, env)?;
                let (pend_b, prov_b) = self.queue_items(&buf.to_b, env)?;
                let (mty, pbody) = self.config(body, z, env)?;
                env.binds.pop();
                env.binds.pop();
                let a_star = strip_queue(&at, &buf.to_a)?;
                let b_star = strip_queue(&bt, &buf.to_b)?;
                let (fa, fab) = self.fr.pair("fd");
                let (fb, fbb) = self.fr.pair("fd");
                // A finished endpoint may already be dropped by the program;
                // in that case its trigger can never fire, so the whole
                // serving side is omitted rather than left waiting.
                let body_free = free_names(&pbody);
                let a_dead = at == FunType::End && pend_a.is_empty() && !body_free.contains(&ah);
                let b_dead = bt == FunType::End && pend_b.is_empty() && !body_free.contains(&bh);
                let mut parts = vec![pbody];
                if !a_dead {
                    parts.push(self.relay(ar, &at, &pend_a, fa, fbb)?);
                }
                if !b_dead {
                    parts.push(self.relay(br, &bt, &pend_b, fb, fab)?);
                }
                let mut wraps: Vec<(Name, Name, SessionType)> = Vec::new();
                for (p, pb, ty, provider) in prov_a.into_iter().chain(prov_b) {
                    parts.push(provider);
                    wraps.push((p, pb, trans_ctx_type(&ty)));
                }
                let mut proc = Process::par_all(parts);
                for (p, pb, ty) in wraps.into_iter().rev() {
                    proc = Process::res_ann(p, pb, ty, proc);
                }
                proc = Process::res_ann(
                    fa,
                    fab,
                    dual(&feed_type(&a_star)?),
                    Process::res_ann(fb, fbb, dual(&feed_type(&b_star)?), proc),
                );
                if !b_dead {
                    proc = Process::res_ann(bh, br, trans_ctx_type(&bt), proc);
                }
                if !a_dead {
                    proc = Process::res_ann(ah, ar, trans_ctx_type(&at), proc);
                }
                Ok((mty, proc))
            }
        }
    }

    /// Buffered items become pre-held payload triggers plus their provider
    /// particles; labels need no provider.
    #[allow(clippy::type_complexity)]
    fn queue_items(
        &mut self,
        q: &VecDeque<BufItem>,
        env: &mut Scope,
    ) -> Result<(Vec<QItem>, Vec<(Name, Name, FunType, Process)>), String> {
        let mut pend = Vec::new();
        let mut providers = Vec::new();
        for item in q {
            match item {
                BufItem::Val(v, ty) => {
                    let ty = ty
                        .clone()
                        .ok_or("buffered value lacks a recorded type")?;
                    let (p, pb) = self.fr.pair("p");
                    let tok = self.fr.name("t");
                    let w = self.fr.name("w");
                    let (_, pv) = self.term(v, w, env)?;
                    providers.push((p, pb, ty, Process::recv(pb, tok, w, pv)));
                    pend.push(QItem::Val(p));
                }
                BufItem::Label(l) => pend.push(QItem::Pick(l.clone())),
            }
        }
        Ok((pend, providers))
    }
}

fn endpoint_types(
    left: &Option<FunType>,
    right: &Option<FunType>,
) -> Result<(FunType, FunType), String> {
    match (left, right) {
        (Some(l), Some(r)) => {
            if fun_dual(l)? != *r {
                return Err("channel endpoint ascriptions are not dual".into());
            }
            Ok((l.clone(), r.clone()))
        }
        (Some(l), None) => Ok((l.clone(), fun_dual(l)?)),
        (None, Some(r)) => Ok((fun_dual(r)?, r.clone())),
        (None, None) => Err("a fresh channel needs at least one ascription".into()),
    }
}

/// Translate a configuration under context `g`, observing the result at
/// `z`. The configuration must already typecheck under `g`.
pub fn trans_config(
    c: &Configuration,
    g: &[(Name, FunType)],
    z: Name,
) -> Result<TransResult, CheckFailure> {
    let mut em = Emit { fr: Fresh { n: 0 } };
    let mut env = Scope {
        binds: g.iter().map(|(n, t)| (*n, *n, t.clone())).collect(),
    };
    let fail = |message: String| CheckFailure {
        rule: "translate".into(),
        path: "root".into(),
        message,
    };
    let (_, mut process) = em.config(c, z, &mut env).map_err(fail)?;
    if !free_names(&process).contains(&z) {
        // An empty result has no behaviour of its own; a link to a private
        // peer keeps the result name observable in the output.
        let (w, wb) = em.fr.pair("w");
        process = Process::par(
            process,
            Process::res_ann(w, wb, SessionType::Closed, Process::fwd(z, w)),
        );
    }
    let mut context_image = TypingContext::new();
    for (n, t) in g {
        context_image
            .insert(*n, trans_ctx_type(t))
            .map_err(|dup| CheckFailure {
                rule: "translate".into(),
                path: "root".into(),
                message: format!("the context lists {} twice", dup.origin()),
            })?;
    }
    Ok(TransResult {
        process,
        result_name: z,
        context_image,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apcp::{check_apcp, PrioritySolution};
    use crate::checker::check_ap;
    use crate::lastn::config::{explore_configs, step_config};
    use crate::lastn::typecheck::typecheck_config;
    use crate::print::print_process;
    use crate::reduction::explore;

    fn n(s: &str) -> Name {
        Name::intern(s)
    }

    fn check_image(r: &TransResult) -> crate::checker::CheckVerdict {
        let mut ctx = r.context_image.clone();
        ctx.insert(r.result_name, SessionType::Closed).unwrap();
        check_ap(&r.process, &ctx)
    }

    fn check_image_at(r: &TransResult, zt: SessionType) -> crate::checker::CheckVerdict {
        let mut ctx = r.context_image.clone();
        ctx.insert(r.result_name, zt).unwrap();
        check_ap(&r.process, &ctx)
    }

    #[test]
    fn unit_translation_collapses_to_a_token() {
        assert_eq!(trans_type(&FunType::Unit), SessionType::Closed);
        assert_eq!(
            trans_ctx_type(&FunType::Unit),
            SessionType::tensor(SessionType::Closed, SessionType::Closed)
        );
    }

    #[test]
    fn function_over_pairs_translates_to_the_expected_tree() {
        let t = FunType::tvar("T");
        let s = FunType::tvar("S");
        let src = FunType::arrow(
            FunType::prod(t.clone(), s.clone()),
            FunType::out(t, s),
        );
        let tn = |d: bool| SessionType::Opaque {
            name: "T".into(),
            dualized: d,
        };
        let sn = |d: bool| SessionType::Opaque {
            name: "S".into(),
            dualized: d,
        };
        let unit = SessionType::Closed;
        let want = SessionType::par(
            SessionType::tensor(
                unit.clone(),
                SessionType::par(
                    SessionType::tensor(unit.clone(), tn(true)),
                    SessionType::tensor(unit.clone(), sn(true)),
                ),
            ),
            SessionType::tensor(
                unit.clone(),
                SessionType::par(
                    SessionType::tensor(unit.clone(), tn(true)),
                    SessionType::par(unit, sn(false)),
                ),
            ),
        );
        assert_eq!(trans_type(&src), want);
    }

    #[test]
    fn translated_unit_program_is_well_typed() {
        let c = Configuration::main(Term::UnitVal);
        let r = trans_config(&c, &[], n("z")).unwrap();
        assert_eq!(r.result_name, n("z"));
        assert!(free_names(&r.process).contains(&n("z")));
        let v = check_image(&r);
        assert!(v.accepted, "{:?}", v.failure);
    }

    #[test]
    fn translated_identity_function_is_well_typed() {
        let x = n("x");
        let c = Configuration::main(Term::abs_ann(x, FunType::Unit, Term::var(x)));
        let r = trans_config(&c, &[], n("z")).unwrap();
        let zt = trans_type(&FunType::arrow(FunType::Unit, FunType::Unit));
        let v = check_image_at(&r, zt);
        assert!(v.accepted, "{:?}", v.failure);
    }

    #[test]
    fn translated_application_chain_is_well_typed() {
        // (\x. x (\y. y)) ((\w. w) (\v. v)) at type 1 -o 1.
        let a = FunType::arrow(FunType::Unit, FunType::Unit);
        let b = FunType::arrow(a.clone(), a.clone());
        let (x, y, w, v) = (n("x"), n("y"), n("w"), n("v"));
        let inner = Term::abs_ann(y, FunType::Unit, Term::var(y));
        let f = Term::abs_ann(x, b.clone(), Term::app(Term::var(x), inner));
        let g = Term::abs_ann(w, b, Term::var(w));
        let arg = Term::app(g, Term::abs_ann(v, a.clone(), Term::var(v)));
        let c = Configuration::main(Term::app(f, arg));
        let verdict = typecheck_config(&c, &[]);
        assert!(verdict.accepted, "{:?}", verdict.failure);
        let r = trans_config(&c, &[], n("z")).unwrap();
        let chk = check_image_at(&r, trans_type(&a));
        assert!(chk.accepted, "{:?}", chk.failure);
    }

    fn ping() -> Configuration {
        let (s, r, v, r2) = (n("s"), n("r"), n("v"), n("r2"));
        let send_side = Term::close(Term::send(Term::UnitVal, Term::var(s)), Term::UnitVal);
        let recv_side = Term::LetPair {
            left: v,
            left_ann: None,
            right: r2,
            right_ann: None,
            pair: Box::new(Term::recv(Term::var(r))),
            body: Box::new(Term::close(Term::var(r2), Term::var(v))),
        };
        let term = Term::LetPair {
            left: s,
            left_ann: Some(FunType::out(FunType::Unit, FunType::End)),
            right: r,
            right_ann: None,
            pair: Box::new(Term::New),
            body: Box::new(Term::spawn(send_side, recv_side)),
        };
        Configuration::main(term)
    }

    #[test]
    fn translated_ping_is_well_typed_and_runs_to_completion() {
        let c = ping();
        assert!(typecheck_config(&c, &[]).accepted);
        let r = trans_config(&c, &[], n("z")).unwrap();
        let v = check_image(&r);
        assert!(v.accepted, "{:?}", v.failure);
        let report = explore(&r.process, 300_000);
        assert!(!report.truncated);
        assert!(
            report.deadlocked.is_empty(),
            "stuck at {}",
            report
                .deadlocked
                .iter()
                .map(|t| print_process(&t.residual))
                .collect::<Vec<_>>()
                .join(" ;; ")
        );
        assert!(!report.terminals.is_empty());
    }

    #[test]
    fn translation_commutes_with_configuration_steps() {
        // Every configuration reachable from the ping program, including the
        // ones with occupied buffers, must stay well typed after compilation.
        let mut frontier = vec![ping()];
        let mut seen = 0usize;
        let mut buffered = 0usize;
        while let Some(c) = frontier.pop() {
            seen += 1;
            if seen > 64 {
                break;
            }
            if has_buffered_item(&c) {
                buffered += 1;
            }
            let verdict = typecheck_config(&c, &[]);
            assert!(verdict.accepted, "{:?}", verdict.failure);
            let r = trans_config(&c, &[], n("z")).unwrap();
            let zt = trans_type(&verdict.return_type.unwrap());
            let chk = check_image_at(&r, zt);
            assert!(chk.accepted, "{:?}", chk.failure);
            frontier.extend(step_config(&c));
        }
        assert!(buffered > 0, "no reachable state exercised the buffer");
    }

    fn has_buffered_item(c: &Configuration) -> bool {
        match c {
            Configuration::Thread { .. } => false,
            Configuration::ParC(l, r) => has_buffered_item(l) || has_buffered_item(r),
            Configuration::ResC { buf, body, .. } => {
                !buf.to_a.is_empty() || !buf.to_b.is_empty() || has_buffered_item(body)
            }
        }
    }

    #[test]
    fn open_context_entries_appear_in_the_image() {
        let x = n("x");
        let a = FunType::arrow(FunType::Unit, FunType::Unit);
        let c = Configuration::main(Term::app(Term::var(x), Term::UnitVal));
        let r = trans_config(&c, &[(x, a.clone())], n("z")).unwrap();
        assert_eq!(r.context_image.lookup(x), Some(&trans_ctx_type(&a)));
        let v = check_image(&r);
        assert!(v.accepted, "{:?}", v.failure);
    }

    #[test]
    fn translation_is_deterministic() {
        let c = ping();
        let r1 = trans_config(&c, &[], n("z")).unwrap();
        let r2 = trans_config(&c, &[], n("z")).unwrap();
        assert_eq!(print_process(&r1.process), print_process(&r2.process));
    }

    fn two_channel_program(main_receives_first: bool) -> Configuration {
        let (a, a2, a3) = (n("a"), n("a2"), n("a3"));
        let (b, b2, b3) = (n("b"), n("b2"), n("b3"));
        let (v, w) = (n("v"), n("w"));
        let child = Term::LetPair {
            left: v,
            left_ann: None,
            right: a3,
            right_ann: None,
            pair: Box::new(Term::recv(Term::var(a2))),
            body: Box::new(Term::close(
                Term::var(a3),
                Term::close(Term::send(Term::var(v), Term::var(b)), Term::UnitVal),
            )),
        };
        let recv_b = |body: Term| Term::LetPair {
            left: w,
            left_ann: None,
            right: b3,
            right_ann: None,
            pair: Box::new(Term::recv(Term::var(b2))),
            body: Box::new(body),
        };
        let cont = if main_receives_first {
            // Wait on the second channel before feeding the first: the two
            // threads block on each other.
            recv_b(Term::close(
                Term::var(b3),
                Term::close(Term::send(Term::var(w), Term::var(a)), Term::UnitVal),
            ))
        } else {
            Term::close(
                Term::send(Term::UnitVal, Term::var(a)),
                recv_b(Term::close(Term::var(b3), Term::var(w))),
            )
        };
        let body = Term::spawn(child, cont);
        let with_b = Term::LetPair {
            left: b,
            left_ann: Some(FunType::out(FunType::Unit, FunType::End)),
            right: b2,
            right_ann: None,
            pair: Box::new(Term::New),
            body: Box::new(body),
        };
        Configuration::main(Term::LetPair {
            left: a,
            left_ann: Some(FunType::out(FunType::Unit, FunType::End)),
            right: a2,
            right_ann: None,
            pair: Box::new(Term::New),
            body: Box::new(with_b),
        })
    }

    #[test]
    fn cyclic_waiting_shows_up_as_unsolvable_priorities() {
        let stuck = two_channel_program(true);
        assert!(typecheck_config(&stuck, &[]).accepted);
        let r = trans_config(&stuck, &[], n("z")).unwrap();
        let mut ctx = r.context_image.clone();
        ctx.insert(r.result_name, SessionType::Closed).unwrap();
        let report = check_apcp(&r.process, &ctx);
        assert!(
            matches!(report.solution, Some(PrioritySolution::Infeasible(_))),
            "a stuck program got priorities: {:?}",
            report.solution
        );
        let failure = report.verdict.failure.expect("the rejection names a rule");
        assert_eq!(failure.rule, "priority", "{}", failure.message);
    }

    #[test]
    fn straight_line_sessions_get_priorities() {
        let fine = two_channel_program(false);
        assert!(typecheck_config(&fine, &[]).accepted);
        let r = trans_config(&fine, &[], n("z")).unwrap();
        let mut ctx = r.context_image.clone();
        ctx.insert(r.result_name, SessionType::Closed).unwrap();
        let report = check_apcp(&r.process, &ctx);
        assert!(report.verdict.accepted, "{:?}", report.verdict.failure);
        assert!(
            matches!(report.solution, Some(PrioritySolution::Assignment(_))),
            "{:?}",
            report.solution
        );
        let run = explore(&r.process, 300_000);
        assert!(run.deadlocked.is_empty());
    }

    #[test]
    fn branching_sessions_translate_and_run() {
        // Offer two continuations, pick one, ship a payload, finish.
        let (s, r) = (n("s"), n("r"));
        let (v, s2, r2) = (n("v"), n("s2"), n("r2"));
        let hello = Label::new("hello");
        let quit = Label::new("quit");
        let chooser = Term::close(
            Term::send(
                Term::UnitVal,
                Term::select(hello.clone(), Term::var(s)),
            ),
            Term::UnitVal,
        );
        let hello_arm = Term::abs_ann(
            s2,
            FunType::inp(FunType::Unit, FunType::End),
            Term::LetPair {
                left: v,
                left_ann: None,
                right: r2,
                right_ann: None,
                pair: Box::new(Term::recv(Term::var(s2))),
                body: Box::new(Term::close(Term::var(r2), Term::var(v))),
            },
        );
        let quit_arm = Term::abs_ann(s2, FunType::End, Term::close(Term::var(s2), Term::UnitVal));
        let offerer = Term::case(
            Term::var(r),
            vec![(hello.clone(), hello_arm), (quit.clone(), quit_arm)],
        );
        let s_ty = FunType::Choice(
            [
                (hello, FunType::out(FunType::Unit, FunType::End)),
                (quit, FunType::End),
            ]
            .into_iter()
            .collect(),
        );
        let term = Term::LetPair {
            left: s,
            left_ann: Some(s_ty),
            right: r,
            right_ann: None,
            pair: Box::new(Term::New),
            body: Box::new(Term::spawn(chooser, offerer)),
        };
        let c = Configuration::main(term);
        let verdict = typecheck_config(&c, &[]);
        assert!(verdict.accepted, "{:?}", verdict.failure);
        let r = trans_config(&c, &[], n("z")).unwrap();
        let chk = check_image(&r);
        assert!(chk.accepted, "{:?}", chk.failure);
        let report = explore(&r.process, 300_000);
        assert!(!report.truncated);
        assert!(
            report.deadlocked.is_empty(),
            "stuck at {}",
            report
                .deadlocked
                .iter()
                .map(|t| print_process(&t.residual))
                .collect::<Vec<_>>()
                .join(" ;; ")
        );
    }

    /// Hash of every reachable state and of every terminal, keyed by the
    /// printed canonical form. Panics when the graph outgrows `cap`.
    fn process_graph(
        p: &Process,
        cap: usize,
    ) -> (
        std::collections::BTreeSet<String>,
        std::collections::BTreeSet<String>,
    ) {
        use crate::congruence::normalize;
        use crate::print::hash_print;
        use crate::reduction::{find_redexes, step};
        let root = normalize(p).residual;
        let mut seen = std::collections::BTreeSet::new();
        let mut terminals = std::collections::BTreeSet::new();
        seen.insert(hash_print(&root));
        let mut queue = VecDeque::from([root]);
        while let Some(state) = queue.pop_front() {
            let redexes = find_redexes(&state);
            if redexes.is_empty() {
                terminals.insert(hash_print(&state));
                continue;
            }
            for r in redexes {
                let next = step(&state, &r).expect("redex from the same state");
                let succ = normalize(&next).residual;
                if seen.insert(hash_print(&succ)) {
                    assert!(seen.len() <= cap, "process graph outgrew the test bound");
                    queue.push_back(succ);
                }
            }
        }
        (seen, terminals)
    }

    fn reachable_configurations(c: &Configuration, cap: usize) -> Vec<Configuration> {
        use crate::lastn::config::config_key;
        let mut seen = std::collections::BTreeSet::new();
        seen.insert(config_key(c));
        let mut queue = VecDeque::from([c.clone()]);
        let mut out = Vec::new();
        while let Some(d) = queue.pop_front() {
            out.push(d.clone());
            for succ in step_config(&d) {
                if seen.insert(config_key(&succ)) {
                    assert!(seen.len() <= cap, "configuration graph outgrew the test bound");
                    queue.push_back(succ);
                }
            }
        }
        out
    }

    #[test]
    fn intermediate_translations_reach_the_same_outcomes() {
        // Joint bounded exploration: compile every configuration reachable
        // from the source, run each image to the end, and require the final
        // states to be final states of the compiled source as well. The
        // source programs finish at the unit value, so this pins every image
        // to the single empty terminal and proves buffered states drain.
        for c in [ping(), two_channel_program(false)] {
            let base = trans_config(&c, &[], n("z")).unwrap();
            let (_, base_terminals) = process_graph(&base.process, 300_000);
            assert!(!base_terminals.is_empty());
            for d in reachable_configurations(&c, 4_096) {
                let image = trans_config(&d, &[], n("z")).unwrap();
                let (_, terminals) = process_graph(&image.process, 300_000);
                assert!(!terminals.is_empty());
                assert!(
                    terminals.is_subset(&base_terminals),
                    "an intermediate image ends somewhere the source image cannot: {}",
                    crate::lastn::config::print_config(&d)
                );
            }
        }
    }

    #[test]
    fn stuck_translations_stay_stuck() {
        // Compiling a configuration that has already deadlocked must not
        // yield a process that can still finish: neither the source image
        // nor any image of a stuck state ever reaches the empty process.
        let c = two_channel_program(true);
        let empty = crate::print::hash_print(&Process::Inact);
        let base = trans_config(&c, &[], n("z")).unwrap();
        let (_, base_terminals) = process_graph(&base.process, 300_000);
        assert!(!base_terminals.is_empty());
        assert!(!base_terminals.contains(&empty));
        let mut checked = 0usize;
        for d in reachable_configurations(&c, 4_096) {
            if !step_config(&d).is_empty() || crate::lastn::config::is_finished(&d) {
                continue;
            }
            checked += 1;
            let image = trans_config(&d, &[], n("z")).unwrap();
            let (_, terminals) = process_graph(&image.process, 300_000);
            assert!(!terminals.is_empty());
            assert!(
                !terminals.contains(&empty),
                "a compiled deadlock still finished: {}",
                crate::lastn::config::print_config(&d)
            );
        }
        assert!(checked > 0, "the deadlocking program never got stuck");
    }

    #[test]
    fn finished_configurations_translate_to_the_empty_process() {
        // The fully reduced program still has a translation; it should both
        // typecheck and reduce to nothing at all.
        let report = explore_configs(&ping(), 10_000);
        assert_eq!(report.terminals.len(), 1);
        let done = &report.terminals[0];
        let r = trans_config(done, &[], n("z")).unwrap();
        let v = check_image(&r);
        assert!(v.accepted, "{:?}", v.failure);
        let run = explore(&r.process, 10_000);
        assert!(run.deadlocked.is_empty());
        assert!(run.terminals.iter().all(|t| t.zero_flag));
    }
}
