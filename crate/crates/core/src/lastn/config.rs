//! Runtime configurations: threads over terms, connected by buffered
//! channels.
//!
//! A channel is born when a thread evaluates `let (s, r) = new in M`; the
//! restriction node carries one FIFO queue per direction plus the current
//! session type of each endpoint, advanced as messages move. Sends and
//! selections enqueue and continue at once; receives and cases block on an
//! empty queue. `close` discards an endpoint; a restriction whose endpoints
//! are gone and whose queues are drained disappears during normalization,
//! as do finished child threads.

use std::collections::{BTreeSet, VecDeque};

use crate::name::{Label, Name};

use super::step::step_term;
use super::term::{
    free_chans, fun_dual, print_funtype, print_term, rename_chan, term_alpha_canonical, FunType,
    Term,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BufItem {
    /// In-transit payload with its recorded type (when the sender's
    /// endpoint type was known).
    Val(Term, Option<FunType>),
    Label(Label),
}

/// Per-direction FIFO queues of one channel. `to_a` is read by the holder
/// of endpoint `a` and written by the holder of `b`, and vice versa.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChannelBuffer {
    pub to_a: VecDeque<BufItem>,
    pub to_b: VecDeque<BufItem>,
}

impl ChannelBuffer {
    pub fn is_empty(&self) -> bool {
        self.to_a.is_empty() && self.to_b.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Configuration {
    Thread {
        /// The one thread whose result is observed; children are unit-typed.
        main: bool,
        term: Term,
    },
    ParC(Box<Configuration>, Box<Configuration>),
    ResC {
        a: Name,
        b: Name,
        /// Current session type of endpoint `a`; `b` follows by duality
        /// after the queued items are accounted for.
        a_type: Option<FunType>,
        b_type: Option<FunType>,
        buf: ChannelBuffer,
        body: Box<Configuration>,
    },
}

impl Configuration {
    pub fn main(term: Term) -> Configuration {
        Configuration::Thread { main: true, term }
    }

    pub fn child(term: Term) -> Configuration {
        Configuration::Thread { main: false, term }
    }

    pub fn par(l: Configuration, r: Configuration) -> Configuration {
        Configuration::ParC(Box::new(l), Box::new(r))
    }
}

/// Endpoints occurring anywhere in the configuration, bound or not.
fn chans_of(c: &Configuration) -> BTreeSet<Name> {
    match c {
        Configuration::Thread { term, .. } => free_chans(term),
        Configuration::ParC(l, r) => {
            let mut s = chans_of(l);
            s.extend(chans_of(r));
            s
        }
        Configuration::ResC { buf, body, .. } => {
            let mut s = chans_of(body);
            for item in buf.to_a.iter().chain(buf.to_b.iter()) {
                if let BufItem::Val(t, _) = item {
                    s.extend(free_chans(t));
                }
            }
            s
        }
    }
}

fn rename_chan_config(c: &Configuration, old: Name, new: Name) -> Configuration {
    match c {
        Configuration::Thread { main, term } => Configuration::Thread {
            main: *main,
            term: rename_chan(term, old, new),
        },
        Configuration::ParC(l, r) => Configuration::par(
            rename_chan_config(l, old, new),
            rename_chan_config(r, old, new),
        ),
        Configuration::ResC { a, b, a_type, b_type, buf, body } => {
            let ren = |n: Name| if n == old { new } else { n };
            let ren_item = |i: &BufItem| match i {
                BufItem::Val(t, ty) => BufItem::Val(rename_chan(t, old, new), ty.clone()),
                BufItem::Label(l) => BufItem::Label(l.clone()),
            };
            Configuration::ResC {
                a: ren(*a),
                b: ren(*b),
                a_type: a_type.clone(),
                b_type: b_type.clone(),
                buf: ChannelBuffer {
                    to_a: buf.to_a.iter().map(&ren_item).collect(),
                    to_b: buf.to_b.iter().map(&ren_item).collect(),
                },
                body: Box::new(rename_chan_config(body, old, new)),
            }
        }
    }
}

/// One-step successors: per-thread term steps, channel births, spawns,
/// closes, and the four buffer actions.
pub fn step_config(c: &Configuration) -> Vec<Configuration> {
    let mut out = Vec::new();
    match c {
        Configuration::Thread { main, term } => {
            if let Some((t2, _)) = step_term(term) {
                out.push(Configuration::Thread { main: *main, term: t2 });
            }
            if let Some(next) = fire_new(*main, term) {
                out.push(next);
            }
            if let Some((cont, child)) = rewrite_spawn(term) {
                out.push(Configuration::par(
                    Configuration::Thread { main: *main, term: cont },
                    Configuration::child(child),
                ));
            }
            if let Some(t2) = rewrite_close(term) {
                out.push(Configuration::Thread { main: *main, term: t2 });
            }
        }
        Configuration::ParC(l, r) => {
            for l2 in step_config(l) {
                out.push(Configuration::par(l2, (**r).clone()));
            }
            for r2 in step_config(r) {
                out.push(Configuration::par((**l).clone(), r2));
            }
        }
        Configuration::ResC { a, b, a_type, b_type, buf, body } => {
            for b2 in step_config(body) {
                out.push(Configuration::ResC {
                    a: *a,
                    b: *b,
                    a_type: a_type.clone(),
                    b_type: b_type.clone(),
                    buf: buf.clone(),
                    body: Box::new(b2),
                });
            }
            for (body2, buf2, at2, bt2) in
                buffer_steps(body, (*a, *b), buf, a_type, b_type)
            {
                out.push(Configuration::ResC {
                    a: *a,
                    b: *b,
                    a_type: at2,
                    b_type: bt2,
                    buf: buf2,
                    body: Box::new(body2),
                });
            }
        }
    }
    out
}

/// Rewrites the action at head evaluation position, if the callback
/// accepts the node it is shown.
fn rewrite_head(t: &Term, f: &mut dyn FnMut(&Term) -> Option<Term>) -> Option<Term> {
    if let Some(t2) = f(t) {
        return Some(t2);
    }
    match t {
        Term::App(fun, a) => {
            rewrite_head(fun, f).map(|f2| Term::app(f2, (**a).clone()))
        }
        // No descent under an explicit substitution: an action must wait for
        // the frame to migrate aside, or its subterms would escape the
        // frame's scope.
        Term::LetPair { left, left_ann, right, right_ann, pair, body } => {
            rewrite_head(pair, f).map(|p2| Term::LetPair {
                left: *left,
                left_ann: left_ann.clone(),
                right: *right,
                right_ann: right_ann.clone(),
                pair: Box::new(p2),
                body: body.clone(),
            })
        }
        Term::SendTm { payload, channel } => {
            rewrite_head(channel, f).map(|c2| Term::send((**payload).clone(), c2))
        }
        Term::RecvTm(c) => rewrite_head(c, f).map(Term::recv),
        Term::SelectTm(l, c) => rewrite_head(c, f).map(|c2| Term::select(l.clone(), c2)),
        Term::CaseTm { subject, branches } => rewrite_head(subject, f).map(|s2| Term::CaseTm {
            subject: Box::new(s2),
            branches: branches.clone(),
        }),
        Term::CloseTm { subject, cont } => {
            rewrite_head(subject, f).map(|s2| Term::close(s2, (**cont).clone()))
        }
        _ => None,
    }
}

/// A channel is created by a let-bound `new` in evaluation position; the
/// binder annotations, when present, seed the endpoint types.
fn fire_new(main: bool, term: &Term) -> Option<Configuration> {
    let mut made: Option<(Name, Name, Option<FunType>, Option<FunType>)> = None;
    let term2 = rewrite_head(term, &mut |t| {
        let Term::LetPair { left, left_ann, right, right_ann, pair, body } = t else {
            return None;
        };
        if !matches!(pair.as_ref(), Term::New) || made.is_some() {
            return None;
        }
        let a = Name::fresh(&left.origin());
        let b = Name::fresh(&right.origin());
        let a_type = left_ann
            .clone()
            .or_else(|| right_ann.as_ref().and_then(|t| fun_dual(t).ok()));
        let b_type = right_ann
            .clone()
            .or_else(|| a_type.as_ref().and_then(|t| fun_dual(t).ok()));
        made = Some((a, b, a_type, b_type));
        let inner = Term::subst_frame((**body).clone(), *left, Term::Chan(a));
        Some(Term::subst_frame(inner, *right, Term::Chan(b)))
    })?;
    let (a, b, a_type, b_type) = made.expect("rewrite succeeded");
    Some(Configuration::ResC {
        a,
        b,
        a_type,
        b_type,
        buf: ChannelBuffer::default(),
        body: Box::new(Configuration::Thread { main, term: term2 }),
    })
}

fn rewrite_spawn(term: &Term) -> Option<(Term, Term)> {
    let mut child: Option<Term> = None;
    let term2 = rewrite_head(term, &mut |t| {
        let Term::Spawn { child: c, cont } = t else { return None };
        if child.is_some() {
            return None;
        }
        child = Some((**c).clone());
        Some((**cont).clone())
    })?;
    Some((term2, child.expect("rewrite succeeded")))
}

fn rewrite_close(term: &Term) -> Option<Term> {
    rewrite_head(term, &mut |t| {
        let Term::CloseTm { subject, cont } = t else { return None };
        if matches!(subject.as_ref(), Term::Chan(_)) {
            Some((**cont).clone())
        } else {
            None
        }
    })
}

/// Advances a session type past one performed action, when it is known.
fn advance_send(t: &Option<FunType>) -> (Option<FunType>, Option<FunType>) {
    match t {
        Some(FunType::Out(payload, cont)) => {
            (Some((**payload).clone()), Some((**cont).clone()))
        }
        _ => (None, None),
    }
}

fn advance_recv(t: &Option<FunType>) -> Option<FunType> {
    match t {
        Some(FunType::In(_, cont)) => Some((**cont).clone()),
        _ => None,
    }
}

fn advance_choice(t: &Option<FunType>, l: &Label) -> Option<FunType> {
    match t {
        Some(FunType::Choice(bs)) | Some(FunType::Offer(bs)) => bs.get(l).cloned(),
        _ => None,
    }
}

type BufferStep = (Configuration, ChannelBuffer, Option<FunType>, Option<FunType>);

/// Buffer actions of every thread under this restriction that targets one
/// of its endpoints. Other restrictions in between are transparent: their
/// own endpoints are fresh and cannot collide.
fn buffer_steps(
    c: &Configuration,
    pair: (Name, Name),
    buf: &ChannelBuffer,
    a_type: &Option<FunType>,
    b_type: &Option<FunType>,
) -> Vec<BufferStep> {
    match c {
        Configuration::ParC(l, r) => {
            let mut out = Vec::new();
            for (l2, buf2, at, bt) in buffer_steps(l, pair, buf, a_type, b_type) {
                out.push((Configuration::par(l2, (**r).clone()), buf2, at, bt));
            }
            for (r2, buf2, at, bt) in buffer_steps(r, pair, buf, a_type, b_type) {
                out.push((Configuration::par((**l).clone(), r2), buf2, at, bt));
            }
            out
        }
        Configuration::ResC { a, b, a_type: iat, b_type: ibt, buf: ibuf, body } => {
            buffer_steps(body, pair, buf, a_type, b_type)
                .into_iter()
                .map(|(b2, buf2, at, bt)| {
                    (
                        Configuration::ResC {
                            a: *a,
                            b: *b,
                            a_type: iat.clone(),
                            b_type: ibt.clone(),
                            buf: ibuf.clone(),
                            body: Box::new(b2),
                        },
                        buf2,
                        at,
                        bt,
                    )
                })
                .collect()
        }
        Configuration::Thread { main, term } => {
            let (pa, pb) = pair;
            let mut out = Vec::new();
            // Four actions, each on either endpoint. A matched rewrite
            // produces the new term; the queue and types follow.
            for (mine, to_peer_is_a, my_type_is_a) in
                [(pa, false, true), (pb, true, false)]
            {
                let my_type = if my_type_is_a { a_type } else { b_type };
                let peer_queue =
                    |buf: &ChannelBuffer| if to_peer_is_a { buf.to_a.clone() } else { buf.to_b.clone() };
                let my_queue =
                    |buf: &ChannelBuffer| if my_type_is_a { buf.to_a.clone() } else { buf.to_b.clone() };
                let rebuild = |to_mine: VecDeque<BufItem>, to_peer: VecDeque<BufItem>| {
                    if my_type_is_a {
                        ChannelBuffer { to_a: to_mine, to_b: to_peer }
                    } else {
                        ChannelBuffer { to_a: to_peer, to_b: to_mine }
                    }
                };
                let pack = |at: Option<FunType>, bt: Option<FunType>| {
                    if my_type_is_a {
                        (at, bt)
                    } else {
                        (bt, at)
                    }
                };

                // send M mine: enqueue toward the peer, continue on mine.
                let mut seen_payload: Option<Term> = None;
                if let Some(t2) = rewrite_head(term, &mut |t| {
                    let Term::SendTm { payload, channel } = t else { return None };
                    if !matches!(channel.as_ref(), Term::Chan(c) if *c == mine) {
                        return None;
                    }
                    seen_payload = Some((**payload).clone());
                    Some(Term::Chan(mine))
                }) {
                    let payload = seen_payload.expect("rewrite succeeded");
                    let (pay_ty, cont_ty) = advance_send(my_type);
                    let mut q = peer_queue(buf);
                    q.push_back(BufItem::Val(payload, pay_ty));
                    let (at, bt) = pack(cont_ty, other_of(my_type_is_a, a_type, b_type));
                    out.push((
                        Configuration::Thread { main: *main, term: t2 },
                        rebuild(my_queue(buf), q),
                        at,
                        bt,
                    ));
                }

                // select l mine: enqueue the label.
                let mut seen_label: Option<Label> = None;
                if let Some(t2) = rewrite_head(term, &mut |t| {
                    let Term::SelectTm(l, channel) = t else { return None };
                    if !matches!(channel.as_ref(), Term::Chan(c) if *c == mine) {
                        return None;
                    }
                    seen_label = Some(l.clone());
                    Some(Term::Chan(mine))
                }) {
                    let l = seen_label.expect("rewrite succeeded");
                    let cont_ty = advance_choice(my_type, &l);
                    let mut q = peer_queue(buf);
                    q.push_back(BufItem::Label(l));
                    let (at, bt) = pack(cont_ty, other_of(my_type_is_a, a_type, b_type));
                    out.push((
                        Configuration::Thread { main: *main, term: t2 },
                        rebuild(my_queue(buf), q),
                        at,
                        bt,
                    ));
                }

                // recv mine: dequeue a value, yielding (payload, mine).
                if let Some(BufItem::Val(v, _)) = my_queue(buf).front().cloned() {
                    if let Some(t2) = rewrite_head(term, &mut |t| {
                        let Term::RecvTm(channel) = t else { return None };
                        if !matches!(channel.as_ref(), Term::Chan(c) if *c == mine) {
                            return None;
                        }
                        Some(Term::pair(v.clone(), Term::Chan(mine)))
                    }) {
                        let mut q = my_queue(buf);
                        q.pop_front();
                        let (at, bt) =
                            pack(advance_recv(my_type), other_of(my_type_is_a, a_type, b_type));
                        out.push((
                            Configuration::Thread { main: *main, term: t2 },
                            rebuild(q, peer_queue(buf)),
                            at,
                            bt,
                        ));
                    }
                }

                // case mine { ... }: dequeue a label, entering that branch
                // applied to the continued endpoint.
                if let Some(BufItem::Label(l)) = my_queue(buf).front().cloned() {
                    let mut matched = false;
                    if let Some(t2) = rewrite_head(term, &mut |t| {
                        let Term::CaseTm { subject, branches } = t else { return None };
                        if !matches!(subject.as_ref(), Term::Chan(c) if *c == mine) {
                            return None;
                        }
                        let branch = branches.get(&l)?;
                        matched = true;
                        Some(Term::app(branch.clone(), Term::Chan(mine)))
                    }) {
                        if matched {
                            let mut q = my_queue(buf);
                            q.pop_front();
                            let (at, bt) = pack(
                                advance_choice(my_type, &l),
                                other_of(my_type_is_a, a_type, b_type),
                            );
                            out.push((
                                Configuration::Thread { main: *main, term: t2 },
                                rebuild(q, peer_queue(buf)),
                                at,
                                bt,
                            ));
                        }
                    }
                }
            }
            out
        }
    }
}

fn other_of(
    my_type_is_a: bool,
    a_type: &Option<FunType>,
    b_type: &Option<FunType>,
) -> Option<FunType> {
    if my_type_is_a {
        b_type.clone()
    } else {
        a_type.clone()
    }
}

/// Canonical form for state identity: finished children and dead channels
/// vanish, endpoint binders and term binders take canonical names. Parallel
/// children keep their positions; the stepper rewrites threads in place, so
/// interleavings never produce reordered trees.
pub fn config_normalize(c: &Configuration) -> Configuration {
    let mut cur = simplify(c);
    // Dropping a dead restriction can expose another; iterate to a fixpoint.
    loop {
        let next = simplify(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    canonical_names(&cur)
}

fn simplify(c: &Configuration) -> Configuration {
    match c {
        Configuration::Thread { main, term } => Configuration::Thread {
            main: *main,
            term: term.clone(),
        },
        Configuration::ParC(l, r) => {
            let l = simplify(l);
            let r = simplify(r);
            let done = |c: &Configuration| {
                matches!(c, Configuration::Thread { main: false, term } if *term == Term::UnitVal)
            };
            if done(&l) {
                r
            } else if done(&r) {
                l
            } else {
                Configuration::par(l, r)
            }
        }
        Configuration::ResC { a, b, a_type, b_type, buf, body } => {
            let body = simplify(body);
            let used = chans_of(&body);
            if buf.is_empty() && !used.contains(a) && !used.contains(b) {
                body
            } else {
                Configuration::ResC {
                    a: *a,
                    b: *b,
                    a_type: a_type.clone(),
                    b_type: b_type.clone(),
                    buf: buf.clone(),
                    body: Box::new(body),
                }
            }
        }
    }
}

/// Endpoint binders number from here so their display never collides with
/// the per-term canonical variable numbering, which starts at zero.
const CHAN_CANON_BASE: u64 = 1 << 20;

fn canonical_names(c: &Configuration) -> Configuration {
    fn rename_all(c: &Configuration, next: &mut u64) -> Configuration {
        match c {
            Configuration::Thread { main, term } => Configuration::Thread {
                main: *main,
                term: term_alpha_canonical(term),
            },
            Configuration::ParC(l, r) => {
                let l = rename_all(l, next);
                let r = rename_all(r, next);
                Configuration::par(l, r)
            }
            Configuration::ResC { a, b, .. } => {
                let na = Name::canonical(*next);
                let nb = Name::canonical(*next + 1);
                *next += 2;
                let renamed = rename_chan_config(&rename_chan_config(c, *a, na), *b, nb);
                let Configuration::ResC { a_type, b_type, buf, body, .. } = renamed else {
                    unreachable!("renaming preserves shape");
                };
                Configuration::ResC {
                    a: na,
                    b: nb,
                    a_type,
                    b_type,
                    buf: ChannelBuffer {
                        to_a: buf
                            .to_a
                            .iter()
                            .map(canonical_item)
                            .collect(),
                        to_b: buf.to_b.iter().map(canonical_item).collect(),
                    },
                    body: Box::new(rename_all(&body, next)),
                }
            }
        }
    }
    fn canonical_item(i: &BufItem) -> BufItem {
        match i {
            BufItem::Val(t, ty) => BufItem::Val(term_alpha_canonical(t), ty.clone()),
            BufItem::Label(l) => BufItem::Label(l.clone()),
        }
    }
    let mut next = CHAN_CANON_BASE;
    rename_all(c, &mut next)
}

fn render_items(items: &VecDeque<BufItem>) -> String {
    let mut parts = Vec::new();
    for i in items {
        match i {
            BufItem::Val(t, _) => parts.push(print_term(t)),
            BufItem::Label(l) => parts.push(format!("#{l}")),
        }
    }
    parts.join(", ")
}

pub fn print_config(c: &Configuration) -> String {
    fn go(c: &Configuration, out: &mut String) {
        match c {
            Configuration::Thread { main, term } => {
                out.push_str(if *main { "main " } else { "child " });
                out.push_str(&print_term(term));
            }
            Configuration::ParC(l, r) => {
                out.push('(');
                go(l, out);
                out.push_str(" | ");
                go(r, out);
                out.push(')');
            }
            Configuration::ResC { a, b, a_type, b_type, buf, body } => {
                out.push_str("chan (");
                out.push_str(&a.origin());
                if let Some(t) = a_type {
                    out.push_str(" : ");
                    out.push_str(&print_funtype(t));
                }
                out.push(' ');
                out.push_str(&b.origin());
                if let Some(t) = b_type {
                    out.push_str(" : ");
                    out.push_str(&print_funtype(t));
                }
                out.push(')');
                if !buf.is_empty() {
                    out.push_str(" [");
                    out.push_str(&a.origin());
                    out.push_str("<-{");
                    out.push_str(&render_items(&buf.to_a));
                    out.push_str("} ");
                    out.push_str(&b.origin());
                    out.push_str("<-{");
                    out.push_str(&render_items(&buf.to_b));
                    out.push_str("}]");
                }
                out.push(' ');
                go(body, out);
            }
        }
    }
    let mut out = String::new();
    go(c, &mut out);
    out
}

/// State identity used by exploration.
pub fn config_key(c: &Configuration) -> String {
    print_config(&config_normalize(c))
}

#[derive(Debug, Clone)]
pub struct ConfigExploration {
    pub states_visited: usize,
    /// Canonical forms of states with no successor.
    pub terminals: Vec<Configuration>,
    pub truncated: bool,
}

/// Breadth-first reachability with canonical-form deduplication, mirroring
/// the process-side explorer.
pub fn explore_configs(c: &Configuration, max_states: usize) -> ConfigExploration {
    let start = config_normalize(c);
    let mut visited: BTreeSet<String> = BTreeSet::new();
    let mut queue: VecDeque<Configuration> = VecDeque::new();
    let mut terminals: Vec<(String, Configuration)> = Vec::new();
    let mut truncated = false;
    visited.insert(print_config(&start));
    queue.push_back(start);
    while let Some(cur) = queue.pop_front() {
        let succs = step_config(&cur);
        if succs.is_empty() {
            terminals.push((print_config(&cur), cur));
            continue;
        }
        for s in succs {
            let s = config_normalize(&s);
            let key = print_config(&s);
            if visited.contains(&key) {
                continue;
            }
            if visited.len() >= max_states {
                truncated = true;
                continue;
            }
            visited.insert(key);
            queue.push_back(s);
        }
    }
    terminals.sort_by(|(a, _), (b, _)| a.cmp(b));
    ConfigExploration {
        states_visited: visited.len(),
        terminals: terminals.into_iter().map(|(_, c)| c).collect(),
        truncated,
    }
}

/// The finished state: one main thread holding the unit value.
pub fn is_finished(c: &Configuration) -> bool {
    matches!(
        config_normalize(c),
        Configuration::Thread { main: true, term: Term::UnitVal }
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::Name;

    fn n(s: &str) -> Name {
        Name::intern(s)
    }

    fn lbl(s: &str) -> Label {
        Label(s.to_string())
    }

    /// let (s : !1.end, r : ?1.end) = new in
    ///   spawn (close (send () s); ()) ;
    ///   let (v, r2) = recv r in close r2; v
    fn ping() -> Configuration {
        let (s, r, v, r2) = (n("s"), n("r"), n("v"), n("r2"));
        let send_side = Term::close(
            Term::send(Term::UnitVal, Term::var(s)),
            Term::UnitVal,
        );
        let recv_side = Term::LetPair {
            left: v,
            left_ann: None,
            right: r2,
            right_ann: None,
            pair: Box::new(Term::recv(Term::var(r))),
            body: Box::new(Term::close(Term::var(r2), Term::var(v))),
        };
        let body = Term::spawn(send_side, recv_side);
        let term = Term::LetPair {
            left: s,
            left_ann: Some(FunType::out(FunType::Unit, FunType::End)),
            right: r,
            right_ann: None,
            pair: Box::new(Term::New),
            body: Box::new(body),
        };
        Configuration::main(term)
    }

    #[test]
    fn finished_main_thread_is_terminal() {
        let c = Configuration::main(Term::UnitVal);
        assert!(step_config(&c).is_empty());
        assert!(is_finished(&c));
    }

    #[test]
    fn new_creates_a_channel_with_dual_types() {
        let succs = step_config(&ping());
        assert_eq!(succs.len(), 1);
        let Configuration::ResC { a_type, b_type, buf, .. } = &succs[0] else {
            panic!("expected a channel, got {}", print_config(&succs[0]));
        };
        assert!(buf.is_empty());
        assert_eq!(*a_type, Some(FunType::out(FunType::Unit, FunType::End)));
        assert_eq!(*b_type, Some(FunType::inp(FunType::Unit, FunType::End)));
    }

    #[test]
    fn send_enqueues_and_continues() {
        // Drive ping forward until the send has fired; the frame moves by
        // congruence steps first, so search breadth-first.
        let mut frontier = vec![ping()];
        let mut sent = None;
        'search: for _ in 0..12 {
            let mut next = Vec::new();
            for c in &frontier {
                for s in step_config(c) {
                    if let Configuration::ResC { buf, a_type, .. } = &s {
                        if buf.to_a.len() + buf.to_b.len() == 1 {
                            assert_eq!(*a_type, Some(FunType::End));
                            sent = Some(s.clone());
                            break 'search;
                        }
                    }
                    next.push(s);
                }
            }
            frontier = next;
        }
        let sent = sent.expect("a send step is reachable");
        let Configuration::ResC { buf, .. } = &sent else { unreachable!() };
        assert!(matches!(
            buf.to_b.front(),
            Some(BufItem::Val(Term::UnitVal, Some(FunType::Unit)))
        ));
    }

    #[test]
    fn ping_round_trip_finishes() {
        let report = explore_configs(&ping(), 10_000);
        assert!(!report.truncated);
        assert_eq!(report.terminals.len(), 1);
        assert!(is_finished(&report.terminals[0]));
    }

    #[test]
    fn recv_blocks_on_an_empty_buffer() {
        // A lone receiver with no pending send has no successor.
        let r = n("r");
        let term = Term::LetPair {
            left: n("v"),
            left_ann: None,
            right: n("r2"),
            right_ann: None,
            pair: Box::new(Term::recv(Term::Chan(r))),
            body: Box::new(Term::var(n("v"))),
        };
        let c = Configuration::ResC {
            a: n("s"),
            b: r,
            a_type: Some(FunType::out(FunType::Unit, FunType::End)),
            b_type: Some(FunType::inp(FunType::Unit, FunType::End)),
            buf: ChannelBuffer::default(),
            body: Box::new(Configuration::main(term)),
        };
        assert!(step_config(&c).is_empty());
    }

    #[test]
    fn select_and_case_pick_the_branch() {
        let (s, r) = (n("s"), n("r"));
        let sel_ty = FunType::Choice(
            [(lbl("go"), FunType::End), (lbl("stop"), FunType::End)]
                .into_iter()
                .collect(),
        );
        let selector = Term::close(Term::select(lbl("go"), Term::Chan(s)), Term::UnitVal);
        let chooser = Term::CaseTm {
            subject: Box::new(Term::Chan(r)),
            branches: [
                (
                    lbl("go"),
                    Term::abs(n("c"), Term::close(Term::var(n("c")), Term::UnitVal)),
                ),
                (
                    lbl("stop"),
                    Term::abs(n("c"), Term::close(Term::var(n("c")), Term::UnitVal)),
                ),
            ]
            .into_iter()
            .collect(),
        };
        let c = Configuration::ResC {
            a: s,
            b: r,
            a_type: Some(sel_ty.clone()),
            b_type: fun_dual(&sel_ty).ok(),
            buf: ChannelBuffer::default(),
            body: Box::new(Configuration::par(
                Configuration::child(selector),
                Configuration::main(chooser),
            )),
        };
        let report = explore_configs(&c, 1000);
        assert!(!report.truncated);
        assert_eq!(report.terminals.len(), 1);
        assert!(is_finished(&report.terminals[0]));
    }

    #[test]
    fn buffer_preserves_order() {
        // Two queued sends are read back in enqueue order.
        let (s, r) = (n("s"), n("r"));
        let two_sends = Term::close(
            Term::send(Term::var(n("two")), Term::send(Term::var(n("one")), Term::Chan(s))),
            Term::UnitVal,
        );
        let ty = FunType::out(
            FunType::tvar("T"),
            FunType::out(FunType::tvar("T"), FunType::End),
        );
        let c = Configuration::ResC {
            a: s,
            b: r,
            a_type: Some(ty),
            b_type: None,
            buf: ChannelBuffer::default(),
            body: Box::new(Configuration::child(two_sends)),
        };
        // Fire the inner send, then the outer one.
        let c1 = step_config(&c).remove(0);
        let c2 = step_config(&c1)
            .into_iter()
            .find(|s| matches!(s, Configuration::ResC { buf, .. } if buf.to_b.len() == 2))
            .expect("second send fires");
        let Configuration::ResC { buf, .. } = &c2 else { unreachable!() };
        let items: Vec<_> = buf.to_b.iter().collect();
        assert!(matches!(items[0], BufItem::Val(Term::Var(x), _) if *x == n("one")));
        assert!(matches!(items[1], BufItem::Val(Term::Var(x), _) if *x == n("two")));
    }

    #[test]
    fn normalization_drops_finished_children_and_dead_channels() {
        let c = Configuration::par(
            Configuration::child(Term::UnitVal),
            Configuration::main(Term::UnitVal),
        );
        assert!(is_finished(&c));
        let dead = Configuration::ResC {
            a: n("x"),
            b: n("y"),
            a_type: Some(FunType::End),
            b_type: Some(FunType::End),
            buf: ChannelBuffer::default(),
            body: Box::new(Configuration::main(Term::UnitVal)),
        };
        assert!(is_finished(&dead));
    }

    #[test]
    fn main_thread_uniqueness_is_preserved() {
        fn count_mains(c: &Configuration) -> usize {
            match c {
                Configuration::Thread { main, .. } => usize::from(*main),
                Configuration::ParC(l, r) => count_mains(l) + count_mains(r),
                Configuration::ResC { body, .. } => count_mains(body),
            }
        }
        let mut frontier = vec![ping()];
        for _ in 0..6 {
            let mut next = Vec::new();
            for c in &frontier {
                assert_eq!(count_mains(c), 1);
                next.extend(step_config(c));
            }
            frontier = next;
        }
    }
}
