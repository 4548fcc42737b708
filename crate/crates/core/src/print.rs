//! Deterministic rendering of processes, types, and contexts.
//!
//! Two renderers share one grammar: the display form assigns each distinct
//! name a readable identifier (reusing source identifiers where unambiguous),
//! while the hash form renders names with their internal identity and is used
//! as the state key during exploration. Both are stable: printing the same
//! tree twice yields the same text.

use std::collections::BTreeSet;

use crate::name::Name;
use crate::process::Process;
use crate::types::{Priority, SessionType, TypingContext};

fn render_process(p: &Process, out: &mut String, disp: &dyn Fn(Name) -> String) {
    match p {
        Process::Inact => out.push('0'),
        Process::Send { subject, payload, cont } => {
            out.push_str("send ");
            out.push_str(&disp(*subject));
            out.push('[');
            out.push_str(&disp(*payload));
            out.push(',');
            out.push_str(&disp(*cont));
            out.push(']');
        }
        Process::Recv { subject, payload, cont, body } => {
            out.push_str("recv ");
            out.push_str(&disp(*subject));
            out.push('(');
            out.push_str(&disp(*payload));
            out.push(',');
            out.push_str(&disp(*cont));
            out.push_str("). ");
            render_process(body, out, disp);
        }
        Process::Sel { subject, cont, label } => {
            out.push_str("sel ");
            out.push_str(&disp(*subject));
            out.push('[');
            out.push_str(&disp(*cont));
            out.push_str("] < ");
            out.push_str(&label.0);
        }
        Process::Bra { subject, binder, branches } => {
            out.push_str("bra ");
            out.push_str(&disp(*subject));
            out.push('(');
            out.push_str(&disp(*binder));
            out.push_str(") > { ");
            let mut first = true;
            for (label, body) in branches {
                if !first {
                    out.push_str(", ");
                }
                first = false;
                out.push_str(&label.0);
                out.push_str(": ");
                render_process(body, out, disp);
            }
            out.push_str(" }");
        }
        Process::Par(l, r) => {
            // Right-nested spines flatten so the printed form reparses to the
            // identical tree.
            out.push('(');
            render_process(l, out, disp);
            let mut rest = r.as_ref();
            loop {
                out.push_str(" | ");
                match rest {
                    Process::Par(rl, rr) => {
                        render_process(rl, out, disp);
                        rest = rr.as_ref();
                    }
                    leaf => {
                        render_process(leaf, out, disp);
                        break;
                    }
                }
            }
            out.push(')');
        }
        Process::Res { a, b, ann, body } => {
            out.push_str("new (");
            out.push_str(&disp(*a));
            if let Some(t) = ann {
                out.push(':');
                out.push_str(&print_type(t));
            }
            out.push(' ');
            out.push_str(&disp(*b));
            out.push_str(") ");
            render_process(body, out, disp);
        }
        Process::Fwd(a, b) => {
            out.push_str("fwd [");
            out.push_str(&disp(*a));
            out.push_str("<>");
            out.push_str(&disp(*b));
            out.push(']');
        }
    }
}

pub(crate) fn occurrence_order(p: &Process, acc: &mut Vec<Name>) {
    let note = |n: Name, acc: &mut Vec<Name>| {
        if !acc.contains(&n) {
            acc.push(n);
        }
    };
    match p {
        Process::Inact => {}
        Process::Send { subject, payload, cont } => {
            note(*subject, acc);
            note(*payload, acc);
            note(*cont, acc);
        }
        Process::Recv { subject, payload, cont, body } => {
            note(*subject, acc);
            note(*payload, acc);
            note(*cont, acc);
            occurrence_order(body, acc);
        }
        Process::Sel { subject, cont, .. } => {
            note(*subject, acc);
            note(*cont, acc);
        }
        Process::Bra { subject, binder, branches } => {
            note(*subject, acc);
            note(*binder, acc);
            for body in branches.values() {
                occurrence_order(body, acc);
            }
        }
        Process::Par(l, r) => {
            occurrence_order(l, acc);
            occurrence_order(r, acc);
        }
        Process::Res { a, b, body, .. } => {
            note(*a, acc);
            note(*b, acc);
            occurrence_order(body, acc);
        }
        Process::Fwd(a, b) => {
            note(*a, acc);
            note(*b, acc);
        }
    }
}

/// Builds an injective display mapping for the given first-occurrence order:
/// source names keep their identifier when unambiguous, canonical binders
/// draw from a letter pool, and collisions get a numeric suffix.
pub(crate) fn assign_display(order: Vec<Name>) -> impl Fn(Name) -> String {
    let mut used: BTreeSet<String> = BTreeSet::new();
    let mut table: Vec<(Name, String)> = Vec::new();
    // Source names claim their identifiers first so canonical binders never
    // shadow a free name that occurs later in the tree.
    for n in order.iter().filter(|n| !n.is_canonical()) {
        let origin = n.origin();
        let origin = if origin == "_" { "u".to_string() } else { origin };
        let text = if used.contains(&origin) {
            let mut k = 2;
            loop {
                let candidate = format!("{origin}{k}");
                if !used.contains(&candidate) {
                    break candidate;
                }
                k += 1;
            }
        } else {
            origin
        };
        used.insert(text.clone());
        table.push((*n, text));
    }
    let letters = "abcdefghijklmnopqrstuvwxyz";
    let mut pool = 0usize;
    for n in order.iter().filter(|n| n.is_canonical()) {
        let text = loop {
            let candidate = if pool < letters.len() {
                letters[pool..pool + 1].to_string()
            } else {
                format!("n{}", pool - letters.len() + 1)
            };
            pool += 1;
            if !used.contains(&candidate) {
                break candidate;
            }
        };
        used.insert(text.clone());
        table.push((*n, text));
    }
    move |n: Name| {
        table
            .iter()
            .find(|(m, _)| *m == n)
            .map(|(_, t)| t.clone())
            .unwrap_or_else(|| n.hash_text())
    }
}

/// Readable rendering; reparsing yields an alpha-equivalent tree.
pub fn print_process(p: &Process) -> String {
    let mut order = Vec::new();
    occurrence_order(p, &mut order);
    let disp = assign_display(order);
    let mut out = String::new();
    render_process(p, &mut out, &disp);
    out
}

/// Identity-preserving rendering used for state keys. Apply to canonical
/// forms: two processes with equal hash text are structurally equal up to
/// the interner.
pub fn hash_print(p: &Process) -> String {
    let mut out = String::new();
    render_process(p, &mut out, &|n| n.hash_text());
    out
}

/// Rendering with a caller-supplied name resolver; used for ordering keys.
pub fn print_process_with(p: &Process, resolver: &dyn Fn(Name) -> String) -> String {
    let mut out = String::new();
    render_process(p, &mut out, resolver);
    out
}

fn render_pri(pri: &Option<Priority>) -> String {
    match pri {
        None => String::new(),
        Some(p) => format!("[{p}]"),
    }
}

/// Wraps binary connectives so the printed form has one parse.
fn atom(t: &SessionType) -> String {
    match t {
        SessionType::Tensor { .. } | SessionType::Par { .. } => format!("({})", print_type(t)),
        _ => print_type(t),
    }
}

pub fn print_type(t: &SessionType) -> String {
    match t {
        SessionType::Closed => "end".to_string(),
        SessionType::Opaque { name, dualized } => {
            if *dualized {
                format!("~{name}")
            } else {
                name.clone()
            }
        }
        SessionType::Tensor { pri, payload, cont } => {
            format!("{} *{} {}", atom(payload), render_pri(pri), print_type(cont))
        }
        SessionType::Par { pri, payload, cont } => {
            format!("{} %{} {}", atom(payload), render_pri(pri), print_type(cont))
        }
        SessionType::Plus { pri, branches } => {
            let body = branches
                .iter()
                .map(|(l, t)| format!("{}: {}", l.0, print_type(t)))
                .collect::<Vec<_>>()
                .join(", ");
            format!("+{}{{{body}}}", render_pri(pri))
        }
        SessionType::With { pri, branches } => {
            let body = branches
                .iter()
                .map(|(l, t)| format!("{}: {}", l.0, print_type(t)))
                .collect::<Vec<_>>()
                .join(", ");
            format!("&{}{{{body}}}", render_pri(pri))
        }
    }
}

/// One `name : type` line per entry.
pub fn print_context(ctx: &TypingContext) -> String {
    let mut out = String::new();
    for (n, t) in ctx.iter() {
        out.push_str(&n.origin());
        out.push_str(" : ");
        out.push_str(&print_type(t));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::Label;
    use crate::process::alpha_canonical;

    fn n(s: &str) -> Name {
        Name::intern(s)
    }

    #[test]
    fn renders_each_form() {
        let (x, y, a, b, z) = (n("x"), n("y"), n("a"), n("b"), n("z"));
        let p = Process::res(
            x,
            y,
            Process::par(
                Process::send(x, a, b),
                Process::bra(
                    y,
                    z,
                    vec![
                        (Label::new("go"), Process::fwd(z, a)),
                        (Label::new("halt"), Process::Inact),
                    ],
                ),
            ),
        );
        assert_eq!(
            print_process(&p),
            "new (x y) (send x[a,b] | bra y(z) > { go: fwd [z<>a], halt: 0 })"
        );
    }

    #[test]
    fn display_disambiguates_same_origin() {
        let x = n("x");
        let x_fresh = Name::fresh("x");
        let p = Process::fwd(x, x_fresh);
        assert_eq!(print_process(&p), "fwd [x<>x2]");
    }

    #[test]
    fn canonical_binders_get_pool_names() {
        let (x, y, a, b) = (n("x"), n("y"), n("a"), n("b"));
        let p = alpha_canonical(&Process::res(x, y, Process::send(x, a, b)));
        assert_eq!(print_process(&p), "new (c d) send c[a,b]");
    }

    #[test]
    fn type_rendering() {
        let t = SessionType::tensor(
            SessionType::Closed,
            SessionType::par(SessionType::Closed, SessionType::Closed),
        );
        assert_eq!(print_type(&t), "end * end % end");
        let mut t2 = SessionType::plus(vec![
            (Label::new("go"), SessionType::Closed),
            (Label::new("halt"), SessionType::opaque("T")),
        ]);
        t2.set_head_pri(Priority::Var("p".into()));
        assert_eq!(print_type(&t2), "+[p]{go: end, halt: T}");
        let nested = SessionType::tensor(
            SessionType::par(SessionType::Closed, SessionType::Closed),
            SessionType::Closed,
        );
        assert_eq!(print_type(&nested), "(end % end) * end");
    }
}
