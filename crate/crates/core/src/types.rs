//! Session types, duality, and priority bookkeeping.
//!
//! One type grammar serves all three disciplines. The plain checkers ignore
//! priority annotations entirely; the priority-aware checker treats a missing
//! annotation as a fresh inference variable. `Closed` is self-dual and is the
//! only type a process may leave unused.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::name::{Label, Name};

/// Priority attached to a connective: a concrete level, a named inference
/// variable, or the top element carried by `Closed`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Priority {
    Const(u64),
    Var(String),
    Omega,
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Priority::Const(n) => write!(f, "{n}"),
            Priority::Var(v) => f.write_str(v),
            Priority::Omega => f.write_str("omega"),
        }
    }
}

/// A binary session type. Branch maps are label-sorted, so structural
/// equality is insensitive to the order branches were written in.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum SessionType {
    /// Output: emit a payload name and a continuation name.
    Tensor {
        pri: Option<Priority>,
        payload: Box<SessionType>,
        cont: Box<SessionType>,
    },
    /// Input: receive a payload name and a continuation name.
    Par {
        pri: Option<Priority>,
        payload: Box<SessionType>,
        cont: Box<SessionType>,
    },
    /// Internal choice: emit one label from the branch set.
    Plus {
        pri: Option<Priority>,
        branches: BTreeMap<Label, SessionType>,
    },
    /// External choice: offer every branch in the set.
    With {
        pri: Option<Priority>,
        branches: BTreeMap<Label, SessionType>,
    },
    /// No behaviour; self-dual and freely dischargeable.
    Closed,
    /// An abstract protocol name, used where a type is kept symbolic.
    /// `dualized` marks the dual of the named protocol.
    Opaque { name: String, dualized: bool },
}

impl SessionType {
    pub fn tensor(payload: SessionType, cont: SessionType) -> SessionType {
        SessionType::Tensor {
            pri: None,
            payload: Box::new(payload),
            cont: Box::new(cont),
        }
    }

    pub fn par(payload: SessionType, cont: SessionType) -> SessionType {
        SessionType::Par {
            pri: None,
            payload: Box::new(payload),
            cont: Box::new(cont),
        }
    }

    pub fn plus(branches: Vec<(Label, SessionType)>) -> SessionType {
        SessionType::Plus {
            pri: None,
            branches: branches.into_iter().collect(),
        }
    }

    pub fn with(branches: Vec<(Label, SessionType)>) -> SessionType {
        SessionType::With {
            pri: None,
            branches: branches.into_iter().collect(),
        }
    }

    pub fn opaque(name: &str) -> SessionType {
        SessionType::Opaque {
            name: name.to_string(),
            dualized: false,
        }
    }

    /// The outermost priority annotation, if any.
    pub fn head_pri(&self) -> Option<&Priority> {
        match self {
            SessionType::Tensor { pri, .. } | SessionType::Par { pri, .. } => pri.as_ref(),
            SessionType::Plus { pri, .. } | SessionType::With { pri, .. } => pri.as_ref(),
            SessionType::Closed | SessionType::Opaque { .. } => None,
        }
    }

    pub fn set_head_pri(&mut self, p: Priority) {
        match self {
            SessionType::Tensor { pri, .. } | SessionType::Par { pri, .. } => *pri = Some(p),
            SessionType::Plus { pri, .. } | SessionType::With { pri, .. } => *pri = Some(p),
            SessionType::Closed | SessionType::Opaque { .. } => {}
        }
    }

    /// Structural equality that disregards priority annotations. This is the
    /// notion of type equality used by the plain and cut-based checkers.
    pub fn eq_modulo_pri(&self, other: &SessionType) -> bool {
        use SessionType::*;
        match (self, other) {
            (Closed, Closed) => true,
            (
                Opaque { name: a, dualized: da },
                Opaque { name: b, dualized: db },
            ) => a == b && da == db,
            (
                Tensor { payload: p1, cont: c1, .. },
                Tensor { payload: p2, cont: c2, .. },
            )
            | (
                Par { payload: p1, cont: c1, .. },
                Par { payload: p2, cont: c2, .. },
            ) => p1.eq_modulo_pri(p2) && c1.eq_modulo_pri(c2),
            (Plus { branches: b1, .. }, Plus { branches: b2, .. })
            | (With { branches: b1, .. }, With { branches: b2, .. }) => {
                b1.len() == b2.len()
                    && b1.iter().zip(b2.iter()).all(|((l1, t1), (l2, t2))| {
                        l1 == l2 && t1.eq_modulo_pri(t2)
                    })
            }
            _ => false,
        }
    }

    /// Strips every priority annotation.
    pub fn strip_pri(&self) -> SessionType {
        use SessionType::*;
        match self {
            Closed => Closed,
            Opaque { name, dualized } => Opaque {
                name: name.clone(),
                dualized: *dualized,
            },
            Tensor { payload, cont, .. } => SessionType::tensor(payload.strip_pri(), cont.strip_pri()),
            Par { payload, cont, .. } => SessionType::par(payload.strip_pri(), cont.strip_pri()),
            Plus { branches, .. } => SessionType::Plus {
                pri: None,
                branches: branches
                    .iter()
                    .map(|(l, t)| (l.clone(), t.strip_pri()))
                    .collect(),
            },
            With { branches, .. } => SessionType::With {
                pri: None,
                branches: branches
                    .iter()
                    .map(|(l, t)| (l.clone(), t.strip_pri()))
                    .collect(),
            },
        }
    }
}

/// The dual of a session type: output against input, internal against
/// external choice, component-wise on subterms. Priority annotations are
/// copied unchanged, so dual endpoints agree on every priority. Involutive.
pub fn dual(t: &SessionType) -> SessionType {
    use SessionType::*;
    match t {
        Closed => Closed,
        Opaque { name, dualized } => Opaque {
            name: name.clone(),
            dualized: !dualized,
        },
        Tensor { pri, payload, cont } => Par {
            pri: pri.clone(),
            payload: Box::new(dual(payload)),
            cont: Box::new(dual(cont)),
        },
        Par { pri, payload, cont } => Tensor {
            pri: pri.clone(),
            payload: Box::new(dual(payload)),
            cont: Box::new(dual(cont)),
        },
        Plus { pri, branches } => With {
            pri: pri.clone(),
            branches: branches.iter().map(|(l, b)| (l.clone(), dual(b))).collect(),
        },
        With { pri, branches } => Plus {
            pri: pri.clone(),
            branches: branches.iter().map(|(l, b)| (l.clone(), dual(b))).collect(),
        },
    }
}

/// Error for priority queries on a connective with no annotation.
#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
#[error("type{0} has no priority annotation")]
pub struct Unannotated(pub String);

/// The priority of a type: the annotation of its outermost connective, or
/// the top element for `Closed`.
pub fn priority_of(t: &SessionType) -> Result<Priority, Unannotated> {
    match t {
        SessionType::Closed => Ok(Priority::Omega),
        SessionType::Opaque { name, .. } => Err(Unannotated(format!(" {name}"))),
        _ => t
            .head_pri()
            .cloned()
            .ok_or_else(|| Unannotated(String::new())),
    }
}

/// A lazily simplified minimum over a set of priorities. Entries equal to
/// the top element are dropped on insertion; an empty set denotes the top
/// element itself. Comparisons against the minimum expand to one comparison
/// per remaining entry.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct PriorityMin {
    entries: BTreeSet<Priority>,
}

impl PriorityMin {
    pub fn empty() -> PriorityMin {
        PriorityMin::default()
    }

    pub fn add(&mut self, p: Priority) {
        if p != Priority::Omega {
            self.entries.insert(p);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Priority> {
        self.entries.iter()
    }

    /// Collapses to a single priority when possible: the top element for an
    /// empty set, the numeric minimum when every entry is a constant, the
    /// sole entry when there is exactly one.
    pub fn as_priority(&self) -> Option<Priority> {
        if self.entries.is_empty() {
            return Some(Priority::Omega);
        }
        if self.entries.len() == 1 {
            return self.entries.iter().next().cloned();
        }
        let mut min = None;
        for e in &self.entries {
            match e {
                Priority::Const(n) => {
                    min = Some(match min {
                        None => *n,
                        Some(m) if *n < m => *n,
                        Some(m) => m,
                    });
                }
                _ => return None,
            }
        }
        min.map(Priority::Const)
    }
}

/// An ordered association of names to session types with no duplicates.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct TypingContext {
    entries: Vec<(Name, SessionType)>,
}

impl TypingContext {
    pub fn new() -> TypingContext {
        TypingContext::default()
    }

    pub fn from_entries(entries: Vec<(Name, SessionType)>) -> Result<TypingContext, Name> {
        let mut ctx = TypingContext::new();
        for (n, t) in entries {
            ctx.insert(n, t)?;
        }
        Ok(ctx)
    }

    /// Adds an entry; errors with the offending name on a duplicate.
    pub fn insert(&mut self, name: Name, ty: SessionType) -> Result<(), Name> {
        if self.lookup(name).is_some() {
            return Err(name);
        }
        self.entries.push((name, ty));
        Ok(())
    }

    pub fn lookup(&self, name: Name) -> Option<&SessionType> {
        self.entries.iter().find(|(n, _)| *n == name).map(|(_, t)| t)
    }

    pub fn remove(&mut self, name: Name) -> Option<SessionType> {
        let idx = self.entries.iter().position(|(n, _)| *n == name)?;
        Some(self.entries.remove(idx).1)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Name, SessionType)> {
        self.entries.iter()
    }

    pub fn names(&self) -> Vec<Name> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// The priority of a context: the symbolic minimum over its entries.
pub fn priority_of_context(ctx: &TypingContext) -> Result<PriorityMin, Unannotated> {
    let mut min = PriorityMin::empty();
    for (n, t) in ctx.iter() {
        match priority_of(t) {
            Ok(p) => min.add(p),
            Err(Unannotated(_)) => {
                return Err(Unannotated(format!(" of {}", n.origin())));
            }
        }
    }
    Ok(min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn end() -> SessionType {
        SessionType::Closed
    }

    #[test]
    fn dual_swaps_connectives() {
        let t = SessionType::tensor(end(), SessionType::par(end(), end()));
        let d = dual(&t);
        match &d {
            SessionType::Par { payload, cont, .. } => {
                assert_eq!(**payload, end());
                match &**cont {
                    SessionType::Tensor { .. } => {}
                    other => panic!("expected output continuation, got {other:?}"),
                }
            }
            other => panic!("expected input, got {other:?}"),
        }
        assert_eq!(dual(&d), t);
    }

    #[test]
    fn dual_keeps_priorities() {
        let mut t = SessionType::tensor(end(), end());
        t.set_head_pri(Priority::Const(3));
        let d = dual(&t);
        assert_eq!(d.head_pri(), Some(&Priority::Const(3)));
        assert_eq!(priority_of(&d).unwrap(), Priority::Const(3));
    }

    #[test]
    fn priority_of_closed_is_top() {
        assert_eq!(priority_of(&end()).unwrap(), Priority::Omega);
        let t = SessionType::tensor(end(), end());
        assert!(priority_of(&t).is_err());
    }

    #[test]
    fn context_priority_examples() {
        let x = Name::intern("x");
        let y = Name::intern("y");
        let empty = TypingContext::new();
        assert_eq!(
            priority_of_context(&empty).unwrap().as_priority(),
            Some(Priority::Omega)
        );

        let mut all_closed = TypingContext::new();
        all_closed.insert(x, end()).unwrap();
        all_closed.insert(y, end()).unwrap();
        assert_eq!(
            priority_of_context(&all_closed).unwrap().as_priority(),
            Some(Priority::Omega)
        );

        let mut mixed = TypingContext::new();
        let mut t = SessionType::tensor(end(), end());
        t.set_head_pri(Priority::Const(3));
        mixed.insert(x, t).unwrap();
        mixed.insert(y, end()).unwrap();
        assert_eq!(
            priority_of_context(&mixed).unwrap().as_priority(),
            Some(Priority::Const(3))
        );
    }

    #[test]
    fn duplicate_context_entries_rejected() {
        let x = Name::intern("x");
        let mut ctx = TypingContext::new();
        ctx.insert(x, end()).unwrap();
        assert_eq!(ctx.insert(x, end()), Err(x));
    }

    #[test]
    fn opaque_dual_flips_marker() {
        let t = SessionType::opaque("T");
        let d = dual(&t);
        assert_eq!(
            d,
            SessionType::Opaque {
                name: "T".into(),
                dualized: true
            }
        );
        assert_eq!(dual(&d), t);
    }
}
