//! Interned channel names and branch labels.
//!
//! Names are integers backed by a global table mapping each id to the
//! identifier it was created from. Two names are equal exactly when their ids
//! are equal, so distinct binders that reuse the same source identifier stay
//! distinguishable after renaming while `intern` keeps all occurrences of one
//! free identifier shared. Fresh names draw from the same monotone counter
//! and therefore never collide with anything already in scope.
//!
//! Ids at or above `CANON_BASE` are reserved for `alpha_canonical`: binders
//! renamed into that range carry their position in a deterministic traversal,
//! which makes alpha-equivalent terms structurally equal.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

const CANON_BASE: u64 = 1 << 62;

struct Interner {
    by_text: HashMap<String, u64>,
    origins: Vec<String>,
}

fn interner() -> &'static Mutex<Interner> {
    static TABLE: OnceLock<Mutex<Interner>> = OnceLock::new();
    TABLE.get_or_init(|| {
        Mutex::new(Interner {
            by_text: HashMap::new(),
            origins: Vec::new(),
        })
    })
}

/// A channel name or term variable.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(u64);

impl Name {
    /// Returns the shared name for `text`, creating it on first use.
    pub fn intern(text: &str) -> Name {
        let mut t = interner().lock().unwrap();
        if let Some(&id) = t.by_text.get(text) {
            return Name(id);
        }
        let id = t.origins.len() as u64;
        t.origins.push(text.to_string());
        t.by_text.insert(text.to_string(), id);
        Name(id)
    }

    /// Returns a name guaranteed distinct from every existing one. The origin
    /// text is kept for display only; `fresh("x")` never equals `intern("x")`.
    pub fn fresh(origin: &str) -> Name {
        let mut t = interner().lock().unwrap();
        let id = t.origins.len() as u64;
        t.origins.push(origin.to_string());
        Name(id)
    }

    /// The `index`-th canonical binder name. Used by alpha canonicalization;
    /// never produced by `intern` or `fresh`.
    pub fn canonical(index: u64) -> Name {
        debug_assert!(index < u64::MAX - CANON_BASE);
        Name(CANON_BASE + index)
    }

    pub fn is_canonical(&self) -> bool {
        self.0 >= CANON_BASE
    }

    /// Position of a canonical binder name, if this is one.
    pub fn canonical_index(&self) -> Option<u64> {
        self.is_canonical().then(|| self.0 - CANON_BASE)
    }

    /// The identifier this name was created from, or a positional placeholder
    /// for canonical binders.
    pub fn origin(&self) -> String {
        if self.is_canonical() {
            return format!("?{}", self.0 - CANON_BASE);
        }
        interner().lock().unwrap().origins[self.0 as usize].clone()
    }

    /// Unambiguous rendering for state hashing: origin plus id for interned
    /// names, positional form for canonical ones.
    pub fn hash_text(&self) -> String {
        if self.is_canonical() {
            format!("?{}", self.0 - CANON_BASE)
        } else {
            format!("{}#{}", self.origin(), self.0)
        }
    }

    /// Sort key used wherever a deterministic name order is needed: origin
    /// text first, then creation order.
    pub fn sort_key(&self) -> (String, u64) {
        (self.origin(), self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.hash_text())
    }
}

/// A branch label for selection and branching.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub String);

impl Label {
    pub fn new(text: &str) -> Label {
        Label(text.to_string())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intern_shares_and_fresh_separates() {
        let a = Name::intern("chan");
        let b = Name::intern("chan");
        assert_eq!(a, b);
        let c = Name::fresh("chan");
        assert_ne!(a, c);
        assert_eq!(c.origin(), "chan");
        let d = Name::fresh("chan");
        assert_ne!(c, d);
    }

    #[test]
    fn canonical_names_are_reserved() {
        let k = Name::canonical(3);
        assert!(k.is_canonical());
        assert_eq!(k.origin(), "?3");
        assert_eq!(Name::canonical(3), Name::canonical(3));
        assert_ne!(Name::canonical(0), Name::canonical(1));
        assert!(!Name::intern("?3").is_canonical());
    }
}
