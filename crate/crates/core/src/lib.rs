//! Toolkit for an asynchronous session calculus: process syntax, structural
//! congruence, reduction, session typing with and without deadlock
//! protection, priority inference, and a linear functional layer that
//! compiles down to processes.

pub mod apcp;
pub mod checker;
pub mod congruence;
pub mod lastn;
pub mod name;
pub mod parser;
pub mod print;
pub mod process;
pub mod reduction;
pub mod types;

pub use apcp::{
    check_apcp, expand, generate_constraints, solve, ApcpReport, Constraint, Generated,
    PrioritySolution,
};
pub use checker::{check_acp, check_ap, CheckFailure, CheckVerdict, Discipline};
pub use congruence::{
    congruent, congruent_acp, cut_rebuild, normalize, scope_extrude, CanonicalForm,
};
pub use name::{Label, Name};
pub use parser::{
    parse_context, parse_funtype, parse_process, parse_term, parse_type, ParseError,
};
pub use print::{hash_print, print_context, print_process, print_type};
pub use process::{alpha_canonical, alpha_eq, free_names, substitute, Process};
pub use reduction::{
    explore, find_redexes, render_trace, run, step, ExplorationReport, Redex, RedexKind,
    StepError, Strategy, Trace, DEFAULT_MAX_STATES, DEFAULT_MAX_STEPS,
};
pub use types::{dual, priority_of, Priority, SessionType, TypingContext};
