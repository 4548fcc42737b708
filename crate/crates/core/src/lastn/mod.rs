//! Linear functional layer: terms with explicit substitutions, a small-step
//! evaluator, a linear typechecker, runtime configurations with buffered
//! channels, and a compiler into the process layer.

pub mod config;
pub mod step;
pub mod term;
pub mod translate;
pub mod typecheck;

pub use config::{
    config_key, config_normalize, explore_configs, is_finished, print_config, step_config,
    BufItem, ChannelBuffer, ConfigExploration, Configuration,
};
pub use step::{run_term, step_term, TermStepKind, TermTrace};
pub use translate::{trans_config, trans_ctx_type, trans_type, TransResult};
pub use typecheck::{typecheck_config, typecheck_term, ConfigVerdict};
pub use term::{fun_dual, is_session, print_funtype, print_term, FunType, Term};
