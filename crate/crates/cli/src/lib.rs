//! Configuration, expression parsing and batch execution for the `varexp`
//! binary.

pub mod config;
pub mod expr;
pub mod run;

pub use config::{AppKind, ConfigError, RunConfig};
pub use expr::{parse_expr, parse_scoped, Env, Expr, ExprError, Var};
pub use run::{run, RunOptions, RunOutcome, Summary, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_OK};
