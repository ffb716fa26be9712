//! One module per subcommand. Every `execute` prints a human summary to
//! stdout (always starting with the config hash), writes its artifacts, and
//! returns the numbers it printed so tests can assert on them in-process.

pub mod analyze;
pub mod baselines;
pub mod compare;
pub mod curves;
pub mod eval;
pub mod run;
