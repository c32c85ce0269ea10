//! Monte Carlo experiments on the tracking example, CSV output, the
//! communication-rate table and the built-in oracle suite.

pub mod check;
pub mod config;
pub mod csv;
pub mod experiment;
pub mod table1;

pub use check::{run_checks, CheckOutcome};
pub use config::{Case, ExperimentConfig, RateMode, Scenario};
pub use csv::{emit_csv, emit_table, emit_trial_rates};
pub use experiment::{run_monte_carlo, run_rate_trial, ExperimentSummary, TrialRates};
pub use table1::{format_table1, table1};
