//! Error dynamics of learning agents in multi-agent systems.
//!
//! Agents are modeled by three rates over their world-to-action mappings
//! (change, learning, retention) plus pairwise impacts that describe how one
//! agent's decision changes move another's target function. From those
//! parameters a difference equation predicts each agent's expected error
//! over time. The crate pairs that deterministic model with an agent-based
//! Monte Carlo simulator implementing the same mechanism with explicit
//! decision tables, so every analytic prediction can be checked against an
//! independent stochastic oracle:
//!
//! * [`theory`]: the difference equations, volatility calculus, fixed
//!   points, error surfaces, and vector fields.
//! * [`sim`]: seeded simulations of synthetic rate-driven systems, the
//!   matching game, a population coordination game, and a two-seller
//!   pricing market, with per-world trace records.
//! * [`estimate`]: conditional-frequency recovery of the rates and impacts
//!   from traces, with Wilson intervals.
//! * [`pac`]: sample-complexity bounds linking a consistent learner's
//!   learning rate to its PAC parameters.
//! * [`repro`]: named presets and unit mappings for the bundled
//!   experiments.
//! * [`config`] and [`runner`]: the TOML experiment format and the CSV
//!   emitting dispatcher behind the `clri` binary.

pub mod config;
pub mod error;
pub mod estimate;
pub mod pac;
pub mod repro;
pub mod runner;
pub mod sim;
pub mod theory;

pub use error::{Error, Result};
