//! Sequential model-based hyperparameter optimization.
//!
//! The crate is organized around an ask/tell protocol: an [`assistants::ExperimentAssistant`]
//! hands out candidate hyperparameter vectors, the caller evaluates them at whatever cost
//! the underlying problem demands, and reports results back. Two proposal strategies are
//! provided: plain random search and a Gaussian-process based Bayesian optimizer that
//! maximizes expected improvement over the warped unit hypercube.
//!
//! Module layout:
//! * [`param_space`] — hyperparameter dimension definitions and their warping onto `[0, 1]`.
//! * [`gp`] — Gaussian-process surrogate with posterior mean/variance and their gradients.
//! * [`acquisition`] — probability of improvement, expected improvement, and the analytic
//!   EI gradient.
//! * [`acq_opt`] — maximization of acquisition functions: random warm start, projected
//!   quasi-Newton, Nelder-Mead.
//! * [`experiment`] — candidate/experiment bookkeeping and CSV serialization.
//! * [`optimizers`] — the strategy layer (`random`, `bayes`) behind a common interface.
//! * [`assistants`] — per-experiment and multi-experiment facades with file emission.

pub mod acq_opt;
pub mod acquisition;
pub mod assistants;
pub mod experiment;
pub mod gp;
pub mod optimizers;
pub mod param_space;
pub mod seed;
