//! Delayed-acceptance Markov chain Monte Carlo.
//!
//! The Metropolis-Hastings ratio is split into ordered balanced factors that are
//! tested one at a time, so a proposal can be rejected after evaluating only the
//! cheap factors. The crate provides the kernels (plain MH, delayed acceptance,
//! clipped, min-of-partial-products and grouped variants), finite-adaptation factor
//! ranking, cost-aware optimal scaling, diagnostics, bundled models and an
//! experiment runner.

pub mod core;
pub mod diagnostics;
pub mod enumerate;
pub mod error;
pub mod experiment;
pub mod kernel;
pub mod models;
pub mod ranking;
pub mod sampler;
pub mod scaling;

pub use crate::core::{Factor, FactorKind, FactorizedRatio, ProposalFamily, ProposalSpec, StateVector};
pub use crate::diagnostics::{efficiency_report, esjd, ess, EfficiencyReport, Trace};
pub use crate::error::{Error, Result};
pub use crate::kernel::{step, ChainState, KernelConfig, StepOutcome, Variant};
pub use crate::models::Model;
pub use crate::sampler::{run_chain, run_chains, AcceptanceTarget, ChainResult, ChainSettings};
