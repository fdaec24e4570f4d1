//! Quantitative bipolar semantics: intrinsic strength, acceptability
//! degrees, and option scores.
//!
//! The degree of an argument `x` is a fixed point of
//!
//! > f(x) = σ(τ(x) + I(x, f)),  I(x, f) = Σ⁺ α·f(y) − Σ⁻ β·f(y)
//!
//! where the sums run over the supporters and attackers of `x`. Iteration
//! starts from `f⁽⁰⁾ = τ` and applies the damped update
//! `f ← (1 − λ)·f + λ·σ(τ + I(·, f))` until the largest change drops under
//! the tolerance. See [`solve`] for the evaluation schedule.

mod aggregate;
mod config;
mod intrinsic;
mod solver;

pub use aggregate::{aggregate_option, score_all_options, soft_max};
pub use config::{
    AggregationConfig, Schedule, ScorerWeights, SolverConfig, Squash, NEUTRAL_SCORE, SCORE_SPAN,
};
pub use intrinsic::{score_intrinsic, IntrinsicBreakdown};
pub use solver::{influence, solve};

use crate::argcore::{ArgId, DegreeAssignment, OptionId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SemanticsError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown argument `{0}`")]
    UnknownArgument(ArgId),
    #[error("unknown option `{0}`")]
    UnknownOption(OptionId),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: u64,
        residual: f64,
        partial: Box<DegreeAssignment>,
    },
}
