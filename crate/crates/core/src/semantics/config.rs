use serde::{Deserialize, Serialize};

use super::SemanticsError;

/// Squashing function that maps `τ(x) + I(x, f)` back into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Squash {
    /// `min(1, max(0, v))`
    #[default]
    Clip,
    /// `1 / (1 + exp(-k (v - 0.5)))`
    Logistic,
}

/// Order in which node updates are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Strongly connected components in topological order: acyclic nodes are
    /// evaluated once from their final parents, cyclic components run the
    /// damped iteration with their upstream inputs fixed.
    #[default]
    Condensed,
    /// Every node updated simultaneously from the previous sweep.
    Synchronous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub squash: Squash,
    pub logistic_k: f64,
    /// λ in `(0, 1]`; 1 is the undamped update.
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: u64,
    #[serde(default)]
    pub schedule: Schedule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            squash: Squash::Clip,
            logistic_k: 4.0,
            damping: 0.5,
            tolerance: 1e-6,
            max_iterations: 10_000,
            schedule: Schedule::Condensed,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SemanticsError> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(SemanticsError::InvalidConfig(format!(
                "damping must be in (0,1], got {}",
                self.damping
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(SemanticsError::InvalidConfig(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations < 1 {
            return Err(SemanticsError::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(self.logistic_k > 0.0 && self.logistic_k.is_finite()) {
            return Err(SemanticsError::InvalidConfig(format!(
                "logistic_k must be > 0, got {}",
                self.logistic_k
            )));
        }
        Ok(())
    }

    /// Applies σ.
    pub fn squash(&self, v: f64) -> f64 {
        match self.squash {
            Squash::Clip => v.clamp(0.0, 1.0),
            Squash::Logistic => 1.0 / (1.0 + (-self.logistic_k * (v - 0.5)).exp()),
        }
    }
}

/// Score an option with no arguments, or with balanced arguments, receives.
pub const NEUTRAL_SCORE: f64 = 0.5;
/// Half-width of the option score range around [`NEUTRAL_SCORE`].
pub const SCORE_SPAN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregationConfig {
    /// Soft-max temperature; small values approach the maximum, large
    /// values approach the mean.
    pub temperature: f64,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig { temperature: 0.25 }
    }
}

impl AggregationConfig {
    pub fn validate(&self) -> Result<(), SemanticsError> {
        if self.temperature > 0.0 && self.temperature.is_finite() {
            Ok(())
        } else {
            Err(SemanticsError::InvalidConfig(format!(
                "temperature must be > 0, got {}",
                self.temperature
            )))
        }
    }
}

/// Weights of the three intrinsic-strength criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerWeights {
    pub w_relevance: f64,
    pub w_consistency: f64,
    pub w_transparency: f64,
}

impl Default for ScorerWeights {
    fn default() -> Self {
        ScorerWeights {
            w_relevance: 0.4,
            w_consistency: 0.4,
            w_transparency: 0.2,
        }
    }
}

impl ScorerWeights {
    pub fn validate(&self) -> Result<(), SemanticsError> {
        let ws = [self.w_relevance, self.w_consistency, self.w_transparency];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(SemanticsError::InvalidConfig("scorer weights must be >= 0".into()));
        }
        let sum: f64 = ws.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SemanticsError::InvalidConfig(format!(
                "scorer weights must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}
