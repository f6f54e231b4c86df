use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Pipeline stage tags used when an inverse pipeline propagates a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Rho,
    Embed,
    HeavyLevel,
    CoreSelect,
    GrowthSet,
    GapFit,
    Rescale,
    SmallBall,
    LevelSet,
    Discretize,
    DoubleCount,
    Round,
    Refine,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        match s.as_ref().and_then(|v| v.as_str()) {
            Some(name) => f.write_str(name),
            None => write!(f, "{self:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("volume {volume} exceeds enumeration cap {cap}")]
    CapExceeded { volume: u128, cap: u128 },

    #[error("rank {rank} exceeds the membership search limit {limit}")]
    RankTooLarge { rank: usize, limit: usize },

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("search budget exceeded: {0}")]
    SearchBudgetExceeded(String),

    #[error("{what} needs {needed} units, budget is {budget}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        budget: u128,
    },

    #[error("no level set with |S_m| e^(2-m) >= rho p for m <= {m_max}")]
    NoHeavyLevel { m_max: u32 },

    #[error("GAP fit failed: {0}")]
    FitFailed(String),

    #[error("growth hypothesis failed: |kX| = {sumset} > k^gamma |X| = {bound:.3}")]
    GrowthHypothesisFailed { sumset: usize, bound: f64 },

    #[error(
        "no window C <= {budget} with P(1 <= |z1 - z2| <= C) >= 1/2 (best mass {best_mass:.6})"
    )]
    NoWindow { budget: f64, best_mass: f64 },

    #[error("Monte Carlo estimate {estimate:.3e} +/- {half_width:.3e} straddles threshold {threshold:.3e}")]
    McTooNoisy {
        estimate: f64,
        half_width: f64,
        threshold: f64,
    },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("stage {stage}: {source}")]
    Stage { stage: Stage, source: Box<Error> },
}

impl Error {
    pub fn at(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error with stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Snake-case name of the innermost variant.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::RankTooLarge { .. } => "rank_too_large",
            Error::PreconditionFailed(_) => "precondition_failed",
            Error::SearchBudgetExceeded(_) => "search_budget_exceeded",
            Error::BudgetExceeded { .. } => "budget_exceeded",
            Error::NoHeavyLevel { .. } => "no_heavy_level",
            Error::FitFailed(_) => "fit_failed",
            Error::GrowthHypothesisFailed { .. } => "growth_hypothesis_failed",
            Error::NoWindow { .. } => "no_window",
            Error::McTooNoisy { .. } => "mc_too_noisy",
            Error::HypothesisViolated(_) => "hypothesis_violated",
            Error::InvalidInput(_) => "invalid_input",
            Error::Stage { .. } => unreachable!("root strips stages"),
        }
    }

    /// Outermost stage tag, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    /// True for errors that signal resource or statistical limits rather than
    /// malformed input.
    pub fn is_budget(&self) -> bool {
        matches!(
            self.root(),
            Error::CapExceeded { .. }
                | Error::BudgetExceeded { .. }
                | Error::SearchBudgetExceeded(_)
                | Error::McTooNoisy { .. }
        )
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
