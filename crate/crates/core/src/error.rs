use thiserror::Error;

use crate::game::{ActionPair, GameState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DuelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        reason: &'static str,
    },

    #[error("illegal action pair {actions:?} in state {state:?}")]
    IllegalAction {
        state: GameState,
        actions: ActionPair,
    },

    #[error("inadmissible history at index {index}: {from:?} cannot be followed by {to:?}")]
    InadmissibleHistory {
        index: usize,
        from: GameState,
        to: GameState,
    },

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("cannot parse strategy token `{token}`: {reason}; grammar: {grammar}")]
    StrategyParse {
        token: String,
        reason: String,
        grammar: &'static str,
    },

    #[error("no closed form for profile ({0}, {1}); use the solver instead")]
    UnsupportedProfile(String, String),

    #[error("deviation parameter out of range: {0}")]
    DeviationRange(String),

    #[error("truncated evaluation reached the horizon cap {horizon} with tail bound {achieved:e} above tolerance {tolerance:e}")]
    ToleranceUnachievable {
        horizon: u64,
        achieved: f64,
        tolerance: f64,
    },

    #[error("linear system is singular")]
    SingularSystem,

    #[error("inconsistency: {0}")]
    Inconsistency(String),
}

pub type Result<T, E = DuelError> = std::result::Result<T, E>;
