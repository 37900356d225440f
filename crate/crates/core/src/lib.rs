//! Discounted static duel: two players, each may shoot once per round with a
//! fixed hit probability, and the survivor collects a lump payoff.
//!
//! The crate is generic over the scalar type. `f64` drives sweeps and
//! simulation; [`Rational`] gives exact identities and sign checks.

pub mod checks;
pub mod closed_form;
pub mod equilibrium;
pub mod error;
pub mod evaluator;
pub mod game;
pub mod linalg;
pub mod mc;
pub mod scalar;
pub mod strategy;

pub use closed_form::{DeviationClass, PayoffPair};
pub use error::{DuelError, Result};
pub use game::{Action, ActionPair, GameParams, GameState, Player};
pub use scalar::Scalar;
pub use strategy::{Automaton, DeviationPlan, StrategyAutomaton, StrategyKind, StrategySpec};

pub type Rational = num_rational::BigRational;

pub type Params = GameParams<f64>;
pub type ExactParams = GameParams<Rational>;

pub type Spec = StrategySpec<f64>;
pub type ExactSpec = StrategySpec<Rational>;

pub type Payoffs = PayoffPair<f64>;
pub type ExactPayoffs = PayoffPair<Rational>;
