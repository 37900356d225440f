//! The duel itself: states, actions, the transition kernel and stage payoffs.
//!
//! Rounds are numbered from 1; the state at time 0 is the initial state and
//! pays its stage payoff like every later state. A player who kills the
//! opponent receives the lump `1/(1-γ)` once, which stands for surviving alone
//! forever; the game then moves to the absorbing terminal state.

use serde::{Deserialize, Serialize};

use crate::error::{DuelError, Result};
use crate::scalar::{self, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Player::One => 1,
            Player::Two => 2,
        }
    }

    pub fn from_index(index: u8) -> Option<Player> {
        match index {
            1 => Some(Player::One),
            2 => Some(Player::Two),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Hold,
    Shoot,
}

impl Action {
    pub fn from_bit(bit: u8) -> Action {
        if bit == 0 {
            Action::Hold
        } else {
            Action::Shoot
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Action::Hold => 0,
            Action::Shoot => 1,
        }
    }

    pub fn flipped(self) -> Action {
        match self {
            Action::Hold => Action::Shoot,
            Action::Shoot => Action::Hold,
        }
    }

    pub fn is_shoot(self) -> bool {
        self == Action::Shoot
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionPair {
    pub f1: Action,
    pub f2: Action,
}

impl ActionPair {
    pub const HOLD: ActionPair = ActionPair {
        f1: Action::Hold,
        f2: Action::Hold,
    };

    pub fn new(f1: Action, f2: Action) -> Self {
        ActionPair { f1, f2 }
    }

    pub fn of(&self, player: Player) -> Action {
        match player {
            Player::One => self.f1,
            Player::Two => self.f2,
        }
    }

    pub fn swapped(&self) -> ActionPair {
        ActionPair {
            f1: self.f2,
            f2: self.f1,
        }
    }
}

/// `(s1, s2)` with 1 = alive, 0 = died this round, τ = game already over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GameState {
    Alive11,
    Dead10,
    Dead01,
    Dead00,
    Terminal,
}

impl GameState {
    pub const ALL: [GameState; 5] = [
        GameState::Alive11,
        GameState::Dead10,
        GameState::Dead01,
        GameState::Dead00,
        GameState::Terminal,
    ];

    pub fn is_alive(self, player: Player) -> bool {
        matches!(
            (self, player),
            (GameState::Alive11, _) | (GameState::Dead10, Player::One) | (GameState::Dead01, Player::Two)
        )
    }

    /// Relabels the state as seen with the players' indices exchanged.
    pub fn swapped(self) -> GameState {
        match self {
            GameState::Dead10 => GameState::Dead01,
            GameState::Dead01 => GameState::Dead10,
            s => s,
        }
    }

    /// Whether `next` has positive probability after `self` for some legal
    /// action pair and some parameters.
    pub fn can_precede(self, next: GameState) -> bool {
        match self {
            GameState::Alive11 => next != GameState::Terminal,
            _ => next == GameState::Terminal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameParams<T> {
    gamma: T,
    p1: T,
    p2: T,
}

impl<T: Scalar> GameParams<T> {
    /// Requires `0 < gamma < 1` and hit probabilities strictly inside (0, 1).
    pub fn new(gamma: T, p1: T, p2: T) -> Result<Self> {
        check_open_unit("gamma", &gamma)?;
        check_open_unit("p1", &p1)?;
        check_open_unit("p2", &p2)?;
        Ok(GameParams { gamma, p1, p2 })
    }

    pub fn gamma(&self) -> &T {
        &self.gamma
    }

    pub fn p1(&self) -> &T {
        &self.p1
    }

    pub fn p2(&self) -> &T {
        &self.p2
    }

    pub fn hit(&self, player: Player) -> &T {
        match player {
            Player::One => &self.p1,
            Player::Two => &self.p2,
        }
    }

    /// Same game with the players' roles exchanged.
    pub fn swapped(&self) -> Self {
        GameParams {
            gamma: self.gamma.clone(),
            p1: self.p2.clone(),
            p2: self.p1.clone(),
        }
    }

    /// Parameters as seen by `player` (their own hit probability first).
    pub fn for_player(&self, player: Player) -> Self {
        match player {
            Player::One => self.clone(),
            Player::Two => self.swapped(),
        }
    }

    /// Probability that both players miss when both shoot.
    pub fn joint_miss(&self) -> T {
        (T::one() - self.p1.clone()) * (T::one() - self.p2.clone())
    }

    /// `1 / (1 - γ)`, the value of surviving alone from now on.
    pub fn survivor_lump(&self) -> T {
        T::one() / (T::one() - self.gamma.clone())
    }

    pub fn to_f64(&self) -> GameParams<f64> {
        GameParams {
            gamma: scalar::to_f64(&self.gamma),
            p1: scalar::to_f64(&self.p1),
            p2: scalar::to_f64(&self.p2),
        }
    }

    pub fn convert<U: Scalar>(&self) -> Option<GameParams<U>> {
        Some(GameParams {
            gamma: U::from_f64(scalar::to_f64(&self.gamma))?,
            p1: U::from_f64(scalar::to_f64(&self.p1))?,
            p2: U::from_f64(scalar::to_f64(&self.p2))?,
        })
    }
}

fn check_open_unit<T: Scalar>(name: &'static str, value: &T) -> Result<()> {
    if *value > T::zero() && *value < T::one() {
        Ok(())
    } else {
        Err(DuelError::InvalidParameter {
            name,
            value: value.to_string(),
            reason: "must lie strictly between 0 and 1",
        })
    }
}

/// Finite distribution over next states. Entries with zero probability are
/// omitted; order follows [`GameState::ALL`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution<T>(Vec<(GameState, T)>);

impl<T: Scalar> StateDistribution<T> {
    fn from_entries(entries: Vec<(GameState, T)>) -> Self {
        let mut entries: Vec<_> = entries.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        entries.sort_by_key(|(s, _)| *s);
        StateDistribution(entries)
    }

    pub fn certain(state: GameState) -> Self {
        StateDistribution(vec![(state, T::one())])
    }

    pub fn entries(&self) -> &[(GameState, T)] {
        &self.0
    }

    pub fn prob(&self, state: GameState) -> T {
        self.0
            .iter()
            .find(|(s, _)| *s == state)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(T::zero)
    }

    pub fn total(&self) -> T {
        self.0.iter().fold(T::zero(), |acc, (_, p)| acc + p.clone())
    }
}

/// Actions available to `player` in `state`. Only a player facing a live
/// opponent may shoot.
pub fn legal_actions(state: GameState, player: Player) -> &'static [Action] {
    match state {
        GameState::Alive11 => {
            let _ = player;
            &[Action::Hold, Action::Shoot]
        }
        _ => &[Action::Hold],
    }
}

pub fn is_legal(state: GameState, actions: ActionPair) -> bool {
    legal_actions(state, Player::One).contains(&actions.f1)
        && legal_actions(state, Player::Two).contains(&actions.f2)
}

pub fn transition<T: Scalar>(
    state: GameState,
    actions: ActionPair,
    params: &GameParams<T>,
) -> Result<StateDistribution<T>> {
    if !is_legal(state, actions) {
        return Err(DuelError::IllegalAction { state, actions });
    }
    if state != GameState::Alive11 {
        return Ok(StateDistribution::certain(GameState::Terminal));
    }
    let kill1 = if actions.f1.is_shoot() {
        params.p1.clone()
    } else {
        T::zero()
    };
    let kill2 = if actions.f2.is_shoot() {
        params.p2.clone()
    } else {
        T::zero()
    };
    let live1 = T::one() - kill2.clone();
    let live2 = T::one() - kill1.clone();
    Ok(StateDistribution::from_entries(vec![
        (GameState::Alive11, live1.clone() * live2.clone()),
        (GameState::Dead10, live1 * kill1.clone()),
        (GameState::Dead01, kill2.clone() * live2),
        (GameState::Dead00, kill1 * kill2),
    ]))
}

/// Stage payoff `q_n(s)`.
pub fn stage_payoff<T: Scalar>(state: GameState, player: Player, params: &GameParams<T>) -> T {
    match (state, player) {
        (GameState::Alive11, _) => T::one(),
        (GameState::Dead10, Player::One) | (GameState::Dead01, Player::Two) => {
            params.survivor_lump()
        }
        _ => T::zero(),
    }
}

/// Checks that consecutive states can follow each other under the rules.
pub fn validate_history(history: &[GameState]) -> Result<()> {
    for (index, pair) in history.windows(2).enumerate() {
        if !pair[0].can_precede(pair[1]) {
            return Err(DuelError::InadmissibleHistory {
                index: index + 1,
                from: pair[0],
                to: pair[1],
            });
        }
    }
    Ok(())
}

/// `Σ_t γ^t q_n(s(t))` over a finite admissible prefix starting at t = 0.
/// Exact when the prefix ends in a dead or terminal state; a prefix still in
/// `Alive11` leaves the continuation to the caller (see [`alive_tail`]).
pub fn discounted_history_payoff<T: Scalar>(
    history: &[GameState],
    params: &GameParams<T>,
) -> Result<(T, T)> {
    validate_history(history)?;
    let mut discount = T::one();
    let mut q1 = T::zero();
    let mut q2 = T::zero();
    for state in history {
        q1 = q1 + discount.clone() * stage_payoff(*state, Player::One, params);
        q2 = q2 + discount.clone() * stage_payoff(*state, Player::Two, params);
        discount = discount * params.gamma.clone();
    }
    Ok((q1, q2))
}

/// Payoff of staying in `Alive11` forever from time `from` on:
/// `γ^from / (1 - γ)`.
pub fn alive_tail<T: Scalar>(from: u32, params: &GameParams<T>) -> T {
    scalar::powu(&params.gamma, from) * params.survivor_lump()
}

/// A history built step by step; each step is checked for legality and
/// positive probability at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    states: Vec<GameState>,
    actions: Vec<ActionPair>,
}

impl History {
    pub fn new(initial: GameState) -> Self {
        History {
            states: vec![initial],
            actions: Vec::new(),
        }
    }

    pub fn push(&mut self, actions: ActionPair, next: GameState) -> Result<()> {
        let current = *self.states.last().expect("history is never empty");
        if !is_legal(current, actions) {
            return Err(DuelError::IllegalAction {
                state: current,
                actions,
            });
        }
        if !reachable(current, actions, next) {
            return Err(DuelError::InadmissibleHistory {
                index: self.states.len(),
                from: current,
                to: next,
            });
        }
        self.states.push(next);
        self.actions.push(actions);
        Ok(())
    }

    pub fn states(&self) -> &[GameState] {
        &self.states
    }

    pub fn actions(&self) -> &[ActionPair] {
        &self.actions
    }

    pub fn current(&self) -> GameState {
        *self.states.last().expect("history is never empty")
    }
}

fn reachable(state: GameState, actions: ActionPair, next: GameState) -> bool {
    if state != GameState::Alive11 {
        return next == GameState::Terminal;
    }
    let (s1, s2) = match next {
        GameState::Alive11 => (true, true),
        GameState::Dead10 => (true, false),
        GameState::Dead01 => (false, true),
        GameState::Dead00 => (false, false),
        GameState::Terminal => return false,
    };
    // A player can only die if the opponent fired.
    (s1 || actions.f2.is_shoot()) && (s2 || actions.f1.is_shoot())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn params(gamma: f64, p1: f64, p2: f64) -> GameParams<f64> {
        GameParams::new(gamma, p1, p2).unwrap()
    }

    fn shoot(f1: u8, f2: u8) -> ActionPair {
        ActionPair::new(Action::from_bit(f1), Action::from_bit(f2))
    }

    #[test]
    fn legal_actions_follow_rules() {
        assert_eq!(legal_actions(GameState::Alive11, Player::One), &[Action::Hold, Action::Shoot]);
        assert_eq!(legal_actions(GameState::Terminal, Player::Two), &[Action::Hold]);
        assert_eq!(legal_actions(GameState::Dead01, Player::One), &[Action::Hold]);
        // The survivor has nobody left to shoot.
        assert_eq!(legal_actions(GameState::Dead10, Player::One), &[Action::Hold]);
    }

    #[test]
    fn params_are_validated() {
        assert!(GameParams::new(1.0, 0.5, 0.5).is_err());
        assert!(GameParams::new(0.5, 0.0, 0.5).is_err());
        assert!(GameParams::new(0.5, 0.5, 1.0).is_err());
        assert!(GameParams::new(0.5, 0.5, 0.5).is_ok());
    }

    #[test]
    fn transition_examples() {
        let p = params(0.5, 0.5, 0.5);
        let d = transition(GameState::Alive11, ActionPair::HOLD, &p).unwrap();
        assert_eq!(d.entries(), &[(GameState::Alive11, 1.0)]);

        let p = params(0.5, 0.4, 0.7);
        let d = transition(GameState::Alive11, shoot(1, 0), &p).unwrap();
        assert_eq!(d.prob(GameState::Dead10), 0.4);
        assert_eq!(d.prob(GameState::Alive11), 0.6);
        assert_eq!(d.entries().len(), 2);

        let p = params(0.5, 0.5, 0.5);
        let d = transition(GameState::Alive11, shoot(1, 1), &p).unwrap();
        for s in [GameState::Alive11, GameState::Dead01, GameState::Dead10, GameState::Dead00] {
            assert_eq!(d.prob(s), 0.25);
        }

        let d = transition(GameState::Dead10, ActionPair::HOLD, &p).unwrap();
        assert_eq!(d.entries(), &[(GameState::Terminal, 1.0)]);
    }

    #[test]
    fn illegal_action_is_rejected() {
        let p = params(0.5, 0.5, 0.5);
        let err = transition(GameState::Dead01, shoot(1, 0), &p).unwrap_err();
        assert!(matches!(err, DuelError::IllegalAction { .. }));
        assert!(transition(GameState::Terminal, shoot(0, 1), &p).is_err());
    }

    #[test]
    fn stage_payoff_table() {
        let p = params(0.5, 0.3, 0.6);
        assert_eq!(stage_payoff(GameState::Alive11, Player::One, &p), 1.0);
        assert_eq!(stage_payoff(GameState::Dead01, Player::One, &p), 0.0);
        assert_eq!(stage_payoff(GameState::Dead10, Player::One, &p), 2.0);
        assert_eq!(stage_payoff(GameState::Dead01, Player::Two, &p), 2.0);
        assert_eq!(stage_payoff(GameState::Dead00, Player::Two, &p), 0.0);
        assert_eq!(stage_payoff(GameState::Terminal, Player::One, &p), 0.0);
    }

    #[test]
    fn history_payoff_examples() {
        let p = params(0.5, 0.5, 0.5);
        let h = [GameState::Alive11, GameState::Dead10, GameState::Terminal, GameState::Terminal];
        assert_eq!(discounted_history_payoff(&h, &p).unwrap(), (2.0, 1.0));

        let h = [GameState::Alive11, GameState::Dead00, GameState::Terminal];
        assert_eq!(discounted_history_payoff(&h, &p).unwrap(), (1.0, 1.0));

        let prefix = vec![GameState::Alive11; 20];
        let (q1, q2) = discounted_history_payoff(&prefix, &p).unwrap();
        let tail = alive_tail(20, &p);
        assert_eq!(q1 + tail, 2.0);
        assert_eq!(q2 + tail, 2.0);
    }

    #[test]
    fn inadmissible_history_is_rejected() {
        let p = params(0.5, 0.5, 0.5);
        let h = [GameState::Alive11, GameState::Dead10, GameState::Alive11];
        assert!(matches!(
            discounted_history_payoff(&h, &p),
            Err(DuelError::InadmissibleHistory { index: 2, .. })
        ));
        let h = [GameState::Alive11, GameState::Terminal];
        assert!(discounted_history_payoff(&h, &p).is_err());
    }

    #[test]
    fn history_builder_rejects_dead_shooters_and_impossible_deaths() {
        let mut h = History::new(GameState::Alive11);
        // Nobody shot, so nobody can die.
        assert!(h.push(ActionPair::HOLD, GameState::Dead10).is_err());
        h.push(shoot(1, 0), GameState::Dead10).unwrap();
        assert!(h.push(shoot(1, 0), GameState::Terminal).is_err());
        h.push(ActionPair::HOLD, GameState::Terminal).unwrap();
        assert_eq!(h.states().len(), 3);
        assert_eq!(h.current(), GameState::Terminal);
    }

    #[test]
    fn exact_rational_history_payoff() {
        let half = BigRational::new(1.into(), 2.into());
        let p = GameParams::new(half.clone(), half.clone(), half).unwrap();
        let h = [GameState::Alive11, GameState::Dead10, GameState::Terminal];
        let (q1, q2) = discounted_history_payoff(&h, &p).unwrap();
        assert_eq!(q1, BigRational::from_integer(2.into()));
        assert_eq!(q2, BigRational::from_integer(1.into()));
    }

    fn unit() -> impl Strategy<Value = f64> {
        0.01f64..0.99
    }

    proptest! {
        #[test]
        fn transitions_sum_to_one(g in unit(), p1 in unit(), p2 in unit(), f1 in 0u8..2, f2 in 0u8..2) {
            let p = params(g, p1, p2);
            for state in GameState::ALL {
                let actions = shoot(f1, f2);
                match transition(state, actions, &p) {
                    Ok(d) => prop_assert!((d.total() - 1.0).abs() < 1e-12),
                    Err(_) => prop_assert!(state != GameState::Alive11),
                }
            }
            let d = transition(GameState::Terminal, ActionPair::HOLD, &p).unwrap();
            prop_assert_eq!(d.entries(), &[(GameState::Terminal, 1.0)]);
        }

        #[test]
        fn player_swap_symmetry(g in unit(), p1 in unit(), p2 in unit(), f1 in 0u8..2, f2 in 0u8..2) {
            let p = params(g, p1, p2);
            let q = p.swapped();
            let a = shoot(f1, f2);
            let d = transition(GameState::Alive11, a, &p).unwrap();
            let e = transition(GameState::Alive11, a.swapped(), &q).unwrap();
            for s in GameState::ALL {
                prop_assert_eq!(d.prob(s), e.prob(s.swapped()));
                prop_assert_eq!(stage_payoff(s, Player::One, &p), stage_payoff(s.swapped(), Player::Two, &q));
            }
        }

        #[test]
        fn survivor_payoff_equals_surviving_forever(g in unit(), t_kill in 1usize..60) {
            let p = params(g, 0.5, 0.5);
            let mut h = vec![GameState::Alive11; t_kill];
            h.push(GameState::Dead10);
            h.push(GameState::Terminal);
            let (q1, _) = discounted_history_payoff(&h, &p).unwrap();
            let direct: f64 = (0..t_kill).map(|t| g.powi(t as i32)).sum::<f64>()
                + g.powi(t_kill as i32) / (1.0 - g);
            prop_assert!((q1 - direct).abs() < 1e-9 * direct);
            prop_assert!((q1 - 1.0 / (1.0 - g)).abs() < 1e-9 / (1.0 - g));
        }
    }
}
