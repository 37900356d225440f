//! Strategy families and their finite automata.
//!
//! A [`StrategySpec`] is the declarative form (`C`, `D`, `x:0.3`, `DC:4`,
//! `CD:4`, `P:3`, optionally `grim-` wrapped). [`StrategyAutomaton`] is the
//! executable form: a clock plus a trigger flag. Once triggered, a grim
//! automaton shoots with probability one forever.

use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use crate::error::{DuelError, Result};
use crate::game::Action;
use crate::scalar::{self, Scalar};

/// Upper bound for K and M. Keeps automata small and powers of γ finite.
pub const MAX_SCHEDULE_PARAM: u32 = 10_000;

pub const SPEC_GRAMMAR: &str =
    "C | D | x:<prob in [0,1]> | DC:<K> | CD:<K> | P:<M>, optionally prefixed by `grim-`";

#[derive(Debug, Clone, PartialEq)]
pub enum StrategyKind<T> {
    /// Shoot with probability `x` every round.
    Stationary(T),
    Cooperate,
    Defect,
    /// Shoot in rounds `1..=K` only.
    EarlyShoot(u32),
    /// Shoot from round `K` on.
    LateShoot(u32),
    /// Shoot in rounds that are multiples of `M + 1`.
    Periodic(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec<T = f64> {
    kind: StrategyKind<T>,
    grim: bool,
}

impl<T: Scalar> StrategySpec<T> {
    pub fn new(kind: StrategyKind<T>, grim: bool) -> Result<Self> {
        match &kind {
            StrategyKind::Stationary(x) => {
                if *x < T::zero() || *x > T::one() {
                    return Err(DuelError::InvalidStrategy(format!(
                        "stationary shoot probability {x} outside [0, 1]"
                    )));
                }
                if grim && !(x.is_zero() || x.is_one()) {
                    return Err(DuelError::InvalidStrategy(format!(
                        "grim wrapping needs a deterministic base; x = {x} is randomized"
                    )));
                }
            }
            StrategyKind::LateShoot(0) => {
                return Err(DuelError::InvalidStrategy(
                    "CD:K needs K >= 1 (CD:1 already shoots every round)".into(),
                ))
            }
            StrategyKind::EarlyShoot(k) | StrategyKind::LateShoot(k) | StrategyKind::Periodic(k)
                if *k > MAX_SCHEDULE_PARAM =>
            {
                return Err(DuelError::InvalidStrategy(format!(
                    "schedule parameter {k} exceeds {MAX_SCHEDULE_PARAM}"
                )))
            }
            _ => {}
        }
        Ok(StrategySpec { kind, grim })
    }

    pub fn cooperate() -> Self {
        StrategySpec {
            kind: StrategyKind::Cooperate,
            grim: false,
        }
    }

    pub fn defect() -> Self {
        StrategySpec {
            kind: StrategyKind::Defect,
            grim: false,
        }
    }

    pub fn stationary(x: T) -> Result<Self> {
        Self::new(StrategyKind::Stationary(x), false)
    }

    pub fn early_shoot(k: u32) -> Result<Self> {
        Self::new(StrategyKind::EarlyShoot(k), false)
    }

    pub fn late_shoot(k: u32) -> Result<Self> {
        Self::new(StrategyKind::LateShoot(k), false)
    }

    pub fn periodic(m: u32) -> Result<Self> {
        Self::new(StrategyKind::Periodic(m), false)
    }

    /// Grim-wrapped copy; fails for randomized stationary bases.
    pub fn grim(&self) -> Result<Self> {
        Self::new(self.kind.clone(), true)
    }

    pub fn base(&self) -> Self {
        StrategySpec {
            kind: self.kind.clone(),
            grim: false,
        }
    }

    pub fn kind(&self) -> &StrategyKind<T> {
        &self.kind
    }

    pub fn is_grim(&self) -> bool {
        self.grim
    }

    /// True when every round's action is fixed in advance.
    pub fn is_deterministic(&self) -> bool {
        match &self.kind {
            StrategyKind::Stationary(x) => x.is_zero() || x.is_one(),
            _ => true,
        }
    }

    /// Shoot probability of the base schedule in round `t` (1-indexed).
    pub fn emission(&self, t: u32) -> T {
        match &self.kind {
            StrategyKind::Stationary(x) => x.clone(),
            StrategyKind::Cooperate => T::zero(),
            StrategyKind::Defect => T::one(),
            StrategyKind::EarlyShoot(k) => bit(t <= *k),
            StrategyKind::LateShoot(k) => bit(t >= *k),
            StrategyKind::Periodic(m) => bit(t.is_multiple_of(m + 1)),
        }
    }

    /// Deterministic action of the base schedule in round `t`, if any.
    pub fn prescribed(&self, t: u32) -> Option<Action> {
        as_action(&self.emission(t))
    }

    pub fn compile(&self) -> StrategyAutomaton<T> {
        StrategyAutomaton::new(self.clone())
    }

    pub fn convert<U: Scalar>(&self) -> Option<StrategySpec<U>> {
        let kind = match &self.kind {
            StrategyKind::Stationary(x) => {
                StrategyKind::Stationary(scalar::from_f64(scalar::to_f64(x))?)
            }
            StrategyKind::Cooperate => StrategyKind::Cooperate,
            StrategyKind::Defect => StrategyKind::Defect,
            StrategyKind::EarlyShoot(k) => StrategyKind::EarlyShoot(*k),
            StrategyKind::LateShoot(k) => StrategyKind::LateShoot(*k),
            StrategyKind::Periodic(m) => StrategyKind::Periodic(*m),
        };
        Some(StrategySpec {
            kind,
            grim: self.grim,
        })
    }
}

fn bit<T: Scalar>(on: bool) -> T {
    if on {
        T::one()
    } else {
        T::zero()
    }
}

fn as_action<T: Scalar>(p: &T) -> Option<Action> {
    if p.is_zero() {
        Some(Action::Hold)
    } else if p.is_one() {
        Some(Action::Shoot)
    } else {
        None
    }
}

impl<T: Scalar> fmt::Display for StrategySpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.grim {
            f.write_str("grim-")?;
        }
        match &self.kind {
            StrategyKind::Stationary(x) => write!(f, "x:{x}"),
            StrategyKind::Cooperate => f.write_str("C"),
            StrategyKind::Defect => f.write_str("D"),
            StrategyKind::EarlyShoot(k) => write!(f, "DC:{k}"),
            StrategyKind::LateShoot(k) => write!(f, "CD:{k}"),
            StrategyKind::Periodic(m) => write!(f, "P:{m}"),
        }
    }
}

impl<T: Scalar> FromStr for StrategySpec<T> {
    type Err = DuelError;

    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim();
        let fail = |reason: &str| DuelError::StrategyParse {
            token: token.to_string(),
            reason: reason.to_string(),
            grammar: SPEC_GRAMMAR,
        };
        let (grim, body) = match token.strip_prefix("grim-") {
            Some(rest) => (true, rest),
            None => (false, token),
        };
        let schedule = |arg: &str| -> Result<u32> {
            arg.parse::<u32>()
                .map_err(|_| fail("schedule parameter must be a non-negative integer"))
        };
        let kind = match body.split_once(':') {
            None => match body {
                "C" => StrategyKind::Cooperate,
                "D" => StrategyKind::Defect,
                _ => return Err(fail("unknown strategy family")),
            },
            Some(("x", arg)) => StrategyKind::Stationary(
                scalar::parse_scalar(arg).ok_or_else(|| fail("probability is not a number"))?,
            ),
            Some(("DC", arg)) => StrategyKind::EarlyShoot(schedule(arg)?),
            Some(("CD", arg)) => StrategyKind::LateShoot(schedule(arg)?),
            Some(("P", arg)) => StrategyKind::Periodic(schedule(arg)?),
            Some(_) => return Err(fail("unknown strategy family")),
        };
        StrategySpec::new(kind, grim).map_err(|e| fail(&e.to_string()))
    }
}

/// Parses `spec,spec` into a profile.
pub fn parse_profile<T: Scalar>(text: &str) -> Result<(StrategySpec<T>, StrategySpec<T>)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(DuelError::StrategyParse {
            token: text.to_string(),
            reason: "a profile is two specs separated by a comma".into(),
            grammar: SPEC_GRAMMAR,
        });
    }
    Ok((parts[0].parse()?, parts[1].parse()?))
}

/// Anything the evaluator can run: a finite-memory strategy emitting a shoot
/// probability each round.
pub trait Automaton<T: Scalar> {
    type Memory: Clone + Eq + Hash + fmt::Debug;

    fn initial(&self) -> Self::Memory;

    /// Shoot probability for the coming round.
    fn emit(&self, memory: &Self::Memory) -> T;

    fn advance(&self, memory: &Self::Memory, own: Action, opponent: Action) -> Self::Memory;

    /// `Some(x)` when the automaton shoots with probability `x` forever,
    /// whatever it observes.
    fn settled(&self, _memory: &Self::Memory) -> Option<T> {
        None
    }

    /// True when the automaton will never shoot again as long as the opponent
    /// never shoots.
    fn quiescent(&self, _memory: &Self::Memory) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Memory {
    /// Completed rounds, saturated or wrapped per schedule.
    pub clock: u32,
    pub triggered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyAutomaton<T = f64> {
    spec: StrategySpec<T>,
}

impl<T: Scalar> StrategyAutomaton<T> {
    pub fn new(spec: StrategySpec<T>) -> Self {
        StrategyAutomaton { spec }
    }

    pub fn spec(&self) -> &StrategySpec<T> {
        &self.spec
    }

    fn next_clock(&self, clock: u32) -> u32 {
        match self.spec.kind {
            StrategyKind::EarlyShoot(k) => (clock + 1).min(k),
            StrategyKind::LateShoot(k) => (clock + 1).min(k - 1),
            StrategyKind::Periodic(m) => (clock + 1) % (m + 1),
            _ => 0,
        }
    }

    /// Shoot probability of the untriggered schedule at this memory state.
    pub fn base_emission(&self, memory: &Memory) -> T {
        match &self.spec.kind {
            StrategyKind::Stationary(x) => x.clone(),
            StrategyKind::Cooperate => T::zero(),
            StrategyKind::Defect => T::one(),
            StrategyKind::EarlyShoot(k) => bit(memory.clock < *k),
            StrategyKind::LateShoot(k) => bit(memory.clock + 1 >= *k),
            StrategyKind::Periodic(m) => bit(memory.clock == *m),
        }
    }

    /// Action the base schedule prescribes at this memory state, if
    /// deterministic. Grim automata judge the opponent against it.
    pub fn prescribed(&self, memory: &Memory) -> Option<Action> {
        as_action(&self.base_emission(memory))
    }

    /// Number of distinct clock values.
    pub fn clock_states(&self) -> u32 {
        match self.spec.kind {
            StrategyKind::EarlyShoot(k) => k + 1,
            StrategyKind::LateShoot(k) => k,
            StrategyKind::Periodic(m) => m + 1,
            _ => 1,
        }
    }

    pub fn state_count(&self) -> u32 {
        self.clock_states() * if self.spec.grim { 2 } else { 1 }
    }

    /// Emissions for rounds `1..=rounds` when the opponent plays
    /// `opponent(t)` and this automaton plays its own prescription.
    pub fn emissions_against(&self, rounds: u32, opponent: impl Fn(u32) -> Action) -> Vec<T> {
        let mut memory = self.initial();
        let mut out = Vec::with_capacity(rounds as usize);
        for t in 1..=rounds {
            let e = self.emit(&memory);
            let own = as_action(&e).unwrap_or(Action::Hold);
            out.push(e);
            memory = self.advance(&memory, own, opponent(t));
        }
        out
    }
}

impl<T: Scalar> Automaton<T> for StrategyAutomaton<T> {
    type Memory = Memory;

    fn initial(&self) -> Memory {
        Memory {
            clock: 0,
            triggered: false,
        }
    }

    fn emit(&self, memory: &Memory) -> T {
        if memory.triggered {
            T::one()
        } else {
            self.base_emission(memory)
        }
    }

    fn advance(&self, memory: &Memory, _own: Action, opponent: Action) -> Memory {
        let deviated = self.spec.grim && self.prescribed(memory) != Some(opponent);
        Memory {
            clock: self.next_clock(memory.clock),
            triggered: memory.triggered || deviated,
        }
    }

    fn settled(&self, memory: &Memory) -> Option<T> {
        if memory.triggered {
            return Some(T::one());
        }
        let fixed = match self.spec.kind {
            StrategyKind::Stationary(_) | StrategyKind::Cooperate | StrategyKind::Defect => true,
            StrategyKind::EarlyShoot(k) => memory.clock >= k,
            StrategyKind::LateShoot(k) => memory.clock + 1 >= k,
            StrategyKind::Periodic(_) => false,
        };
        if !fixed {
            return None;
        }
        let e = self.base_emission(memory);
        // A grim automaton that holds can still be provoked.
        if self.spec.grim && e.is_zero() {
            return None;
        }
        Some(e)
    }

    fn quiescent(&self, memory: &Memory) -> bool {
        if memory.triggered {
            return false;
        }
        match &self.spec.kind {
            StrategyKind::Cooperate => true,
            StrategyKind::Stationary(x) => x.is_zero(),
            StrategyKind::EarlyShoot(k) => memory.clock >= *k,
            _ => false,
        }
    }
}

/// What a deviator does once it has broken from its own schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviationPlan {
    /// Play the given action in every round.
    Always(Action),
    /// Follow the base schedule before round `onset`, play the opposite of
    /// the prescription in round `onset`, then play `after` forever.
    Onset { onset: u32, after: Action },
}

impl fmt::Display for DeviationPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviationPlan::Always(Action::Shoot) => f.write_str("always shoot"),
            DeviationPlan::Always(Action::Hold) => f.write_str("never shoot"),
            DeviationPlan::Onset { onset, after } => write!(
                f,
                "flip the prescribed action in round {onset}, then {} forever",
                if after.is_shoot() { "shoot" } else { "hold" }
            ),
        }
    }
}

/// A strategy that follows `base` and then deviates according to `plan`.
#[derive(Debug, Clone)]
pub struct DeviationAutomaton<T = f64> {
    base: StrategyAutomaton<T>,
    plan: DeviationPlan,
}

impl<T: Scalar> DeviationAutomaton<T> {
    /// Fails when an onset plan is built on a randomized base (there is no
    /// prescribed action to flip).
    pub fn new(base: &StrategySpec<T>, plan: DeviationPlan) -> Result<Self> {
        if let DeviationPlan::Onset { onset, .. } = plan {
            if onset == 0 {
                return Err(DuelError::DeviationRange("onset round must be >= 1".into()));
            }
            if !base.is_deterministic() {
                return Err(DuelError::DeviationRange(
                    "onset deviations need a deterministic base schedule".into(),
                ));
            }
        }
        Ok(DeviationAutomaton {
            base: base.compile(),
            plan,
        })
    }

    pub fn plan(&self) -> DeviationPlan {
        self.plan
    }
}

/// Base memory plus completed rounds (saturating one past the onset).
pub type DeviationMemory = (Memory, u32);

impl<T: Scalar> Automaton<T> for DeviationAutomaton<T> {
    type Memory = DeviationMemory;

    fn initial(&self) -> DeviationMemory {
        (self.base.initial(), 0)
    }

    fn emit(&self, memory: &DeviationMemory) -> T {
        match self.plan {
            DeviationPlan::Always(action) => bit(action.is_shoot()),
            DeviationPlan::Onset { onset, after } => {
                let round = memory.1 + 1;
                if round < onset {
                    self.base.emit(&memory.0)
                } else if round == onset {
                    let prescribed = self
                        .base
                        .emit(&memory.0);
                    T::one() - prescribed
                } else {
                    bit(after.is_shoot())
                }
            }
        }
    }

    fn advance(&self, memory: &DeviationMemory, own: Action, opponent: Action) -> DeviationMemory {
        match self.plan {
            DeviationPlan::Always(_) => *memory,
            DeviationPlan::Onset { onset, .. } => {
                if memory.1 >= onset {
                    *memory
                } else {
                    (self.base.advance(&memory.0, own, opponent), memory.1 + 1)
                }
            }
        }
    }

    fn settled(&self, memory: &DeviationMemory) -> Option<T> {
        match self.plan {
            DeviationPlan::Always(action) => Some(bit(action.is_shoot())),
            DeviationPlan::Onset { onset, after } if memory.1 >= onset => {
                Some(bit(after.is_shoot()))
            }
            _ => None,
        }
    }

    fn quiescent(&self, memory: &DeviationMemory) -> bool {
        self.settled(memory).is_some_and(|x| x.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> StrategySpec<f64> {
        s.parse().unwrap()
    }

    fn on_path(s: &str, rounds: u32) -> Vec<f64> {
        let sp = spec(s);
        let base = sp.base();
        sp.compile()
            .emissions_against(rounds, |t| base.prescribed(t).unwrap_or(Action::Hold))
    }

    #[test]
    fn schedules_match_definitions() {
        assert_eq!(on_path("DC:2", 4), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(on_path("P:2", 6), vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert_eq!(on_path("x:0.3", 5), vec![0.3; 5]);
        assert_eq!(on_path("CD:3", 5), vec![0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(on_path("C", 3), vec![0.0; 3]);
        assert_eq!(on_path("D", 3), vec![1.0; 3]);
    }

    #[test]
    fn degenerate_parameters() {
        assert_eq!(on_path("DC:0", 6), on_path("C", 6));
        assert_eq!(on_path("CD:1", 6), on_path("D", 6));
        assert_eq!(on_path("P:0", 6), on_path("D", 6));
        assert!("CD:0".parse::<StrategySpec>().is_err());
    }

    #[test]
    fn grim_cooperate_punishes_from_next_round() {
        let a = spec("grim-C").compile();
        let e = a.emissions_against(6, |t| Action::from_bit((t == 3) as u8));
        assert_eq!(e, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let e = a.emissions_against(6, |_| Action::Hold);
        assert_eq!(e, vec![0.0; 6]);
    }

    #[test]
    fn grim_periodic_triggers_on_early_shot() {
        let a = spec("grim-P:2").compile();
        let e = a.emissions_against(6, |t| Action::from_bit((t == 1) as u8));
        assert_eq!(e, vec![0.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn grim_early_shoot_punishes_a_skipped_shot() {
        let a = spec("grim-DC:3").compile();
        let e = a.emissions_against(6, |t| Action::from_bit((t != 2 && t <= 3) as u8));
        assert_eq!(e, vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn grim_randomized_is_rejected() {
        assert!("grim-x:0.5".parse::<StrategySpec>().is_err());
        assert!("grim-x:0".parse::<StrategySpec>().is_ok());
        assert!(StrategySpec::stationary(1.5).is_err());
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["C", "D", "x:0.3", "DC:4", "CD:4", "P:3", "grim-DC:4", "grim-C", "grim-P:0"] {
            assert_eq!(spec(s).to_string(), s);
        }
        let exact: StrategySpec<num_rational::BigRational> = "x:0.3".parse().unwrap();
        assert_eq!(exact.to_string(), "x:3/10");
    }

    #[test]
    fn parse_errors_echo_token_and_grammar() {
        let err = "DC:-1".parse::<StrategySpec>().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("DC:-1"), "{msg}");
        assert!(msg.contains("grim-"), "{msg}");
        assert!("Q".parse::<StrategySpec>().is_err());
        assert!("x:abc".parse::<StrategySpec>().is_err());
        assert!(parse_profile::<f64>("C").is_err());
        assert!(parse_profile::<f64>("C,D,C").is_err());
        let (a, b) = parse_profile::<f64>("grim-C, D").unwrap();
        assert!(a.is_grim());
        assert_eq!(b, StrategySpec::defect());
    }

    #[test]
    fn finite_state_counts() {
        assert_eq!(spec("P:3").compile().state_count(), 4);
        assert_eq!(spec("grim-DC:5").compile().state_count(), 12);
        assert_eq!(spec("C").compile().state_count(), 1);
    }

    #[test]
    fn onset_deviation_flips_one_round_then_continues() {
        let dev = DeviationAutomaton::new(
            &spec("CD:4"),
            DeviationPlan::Onset {
                onset: 3,
                after: Action::Shoot,
            },
        )
        .unwrap();
        let mut m = dev.initial();
        let mut seen = Vec::new();
        for _ in 0..6 {
            let e: f64 = dev.emit(&m);
            seen.push(e);
            m = dev.advance(&m, Action::from_bit(e as u8), Action::Hold);
        }
        assert_eq!(seen, vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(DeviationAutomaton::new(
            &spec("x:0.5"),
            DeviationPlan::Onset {
                onset: 1,
                after: Action::Shoot
            }
        )
        .is_err());
    }

    #[test]
    fn grim_defect_is_defect() {
        let g = spec("grim-D").compile();
        let d = spec("D").compile();
        for pattern in 0u32..64 {
            let opp = |t: u32| Action::from_bit(((pattern >> (t % 6)) & 1) as u8);
            assert_eq!(g.emissions_against(12, opp), d.emissions_against(12, opp));
        }
    }

    #[test]
    fn settled_and_quiescent_flags() {
        let a = spec("DC:2").compile();
        let m = Memory { clock: 2, triggered: false };
        assert_eq!(a.settled(&m), Some(0.0));
        assert!(a.quiescent(&m));
        let g = spec("grim-DC:2").compile();
        assert_eq!(g.settled(&m), None);
        assert!(g.quiescent(&m));
        let t = Memory { clock: 2, triggered: true };
        assert_eq!(g.settled(&t), Some(1.0));
        assert!(!g.quiescent(&t));
    }
}
