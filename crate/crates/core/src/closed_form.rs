//! Closed-form payoffs and deviation gains, generic over the scalar type.
//!
//! Every function here works in `f64` for sweeps and in `BigRational` for
//! exact identity and sign checks. Normalized payoffs are `(1 - γ)` times the
//! expected discounted total, so cooperation forever is worth exactly 1.

use crate::error::{DuelError, Result};
use crate::game::{GameParams, Player};
use crate::scalar::{self, int, powu, Scalar};
use crate::strategy::{StrategyKind, StrategySpec};

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffPair<T> {
    pub v1: T,
    pub v2: T,
    pub total1: T,
    pub total2: T,
}

impl<T: Scalar> PayoffPair<T> {
    pub fn from_normalized(v1: T, v2: T, gamma: &T) -> Self {
        let scale = T::one() - gamma.clone();
        PayoffPair {
            total1: v1.clone() / scale.clone(),
            total2: v2.clone() / scale,
            v1,
            v2,
        }
    }

    pub fn normalized(&self, player: Player) -> &T {
        match player {
            Player::One => &self.v1,
            Player::Two => &self.v2,
        }
    }

    pub fn total(&self, player: Player) -> &T {
        match player {
            Player::One => &self.total1,
            Player::Two => &self.total2,
        }
    }

    pub fn swapped(&self) -> Self {
        PayoffPair {
            v1: self.v2.clone(),
            v2: self.v1.clone(),
            total1: self.total2.clone(),
            total2: self.total1.clone(),
        }
    }

    pub fn to_f64(&self) -> PayoffPair<f64> {
        PayoffPair {
            v1: scalar::to_f64(&self.v1),
            v2: scalar::to_f64(&self.v2),
            total1: scalar::to_f64(&self.total1),
            total2: scalar::to_f64(&self.total2),
        }
    }
}

/// `1 - γ(1 - p1)(1 - p2)`, the denominator shared by most closed forms.
fn shared_denominator<T: Scalar>(params: &GameParams<T>) -> T {
    T::one() - params.gamma().clone() * params.joint_miss()
}

fn one_minus<T: Scalar>(x: &T) -> T {
    T::one() - x.clone()
}

/// Player 1's normalized payoff when both use stationary strategies.
fn stationary_v1<T: Scalar>(params: &GameParams<T>, x1: &T, x2: &T) -> T {
    let g = params.gamma().clone();
    let a1 = params.p1().clone() * x1.clone();
    let a2 = params.p2().clone() * x2.clone();
    let num = T::one() - g.clone() * (T::one() - a1.clone() * one_minus(&a2));
    let den = T::one() - g * one_minus(&a1) * one_minus(&a2);
    num / den
}

/// Stationary profile: each player shoots with a fixed probability while
/// both are alive.
pub fn v_stationary<T: Scalar>(params: &GameParams<T>, x1: &T, x2: &T) -> PayoffPair<T> {
    let v1 = stationary_v1(params, x1, x2);
    let v2 = stationary_v1(&params.swapped(), x2, x1);
    PayoffPair::from_normalized(v1, v2, params.gamma())
}

fn early_shoot_v1<T: Scalar>(params: &GameParams<T>, k: u32) -> T {
    let g = params.gamma().clone();
    let (p1, p2) = (params.p1().clone(), params.p2().clone());
    let num = T::one() + powu(&g, k + 1) * powu(&params.joint_miss(), k) * p2.clone()
        - g * (T::one() - p1.clone() + p1 * p2);
    num / shared_denominator(params)
}

fn late_shoot_v1<T: Scalar>(params: &GameParams<T>, k: u32) -> T {
    let g = params.gamma().clone();
    let num = T::one() - powu(&g, k) * params.p2().clone() - g * params.joint_miss();
    num / shared_denominator(params)
}

fn periodic_v1<T: Scalar>(params: &GameParams<T>, m: u32) -> T {
    let gm = powu(params.gamma(), m + 1);
    let (p1, p2) = (params.p1().clone(), params.p2().clone());
    let num = T::one() - gm.clone() * (T::one() - p1 * one_minus(&p2));
    let den = T::one() - gm * params.joint_miss();
    num / den
}

fn symmetric<T: Scalar>(params: &GameParams<T>, v1: impl Fn(&GameParams<T>) -> T) -> PayoffPair<T> {
    let a = v1(params);
    let b = v1(&params.swapped());
    PayoffPair::from_normalized(a, b, params.gamma())
}

pub fn v_early_shoot<T: Scalar>(params: &GameParams<T>, k: u32) -> PayoffPair<T> {
    symmetric(params, |p| early_shoot_v1(p, k))
}

pub fn v_late_shoot<T: Scalar>(params: &GameParams<T>, k: u32) -> PayoffPair<T> {
    symmetric(params, |p| late_shoot_v1(p, k))
}

pub fn v_periodic<T: Scalar>(params: &GameParams<T>, m: u32) -> PayoffPair<T> {
    symmetric(params, |p| periodic_v1(p, m))
}

fn stationary_level<T: Scalar>(kind: &StrategyKind<T>) -> Option<T> {
    match kind {
        StrategyKind::Stationary(x) => Some(x.clone()),
        StrategyKind::Cooperate => Some(T::zero()),
        StrategyKind::Defect => Some(T::one()),
        _ => None,
    }
}

/// Closed-form payoff of a profile.
///
/// Covers every pair of plain stationary strategies and every symmetric
/// profile of one schedule family (grim or not: nobody deviates on the
/// equilibrium path). Anything else needs the solver.
pub fn v_profile<T: Scalar>(
    spec1: &StrategySpec<T>,
    spec2: &StrategySpec<T>,
    params: &GameParams<T>,
) -> Result<PayoffPair<T>> {
    if !spec1.is_grim() && !spec2.is_grim() {
        if let (Some(x1), Some(x2)) = (stationary_level(spec1.kind()), stationary_level(spec2.kind())) {
            return Ok(v_stationary(params, &x1, &x2));
        }
    }
    if spec1.kind() != spec2.kind() {
        return Err(DuelError::UnsupportedProfile(spec1.to_string(), spec2.to_string()));
    }
    match spec1.kind() {
        StrategyKind::Stationary(x) => Ok(v_stationary(params, x, x)),
        StrategyKind::Cooperate => Ok(v_stationary(params, &T::zero(), &T::zero())),
        StrategyKind::Defect => Ok(v_stationary(params, &T::one(), &T::one())),
        StrategyKind::EarlyShoot(k) => Ok(v_early_shoot(params, *k)),
        StrategyKind::LateShoot(k) => Ok(v_late_shoot(params, *k)),
        StrategyKind::Periodic(m) => Ok(v_periodic(params, *m)),
    }
}

/// Total (not normalized) payoff advantage of mutual cooperation over mutual
/// defection for `player`: `γ p_other / ((1 - γ)(1 - γ(1 - p1)(1 - p2)))`.
pub fn cooperation_gap<T: Scalar>(params: &GameParams<T>, player: Player) -> T {
    let g = params.gamma().clone();
    let other = params.hit(player.other()).clone();
    g.clone() * other / (one_minus(&g) * shared_denominator(params))
}

/// Deviation classes with a closed-form gain for player 1.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviationClass<T> {
    /// Stationary profile `(x1, x2)`; player 1 switches to `y1`.
    StationarySwitch { x1: T, y1: T, x2: T },
    /// Against grim-C: shoot in round 1, then shoot every round.
    GrimCooperateFirstShot,
    /// Against grim-DC(K): hold in round `l ≤ K`, shoot in every other round.
    GrimEarlyShootSkip { k: u32, l: u32 },
    /// Against grim-CD(K): start shooting in round `K - 1`, one round early.
    GrimLateShootEarlyStart { k: u32 },
    /// Against grim-P(M): hold in rounds `1..=k`, shoot in round `k + 1 ≤ M`,
    /// then shoot every round.
    GrimPeriodicEarlyShot { m: u32, k: u32 },
}

/// Compliance minus deviation, normalized (`δv₁`), as transcribed from the
/// published derivations. Positive means the deviation does not pay.
///
/// Two classes are known to disagree with the solver because the published
/// derivation counts the stage payoff after a missed shot twice:
/// `GrimCooperateFirstShot` (off by a factor γ) and
/// `GrimLateShootEarlyStart`. [`rederived_deviation_gain`] gives the values
/// the solver reproduces. `GrimEarlyShootSkip` only has a published value at
/// γ = 1, see [`early_shoot_skip_gain_at_unit_discount`].
pub fn deviation_gain<T: Scalar>(class: &DeviationClass<T>, params: &GameParams<T>) -> Result<T> {
    let g = params.gamma().clone();
    let (p1, p2) = (params.p1().clone(), params.p2().clone());
    match class {
        DeviationClass::StationarySwitch { x1, y1, x2 } => Ok(stationary_switch_gain(params, x1, y1, x2)),
        DeviationClass::GrimCooperateFirstShot => {
            Ok(powu(&g, 3) * p2 * one_minus(&p1) / shared_denominator(params))
        }
        DeviationClass::GrimEarlyShootSkip { .. } => Err(DuelError::DeviationRange(
            "the skip gain against grim-DC(K) is only published at γ = 1".into(),
        )),
        DeviationClass::GrimLateShootEarlyStart { k } => {
            check_range(*k >= 1, "late-shoot K must be >= 1")?;
            let num = p2 * powu(&g, *k) * (T::one() - g * one_minus(&p1));
            Ok(-num / shared_denominator(params))
        }
        DeviationClass::GrimPeriodicEarlyShot { m, k } => periodic_early_shot_gain(params, *m, *k),
    }
}

/// Compliance minus deviation, normalized, re-derived with the same
/// conventions as the solver. Agrees with [`deviation_gain`] for
/// `StationarySwitch` and `GrimPeriodicEarlyShot`.
pub fn rederived_deviation_gain<T: Scalar>(
    class: &DeviationClass<T>,
    params: &GameParams<T>,
) -> Result<T> {
    let g = params.gamma().clone();
    let (p1, p2) = (params.p1().clone(), params.p2().clone());
    let den = shared_denominator(params);
    match class {
        DeviationClass::StationarySwitch { x1, y1, x2 } => Ok(stationary_switch_gain(params, x1, y1, x2)),
        DeviationClass::GrimCooperateFirstShot => Ok(powu(&g, 2) * p2 * one_minus(&p1) / den),
        DeviationClass::GrimEarlyShootSkip { k, l } => {
            check_range(*l >= 1 && l <= k, "skip round must satisfy 1 <= l <= K")?;
            Ok(early_shoot_v1(params, *k) - early_shoot_skip_v1(params, *l))
        }
        DeviationClass::GrimLateShootEarlyStart { k } => {
            check_range(*k >= 2, "starting one round early needs K >= 2")?;
            Ok(-(powu(&g, *k) * p1 * p2) / den)
        }
        DeviationClass::GrimPeriodicEarlyShot { m, k } => periodic_early_shot_gain(params, *m, *k),
    }
}

fn check_range(ok: bool, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(DuelError::DeviationRange(message.to_string()))
    }
}

fn stationary_switch_gain<T: Scalar>(params: &GameParams<T>, x1: &T, y1: &T, x2: &T) -> T {
    let g = params.gamma().clone();
    let (p1, p2) = (params.p1().clone(), params.p2().clone());
    let a2 = p2.clone() * x2.clone();
    let num = g.clone() * g.clone() * p1.clone() * p2 * x2.clone() * (x1.clone() - y1.clone()) * one_minus(&a2);
    let d_y = T::one() - g.clone() * one_minus(&a2) * (T::one() - p1.clone() * y1.clone());
    let d_x = T::one() - g * one_minus(&a2) * (T::one() - p1 * x1.clone());
    num / (d_y * d_x)
}

/// Normalized payoff of holding in round `l` and shooting in every other
/// round against grim-DC(K) (`l ≤ K`), so the opponent shoots throughout.
fn early_shoot_skip_v1<T: Scalar>(params: &GameParams<T>, l: u32) -> T {
    let g = params.gamma().clone();
    let (p1, p2) = (params.p1().clone(), params.p2().clone());
    let a = params.joint_miss();
    let ga = g.clone() * a.clone();
    // Σ_{t=1}^{l-1} γ^t a^{t-1}
    let partial = g.clone() * (T::one() - powu(&ga, l - 1)) / (T::one() - ga);
    let scale = one_minus(&g);
    let v_defect = stationary_v1(params, &T::one(), &T::one());
    scale.clone()
        + partial * (p1 * one_minus(&p2) + scale * a.clone())
        + powu(&g, l) * powu(&a, l - 1) * one_minus(&p2) * v_defect
}

/// Published limit of the skip gain against grim-DC(K) as γ → 1:
/// `(1-p1)^K (1-p2)^K p2 / (p1 + (1-p1) p2)`.
pub fn early_shoot_skip_gain_at_unit_discount<T: Scalar>(k: u32, p1: &T, p2: &T) -> T {
    powu(&one_minus(p1), k) * powu(&one_minus(p2), k) * p2.clone()
        / (p1.clone() + one_minus(p1) * p2.clone())
}

/// Limit as γ → 1 of the skip gain for skipping round `l ≤ K`, re-derived:
/// `p2 a^(l-1) (a^(K-l+1) + p1(1-p2)) / (p1 + p2 - p1 p2)` with
/// `a = (1-p1)(1-p2)`. Smallest at `l = K`, where it is
/// `p2 (1-p1)^(K-1) (1-p2)^K / (p1 + p2 - p1 p2)`.
pub fn rederived_skip_gain_at_unit_discount<T: Scalar>(k: u32, l: u32, p1: &T, p2: &T) -> T {
    let a = one_minus(p1) * one_minus(p2);
    let inner = powu(&a, k + 1 - l.min(k)) + p1.clone() * one_minus(p2);
    p2.clone() * powu(&a, l.saturating_sub(1)) * inner
        / (p1.clone() + p2.clone() - p1.clone() * p2.clone())
}

fn periodic_early_shot_gain<T: Scalar>(params: &GameParams<T>, m: u32, k: u32) -> Result<T> {
    check_range(k < m, "the early shot must fall inside the first period (k + 1 <= M)")?;
    let g = params.gamma().clone();
    let bracket = periodic_early_shot_bracket(params, m, k);
    let den = (T::one() - powu(&g, m + 1) * params.joint_miss()) * shared_denominator(params);
    Ok(params.p2().clone() * powu(&g, k + 2) * bracket / den)
}

/// The factor of the periodic early-shot gain that carries its sign:
/// `-(1-p1)²(1-p2)γ^(M+1) + (1-p1)(1-p2)γ^(M-K) - γ^(M-K-1) + 1 - p1`.
/// The remaining factors are positive, so this never underflows to a wrong
/// sign even for very large M.
pub fn periodic_early_shot_bracket<T: Scalar>(params: &GameParams<T>, m: u32, k: u32) -> T {
    let g = params.gamma().clone();
    let (p1, p2) = (params.p1().clone(), params.p2().clone());
    let q1 = one_minus(&p1);
    let q2 = one_minus(&p2);
    -(q1.clone() * q1.clone() * q2.clone() * powu(&g, m + 1))
        + q1.clone() * q2 * powu(&g, m - k)
        - powu(&g, m - k - 1)
        + q1
}

/// The symmetric-probability polynomials behind the periodic equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicPolynomials<T> {
    pub f_mk: T,
    pub f1: T,
    pub f2: T,
    pub fbar_m: T,
    pub h1: f64,
    pub h2: f64,
}

/// `f_{M,K}(γ,p) = -(1-p)³γ^(M+K+3) + (1-p)²γ^(M+2) - γ^(M+1) + (1-p)γ^(K+2)`.
pub fn f_mk<T: Scalar>(m: u32, k: u32, gamma: &T, p: &T) -> T {
    f_mk_first(m, k, gamma, p) + f_mk_second(m, k, gamma, p)
}

/// `(1-p)²γ^(M+2) - (1-p)³γ^(M+K+3)`, positive whenever `0 < γ, p < 1`.
pub fn f_mk_first<T: Scalar>(m: u32, k: u32, gamma: &T, p: &T) -> T {
    let q = one_minus(p);
    powu(&q, 2) * powu(gamma, m + 2) - powu(&q, 3) * powu(gamma, m + k + 3)
}

/// `(1-p)γ^(K+2) - γ^(M+1)`.
pub fn f_mk_second<T: Scalar>(m: u32, k: u32, gamma: &T, p: &T) -> T {
    one_minus(p) * powu(gamma, k + 2) - powu(gamma, m + 1)
}

/// `f̄_M(γ,p) = -(1-p)³γ^(M+1) + γp² - (2γ+1)p + γ`.
pub fn fbar<T: Scalar>(m: u32, gamma: &T, p: &T) -> T {
    let q = one_minus(p);
    let two: T = int(2);
    -(powu(&q, 3) * powu(gamma, m + 1)) + gamma.clone() * p.clone() * p.clone()
        - (two * gamma.clone() + T::one()) * p.clone()
        + gamma.clone()
}

/// Center of the periodic-equilibrium box: `(9/10, (1 - e^-M)/10)`.
pub fn periodic_center(m: u32) -> (f64, f64) {
    (0.9, (1.0 - (-(m as f64)).exp()) / 10.0)
}

/// `h₁(M)` from its expanded form:
/// `-(9+e^-M)³(9/10)^(M+1)/1000 + 9(1-e^-M)²/1000 + 31/50 + 7e^-M/25`.
pub fn h1(m: u32) -> f64 {
    let e = (-(m as f64)).exp();
    -(9.0 + e).powi(3) * 0.9f64.powi(m as i32 + 1) / 1000.0
        + 9.0 * (1.0 - e).powi(2) / 1000.0
        + 31.0 / 50.0
        + 7.0 * e / 25.0
}

/// `h₁(M)` evaluated as `f̄_M` at the box center; must agree with [`h1`].
pub fn h1_via_fbar(m: u32) -> f64 {
    let (g, p) = periodic_center(m);
    fbar(m, &g, &p)
}

/// `h₂(M) = -(9+e^-M)³(9/10)^(M+1)/1000 + 31/50`, a lower bound for `h₁`.
pub fn h2(m: u32) -> f64 {
    let e = (-(m as f64)).exp();
    -(9.0 + e).powi(3) * 0.9f64.powi(m as i32 + 1) / 1000.0 + 31.0 / 50.0
}

/// All periodic polynomials at once. Requires `1 <= K <= M - 1`.
pub fn periodic_polynomials<T: Scalar>(m: u32, k: u32, gamma: &T, p: &T) -> Result<PeriodicPolynomials<T>> {
    if k < 1 || k + 1 > m {
        return Err(DuelError::DeviationRange(format!(
            "K = {k} outside 1..={} for M = {m}",
            m.saturating_sub(1)
        )));
    }
    Ok(PeriodicPolynomials {
        f_mk: f_mk(m, k, gamma, p),
        f1: f_mk_first(m, k, gamma, p),
        f2: f_mk_second(m, k, gamma, p),
        fbar_m: fbar(m, gamma, p),
        h1: h1(m),
        h2: h2(m),
    })
}
