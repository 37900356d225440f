//! Best responses, ε-equilibrium certificates and parameter scans.
//!
//! Everything here runs in `f64`. Against a fixed opponent automaton the
//! deviator faces an MDP over the opponent's memory, so the best response is
//! computed by value iteration, then made exact by policy evaluation and a
//! few policy-iteration steps. Structured deviations (flip one round, then
//! settle) are evaluated on the side to give readable witnesses.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::closed_form::{
    periodic_center, periodic_early_shot_bracket, rederived_deviation_gain, v_stationary, DeviationClass,
};
use crate::error::{DuelError, Result};
use crate::evaluator::{exact_payoff_automata, unit_discount_limit};
use crate::game::{Action, GameParams, Player};
use crate::linalg;
use crate::strategy::{Automaton, DeviationAutomaton, DeviationPlan, StrategyKind, StrategySpec};
use crate::scalar;
use crate::Rational;

/// Tolerance handed to the payoff solver (only used when it has to truncate).
const SOLVER_TOLERANCE: f64 = 1e-13;

/// Q-values closer than this count as a tie, broken towards holding.
const TIE: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryResponse {
    pub x_star: f64,
    pub value: f64,
    pub tie: bool,
}

/// Player 1's best stationary reply to an opponent shooting with
/// probability `opponent_x`. For player 2 pass `params.swapped()`.
///
/// Player 1's payoff is monotone in its own shoot probability, so comparing
/// the endpoints is enough.
pub fn best_response_stationary(opponent_x: f64, params: &GameParams<f64>) -> Result<StationaryResponse> {
    if !(0.0..=1.0).contains(&opponent_x) {
        return Err(DuelError::InvalidParameter {
            name: "opponent_x",
            value: opponent_x.to_string(),
            reason: "must lie in [0, 1]",
        });
    }
    let hold = v_stationary(params, &0.0, &opponent_x).v1;
    let shoot = v_stationary(params, &1.0, &opponent_x).v1;
    let tie = (shoot - hold).abs() <= TIE;
    let (x_star, value) = if shoot > hold + TIE { (1.0, shoot) } else { (0.0, hold) };
    Ok(StationaryResponse { x_star, value, tie })
}

#[derive(Debug, Clone)]
pub struct BestResponse<M> {
    /// Normalized value of the best reply from the start of the game.
    pub value: f64,
    /// Optimal action in each reachable opponent memory state while both
    /// players are alive.
    pub policy: Vec<(M, Action)>,
    /// Sup-norm change of each value-iteration sweep.
    pub residuals: Vec<f64>,
    pub policy_iterations: usize,
}

struct Mdp<M> {
    states: Vec<M>,
    /// Per state and own action: `(sole survivor probability, [(next, prob)])`.
    moves: Vec<[(f64, Vec<(usize, f64)>); 2]>,
}

fn build_mdp<A: Automaton<f64>>(opponent: &A, p_own: f64, p_opp: f64) -> Mdp<A::Memory> {
    let mut index: HashMap<A::Memory, usize> = HashMap::new();
    let start = opponent.initial();
    index.insert(start.clone(), 0);
    let mut mdp = Mdp {
        states: vec![start],
        moves: Vec::new(),
    };
    let mut i = 0;
    while i < mdp.states.len() {
        let m = mdp.states[i].clone();
        let x = opponent.emit(&m);
        let mut per_action: [(f64, Vec<(usize, f64)>); 2] = [(0.0, Vec::new()), (0.0, Vec::new())];
        for (a, own) in [Action::Hold, Action::Shoot].into_iter().enumerate() {
            let k_own = if own.is_shoot() { p_own } else { 0.0 };
            for (opp, w) in [(Action::Hold, 1.0 - x), (Action::Shoot, x)] {
                if w == 0.0 {
                    continue;
                }
                let k_opp = if opp.is_shoot() { p_opp } else { 0.0 };
                per_action[a].0 += w * k_own * (1.0 - k_opp);
                let survive = w * (1.0 - k_own) * (1.0 - k_opp);
                if survive == 0.0 {
                    continue;
                }
                let next = opponent.advance(&m, opp, own);
                let j = *index.entry(next.clone()).or_insert_with(|| {
                    mdp.states.push(next);
                    mdp.states.len() - 1
                });
                per_action[a].1.push((j, survive));
            }
        }
        mdp.moves.push(per_action);
        i += 1;
    }
    mdp
}

fn q_value(gamma: f64, step: &(f64, Vec<(usize, f64)>), v: &[f64]) -> f64 {
    let cont: f64 = step.1.iter().map(|(j, w)| w * v[*j]).sum();
    (1.0 - gamma) + gamma * (step.0 + cont)
}

fn greedy(gamma: f64, mdp: &Mdp<impl Clone>, v: &[f64]) -> Vec<usize> {
    mdp.moves
        .iter()
        .map(|m| {
            let hold = q_value(gamma, &m[0], v);
            let shoot = q_value(gamma, &m[1], v);
            usize::from(shoot > hold + TIE)
        })
        .collect()
}

fn evaluate_policy(gamma: f64, mdp: &Mdp<impl Clone>, policy: &[usize]) -> Result<Vec<f64>> {
    let n = mdp.states.len();
    let mut matrix = vec![vec![0.0; n]; n];
    let mut rhs = Vec::with_capacity(n);
    for i in 0..n {
        let (sole, edges) = &mdp.moves[i][policy[i]];
        matrix[i][i] = 1.0;
        for (j, w) in edges {
            matrix[i][*j] -= gamma * w;
        }
        rhs.push(vec![(1.0 - gamma) + gamma * sole]);
    }
    Ok(linalg::solve(matrix, rhs)?.into_iter().map(|r| r[0]).collect())
}

/// Best reply of `deviator` to the opponent automaton.
///
/// Value iteration stops once a sweep changes values by less than
/// `ε(1-γ)/(2γ)`, which puts the greedy policy within ε of optimal. The
/// greedy policy is then evaluated exactly and improved until stable.
pub fn best_response_vs_automaton<A: Automaton<f64>>(
    opponent: &A,
    params: &GameParams<f64>,
    epsilon: f64,
    deviator: Player,
) -> Result<BestResponse<A::Memory>> {
    if epsilon <= 0.0 {
        return Err(DuelError::InvalidParameter {
            name: "epsilon",
            value: epsilon.to_string(),
            reason: "must be positive",
        });
    }
    let g = *params.gamma();
    let mdp = build_mdp(opponent, *params.hit(deviator), *params.hit(deviator.other()));
    let n = mdp.states.len();
    let threshold = epsilon * (1.0 - g) / (2.0 * g);
    let mut v = vec![0.0; n];
    let mut residuals = Vec::new();
    loop {
        let next: Vec<f64> = mdp
            .moves
            .iter()
            .map(|m| q_value(g, &m[0], &v).max(q_value(g, &m[1], &v)))
            .collect();
        let r = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        residuals.push(r);
        v = next;
        if r < threshold {
            break;
        }
    }
    let mut policy = greedy(g, &mdp, &v);
    let mut iterations = 0;
    loop {
        v = evaluate_policy(g, &mdp, &policy)?;
        let improved = greedy(g, &mdp, &v);
        iterations += 1;
        if improved == policy || iterations > 100 {
            break;
        }
        policy = improved;
    }
    Ok(BestResponse {
        value: v[0],
        policy: mdp
            .states
            .into_iter()
            .zip(policy)
            .map(|(m, a)| (m, if a == 1 { Action::Shoot } else { Action::Hold }))
            .collect(),
        residuals,
        policy_iterations: iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "NE-within-epsilon")]
    NeWithinEpsilon,
    NotNE,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::NeWithinEpsilon => "NE-within-epsilon",
            Verdict::NotNE => "NotNE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub deviating_player: u8,
    pub deviation: String,
    /// Deviation payoff minus on-path payoff, normalized.
    pub gain: f64,
    pub baseline: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NECertificate {
    pub profile: (String, String),
    pub params: GameParams<f64>,
    pub epsilon: f64,
    pub verdict: Verdict,
    pub witness: Option<DeviationReport>,
    /// Best-response value minus on-path value, per player.
    pub gains: [f64; 2],
    pub baseline: [f64; 2],
    /// Most profitable structured deviation per player.
    pub structured: [Option<DeviationReport>; 2],
}

/// Structured deviations worth trying against a profile built on `spec`.
pub fn structured_plans(spec: &StrategySpec<f64>) -> Vec<DeviationPlan> {
    let mut plans = vec![DeviationPlan::Always(Action::Shoot), DeviationPlan::Always(Action::Hold)];
    if !spec.is_deterministic() {
        return plans;
    }
    let reach = match spec.kind() {
        StrategyKind::EarlyShoot(k) | StrategyKind::LateShoot(k) => k + 2,
        StrategyKind::Periodic(m) => m + 3,
        _ => 2,
    };
    for onset in 1..=reach {
        for after in [Action::Shoot, Action::Hold] {
            plans.push(DeviationPlan::Onset { onset, after });
        }
    }
    plans
}

/// Normalized payoff of `deviator` following `plan` on top of its own spec
/// while the other player sticks to the profile.
pub fn deviation_payoff(
    spec1: &StrategySpec<f64>,
    spec2: &StrategySpec<f64>,
    params: &GameParams<f64>,
    deviator: Player,
    plan: DeviationPlan,
) -> Result<f64> {
    match deviator {
        Player::One => {
            let dev = DeviationAutomaton::new(spec1, plan)?;
            let r = exact_payoff_automata(&dev, &spec2.compile(), params, &SOLVER_TOLERANCE)?;
            Ok(r.payoff.v1)
        }
        Player::Two => {
            let dev = DeviationAutomaton::new(spec2, plan)?;
            let r = exact_payoff_automata(&spec1.compile(), &dev, params, &SOLVER_TOLERANCE)?;
            Ok(r.payoff.v2)
        }
    }
}

/// Certifies a profile as an ε-equilibrium or produces a witness.
///
/// The verdict rests on the best-response values. The structured search
/// only supplies a readable witness and a consistency check: no structured
/// deviation may beat the best response.
pub fn check_ne(
    spec1: &StrategySpec<f64>,
    spec2: &StrategySpec<f64>,
    params: &GameParams<f64>,
    epsilon: f64,
) -> Result<NECertificate> {
    let base = exact_payoff_automata(&spec1.compile(), &spec2.compile(), params, &SOLVER_TOLERANCE)?;
    let baseline = [base.payoff.v1, base.payoff.v2];
    let mut gains = [0.0; 2];
    let mut structured: [Option<DeviationReport>; 2] = [None, None];
    for deviator in [Player::One, Player::Two] {
        let n = (deviator.index() - 1) as usize;
        let (own, opponent) = match deviator {
            Player::One => (spec1, spec2),
            Player::Two => (spec2, spec1),
        };
        let br = best_response_vs_automaton(&opponent.compile(), params, epsilon, deviator)?;
        gains[n] = br.value - baseline[n];
        for plan in structured_plans(own) {
            let v = deviation_payoff(spec1, spec2, params, deviator, plan)?;
            let gain = v - baseline[n];
            if structured[n].as_ref().is_none_or(|r| gain > r.gain) {
                structured[n] = Some(DeviationReport {
                    deviating_player: deviator.index(),
                    deviation: plan.to_string(),
                    gain,
                    baseline,
                });
            }
        }
        let best = structured[n].as_ref().map_or(f64::NEG_INFINITY, |r| r.gain);
        if best > gains[n] + 1e-9 {
            return Err(DuelError::Inconsistency(format!(
                "structured deviation gains {best} but the best response only {}",
                gains[n]
            )));
        }
    }
    let verdict = if gains.iter().all(|&g| g <= epsilon) {
        Verdict::NeWithinEpsilon
    } else {
        Verdict::NotNE
    };
    let witness = match verdict {
        Verdict::NeWithinEpsilon => None,
        Verdict::NotNE => {
            let n = if gains[0] >= gains[1] { 0 } else { 1 };
            match &structured[n] {
                Some(r) if r.gain > epsilon => Some(r.clone()),
                _ => Some(DeviationReport {
                    deviating_player: n as u8 + 1,
                    deviation: "optimal reply found by value iteration".into(),
                    gain: gains[n],
                    baseline,
                }),
            }
        }
    };
    Ok(NECertificate {
        profile: (spec1.to_string(), spec2.to_string()),
        params: params.clone(),
        epsilon,
        verdict,
        witness,
        gains,
        baseline,
        structured,
    })
}

/// Unilateral gains `[g1, g2]` available at the stationary profile
/// `(x1, x2)`, restricted to stationary replies.
pub fn stationary_gains(params: &GameParams<f64>, x1: f64, x2: f64) -> [f64; 2] {
    let here = v_stationary(params, &x1, &x2);
    let best1 = v_stationary(params, &0.0, &x2).v1.max(v_stationary(params, &1.0, &x2).v1);
    let best2 = v_stationary(params, &x1, &0.0).v2.max(v_stationary(params, &x1, &1.0).v2);
    [best1 - here.v1, best2 - here.v2]
}

/// Grid profiles where neither player gains more than ε by deviating.
pub fn stationary_ne_scan(params: &GameParams<f64>, resolution: usize, epsilon: f64) -> Result<Vec<(f64, f64)>> {
    if resolution < 2 {
        return Err(DuelError::InvalidParameter {
            name: "grid",
            value: resolution.to_string(),
            reason: "need at least 2 points per axis",
        });
    }
    let step = |i: usize| i as f64 / (resolution - 1) as f64;
    Ok((0..resolution)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..resolution).filter_map(move |j| {
                let (x1, x2) = (step(i), step(j));
                let [g1, g2] = stationary_gains(params, x1, x2);
                (g1 <= epsilon && g2 <= epsilon).then_some((x1, x2))
            })
        })
        .collect())
}

/// Compliance minus the best "skip round L, then shoot forever" deviation
/// against grim-DC(K), minimized over `L`, for player 1.
pub fn early_shoot_skip_gain(k: u32, p1: f64, p2: f64, gamma: f64) -> Result<f64> {
    let params = GameParams::new(gamma, p1, p2)?;
    let spec = StrategySpec::early_shoot(k)?.grim()?;
    let base = exact_payoff_automata(&spec.compile(), &spec.compile(), &params, &SOLVER_TOLERANCE)?;
    let mut worst = f64::INFINITY;
    for l in 1..=k {
        let dev = deviation_payoff(&spec, &spec, &params, Player::One, skip_plan(l))?;
        worst = worst.min(base.payoff.v1 - dev);
    }
    Ok(worst)
}

/// Below this magnitude a double-precision gain does not settle its sign.
const SIGN_GUARD: f64 = 1e-12;

/// The minimum skip gain and whether it is strictly positive. Gains too
/// small for `f64` to resolve are re-decided from the closed form in exact
/// rational arithmetic at the same (binary) parameter values.
pub fn early_shoot_skip_gain_sign(k: u32, p1: f64, p2: f64, gamma: f64) -> Result<(f64, bool)> {
    let gain = early_shoot_skip_gain(k, p1, p2, gamma)?;
    if gain.abs() > SIGN_GUARD {
        return Ok((gain, gain > 0.0));
    }
    let exact = GameParams::new(gamma, p1, p2)?
        .convert::<Rational>()
        .ok_or_else(|| DuelError::Inconsistency("parameters have no exact rational form".into()))?;
    let mut worst: Option<Rational> = None;
    for l in 1..=k {
        let g = rederived_deviation_gain(&DeviationClass::GrimEarlyShootSkip { k, l }, &exact)?;
        worst = Some(match worst {
            Some(w) => scalar::min(w, g),
            None => g,
        });
    }
    let g = worst.expect("K >= 1");
    Ok((scalar::to_f64(&g), g > Rational::from_integer(0.into())))
}

/// The same minimum in the limit γ → 1.
pub fn early_shoot_skip_gain_at_unit_discount(k: u32, p1: f64, p2: f64) -> Result<f64> {
    let spec = StrategySpec::<f64>::early_shoot(k)?.grim()?;
    let a = spec.compile();
    let base = unit_discount_limit(&a, &a, &p1, &p2)?[0];
    let mut worst = f64::INFINITY;
    for l in 1..=k {
        let dev = DeviationAutomaton::new(&spec, skip_plan(l))?;
        worst = worst.min(base - unit_discount_limit(&dev, &a, &p1, &p2)?[0]);
    }
    Ok(worst)
}

fn skip_plan(l: u32) -> DeviationPlan {
    DeviationPlan::Onset {
        onset: l,
        after: Action::Shoot,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gamma0 {
    pub k: u32,
    pub p1: f64,
    pub p2: f64,
    pub gamma0: f64,
    /// Smallest gain over the 100 verification points above `gamma0`.
    pub min_verified_gain: f64,
    /// Gain at γ = 1 from the solver's absorption probabilities.
    pub unit_gain: f64,
}

const GAMMA0_SCAN: usize = 200;

/// Largest root in (0,1) of the minimum skip gain against grim-DC(K), or 0
/// when the gain is positive on the whole interval.
pub fn find_gamma0(k: u32, p1: f64, p2: f64, tolerance: f64) -> Result<Gamma0> {
    if k == 0 {
        return Err(DuelError::DeviationRange("K must be >= 1".into()));
    }
    if tolerance <= 0.0 {
        return Err(DuelError::InvalidParameter {
            name: "tolerance",
            value: tolerance.to_string(),
            reason: "must be positive",
        });
    }
    let unit_gain = early_shoot_skip_gain_at_unit_discount(k, p1, p2)?;
    let positive = |g: f64| early_shoot_skip_gain_sign(k, p1, p2, g);
    let mut last_bad = None;
    for i in 1..GAMMA0_SCAN {
        let g = i as f64 / GAMMA0_SCAN as f64;
        if !positive(g)?.1 {
            last_bad = Some(g);
        }
    }
    let gamma0 = match last_bad {
        None => 0.0,
        Some(lo) => {
            let (mut lo, mut hi) = (lo, lo + 1.0 / GAMMA0_SCAN as f64);
            if hi >= 1.0 {
                if unit_gain <= 0.0 {
                    return Err(DuelError::Inconsistency(format!(
                        "skip gain against grim-DC({k}) is not positive near γ = 1 (limit {unit_gain})"
                    )));
                }
                hi = 1.0 - 1e-9;
            }
            while hi - lo > tolerance {
                let mid = 0.5 * (lo + hi);
                if !positive(mid)?.1 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        }
    };
    let mut min_verified_gain = f64::INFINITY;
    for j in 1..=100 {
        let g = gamma0 + (1.0 - gamma0) * j as f64 / 101.0;
        let (v, ok) = positive(g)?;
        if !ok {
            return Err(DuelError::Inconsistency(format!(
                "skip gain {v} at γ = {g} above the reported threshold {gamma0}"
            )));
        }
        min_verified_gain = min_verified_gain.min(v);
    }
    Ok(Gamma0 {
        k,
        p1,
        p2,
        gamma0,
        min_verified_gain,
        unit_gain,
    })
}

/// Smallest closed-form gain over every early-shot deviation against
/// grim-P(M) (first shot at round `K+1`, `K ∈ 0..M`), for both players.
pub fn periodic_min_gain(m: u32, params: &GameParams<f64>) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for view in [params.clone(), params.swapped()] {
        for k in 0..m {
            let gain = rederived_deviation_gain(&DeviationClass::GrimPeriodicEarlyShot { m, k }, &view)?;
            worst = worst.min(gain);
        }
    }
    Ok(worst)
}

/// Whether every early-shot gain against grim-P(M) is strictly positive,
/// decided in exact rational arithmetic at the given (binary) parameters.
pub fn periodic_gains_positive_exact(m: u32, params: &GameParams<f64>) -> bool {
    let Some(exact) = params.convert::<Rational>() else {
        return false;
    };
    [exact.clone(), exact.swapped()].iter().all(|view| {
        (0..m).all(|k| periodic_early_shot_bracket(view, m, k) > Rational::from_integer(0.into()))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionScan {
    pub m: u32,
    pub center: (f64, f64, f64),
    /// Largest half-width tried, after clamping into the parameter domain.
    pub half_width_max: f64,
    pub grid: Vec<(f64, f64, f64)>,
    /// Minimum over deviations and players of the gain at each grid point.
    pub results: Vec<f64>,
    pub empirical_delta: f64,
    pub exact_center_positive: bool,
    pub center_verdict: Verdict,
    /// Solver verdicts at the 8 corners of the reported box.
    pub corner_verdicts: Vec<Verdict>,
}

/// Scans a cube of half-width up to `half_width_max` around the center of
/// the periodic-equilibrium box with `2·resolution + 1` points per axis.
/// The reported half-width is the largest lattice level whose whole cube
/// has positive gains.
pub fn periodic_region_scan(m: u32, resolution: usize, half_width_max: f64, epsilon: f64) -> Result<RegionScan> {
    if m == 0 || resolution == 0 || half_width_max <= 0.0 {
        return Err(DuelError::InvalidParameter {
            name: "M / grid / half_width",
            value: format!("{m} / {resolution} / {half_width_max}"),
            reason: "need M >= 1, grid >= 1 and a positive half-width",
        });
    }
    let (gc, pc) = periodic_center(m);
    let hmax = half_width_max.min((1.0 - gc) * 0.999).min(pc * 0.999);
    let n = resolution as i64;
    let step = hmax / n as f64;
    let center = GameParams::new(gc, pc, pc)?;
    if periodic_min_gain(m, &center)? <= 0.0 {
        return Err(DuelError::Inconsistency(format!(
            "grim-P({m}) has a profitable early shot at the center of its box"
        )));
    }
    let offsets: Vec<(i64, i64, i64)> = (-n..=n)
        .flat_map(|a| (-n..=n).flat_map(move |b| (-n..=n).map(move |c| (a, b, c))))
        .collect();
    let evaluated: Vec<((f64, f64, f64), f64, i64)> = offsets
        .par_iter()
        .map(|&(a, b, c)| {
            let point = (gc + a as f64 * step, pc + b as f64 * step, pc + c as f64 * step);
            let params = GameParams::new(point.0, point.1, point.2)?;
            let level = a.abs().max(b.abs()).max(c.abs());
            Ok((point, periodic_min_gain(m, &params)?, level))
        })
        .collect::<Result<_>>()?;
    let mut first_failure = n + 1;
    for (_, gain, level) in &evaluated {
        if *gain <= 0.0 {
            first_failure = first_failure.min(*level);
        }
    }
    let empirical_delta = (first_failure - 1) as f64 * step;

    let spec = StrategySpec::periodic(m)?.grim()?;
    let center_verdict = check_ne(&spec, &spec, &center, epsilon)?.verdict;
    let mut corner_verdicts = Vec::new();
    if empirical_delta > 0.0 {
        for sg in [-1.0, 1.0] {
            for s1 in [-1.0, 1.0] {
                for s2 in [-1.0, 1.0] {
                    let corner = GameParams::new(
                        gc + sg * empirical_delta,
                        pc + s1 * empirical_delta,
                        pc + s2 * empirical_delta,
                    )?;
                    corner_verdicts.push(check_ne(&spec, &spec, &corner, epsilon)?.verdict);
                }
            }
        }
    }
    let (grid, results) = evaluated.into_iter().map(|(p, g, _)| (p, g)).unzip();
    Ok(RegionScan {
        m,
        center: (gc, pc, pc),
        half_width_max: hmax,
        grid,
        results,
        empirical_delta,
        exact_center_positive: periodic_gains_positive_exact(m, &center),
        center_verdict,
        corner_verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form;
    use approx::assert_abs_diff_eq;

    fn spec(s: &str) -> StrategySpec<f64> {
        s.parse().unwrap()
    }

    fn params(g: f64, p1: f64, p2: f64) -> GameParams<f64> {
        GameParams::new(g, p1, p2).unwrap()
    }

    #[test]
    fn stationary_best_response_examples() {
        let r = best_response_stationary(0.5, &params(0.9, 0.3, 0.5)).unwrap();
        assert_eq!((r.x_star, r.tie), (1.0, false));
        let r = best_response_stationary(0.0, &params(0.9, 0.3, 0.5)).unwrap();
        assert_eq!((r.x_star, r.value, r.tie), (0.0, 1.0, true));
        let r = best_response_stationary(1.0, &params(0.5, 0.5, 0.5)).unwrap();
        assert_eq!(r.x_star, 1.0);
        assert_abs_diff_eq!(r.value, 5.0 / 7.0, epsilon = 1e-15);
        assert!(best_response_stationary(1.5, &params(0.5, 0.5, 0.5)).is_err());
    }

    #[test]
    fn best_response_against_grim_cooperation_is_to_hold() {
        let br = best_response_vs_automaton(&spec("grim-C").compile(), &params(0.9, 0.3, 0.5), 1e-9, Player::One)
            .unwrap();
        assert_abs_diff_eq!(br.value, 1.0, epsilon = 1e-12);
        let (start, action) = &br.policy[0];
        assert!(!start.triggered);
        assert_eq!(*action, Action::Hold);
    }

    #[test]
    fn best_response_against_defection_is_to_shoot() {
        let p = params(0.7, 0.4, 0.2);
        let br = best_response_vs_automaton(&spec("D").compile(), &p, 1e-9, Player::One).unwrap();
        assert_abs_diff_eq!(br.value, v_stationary(&p, &1.0, &1.0).v1, epsilon = 1e-12);
        assert!(br.policy.iter().all(|(_, a)| *a == Action::Shoot));
        let br = best_response_vs_automaton(&spec("D").compile(), &p, 1e-9, Player::Two).unwrap();
        assert_abs_diff_eq!(br.value, v_stationary(&p, &1.0, &1.0).v2, epsilon = 1e-12);
    }

    #[test]
    fn value_iteration_contracts() {
        let p = params(0.95, 0.2, 0.3);
        let br = best_response_vs_automaton(&spec("grim-P:4").compile(), &p, 1e-12, Player::One).unwrap();
        let r0 = br.residuals[0];
        for (n, r) in br.residuals.iter().enumerate() {
            assert!(*r <= 0.95f64.powi(n as i32) * r0 + 1e-15);
        }
    }

    #[test]
    fn check_ne_examples() {
        let c = check_ne(&spec("grim-C"), &spec("grim-C"), &params(0.9, 0.3, 0.5), 1e-9).unwrap();
        assert_eq!(c.verdict, Verdict::NeWithinEpsilon);
        assert!(c.witness.is_none());

        let c = check_ne(&spec("grim-CD:2"), &spec("grim-CD:2"), &params(0.5, 0.5, 0.5), 1e-9).unwrap();
        assert_eq!(c.verdict, Verdict::NotNE);
        assert!(c.witness.as_ref().unwrap().gain > 1e-9);

        let c = check_ne(&spec("x:0.5"), &spec("x:0.5"), &params(0.6, 0.3, 0.8), 1e-9).unwrap();
        assert_eq!(c.verdict, Verdict::NotNE);
        assert_eq!(c.witness.unwrap().deviation, "always shoot");

        let c = check_ne(&spec("D"), &spec("D"), &params(0.6, 0.3, 0.8), 1e-9).unwrap();
        assert_eq!(c.verdict, Verdict::NeWithinEpsilon);
    }

    #[test]
    fn stationary_scan_finds_only_the_corners() {
        for p in [params(0.9, 0.3, 0.5), params(0.1, 0.9, 0.9)] {
            let ne = stationary_ne_scan(&p, 11, 1e-9).unwrap();
            assert_eq!(ne, vec![(0.0, 0.0), (1.0, 1.0)]);
        }
    }

    #[test]
    fn skip_gain_tends_to_its_limit() {
        let lim = early_shoot_skip_gain_at_unit_discount(2, 0.3, 0.5).unwrap();
        let near = early_shoot_skip_gain(2, 0.3, 0.5, 1.0 - 1e-7).unwrap();
        assert_abs_diff_eq!(lim, near, epsilon = 1e-5);
        let printed: f64 = closed_form::rederived_skip_gain_at_unit_discount(2, 2, &0.3, &0.5);
        assert_abs_diff_eq!(lim, printed, epsilon = 1e-12);
    }

    #[test]
    fn skip_gain_matches_closed_form() {
        for (k, g) in [(1, 0.3), (3, 0.7), (5, 0.95)] {
            let p = params(g, 0.3, 0.6);
            let solver = early_shoot_skip_gain(k, 0.3, 0.6, g).unwrap();
            let closed = (1..=k)
                .map(|l| rederived_deviation_gain(&DeviationClass::GrimEarlyShootSkip { k, l }, &p).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(solver, closed, epsilon = 1e-12);
        }
        let (gain, positive) = early_shoot_skip_gain_sign(8, 0.5, 0.5, 0.01).unwrap();
        assert!(positive && gain > 0.0 && gain < 1e-12);
    }

    #[test]
    fn gamma0_is_verified() {
        let r = find_gamma0(3, 0.5, 0.5, 1e-6).unwrap();
        assert!(r.gamma0 < 1.0);
        assert!(r.min_verified_gain > 0.0);
        assert!(find_gamma0(0, 0.5, 0.5, 1e-6).is_err());
    }

    #[test]
    fn periodic_center_gain_for_m3() {
        let (g, p) = periodic_center(3);
        assert_abs_diff_eq!(p, 0.0950213, epsilon = 1e-7);
        let params = params(g, p, p);
        for k in 1..=2 {
            let gain = closed_form::deviation_gain(&DeviationClass::GrimPeriodicEarlyShot { m: 3, k }, &params).unwrap();
            assert!(gain > 0.0);
            let s = spec("grim-P:3");
            let dev = deviation_payoff(&s, &s, &params, Player::One, DeviationPlan::Onset { onset: k + 1, after: Action::Shoot })
                .unwrap();
            let on_path = closed_form::v_profile(&s, &s, &params).unwrap().v1;
            assert_abs_diff_eq!(on_path - dev, gain, epsilon = 1e-12);
        }
    }

    #[test]
    fn small_region_scan() {
        let scan = periodic_region_scan(2, 2, 0.01, 1e-9).unwrap();
        assert_eq!(scan.grid.len(), 125);
        assert!(scan.empirical_delta > 0.0);
        assert!(scan.exact_center_positive);
        assert_eq!(scan.center_verdict, Verdict::NeWithinEpsilon);
        assert_eq!(scan.corner_verdicts.len(), 8);
    }
}
