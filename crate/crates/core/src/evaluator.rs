//! Payoff oracles for arbitrary automaton profiles.
//!
//! While both players are alive the only thing that matters is the pair of
//! automaton memories, so the game reduces to a finite chain over
//! `(mem1, mem2)` that leaks probability whenever someone is hit. Normalized
//! values solve `w = (1-γ) + γ (sole + P w)`, which is a linear system over
//! the reachable pairs. Large chains fall back to forward induction with an
//! explicit tail bound.

use std::collections::HashMap;
use std::hash::Hash;

use crate::closed_form::PayoffPair;
use crate::error::{DuelError, Result};
use crate::game::{Action, GameParams};
use crate::linalg;
use crate::scalar::{self, Scalar};
use crate::strategy::{Automaton, StrategySpec};

/// Chains with more reachable memory pairs than this are evaluated by
/// forward induction instead of a dense solve.
pub const MAX_SOLVE_STATES: usize = 512;

/// Rounds forward induction may run before giving up.
pub const MAX_HORIZON: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DPResult<T> {
    pub payoff: PayoffPair<T>,
    /// Rounds simulated. Zero when the fixed point was solved exactly.
    pub horizon: u64,
    /// Bound on the error of the totals, `γ^(T+1)/(1-γ)` times the
    /// probability that both are still alive after round `T`.
    pub tail_bound: T,
}

/// One joint outcome of a round played from a memory pair.
#[derive(Debug, Clone)]
pub struct Branch<T, M1, M2> {
    pub actions: (Action, Action),
    /// Probability of the action pair and of both surviving it.
    pub survive: T,
    /// Probability of the action pair and of player n being the sole survivor.
    pub sole: [T; 2],
    pub next: (M1, M2),
}

fn action_weights<T: Scalar>(x: T) -> Vec<(Action, T)> {
    let mut out = Vec::with_capacity(2);
    let hold = T::one() - x.clone();
    if !hold.is_zero() {
        out.push((Action::Hold, hold));
    }
    if !x.is_zero() {
        out.push((Action::Shoot, x));
    }
    out
}

/// All positive-probability outcomes of one round from `(m1, m2)`.
pub fn branches<T, A, B>(
    a1: &A,
    a2: &B,
    m1: &A::Memory,
    m2: &B::Memory,
    p1: &T,
    p2: &T,
) -> Vec<Branch<T, A::Memory, B::Memory>>
where
    T: Scalar,
    A: Automaton<T>,
    B: Automaton<T>,
{
    let mut out = Vec::with_capacity(4);
    for (f1, w1) in action_weights(a1.emit(m1)) {
        for (f2, w2) in action_weights(a2.emit(m2)) {
            let w = w1.clone() * w2.clone();
            let k1 = if f1.is_shoot() { p1.clone() } else { T::zero() };
            let k2 = if f2.is_shoot() { p2.clone() } else { T::zero() };
            let miss1 = T::one() - k1.clone();
            let miss2 = T::one() - k2.clone();
            out.push(Branch {
                actions: (f1, f2),
                survive: w.clone() * miss1.clone() * miss2.clone(),
                sole: [w.clone() * k1 * miss2, w * k2 * miss1],
                next: (a1.advance(m1, f1, f2), a2.advance(m2, f2, f1)),
            });
        }
    }
    out
}

/// The reachable part of the both-alive chain.
#[derive(Debug, Clone)]
pub struct AliveChain<T, M1, M2> {
    pub states: Vec<(M1, M2)>,
    /// `(target, probability)`; probabilities of one row sum to the survival
    /// probability of that state.
    pub edges: Vec<Vec<(usize, T)>>,
    pub sole: Vec<[T; 2]>,
    /// Whether anyone shoots with positive probability in this state.
    pub shooting: Vec<bool>,
}

/// Enumerates memory pairs reachable while both are alive. `None` when
/// there are more than `cap`.
pub fn alive_chain<T, A, B>(
    a1: &A,
    a2: &B,
    p1: &T,
    p2: &T,
    cap: usize,
) -> Option<AliveChain<T, A::Memory, B::Memory>>
where
    T: Scalar,
    A: Automaton<T>,
    B: Automaton<T>,
{
    let start = (a1.initial(), a2.initial());
    let mut index = HashMap::new();
    index.insert(start.clone(), 0usize);
    let mut chain = AliveChain {
        states: vec![start],
        edges: Vec::new(),
        sole: Vec::new(),
        shooting: Vec::new(),
    };
    let mut i = 0;
    while i < chain.states.len() {
        let (m1, m2) = chain.states[i].clone();
        let mut row: Vec<(usize, T)> = Vec::new();
        let mut sole = [T::zero(), T::zero()];
        let mut shooting = false;
        for b in branches(a1, a2, &m1, &m2, p1, p2) {
            shooting |= b.actions.0.is_shoot() || b.actions.1.is_shoot();
            let [s1, s2] = b.sole;
            sole = [sole[0].clone() + s1, sole[1].clone() + s2];
            if b.survive.is_zero() {
                continue;
            }
            let j = match index.get(&b.next) {
                Some(&j) => j,
                None => {
                    if chain.states.len() >= cap {
                        return None;
                    }
                    let j = chain.states.len();
                    index.insert(b.next.clone(), j);
                    chain.states.push(b.next);
                    j
                }
            };
            match row.iter_mut().find(|(t, _)| *t == j) {
                Some((_, w)) => *w = w.clone() + b.survive,
                None => row.push((j, b.survive)),
            }
        }
        chain.edges.push(row);
        chain.sole.push(sole);
        chain.shooting.push(shooting);
        i += 1;
    }
    Some(chain)
}

/// Exact payoff of a profile of two strategy specs.
pub fn exact_payoff<T: Scalar>(
    spec1: &StrategySpec<T>,
    spec2: &StrategySpec<T>,
    params: &GameParams<T>,
    tolerance: &T,
) -> Result<DPResult<T>> {
    exact_payoff_automata(&spec1.compile(), &spec2.compile(), params, tolerance)
}

/// Exact payoff of any two automata. Solves the fixed point when the chain
/// is small enough and otherwise runs [`truncated_payoff`] to `tolerance`.
pub fn exact_payoff_automata<T, A, B>(
    a1: &A,
    a2: &B,
    params: &GameParams<T>,
    tolerance: &T,
) -> Result<DPResult<T>>
where
    T: Scalar,
    A: Automaton<T>,
    B: Automaton<T>,
{
    if *tolerance <= T::zero() {
        return Err(DuelError::InvalidParameter {
            name: "tolerance",
            value: tolerance.to_string(),
            reason: "must be positive",
        });
    }
    match alive_chain(a1, a2, params.p1(), params.p2(), MAX_SOLVE_STATES) {
        Some(chain) => {
            let w = solve_chain(&chain, params.gamma())?;
            Ok(DPResult {
                payoff: PayoffPair::from_normalized(w[0].clone(), w[1].clone(), params.gamma()),
                horizon: 0,
                tail_bound: T::zero(),
            })
        }
        None => truncated_payoff(a1, a2, params, tolerance),
    }
}

/// Normalized values of every state in the chain, as `[v1, v2]` at the
/// initial state.
fn solve_chain<T: Scalar, M1, M2>(chain: &AliveChain<T, M1, M2>, gamma: &T) -> Result<[T; 2]> {
    let n = chain.states.len();
    let one_minus = T::one() - gamma.clone();
    let mut matrix = vec![vec![T::zero(); n]; n];
    let mut rhs = Vec::with_capacity(n);
    for i in 0..n {
        matrix[i][i] = T::one();
        for (j, w) in &chain.edges[i] {
            matrix[i][*j] = matrix[i][*j].clone() - gamma.clone() * w.clone();
        }
        rhs.push(vec![
            one_minus.clone() + gamma.clone() * chain.sole[i][0].clone(),
            one_minus.clone() + gamma.clone() * chain.sole[i][1].clone(),
        ]);
    }
    let x = linalg::solve(matrix, rhs)?;
    Ok([x[0][0].clone(), x[0][1].clone()])
}

/// Forward induction over the memory-pair distribution until the remaining
/// alive mass is worth at most `tolerance` (in total payoff units).
pub fn truncated_payoff<T, A, B>(
    a1: &A,
    a2: &B,
    params: &GameParams<T>,
    tolerance: &T,
) -> Result<DPResult<T>>
where
    T: Scalar,
    A: Automaton<T>,
    B: Automaton<T>,
{
    let g = params.gamma().clone();
    let one_minus = T::one() - g.clone();
    let mut dist: HashMap<(A::Memory, B::Memory), T> = HashMap::new();
    dist.insert((a1.initial(), a2.initial()), T::one());
    let mut totals = [T::one(), T::one()];
    let mut disc = T::one();
    let mut horizon = 0u64;
    loop {
        let mass = dist.values().fold(T::zero(), |acc, m| acc + m.clone());
        let bound = disc.clone() * g.clone() / one_minus.clone() * mass;
        if bound <= *tolerance {
            let v1 = totals[0].clone() * one_minus.clone();
            let v2 = totals[1].clone() * one_minus.clone();
            return Ok(DPResult {
                payoff: PayoffPair::from_normalized(v1, v2, &g),
                horizon,
                tail_bound: bound,
            });
        }
        if horizon >= MAX_HORIZON {
            return Err(DuelError::ToleranceUnachievable {
                horizon,
                achieved: scalar::to_f64(&bound),
                tolerance: scalar::to_f64(tolerance),
            });
        }
        horizon += 1;
        disc = disc * g.clone();
        let lump = disc.clone() / one_minus.clone();
        let mut next: HashMap<(A::Memory, B::Memory), T> = HashMap::with_capacity(dist.len());
        let mut alive = T::zero();
        for ((m1, m2), mass) in dist {
            for b in branches(a1, a2, &m1, &m2, params.p1(), params.p2()) {
                for (n, s) in b.sole.iter().enumerate() {
                    totals[n] = totals[n].clone() + lump.clone() * mass.clone() * s.clone();
                }
                if b.survive.is_zero() {
                    continue;
                }
                let w = mass.clone() * b.survive;
                alive = alive + w.clone();
                add_mass(&mut next, b.next, w);
            }
        }
        for total in totals.iter_mut() {
            *total = total.clone() + disc.clone() * alive.clone();
        }
        dist = next;
    }
}

fn add_mass<K: Eq + Hash, T: Scalar>(map: &mut HashMap<K, T>, key: K, w: T) {
    match map.get_mut(&key) {
        Some(m) => *m = m.clone() + w,
        None => {
            map.insert(key, w);
        }
    }
}

/// Limit of the normalized payoffs as γ → 1: the probability of ending as
/// the sole survivor plus the probability that both stay alive forever.
///
/// Memory pairs from which no shot can ever occur keep both alive with
/// certainty. Every other state leaks mass, so the remaining system is
/// nonsingular.
pub fn unit_discount_limit<T, A, B>(a1: &A, a2: &B, p1: &T, p2: &T) -> Result<[T; 2]>
where
    T: Scalar,
    A: Automaton<T>,
    B: Automaton<T>,
{
    let chain = alive_chain(a1, a2, p1, p2, usize::MAX).expect("uncapped enumeration");
    let n = chain.states.len();

    // Backward closure: states that can reach a shooting state.
    let mut reaches_shot = chain.shooting.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..n {
            if !reaches_shot[i] && chain.edges[i].iter().any(|(j, _)| reaches_shot[*j]) {
                reaches_shot[i] = true;
                changed = true;
            }
        }
    }
    if !reaches_shot[0] {
        return Ok([T::one(), T::one()]);
    }

    let transient: Vec<usize> = (0..n).filter(|&i| reaches_shot[i]).collect();
    let pos: HashMap<usize, usize> = transient.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let m = transient.len();
    let mut matrix = vec![vec![T::zero(); m]; m];
    let mut rhs = Vec::with_capacity(m);
    for (r, &i) in transient.iter().enumerate() {
        matrix[r][r] = T::one();
        let mut row = [chain.sole[i][0].clone(), chain.sole[i][1].clone()];
        for (j, w) in &chain.edges[i] {
            match pos.get(j) {
                Some(&c) => matrix[r][c] = matrix[r][c].clone() - w.clone(),
                None => {
                    row[0] = row[0].clone() + w.clone();
                    row[1] = row[1].clone() + w.clone();
                }
            }
        }
        rhs.push(row.to_vec());
    }
    let x = linalg::solve(matrix, rhs)?;
    let start = pos[&0];
    Ok([x[start][0].clone(), x[start][1].clone()])
}
