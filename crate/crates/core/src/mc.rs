//! Seeded Monte Carlo estimates of profile payoffs.
//!
//! Episode `i` draws from its own ChaCha stream, so results do not depend on
//! how episodes are scheduled across threads. Moments are accumulated per
//! fixed-size chunk and merged in chunk order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::closed_form::{v_stationary, PayoffPair};
use crate::error::{DuelError, Result};
use crate::game::{Action, GameParams};
use crate::strategy::{Automaton, StrategySpec};

const CHUNK: u64 = 4096;

/// Hard cap on simulated rounds per episode.
pub const MAX_ROUNDS_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct MCResult {
    pub estimate: PayoffPair<f64>,
    pub episodes: u64,
    /// Standard error of the normalized estimates `(v1, v2)`.
    pub stderr: [f64; 2],
    pub seed: u64,
    /// Episodes that hit `max_rounds` with both players alive and no exact
    /// continuation available. Nobody shooting again, or both players
    /// shooting with fixed probabilities, counts as exact.
    pub truncated: u64,
    pub max_rounds: u64,
}

/// Smallest `T` with `γ^T/(1-γ) < 1e-12`, capped at [`MAX_ROUNDS_CAP`].
pub fn default_max_rounds(gamma: f64) -> u64 {
    let t = ((1e-12 * (1.0 - gamma)).ln() / gamma.ln()).floor() as u64 + 1;
    t.clamp(1, MAX_ROUNDS_CAP)
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: [f64; 2],
    m2: [f64; 2],
    truncated: u64,
}

impl Moments {
    fn push(&mut self, x: [f64; 2]) {
        self.n += 1;
        let n = self.n as f64;
        for i in 0..2 {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / n;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let (na, nb, nn) = (self.n as f64, other.n as f64, n as f64);
        let mut out = Moments {
            n,
            truncated: self.truncated + other.truncated,
            ..Moments::default()
        };
        for i in 0..2 {
            let d = other.mean[i] - self.mean[i];
            out.mean[i] = self.mean[i] + d * nb / nn;
            out.m2[i] = self.m2[i] + other.m2[i] + d * d * na * nb / nn;
        }
        out
    }
}

pub fn mc_payoff(
    spec1: &StrategySpec<f64>,
    spec2: &StrategySpec<f64>,
    params: &GameParams<f64>,
    episodes: u64,
    seed: u64,
    max_rounds: Option<u64>,
) -> Result<MCResult> {
    mc_payoff_automata(&spec1.compile(), &spec2.compile(), params, episodes, seed, max_rounds)
}

pub fn mc_payoff_automata<A, B>(
    a1: &A,
    a2: &B,
    params: &GameParams<f64>,
    episodes: u64,
    seed: u64,
    max_rounds: Option<u64>,
) -> Result<MCResult>
where
    A: Automaton<f64> + Sync,
    B: Automaton<f64> + Sync,
{
    if episodes == 0 {
        return Err(DuelError::InvalidParameter {
            name: "episodes",
            value: "0".into(),
            reason: "need at least one episode",
        });
    }
    let max_rounds = max_rounds.unwrap_or_else(|| default_max_rounds(*params.gamma()));
    let chunks = episodes.div_ceil(CHUNK);
    let partial: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            for e in c * CHUNK..((c + 1) * CHUNK).min(episodes) {
                let (v, truncated) = episode(a1, a2, params, seed, e, max_rounds);
                m.push(v);
                m.truncated += truncated as u64;
            }
            m
        })
        .collect();
    let total = partial.into_iter().fold(Moments::default(), Moments::merge);
    let n = total.n as f64;
    let stderr = if total.n > 1 {
        [0, 1].map(|i| (total.m2[i] / (n - 1.0)).sqrt() / n.sqrt())
    } else {
        [0.0, 0.0]
    };
    Ok(MCResult {
        estimate: PayoffPair::from_normalized(total.mean[0], total.mean[1], params.gamma()),
        episodes,
        stderr,
        seed,
        truncated: total.truncated,
        max_rounds,
    })
}

fn draw(rng: &mut ChaCha8Rng, p: f64) -> bool {
    p >= 1.0 || (p > 0.0 && rng.random::<f64>() < p)
}

/// Normalized payoffs of one episode and whether it was cut off.
fn episode<A, B>(
    a1: &A,
    a2: &B,
    params: &GameParams<f64>,
    seed: u64,
    index: u64,
    max_rounds: u64,
) -> ([f64; 2], bool)
where
    A: Automaton<f64>,
    B: Automaton<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let (g, p1, p2) = (*params.gamma(), *params.p1(), *params.p2());
    let scale = 1.0 - g;
    let mut m1 = a1.initial();
    let mut m2 = a2.initial();
    // Normalized weight of round t is (1-γ)γ^t; a lone survivor at t gets γ^t.
    let mut total = [scale, scale];
    let mut disc = 1.0;
    for _ in 0..max_rounds {
        if a1.quiescent(&m1) && a2.quiescent(&m2) {
            return ([total[0] + disc * g, total[1] + disc * g], false);
        }
        disc *= g;
        let f1 = if draw(&mut rng, a1.emit(&m1)) { Action::Shoot } else { Action::Hold };
        let f2 = if draw(&mut rng, a2.emit(&m2)) { Action::Shoot } else { Action::Hold };
        let hit2 = f1.is_shoot() && draw(&mut rng, p1);
        let hit1 = f2.is_shoot() && draw(&mut rng, p2);
        match (hit1, hit2) {
            (false, false) => {
                total[0] += disc * scale;
                total[1] += disc * scale;
            }
            (false, true) => return ([total[0] + disc, total[1]], false),
            (true, false) => return ([total[0], total[1] + disc], false),
            (true, true) => return (total, false),
        }
        m1 = a1.advance(&m1, f1, f2);
        m2 = a2.advance(&m2, f2, f1);
    }
    if let (Some(x1), Some(x2)) = (a1.settled(&m1), a2.settled(&m2)) {
        let w = v_stationary(params, &x1, &x2);
        return ([total[0] + disc * (w.v1 - scale), total[1] + disc * (w.v2 - scale)], false);
    }
    (total, true)
}
