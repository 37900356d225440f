//! Reproduction checks shared by the acceptance test target and the CLI.
//!
//! Each check returns a [`CriterionReport`] made of named sub-checks, so a
//! failure says exactly which claim did not reproduce. Random parameters
//! come from a pinned ChaCha stream and are drawn from [0.05, 0.95] to stay
//! away from the degenerate edges of the parameter box.

use std::time::Instant;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::closed_form::{
    self, cooperation_gap, deviation_gain, early_shoot_skip_gain_at_unit_discount, h1, h1_via_fbar, h2,
    rederived_deviation_gain, rederived_skip_gain_at_unit_discount, v_profile, v_stationary, DeviationClass,
};
use crate::equilibrium::{check_ne, deviation_payoff, find_gamma0, periodic_region_scan, stationary_ne_scan, Verdict};
use crate::error::Result;
use crate::evaluator::exact_payoff;
use crate::game::{Action, GameParams, Player};
use crate::mc::mc_payoff;
use crate::scalar::ratio;
use crate::strategy::{DeviationPlan, StrategySpec};
use crate::Rational;

pub const SEED: u64 = 20_240_917;
const EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<SubCheck>,
    pub seconds: f64,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// One summary line, then one indented line per sub-check.
    pub fn render(&self) -> String {
        let mut out = format!(
            "[{}] criterion {:>2}: {} ({:.2}s)\n",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds
        );
        for c in &self.checks {
            out.push_str(&format!(
                "    {} {}: {}\n",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.detail
            ));
        }
        out
    }
}

struct Builder {
    id: u8,
    title: &'static str,
    started: Instant,
    checks: Vec<SubCheck>,
}

impl Builder {
    fn new(id: u8, title: &'static str) -> Self {
        Builder {
            id,
            title,
            started: Instant::now(),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(SubCheck {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    /// Records a max-error comparison against a tolerance.
    fn within(&mut self, name: &str, worst: f64, tolerance: f64) {
        self.check(name, worst <= tolerance, format!("max |error| = {worst:.3e} (tolerance {tolerance:.0e})"));
    }

    fn finish(mut self, limit_seconds: Option<f64>) -> CriterionReport {
        let seconds = self.started.elapsed().as_secs_f64();
        if let Some(limit) = limit_seconds {
            self.check("runtime", seconds < limit, format!("{seconds:.2}s (limit {limit}s)"));
        }
        CriterionReport {
            id: self.id,
            title: self.title,
            checks: self.checks,
            seconds,
        }
    }
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    r.set_stream(stream);
    r
}

fn interior(r: &mut ChaCha8Rng) -> f64 {
    r.random_range(0.05..0.95)
}

fn random_params(r: &mut ChaCha8Rng) -> GameParams<f64> {
    GameParams::new(interior(r), interior(r), interior(r)).expect("interior parameters")
}

fn spec(text: &str) -> StrategySpec<f64> {
    text.parse().expect("valid spec literal")
}

/// Denominator shared by the grim gain formulas.
fn shared_den(p: &GameParams<f64>) -> f64 {
    1.0 - p.gamma() * p.joint_miss()
}

pub fn stationary_closed_form_matches_solver() -> Result<CriterionReport> {
    let mut b = Builder::new(1, "stationary closed form agrees with the solver");
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = random_params(&mut r);
        let (x1, x2) = (r.random::<f64>(), r.random::<f64>());
        let closed = v_stationary(&p, &x1, &x2);
        let solved = exact_payoff(&StrategySpec::stationary(x1)?, &StrategySpec::stationary(x2)?, &p, &1e-12)?;
        worst = worst
            .max((closed.v1 - solved.payoff.v1).abs())
            .max((closed.v2 - solved.payoff.v2).abs());
    }
    b.within("1000 random stationary profiles", worst, 1e-9);
    Ok(b.finish(Some(10.0)))
}

pub fn family_closed_forms_match_solver() -> Result<CriterionReport> {
    let mut b = Builder::new(2, "schedule-family closed forms agree with the solver");
    let mut r = rng(2);
    let points: Vec<GameParams<f64>> = (0..100).map(|_| random_params(&mut r)).collect();
    let mut profiles = vec![spec("C"), spec("D")];
    for k in 1..=8 {
        profiles.push(StrategySpec::early_shoot(k)?);
        profiles.push(StrategySpec::late_shoot(k)?);
        profiles.push(StrategySpec::periodic(k)?);
    }
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    for s in &profiles {
        for p in &points {
            let closed = v_profile(s, s, p)?;
            let solved = exact_payoff(s, s, p, &1e-12)?.payoff;
            let e = (closed.v1 - solved.v1).abs().max((closed.v2 - solved.v2).abs());
            if e > worst {
                worst = e;
                worst_at = s.to_string();
            }
        }
    }
    b.within(&format!("{} profiles x 100 parameter points (worst at {worst_at})", profiles.len()), worst, 1e-9);
    Ok(b.finish(Some(30.0)))
}

pub fn degenerate_schedules_exact() -> Result<CriterionReport> {
    let mut b = Builder::new(3, "degenerate schedules reduce exactly to C or D");
    let points: [(i64, i64, i64); 4] = [(1, 1, 1), (9, 3, 5), (1, 7, 8), (7, 2, 9)];
    let parse = |t: &str| -> StrategySpec<Rational> { t.parse().expect("valid spec literal") };
    let (mut ok_cd, mut ok_p, mut ok_dc) = (true, true, true);
    for (g, a, c) in points {
        let p: GameParams<Rational> = GameParams::new(ratio(g, 10), ratio(a, 10), ratio(c, 10))?;
        let tol: Rational = ratio(1, 1_000_000_000);
        let value = |t: &str| exact_payoff(&parse(t), &parse(t), &p, &tol).map(|r| r.payoff);
        let d = value("D")?;
        let c = value("C")?;
        ok_cd &= value("CD:1")? == d && closed_form::v_late_shoot(&p, 1) == d;
        ok_p &= value("P:0")? == d && closed_form::v_periodic(&p, 0) == d;
        ok_dc &= value("DC:0")? == c && closed_form::v_early_shoot(&p, 0) == c;
        ok_dc &= c.v1.is_one() && !d.v1.is_zero();
    }
    b.check("CD(1) = D", ok_cd, "rational solver and closed form, 4 parameter points");
    b.check("P(0) = D", ok_p, "rational solver and closed form, 4 parameter points");
    b.check("DC(0) = C", ok_dc, "rational solver and closed form, 4 parameter points");
    Ok(b.finish(None))
}

pub fn only_corner_stationary_equilibria() -> Result<CriterionReport> {
    let mut b = Builder::new(4, "mutual cooperation and mutual defection are the only stationary equilibria");
    let mut r = rng(4);
    let mut bad = Vec::new();
    for _ in 0..20 {
        let p = random_params(&mut r);
        let found = stationary_ne_scan(&p, 101, EPSILON)?;
        if found != vec![(0.0, 0.0), (1.0, 1.0)] {
            bad.push(format!("{p:?}: {found:?}"));
        }
    }
    b.check(
        "101x101 grid, 20 parameter triples",
        bad.is_empty(),
        if bad.is_empty() { "exactly {(0,0), (1,1)} every time".into() } else { bad.join("; ") },
    );
    Ok(b.finish(None))
}

fn grim_grid(stream: u64) -> Vec<GameParams<f64>> {
    let mut r = rng(stream);
    let pairs: Vec<(f64, f64)> = (0..10).map(|_| (interior(&mut r), interior(&mut r))).collect();
    (1..=19)
        .flat_map(|i| {
            let g = i as f64 * 0.05;
            pairs.iter().map(move |&(p1, p2)| GameParams::new(g, p1, p2).expect("interior parameters"))
        })
        .collect()
}

pub fn grim_cooperation_equilibrium() -> Result<CriterionReport> {
    let mut b = Builder::new(5, "grim cooperation is an equilibrium");
    let grim_c = spec("grim-C");
    let first_shot = DeviationPlan::Onset {
        onset: 1,
        after: Action::Shoot,
    };
    let mut not_ne = 0;
    let (mut printed_err, mut rederived_err): (f64, f64) = (0.0, 0.0);
    let grid = grim_grid(5);
    for p in &grid {
        if check_ne(&grim_c, &grim_c, p, EPSILON)?.verdict != Verdict::NeWithinEpsilon {
            not_ne += 1;
        }
        let gap = 1.0 - deviation_payoff(&grim_c, &grim_c, p, Player::One, first_shot)?;
        printed_err = printed_err.max((deviation_gain(&DeviationClass::GrimCooperateFirstShot, p)? - gap).abs());
        rederived_err =
            rederived_err.max((rederived_deviation_gain(&DeviationClass::GrimCooperateFirstShot, p)? - gap).abs());
    }
    b.check(
        "equilibrium verdict",
        not_ne == 0,
        format!("{} of {} grid points certified", grid.len() - not_ne, grid.len()),
    );
    b.within("published gain γ³p₂(1−p₁)/D matches solver gap", printed_err, 1e-9);
    b.within("re-derived gain γ²p₂(1−p₁)/D matches solver gap", rederived_err, 1e-9);
    Ok(b.finish(None))
}

pub fn early_shoot_threshold() -> Result<CriterionReport> {
    let mut b = Builder::new(6, "grim early-shoot profiles are equilibria above a discount threshold");
    let mut r = rng(6);
    let pairs: Vec<(f64, f64)> = (0..10).map(|_| (interior(&mut r), interior(&mut r))).collect();
    let (mut below_one, mut verified, mut total) = (0, 0, 0);
    let (mut printed_err, mut rederived_err, mut sup_gamma0): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 1..=8u32 {
        for &(p1, p2) in &pairs {
            total += 1;
            let g0 = find_gamma0(k, p1, p2, 1e-6)?;
            below_one += usize::from(g0.gamma0 < 1.0);
            verified += usize::from(g0.min_verified_gain > 0.0);
            sup_gamma0 = sup_gamma0.max(g0.gamma0);
            let printed: f64 = early_shoot_skip_gain_at_unit_discount(k, &p1, &p2);
            let fixed: f64 = rederived_skip_gain_at_unit_discount(k, k, &p1, &p2);
            printed_err = printed_err.max((printed - g0.unit_gain).abs());
            rederived_err = rederived_err.max((fixed - g0.unit_gain).abs());
        }
    }
    b.check("threshold below 1", below_one == total, format!("{below_one}/{total} (largest γ₀ = {sup_gamma0:.6})"));
    b.check("positive gain at 100 points above the threshold", verified == total, format!("{verified}/{total}"));
    b.within("published limit (1−p₁)ᴷ(1−p₂)ᴷp₂/(p₁+(1−p₁)p₂) matches solver", printed_err, 1e-12);
    b.within("re-derived limit p₂(1−p₁)ᴷ⁻¹(1−p₂)ᴷ/(p₁+p₂−p₁p₂) matches solver", rederived_err, 1e-12);
    Ok(b.finish(None))
}

pub fn late_shoot_not_equilibrium() -> Result<CriterionReport> {
    let mut b = Builder::new(7, "grim late-shoot profiles are not equilibria");
    let grid = grim_grid(7);
    let mut failures_by_k = Vec::new();
    let (mut printed_err, mut rederived_err): (f64, f64) = (0.0, 0.0);
    for k in 1..=8u32 {
        let s = StrategySpec::late_shoot(k)?.grim()?;
        let mut ne = 0;
        for p in &grid {
            let cert = check_ne(&s, &s, p, EPSILON)?;
            if cert.verdict == Verdict::NotNE {
                let witness = cert.witness.as_ref().map_or(f64::NAN, |w| w.gain);
                let printed = -deviation_gain(&DeviationClass::GrimLateShootEarlyStart { k }, p)?;
                printed_err = printed_err.max((witness - printed).abs());
            } else {
                ne += 1;
            }
            if k >= 2 {
                let early = DeviationPlan::Onset {
                    onset: k - 1,
                    after: Action::Shoot,
                };
                let gain = deviation_payoff(&s, &s, p, Player::One, early)? - cert.baseline[0];
                let fixed = p.gamma().powi(k as i32) * p.p1() * p.p2() / shared_den(p);
                rederived_err = rederived_err.max((gain - fixed).abs());
            }
        }
        if ne > 0 {
            failures_by_k.push(format!("K={k}: {ne} points certified as equilibria"));
        }
    }
    b.check(
        "not-an-equilibrium verdict for K = 1..8",
        failures_by_k.is_empty(),
        if failures_by_k.is_empty() { "all grid points".into() } else { failures_by_k.join("; ") },
    );
    b.within("witness gain matches published p₂γᴷ(1−γ(1−p₁))/D (where a witness exists)", printed_err, 1e-9);
    b.within("one-round-early gain matches re-derived γᴷp₁p₂/D (K ≥ 2)", rederived_err, 1e-9);
    Ok(b.finish(None))
}

pub fn periodic_equilibrium_region() -> Result<CriterionReport> {
    let mut b = Builder::new(8, "grim periodic profiles are equilibria on a box around their center");
    let v = h1(1);
    b.check("h₁(1) = 0.60703 ± 1e-4", (v - 0.60703).abs() <= 1e-4, format!("h₁(1) = {v:.7}"));
    let v = h2(2);
    b.check("h₂(2) = 0.064222 ± 1e-5", (v - 0.064222).abs() <= 1e-5, format!("h₂(2) = {v:.7}"));
    let ordered: Vec<u32> = (2..=50).filter(|&m| !(h1(m) > h2(m) && h2(m) > 0.0)).collect();
    b.check("h₁(M) > h₂(M) > 0 for M = 2..50", ordered.is_empty(), format!("violations: {ordered:?}"));
    let drift = (1..=50).map(|m| (h1(m) - h1_via_fbar(m)).abs()).fold(0.0, f64::max);
    b.within("expanded h₁ equals f̄ at the center", drift, 1e-12);

    let mut deltas = Vec::new();
    let (mut empty, mut not_ne, mut exact_bad) = (Vec::new(), Vec::new(), Vec::new());
    for m in 1..=12u32 {
        let scan = periodic_region_scan(m, 4, 0.02, EPSILON)?;
        deltas.push(format!("{m}:{:.4}", scan.empirical_delta));
        if scan.empirical_delta <= 0.0 {
            empty.push(m);
        }
        if scan.center_verdict != Verdict::NeWithinEpsilon
            || scan.corner_verdicts.iter().any(|v| *v != Verdict::NeWithinEpsilon)
        {
            not_ne.push(m);
        }
        if !scan.exact_center_positive {
            exact_bad.push(m);
        }
    }
    b.check("positive box half-width for M = 1..12", empty.is_empty(), format!("half-widths {}", deltas.join(" ")));
    b.check(
        "solver certifies the center and box corners",
        not_ne.is_empty(),
        if not_ne.is_empty() { "all M".into() } else { format!("failed for M = {not_ne:?}") },
    );
    b.check(
        "exact sign of every early-shot gain at the center",
        exact_bad.is_empty(),
        if exact_bad.is_empty() { "positive for all M".into() } else { format!("failed for M = {exact_bad:?}") },
    );
    Ok(b.finish(Some(120.0)))
}

pub fn cooperation_gap_matches_solver() -> Result<CriterionReport> {
    let mut b = Builder::new(9, "cooperation beats defection by the closed-form gap");
    let mut r = rng(9);
    let (c, d) = (spec("C"), spec("D"));
    let (mut worst, mut min_gap): (f64, f64) = (0.0, f64::INFINITY);
    for _ in 0..1000 {
        let p = random_params(&mut r);
        let pc = exact_payoff(&c, &c, &p, &1e-12)?.payoff;
        let pd = exact_payoff(&d, &d, &p, &1e-12)?.payoff;
        for (player, diff) in [(Player::One, pc.total1 - pd.total1), (Player::Two, pc.total2 - pd.total2)] {
            let gap = cooperation_gap(&p, player);
            worst = worst.max((gap - diff).abs());
            min_gap = min_gap.min(gap);
        }
    }
    b.within("1000 parameter points, both players", worst, 1e-9);
    b.check("gap strictly positive", min_gap > 0.0, format!("smallest gap {min_gap:.3e}"));
    Ok(b.finish(None))
}

pub fn monte_carlo_soundness() -> Result<CriterionReport> {
    let mut b = Builder::new(10, "Monte Carlo agrees with the exact payoff and is reproducible");
    let p = GameParams::new(0.5, 0.5, 0.5)?;
    let d = spec("D");
    let first = mc_payoff(&d, &d, &p, 1_000_000, SEED, None)?;
    let z = (first.estimate.v1 - 5.0 / 7.0) / first.stderr[0];
    b.check(
        "|estimate − 5/7| ≤ 4·stderr",
        z.abs() <= 4.0,
        format!("v1 = {:.6}, stderr = {:.2e}, z = {z:.2}", first.estimate.v1, first.stderr[0]),
    );
    let second = mc_payoff(&d, &d, &p, 1_000_000, SEED, None)?;
    b.check("bit-identical rerun", first == second, "same seed, same inputs");
    Ok(b.finish(Some(60.0)))
}

pub type Criterion = fn() -> Result<CriterionReport>;

/// Every criterion in order.
pub const CRITERIA: [Criterion; 10] = [
    stationary_closed_form_matches_solver,
    family_closed_forms_match_solver,
    degenerate_schedules_exact,
    only_corner_stationary_equilibria,
    grim_cooperation_equilibrium,
    early_shoot_threshold,
    late_shoot_not_equilibrium,
    periodic_equilibrium_region,
    cooperation_gap_matches_solver,
    monte_carlo_soundness,
];

pub fn run_all() -> Result<Vec<CriterionReport>> {
    CRITERIA.iter().map(|c| c()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_rendering() {
        let mut b = Builder::new(3, "demo");
        b.check("a", true, "fine");
        b.within("b", 2e-9, 1e-9);
        let r = b.finish(None);
        assert!(!r.passed());
        let text = r.render();
        assert!(text.starts_with("[FAIL] criterion  3: demo"));
        assert!(text.contains("ok   a: fine"));
        assert!(text.contains("FAIL b: max |error| = 2.000e-9"));
    }

    #[test]
    fn grid_shape() {
        let g = grim_grid(5);
        assert_eq!(g.len(), 190);
        assert_eq!(grim_grid(5), g);
    }

    #[test]
    fn degenerate_schedules() {
        assert!(degenerate_schedules_exact().unwrap().passed());
    }
}
