//! Cross-module properties: closed forms, the exact solver, best responses
//! and the simulator must agree with each other.

use approx::assert_abs_diff_eq;
use duel_core::closed_form::{v_profile, v_stationary};
use duel_core::equilibrium::{best_response_vs_automaton, check_ne, stationary_ne_scan, Verdict};
use duel_core::evaluator::exact_payoff;
use duel_core::mc::mc_payoff;
use duel_core::scalar::parse_scalar;
use duel_core::{ExactParams, ExactSpec, Params, Player, Rational, Spec};
use proptest::prelude::*;

fn spec(s: &str) -> Spec {
    s.parse().unwrap()
}

fn exact(s: &str) -> Rational {
    parse_scalar(s).unwrap()
}

fn interior() -> impl Strategy<Value = f64> {
    0.02f64..0.98
}

#[test]
fn rational_solver_equals_family_closed_forms_exactly() {
    let params = ExactParams::new(exact("9/10"), exact("3/10"), exact("1/2")).unwrap();
    let tol = exact("1e-30");
    for text in ["C", "D", "x:1/3", "DC:3", "CD:2", "P:3", "grim-P:2", "grim-DC:1"] {
        let s: ExactSpec = text.parse().unwrap();
        let closed = v_profile(&s, &s, &params).unwrap();
        let solved = exact_payoff(&s, &s, &params, &tol).unwrap();
        assert_eq!(closed, solved.payoff, "{text}");
    }
}

#[test]
fn periodic_schedule_hand_computed() {
    // P(2) at γ = p1 = p2 = 1/2, totals: hold, hold, then shoot. With W the
    // value at the start of a period,
    // W = 1 + γ + γ²(1 + ¼·γ·2 + ¼·γ·W) = 29/16 + W/32, so W = 58/31.
    let params = ExactParams::new(exact("1/2"), exact("1/2"), exact("1/2")).unwrap();
    let tol = exact("1e-30");
    let p2: ExactSpec = "P:2".parse().unwrap();
    let r = exact_payoff(&p2, &p2, &params, &tol).unwrap();
    assert_eq!(r.payoff.total1, exact("58/31"));
    let d: ExactSpec = "D".parse().unwrap();
    let p0: ExactSpec = "P:0".parse().unwrap();
    assert_eq!(exact_payoff(&p0, &p0, &params, &tol).unwrap().payoff.v1, exact("5/7"));
    assert_eq!(exact_payoff(&d, &d, &params, &tol).unwrap().payoff.v1, exact("5/7"));
}

#[test]
fn stationary_scan_is_stable_under_refinement() {
    for (g, p1, p2) in [(0.9, 0.3, 0.5), (0.1, 0.9, 0.9), (0.5, 0.2, 0.7)] {
        let params = Params::new(g, p1, p2).unwrap();
        let coarse = stationary_ne_scan(&params, 11, 1e-9).unwrap();
        let fine = stationary_ne_scan(&params, 101, 1e-9).unwrap();
        assert_eq!(coarse, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(fine, coarse);
    }
}

#[test]
fn mixed_stationary_profile_is_refuted_by_shooting() {
    let params = Params::new(0.8, 0.4, 0.6).unwrap();
    let cert = check_ne(&spec("x:0.5"), &spec("x:0.5"), &params, 1e-9).unwrap();
    assert_eq!(cert.verdict, Verdict::NotNE);
    let w = cert.witness.unwrap();
    assert!(w.gain > 1e-9);
    assert!(cert.gains.iter().all(|g| *g > 1e-9));
}

#[test]
fn simulator_agrees_with_solver() {
    let params = Params::new(0.85, 0.35, 0.55).unwrap();
    for (a, b) in [("P:2", "x:0.4"), ("grim-CD:3", "DC:1"), ("grim-C", "x:0.2")] {
        let (s1, s2) = (spec(a), spec(b));
        let mc = mc_payoff(&s1, &s2, &params, 200_000, 11, None).unwrap();
        let exact = exact_payoff(&s1, &s2, &params, &1e-12).unwrap().payoff;
        assert!((mc.estimate.v1 - exact.v1).abs() <= 5.0 * mc.stderr[0] + 1e-12, "{a},{b}");
        assert!((mc.estimate.v2 - exact.v2).abs() <= 5.0 * mc.stderr[1] + 1e-12, "{a},{b}");
        assert_eq!(mc.truncated, 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn best_response_never_below_compliance(
        g in interior(), p1 in interior(), p2 in interior(),
        family in prop::sample::select(vec!["grim-C", "grim-DC:2", "grim-CD:3", "grim-P:2", "D", "x:0.4", "P:3"]),
    ) {
        let params = Params::new(g, p1, p2).unwrap();
        let s = spec(family);
        let on_path = exact_payoff(&s, &s, &params, &1e-12).unwrap().payoff;
        let br1 = best_response_vs_automaton(&s.compile(), &params, 1e-10, Player::One).unwrap();
        let br2 = best_response_vs_automaton(&s.compile(), &params, 1e-10, Player::Two).unwrap();
        prop_assert!(br1.value >= on_path.v1 - 1e-9);
        prop_assert!(br2.value >= on_path.v2 - 1e-9);
    }

    #[test]
    fn swapping_players_swaps_payoffs(
        g in interior(), p1 in interior(), p2 in interior(),
        a in prop::sample::select(vec!["C", "D", "x:0.3", "DC:2", "CD:2", "P:1", "grim-P:3"]),
        b in prop::sample::select(vec!["C", "D", "x:0.7", "DC:1", "CD:4", "P:2", "grim-C"]),
    ) {
        let params = Params::new(g, p1, p2).unwrap();
        let forward = exact_payoff(&spec(a), &spec(b), &params, &1e-12).unwrap().payoff;
        let back = exact_payoff(&spec(b), &spec(a), &params.swapped(), &1e-12).unwrap().payoff;
        prop_assert!((forward.v1 - back.v2).abs() < 1e-12);
        prop_assert!((forward.v2 - back.v1).abs() < 1e-12);
    }

    #[test]
    fn payoffs_stay_in_the_unit_range(
        g in interior(), p1 in interior(), p2 in interior(),
        x1 in 0.0f64..=1.0, x2 in 0.0f64..=1.0,
    ) {
        let params = Params::new(g, p1, p2).unwrap();
        let v = v_stationary(&params, &x1, &x2);
        prop_assert!(v.v1 >= -1e-12 && v.v1 <= 1.0 + 1e-12);
        prop_assert!(v.v2 >= -1e-12 && v.v2 <= 1.0 + 1e-12);
        let solved = exact_payoff(&spec(&format!("x:{x1}")), &spec(&format!("x:{x2}")), &params, &1e-12).unwrap();
        assert_abs_diff_eq!(solved.payoff.v1, v.v1, epsilon = 1e-9);
    }
}
