mod common;

use proptest::prelude::*;

use seqmeas::examples::{
    build_duopoly, build_example, build_validated, builtin, duopoly_analytics, duopoly_pure_profile,
    example5_copy_measure, first_mover_check, profile_is_pure, reaction, DuopolyParams, ExampleParams,
    EXAMPLE_NAMES,
};
use seqmeas::game::validate_game;
use seqmeas::measure::{measure_to_strategy, mix, Profile, Rule};
use seqmeas::solver::{SeqEqCertificate, SeqOptions};

fn params() -> ExampleParams {
    ExampleParams::default()
}

#[test]
fn duopoly_analytics_for_unit_demand() {
    let p = DuopolyParams::default();
    let an = duopoly_analytics(&p);
    assert!((an.cournot - 1.0 / 3.0).abs() < 1e-15);
    assert!((an.leader - 0.5).abs() < 1e-15);
    assert!((an.follower - 0.25).abs() < 1e-15);
    assert!((an.leader_profit - 1.0 / 8.0).abs() < 1e-15);
    assert!((an.cournot_profit - 1.0 / 9.0).abs() < 1e-15);
    assert!((an.follower_profit - 1.0 / 16.0).abs() < 1e-15);
    assert!((reaction(&p, an.cournot) - an.cournot).abs() < 1e-15);
}

#[test]
fn profit_derivatives_have_the_required_signs() {
    let p = DuopolyParams { a: 2.0, b: 0.7, cost: 0.3, ..DuopolyParams::default() };
    let h = 1e-3;
    let (x, y) = (0.4, 0.6);
    let f = |u: f64, v: f64| p.profit(u, v);
    let p11 = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
    let p12 = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
    assert!((p11 + 2.0 * p.b).abs() < 1e-6 && (p12 + p.b).abs() < 1e-6);
    assert!(p11 < p12 && p12 < 0.0);
}

#[test]
fn duopoly_game_is_valid_with_triangular_support() {
    let p = DuopolyParams::default();
    let spec = build_duopoly(&p).unwrap();
    let g = validate_game(spec.clone()).unwrap();
    let q = p.quantities();
    assert_eq!(q.len(), 101);
    assert!((q[100] - p.q_bar()).abs() < 1e-15 && p.q_bar() > duopoly_analytics(&p).leader);
    let d = spec.density[2].as_ref().unwrap();
    let n = q.len();
    for (i, x) in q.iter().enumerate() {
        let row = &d.values[i * n..(i + 1) * n];
        let total: f64 = row.iter().sum::<f64>() / n as f64;
        assert!((total - 1.0).abs() < 1e-12);
        for (j, s) in q.iter().enumerate() {
            let inside = (s - x).abs() < p.delta - 1e-9;
            let outside = (s - x).abs() > p.delta - 1e-9;
            if inside {
                assert!(row[j] > 0.0, "q = {x}, s = {s}");
            }
            if outside {
                assert_eq!(row[j], 0.0, "q = {x}, s = {s}");
            }
        }
    }
    assert_eq!(g.horizon(), 3);
}

#[test]
fn coarse_duopoly_grids_are_rejected() {
    // delta spans two cells of width 0.025
    let p = DuopolyParams { grid: 41, ..DuopolyParams::default() };
    assert_eq!(build_duopoly(&p).unwrap_err().code(), "GRID_TOO_COARSE");
    // three cells is enough
    build_duopoly(&DuopolyParams { grid: 61, ..DuopolyParams::default() }).unwrap();
    let bad = DuopolyParams { b: 0.0, ..DuopolyParams::default() };
    assert_eq!(build_duopoly(&bad).unwrap_err().code(), "INVALID_PARAMETERS");
}

#[test]
fn example3_table() {
    let spec = build_example(3, &ExampleParams { c: 0.9, ..params() }).unwrap();
    let g = validate_game(spec).unwrap();
    // density against the uniform base: 1.8 when the signal matches, 0.2 otherwise
    for (a, s, want) in [(0, 0, 1.8), (0, 1, 0.2), (1, 0, 0.2), (1, 1, 1.8)] {
        let play = [0, 0, a, s, 0];
        assert!((g.density(2, &play, s) * 0.5 - want * 0.5).abs() < 1e-15);
    }
    assert_eq!(g.payoff(0, &[0, 0, 0, 0, 1]), 4.0);
    assert_eq!(g.payoff(1, &[0, 0, 1, 0, 0]), 2.0);
    assert_eq!(build_example(3, &ExampleParams { c: 1.5, ..params() }).unwrap_err().code(), "INVALID_PARAMETERS");
}

#[test]
fn example2_action_grid() {
    let g = build_validated(2, &ExampleParams { k: 10, ..params() }).unwrap();
    let acts = g.spec().actions[1].coords.clone().unwrap();
    assert_eq!(acts.len(), 21);
    for (i, a) in acts.iter().enumerate() {
        assert!((a - (i as f64 - 10.0) / 10.0).abs() < 1e-15);
    }
    // Bob's signal is Ann's action
    for a in 0..21 {
        for s in 0..21 {
            let play = [1, 0, a, s, 0];
            assert_eq!(g.density(2, &play, s) > 0.0, a == s);
        }
    }
    assert_eq!(build_example(2, &ExampleParams { k: 0, ..params() }).unwrap_err().code(), "INVALID_PARAMETERS");
}

#[test]
fn example1_observes_the_product() {
    let g = build_validated(1, &ExampleParams { k: 4, ..params() }).unwrap();
    let a1 = g.spec().actions[1].coords.clone().unwrap();
    let sig = g.spec().signals[3].coords.clone().unwrap();
    for (i, x) in a1.iter().enumerate() {
        for b in 0..2 {
            for (j, s) in sig.iter().enumerate() {
                let play = [0, 0, i, 0, b, j, 0];
                let hit = (x * b as f64 - s).abs() < 1e-12;
                assert_eq!(g.density(3, &play, j) > 0.0, hit);
            }
        }
    }
}

#[test]
fn example5_is_a_two_period_decision() {
    let g = build_validated(5, &ExampleParams { k: 4, ..params() }).unwrap();
    assert_eq!(g.players(), &[1]);
    assert_eq!(g.horizon(), 3);
    assert_eq!(g.spec().actions[1].coords.as_ref().unwrap(), &vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    // the copy measure puts the second action on the first
    let m = example5_copy_measure(&g).unwrap();
    let space = g.space(1).unwrap();
    for (leaf, &x) in m.mass.iter().enumerate() {
        let (_, acts) = space.decode_leaf(leaf);
        assert_eq!(x, if acts == [0, 0] { 1.0 } else { 0.0 });
    }
    let half = mix(&[m, Profile::uniform(&g).measures[0].clone()], &[0.5, 0.5]).unwrap();
    let s = measure_to_strategy(&g, &half).unwrap();
    let Rule::Defined(r) = &s.rules[1][0] else { panic!("rule at first action 0 is defined") };
    assert!(r.iter().all(|&x| x > 0.0));
}

#[test]
fn builtins_by_name() {
    for name in EXAMPLE_NAMES {
        let spec = builtin(name, &params(), &DuopolyParams::default()).unwrap();
        validate_game(spec).unwrap();
    }
    assert_eq!(builtin("ex9", &params(), &DuopolyParams::default()).unwrap_err().code(), "INVALID_PARAMETERS");
}

fn trivial_certificate(limit: Profile) -> SeqEqCertificate {
    let o = SeqOptions::default();
    SeqEqCertificate {
        limit,
        sequence: Vec::new(),
        schedule: o.schedule,
        eps_target: o.eps_target,
        nash_tol: o.nash.tol,
        conv_tol: o.conv_tol,
        seed: 0,
        converged: false,
        burn_in: 0,
        detail: String::new(),
    }
}

#[test]
fn first_mover_check_reports() {
    let p = DuopolyParams::default();
    let g = validate_game(build_duopoly(&p).unwrap()).unwrap();
    let pure = duopoly_pure_profile(&g, &p).unwrap();
    assert!(profile_is_pure(&g, &pure, 1e-12));
    assert!(!profile_is_pure(&g, &Profile::uniform(&g), 1e-12));
    let cert = trivial_certificate(pure);
    // Cournot against its best reply earns about 1/9, short of 1/8 - 0.01
    let r = first_mover_check(&cert, &g, &p, 0.01).unwrap();
    assert!(!r.holds && r.pure);
    // grid rounding: the leader plays 0.33 and the follower its reply rounded to the grid
    let q = p.quantities();
    let reply = q
        .iter()
        .cloned()
        .min_by(|a, b| (a - reaction(&p, q[33])).abs().partial_cmp(&(b - reaction(&p, q[33])).abs()).unwrap())
        .unwrap();
    assert!((r.leader_payoff - p.profit(q[33], reply)).abs() < 1e-12);
    assert!(r.text.contains("limit is pure: true"));
    let range = g.payoff_range(1);
    assert!(first_mover_check(&trivial_certificate(Profile::uniform(&g)), &g, &p, range).unwrap().holds);
    // a certificate for another game is refused
    let other = DuopolyParams { delta: 0.1, ..p.clone() };
    assert!(first_mover_check(&cert, &g, &other, 0.02).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn first_mover_chain_holds(a in 0.5f64..5.0, b in 0.1f64..3.0, frac in 0.0f64..0.9) {
        let p = DuopolyParams { a, b, cost: frac * a, ..DuopolyParams::default() };
        let an = duopoly_analytics(&p);
        prop_assert!(an.leader_profit > an.cournot_profit);
        prop_assert!(an.cournot_profit > an.follower_profit);
        prop_assert!((reaction(&p, an.cournot) - an.cournot).abs() <= 1e-12 * an.cournot.max(1.0));
        prop_assert!((an.follower - reaction(&p, an.leader)).abs() <= 1e-15);
        // the leader's quantity maximizes profit along the reaction curve
        for i in 0..=50 {
            let x = p.q_bar() * i as f64 / 50.0;
            prop_assert!(p.profit(x, reaction(&p, x)) <= an.leader_profit + 1e-12);
        }
    }
}
