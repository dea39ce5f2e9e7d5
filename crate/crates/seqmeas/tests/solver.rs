mod common;

use std::collections::BTreeMap;

use seqmeas::examples::{build_example, ex2_off_path_profile, ex3_signal_ignoring, ExampleParams};
use seqmeas::game::{validate_game, GameSpec, Grid, Table, ValidatedGame};
use seqmeas::measure::{induce_measure, measure_to_strategy, mix, BehaviorStrategy, Profile, Rule, StrategicMeasure};
use seqmeas::play::expected_payoff;
use seqmeas::random_game::{random_game, random_profile, RandomGameOptions};
use seqmeas::relevance::{all_atomic_relevant_sets, atomic_relevant_sets, RelevantSet};
use seqmeas::solver::{
    analyze_profile, best_continuation, check_sequential, epsilon_optimal_at, level_gaps, restricted_nash,
    restricted_spaces, sequential_equilibrium, solve_restricted, CheckOptions, NashOptions, RestrictedSpace,
    SeqOptions, Verdict,
};

fn ex(which: usize, c: f64, k: usize) -> ValidatedGame {
    validate_game(build_example(which, &ExampleParams { c, k, ..ExampleParams::default() }).unwrap()).unwrap()
}

fn ex3_seq() -> SeqOptions {
    SeqOptions {
        schedule: vec![2, 4, 8, 16, 32],
        conv_tol: 1e-3,
        ..SeqOptions::default()
    }
}

/// Every pure continuation of `m` from own step `k`, or `None` past `cap`.
fn pure_continuations(game: &ValidatedGame, m: &StrategicMeasure, k: usize, cap: usize) -> Option<Vec<StrategicMeasure>> {
    let space = game.space(m.player).unwrap();
    let partial = measure_to_strategy(game, m).unwrap();
    let mut count = 1usize;
    for j in k..space.steps() {
        for info in 0..space.info_count[j] {
            count = count.saturating_mul(space.available(j, info).count().max(1));
        }
    }
    if count > cap {
        return None;
    }
    let mut slots: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for j in k..space.steps() {
        for info in 0..space.info_count[j] {
            let avail: Vec<usize> = space.available(j, info).collect();
            slots.push((j, info, if avail.is_empty() { vec![0] } else { avail }));
        }
    }
    let mut pols: Vec<Vec<Vec<usize>>> = vec![(0..space.steps()).map(|j| vec![0; space.info_count[j]]).collect()];
    for (j, info, avail) in slots {
        pols = pols
            .iter()
            .flat_map(|p| {
                avail.iter().map(move |&a| {
                    let mut q = p.clone();
                    q[j][info] = a;
                    q
                })
            })
            .collect();
    }
    let mut res = Vec::new();
    for pol in pols {
        let rules = (0..space.steps())
            .map(|j| {
                let a_n = space.act[j];
                let mut r = vec![0.0; space.info_count[j] * a_n];
                for info in 0..space.info_count[j] {
                    if j >= k {
                        r[info * a_n + pol[j][info]] = 1.0;
                        continue;
                    }
                    match &partial.rules[j][info] {
                        Rule::Defined(v) => r[info * a_n..(info + 1) * a_n].copy_from_slice(v),
                        Rule::Unconstrained => {
                            let avail: Vec<usize> = space.available(j, info).collect();
                            for &a in &avail {
                                r[info * a_n + a] = 1.0 / avail.len() as f64;
                            }
                        }
                    }
                }
                r
            })
            .collect();
        res.push(induce_measure(game, &BehaviorStrategy { player: m.player, rules }).unwrap());
    }
    Some(res)
}

#[test]
fn best_continuation_matches_exhaustive_enumeration() {
    let mut rng = common::rng(31);
    let mut checked = 0;
    for _ in 0..40 {
        let g = random_game(&mut rng, &RandomGameOptions::default());
        let p = random_profile(&mut rng, &g, 0.0);
        for f in all_atomic_relevant_sets(&g) {
            let m = p.get(f.player).unwrap();
            let Some(conts) = pure_continuations(&g, m, f.step, 1000) else { continue };
            let (value, witness) = best_continuation(&g, f.player, f.period, &f, &p, m).unwrap();
            let best = conts
                .iter()
                .map(|c| common::conditional(&g, &p.replace(c.clone()), &f, f.player).1)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((value - best).abs() <= 1e-10, "{value} vs {best}");
            let w = common::conditional(&g, &p.replace(witness.clone()), &f, f.player).1;
            assert!((w - value).abs() <= 1e-10);
            assert!(seqmeas::measure::is_continuation(&g, m, &witness, f.period).unwrap());
            checked += 1;
        }
    }
    assert!(checked > 50, "only {checked} sets small enough");
}

#[test]
fn best_continuation_of_the_whole_game_is_the_best_response() {
    let mut rng = common::rng(32);
    for _ in 0..20 {
        let g = random_game(&mut rng, &RandomGameOptions::default());
        let p = random_profile(&mut rng, &g, 0.0);
        for &pl in g.players() {
            let space = g.space(pl).unwrap();
            let t = space.periods[0];
            let f = RelevantSet::whole_period(&g, pl, t).unwrap();
            let m = p.get(pl).unwrap();
            let Some(conts) = pure_continuations(&g, m, 0, 1000) else { continue };
            let (value, _) = best_continuation(&g, pl, t, &f, &p, m).unwrap();
            let best = conts
                .iter()
                .map(|c| expected_payoff(&g, &p.replace(c.clone()), pl).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((value - best).abs() <= 1e-10);
            let an = analyze_profile(&g, &p, 1).unwrap();
            assert!((an[g.slot(pl).unwrap()].best_payoff - best).abs() <= 1e-10);
        }
    }
}

#[test]
fn best_continuation_errors() {
    let g = ex(3, 1.0, 10);
    let ann = induce_measure(&g, &BehaviorStrategy::pure(&g, 1, &[vec![0]])).unwrap();
    let p = Profile::uniform(&g).replace(ann);
    let r = atomic_relevant_sets(&g, 2, 2).unwrap().remove(1);
    let bob = p.get(2).unwrap().clone();
    assert_eq!(best_continuation(&g, 2, 2, &r, &p, &bob).unwrap_err().code(), "ZERO_REACH");
    assert_eq!(epsilon_optimal_at(&g, &p, &r, 0.1).unwrap_err().code(), "ZERO_REACH");
    assert_eq!(best_continuation(&g, 1, 2, &r, &p, &bob).unwrap_err().code(), "PLAYER_NOT_ACTIVE");
}

#[test]
fn epsilon_optimality_in_example3() {
    let g = ex(3, 0.9, 10);
    let l = atomic_relevant_sets(&g, 2, 2).unwrap().remove(0);
    let bob = |rules: Vec<f64>| induce_measure(&g, &BehaviorStrategy { player: 2, rules: vec![rules] }).unwrap();
    let matching = Profile::uniform(&g).replace(bob(vec![1.0, 0.0, 0.0, 1.0]));
    let (ok, gap) = epsilon_optimal_at(&g, &matching, &l, 0.01).unwrap();
    assert!(ok && gap == 0.0);
    let anti = Profile::uniform(&g).replace(bob(vec![0.0, 1.0, 1.0, 0.0]));
    let (ok, gap) = epsilon_optimal_at(&g, &anti, &l, 0.01).unwrap();
    assert!(!ok && gap > 0.0);
    // at l Ann is on L with probability 0.9: L pays 0.9*4 + 0.1*2, R pays 0.9*2 + 0.1*1
    assert!((gap - (3.8 - 1.9)).abs() < 1e-12);
    // eps at least the payoff range always holds
    let range = g.payoff_range(2);
    assert!(epsilon_optimal_at(&g, &anti, &l, range).unwrap().0);
}

#[test]
fn single_player_restricted_optimum() {
    let g = ex(4, 0.9, 10);
    for n in [2, 4, 16] {
        let spaces = restricted_spaces(&g, n).unwrap();
        let eq = restricted_nash(&g, &spaces, &NashOptions::default()).unwrap();
        assert!(eq.nash_gap <= 1e-12);
        assert!(spaces[0].contains(&g, &eq.profile.measures[0]));
        let an = analyze_profile(&g, &eq.profile, 1).unwrap();
        let want = spaces[0].compose(&g.spaces()[0], &an[0].backward.choice);
        let best = expected_payoff(&g, &Profile::new(&g, vec![want]).unwrap(), 1).unwrap();
        assert!((an[0].payoff - best).abs() <= 1e-12);
    }
}

#[test]
fn example3_restricted_equilibrium_survives_exhaustive_deviation() {
    let g = ex(3, 0.9, 10);
    let spaces = restricted_spaces(&g, 4).unwrap();
    let eq = restricted_nash(&g, &spaces, &NashOptions::default()).unwrap();
    assert!(eq.nash_gap <= 1e-6);
    for (slot, &pl) in g.players().iter().enumerate() {
        let here = expected_payoff(&g, &eq.profile, pl).unwrap();
        let space = &g.spaces()[slot];
        for pol in common::pure_policies(&g, pl) {
            let dev = spaces[slot].compose(space, &pol);
            let v = expected_payoff(&g, &eq.profile.replace(dev), pl).unwrap();
            assert!(v <= here + 1e-6, "player {pl}: {v} > {here}");
        }
    }
}

fn zero_sum_toy(a: [[f64; 2]; 2]) -> ValidatedGame {
    let flat: Vec<f64> = a.iter().flatten().copied().collect();
    let mut payoffs = BTreeMap::new();
    payoffs.insert(1, Table { mask: vec![2, 4], values: flat.clone() });
    payoffs.insert(2, Table { mask: vec![2, 4], values: flat.iter().map(|x| -x).collect() });
    validate_game(GameSpec {
        active: vec![0, 1, 2],
        actions: vec![Grid::trivial(), Grid::new(["T", "B"]), Grid::new(["L", "R"])],
        signals: vec![Grid::empty(), Grid::trivial(), Grid::trivial()],
        nature: vec![1.0],
        base: vec![vec![]; 3],
        density: vec![None; 3],
        correspondence: vec![None; 3],
        payoffs,
        tail_bound: None,
    })
    .unwrap()
}

/// Max-min of `x' A y` with each probability confined to `[lo_x, 1 - lo_x]`
/// and `[lo_y, 1 - lo_y]`.
fn constrained_value(a: [[f64; 2]; 2], lo_x: f64, lo_y: f64) -> f64 {
    let u = |x: f64, y: f64| {
        x * (y * a[0][0] + (1.0 - y) * a[0][1]) + (1.0 - x) * (y * a[1][0] + (1.0 - y) * a[1][1])
    };
    let f = |x: f64| u(x, lo_y).min(u(x, 1.0 - lo_y));
    let mut xs = vec![lo_x, 1.0 - lo_x];
    // crossing of the two lines in x
    let d0 = u(0.0, lo_y) - u(0.0, 1.0 - lo_y);
    let d1 = u(1.0, lo_y) - u(1.0, 1.0 - lo_y);
    if d0 != d1 {
        let x = d0 / (d0 - d1);
        if x > lo_x && x < 1.0 - lo_x {
            xs.push(x);
        }
    }
    xs.into_iter().map(f).fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn zero_sum_restricted_value_matches_the_exact_oracle() {
    for a in [[[3.0, -1.0], [-2.0, 1.0]], [[2.0, 3.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 0.0]]] {
        let g = zero_sum_toy(a);
        for n in [2, 3, 8] {
            let spaces = restricted_spaces(&g, n).unwrap();
            let eq = restricted_nash(&g, &spaces, &NashOptions::default()).unwrap();
            let want = constrained_value(a, spaces[0].fixed_weight[0] / 2.0, spaces[1].fixed_weight[0] / 2.0);
            let got = expected_payoff(&g, &eq.profile, 1).unwrap();
            assert!((got - want).abs() <= 1e-8, "{a:?}, n = {n}: {got} vs {want}");
        }
    }
}

#[test]
fn membership_accepts_solver_output_and_rejects_violations() {
    let mut rng = common::rng(33);
    for _ in 0..15 {
        let g = random_game(&mut rng, &RandomGameOptions::default());
        for n in [2, 4] {
            let spaces = restricted_spaces(&g, n).unwrap();
            let eq = solve_restricted(&g, &spaces, &NashOptions::default(), None).unwrap();
            for (slot, rs) in spaces.iter().enumerate() {
                let m = &eq.profile.measures[slot];
                assert!(rs.contains(&g, m));
                let parts = rs.decompose(&g, m).unwrap();
                let total: f64 = parts.iter().map(|c| c.weight).sum();
                assert!((total - 1.0).abs() < 1e-9);
                let space = &g.spaces()[slot];
                for (leaf, &x) in m.mass.iter().enumerate() {
                    let s: f64 = parts.iter().map(|c| c.weight * c.measure.mass[leaf]).sum();
                    assert!((s - x).abs() < 1e-9);
                }
                for c in &parts {
                    if c.fixed_steps == space.steps() {
                        assert!(c.measure.tv(&rs.anchor) < 1e-9);
                    } else if c.fixed_steps > 0 {
                        let t = space.periods[c.fixed_steps];
                        assert!(seqmeas::measure::is_continuation(&g, &rs.anchor, &c.measure, t).unwrap());
                    }
                }
                // a pure measure and a half mix with it leave the anchored mass behind
                let pols = common::pure_policies(&g, rs.player);
                let pol = &pols[pols.len() / 2];
                let composed = rs.compose(space, pol);
                assert!(rs.contains(&g, &composed));
                let branching = (0..space.steps())
                    .any(|k| (0..space.info_count[k]).any(|i| space.feasible_info[k][i] && space.available(k, i).count() > 1));
                if branching {
                    let pure = induce_measure(&g, &BehaviorStrategy::pure(&g, rs.player, pol)).unwrap();
                    assert!(!rs.contains(&g, &pure));
                    let half = mix(&[composed, pure], &[0.5, 0.5]).unwrap();
                    assert!(!rs.contains(&g, &half));
                    assert!(rs.decompose(&g, &half).is_none());
                }
            }
        }
    }
}

#[test]
fn restricted_spaces_need_residual_weight() {
    let g = ex(3, 0.9, 10);
    assert_eq!(RestrictedSpace::new(&g, 1, 1).unwrap_err().code(), "INVALID_PARAMETERS");
    let rs = RestrictedSpace::new(&g, 2, 2).unwrap();
    assert!(rs.residual > 0.0);
    assert_eq!(rs.weights, vec![(2, 0.25)]);
}

#[test]
fn conditional_gaps_obey_the_one_over_n_bound() {
    let mut rng = common::rng(34);
    let mut games: Vec<ValidatedGame> = (0..10).map(|_| random_game(&mut rng, &RandomGameOptions::default())).collect();
    games.push(ex(3, 0.9, 10));
    games.push(ex(4, 0.9, 10));
    let tol = NashOptions::default().tol;
    for g in &games {
        let sets = all_atomic_relevant_sets(g);
        let range = g.players().iter().map(|&p| g.payoff_range(p)).fold(0.0, f64::max);
        for n in [2, 4, 8] {
            let spaces = restricted_spaces(g, n).unwrap();
            let eq = solve_restricted(g, &spaces, &NashOptions::default(), None).unwrap();
            assert!(eq.converged, "n = {n}: nash gap {}", eq.nash_gap);
            let (gaps, _) = level_gaps(g, &eq.analysis, &sets);
            for sg in gaps {
                assert!(sg.reach > 0.0);
                assert!(sg.gap <= range / n as f64 + tol, "n = {n}: {} > {}", sg.gap, range / n as f64);
            }
        }
    }
}

#[test]
fn decision_problem_limit_is_the_optimal_plan() {
    let g = ex(4, 0.9, 10);
    let cert = sequential_equilibrium(&g, &SeqOptions::default()).unwrap();
    assert!(cert.converged, "{}", cert.detail);
    cert.validate().unwrap();
    let best = common::pure_policies(&g, 1)
        .iter()
        .map(|pol| {
            let m = induce_measure(&g, &BehaviorStrategy::pure(&g, 1, pol)).unwrap();
            expected_payoff(&g, &Profile::new(&g, vec![m]).unwrap(), 1).unwrap()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((expected_payoff(&g, &cert.limit, 1).unwrap() - best).abs() <= 1e-3);
    assert!(cert.last().max_gap <= 1e-3);
}

#[test]
fn example3_certificate() {
    let g = ex(3, 0.9, 10);
    let cert = sequential_equilibrium(&g, &ex3_seq()).unwrap();
    assert!(cert.converged, "{}", cert.detail);
    cert.validate().unwrap();
    let last = cert.last();
    assert_eq!(last.set_gaps.iter().filter(|s| s.set.player == 2).count(), 2);
    assert!(last.set_gaps.iter().all(|s| s.gap <= 1e-3));
    assert!(last.unrestricted_gaps.iter().all(|&x| x <= 1e-3));
    // Bob's L is dominant, so the unique sequential equilibrium is (L; L, L)
    let ann = induce_measure(&g, &BehaviorStrategy::pure(&g, 1, &[vec![0]])).unwrap();
    let bob = induce_measure(&g, &BehaviorStrategy::pure(&g, 2, &[vec![0, 0]])).unwrap();
    let se = Profile::new(&g, vec![ann, bob]).unwrap();
    assert!(cert.limit.tv(&se) <= 1e-3);
    let csv = cert.gaps_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "n,player,period,set_id,reach,conditional_gap,nash_gap");
    let rows: usize = cert.sequence.iter().map(|r| r.set_gaps.len()).sum();
    assert_eq!(lines.count(), rows);
    assert!(cert.report(&g).contains("CONVERGED"));
}

#[test]
fn short_schedules_report_non_convergence() {
    let g = ex(3, 0.9, 10);
    let cert = sequential_equilibrium(&g, &SeqOptions { schedule: vec![2, 4], ..SeqOptions::default() }).unwrap();
    assert!(!cert.converged);
    cert.validate().unwrap();
    for bad in [vec![], vec![1, 2], vec![4, 2]] {
        let e = sequential_equilibrium(&g, &SeqOptions { schedule: bad, ..SeqOptions::default() }).unwrap_err();
        assert_eq!(e.code(), "INVALID_PARAMETERS");
    }
}

#[test]
fn worker_count_does_not_change_the_result() {
    let g = ex(3, 0.9, 10);
    let one = sequential_equilibrium(&g, &ex3_seq()).unwrap();
    let again = sequential_equilibrium(&g, &ex3_seq()).unwrap();
    assert_eq!(one.gaps_csv(), again.gaps_csv());
    let mut o = ex3_seq();
    o.nash.workers = 2;
    let two = sequential_equilibrium(&g, &o).unwrap();
    assert!(one.limit.tv(&two.limit) <= 1e-12);
}

#[test]
fn checker_verdicts() {
    let g = ex(3, 0.9, 10);
    let cert = sequential_equilibrium(&g, &ex3_seq()).unwrap();
    let opts = CheckOptions::default();
    let acc = check_sequential(&g, &cert.limit, &opts).unwrap();
    assert_eq!(acc.verdict, Verdict::Accept, "{}", acc.evidence);
    assert!(!acc.witnesses.is_empty());
    for w in &acc.witnesses {
        assert!(w.tv <= opts.tol && w.max_gap <= w.eps && w.min_reach > 0.0);
    }

    let rej = check_sequential(&g, &ex3_signal_ignoring(&g).unwrap(), &opts).unwrap();
    assert_eq!(rej.verdict, Verdict::Reject, "{}", rej.evidence);
    let v = rej.violation.unwrap();
    assert_eq!((v.set.player, v.set.period), (2, 2));
    assert!(v.lower_bound > 1e-3 && v.lower_bound <= v.gap);
    assert_eq!(rej.verdict.exit_code(), 3);

    // no witness construction allowed
    let inc = check_sequential(&g, &cert.limit, &CheckOptions { budget: 0, ..CheckOptions::default() }).unwrap();
    assert_eq!(inc.verdict, Verdict::Inconclusive);
    assert_eq!(inc.verdict.exit_code(), 4);
}

#[test]
fn checker_rejects_off_path_punishment_in_example2() {
    let g = ex(2, 0.9, 10);
    let p = ex2_off_path_profile(&g, 0.5).unwrap();
    // the profile is a Nash equilibrium
    let an = analyze_profile(&g, &p, 1).unwrap();
    assert!(an.iter().all(|a| a.best_payoff - a.payoff <= 1e-12));
    let r = check_sequential(&g, &p, &CheckOptions::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Reject, "{}", r.evidence);
    assert_eq!(r.violation.unwrap().set.player, 2);
}
