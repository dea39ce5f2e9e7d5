mod common;

use proptest::prelude::*;
use rand::Rng;

use seqmeas::examples::{build_example, ExampleParams};
use seqmeas::game::{validate_game, ValidatedGame};
use seqmeas::measure::{induce_measure, mix, BehaviorStrategy, Profile, StrategicMeasure};
use seqmeas::play::{conditional_payoff, expected_payoff, fold_densities, play_distribution};
use seqmeas::random_game::{random_game, random_profile, random_strategy, RandomGameOptions};
use seqmeas::relevance::{atomic_relevant_sets, RelevantSet};

fn ex3(c: f64) -> ValidatedGame {
    validate_game(build_example(3, &ExampleParams { c, ..ExampleParams::default() }).unwrap()).unwrap()
}

/// Ann plays `ann` surely; Bob plays `bob[s]` after signal `s`.
fn ex3_pure(g: &ValidatedGame, ann: usize, bob: [usize; 2]) -> Profile {
    let a = induce_measure(g, &BehaviorStrategy::pure(g, 1, &[vec![ann]])).unwrap();
    let b = induce_measure(g, &BehaviorStrategy::pure(g, 2, &[bob.to_vec()])).unwrap();
    Profile::new(g, vec![a, b]).unwrap()
}

#[test]
fn example3_play_probabilities() {
    let g = ex3(0.9);
    let p = ex3_pure(&g, 0, [0, 1]);
    let d = play_distribution(&g, &p).unwrap();
    let prob = |play: &[usize]| d.plays.iter().position(|x| x == play).map_or(0.0, |i| d.prob[i]);
    assert!((prob(&[0, 0, 0, 0, 0]) - 0.9).abs() < 1e-15);
    assert!((prob(&[0, 0, 0, 1, 1]) - 0.1).abs() < 1e-15);
    assert!((expected_payoff(&g, &p, 1).unwrap() - 2.2).abs() < 1e-14);
}

/// Ann and Bob payoffs of example 3 by enumerating the four plays by hand.
fn ex3_oracle(c: f64, ann: usize, bob: [usize; 2]) -> (f64, f64) {
    let va = [[2.0, 4.0], [1.0, 2.0]];
    let vb = [[4.0, 2.0], [2.0, 1.0]];
    // signal matches Ann's action with probability c
    let p_sig = |s: usize| if s == ann { c } else { 1.0 - c };
    let mut out = (0.0, 0.0);
    for s in 0..2 {
        let b = bob[s];
        out.0 += p_sig(s) * va[ann][b];
        out.1 += p_sig(s) * vb[ann][b];
    }
    out
}

#[test]
fn example3_normal_form() {
    for c in [0.5, 0.9, 1.0] {
        let g = ex3(c);
        for ann in 0..2 {
            for b0 in 0..2 {
                for b1 in 0..2 {
                    let p = ex3_pure(&g, ann, [b0, b1]);
                    let (a, b) = ex3_oracle(c, ann, [b0, b1]);
                    assert!((expected_payoff(&g, &p, 1).unwrap() - a).abs() < 1e-14);
                    assert!((expected_payoff(&g, &p, 2).unwrap() - b).abs() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn example4_play_weight() {
    let g = validate_game(build_example(4, &ExampleParams::default()).unwrap()).unwrap();
    let mut rng = common::rng(8);
    let b = random_strategy(&mut rng, &g, 1, 0.0);
    let m = induce_measure(&g, &b).unwrap();
    let p = Profile::new(&g, vec![m.clone()]).unwrap();
    let d = play_distribution(&g, &p).unwrap();
    // (fine, U, u, N)
    let play = vec![0, 0, 1, 0, 1];
    let i = d.plays.iter().position(|x| *x == play).unwrap();
    let space = g.space(1).unwrap();
    let leaf = space.encode_leaf(&[0, 0], &[1, 1]);
    assert!((d.prob[i] - 0.5 * m.mass[leaf] * 3.0).abs() < 1e-15);
}

#[test]
fn uninformative_signals_give_a_product() {
    let mut rng = common::rng(12);
    let o = RandomGameOptions { zero_density: 0.0, ..Default::default() };
    for _ in 0..10 {
        let mut spec = seqmeas::random_game::random_spec(&mut rng, &o);
        spec.density.iter_mut().for_each(|d| *d = None);
        let g = validate_game(spec).unwrap();
        let prof = random_profile(&mut rng, &g, 0.2);
        let d = play_distribution(&g, &prof).unwrap();
        for (pl, &q) in d.plays.iter().zip(&d.prob) {
            let mut want = g.nature()[pl[0]];
            for m in &prof.measures {
                want *= m.mass[common::own_leaf(&g, m.player, pl)];
            }
            assert!((q - want).abs() < 1e-15);
        }
    }
}

#[test]
fn constant_payoff() {
    let mut rng = common::rng(13);
    let mut spec = seqmeas::random_game::random_spec(&mut rng, &RandomGameOptions::default());
    for t in spec.payoffs.values_mut() {
        t.mask.clear();
        t.values = vec![-1.25];
    }
    let g = validate_game(spec).unwrap();
    for _ in 0..10 {
        let prof = random_profile(&mut rng, &g, 0.3);
        for &p in g.players() {
            assert!((expected_payoff(&g, &prof, p).unwrap() + 1.25).abs() < 1e-12);
        }
    }
}

#[test]
fn folding_example3_gives_the_second_tree() {
    for c in [0.5, 0.9, 1.0] {
        let g = ex3(c);
        let f = fold_densities(&g).unwrap();
        let w = 1.0 - c;
        // plays ordered (a1, s2, a2)
        let want_ann = [4.0 * c, 8.0 * c, 4.0 * w, 8.0 * w, 2.0 * w, 4.0 * w, 2.0 * c, 4.0 * c];
        let want_bob = [8.0 * c, 4.0 * c, 8.0 * w, 4.0 * w, 4.0 * w, 2.0 * w, 4.0 * c, 2.0 * c];
        for r in 0..8 {
            let play = [0, 0, r / 4, (r / 2) % 2, r % 2];
            assert_eq!(f.payoff(0, &play), want_ann[r], "c = {c}, row {r}");
            assert_eq!(f.payoff(1, &play), want_bob[r], "c = {c}, row {r}");
        }
        assert!(f.spec().density.iter().all(|d| d.is_none()));
    }
}

#[test]
fn folding_without_informative_signals_is_the_identity() {
    let g = validate_game(build_example(5, &ExampleParams::default()).unwrap()).unwrap();
    assert_eq!(fold_densities(&g).unwrap().spec().payoffs, g.spec().payoffs);
}

#[test]
fn folded_games_agree_on_random_profiles() {
    let mut rng = common::rng(14);
    for _ in 0..10 {
        let g = random_game(&mut rng, &RandomGameOptions::default());
        let f = fold_densities(&g).unwrap();
        for _ in 0..100 {
            let prof = random_profile(&mut rng, &g, 0.3);
            for &p in g.players() {
                let a = expected_payoff(&g, &prof, p).unwrap();
                let b = expected_payoff(&f, &prof, p).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn conditional_payoff_examples() {
    let g = ex3(0.9);
    let p = ex3_pure(&g, 0, [0, 1]);
    let whole = RelevantSet::whole_period(&g, 2, 2).unwrap();
    let v = conditional_payoff(&g, &p, &whole, 1).unwrap();
    assert!((v - expected_payoff(&g, &p, 1).unwrap()).abs() < 1e-14);
    let sets = atomic_relevant_sets(&g, 2, 2).unwrap();
    assert!((conditional_payoff(&g, &p, &sets[0], 1).unwrap() - 2.0).abs() < 1e-14);
    // with a perfect signal and Ann on L, Bob never sees r
    let g1 = ex3(1.0);
    let p1 = ex3_pure(&g1, 0, [0, 1]);
    let r = atomic_relevant_sets(&g1, 2, 2).unwrap().into_iter().find(|f| f.members == vec![1]).unwrap();
    assert_eq!(conditional_payoff(&g1, &p1, &r, 1).unwrap_err().code(), "ZERO_REACH");
}

#[test]
fn csv_export_lists_every_play() {
    let g = ex3(0.9);
    let p = ex3_pure(&g, 0, [0, 1]);
    let d = play_distribution(&g, &p).unwrap();
    let csv = d.to_csv(&g);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "a0,s1,a1,s2,a2,probability,payoff_1,payoff_2");
    assert_eq!(lines.count(), d.plays.len());
}

fn off_support_twin<R: Rng>(g: &ValidatedGame, b: &BehaviorStrategy, rng: &mut R) -> BehaviorStrategy {
    let m = induce_measure(g, b).unwrap();
    let lv = m.levels(g);
    let space = g.space(b.player).unwrap();
    let other = random_strategy(rng, g, b.player, 0.0);
    let mut c = b.clone();
    for k in 0..space.steps() {
        let a_n = space.act[k];
        for info in 0..space.info_count[k] {
            if lv.info[k][info] == 0.0 {
                c.rules[k][info * a_n..(info + 1) * a_n].copy_from_slice(other.rule(space, k, info));
            }
        }
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn engine_matches_the_brute_force_oracle(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let g = random_game(&mut rng, &RandomGameOptions::default());
        let prof = random_profile(&mut rng, &g, 0.3);
        let d = play_distribution(&g, &prof).unwrap();
        prop_assert!((d.total() - 1.0).abs() <= 1e-10);
        for (pl, &q) in d.plays.iter().zip(&d.prob) {
            prop_assert!(g.play_feasible(pl));
            prop_assert!((q - common::play_prob(&g, &prof, pl)).abs() <= 1e-14);
        }
        for &p in g.players() {
            let a = expected_payoff(&g, &prof, p).unwrap();
            prop_assert!((a - common::payoff(&g, &prof, p)).abs() <= 1e-12);
        }
    }

    #[test]
    fn payoffs_are_multilinear(seed in any::<u64>(), lambda in 0.0f64..1.0) {
        let mut rng = common::rng(seed);
        let g = random_game(&mut rng, &RandomGameOptions::default());
        let prof = random_profile(&mut rng, &g, 0.3);
        for &p in g.players() {
            let m2: StrategicMeasure = induce_measure(&g, &random_strategy(&mut rng, &g, p, 0.3)).unwrap();
            let m1 = prof.get(p).unwrap().clone();
            let mixed = prof.replace(mix(&[m1, m2.clone()], &[lambda, 1.0 - lambda]).unwrap());
            for &q in g.players() {
                let lhs = expected_payoff(&g, &mixed, q).unwrap();
                let rhs = lambda * expected_payoff(&g, &prof, q).unwrap()
                    + (1.0 - lambda) * expected_payoff(&g, &prof.replace(m2.clone()), q).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn strategies_with_the_same_measure_have_the_same_payoffs(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let g = random_game(&mut rng, &RandomGameOptions::default());
        let prof = random_profile(&mut rng, &g, 0.3);
        for &p in g.players() {
            let b = random_strategy(&mut rng, &g, p, 0.5);
            let c = off_support_twin(&g, &b, &mut rng);
            let pb = prof.replace(induce_measure(&g, &b).unwrap());
            let pc = prof.replace(induce_measure(&g, &c).unwrap());
            for &q in g.players() {
                prop_assert_eq!(expected_payoff(&g, &pb, q).unwrap(), expected_payoff(&g, &pc, q).unwrap());
            }
        }
    }
}
