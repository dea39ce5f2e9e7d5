//! Brute-force oracles shared by the integration tests. They walk every
//! conceivable play directly and never touch the library's play engine.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use seqmeas::game::ValidatedGame;
use seqmeas::measure::{induce_measure, measure_to_strategy, BehaviorStrategy, Profile, Rule, StrategicMeasure};
use seqmeas::relevance::RelevantSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every conceivable play, in mixed-radix order.
pub fn all_plays(game: &ValidatedGame) -> Vec<Vec<usize>> {
    let radix = game.radix();
    let total: usize = radix.iter().product();
    (0..total)
        .map(|mut r| {
            let mut p = vec![0; radix.len()];
            for i in (0..radix.len()).rev() {
                p[i] = r % radix[i];
                r /= radix[i];
            }
            p
        })
        .collect()
}

/// Own signals up to and including `k` and own actions before `k` along a play.
pub fn own_info(game: &ValidatedGame, player: usize, k: usize, play: &[usize]) -> usize {
    let space = game.space(player).unwrap();
    let sigs: Vec<usize> = space.periods[..=k].iter().map(|&t| play[2 * t - 1]).collect();
    let acts: Vec<usize> = space.periods[..k].iter().map(|&t| play[2 * t]).collect();
    space.encode_info(&sigs, &acts)
}

pub fn own_leaf(game: &ValidatedGame, player: usize, play: &[usize]) -> usize {
    let space = game.space(player).unwrap();
    let sigs: Vec<usize> = space.periods.iter().map(|&t| play[2 * t - 1]).collect();
    let acts: Vec<usize> = space.periods.iter().map(|&t| play[2 * t]).collect();
    space.encode_leaf(&sigs, &acts)
}

/// `ν(a0) · Π_t g_t · Π_i m_i(own trajectory)`.
pub fn play_prob(game: &ValidatedGame, profile: &Profile, play: &[usize]) -> f64 {
    let mut p = game.nature()[play[0]];
    for t in 1..game.horizon() {
        p *= game.density(t, play, play[2 * t - 1]);
    }
    for m in &profile.measures {
        p *= m.mass[own_leaf(game, m.player, play)];
    }
    p
}

pub fn payoff(game: &ValidatedGame, profile: &Profile, player: usize) -> f64 {
    let slot = game.slot(player).unwrap();
    all_plays(game)
        .iter()
        .map(|pl| {
            let q = play_prob(game, profile, pl);
            if q == 0.0 {
                0.0
            } else {
                q * game.payoff(slot, pl)
            }
        })
        .sum()
}

/// (reach, conditional payoff of `player`) over plays whose information set
/// at `f` lies in `f`.
pub fn conditional(game: &ValidatedGame, profile: &Profile, f: &RelevantSet, player: usize) -> (f64, f64) {
    let slot = game.slot(player).unwrap();
    let mut r = 0.0;
    let mut v = 0.0;
    for pl in all_plays(game) {
        if !f.members.contains(&own_info(game, f.player, f.step, &pl)) {
            continue;
        }
        let q = play_prob(game, profile, &pl);
        r += q;
        if q > 0.0 {
            v += q * game.payoff(slot, &pl);
        }
    }
    (r, if r > 0.0 { v / r } else { f64::NAN })
}

/// Largest deviation of the signal conditionals from the base measure over
/// own prefixes with positive mass.
pub fn signal_independence_error(game: &ValidatedGame, m: &StrategicMeasure) -> f64 {
    let space = game.space(m.player).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..space.steps() {
        // mass of every (prefix before step k, signal at k)
        let s_n = space.sig[k];
        let mut by_prefix: std::collections::BTreeMap<Vec<usize>, Vec<f64>> = Default::default();
        for (leaf, &x) in m.mass.iter().enumerate() {
            let (sigs, acts) = space.decode_leaf(leaf);
            let mut key: Vec<usize> = Vec::new();
            for j in 0..k {
                key.push(sigs[j]);
                key.push(acts[j]);
            }
            by_prefix.entry(key).or_insert_with(|| vec![0.0; s_n])[sigs[k]] += x;
        }
        for row in by_prefix.values() {
            let tot: f64 = row.iter().sum();
            if tot <= 0.0 {
                continue;
            }
            for (s, x) in row.iter().enumerate() {
                worst = worst.max((x / tot - space.mu[k][s]).abs());
            }
        }
    }
    worst
}

/// A random continuation of `m` from the player's own step `k`: the rules of
/// `m` before `k` (uniform where `m` leaves them open) and random rules after.
pub fn random_continuation<R: Rng>(game: &ValidatedGame, m: &StrategicMeasure, k: usize, rng: &mut R) -> StrategicMeasure {
    let space = game.space(m.player).unwrap();
    let partial = measure_to_strategy(game, m).unwrap();
    let fresh = seqmeas::random_game::random_strategy(rng, game, m.player, 0.3);
    let rules = (0..space.steps())
        .map(|j| {
            let a_n = space.act[j];
            let mut r = vec![0.0; space.info_count[j] * a_n];
            for info in 0..space.info_count[j] {
                let row: Vec<f64> = if j >= k {
                    fresh.rule(space, j, info).to_vec()
                } else {
                    match &partial.rules[j][info] {
                        Rule::Defined(v) => v.clone(),
                        Rule::Unconstrained => fresh.rule(space, j, info).to_vec(),
                    }
                };
                r[info * a_n..(info + 1) * a_n].copy_from_slice(&row);
            }
            r
        })
        .collect();
    induce_measure(game, &BehaviorStrategy { player: m.player, rules }).unwrap()
}

/// Every pure policy of a player: one available action per information set and step.
pub fn pure_policies(game: &ValidatedGame, player: usize) -> Vec<Vec<Vec<usize>>> {
    let space = game.space(player).unwrap();
    let mut slots: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for k in 0..space.steps() {
        for info in 0..space.info_count[k] {
            let mut avail: Vec<usize> = space.available(k, info).collect();
            if avail.is_empty() {
                avail.push(0);
            }
            slots.push((k, info, avail));
        }
    }
    let mut out = vec![(0..space.steps()).map(|k| vec![0; space.info_count[k]]).collect::<Vec<_>>()];
    for (k, info, avail) in slots {
        let mut next = Vec::with_capacity(out.len() * avail.len());
        for p in &out {
            for &a in &avail {
                let mut q = p.clone();
                q[k][info] = a;
                next.push(q);
            }
        }
        out = next;
    }
    out
}
