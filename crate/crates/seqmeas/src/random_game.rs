//! Random small games and strategies for property tests.

use std::collections::BTreeMap;

use rand::Rng;

use crate::game::{validate_game, Correspondence, GameSpec, Grid, Table, ValidatedGame};
use crate::measure::{BehaviorStrategy, Profile, induce_measure};

#[derive(Clone, Debug)]
pub struct RandomGameOptions {
    /// Inclusive range of the horizon, nature's period included.
    pub periods: (usize, usize),
    pub players: usize,
    pub max_actions: usize,
    pub max_signals: usize,
    /// Chance that a density row gives some signal zero weight.
    pub zero_density: f64,
    /// Chance that a period restricts actions.
    pub restrict: f64,
}

impl Default for RandomGameOptions {
    fn default() -> Self {
        RandomGameOptions {
            periods: (3, 4),
            players: 2,
            max_actions: 3,
            max_signals: 3,
            zero_density: 0.2,
            restrict: 0.3,
        }
    }
}

fn probs<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn labels(prefix: &str, n: usize) -> Grid {
    Grid::new((0..n).map(|i| format!("{prefix}{i}")))
}

/// A random game with informative densities, optional action restrictions and
/// payoffs in `[-1, 1]` that depend on the whole play.
pub fn random_spec<R: Rng>(rng: &mut R, o: &RandomGameOptions) -> GameSpec {
    let t_n = rng.gen_range(o.periods.0..=o.periods.1);
    let mut active = vec![0];
    for t in 1..t_n {
        // every player moves at least once when the horizon allows it
        let p = if t <= o.players { t } else { rng.gen_range(1..=o.players) };
        active.push(p);
    }
    let n0 = rng.gen_range(1..=2);
    let mut actions = vec![labels("n", n0)];
    let nature = probs(rng, n0);
    let mut signals = vec![Grid::empty()];
    let mut base = vec![Vec::new()];
    let mut density = vec![None];
    let mut correspondence = vec![None];
    let mut radix = vec![n0];
    for t in 1..t_n {
        let s_n = rng.gen_range(1..=o.max_signals);
        let a_n = rng.gen_range(1..=o.max_actions);
        signals.push(labels("s", s_n));
        actions.push(labels("a", a_n));
        let mu = if rng.gen_bool(0.5) { Vec::new() } else { probs(rng, s_n) };
        let mu_eff = if mu.is_empty() { vec![1.0 / s_n as f64; s_n] } else { mu.clone() };
        base.push(mu);
        // density on up to two earlier coordinates
        let earlier = radix.len();
        let mut mask: Vec<usize> = (0..earlier).filter(|_| rng.gen_bool(0.4)).collect();
        mask.truncate(2);
        let rows: usize = mask.iter().map(|&c| radix[c]).product();
        let mut values = Vec::with_capacity(rows * s_n);
        for _ in 0..rows {
            let mut w: Vec<f64> = (0..s_n)
                .map(|_| if rng.gen_bool(o.zero_density) { 0.0 } else { rng.gen_range(0.05..1.0) })
                .collect();
            if w.iter().all(|&x| x == 0.0) {
                w[rng.gen_range(0..s_n)] = 1.0;
            }
            let z: f64 = w.iter().zip(&mu_eff).map(|(a, b)| a * b).sum();
            values.extend(w.iter().map(|x| x / z));
        }
        density.push(if s_n > 1 { Some(Table { mask, values }) } else { None });
        radix.push(s_n);
        // restrictions may depend on the player's current signal
        correspondence.push(if a_n > 1 && s_n > 1 && rng.gen_bool(o.restrict) {
            let allowed = (0..s_n)
                .map(|_| {
                    let mut set: Vec<usize> = (0..a_n).filter(|_| rng.gen_bool(0.6)).collect();
                    if set.is_empty() {
                        set.push(rng.gen_range(0..a_n));
                    }
                    set
                })
                .collect();
            Some(Correspondence {
                mask: vec![2 * t - 1],
                allowed,
            })
        } else {
            None
        });
        radix.push(a_n);
    }
    let all: Vec<usize> = (0..radix.len()).collect();
    let plays: usize = radix.iter().product();
    let mut payoffs = BTreeMap::new();
    for &p in active.iter().skip(1) {
        payoffs.entry(p).or_insert_with(|| Table {
            mask: all.clone(),
            values: (0..plays).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        });
    }
    GameSpec {
        active,
        actions,
        signals,
        nature,
        base,
        density,
        correspondence,
        payoffs,
        tail_bound: None,
    }
}

pub fn random_game<R: Rng>(rng: &mut R, o: &RandomGameOptions) -> ValidatedGame {
    validate_game(random_spec(rng, o)).expect("random games are valid by construction")
}

/// Random behavior strategy; with probability `sparse` an available action gets
/// weight zero (one action always keeps positive weight).
pub fn random_strategy<R: Rng>(rng: &mut R, game: &ValidatedGame, player: usize, sparse: f64) -> BehaviorStrategy {
    let space = game.space(player).expect("unknown player");
    let rules = (0..space.steps())
        .map(|k| {
            let a_n = space.act[k];
            let mut r = vec![0.0; space.info_count[k] * a_n];
            for info in 0..space.info_count[k] {
                let avail: Vec<usize> = space.available(k, info).collect();
                let mut w: Vec<f64> = avail
                    .iter()
                    .map(|_| if rng.gen_bool(sparse) { 0.0 } else { rng.gen_range(0.05..1.0) })
                    .collect();
                if w.iter().all(|&x| x == 0.0) {
                    let i = rng.gen_range(0..w.len());
                    w[i] = 1.0;
                }
                let z: f64 = w.iter().sum();
                for (&a, x) in avail.iter().zip(w) {
                    r[info * a_n + a] = x / z;
                }
            }
            r
        })
        .collect();
    BehaviorStrategy { player, rules }
}

pub fn random_profile<R: Rng>(rng: &mut R, game: &ValidatedGame, sparse: f64) -> Profile {
    let measures = game
        .players()
        .iter()
        .map(|&p| induce_measure(game, &random_strategy(rng, game, p, sparse)).expect("valid strategy"))
        .collect();
    Profile { measures }
}
