//! Restricted strategy spaces `M_i^n`.
//!
//! For every own decision period `τ`, weight `1/n^τ` is reserved for a
//! continuation of the full-support anchor that keeps the anchor's play on all
//! own coordinates before `τ`. One further component of weight `1/n^(T+r)`
//! (with `r` the player's rank) keeps the anchor everywhere: it stands for a
//! payoff-irrelevant extra period appended to the game and guarantees that a
//! player's first move also carries the anchor. The residual weight is free.

use crate::error::{Error, Result};
use crate::game::{OwnSpace, ValidatedGame, TOL};
use crate::measure::{full_support_strategy, induce_measure, validate_measure, Levels, StrategicMeasure};

use super::analysis::{continue_with, Policy};

#[derive(Clone, Debug)]
pub struct RestrictedSpace {
    pub player: usize,
    pub n: u64,
    pub anchor: StrategicMeasure,
    anchor_levels: Levels,
    /// `(period, weight)` per own decision period.
    pub weights: Vec<(usize, f64)>,
    pub terminal_period: usize,
    pub terminal_weight: f64,
    pub residual: f64,
    /// Per own step `j`: total weight of the components that fix step `j`.
    pub fixed_weight: Vec<f64>,
}

/// One summand of a decomposition: `weight * measure`, where the measure agrees
/// with the anchor on own steps before `fixed_steps`.
#[derive(Clone, Debug)]
pub struct Component {
    pub weight: f64,
    pub fixed_steps: usize,
    pub measure: StrategicMeasure,
}

impl RestrictedSpace {
    pub fn new(game: &ValidatedGame, player: usize, n: u64) -> Result<RestrictedSpace> {
        if n < 2 {
            return Err(Error::InvalidParameters(format!("n must be at least 2, got {n}")));
        }
        let slot = game
            .slot(player)
            .ok_or_else(|| Error::MismatchedPlayers(format!("player {player} is not in the game")))?;
        let space = &game.spaces()[slot];
        let anchor = induce_measure(game, &full_support_strategy(game, player))?;
        let anchor_levels = Levels::of(space, &anchor.mass);
        let nf = n as f64;
        let weights: Vec<(usize, f64)> = space
            .periods
            .iter()
            .map(|&t| (t, nf.powi(-(t as i32))))
            .collect();
        let terminal_period = game.horizon() + slot;
        let terminal_weight = nf.powi(-(terminal_period as i32));
        let used: f64 = weights.iter().map(|w| w.1).sum::<f64>() + terminal_weight;
        let residual = 1.0 - used;
        if !(residual > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "n = {n} leaves no residual weight for player {player}"
            )));
        }
        let k_n = space.steps();
        let fixed_weight = (0..k_n)
            .map(|j| weights[j + 1..].iter().map(|w| w.1).sum::<f64>() + terminal_weight)
            .collect();
        Ok(RestrictedSpace {
            player,
            n,
            anchor,
            anchor_levels,
            weights,
            terminal_period,
            terminal_weight,
            residual,
            fixed_weight,
        })
    }

    /// Components as `(weight, fixed own steps)`; the first own period and the
    /// residual are merged since neither fixes anything.
    fn parts(&self) -> Vec<(f64, usize)> {
        let k_n = self.weights.len();
        let mut out = Vec::with_capacity(k_n + 1);
        let free = self.residual + self.weights.first().map(|w| w.1).unwrap_or(0.0);
        out.push((free, 0));
        for (k, w) in self.weights.iter().enumerate().skip(1) {
            out.push((w.1, k));
        }
        out.push((self.terminal_weight, k_n));
        out
    }

    /// The element of `M_i^n` in which every non-anchored choice follows `policy`.
    pub fn compose(&self, space: &OwnSpace, policy: &Policy) -> StrategicMeasure {
        let mut mass = vec![0.0; space.leaf_count()];
        for (w, fixed) in self.parts() {
            continue_with(space, Some(&self.anchor_levels), fixed, policy, w, &mut mass);
        }
        StrategicMeasure {
            player: self.player,
            mass,
        }
    }

    /// Membership: `m` is a valid measure whose node masses at every own step
    /// dominate the anchored weight times the anchor's.
    pub fn contains(&self, game: &ValidatedGame, m: &StrategicMeasure) -> bool {
        if m.player != self.player || validate_measure(game, m).is_err() {
            return false;
        }
        let space = game.space(self.player).unwrap();
        let lv = Levels::of(space, &m.mass);
        (0..space.steps()).all(|j| {
            lv.node[j]
                .iter()
                .zip(&self.anchor_levels.node[j])
                .all(|(x, a)| *x >= self.fixed_weight[j] * a - TOL)
        })
    }

    /// Explicit decomposition of a member into anchored continuations plus a free
    /// part; `None` when `m` is not a member.
    pub fn decompose(&self, game: &ValidatedGame, m: &StrategicMeasure) -> Option<Vec<Component>> {
        if !self.contains(game, m) {
            return None;
        }
        let space = game.space(self.player).unwrap();
        let lv = Levels::of(space, &m.mass);
        let k_n = space.steps();
        // Shared conditional of the unanchored mass at every information set.
        let mut rules: Vec<Vec<f64>> = Vec::with_capacity(k_n);
        for j in 0..k_n {
            let a_n = space.act[j];
            let fw = self.fixed_weight[j];
            let mut r = vec![0.0; space.info_count[j] * a_n];
            for info in 0..space.info_count[j] {
                let slice = info * a_n..(info + 1) * a_n;
                let left: Vec<f64> = slice
                    .clone()
                    .map(|x| (lv.node[j][x] - fw * self.anchor_levels.node[j][x]).max(0.0))
                    .collect();
                let tot: f64 = left.iter().sum();
                if tot > 0.0 {
                    for (o, l) in r[slice].iter_mut().zip(&left) {
                        *o = l / tot;
                    }
                } else {
                    let av: Vec<usize> = space.available(j, info).collect();
                    for a in &av {
                        r[info * a_n + a] = 1.0 / av.len() as f64;
                    }
                }
            }
            rules.push(r);
        }
        let mut comps = Vec::new();
        for (w, fixed) in self.parts() {
            let mass = forward_mixed(space, &self.anchor_levels, fixed, &rules);
            comps.push(Component {
                weight: w,
                fixed_steps: fixed,
                measure: StrategicMeasure {
                    player: self.player,
                    mass,
                },
            });
        }
        let mut sum = vec![0.0; space.leaf_count()];
        for c in &comps {
            for (s, x) in sum.iter_mut().zip(&c.measure.mass) {
                *s += c.weight * x;
            }
        }
        let ok = sum.iter().zip(&m.mass).all(|(a, b)| (a - b).abs() <= 1e-10);
        ok.then_some(comps)
    }
}

/// Anchor masses before step `from`, then behavior `rules` (flat per step).
fn forward_mixed(space: &OwnSpace, anchor: &Levels, from: usize, rules: &[Vec<f64>]) -> Vec<f64> {
    let k_n = space.steps();
    if k_n == 0 {
        return vec![1.0];
    }
    if from >= k_n {
        return anchor.node[k_n - 1].clone();
    }
    let mut prev = if from == 0 { vec![1.0] } else { anchor.node[from - 1].clone() };
    for k in from..k_n {
        let s_n = space.sig[k];
        let a_n = space.act[k];
        let mut next = vec![0.0; space.node_count[k]];
        for (p, &pm) in prev.iter().enumerate() {
            if pm == 0.0 {
                continue;
            }
            for s in 0..s_n {
                let info = p * s_n + s;
                let im = pm * space.mu[k][s];
                for a in 0..a_n {
                    next[info * a_n + a] = im * rules[k][info * a_n + a];
                }
            }
        }
        prev = next;
    }
    prev
}

/// Restricted spaces for every proper player at level `n`.
pub fn restricted_spaces(game: &ValidatedGame, n: u64) -> Result<Vec<RestrictedSpace>> {
    game.players().iter().map(|&p| RestrictedSpace::new(game, p, n)).collect()
}
