//! Strategically relevant sets and reach probabilities.
//!
//! On a finite grid every set of actions is open, so a collection of
//! information sets is relevant exactly when some profile reaches it with
//! positive probability, which happens exactly when the uniform full-support
//! profile reaches it.

use crate::error::{Error, Result};
use crate::game::{PrivateHistory, ValidatedGame};
use crate::measure::{Levels, Profile};
use crate::play::info_reach;

/// Collection of information sets of one player at one period.
#[derive(Clone, Debug, PartialEq)]
pub struct RelevantSet {
    pub player: usize,
    pub period: usize,
    /// Own step of `period` in the player's trajectory space.
    pub step: usize,
    /// Information-set indices at `step`, sorted.
    pub members: Vec<usize>,
    /// Reach probability under the uniform full-support profile.
    pub witness: f64,
}

impl RelevantSet {
    /// Stable identifier `player:period:first-member[+count]`.
    pub fn id(&self) -> String {
        if self.members.len() == 1 {
            format!("{}:{}:{}", self.player, self.period, self.members[0])
        } else {
            format!(
                "{}:{}:{}+{}",
                self.player,
                self.period,
                self.members[0],
                self.members.len() - 1
            )
        }
    }

    pub fn label(&self, game: &ValidatedGame) -> String {
        self.members
            .iter()
            .map(|&i| game.info_label(self.player, self.step, i))
            .collect::<Vec<_>>()
            .join(" | ")
    }

    pub fn labeled_members(&self, game: &ValidatedGame) -> Vec<(PrivateHistory, usize)> {
        self.members
            .iter()
            .map(|&i| game.private_history(self.player, self.step, i))
            .collect()
    }

    /// Union of two sets of the same player and period.
    pub fn union(&self, other: &RelevantSet) -> Result<RelevantSet> {
        if self.player != other.player || self.period != other.period {
            return Err(Error::MismatchedPlayers(
                "union of sets at different players or periods".into(),
            ));
        }
        let mut members = self.members.clone();
        members.extend(&other.members);
        members.sort_unstable();
        members.dedup();
        Ok(RelevantSet {
            members,
            witness: self.witness.max(other.witness),
            ..self.clone()
        })
    }

    /// The whole period: every information set of the player at `period`.
    pub fn whole_period(game: &ValidatedGame, player: usize, period: usize) -> Result<RelevantSet> {
        let sets = atomic_relevant_sets(game, player, period)?;
        let mut members: Vec<usize> = sets.iter().flat_map(|s| s.members.clone()).collect();
        members.sort_unstable();
        let witness = sets.iter().map(|s| s.witness).sum();
        let step = game.space(player).unwrap().step_of(period).unwrap();
        Ok(RelevantSet {
            player,
            period,
            step,
            members,
            witness,
        })
    }
}

fn uniform_levels(game: &ValidatedGame) -> Vec<Levels> {
    Profile::uniform(game)
        .measures
        .iter()
        .map(|m| m.levels(game))
        .collect()
}

/// One singleton set per information set of `player` at `period` that the
/// uniform full-support profile reaches.
pub fn atomic_relevant_sets(game: &ValidatedGame, player: usize, period: usize) -> Result<Vec<RelevantSet>> {
    if period == 0 || period >= game.horizon() || game.active(period) != player {
        return Err(Error::PlayerNotActive { player, period });
    }
    let lv = uniform_levels(game);
    Ok(atomic_from_levels(game, &lv, player, period))
}

fn atomic_from_levels(game: &ValidatedGame, lv: &[Levels], player: usize, period: usize) -> Vec<RelevantSet> {
    let slot = game.slot(player).unwrap();
    let step = game.spaces()[slot].step_of(period).unwrap();
    let reach = info_reach(game, lv, slot, step);
    reach
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > 0.0)
        .map(|(i, &r)| RelevantSet {
            player,
            period,
            step,
            members: vec![i],
            witness: r,
        })
        .collect()
}

/// Atomic relevant sets of every player at every period, in period order.
pub fn all_atomic_relevant_sets(game: &ValidatedGame) -> Vec<RelevantSet> {
    let lv = uniform_levels(game);
    (1..game.horizon())
        .flat_map(|t| atomic_from_levels(game, &lv, game.active(t), t))
        .collect()
}

/// Probability that the play passes through an information set in `f`.
pub fn reach_probability(game: &ValidatedGame, profile: &Profile, f: &RelevantSet) -> Result<f64> {
    let p = Profile::new(game, profile.measures.clone())?;
    let lv: Vec<Levels> = p.measures.iter().map(|m| m.levels(game)).collect();
    let slot = game.slot(f.player).unwrap();
    let reach = info_reach(game, &lv, slot, f.step);
    Ok(f.members.iter().map(|&i| reach[i]).sum())
}

/// Reach of every information set at one step, under a profile.
pub fn reach_vector(game: &ValidatedGame, profile: &Profile, player: usize, period: usize) -> Result<Vec<f64>> {
    let p = Profile::new(game, profile.measures.clone())?;
    let lv: Vec<Levels> = p.measures.iter().map(|m| m.levels(game)).collect();
    let slot = game.slot(player).ok_or(Error::PlayerNotActive { player, period })?;
    let step = game.spaces()[slot]
        .step_of(period)
        .ok_or(Error::PlayerNotActive { player, period })?;
    Ok(info_reach(game, &lv, slot, step))
}

#[derive(Clone, Debug)]
pub struct ReachEntry {
    pub player: usize,
    pub period: usize,
    pub set_id: String,
    pub label: String,
    pub reach: f64,
}

#[derive(Clone, Debug)]
pub struct ReachReport {
    pub entries: Vec<ReachEntry>,
    pub min_reach: f64,
    pub failures: Vec<String>,
}

pub const RELEVANCE_NOTE: &str = "on a finite grid every action set is open; relevance is positive reach under the uniform full-support profile";

/// Recompute the reach of every atomic relevant set under the uniform profile.
pub fn assert_full_support_reach(game: &ValidatedGame) -> ReachReport {
    let sets = all_atomic_relevant_sets(game);
    let uni = Profile::uniform(game);
    let mut entries = Vec::with_capacity(sets.len());
    let mut failures = Vec::new();
    let mut min_reach = f64::INFINITY;
    let mut by_step: std::collections::BTreeMap<(usize, usize), Vec<f64>> = Default::default();
    for f in &sets {
        let reach = by_step
            .entry((f.player, f.period))
            .or_insert_with(|| reach_vector(game, &uni, f.player, f.period).unwrap());
        let r: f64 = f.members.iter().map(|&i| reach[i]).sum();
        if !(r > 0.0) {
            failures.push(format!("set {} has reach {r}", f.id()));
        }
        min_reach = min_reach.min(r);
        entries.push(ReachEntry {
            player: f.player,
            period: f.period,
            set_id: f.id(),
            label: f.label(game),
            reach: r,
        });
    }
    ReachReport {
        entries,
        min_reach,
        failures,
    }
}

impl ReachReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["period", "player", "set_id", "witness_reach", "label"]).unwrap();
        for e in &self.entries {
            w.write_record([
                e.period.to_string(),
                e.player.to_string(),
                e.set_id.clone(),
                format!("{:?}", e.reach),
                e.label.clone(),
            ])
            .unwrap();
        }
        let mut out = format!("# {RELEVANCE_NOTE}\n");
        out.push_str(&String::from_utf8(w.into_inner().unwrap()).unwrap());
        out
    }
}
