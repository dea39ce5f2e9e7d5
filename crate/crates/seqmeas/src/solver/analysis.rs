//! Backward induction over one player's own trajectory space and the
//! conditional optimality gaps it yields.

use crate::error::{Error, Result};
use crate::game::{OwnSpace, ValidatedGame};
use crate::measure::{Levels, Profile, StrategicMeasure};
use crate::play::{own_values_from_levels, OwnValues};
use crate::relevance::RelevantSet;

/// Pure rule: one action per information set and own step.
pub type Policy = Vec<Vec<usize>>;

#[derive(Clone, Debug)]
pub struct Backward {
    /// Value per unit of mass of every information set under optimal play from there on.
    pub best_info: Vec<Vec<f64>>,
    /// Optimal action per information set; ties go to the lowest grid index.
    pub choice: Policy,
    /// Optimal value per unit of mass before the first own signal.
    pub root: f64,
}

/// Backward induction on utility masses `w` over the leaves.
pub fn backward(space: &OwnSpace, w: &[f64]) -> Backward {
    let k_n = space.steps();
    let mut best_info = vec![Vec::new(); k_n];
    let mut choice = vec![Vec::new(); k_n];
    if k_n == 0 {
        return Backward {
            best_info,
            choice,
            root: w.first().copied().unwrap_or(0.0),
        };
    }
    let mut node_val = w.to_vec();
    for k in (0..k_n).rev() {
        let a_n = space.act[k];
        let infos = space.info_count[k];
        let mut best = vec![0.0; infos];
        let mut ch = vec![0usize; infos];
        for info in 0..infos {
            let row = &node_val[info * a_n..(info + 1) * a_n];
            let mut hi = f64::NEG_INFINITY;
            let mut scale = 0.0f64;
            for a in space.available(k, info) {
                hi = hi.max(row[a]);
                scale = scale.max(row[a].abs());
            }
            let slack = 1e-12 * scale;
            let pick = space
                .available(k, info)
                .find(|&a| row[a] >= hi - slack)
                .unwrap();
            best[info] = hi;
            ch[info] = pick;
        }
        if k > 0 {
            let s_n = space.sig[k];
            let mu = &space.mu[k];
            node_val = best
                .chunks(s_n)
                .map(|c| c.iter().zip(mu).map(|(v, m)| v * m).sum())
                .collect();
        } else {
            let mu = &space.mu[0];
            let root = best.iter().zip(mu).map(|(v, m)| v * m).sum();
            best_info[k] = best;
            choice[k] = ch;
            return Backward {
                best_info,
                choice,
                root,
            };
        }
        best_info[k] = best;
        choice[k] = ch;
    }
    unreachable!()
}

/// Forward composition: start from the node masses of `lv` before own step
/// `from` and follow the pure `policy` at steps `from..`.
pub fn continue_with(space: &OwnSpace, lv: Option<&Levels>, from: usize, policy: &Policy, weight: f64, out: &mut [f64]) {
    let k_n = space.steps();
    if k_n == 0 {
        out[0] += weight;
        return;
    }
    if from >= k_n {
        let lv = lv.expect("levels required");
        for (o, x) in out.iter_mut().zip(&lv.node[k_n - 1]) {
            *o += weight * x;
        }
        return;
    }
    let mut prev: Vec<f64> = if from == 0 {
        vec![weight]
    } else {
        lv.expect("levels required").node[from - 1].iter().map(|x| weight * x).collect()
    };
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
                next[info * a_n + policy[k][info]] = pm * space.mu[k][s];
            }
        }
        prev = next;
    }
    for (o, x) in out.iter_mut().zip(prev) {
        *o += x;
    }
}

/// Per own step: reach, current payoff mass and best-continuation payoff mass of
/// every information set.
#[derive(Clone, Debug)]
pub struct StepGaps {
    pub reach: Vec<f64>,
    pub current: Vec<f64>,
    pub best: Vec<f64>,
}

impl StepGaps {
    pub fn gap(&self, members: &[usize]) -> Option<f64> {
        let r: f64 = members.iter().map(|&i| self.reach[i]).sum();
        if !(r > 0.0) {
            return None;
        }
        let b: f64 = members.iter().map(|&i| self.best[i]).sum();
        let c: f64 = members.iter().map(|&i| self.current[i]).sum();
        Some(((b - c) / r).max(0.0))
    }
}

#[derive(Clone, Debug)]
pub struct PlayerAnalysis {
    pub player: usize,
    pub values: OwnValues,
    pub backward: Backward,
    pub steps: Vec<StepGaps>,
    /// Expected payoff of the player's measure.
    pub payoff: f64,
    /// Payoff of an unrestricted best response.
    pub best_payoff: f64,
}

pub fn analyze_player(space: &OwnSpace, m: &StrategicMeasure, values: OwnValues) -> PlayerAnalysis {
    let bw = backward(space, &values.w);
    let mw: Vec<f64> = m.mass.iter().zip(&values.w).map(|(a, b)| a * b).collect();
    let mp: Vec<f64> = m.mass.iter().zip(&values.p).map(|(a, b)| a * b).collect();
    let lm = Levels::of(space, &m.mass);
    let lw = Levels::of(space, &mw);
    let lp = Levels::of(space, &mp);
    let steps = (0..space.steps())
        .map(|k| StepGaps {
            reach: lp.info[k].clone(),
            current: lw.info[k].clone(),
            best: lm.info[k]
                .iter()
                .zip(&bw.best_info[k])
                .map(|(a, b)| if *a == 0.0 { 0.0 } else { a * b })
                .collect(),
        })
        .collect();
    let payoff = mw.iter().sum();
    PlayerAnalysis {
        player: m.player,
        best_payoff: bw.root,
        values,
        backward: bw,
        steps,
        payoff,
    }
}

/// Analysis of every proper player against the rest of the profile.
pub fn analyze_profile(game: &ValidatedGame, profile: &Profile, workers: usize) -> Result<Vec<PlayerAnalysis>> {
    let p = Profile::new(game, profile.measures.clone())?;
    let lv: Vec<Levels> = p.measures.iter().map(|m| m.levels(game)).collect();
    Ok(p
        .measures
        .iter()
        .enumerate()
        .map(|(slot, m)| {
            let values = own_values_from_levels(game, &lv, slot, workers);
            analyze_player(&game.spaces()[slot], m, values)
        })
        .collect())
}

/// Best conditional payoff given `f` over all continuations of `m_i` from
/// `period` on, with an optimal continuation that plays the backward-induction
/// rule at every own step from `period` on.
pub fn best_continuation(
    game: &ValidatedGame,
    player: usize,
    period: usize,
    f: &RelevantSet,
    opponents: &Profile,
    m_i: &StrategicMeasure,
) -> Result<(f64, StrategicMeasure)> {
    if f.player != player || f.period != period || m_i.player != player || game.active(period) != player {
        return Err(Error::PlayerNotActive { player, period });
    }
    let profile = opponents.replace(m_i.clone());
    let an = analyze_profile(game, &profile, 1)?;
    let slot = game.slot(player).unwrap();
    let a = &an[slot];
    let st = &a.steps[f.step];
    let r: f64 = f.members.iter().map(|&i| st.reach[i]).sum();
    if !(r > 0.0) {
        return Err(Error::ZeroReach { player, period });
    }
    let b: f64 = f.members.iter().map(|&i| st.best[i]).sum();
    let space = &game.spaces()[slot];
    let lv = m_i.levels(game);
    let mut mass = vec![0.0; space.leaf_count()];
    continue_with(space, Some(&lv), f.step, &a.backward.choice, 1.0, &mut mass);
    Ok((b / r, StrategicMeasure { player, mass }))
}

/// Whether the acting player's measure is within `eps` of the best continuation at `f`.
pub fn epsilon_optimal_at(game: &ValidatedGame, profile: &Profile, f: &RelevantSet, eps: f64) -> Result<(bool, f64)> {
    let an = analyze_profile(game, profile, 1)?;
    let slot = game.slot(f.player).unwrap();
    let gap = an[slot].steps[f.step]
        .gap(&f.members)
        .ok_or(Error::ZeroReach {
            player: f.player,
            period: f.period,
        })?;
    Ok((gap <= eps, gap))
}
