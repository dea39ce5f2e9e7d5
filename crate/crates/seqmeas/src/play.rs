//! Play distributions, expected payoffs and the density-folding transformation.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::game::{GameSpec, Table, ValidatedGame};
use crate::measure::{Levels, Profile};
use crate::relevance::RelevantSet;

/// Depth-first enumeration of positive-weight play prefixes.
///
/// The weight passed to the visitor is `ν · Π g` times the prefix mass of every
/// player whose levels are supplied.
pub(crate) struct Walker<'a> {
    game: &'a ValidatedGame,
    levels: Vec<Option<&'a Levels>>,
    stop: usize,
}

pub(crate) struct State {
    pub play: Vec<usize>,
    /// Current own index per player slot: information set after a signal, node after an action.
    pub pos: Vec<usize>,
    pub mass: Vec<f64>,
}

impl<'a> Walker<'a> {
    /// `levels[slot] = None` removes that player's factor (and its pruning).
    pub fn new(game: &'a ValidatedGame, levels: Vec<Option<&'a Levels>>, stop: usize) -> Self {
        Walker { game, levels, stop }
    }

    fn weight(&self, st: &State, base: f64) -> f64 {
        let mut w = base;
        for (slot, l) in self.levels.iter().enumerate() {
            if l.is_some() {
                w *= st.mass[slot];
            }
        }
        w
    }

    fn rec<F: FnMut(&State, f64)>(&self, c: usize, base: f64, st: &mut State, f: &mut F) {
        if c == self.stop {
            f(st, base);
            return;
        }
        let g = self.game;
        if c == 0 {
            for (a0, &p) in g.nature().iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                st.play[0] = a0;
                self.rec(1, base * p, st, f);
            }
            return;
        }
        let t = (c + 1) / 2;
        let slot = g.slot_of_period(t);
        let k = g.step_of_period(t);
        let space = &g.spaces()[slot];
        let old_pos = st.pos[slot];
        let old_mass = st.mass[slot];
        if c % 2 == 1 {
            let row = g.density_row(t, &st.play);
            let s_n = space.sig[k];
            let parent = if k == 0 { 0 } else { old_pos };
            for s in 0..s_n {
                let d = g.density_at(t, row, s);
                if d == 0.0 {
                    continue;
                }
                let info = parent * s_n + s;
                if let Some(l) = self.levels[slot] {
                    let m = l.info[k][info];
                    if m == 0.0 {
                        continue;
                    }
                    st.mass[slot] = m;
                }
                st.pos[slot] = info;
                st.play[c] = s;
                self.rec(c + 1, base * d, st, f);
            }
        } else {
            let a_n = space.act[k];
            let info = old_pos;
            for a in 0..a_n {
                if !space.avail[k][info * a_n + a] {
                    continue;
                }
                let node = info * a_n + a;
                if let Some(l) = self.levels[slot] {
                    let m = l.node[k][node];
                    if m == 0.0 {
                        continue;
                    }
                    st.mass[slot] = m;
                }
                st.pos[slot] = node;
                st.play[c] = a;
                self.rec(c + 1, base, st, f);
            }
        }
        st.pos[slot] = old_pos;
        st.mass[slot] = old_mass;
        st.play[c] = 0;
    }

    fn fresh(&self) -> State {
        let n = self.game.players().len();
        State {
            play: vec![0; self.game.radix().len()],
            pos: vec![0; n],
            mass: vec![1.0; n],
        }
    }

    /// Visit every positive-weight prefix of length `stop` with its weight.
    pub fn run<F: FnMut(&State, f64)>(&self, f: &mut F) {
        let mut st = self.fresh();
        self.rec(0, 1.0, &mut st, &mut |s, base| f(s, self.weight(s, base)));
    }

    /// Like [`Walker::run`], with the prefixes after period 1 split into
    /// contiguous chunks handled by `workers` threads; partial accumulators are
    /// merged in chunk order.
    pub fn run_parallel<A, I, F, M>(&self, workers: usize, init: I, visit: F, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, &State, f64) + Sync,
        M: Fn(&mut A, A),
    {
        let split = 3.min(self.stop);
        if workers <= 1 || split == self.stop {
            let mut acc = init();
            self.run(&mut |st, w| visit(&mut acc, st, w));
            return acc;
        }
        // Collect the frontier at coordinate `split`.
        let head = Walker {
            game: self.game,
            levels: self.levels.clone(),
            stop: split,
        };
        let mut roots: Vec<(Vec<usize>, Vec<usize>, Vec<f64>, f64)> = Vec::new();
        let mut st = head.fresh();
        head.rec(0, 1.0, &mut st, &mut |s, base| {
            roots.push((s.play.clone(), s.pos.clone(), s.mass.clone(), base))
        });
        let chunk = roots.len().div_ceil(workers).max(1);
        let parts: Vec<A> = std::thread::scope(|scope| {
            let handles: Vec<_> = roots
                .chunks(chunk)
                .map(|part| {
                    let init = &init;
                    let visit = &visit;
                    scope.spawn(move || {
                        let mut acc = init();
                        for (play, pos, mass, base) in part {
                            let mut st = State {
                                play: play.clone(),
                                pos: pos.clone(),
                                mass: mass.clone(),
                            };
                            self.rec(split, *base, &mut st, &mut |s, b| {
                                visit(&mut acc, s, self.weight(s, b))
                            });
                        }
                        acc
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let mut it = parts.into_iter();
        let mut acc = it.next().unwrap_or_else(&init);
        for p in it {
            merge(&mut acc, p);
        }
        acc
    }
}

fn profile_levels(game: &ValidatedGame, profile: &Profile) -> Result<Vec<Levels>> {
    let p = Profile::new(game, profile.measures.clone())?;
    Ok(p.measures.iter().map(|m| m.levels(game)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlayDistribution {
    /// Plays as grid indices `(a0, s1, a1, ...)`.
    pub plays: Vec<Vec<usize>>,
    pub prob: Vec<f64>,
}

impl PlayDistribution {
    pub fn total(&self) -> f64 {
        self.prob.iter().sum()
    }

    /// CSV with one row per play: coordinate labels, probability, each player's payoff.
    pub fn to_csv(&self, game: &ValidatedGame) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["a0".to_string()];
        for t in 1..game.horizon() {
            header.push(format!("s{t}"));
            header.push(format!("a{t}"));
        }
        header.push("probability".into());
        for p in game.players() {
            header.push(format!("payoff_{p}"));
        }
        w.write_record(&header).unwrap();
        for (play, &pr) in self.plays.iter().zip(&self.prob) {
            let mut rec = game.play_labels(play);
            rec.push(format!("{pr:?}"));
            for slot in 0..game.players().len() {
                rec.push(format!("{:?}", game.payoff(slot, play)));
            }
            w.write_record(&rec).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    /// Expectation of a function of the play.
    pub fn expect<F: Fn(&[usize]) -> f64>(&self, f: F) -> f64 {
        self.plays.iter().zip(&self.prob).map(|(p, q)| q * f(p)).sum()
    }
}

/// Probability of every play: `ν(a0) · Π_i m_i(x_i) · Π_t g_t(h, s_t)`.
pub fn play_distribution(game: &ValidatedGame, profile: &Profile) -> Result<PlayDistribution> {
    let lv = profile_levels(game, profile)?;
    let walker = Walker::new(game, lv.iter().map(Some).collect(), game.radix().len());
    let mut plays = Vec::new();
    let mut prob = Vec::new();
    walker.run(&mut |st, w| {
        if w > 0.0 {
            plays.push(st.play.clone());
            prob.push(w);
        }
    });
    Ok(PlayDistribution { plays, prob })
}

pub fn expected_payoff(game: &ValidatedGame, profile: &Profile, player: usize) -> Result<f64> {
    let slot = game
        .slot(player)
        .ok_or_else(|| Error::MismatchedPlayers(format!("player {player} is not in the game")))?;
    let lv = profile_levels(game, profile)?;
    let walker = Walker::new(game, lv.iter().map(Some).collect(), game.radix().len());
    let mut total = 0.0;
    walker.run(&mut |st, w| total += w * game.payoff(slot, &st.play));
    Ok(total)
}

/// Per own trajectory `x` of one player: `w[x]` is the payoff mass and `p[x]`
/// the probability mass contributed by everything except the player's own
/// measure. Expected payoff is `Σ m(x) w[x]`; reach of an own prefix is the
/// corresponding sum of `m(x) p[x]`.
#[derive(Clone, Debug)]
pub struct OwnValues {
    pub player: usize,
    pub w: Vec<f64>,
    pub p: Vec<f64>,
}

pub fn own_values(game: &ValidatedGame, profile: &Profile, player: usize, workers: usize) -> Result<OwnValues> {
    let slot = game
        .slot(player)
        .ok_or_else(|| Error::MismatchedPlayers(format!("player {player} is not in the game")))?;
    let lv = profile_levels(game, profile)?;
    Ok(own_values_from_levels(game, &lv, slot, workers))
}

pub(crate) fn own_values_from_levels(
    game: &ValidatedGame,
    lv: &[Levels],
    slot: usize,
    workers: usize,
) -> OwnValues {
    let levels: Vec<Option<&Levels>> = lv
        .iter()
        .enumerate()
        .map(|(i, l)| if i == slot { None } else { Some(l) })
        .collect();
    own_values_with(game, levels, slot, workers)
}

pub(crate) fn own_values_with(
    game: &ValidatedGame,
    levels: Vec<Option<&Levels>>,
    slot: usize,
    workers: usize,
) -> OwnValues {
    let n = game.spaces()[slot].leaf_count();
    let has_steps = game.spaces()[slot].steps() > 0;
    let walker = Walker::new(game, levels, game.radix().len());
    let (w, p) = walker.run_parallel(
        workers,
        || (vec![0.0; n], vec![0.0; n]),
        |acc, st, wt| {
            if wt == 0.0 {
                return;
            }
            let leaf = if has_steps { st.pos[slot] } else { 0 };
            acc.0[leaf] += wt * game.payoff(slot, &st.play);
            acc.1[leaf] += wt;
        },
        |acc, part| {
            for (a, b) in acc.0.iter_mut().zip(part.0) {
                *a += b;
            }
            for (a, b) in acc.1.iter_mut().zip(part.1) {
                *a += b;
            }
        },
    );
    OwnValues {
        player: game.players()[slot],
        w,
        p,
    }
}

/// Reach probability of every information set of the player at own step `k`.
pub(crate) fn info_reach(game: &ValidatedGame, lv: &[Levels], slot: usize, k: usize) -> Vec<f64> {
    let space = &game.spaces()[slot];
    let period = space.periods[k];
    let walker = Walker::new(game, lv.iter().map(Some).collect(), 2 * period);
    let mut reach = vec![0.0; space.info_count[k]];
    walker.run(&mut |st, w| reach[st.pos[slot]] += w);
    reach
}

/// Expected payoff of `player` over plays through `f`, divided by the reach probability.
pub fn conditional_payoff(
    game: &ValidatedGame,
    profile: &Profile,
    f: &RelevantSet,
    player: usize,
) -> Result<f64> {
    let slot_f = game.slot(f.player).ok_or_else(|| {
        Error::MismatchedPlayers(format!("player {} is not in the game", f.player))
    })?;
    let slot = game
        .slot(player)
        .ok_or_else(|| Error::MismatchedPlayers(format!("player {player} is not in the game")))?;
    let lv = profile_levels(game, profile)?;
    let space = &game.spaces()[slot_f];
    let k = f.step;
    let mut member = vec![false; space.info_count[k]];
    for &i in &f.members {
        member[i] = true;
    }
    let walker = Walker::new(game, lv.iter().map(Some).collect(), game.radix().len());
    let per = space.leaves_below_info(k);
    let mut num = 0.0;
    let mut den = 0.0;
    walker.run(&mut |st, w| {
        let leaf = st.pos[slot_f];
        if member[leaf / per] {
            num += w * game.payoff(slot, &st.play);
            den += w;
        }
    });
    if den <= 0.0 {
        return Err(Error::ZeroReach {
            player: f.player,
            period: f.period,
        });
    }
    Ok(num / den)
}

fn mixed_radix_digits(mut r: usize, rad: &[usize]) -> Vec<usize> {
    let mut out = vec![0; rad.len()];
    for i in (0..rad.len()).rev() {
        out[i] = r % rad[i];
        r /= rad[i];
    }
    out
}

/// Equivalent game with uninformative signals: every density becomes 1 and each
/// payoff is multiplied by the density product along the play. Densities that
/// are already identically 1 are left out of the product, so such games keep
/// their payoff tables unchanged.
pub fn fold_densities(game: &ValidatedGame) -> Result<ValidatedGame> {
    let spec = game.spec();
    let t_n = game.horizon();
    let informative: Vec<usize> = (1..t_n)
        .filter(|&t| {
            spec.density[t]
                .as_ref()
                .map(|d| d.values.iter().any(|&v| v != 1.0))
                .unwrap_or(false)
        })
        .collect();
    let radix = game.radix();
    let mut payoffs = BTreeMap::new();
    for (&pl, tab) in &spec.payoffs {
        if informative.is_empty() {
            payoffs.insert(pl, tab.clone());
            continue;
        }
        let mut mask = tab.mask.clone();
        for &t in &informative {
            mask.extend(spec.density[t].as_ref().unwrap().mask.iter().copied());
            mask.push(2 * t - 1);
        }
        mask.sort_unstable();
        mask.dedup();
        let rad: Vec<usize> = mask.iter().map(|&c| radix[c]).collect();
        let rows: u128 = rad.iter().map(|&r| r as u128).product();
        if rows > crate::game::DEFAULT_PLAY_CAP {
            return Err(Error::CapExceeded {
                what: format!("folded payoff table of player {pl}"),
                size: rows,
                cap: crate::game::DEFAULT_PLAY_CAP,
            });
        }
        let slot = game.slot(pl).unwrap();
        let mut play = vec![0usize; radix.len()];
        let mut values = Vec::with_capacity(rows as usize);
        for r in 0..rows as usize {
            for (c, d) in mask.iter().zip(mixed_radix_digits(r, &rad)) {
                play[*c] = d;
            }
            let mut v = game.payoff(slot, &play);
            for &t in &informative {
                v *= game.density(t, &play, play[2 * t - 1]);
            }
            values.push(v);
        }
        payoffs.insert(pl, Table { mask, values });
    }
    let folded = GameSpec {
        density: vec![None; t_n],
        payoffs,
        ..spec.clone()
    };
    ValidatedGame::with_cap(folded, u128::MAX)
}
