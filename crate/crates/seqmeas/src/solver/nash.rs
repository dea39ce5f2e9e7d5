//! Nash equilibria of the game restricted to `M^n`.
//!
//! Two-player games use a double-oracle loop: each player's candidate set holds
//! pure elements of `M_i^n` (anchored components plus a pure rule everywhere
//! else); the restricted bimatrix game is solved exactly by Lemke–Howson and
//! each player's exact best response in `M_i^n` joins the set until no player
//! gains more than the tolerance. Other player counts use damped simultaneous
//! best responses. Whatever the route, the reported gains come from a fresh
//! exact best response against the final profile.

use log::{debug, info};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::ValidatedGame;
use crate::measure::{Levels, Profile, StrategicMeasure};
use crate::play::own_values_with;

use super::analysis::{analyze_profile, backward, PlayerAnalysis, Policy};
use super::lemke::lemke_howson;
use super::restricted::RestrictedSpace;

#[derive(Clone, Debug)]
pub struct NashOptions {
    pub tol: f64,
    pub max_rounds: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for NashOptions {
    fn default() -> Self {
        NashOptions {
            tol: 1e-9,
            max_rounds: 400,
            seed: 0,
            workers: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    SinglePlayer,
    DoubleOracle,
    DampedBestResponse,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::SinglePlayer => "single-player",
            Method::DoubleOracle => "double-oracle",
            Method::DampedBestResponse => "damped-best-response",
        }
    }
}

/// Pure rules carried from one level to the next.
#[derive(Clone, Debug, Default)]
pub struct WarmStart {
    pub policies: Vec<Vec<Policy>>,
}

#[derive(Clone, Debug)]
pub struct RestrictedEquilibrium {
    pub n: u64,
    pub profile: Profile,
    /// Exact gain of the best deviation inside `M_i^n`, per player.
    pub gains: Vec<f64>,
    pub nash_gap: f64,
    pub method: Method,
    pub rounds: usize,
    pub converged: bool,
    pub warm: WarmStart,
    pub analysis: Vec<PlayerAnalysis>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Restricted equilibrium at level `n`; `Err(NonConvergence)` when the budget
/// runs out before every gain is within `opts.tol`.
pub fn restricted_nash(
    game: &ValidatedGame,
    spaces: &[RestrictedSpace],
    opts: &NashOptions,
) -> Result<RestrictedEquilibrium> {
    let eq = solve_restricted(game, spaces, opts, None)?;
    if !eq.converged {
        return Err(Error::NonConvergence {
            detail: format!("restricted equilibrium at n = {}", eq.n),
            best_gap: eq.nash_gap,
        });
    }
    Ok(eq)
}

/// Restricted equilibrium search that always returns its best profile.
pub fn solve_restricted(
    game: &ValidatedGame,
    spaces: &[RestrictedSpace],
    opts: &NashOptions,
    warm: Option<&WarmStart>,
) -> Result<RestrictedEquilibrium> {
    if spaces.len() != game.players().len()
        || spaces.iter().zip(game.players()).any(|(s, p)| s.player != *p)
    {
        return Err(Error::MismatchedPlayers(
            "one restricted space per proper player is required".into(),
        ));
    }
    let n = spaces.first().map(|s| s.n).unwrap_or(2);
    let moving: Vec<usize> = (0..spaces.len())
        .filter(|&s| game.spaces()[s].steps() > 0)
        .collect();
    let (profile, method, rounds, warm_out) = match moving.len() {
        0 | 1 => single(game, spaces, opts),
        2 => match double_oracle(game, spaces, opts, warm, &moving) {
            Some(r) => r,
            None => damped(game, spaces, opts),
        },
        _ => damped(game, spaces, opts),
    };
    finish(game, spaces, opts, profile, method, rounds, warm_out, n)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    game: &ValidatedGame,
    spaces: &[RestrictedSpace],
    opts: &NashOptions,
    profile: Profile,
    method: Method,
    rounds: usize,
    warm: WarmStart,
    n: u64,
) -> Result<RestrictedEquilibrium> {
    let analysis = analyze_profile(game, &profile, opts.workers)?;
    let gains: Vec<f64> = analysis
        .iter()
        .enumerate()
        .map(|(slot, a)| {
            let space = &game.spaces()[slot];
            let br = spaces[slot].compose(space, &a.backward.choice);
            (dot(&br.mass, &a.values.w) - a.payoff).max(0.0)
        })
        .collect();
    let nash_gap = gains.iter().cloned().fold(0.0, f64::max);
    let converged = nash_gap <= opts.tol;
    info!(
        "n = {n}: {} in {rounds} rounds, nash gap {nash_gap:e}",
        method.name()
    );
    Ok(RestrictedEquilibrium {
        n,
        profile,
        gains,
        nash_gap,
        method,
        rounds,
        converged,
        warm,
        analysis,
    })
}

fn best_element(game: &ValidatedGame, rs: &RestrictedSpace, slot: usize, w: &[f64]) -> (Policy, StrategicMeasure) {
    let space = &game.spaces()[slot];
    let bw = backward(space, w);
    let m = rs.compose(space, &bw.choice);
    (bw.choice, m)
}

fn anchor_levels(game: &ValidatedGame, spaces: &[RestrictedSpace]) -> Vec<Levels> {
    spaces.iter().map(|s| s.anchor.levels(game)).collect()
}

fn single(game: &ValidatedGame, spaces: &[RestrictedSpace], opts: &NashOptions) -> (Profile, Method, usize, WarmStart) {
    let lv = anchor_levels(game, spaces);
    let mut measures = Vec::new();
    let mut policies = Vec::new();
    for (slot, rs) in spaces.iter().enumerate() {
        // Moving players face only nature and players without moves.
        let levels: Vec<Option<&Levels>> = (0..spaces.len())
            .map(|j| if j == slot { None } else { Some(&lv[j]) })
            .collect();
        let v = own_values_with(game, levels, slot, opts.workers);
        let (pol, m) = best_element(game, rs, slot, &v.w);
        policies.push(vec![pol]);
        measures.push(m);
    }
    (
        Profile { measures },
        Method::SinglePlayer,
        1,
        WarmStart { policies },
    )
}

fn damped(game: &ValidatedGame, spaces: &[RestrictedSpace], opts: &NashOptions) -> (Profile, Method, usize, WarmStart) {
    let mut profile = Profile {
        measures: spaces.iter().map(|s| s.anchor.clone()).collect(),
    };
    let mut last_policies = vec![Vec::new(); spaces.len()];
    let mut rounds = 0;
    for round in 0..opts.max_rounds {
        rounds = round + 1;
        let lv: Vec<Levels> = profile.measures.iter().map(|m| m.levels(game)).collect();
        let mut brs = Vec::with_capacity(spaces.len());
        let mut gap = 0.0f64;
        for (slot, rs) in spaces.iter().enumerate() {
            let levels: Vec<Option<&Levels>> = (0..spaces.len())
                .map(|j| if j == slot { None } else { Some(&lv[j]) })
                .collect();
            let v = own_values_with(game, levels, slot, opts.workers);
            let (pol, br) = best_element(game, rs, slot, &v.w);
            let cur = dot(&profile.measures[slot].mass, &v.w);
            gap = gap.max(dot(&br.mass, &v.w) - cur);
            last_policies[slot] = vec![pol];
            brs.push(br);
        }
        debug!("damped round {round}: gap {gap:e}");
        if gap <= opts.tol && round > 0 {
            break;
        }
        let alpha = if round == 0 { 1.0 } else { 1.0 / (round as f64 + 1.0) };
        for (m, br) in profile.measures.iter_mut().zip(brs) {
            for (x, b) in m.mass.iter_mut().zip(&br.mass) {
                *x = (1.0 - alpha) * *x + alpha * b;
            }
        }
    }
    (
        profile,
        Method::DampedBestResponse,
        rounds,
        WarmStart {
            policies: last_policies,
        },
    )
}

struct Candidates {
    policies: Vec<Policy>,
    elems: Vec<StrategicMeasure>,
    levels: Vec<Levels>,
}

impl Candidates {
    fn push(&mut self, game: &ValidatedGame, pol: Policy, m: StrategicMeasure) -> bool {
        if self.policies.contains(&pol) {
            return false;
        }
        self.levels.push(m.levels(game));
        self.policies.push(pol);
        self.elems.push(m);
        true
    }
}

fn double_oracle(
    game: &ValidatedGame,
    spaces: &[RestrictedSpace],
    opts: &NashOptions,
    warm: Option<&WarmStart>,
    moving: &[usize],
) -> Option<(Profile, Method, usize, WarmStart)> {
    let (s0, s1) = (moving[0], moving[1]);
    let fixed = anchor_levels(game, spaces);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ spaces[0].n.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let values_against = |slot: usize, other: usize, lv: &Levels| -> Vec<f64> {
        let levels: Vec<Option<&Levels>> = (0..spaces.len())
            .map(|j| {
                if j == slot {
                    None
                } else if j == other {
                    Some(lv)
                } else {
                    Some(&fixed[j])
                }
            })
            .collect();
        own_values_with(game, levels, slot, opts.workers).w
    };
    let mut cand = [
        Candidates { policies: vec![], elems: vec![], levels: vec![] },
        Candidates { policies: vec![], elems: vec![], levels: vec![] },
    ];
    let slots = [s0, s1];
    for (c, &slot) in slots.iter().enumerate() {
        let other = slots[1 - c];
        let warm_pols = warm.and_then(|w| w.policies.get(slot)).cloned().unwrap_or_default();
        for pol in warm_pols {
            let m = spaces[slot].compose(&game.spaces()[slot], &pol);
            cand[c].push(game, pol, m);
        }
        if cand[c].policies.is_empty() {
            let w = values_against(slot, other, &fixed[other]);
            let (pol, m) = best_element(game, &spaces[slot], slot, &w);
            cand[c].push(game, pol, m);
        }
    }
    // w_cache[c][j]: utility vector of player c against the other's candidate j.
    let mut w_cache: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    let mut pay: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    let mut rounds = 0;
    let mut last: Option<(Vec<f64>, Vec<f64>)> = None;
    for round in 0..opts.max_rounds {
        rounds = round + 1;
        for c in 0..2 {
            let other = 1 - c;
            while w_cache[c].len() < cand[other].elems.len() {
                let j = w_cache[c].len();
                let w = values_against(slots[c], slots[other], &cand[other].levels[j]);
                w_cache[c].push(w);
            }
        }
        // payoff tables pay[c][own][other]
        for c in 0..2 {
            let other = 1 - c;
            let rows = cand[c].elems.len();
            let cols = cand[other].elems.len();
            pay[c].resize(rows, Vec::new());
            for (i, row) in pay[c].iter_mut().enumerate() {
                while row.len() < cols {
                    let j = row.len();
                    row.push(dot(&cand[c].elems[i].mass, &w_cache[c][j]));
                }
            }
        }
        let a = pay[0].clone();
        let b: Vec<Vec<f64>> = (0..cand[0].elems.len())
            .map(|i| (0..cand[1].elems.len()).map(|j| pay[1][j][i]).collect())
            .collect();
        let labels = a.len() + b[0].len();
        let first = if opts.seed == 0 { 0 } else { rng.gen_range(0..labels) };
        let sol = (0..labels)
            .map(|d| (first + d) % labels)
            .find_map(|k| lemke_howson(&a, &b, k));
        let (x, y) = match sol {
            Some(s) => s,
            None => {
                debug!("Lemke–Howson failed at round {round}");
                return None;
            }
        };
        let mix_w = |c: usize, weights: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; w_cache[c][0].len()];
            for (w, &p) in w_cache[c].iter().zip(weights) {
                if p > 0.0 {
                    for (o, v) in out.iter_mut().zip(w) {
                        *o += p * v;
                    }
                }
            }
            out
        };
        let mix_m = |c: usize, weights: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; cand[c].elems[0].mass.len()];
            for (m, &p) in cand[c].elems.iter().zip(weights) {
                if p > 0.0 {
                    for (o, v) in out.iter_mut().zip(&m.mass) {
                        *o += p * v;
                    }
                }
            }
            out
        };
        let w0 = mix_w(0, &y);
        let w1 = mix_w(1, &x);
        let m0 = mix_m(0, &x);
        let m1 = mix_m(1, &y);
        let (p0, e0) = best_element(game, &spaces[s0], s0, &w0);
        let (p1, e1) = best_element(game, &spaces[s1], s1, &w1);
        let g0 = dot(&e0.mass, &w0) - dot(&m0, &w0);
        let g1 = dot(&e1.mass, &w1) - dot(&m1, &w1);
        debug!(
            "double oracle round {round}: sizes {}x{}, gains {g0:e} {g1:e}",
            x.len(),
            y.len()
        );
        last = Some((x.clone(), y.clone()));
        if g0 <= opts.tol && g1 <= opts.tol {
            break;
        }
        let mut added = false;
        if g0 > opts.tol {
            added |= cand[0].push(game, p0, e0);
        }
        if g1 > opts.tol {
            added |= cand[1].push(game, p1, e1);
        }
        if !added {
            debug!("double oracle stalled at round {round}");
            break;
        }
    }
    let (x, y) = last?;
    let mut measures: Vec<StrategicMeasure> = spaces.iter().map(|s| s.anchor.clone()).collect();
    let mut policies: Vec<Vec<Policy>> = vec![Vec::new(); spaces.len()];
    for (c, weights) in [x, y].iter().enumerate() {
        let slot = slots[c];
        let mut mass = vec![0.0; cand[c].elems[0].mass.len()];
        for (i, (m, &p)) in cand[c].elems.iter().zip(weights).enumerate() {
            if p > 0.0 {
                for (o, v) in mass.iter_mut().zip(&m.mass) {
                    *o += p * v;
                }
                if p > 1e-12 {
                    policies[slot].push(cand[c].policies[i].clone());
                }
            }
        }
        measures[slot] = StrategicMeasure {
            player: spaces[slot].player,
            mass,
        };
    }
    // Players without moves hold the trivial measure.
    for (slot, m) in measures.iter_mut().enumerate() {
        if !slots.contains(&slot) {
            *m = spaces[slot].anchor.clone();
        }
    }
    Some((
        Profile { measures },
        Method::DoubleOracle,
        rounds,
        WarmStart { policies },
    ))
}
