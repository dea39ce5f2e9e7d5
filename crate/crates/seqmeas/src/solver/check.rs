//! Semi-decision procedure for sequential-equilibrium candidates.
//!
//! REJECT needs a lower bound on the conditional gap that holds for every
//! profile within `tol` (per-player total variation) of the candidate:
//!
//! * a relevant set reached with probability `r > 0` and gap `g`: moving every
//!   measure by at most `tol` moves the joint play measure by at most
//!   `η = 2·tol·Σ_j κ_j` in L1, where `κ_j` bounds player `j`'s density factors;
//!   each conditional expectation then moves by at most `2·R·η/(r-η)`.
//! * an unreached set in the last period: whatever the beliefs over the
//!   opponents' histories, some action beats the candidate's rule by the value
//!   of a zero-sum game, up to `2·R·tol/(m - 2·tol)` for the rule's own drift,
//!   `m` being the player's own mass at the set.
//!
//! ACCEPT needs, for every `ε` in the schedule, a positive-reach profile within
//! `tol` of the candidate whose conditional gaps are all at most `ε`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::debug;

use crate::game::ValidatedGame;
use crate::measure::{induce_unchecked, Levels, Profile, StrategicMeasure};
use crate::play::Walker;
use crate::relevance::{all_atomic_relevant_sets, RelevantSet};

use super::analysis::{analyze_profile, PlayerAnalysis};
use super::lemke::lemke_howson;
use super::sequential::level_gaps;

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub eps_schedule: Vec<f64>,
    pub tol: f64,
    /// Number of witness constructions allowed, the candidate itself included.
    pub budget: usize,
    pub workers: usize,
    /// Largest number of opponent histories examined at one unreached set.
    pub history_cap: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            eps_schedule: vec![1e-1, 1e-2, 1e-3],
            tol: 1e-4,
            budget: 16,
            workers: 1,
            history_cap: 20_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Accept => "ACCEPT",
            Verdict::Reject => "REJECT",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Accept => 0,
            Verdict::Reject => 3,
            Verdict::Inconclusive => 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub set: RelevantSet,
    pub label: String,
    /// Reach probability under the candidate.
    pub reach: f64,
    /// Gap under the candidate (positive reach) or the zero-sum value (unreached).
    pub gap: f64,
    /// Lower bound valid for every profile within `tol` of the candidate.
    pub lower_bound: f64,
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub eps: f64,
    /// Floor level of the construction; 0 for the candidate itself.
    pub n: u64,
    pub tv: f64,
    pub max_gap: f64,
    pub min_reach: f64,
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub verdict: Verdict,
    pub violation: Option<Violation>,
    pub witnesses: Vec<Witness>,
    pub attempts: usize,
    pub evidence: String,
}

struct Candidate<'a> {
    game: &'a ValidatedGame,
    sets: Vec<RelevantSet>,
    analysis: Vec<PlayerAnalysis>,
    levels: Vec<Levels>,
}

fn rejection_positive(c: &Candidate, tol: f64) -> Option<Violation> {
    let game = c.game;
    let kappa: f64 = game
        .spaces()
        .iter()
        .map(|sp| {
            sp.periods
                .iter()
                .map(|&t| game.density_bound(t).iter().cloned().fold(0.0, f64::max))
                .product::<f64>()
        })
        .sum();
    let eta = 2.0 * tol * kappa;
    let (gaps, _) = level_gaps(game, &c.analysis, &c.sets);
    let mut best: Option<Violation> = None;
    for g in gaps {
        if !(g.reach > eta) {
            continue;
        }
        let range = game.payoff_range(g.set.player);
        let lb = g.gap - 4.0 * range * eta / (g.reach - eta);
        if best.as_ref().map_or(true, |b| lb > b.lower_bound) {
            best = Some(Violation {
                label: g.set.label(game),
                set: g.set,
                reach: g.reach,
                gap: g.gap,
                lower_bound: lb,
            });
        }
    }
    best
}

/// Value of the zero-sum game in which the row player picks an action and the
/// column player a history.
fn zero_sum_value(m: &[Vec<f64>]) -> Option<f64> {
    let neg: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
    let (x, y) = lemke_howson(m, &neg, 0)?;
    let mut v = 0.0;
    for (i, row) in m.iter().enumerate() {
        for (j, &a) in row.iter().enumerate() {
            v += x[i] * y[j] * a;
        }
    }
    Some(v)
}

fn rejection_unreached(c: &Candidate, opts: &CheckOptions) -> Option<Violation> {
    let game = c.game;
    let t_last = game.horizon() - 1;
    if t_last == 0 {
        return None;
    }
    let player = game.active(t_last);
    let slot = game.slot(player).unwrap();
    let space = &game.spaces()[slot];
    let k = space.step_of(t_last).unwrap();
    let reach = &c.analysis[slot].steps[k].reach;
    let own = &c.levels[slot];
    let targets: Vec<&RelevantSet> = c
        .sets
        .iter()
        .filter(|f| {
            f.period == t_last && f.members.iter().all(|&i| reach[i] == 0.0 && own.info[k][i] > 2.0 * opts.tol)
        })
        .collect();
    if targets.is_empty() {
        return None;
    }
    let wanted: BTreeMap<usize, ()> = targets.iter().map(|f| (f.members[0], ())).collect();
    // Every history up to the last signal with positive density, grouped by the
    // acting player's information set.
    let levels: Vec<Option<&Levels>> = vec![None; game.players().len()];
    let walker = Walker::new(game, levels, 2 * t_last);
    let mut hist: BTreeMap<usize, Vec<Vec<usize>>> = BTreeMap::new();
    let mut overflow = false;
    walker.run(&mut |st, w| {
        if w <= 0.0 || !wanted.contains_key(&st.pos[slot]) {
            return;
        }
        let e = hist.entry(st.pos[slot]).or_default();
        if e.len() >= opts.history_cap {
            overflow = true;
            return;
        }
        e.push(st.play.clone());
    });
    if overflow {
        debug!("history cap reached; unreached sets with too many histories are skipped");
    }
    let range = game.payoff_range(player);
    let a_n = space.act[k];
    let mut best: Option<Violation> = None;
    for f in targets {
        let info = f.members[0];
        let Some(hs) = hist.get(&info) else { continue };
        if hs.len() >= opts.history_cap {
            continue;
        }
        let own_mass = own.info[k][info];
        let beta: Vec<f64> = own.node[k][info * a_n..(info + 1) * a_n]
            .iter()
            .map(|x| x / own_mass)
            .collect();
        let avail: Vec<usize> = space.available(k, info).collect();
        let mut rows = vec![vec![0.0; hs.len()]; avail.len()];
        for (j, h) in hs.iter().enumerate() {
            let mut play = h.clone();
            let mut vals = vec![0.0; a_n];
            for &a in &avail {
                play[2 * t_last] = a;
                vals[a] = game.payoff(slot, &play);
            }
            let cur: f64 = avail.iter().map(|&a| beta[a] * vals[a]).sum();
            for (r, &a) in avail.iter().enumerate() {
                rows[r][j] = vals[a] - cur;
            }
        }
        let Some(value) = zero_sum_value(&rows) else { continue };
        let lb = value - 2.0 * range * opts.tol / (own_mass - 2.0 * opts.tol);
        if best.as_ref().map_or(true, |b| lb > b.lower_bound) {
            best = Some(Violation {
                set: f.clone(),
                label: f.label(game),
                reach: 0.0,
                gap: value,
                lower_bound: lb,
            });
        }
    }
    best
}

fn evaluate(game: &ValidatedGame, sets: &[RelevantSet], p: &Profile, workers: usize) -> Option<(f64, f64)> {
    let an = analyze_profile(game, p, workers).ok()?;
    let (gaps, _) = level_gaps(game, &an, sets);
    let min_reach = gaps.iter().map(|g| g.reach).fold(f64::INFINITY, f64::min);
    let max_gap = gaps.iter().map(|g| g.gap).fold(0.0, f64::max);
    Some((max_gap, if sets.is_empty() { 1.0 } else { min_reach }))
}

/// Conditional rules of a full-support measure.
fn rules_of(game: &ValidatedGame, m: &StrategicMeasure) -> Vec<Vec<f64>> {
    let space = game.space(m.player).unwrap();
    let lv = m.levels(game);
    (0..space.steps())
        .map(|k| {
            let a_n = space.act[k];
            let mut r = vec![0.0; space.info_count[k] * a_n];
            for info in 0..space.info_count[k] {
                let im = lv.info[k][info];
                if im > 0.0 {
                    for a in 0..a_n {
                        r[info * a_n + a] = lv.node[k][info * a_n + a] / im;
                    }
                }
            }
            r
        })
        .collect()
}

/// Candidate mixed with the uniform profile, with the behavior at its
/// low-mass own information sets replaced by floored best responses.
fn construct(game: &ValidatedGame, cand: &Profile, tol: f64, n: u64, workers: usize) -> Option<Profile> {
    let lam = tol / 2.0;
    let uni = Profile::uniform(game);
    let base: Vec<StrategicMeasure> = cand
        .measures
        .iter()
        .zip(&uni.measures)
        .map(|(c, u)| StrategicMeasure {
            player: c.player,
            mass: c.mass.iter().zip(&u.mass).map(|(x, y)| (1.0 - lam) * x + lam * y).collect(),
        })
        .collect();
    // Information sets to re-optimize: smallest own mass first, within budget.
    let mut replace: Vec<Vec<Vec<bool>>> = Vec::new();
    let mut base_rules = Vec::new();
    for m in &base {
        let space = game.space(m.player).unwrap();
        let lv = m.levels(game);
        let mut all: Vec<(f64, usize, usize)> = Vec::new();
        for k in 0..space.steps() {
            for info in 0..space.info_count[k] {
                if space.feasible_info[k][info] {
                    all.push((lv.info[k][info], k, info));
                }
            }
        }
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut flags: Vec<Vec<bool>> = (0..space.steps()).map(|k| vec![false; space.info_count[k]]).collect();
        let mut spent = 0.0;
        for (mass, k, info) in all {
            if spent + mass > tol - lam {
                break;
            }
            spent += mass;
            flags[k][info] = true;
        }
        replace.push(flags);
        base_rules.push(rules_of(game, m));
    }
    let floor = 1.0 / n as f64;
    let mut profile = Profile { measures: base };
    for _sweep in 0..4 {
        let an = analyze_profile(game, &profile, workers).ok()?;
        let mut next = Vec::with_capacity(profile.measures.len());
        for (slot, m) in profile.measures.iter().enumerate() {
            let space = &game.spaces()[slot];
            let mut rules = base_rules[slot].clone();
            for k in 0..space.steps() {
                let a_n = space.act[k];
                for info in 0..space.info_count[k] {
                    if !replace[slot][k][info] {
                        continue;
                    }
                    let avail: Vec<usize> = space.available(k, info).collect();
                    let u = floor / avail.len() as f64;
                    for a in 0..a_n {
                        rules[k][info * a_n + a] = 0.0;
                    }
                    for &a in &avail {
                        rules[k][info * a_n + a] = u;
                    }
                    rules[k][info * a_n + an[slot].backward.choice[k][info]] += 1.0 - floor;
                }
            }
            next.push(StrategicMeasure {
                player: m.player,
                mass: induce_unchecked(space, &rules),
            });
        }
        profile = Profile { measures: next };
    }
    Some(profile)
}

/// Verdict on a candidate profile with the evidence behind it.
pub fn check_sequential(game: &ValidatedGame, candidate: &Profile, opts: &CheckOptions) -> crate::error::Result<CheckResult> {
    let candidate = Profile::new(game, candidate.measures.clone())?;
    candidate.validate(game)?;
    let sets = all_atomic_relevant_sets(game);
    let analysis = analyze_profile(game, &candidate, opts.workers)?;
    let levels = candidate.measures.iter().map(|m| m.levels(game)).collect();
    let c = Candidate {
        game,
        sets: sets.clone(),
        analysis,
        levels,
    };
    let mut eps: Vec<f64> = opts.eps_schedule.clone();
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let eps_min = eps.last().copied().unwrap_or(0.0);
    let mut evidence = String::new();
    let _ = writeln!(evidence, "check: tol = {:?}, eps schedule = {:?}, budget = {}", opts.tol, eps, opts.budget);

    let mut violation = rejection_positive(&c, opts.tol);
    if let Some(v2) = rejection_unreached(&c, opts) {
        if violation.as_ref().map_or(true, |v| v2.lower_bound > v.lower_bound) {
            violation = Some(v2);
        }
    }
    if let Some(v) = &violation {
        let _ = writeln!(
            evidence,
            "largest gap lower bound: set {} [{}], reach {:e}, gap {:e}, lower bound {:e}",
            v.set.id(),
            v.label,
            v.reach,
            v.gap,
            v.lower_bound
        );
        if v.lower_bound > eps_min {
            let _ = writeln!(
                evidence,
                "REJECT: every profile within tol has conditional gap above {eps_min:e} at this set"
            );
            return Ok(CheckResult {
                verdict: Verdict::Reject,
                violation,
                witnesses: Vec::new(),
                attempts: 0,
                evidence,
            });
        }
    }

    let range = game
        .players()
        .iter()
        .map(|&p| game.payoff_range(p))
        .fold(0.0, f64::max);
    let mut attempts = 0;
    let mut witnesses = Vec::new();
    let mut cand_eval: Option<Option<(f64, f64)>> = None;
    'eps: for &e in &eps {
        // the candidate itself
        if attempts >= opts.budget {
            break;
        }
        attempts += 1;
        let ev = *cand_eval.get_or_insert_with(|| evaluate(game, &sets, &candidate, opts.workers));
        if let Some((g, r)) = ev {
            if r > 0.0 && g <= e {
                let _ = writeln!(evidence, "eps {e:e}: candidate itself, max gap {g:e}, min reach {r:e}");
                witnesses.push(Witness { eps: e, n: 0, tv: 0.0, max_gap: g, min_reach: r });
                continue 'eps;
            }
        }
        let n0 = ((2.0 * range / e).ceil() as u64).max(2);
        let mut k = 0u32;
        while attempts < opts.budget {
            attempts += 1;
            let n = n0.saturating_mul(1u64 << k.min(40));
            k += 1;
            let Some(p) = construct(game, &candidate, opts.tol, n, opts.workers) else { continue };
            let tv = p.tv(&candidate);
            let Some((g, r)) = evaluate(game, &sets, &p, opts.workers) else { continue };
            debug!("eps {e:e}, n {n}: gap {g:e}, reach {r:e}, tv {tv:e}");
            if tv <= opts.tol && r > 0.0 && g <= e {
                let _ = writeln!(
                    evidence,
                    "eps {e:e}: constructed at n = {n}, distance {tv:e}, max gap {g:e}, min reach {r:e}"
                );
                witnesses.push(Witness { eps: e, n, tv, max_gap: g, min_reach: r });
                continue 'eps;
            }
        }
        break;
    }
    let verdict = if witnesses.len() == eps.len() {
        let _ = writeln!(evidence, "ACCEPT: witnesses found for every eps");
        Verdict::Accept
    } else {
        let _ = writeln!(
            evidence,
            "INCONCLUSIVE: {} of {} eps levels witnessed after {attempts} attempts",
            witnesses.len(),
            eps.len()
        );
        Verdict::Inconclusive
    };
    Ok(CheckResult {
        verdict,
        violation,
        witnesses,
        attempts,
        evidence,
    })
}
