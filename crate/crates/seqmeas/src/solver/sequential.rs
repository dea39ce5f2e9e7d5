//! Sequences of restricted equilibria and their certificates.

use std::fmt::Write as _;

use log::info;

use crate::error::{Error, Result};
use crate::game::ValidatedGame;
use crate::measure::Profile;
use crate::play::expected_payoff;
use crate::relevance::{all_atomic_relevant_sets, RelevantSet};

use super::nash::{solve_restricted, Method, NashOptions, WarmStart};
use super::restricted::restricted_spaces;

#[derive(Clone, Debug)]
pub struct SeqOptions {
    pub schedule: Vec<u64>,
    pub eps_target: f64,
    pub conv_tol: f64,
    pub nash: NashOptions,
}

impl Default for SeqOptions {
    fn default() -> Self {
        SeqOptions {
            schedule: default_schedule(),
            eps_target: 1e-3,
            conv_tol: 1e-4,
            nash: NashOptions::default(),
        }
    }
}

/// `2, 4, ..., 256`.
pub fn default_schedule() -> Vec<u64> {
    (1..=8).map(|k| 1u64 << k).collect()
}

#[derive(Clone, Debug)]
pub struct SetGap {
    pub set: RelevantSet,
    pub reach: f64,
    pub gap: f64,
}

/// One level of the sequence.
#[derive(Clone, Debug)]
pub struct LevelRecord {
    pub n: u64,
    pub profile: Profile,
    pub method: Method,
    pub rounds: usize,
    /// Largest gain from deviating inside the restricted spaces.
    pub nash_gap: f64,
    /// Per player: gain of an unrestricted best response.
    pub unrestricted_gaps: Vec<f64>,
    pub set_gaps: Vec<SetGap>,
    pub max_gap: f64,
    /// `(payoff range)/n + nash tol`.
    pub bound: f64,
    /// Distance to the previous level's profile.
    pub tv_prev: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SeqEqCertificate {
    pub limit: Profile,
    pub sequence: Vec<LevelRecord>,
    pub schedule: Vec<u64>,
    pub eps_target: f64,
    pub nash_tol: f64,
    pub conv_tol: f64,
    pub seed: u64,
    pub converged: bool,
    /// Gaps are nonincreasing from this record on.
    pub burn_in: usize,
    pub detail: String,
}

fn check_schedule(s: &[u64]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidParameters("schedule is empty".into()));
    }
    if s[0] < 2 || s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameters(format!(
            "schedule must be increasing and start at 2 or more: {s:?}"
        )));
    }
    Ok(())
}

/// Conditional gap at every atomic relevant set, plus the per-player
/// unrestricted gaps, for a positive-reach profile.
pub fn level_gaps(
    game: &ValidatedGame,
    analysis: &[super::analysis::PlayerAnalysis],
    sets: &[RelevantSet],
) -> (Vec<SetGap>, Vec<f64>) {
    let set_gaps = sets
        .iter()
        .map(|f| {
            let slot = game.slot(f.player).unwrap();
            let st = &analysis[slot].steps[f.step];
            let reach: f64 = f.members.iter().map(|&i| st.reach[i]).sum();
            SetGap {
                set: f.clone(),
                reach,
                gap: st.gap(&f.members).unwrap_or(f64::INFINITY),
            }
        })
        .collect();
    let unrestricted = analysis
        .iter()
        .map(|a| (a.best_payoff - a.payoff).max(0.0))
        .collect();
    (set_gaps, unrestricted)
}

fn burn_in(seq: &[LevelRecord], slack: f64) -> usize {
    let mut b = seq.len().saturating_sub(1);
    while b > 0 {
        let (prev, cur) = (&seq[b - 1], &seq[b]);
        if cur.max_gap <= prev.max_gap + slack && cur.nash_gap <= prev.nash_gap + slack {
            b -= 1;
        } else {
            break;
        }
    }
    b
}

/// Restricted equilibria along the schedule until successive profiles agree
/// within `conv_tol` and every conditional gap is within `eps_target`.
///
/// Running out of schedule yields a certificate with `converged == false`.
pub fn sequential_equilibrium(game: &ValidatedGame, opts: &SeqOptions) -> Result<SeqEqCertificate> {
    check_schedule(&opts.schedule)?;
    if !(opts.eps_target > 0.0) || !(opts.conv_tol > 0.0) || !(opts.nash.tol > 0.0) {
        return Err(Error::InvalidParameters("tolerances must be positive".into()));
    }
    let sets = all_atomic_relevant_sets(game);
    let range = game
        .players()
        .iter()
        .map(|&p| game.payoff_range(p))
        .fold(0.0, f64::max);
    let mut warm: Option<WarmStart> = None;
    let mut seq: Vec<LevelRecord> = Vec::new();
    let mut converged = false;
    let mut detail = String::from("schedule exhausted");
    for &n in &opts.schedule {
        let spaces = restricted_spaces(game, n)?;
        let eq = solve_restricted(game, &spaces, &opts.nash, warm.as_ref())?;
        let (set_gaps, unrestricted) = level_gaps(game, &eq.analysis, &sets);
        let max_gap = set_gaps.iter().map(|g| g.gap).fold(0.0, f64::max);
        let tv_prev = seq.last().map(|r| r.profile.tv(&eq.profile));
        info!(
            "n = {n}: max conditional gap {max_gap:e}, nash gap {:e}, tv {:?}",
            eq.nash_gap, tv_prev
        );
        seq.push(LevelRecord {
            n,
            profile: eq.profile.clone(),
            method: eq.method,
            rounds: eq.rounds,
            nash_gap: eq.nash_gap,
            unrestricted_gaps: unrestricted,
            set_gaps,
            max_gap,
            bound: range / n as f64 + opts.nash.tol,
            tv_prev,
        });
        warm = Some(eq.warm);
        if let Some(tv) = tv_prev {
            if tv <= opts.conv_tol && max_gap <= opts.eps_target && eq.nash_gap <= opts.nash.tol {
                converged = true;
                detail = format!("converged at n = {n}");
                break;
            }
        }
    }
    let limit = seq.last().unwrap().profile.clone();
    let b = burn_in(&seq, opts.nash.tol);
    Ok(SeqEqCertificate {
        limit,
        schedule: opts.schedule.clone(),
        eps_target: opts.eps_target,
        nash_tol: opts.nash.tol,
        conv_tol: opts.conv_tol,
        seed: opts.nash.seed,
        converged,
        burn_in: b,
        detail,
        sequence: seq,
    })
}

impl SeqEqCertificate {
    /// Structural checks of the certificate's invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Error::InvalidParameters(format!("certificate: {s}"));
        for r in &self.sequence {
            if r.nash_gap < 0.0 || r.set_gaps.iter().any(|g| !(g.gap >= 0.0)) {
                return Err(bad(format!("negative gap at n = {}", r.n)));
            }
        }
        for w in self.sequence[self.burn_in.min(self.sequence.len())..].windows(2) {
            if w[1].max_gap > w[0].max_gap + self.nash_tol {
                return Err(bad(format!("gaps increase after burn-in at n = {}", w[1].n)));
            }
        }
        if self.converged {
            let tv = self.sequence.last().and_then(|r| r.tv_prev).unwrap_or(f64::INFINITY);
            if tv > self.conv_tol {
                return Err(bad(format!("last distance {tv:e} exceeds {:e}", self.conv_tol)));
            }
        }
        Ok(())
    }

    pub fn last(&self) -> &LevelRecord {
        self.sequence.last().unwrap()
    }

    pub fn report(&self, game: &ValidatedGame) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sequential equilibrium certificate");
        let _ = writeln!(s, "status: {}", if self.converged { "CONVERGED" } else { "NON_CONVERGENCE" });
        let _ = writeln!(s, "detail: {}", self.detail);
        let _ = writeln!(s, "schedule: {:?}", self.schedule);
        let _ = writeln!(
            s,
            "tolerances: eps_target = {:?}, nash_tol = {:?}, conv_tol = {:?}",
            self.eps_target, self.nash_tol, self.conv_tol
        );
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "burn_in: {}", self.burn_in);
        let _ = writeln!(s);
        let _ = writeln!(s, "n\tmethod\trounds\tnash_gap\tmax_conditional_gap\tbound\ttv_prev\tunrestricted_gaps");
        for r in &self.sequence {
            let tv = r.tv_prev.map(|x| format!("{x:e}")).unwrap_or_else(|| "-".into());
            let ug: Vec<String> = r.unrestricted_gaps.iter().map(|g| format!("{g:e}")).collect();
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{:e}\t{:e}\t{:e}\t{}\t{}",
                r.n,
                r.method.name(),
                r.rounds,
                r.nash_gap,
                r.max_gap,
                r.bound,
                tv,
                ug.join(" ")
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "limit payoffs:");
        for &p in game.players() {
            let v = expected_payoff(game, &self.limit, p).unwrap_or(f64::NAN);
            let _ = writeln!(s, "  player {p}: {v:?}");
        }
        let _ = writeln!(s, "limit conditional gaps:");
        for g in &self.last().set_gaps {
            let _ = writeln!(
                s,
                "  {} [{}] reach {:e} gap {:e}",
                g.set.id(),
                g.set.label(game),
                g.reach,
                g.gap
            );
        }
        s
    }

    /// One row per level and atomic set.
    pub fn gaps_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "player", "period", "set_id", "reach", "conditional_gap", "nash_gap"])
            .unwrap();
        for r in &self.sequence {
            for g in &r.set_gaps {
                w.write_record([
                    r.n.to_string(),
                    g.set.player.to_string(),
                    g.set.period.to_string(),
                    g.set.id(),
                    format!("{:?}", g.reach),
                    format!("{:?}", g.gap),
                    format!("{:?}", r.nash_gap),
                ])
                .unwrap();
            }
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}
