//! Finite multistage games with noisy signals.
//!
//! Periods run `0..T`. Period 0 belongs to nature, which draws `a0` from `nature`.
//! Every later period `t` has one active player who first receives a signal `s_t`
//! and then picks an action `a_t`. A complete play is the coordinate vector
//! `(a0, s1, a1, s2, a2, ...)`: coordinate `0` is `a0`, `2t-1` is `s_t`, `2t` is `a_t`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const NATURE: usize = 0;
/// Absolute tolerance for normalization and marginal checks.
pub const TOL: f64 = 1e-12;
pub const DEFAULT_PLAY_CAP: u128 = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub labels: Vec<String>,
    pub coords: Option<Vec<f64>>,
}

impl Grid {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Grid {
        Grid {
            labels: labels.into_iter().map(Into::into).collect(),
            coords: None,
        }
    }

    /// Grid of real points; labels are the shortest round-trip decimal forms.
    pub fn numeric(coords: Vec<f64>) -> Grid {
        Grid {
            labels: coords.iter().map(|x| format_real(*x)).collect(),
            coords: Some(coords),
        }
    }

    /// Single placeholder element, used for trivial signals and nature moves.
    pub fn trivial() -> Grid {
        Grid::new(["-"])
    }

    pub fn empty() -> Grid {
        Grid::new(Vec::<String>::new())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn coord(&self, i: usize) -> Option<f64> {
        self.coords.as_ref().map(|c| c[i])
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Real number formatted so that parsing it back gives the same bits.
pub fn format_real(x: f64) -> String {
    let s = format!("{x:?}");
    s
}

/// Dense table over a dependency mask of play coordinates, row-major with the
/// first mask coordinate varying slowest. Density tables carry one extra
/// trailing axis for the period's own signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub mask: Vec<usize>,
    pub values: Vec<f64>,
}

/// Allowed actions as a function of the active player's own coordinates.
/// `allowed` has one nonempty index list per row of the mask.
#[derive(Clone, Debug, PartialEq)]
pub struct Correspondence {
    pub mask: Vec<usize>,
    pub allowed: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TailRule {
    /// `b_t = 0` beyond the explicit values.
    Zero,
    /// `b_t = c` beyond the explicit values.
    Constant(f64),
    /// `b_t = scale * ratio^t` beyond the explicit values.
    Geometric { scale: f64, ratio: f64 },
}

/// Bounds `b_t` on how much a payoff can move when period `t`'s coordinates change.
#[derive(Clone, Debug, PartialEq)]
pub struct TailBound {
    pub values: Vec<f64>,
    pub rule: TailRule,
}

impl TailBound {
    pub fn at(&self, t: usize) -> f64 {
        if t < self.values.len() {
            return self.values[t];
        }
        match self.rule {
            TailRule::Zero => 0.0,
            TailRule::Constant(c) => c,
            TailRule::Geometric { scale, ratio } => scale * ratio.powi(t as i32),
        }
    }

    /// `Σ_{t > t_star} b_t`, or `None` when the series diverges.
    pub fn tail_sum(&self, t_star: usize) -> Option<f64> {
        let start = t_star + 1;
        let explicit: f64 = self.values.iter().skip(start).sum();
        let first_rule = start.max(self.values.len());
        let rest = match self.rule {
            TailRule::Zero => 0.0,
            TailRule::Constant(c) if c == 0.0 => 0.0,
            TailRule::Constant(_) => return None,
            TailRule::Geometric { scale, ratio } => {
                if scale == 0.0 {
                    0.0
                } else if ratio.abs() >= 1.0 {
                    return None;
                } else {
                    scale * ratio.powi(first_rule as i32) / (1.0 - ratio)
                }
            }
        };
        Some(explicit + rest)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameSpec {
    /// `active[t]`; `active[0]` is nature and no other period may be.
    pub active: Vec<usize>,
    pub actions: Vec<Grid>,
    /// `signals[0]` is unused and must be empty.
    pub signals: Vec<Grid>,
    pub nature: Vec<f64>,
    /// Base signal distributions; an empty vector at `t >= 1` means uniform.
    pub base: Vec<Vec<f64>>,
    /// `None` means the density is identically 1.
    pub density: Vec<Option<Table>>,
    /// `None` means every action is available.
    pub correspondence: Vec<Option<Correspondence>>,
    pub payoffs: BTreeMap<usize, Table>,
    pub tail_bound: Option<TailBound>,
}

impl GameSpec {
    pub fn horizon(&self) -> usize {
        self.active.len()
    }
}

/// A game's proper player together with the bookkeeping for their own
/// trajectory space `(s, a)` over their decision periods.
///
/// Own-step `k` information sets are indexed by `node(k-1) * S_k + s`, own nodes by
/// `info * A_k + a`. The nodes at the last step are the trajectories (leaves).
#[derive(Clone, Debug)]
pub struct OwnSpace {
    pub player: usize,
    pub periods: Vec<usize>,
    pub sig: Vec<usize>,
    pub act: Vec<usize>,
    pub info_count: Vec<usize>,
    pub node_count: Vec<usize>,
    /// Availability per step, flat `info * A + a`.
    pub avail: Vec<Vec<bool>>,
    /// Information sets whose own prefix respects the correspondences.
    pub feasible_info: Vec<Vec<bool>>,
    /// Base measure per step.
    pub mu: Vec<Vec<f64>>,
}

impl OwnSpace {
    pub fn steps(&self) -> usize {
        self.periods.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.node_count.last().copied().unwrap_or(1)
    }

    pub fn step_of(&self, period: usize) -> Option<usize> {
        self.periods.iter().position(|&p| p == period)
    }

    /// Number of leaves below one node of step `k` (1 at the last step).
    pub fn leaves_below_node(&self, k: usize) -> usize {
        let mut n = 1;
        for j in k + 1..self.steps() {
            n *= self.sig[j] * self.act[j];
        }
        n
    }

    /// Number of leaves below one information set of step `k`.
    pub fn leaves_below_info(&self, k: usize) -> usize {
        self.act[k] * self.leaves_below_node(k)
    }

    /// Own signals `s_0..=s_k` and actions `a_0..a_{k-1}` of an information set.
    pub fn decode_info(&self, k: usize, info: usize) -> (Vec<usize>, Vec<usize>) {
        let mut sigs = vec![0; k + 1];
        let mut acts = vec![0; k];
        let mut rest = info;
        sigs[k] = rest % self.sig[k];
        rest /= self.sig[k];
        for j in (0..k).rev() {
            acts[j] = rest % self.act[j];
            rest /= self.act[j];
            sigs[j] = rest % self.sig[j];
            rest /= self.sig[j];
        }
        (sigs, acts)
    }

    pub fn encode_info(&self, sigs: &[usize], acts: &[usize]) -> usize {
        let k = sigs.len() - 1;
        let mut idx = 0;
        for j in 0..k {
            idx = (idx * self.sig[j] + sigs[j]) * self.act[j] + acts[j];
        }
        idx * self.sig[k] + sigs[k]
    }

    /// Own signals and actions of a leaf.
    pub fn decode_leaf(&self, leaf: usize) -> (Vec<usize>, Vec<usize>) {
        let k = self.steps();
        let mut sigs = vec![0; k];
        let mut acts = vec![0; k];
        let mut rest = leaf;
        for j in (0..k).rev() {
            acts[j] = rest % self.act[j];
            rest /= self.act[j];
            sigs[j] = rest % self.sig[j];
            rest /= self.sig[j];
        }
        (sigs, acts)
    }

    pub fn encode_leaf(&self, sigs: &[usize], acts: &[usize]) -> usize {
        let mut idx = 0;
        for j in 0..self.steps() {
            idx = (idx * self.sig[j] + sigs[j]) * self.act[j] + acts[j];
        }
        idx
    }

    /// Whether every own action along the leaf is available.
    pub fn leaf_feasible(&self, leaf: usize) -> bool {
        let k = self.steps();
        if k == 0 {
            return true;
        }
        let last_info = leaf / self.act[k - 1];
        let a = leaf % self.act[k - 1];
        self.feasible_info[k - 1][last_info] && self.avail[k - 1][last_info * self.act[k - 1] + a]
    }

    pub fn available(&self, k: usize, info: usize) -> impl Iterator<Item = usize> + '_ {
        let a_n = self.act[k];
        (0..a_n).filter(move |&a| self.avail[k][info * a_n + a])
    }
}

/// Information set of a player before moving at `period`: own past signals and
/// actions (grid indices) for the player's decision periods strictly before `period`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrivateHistory {
    pub player: usize,
    pub period: usize,
    pub own_signals: Vec<usize>,
    pub own_actions: Vec<usize>,
}

#[derive(Clone, Debug)]
pub(crate) struct Indexed {
    pub coords: Vec<usize>,
    pub strides: Vec<usize>,
    pub values: Vec<f64>,
}

impl Indexed {
    fn new(mask: &[usize], radix: &[usize], values: Vec<f64>) -> Indexed {
        let mut strides = vec![0; mask.len()];
        let mut s = 1;
        for i in (0..mask.len()).rev() {
            strides[i] = s;
            s *= radix[mask[i]];
        }
        Indexed {
            coords: mask.to_vec(),
            strides,
            values,
        }
    }

    #[inline]
    pub fn row(&self, play: &[usize]) -> usize {
        let mut r = 0;
        for (c, s) in self.coords.iter().zip(&self.strides) {
            r += play[*c] * s;
        }
        r
    }
}

#[derive(Clone, Debug)]
pub struct ValidatedGame {
    spec: GameSpec,
    base: Vec<Vec<f64>>,
    radix: Vec<usize>,
    players: Vec<usize>,
    spaces: Vec<OwnSpace>,
    slot_of_period: Vec<usize>,
    step_of_period: Vec<usize>,
    pub(crate) density: Vec<Option<Indexed>>,
    pub(crate) payoff: Vec<Indexed>,
    row_max: Vec<Vec<f64>>,
}

/// Human-readable name of a play coordinate.
pub fn coord_name(c: usize) -> String {
    if c == 0 {
        "a0".to_string()
    } else if c % 2 == 1 {
        format!("s{}", (c + 1) / 2)
    } else {
        format!("a{}", c / 2)
    }
}

/// Period a play coordinate belongs to.
pub fn coord_period(c: usize) -> usize {
    (c + 1) / 2
}

fn check_prob(what: &str, p: &[f64], strictly_positive: bool) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidProbability {
            what: what.into(),
            detail: "empty vector".into(),
        });
    }
    for (i, &x) in p.iter().enumerate() {
        if !x.is_finite() || x < 0.0 || (strictly_positive && x <= 0.0) {
            return Err(Error::InvalidProbability {
                what: what.into(),
                detail: format!("entry {i} is {x}"),
            });
        }
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > TOL {
        return Err(Error::InvalidProbability {
            what: what.into(),
            detail: format!("sums to {s}"),
        });
    }
    Ok(())
}

fn mixed_radix_decode(mut r: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for i in (0..radices.len()).rev() {
        out[i] = r % radices[i];
        r /= radices[i];
    }
    out
}

/// Validate a spec with the default play-count cap.
pub fn validate_game(spec: GameSpec) -> Result<ValidatedGame> {
    ValidatedGame::with_cap(spec, DEFAULT_PLAY_CAP)
}

impl ValidatedGame {
    pub fn with_cap(spec: GameSpec, cap: u128) -> Result<ValidatedGame> {
        let t_n = spec.horizon();
        if t_n == 0 {
            return Err(Error::InvalidGame("horizon must be positive".into()));
        }
        let lens_ok = spec.actions.len() == t_n
            && spec.signals.len() == t_n
            && spec.base.len() == t_n
            && spec.density.len() == t_n
            && spec.correspondence.len() == t_n;
        if !lens_ok {
            return Err(Error::InvalidGame(
                "per-period lists must all have one entry per period".into(),
            ));
        }
        if spec.active[0] != NATURE {
            return Err(Error::InvalidGame("period 0 must belong to nature".into()));
        }
        for t in 1..t_n {
            if spec.active[t] == NATURE {
                return Err(Error::InvalidGame(format!(
                    "period {t} is assigned to nature; only period 0 may be"
                )));
            }
        }
        if !spec.signals[0].is_empty() {
            return Err(Error::InvalidGame("period 0 has no signals".into()));
        }
        if spec.density[0].is_some() || spec.correspondence[0].is_some() {
            return Err(Error::InvalidGame(
                "period 0 has no density or correspondence".into(),
            ));
        }
        for t in 0..t_n {
            if spec.actions[t].is_empty() {
                return Err(Error::EmptyActionSet { period: t, row: 0 });
            }
            if let Some(c) = &spec.actions[t].coords {
                if c.len() != spec.actions[t].len() {
                    return Err(Error::InvalidGame(format!(
                        "action coordinates at period {t} do not match the labels"
                    )));
                }
            }
            if t > 0 {
                if spec.signals[t].is_empty() {
                    return Err(Error::InvalidGame(format!("period {t} has no signals")));
                }
                if let Some(c) = &spec.signals[t].coords {
                    if c.len() != spec.signals[t].len() {
                        return Err(Error::InvalidGame(format!(
                            "signal coordinates at period {t} do not match the labels"
                        )));
                    }
                }
            }
        }
        if spec.nature.len() != spec.actions[0].len() {
            return Err(Error::InvalidProbability {
                what: "nature".into(),
                detail: "length differs from the period-0 action grid".into(),
            });
        }
        check_prob("nature", &spec.nature, false)?;

        let mut base = vec![Vec::new(); t_n];
        for t in 1..t_n {
            let k = spec.signals[t].len();
            base[t] = if spec.base[t].is_empty() {
                vec![1.0 / k as f64; k]
            } else {
                if spec.base[t].len() != k {
                    return Err(Error::InvalidProbability {
                        what: format!("mu {t}"),
                        detail: "length differs from the signal grid".into(),
                    });
                }
                check_prob(&format!("mu {t}"), &spec.base[t], true)?;
                spec.base[t].clone()
            };
        }

        let mut radix = vec![0; 2 * t_n - 1];
        radix[0] = spec.actions[0].len();
        for t in 1..t_n {
            radix[2 * t - 1] = spec.signals[t].len();
            radix[2 * t] = spec.actions[t].len();
        }
        let plays: u128 = radix.iter().map(|&r| r as u128).product();
        if plays > cap {
            return Err(Error::CapExceeded {
                what: "play count".into(),
                size: plays,
                cap,
            });
        }

        let mut players: Vec<usize> = spec.active[1..].to_vec();
        players.extend(spec.payoffs.keys().copied());
        players.sort_unstable();
        players.dedup();
        if players.contains(&NATURE) {
            return Err(Error::InvalidGame("nature cannot receive payoffs".into()));
        }
        for p in &players {
            if !spec.payoffs.contains_key(p) {
                return Err(Error::InvalidGame(format!("player {p} has no payoff table")));
            }
        }

        let mut slot_of_period = vec![usize::MAX; t_n];
        let mut step_of_period = vec![usize::MAX; t_n];
        let mut periods_of: Vec<Vec<usize>> = vec![Vec::new(); players.len()];
        for t in 1..t_n {
            let slot = players.binary_search(&spec.active[t]).unwrap();
            slot_of_period[t] = slot;
            step_of_period[t] = periods_of[slot].len();
            periods_of[slot].push(t);
        }

        // density tables
        let mut density = vec![None; t_n];
        let mut row_max = vec![Vec::new(); t_n];
        for t in 1..t_n {
            let s_n = spec.signals[t].len();
            match &spec.density[t] {
                None => row_max[t] = vec![1.0; s_n],
                Some(tab) => {
                    for &c in &tab.mask {
                        if c >= 2 * t - 1 {
                            return Err(Error::InvalidGame(format!(
                                "density at period {t} depends on coordinate {} which is not in the past",
                                coord_name(c)
                            )));
                        }
                    }
                    let rad: Vec<usize> = tab.mask.iter().map(|&c| radix[c]).collect();
                    let rows: usize = rad.iter().product();
                    if tab.values.len() != rows * s_n {
                        return Err(Error::InvalidGame(format!(
                            "density at period {t} has {} entries, expected {}",
                            tab.values.len(),
                            rows * s_n
                        )));
                    }
                    let mut rmax = vec![0.0f64; s_n];
                    for r in 0..rows {
                        let row = &tab.values[r * s_n..(r + 1) * s_n];
                        let mut total = 0.0;
                        for (s, &g) in row.iter().enumerate() {
                            if !g.is_finite() || g < 0.0 {
                                return Err(Error::NegativeDensity {
                                    period: t,
                                    history: history_text(&spec, &tab.mask, &rad, r),
                                    signal: s,
                                    value: g,
                                });
                            }
                            total += g * base[t][s];
                            rmax[s] = rmax[s].max(g);
                        }
                        if (total - 1.0).abs() > TOL {
                            return Err(Error::Normalization {
                                period: t,
                                history: history_text(&spec, &tab.mask, &rad, r),
                                total,
                                deviation: total - 1.0,
                            });
                        }
                    }
                    row_max[t] = rmax;
                    density[t] = Some(Indexed::new(&tab.mask, &radix, tab.values.clone()));
                }
            }
        }

        // payoff tables
        let mut payoff = Vec::with_capacity(players.len());
        for p in &players {
            let tab = &spec.payoffs[p];
            for &c in &tab.mask {
                if c >= radix.len() {
                    return Err(Error::InvalidGame(format!(
                        "payoff of player {p} refers to coordinate {c} beyond the horizon"
                    )));
                }
            }
            let rows: usize = tab.mask.iter().map(|&c| radix[c]).product();
            if tab.values.len() != rows {
                return Err(Error::InvalidGame(format!(
                    "payoff of player {p} has {} entries, expected {rows}",
                    tab.values.len()
                )));
            }
            if tab.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGame(format!(
                    "payoff of player {p} has non-finite entries"
                )));
            }
            payoff.push(Indexed::new(&tab.mask, &radix, tab.values.clone()));
        }

        // own spaces and correspondences
        let mut spaces = Vec::with_capacity(players.len());
        for (slot, &p) in players.iter().enumerate() {
            let periods = periods_of[slot].clone();
            let k_n = periods.len();
            let sig: Vec<usize> = periods.iter().map(|&t| radix[2 * t - 1]).collect();
            let act: Vec<usize> = periods.iter().map(|&t| radix[2 * t]).collect();
            let mut info_count = vec![0; k_n];
            let mut node_count = vec![0; k_n];
            let mut prev: u128 = 1;
            for k in 0..k_n {
                let ic = prev * sig[k] as u128;
                let nc = ic * act[k] as u128;
                if nc > cap {
                    return Err(Error::CapExceeded {
                        what: format!("trajectory space of player {p}"),
                        size: nc,
                        cap,
                    });
                }
                info_count[k] = ic as usize;
                node_count[k] = nc as usize;
                prev = nc;
            }
            let mu: Vec<Vec<f64>> = periods.iter().map(|&t| base[t].clone()).collect();
            let mut space = OwnSpace {
                player: p,
                periods: periods.clone(),
                sig,
                act,
                info_count,
                node_count,
                avail: Vec::new(),
                feasible_info: Vec::new(),
                mu,
            };
            let mut avail = Vec::with_capacity(k_n);
            for (k, &t) in periods.iter().enumerate() {
                let a_n = space.act[k];
                let mut av = vec![true; space.info_count[k] * a_n];
                if let Some(corr) = &spec.correspondence[t] {
                    let own = own_coord_map(&periods, k);
                    let mut locs = Vec::with_capacity(corr.mask.len());
                    for &c in &corr.mask {
                        match own.iter().find(|(cc, _, _)| *cc == c) {
                            Some(&(_, j, is_act)) => locs.push((j, is_act)),
                            None => {
                                return Err(Error::InvalidGame(format!(
                                    "correspondence at period {t} depends on {} which player {p} does not observe",
                                    coord_name(c)
                                )))
                            }
                        }
                    }
                    let rad: Vec<usize> = corr.mask.iter().map(|&c| radix[c]).collect();
                    let rows: usize = rad.iter().product();
                    if corr.allowed.len() != rows {
                        return Err(Error::InvalidGame(format!(
                            "correspondence at period {t} has {} rows, expected {rows}",
                            corr.allowed.len()
                        )));
                    }
                    for (r, set) in corr.allowed.iter().enumerate() {
                        if set.is_empty() {
                            return Err(Error::EmptyActionSet { period: t, row: r });
                        }
                        if set.iter().any(|&a| a >= a_n) {
                            return Err(Error::InvalidGame(format!(
                                "correspondence at period {t} row {r} names an action outside the grid"
                            )));
                        }
                    }
                    for info in 0..space.info_count[k] {
                        let (sigs, acts) = space.decode_info(k, info);
                        let mut r = 0;
                        for (i, &(j, is_act)) in locs.iter().enumerate() {
                            let v = if is_act { acts[j] } else { sigs[j] };
                            r = r * rad[i] + v;
                        }
                        let row = &mut av[info * a_n..(info + 1) * a_n];
                        row.iter_mut().for_each(|x| *x = false);
                        for &a in &corr.allowed[r] {
                            row[a] = true;
                        }
                    }
                }
                avail.push(av);
            }
            space.avail = avail;
            let mut feasible: Vec<Vec<bool>> = Vec::with_capacity(k_n);
            for k in 0..k_n {
                let mut f = vec![false; space.info_count[k]];
                for (info, slot) in f.iter_mut().enumerate() {
                    *slot = if k == 0 {
                        true
                    } else {
                        let parent = info / space.sig[k];
                        let pinfo = parent / space.act[k - 1];
                        let pa = parent % space.act[k - 1];
                        feasible[k - 1][pinfo]
                            && space.avail[k - 1][pinfo * space.act[k - 1] + pa]
                    };
                }
                feasible.push(f);
            }
            space.feasible_info = feasible;
            spaces.push(space);
        }

        Ok(ValidatedGame {
            spec,
            base,
            radix,
            players,
            spaces,
            slot_of_period,
            step_of_period,
            density,
            payoff,
            row_max,
        })
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    pub fn into_spec(self) -> GameSpec {
        self.spec
    }

    pub fn horizon(&self) -> usize {
        self.spec.horizon()
    }

    pub fn players(&self) -> &[usize] {
        &self.players
    }

    pub fn slot(&self, player: usize) -> Option<usize> {
        self.players.binary_search(&player).ok()
    }

    pub fn space(&self, player: usize) -> Option<&OwnSpace> {
        self.slot(player).map(|s| &self.spaces[s])
    }

    pub fn spaces(&self) -> &[OwnSpace] {
        &self.spaces
    }

    pub fn active(&self, period: usize) -> usize {
        self.spec.active[period]
    }

    pub(crate) fn slot_of_period(&self, period: usize) -> usize {
        self.slot_of_period[period]
    }

    pub(crate) fn step_of_period(&self, period: usize) -> usize {
        self.step_of_period[period]
    }

    pub fn radix(&self) -> &[usize] {
        &self.radix
    }

    pub fn play_count(&self) -> u128 {
        self.radix.iter().map(|&r| r as u128).product()
    }

    pub fn base(&self, period: usize) -> &[f64] {
        &self.base[period]
    }

    pub fn nature(&self) -> &[f64] {
        &self.spec.nature
    }

    /// Density row index for the history in `play`.
    #[inline]
    pub(crate) fn density_row(&self, period: usize, play: &[usize]) -> Option<usize> {
        self.density[period]
            .as_ref()
            .map(|d| d.row(play) * self.radix[2 * period - 1])
    }

    #[inline]
    pub(crate) fn density_at(&self, period: usize, row: Option<usize>, s: usize) -> f64 {
        match row {
            None => 1.0,
            Some(r) => self.density[period].as_ref().unwrap().values[r + s],
        }
    }

    /// `g_t(h, s)` for the history contained in `play`.
    pub fn density(&self, period: usize, play: &[usize], s: usize) -> f64 {
        let row = self.density_row(period, play);
        self.density_at(period, row, s)
    }

    /// Row-wise maximum of the density table per signal.
    pub fn density_bound(&self, period: usize) -> &[f64] {
        &self.row_max[period]
    }

    #[inline]
    pub fn payoff(&self, player_slot: usize, play: &[usize]) -> f64 {
        let p = &self.payoff[player_slot];
        p.values[p.row(play)]
    }

    pub fn payoff_bounds(&self, player: usize) -> (f64, f64) {
        let slot = self.slot(player).expect("unknown player");
        let v = &self.payoff[slot].values;
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Upper bound on `max v - min v` over plays.
    pub fn payoff_range(&self, player: usize) -> f64 {
        let (lo, hi) = self.payoff_bounds(player);
        hi - lo
    }

    /// Whether every action in the play respects the correspondences.
    pub fn play_feasible(&self, play: &[usize]) -> bool {
        for (slot, space) in self.spaces.iter().enumerate() {
            let _ = slot;
            if space.steps() == 0 {
                continue;
            }
            let mut sigs = Vec::with_capacity(space.steps());
            let mut acts = Vec::with_capacity(space.steps());
            for &t in &space.periods {
                sigs.push(play[2 * t - 1]);
                acts.push(play[2 * t]);
            }
            if !space.leaf_feasible(space.encode_leaf(&sigs, &acts)) {
                return false;
            }
        }
        true
    }

    /// Own leaf index of `player_slot` along a play.
    pub fn own_leaf(&self, player_slot: usize, play: &[usize]) -> usize {
        let space = &self.spaces[player_slot];
        let mut idx = 0;
        for (j, &t) in space.periods.iter().enumerate() {
            idx = (idx * space.sig[j] + play[2 * t - 1]) * space.act[j] + play[2 * t];
        }
        idx
    }

    pub fn play_labels(&self, play: &[usize]) -> Vec<String> {
        let mut out = Vec::with_capacity(play.len());
        out.push(self.spec.actions[0].labels[play[0]].clone());
        for t in 1..self.horizon() {
            out.push(self.spec.signals[t].labels[play[2 * t - 1]].clone());
            out.push(self.spec.actions[t].labels[play[2 * t]].clone());
        }
        out
    }

    fn check_active(&self, player: usize, period: usize) -> Result<(usize, usize)> {
        if period == 0 || period >= self.horizon() || self.spec.active[period] != player {
            return Err(Error::PlayerNotActive { player, period });
        }
        Ok((self.slot_of_period[period], self.step_of_period[period]))
    }

    /// Information set of `player` at `period` as (own step, index).
    pub fn info_index(&self, h: &PrivateHistory, s: usize) -> Result<(usize, usize)> {
        let (slot, k) = self.check_active(h.player, h.period)
            .map_err(|_| Error::InvalidInformationSet(format!(
                "player {} does not move at period {}", h.player, h.period)))?;
        let space = &self.spaces[slot];
        if h.own_signals.len() != k || h.own_actions.len() != k {
            return Err(Error::InvalidInformationSet(format!(
                "history has {} signals and {} actions, expected {k} of each",
                h.own_signals.len(),
                h.own_actions.len()
            )));
        }
        for j in 0..k {
            if h.own_signals[j] >= space.sig[j] || h.own_actions[j] >= space.act[j] {
                return Err(Error::InvalidInformationSet("index outside the grid".into()));
            }
        }
        if s >= space.sig[k] {
            return Err(Error::InvalidInformationSet("signal outside the grid".into()));
        }
        let mut sigs = h.own_signals.clone();
        sigs.push(s);
        let info = space.encode_info(&sigs, &h.own_actions);
        if !space.feasible_info[k][info] {
            return Err(Error::InvalidInformationSet(
                "own past actions violate the action correspondence".into(),
            ));
        }
        Ok((k, info))
    }

    pub fn private_history(&self, player: usize, k: usize, info: usize) -> (PrivateHistory, usize) {
        let space = self.space(player).expect("unknown player");
        let (mut sigs, acts) = space.decode_info(k, info);
        let s = sigs.pop().unwrap();
        (
            PrivateHistory {
                player,
                period: space.periods[k],
                own_signals: sigs,
                own_actions: acts,
            },
            s,
        )
    }

    /// Readable description of an information set, e.g. `s2=l`.
    pub fn info_label(&self, player: usize, k: usize, info: usize) -> String {
        let space = self.space(player).expect("unknown player");
        let (sigs, acts) = space.decode_info(k, info);
        let mut out = String::new();
        for j in 0..=k {
            let t = space.periods[j];
            if !out.is_empty() {
                out.push(' ');
            }
            let _ = write!(out, "s{t}={}", self.spec.signals[t].labels[sigs[j]]);
            if j < k {
                let _ = write!(out, " a{t}={}", self.spec.actions[t].labels[acts[j]]);
            }
        }
        out
    }

    /// All information sets `(h, s)` of `player` at `period`.
    pub fn enumerate_information_sets(
        &self,
        player: usize,
        period: usize,
    ) -> Result<Vec<(PrivateHistory, usize)>> {
        let (slot, k) = self.check_active(player, period)?;
        let space = &self.spaces[slot];
        Ok((0..space.info_count[k])
            .filter(|&i| space.feasible_info[k][i])
            .map(|i| self.private_history(player, k, i))
            .collect())
    }

    /// Allowed action indices at information set `(h, s)`.
    pub fn available_actions(&self, period: usize, h: &PrivateHistory, s: usize) -> Result<Vec<usize>> {
        if h.period != period {
            return Err(Error::InvalidInformationSet(format!(
                "history is for period {}, asked about {period}",
                h.period
            )));
        }
        let (k, info) = self.info_index(h, s)?;
        let space = self.space(h.player).unwrap();
        Ok(space.available(k, info).collect())
    }

    /// Smallest `T*` with `Σ_{t > T*} b_t ≤ ε`, and the game whose payoffs ignore
    /// every period after `T*`: those periods' actions are forced to the first grid
    /// element and payoffs are read with their coordinates at index 0.
    pub fn truncate_horizon(&self, eps: f64) -> Result<(usize, Truncation)> {
        if !(eps > 0.0) {
            return Err(Error::NonPositiveEpsilon(eps));
        }
        let tb = self.spec.tail_bound.as_ref().ok_or(Error::NoTailBound)?;
        if tb.tail_sum(0).is_none() {
            return Err(Error::NoTailBoundSum);
        }
        if tb.values.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::InvalidGame("tail bounds must be nonnegative".into()));
        }
        let mut t_star = 0;
        loop {
            let tail = tb.tail_sum(t_star).unwrap();
            if tail <= eps {
                break;
            }
            t_star += 1;
            if t_star > 1_000_000 {
                return Err(Error::NoTailBoundSum);
            }
        }
        let t_n = self.horizon();
        if t_star + 1 >= t_n {
            return Ok((t_star, Truncation { t_star, game: self.clone() }));
        }
        let mut spec = self.spec.clone();
        for t in t_star + 1..t_n {
            spec.correspondence[t] = Some(Correspondence {
                mask: vec![],
                allowed: vec![vec![0]],
            });
        }
        let cut = 2 * t_star + 1;
        for tab in spec.payoffs.values_mut() {
            let keep: Vec<usize> = tab.mask.iter().copied().filter(|&c| c < cut).collect();
            if keep.len() == tab.mask.len() {
                continue;
            }
            let old = Indexed::new(&tab.mask, &self.radix, tab.values.clone());
            let rad: Vec<usize> = keep.iter().map(|&c| self.radix[c]).collect();
            let rows: usize = rad.iter().product();
            let mut play = vec![0usize; self.radix.len()];
            let mut values = Vec::with_capacity(rows);
            for r in 0..rows {
                let digits = mixed_radix_decode(r, &rad);
                for (c, d) in keep.iter().zip(&digits) {
                    play[*c] = *d;
                }
                values.push(old.values[old.row(&play)]);
            }
            tab.mask = keep;
            tab.values = values;
        }
        let game = ValidatedGame::with_cap(spec, u128::MAX)?;
        Ok((t_star, Truncation { t_star, game }))
    }
}

/// Result of horizon truncation.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub t_star: usize,
    pub game: ValidatedGame,
}

impl Truncation {
    /// Image of an original-game measure: actions after `T*` are moved to the sentinel.
    pub fn project(&self, m: &crate::measure::StrategicMeasure) -> crate::measure::StrategicMeasure {
        let space = self.game.space(m.player).expect("unknown player");
        let mut out = vec![0.0; m.mass.len()];
        for (leaf, &w) in m.mass.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let (sigs, mut acts) = space.decode_leaf(leaf);
            for (j, &t) in space.periods.iter().enumerate() {
                if t > self.t_star {
                    acts[j] = 0;
                }
            }
            out[space.encode_leaf(&sigs, &acts)] += w;
        }
        crate::measure::StrategicMeasure {
            player: m.player,
            mass: out,
        }
    }
}

/// Own play coordinates visible to the player moving at own step `k`:
/// `(coordinate, step, is_action)`.
fn own_coord_map(periods: &[usize], k: usize) -> Vec<(usize, usize, bool)> {
    let mut out = Vec::new();
    for (j, &t) in periods.iter().enumerate().take(k + 1) {
        out.push((2 * t - 1, j, false));
        if j < k {
            out.push((2 * t, j, true));
        }
    }
    out
}

fn history_text(spec: &GameSpec, mask: &[usize], rad: &[usize], row: usize) -> String {
    let digits = mixed_radix_decode(row, rad);
    let mut out = String::new();
    for (c, d) in mask.iter().zip(digits) {
        if !out.is_empty() {
            out.push_str(", ");
        }
        let t = coord_period(*c);
        let label = if *c == 0 || c % 2 == 0 {
            &spec.actions[t].labels[d]
        } else {
            &spec.signals[t].labels[d]
        };
        let _ = write!(out, "{}={}", coord_name(*c), label);
    }
    out
}
