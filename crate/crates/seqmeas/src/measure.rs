//! Strategic measures: distributions over a player's own signal/action
//! trajectories in which each own signal is drawn from the base measure
//! independently of the player's past.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::game::{OwnSpace, ValidatedGame, TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct StrategicMeasure {
    pub player: usize,
    /// Mass per own trajectory (leaf of the player's own space).
    pub mass: Vec<f64>,
}

/// Prefix masses of a measure: per own step, the mass of every information set
/// (after the signal) and every node (after the action).
#[derive(Clone, Debug)]
pub struct Levels {
    pub info: Vec<Vec<f64>>,
    pub node: Vec<Vec<f64>>,
}

impl Levels {
    pub fn of(space: &OwnSpace, mass: &[f64]) -> Levels {
        let k_n = space.steps();
        let mut info = vec![Vec::new(); k_n];
        let mut node = vec![Vec::new(); k_n];
        if k_n == 0 {
            return Levels { info, node };
        }
        node[k_n - 1] = mass.to_vec();
        for k in (0..k_n).rev() {
            let a_n = space.act[k];
            info[k] = node[k].chunks(a_n).map(|c| c.iter().sum()).collect();
            if k > 0 {
                let s_n = space.sig[k];
                node[k - 1] = info[k].chunks(s_n).map(|c| c.iter().sum()).collect();
            }
        }
        Levels { info, node }
    }

    /// Mass of the node (or root when `k == 0`) preceding step `k`'s signal.
    pub fn parent(&self, k: usize, parent: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.node[k - 1][parent]
        }
    }
}

impl StrategicMeasure {
    pub fn levels(&self, game: &ValidatedGame) -> Levels {
        Levels::of(game.space(self.player).expect("unknown player"), &self.mass)
    }

    /// Total-variation distance to another measure of the same player.
    pub fn tv(&self, other: &StrategicMeasure) -> f64 {
        0.5 * self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

fn prefix_text(game: &ValidatedGame, player: usize, k: usize, parent: usize) -> String {
    if k == 0 {
        return String::new();
    }
    let space = game.space(player).unwrap();
    let info = parent / space.act[k - 1];
    let a = parent % space.act[k - 1];
    let t = space.periods[k - 1];
    format!(
        "{} a{t}={}",
        game.info_label(player, k - 1, info),
        game.spec().actions[t].labels[a]
    )
}

/// Check every strategic-measure invariant: nonnegative, total one, zero on
/// infeasible trajectories, and own signals distributed by the base measure
/// given every positive-probability own prefix.
pub fn validate_measure(game: &ValidatedGame, m: &StrategicMeasure) -> Result<()> {
    let space = game.space(m.player).ok_or_else(|| {
        Error::MismatchedPlayers(format!("player {} is not in the game", m.player))
    })?;
    let bad = |k: usize, parent: usize, detail: String| Error::MalformedMeasure {
        player: m.player,
        prefix: prefix_text(game, m.player, k, parent),
        detail,
    };
    if m.mass.len() != space.leaf_count() {
        return Err(Error::MalformedMeasure {
            player: m.player,
            prefix: String::new(),
            detail: format!(
                "{} entries, expected {}",
                m.mass.len(),
                space.leaf_count()
            ),
        });
    }
    for (leaf, &x) in m.mass.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(bad(0, 0, format!("trajectory {leaf} has mass {x}")));
        }
        if x > 0.0 && !space.leaf_feasible(leaf) {
            return Err(bad(0, 0, format!("infeasible trajectory {leaf} has mass {x}")));
        }
    }
    let total: f64 = m.mass.iter().sum();
    if (total - 1.0).abs() > TOL {
        return Err(bad(0, 0, format!("total mass {total}")));
    }
    let lv = Levels::of(space, &m.mass);
    for k in 0..space.steps() {
        let s_n = space.sig[k];
        let parents = if k == 0 { 1 } else { space.node_count[k - 1] };
        for p in 0..parents {
            let pm = lv.parent(k, p);
            if pm <= 0.0 {
                continue;
            }
            for s in 0..s_n {
                let im = lv.info[k][p * s_n + s];
                let want = pm * space.mu[k][s];
                if (im - want).abs() > TOL * pm + 1e-18 {
                    return Err(bad(
                        k,
                        p,
                        format!(
                            "signal {s} at period {} has conditional probability {}, base measure gives {}",
                            space.periods[k],
                            im / pm,
                            space.mu[k][s]
                        ),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Behavior strategy stored per own step as a flat `info * A + a` table.
#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorStrategy {
    pub player: usize,
    pub rules: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rule {
    Defined(Vec<f64>),
    Unconstrained,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartialBehaviorStrategy {
    pub player: usize,
    /// Per own step, one rule per information set.
    pub rules: Vec<Vec<Rule>>,
}

impl BehaviorStrategy {
    pub fn rule(&self, space: &OwnSpace, k: usize, info: usize) -> &[f64] {
        let a_n = space.act[k];
        &self.rules[k][info * a_n..(info + 1) * a_n]
    }

    /// Pure strategy from one chosen action per information set and step.
    pub fn pure(game: &ValidatedGame, player: usize, choice: &[Vec<usize>]) -> BehaviorStrategy {
        let space = game.space(player).expect("unknown player");
        let rules = (0..space.steps())
            .map(|k| {
                let a_n = space.act[k];
                let mut r = vec![0.0; space.info_count[k] * a_n];
                for (info, &a) in choice[k].iter().enumerate() {
                    r[info * a_n + a] = 1.0;
                }
                r
            })
            .collect();
        BehaviorStrategy { player, rules }
    }
}

pub fn validate_strategy(game: &ValidatedGame, b: &BehaviorStrategy) -> Result<()> {
    let space = game.space(b.player).ok_or_else(|| {
        Error::MismatchedPlayers(format!("player {} is not in the game", b.player))
    })?;
    let bad = |detail: String| Error::MalformedStrategy {
        player: b.player,
        detail,
    };
    if b.rules.len() != space.steps() {
        return Err(bad(format!("{} steps, expected {}", b.rules.len(), space.steps())));
    }
    for k in 0..space.steps() {
        let a_n = space.act[k];
        if b.rules[k].len() != space.info_count[k] * a_n {
            return Err(bad(format!("step {k} has the wrong table size")));
        }
        for info in 0..space.info_count[k] {
            if !space.feasible_info[k][info] {
                continue;
            }
            let r = b.rule(space, k, info);
            let mut sum = 0.0;
            for (a, &p) in r.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(bad(format!("negative probability at {}", game.info_label(b.player, k, info))));
                }
                if p > 0.0 && !space.avail[k][info * a_n + a] {
                    return Err(bad(format!(
                        "unavailable action {a} played at {}",
                        game.info_label(b.player, k, info)
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > TOL {
                return Err(bad(format!(
                    "rule at {} sums to {sum}",
                    game.info_label(b.player, k, info)
                )));
            }
        }
    }
    Ok(())
}

/// Uniform play over the available actions at every information set.
pub fn full_support_strategy(game: &ValidatedGame, player: usize) -> BehaviorStrategy {
    let space = game.space(player).expect("unknown player");
    let rules = (0..space.steps())
        .map(|k| {
            let a_n = space.act[k];
            let mut r = vec![0.0; space.info_count[k] * a_n];
            for info in 0..space.info_count[k] {
                let avail: Vec<usize> = space.available(k, info).collect();
                let p = 1.0 / avail.len() as f64;
                for a in avail {
                    r[info * a_n + a] = p;
                }
            }
            r
        })
        .collect();
    BehaviorStrategy { player, rules }
}

/// The measure of a behavior strategy: signals from the base measure, actions from the rules.
pub fn induce_measure(game: &ValidatedGame, b: &BehaviorStrategy) -> Result<StrategicMeasure> {
    validate_strategy(game, b)?;
    let space = game.space(b.player).unwrap();
    Ok(StrategicMeasure {
        player: b.player,
        mass: induce_unchecked(space, &b.rules),
    })
}

pub(crate) fn induce_unchecked(space: &OwnSpace, rules: &[Vec<f64>]) -> Vec<f64> {
    let mut prev = vec![1.0];
    for k in 0..space.steps() {
        let s_n = space.sig[k];
        let a_n = space.act[k];
        let mut next = vec![0.0; space.node_count[k]];
        for (p, &pm) in prev.iter().enumerate() {
            if pm == 0.0 {
                continue;
            }
            for s in 0..s_n {
                let info = p * s_n + s;
                if !space.feasible_info[k][info] {
                    continue;
                }
                let im = pm * space.mu[k][s];
                for a in 0..a_n {
                    let q = rules[k][info * a_n + a];
                    if q > 0.0 {
                        next[info * a_n + a] = im * q;
                    }
                }
            }
        }
        prev = next;
    }
    prev
}

/// Conditional rules at positive-probability information sets, `Unconstrained` elsewhere.
pub fn measure_to_strategy(
    game: &ValidatedGame,
    m: &StrategicMeasure,
) -> Result<PartialBehaviorStrategy> {
    validate_measure(game, m)?;
    let space = game.space(m.player).unwrap();
    let lv = Levels::of(space, &m.mass);
    let rules = (0..space.steps())
        .map(|k| {
            let a_n = space.act[k];
            (0..space.info_count[k])
                .map(|info| {
                    let im = lv.info[k][info];
                    if im > 0.0 {
                        Rule::Defined(
                            lv.node[k][info * a_n..(info + 1) * a_n]
                                .iter()
                                .map(|x| x / im)
                                .collect(),
                        )
                    } else {
                        Rule::Unconstrained
                    }
                })
                .collect()
        })
        .collect();
    Ok(PartialBehaviorStrategy {
        player: m.player,
        rules,
    })
}

/// Convex combination of measures of one player.
pub fn mix(measures: &[StrategicMeasure], weights: &[f64]) -> Result<StrategicMeasure> {
    if measures.is_empty() || measures.len() != weights.len() {
        return Err(Error::WeightSum(weights.iter().sum()));
    }
    let player = measures[0].player;
    if measures.iter().any(|m| m.player != player || m.mass.len() != measures[0].mass.len()) {
        return Err(Error::MismatchedPlayers(
            "mixed measures belong to different players".into(),
        ));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::WeightSum(f64::NAN));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > TOL {
        return Err(Error::WeightSum(total));
    }
    let mut mass = vec![0.0; measures[0].mass.len()];
    for (m, &w) in measures.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (o, x) in mass.iter_mut().zip(&m.mass) {
            *o += w * x;
        }
    }
    Ok(StrategicMeasure { player, mass })
}

fn step_for(game: &ValidatedGame, player: usize, period: usize) -> Result<(usize, &OwnSpace)> {
    if period == 0 || period >= game.horizon() || game.active(period) != player {
        return Err(Error::PlayerNotActive { player, period });
    }
    let space = game.space(player).unwrap();
    Ok((space.step_of(period).unwrap(), space))
}

/// Whether `m2` agrees with `m` on all own coordinates strictly before `period`.
pub fn is_continuation(
    game: &ValidatedGame,
    m2: &StrategicMeasure,
    m: &StrategicMeasure,
    period: usize,
) -> Result<bool> {
    let player = game.active(period);
    if m.player != player || m2.player != player {
        return Err(Error::PlayerNotActive {
            player: m.player,
            period,
        });
    }
    let (k, space) = step_for(game, player, period)?;
    if k == 0 {
        return Ok(true);
    }
    let a = Levels::of(space, &m.mass);
    let b = Levels::of(space, &m2.mass);
    Ok(a.node[k - 1]
        .iter()
        .zip(&b.node[k - 1])
        .all(|(x, y)| (x - y).abs() <= TOL))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Vertices {
    Enumerated(Vec<Vec<f64>>),
    CapExceeded { bases: u128, cap: u128 },
}

/// Linear description of the τ-continuations of a measure, over the feasible
/// own trajectories (`variables`, as leaf indices): `A x = b`, `x ≥ 0`.
#[derive(Clone, Debug)]
pub struct ContinuationConstraints {
    pub player: usize,
    pub period: usize,
    pub variables: Vec<usize>,
    pub leaf_count: usize,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub rank: usize,
    pub vertices: Vertices,
}

pub const DEFAULT_VERTEX_CAP: u128 = 1_000_000;

impl ContinuationConstraints {
    /// Affine dimension of the polytope's carrier.
    pub fn dimension(&self) -> usize {
        self.variables.len() - self.rank
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.leaf_count {
            return false;
        }
        let mut on = vec![false; self.leaf_count];
        for &v in &self.variables {
            on[v] = true;
        }
        for (i, &xi) in x.iter().enumerate() {
            if xi < -tol || (!on[i] && xi.abs() > tol) {
                return false;
            }
        }
        let xv = DVector::from_iterator(self.variables.len(), self.variables.iter().map(|&v| x[v]));
        let r = &self.a * xv - &self.b;
        r.iter().all(|e| e.abs() <= tol)
    }

    /// Vertex as a full leaf vector.
    pub fn expand(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.leaf_count];
        for (i, &leaf) in self.variables.iter().enumerate() {
            out[leaf] = v[i];
        }
        out
    }
}

pub fn continuation_polytope(
    game: &ValidatedGame,
    m: &StrategicMeasure,
    period: usize,
) -> Result<ContinuationConstraints> {
    continuation_polytope_with_cap(game, m, period, DEFAULT_VERTEX_CAP)
}

pub fn continuation_polytope_with_cap(
    game: &ValidatedGame,
    m: &StrategicMeasure,
    period: usize,
    cap: u128,
) -> Result<ContinuationConstraints> {
    let player = game.active(period);
    let (k0, space) = step_for(game, player, period)?;
    if m.player != player {
        return Err(Error::PlayerNotActive {
            player: m.player,
            period,
        });
    }
    let variables: Vec<usize> = (0..space.leaf_count())
        .filter(|&l| space.leaf_feasible(l))
        .collect();
    let mut col = vec![usize::MAX; space.leaf_count()];
    for (i, &l) in variables.iter().enumerate() {
        col[l] = i;
    }
    let d = variables.len();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let lv = Levels::of(space, &m.mass);
    // fixed prefix marginal
    if k0 == 0 {
        rows.push((vec![1.0; d], 1.0));
    } else {
        let per = space.leaves_below_node(k0 - 1);
        for p in 0..space.node_count[k0 - 1] {
            let mut r = vec![0.0; d];
            for l in p * per..(p + 1) * per {
                if col[l] != usize::MAX {
                    r[col[l]] = 1.0;
                }
            }
            rows.push((r, lv.node[k0 - 1][p]));
        }
    }
    // signal independence from step k0 on
    for k in k0..space.steps() {
        let s_n = space.sig[k];
        let per_node = space.leaves_below_info(k) * s_n;
        let per_info = space.leaves_below_info(k);
        let parents = if k == 0 { 1 } else { space.node_count[k - 1] };
        for p in 0..parents {
            for s in 0..s_n {
                let mut r = vec![0.0; d];
                for l in p * per_node..(p + 1) * per_node {
                    if col[l] != usize::MAX {
                        r[col[l]] -= space.mu[k][s];
                    }
                }
                let info = p * s_n + s;
                for l in info * per_info..(info + 1) * per_info {
                    if col[l] != usize::MAX {
                        r[col[l]] += 1.0;
                    }
                }
                rows.push((r, 0.0));
            }
        }
    }
    let (a, b) = independent_rows(&rows, d);
    let rank = a.nrows();
    let bases = binomial(d as u128, rank as u128);
    let vertices = if bases > cap {
        Vertices::CapExceeded { bases, cap }
    } else {
        Vertices::Enumerated(enumerate_vertices(&a, &b))
    };
    Ok(ContinuationConstraints {
        player,
        period,
        variables,
        leaf_count: space.leaf_count(),
        a,
        b,
        rank,
        vertices,
    })
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

/// Drop linearly dependent equality rows (Gram–Schmidt style elimination).
fn independent_rows(rows: &[(Vec<f64>, f64)], d: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut keep = Vec::new();
    for (i, (r, _)) in rows.iter().enumerate() {
        let mut v = r.clone();
        for q in &basis {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            for (x, y) in v.iter_mut().zip(q) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
            keep.push(i);
        }
    }
    let a = DMatrix::from_fn(keep.len(), d, |i, j| rows[keep[i]].0[j]);
    let b = DVector::from_iterator(keep.len(), keep.iter().map(|&i| rows[i].1));
    (a, b)
}

fn enumerate_vertices(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<Vec<f64>> {
    let r = a.nrows();
    let d = a.ncols();
    let mut out: Vec<Vec<f64>> = Vec::new();
    if r == 0 {
        out.push(vec![0.0; d]);
        return out;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        let bm = DMatrix::from_fn(r, r, |i, j| a[(i, idx[j])]);
        if let Some(xb) = bm.lu().solve(b) {
            if xb.iter().all(|x| x.is_finite() && *x >= -1e-12) {
                let mut x = vec![0.0; d];
                for (j, &c) in idx.iter().enumerate() {
                    x[c] = xb[j].max(0.0);
                }
                let resid = (a * DVector::from_vec(x.clone()) - b).amax();
                if resid <= 1e-9 && !out.iter().any(|v| v.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-9)) {
                    out.push(x);
                }
            }
        }
        // next combination
        let mut i = r;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < d - r + i {
                idx[i] += 1;
                for j in i + 1..r {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// One strategic measure per proper player, ordered as `game.players()`.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub measures: Vec<StrategicMeasure>,
}

impl Profile {
    /// Collect measures into a profile, checking that every proper player is covered once.
    pub fn new(game: &ValidatedGame, mut measures: Vec<StrategicMeasure>) -> Result<Profile> {
        measures.sort_by_key(|m| m.player);
        let ids: Vec<usize> = measures.iter().map(|m| m.player).collect();
        if ids != game.players() {
            return Err(Error::IncompleteProfile(format!(
                "profile covers players {ids:?}, game has {:?}",
                game.players()
            )));
        }
        for m in &measures {
            let want = game.space(m.player).unwrap().leaf_count();
            if m.mass.len() != want {
                return Err(Error::IncompleteProfile(format!(
                    "measure of player {} has {} entries, expected {want}",
                    m.player,
                    m.mass.len()
                )));
            }
        }
        Ok(Profile { measures })
    }

    pub fn validate(&self, game: &ValidatedGame) -> Result<()> {
        let p = Profile::new(game, self.measures.clone())?;
        for m in &p.measures {
            validate_measure(game, m)?;
        }
        Ok(())
    }

    pub fn uniform(game: &ValidatedGame) -> Profile {
        Profile {
            measures: game
                .players()
                .iter()
                .map(|&p| {
                    let b = full_support_strategy(game, p);
                    induce_measure(game, &b).expect("uniform strategy is valid")
                })
                .collect(),
        }
    }

    pub fn get(&self, player: usize) -> Option<&StrategicMeasure> {
        self.measures.iter().find(|m| m.player == player)
    }

    pub fn replace(&self, m: StrategicMeasure) -> Profile {
        let mut out = self.clone();
        for slot in out.measures.iter_mut() {
            if slot.player == m.player {
                *slot = m;
                break;
            }
        }
        out
    }

    /// Largest per-player total-variation distance.
    pub fn tv(&self, other: &Profile) -> f64 {
        self.measures
            .iter()
            .zip(&other.measures)
            .map(|(a, b)| a.tv(b))
            .fold(0.0, f64::max)
    }
}
