//! Builders for the worked examples and the noisy sequential duopoly.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::game::{validate_game, GameSpec, Grid, Table, ValidatedGame};
use crate::measure::{induce_measure, BehaviorStrategy, Profile, StrategicMeasure};
use crate::play::expected_payoff;
use crate::solver::SeqEqCertificate;

/// Parameters shared by the example builders.
#[derive(Clone, Debug, PartialEq)]
pub struct ExampleParams {
    /// Signal accuracy of example 3.
    pub c: f64,
    /// Grid resolution `1/k` for the continuous action intervals.
    pub k: usize,
    /// Example 4 payoffs: invest when fine, invest when bad, cost of learning.
    pub invest_fine: f64,
    pub invest_bad: f64,
    pub learn_cost: f64,
}

impl Default for ExampleParams {
    fn default() -> Self {
        ExampleParams {
            c: 0.9,
            k: 10,
            invest_fine: 1.0,
            invest_bad: -1.0,
            learn_cost: 0.1,
        }
    }
}

pub const EXAMPLE_NAMES: [&str; 6] = ["ex1", "ex2", "ex3", "ex4", "ex5", "duopoly"];

fn players_payoffs(entries: Vec<(usize, Vec<usize>, Vec<f64>)>) -> BTreeMap<usize, Table> {
    entries
        .into_iter()
        .map(|(p, mask, values)| (p, Table { mask, values }))
        .collect()
}

/// `k + 1` points `0, 1/k, ..., 1`.
fn unit_grid(k: usize) -> Vec<f64> {
    (0..=k).map(|i| i as f64 / k as f64).collect()
}

/// Point-mass density: signal `s` is observed exactly when it equals `f(row)`.
fn point_density(rows: usize, signals: usize, f: impl Fn(usize) -> usize) -> Vec<f64> {
    let mut v = vec![0.0; rows * signals];
    for r in 0..rows {
        v[r * signals + f(r)] = signals as f64;
    }
    v
}

pub fn build_example(which: usize, p: &ExampleParams) -> Result<GameSpec> {
    match which {
        1 => example1(p.k),
        2 => example2(p.k),
        3 => example3(p.c),
        4 => Ok(example4(p)),
        5 => example5(p.k),
        _ => Err(Error::InvalidParameters(format!("no example {which}"))),
    }
}

pub fn build_validated(which: usize, p: &ExampleParams) -> Result<ValidatedGame> {
    validate_game(build_example(which, p)?)
}

/// Ann picks `a1`, Bob picks `b` without seeing it, Ann observes `a1 * b` and picks `a2`.
fn example1(k: usize) -> Result<GameSpec> {
    if k == 0 {
        return Err(Error::InvalidParameters("grid resolution k must be positive".into()));
    }
    let a1 = unit_grid(k);
    let n = a1.len();
    // observation a1*b is a1 when b = 1 and 0 otherwise
    let density = point_density(n * 2, n, |r| if r % 2 == 1 { r / 2 } else { 0 });
    let mut ann = Vec::with_capacity(n * 4);
    let mut bob = Vec::with_capacity(n * 4);
    for x in &a1 {
        for b in 0..2 {
            for a2 in 0..2 {
                let miss = (a2 as f64 - b as f64).abs();
                ann.push(-x - miss);
                bob.push(miss);
            }
        }
    }
    Ok(GameSpec {
        active: vec![0, 1, 2, 1],
        actions: vec![
            Grid::trivial(),
            Grid::numeric(a1.clone()),
            Grid::numeric(vec![0.0, 1.0]),
            Grid::numeric(vec![0.0, 1.0]),
        ],
        signals: vec![Grid::empty(), Grid::trivial(), Grid::trivial(), Grid::numeric(a1)],
        nature: vec![1.0],
        base: vec![vec![]; 4],
        density: vec![None, None, None, Some(Table { mask: vec![2, 4], values: density })],
        correspondence: vec![None; 4],
        payoffs: players_payoffs(vec![(1, vec![2, 4, 6], ann), (2, vec![2, 4, 6], bob)]),
        tail_bound: None,
    })
}

/// Nature draws Ann's type, Ann learns it and picks `a`, Bob observes `a` and picks `b`.
fn example2(k: usize) -> Result<GameSpec> {
    if k == 0 {
        return Err(Error::InvalidParameters("grid resolution k must be positive".into()));
    }
    let acts: Vec<f64> = (0..=2 * k).map(|i| (i as f64 - k as f64) / k as f64).collect();
    let n = acts.len();
    let types = [-1.0, 1.0];
    let mut ann = Vec::with_capacity(2 * n * 2);
    for t in types {
        for a in &acts {
            for b in types {
                ann.push(-(t - b + a).abs());
            }
        }
    }
    let mut bob = Vec::with_capacity(n * 2);
    for a in &acts {
        for b in types {
            bob.push(a * b);
        }
    }
    Ok(GameSpec {
        active: vec![0, 1, 2],
        actions: vec![
            Grid::numeric(types.to_vec()),
            Grid::numeric(acts.clone()),
            Grid::numeric(types.to_vec()),
        ],
        signals: vec![Grid::empty(), Grid::numeric(types.to_vec()), Grid::numeric(acts)],
        nature: vec![0.5, 0.5],
        base: vec![vec![]; 3],
        density: vec![
            None,
            Some(Table { mask: vec![0], values: point_density(2, 2, |r| r) }),
            Some(Table { mask: vec![2], values: point_density(n, n, |r| r) }),
        ],
        correspondence: vec![None; 3],
        payoffs: players_payoffs(vec![(1, vec![0, 2, 4], ann), (2, vec![2, 4], bob)]),
        tail_bound: None,
    })
}

/// Ann picks L or R, Bob sees a signal that is correct with probability `c`.
fn example3(c: f64) -> Result<GameSpec> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidParameters(format!("c = {c} is not a probability")));
    }
    let w = 1.0 - c;
    Ok(GameSpec {
        active: vec![0, 1, 2],
        actions: vec![Grid::trivial(), Grid::new(["L", "R"]), Grid::new(["L", "R"])],
        signals: vec![Grid::empty(), Grid::trivial(), Grid::new(["l", "r"])],
        nature: vec![1.0],
        base: vec![vec![], vec![], vec![0.5, 0.5]],
        density: vec![
            None,
            None,
            Some(Table {
                mask: vec![2],
                values: vec![2.0 * c, 2.0 * w, 2.0 * w, 2.0 * c],
            }),
        ],
        correspondence: vec![None; 3],
        payoffs: players_payoffs(vec![
            (1, vec![2, 4], vec![2.0, 4.0, 1.0, 2.0]),
            (2, vec![2, 4], vec![4.0, 2.0, 2.0, 1.0]),
        ]),
        tail_bound: None,
    })
}

/// A decision maker chooses to learn the state (L) or not (U), then invests or not.
fn example4(p: &ExampleParams) -> GameSpec {
    // rows (a0, a1) in {fine, bad} x {L, U}; signals u, f, b
    let density = vec![
        0.0, 3.0, 0.0, // fine, L
        3.0, 0.0, 0.0, // fine, U
        0.0, 0.0, 3.0, // bad, L
        3.0, 0.0, 0.0, // bad, U
    ];
    let mut pay = Vec::with_capacity(8);
    for state in 0..2 {
        for learn in 0..2 {
            for invest in 0..2 {
                let mut v = 0.0;
                if invest == 0 {
                    v += if state == 0 { p.invest_fine } else { p.invest_bad };
                }
                if learn == 0 {
                    v -= p.learn_cost;
                }
                pay.push(v);
            }
        }
    }
    GameSpec {
        active: vec![0, 1, 1],
        actions: vec![Grid::new(["fine", "bad"]), Grid::new(["L", "U"]), Grid::new(["I", "N"])],
        signals: vec![Grid::empty(), Grid::trivial(), Grid::new(["u", "f", "b"])],
        nature: vec![0.5, 0.5],
        base: vec![vec![]; 3],
        density: vec![None, None, Some(Table { mask: vec![0, 2], values: density })],
        correspondence: vec![None; 3],
        payoffs: players_payoffs(vec![(1, vec![0, 2, 4], pay)]),
        tail_bound: None,
    }
}

/// A single player chooses twice from a grid on `[0, 1]`.
fn example5(k: usize) -> Result<GameSpec> {
    if k == 0 {
        return Err(Error::InvalidParameters("grid resolution k must be positive".into()));
    }
    let g = unit_grid(k);
    Ok(GameSpec {
        active: vec![0, 1, 1],
        actions: vec![Grid::trivial(), Grid::numeric(g.clone()), Grid::numeric(g)],
        signals: vec![Grid::empty(), Grid::trivial(), Grid::trivial()],
        nature: vec![1.0],
        base: vec![vec![]; 3],
        density: vec![None; 3],
        correspondence: vec![None; 3],
        payoffs: players_payoffs(vec![(1, vec![], vec![0.0])]),
        tail_bound: None,
    })
}

/// Example 5's copy-the-first-action measure: first action 0, second equal to the first.
pub fn example5_copy_measure(game: &ValidatedGame) -> Result<StrategicMeasure> {
    let space = game.space(1).ok_or_else(|| Error::MismatchedPlayers("no player 1".into()))?;
    let a_n = space.act[1];
    let mut first = vec![0.0; space.act[0]];
    first[0] = 1.0;
    let mut second = vec![0.0; space.info_count[1] * a_n];
    for info in 0..space.info_count[1] {
        let (_, acts) = space.decode_info(1, info);
        second[info * a_n + acts[0]] = 1.0;
    }
    induce_measure(
        game,
        &BehaviorStrategy {
            player: 1,
            rules: vec![first, second],
        },
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct DuopolyParams {
    pub a: f64,
    pub b: f64,
    pub cost: f64,
    /// Half-width of the triangular signal kernel.
    pub delta: f64,
    /// Points on the quantity grid, which is also the signal grid.
    pub grid: usize,
}

impl Default for DuopolyParams {
    fn default() -> Self {
        DuopolyParams {
            a: 1.0,
            b: 1.0,
            cost: 0.0,
            delta: 0.05,
            grid: 101,
        }
    }
}

impl DuopolyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0) || !(self.a > self.cost) || !(self.delta > 0.0) || self.grid < 2 {
            return Err(Error::InvalidParameters(format!(
                "need b > 0, a > cost, delta > 0 and at least two grid points: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn profit(&self, own: f64, other: f64) -> f64 {
        own * (self.a - self.b * (own + other)) - self.cost * own
    }

    /// Upper end of the quantity grid: the quantity at which price reaches cost.
    pub fn q_bar(&self) -> f64 {
        (self.a - self.cost) / self.b
    }

    pub fn quantities(&self) -> Vec<f64> {
        let top = self.q_bar();
        let last = (self.grid - 1) as f64;
        (0..self.grid).map(|i| top * i as f64 / last).collect()
    }

    pub fn step(&self) -> f64 {
        self.q_bar() / (self.grid - 1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DuopolyAnalytics {
    pub cournot: f64,
    pub leader: f64,
    pub follower: f64,
    pub leader_profit: f64,
    pub cournot_profit: f64,
    pub follower_profit: f64,
}

/// Best reply to the other firm's quantity.
pub fn reaction(p: &DuopolyParams, other: f64) -> f64 {
    ((p.a - p.cost - p.b * other) / (2.0 * p.b)).max(0.0)
}

pub fn duopoly_analytics(p: &DuopolyParams) -> DuopolyAnalytics {
    let m = p.a - p.cost;
    let cournot = m / (3.0 * p.b);
    let leader = m / (2.0 * p.b);
    let follower = reaction(p, leader);
    DuopolyAnalytics {
        cournot,
        leader,
        follower,
        leader_profit: p.profit(leader, follower),
        cournot_profit: p.profit(cournot, cournot),
        follower_profit: p.profit(follower, leader),
    }
}

/// Leader picks a quantity, the follower sees it through triangular noise and picks hers.
pub fn build_duopoly(p: &DuopolyParams) -> Result<GameSpec> {
    p.validate()?;
    let cells = p.delta / p.step();
    if cells < 3.0 - 1e-9 {
        return Err(Error::GridTooCoarse { cells });
    }
    let q = p.quantities();
    let n = q.len();
    let mu = 1.0 / n as f64;
    let mut density = Vec::with_capacity(n * n);
    for &x in &q {
        let row: Vec<f64> = q
            .iter()
            .map(|&s| {
                let k = p.delta - (s - x).abs();
                if k > 1e-12 * p.delta {
                    k
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = row.iter().sum::<f64>() * mu;
        density.extend(row.iter().map(|k| k / total));
    }
    let mut leader = Vec::with_capacity(n * n);
    let mut follower = Vec::with_capacity(n * n);
    for &x in &q {
        for &y in &q {
            leader.push(p.profit(x, y));
            follower.push(p.profit(y, x));
        }
    }
    Ok(GameSpec {
        active: vec![0, 1, 2],
        actions: vec![Grid::trivial(), Grid::numeric(q.clone()), Grid::numeric(q.clone())],
        signals: vec![Grid::empty(), Grid::trivial(), Grid::numeric(q)],
        nature: vec![1.0],
        base: vec![vec![]; 3],
        density: vec![None, None, Some(Table { mask: vec![2], values: density })],
        correspondence: vec![None; 3],
        payoffs: players_payoffs(vec![(1, vec![2, 4], leader), (2, vec![2, 4], follower)]),
        tail_bound: None,
    })
}

fn nearest(grid: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, g) in grid.iter().enumerate() {
        if (g - x).abs() < (grid[best] - x).abs() {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct FirstMoverReport {
    pub leader_payoff: f64,
    pub threshold: f64,
    pub holds: bool,
    /// Every measure of the limit is a point mass given each information set.
    pub pure: bool,
    pub text: String,
}

/// Whether every conditional rule of every measure in the profile is degenerate.
pub fn profile_is_pure(game: &ValidatedGame, profile: &Profile, tol: f64) -> bool {
    profile.measures.iter().all(|m| {
        let space = game.space(m.player).unwrap();
        let lv = m.levels(game);
        (0..space.steps()).all(|k| {
            let a_n = space.act[k];
            lv.info[k].iter().enumerate().all(|(info, &im)| {
                im <= 0.0
                    || lv.node[k][info * a_n..(info + 1) * a_n]
                        .iter()
                        .cloned()
                        .fold(0.0, f64::max)
                        >= (1.0 - tol) * im
            })
        })
    })
}

/// Leader's limit payoff against `π(q^l, q^f) - eps`, and whether the limit is pure.
pub fn first_mover_check(
    cert: &SeqEqCertificate,
    game: &ValidatedGame,
    p: &DuopolyParams,
    eps: f64,
) -> Result<FirstMoverReport> {
    let fresh = validate_game(build_duopoly(p)?)?;
    if fresh.spec() != game.spec() {
        return Err(Error::MismatchedPlayers(
            "the certificate's game is not the duopoly with these parameters".into(),
        ));
    }
    let limit = Profile::new(game, cert.limit.measures.clone())?;
    let an = duopoly_analytics(p);
    let leader_payoff = expected_payoff(game, &limit, 1)?;
    let threshold = an.leader_profit - eps;
    let holds = leader_payoff >= threshold;
    let pure = profile_is_pure(game, &limit, 1e-9);
    let q = p.quantities();
    let lm = limit.get(1).unwrap();
    let mut text = String::new();
    let _ = writeln!(text, "first-mover check");
    let _ = writeln!(
        text,
        "analytic: q^C = {:?}, q^l = {:?}, q^f = {:?}",
        an.cournot, an.leader, an.follower
    );
    let _ = writeln!(
        text,
        "analytic profits: leader {:?} > cournot {:?} > follower {:?}",
        an.leader_profit, an.cournot_profit, an.follower_profit
    );
    let _ = writeln!(text, "leader payoff in limit: {leader_payoff:?}");
    let _ = writeln!(text, "threshold (leader profit - {eps:?}): {threshold:?}");
    let _ = writeln!(text, "holds: {holds}");
    let _ = writeln!(text, "limit is pure: {pure}");
    let _ = writeln!(text, "leader support:");
    for (i, &m) in lm.mass.iter().enumerate() {
        if m > 1e-4 {
            let _ = writeln!(text, "  q = {:?}: {m:?}", q[i]);
        }
    }
    Ok(FirstMoverReport {
        leader_payoff,
        threshold,
        holds,
        pure,
        text,
    })
}

/// Example 3 profile in which Ann mixes evenly and Bob plays R whatever he observes.
pub fn ex3_signal_ignoring(game: &ValidatedGame) -> Result<Profile> {
    let ann = induce_measure(game, &BehaviorStrategy { player: 1, rules: vec![vec![0.5, 0.5]] })?;
    let bob = induce_measure(game, &BehaviorStrategy { player: 2, rules: vec![vec![0.0, 1.0, 0.0, 1.0]] })?;
    Profile::new(game, vec![ann, bob])
}

/// Example 2 Nash profile in which Ann of type `t` plays `t·θ`; Bob matches the
/// sign of `a` when `|a| ≥ θ` and mixes evenly otherwise, which is a poor reply
/// to every small nonzero action.
pub fn ex2_off_path_profile(game: &ValidatedGame, theta: f64) -> Result<Profile> {
    let acts = game.spec().actions[1].coords.clone().ok_or_else(|| {
        Error::InvalidParameters("example 2 needs numeric actions".into())
    })?;
    let n = acts.len();
    let mut ann = vec![0.0; 2 * n];
    ann[nearest(&acts, -theta)] = 1.0;
    ann[n + nearest(&acts, theta)] = 1.0;
    let mut bob = vec![0.0; 2 * n];
    for (i, &a) in acts.iter().enumerate() {
        if a.abs() + 1e-12 >= theta {
            bob[2 * i + usize::from(a > 0.0)] = 1.0;
        } else {
            bob[2 * i] = 0.5;
            bob[2 * i + 1] = 0.5;
        }
    }
    let ann = induce_measure(game, &BehaviorStrategy { player: 1, rules: vec![ann] })?;
    let bob = induce_measure(game, &BehaviorStrategy { player: 2, rules: vec![bob] })?;
    Profile::new(game, vec![ann, bob])
}

/// Pure duopoly profile: the leader plays the Cournot quantity and the follower
/// plays its best reply to it at every signal.
pub fn duopoly_pure_profile(game: &ValidatedGame, p: &DuopolyParams) -> Result<Profile> {
    let q = p.quantities();
    let n = q.len();
    let an = duopoly_analytics(p);
    let mut lead = vec![0.0; n];
    lead[nearest(&q, an.cournot)] = 1.0;
    let reply = nearest(&q, reaction(p, q[nearest(&q, an.cournot)]));
    let mut follow = vec![0.0; n * n];
    for s in 0..n {
        follow[s * n + reply] = 1.0;
    }
    let l = induce_measure(game, &BehaviorStrategy { player: 1, rules: vec![lead] })?;
    let f = induce_measure(game, &BehaviorStrategy { player: 2, rules: vec![follow] })?;
    Profile::new(game, vec![l, f])
}

/// Builtin game by name with the given parameters.
pub fn builtin(name: &str, p: &ExampleParams, d: &DuopolyParams) -> Result<GameSpec> {
    match name {
        "ex1" => build_example(1, p),
        "ex2" => build_example(2, p),
        "ex3" => build_example(3, p),
        "ex4" => build_example(4, p),
        "ex5" => build_example(5, p),
        "duopoly" => build_duopoly(d),
        _ => Err(Error::InvalidParameters(format!(
            "unknown example {name}; expected one of {}",
            EXAMPLE_NAMES.join(", ")
        ))),
    }
}
