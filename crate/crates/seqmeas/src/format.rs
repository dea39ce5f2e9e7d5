//! Plain-text format for game specs, strategic measures and behavior strategies.
//!
//! A document is a sequence of sections. Each section starts with a header
//! `[name]` or `[name index]` and holds `key = value` lines whose values are
//! JSON (numbers, quoted strings, lists). A value may span several lines as
//! long as its brackets are open. `#` outside a string starts a comment.
//! Unknown sections, unknown keys and repeated keys are errors.
//!
//! ```text
//! [periods]            active = [0, 1, 2]                 (player per period)
//! [players]            ids = [1, 2]                       (optional cross-check)
//! [actions t]          labels = [..]  coords = [..]       nature = [..] (t = 0 only)
//! [signals t]          labels = [..]  coords = [..]       (t >= 1; default one signal "-")
//! [mu t]               probs = [..]                       (default uniform)
//! [density t]          mask = [..]    values = [..]       (default identically 1)
//! [correspondence t]   mask = [..]    allowed = [[..]..]  (default every action)
//! [payoff i]           mask = [..]    values = [..]
//! [tail_bound]         values = [..]  rule = "zero" | "constant" | "geometric"
//!                      constant = x   scale = x   ratio = x
//! [measure i]          mass = [..]                        (one entry per own trajectory)
//! [strategy i]         rules = [[..]..]                   (one flat table per own step)
//! ```
//!
//! Masks list play coordinates: `0` is `a0`, `2t-1` is `s_t`, `2t` is `a_t`.
//! Tables are row-major with the first mask coordinate varying slowest; density
//! tables carry a trailing axis for the period's own signal. Reals are written
//! in shortest round-trip form, so writing and re-reading is exact.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Correspondence, GameSpec, Grid, Table, TailBound, TailRule, ValidatedGame};
use crate::measure::{induce_measure, BehaviorStrategy, Profile, StrategicMeasure};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Document {
    pub game: Option<GameSpec>,
    pub measures: Vec<StrategicMeasure>,
    pub strategies: Vec<BehaviorStrategy>,
}

struct Value {
    text: String,
    line: usize,
    column: usize,
}

impl Value {
    fn parse<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_str(&self.text).map_err(|e| {
            let (line, column) = if e.line() <= 1 {
                (self.line, self.column + e.column().saturating_sub(1))
            } else {
                (self.line + e.line() - 1, e.column())
            };
            let msg = e.to_string();
            let message = match msg.rfind(" at line ") {
                Some(i) => msg[..i].to_string(),
                None => msg,
            };
            Error::Parse { line, column, message }
        })
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }
}

struct Section {
    name: String,
    index: Option<usize>,
    line: usize,
    entries: BTreeMap<String, Value>,
}

impl Section {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: 1,
            message: message.into(),
        }
    }

    fn allow(&self, keys: &[&str]) -> Result<()> {
        for (k, v) in &self.entries {
            if !keys.contains(&k.as_str()) {
                return Err(Error::Parse {
                    line: v.line,
                    column: 1,
                    message: format!("unknown key '{k}' in section [{}]", self.title()),
                });
            }
        }
        Ok(())
    }

    fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        self.entries.get(key).map(|v| v.parse()).transpose()
    }

    fn require<T: DeserializeOwned>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| self.error(format!("section [{}] needs key '{key}'", self.title())))
    }

    fn title(&self) -> String {
        match self.index {
            Some(i) => format!("{} {i}", self.name),
            None => self.name.clone(),
        }
    }
}

/// Strip a trailing comment, respecting JSON strings.
fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let mut escaped = false;
    for (i, ch) in line.char_indices() {
        if in_str {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_str = false;
            }
        } else if ch == '"' {
            in_str = true;
        } else if ch == '#' {
            return &line[..i];
        }
    }
    line
}

/// Net bracket depth change of a value fragment, ignoring strings.
fn depth_change(s: &str) -> i64 {
    let mut d = 0;
    let mut in_str = false;
    let mut escaped = false;
    for ch in s.chars() {
        if in_str {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_str = false;
            }
            continue;
        }
        match ch {
            '"' => in_str = true,
            '[' | '{' => d += 1,
            ']' | '}' => d -= 1,
            _ => {}
        }
    }
    d
}

const SECTIONS: &[(&str, bool)] = &[
    ("periods", false),
    ("players", false),
    ("actions", true),
    ("signals", true),
    ("mu", true),
    ("density", true),
    ("correspondence", true),
    ("payoff", true),
    ("tail_bound", false),
    ("measure", true),
    ("strategy", true),
];

fn split_sections(text: &str) -> Result<Vec<Section>> {
    let lines: Vec<&str> = text.lines().collect();
    let mut sections: Vec<Section> = Vec::new();
    let mut seen: BTreeSet<(String, Option<usize>)> = BTreeSet::new();
    let mut i = 0;
    while i < lines.len() {
        let lineno = i + 1;
        let raw = strip_comment(lines[i]);
        i += 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = raw.len() - raw.trim_start().len();
        if let Some(body) = trimmed.strip_prefix('[') {
            let err = |column: usize, message: String| Error::Parse {
                line: lineno,
                column,
                message,
            };
            let body = body
                .strip_suffix(']')
                .ok_or_else(|| err(indent + 1, "section header must end with ']'".into()))?;
            let mut parts = body.split_whitespace();
            let name = parts.next().unwrap_or("").to_string();
            let index = parts.next();
            if parts.next().is_some() {
                return Err(err(indent + 1, format!("malformed section header [{body}]")));
            }
            let Some(&(_, indexed)) = SECTIONS.iter().find(|(n, _)| *n == name) else {
                return Err(err(indent + 2, format!("unknown section [{name}]")));
            };
            let index = match (indexed, index) {
                (true, Some(s)) => Some(s.parse::<usize>().map_err(|_| {
                    err(indent + 2 + name.len(), format!("section index '{s}' is not a nonnegative integer"))
                })?),
                (false, None) => None,
                (true, None) => return Err(err(indent + 1, format!("section [{name}] needs an index"))),
                (false, Some(_)) => return Err(err(indent + 1, format!("section [{name}] takes no index"))),
            };
            if !seen.insert((name.clone(), index)) {
                return Err(err(indent + 1, format!("repeated section [{body}]")));
            }
            sections.push(Section {
                name,
                index,
                line: lineno,
                entries: BTreeMap::new(),
            });
            continue;
        }
        let Some(eq) = raw.find('=') else {
            return Err(Error::Parse {
                line: lineno,
                column: indent + 1,
                message: "expected 'key = value' or a section header".into(),
            });
        };
        let key = raw[..eq].trim().to_string();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Parse {
                line: lineno,
                column: indent + 1,
                message: format!("malformed key '{key}'"),
            });
        }
        let Some(section) = sections.last_mut() else {
            return Err(Error::Parse {
                line: lineno,
                column: indent + 1,
                message: "key outside any section".into(),
            });
        };
        let after = &raw[eq + 1..];
        let lead = after.len() - after.trim_start().len();
        let column = eq + 2 + lead;
        let mut value = after.trim().to_string();
        let mut depth = depth_change(&value);
        while depth > 0 && i < lines.len() {
            let more = strip_comment(lines[i]);
            i += 1;
            depth += depth_change(more);
            value.push('\n');
            value.push_str(more);
        }
        if depth != 0 {
            return Err(Error::Parse {
                line: lineno,
                column,
                message: "unbalanced brackets in value".into(),
            });
        }
        if value.trim().is_empty() {
            return Err(Error::Parse {
                line: lineno,
                column,
                message: format!("key '{key}' has no value"),
            });
        }
        if section.entries.contains_key(&key) {
            return Err(Error::Parse {
                line: lineno,
                column: indent + 1,
                message: format!("repeated key '{key}'"),
            });
        }
        section.entries.insert(
            key,
            Value {
                text: value,
                line: lineno,
                column,
            },
        );
    }
    Ok(sections)
}

fn grid(sec: &Section) -> Result<Grid> {
    let labels: Vec<String> = sec.require("labels")?;
    let coords: Option<Vec<f64>> = sec.get("coords")?;
    if let Some(c) = &coords {
        if c.len() != labels.len() {
            return Err(sec.entries["coords"].error(format!(
                "{} coordinates for {} labels",
                c.len(),
                labels.len()
            )));
        }
    }
    Ok(Grid { labels, coords })
}

fn table(sec: &Section) -> Result<Table> {
    sec.allow(&["mask", "values"])?;
    Ok(Table {
        mask: sec.require("mask")?,
        values: sec.require("values")?,
    })
}

fn build_game(sections: &[&Section]) -> Result<GameSpec> {
    let find = |name: &str, index: Option<usize>| sections.iter().find(|s| s.name == name && s.index == index);
    let periods = find("periods", None).ok_or_else(|| Error::Parse {
        line: 1,
        column: 1,
        message: "missing section [periods]".into(),
    })?;
    periods.allow(&["horizon", "active"])?;
    let active: Vec<usize> = periods.require("active")?;
    if let Some(h) = periods.get::<usize>("horizon")? {
        if h != active.len() {
            return Err(periods.entries["horizon"].error(format!(
                "horizon {h} does not match {} active entries",
                active.len()
            )));
        }
    }
    let t_n = active.len();
    if t_n == 0 {
        return Err(periods.error("at least one period is required"));
    }
    for s in sections {
        if let Some(t) = s.index {
            let periodic = !matches!(s.name.as_str(), "payoff" | "measure" | "strategy");
            if periodic && t >= t_n {
                return Err(s.error(format!("period {t} is beyond the horizon {t_n}")));
            }
            if periodic && t == 0 && s.name != "actions" {
                return Err(s.error(format!("section [{} 0] is not allowed; period 0 has no signal", s.name)));
            }
        }
    }
    if let Some(p) = find("players", None) {
        p.allow(&["ids"])?;
        let ids: BTreeSet<usize> = p.require::<Vec<usize>>("ids")?.into_iter().collect();
        let act: BTreeSet<usize> = active.iter().skip(1).copied().collect();
        if ids != act {
            return Err(p.entries["ids"].error(format!(
                "player ids {ids:?} differ from the active players {act:?}"
            )));
        }
    }
    let mut actions = Vec::with_capacity(t_n);
    let mut signals = vec![Grid::empty()];
    let mut base = vec![Vec::new()];
    let mut density = vec![None];
    let mut correspondence = vec![None];
    let mut nature = Vec::new();
    for t in 0..t_n {
        let sec = find("actions", Some(t)).ok_or_else(|| Error::Parse {
            line: periods.line,
            column: 1,
            message: format!("missing section [actions {t}]"),
        })?;
        if t == 0 {
            sec.allow(&["labels", "coords", "nature"])?;
            let g = grid(sec)?;
            nature = sec
                .get::<Vec<f64>>("nature")?
                .unwrap_or_else(|| vec![1.0 / g.len().max(1) as f64; g.len()]);
            actions.push(g);
            continue;
        }
        sec.allow(&["labels", "coords"])?;
        actions.push(grid(sec)?);
        signals.push(match find("signals", Some(t)) {
            Some(s) => {
                s.allow(&["labels", "coords"])?;
                grid(s)?
            }
            None => Grid::trivial(),
        });
        base.push(match find("mu", Some(t)) {
            Some(s) => {
                s.allow(&["probs"])?;
                s.require("probs")?
            }
            None => Vec::new(),
        });
        density.push(find("density", Some(t)).map(|s| table(s)).transpose()?);
        correspondence.push(
            find("correspondence", Some(t))
                .map(|s| -> Result<Correspondence> {
                    s.allow(&["mask", "allowed"])?;
                    Ok(Correspondence {
                        mask: s.require("mask")?,
                        allowed: s.require("allowed")?,
                    })
                })
                .transpose()?,
        );
    }
    let mut payoffs = BTreeMap::new();
    for s in sections.iter().filter(|s| s.name == "payoff") {
        payoffs.insert(s.index.unwrap(), table(s)?);
    }
    let tail_bound = find("tail_bound", None)
        .map(|s| -> Result<TailBound> {
            s.allow(&["values", "rule", "constant", "scale", "ratio"])?;
            let values: Vec<f64> = s.get("values")?.unwrap_or_default();
            let rule_name: String = s.get("rule")?.unwrap_or_else(|| "zero".into());
            let rule = match rule_name.as_str() {
                "zero" => TailRule::Zero,
                "constant" => TailRule::Constant(s.require("constant")?),
                "geometric" => TailRule::Geometric {
                    scale: s.require("scale")?,
                    ratio: s.require("ratio")?,
                },
                other => {
                    return Err(s.entries["rule"].error(format!(
                        "unknown tail rule '{other}', expected zero, constant or geometric"
                    )))
                }
            };
            Ok(TailBound { values, rule })
        })
        .transpose()?;
    Ok(GameSpec {
        active,
        actions,
        signals,
        nature,
        base,
        density,
        correspondence,
        payoffs,
        tail_bound,
    })
}

/// Parse any mix of game, measure and strategy sections.
pub fn parse_document(text: &str) -> Result<Document> {
    let sections = split_sections(text)?;
    let (objects, game_secs): (Vec<&Section>, Vec<&Section>) = sections
        .iter()
        .partition(|s| s.name == "measure" || s.name == "strategy");
    let game = if game_secs.is_empty() {
        None
    } else {
        Some(build_game(&game_secs)?)
    };
    let mut doc = Document {
        game,
        ..Document::default()
    };
    for s in objects {
        let player = s.index.unwrap();
        if s.name == "measure" {
            s.allow(&["mass"])?;
            doc.measures.push(StrategicMeasure {
                player,
                mass: s.require("mass")?,
            });
        } else {
            s.allow(&["rules"])?;
            doc.strategies.push(BehaviorStrategy {
                player,
                rules: s.require("rules")?,
            });
        }
    }
    Ok(doc)
}

/// Parse a game spec document; measure and strategy sections are not allowed.
pub fn parse_spec(text: &str) -> Result<GameSpec> {
    let doc = parse_document(text)?;
    if !doc.measures.is_empty() || !doc.strategies.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "a game spec may not contain measure or strategy sections".into(),
        });
    }
    doc.game.ok_or_else(|| Error::Parse {
        line: 1,
        column: 1,
        message: "missing section [periods]".into(),
    })
}

/// Read a profile for `game`: one `[measure i]` or `[strategy i]` section per
/// player. Strategies are turned into their strategic measures.
pub fn parse_profile(game: &ValidatedGame, text: &str) -> Result<Profile> {
    let doc = parse_document(text)?;
    let mut measures = doc.measures;
    for b in &doc.strategies {
        if measures.iter().any(|m| m.player == b.player) {
            return Err(Error::IncompleteProfile(format!(
                "player {} has both a measure and a strategy",
                b.player
            )));
        }
        measures.push(induce_measure(game, b)?);
    }
    let p = Profile::new(game, measures)?;
    p.validate(game)?;
    Ok(p)
}

fn json<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

/// A list of reals laid out `width` per line.
fn rows(values: &[f64], width: usize) -> String {
    if values.len() <= width.max(1) {
        return json(values);
    }
    let mut s = String::from("[\n");
    let chunks: Vec<&[f64]> = values.chunks(width.max(1)).collect();
    for (i, c) in chunks.iter().enumerate() {
        let items: Vec<String> = c.iter().map(|x| json(x)).collect();
        let sep = if i + 1 < chunks.len() { "," } else { "" };
        let _ = writeln!(s, "  {}{sep}", items.join(", "));
    }
    s.push(']');
    s
}

fn coord_len(spec: &GameSpec, c: usize) -> usize {
    if c == 0 {
        spec.actions[0].len()
    } else if c % 2 == 1 {
        spec.signals[(c + 1) / 2].len()
    } else {
        spec.actions[c / 2].len()
    }
}

fn write_grid(s: &mut String, g: &Grid) {
    let _ = writeln!(s, "labels = {}", json(&g.labels));
    if let Some(c) = &g.coords {
        let _ = writeln!(s, "coords = {}", json(c));
    }
}

/// Serialize a game spec. Parsing the output gives back an equal spec.
pub fn write_spec(spec: &GameSpec) -> String {
    let mut s = String::new();
    let t_n = spec.horizon();
    let _ = writeln!(s, "[periods]");
    let _ = writeln!(s, "horizon = {t_n}");
    let _ = writeln!(s, "active = {}", json(&spec.active));
    let ids: BTreeSet<usize> = spec.active.iter().skip(1).copied().collect();
    let _ = writeln!(s, "\n[players]");
    let _ = writeln!(s, "ids = {}", json(&ids));
    for t in 0..t_n {
        let _ = writeln!(s, "\n[actions {t}]");
        write_grid(&mut s, &spec.actions[t]);
        if t == 0 {
            let _ = writeln!(s, "nature = {}", json(&spec.nature));
            continue;
        }
        let _ = writeln!(s, "\n[signals {t}]");
        write_grid(&mut s, &spec.signals[t]);
        if !spec.base[t].is_empty() {
            let _ = writeln!(s, "\n[mu {t}]");
            let _ = writeln!(s, "probs = {}", json(&spec.base[t]));
        }
        if let Some(d) = &spec.density[t] {
            let _ = writeln!(s, "\n[density {t}]");
            let _ = writeln!(s, "mask = {}", json(&d.mask));
            let _ = writeln!(s, "values = {}", rows(&d.values, spec.signals[t].len()));
        }
        if let Some(c) = &spec.correspondence[t] {
            let _ = writeln!(s, "\n[correspondence {t}]");
            let _ = writeln!(s, "mask = {}", json(&c.mask));
            let _ = writeln!(s, "allowed = {}", json(&c.allowed));
        }
    }
    for (p, tab) in &spec.payoffs {
        let _ = writeln!(s, "\n[payoff {p}]");
        let _ = writeln!(s, "mask = {}", json(&tab.mask));
        let width = tab.mask.last().map_or(1, |&c| coord_len(spec, c));
        let _ = writeln!(s, "values = {}", rows(&tab.values, width));
    }
    if let Some(tb) = &spec.tail_bound {
        let _ = writeln!(s, "\n[tail_bound]");
        let _ = writeln!(s, "values = {}", json(&tb.values));
        match tb.rule {
            TailRule::Zero => {
                let _ = writeln!(s, "rule = \"zero\"");
            }
            TailRule::Constant(c) => {
                let _ = writeln!(s, "rule = \"constant\"\nconstant = {}", json(&c));
            }
            TailRule::Geometric { scale, ratio } => {
                let _ = writeln!(s, "rule = \"geometric\"\nscale = {}\nratio = {}", json(&scale), json(&ratio));
            }
        }
    }
    s
}

pub fn write_measure(m: &StrategicMeasure) -> String {
    format!("[measure {}]\nmass = {}\n", m.player, rows(&m.mass, 8))
}

pub fn write_strategy(b: &BehaviorStrategy) -> String {
    let steps: Vec<String> = b.rules.iter().map(|r| json(r)).collect();
    format!("[strategy {}]\nrules = [\n  {}\n]\n", b.player, steps.join(",\n  "))
}

pub fn write_profile(p: &Profile) -> String {
    let parts: Vec<String> = p.measures.iter().map(write_measure).collect();
    parts.join("\n")
}
