//! Loading games and strategies from the command line.

use anyhow::{bail, Context, Result};
use serde_json::Value;

use ersg_core::game::io::game_from_json;
use ersg_core::gridworld::{build_game, load_map, parse_map, ProductGame, BUILTIN_PREFIX};
use ersg_core::{Game, MarkovStrategy, StationaryStrategy};

pub struct LoadedGame {
    pub game: Game,
    /// Present when the game was built from a grid map.
    pub grid: Option<ProductGame>,
}

/// `builtin:<map>`, a JSON game file, or an ASCII map file.
pub fn load_game(source: &str) -> Result<LoadedGame> {
    if source.starts_with(BUILTIN_PREFIX) {
        let p = build_game(&load_map(source)?);
        return Ok(LoadedGame { game: p.game.clone(), grid: Some(p) });
    }
    let text = std::fs::read_to_string(source).with_context(|| format!("reading game {source}"))?;
    if text.trim_start().starts_with('{') {
        let game = game_from_json(&text).with_context(|| format!("loading game {source}"))?;
        Ok(LoadedGame { game, grid: None })
    } else {
        let p = build_game(&parse_map(&text).with_context(|| format!("parsing map {source}"))?);
        Ok(LoadedGame { game: p.game.clone(), grid: Some(p) })
    }
}

pub enum LoadedStrategy {
    Stationary(StationaryStrategy),
    Markov(MarkovStrategy),
}

/// Reads `field` from a solution file, or takes the whole file when it is a
/// bare array. Depth-2 arrays are stationary, depth-3 arrays are per stage.
pub fn load_strategy(path: &str, field: &str) -> Result<LoadedStrategy> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading strategy {path}"))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("strategy {path} is not JSON"))?;
    let v = match v {
        Value::Object(mut m) => m.remove(field).with_context(|| format!("{path} has no {field:?} field"))?,
        other => other,
    };
    let depth = {
        let mut d = 0;
        let mut cur = &v;
        while let Some(first) = cur.as_array().and_then(|a| a.first()) {
            d += 1;
            cur = first;
        }
        d
    };
    match depth {
        2 => Ok(LoadedStrategy::Stationary(serde_json::from_value(v)?)),
        3 => Ok(LoadedStrategy::Markov(serde_json::from_value(v)?)),
        _ => bail!("{path}: expected a [state][action] or [stage][state][action] array"),
    }
}

/// A state given as an index or as a label such as `0:2|0:4`.
pub fn resolve_state(g: &Game, s: &str) -> Result<usize> {
    if let Ok(i) = s.parse::<usize>() {
        if i < g.num_states() {
            return Ok(i);
        }
        bail!("state {i} out of range (game has {} states)", g.num_states());
    }
    g.labels()
        .iter()
        .find(|(_, l)| l.as_str() == s)
        .map(|(&x, _)| x)
        .with_context(|| format!("no state labelled {s:?}"))
}
