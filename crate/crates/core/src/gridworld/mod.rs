//! Pursuit-evasion on a grid: player 1 runs for the goal, player 2 tries to
//! land on the same cell first.
//!
//! Joint states are pairs `(s₁, s₂)` of free cells plus two absorbing sinks.
//! Both players pick from `{right, left, up, down, stay}`; moves into walls or
//! off the board leave the mover in place. After the simultaneous move, if
//! player 1 stands on the goal the game goes to the win sink with payoff +1;
//! otherwise if both stand on one cell it goes to the capture sink with
//! payoff −1. Players swapping cells pass through each other.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::game::{Game, GameBuilder};

/// `(column, row)`, with row 0 at the top of the map text.
pub type Cell = (usize, usize);

pub const BUILTIN_PREFIX: &str = "builtin:";

/// The environment both players plan in.
pub const NOMINAL: &str = include_str!("maps/nominal.txt");
/// Nominal plus a wall between the corridor and the goal.
pub const BLOCKED: &str = include_str!("maps/blocked.txt");
/// Nominal plus a wall on the upper detour.
pub const SIDE: &str = include_str!("maps/side.txt");

pub const BUILTIN_MAPS: [(&str, &str); 3] = [("nominal", NOMINAL), ("blocked", BLOCKED), ("side", SIDE)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    Right,
    Left,
    Up,
    Down,
    Stay,
}

impl Move {
    /// Action order used by the product game.
    pub const ALL: [Move; 5] = [Move::Right, Move::Left, Move::Up, Move::Down, Move::Stay];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Move::Right => "right",
            Move::Left => "left",
            Move::Up => "up",
            Move::Down => "down",
            Move::Stay => "stay",
        }
    }
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("map is empty")]
    Empty,
    #[error("row {row} has width {len}, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
    #[error("unexpected character {ch:?} at column {col}, row {row}")]
    BadChar { ch: char, col: usize, row: usize },
    #[error("marker {0:?} is missing")]
    Missing(char),
    #[error("marker {0:?} appears more than once")]
    Duplicate(char),
    #[error("unknown built-in map {0:?}")]
    UnknownBuiltin(String),
    #[error("cannot read map {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMap {
    pub width: usize,
    pub height: usize,
    pub walls: BTreeSet<Cell>,
    pub goal: Cell,
    pub start_p1: Cell,
    pub start_p2: Cell,
}

impl GridMap {
    pub fn is_free(&self, c: Cell) -> bool {
        c.0 < self.width && c.1 < self.height && !self.walls.contains(&c)
    }

    /// Free cells in row-major order.
    pub fn free_cells(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|r| (0..self.width).map(move |c| (c, r)))
            .filter(|&c| self.is_free(c))
            .collect()
    }

    /// Where a move from `c` lands; blocked moves stay put.
    pub fn step(&self, c: Cell, m: Move) -> Cell {
        let (col, row) = c;
        let next = match m {
            Move::Right => (col.wrapping_add(1), row),
            Move::Left => (col.wrapping_sub(1), row),
            Move::Up => (col, row.wrapping_sub(1)),
            Move::Down => (col, row.wrapping_add(1)),
            Move::Stay => c,
        };
        if self.is_free(next) {
            next
        } else {
            c
        }
    }
}

impl fmt::Display for GridMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.height {
            for c in 0..self.width {
                let ch = match (c, r) {
                    p if p == self.goal => 'G',
                    p if p == self.start_p1 => '1',
                    p if p == self.start_p2 => '2',
                    p if self.walls.contains(&p) => '#',
                    _ => '.',
                };
                write!(f, "{ch}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Parses a rectangular block over `.`, `#`, `G`, `1`, `2`. Blank lines
/// before and after the block are ignored.
pub fn parse_map(text: &str) -> Result<GridMap, MapError> {
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    let first = lines.iter().position(|l| !l.trim().is_empty()).ok_or(MapError::Empty)?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty()).unwrap_or(first);
    let rows = &lines[first..=last];
    let width = rows[0].chars().count();

    let mut walls = BTreeSet::new();
    let (mut goal, mut s1, mut s2) = (None, None, None);
    for (r, line) in rows.iter().enumerate() {
        let len = line.chars().count();
        if len != width {
            return Err(MapError::Ragged { row: r, len, expected: width });
        }
        for (c, ch) in line.chars().enumerate() {
            let slot = match ch {
                '.' => continue,
                '#' => {
                    walls.insert((c, r));
                    continue;
                }
                'G' => &mut goal,
                '1' => &mut s1,
                '2' => &mut s2,
                _ => return Err(MapError::BadChar { ch, col: c, row: r }),
            };
            if slot.replace((c, r)).is_some() {
                return Err(MapError::Duplicate(ch));
            }
        }
    }
    Ok(GridMap {
        width,
        height: rows.len(),
        walls,
        goal: goal.ok_or(MapError::Missing('G'))?,
        start_p1: s1.ok_or(MapError::Missing('1'))?,
        start_p2: s2.ok_or(MapError::Missing('2'))?,
    })
}

/// `builtin:<name>` or a path to a map file.
pub fn load_map(source: &str) -> Result<GridMap, MapError> {
    match source.strip_prefix(BUILTIN_PREFIX) {
        Some(name) => BUILTIN_MAPS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| parse_map(text))
            .unwrap_or_else(|| Err(MapError::UnknownBuiltin(name.to_string()))),
        None => {
            let text = std::fs::read_to_string(Path::new(source))
                .map_err(|source_err| MapError::Io { path: source.to_string(), source: source_err })?;
            parse_map(&text)
        }
    }
}

pub const WIN_LABEL: &str = "win";
pub const CAPTURE_LABEL: &str = "capture";

/// Label of the joint state `(s₁, s₂)`, e.g. `0:2|0:4`.
pub fn pair_label(s1: Cell, s2: Cell) -> String {
    format!("{}:{}|{}:{}", s1.0, s1.1, s2.0, s2.1)
}

/// The grid game with its cell-pair bookkeeping.
#[derive(Clone, Debug)]
pub struct ProductGame {
    pub game: Game,
    pub map: GridMap,
    pairs: Vec<(Cell, Cell)>,
    index: HashMap<(Cell, Cell), usize>,
    pub win_sink: usize,
    pub capture_sink: usize,
}

impl ProductGame {
    pub fn state(&self, s1: Cell, s2: Cell) -> Option<usize> {
        self.index.get(&(s1, s2)).copied()
    }

    /// Cell pair of a non-sink state.
    pub fn cells(&self, x: usize) -> Option<(Cell, Cell)> {
        self.pairs.get(x).copied()
    }

    pub fn start_state(&self) -> usize {
        self.index[&(self.map.start_p1, self.map.start_p2)]
    }

    pub fn num_pair_states(&self) -> usize {
        self.pairs.len()
    }
}

/// Builds the product game. Pair states come first in row-major order of
/// `(s₁, s₂)`, followed by the win sink and the capture sink.
pub fn build_game(m: &GridMap) -> ProductGame {
    let free = m.free_cells();
    let pairs: Vec<(Cell, Cell)> = free.iter().flat_map(|&a| free.iter().map(move |&b| (a, b))).collect();
    let index: HashMap<(Cell, Cell), usize> = pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let win_sink = pairs.len();
    let capture_sink = pairs.len() + 1;
    let n = pairs.len() + 2;

    let k = Move::ALL.len();
    let mut counts = vec![k; n];
    counts[win_sink] = 1;
    counts[capture_sink] = 1;
    let mut gb = GameBuilder::with_action_counts(counts.clone(), counts).expect("equal lengths");
    let ok = "indices are in range by construction";
    for (x, &(s1, s2)) in pairs.iter().enumerate() {
        for u in Move::ALL {
            for w in Move::ALL {
                let (a, b) = (m.step(s1, u), m.step(s2, w));
                let (next, r) = if a == m.goal {
                    (win_sink, 1.0)
                } else if a == b {
                    (capture_sink, -1.0)
                } else {
                    (index[&(a, b)], 0.0)
                };
                gb.set_deterministic(x, u.index(), w.index(), next).expect(ok);
                gb.set_payoff(x, u.index(), w.index(), r).expect(ok);
            }
        }
        gb.set_label(x, pair_label(s1, s2)).expect(ok);
    }
    for (sink, label) in [(win_sink, WIN_LABEL), (capture_sink, CAPTURE_LABEL)] {
        gb.set_deterministic(sink, 0, 0, sink).expect(ok);
        gb.set_label(sink, label).expect(ok);
    }
    let game = gb.build().expect("grid game satisfies the game invariants");
    ProductGame { game, map: m.clone(), pairs, index, win_sink, capture_sink }
}
