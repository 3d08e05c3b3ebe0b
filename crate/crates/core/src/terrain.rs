//! Elevation-grid terrain: cells carry an elevation band 0–3 or are
//! obstacles. Step cost depends only on whether the next cell is higher,
//! level or lower.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TerrainError {
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("bad symbol {symbol:?} at ({row},{col})")]
    BadSymbol { row: usize, col: usize, symbol: char },
    #[error("map has no cells")]
    Empty,
    #[error("map has no free cell")]
    NoFreeCell,
    #[error("cannot place a free cell on a {width}x{height} map")]
    Unsatisfiable { width: usize, height: usize },
    #[error("obstacle density {0} outside [0, 1)")]
    BadDensity(f64),
    #[error("level count {0} outside 1..=4")]
    BadLevels(u8),
    #[error("malformed position {0:?}, expected `row,col`")]
    BadPosition(String),
}

/// Elevation band, 0 (lowest) to 3 (highest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Level(u8);

impl Level {
    pub const MAX: u8 = 3;

    pub fn new(value: u8) -> Option<Level> {
        (value <= Self::MAX).then_some(Level(value))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Obstacle,
    Free(Level),
}

impl Cell {
    pub fn level(self) -> Option<Level> {
        match self {
            Cell::Free(l) => Some(l),
            Cell::Obstacle => None,
        }
    }

    pub fn is_free(self) -> bool {
        matches!(self, Cell::Free(_))
    }

    fn symbol(self) -> char {
        match self {
            Cell::Obstacle => 'X',
            Cell::Free(l) => char::from(b'0' + l.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position {
    pub row: usize,
    pub col: usize,
}

impl Position {
    pub const fn new(row: usize, col: usize) -> Self {
        Position { row, col }
    }

    pub fn is_adjacent(self, other: Position) -> bool {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col) == 1
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.row, self.col)
    }
}

impl FromStr for Position {
    type Err = TerrainError;

    /// Parses `row,col`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TerrainError::BadPosition(s.to_string());
        let (r, c) = s.split_once(',').ok_or_else(bad)?;
        Ok(Position {
            row: r.trim().parse().map_err(|_| bad())?,
            col: c.trim().parse().map_err(|_| bad())?,
        })
    }
}

/// Energy class of a single move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StepClass {
    High,
    Normal,
    Low,
}

impl StepClass {
    pub fn factor(self) -> f64 {
        match self {
            StepClass::High => 1.9,
            StepClass::Normal => 1.0,
            StepClass::Low => 0.6,
        }
    }

    /// The factor in tenths, for exact integer accounting.
    pub fn tenths(self) -> u64 {
        match self {
            StepClass::High => 19,
            StepClass::Normal => 10,
            StepClass::Low => 6,
        }
    }
}

/// Higher is `High`, equal is `Normal`, lower is `Low`.
pub fn classify_step(from: Level, to: Level) -> StepClass {
    match to.cmp(&from) {
        std::cmp::Ordering::Greater => StepClass::High,
        std::cmp::Ordering::Equal => StepClass::Normal,
        std::cmp::Ordering::Less => StepClass::Low,
    }
}

/// A rectangular elevation grid with at least one free cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TerrainMap {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
}

impl TerrainMap {
    /// Builds a map from row-major cells.
    pub fn from_rows(rows: Vec<Vec<Cell>>) -> Result<TerrainMap, TerrainError> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if width == 0 {
            return Err(TerrainError::Empty);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(TerrainError::RaggedRows {
                    row,
                    expected: width,
                    found: r.len(),
                });
            }
        }
        let cells: Vec<Cell> = rows.into_iter().flatten().collect();
        if !cells.iter().any(|c| c.is_free()) {
            return Err(TerrainError::NoFreeCell);
        }
        Ok(TerrainMap { width, height, cells })
    }

    /// A map where every cell is free at `level`.
    pub fn flat(width: usize, height: usize, level: Level) -> Result<TerrainMap, TerrainError> {
        if width == 0 || height == 0 {
            return Err(TerrainError::Empty);
        }
        Ok(TerrainMap {
            width,
            height,
            cells: vec![Cell::Free(level); width * height],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, pos: Position) -> bool {
        pos.row < self.height && pos.col < self.width
    }

    pub fn cell(&self, pos: Position) -> Option<Cell> {
        self.in_bounds(pos).then(|| self.cells[pos.row * self.width + pos.col])
    }

    pub fn level(&self, pos: Position) -> Option<Level> {
        self.cell(pos).and_then(Cell::level)
    }

    pub fn is_free(&self, pos: Position) -> bool {
        self.cell(pos).is_some_and(Cell::is_free)
    }

    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.height).flat_map(move |r| (0..self.width).map(move |c| Position::new(r, c)))
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Position> + '_ {
        self.positions().filter(|p| self.is_free(*p))
    }

    pub fn obstacle_count(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_free()).count()
    }

    /// First free cell in row-major order.
    pub fn default_start(&self) -> Position {
        self.free_cells().next().expect("maps always hold a free cell")
    }

    /// Free 4-neighbours in N, E, S, W order.
    pub fn neighbors(&self, pos: Position) -> Vec<Position> {
        let mut out = Vec::with_capacity(4);
        if pos.row > 0 {
            out.push(Position::new(pos.row - 1, pos.col));
        }
        out.push(Position::new(pos.row, pos.col + 1));
        out.push(Position::new(pos.row + 1, pos.col));
        if pos.col > 0 {
            out.push(Position::new(pos.row, pos.col - 1));
        }
        out.retain(|p| self.is_free(*p));
        out
    }

    /// Free cells reachable from `start` over 4-neighbour moves, row-major.
    pub fn reachable_from(&self, start: Position) -> Vec<Position> {
        let mut seen = vec![false; self.cells.len()];
        if !self.is_free(start) {
            return Vec::new();
        }
        let idx = |p: Position| p.row * self.width + p.col;
        seen[idx(start)] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for n in self.neighbors(p) {
                if !seen[idx(n)] {
                    seen[idx(n)] = true;
                    queue.push_back(n);
                }
            }
        }
        self.positions().filter(|p| seen[idx(*p)]).collect()
    }

    /// Parses one character per cell: `0`–`3` for free cells, `X` for
    /// obstacles. Rows end with `\n` (a `\r` before it is tolerated) and a
    /// single trailing newline is optional.
    pub fn load(text: &str) -> Result<TerrainMap, TerrainError> {
        let body = text.strip_suffix('\n').unwrap_or(text);
        if body.is_empty() {
            return Err(TerrainError::Empty);
        }
        let mut rows = Vec::new();
        for (r, line) in body.split('\n').enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            let row = line
                .chars()
                .enumerate()
                .map(|(c, ch)| match ch {
                    '0'..='3' => Ok(Cell::Free(Level(ch as u8 - b'0'))),
                    'X' => Ok(Cell::Obstacle),
                    symbol => Err(TerrainError::BadSymbol { row: r, col: c, symbol }),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(first) = rows.first().map(Vec::len) {
                if row.len() != first {
                    return Err(TerrainError::RaggedRows {
                        row: r,
                        expected: first,
                        found: row.len(),
                    });
                }
            }
            rows.push(row);
        }
        TerrainMap::from_rows(rows)
    }

    /// Inverse of [`TerrainMap::load`]; every row ends with `\n`.
    pub fn save(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|c| c.symbol()));
            out.push('\n');
        }
        out
    }
}

/// Settings for [`generate_map`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub width: usize,
    pub height: usize,
    pub obstacle_density: f64,
    /// Number of elevation bands used, 1–4. One band gives a flat map.
    pub levels: u8,
    /// Spacing of the value-noise lattice in cells.
    pub feature_size: usize,
}

impl GenParams {
    pub fn new(width: usize, height: usize, obstacle_density: f64) -> Self {
        GenParams {
            width,
            height,
            obstacle_density,
            levels: 4,
            feature_size: 4,
        }
    }
}

/// 8x8 keeps a full coverage run within the default battery capacity.
impl Default for GenParams {
    fn default() -> Self {
        GenParams::new(8, 8, 0.1)
    }
}

/// Seeded map generation.
///
/// Elevation is value noise: random lattice values every `feature_size`
/// cells, bilinearly interpolated with smoothstep weights and quantized into
/// `levels` bands. Obstacles are placed independently with probability
/// `obstacle_density`; afterwards obstacle cells are carved out along
/// shortest grid routes until the free cells form one 4-connected component.
pub fn generate_map(params: &GenParams, seed: u64) -> Result<TerrainMap, TerrainError> {
    let GenParams {
        width,
        height,
        obstacle_density,
        levels,
        feature_size,
    } = *params;
    if width == 0 || height == 0 {
        return Err(TerrainError::Unsatisfiable { width, height });
    }
    if !(0.0..1.0).contains(&obstacle_density) {
        return Err(TerrainError::BadDensity(obstacle_density));
    }
    if !(1..=4).contains(&levels) {
        return Err(TerrainError::BadLevels(levels));
    }
    let step = feature_size.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let lattice_w = width / step + 2;
    let lattice_h = height / step + 2;
    let lattice: Vec<f64> = (0..lattice_w * lattice_h).map(|_| rng.random::<f64>()).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let noise = |r: usize, c: usize| {
        let (gr, gc) = (r / step, c / step);
        let ty = smooth((r % step) as f64 / step as f64);
        let tx = smooth((c % step) as f64 / step as f64);
        let at = |y: usize, x: usize| lattice[y * lattice_w + x];
        let top = at(gr, gc) * (1.0 - tx) + at(gr, gc + 1) * tx;
        let bottom = at(gr + 1, gc) * (1.0 - tx) + at(gr + 1, gc + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    };
    let band = |v: f64| ((v * levels as f64) as u8).min(levels - 1);

    let mut cells: Vec<Cell> = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let blocked = obstacle_density > 0.0 && rng.random::<f64>() < obstacle_density;
            cells.push(if blocked { Cell::Obstacle } else { Cell::Free(Level(band(noise(r, c)))) });
        }
    }
    let level_at = |i: usize| Cell::Free(Level(band(noise(i / width, i % width))));

    if !cells.iter().any(|c| c.is_free()) {
        let centre = (height / 2) * width + width / 2;
        cells[centre] = level_at(centre);
    }
    carve_until_connected(&mut cells, width, height, level_at);
    Ok(TerrainMap { width, height, cells })
}

/// Labels free components; returns (label per cell, component sizes).
fn components(cells: &[Cell], width: usize, height: usize) -> (Vec<usize>, Vec<usize>) {
    const NONE: usize = usize::MAX;
    let mut label = vec![NONE; cells.len()];
    let mut sizes = Vec::new();
    for start in 0..cells.len() {
        if !cells[start].is_free() || label[start] != NONE {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        let mut queue = VecDeque::from([start]);
        label[start] = id;
        while let Some(i) = queue.pop_front() {
            size += 1;
            for n in grid_neighbors(i, width, height) {
                if cells[n].is_free() && label[n] == NONE {
                    label[n] = id;
                    queue.push_back(n);
                }
            }
        }
        sizes.push(size);
    }
    (label, sizes)
}

fn grid_neighbors(i: usize, width: usize, height: usize) -> impl Iterator<Item = usize> {
    let (r, c) = (i / width, i % width);
    [
        (r > 0).then(|| i - width),
        (c + 1 < width).then(|| i + 1),
        (r + 1 < height).then(|| i + width),
        (c > 0).then(|| i - 1),
    ]
    .into_iter()
    .flatten()
}

fn carve_until_connected(cells: &mut [Cell], width: usize, height: usize, level_at: impl Fn(usize) -> Cell) {
    loop {
        let (label, sizes) = components(cells, width, height);
        if sizes.len() <= 1 {
            return;
        }
        // largest component, lowest label on ties
        let main = (0..sizes.len()).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))).unwrap();
        let stray = (0..sizes.len()).find(|&i| i != main).unwrap();

        // breadth-first from the stray component through any cell until the
        // main component is hit, then free the obstacles on that route
        let mut prev = vec![usize::MAX; cells.len()];
        let mut queue: VecDeque<usize> = (0..cells.len()).filter(|&i| label[i] == stray).collect();
        for &i in &queue {
            prev[i] = i;
        }
        let mut hit = None;
        while let Some(i) = queue.pop_front() {
            if label[i] == main {
                hit = Some(i);
                break;
            }
            for n in grid_neighbors(i, width, height) {
                if prev[n] == usize::MAX {
                    prev[n] = i;
                    queue.push_back(n);
                }
            }
        }
        let mut i = hit.expect("grid is connected when obstacles are ignored");
        while prev[i] != i {
            if !cells[i].is_free() {
                cells[i] = level_at(i);
            }
            i = prev[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(v: u8) -> Level {
        Level::new(v).unwrap()
    }

    #[test]
    fn step_classes() {
        assert_eq!(classify_step(lv(2), lv(3)), StepClass::High);
        assert_eq!(classify_step(lv(2), lv(3)).factor(), 1.9);
        assert_eq!(classify_step(lv(1), lv(1)).factor(), 1.0);
        assert_eq!(classify_step(lv(3), lv(0)), StepClass::Low);
        assert_eq!(classify_step(lv(3), lv(0)).factor(), 0.6);
    }

    #[test]
    fn level_range() {
        assert!(Level::new(3).is_some());
        assert!(Level::new(4).is_none());
    }

    #[test]
    fn load_small_map() {
        let m = TerrainMap::load("01\n2X").unwrap();
        assert_eq!((m.width(), m.height()), (2, 2));
        assert_eq!(m.obstacle_count(), 1);
        assert_eq!(m.level(Position::new(1, 0)), Some(lv(2)));
    }

    #[test]
    fn load_ragged() {
        assert_eq!(
            TerrainMap::load("0\n00").unwrap_err(),
            TerrainError::RaggedRows {
                row: 1,
                expected: 1,
                found: 2
            }
        );
    }

    #[test]
    fn load_bad_symbol() {
        assert_eq!(
            TerrainMap::load("09").unwrap_err(),
            TerrainError::BadSymbol {
                row: 0,
                col: 1,
                symbol: '9'
            }
        );
    }

    #[test]
    fn load_rejects_empty_and_all_obstacles() {
        assert_eq!(TerrainMap::load("").unwrap_err(), TerrainError::Empty);
        assert_eq!(TerrainMap::load("\n").unwrap_err(), TerrainError::Empty);
        assert_eq!(TerrainMap::load("XX\nXX\n").unwrap_err(), TerrainError::NoFreeCell);
        assert!(TerrainMap::load("0\n\n0").is_err());
    }

    #[test]
    fn save_round_trips() {
        let text = "0123\nX0X1\n3332\n";
        assert_eq!(TerrainMap::load(text).unwrap().save(), text);
        assert_eq!(TerrainMap::load("01\r\n2X\r\n").unwrap().save(), "01\n2X\n");
    }

    #[test]
    fn neighbors_order_and_filtering() {
        let m = TerrainMap::flat(3, 3, lv(0)).unwrap();
        assert_eq!(
            m.neighbors(Position::new(1, 1)),
            vec![Position::new(0, 1), Position::new(1, 2), Position::new(2, 1), Position::new(1, 0)]
        );
        assert!(m.neighbors(Position::new(0, 0)).len() <= 2);
        let walled = TerrainMap::load("0X0\nX0X\n0X0").unwrap();
        assert!(walled.neighbors(Position::new(1, 1)).is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        let p = GenParams::new(5, 5, 0.0);
        assert_eq!(generate_map(&p, 42).unwrap(), generate_map(&p, 42).unwrap());
        assert_eq!(generate_map(&p, 42).unwrap().obstacle_count(), 0);
    }

    #[test]
    fn generated_free_cells_are_connected() {
        for seed in 0..50 {
            let m = generate_map(&GenParams::new(15, 11, 0.45), seed).unwrap();
            let free: Vec<_> = m.free_cells().collect();
            assert_eq!(m.reachable_from(free[0]), free, "seed {seed}");
        }
    }

    #[test]
    fn single_band_is_flat() {
        let p = GenParams {
            levels: 1,
            ..GenParams::new(8, 8, 0.2)
        };
        let m = generate_map(&p, 3).unwrap();
        assert!(m.free_cells().all(|c| m.level(c) == Some(lv(0))));
    }

    #[test]
    fn generator_argument_checks() {
        assert!(matches!(
            generate_map(&GenParams::new(0, 3, 0.0), 1),
            Err(TerrainError::Unsatisfiable { .. })
        ));
        assert_eq!(generate_map(&GenParams::new(3, 3, 1.0), 1).unwrap_err(), TerrainError::BadDensity(1.0));
    }

    #[test]
    fn position_parsing() {
        assert_eq!("2,3".parse::<Position>().unwrap(), Position::new(2, 3));
        assert_eq!(" 0 , 7 ".parse::<Position>().unwrap(), Position::new(0, 7));
        assert!("2;3".parse::<Position>().is_err());
        assert!("-1,0".parse::<Position>().is_err());
    }
}
