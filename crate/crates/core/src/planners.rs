//! Coverage-path planners. Both built-in planners visit every free cell
//! reachable from the start; they differ in how they pick the next move.
//!
//! * [`PlannerId::EdgeFollow`] sweeps rows back and forth (boustrophedon),
//!   turning at map edges, obstacles and visited cells. When every sweep move
//!   is blocked it walks the shortest route (breadth-first, N/E/S/W order) to
//!   the nearest unvisited cell.
//! * [`PlannerId::TerrainAware`] moves to the unvisited neighbour with the
//!   cheapest step class (downhill before level before uphill, ties in
//!   N/E/S/W order). When stuck it walks the minimum-energy route to the
//!   cheapest-to-reach unvisited cell (uniform-cost search).
//!
//! Revisited cells are traversed again but count only once for coverage.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::terrain::{classify_step, Position, TerrainMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("start {0} is outside the map or on an obstacle")]
    StartBlocked(Position),
    #[error("unknown planner `{0}`")]
    UnknownPlanner(String),
}

/// A walk over free cells: the start followed by one position per move.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub start: Position,
    pub steps: Vec<Position>,
}

impl Path {
    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        std::iter::once(self.start).chain(self.steps.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Every position free and every move between 4-adjacent cells.
    pub fn is_valid_on(&self, map: &TerrainMap) -> bool {
        map.is_free(self.start)
            && self.steps.iter().all(|p| map.is_free(*p))
            && self
                .positions()
                .zip(self.steps.iter().copied())
                .all(|(a, b)| a.is_adjacent(b))
    }

    /// Number of moves onto a cell that had been visited before.
    pub fn revisits(&self) -> usize {
        let mut seen = std::collections::HashSet::from([self.start]);
        self.steps.iter().filter(|p| !seen.insert(**p)).count()
    }

    /// `t,row,col` rows, `t = 0` at the start.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,row,col\n");
        for (t, p) in self.positions().enumerate() {
            out.push_str(&format!("{t},{},{}\n", p.row, p.col));
        }
        out
    }
}

/// Anything that turns a map and a start cell into a coverage path.
pub trait CoveragePlanner: Send + Sync {
    fn name(&self) -> String;
    fn plan(&self, map: &TerrainMap, start: Position) -> Result<Path, PlanError>;
}

/// The built-in planners, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlannerId {
    EdgeFollow,
    TerrainAware,
}

impl PlannerId {
    pub const ALL: [PlannerId; 2] = [PlannerId::EdgeFollow, PlannerId::TerrainAware];

    pub fn token(self) -> &'static str {
        match self {
            PlannerId::EdgeFollow => "edge-follow",
            PlannerId::TerrainAware => "terrain-aware",
        }
    }
}

impl fmt::Display for PlannerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for PlannerId {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlannerId::ALL
            .into_iter()
            .find(|p| p.token() == s)
            .ok_or_else(|| PlanError::UnknownPlanner(s.to_string()))
    }
}

impl CoveragePlanner for PlannerId {
    fn name(&self) -> String {
        self.token().to_string()
    }

    fn plan(&self, map: &TerrainMap, start: Position) -> Result<Path, PlanError> {
        match self {
            PlannerId::EdgeFollow => plan_edge_follow(map, start),
            PlannerId::TerrainAware => plan_terrain_aware(map, start),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    N,
    E,
    S,
    W,
}

impl Dir {
    fn apply(self, p: Position) -> Option<Position> {
        Some(match self {
            Dir::N => Position::new(p.row.checked_sub(1)?, p.col),
            Dir::E => Position::new(p.row, p.col + 1),
            Dir::S => Position::new(p.row + 1, p.col),
            Dir::W => Position::new(p.row, p.col.checked_sub(1)?),
        })
    }

    fn reverse(self) -> Dir {
        match self {
            Dir::N => Dir::S,
            Dir::E => Dir::W,
            Dir::S => Dir::N,
            Dir::W => Dir::E,
        }
    }
}

/// Visited-cell bookkeeping shared by both planners.
struct Coverage {
    width: usize,
    visited: Vec<bool>,
    remaining: usize,
}

impl Coverage {
    fn new(map: &TerrainMap, start: Position) -> Result<Coverage, PlanError> {
        if !map.is_free(start) {
            return Err(PlanError::StartBlocked(start));
        }
        let mut c = Coverage {
            width: map.width(),
            visited: vec![false; map.width() * map.height()],
            remaining: map.reachable_from(start).len(),
        };
        c.visit(start);
        Ok(c)
    }

    fn idx(&self, p: Position) -> usize {
        p.row * self.width + p.col
    }

    fn seen(&self, p: Position) -> bool {
        self.visited[self.idx(p)]
    }

    fn visit(&mut self, p: Position) {
        let i = self.idx(p);
        if !self.visited[i] {
            self.visited[i] = true;
            self.remaining -= 1;
        }
    }

    fn walk(&mut self, path: &mut Vec<Position>, route: Vec<Position>) -> Position {
        for p in &route {
            self.visit(*p);
        }
        path.extend(route);
        *path.last().expect("relocation routes are non-empty")
    }
}

pub fn plan_edge_follow(map: &TerrainMap, start: Position) -> Result<Path, PlanError> {
    let mut cov = Coverage::new(map, start)?;
    let mut steps = Vec::new();
    let mut cur = start;
    let mut heading = Dir::E;
    let mut sweep = Dir::S;

    while cov.remaining > 0 {
        let order = [heading, sweep, heading.reverse(), sweep.reverse()];
        let next = order.into_iter().find_map(|d| {
            let n = d.apply(cur)?;
            (map.is_free(n) && !cov.seen(n)).then_some((d, n))
        });
        match next {
            Some((d, n)) => {
                if matches!(d, Dir::E | Dir::W) {
                    heading = d;
                } else {
                    sweep = d;
                    heading = heading.reverse();
                }
                cov.visit(n);
                steps.push(n);
                cur = n;
            }
            None => {
                let route = bfs_to_unvisited(map, &cov, cur);
                cur = cov.walk(&mut steps, route);
            }
        }
    }
    Ok(Path { start, steps })
}

/// Shortest route (excluding `from`) to the nearest unvisited free cell.
fn bfs_to_unvisited(map: &TerrainMap, cov: &Coverage, from: Position) -> Vec<Position> {
    let mut prev: Vec<Option<Position>> = vec![None; cov.visited.len()];
    prev[cov.idx(from)] = Some(from);
    let mut queue = VecDeque::from([from]);
    while let Some(p) = queue.pop_front() {
        if !cov.seen(p) {
            return unwind(&prev, cov, from, p);
        }
        for n in map.neighbors(p) {
            if prev[cov.idx(n)].is_none() {
                prev[cov.idx(n)] = Some(p);
                queue.push_back(n);
            }
        }
    }
    unreachable!("an unvisited reachable cell exists while coverage is incomplete")
}

fn unwind(prev: &[Option<Position>], cov: &Coverage, from: Position, to: Position) -> Vec<Position> {
    let mut route = vec![to];
    let mut p = to;
    while let Some(q) = prev[cov.idx(p)].filter(|q| *q != from) {
        route.push(q);
        p = q;
    }
    route.reverse();
    route
}

/// Energy of a single move in tenths of the normal factor.
fn move_cost(map: &TerrainMap, from: Position, to: Position) -> u64 {
    let (a, b) = (map.level(from).unwrap(), map.level(to).unwrap());
    classify_step(a, b).tenths()
}

pub fn plan_terrain_aware(map: &TerrainMap, start: Position) -> Result<Path, PlanError> {
    let mut cov = Coverage::new(map, start)?;
    let mut steps = Vec::new();
    let mut cur = start;

    while cov.remaining > 0 {
        let best = map
            .neighbors(cur)
            .into_iter()
            .filter(|n| !cov.seen(*n))
            .min_by_key(|n| move_cost(map, cur, *n));
        match best {
            Some(n) => {
                cov.visit(n);
                steps.push(n);
                cur = n;
            }
            None => {
                let route = cheapest_route_to_unvisited(map, &cov, cur);
                cur = cov.walk(&mut steps, route);
            }
        }
    }
    Ok(Path { start, steps })
}

/// Uniform-cost search with step-class weights. Among equally cheap
/// unvisited targets the one with the smallest (row, col) wins.
fn cheapest_route_to_unvisited(map: &TerrainMap, cov: &Coverage, from: Position) -> Vec<Position> {
    let mut dist = vec![u64::MAX; cov.visited.len()];
    let mut prev: Vec<Option<Position>> = vec![None; cov.visited.len()];
    dist[cov.idx(from)] = 0;
    prev[cov.idx(from)] = Some(from);
    let mut heap = BinaryHeap::from([Reverse((0u64, from))]);
    while let Some(Reverse((d, p))) = heap.pop() {
        if d > dist[cov.idx(p)] {
            continue;
        }
        if !cov.seen(p) {
            return unwind(&prev, cov, from, p);
        }
        for n in map.neighbors(p) {
            let nd = d + move_cost(map, p, n);
            if nd < dist[cov.idx(n)] {
                dist[cov.idx(n)] = nd;
                prev[cov.idx(n)] = Some(p);
                heap.push(Reverse((nd, n)));
            }
        }
    }
    unreachable!("an unvisited reachable cell exists while coverage is incomplete")
}

/// Level statistics over the free cells of a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapStats {
    pub free_cells: usize,
    pub mean_level: f64,
    /// Population variance of the free cells' levels.
    pub level_variance: f64,
}

impl MapStats {
    pub fn of(map: &TerrainMap) -> MapStats {
        let levels: Vec<f64> = map
            .free_cells()
            .map(|p| map.level(p).unwrap().get() as f64)
            .collect();
        let n = levels.len() as f64;
        let mean = levels.iter().sum::<f64>() / n;
        let variance = levels.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
        MapStats {
            free_cells: levels.len(),
            mean_level: mean,
            level_variance: variance,
        }
    }
}

pub const DEFAULT_ADAPTIVE_THRESHOLD: f64 = 0.25;

/// Terrain-aware planning pays off on hilly ground; plain sweeping on flat.
pub fn select_adaptive(stats: &MapStats, threshold: f64) -> PlannerId {
    if stats.level_variance > threshold {
        PlannerId::TerrainAware
    } else {
        PlannerId::EdgeFollow
    }
}

/// Picks a built-in planner per map with [`select_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptivePlanner {
    pub threshold: f64,
}

impl Default for AdaptivePlanner {
    fn default() -> Self {
        AdaptivePlanner {
            threshold: DEFAULT_ADAPTIVE_THRESHOLD,
        }
    }
}

impl CoveragePlanner for AdaptivePlanner {
    fn name(&self) -> String {
        "adaptive".into()
    }

    fn plan(&self, map: &TerrainMap, start: Position) -> Result<Path, PlanError> {
        select_adaptive(&MapStats::of(map), self.threshold).plan(map, start)
    }
}
