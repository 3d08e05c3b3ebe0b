//! Proptest strategies for maps, models, patterns and repositories, and
//! reference oracles written independently of the library code they check.

use std::collections::{BTreeSet, VecDeque};

use proptest::prelude::*;

use crate::composition::{connect, Anchor, Pattern, Viewpoint};
use crate::model::{
    port_compatible, Aspect, BlockKind, BuildingBlock, ConcernLayer, Connection, Direction, Model, Origin, PortRef,
    TraceKind, TraceLink,
};
use crate::repository::{Asset, ReferenceRepository};
use crate::terrain::{Cell, Level, Position, TerrainMap};

pub const TYPES: [&str; 3] = ["Power", "Signal", "CoveragePath"];

/// Grids of arbitrary shape with independently drawn levels and obstacles.
/// Free cells need not be connected. At least one cell is free.
pub fn arb_grid(max_w: usize, max_h: usize, max_density: f64) -> impl Strategy<Value = TerrainMap> {
    (1..=max_w, 1..=max_h, 0.0..=max_density).prop_flat_map(|(w, h, d)| {
        proptest::collection::vec((0u8..=Level::MAX, 0.0..1.0f64), w * h).prop_map(move |cells| {
            let mut rows: Vec<Vec<Cell>> = cells
                .chunks(w)
                .map(|row| {
                    row.iter()
                        .map(|(l, roll)| if *roll < d { Cell::Obstacle } else { Cell::Free(Level::new(*l).unwrap()) })
                        .collect()
                })
                .collect();
            if rows.iter().flatten().all(|c| !c.is_free()) {
                rows[0][0] = Cell::Free(Level::new(0).unwrap());
            }
            TerrainMap::from_rows(rows).unwrap()
        })
    })
}

/// Single-level grids with obstacles.
pub fn arb_flat_grid(max_w: usize, max_h: usize, max_density: f64) -> impl Strategy<Value = TerrainMap> {
    (arb_grid(max_w, max_h, max_density), 0u8..=Level::MAX).prop_map(|(map, level)| {
        let level = Level::new(level).unwrap();
        let rows = (0..map.height())
            .map(|r| {
                (0..map.width())
                    .map(|c| match map.cell(Position::new(r, c)).unwrap() {
                        Cell::Obstacle => Cell::Obstacle,
                        Cell::Free(_) => Cell::Free(level),
                    })
                    .collect()
            })
            .collect();
        TerrainMap::from_rows(rows).unwrap()
    })
}

fn arb_kind() -> impl Strategy<Value = BlockKind> {
    proptest::sample::select(BlockKind::ALL.to_vec())
}

fn arb_origin() -> impl Strategy<Value = Origin> {
    proptest::sample::select(vec![Origin::ReferenceAsset, Origin::Adopted, Origin::Adapted, Origin::Extended])
}

/// Parameter values that stress float formatting.
fn arb_value() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1.0e6..1.0e6f64,
        Just(0.1),
        Just(1.0 / 3.0),
        Just(f64::MIN_POSITIVE),
        Just(-0.0),
        Just(1.0e300),
    ]
}

pub fn arb_block(id: String, origin: bool) -> impl Strategy<Value = BuildingBlock> {
    (
        arb_kind(),
        "[A-Za-z0-9 _é\"\\\\-]{0,12}",
        proptest::collection::vec((any::<bool>(), proptest::sample::select(TYPES.to_vec())), 0..4),
        proptest::collection::btree_map("[a-z]{1,6}", arb_value(), 0..3),
        arb_origin(),
    )
        .prop_map(move |(kind, name, ports, params, o)| {
            let mut b = BuildingBlock::new(id.clone(), name, kind);
            for (i, (provided, ty)) in ports.into_iter().enumerate() {
                let pid = format!("p{i}");
                b = if provided { b.provides(pid, ty) } else { b.requires(pid, ty) };
            }
            for (k, v) in params {
                b = b.with_param(k, v);
            }
            if origin {
                b = b.with_origin(o);
            }
            b
        })
}

pub fn arb_blocks(prefix: &'static str, max: usize, origin: bool) -> impl Strategy<Value = Vec<BuildingBlock>> {
    (0..=max).prop_flat_map(move |n| {
        (0..n)
            .map(|i| arb_block(format!("{prefix}{i}"), origin))
            .collect::<Vec<_>>()
    })
}

/// Every (provided, required) port pair across distinct blocks.
pub fn port_pairs(model: &Model) -> Vec<(PortRef, PortRef)> {
    let mut out = Vec::new();
    for a in model.blocks.values() {
        for b in model.blocks.values() {
            if a.id == b.id {
                continue;
            }
            for p in a.ports.iter().filter(|p| p.direction == Direction::Provided) {
                for r in b.ports.iter().filter(|r| r.direction == Direction::Required) {
                    if port_compatible(p, r) {
                        out.push((PortRef::new(&a.id, &p.id), PortRef::new(&b.id, &r.id)));
                    }
                }
            }
        }
    }
    out
}

/// Every layer-permitted trace link across distinct blocks.
pub fn permitted_traces(model: &Model) -> Vec<TraceLink> {
    let mut out = Vec::new();
    for a in model.blocks.values() {
        for b in model.blocks.values() {
            for kind in [TraceKind::Exhibits, TraceKind::MapsTo, TraceKind::Performs, TraceKind::Implements] {
                if a.id != b.id && kind.permits(a.layer, b.layer) {
                    out.push(TraceLink::new(kind, &a.id, &b.id));
                }
            }
        }
    }
    out
}

/// Models whose connections and traces are all well-formed.
pub fn arb_model() -> impl Strategy<Value = Model> {
    (arb_blocks("m", 6, true), any::<u64>(), any::<u64>()).prop_map(|(blocks, wire_mask, trace_mask)| {
        let mut m = Model::new("generated");
        for b in blocks {
            m = m.add_block(b).unwrap();
        }
        for (i, (p, r)) in port_pairs(&m).into_iter().enumerate() {
            if wire_mask >> (i % 64) & 1 == 1 {
                if let Ok(next) = connect(&m, &p, &r) {
                    m = next;
                }
            }
        }
        for (i, t) in permitted_traces(&m).into_iter().enumerate() {
            if trace_mask >> (i % 64) & 1 == 1 {
                m = m.add_trace(t).unwrap();
            }
        }
        m
    })
}

/// A pattern anchored on blocks of `model`, with its own blocks `x0..`,
/// internal wiring onto its own required ports only, and traces from its
/// blocks to anchors. Returns the pattern and the anchor bindings.
pub fn arb_pattern_for(model: Model) -> impl Strategy<Value = (Model, Pattern, std::collections::BTreeMap<String, String>)> {
    let ids: Vec<String> = model.blocks.keys().cloned().collect();
    (
        proptest::sample::subsequence(ids.clone(), 0..=ids.len()),
        arb_blocks("x", 3, false),
        any::<u64>(),
        any::<u64>(),
    )
        .prop_map(move |(anchored, blocks, wire_mask, trace_mask)| {
            let anchors: Vec<Anchor> = anchored
                .iter()
                .enumerate()
                .map(|(i, id)| {
                    let b = &model.blocks[id];
                    Anchor {
                        id: format!("a{i}"),
                        layer: b.layer,
                        kind: b.kind,
                    }
                })
                .collect();
            let bindings = anchors
                .iter()
                .zip(&anchored)
                .map(|(a, id)| (a.id.clone(), id.clone()))
                .collect();

            // view of the pattern as a model, with anchors standing in as their targets
            let mut scratch = Model::new("pattern");
            for (a, id) in anchors.iter().zip(&anchored) {
                let mut b = model.blocks[id].clone();
                b.id = a.id.clone();
                scratch = scratch.add_block(b).unwrap();
            }
            for b in &blocks {
                scratch = scratch.add_block(b.clone()).unwrap();
            }
            let mut connections: Vec<Connection> = Vec::new();
            for (i, (p, r)) in port_pairs(&scratch).into_iter().enumerate() {
                let target_is_own = r.block.starts_with('x');
                let free = !connections.iter().any(|c| c.to == r);
                if target_is_own && free && wire_mask >> (i % 64) & 1 == 1 {
                    connections.push(Connection { from: p, to: r });
                }
            }
            let traces: Vec<TraceLink> = permitted_traces(&scratch)
                .into_iter()
                .enumerate()
                .filter(|(i, t)| t.source.starts_with('x') && trace_mask >> (i % 64) & 1 == 1)
                .map(|(_, t)| t)
                .collect();
            let pattern = Pattern {
                id: "pattern.generated".into(),
                anchors,
                blocks,
                connections,
                traces,
            }
            .canonical();
            (model.clone(), pattern, bindings)
        })
}

pub fn arb_model_and_pattern() -> impl Strategy<Value = (Model, Pattern, std::collections::BTreeMap<String, String>)> {
    arb_model().prop_flat_map(arb_pattern_for)
}

fn arb_viewpoint() -> impl Strategy<Value = Viewpoint> {
    (
        proptest::sample::select(ConcernLayer::ALL.to_vec()),
        proptest::sample::select(Aspect::ALL.to_vec()),
    )
        .prop_filter_map("capabilities have no behavior", |(s, a)| {
            let v = Viewpoint::new(s, a);
            crate::composition::viewpoint_valid(&v).then_some(v)
        })
}

pub fn arb_repository() -> impl Strategy<Value = ReferenceRepository> {
    (
        arb_blocks("asset.", 6, false),
        proptest::collection::vec(arb_viewpoint(), 0..3),
        arb_model_and_pattern(),
        any::<bool>(),
    )
        .prop_map(|(blocks, viewpoints, (_, pattern, _), with_pattern)| {
            let mut repo = ReferenceRepository::new();
            for b in blocks {
                repo = repo.add_asset(Asset::Block(b)).unwrap();
            }
            for v in viewpoints {
                if repo.get(&v.name).is_none() {
                    repo = repo.add_asset(Asset::Viewpoint(v)).unwrap();
                }
            }
            if with_pattern {
                repo = repo.add_asset(Asset::Pattern(pattern)).unwrap();
            }
            repo
        })
}

/// Reachable free cells by a plain flood fill, independent of the library.
pub fn flood_fill(map: &TerrainMap, start: Position) -> BTreeSet<Position> {
    let free = |r: isize, c: isize| {
        r >= 0
            && c >= 0
            && matches!(map.cell(Position::new(r as usize, c as usize)), Some(Cell::Free(_)))
    };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        let (r, c) = (p.row as isize, p.col as isize);
        for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            if free(r + dr, c + dc) {
                let q = Position::new((r + dr) as usize, (c + dc) as usize);
                if seen.insert(q) {
                    queue.push_back(q);
                }
            }
        }
    }
    seen
}

/// Step cost in tenths from the level change alone.
pub fn step_tenths(from: u8, to: u8) -> u64 {
    match to.cmp(&from) {
        std::cmp::Ordering::Greater => 19,
        std::cmp::Ordering::Equal => 10,
        std::cmp::Ordering::Less => 6,
    }
}

/// Cheapest coverage walk from `start` over at most `2 * |free|` moves, by
/// exhaustive dynamic programming over (position, visited set). Intended for
/// maps with at most a handful of free cells.
pub fn brute_force_min_tenths(map: &TerrainMap, start: Position) -> u64 {
    let cells: Vec<Position> = flood_fill(map, start).into_iter().collect();
    assert!(cells.len() <= 10, "oracle is exponential in the free cells");
    let index = |p: Position| cells.iter().position(|q| *q == p).unwrap();
    let level = |i: usize| map.level(cells[i]).unwrap().get();
    let full = (1usize << cells.len()) - 1;
    let s = index(start);

    let mut best = vec![vec![u64::MAX; full + 1]; cells.len()];
    best[s][1 << s] = 0;
    let mut answer = if full == 1 << s { 0 } else { u64::MAX };
    for _ in 0..2 * cells.len() {
        let mut next = best.clone();
        for (i, row) in best.iter().enumerate() {
            for (mask, &cost) in row.iter().enumerate() {
                if cost == u64::MAX {
                    continue;
                }
                for (j, q) in cells.iter().enumerate() {
                    if !cells[i].is_adjacent(*q) {
                        continue;
                    }
                    let m = mask | 1 << j;
                    let c = cost + step_tenths(level(i), level(j));
                    if c < next[j][m] {
                        next[j][m] = c;
                    }
                    if m == full {
                        answer = answer.min(c);
                    }
                }
            }
        }
        best = next;
    }
    answer
}

/// Invariants checked by the fuzz targets and by the corpus replay test.
/// Each takes raw input, must never panic on malformed data, and asserts
/// that whatever parses also survives a save/load round trip unchanged.
pub mod fuzz {
    use crate::document::{model_from_json, model_to_json};
    use crate::model::PortRef;
    use crate::repository::{Asset, ReferenceRepository};
    use crate::terrain::{Position, TerrainMap};

    fn text(data: &[u8]) -> Option<&str> {
        std::str::from_utf8(data).ok()
    }

    pub fn load_map(data: &[u8]) {
        let Some(s) = text(data) else { return };
        if let Ok(map) = TerrainMap::load(s) {
            let saved = map.save();
            let back = TerrainMap::load(&saved).expect("saved map reloads");
            assert_eq!(back, map);
            assert_eq!(back.save(), saved);
            let free = map.free_cells().count();
            assert!(free > 0);
            assert_eq!(free + map.obstacle_count(), map.width() * map.height());
        }
    }

    pub fn load_repository(data: &[u8]) {
        let Some(s) = text(data) else { return };
        if let Ok(repo) = ReferenceRepository::load(s) {
            let saved = repo.save();
            let back = ReferenceRepository::load(&saved).expect("saved repository reloads");
            assert_eq!(back.save(), saved);
        }
    }

    pub fn load_model(data: &[u8]) {
        let Some(s) = text(data) else { return };
        if let Ok(model) = model_from_json(s) {
            let saved = model_to_json(&model);
            let back = model_from_json(&saved).expect("saved model reloads");
            assert_eq!(model_to_json(&back), saved);
            // validation must cope with whatever dangling references loaded
            let _ = crate::composition::validate_configuration(&model);
            let _ = crate::composition::capability_coverage(&model);
        }
    }

    pub fn load_asset(data: &[u8]) {
        let Some(s) = text(data) else { return };
        if let Ok(asset) = Asset::from_json(s) {
            let saved = asset.to_json();
            let back = Asset::from_json(&saved).expect("saved asset reloads");
            assert_eq!(back.to_json(), saved);
        }
    }

    pub fn parse_position(data: &[u8]) {
        let Some(s) = text(data) else { return };
        if let Ok(p) = s.parse::<Position>() {
            assert_eq!(p.to_string().parse::<Position>(), Ok(p));
        }
    }

    pub fn parse_port_ref(data: &[u8]) {
        let Some(s) = text(data) else { return };
        if let Ok(r) = s.parse::<PortRef>() {
            assert_eq!(r.to_string().parse::<PortRef>(), Ok(r));
        }
    }
}
