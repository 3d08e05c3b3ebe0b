use refmodel_core::testing as common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use refmodel_core::demo;
use refmodel_core::planners::{plan_edge_follow, plan_terrain_aware, AdaptivePlanner, CoveragePlanner, PlannerId};
use refmodel_core::simulation::{run, SimParams};
use refmodel_core::terrain::{Position, TerrainMap};
use refmodel_core::testing::{brute_force_min_tenths, flood_fill};

fn visited(path: &refmodel_core::planners::Path) -> BTreeSet<Position> {
    path.positions().collect()
}

fn pick_start(map: &TerrainMap, k: usize) -> Position {
    let free: Vec<Position> = map.free_cells().collect();
    free[k % free.len()]
}

#[test]
fn oracle_sanity() {
    // 1x3 strip 0-1-2 from the low end: two climbs
    let map = TerrainMap::load("012").unwrap();
    assert_eq!(brute_force_min_tenths(&map, Position::new(0, 0)), 38);
    // from the middle: climb first, then coast down twice (19 + 6 + 6)
    assert_eq!(brute_force_min_tenths(&map, Position::new(0, 1)), 31);
}

/// A seven-cell crop of the reference map: rows 1 and 2, columns 2 to 5.
const SUB_MAP: &str = "1233\n1X33\n";

#[test]
fn sub_map_of_reference_terrain_against_oracle() {
    let map = TerrainMap::load(SUB_MAP).unwrap();
    assert_eq!(map.free_cells().count(), 7);
    let start = map.default_start();
    let oracle = brute_force_min_tenths(&map, start);
    assert_eq!(oracle, 88);

    let params = SimParams::default();
    let ef = run(&map, &PlannerId::EdgeFollow, start, &params).unwrap();
    let ta = run(&map, &PlannerId::TerrainAware, start, &params).unwrap();
    assert_eq!(ef.energy_tenths, 100);
    assert_eq!(ta.energy_tenths, 88);
    assert!(ef.energy_tenths >= oracle);
    assert!(ta.energy_tenths >= oracle);
}

#[test]
fn reference_map_paths_are_pinned() {
    let map = demo::reference_map();
    let start = map.default_start();
    let ef = plan_edge_follow(&map, start).unwrap();
    let ta = plan_terrain_aware(&map, start).unwrap();
    assert_eq!((ef.len(), ef.revisits()), (50, 4));
    assert_eq!((ta.len(), ta.revisits()), (48, 2));
    let all: BTreeSet<Position> = map.free_cells().collect();
    assert_eq!(visited(&ef), all);
    assert_eq!(visited(&ta), all);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn planners_cover_exactly_the_reachable_cells(map in common::arb_grid(20, 20, 0.3), k in any::<usize>()) {
        let start = pick_start(&map, k);
        let reachable = flood_fill(&map, start);
        for planner in PlannerId::ALL {
            let path = planner.plan(&map, start).unwrap();
            prop_assert!(path.is_valid_on(&map));
            prop_assert_eq!(path.start, start);
            prop_assert_eq!(&visited(&path), &reachable, "{}", planner);
            // a walk never ends on a cell it had already covered
            if let Some(last) = path.steps.last() {
                prop_assert!(!path.positions().take(path.len()).any(|p| p == *last));
            }
            prop_assert_eq!(&planner.plan(&map, start).unwrap(), &path);
        }
    }

    #[test]
    fn adaptive_planner_behaves_like_its_choice(map in common::arb_grid(10, 10, 0.3)) {
        let start = map.default_start();
        let adaptive = AdaptivePlanner::default();
        let path = adaptive.plan(&map, start).unwrap();
        prop_assert_eq!(visited(&path), flood_fill(&map, start));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tiny_maps_never_beat_the_oracle(map in common::arb_grid(4, 3, 0.4), k in any::<usize>()) {
        let start = pick_start(&map, k);
        prop_assume!(flood_fill(&map, start).len() <= 7);
        let oracle = brute_force_min_tenths(&map, start);
        for planner in PlannerId::ALL {
            let r = run(&map, &planner, start, &SimParams::default()).unwrap();
            prop_assert!(r.energy_tenths >= oracle, "{planner}: {} < {oracle}", r.energy_tenths);
        }
    }
}
