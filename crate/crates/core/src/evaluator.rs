//! Comparing planner configurations: single-map comparisons, seeded map
//! ensembles and ranking of configuration alternatives.
//!
//! Energy comparisons use [`SimResult::energy_tenths`], the exact integer
//! sum of step factors, so ties are real ties and scaling the consumption
//! factor cannot reorder results. A run that drains the battery before
//! finishing its path is disqualified and ranks after every complete run.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::composition::{enumerate_alternatives, slot_occupant, CompositionError};
use crate::model::{BlockKind, BuildingBlock, Model};
use crate::planners::PlannerId;
use crate::repository::ReferenceRepository;
use crate::simulation::{run, SimError, SimParams, SimResult};
use crate::terrain::{generate_map, GenParams, Position, TerrainError, TerrainMap};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no planners to compare")]
    NoPlanners,
    #[error("ensemble needs at least one map")]
    EmptyEnsemble,
    #[error("slot `{0}` does not hold an algorithm block")]
    NoAlternatives(String),
    #[error("no planner registered for algorithm block `{0}`")]
    UnknownAlgorithm(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Terrain(#[from] TerrainError),
    #[error(transparent)]
    Composition(#[from] CompositionError),
}

/// Orders runs: complete before depleted, then less energy, then planner order.
fn run_key(planner: PlannerId, r: &SimResult) -> (bool, u64, PlannerId) {
    (!r.completed(), r.energy_tenths, planner)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub start: Position,
    pub params: SimParams,
    pub results: Vec<(PlannerId, SimResult)>,
    pub winner: PlannerId,
}

impl ComparisonReport {
    pub fn result(&self, planner: PlannerId) -> Option<&SimResult> {
        self.results.iter().find(|(p, _)| *p == planner).map(|(_, r)| r)
    }
}

/// Runs every planner on the same map, start and parameters.
pub fn compare(
    map: &TerrainMap,
    planners: &[PlannerId],
    start: Position,
    params: &SimParams,
) -> Result<ComparisonReport, EvalError> {
    if planners.is_empty() {
        return Err(EvalError::NoPlanners);
    }
    let results = planners
        .iter()
        .map(|p| Ok((*p, run(map, p, start, params)?)))
        .collect::<Result<Vec<_>, EvalError>>()?;
    let winner = results
        .iter()
        .min_by_key(|(p, r)| run_key(*p, r))
        .map(|(p, _)| *p)
        .expect("at least one planner");
    Ok(ComparisonReport {
        start,
        params: params.clone(),
        results,
        winner,
    })
}

/// A family of generated maps: seeds `seed0 .. seed0 + n_maps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub gen: GenParams,
    pub seed0: u64,
    pub n_maps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerStats {
    pub planner: PlannerId,
    pub mean_total: f64,
    pub min_total: f64,
    pub max_total: f64,
    pub wins: usize,
    pub depleted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n_maps: usize,
    pub seed_first: u64,
    pub seed_last: u64,
    pub planners: Vec<PlannerStats>,
}

impl EnsembleStats {
    pub fn for_planner(&self, planner: PlannerId) -> Option<&PlannerStats> {
        self.planners.iter().find(|s| s.planner == planner)
    }
}

/// Compares the planners on every map of the ensemble, starting at each
/// map's first free cell. Maps are simulated in parallel; aggregation runs
/// in seed order, so the statistics do not depend on scheduling.
pub fn ensemble(spec: &EnsembleSpec, planners: &[PlannerId], params: &SimParams) -> Result<EnsembleStats, EvalError> {
    if spec.n_maps == 0 {
        return Err(EvalError::EmptyEnsemble);
    }
    if planners.is_empty() {
        return Err(EvalError::NoPlanners);
    }
    let reports = ensemble_reports(spec, planners, params)?;

    let planners = planners
        .iter()
        .map(|&planner| {
            let totals: Vec<f64> = reports
                .iter()
                .map(|r| r.result(planner).expect("every planner ran").total_consumed)
                .collect();
            PlannerStats {
                planner,
                mean_total: totals.iter().sum::<f64>() / totals.len() as f64,
                min_total: totals.iter().copied().fold(f64::INFINITY, f64::min),
                max_total: totals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                wins: reports.iter().filter(|r| r.winner == planner).count(),
                depleted: reports
                    .iter()
                    .filter(|r| !r.result(planner).unwrap().completed())
                    .count(),
            }
        })
        .collect();
    Ok(EnsembleStats {
        n_maps: spec.n_maps,
        seed_first: spec.seed0,
        seed_last: spec.seed0 + spec.n_maps as u64 - 1,
        planners,
    })
}

/// One comparison per ensemble map, in seed order.
pub fn ensemble_reports(
    spec: &EnsembleSpec,
    planners: &[PlannerId],
    params: &SimParams,
) -> Result<Vec<ComparisonReport>, EvalError> {
    (0..spec.n_maps as u64)
        .into_par_iter()
        .map(|i| {
            let map = generate_map(&spec.gen, spec.seed0 + i)?;
            compare(&map, planners, map.default_start(), params)
        })
        .collect()
}

/// Maps algorithm blocks to planners: explicit registrations by block id
/// first, then the block's `algorithm` parameter (1 = edge-follow,
/// 2 = terrain-aware).
#[derive(Debug, Clone, Default)]
pub struct PlannerRegistry {
    by_block: BTreeMap<String, PlannerId>,
}

pub const ALGORITHM_PARAM: &str = "algorithm";

impl PlannerRegistry {
    pub fn register(&mut self, block_id: impl Into<String>, planner: PlannerId) {
        self.by_block.insert(block_id.into(), planner);
    }

    pub fn resolve(&self, block: &BuildingBlock) -> Option<PlannerId> {
        if block.kind != BlockKind::AlgorithmBlock {
            return None;
        }
        if let Some(p) = self.by_block.get(&block.id) {
            return Some(*p);
        }
        match block.parameters.get(ALGORITHM_PARAM).copied() {
            Some(1.0) => Some(PlannerId::EdgeFollow),
            Some(2.0) => Some(PlannerId::TerrainAware),
            _ => None,
        }
    }
}

/// What a configuration is scored on.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Map { map: TerrainMap, start: Position },
    Ensemble(EnsembleSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedConfiguration {
    /// The algorithm block occupying the slot in this configuration.
    pub block_id: String,
    pub planner: PlannerId,
    pub model: Model,
    /// Total energy on a single map, mean total over an ensemble.
    pub score: f64,
    pub energy_tenths: u64,
    /// Some run drained the battery before finishing.
    pub disqualified: bool,
}

/// Simulates every configuration alternative for `slot` and orders them by
/// energy (ascending, disqualified last, ties by block id).
pub fn rank_configurations(
    model: &Model,
    repo: &ReferenceRepository,
    slot: &str,
    scenario: &Scenario,
    params: &SimParams,
    registry: &PlannerRegistry,
) -> Result<Vec<RankedConfiguration>, EvalError> {
    let slot_block = model
        .block(slot)
        .ok_or_else(|| CompositionError::UnknownElement(slot.to_string()))?;
    if slot_block.kind != BlockKind::AlgorithmBlock {
        return Err(EvalError::NoAlternatives(slot.to_string()));
    }
    let alternatives = enumerate_alternatives(model, repo, slot)?;

    let mut ranked = alternatives
        .into_iter()
        .map(|alt| {
            let block_id = slot_occupant(model, &alt, slot).to_string();
            let planner = registry
                .resolve(&alt.blocks[&block_id])
                .ok_or_else(|| EvalError::UnknownAlgorithm(block_id.clone()))?;
            let runs = match scenario {
                Scenario::Map { map, start } => vec![run(map, &planner, *start, params)?],
                Scenario::Ensemble(spec) => ensemble_reports(spec, &[planner], params)?
                    .into_iter()
                    .map(|mut r| r.results.remove(0).1)
                    .collect(),
            };
            Ok(RankedConfiguration {
                block_id,
                planner,
                model: alt,
                score: runs.iter().map(|r| r.total_consumed).sum::<f64>() / runs.len() as f64,
                energy_tenths: runs.iter().map(|r| r.energy_tenths).sum(),
                disqualified: runs.iter().any(|r| !r.completed()),
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    ranked.sort_by(|a, b| {
        (a.disqualified, a.energy_tenths, &a.block_id).cmp(&(b.disqualified, b.energy_tenths, &b.block_id))
    });
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::terrain::Level;

    fn flat(w: usize, h: usize) -> TerrainMap {
        TerrainMap::flat(w, h, Level::new(1).unwrap()).unwrap()
    }

    #[test]
    fn reference_map_favours_terrain_aware() {
        let map = demo::reference_map();
        let r = compare(&map, &PlannerId::ALL, map.default_start(), &SimParams::default()).unwrap();
        assert_eq!(r.winner, PlannerId::TerrainAware);
    }

    #[test]
    fn flat_tie_goes_to_edge_follow() {
        let map = flat(4, 3);
        let r = compare(&map, &PlannerId::ALL, Position::new(0, 0), &SimParams::default()).unwrap();
        let (a, b) = (r.result(PlannerId::EdgeFollow).unwrap(), r.result(PlannerId::TerrainAware).unwrap());
        assert_eq!(a.path.revisits(), 0);
        assert_eq!(b.path.revisits(), 0);
        assert_eq!(a.total_consumed, b.total_consumed);
        assert_eq!(r.winner, PlannerId::EdgeFollow);
    }

    #[test]
    fn single_planner_wins() {
        let map = demo::reference_map();
        let r = compare(&map, &[PlannerId::TerrainAware], map.default_start(), &SimParams::default()).unwrap();
        assert_eq!(r.winner, PlannerId::TerrainAware);
        assert!(matches!(
            compare(&map, &[], map.default_start(), &SimParams::default()),
            Err(EvalError::NoPlanners)
        ));
    }

    #[test]
    fn depleted_run_loses() {
        let map = demo::reference_map();
        let te = compare(&map, &[PlannerId::TerrainAware], map.default_start(), &SimParams::default()).unwrap();
        let need = te.results[0].1.total_consumed;
        // enough for terrain-aware, not for edge-follow
        let params = SimParams::new(need + 0.05, 1.0).unwrap();
        let r = compare(&map, &PlannerId::ALL, map.default_start(), &params).unwrap();
        assert!(!r.result(PlannerId::EdgeFollow).unwrap().completed());
        assert_eq!(r.winner, PlannerId::TerrainAware);
    }

    fn spec(n: usize) -> EnsembleSpec {
        EnsembleSpec {
            gen: GenParams::new(8, 6, 0.15),
            seed0: 7,
            n_maps: n,
        }
    }

    #[test]
    fn single_map_ensemble_matches_compare() {
        let s = spec(1);
        let stats = ensemble(&s, &PlannerId::ALL, &SimParams::default()).unwrap();
        let map = generate_map(&s.gen, 7).unwrap();
        let r = compare(&map, &PlannerId::ALL, map.default_start(), &SimParams::default()).unwrap();
        for (p, res) in &r.results {
            let st = stats.for_planner(*p).unwrap();
            assert_eq!(st.mean_total, res.total_consumed);
            assert_eq!(st.min_total, res.total_consumed);
            assert_eq!(st.max_total, res.total_consumed);
            assert_eq!(st.wins, (r.winner == *p) as usize);
        }
    }

    #[test]
    fn ensemble_is_reproducible() {
        let a = ensemble(&spec(12), &PlannerId::ALL, &SimParams::default()).unwrap();
        let b = ensemble(&spec(12), &PlannerId::ALL, &SimParams::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.planners.iter().map(|p| p.wins).sum::<usize>(), 12);
        assert_eq!((a.seed_first, a.seed_last), (7, 18));
    }

    #[test]
    fn flat_ensemble() {
        let s = EnsembleSpec {
            gen: GenParams {
                levels: 1,
                ..GenParams::new(7, 5, 0.2)
            },
            seed0: 100,
            n_maps: 15,
        };
        let reports = ensemble_reports(&s, &PlannerId::ALL, &SimParams::default()).unwrap();
        let stats = ensemble(&s, &PlannerId::ALL, &SimParams::default()).unwrap();
        for r in &reports {
            let (a, b) = (r.result(PlannerId::EdgeFollow).unwrap(), r.result(PlannerId::TerrainAware).unwrap());
            assert!(a.consumption.iter().chain(&b.consumption).all(|c| *c == 1.0));
            assert_eq!(a.steps_completed == b.steps_completed, a.total_consumed == b.total_consumed);
            if a.total_consumed == b.total_consumed {
                assert_eq!(r.winner, PlannerId::EdgeFollow);
            }
        }
        let (ef, ta) = (stats.for_planner(PlannerId::EdgeFollow).unwrap(), stats.for_planner(PlannerId::TerrainAware).unwrap());
        let same_steps = reports.iter().all(|r| {
            r.result(PlannerId::EdgeFollow).unwrap().steps_completed == r.result(PlannerId::TerrainAware).unwrap().steps_completed
        });
        if same_steps {
            assert_eq!(ef.mean_total, ta.mean_total);
            assert_eq!(ef.wins, 15);
        }
    }

    #[test]
    fn ranking_on_reference_map() {
        let scenario = Scenario::Map {
            map: demo::reference_map(),
            start: demo::reference_map().default_start(),
        };
        let ranked = rank_configurations(
            &demo::demo_model(),
            &demo::reference_repository(),
            demo::EDGE_FOLLOW_BLOCK,
            &scenario,
            &SimParams::default(),
            &PlannerRegistry::default(),
        )
        .unwrap();
        let order: Vec<_> = ranked.iter().map(|r| r.planner).collect();
        assert_eq!(order, vec![PlannerId::TerrainAware, PlannerId::EdgeFollow]);
        assert!(ranked[0].score < ranked[1].score);
    }

    #[test]
    fn ranking_needs_an_algorithm_slot() {
        let scenario = Scenario::Map {
            map: flat(2, 2),
            start: Position::new(0, 0),
        };
        let err = rank_configurations(
            &demo::demo_model(),
            &demo::reference_repository(),
            "res.camera",
            &scenario,
            &SimParams::default(),
            &PlannerRegistry::default(),
        )
        .unwrap_err();
        assert_eq!(err, EvalError::NoAlternatives("res.camera".into()));
    }

    #[test]
    fn single_alternative_ranking() {
        // a repository without the terrain-aware block leaves one configuration
        let mut repo = ReferenceRepository::new();
        for a in demo::reference_repository().assets() {
            if a.id() != demo::TERRAIN_AWARE_BLOCK {
                repo = repo.add_asset(a.clone()).unwrap();
            }
        }
        let scenario = Scenario::Map {
            map: flat(3, 3),
            start: Position::new(0, 0),
        };
        let ranked = rank_configurations(
            &demo::demo_model(),
            &repo,
            demo::EDGE_FOLLOW_BLOCK,
            &scenario,
            &SimParams::default(),
            &PlannerRegistry::default(),
        )
        .unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].score, 8.0);
    }

    #[test]
    fn registry_prefers_explicit_registration() {
        let block = BuildingBlock::new("alg.custom", "custom", BlockKind::AlgorithmBlock).with_param(ALGORITHM_PARAM, 1.0);
        let mut reg = PlannerRegistry::default();
        assert_eq!(reg.resolve(&block), Some(PlannerId::EdgeFollow));
        reg.register("alg.custom", PlannerId::TerrainAware);
        assert_eq!(reg.resolve(&block), Some(PlannerId::TerrainAware));
        let plain = BuildingBlock::new("alg.x", "x", BlockKind::AlgorithmBlock);
        assert_eq!(PlannerRegistry::default().resolve(&plain), None);
    }
}
