//! Acceptance suite: one PASS/FAIL line per criterion, each with its own
//! time budget. Property checks use a fixed proptest RNG so the run is
//! reproducible. Runs without the libtest harness so the lines are always
//! printed; exits non-zero if any criterion fails.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use refmodel_core::composition::{
    apply_pattern, capability_coverage, extract_view, validate_configuration, CompositionError, CoverageStatus,
    MergeMode, Pattern, Viewpoint,
};
use refmodel_core::demo;
use refmodel_core::document::{model_from_json, model_to_json, DocumentError};
use refmodel_core::evaluator::compare;
use refmodel_core::model::{Aspect, BlockKind, BuildingBlock, ConcernLayer, TraceKind};
use refmodel_core::planners::{CoveragePlanner, PlannerId};
use refmodel_core::repository::{RepoError, ReferenceRepository};
use refmodel_core::simulation::{run, SimParams};
use refmodel_core::terrain::{classify_step, Level, Position, StepClass, TerrainMap};
use refmodel_core::testing::{arb_flat_grid, arb_grid, arb_model, arb_model_and_pattern, arb_repository};
use refmodel_core::testing::{brute_force_min_tenths, flood_fill};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

/// Runs `check` on `cases` draws of `strategy`; returns how many ran.
fn property<S: Strategy>(
    cases: u32,
    strategy: S,
    check: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<u32, String> {
    let count = Cell::new(0u32);
    runner(cases)
        .run(&strategy, |v| {
            count.set(count.get() + 1);
            check(v)
        })
        .map_err(|e| e.to_string())?;
    Ok(count.get())
}

// ---- criterion 1: step factors ----

fn step_factors() -> Outcome {
    let table = [
        [1.0, 1.9, 1.9, 1.9],
        [0.6, 1.0, 1.9, 1.9],
        [0.6, 0.6, 1.0, 1.9],
        [0.6, 0.6, 0.6, 1.0],
    ];
    let mut pairs = 0;
    for a in 0..=Level::MAX {
        for b in 0..=Level::MAX {
            let (la, lb) = (Level::new(a).unwrap(), Level::new(b).unwrap());
            let f = classify_step(la, lb).factor();
            ensure(f == table[a as usize][b as usize], || format!("factor({a},{b}) = {f}"))?;
            let mirrored = match classify_step(la, lb) {
                StepClass::High => StepClass::Low,
                StepClass::Normal => StepClass::Normal,
                StepClass::Low => StepClass::High,
            };
            ensure(classify_step(lb, la) == mirrored, || format!("antisymmetry fails at ({a},{b})"))?;
            pairs += 1;
        }
    }
    Ok(format!("{pairs} level pairs exact, antisymmetric"))
}

// ---- criterion 2: reference map ----

const EDGE_FOLLOW_TOTAL: f64 = 59.2;
const TERRAIN_AWARE_TOTAL: f64 = 52.7;
/// Rows 1-2, columns 2-5 of the reference map: seven free cells.
const SUB_MAP: &str = "1233\n1X33\n";
const SUB_MAP_ORACLE_TENTHS: u64 = 88;
const SUB_MAP_EDGE_FOLLOW_TENTHS: u64 = 100;
const SUB_MAP_TERRAIN_AWARE_TENTHS: u64 = 88;

fn reference_map() -> Outcome {
    let map = demo::reference_map();
    let r = compare(&map, &PlannerId::ALL, map.default_start(), &SimParams::default()).map_err(|e| e.to_string())?;
    let ef = r.result(PlannerId::EdgeFollow).unwrap().total_consumed;
    let ta = r.result(PlannerId::TerrainAware).unwrap().total_consumed;
    ensure(ta < ef, || format!("terrain-aware {ta} is not below edge-follow {ef}"))?;
    ensure(ef == EDGE_FOLLOW_TOTAL, || format!("edge-follow total {ef} != fixture {EDGE_FOLLOW_TOTAL}"))?;
    ensure(ta == TERRAIN_AWARE_TOTAL, || format!("terrain-aware total {ta} != fixture {TERRAIN_AWARE_TOTAL}"))?;
    ensure(r.winner == PlannerId::TerrainAware, || "winner is not terrain-aware".into())?;

    let sub = TerrainMap::load(SUB_MAP).map_err(|e| e.to_string())?;
    ensure(sub.free_cells().count() == 7, || "sub-map must have 7 free cells".into())?;
    let start = sub.default_start();
    let oracle = brute_force_min_tenths(&sub, start);
    ensure(oracle == SUB_MAP_ORACLE_TENTHS, || format!("oracle {oracle} != {SUB_MAP_ORACLE_TENTHS}"))?;
    for (planner, pinned) in [
        (PlannerId::EdgeFollow, SUB_MAP_EDGE_FOLLOW_TENTHS),
        (PlannerId::TerrainAware, SUB_MAP_TERRAIN_AWARE_TENTHS),
    ] {
        let t = run(&sub, &planner, start, &SimParams::default()).map_err(|e| e.to_string())?.energy_tenths;
        ensure(t == pinned, || format!("{planner} on sub-map: {t} != {pinned}"))?;
        ensure(t >= oracle, || format!("{planner} beats the oracle"))?;
    }
    Ok(format!(
        "terrain-aware {TERRAIN_AWARE_TOTAL} < edge-follow {EDGE_FOLLOW_TOTAL}; sub-map oracle {:.1} <= {:.1}, {:.1}",
        oracle as f64 / 10.0,
        SUB_MAP_EDGE_FOLLOW_TENTHS as f64 / 10.0,
        SUB_MAP_TERRAIN_AWARE_TENTHS as f64 / 10.0
    ))
}

// ---- criterion 3: flat maps ----

fn flat_maps() -> Outcome {
    let sweeps = Cell::new(0u32);
    let cases = property(
        400,
        (arb_flat_grid(12, 12, 0.2), 0.05..5.0f64),
        |(map, cf)| {
            let params = SimParams::new(1.0e6, cf).unwrap();
            let r = compare(&map, &PlannerId::ALL, map.default_start(), &params).unwrap();
            for (_, res) in &r.results {
                prop_assert!(res.consumption.iter().all(|c| *c == 1.0 * cf));
            }
            let ef = r.result(PlannerId::EdgeFollow).unwrap();
            let ta = r.result(PlannerId::TerrainAware).unwrap();
            if ef.path.revisits() == 0 && ta.path.revisits() == 0 {
                sweeps.set(sweeps.get() + 1);
                prop_assert_eq!(ef.total_consumed, ta.total_consumed);
            }
            Ok(())
        },
    )?;
    ensure(sweeps.get() >= 100, || format!("only {} maps had two zero-revisit sweeps", sweeps.get()))?;
    Ok(format!("{cases} flat maps, {} with two zero-revisit sweeps", sweeps.get()))
}

// ---- criterion 4: conservation, linearity, argmin invariance ----

fn arb_params() -> impl Strategy<Value = SimParams> {
    (
        1.0..200.0f64,
        0.05..5.0f64,
        proptest::collection::vec(prop_oneof![Just(0.0), 0.0..3.0f64], 0..40),
    )
        .prop_map(|(capacity, consumption_factor, charging)| SimParams {
            capacity,
            consumption_factor,
            charging,
        })
}

fn conservation() -> Outcome {
    let cases = property(
        250,
        (arb_grid(12, 12, 0.3), arb_params(), 0.01..100.0f64),
        |(map, params, k)| {
            let start = map.default_start();
            for planner in PlannerId::ALL {
                let r = run(&map, &planner, start, &params).unwrap();
                let last = r.remaining.last().copied().unwrap_or(params.capacity);
                let charged: f64 = (0..r.steps_completed).map(|t| params.charging_at(t)).sum();
                let gap = (params.capacity - last + charged - r.total_consumed).abs();
                prop_assert!(gap <= 1e-9, "conservation gap {}", gap);
            }
            // linearity and argmin invariance need runs that finish
            let ample = SimParams::new(1.0e7, params.consumption_factor).unwrap();
            let base = compare(&map, &PlannerId::ALL, start, &ample).unwrap();
            let doubled = compare(&map, &PlannerId::ALL, start, &ample.scaled(2.0)).unwrap();
            for ((_, a), (_, b)) in base.results.iter().zip(&doubled.results) {
                let rel = (b.total_consumed - 2.0 * a.total_consumed).abs() / a.total_consumed.max(f64::MIN_POSITIVE);
                prop_assert!(a.total_consumed == 0.0 || rel <= 1e-12, "relative error {}", rel);
            }
            let scaled = compare(&map, &PlannerId::ALL, start, &ample.scaled(k)).unwrap();
            prop_assert_eq!(base.winner, scaled.winner);
            Ok(())
        },
    )?;
    Ok(format!("{cases} (map, params) draws"))
}

// ---- criterion 5: coverage soundness ----

fn coverage_soundness() -> Outcome {
    let cases = property(220, (arb_grid(20, 20, 0.3), any::<usize>()), |(map, k)| {
        let free: Vec<Position> = map.free_cells().collect();
        let start = free[k % free.len()];
        let reachable = flood_fill(&map, start);
        for planner in PlannerId::ALL {
            let path = planner.plan(&map, start).unwrap();
            prop_assert!(path.is_valid_on(&map));
            let visited: BTreeSet<Position> = path.positions().collect();
            prop_assert_eq!(&visited, &reachable);
        }
        Ok(())
    })?;
    Ok(format!("{cases} maps up to 20x20, density up to 0.3"))
}

// ---- criterion 6: merge semantics ----

fn merge_semantics() -> Outcome {
    let cases = property(150, arb_model_and_pattern(), |(model, pattern, bindings)| {
        let once = apply_pattern(&model, &pattern, &bindings, MergeMode::Strict).unwrap();
        prop_assert!(model.blocks.iter().all(|(id, b)| once.blocks.get(id) == Some(b)));
        prop_assert!(model.connections.is_subset(&once.connections));
        prop_assert!(model.traces.is_subset(&once.traces));
        let twice = apply_pattern(&once, &pattern, &bindings, MergeMode::Strict).unwrap();
        prop_assert_eq!(twice, once);
        Ok(())
    })?;

    let mut clash = Pattern::new("pattern.clash");
    clash
        .blocks
        .push(BuildingBlock::new("cap.mowing", "Lawn cutting", BlockKind::Capability));
    let err = apply_pattern(&demo::demo_model(), &clash, &BTreeMap::new(), MergeMode::Strict);
    ensure(
        err == Err(CompositionError::MergeConflict("cap.mowing".into())),
        || format!("expected MergeConflict, got {err:?}"),
    )?;
    Ok(format!("{cases} (model, pattern) pairs monotone and idempotent; conflict fixture rejected"))
}

// ---- criterion 7: traceability ----

fn traceability() -> Outcome {
    let model = demo::demo_model();
    let report = validate_configuration(&model);
    ensure(report.is_valid(), || format!("demo model has findings:\n{report}"))?;
    let coverage = capability_coverage(&model);
    for cap in ["cap.recognition", "cap.mobility", "cap.mowing"] {
        ensure(coverage.status(cap) == Some(CoverageStatus::Covered), || format!("{cap} not covered"))?;
    }
    let mut reduced = model.clone();
    reduced
        .traces
        .retain(|t| !(t.kind == TraceKind::Exhibits && model.blocks[&t.source].layer == ConcernLayer::Resource));
    ensure(reduced.traces.len() < model.traces.len(), || "no resource exhibits links to remove".into())?;
    let coverage = capability_coverage(&reduced);
    for cap in ["cap.recognition", "cap.mobility", "cap.mowing"] {
        ensure(
            coverage.status(cap) == Some(CoverageStatus::PartiallyCovered),
            || format!("{cap} is {:?} without resource exhibits", coverage.status(cap)),
        )?;
    }
    Ok("demo valid, 3/3 covered, 3/3 partially covered without resource exhibits".into())
}

// ---- criterion 8: viewpoint rule ----

fn viewpoint_rule() -> Outcome {
    let model = demo::demo_model();
    let mut ok = 0;
    for subject in ConcernLayer::ALL {
        for aspect in Aspect::ALL {
            let result = extract_view(&model, &Viewpoint::new(subject, aspect));
            if (subject, aspect) == (ConcernLayer::Strategic, Aspect::Behavior) {
                ensure(
                    result == Err(CompositionError::InvalidViewpoint { subject, aspect }),
                    || "(strategic, behavior) was not rejected".into(),
                )?;
            } else {
                result.map_err(|e| format!("({subject}, {aspect}): {e}"))?;
                ok += 1;
            }
        }
    }
    ensure(ok == 15, || format!("{ok} viewpoints succeeded"))?;
    Ok("(strategic, behavior) rejected, 15 others extract".into())
}

// ---- criterion 9: persistence ----

fn persistence() -> Outcome {
    let repos = property(120, arb_repository(), |repo| {
        let text = repo.save();
        let back = ReferenceRepository::load(&text).unwrap();
        prop_assert_eq!(back.save(), text);
        prop_assert_eq!(back, repo);
        Ok(())
    })?;
    let models = property(120, arb_model(), |model| {
        let text = model_to_json(&model);
        let back = model_from_json(&text).unwrap();
        prop_assert_eq!(model_to_json(&back), text);
        prop_assert_eq!(back, model);
        Ok(())
    })?;

    // (document, expected line, expected column)
    let malformed_models = [
        ("{\"schema_version\": 1,\n \"model\": {\"id\": \"m\" \"blocks\": []}}", 2, 22),
        ("{\"schema_version\": 1,\n \"model\": {\"id\": \"m\",\n  \"blocks\": [{\"id\": \"a\", \"name\": \"A\", \"layer\": \"nowhere\"}]}}", 3, 56),
        ("{\"schema_version\": 1, \"model\": [", 1, 32),
    ];
    for (doc, line, column) in malformed_models {
        match model_from_json(doc) {
            Err(DocumentError::Parse(e)) => ensure((e.line, e.column) == (line, column), || {
                format!("model error at {}:{}, expected {line}:{column}: {}", e.line, e.column, e.message)
            })?,
            other => return Err(format!("expected a parse error, got {other:?}")),
        }
    }
    let malformed_repo = "{\"schema_version\": 1, \"version\": 1,\n \"assets\": [{\"block\": {\"id\": \"\"}}]}";
    match ReferenceRepository::load(malformed_repo) {
        Err(RepoError::Document(DocumentError::Parse(e))) => {
            ensure(e.line == 2, || format!("repository error on line {}, expected 2", e.line))?
        }
        other => return Err(format!("expected a parse error, got {other:?}")),
    }
    Ok(format!("{repos} repositories and {models} models round-trip; malformed documents positioned"))
}

// ---- criterion 10: end-to-end determinism ----

fn cli(dir: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_refmodel"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("refmodel {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })?;
    Ok(out.stdout)
}

fn end_to_end_run(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    cli(dir, &["demo", "--out", "out"])?;
    cli(dir, &["compare", "--map", "out/reference.terrain.txt", "--format", "csv", "--out", "out"])?;
    cli(dir, &["ensemble", "--n", "20", "--seed", "7", "--format", "csv", "--out", "out"])?;
    let mut files = BTreeMap::new();
    files.insert(
        "stdout: view dot".to_string(),
        cli(dir, &["view", "service", "structure", "--model", "out/demo.refmodel.json", "--format", "dot"])?,
    );
    for entry in std::fs::read_dir(dir.join("out")).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        files.insert(path.file_name().unwrap().to_string_lossy().into_owned(), bytes);
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = end_to_end_run(a.path())?;
    let second = end_to_end_run(b.path())?;
    for name in ["compare.csv", "compare_summary.csv", "ensemble.csv", "service_structure.dot"] {
        ensure(first.contains_key(name), || format!("{name} was not written"))?;
    }
    ensure(first.keys().eq(second.keys()), || "runs wrote different file sets".into())?;
    for (name, bytes) in &first {
        ensure(second[name] == *bytes, || format!("{name} differs between runs"))?;
    }
    Ok(format!("{} outputs byte-identical across two runs", first.len()))
}

/// (number, title, time budget in seconds, check)
type Criterion = (u32, &'static str, u64, fn() -> Outcome);

fn main() -> ExitCode {
    let suite_budget = Duration::from_secs(180);
    let criteria: [Criterion; 10] = [
        (1, "step factors exact", 1, step_factors),
        (2, "reference map favours terrain-aware", 5, reference_map),
        (3, "flat-map equivalence", 10, flat_maps),
        (4, "conservation and linearity", 30, conservation),
        (5, "coverage soundness", 30, coverage_soundness),
        (6, "merge semantics", 10, merge_semantics),
        (7, "capability traceability", 1, traceability),
        (8, "viewpoint rule", 1, viewpoint_rule),
        (9, "persistence", 10, persistence),
        (10, "end-to-end determinism", 30, determinism),
    ];
    let suite = Instant::now();
    let mut failed = Vec::new();
    for (n, name, budget, check) in criteria {
        let t = Instant::now();
        let outcome = check();
        let elapsed = t.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(budget) => {
                Err(format!("{detail}; took {elapsed:.2?}, budget {budget}s"))
            }
            other => other,
        };
        match &outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{elapsed:.2?}]"),
            Err(why) => {
                println!("criterion {n:>2} FAIL  {name}: {why} [{elapsed:.2?}]");
                failed.push(n);
            }
        }
    }
    let total = suite.elapsed();
    let within_budget = total <= suite_budget;
    println!(
        "acceptance suite: {} of 10 passed in {total:.2?}{}",
        10 - failed.len(),
        if within_budget { "" } else { " (over the 3 min budget)" }
    );
    if failed.is_empty() && within_budget {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
