//! The smart mowing robot: a reference repository, an application model built
//! from it through adoption, adaptation and wiring, a service pattern, and a
//! hilly reference terrain.

use std::collections::BTreeMap;

use crate::composition::{connect, Anchor, Pattern, Viewpoint};
use crate::evaluator::ALGORITHM_PARAM;
use crate::model::{Aspect, BlockKind, BuildingBlock, ConcernLayer, Connection, Model, Origin, PortRef, TraceKind, TraceLink};
use crate::repository::{Asset, Overrides, ReferenceRepository};
use crate::terrain::TerrainMap;

pub const EDGE_FOLLOW_BLOCK: &str = "alg.edge_follow";
pub const TERRAIN_AWARE_BLOCK: &str = "alg.terrain_aware";
pub const SERVICE_PATTERN: &str = "pattern.smart_mowing_services";
pub const DEMO_MODEL_ID: &str = "smart_mowing_robot";

pub const CAPABILITIES: [&str; 3] = ["cap.mobility", "cap.mowing", "cap.recognition"];

fn capabilities() -> Vec<BuildingBlock> {
    vec![
        BuildingBlock::new("cap.recognition", "Recognition", BlockKind::Capability),
        BuildingBlock::new("cap.mobility", "Mobility", BlockKind::Capability),
        BuildingBlock::new("cap.mowing", "Mowing", BlockKind::Capability),
    ]
}

fn operational() -> Vec<BuildingBlock> {
    vec![
        BuildingBlock::new("op.mowing_node", "mowing node", BlockKind::OperationalPerformer)
            .requires("recognition", "ObjectRecognition")
            .requires("mowing", "SmartMowing"),
        BuildingBlock::new("act.recognize_object", "recognize mowing object", BlockKind::OperationalActivity),
        BuildingBlock::new("act.move_green_area", "moving in green areas", BlockKind::OperationalActivity),
        BuildingBlock::new("act.mowing_process", "mowing process", BlockKind::OperationalActivity),
    ]
}

fn services() -> Vec<BuildingBlock> {
    vec![
        BuildingBlock::new("svc.smart_mowing", "mowing service", BlockKind::Service)
            .provides("provides", "SmartMowing")
            .requires("recognition", "ObjectRecognition")
            .requires("mobility", "GreenAreaMobility")
            .requires("mowing", "MowingService"),
        BuildingBlock::new("svc.object_recognition", "object recognition", BlockKind::Service)
            .provides("provides", "ObjectRecognition")
            .requires("classification", "Classification"),
        BuildingBlock::new("svc.green_area_mobility", "green area mobility", BlockKind::Service)
            .provides("provides", "GreenAreaMobility")
            .requires("drive", "Propulsion")
            .requires("path", "CoveragePath"),
        BuildingBlock::new("svc.mowing", "mowing", BlockKind::Service)
            .provides("provides", "MowingService")
            .requires("cutting", "Cutting"),
    ]
}

fn planner_block(id: &str, name: &str, algorithm: f64) -> BuildingBlock {
    BuildingBlock::new(id, name, BlockKind::AlgorithmBlock)
        .provides("path", "CoveragePath")
        .with_param(ALGORITHM_PARAM, algorithm)
}

fn resources() -> Vec<BuildingBlock> {
    vec![
        BuildingBlock::new("res.mowing_robot", "mowing robot", BlockKind::ResourceConfiguration)
            .with_param("weight", 12.0)
            .with_param("consumption_factor", 1.0),
        BuildingBlock::new("res.camera", "camera", BlockKind::ResourceComponent).provides("images", "ImageStream"),
        BuildingBlock::new("res.battery", "battery", BlockKind::ResourceComponent)
            .provides("power", "Power")
            .with_param("capacity", 100.0),
        BuildingBlock::new("res.mowing_blades", "mowing blades", BlockKind::ResourceComponent)
            .requires("power", "Power")
            .provides("cut", "Cutting"),
        BuildingBlock::new("res.propulsion", "propulsion system", BlockKind::ResourceComponent)
            .requires("power", "Power")
            .provides("drive", "Propulsion"),
        BuildingBlock::new("fn.preprocessing", "pre-processing", BlockKind::Function)
            .requires("images", "ImageStream")
            .provides("out", "PreprocessedImage"),
        BuildingBlock::new("fn.detecting", "detecting", BlockKind::Function)
            .requires("in", "PreprocessedImage")
            .provides("out", "Detections"),
        BuildingBlock::new("fn.classifying", "classifying", BlockKind::Function)
            .requires("in", "Detections")
            .provides("out", "Classification"),
        planner_block(EDGE_FOLLOW_BLOCK, "edge-following coverage", 1.0),
        planner_block(TERRAIN_AWARE_BLOCK, "terrain-aware coverage", 2.0),
    ]
}

/// Service layer as a pattern anchored on capabilities and the resources
/// the services draw on.
pub fn service_pattern() -> (Pattern, BTreeMap<String, String>) {
    let anchors = [
        ("anchor.recognition", BlockKind::Capability, "cap.recognition"),
        ("anchor.mobility", BlockKind::Capability, "cap.mobility"),
        ("anchor.mowing", BlockKind::Capability, "cap.mowing"),
        ("anchor.classifier", BlockKind::Function, "fn.classifying"),
        ("anchor.drive", BlockKind::ResourceComponent, "res.propulsion"),
        ("anchor.cutter", BlockKind::ResourceComponent, "res.mowing_blades"),
        ("anchor.planner", BlockKind::AlgorithmBlock, EDGE_FOLLOW_BLOCK),
    ];
    let wire = |from: (&str, &str), to: (&str, &str)| Connection {
        from: PortRef::new(from.0, from.1),
        to: PortRef::new(to.0, to.1),
    };
    let pattern = Pattern {
        id: SERVICE_PATTERN.into(),
        anchors: anchors
            .iter()
            .map(|(id, kind, _)| Anchor {
                id: id.to_string(),
                layer: kind.layer(),
                kind: *kind,
            })
            .collect(),
        blocks: services().into_iter().map(|b| b.with_origin(Origin::Adopted)).collect(),
        connections: vec![
            wire(("svc.object_recognition", "provides"), ("svc.smart_mowing", "recognition")),
            wire(("svc.green_area_mobility", "provides"), ("svc.smart_mowing", "mobility")),
            wire(("svc.mowing", "provides"), ("svc.smart_mowing", "mowing")),
            wire(("anchor.classifier", "out"), ("svc.object_recognition", "classification")),
            wire(("anchor.drive", "drive"), ("svc.green_area_mobility", "drive")),
            wire(("anchor.planner", "path"), ("svc.green_area_mobility", "path")),
            wire(("anchor.cutter", "cut"), ("svc.mowing", "cutting")),
        ],
        traces: vec![
            TraceLink::new(TraceKind::MapsTo, "svc.object_recognition", "anchor.recognition"),
            TraceLink::new(TraceKind::MapsTo, "svc.green_area_mobility", "anchor.mobility"),
            TraceLink::new(TraceKind::MapsTo, "svc.mowing", "anchor.mowing"),
            TraceLink::new(TraceKind::MapsTo, "svc.smart_mowing", "anchor.mowing"),
        ],
    }
    .canonical();
    let bindings = anchors
        .iter()
        .map(|(a, _, b)| (a.to_string(), b.to_string()))
        .collect();
    (pattern, bindings)
}

pub fn reference_repository() -> ReferenceRepository {
    let mut repo = ReferenceRepository::new();
    let blocks = capabilities()
        .into_iter()
        .chain(operational())
        .chain(services())
        .chain(resources());
    for b in blocks {
        repo = repo.add_asset(Asset::Block(b)).expect("demo assets are distinct");
    }
    repo = repo
        .add_asset(Asset::Pattern(service_pattern().0))
        .expect("demo pattern is valid");
    for (subject, aspect) in [
        (ConcernLayer::Strategic, Aspect::Requirements),
        (ConcernLayer::Service, Aspect::Structure),
        (ConcernLayer::Resource, Aspect::Parameters),
    ] {
        repo = repo
            .add_asset(Asset::Viewpoint(Viewpoint::new(subject, aspect)))
            .expect("demo viewpoints are valid");
    }
    repo
}

fn wire(model: Model, from: (&str, &str), to: (&str, &str)) -> Model {
    connect(&model, &PortRef::new(from.0, from.1), &PortRef::new(to.0, to.1)).expect("demo wiring is type-correct")
}

fn link(model: Model, kind: TraceKind, source: &str, target: &str) -> Model {
    model
        .add_trace(TraceLink::new(kind, source, target))
        .expect("demo trace is permitted")
}

/// Capabilities and resources only; the starting point for the service
/// pattern.
pub fn strategic_resource_model() -> Model {
    let repo = reference_repository();
    let mut m = Model::new(DEMO_MODEL_ID);
    let ids = capabilities()
        .into_iter()
        .chain(resources())
        .map(|b| b.id)
        .filter(|id| id != TERRAIN_AWARE_BLOCK);
    for id in ids {
        m = repo.adopt(&id, &m).expect("demo adoption");
    }
    for (from, to) in [
        (("res.battery", "power"), ("res.mowing_blades", "power")),
        (("res.battery", "power"), ("res.propulsion", "power")),
        (("res.camera", "images"), ("fn.preprocessing", "images")),
        (("fn.preprocessing", "out"), ("fn.detecting", "in")),
        (("fn.detecting", "out"), ("fn.classifying", "in")),
    ] {
        m = wire(m, from, to);
    }
    for cap in CAPABILITIES {
        m = link(m, TraceKind::Exhibits, "res.mowing_robot", cap);
    }
    for f in ["fn.preprocessing", "fn.detecting", "fn.classifying"] {
        m = link(m, TraceKind::Performs, "res.mowing_robot", f);
    }
    m
}

/// The fully wired and traced smart mowing robot configuration.
pub fn demo_model() -> Model {
    let repo = reference_repository();
    let mut m = strategic_resource_model();
    for b in operational() {
        m = repo.adopt(&b.id, &m).expect("demo adoption");
    }
    let smart = Overrides {
        name: Some("smart mowing service".into()),
        ..Overrides::default()
    };
    m = repo.adapt("svc.smart_mowing", &smart, &m).expect("demo adaptation");
    for id in ["svc.object_recognition", "svc.green_area_mobility", "svc.mowing"] {
        m = repo.adopt(id, &m).expect("demo adoption");
    }
    for (from, to) in [
        (("svc.object_recognition", "provides"), ("svc.smart_mowing", "recognition")),
        (("svc.green_area_mobility", "provides"), ("svc.smart_mowing", "mobility")),
        (("svc.mowing", "provides"), ("svc.smart_mowing", "mowing")),
        (("fn.classifying", "out"), ("svc.object_recognition", "classification")),
        (("res.propulsion", "drive"), ("svc.green_area_mobility", "drive")),
        ((EDGE_FOLLOW_BLOCK, "path"), ("svc.green_area_mobility", "path")),
        (("res.mowing_blades", "cut"), ("svc.mowing", "cutting")),
        (("svc.object_recognition", "provides"), ("op.mowing_node", "recognition")),
        (("svc.smart_mowing", "provides"), ("op.mowing_node", "mowing")),
    ] {
        m = wire(m, from, to);
    }
    for cap in CAPABILITIES {
        m = link(m, TraceKind::Exhibits, "op.mowing_node", cap);
    }
    for (svc, cap) in [
        ("svc.object_recognition", "cap.recognition"),
        ("svc.green_area_mobility", "cap.mobility"),
        ("svc.mowing", "cap.mowing"),
        ("svc.smart_mowing", "cap.mowing"),
    ] {
        m = link(m, TraceKind::MapsTo, svc, cap);
    }
    for act in ["act.recognize_object", "act.move_green_area", "act.mowing_process"] {
        m = link(m, TraceKind::Performs, "op.mowing_node", act);
    }
    for (svc, act) in [
        ("svc.object_recognition", "act.recognize_object"),
        ("svc.green_area_mobility", "act.move_green_area"),
        ("svc.mowing", "act.mowing_process"),
    ] {
        m = link(m, TraceKind::Implements, svc, act);
    }
    m
}

/// Hilly reference terrain: a north-south ridge (levels rising 0 to 3 and
/// falling back to 1) with a rock on its western flank. A row-by-row sweep
/// has to climb the ridge on every row.
pub const REFERENCE_MAP: &str = "\
00123321
00123321
001X3321
00123321
00123321
00123321
";

pub fn reference_map() -> TerrainMap {
    TerrainMap::load(REFERENCE_MAP).expect("reference map is well formed")
}
