//! Building configurations out of blocks: port wiring, pattern merge,
//! validation, configuration alternatives, traceability and views.

mod dot;
mod pattern;
mod trace;
mod view;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::model::{port_compatible, BlockKind, ConcernLayer, Connection, Model, ModelError, Origin, PortRef, TraceLink};
use crate::repository::{Asset, ReferenceRepository};

pub use dot::{escape_dot, DotGraph, ViewGraph};
pub use pattern::{apply_pattern, Anchor, MergeMode, Pattern};
pub use trace::{capability_coverage, trace, CapabilityCoverage, CoverageReport, CoverageStatus, TraceDirection, TraceTree};
pub use view::{extract_view, viewpoint_valid, Relation, View, Viewpoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompositionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("cannot connect {provided} to {required}: interface types or directions differ")]
    TypeMismatch { provided: PortRef, required: PortRef },
    #[error("required port {0} is already bound")]
    AlreadyBound(PortRef),
    #[error("pattern anchor `{0}` is not bound")]
    AnchorUnbound(String),
    #[error("anchor `{anchor}` expects a {expected_kind} block but `{block}` is a {found_kind}")]
    AnchorKindMismatch {
        anchor: String,
        block: String,
        expected_kind: BlockKind,
        found_kind: BlockKind,
    },
    #[error("merge conflict on `{0}`: element exists with different content")]
    MergeConflict(String),
    #[error("invalid pattern `{pattern}`: {reason}")]
    InvalidPattern { pattern: String, reason: String },
    #[error("viewpoint ({subject}, {aspect}) is not valid")]
    InvalidViewpoint {
        subject: ConcernLayer,
        aspect: crate::model::Aspect,
    },
}

/// Wires `provided` to `required` if the ports are compatible and the
/// required port is still free.
pub fn connect(model: &Model, provided: &PortRef, required: &PortRef) -> Result<Model, CompositionError> {
    let p = model
        .port(provided)
        .ok_or_else(|| CompositionError::UnknownElement(provided.to_string()))?;
    let r = model
        .port(required)
        .ok_or_else(|| CompositionError::UnknownElement(required.to_string()))?;
    if !port_compatible(p, r) {
        return Err(CompositionError::TypeMismatch {
            provided: provided.clone(),
            required: required.clone(),
        });
    }
    if model.bindings_of(required) > 0 {
        return Err(CompositionError::AlreadyBound(required.clone()));
    }
    let mut next = model.clone();
    next.connections.insert(Connection {
        from: provided.clone(),
        to: required.clone(),
    });
    Ok(next)
}

/// Findings of a configuration check. The model is valid iff every list is
/// empty.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub unbound_required: Vec<PortRef>,
    pub multiply_bound: Vec<PortRef>,
    pub type_mismatches: Vec<Connection>,
    pub illegal_traces: Vec<TraceLink>,
    pub dangling_references: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.finding_count() == 0
    }

    pub fn finding_count(&self) -> usize {
        self.unbound_required.len()
            + self.multiply_bound.len()
            + self.type_mismatches.len()
            + self.illegal_traces.len()
            + self.dangling_references.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return writeln!(f, "valid");
        }
        for p in &self.unbound_required {
            writeln!(f, "unbound required port: {p}")?;
        }
        for p in &self.multiply_bound {
            writeln!(f, "required port bound more than once: {p}")?;
        }
        for c in &self.type_mismatches {
            writeln!(f, "type mismatch: {} -> {}", c.from, c.to)?;
        }
        for t in &self.illegal_traces {
            writeln!(f, "illegal trace: {} {} -> {}", t.kind, t.source, t.target)?;
        }
        for d in &self.dangling_references {
            writeln!(f, "dangling reference: {d}")?;
        }
        Ok(())
    }
}

/// Checks interface wiring, trace legality and reference integrity.
pub fn validate_configuration(model: &Model) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut bound: BTreeMap<&PortRef, usize> = BTreeMap::new();

    for c in &model.connections {
        let mut dangling = false;
        for end in [&c.from, &c.to] {
            if model.port(end).is_none() {
                report.dangling_references.push(end.to_string());
                dangling = true;
            }
        }
        if dangling {
            continue;
        }
        let (p, r) = (model.port(&c.from).unwrap(), model.port(&c.to).unwrap());
        if port_compatible(p, r) {
            *bound.entry(&c.to).or_default() += 1;
        } else {
            report.type_mismatches.push(c.clone());
        }
    }

    for block in model.blocks.values() {
        for port in block.ports.iter().filter(|p| p.direction == crate::model::Direction::Required) {
            let r = PortRef::new(&block.id, &port.id);
            match bound.get(&r).copied().unwrap_or(0) {
                0 => report.unbound_required.push(r),
                1 => {}
                _ => report.multiply_bound.push(r),
            }
        }
    }

    for t in &model.traces {
        let mut dangling = false;
        for end in [&t.source, &t.target] {
            if model.block(end).is_none() {
                report.dangling_references.push(end.clone());
                dangling = true;
            }
        }
        if !dangling && crate::model::check_trace(model, t).is_err() {
            report.illegal_traces.push(t.clone());
        }
    }

    report.dangling_references.sort();
    report.dangling_references.dedup();
    report
}

/// The block occupying `slot` in an alternative produced by
/// [`enumerate_alternatives`]: the one block id `alternative` has that
/// `model` lacks, or `slot` itself for the unchanged model.
pub fn slot_occupant<'a>(model: &Model, alternative: &'a Model, slot: &'a str) -> &'a str {
    alternative
        .blocks
        .keys()
        .find(|k| !model.blocks.contains_key(*k))
        .map(String::as_str)
        .unwrap_or(slot)
}

/// Configuration alternatives for the block in `slot`.
///
/// Element 0 is always the input model. It is followed by one model per
/// repository block asset (ascending id) whose layer, kind and port
/// signature equal the slot block's, with the slot swapped for that asset and
/// its connections and trace links re-pointed. Swaps that would clash with an
/// existing block id or fail validation are dropped.
pub fn enumerate_alternatives(
    model: &Model,
    repo: &ReferenceRepository,
    slot: &str,
) -> Result<Vec<Model>, CompositionError> {
    let current = model
        .block(slot)
        .ok_or_else(|| CompositionError::UnknownElement(slot.to_string()))?;
    let signature = current.port_signature();

    let mut out = vec![model.clone()];
    for asset in repo.assets() {
        let Asset::Block(candidate) = asset else { continue };
        if candidate.id == current.id
            || candidate.layer != current.layer
            || candidate.kind != current.kind
            || candidate.port_signature() != signature
            || model.blocks.contains_key(&candidate.id)
        {
            continue;
        }
        let alt = substitute_block(model, slot, candidate.clone().with_origin(Origin::Adopted));
        if validate_configuration(&alt).is_valid() {
            out.push(alt);
        }
    }
    Ok(out)
}

/// Replaces block `slot` by `replacement` (same port signature), mapping
/// ports pairwise in `(direction, interface_type, id)` order.
fn substitute_block(model: &Model, slot: &str, replacement: crate::model::BuildingBlock) -> Model {
    let old = &model.blocks[slot];
    let ordered = |b: &crate::model::BuildingBlock| {
        let mut ports: Vec<_> = b.ports.iter().collect();
        ports.sort_by(|x, y| (x.direction, &x.interface_type, &x.id).cmp(&(y.direction, &y.interface_type, &y.id)));
        ports.into_iter().map(|p| p.id.clone()).collect::<Vec<_>>()
    };
    let port_map: BTreeMap<String, String> = ordered(old).into_iter().zip(ordered(&replacement)).collect();
    let new_id = replacement.id.clone();

    let remap = |r: &PortRef| {
        if r.block == slot {
            PortRef::new(&new_id, port_map.get(&r.port).cloned().unwrap_or_else(|| r.port.clone()))
        } else {
            r.clone()
        }
    };
    let rename = |id: &String| if id == slot { new_id.clone() } else { id.clone() };

    let mut next = model.clone();
    next.blocks.remove(slot);
    next.blocks.insert(new_id.clone(), replacement.canonical());
    next.connections = model
        .connections
        .iter()
        .map(|c| Connection {
            from: remap(&c.from),
            to: remap(&c.to),
        })
        .collect();
    next.traces = model
        .traces
        .iter()
        .map(|t| TraceLink::new(t.kind, rename(&t.source), rename(&t.target)))
        .collect();
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::model::BuildingBlock;

    fn wiring() -> Model {
        Model::new("w")
            .add_block(BuildingBlock::new("svc.rec", "object recognition", BlockKind::Service).provides("out", "ObjectRecognition"))
            .unwrap()
            .add_block(
                BuildingBlock::new("op.node", "mowing node", BlockKind::OperationalPerformer)
                    .requires("rec", "ObjectRecognition")
                    .requires("mow", "MowingService"),
            )
            .unwrap()
    }

    #[test]
    fn connect_compatible_ports() {
        let m = connect(&wiring(), &PortRef::new("svc.rec", "out"), &PortRef::new("op.node", "rec")).unwrap();
        assert_eq!(m.connections.len(), 1);
    }

    #[test]
    fn connect_mismatched_tokens() {
        let err = connect(&wiring(), &PortRef::new("svc.rec", "out"), &PortRef::new("op.node", "mow")).unwrap_err();
        assert!(matches!(err, CompositionError::TypeMismatch { .. }));
    }

    #[test]
    fn connect_bound_port() {
        let m = connect(&wiring(), &PortRef::new("svc.rec", "out"), &PortRef::new("op.node", "rec")).unwrap();
        let err = connect(&m, &PortRef::new("svc.rec", "out"), &PortRef::new("op.node", "rec")).unwrap_err();
        assert_eq!(err, CompositionError::AlreadyBound(PortRef::new("op.node", "rec")));
    }

    #[test]
    fn connect_unknown_port() {
        let err = connect(&wiring(), &PortRef::new("svc.rec", "nope"), &PortRef::new("op.node", "rec")).unwrap_err();
        assert_eq!(err, CompositionError::UnknownElement("svc.rec.nope".into()));
    }

    #[test]
    fn demo_model_is_valid() {
        let report = validate_configuration(&demo::demo_model());
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn removing_a_service_connection_leaves_one_unbound_port() {
        let mut m = demo::demo_model();
        let victim = m
            .connections
            .iter()
            .find(|c| c.from.block == "svc.mowing")
            .cloned()
            .unwrap();
        m.connections.remove(&victim);
        let report = validate_configuration(&m);
        assert_eq!(report.unbound_required, vec![victim.to]);
        assert_eq!(report.finding_count(), 1);
    }

    #[test]
    fn empty_model_is_valid() {
        assert!(validate_configuration(&Model::new("e")).is_valid());
    }

    #[test]
    fn dangling_and_mismatched_connections_are_reported() {
        let mut m = wiring();
        m.connections.insert(Connection {
            from: PortRef::new("svc.rec", "out"),
            to: PortRef::new("op.node", "mow"),
        });
        m.connections.insert(Connection {
            from: PortRef::new("ghost", "out"),
            to: PortRef::new("op.node", "rec"),
        });
        m.traces.insert(TraceLink::new(crate::model::TraceKind::MapsTo, "svc.rec", "op.node"));
        let report = validate_configuration(&m);
        assert_eq!(report.dangling_references, vec!["ghost.out".to_string()]);
        assert_eq!(report.type_mismatches.len(), 1);
        assert_eq!(report.illegal_traces.len(), 1);
        // both required ports lack a compatible binding
        assert_eq!(report.unbound_required.len(), 2);
    }

    #[test]
    fn planner_slot_has_two_alternatives() {
        let repo = demo::reference_repository();
        let alts = enumerate_alternatives(&demo::demo_model(), &repo, demo::EDGE_FOLLOW_BLOCK).unwrap();
        assert_eq!(alts.len(), 2);
        assert_eq!(alts[0], demo::demo_model());
        assert!(alts[1].block(demo::TERRAIN_AWARE_BLOCK).is_some());
        assert!(alts[1].block(demo::EDGE_FOLLOW_BLOCK).is_none());
        for alt in &alts {
            assert!(validate_configuration(alt).is_valid());
        }
    }

    #[test]
    fn slot_without_signature_match_yields_only_current_model() {
        let repo = demo::reference_repository();
        let alts = enumerate_alternatives(&demo::demo_model(), &repo, "res.camera").unwrap();
        assert_eq!(alts, vec![demo::demo_model()]);
    }

    #[test]
    fn unknown_slot() {
        let repo = demo::reference_repository();
        assert_eq!(
            enumerate_alternatives(&demo::demo_model(), &repo, "nope").unwrap_err(),
            CompositionError::UnknownElement("nope".into())
        );
    }
}
