//! Typed element model: concern layers, building blocks with provided and
//! required ports, port connections and cross-layer trace links.
//!
//! Every value here is immutable once built. Operations on [`Model`] take
//! `&self` and hand back a new model, so a model can be shared freely between
//! threads and queries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("trace {kind} from {source_layer} block `{source_id}` to {target_layer} block `{target_id}` is not permitted")]
    IllegalTraceKind {
        kind: TraceKind,
        source_id: String,
        source_layer: ConcernLayer,
        target_id: String,
        target_layer: ConcernLayer,
    },
    #[error("duplicate port id `{port}` on block `{block}`")]
    DuplicatePortId { block: String, port: String },
    #[error("invalid block `{block}`: {reason}")]
    InvalidBlock { block: String, reason: String },
    #[error("`{0}` is not of the form block.port")]
    BadPortRef(String),
}

/// The four subjects of concern a model element can belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcernLayer {
    Strategic,
    Operational,
    Service,
    Resource,
}

impl ConcernLayer {
    pub const ALL: [ConcernLayer; 4] = [
        ConcernLayer::Strategic,
        ConcernLayer::Operational,
        ConcernLayer::Service,
        ConcernLayer::Resource,
    ];

    pub fn token(self) -> &'static str {
        match self {
            ConcernLayer::Strategic => "strategic",
            ConcernLayer::Operational => "operational",
            ConcernLayer::Service => "service",
            ConcernLayer::Resource => "resource",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.token() == token)
    }
}

impl fmt::Display for ConcernLayer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// The aspect of concern a viewpoint looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aspect {
    Structure,
    Behavior,
    Parameters,
    Requirements,
}

impl Aspect {
    pub const ALL: [Aspect; 4] = [
        Aspect::Structure,
        Aspect::Behavior,
        Aspect::Parameters,
        Aspect::Requirements,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Aspect::Structure => "structure",
            Aspect::Behavior => "behavior",
            Aspect::Parameters => "parameters",
            Aspect::Requirements => "requirements",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.token() == token)
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Provided,
    Required,
}

impl Direction {
    pub fn token(self) -> &'static str {
        match self {
            Direction::Provided => "provided",
            Direction::Required => "required",
        }
    }
}

/// An interface point on a building block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Port {
    pub id: String,
    pub direction: Direction,
    pub interface_type: String,
    pub layer: ConcernLayer,
}

impl Port {
    pub fn provided(id: impl Into<String>, interface_type: impl Into<String>, layer: ConcernLayer) -> Self {
        Port {
            id: id.into(),
            direction: Direction::Provided,
            interface_type: interface_type.into(),
            layer,
        }
    }

    pub fn required(id: impl Into<String>, interface_type: impl Into<String>, layer: ConcernLayer) -> Self {
        Port {
            id: id.into(),
            direction: Direction::Required,
            interface_type: interface_type.into(),
            layer,
        }
    }
}

/// Interfaces are typed nominally: a provided port satisfies a required port
/// iff both type tokens are string-equal.
pub fn port_compatible(provided: &Port, required: &Port) -> bool {
    provided.direction == Direction::Provided
        && required.direction == Direction::Required
        && provided.interface_type == required.interface_type
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Capability,
    OperationalPerformer,
    OperationalActivity,
    Service,
    ResourceConfiguration,
    ResourceComponent,
    Function,
    AlgorithmBlock,
}

impl BlockKind {
    pub const ALL: [BlockKind; 8] = [
        BlockKind::Capability,
        BlockKind::OperationalPerformer,
        BlockKind::OperationalActivity,
        BlockKind::Service,
        BlockKind::ResourceConfiguration,
        BlockKind::ResourceComponent,
        BlockKind::Function,
        BlockKind::AlgorithmBlock,
    ];

    /// The single layer this kind of block lives on.
    pub fn layer(self) -> ConcernLayer {
        match self {
            BlockKind::Capability => ConcernLayer::Strategic,
            BlockKind::OperationalPerformer | BlockKind::OperationalActivity => ConcernLayer::Operational,
            BlockKind::Service => ConcernLayer::Service,
            BlockKind::ResourceConfiguration
            | BlockKind::ResourceComponent
            | BlockKind::Function
            | BlockKind::AlgorithmBlock => ConcernLayer::Resource,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            BlockKind::Capability => "capability",
            BlockKind::OperationalPerformer => "operational_performer",
            BlockKind::OperationalActivity => "operational_activity",
            BlockKind::Service => "service",
            BlockKind::ResourceConfiguration => "resource_configuration",
            BlockKind::ResourceComponent => "resource_component",
            BlockKind::Function => "function",
            BlockKind::AlgorithmBlock => "algorithm_block",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.token() == token)
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// How a block got into a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    ReferenceAsset,
    Adopted,
    Adapted,
    Extended,
}

/// A typed, reusable model element bound to exactly one concern layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockRecord")]
pub struct BuildingBlock {
    pub id: String,
    pub name: String,
    pub layer: ConcernLayer,
    pub kind: BlockKind,
    pub ports: Vec<Port>,
    pub parameters: BTreeMap<String, f64>,
    pub origin: Origin,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockRecord {
    id: String,
    name: String,
    layer: ConcernLayer,
    kind: BlockKind,
    #[serde(default)]
    ports: Vec<Port>,
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
    origin: Origin,
}

impl TryFrom<BlockRecord> for BuildingBlock {
    type Error = ModelError;

    fn try_from(r: BlockRecord) -> Result<Self, Self::Error> {
        let block = BuildingBlock {
            id: r.id,
            name: r.name,
            layer: r.layer,
            kind: r.kind,
            ports: r.ports,
            parameters: r.parameters,
            origin: r.origin,
        };
        block.check()?;
        Ok(block.canonical())
    }
}

impl BuildingBlock {
    /// A reference-asset block whose layer follows from `kind`.
    pub fn new(id: impl Into<String>, name: impl Into<String>, kind: BlockKind) -> Self {
        BuildingBlock {
            id: id.into(),
            name: name.into(),
            layer: kind.layer(),
            kind,
            ports: Vec::new(),
            parameters: BTreeMap::new(),
            origin: Origin::ReferenceAsset,
        }
    }

    pub fn provides(mut self, port_id: impl Into<String>, interface_type: impl Into<String>) -> Self {
        self.ports.push(Port::provided(port_id, interface_type, self.layer));
        self
    }

    pub fn requires(mut self, port_id: impl Into<String>, interface_type: impl Into<String>) -> Self {
        self.ports.push(Port::required(port_id, interface_type, self.layer));
        self
    }

    pub fn with_param(mut self, name: impl Into<String>, value: f64) -> Self {
        self.parameters.insert(name.into(), value);
        self
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = origin;
        self
    }

    pub fn port(&self, port_id: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.id == port_id)
    }

    /// Multiset of `(direction, interface_type)` pairs, sorted.
    pub fn port_signature(&self) -> Vec<(Direction, String)> {
        let mut sig: Vec<_> = self
            .ports
            .iter()
            .map(|p| (p.direction, p.interface_type.clone()))
            .collect();
        sig.sort();
        sig
    }

    /// Checks the block-local invariants.
    pub fn check(&self) -> Result<(), ModelError> {
        let invalid = |reason: String| ModelError::InvalidBlock {
            block: self.id.clone(),
            reason,
        };
        if self.id.is_empty() {
            return Err(invalid("empty id".into()));
        }
        if self.kind.layer() != self.layer {
            return Err(invalid(format!(
                "kind {} belongs to the {} layer, not {}",
                self.kind,
                self.kind.layer(),
                self.layer
            )));
        }
        let mut seen = BTreeSet::new();
        for port in &self.ports {
            if !seen.insert(port.id.as_str()) {
                return Err(ModelError::DuplicatePortId {
                    block: self.id.clone(),
                    port: port.id.clone(),
                });
            }
            if port.id.is_empty() {
                return Err(invalid("port with empty id".into()));
            }
            if !is_token(&port.interface_type) {
                return Err(invalid(format!("port `{}` has a malformed interface type", port.id)));
            }
            if port.layer != self.layer {
                return Err(invalid(format!(
                    "port `{}` is on the {} layer but the block is {}",
                    port.id, port.layer, self.layer
                )));
            }
        }
        if let Some((name, _)) = self.parameters.iter().find(|(_, v)| !v.is_finite()) {
            return Err(invalid(format!("parameter `{name}` is not finite")));
        }
        Ok(())
    }

    /// Same block with ports sorted by id.
    pub fn canonical(mut self) -> Self {
        self.ports.sort_by(|a, b| a.id.cmp(&b.id));
        self
    }
}

/// Non-empty, no whitespace or control characters.
pub fn is_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c.is_control())
}

/// `(block id, port id)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortRef {
    pub block: String,
    pub port: String,
}

impl PortRef {
    pub fn new(block: impl Into<String>, port: impl Into<String>) -> Self {
        PortRef {
            block: block.into(),
            port: port.into(),
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.block, self.port)
    }
}

/// Parses `block.port`, splitting at the last dot: block ids may contain
/// dots, port ids may not.
impl FromStr for PortRef {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.rsplit_once('.') {
            Some((block, port)) if !block.is_empty() && !port.is_empty() => Ok(PortRef::new(block, port)),
            _ => Err(ModelError::BadPortRef(s.to_string())),
        }
    }
}

/// A wire from a provided port to a required port.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Connection {
    pub from: PortRef,
    pub to: PortRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Exhibits,
    MapsTo,
    Performs,
    Implements,
}

impl TraceKind {
    pub fn token(self) -> &'static str {
        match self {
            TraceKind::Exhibits => "exhibits",
            TraceKind::MapsTo => "maps_to",
            TraceKind::Performs => "performs",
            TraceKind::Implements => "implements",
        }
    }

    /// Whether a link of this kind may run from a `source` block to a
    /// `target` block on the given layers.
    pub fn permits(self, source: ConcernLayer, target: ConcernLayer) -> bool {
        use ConcernLayer::*;
        matches!(
            (self, source, target),
            (TraceKind::Exhibits, Operational, Strategic)
                | (TraceKind::Exhibits, Resource, Strategic)
                | (TraceKind::MapsTo, Service, Strategic)
                | (TraceKind::Performs, Operational, Operational)
                | (TraceKind::Performs, Resource, Resource)
                | (TraceKind::Implements, Resource, Service)
                | (TraceKind::Implements, Service, Operational)
        )
    }
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A realization relation between two blocks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceLink {
    pub kind: TraceKind,
    pub source: String,
    pub target: String,
}

impl TraceLink {
    pub fn new(kind: TraceKind, source: impl Into<String>, target: impl Into<String>) -> Self {
        TraceLink {
            kind,
            source: source.into(),
            target: target.into(),
        }
    }
}

/// A configuration: blocks, the port wiring between them and trace links.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub id: String,
    #[serde(with = "blocks_as_list")]
    pub blocks: BTreeMap<String, BuildingBlock>,
    #[serde(default)]
    pub connections: BTreeSet<Connection>,
    #[serde(default)]
    pub traces: BTreeSet<TraceLink>,
}

impl Model {
    pub fn new(id: impl Into<String>) -> Self {
        Model {
            id: id.into(),
            ..Model::default()
        }
    }

    pub fn block(&self, id: &str) -> Option<&BuildingBlock> {
        self.blocks.get(id)
    }

    pub fn require_block(&self, id: &str) -> Result<&BuildingBlock, ModelError> {
        self.blocks
            .get(id)
            .ok_or_else(|| ModelError::UnknownElement(id.to_string()))
    }

    pub fn port(&self, r: &PortRef) -> Option<&Port> {
        self.blocks.get(&r.block).and_then(|b| b.port(&r.port))
    }

    pub fn add_block(&self, block: BuildingBlock) -> Result<Model, ModelError> {
        if self.blocks.contains_key(&block.id) {
            return Err(ModelError::DuplicateId(block.id));
        }
        block.check()?;
        let mut next = self.clone();
        next.blocks.insert(block.id.clone(), block.canonical());
        Ok(next)
    }

    /// Adds `link` if its `(source layer, target layer, kind)` is permitted.
    pub fn add_trace(&self, link: TraceLink) -> Result<Model, ModelError> {
        check_trace(self, &link)?;
        let mut next = self.clone();
        next.traces.insert(link);
        Ok(next)
    }

    /// Number of connections bound to the given required port.
    pub fn bindings_of(&self, required: &PortRef) -> usize {
        self.connections.iter().filter(|c| &c.to == required).count()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty() && self.connections.is_empty() && self.traces.is_empty()
    }
}

pub(crate) fn check_trace(model: &Model, link: &TraceLink) -> Result<(), ModelError> {
    let source = model.require_block(&link.source)?;
    let target = model.require_block(&link.target)?;
    if !link.kind.permits(source.layer, target.layer) {
        return Err(ModelError::IllegalTraceKind {
            kind: link.kind,
            source_id: source.id.clone(),
            source_layer: source.layer,
            target_id: target.id.clone(),
            target_layer: target.layer,
        });
    }
    Ok(())
}

/// Blocks are stored keyed by id but written as a list sorted by id.
mod blocks_as_list {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::BuildingBlock;

    pub fn serialize<S: Serializer>(blocks: &BTreeMap<String, BuildingBlock>, s: S) -> Result<S::Ok, S::Error> {
        let list: Vec<&BuildingBlock> = blocks.values().collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, BuildingBlock>, D::Error> {
        let list = Vec::<BuildingBlock>::deserialize(d)?;
        let mut map = BTreeMap::new();
        for block in list {
            let id = block.id.clone();
            if map.insert(id.clone(), block).is_some() {
                return Err(D::Error::custom(format!("duplicate block id `{id}`")));
            }
        }
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mowing() -> BuildingBlock {
        BuildingBlock::new("cap.mowing", "Mowing", BlockKind::Capability)
    }

    #[test]
    fn add_block_to_empty_model() {
        let m = Model::new("m").add_block(mowing()).unwrap();
        assert_eq!(m.blocks.len(), 1);
        assert_eq!(m.block("cap.mowing"), Some(&mowing()));
    }

    #[test]
    fn add_block_rejects_duplicate_id() {
        let m = Model::new("m").add_block(mowing()).unwrap();
        assert_eq!(
            m.add_block(mowing()).unwrap_err(),
            ModelError::DuplicateId("cap.mowing".into())
        );
    }

    #[test]
    fn add_block_grows_by_one() {
        let m = Model::new("m").add_block(mowing()).unwrap();
        let n = m
            .add_block(BuildingBlock::new("cap.mobility", "Mobility", BlockKind::Capability))
            .unwrap();
        assert_eq!(n.blocks.len(), m.blocks.len() + 1);
        assert!(n.connections.is_empty() && n.traces.is_empty());
    }

    #[test]
    fn add_block_rejects_inconsistent_layer() {
        let mut b = mowing();
        b.layer = ConcernLayer::Service;
        assert!(matches!(
            Model::new("m").add_block(b),
            Err(ModelError::InvalidBlock { .. })
        ));
    }

    #[test]
    fn add_block_rejects_duplicate_ports() {
        let b = BuildingBlock::new("svc", "S", BlockKind::Service)
            .provides("out", "A")
            .requires("out", "B");
        assert!(matches!(
            Model::new("m").add_block(b),
            Err(ModelError::DuplicatePortId { .. })
        ));
    }

    #[test]
    fn port_compatibility() {
        let l = ConcernLayer::Service;
        let p = Port::provided("a", "MowingService", l);
        let r = Port::required("b", "MowingService", l);
        assert!(port_compatible(&p, &r));
        assert!(!port_compatible(&p, &Port::required("c", "ObjectRecognition", l)));
        assert!(!port_compatible(&r, &r));
        assert!(!port_compatible(&r, &p));
    }

    fn trace_model() -> Model {
        let m = Model::new("m");
        let m = m.add_block(mowing()).unwrap();
        let m = m
            .add_block(BuildingBlock::new("cap.mobility", "Mobility", BlockKind::Capability))
            .unwrap();
        let m = m
            .add_block(BuildingBlock::new("res.robot", "mowing robot", BlockKind::ResourceConfiguration))
            .unwrap();
        let m = m
            .add_block(BuildingBlock::new("op.node", "mowing node", BlockKind::OperationalPerformer))
            .unwrap();
        m.add_block(BuildingBlock::new("act.mow", "mowing process", BlockKind::OperationalActivity))
            .unwrap()
    }

    #[test]
    fn add_trace_accepts_permitted_pairs() {
        let m = trace_model();
        let m = m
            .add_trace(TraceLink::new(TraceKind::Exhibits, "res.robot", "cap.mowing"))
            .unwrap();
        let m = m
            .add_trace(TraceLink::new(TraceKind::Performs, "op.node", "act.mow"))
            .unwrap();
        assert_eq!(m.traces.len(), 2);
    }

    #[test]
    fn add_trace_rejects_capability_exhibiting_capability() {
        let err = trace_model()
            .add_trace(TraceLink::new(TraceKind::Exhibits, "cap.mobility", "cap.mowing"))
            .unwrap_err();
        assert!(matches!(err, ModelError::IllegalTraceKind { kind: TraceKind::Exhibits, .. }));
    }

    #[test]
    fn add_trace_rejects_unknown_endpoint() {
        assert_eq!(
            trace_model()
                .add_trace(TraceLink::new(TraceKind::Exhibits, "nope", "cap.mowing"))
                .unwrap_err(),
            ModelError::UnknownElement("nope".into())
        );
    }

    #[test]
    fn permitted_table_has_seven_entries() {
        let kinds = [
            TraceKind::Exhibits,
            TraceKind::MapsTo,
            TraceKind::Performs,
            TraceKind::Implements,
        ];
        let mut n = 0;
        for k in kinds {
            for s in ConcernLayer::ALL {
                for t in ConcernLayer::ALL {
                    n += k.permits(s, t) as usize;
                }
            }
        }
        assert_eq!(n, 7);
    }

    #[test]
    fn kind_tokens_round_trip() {
        for k in BlockKind::ALL {
            assert_eq!(BlockKind::from_token(k.token()), Some(k));
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.token()));
        }
    }
}
