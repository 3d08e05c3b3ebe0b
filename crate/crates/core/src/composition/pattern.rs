use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::CompositionError;
use crate::model::{check_trace, port_compatible, BlockKind, BuildingBlock, ConcernLayer, Connection, Model, PortRef, TraceLink};

/// A placeholder for a block the pattern expects to find in the target
/// model. Pattern connections and traces may reference anchors by id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchor {
    pub id: String,
    pub layer: ConcernLayer,
    pub kind: BlockKind,
}

/// A self-contained sub-model template merged into models on application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PatternRecord")]
pub struct Pattern {
    pub id: String,
    pub anchors: Vec<Anchor>,
    pub blocks: Vec<BuildingBlock>,
    pub connections: Vec<Connection>,
    pub traces: Vec<TraceLink>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternRecord {
    id: String,
    #[serde(default)]
    anchors: Vec<Anchor>,
    #[serde(default)]
    blocks: Vec<BuildingBlock>,
    #[serde(default)]
    connections: Vec<Connection>,
    #[serde(default)]
    traces: Vec<TraceLink>,
}

impl TryFrom<PatternRecord> for Pattern {
    type Error = CompositionError;

    fn try_from(r: PatternRecord) -> Result<Self, Self::Error> {
        let p = Pattern {
            id: r.id,
            anchors: r.anchors,
            blocks: r.blocks,
            connections: r.connections,
            traces: r.traces,
        };
        p.check()?;
        Ok(p.canonical())
    }
}

/// How `apply_pattern` treats a pattern block whose id already exists in the
/// model with different content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergeMode {
    #[default]
    Strict,
    /// The pattern's version replaces the model's.
    ForceTheirs,
}

impl Pattern {
    pub fn new(id: impl Into<String>) -> Self {
        Pattern {
            id: id.into(),
            anchors: Vec::new(),
            blocks: Vec::new(),
            connections: Vec::new(),
            traces: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty() && self.connections.is_empty() && self.traces.is_empty()
    }

    /// Internal validity: unique ids, and every endpoint resolves to a pattern
    /// block or a declared anchor.
    pub fn check(&self) -> Result<(), CompositionError> {
        let invalid = |reason: String| CompositionError::InvalidPattern {
            pattern: self.id.clone(),
            reason,
        };
        let mut layers: BTreeMap<&str, ConcernLayer> = BTreeMap::new();
        for a in &self.anchors {
            if a.kind.layer() != a.layer {
                return Err(invalid(format!("anchor `{}` has kind {} on layer {}", a.id, a.kind, a.layer)));
            }
            if layers.insert(&a.id, a.layer).is_some() {
                return Err(invalid(format!("duplicate id `{}`", a.id)));
            }
        }
        for b in &self.blocks {
            b.check()?;
            if layers.insert(&b.id, b.layer).is_some() {
                return Err(invalid(format!("duplicate id `{}`", b.id)));
            }
        }
        let internal: BTreeMap<&str, &BuildingBlock> = self.blocks.iter().map(|b| (b.id.as_str(), b)).collect();
        for c in &self.connections {
            for end in [&c.from, &c.to] {
                if !layers.contains_key(end.block.as_str()) {
                    return Err(invalid(format!("connection endpoint `{end}` is neither a block nor an anchor")));
                }
            }
            if let (Some(p), Some(r)) = (internal.get(c.from.block.as_str()), internal.get(c.to.block.as_str())) {
                match (p.port(&c.from.port), r.port(&c.to.port)) {
                    (Some(pp), Some(rp)) if port_compatible(pp, rp) => {}
                    (Some(_), Some(_)) => {
                        return Err(CompositionError::TypeMismatch {
                            provided: c.from.clone(),
                            required: c.to.clone(),
                        })
                    }
                    _ => return Err(invalid(format!("connection {} -> {} names an unknown port", c.from, c.to))),
                }
            }
        }
        for t in &self.traces {
            let (Some(&s), Some(&d)) = (layers.get(t.source.as_str()), layers.get(t.target.as_str())) else {
                return Err(invalid(format!(
                    "trace {} -> {} leaves the pattern and its anchors",
                    t.source, t.target
                )));
            };
            if !t.kind.permits(s, d) {
                return Err(invalid(format!("trace {} {} -> {} is not permitted", t.kind, t.source, t.target)));
            }
        }
        Ok(())
    }

    pub fn canonical(mut self) -> Self {
        self.anchors.sort_by(|a, b| a.id.cmp(&b.id));
        self.blocks = self.blocks.into_iter().map(BuildingBlock::canonical).collect();
        self.blocks.sort_by(|a, b| a.id.cmp(&b.id));
        self.connections.sort();
        self.connections.dedup();
        self.traces.sort();
        self.traces.dedup();
        self
    }
}

/// Merges `pattern` into `model`, substituting anchors by the model blocks
/// they are bound to.
///
/// Blocks already present with identical content are kept as they are, so
/// applying the same pattern twice equals applying it once. A block with the
/// same id but different content is a [`CompositionError::MergeConflict`] in
/// [`MergeMode::Strict`]; in [`MergeMode::ForceTheirs`] the pattern block
/// replaces it (and a pattern connection displaces an existing binding of the
/// same required port).
pub fn apply_pattern(
    model: &Model,
    pattern: &Pattern,
    bindings: &BTreeMap<String, String>,
    mode: MergeMode,
) -> Result<Model, CompositionError> {
    pattern.check()?;

    let mut resolved: BTreeMap<&str, &str> = BTreeMap::new();
    for anchor in &pattern.anchors {
        let target = bindings
            .get(&anchor.id)
            .ok_or_else(|| CompositionError::AnchorUnbound(anchor.id.clone()))?;
        let block = model
            .block(target)
            .ok_or_else(|| CompositionError::UnknownElement(target.clone()))?;
        if block.kind != anchor.kind || block.layer != anchor.layer {
            return Err(CompositionError::AnchorKindMismatch {
                anchor: anchor.id.clone(),
                block: target.clone(),
                expected_kind: anchor.kind,
                found_kind: block.kind,
            });
        }
        resolved.insert(&anchor.id, target);
    }
    let subst = |id: &str| resolved.get(id).map(|s| s.to_string()).unwrap_or_else(|| id.to_string());

    let mut next = model.clone();
    for block in pattern.blocks.iter().cloned().map(BuildingBlock::canonical) {
        match next.blocks.get(&block.id) {
            Some(existing) if *existing == block => {}
            Some(_) if mode == MergeMode::Strict => return Err(CompositionError::MergeConflict(block.id)),
            _ => {
                next.blocks.insert(block.id.clone(), block);
            }
        }
    }

    for c in &pattern.connections {
        let conn = Connection {
            from: PortRef::new(subst(&c.from.block), &c.from.port),
            to: PortRef::new(subst(&c.to.block), &c.to.port),
        };
        if next.connections.contains(&conn) {
            continue;
        }
        let p = next
            .port(&conn.from)
            .ok_or_else(|| CompositionError::UnknownElement(conn.from.to_string()))?;
        let r = next
            .port(&conn.to)
            .ok_or_else(|| CompositionError::UnknownElement(conn.to.to_string()))?;
        if !port_compatible(p, r) {
            return Err(CompositionError::TypeMismatch {
                provided: conn.from,
                required: conn.to,
            });
        }
        let clashing: BTreeSet<Connection> = next.connections.iter().filter(|e| e.to == conn.to).cloned().collect();
        if !clashing.is_empty() {
            if mode == MergeMode::Strict {
                return Err(CompositionError::MergeConflict(conn.to.to_string()));
            }
            next.connections.retain(|e| !clashing.contains(e));
        }
        next.connections.insert(conn);
    }

    for t in &pattern.traces {
        let link = TraceLink::new(t.kind, subst(&t.source), subst(&t.target));
        check_trace(&next, &link)?;
        next.traces.insert(link);
    }
    Ok(next)
}
