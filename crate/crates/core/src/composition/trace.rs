use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::CompositionError;
use crate::model::{BlockKind, ConcernLayer, Model, TraceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceDirection {
    /// source -> target, toward the strategic layer
    Up,
    /// target -> source, toward the resource layer
    Down,
}

/// Breadth-first trace tree. Each block appears at most once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceTree {
    pub id: String,
    /// Link kind connecting this node to its parent; `None` at the root.
    pub via: Option<TraceKind>,
    pub children: Vec<TraceTree>,
}

impl TraceTree {
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(TraceTree::node_count).sum::<usize>()
    }

    /// One node per line, indented by depth, with the link kind that led
    /// there in brackets.
    pub fn to_text(&self) -> String {
        fn walk(t: &TraceTree, depth: usize, out: &mut String) {
            let indent = "  ".repeat(depth);
            match t.via {
                Some(kind) => out.push_str(&format!("{indent}[{kind}] {}\n", t.id)),
                None => out.push_str(&format!("{indent}{}\n", t.id)),
            }
            for c in &t.children {
                walk(c, depth + 1, out);
            }
        }
        let mut out = String::new();
        walk(self, 0, &mut out);
        out
    }

    /// Depth-first, pre-order ids.
    pub fn ids(&self) -> Vec<&str> {
        let mut out = vec![self.id.as_str()];
        for c in &self.children {
            out.extend(c.ids());
        }
        out
    }
}

/// Neighbours of `id` along trace links in the given direction, sorted by id.
/// If several links join the same pair the smallest kind is reported.
fn step(model: &Model, id: &str, direction: TraceDirection) -> BTreeMap<String, TraceKind> {
    let mut next: BTreeMap<String, TraceKind> = BTreeMap::new();
    for t in &model.traces {
        let hop = match direction {
            TraceDirection::Up if t.source == id => &t.target,
            TraceDirection::Down if t.target == id => &t.source,
            _ => continue,
        };
        next.entry(hop.clone())
            .and_modify(|k| *k = (*k).min(t.kind))
            .or_insert(t.kind);
    }
    next
}

/// Breadth-first parent map from `root`.
fn bfs(model: &Model, root: &str, direction: TraceDirection) -> (Vec<String>, BTreeMap<String, (String, TraceKind)>) {
    let mut order = vec![root.to_string()];
    let mut parent = BTreeMap::new();
    let mut seen = BTreeSet::from([root.to_string()]);
    let mut queue = VecDeque::from([root.to_string()]);
    while let Some(cur) = queue.pop_front() {
        for (next, kind) in step(model, &cur, direction) {
            if model.block(&next).is_none() || !seen.insert(next.clone()) {
                continue;
            }
            parent.insert(next.clone(), (cur.clone(), kind));
            order.push(next.clone());
            queue.push_back(next);
        }
    }
    (order, parent)
}

/// Follows trace links from `element_id`. Up walks source→target, Down walks
/// target→source.
pub fn trace(model: &Model, element_id: &str, direction: TraceDirection) -> Result<TraceTree, CompositionError> {
    model
        .block(element_id)
        .ok_or_else(|| CompositionError::UnknownElement(element_id.to_string()))?;
    let (order, parent) = bfs(model, element_id, direction);

    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for id in order.iter().skip(1) {
        children.entry(parent[id].0.as_str()).or_default().push(id);
    }
    fn build(id: &str, via: Option<TraceKind>, children: &BTreeMap<&str, Vec<&str>>, parent: &BTreeMap<String, (String, TraceKind)>) -> TraceTree {
        let mut kids: Vec<&str> = children.get(id).cloned().unwrap_or_default();
        kids.sort();
        TraceTree {
            id: id.to_string(),
            via,
            children: kids
                .into_iter()
                .map(|k| build(k, Some(parent[k].1), children, parent))
                .collect(),
        }
    }
    Ok(build(element_id, None, &children, &parent))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CoverageStatus {
    Uncovered,
    PartiallyCovered,
    Covered,
}

impl CoverageStatus {
    pub fn label(self) -> &'static str {
        match self {
            CoverageStatus::Covered => "covered",
            CoverageStatus::PartiallyCovered => "partially_covered",
            CoverageStatus::Uncovered => "uncovered",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapabilityCoverage {
    pub capability: String,
    pub status: CoverageStatus,
    /// Trace paths from the capability down to each realizing block of the
    /// deciding layer (resource blocks when covered, operational/service
    /// blocks when partially covered).
    pub witnesses: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoverageReport {
    pub capabilities: Vec<CapabilityCoverage>,
}

impl CoverageReport {
    pub fn status(&self, capability: &str) -> Option<CoverageStatus> {
        self.capabilities
            .iter()
            .find(|c| c.capability == capability)
            .map(|c| c.status)
    }

    pub fn all_covered(&self) -> bool {
        self.capabilities.iter().all(|c| c.status == CoverageStatus::Covered)
    }

    /// `capability,status`, one row per capability.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("capability,status\n");
        for c in &self.capabilities {
            out.push_str(&format!("{},{}\n", c.capability, c.status.label()));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.capabilities {
            out.push_str(&format!("{}\t{}\n", c.capability, c.status.label()));
            for w in &c.witnesses {
                out.push_str(&format!("  {}\n", w.join(" <- ")));
            }
        }
        out
    }
}

/// Status of every capability given the trace chains that reach it.
pub fn capability_coverage(model: &Model) -> CoverageReport {
    let capabilities = model
        .blocks
        .values()
        .filter(|b| b.kind == BlockKind::Capability)
        .map(|cap| {
            let (order, parent) = bfs(model, &cap.id, TraceDirection::Down);
            let layer_of = |id: &str| model.blocks[id].layer;
            let resources: Vec<&String> = order
                .iter()
                .skip(1)
                .filter(|id| layer_of(id) == ConcernLayer::Resource)
                .collect();
            let partial: Vec<&String> = order
                .iter()
                .skip(1)
                .filter(|id| matches!(layer_of(id), ConcernLayer::Operational | ConcernLayer::Service))
                .collect();
            let (status, ends) = if !resources.is_empty() {
                (CoverageStatus::Covered, resources)
            } else if !partial.is_empty() {
                (CoverageStatus::PartiallyCovered, partial)
            } else {
                (CoverageStatus::Uncovered, Vec::new())
            };
            let mut witnesses: Vec<Vec<String>> = ends
                .into_iter()
                .map(|end| {
                    let mut chain = vec![end.clone()];
                    let mut cur = end;
                    while let Some((p, _)) = parent.get(cur) {
                        chain.push(p.clone());
                        cur = p;
                    }
                    chain.reverse();
                    chain
                })
                .collect();
            witnesses.sort();
            CapabilityCoverage {
                capability: cap.id.clone(),
                status,
                witnesses,
            }
        })
        .collect();
    CoverageReport { capabilities }
}
