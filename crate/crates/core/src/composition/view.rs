use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::CompositionError;
use crate::model::{Aspect, ConcernLayer, Connection, Model, TraceKind, TraceLink};

/// A (subject layer, aspect) lens on a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Viewpoint {
    pub subject: ConcernLayer,
    pub aspect: Aspect,
    pub name: String,
}

impl Viewpoint {
    pub fn new(subject: ConcernLayer, aspect: Aspect) -> Self {
        Viewpoint {
            subject,
            aspect,
            name: format!("{}_{}", subject.token(), aspect.token()),
        }
    }
}

/// Capabilities carry no behavior.
pub fn viewpoint_valid(viewpoint: &Viewpoint) -> bool {
    !(viewpoint.subject == ConcernLayer::Strategic && viewpoint.aspect == Aspect::Behavior)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Relation {
    Connection(Connection),
    Trace(TraceLink),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct View {
    pub viewpoint: Viewpoint,
    /// Blocks of the subject layer selected by the aspect, sorted.
    pub elements: Vec<String>,
    /// Blocks on other layers that the selected trace relations lead to.
    pub context: Vec<String>,
    pub relations: Vec<Relation>,
}

impl View {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "view {} ({}, {})\n",
            self.viewpoint.name, self.viewpoint.subject, self.viewpoint.aspect
        );
        out.push_str("elements:\n");
        for id in &self.elements {
            out.push_str(&format!("  {id}\n"));
        }
        if !self.context.is_empty() {
            out.push_str("context:\n");
            for id in &self.context {
                out.push_str(&format!("  {id}\n"));
            }
        }
        if !self.relations.is_empty() {
            out.push_str("relations:\n");
            for r in &self.relations {
                match r {
                    Relation::Connection(c) => out.push_str(&format!("  {} -> {}\n", c.from, c.to)),
                    Relation::Trace(t) => out.push_str(&format!("  {} {} -> {}\n", t.kind, t.source, t.target)),
                }
            }
        }
        out
    }
}

/// Selects the subject-layer blocks and the relations the aspect cares about:
///
/// | aspect       | elements                     | relations                          |
/// |--------------|------------------------------|------------------------------------|
/// | structure    | subject-layer blocks         | connections among them             |
/// | parameters   | those carrying parameters    | none                               |
/// | requirements | subject-layer blocks         | incident `maps_to`/`exhibits`      |
/// | behavior     | subject-layer blocks         | incident `performs`/`implements`   |
pub fn extract_view(model: &Model, viewpoint: &Viewpoint) -> Result<View, CompositionError> {
    if !viewpoint_valid(viewpoint) {
        return Err(CompositionError::InvalidViewpoint {
            subject: viewpoint.subject,
            aspect: viewpoint.aspect,
        });
    }
    let in_layer = model.blocks.values().filter(|b| b.layer == viewpoint.subject);
    let elements: BTreeSet<String> = match viewpoint.aspect {
        Aspect::Parameters => in_layer.filter(|b| !b.parameters.is_empty()).map(|b| b.id.clone()).collect(),
        _ => in_layer.map(|b| b.id.clone()).collect(),
    };

    let mut relations = Vec::new();
    let mut context = BTreeSet::new();
    let trace_kinds: &[TraceKind] = match viewpoint.aspect {
        Aspect::Structure => {
            relations.extend(
                model
                    .connections
                    .iter()
                    .filter(|c| elements.contains(&c.from.block) && elements.contains(&c.to.block))
                    .cloned()
                    .map(Relation::Connection),
            );
            &[]
        }
        Aspect::Parameters => &[],
        Aspect::Requirements => &[TraceKind::MapsTo, TraceKind::Exhibits],
        Aspect::Behavior => &[TraceKind::Performs, TraceKind::Implements],
    };
    for t in model.traces.iter().filter(|t| trace_kinds.contains(&t.kind)) {
        let (s, d) = (elements.contains(&t.source), elements.contains(&t.target));
        if !(s || d) {
            continue;
        }
        for end in [&t.source, &t.target] {
            if !elements.contains(end) && model.block(end).is_some() {
                context.insert(end.clone());
            }
        }
        relations.push(Relation::Trace(t.clone()));
    }
    relations.sort();

    Ok(View {
        viewpoint: viewpoint.clone(),
        elements: elements.into_iter().collect(),
        context: context.into_iter().collect(),
        relations,
    })
}
