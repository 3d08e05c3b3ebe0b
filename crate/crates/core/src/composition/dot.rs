use std::fmt::Write as _;

use super::{Relation, TraceTree, View};
use crate::model::Model;

/// Graphviz rendering.
pub trait DotGraph {
    fn to_dot(&self) -> String;
}

pub fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

/// A view paired with the model it was taken from, for node labels.
pub struct ViewGraph<'a> {
    pub view: &'a View,
    pub model: &'a Model,
}

impl View {
    pub fn dot<'a>(&'a self, model: &'a Model) -> ViewGraph<'a> {
        ViewGraph { view: self, model }
    }
}

impl DotGraph for ViewGraph<'_> {
    fn to_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", escape_dot(&self.view.viewpoint.name));
        out.push_str("  rankdir=LR;\n  node [shape=box];\n");
        let label = |id: &str| {
            self.model
                .block(id)
                .map(|b| format!("{}\\n«{}»", escape_dot(&b.name), b.kind))
                .unwrap_or_else(|| escape_dot(id))
        };
        for id in &self.view.elements {
            let _ = writeln!(out, "  \"{}\" [label=\"{}\"];", escape_dot(id), label(id));
        }
        for id in &self.view.context {
            let _ = writeln!(out, "  \"{}\" [label=\"{}\", style=dashed];", escape_dot(id), label(id));
        }
        for rel in &self.view.relations {
            match rel {
                Relation::Connection(c) => {
                    let ty = self
                        .model
                        .port(&c.from)
                        .map(|p| p.interface_type.as_str())
                        .unwrap_or("");
                    let _ = writeln!(
                        out,
                        "  \"{}\" -> \"{}\" [label=\"{}\"];",
                        escape_dot(&c.from.block),
                        escape_dot(&c.to.block),
                        escape_dot(ty)
                    );
                }
                Relation::Trace(t) => {
                    let _ = writeln!(
                        out,
                        "  \"{}\" -> \"{}\" [label=\"{}\", style=dashed];",
                        escape_dot(&t.source),
                        escape_dot(&t.target),
                        t.kind
                    );
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

impl DotGraph for TraceTree {
    fn to_dot(&self) -> String {
        fn walk(t: &TraceTree, out: &mut String) {
            let _ = writeln!(out, "  \"{}\";", escape_dot(&t.id));
            for c in &t.children {
                let _ = writeln!(
                    out,
                    "  \"{}\" -> \"{}\" [label=\"{}\"];",
                    escape_dot(&t.id),
                    escape_dot(&c.id),
                    c.via.map(|k| k.token()).unwrap_or("")
                );
                walk(c, out);
            }
        }
        let mut out = format!("digraph \"trace_{}\" {{\n", escape_dot(&self.id));
        walk(self, &mut out);
        out.push_str("}\n");
        out
    }
}
