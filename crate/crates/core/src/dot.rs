//! Graphviz rendering of an argument graph.

use std::fmt::Write;

use crate::argcore::{ArgumentGraph, DegreeAssignment, Polarity};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT text for `graph`. Each argument is a node labelled with its id, τ
/// and degree (`f=?` while degrees are stale) and clustered under its
/// option. Support edges are solid, attack edges dashed.
pub fn to_dot(graph: &ArgumentGraph, degrees: Option<&DegreeAssignment>) -> String {
    let mut out = String::from("digraph arguments {\n  rankdir=LR;\n  node [shape=box];\n");
    for (i, option) in graph.options().enumerate() {
        let score = degrees
            .and_then(|d| d.score(&option.option_id))
            .map_or("?".to_string(), |s| format!("{s:.3}"));
        let _ = writeln!(out, "  subgraph cluster_{i} {{");
        let _ = writeln!(out, "    label={};", quote(&format!("{} (F={score})", option.option_id)));
        for arg in graph.arguments().filter(|a| a.target_option == option.option_id) {
            let f = degrees
                .and_then(|d| d.degree(&arg.arg_id))
                .map_or("?".to_string(), |f| format!("{f:.3}"));
            let label = format!("{}\\nτ={:.3}, f={f}", arg.arg_id, arg.tau);
            let _ = writeln!(
                out,
                "    {} [label=\"{}\", style={}];",
                quote(arg.arg_id.as_str()),
                label.replace('"', "\\\""),
                if arg.stance == crate::argcore::Stance::Support { "solid" } else { "rounded" },
            );
        }
        out.push_str("  }\n");
    }
    for rel in graph.relations() {
        let style = match rel.polarity {
            Polarity::Support => "solid",
            Polarity::Attack => "dashed",
        };
        let _ = writeln!(
            out,
            "  {} -> {} [style={style}, label=\"{}\"];",
            quote(rel.source.as_str()),
            quote(rel.target.as_str()),
            rel.weight
        );
    }
    out.push_str("}\n");
    out
}
