//! Native instance text format, ASP fact export and DOT rendering.
//!
//! The native format has one statement per line:
//!
//! ```text
//! vertex <name>
//! edge <src> <dst> <+|-|?>
//! obs <name> <+|->
//! input <name>
//! ```
//!
//! `?` marks an unlabeled edge and a token starting with `#` begins a
//! comment that runs to the end of the line.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::diagnose::merge_mics;
use crate::model::{is_valid_name, Instance, Mic, Sign, ValidatedInstance, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: syntax error: {message}")]
    SyntaxError { line: usize, message: String },
    #[error("line {line}: bad sign `{token}`")]
    BadSign { line: usize, token: String },
    #[error("line {line}: duplicate edge {src} -> {dst}")]
    DuplicateEdge {
        line: usize,
        src: String,
        dst: String,
    },
    #[error("line {line}: conflicting observation for `{name}`")]
    ConflictingObservation { line: usize, name: String },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::SyntaxError { line, .. }
            | ParseError::BadSign { line, .. }
            | ParseError::DuplicateEdge { line, .. }
            | ParseError::ConflictingObservation { line, .. } => *line,
        }
    }
}

fn statement_tokens(line: &str) -> Vec<&str> {
    line.split_whitespace()
        .take_while(|t| !t.starts_with('#'))
        .collect()
}

/// Parses the native format. Vertices referenced by `edge`, `obs` or
/// `input` statements are declared implicitly.
pub fn parse_instance(text: &str) -> Result<ValidatedInstance, ParseError> {
    let mut raw = Instance::new();
    let mut edge_lines: HashMap<(String, String), usize> = HashMap::new();
    let mut observations: HashMap<String, Sign> = HashMap::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let tokens = statement_tokens(line);
        let Some((&keyword, args)) = tokens.split_first() else {
            continue;
        };
        let syntax = |message: String| ParseError::SyntaxError {
            line: line_no,
            message,
        };
        let expected = match keyword {
            "vertex" | "input" => 1,
            "obs" => 2,
            "edge" => 3,
            other => return Err(syntax(format!("unknown statement `{other}`"))),
        };
        if args.len() != expected {
            return Err(syntax(format!(
                "`{keyword}` takes {expected} argument(s), found {}",
                args.len()
            )));
        }
        let names = if keyword == "edge" { &args[..2] } else { &args[..1] };
        if let Some(bad) = names.iter().find(|n| !is_valid_name(n)) {
            return Err(syntax(format!("invalid vertex name `{bad}`")));
        }

        match keyword {
            "vertex" => {
                raw.vertex(args[0]);
            }
            "input" => {
                raw.input(args[0]);
            }
            "obs" => {
                let sign = Sign::from_symbol(args[1]).ok_or_else(|| ParseError::BadSign {
                    line: line_no,
                    token: args[1].to_string(),
                })?;
                match observations.get(args[0]) {
                    Some(&prev) if prev != sign => {
                        return Err(ParseError::ConflictingObservation {
                            line: line_no,
                            name: args[0].to_string(),
                        })
                    }
                    Some(_) => {}
                    None => {
                        observations.insert(args[0].to_string(), sign);
                        raw.observe(args[0], sign);
                    }
                }
            }
            _ => {
                let sign = match args[2] {
                    "?" => None,
                    token => Some(Sign::from_symbol(token).ok_or_else(|| {
                        ParseError::BadSign {
                            line: line_no,
                            token: token.to_string(),
                        }
                    })?),
                };
                let key = (args[0].to_string(), args[1].to_string());
                if edge_lines.insert(key, line_no).is_some() {
                    return Err(ParseError::DuplicateEdge {
                        line: line_no,
                        src: args[0].to_string(),
                        dst: args[1].to_string(),
                    });
                }
                raw.edge(args[0], args[1], sign);
            }
        }
    }

    raw.declare_referenced();
    // Names, edges and observations were checked above.
    Ok(raw
        .validate()
        .expect("parsed instance satisfies the model invariants"))
}

/// Writes the canonical native text: all vertices, then edges, then
/// observations, then inputs, each block in canonical order.
pub fn write_instance(inst: &ValidatedInstance) -> String {
    let mut out = String::new();
    for v in inst.vertices() {
        let _ = writeln!(out, "vertex {}", inst.name(v));
    }
    for e in inst.edges() {
        let sign = e.sign.map_or('?', Sign::symbol);
        let _ = writeln!(out, "edge {} {} {}", inst.name(e.src), inst.name(e.dst), sign);
    }
    for v in inst.vertices() {
        if let Some(s) = inst.observation(v) {
            let _ = writeln!(out, "obs {} {}", inst.name(v), s);
        }
    }
    for v in inst.inputs() {
        let _ = writeln!(out, "input {}", inst.name(v));
    }
    out
}

/// Ground facts over `vertex/1`, `edge/2`, `observedV/2`, `observedE/3`
/// and `input/1`, with quoted vertex names and signs written `1`/`-1`.
pub fn export_asp_facts(inst: &ValidatedInstance) -> String {
    let q = |v: VertexId| format!("\"{}\"", inst.name(v));
    let mut out = String::new();
    for v in inst.vertices() {
        let _ = writeln!(out, "vertex({}).", q(v));
    }
    for e in inst.edges() {
        let _ = writeln!(out, "edge({},{}).", q(e.src), q(e.dst));
    }
    for v in inst.vertices() {
        if let Some(s) = inst.observation(v) {
            let _ = writeln!(out, "observedV({},{}).", q(v), s.as_int());
        }
    }
    for e in inst.edges() {
        if let Some(s) = e.sign {
            let _ = writeln!(out, "observedE({},{},{}).", q(e.src), q(e.dst), s.as_int());
        }
    }
    for v in inst.inputs() {
        let _ = writeln!(out, "input({}).", q(v));
    }
    out
}

fn dot_id(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\"))
}

/// Renders the instance as a Graphviz digraph.
///
/// Activations get normal arrowheads, inhibitions tee heads and unlabeled
/// edges are dashed. Observed increases are filled light gray, observed
/// decreases black with white text, inputs have dotted outlines and MIC
/// members bold ones. Vertices of the merged MIC neighbourhood are grouped
/// in a cluster.
pub fn export_dot(inst: &ValidatedInstance, mics: &[Mic]) -> String {
    let mut out = String::from("digraph {\n");
    let members: BTreeSet<VertexId> = mics.iter().flat_map(|m| m.members().iter().copied()).collect();

    for v in inst.vertices() {
        let mut styles = Vec::new();
        let mut attrs = Vec::new();
        match inst.observation(v) {
            Some(Sign::Plus) => {
                styles.push("filled");
                attrs.push("fillcolor=lightgray".to_string());
            }
            Some(Sign::Minus) => {
                styles.push("filled");
                attrs.push("fillcolor=black".to_string());
                attrs.push("fontcolor=white".to_string());
            }
            None => {}
        }
        if inst.is_input(v) {
            styles.push("dotted");
        }
        if members.contains(&v) {
            styles.push("bold");
            attrs.push("penwidth=2.5".to_string());
        }
        if !styles.is_empty() {
            attrs.insert(0, format!("style=\"{}\"", styles.join(",")));
        }
        if attrs.is_empty() {
            let _ = writeln!(out, "  {};", dot_id(inst.name(v)));
        } else {
            let _ = writeln!(out, "  {} [{}];", dot_id(inst.name(v)), attrs.join(", "));
        }
    }

    for e in inst.edges() {
        let attr = match e.sign {
            Some(Sign::Plus) => "arrowhead=normal",
            Some(Sign::Minus) => "arrowhead=tee",
            None => "style=dashed",
        };
        let _ = writeln!(
            out,
            "  {} -> {} [{}];",
            dot_id(inst.name(e.src)),
            dot_id(inst.name(e.dst)),
            attr
        );
    }

    if !mics.is_empty() {
        let merged = merge_mics(inst, mics);
        out.push_str("  subgraph cluster_mics {\n    label=\"MICs\";\n    style=dashed;\n");
        for v in &merged.vertices {
            let _ = writeln!(out, "    {};", dot_id(inst.name(*v)));
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}
