use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use roxmltree::{Document, Node};

use super::{
    BehaviorGraph, Evaluation, GraphLink, GraphNode, MatchPattern, PatternKind, SkillDef,
    SkillParams, StepMatcher,
};

/// Errors raised while reading a `.brd.xml` document.
///
/// Every variant carries the 1-based line of the offending element.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("line {line}, column {column}: malformed XML: {message}")]
    MalformedXml {
        line: u32,
        column: u32,
        message: String,
    },
    #[error("line {line}, <{element}>: {message}")]
    SchemaViolation {
        line: u32,
        element: String,
        message: String,
    },
    #[error("line {line}, <{element}> {id:?}: reference to undefined {kind} {reference:?}")]
    DanglingReference {
        line: u32,
        element: String,
        id: String,
        kind: &'static str,
        reference: String,
    },
    #[error("line {line}, <{element}>: duplicate id {id:?}")]
    DuplicateId {
        line: u32,
        element: String,
        id: String,
    },
    #[error("line {line}: {message}")]
    NoStartNode { line: u32, message: String },
}

impl GraphError {
    pub fn line(&self) -> u32 {
        match self {
            GraphError::MalformedXml { line, .. }
            | GraphError::SchemaViolation { line, .. }
            | GraphError::DanglingReference { line, .. }
            | GraphError::DuplicateId { line, .. }
            | GraphError::NoStartNode { line, .. } => *line,
        }
    }
}

struct Ctx<'a> {
    doc: &'a Document<'a>,
}

impl<'a> Ctx<'a> {
    fn line(&self, node: Node) -> u32 {
        self.doc.text_pos_at(node.range().start).row
    }

    fn schema(&self, node: Node, message: impl Into<String>) -> GraphError {
        GraphError::SchemaViolation {
            line: self.line(node),
            element: node.tag_name().name().to_string(),
            message: message.into(),
        }
    }

    fn check_attrs(&self, node: Node, allowed: &[&str]) -> Result<(), GraphError> {
        for attr in node.attributes() {
            if attr.namespace().is_some() || !allowed.contains(&attr.name()) {
                return Err(self.schema(node, format!("unknown attribute {:?}", attr.name())));
            }
        }
        Ok(())
    }

    fn required<'n>(&self, node: Node<'n, 'n>, name: &str) -> Result<&'n str, GraphError> {
        node.attribute(name)
            .ok_or_else(|| self.schema(node, format!("missing attribute {name:?}")))
    }

    fn non_empty<'n>(&self, node: Node<'n, 'n>, name: &str) -> Result<&'n str, GraphError> {
        let value = self.required(node, name)?;
        if value.is_empty() {
            return Err(self.schema(node, format!("attribute {name:?} must not be empty")));
        }
        Ok(value)
    }

    fn probability(&self, node: Node, name: &str, default: f64) -> Result<f64, GraphError> {
        match node.attribute(name) {
            None => Ok(default),
            Some(raw) => match raw.trim().parse::<f64>() {
                Ok(p) if (0.0..=1.0).contains(&p) => Ok(p),
                _ => Err(self.schema(
                    node,
                    format!("{name} must be a probability in [0,1], got {raw:?}"),
                )),
            },
        }
    }
}

fn elements<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(|c| c.is_element())
}

/// Parses a behavior graph document.
///
/// Link `document_order` is assigned from file order. The returned graph
/// satisfies every structural invariant; tutoring readiness (reachability,
/// hints, parameter sanity) is checked separately by `validate_graph`.
pub fn parse_graph(xml_text: &str) -> Result<BehaviorGraph, GraphError> {
    let doc = Document::parse(xml_text).map_err(|e| {
        let pos = e.pos();
        GraphError::MalformedXml {
            line: pos.row,
            column: pos.col,
            message: e.to_string(),
        }
    })?;
    let cx = Ctx { doc: &doc };
    let root = doc.root_element();
    if root.tag_name().name() != "graph" || root.tag_name().namespace().is_some() {
        return Err(cx.schema(root, "root element must be <graph>"));
    }
    cx.check_attrs(root, &["id", "title", "start"])?;
    let id = cx.non_empty(root, "id")?.to_string();
    let title = root.attribute("title").unwrap_or_default().to_string();

    let mut skills: Vec<SkillDef> = Vec::new();
    let mut nodes: Vec<GraphNode> = Vec::new();
    let mut links: Vec<GraphLink> = Vec::new();
    let mut link_lines: Vec<u32> = Vec::new();
    let mut groups: Vec<(BTreeSet<String>, Node)> = Vec::new();

    for child in elements(root) {
        match child.tag_name().name() {
            "skill" => {
                cx.check_attrs(
                    child,
                    &["name", "label", "p-init", "p-transit", "p-slip", "p-guess"],
                )?;
                let name = cx.non_empty(child, "name")?.to_string();
                if skills.iter().any(|s| s.name == name) {
                    return Err(GraphError::DuplicateId {
                        line: cx.line(child),
                        element: "skill".into(),
                        id: name,
                    });
                }
                let params = SkillParams {
                    p_init: cx.probability(child, "p-init", super::DEFAULT_P_INIT)?,
                    p_transit: cx.probability(child, "p-transit", super::DEFAULT_P_TRANSIT)?,
                    p_slip: cx.probability(child, "p-slip", super::DEFAULT_P_SLIP)?,
                    p_guess: cx.probability(child, "p-guess", super::DEFAULT_P_GUESS)?,
                };
                no_children(&cx, child)?;
                skills.push(SkillDef {
                    label: child.attribute("label").unwrap_or(&name).to_string(),
                    name,
                    params,
                });
            }
            "node" => {
                cx.check_attrs(child, &["id", "label"])?;
                let node_id = cx.non_empty(child, "id")?.to_string();
                if nodes.iter().any(|n| n.id == node_id) {
                    return Err(GraphError::DuplicateId {
                        line: cx.line(child),
                        element: "node".into(),
                        id: node_id,
                    });
                }
                no_children(&cx, child)?;
                nodes.push(GraphNode {
                    label: child.attribute("label").unwrap_or_default().to_string(),
                    id: node_id,
                });
            }
            "link" => {
                let link = parse_link(&cx, child, links.len())?;
                if links.iter().any(|l| l.id == link.id) {
                    return Err(GraphError::DuplicateId {
                        line: cx.line(child),
                        element: "link".into(),
                        id: link.id,
                    });
                }
                link_lines.push(cx.line(child));
                links.push(link);
            }
            "group" => {
                cx.check_attrs(child, &["links"])?;
                let members: Vec<&str> = cx.required(child, "links")?.split_whitespace().collect();
                if members.is_empty() {
                    return Err(cx.schema(child, "group must name at least one link"));
                }
                let set: BTreeSet<String> = members.iter().map(|s| s.to_string()).collect();
                if set.len() != members.len() {
                    return Err(cx.schema(child, "group lists a link more than once"));
                }
                no_children(&cx, child)?;
                groups.push((set, child));
            }
            other => {
                return Err(cx.schema(child, format!("unknown element <{other}> inside <graph>")))
            }
        }
    }

    let start_node = match root.attribute("start") {
        None => {
            return Err(GraphError::NoStartNode {
                line: cx.line(root),
                message: "<graph> has no start attribute".into(),
            })
        }
        Some(s) if !nodes.iter().any(|n| n.id == s) => {
            return Err(GraphError::NoStartNode {
                line: cx.line(root),
                message: format!("start node {s:?} is not defined"),
            })
        }
        Some(s) => s.to_string(),
    };

    let node_ids: HashSet<&str> = nodes.iter().map(|n| n.id.as_str()).collect();
    let skill_names: HashSet<&str> = skills.iter().map(|s| s.name.as_str()).collect();
    for (link, &line) in links.iter().zip(&link_lines) {
        let dangling = |kind: &'static str, reference: &str| GraphError::DanglingReference {
            line,
            element: "link".into(),
            id: link.id.clone(),
            kind,
            reference: reference.to_string(),
        };
        for endpoint in [&link.source, &link.target] {
            if !node_ids.contains(endpoint.as_str()) {
                return Err(dangling("node", endpoint));
            }
        }
        if let Some(skill) = link
            .skills
            .iter()
            .find(|s| !skill_names.contains(s.as_str()))
        {
            return Err(dangling("skill", skill));
        }
    }

    let link_ids: HashSet<&str> = links.iter().map(|l| l.id.as_str()).collect();
    let mut grouped: HashMap<&str, usize> = HashMap::new();
    for (gi, (set, node)) in groups.iter().enumerate() {
        for member in set {
            if !link_ids.contains(member.as_str()) {
                return Err(GraphError::DanglingReference {
                    line: cx.line(*node),
                    element: "group".into(),
                    id: format!("group {}", gi + 1),
                    kind: "link",
                    reference: member.clone(),
                });
            }
            if grouped.insert(member, gi).is_some() {
                return Err(cx.schema(
                    *node,
                    format!("link {member:?} belongs to more than one group"),
                ));
            }
        }
    }
    let unordered_groups = groups.into_iter().map(|(set, _)| set).collect();

    Ok(BehaviorGraph {
        id,
        title,
        start_node,
        nodes,
        links,
        skills,
        unordered_groups,
    })
}

fn no_children(cx: &Ctx, node: Node) -> Result<(), GraphError> {
    if let Some(child) = elements(node).next() {
        return Err(cx.schema(
            child,
            format!("unexpected element inside <{}>", node.tag_name().name()),
        ));
    }
    Ok(())
}

fn parse_link(cx: &Ctx, node: Node, order: usize) -> Result<GraphLink, GraphError> {
    cx.check_attrs(node, &["id", "source", "target", "evaluation", "buggy"])?;
    let id = cx.non_empty(node, "id")?.to_string();
    let source = cx.non_empty(node, "source")?.to_string();
    let target = cx.non_empty(node, "target")?.to_string();
    let evaluation = match node.attribute("evaluation") {
        None => Evaluation::Correct,
        Some(raw) => Evaluation::parse(raw)
            .ok_or_else(|| cx.schema(node, format!("unknown evaluation {raw:?}")))?,
    };
    if evaluation == Evaluation::Incorrect && source != target {
        return Err(cx.schema(
            node,
            format!("incorrect link {id:?} must loop back to its source"),
        ));
    }

    let mut matcher = None;
    let mut hints = Vec::new();
    let mut skills: Vec<String> = Vec::new();
    for child in elements(node) {
        match child.tag_name().name() {
            "matcher" => {
                if matcher.is_some() {
                    return Err(cx.schema(child, "link has more than one <matcher>"));
                }
                cx.check_attrs(child, &["selection", "action", "input", "match"])?;
                let selection = cx.non_empty(child, "selection")?;
                let action = cx.non_empty(child, "action")?;
                let input = child.attribute("input").unwrap_or_default();
                let kind = match child.attribute("match") {
                    None => PatternKind::Exact,
                    Some(raw) => PatternKind::parse(raw)
                        .ok_or_else(|| cx.schema(child, format!("unknown match kind {raw:?}")))?,
                };
                let pattern =
                    MatchPattern::new(kind, input).map_err(|e| cx.schema(child, e.to_string()))?;
                no_children(cx, child)?;
                matcher = Some(StepMatcher::new(selection, action, pattern));
            }
            "hint" => {
                cx.check_attrs(child, &[])?;
                no_children(cx, child)?;
                let text = child.text().map(str::trim).unwrap_or_default();
                if text.is_empty() {
                    return Err(cx.schema(child, "empty hint"));
                }
                hints.push(text.to_string());
            }
            "skill" => {
                cx.check_attrs(child, &["name"])?;
                no_children(cx, child)?;
                let name = cx.non_empty(child, "name")?.to_string();
                if skills.contains(&name) {
                    return Err(cx.schema(child, format!("skill {name:?} listed twice on link")));
                }
                skills.push(name);
            }
            other => {
                return Err(cx.schema(child, format!("unknown element <{other}> inside <link>")))
            }
        }
    }
    let matcher =
        matcher.ok_or_else(|| cx.schema(node, format!("link {id:?} has no <matcher>")))?;
    Ok(GraphLink {
        id,
        source,
        target,
        matcher,
        evaluation,
        hints,
        buggy_message: node.attribute("buggy").map(str::to_string),
        skills,
        document_order: order,
    })
}

fn escape_text(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(c),
        }
    }
}

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            _ => out.push(c),
        }
    }
    out
}

/// Writes a graph in the `.brd.xml` dialect read by [`parse_graph`].
///
/// Links are emitted in `document_order`; defaulted attributes are written
/// out explicitly so the file is self-describing.
pub fn serialize_graph(graph: &BehaviorGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<graph id=\"{}\" title=\"{}\" start=\"{}\">",
        escape_attr(&graph.id),
        escape_attr(&graph.title),
        escape_attr(&graph.start_node)
    );
    for skill in &graph.skills {
        let p = &skill.params;
        let _ = writeln!(
            out,
            "  <skill name=\"{}\" label=\"{}\" p-init=\"{}\" p-transit=\"{}\" p-slip=\"{}\" p-guess=\"{}\"/>",
            escape_attr(&skill.name),
            escape_attr(&skill.label),
            p.p_init,
            p.p_transit,
            p.p_slip,
            p.p_guess
        );
    }
    for node in &graph.nodes {
        let _ = writeln!(
            out,
            "  <node id=\"{}\" label=\"{}\"/>",
            escape_attr(&node.id),
            escape_attr(&node.label)
        );
    }
    let mut links: Vec<&GraphLink> = graph.links.iter().collect();
    links.sort_by_key(|l| l.document_order);
    for link in links {
        let _ = write!(
            out,
            "  <link id=\"{}\" source=\"{}\" target=\"{}\" evaluation=\"{}\"",
            escape_attr(&link.id),
            escape_attr(&link.source),
            escape_attr(&link.target),
            link.evaluation.as_str()
        );
        if let Some(msg) = &link.buggy_message {
            let _ = write!(out, " buggy=\"{}\"", escape_attr(msg));
        }
        out.push_str(">\n");
        let m = &link.matcher;
        let _ = writeln!(
            out,
            "    <matcher selection=\"{}\" action=\"{}\" input=\"{}\" match=\"{}\"/>",
            escape_attr(&m.selection),
            escape_attr(&m.action),
            escape_attr(m.input.pattern()),
            m.input.kind().as_str()
        );
        for hint in &link.hints {
            out.push_str("    <hint>");
            escape_text(&mut out, hint);
            out.push_str("</hint>\n");
        }
        for skill in &link.skills {
            let _ = writeln!(out, "    <skill name=\"{}\"/>", escape_attr(skill));
        }
        out.push_str("  </link>\n");
    }
    for group in &graph.unordered_groups {
        let members: Vec<&str> = group.iter().map(String::as_str).collect();
        let _ = writeln!(
            out,
            "  <group links=\"{}\"/>",
            escape_attr(&members.join(" "))
        );
    }
    out.push_str("</graph>\n");
    out
}
